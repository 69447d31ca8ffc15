"""Tests for the ECM encoder-decoder."""

import math

import pytest
import torch

from src.corpus import Vocabulary
from src.models import DialoguePair, Direction, EmotionCategory, ModelConfig, Utterance
from src.modeling import (
    build_optimizer,
    ecm_loss_terms,
    forward_loss,
    generate_greedy,
    generate_sample,
    init_model,
    mle_update,
    parameter_hash,
    sequence_logprob,
)
from src.modeling.batching import emotion_tensor, make_pair_batch, pad_sequences
from src.modeling.ecm import sample_tokens


def _expected_parameter_count(c: ModelConfig) -> int:
    V, E, De, H, N = c.vocab_size, c.embedding_dim, c.emotion_dim, c.hidden_size, c.num_emotions

    def gru(input_size, layers):
        first = 3 * H * input_size + 3 * H * H + 6 * H
        return first + (layers - 1) * (6 * H * H + 6 * H)

    return (
        V * E + N * De
        + gru(E, c.encoder_layers)
        + H * H + (H * H + H) + H              # attention
        + (E + 2 * H) * De + De                # read gate
        + H * De + De                          # write gate
        + gru(E + H + 2 * De, c.decoder_layers)
        + 2 * H * H + H                        # readout
        + H + 1                                # type selector
        + 2 * (H * V + V)                      # generic and emotion heads
    )


def test_init_model_is_deterministic(tiny_config, toy_lexicon, toy_vocab):
    a = init_model(tiny_config, seed=7, lexicon=toy_lexicon, vocab=toy_vocab)
    b = init_model(tiny_config, seed=7, lexicon=toy_lexicon, vocab=toy_vocab)
    c = init_model(tiny_config, seed=8, lexicon=toy_lexicon, vocab=toy_vocab)
    assert parameter_hash(a) == parameter_hash(b)
    assert parameter_hash(a) != parameter_hash(c)


@pytest.mark.parametrize("config", [
    ModelConfig(vocab_size=50, embedding_dim=6, emotion_dim=5, hidden_size=7, encoder_layers=2, decoder_layers=2),
    ModelConfig(vocab_size=20, embedding_dim=4, emotion_dim=3, hidden_size=8, encoder_layers=1, decoder_layers=1),
])
def test_parameter_count_closed_form(config):
    model = init_model(config, seed=0)
    assert sum(p.numel() for p in model.parameters()) == _expected_parameter_count(config)


def test_type_selector_starts_near_half(tiny_model, toy_corpus):
    batch = make_pair_batch(toy_corpus.pairs, Direction.FORWARD)
    trace = tiny_model.teacher_forced(batch.source, batch.target, batch.target_emotions)
    emotional = batch.target_emotions != int(EmotionCategory.NEUTRAL)
    assert torch.allclose(trace.alpha[emotional, 0], torch.full_like(trace.alpha[emotional, 0], 0.5), atol=0.05)


def test_loss_oracle_one_step():
    """-ln 0.9 - ln 0.8 + 0.05."""
    terms = ecm_loss_terms(
        gold_log_probs=torch.tensor([[math.log(0.9)]], dtype=torch.float64),
        alpha=torch.tensor([[0.8]], dtype=torch.float64),
        word_types=torch.tensor([[True]]),
        token_mask=torch.tensor([[True]]),
        type_mask=torch.tensor([[True]]),
        final_memory_norm=torch.tensor([0.05], dtype=torch.float64),
    )
    assert float(terms.total[0]) == pytest.approx(0.37850, abs=1e-5)


def test_loss_perfect_fit_is_zero():
    terms = ecm_loss_terms(
        gold_log_probs=torch.zeros(1, 3, dtype=torch.float64),
        alpha=torch.tensor([[1.0, 0.0, 1.0]], dtype=torch.float64),
        word_types=torch.tensor([[True, False, True]]),
        token_mask=torch.ones(1, 3, dtype=torch.bool),
        type_mask=torch.ones(1, 3, dtype=torch.bool),
        final_memory_norm=torch.zeros(1, dtype=torch.float64),
    )
    assert float(terms.total[0]) == pytest.approx(0.0, abs=1e-12)


def test_loss_sums_over_steps():
    """Doubling the length doubles nll and type loss but not the memory term."""
    def terms(steps):
        return ecm_loss_terms(
            gold_log_probs=torch.full((1, steps), math.log(0.5), dtype=torch.float64),
            alpha=torch.full((1, steps), 0.7, dtype=torch.float64),
            word_types=torch.ones(1, steps, dtype=torch.bool),
            token_mask=torch.ones(1, steps, dtype=torch.bool),
            type_mask=torch.ones(1, steps, dtype=torch.bool),
            final_memory_norm=torch.tensor([0.3], dtype=torch.float64),
        )
    short, long = terms(2), terms(4)
    assert float(long.nll) == pytest.approx(2 * float(short.nll))
    assert float(long.type_loss) == pytest.approx(2 * float(short.type_loss))
    assert float(long.memory_reg) == pytest.approx(float(short.memory_reg))


def test_distribution_validity_and_mixing(tiny_model, toy_corpus, toy_lexicon, toy_vocab):
    """Test o_t sums to 1 and the emotion head only covers the target lexicon."""
    model = tiny_model.double()
    batch = make_pair_batch(toy_corpus.pairs, Direction.FORWARD)
    trace = model.teacher_forced(batch.source, batch.target, batch.target_emotions)
    probs = trace.log_probs.exp()

    assert torch.allclose(probs.sum(-1), torch.ones_like(probs.sum(-1)), atol=1e-6)
    assert bool(((trace.alpha >= 0) & (trace.alpha <= 1)).all())
    assert float(probs[..., Vocabulary.PAD_ID].max()) < 1e-12
    assert float(probs[..., Vocabulary.BOS_ID].max()) < 1e-12

    for row, pair in enumerate(toy_corpus):
        lexicon_ids = [toy_vocab.id_of(w) for w in toy_lexicon.get(pair.r_emotion)]
        if pair.r_emotion is EmotionCategory.NEUTRAL:
            assert float(trace.alpha[row].abs().max()) == 0.0
            continue
        mass = probs[row][:, lexicon_ids].sum(-1)
        assert torch.allclose(mass, trace.alpha[row], atol=1e-9)


def test_internal_memory_norm_never_increases(tiny_model, toy_corpus):
    batch = make_pair_batch(toy_corpus.pairs, Direction.FORWARD)
    trace = tiny_model.teacher_forced(batch.source, batch.target, batch.target_emotions)
    diffs = trace.memory_norms[:, 1:] - trace.memory_norms[:, :-1]
    assert float(diffs.max()) <= 1e-7

    terms = tiny_model.loss(batch)
    last = batch.target.lengths
    expected = trace.memory_norms[torch.arange(len(last)), last]
    assert torch.allclose(terms.memory_reg, expected)


def test_forward_loss_rejects_out_of_vocab_ids(tiny_model, toy_corpus):
    pair = toy_corpus[0]
    bad = pair.model_copy(update={"response": pair.response.model_copy(update={"ids": (4, 5, 99)})})
    with pytest.raises(ValueError, match="out of range"):
        forward_loss(tiny_model, [bad])


def test_greedy_decoding_is_argmax_and_bounded(tiny_model, toy_corpus):
    """Test determinism, length bounds and the argmax property by re-scoring."""
    model = tiny_model.double()
    query = toy_corpus[0].query
    first = generate_greedy(model, query, EmotionCategory.HAPPY)
    second = generate_greedy(model, query, EmotionCategory.HAPPY)
    assert first == second

    ids, log_probs = first
    config = model.config
    assert config.min_decode_length <= len(ids) <= config.max_decode_length
    assert len(log_probs) == len(ids) + 1

    trace = model.teacher_forced(
        pad_sequences([list(query.ids)]), pad_sequences([ids]), emotion_tensor([EmotionCategory.HAPPY])
    )
    for t, token in enumerate(ids + [Vocabulary.EOS_ID]):
        if t == config.max_decode_length:
            break
        step = trace.log_probs[0, t].clone()
        if t < config.min_decode_length:
            step[Vocabulary.EOS_ID] = float("-inf")
        assert int(step.argmax()) == token


def test_sequence_logprob_matches_generation(tiny_model, toy_corpus):
    model = tiny_model.double()
    query = toy_corpus[1].query
    ids, log_probs = generate_greedy(model, query, EmotionCategory.ANGRY)
    assert sequence_logprob(model, query, EmotionCategory.ANGRY, ids) == pytest.approx(sum(log_probs), abs=1e-6)

    # per-step log-probs of sampled outputs at temperature 1 match teacher forcing
    model.eval()
    source = pad_sequences([list(query.ids)], model.device)
    for seed in range(5):
        ids, log_probs = generate_sample(model, query, EmotionCategory.ANGRY, temperature=1.0, seed=seed)
        trace = model.teacher_forced(source, pad_sequences([ids], model.device), emotion_tensor([EmotionCategory.ANGRY]))
        steps = trace.gold_log_probs()[0, : len(ids) + 1]
        assert len(log_probs) == len(ids) + 1
        assert steps.tolist() == pytest.approx(log_probs, abs=1e-6)
        assert sequence_logprob(model, query, EmotionCategory.ANGRY, ids) == pytest.approx(sum(log_probs), abs=1e-6)


def test_uniform_model_log_probability(tiny_model, toy_corpus):
    """A model with zeroed output heads is uniform over the V - 2 generable tokens."""
    model = tiny_model.double()
    with torch.no_grad():
        for head in (model.generic_head, model.emotion_head):
            head.weight.zero_()
            head.bias.zero_()
    target = list(toy_corpus[0].response.ids)
    V = model.config.vocab_size
    value = sequence_logprob(model, toy_corpus[0].query, EmotionCategory.NEUTRAL, target)
    assert value == pytest.approx((len(target) + 1) * math.log(1.0 / (V - 2)), abs=1e-9)


def test_sampling_reproducible_and_greedy_limit(tiny_model, toy_corpus):
    query = toy_corpus[2].query
    a = generate_sample(tiny_model, query, EmotionCategory.LIKE, temperature=1.0, seed=11)
    b = generate_sample(tiny_model, query, EmotionCategory.LIKE, temperature=1.0, seed=11)
    assert a == b

    cold = generate_sample(tiny_model, query, EmotionCategory.LIKE, temperature=1e-5, seed=3)
    assert cold[0] == generate_greedy(tiny_model, query, EmotionCategory.LIKE)[0]


def test_sample_tokens_frequencies():
    """Monte-Carlo check of a 0.7/0.3 distribution."""
    log_probs = torch.log(torch.tensor([[0.7, 0.3]])).expand(10_000, 2)
    generator = torch.Generator().manual_seed(0)
    draws = sample_tokens(log_probs, 1.0, generator)
    assert float((draws == 0).double().mean()) == pytest.approx(0.7, abs=0.02)


def test_mle_update_with_zero_lr_keeps_parameters(tiny_model, toy_corpus):
    before = parameter_hash(tiny_model)
    loss = mle_update(tiny_model, build_optimizer(tiny_model, 0.0), toy_corpus.pairs)
    assert loss.total == pytest.approx(loss.nll + loss.type_loss + loss.memory_reg, rel=1e-5)
    assert parameter_hash(tiny_model) == before


def test_mle_update_reduces_loss(tiny_model, toy_corpus):
    optimizer = build_optimizer(tiny_model, 0.01)
    first = mle_update(tiny_model, optimizer, toy_corpus.pairs)
    for _ in range(199):
        last = mle_update(tiny_model, optimizer, toy_corpus.pairs)
    assert last.total < first.total

    with pytest.raises(ValueError):
        mle_update(tiny_model, optimizer, [])


def test_gradients_match_finite_differences(toy_lexicon):
    """Central differences on 10 sampled parameters, vocab 20 and hidden 8, in float64."""
    vocab = Vocabulary([f"t{i}" for i in range(12)] + ["great", "nice", "hate", "love", "awful", "bad"][:4])
    assert len(vocab) == 20
    config = ModelConfig(vocab_size=20, embedding_dim=6, emotion_dim=4, hidden_size=8,
                         encoder_layers=1, decoder_layers=1, max_decode_length=6)
    model = init_model(config, seed=1, lexicon=toy_lexicon, vocab=vocab).double()

    def pair(q, r, e_r, index):
        return DialoguePair(
            query=Utterance(tokens=tuple(q), ids=tuple(vocab.encode(q))),
            response=Utterance(tokens=tuple(r), ids=tuple(vocab.encode(r))),
            q_emotion="Neutral", r_emotion=e_r, index=index,
        )

    pairs = [
        pair(["t1", "t2", "t3"], ["great", "t4", "nice"], "Happy", 0),
        pair(["t5", "t6", "t7", "t8"], ["t9", "hate", "t10"], "Angry", 1),
        pair(["t0", "t11", "t2"], ["t3", "t4", "t5"], "Neutral", 2),
    ]

    def loss():
        return forward_loss(model, pairs).total.mean()

    model.zero_grad()
    loss().backward()

    named = [(n, p) for n, p in model.named_parameters()]
    generator = torch.Generator().manual_seed(0)
    eps = 1e-6
    for _ in range(10):
        name, param = named[int(torch.randint(len(named), (1,), generator=generator))]
        flat = int(torch.randint(param.numel(), (1,), generator=generator))
        analytic = float(param.grad.view(-1)[flat]) if param.grad is not None else 0.0
        with torch.no_grad():
            original = float(param.view(-1)[flat])
            param.view(-1)[flat] = original + eps
            plus = float(loss())
            param.view(-1)[flat] = original - eps
            minus = float(loss())
            param.view(-1)[flat] = original
        numeric = (plus - minus) / (2 * eps)
        assert abs(analytic - numeric) <= 1e-3 * max(abs(analytic), abs(numeric)) + 1e-7, name
