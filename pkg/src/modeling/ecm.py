"""ECM-style attentive GRU encoder-decoder with emotion embedding, internal and external memory."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from ..corpus.vocabulary import Vocabulary
from ..exceptions import CheckpointMismatchError, TrainingDivergedError
from ..models import (
    DialoguePair,
    Direction,
    EmotionCategory,
    EmotionLexicon,
    LossBreakdown,
    ModelConfig,
    Utterance,
)
from ..storage import CheckpointStore
from .batching import PairBatch, SequenceBatch, emotion_tensor, make_pair_batch, pad_sequences
from .utils import seeded

logger = logging.getLogger(__name__)

NEG_INF = -1e9


def emotion_word_mask(lexicon: Optional[EmotionLexicon], vocab: Optional[Vocabulary], num_emotions: int = 6) -> torch.Tensor:
    """(num_emotions, |V|) boolean mask of lexicon words present in the vocabulary."""
    size = len(vocab) if vocab is not None else 0
    mask = torch.zeros(num_emotions, size, dtype=torch.bool)
    if lexicon is None or vocab is None:
        return mask
    for category in EmotionCategory:
        for word in lexicon.get(category):
            if word in vocab:
                mask[int(category), vocab.id_of(word)] = True
    return mask


@dataclass
class DecoderStepOutput:
    """One decoding step."""
    log_probs: torch.Tensor   # (B, V) log o_t
    alpha: torch.Tensor       # (B,) probability of an emotion word
    hidden: torch.Tensor      # (layers, B, H)
    memory: torch.Tensor      # (B, De) internal emotion state after the write gate


@dataclass
class DecoderTrace:
    """Teacher-forced pass over a target batch (targets include the final EOS)."""
    log_probs: torch.Tensor    # (B, T, V)
    alpha: torch.Tensor        # (B, T)
    memory_norms: torch.Tensor  # (B, T)
    targets: torch.Tensor      # (B, T)
    mask: torch.Tensor         # (B, T) bool
    lengths: torch.Tensor      # (B,)

    def gold_log_probs(self) -> torch.Tensor:
        return self.log_probs.gather(2, self.targets.unsqueeze(-1)).squeeze(-1)

    def final_memory_norm(self) -> torch.Tensor:
        last = (self.lengths - 1).clamp_min(0).to(self.memory_norms.device)
        return self.memory_norms.gather(1, last.unsqueeze(1)).squeeze(1)


@dataclass
class LossTerms:
    """Per-sample ECM loss terms (each shaped (B,))."""
    nll: torch.Tensor
    type_loss: torch.Tensor
    memory_reg: torch.Tensor

    @property
    def total(self) -> torch.Tensor:
        return self.nll + self.type_loss + self.memory_reg

    def breakdown(self) -> LossBreakdown:
        """Batch means as plain floats."""
        return LossBreakdown(
            nll=float(self.nll.mean()),
            type_loss=float(self.type_loss.mean()),
            memory_reg=float(self.memory_reg.mean()),
            total=float(self.total.mean()),
        )


@dataclass
class GenerationOutput:
    """Decoded sequences; log-probs cover every emitted token including EOS."""
    sequences: List[List[int]]
    log_probs: List[List[float]]

    def utterances(self, vocab: Vocabulary) -> List[Utterance]:
        return [Utterance(tokens=tuple(vocab.decode(seq)), ids=tuple(seq)) for seq in self.sequences]

    def totals(self) -> List[float]:
        return [sum(lp) for lp in self.log_probs]


def ecm_loss_terms(
    gold_log_probs: torch.Tensor,
    alpha: torch.Tensor,
    word_types: torch.Tensor,
    token_mask: torch.Tensor,
    type_mask: torch.Tensor,
    final_memory_norm: torch.Tensor,
) -> LossTerms:
    """
    ECM loss on a batch of decoded steps.

    nll = -sum_t log o_t(gold_t); type_loss = sum_t BCE(alpha_t, q_t) over steps with
    an emotion target; memory_reg = ||M_I|| at the last step.
    """
    token_mask = token_mask.to(gold_log_probs.dtype)
    nll = -(gold_log_probs * token_mask).sum(dim=1)
    bce = F.binary_cross_entropy(alpha, word_types.to(alpha.dtype), reduction="none")
    type_loss = (bce * type_mask.to(alpha.dtype)).sum(dim=1)
    return LossTerms(nll=nll, type_loss=type_loss, memory_reg=final_memory_norm)


def sample_tokens(log_probs: torch.Tensor, temperature: float, generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """Draw one token per row from softmax(log_probs / temperature)."""
    probs = torch.softmax(log_probs / temperature, dim=-1)
    return torch.multinomial(probs, 1, generator=generator).squeeze(1)


class ECMModel(nn.Module):
    """
    Emotional encoder-decoder.

    The decoder input at every step concatenates the previous word embedding, the
    attention context, the target emotion embedding and the internal memory read.
    The write gate only shrinks the memory, so its norm never increases. The output
    distribution mixes an emotion-word head and a generic-word head by alpha_t.
    """

    def __init__(self, config: ModelConfig, emotion_mask: Optional[torch.Tensor] = None):
        super().__init__()
        self.config = config
        V, E, De, H = config.vocab_size, config.embedding_dim, config.emotion_dim, config.hidden_size

        self.word_embedding = nn.Embedding(V, E, padding_idx=Vocabulary.PAD_ID)
        self.emotion_embedding = nn.Embedding(config.num_emotions, De)
        self.encoder = nn.GRU(E, H, num_layers=config.encoder_layers, batch_first=True)

        self.attn_query = nn.Linear(H, H, bias=False)
        self.attn_key = nn.Linear(H, H)
        self.attn_score = nn.Linear(H, 1, bias=False)

        self.read_gate = nn.Linear(E + 2 * H, De)
        self.write_gate = nn.Linear(H, De)
        self.decoder = nn.GRU(E + H + 2 * De, H, num_layers=config.decoder_layers, batch_first=True)

        self.readout = nn.Linear(2 * H, H)
        self.type_selector = nn.Linear(H, 1)
        self.generic_head = nn.Linear(H, V)
        self.emotion_head = nn.Linear(H, V)

        if emotion_mask is None:
            emotion_mask = torch.zeros(config.num_emotions, V, dtype=torch.bool)
        if tuple(emotion_mask.shape) != (config.num_emotions, V):
            raise ValueError(f"emotion mask shape {tuple(emotion_mask.shape)} does not match ({config.num_emotions}, {V})")
        self.register_buffer("emotion_mask", emotion_mask.clone())

        nn.init.normal_(self.type_selector.weight, std=0.01)
        nn.init.zeros_(self.type_selector.bias)

    @property
    def device(self) -> torch.device:
        return self.word_embedding.weight.device

    # -- encoder ---------------------------------------------------------

    def encode(self, source: SequenceBatch) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Return encoder states (B,S,H), padding mask (B,S) and initial decoder hidden."""
        ids = source.ids.to(self.device)
        lengths = source.lengths.clamp_min(1).cpu()
        embedded = self.word_embedding(ids)
        packed = pack_padded_sequence(embedded, lengths, batch_first=True, enforce_sorted=False)
        outputs, final = self.encoder(packed)
        outputs, _ = pad_packed_sequence(outputs, batch_first=True, total_length=ids.size(1))
        mask = torch.arange(ids.size(1), device=self.device).unsqueeze(0) < lengths.to(self.device).unsqueeze(1)
        return outputs, mask, self._bridge(final)

    def _bridge(self, final: torch.Tensor) -> torch.Tensor:
        layers = self.config.decoder_layers
        if final.size(0) == layers:
            return final
        if final.size(0) > layers:
            return final[-layers:].contiguous()
        return final[-1:].expand(layers, -1, -1).contiguous()

    def _attend(self, state: torch.Tensor, keys: torch.Tensor, values: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        scores = self.attn_score(torch.tanh(keys + self.attn_query(state).unsqueeze(1))).squeeze(-1)
        scores = scores.masked_fill(~mask, NEG_INF)
        weights = torch.softmax(scores, dim=-1)
        return torch.bmm(weights.unsqueeze(1), values).squeeze(1)

    # -- decoder ---------------------------------------------------------

    def _output_distribution(self, features: torch.Tensor, emotions: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        emotion_rows = self.emotion_mask[emotions]                      # (B, V)
        has_emotion = emotion_rows.any(dim=-1)                          # (B,)

        generic_allowed = ~emotion_rows
        generic_allowed[:, Vocabulary.PAD_ID] = False
        generic_allowed[:, Vocabulary.BOS_ID] = False

        log_generic = torch.log_softmax(self.generic_head(features).masked_fill(~generic_allowed, NEG_INF), dim=-1)
        log_emotion = torch.log_softmax(self.emotion_head(features).masked_fill(~emotion_rows, NEG_INF), dim=-1)

        alpha_logit = self.type_selector(features).squeeze(-1)
        mixed = torch.logaddexp(
            F.logsigmoid(alpha_logit).unsqueeze(-1) + log_emotion,
            F.logsigmoid(-alpha_logit).unsqueeze(-1) + log_generic,
        )
        log_probs = torch.where(has_emotion.unsqueeze(-1), mixed, log_generic)
        alpha = torch.where(has_emotion, torch.sigmoid(alpha_logit), torch.zeros_like(alpha_logit))
        return log_probs, alpha

    def decode_step(
        self,
        previous: torch.Tensor,
        hidden: torch.Tensor,
        memory: torch.Tensor,
        emotions: torch.Tensor,
        keys: torch.Tensor,
        values: torch.Tensor,
        mask: torch.Tensor,
    ) -> DecoderStepOutput:
        embedded = self.word_embedding(previous)
        state = hidden[-1]
        context = self._attend(state, keys, values, mask)

        read = torch.sigmoid(self.read_gate(torch.cat([embedded, state, context], dim=-1))) * memory
        step_input = torch.cat([embedded, context, self.emotion_embedding(emotions), read], dim=-1)
        output, hidden = self.decoder(step_input.unsqueeze(1), hidden)
        output = output.squeeze(1)

        memory = torch.sigmoid(self.write_gate(output)) * memory
        features = torch.tanh(self.readout(torch.cat([output, context], dim=-1)))
        log_probs, alpha = self._output_distribution(features, emotions)
        return DecoderStepOutput(log_probs=log_probs, alpha=alpha, hidden=hidden, memory=memory)

    def teacher_forced(self, source: SequenceBatch, target: SequenceBatch, emotions: torch.Tensor) -> DecoderTrace:
        """Score gold targets; the decoder sees BOS + target and predicts target + EOS."""
        values, mask, hidden = self.encode(source)
        keys = self.attn_key(values)
        emotions = emotions.to(self.device)

        batch = target.size
        steps = target.ids.size(1) + 1
        target_ids = target.ids.to(self.device)
        lengths = target.lengths.to(self.device)

        inputs = torch.cat([torch.full((batch, 1), Vocabulary.BOS_ID, device=self.device, dtype=torch.long), target_ids], dim=1)
        gold = torch.cat([target_ids, torch.full((batch, 1), Vocabulary.PAD_ID, device=self.device, dtype=torch.long)], dim=1)
        gold[torch.arange(batch, device=self.device), lengths] = Vocabulary.EOS_ID

        memory = self.emotion_embedding(emotions)
        all_log_probs, all_alpha, norms = [], [], []
        for t in range(steps):
            out = self.decode_step(inputs[:, t], hidden, memory, emotions, keys, values, mask)
            hidden, memory = out.hidden, out.memory
            all_log_probs.append(out.log_probs)
            all_alpha.append(out.alpha)
            norms.append(memory.norm(dim=-1))

        step_mask = torch.arange(steps, device=self.device).unsqueeze(0) <= lengths.unsqueeze(1)
        return DecoderTrace(
            log_probs=torch.stack(all_log_probs, dim=1),
            alpha=torch.stack(all_alpha, dim=1),
            memory_norms=torch.stack(norms, dim=1),
            targets=gold,
            mask=step_mask,
            lengths=lengths + 1,
        )

    def loss(self, batch: PairBatch) -> LossTerms:
        """Per-sample ECM loss for a pair batch."""
        if int(batch.target.ids.max()) >= self.config.vocab_size or int(batch.source.ids.max()) >= self.config.vocab_size:
            raise ValueError(f"token id out of range for vocabulary of size {self.config.vocab_size}")
        trace = self.teacher_forced(batch.source, batch.target, batch.target_emotions)
        emotions = batch.target_emotions.to(self.device)
        emotion_rows = self.emotion_mask[emotions]
        word_types = emotion_rows.gather(1, trace.targets)
        type_mask = trace.mask & emotion_rows.any(dim=-1, keepdim=True)
        return ecm_loss_terms(
            trace.gold_log_probs(), trace.alpha, word_types, trace.mask, type_mask, trace.final_memory_norm()
        )

    def sequence_logprob(self, source: SequenceBatch, target: SequenceBatch, emotions: torch.Tensor) -> torch.Tensor:
        """(B,) sum of log o_t over the target tokens and the final EOS."""
        trace = self.teacher_forced(source, target, emotions)
        return (trace.gold_log_probs() * trace.mask.to(trace.log_probs.dtype)).sum(dim=1)

    @torch.no_grad()
    def generate(
        self,
        source: SequenceBatch,
        emotions: torch.Tensor,
        greedy: bool = True,
        temperature: float = 1.0,
        generator: Optional[torch.Generator] = None,
    ) -> GenerationOutput:
        """
        Decode one sequence per source.

        EOS is masked before min_decode_length content tokens and forced after
        max_decode_length. Recorded log-probs are under the unmasked o_t.
        """
        values, mask, hidden = self.encode(source)
        keys = self.attn_key(values)
        emotions = emotions.to(self.device)
        batch = source.size

        memory = self.emotion_embedding(emotions)
        previous = torch.full((batch,), Vocabulary.BOS_ID, dtype=torch.long, device=self.device)
        finished = torch.zeros(batch, dtype=torch.bool, device=self.device)
        sequences: List[List[int]] = [[] for _ in range(batch)]
        log_probs: List[List[float]] = [[] for _ in range(batch)]

        for t in range(self.config.max_decode_length + 1):
            out = self.decode_step(previous, hidden, memory, emotions, keys, values, mask)
            hidden, memory = out.hidden, out.memory

            choice = out.log_probs.clone()
            if t < self.config.min_decode_length:
                choice[:, Vocabulary.EOS_ID] = NEG_INF
            if t == self.config.max_decode_length:
                tokens = torch.full((batch,), Vocabulary.EOS_ID, dtype=torch.long, device=self.device)
            elif greedy:
                tokens = choice.argmax(dim=-1)
            else:
                tokens = sample_tokens(choice.cpu(), temperature, generator).to(self.device)

            token_log_probs = out.log_probs.gather(1, tokens.unsqueeze(1)).squeeze(1)
            for row in range(batch):
                if finished[row]:
                    continue
                log_probs[row].append(float(token_log_probs[row]))
                if int(tokens[row]) == Vocabulary.EOS_ID:
                    finished[row] = True
                else:
                    sequences[row].append(int(tokens[row]))
            if bool(finished.all()):
                break
            previous = tokens

        return GenerationOutput(sequences=sequences, log_probs=log_probs)


# ---------------------------------------------------------------------------
# Functional surface
# ---------------------------------------------------------------------------

def init_model(
    config: ModelConfig,
    seed: int,
    lexicon: Optional[EmotionLexicon] = None,
    vocab: Optional[Vocabulary] = None,
) -> ECMModel:
    """Build a model deterministically; the lexicon is bound as the external memory."""
    mask = emotion_word_mask(lexicon, vocab, config.num_emotions) if vocab is not None else None
    with seeded(seed):
        model = ECMModel(config, emotion_mask=mask)
    return model


def forward_loss(model: ECMModel, pairs: Sequence[DialoguePair], direction: Direction = Direction.FORWARD) -> LossTerms:
    """ECM loss of the direction's targets given its sources and target emotions."""
    return model.loss(make_pair_batch(pairs, direction, model.device))


def _single(utterance: Utterance, model: ECMModel) -> SequenceBatch:
    return pad_sequences([list(utterance.ids or ())], model.device)


def generate_greedy(model: ECMModel, query: Utterance, emotion: EmotionCategory) -> Tuple[List[int], List[float]]:
    out = model.generate(_single(query, model), emotion_tensor([emotion]), greedy=True)
    return out.sequences[0], out.log_probs[0]


def generate_sample(
    model: ECMModel,
    query: Utterance,
    emotion: EmotionCategory,
    temperature: float,
    seed: int,
) -> Tuple[List[int], List[float]]:
    generator = torch.Generator()
    generator.manual_seed(seed)
    out = model.generate(_single(query, model), emotion_tensor([emotion]), greedy=False, temperature=temperature, generator=generator)
    return out.sequences[0], out.log_probs[0]


@torch.no_grad()
def sequence_logprob(model: ECMModel, query: Utterance, emotion: EmotionCategory, target: Sequence[int]) -> float:
    """log p(target + EOS | query, emotion)."""
    return float(model.sequence_logprob(
        _single(query, model), pad_sequences([list(target)], model.device), emotion_tensor([emotion])
    )[0])


def decode_pairs(
    model: ECMModel,
    pairs: Sequence[DialoguePair],
    direction: Direction = Direction.FORWARD,
    batch_size: int = 64,
) -> List[List[int]]:
    """Greedy outputs for each pair's source under its gold target emotion."""
    was_training = model.training
    model.eval()
    outputs: List[List[int]] = []
    for start in range(0, len(pairs), batch_size):
        batch = make_pair_batch(pairs[start:start + batch_size], direction, model.device)
        outputs.extend(model.generate(batch.source, batch.target_emotions, greedy=True).sequences)
    model.train(was_training)
    return outputs


def build_optimizer(model: nn.Module, lr: float) -> torch.optim.Optimizer:
    return torch.optim.Adam(model.parameters(), lr=lr)


def check_finite(loss: torch.Tensor, **diagnostics) -> None:
    if not torch.isfinite(loss).all():
        raise TrainingDivergedError("Non-finite loss", {k: (float(v) if torch.is_tensor(v) else v) for k, v in diagnostics.items()})


def mle_update(
    model: ECMModel,
    optimizer: torch.optim.Optimizer,
    pairs: Sequence[DialoguePair],
    direction: Direction = Direction.FORWARD,
    grad_clip: Optional[float] = 5.0,
) -> LossBreakdown:
    """One optimizer step on the batch-mean ECM loss; returns the pre-step loss."""
    if not pairs:
        raise ValueError("mle_update needs a non-empty batch")
    model.train()
    terms = forward_loss(model, pairs, direction)
    loss = terms.total.mean()
    check_finite(loss, nll=terms.nll.mean(), type_loss=terms.type_loss.mean(), memory_reg=terms.memory_reg.mean())

    optimizer.zero_grad()
    loss.backward()
    if grad_clip:
        nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    optimizer.step()
    return terms.breakdown()


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_model(
    model: ECMModel,
    store: CheckpointStore,
    name: str,
    vocab_hash: str,
    direction: Direction,
    step: int = 0,
) -> str:
    """Write parameters with a sidecar carrying config, vocab hash, direction and step."""
    metadata = {
        "kind": "seq2seq",
        "config": model.config.model_dump(mode="json"),
        "vocab_hash": vocab_hash,
        "direction": Direction(direction).value,
        "step": step,
    }
    return store.save(name, model.state_dict(), metadata)


def load_model(
    store: CheckpointStore,
    name: str,
    vocab_hash: Optional[str] = None,
    config: Optional[ModelConfig] = None,
) -> Tuple[ECMModel, dict]:
    """
    Restore a model written by save_model.

    Raises:
        CheckpointMismatchError: vocab hash or config differs from the expected ones
    """
    state, metadata = store.load(name)
    if metadata.get("kind") != "seq2seq":
        raise CheckpointMismatchError(f"Checkpoint {name} is a {metadata.get('kind')!r} checkpoint, not seq2seq")
    if vocab_hash is not None and metadata.get("vocab_hash") != vocab_hash:
        raise CheckpointMismatchError(
            f"Checkpoint {name} was written for vocabulary {metadata.get('vocab_hash')}, expected {vocab_hash}"
        )
    stored_config = ModelConfig.model_validate(metadata["config"])
    if config is not None and stored_config != config:
        raise CheckpointMismatchError(f"Checkpoint {name} config {stored_config} does not match {config}")

    model = ECMModel(stored_config, emotion_mask=state["emotion_mask"])
    model.load_state_dict(state)
    model.eval()
    return model, metadata
