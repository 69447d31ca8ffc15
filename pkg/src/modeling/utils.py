"""Helpers shared by the sequence models and the classifier."""

import hashlib
from contextlib import contextmanager

import torch
from torch import nn


def parameter_hash(module: nn.Module) -> str:
    """SHA-256 over every tensor in the module's state dict."""
    digest = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        digest.update(name.encode("utf-8"))
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


@contextmanager
def seeded(seed: int):
    """Run a block under a fixed torch seed without disturbing the global RNG."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        yield


def make_generator(*seeds: int) -> torch.Generator:
    """CPU generator seeded from a tuple of integers."""
    seed = 0
    for s in seeds:
        seed = (seed * 1_000_003 + int(s)) % (2 ** 63 - 1)
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator
