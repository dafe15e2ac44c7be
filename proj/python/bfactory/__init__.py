"""Exact Bernoulli-factory oracles and samplers.

Probabilities are returned as ``fractions.Fraction``. Inputs may be Fractions,
ints or strings such as ``"3/8"``. Coin and subset indices are 0-based.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Sequence

from . import _core
from ._core import CertificateViolation, DomainError, ResourceError, UsageError

__all__ = [
    "exact_eval",
    "fbar",
    "f_u",
    "vertices",
    "f_v",
    "simulate_tree",
    "sample_classic_sampford",
    "UsageError",
    "DomainError",
    "ResourceError",
    "CertificateViolation",
]


def _strs(values: Iterable) -> list[str]:
    return [str(Fraction(v)) if not isinstance(v, str) else v for v in values]


def _as_json(obj) -> str:
    return obj if isinstance(obj, str) else json.dumps(obj)


def exact_eval(tree, p: Sequence) -> Fraction:
    return Fraction(_core.exact_eval(_as_json(tree), _strs(p)))


def fbar(p: Sequence, subset: Sequence[int]) -> Fraction:
    return Fraction(_core.fbar(_strs(p), list(subset)))


def f_u(p: Sequence, subset: Sequence[int]) -> Fraction:
    return Fraction(_core.f_u(_strs(p), list(subset)))


def vertices(domain) -> list[tuple[Fraction, ...]]:
    return [tuple(Fraction(x) for x in v) for v in _core.vertices(_as_json(domain))]


def f_v(domain, p: Sequence) -> list[Fraction]:
    return [Fraction(x) for x in _core.f_v(_as_json(domain), _strs(p))]


def simulate_tree(tree, p: Sequence, trials: int = 100000, seed: int = 1) -> dict:
    return json.loads(_core.simulate_tree(_as_json(tree), _strs(p), trials, seed))


def sample_classic_sampford(p: Sequence, k: int, trials: int = 100000, seed: int = 1,
                            budget: int | None = None) -> dict:
    return json.loads(_core.sample_classic_sampford(_strs(p), k, trials, seed, budget))
