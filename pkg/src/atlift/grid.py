"""Seeded random complexes and connections over the canned models."""

from __future__ import annotations

import random
from typing import Sequence

from atlift.bga import BGA, canned_model
from atlift.connection import Connection, CyclicForm
from atlift.homcomplex import FreeComplex, compose

GRID_MODELS = ("torus1", "torus2", "delbar-toy", "iwasawa")
RANK_PROFILES = ((2,), (1, 1), (2, 1), (1, 2, 1))
GRID_FORMS = (CyclicForm(-1, 0), CyclicForm(0, 1), CyclicForm(-1, 1))


def place_profile(profile: Sequence[int]) -> dict[int, int]:
    """Ranks listed from the lowest degree, with the top one in degree 0."""
    top = len(profile) - 1
    return {l - top: r for l, r in enumerate(profile)}


def rng_for(*parts) -> random.Random:
    return random.Random("|".join(str(p) for p in parts))


def random_complex(B: BGA, profile: Sequence[int], rng: random.Random, attempts: int = 200) -> FreeComplex:
    """Constant differential with entries in {-1,0,1}, resampled until delta^2 = 0.

    A nonzero delta is preferred whenever there are two or more degrees."""
    ranks = place_profile(profile)
    degs = sorted(ranks)
    best = None
    for _ in range(attempts):
        delta = {}
        for l in degs[:-1]:
            delta[l] = [[rng.choice((-1, 0, 1)) for _ in range(ranks[l])] for _ in range(ranks[l + 1])]
        cx = FreeComplex(B, ranks, delta, check=False)
        if compose(cx.delta, cx.delta):
            continue
        if cx.delta or len(degs) == 1:
            return cx
        best = best or cx
    return best if best is not None else FreeComplex(B, ranks)


def random_connection(cx: FreeComplex, rng: random.Random) -> Connection:
    """Gamma entries are {-1,0,1}-combinations of the (1,0) basis."""
    B = cx.base
    ones = B.basis_with(1, 0)
    gamma = {}
    for l, r in cx.ranks.items():
        gamma[l] = [[{B.names[k]: rng.choice((-1, 0, 1)) for k in ones} for _ in range(r)] for _ in range(r)]
    return Connection(cx, gamma)


def grid_draw(model: str, profile: Sequence[int], draw: int, seed: int = 0) -> tuple[FreeComplex, Connection]:
    rng = rng_for("grid", model, tuple(profile), draw, seed)
    B = canned_model(model)
    cx = random_complex(B, profile, rng)
    return cx, random_connection(cx, rng)


def grid_configs(draws: int = 5, seed: int = 0):
    for model in GRID_MODELS:
        for profile in RANK_PROFILES:
            for draw in range(draws):
                yield model, profile, draw, seed
