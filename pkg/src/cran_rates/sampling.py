"""Seeded random model/policy generators used by tests and the verify command."""
from __future__ import annotations

import numpy as np

from .dm_schemes import DmCranModel, DmPolicy
from .gaussian_info import GaussianCranModel

DEFAULT_SEED = 0x5EED


def rng_from_seed(seed: int | None = None) -> np.random.Generator:
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def _dirichlet_rows(rng, shape_rows, ncols, concentration=1.0):
    flat = rng.dirichlet(np.full(ncols, concentration), size=int(np.prod(shape_rows)))
    return flat.reshape(tuple(shape_rows) + (ncols,))


def random_dm_model(
    rng: np.random.Generator,
    L: int = 2,
    K: int = 2,
    alphabet: int = 2,
    q_alphabet: int = 2,
    fronthaul_range=(1.0, 2.5),
    conditionally_independent: bool = False,
) -> DmCranModel:
    """Random finite-alphabet channel with uniform-alphabet sizes.

    With ``conditionally_independent`` the channel is a product of per-relay
    kernels p(y_k|x), which puts the model inside the conditionally-independent class.
    Fronthaul capacities default to at least one bit so compression
    constraints stay satisfiable for binary descriptions.
    """
    xs, ys, us = (alphabet,) * L, (alphabet,) * K, (alphabet,) * K
    x_cells = alphabet**L
    if conditionally_independent:
        channel = np.ones(xs, dtype=np.float64)
        channel = channel.reshape(xs + (1,) * K)
        for k in range(K):
            kern = _dirichlet_rows(rng, xs, alphabet)  # p(y_k | x_1..x_L)
            shape = xs + tuple(alphabet if j == k else 1 for j in range(K))
            channel = channel * kern.reshape(shape)
    else:
        rows = _dirichlet_rows(rng, (x_cells,), alphabet**K)
        channel = rows.reshape(xs + ys)
    lo, hi = fronthaul_range
    fronthaul = tuple(rng.uniform(lo, hi) for _ in range(K))
    return DmCranModel(
        x_alphabets=xs,
        y_alphabets=ys,
        u_alphabets=us,
        q_alphabet=q_alphabet,
        channel=channel,
        fronthaul=fronthaul,
    )


def random_dm_policy(rng: np.random.Generator, model: DmCranModel) -> DmPolicy:
    pq = rng.dirichlet(np.ones(model.q_alphabet))
    px = tuple(
        _dirichlet_rows(rng, (model.q_alphabet,), model.x_alphabets[l]) for l in range(model.L)
    )
    pu = tuple(
        _dirichlet_rows(rng, (model.q_alphabet, model.y_alphabets[k]), model.u_alphabets[k])
        for k in range(model.K)
    )
    return DmPolicy(pq=pq, px_given_q=px, pu_given_yq=pu)


def random_dm_instance(rng, **kwargs):
    model = random_dm_model(rng, **kwargs)
    return model, random_dm_policy(rng, model)


def random_gaussian_model(
    rng: np.random.Generator,
    K: int = 2,
    L: int = 2,
    M: int = 1,
    N: int = 1,
    power_range=(0.25, 8.0),
    noise_range=(0.5, 2.0),
    fronthaul_range=(0.5, 4.0),
) -> GaussianCranModel:
    """Equal-antenna MIMO instance with unit-variance complex fading blocks."""
    chan = tuple(
        tuple(
            (rng.normal(size=(M, N)) + 1j * rng.normal(size=(M, N))) / np.sqrt(2.0)
            for _ in range(L)
        )
        for _ in range(K)
    )
    noise = tuple(np.eye(M) * rng.uniform(*noise_range) for _ in range(K))
    caps = tuple(np.eye(N) * rng.uniform(*power_range) for _ in range(L))
    fronthaul = tuple(rng.uniform(*fronthaul_range) for _ in range(K))
    return GaussianCranModel(
        channel=chan, noise_cov=noise, input_cov_cap=caps, fronthaul=fronthaul
    )
