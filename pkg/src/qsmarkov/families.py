"""Built-in example sequences and a random spec generator.

Most examples perturb the two-state matrix ``T_INF`` in the direction
``DIRECTION`` (zero row sums), ``T(n) = T_INF + c_n DIRECTION``.
"""

from __future__ import annotations

import numpy as np

from .matseq import Constant, EventuallyConstant, ExplicitList, Geometric, MatrixSequence, Perturbation, Power, SignedPower
from .errors import ConfigError
from .measure import MarkovMeasure

T_INF = ((0.7, 0.3), (0.4, 0.6))
DIRECTION = ((-0.1, 0.1), (0.1, -0.1))
UNIFORM = ((0.5, 0.5), (0.5, 0.5))
SKEWED = ((0.8, 0.2), (0.8, 0.2))
T3 = ((0.5, 0.3, 0.2), (0.2, 0.6, 0.2), (0.3, 0.3, 0.4))


def constant() -> MatrixSequence:
    return Constant(T_INF)


def eventually_constant() -> MatrixSequence:
    return EventuallyConstant([((0.6, 0.4), (0.5, 0.5)), ((0.65, 0.35), (0.45, 0.55))], T_INF)


def geometric(r=0.5) -> MatrixSequence:
    return Perturbation(T_INF, DIRECTION, Geometric(r))


def power(p=2.0) -> MatrixSequence:
    return Perturbation(T_INF, DIRECTION, Power(p))


def signed_power(p=0.5) -> MatrixSequence:
    return Perturbation(T_INF, DIRECTION, SignedPower(p))


def uniform() -> MatrixSequence:
    return Constant(UNIFORM)


def skewed() -> MatrixSequence:
    return Constant(SKEWED)


def constant3() -> MatrixSequence:
    return Constant(T3)


FAMILIES = {
    "constant": constant,
    "eventually_constant": eventually_constant,
    "geometric": geometric,
    "power": power,
    "signed_power": signed_power,
    "uniform": uniform,
    "skewed": skewed,
    "constant3": constant3,
}

# the suite on which quasi-stationarity verdicts are known in closed form
QS_SUITE = ("constant", "eventually_constant", "geometric", "power")
NOT_QS_SUITE = ("signed_power",)


def family(name: str, **params) -> MatrixSequence:
    if name not in FAMILIES:
        raise ConfigError(f"unknown family {name!r}; known: {', '.join(FAMILIES)}")
    try:
        return FAMILIES[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for family {name!r}: {params}") from exc


def measure(name: str, **params) -> MarkovMeasure:
    return MarkovMeasure.build(family(name, **params))


# ---------------------------------------------------------------------------
# random specs

KINDS = ("constant", "eventually_constant", "perturbation", "explicit")


def random_stochastic(rng: np.random.Generator, N: int, floor=0.05) -> np.ndarray:
    """Row-stochastic matrix with every entry at least ``floor``."""
    W = rng.dirichlet(np.ones(N), size=N)
    return floor + (1.0 - N * floor) * W


def random_direction(rng: np.random.Generator, T: np.ndarray, scale=0.5) -> np.ndarray:
    """Zero-row-sum direction keeping ``T + c D`` positive for ``|c| <= 1``."""
    N = T.shape[0]
    D = rng.normal(size=(N, N))
    D -= D.mean(axis=1, keepdims=True)
    room = scale * T.min() / np.abs(D).max()
    return D * room


def random_sequence(rng: np.random.Generator, N: int, kind: str) -> MatrixSequence:
    T = random_stochastic(rng, N)
    if kind == "constant":
        return Constant(T)
    if kind == "eventually_constant":
        return EventuallyConstant([random_stochastic(rng, N) for _ in range(int(rng.integers(1, 4)))], T)
    if kind == "perturbation":
        coef = [Geometric(float(rng.uniform(0.2, 0.8))), Power(float(rng.uniform(1.5, 3.0))),
                SignedPower(float(rng.uniform(1.5, 3.0)))][int(rng.integers(3))]
        return Perturbation(T, random_direction(rng, T), coef)
    if kind == "explicit":
        D = random_direction(rng, T)
        mats = [T + 0.5**n * D for n in range(1, 9)]
        # T + c D with |c| <= 1/2 stays above T - |D| / 2; shave a little for rounding
        floor = float((T - 0.5 * np.abs(D)).min()) * (1 - 1e-9)
        return ExplicitList(mats, T, envelope=(float(np.abs(D).max()), 0.5), entry_floor=floor)
    raise ValueError(f"unknown kind {kind!r}")
