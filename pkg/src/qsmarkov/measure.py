"""Markov measures on one-sided infinite words.

The measure of the cylinder of ``I = i1 ... in`` is
``lam[i1] T(1)[i1, i2] ... T(n-1)[i(n-1), in]``; all masses are accumulated
as log sums and exponentiated only when returned.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import MissingTailCertificate, NotQuasiStationary, ValidationError
from .matseq import Constant, MatrixSequence, forward_product, limit_matrix, perron_left
from .symbolic import DEFAULT_ENUMERATION_CAP, Word, check_cap, enumerate_words

LAMBDA_TOL = 1e-10
CONSISTENCY_TOL = 1e-12
SAMPLE_BLOCK = 4096


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Initial distribution ``lam`` (with ``lam T(1) = lam``) and a matrix sequence."""

    lam: np.ndarray
    seq: MatrixSequence

    @classmethod
    def build(cls, seq: MatrixSequence, lam=None, tol=LAMBDA_TOL) -> "MarkovMeasure":
        """Derive ``lam`` as the Perron vector of ``T(1)``, or check a supplied one."""
        T1 = seq.matrix(1)
        if lam is None:
            return cls(perron_left(T1), seq)
        lam = np.array(lam, dtype=float)
        if lam.shape != (seq.n_symbols,):
            raise ValidationError(f"lambda must have {seq.n_symbols} entries")
        if np.any(lam <= 0) or abs(lam.sum() - 1.0) > tol:
            raise ValidationError(f"lambda must be a positive probability vector, got {lam}")
        res = float(np.max(np.abs(lam @ T1 - lam)))
        if res > tol:
            raise ValidationError(f"lambda T(1) != lambda (residual {res:.3g} > {tol:g})")
        lam = lam / lam.sum()
        lam.setflags(write=False)
        return cls(lam, seq)

    @property
    def n_symbols(self) -> int:
        return self.seq.n_symbols

    def to_record(self) -> dict:
        return {"lambda": [float(x) for x in self.lam], "sequence": self.seq.to_record()}


def _check_word(m: MarkovMeasure, I: Word):
    if I.n_symbols != m.n_symbols:
        raise ValidationError(f"word over {I.n_symbols} letters used with an {m.n_symbols}-letter measure")


def log_cylinder_mass(m: MarkovMeasure, I: Word) -> float:
    _check_word(m, I)
    n = len(I)
    if n == 0:
        return 0.0
    s = math.log(m.lam[I[0]])
    if n > 1:
        mats = m.seq.matrices(1, n)
        for k in range(n - 1):
            s += math.log(mats[k, I[k], I[k + 1]])
    return s


def cylinder_mass(m: MarkovMeasure, I: Word) -> float:
    return math.exp(log_cylinder_mass(m, I))


def log_mass_table(m: MarkovMeasure, k: int, cap=DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Log masses of all ``N**k`` cylinders of length ``k``, lexicographic order."""
    N = m.n_symbols
    check_cap(N**k, cap)
    if k == 0:
        return np.zeros(1)
    table = np.log(m.lam)
    if k > 1:
        logs = np.log(m.seq.matrices(1, k))
        for j in range(k - 1):
            # word index I*N + s extends I by the symbol s
            last = np.arange(table.size) % N
            table = (table[:, None] + logs[j][last, :]).reshape(-1)
    return table


def mass_table(m: MarkovMeasure, k: int, cap=DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    return np.exp(log_mass_table(m, k, cap))


@dataclass
class ConsistencyReport:
    depth: int
    max_abs_deviation: float
    max_rel_deviation: float
    n_checked: int
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_rel_deviation <= self.tol


def consistency_check(m: MarkovMeasure, depth: int, tol=CONSISTENCY_TOL, cap=DEFAULT_ENUMERATION_CAP):
    """Check ``sum_j mass(Ij) = mass(I)`` for every word with ``|I| < depth``."""
    if depth < 1:
        raise ValidationError("consistency depth must be at least 1")
    check_cap(m.n_symbols**depth, cap)
    N = m.n_symbols
    max_abs = max_rel = 0.0
    n_checked = 0
    parent = mass_table(m, 0)
    for k in range(depth):
        child = mass_table(m, k + 1)
        sums = child.reshape(-1, N).sum(axis=1)
        dev = np.abs(sums - parent)
        max_abs = max(max_abs, float(dev.max()))
        max_rel = max(max_rel, float((dev / parent).max()))
        n_checked += parent.size
        parent = child
    return ConsistencyReport(depth, max_abs, max_rel, n_checked, tol)


# ---------------------------------------------------------------------------
# quasi-stationarity


class QSStatus(enum.Enum):
    QUASI_STATIONARY = "QuasiStationary"
    NOT_QUASI_STATIONARY = "NotQuasiStationary"
    UNDECIDED = "Undecided"


@dataclass
class QSVerdict:
    status: QSStatus
    criterion: str
    certificate: dict
    ratio_sums: np.ndarray
    diff_sums: np.ndarray
    probe_depth: int
    empirical: str
    evidence: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "status": self.status.value,
            "criterion": self.criterion,
            "certificate": self.certificate,
            "probe_depth": self.probe_depth,
            "empirical": self.empirical,
            "ratio_sum_max": float(self.ratio_sums.max()),
            "diff_sum_max": float(self.diff_sums.max()),
            **self.evidence,
        }


def _partial_sums(mats):
    # per (i, j): running sums of |T(n)/T(n+1) - 1| and |T(n) - T(n+1)|
    a, b = mats[:-1], mats[1:]
    return np.cumsum(np.abs(a / b - 1.0), axis=0), np.cumsum(np.abs(a - b), axis=0)


def empirical_convergence(partial: np.ndarray, probe_depth: int, atol=1e-12, ratio=0.9) -> str:
    """Classify a running sum by its doubling increments.

    Uses ``S(M) - S(M/2)`` and ``S(M/2) - S(M/4)``: a convergent series with a
    power-law or faster tail has increment ratio ``< 1``, while divergent ones
    like ``sqrt`` or ``log`` growth have ratio ``>= 1``.  Advisory only.
    """
    M = probe_depth
    q = max(M // 4, 1)
    s = lambda k: partial[min(k, len(partial)) - 1]
    inc_hi = s(M) - s(M // 2)
    inc_lo = s(M // 2) - s(q)
    if inc_hi <= atol:
        return "convergent"
    if inc_lo <= 0:
        return "divergent"
    return "convergent" if inc_hi / inc_lo < ratio else "divergent"


def is_quasi_stationary(m: MarkovMeasure | MatrixSequence, probe_depth=1000) -> QSVerdict:
    """Decide summability of consecutive differences from certificates.

    The decision uses the sequence's tail certificate and entry floor (the
    difference criterion).  Partial sums of both the ratio and the difference
    series up to ``probe_depth`` are attached as evidence together with an
    advisory reading of their growth.  Without a certificate the status is
    ``UNDECIDED`` unless a closed-form family rule shows divergence.
    """
    seq = m.seq if isinstance(m, MarkovMeasure) else m
    depth = probe_depth
    if seq.horizon is not None:
        depth = min(depth, seq.horizon - 1)
    if probe_depth < 1:
        raise ValidationError("probe depth must be positive")
    N = seq.n_symbols
    if depth >= 1:
        ratio_cum, diff_cum = _partial_sums(seq.matrices(1, depth + 2))
    else:  # a single listed matrix: no consecutive pairs
        ratio_cum = diff_cum = np.zeros((1, N, N))
    ratio_max = ratio_cum.max(axis=(1, 2))
    diff_max = diff_cum.max(axis=(1, 2))
    if depth >= 4:
        emp_ratio = empirical_convergence(ratio_max, depth)
        emp_diff = empirical_convergence(diff_max, depth)
    else:
        emp_ratio = emp_diff = "insufficient data"
    empirical = emp_ratio if emp_ratio == emp_diff else "mixed"

    B1 = seq.tail_bound(1)
    floor = seq.entry_floor
    cert = {"tail_bound_1": B1, "entry_floor": floor, "kind": seq.kind}
    if seq.known_divergent or (B1 is not None and math.isinf(B1)):
        status, crit = QSStatus.NOT_QUASI_STATIONARY, "family rule: consecutive differences not summable"
    elif B1 is not None and floor is not None and floor > 0:
        status, crit = QSStatus.QUASI_STATIONARY, "summable differences with positive entry floor"
    else:
        status, crit = QSStatus.UNDECIDED, "no tail certificate"
    evidence = {"ratio_partial_sum": float(ratio_max[-1]), "diff_partial_sum": float(diff_max[-1]),
                "empirical_ratio": emp_ratio, "empirical_diff": emp_diff}
    return QSVerdict(status, crit, cert, ratio_cum[-1], diff_cum[-1], depth, empirical, evidence)


def stationary_limit_measure(m: MarkovMeasure) -> MarkovMeasure:
    """The stationary measure of the limit matrix and its Perron vector."""
    T_inf = limit_matrix(m.seq)
    return MarkovMeasure(perron_left(T_inf), Constant(T_inf))


def require_certificate(m: MarkovMeasure, which=None):
    seq = m.seq
    if seq.known_divergent:
        raise NotQuasiStationary(which, "consecutive differences are not summable")
    if not seq.has_certificate:
        raise MissingTailCertificate(f"{which or 'measure'}: no tail certificate")


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SamplePath:
    prefix: Word
    seed: int
    index: int
    log_mass: float


def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_path_array(m: MarkovMeasure, L: int, count: int, seed: int, block=SAMPLE_BLOCK, backend=None,
                      first_block=0):
    """Draw ``count`` i.i.d. prefixes of length ``L``.

    Paths are generated in fixed blocks, each from its own child seed, so the
    output does not depend on how the blocks are scheduled.  ``first_block``
    continues a stream: drawing ``count = k * block`` paths from block ``b``
    and then from block ``b + k`` reproduces one draw of the combined size.

    Returns
    -------
    paths : ndarray, shape (count, L), int32
    log_mass : ndarray, shape (count,)
    """
    if L < 1 or count < 1:
        raise ValidationError("need L >= 1 and count >= 1")
    lam_cdf = np.cumsum(m.lam)
    mats = m.seq.matrices(1, L) if L > 1 else np.zeros((0, m.n_symbols, m.n_symbols))
    cdfs = np.cumsum(mats, axis=2)
    logs = np.log(mats)
    log_lam = np.log(m.lam)
    paths = np.empty((count, L), dtype=np.int32)
    log_mass = np.empty(count)
    for b, start in enumerate(range(0, count, block)):
        stop = min(start + block, count)
        rng = _block_generator(seed, first_block + b)
        u = rng.random((block, L))[: stop - start]
        x = kernels.sample_symbols(u, lam_cdf, cdfs, backend=backend)
        paths[start:stop] = x
        log_mass[start:stop] = log_lam[x[:, 0]] + kernels.path_log_sum(x, logs, 0, backend=backend)
    return paths, log_mass


def sample_paths(m: MarkovMeasure, L: int, count: int, seed: int) -> list[SamplePath]:
    paths, log_mass = sample_path_array(m, L, count, seed)
    N = m.n_symbols
    return [
        SamplePath(Word(tuple(int(s) for s in row), N), seed, i, float(lm))
        for i, (row, lm) in enumerate(zip(paths, log_mass))
    ]


# ---------------------------------------------------------------------------
# mixing


def mixing_correlation_bruteforce(m: MarkovMeasure, I: Word, J: Word, k: int, cap=DEFAULT_ENUMERATION_CAP) -> float:
    """``mu(shift^-k C(I) & C(J))`` by summing cylinder masses over all words."""
    _check_word(m, I)
    _check_word(m, J)
    length = max(len(J), k + len(I))
    check_cap(m.n_symbols**length, cap)
    total = 0.0
    for w in enumerate_words(m.n_symbols, length, cap):
        s = w.symbols
        if s[: len(J)] == J.symbols and s[k : k + len(I)] == I.symbols:
            total += cylinder_mass(m, w)
    return total


def mixing_correlation(m: MarkovMeasure, I: Word, J: Word, k: int, cap=DEFAULT_ENUMERATION_CAP) -> float:
    """``mu(shift^-k C(I) & C(J))``.

    For ``k >= |J|`` this is ``mu(C(J)) (T(r) ... T(k))[j_r, i_1]`` times the
    transitions of ``I`` at times ``k+1, ..., k+l-1``.  Smaller ``k`` is
    handled by exhaustive enumeration.
    """
    _check_word(m, I)
    _check_word(m, J)
    r, l = len(J), len(I)
    if k < 0:
        raise ValidationError("k must be non-negative")
    if k < r:
        return mixing_correlation_bruteforce(m, I, J, k, cap)
    if l == 0:
        return cylinder_mass(m, J)
    if r == 0:
        # distribution of the (k+1)-th symbol: lam T(1) ... T(k)
        dist = m.lam @ forward_product(m.seq, 0, k) if k > 0 else np.asarray(m.lam)
        head = math.log(dist[I[0]])
    else:
        P = forward_product(m.seq, r - 1, k)
        head = log_cylinder_mass(m, J) + math.log(P[J[r - 1], I[0]])
    if l > 1:
        mats = m.seq.matrices(k + 1, k + l)
        for t in range(l - 1):
            head += math.log(mats[t, I[t], I[t + 1]])
    return math.exp(head)
