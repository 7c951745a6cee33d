"""Radon-Nikodym densities of the shift and its inverse branches.

For a quasi-stationary measure the infinite product

    F(x) = prod_{n >= 1} T(n)[x_n, x_{n+1}] / T(n+1)[x_n, x_{n+1}]

converges, and the branch densities are

    f_j(x)^2 = [x_1 == j] * lam[x_2] / (lam[x_1] T(1)[x_1, x_2]) * F(x_2 x_3 ...).

``F`` is truncated at a depth chosen from the tail certificate so that the
error in ``log F`` is at most ``eps_F``.  A finite prefix stands for any of
its infinite extensions; if it is shorter than the truncation depth the error
bound widens accordingly.

Pair quantities (likelihood ratios ``Z_n`` and per-step Hellinger gaps) live
on :class:`PairEngine`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .measure import SAMPLE_BLOCK, MarkovMeasure, cylinder_mass, require_certificate, sample_path_array
from .symbolic import Word

MC_EPS_F = 1e-6

DEFAULT_EPS_F = 1e-10
MAX_TRUNCATION_DEPTH = 10_000_000


@dataclass(frozen=True)
class FValue:
    value: float
    log_value: float
    error_bound: float
    depth: int


def _as_symbols(x) -> np.ndarray:
    if isinstance(x, Word):
        return np.array(x.symbols, dtype=np.int64)
    return np.asarray(x, dtype=np.int64)


def truncation_depth(seq, eps, floor) -> int:
    """Smallest ``m >= 0`` with ``tail_bound(m + 1) / floor <= eps``."""
    bound = lambda m: seq.tail_bound(m + 1) / floor
    if bound(0) <= eps:
        return 0
    hi = 1
    while bound(hi) > eps:
        hi *= 2
        if hi > MAX_TRUNCATION_DEPTH:
            raise ValidationError(f"eps_F={eps:g} needs a truncation depth above {MAX_TRUNCATION_DEPTH}")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


class DensityEngine:
    """Evaluates ``F``, ``f_j``, the shift density and ``Z_n`` for one measure."""

    def __init__(self, measure: MarkovMeasure, eps_F=DEFAULT_EPS_F):
        if not eps_F > 0:
            raise ValidationError("eps_F must be positive")
        require_certificate(measure)
        self.measure = measure
        self.seq = measure.seq
        self.eps_F = float(eps_F)
        self.floor = float(self.seq.entry_floor)
        depth = truncation_depth(self.seq, self.eps_F, self.floor)
        if self.seq.horizon is not None:
            # need T(depth + 1) for the last ratio
            depth = min(depth, self.seq.horizon - 1)
        self.depth = depth
        if depth:
            mats = self.seq.matrices(1, depth + 2)
            logs = np.log(mats)
            self.log_ratios = logs[:-1] - logs[1:]
        else:
            self.log_ratios = np.zeros((0, self.n_symbols, self.n_symbols))
        self.lam = measure.lam
        self.T1 = self.seq.matrix(1)

    @property
    def n_symbols(self):
        return self.seq.n_symbols

    def error_bound(self, depth: int) -> float:
        """Certified bound on ``|log F - log F_depth|`` for a product cut after ``depth`` factors."""
        return self.seq.tail_bound(depth + 1) / self.floor

    # -- F ------------------------------------------------------------------

    def F_value(self, x) -> FValue:
        """``F`` on any infinite extension of the prefix ``x``."""
        s = _as_symbols(x)
        if s.size < 1:
            raise ValidationError("F needs a non-empty prefix")
        d = min(self.depth, s.size - 1)
        lr = self.log_ratios
        logv = 0.0
        for k in range(d):
            logv += lr[k, s[k], s[k + 1]]
        return FValue(math.exp(logv), logv, self.error_bound(d), d)

    def log_F_batch(self, paths: np.ndarray, offset=0) -> tuple[np.ndarray, float]:
        """``log F`` of ``paths[:, offset:]`` for every row, plus the common error bound."""
        L = paths.shape[1] - offset
        d = min(self.depth, L - 1)
        return kernels.path_log_sum(paths, self.log_ratios[:d], offset), self.error_bound(d)

    def shift_density(self, x) -> float:
        """Density of ``mu o shift^-1`` with respect to ``mu``: ``1 / F``."""
        return 1.0 / self.F_value(x).value

    # -- f_j ----------------------------------------------------------------

    def _prefactor(self, a, b):
        return self.lam[b] / (self.lam[a] * self.T1[a, b])

    def f_j_squared(self, j: int, x) -> float:
        s = _as_symbols(x)
        if s.size < 2:
            raise ValidationError("f_j needs a prefix of length >= 2")
        if s[0] != j:
            return 0.0
        return self._prefactor(s[0], s[1]) * self.F_value(s[1:]).value

    def f_j_value(self, j: int, x) -> float:
        return math.sqrt(self.f_j_squared(j, x))

    def f_j_squared_batch(self, j: int, paths: np.ndarray) -> tuple[np.ndarray, float]:
        """``f_j^2`` on every row of ``paths`` (zero off the cylinder of ``j``)."""
        logF, err = self.log_F_batch(paths, offset=1)
        a, b = paths[:, 0], paths[:, 1]
        out = np.where(a == j, self.lam[b] / (self.lam[a] * self.T1[a, b]) * np.exp(logF), 0.0)
        return out, err

    # -- finite-level densities ---------------------------------------------

    def Z_n_single(self, j: int, x, n: int) -> float:
        """Density of ``mu o shift_j^-1`` w.r.t. ``mu`` on cylinders of length ``n``."""
        s = _as_symbols(x)
        if not 3 <= n <= s.size:
            raise ValidationError(f"need 3 <= n <= |x|, got n={n}, |x|={s.size}")
        if s[0] != j:
            return 0.0
        logz = math.log(self._prefactor(s[0], s[1]))
        if n - 2 > 0:
            logs = np.log(self.seq.matrices(1, n))
            for k in range(1, n - 1):
                a, b = s[k], s[k + 1]
                logz += logs[k - 1, a, b] - logs[k, a, b]
        return math.exp(logz)

    def Z_n_single_bound(self, n: int) -> float:
        """Bound on ``|log Z_n - log f_j^2|`` on the cylinder of ``j``."""
        return self.seq.tail_bound(n - 1) / self.floor


def density_rows(engine: DensityEngine, prefixes) -> list[tuple[str, float, float]]:
    """``(prefix, F value, error bound)`` rows for CSV export."""
    rows = []
    for x in prefixes:
        fv = engine.F_value(x)
        w = x if isinstance(x, Word) else Word(tuple(int(s) for s in x), engine.n_symbols)
        rows.append((str(w), fv.value, fv.error_bound))
    return rows


# ---------------------------------------------------------------------------
# pairs


def hellinger_gap(row_a, row_b) -> np.ndarray:
    """``1 - sum_x sqrt(a_x b_x)`` along the last axis, as ``sum (sqrt a - sqrt b)^2 / 2``.

    The two forms agree for probability rows; the squared form is
    non-negative by construction and vanishes exactly when the rows agree.
    """
    a = np.sqrt(np.asarray(row_a, dtype=float))
    b = np.sqrt(np.asarray(row_b, dtype=float))
    return 0.5 * np.sum((a - b) ** 2, axis=-1)


class PairEngine:
    """Likelihood ratios and Hellinger terms for ``mu`` (``a``) against ``mu'`` (``b``)."""

    def __init__(self, a: MarkovMeasure, b: MarkovMeasure, eps_F=DEFAULT_EPS_F):
        if a.n_symbols != b.n_symbols:
            raise ValidationError("both measures must live on the same alphabet")
        self.a = a
        self.b = b
        self.eps_F = float(eps_F)

    @property
    def n_symbols(self):
        return self.a.n_symbols

    def log_Z_n_pair(self, x, n: int) -> float:
        s = _as_symbols(x)
        if not 1 <= n <= s.size:
            raise ValidationError(f"need 1 <= n <= |x|, got n={n}, |x|={s.size}")
        logz = math.log(self.b.lam[s[0]]) - math.log(self.a.lam[s[0]])
        if n > 1:
            la = np.log(self.a.seq.matrices(1, n))
            lb = np.log(self.b.seq.matrices(1, n))
            for k in range(n - 1):
                u, v = s[k], s[k + 1]
                logz += lb[k, u, v] - la[k, u, v]
        return logz

    def log_Z_n_batch(self, paths: np.ndarray, n: int) -> np.ndarray:
        """``log Z_n`` on the first ``n`` symbols of every row."""
        paths = np.ascontiguousarray(paths, dtype=np.int32)
        if not 1 <= n <= paths.shape[1]:
            raise ValidationError(f"need 1 <= n <= {paths.shape[1]}, got {n}")
        x0 = paths[:, 0]
        out = np.log(self.b.lam[x0]) - np.log(self.a.lam[x0])
        if n > 1:
            table = np.log(self.b.seq.matrices(1, n)) - np.log(self.a.seq.matrices(1, n))
            out = out + kernels.path_log_sum(paths[:, :n], table, 0)
        return out

    def Z_n_pair(self, x, n: int) -> float:
        """``d mu'_n / d mu_n`` on the cylinder of the first ``n`` symbols of ``x``."""
        return math.exp(self.log_Z_n_pair(x, n))

    def hellinger_terms(self, start: int, stop: int) -> np.ndarray:
        """Per-row gaps for ``start <= n < stop``; shape ``(stop - start, N)``."""
        return hellinger_gap(self.b.seq.matrices(start, stop), self.a.seq.matrices(start, stop))

    def hellinger_term(self, i: int, n: int) -> float:
        return float(self.hellinger_terms(n, n + 1)[0, i])

    def conditional_sqrt_ratio(self, i: int, n: int) -> float:
        """Conditional expectation of ``sqrt(Z_{n+1} / Z_n)`` given ``x_n = i``."""
        t = self.a.seq.matrix(n)[i]
        tp = self.b.seq.matrix(n)[i]
        return float(np.sum(np.sqrt(tp / t) * t))

    def kakutani_sum_along(self, path) -> tuple[float, np.ndarray]:
        """Partial sum of per-step Hellinger terms along a path, and the terms."""
        s = _as_symbols(path.prefix if hasattr(path, "prefix") else path)
        if s.size < 2:
            raise ValidationError("path must have length >= 2")
        H = self.hellinger_terms(1, s.size)
        per_step = H[np.arange(s.size - 1), s[:-1]]
        return float(per_step.sum()), per_step

    def kakutani_sums_batch(self, paths: np.ndarray) -> np.ndarray:
        """Running Hellinger sums for many paths; shape ``(count, L - 1)``."""
        L = paths.shape[1]
        H = self.hellinger_terms(1, L)
        per_step = H[np.arange(L - 1)[None, :], paths[:, :-1]]
        return np.cumsum(per_step, axis=1)


# ---------------------------------------------------------------------------
# identity checks


def sum_formula_residual(engine: DensityEngine, prefixes) -> float:
    """``max |sum_j 1 / f_j(j x)^2 - 1 / F(x)|`` over the rows of ``prefixes``."""
    x = np.ascontiguousarray(prefixes, dtype=np.int32)
    logF, _ = engine.log_F_batch(x)
    total = np.zeros(x.shape[0])
    for j in range(engine.n_symbols):
        jx = np.concatenate([np.full((x.shape[0], 1), j, dtype=np.int32), x], axis=1)
        f2, _ = engine.f_j_squared_batch(j, jx)
        total += 1.0 / f2
    return float(np.max(np.abs(total - np.exp(-logF))))


def _martingale_gap(pair: PairEngine, x: np.ndarray, n: int) -> np.ndarray:
    """``|E[Z_{n+1} | x_1..x_n] / Z_n - 1|`` for each row (rows of length ``>= n``)."""
    N = pair.n_symbols
    base = np.ascontiguousarray(x[:, :n], dtype=np.int32)
    logZ = pair.log_Z_n_batch(base, n)
    T = pair.a.seq.matrix(n)
    last = base[:, -1]
    ext = np.empty((base.shape[0], n + 1), dtype=np.int32)
    ext[:, :n] = base
    cond = np.zeros(base.shape[0])
    for b in range(N):
        ext[:, n] = b
        cond += T[last, b] * np.exp(pair.log_Z_n_batch(ext, n + 1) - logZ)
    return np.abs(cond - 1.0)


def martingale_residual_exhaustive(pair: PairEngine, n_max: int) -> float:
    """Worst relative martingale defect over all words of length ``1..n_max``."""
    from .symbolic import check_cap

    N = pair.n_symbols
    worst = 0.0
    for n in range(1, n_max + 1):
        check_cap(N**n)
        idx = np.arange(N**n)
        words = np.empty((N**n, n), dtype=np.int32)
        for k in range(n - 1, -1, -1):
            words[:, k] = idx % N
            idx = idx // N
        worst = max(worst, float(_martingale_gap(pair, words, n).max()))
    return worst


def martingale_residual_sampled(pair: PairEngine, n_max: int, count: int, seed: int) -> float:
    """Worst relative martingale defect along ``count`` paths drawn from ``pair.a``."""
    paths, _ = sample_path_array(pair.a, n_max, count, seed)
    return max(float(_martingale_gap(pair, paths, n).max()) for n in range(1, n_max + 1))


@dataclass
class CylinderComparison:
    word: str
    pushforward: float  # mean of g(j x)
    weighted: float  # mean of g(x) f_j(x)^2
    exact: float  # mass of the preimage cylinder
    std_error: float

    @property
    def z_score(self) -> float:
        diff = self.pushforward - self.weighted
        if self.std_error == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.std_error


def change_of_variables(measure: MarkovMeasure, count: int, seed: int, depth=3, eps_F=MC_EPS_F,
                        symbols=None, chunk_blocks=4) -> list[CylinderComparison]:
    """Monte Carlo comparison of ``int g o shift_j dmu`` with ``int g f_j^2 dmu``.

    ``g`` runs over indicators of the cylinders of length ``depth`` starting
    with ``j``, for each ``j`` in ``symbols`` (default: all); cylinders not
    starting with ``j`` give zero on both sides.  All comparisons use the same
    samples; the standard error is that of the paired difference.  Paths are
    streamed in chunks of ``chunk_blocks`` sampling blocks.
    """
    engine = DensityEngine(measure, eps_F)
    N = measure.n_symbols
    symbols = range(N) if symbols is None else symbols
    L = max(engine.depth + 2, depth + 1)
    n_cyl = N ** (depth - 1)
    shape = (len(symbols), n_cyl)
    s_lhs, s_rhs, s_d2 = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    weights = N ** np.arange(depth - 2, -1, -1)
    chunk = chunk_blocks * SAMPLE_BLOCK
    done = 0
    while done < count:
        size = min(chunk, count - done)
        x, _ = sample_path_array(measure, L, size, seed, first_block=done // SAMPLE_BLOCK)
        head = x[:, : depth - 1] @ weights  # g(j x): x starts with the tail of the word
        tail = x[:, 1:depth] @ weights  # g(x): x = j + tail of the word
        for a, j in enumerate(symbols):
            f2, _ = engine.f_j_squared_batch(j, x)
            on_j = x[:, 0] == j
            for c in range(n_cyl):
                lhs = (head == c).astype(float)
                rhs = np.where(on_j & (tail == c), f2, 0.0)
                d = lhs - rhs
                s_lhs[a, c] += lhs.sum()
                s_rhs[a, c] += rhs.sum()
                s_d2[a, c] += np.dot(d, d)
        done += size
    out = []
    for a, j in enumerate(symbols):
        for c in range(n_cyl):
            syms = tuple(int(v) for v in np.unravel_index(c, (N,) * (depth - 1))) if depth > 1 else ()
            mean_d = (s_lhs[a, c] - s_rhs[a, c]) / count
            var = max(s_d2[a, c] / count - mean_d**2, 0.0) * count / max(count - 1, 1)
            out.append(CylinderComparison(
                str(Word((j,) + syms, N)), s_lhs[a, c] / count, s_rhs[a, c] / count,
                cylinder_mass(measure, Word(syms, N)), math.sqrt(var / count),
            ))
    return out
