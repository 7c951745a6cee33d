"""Finite-level pictures of the representation ``S_j g = f_j (g o shift)``.

Level ``n`` is the span of the indicators of the ``N**n`` cylinders of length
``n``, with orthonormal basis ``e_I = 1_{C(I)} / sqrt(mu(C(I)))`` in
lexicographic order.  ``S_i`` maps level ``n`` into functions supported on
``C(i)``; we keep its compression to level ``n + 1``.  In that basis the
compression has a single non-zero per column, at row ``iI``:

    <e_{iI}, S_i e_I> = E[ prod_{k >= n} sqrt(T(k)/T(k+1)) along the path | C(iI) ]
                      = (M_n M_{n+1} ... 1)[I_last],   M_k = sqrt(T(k) * T(k+1)) entrywise.

For stationary measures every ``M_k`` is the transition matrix itself, so the
entry is exactly 1 and ``S_i e_I = e_{iI}``.  Otherwise the product is cut
where the density truncation stops; the omitted tail changes the entry by a
factor in ``[exp(-B/2c), 1]``, which gives the certified ``error_bound``.

Operators are stored as ``scipy.sparse`` matrices so that levels beyond the
dense cap (``N**n <= 4096``) stay cheap.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .density import DEFAULT_EPS_F, DensityEngine
from .errors import ValidationError
from .measure import MarkovMeasure, log_mass_table
from .symbolic import DEFAULT_ENUMERATION_CAP, Word, check_cap

DENSE_CAP = 4096
RANK_RTOL = 1e-9


class OpKind(enum.Enum):
    S = "S"
    S_ADJOINT = "S_adjoint"
    PROJECTION = "projection"


@dataclass(frozen=True)
class CompressedOp:
    kind: OpKind
    matrix: sp.csr_matrix
    error_bound: float
    symbol: int | None = None
    level: int = 0
    word: Word | None = None

    @property
    def shape(self):
        return self.matrix.shape

    def adjoint(self) -> "CompressedOp":
        """Transpose in the orthonormal basis."""
        kind = {OpKind.S: OpKind.S_ADJOINT, OpKind.S_ADJOINT: OpKind.S}.get(self.kind, self.kind)
        level = self.level + 1 if self.kind is OpKind.S else self.level - 1 if self.kind is OpKind.S_ADJOINT else self.level
        return CompressedOp(kind, self.matrix.T.tocsr(), self.error_bound, self.symbol, level, self.word)

    def dense(self, cap=DENSE_CAP) -> np.ndarray:
        if max(self.matrix.shape) > cap:
            raise ValidationError(f"dense export of a {self.matrix.shape} operator exceeds cap {cap}")
        return self.matrix.toarray()


@dataclass(frozen=True)
class LevelSpace:
    level: int
    n_symbols: int
    masses: np.ndarray

    @property
    def dim(self) -> int:
        return self.masses.size

    def words(self) -> np.ndarray:
        """All level words as rows of an integer array, lexicographic order."""
        idx = np.arange(self.dim)
        out = np.empty((self.dim, self.level), dtype=np.int64)
        for k in range(self.level - 1, -1, -1):
            out[:, k] = idx % self.n_symbols
            idx //= self.n_symbols
        return out

    def basis_values(self) -> np.ndarray:
        """Column ``I`` holds the values of ``e_I`` on each level cylinder."""
        return np.diag(1.0 / np.sqrt(self.masses))

    def gram(self) -> np.ndarray:
        V = self.basis_values()
        return V.T @ (self.masses[:, None] * V)

    def constant_one(self) -> np.ndarray:
        """Coordinates of the constant function 1."""
        return np.sqrt(self.masses)

    def coords_of_step(self, values) -> np.ndarray:
        """Coordinates of the step function taking ``values[I]`` on ``C(I)``."""
        return np.asarray(values, dtype=float) * np.sqrt(self.masses)


def build_level(m: MarkovMeasure, n: int, cap=DEFAULT_ENUMERATION_CAP) -> LevelSpace:
    if n < 0:
        raise ValidationError("level must be non-negative")
    check_cap(m.n_symbols**n, cap)
    masses = np.exp(log_mass_table(m, n, cap))
    masses.setflags(write=False)
    return LevelSpace(n, m.n_symbols, masses)


def _engine(m: MarkovMeasure, eps_F) -> DensityEngine:
    return DensityEngine(m, eps_F)


def _tail_expectations(engine: DensityEngine, n: int) -> tuple[np.ndarray, float]:
    """``(M_n ... M_depth 1)`` and its certified absolute error."""
    seq = engine.seq
    N = seq.n_symbols
    v = np.ones(N)
    depth = engine.depth
    if depth >= n:
        mats = seq.matrices(n, depth + 2)
        for k in range(depth - n, -1, -1):
            v = np.sqrt(mats[k] * mats[k + 1]) @ v
    cut = max(depth + 1, n)
    rel = seq.tail_bound(cut) / (2.0 * engine.floor)
    return v, float(v.max() * -math.expm1(-rel))


def compressed_S(m: MarkovMeasure, i: int, n: int, eps_F=DEFAULT_EPS_F, method="conditional",
                 cap=DEFAULT_ENUMERATION_CAP) -> CompressedOp:
    """Compression of ``S_i`` from level ``n`` to level ``n + 1``.

    ``method="conditional"`` (default) integrates ``f_i`` over each cylinder
    exactly up to the truncation.  ``method="point"`` evaluates ``f_i`` at the
    periodic extension of ``iI`` instead; its error bound also covers the
    variation of ``f_i`` inside the cylinder.
    """
    N = m.n_symbols
    if not 0 <= i < N:
        raise ValidationError(f"symbol {i} outside alphabet of size {N}")
    if n < 1:
        raise ValidationError("compressions start at level 1")
    check_cap(N ** (n + 1), cap)
    engine = _engine(m, eps_F)
    dim = N**n
    cols = np.arange(dim)
    rows = i * dim + cols
    if method == "conditional":
        v, err = _tail_expectations(engine, n)
        vals = v[cols % N]
    elif method == "point":
        vals, err = _point_entries(m, engine, i, n)
    else:
        raise ValidationError(f"unknown compression method {method!r}")
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(N * dim, dim))
    return CompressedOp(OpKind.S, mat, err, i, n)


def _point_entries(m, engine, i, n):
    N = m.n_symbols
    words = LevelSpace(n, N, np.ones(N**n)).words()
    lm_n = log_mass_table(m, n)
    lm_n1 = log_mass_table(m, n + 1)
    dim = N**n
    L = max(engine.depth + 2, n + 2)
    reps = np.empty((dim, L), dtype=np.int32)
    full = np.concatenate([np.full((dim, 1), i), words], axis=1)
    for k in range(L):
        reps[:, k] = full[:, k % (n + 1)]
    f2, _ = engine.f_j_squared_batch(i, reps)
    vals = np.sqrt(f2 * np.exp(lm_n1[i * dim + np.arange(dim)] - lm_n))
    B = engine.seq.tail_bound(n) / engine.floor
    err = float(vals.max() * (math.exp(B / 2) - math.exp(-B / 2)) + engine.error_bound(engine.depth))
    return vals, err


def compressed_family(m: MarkovMeasure, n: int, eps_F=DEFAULT_EPS_F, method="conditional"):
    return [compressed_S(m, i, n, eps_F, method) for i in range(m.n_symbols)]


@dataclass
class CuntzReport:
    level: int
    eps_F: float
    residual_isometry: float
    residual_sum: float
    error_budget: float
    method: str
    compression_bound: float = 0.0

    @property
    def residual(self) -> float:
        return max(self.residual_isometry, self.residual_sum)

    @property
    def bound(self) -> float:
        """Certified bound on the computed residuals."""
        return self.compression_bound + self.error_budget

    def within(self, tol) -> bool:
        return self.residual <= tol


def _max_abs_sparse(A) -> float:
    A = sp.csr_matrix(A)
    A.eliminate_zeros()
    return float(np.abs(A.data).max()) if A.nnz else 0.0


def cuntz_residuals(ops) -> tuple[float, float]:
    """``max ||S_i* S_j - delta_ij I||`` and ``||sum S_i S_i* - I||`` (max-norm)."""
    dim_in = ops[0].shape[1]
    dim_out = ops[0].shape[0]
    iso = 0.0
    for a, A in enumerate(ops):
        for b, B in enumerate(ops):
            G = A.matrix.T @ B.matrix
            if a == b:
                G = G - sp.identity(dim_in, format="csr")
            iso = max(iso, _max_abs_sparse(G))
    R = sum((A.matrix @ A.matrix.T for A in ops), sp.csr_matrix((dim_out, dim_out)))
    return iso, _max_abs_sparse(R - sp.identity(dim_out, format="csr"))


def check_cuntz_relations(m: MarkovMeasure, n: int, eps_F=DEFAULT_EPS_F, method="conditional") -> CuntzReport:
    """Cuntz-relation residuals of the level-``n`` compressions.

    ``error_budget`` bounds how far the computed relation entries can be from
    those of the exact compressions (``2e + e^2`` for entry error ``e``).
    The exact compressions themselves miss the relations by
    ``1 - entry^2``: each entry lies in ``[exp(-B(n) / 2c), 1]``, so
    ``compression_bound = 1 - exp(-B(n) / c)``.  This part does not depend
    on ``eps_F``; it vanishes for stationary measures and shrinks with ``n``.
    """
    ops = compressed_family(m, n, eps_F, method)
    iso, tot = cuntz_residuals(ops)
    e = max(op.error_bound for op in ops)
    seq = m.seq
    comp = float(-math.expm1(-seq.tail_bound(n) / seq.entry_floor))
    return CuntzReport(n, eps_F, iso, tot, 2 * e + e * e, method, comp)


# ---------------------------------------------------------------------------
# projection-valued measure


def projection_of_cylinder(m: MarkovMeasure, I: Word, n: int) -> CompressedOp:
    """``P(C(I))`` on level ``n``: the diagonal selector of words with prefix ``I``."""
    if I.n_symbols != m.n_symbols:
        raise ValidationError("word and measure use different alphabets")
    if len(I) > n:
        raise ValidationError(f"|I| = {len(I)} exceeds the level {n}")
    N = m.n_symbols
    block = N ** (n - len(I))
    start = I.index() * block
    diag = np.zeros(N**n)
    diag[start : start + block] = 1.0
    return CompressedOp(OpKind.PROJECTION, sp.diags(diag, format="csr"), 0.0, None, n, I)


def _level_of(x, N) -> int:
    dim = len(x)
    n = round(math.log(dim, N)) if dim > 1 else 0
    if N**n != dim:
        raise ValidationError(f"vector of length {dim} is not a level space of a {N}-letter alphabet")
    return n


def scalar_measure(m: MarkovMeasure, x, I: Word) -> float:
    """``m_x(C(I)) = <x, P(C(I)) x>`` for ``x`` in level coordinates."""
    x = np.asarray(x, dtype=float)
    n = _level_of(x, m.n_symbols)
    P = projection_of_cylinder(m, I, n).matrix
    return float(x @ (P @ x))


def scalar_measure_check(m: MarkovMeasure, x, I: Word, unit_tol=1e-12) -> float:
    x = np.asarray(x, dtype=float)
    if abs(np.linalg.norm(x) - 1.0) > unit_tol:
        raise ValidationError("x must be a unit vector")
    return scalar_measure(m, x, I)


def multiplication_operator(m: MarkovMeasure, values, k: int, n: int) -> sp.csr_matrix:
    """``pi(f) = sum_{|J| = k} f_J P(C(J))`` on level ``n`` for a level-``k`` step function."""
    N = m.n_symbols
    values = np.asarray(values, dtype=float)
    if values.size != N**k:
        raise ValidationError(f"step function needs {N**k} values")
    op = sp.csr_matrix((N**n, N**n))
    for idx, fJ in enumerate(values):
        J = Word(tuple(int(s) for s in np.base_repr(idx, N).zfill(k))[-k:] if k else (), N)
        op = op + fJ * projection_of_cylinder(m, J, n).matrix
    return op


def norm_identity_residual(m: MarkovMeasure, x, values, k: int) -> float:
    """``| ||pi(f) x||^2 - sum_J |f_J|^2 m_x(C(J)) |`` for a level-``k`` step function."""
    x = np.asarray(x, dtype=float)
    N = m.n_symbols
    n = _level_of(x, N)
    if k > n:
        raise ValidationError("step level exceeds the level of x")
    lhs = float(np.sum((multiplication_operator(m, values, k, n) @ x) ** 2))
    rhs = 0.0
    for idx, fJ in enumerate(np.asarray(values, dtype=float)):
        J = _word_at(idx, k, N)
        rhs += abs(fJ) ** 2 * scalar_measure(m, x, J)
    return abs(lhs - rhs)


def _word_at(idx, k, N) -> Word:
    syms = []
    for _ in range(k):
        idx, s = divmod(idx, N)
        syms.append(s)
    return Word(tuple(reversed(syms)), N)


@dataclass
class PVMReport:
    level: int
    multiplicativity: float
    resolution: float

    @property
    def residual(self):
        return max(self.multiplicativity, self.resolution)


def pvm_algebra_check(m: MarkovMeasure, n: int, words=None) -> PVMReport:
    """``P(I) P(J) = P(C(I) & C(J))`` over word pairs and ``sum_{|I|=k} P(I) = 1`` for ``k <= n``."""
    N = m.n_symbols
    if words is None:
        words = [_word_at(i, k, N) for k in range(min(n, 3) + 1) for i in range(N**k)]
    ident = sp.identity(N**n, format="csr")
    mult = 0.0
    for I in words:
        PI = projection_of_cylinder(m, I, n).matrix
        for J in words:
            PJ = projection_of_cylinder(m, J, n).matrix
            if I.is_prefix_of(J):
                expected = PJ
            elif J.is_prefix_of(I):
                expected = PI
            else:
                expected = sp.csr_matrix(PI.shape)
            mult = max(mult, _max_abs_sparse(PI @ PJ - expected))
    res = 0.0
    for k in range(n + 1):
        total = sum((projection_of_cylinder(m, _word_at(i, k, N), n).matrix for i in range(N**k)),
                    sp.csr_matrix(ident.shape))
        res = max(res, _max_abs_sparse(total - ident))
    return PVMReport(n, mult, res)


# ---------------------------------------------------------------------------
# monic cyclicity


@dataclass
class CyclicityReport:
    level: int
    dimension: int
    target: int
    singular_values: np.ndarray

    @property
    def ok(self) -> bool:
        return self.dimension == self.target


def range_projection_vectors(m: MarkovMeasure, n: int, eps_F=DEFAULT_EPS_F, zero_out=None, method="conditional"):
    """``S_I S_I^* 1`` for all ``|I| <= n``, computed in level ``n + 1`` coordinates.

    Working one level up keeps every intermediate level ``>= 1``.
    """
    N = m.n_symbols
    top = n + 1
    # ops[l][i]: compression of S_i from level l to l + 1
    ops = {}
    for l in range(top - n, top):
        ops[l] = [compressed_S(m, i, l, eps_F, method).matrix for i in range(N)]
        if zero_out is not None:
            ops[l][zero_out] = ops[l][zero_out] * 0.0
    one = build_level(m, top).constant_one()
    vecs = [one]
    for k in range(1, n + 1):
        for idx in range(N**k):
            I = _word_at(idx, k, N).symbols
            v = one
            for t, s in enumerate(I):  # S_{i_1}^*, then S_{i_2}^*, ...
                v = ops[top - 1 - t][s].T @ v
            for t, s in enumerate(reversed(I)):  # then S_{i_k}, ..., S_{i_1}
                v = ops[top - k + t][s] @ v
            vecs.append(v)
    return np.array(vecs)


def project_down(m: MarkovMeasure, V, level: int) -> np.ndarray:
    """Orthogonal projection of level-``level`` coordinates (last axis) onto level ``level - 1``."""
    N = m.n_symbols
    w = np.sqrt(build_level(m, level).masses).reshape(-1, N)
    w = w / np.sqrt(np.sum(w**2, axis=1, keepdims=True))
    V = np.asarray(V, dtype=float)
    return np.sum(V.reshape(V.shape[:-1] + w.shape) * w, axis=-1)


def monic_cyclicity_check(m: MarkovMeasure, n: int, eps_F=DEFAULT_EPS_F, zero_out=None,
                          method="conditional", rtol=RANK_RTOL) -> CyclicityReport:
    """Dimension of ``span{S_I S_I^* 1 : |I| <= n}``; success is ``N**n``."""
    if n < 1:
        raise ValidationError("cyclicity check needs n >= 1")
    check_cap(m.n_symbols ** (n + 1), DENSE_CAP)
    V = project_down(m, range_projection_vectors(m, n, eps_F, zero_out, method), n + 1)
    s = np.linalg.svd(V, compute_uv=False)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return CyclicityReport(n, rank, m.n_symbols**n, s)
