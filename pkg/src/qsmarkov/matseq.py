"""Stochastic matrices, certified matrix sequences and forward products.

A :class:`MatrixSequence` is indexed from ``n = 1``.  Besides evaluating
``T(n)`` it carries, as data, the certificates the rest of the library relies
on:

``tail_bound(m)``
    an upper bound for ``sum_{k >= m} max_ij |T(k)_ij - T(k+1)_ij|``
    (``None`` when unknown, ``inf`` when known to diverge);
``entry_floor``
    a lower bound ``c > 0`` on every entry of every ``T(n)`` (or ``None``);
``limit``
    the limit matrix, available only when a tail certificate exists.

Nothing here tries to *discover* convergence of a black-box sequence; the
closed-form families below know their own series.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DepthCapExceeded,
    HorizonExceeded,
    MissingTailCertificate,
    NoConvergence,
    NonPositiveEntry,
    RowSumOff,
    ValidationError,
)

TAU_ROW = 1e-12
TAU_PF = 1e-12
DEFAULT_DEPTH_CAP = 1_000_000
DEFAULT_PROBE_DEPTH = 64
DIRECT_SOLVE_MAX_N = 8
MAX_N = 64


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def validate(M, tol=TAU_ROW) -> np.ndarray:
    """Check strict positivity and unit row sums; return a renormalized copy.

    Parameters
    ----------
    M : array_like, shape (N, N)
    tol : float
        Allowed deviation of each row sum from 1.

    Returns
    -------
    T : ndarray, shape (N, N)
        Read-only matrix whose rows sum to 1 up to rounding.

    Raises
    ------
    NonPositiveEntry
        For the first entry (row-major) that is not strictly positive.
    RowSumOff
        For the first row whose sum is outside ``[1 - tol, 1 + tol]``.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if not 2 <= n <= MAX_N:
        raise ValidationError(f"matrix size must lie in [2, {MAX_N}], got {n}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    bad = np.argwhere(~(A > 0))
    if bad.size:
        i, j = (int(k) for k in bad[0])
        raise NonPositiveEntry(i, j, float(A[i, j]))
    sums = A.sum(axis=1)
    for i, s in enumerate(sums):
        if abs(s - 1.0) > tol:
            raise RowSumOff(i, float(s))
    # rows already at 1 up to rounding are kept, so validate(validate(M)) == validate(M)
    off = np.abs(sums - 1.0) > n * np.finfo(float).eps
    A[off] /= sums[off, None]
    return _frozen(A)


def is_stochastic(M, tol=TAU_ROW) -> bool:
    try:
        validate(M, tol)
    except ValidationError:
        return False
    return True


def _pf_residual(v, T):
    return float(np.max(np.abs(v @ T - v)))


def _pf_direct(T):
    n = T.shape[0]
    A = T.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def perron_left(T, tol=TAU_PF, max_iter=10_000) -> np.ndarray:
    """Positive left eigenvector ``v T = v`` normalized to a probability vector.

    Power iteration on ``v <- v T`` from the uniform vector; if the residual
    ``max|vT - v|`` does not reach ``tol`` and ``N <= 8`` a direct linear
    solve is used instead.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    v = np.full(n, 1.0 / n)
    res = math.inf
    if n <= DIRECT_SOLVE_MAX_N:
        # One solve is exact up to rounding; a couple of power steps polish it.
        v = _pf_direct(T)
        for _ in range(3):
            w = v @ T
            v = w / w.sum()
        res = _pf_residual(v, T)
    else:
        for _ in range(max_iter):
            w = v @ T
            w /= w.sum()
            if np.max(np.abs(w - v)) <= tol / 4:
                v = w
                break
            v = w
        res = _pf_residual(v, T)
    if not (res <= tol and np.all(v > 0)):
        raise NoConvergence(max_iter, res)
    return _frozen(v)


# ---------------------------------------------------------------------------
# coefficient families for perturbation sequences T(n) = T_inf + c_n D


class Coefficients(ABC):
    """Scalar sequence ``c_n`` (``n >= 1``) with closed-form series bounds."""

    name: str

    @abstractmethod
    def values(self, n: np.ndarray) -> np.ndarray: ...

    @property
    @abstractmethod
    def sup_abs(self) -> float:
        """``sup_n |c_n|``."""

    @abstractmethod
    def diff_tail(self, m: int) -> float:
        """Upper bound on ``sum_{k >= m} |c_k - c_{k+1}|`` (``inf`` if divergent)."""

    @abstractmethod
    def weighted_diff_sum(self) -> float:
        """Upper bound on ``sum_{n >= 1} n |c_n - c_{n+1}|``."""

    @abstractmethod
    def abs_sum(self) -> float:
        """Upper bound on ``sum_{n >= 1} |c_n|``."""

    @property
    def diff_diverges(self) -> bool:
        return math.isinf(self.diff_tail(1))

    def value(self, n: int) -> float:
        return float(self.values(np.array([n]))[0])

    @abstractmethod
    def to_record(self) -> dict: ...


def _zeta_upper(p):
    # sum_{n>=1} n^-p <= 1 + int_1^inf x^-p dx
    return 1.0 + 1.0 / (p - 1.0) if p > 1 else math.inf


def _zeta_tail_upper(p, m):
    # sum_{k>=m} k^-p <= m^-p + int_m^inf x^-p dx
    if p <= 1:
        return math.inf
    return m**-p + m ** (1.0 - p) / (p - 1.0)


@dataclass(frozen=True)
class Geometric(Coefficients):
    r: float
    name: str = field(default="geometric", init=False)

    def __post_init__(self):
        if not 0 < self.r < 1:
            raise ValidationError(f"geometric ratio must lie in (0, 1), got {self.r}")

    def values(self, n):
        return self.r ** np.asarray(n, dtype=float)

    @property
    def sup_abs(self):
        return self.r

    def diff_tail(self, m):
        # telescopes: sum_{k>=m} (r^k - r^{k+1}) = r^m
        return self.r ** max(m, 1)

    def weighted_diff_sum(self):
        # |c_n - c_{n+1}| <= r^n and sum n r^n = r / (1 - r)^2
        return self.r / (1.0 - self.r) ** 2

    def abs_sum(self):
        return self.r / (1.0 - self.r)

    def to_record(self):
        return {"family": "geometric", "r": self.r}


@dataclass(frozen=True)
class Power(Coefficients):
    p: float
    name: str = field(default="power", init=False)

    def __post_init__(self):
        if not self.p > 0:
            raise ValidationError(f"power exponent must be positive, got {self.p}")

    def values(self, n):
        return np.asarray(n, dtype=float) ** -self.p

    @property
    def sup_abs(self):
        return 1.0

    def diff_tail(self, m):
        # decreasing, so the differences telescope to c_m
        return max(m, 1) ** -self.p

    def weighted_diff_sum(self):
        # summation by parts: sum n (c_n - c_{n+1}) = sum c_n
        return _zeta_upper(self.p)

    def abs_sum(self):
        return _zeta_upper(self.p)

    def to_record(self):
        return {"family": "power", "p": self.p}


@dataclass(frozen=True)
class SignedPower(Coefficients):
    p: float
    name: str = field(default="signed_power", init=False)

    def __post_init__(self):
        if not self.p > 0:
            raise ValidationError(f"power exponent must be positive, got {self.p}")

    def values(self, n):
        n = np.asarray(n, dtype=float)
        sign = np.where(np.mod(n, 2) == 0, 1.0, -1.0)
        return sign * n**-self.p

    @property
    def sup_abs(self):
        return 1.0

    def diff_tail(self, m):
        # |c_k - c_{k+1}| = k^-p + (k+1)^-p, divergent for p <= 1
        m = max(m, 1)
        return _zeta_tail_upper(self.p, m) + _zeta_tail_upper(self.p, m + 1)

    def weighted_diff_sum(self):
        # n (n^-p + (n+1)^-p) <= 2 n^(1-p)
        return 2.0 * _zeta_upper(self.p - 1.0) if self.p > 2 else math.inf

    def abs_sum(self):
        return _zeta_upper(self.p)

    def to_record(self):
        return {"family": "signed_power", "p": self.p}


COEFFICIENT_FAMILIES = {"geometric": Geometric, "power": Power, "signed_power": SignedPower}


def coefficients_from_record(rec: dict) -> Coefficients:
    rec = dict(rec)
    fam = rec.pop("family", None)
    if fam not in COEFFICIENT_FAMILIES:
        raise ValidationError(f"unknown coefficient family {fam!r}")
    try:
        return COEFFICIENT_FAMILIES[fam](**{k: float(v) for k, v in rec.items()})
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {fam}: {rec}") from exc


# ---------------------------------------------------------------------------
# matrix sequences


def _max_abs(a, axis=None):
    return np.max(np.abs(a), axis=axis)


class MatrixSequence(ABC):
    """``n -> T(n)``, ``n >= 1``, with certificates carried as data."""

    kind: str = ""
    n_symbols: int

    @abstractmethod
    def matrices(self, start: int, stop: int) -> np.ndarray:
        """Stack of ``T(n)`` for ``start <= n < stop``, shape ``(stop - start, N, N)``."""

    def matrix(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValidationError(f"sequence index starts at 1, got {n}")
        return self.matrices(n, n + 1)[0]

    @property
    def horizon(self) -> int | None:
        """Largest evaluable index, ``None`` when unbounded."""
        return None

    @property
    def has_certificate(self) -> bool:
        return self.tail_bound(1) is not None and not math.isinf(self.tail_bound(1)) and (
            self.entry_floor is not None
        )

    @abstractmethod
    def tail_bound(self, m: int) -> float | None: ...

    @property
    @abstractmethod
    def entry_floor(self) -> float | None: ...

    @property
    def declared_limit(self) -> np.ndarray | None:
        return None

    @property
    def limit(self) -> np.ndarray:
        lim = self.declared_limit
        if lim is None or not self.has_certificate:
            raise MissingTailCertificate(f"{self.kind} sequence has no tail certificate")
        return lim

    @property
    def known_divergent(self) -> bool:
        """Closed-form rule: consecutive differences are not summable."""
        return False

    def distance_sum(self) -> float | None:
        """Bound on ``sum_n max|T(n) - T_inf|``; ``None`` when unknown."""
        return None

    def weighted_diff_sum(self) -> float | None:
        """Bound on ``sum_n n max|T(n) - T(n+1)|``; ``None`` when unknown."""
        return None

    @abstractmethod
    def to_record(self) -> dict: ...

    def same_as(self, other: "MatrixSequence") -> bool:
        return _records_equal(self.to_record(), other.to_record())

    def check(self, probe_depth=DEFAULT_PROBE_DEPTH):
        """Validate every ``T(n)`` up to the probe depth."""
        stop = probe_depth + 1
        if self.horizon is not None:
            stop = min(stop, self.horizon + 1)
        for k, T in enumerate(self.matrices(1, stop), start=1):
            validate(T)
            floor = self.entry_floor
            if floor is not None and T.min() < floor * (1 - 1e-12):
                raise ValidationError(f"T({k}) has an entry below the declared floor {floor}")
        return self

    def __repr__(self):
        return f"<{type(self).__name__} N={self.n_symbols}>"


def _records_equal(a, b):
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_records_equal(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(_records_equal(x, y) for x, y in zip(a, b))
    return a == b


def _as_list(M):
    return [[float(x) for x in row] for row in np.asarray(M)]


class Constant(MatrixSequence):
    kind = "constant"

    def __init__(self, T):
        self.T = validate(T)
        self.n_symbols = self.T.shape[0]

    def matrices(self, start, stop):
        return np.broadcast_to(self.T, (max(stop - start, 0),) + self.T.shape)

    def tail_bound(self, m):
        return 0.0

    @property
    def entry_floor(self):
        return float(self.T.min())

    @property
    def declared_limit(self):
        return self.T

    def distance_sum(self):
        return 0.0

    def weighted_diff_sum(self):
        return 0.0

    def to_record(self):
        return {"kind": "constant", "matrix": _as_list(self.T)}


class EventuallyConstant(MatrixSequence):
    """``T(n) = head[n-1]`` for ``n <= len(head)`` and ``tail`` afterwards."""

    kind = "eventually_constant"

    def __init__(self, head, tail):
        self.tail = validate(tail)
        self.head = tuple(validate(T) for T in head)
        self.n_symbols = self.tail.shape[0]
        for T in self.head:
            if T.shape != self.tail.shape:
                raise ValidationError("all matrices must share one shape")
        stack = np.array(self.head + (self.tail,))
        self._stack = _frozen(stack)
        # diffs[k-1] = max|T(k) - T(k+1)| for k = 1..K
        self._diffs = _max_abs(np.diff(stack, axis=0), axis=(1, 2)) if self.head else np.zeros(0)

    def matrices(self, start, stop):
        K = len(self.head)
        idx = np.clip(np.arange(start, stop) - 1, 0, K)
        return self._stack[idx]

    def tail_bound(self, m):
        K = len(self.head)
        m = max(m, 1)
        return float(self._diffs[m - 1 :].sum()) if m <= K else 0.0

    @property
    def entry_floor(self):
        return float(self._stack.min())

    @property
    def declared_limit(self):
        return self.tail

    def distance_sum(self):
        return float(sum(_max_abs(T - self.tail) for T in self.head))

    def weighted_diff_sum(self):
        k = np.arange(1, len(self._diffs) + 1)
        return float((k * self._diffs).sum())

    def to_record(self):
        return {
            "kind": "eventually_constant",
            "head": [_as_list(T) for T in self.head],
            "tail": _as_list(self.tail),
        }


class Perturbation(MatrixSequence):
    """``T(n) = T_inf + c_n D`` with ``D`` having zero row sums."""

    kind = "perturbation"

    def __init__(self, limit, direction, coefficients: Coefficients, probe_depth=DEFAULT_PROBE_DEPTH):
        self.T_inf = validate(limit)
        D = np.array(direction, dtype=float)
        if D.shape != self.T_inf.shape:
            raise ValidationError("direction must have the shape of the limit matrix")
        rows = np.abs(D.sum(axis=1))
        if np.any(rows > TAU_ROW):
            i = int(np.argmax(rows))
            raise ValidationError(f"direction row {i} sums to {D[i].sum()!r}, not 0")
        self.D = _frozen(D)
        self.coefficients = coefficients
        self.n_symbols = self.T_inf.shape[0]
        self.max_direction = float(_max_abs(self.D))
        floor = self.T_inf - coefficients.sup_abs * np.abs(self.D)
        if floor.min() <= 0:
            i, j = np.unravel_index(int(np.argmin(floor)), floor.shape)
            raise NonPositiveEntry(int(i), int(j), float(floor[i, j]))
        self._floor = float(floor.min())
        self.check(probe_depth)

    def matrices(self, start, stop):
        n = np.arange(start, stop)
        c = self.coefficients.values(n)
        return self.T_inf[None, :, :] + c[:, None, None] * self.D[None, :, :]

    def tail_bound(self, m):
        if self.max_direction == 0:
            return 0.0
        return self.coefficients.diff_tail(m) * self.max_direction

    @property
    def entry_floor(self):
        return self._floor

    @property
    def declared_limit(self):
        return self.T_inf

    @property
    def known_divergent(self):
        return self.max_direction > 0 and self.coefficients.diff_diverges

    def distance_sum(self):
        return self.coefficients.abs_sum() * self.max_direction if self.max_direction else 0.0

    def weighted_diff_sum(self):
        return self.coefficients.weighted_diff_sum() * self.max_direction if self.max_direction else 0.0

    def to_record(self):
        return {
            "kind": "perturbation",
            "limit": _as_list(self.T_inf),
            "direction": _as_list(self.D),
            "coefficients": self.coefficients.to_record(),
        }


class ExplicitList(MatrixSequence):
    """Listed matrices ``T(1..K)`` plus a declared limit.

    Values beyond ``K`` are unknown.  An optional geometric envelope
    ``(C, rho)`` declares ``max|T(k) - T(k+1)| <= C rho^k`` for ``k >= K``;
    together with a declared entry floor it serves as the tail certificate.
    """

    kind = "explicit"

    def __init__(self, matrices, limit, envelope=None, entry_floor=None):
        self.mats = tuple(validate(T) for T in matrices)
        if not self.mats:
            raise ValidationError("explicit sequence needs at least one matrix")
        self.declared = validate(limit)
        self.n_symbols = self.declared.shape[0]
        if any(T.shape != self.declared.shape for T in self.mats):
            raise ValidationError("all matrices must share one shape")
        self._stack = _frozen(np.array(self.mats))
        self._diffs = _max_abs(np.diff(self._stack, axis=0), axis=(1, 2))
        if envelope is not None:
            C, rho = (float(x) for x in envelope)
            if C < 0 or not 0 <= rho < 1:
                raise ValidationError(f"envelope needs C >= 0 and 0 <= rho < 1, got {envelope}")
            envelope = (C, rho)
        self.envelope = envelope
        if entry_floor is not None:
            entry_floor = float(entry_floor)
            if not 0 < entry_floor <= self._stack.min():
                raise ValidationError("declared entry floor must be positive and below listed entries")
            if entry_floor > self.declared.min():
                raise ValidationError("declared entry floor exceeds an entry of the limit")
        self._floor = entry_floor

    @property
    def horizon(self):
        return len(self.mats)

    def matrices(self, start, stop):
        if start < 1:
            raise ValidationError(f"sequence index starts at 1, got {start}")
        if stop - 1 > len(self.mats):
            raise HorizonExceeded(f"explicit sequence is listed up to n={len(self.mats)}, asked {stop - 1}")
        return self._stack[start - 1 : stop - 1]

    def _env_tail(self, m):
        C, rho = self.envelope
        return C * rho**m / (1.0 - rho)

    def tail_bound(self, m):
        if self.envelope is None:
            return None
        K = len(self.mats)
        m = max(m, 1)
        known = float(self._diffs[m - 1 :].sum()) if m < K else 0.0
        return known + self._env_tail(max(m, K))

    @property
    def entry_floor(self):
        return self._floor

    @property
    def declared_limit(self):
        return self.declared

    def distance_sum(self):
        if self.envelope is None:
            return None
        C, rho = self.envelope
        K = len(self.mats)
        head = sum(_max_abs(T - self.declared) for T in self.mats)
        # n > K: |T(n) - T_inf| <= sum_{k>=n} C rho^k
        return float(head + C * rho ** (K + 1) / (1.0 - rho) ** 2)

    def weighted_diff_sum(self):
        if self.envelope is None:
            return None
        C, rho = self.envelope
        K = len(self.mats)
        k = np.arange(1, K)
        head = float((k * self._diffs).sum())
        return head + C * rho**K * (K - (K - 1) * rho) / (1.0 - rho) ** 2

    def to_record(self):
        rec = {
            "kind": "explicit",
            "matrices": [_as_list(T) for T in self.mats],
            "limit": _as_list(self.declared),
        }
        if self.envelope is not None:
            rec["envelope"] = list(self.envelope)
        if self._floor is not None:
            rec["entry_floor"] = self._floor
        return rec


def sequence_from_record(rec: dict) -> MatrixSequence:
    """Inverse of ``MatrixSequence.to_record``."""
    if not isinstance(rec, dict) or "kind" not in rec:
        raise ValidationError(f"sequence record needs a 'kind': {rec!r}")
    kind = rec["kind"]
    try:
        if kind == "constant":
            return Constant(rec["matrix"])
        if kind == "eventually_constant":
            return EventuallyConstant(rec["head"], rec["tail"])
        if kind == "perturbation":
            return Perturbation(rec["limit"], rec["direction"], coefficients_from_record(rec["coefficients"]))
        if kind == "explicit":
            return ExplicitList(rec["matrices"], rec["limit"], rec.get("envelope"), rec.get("entry_floor"))
    except KeyError as exc:
        raise ValidationError(f"{kind} sequence record is missing {exc}") from None
    raise ValidationError(f"unknown sequence kind {kind!r}")


# ---------------------------------------------------------------------------
# products


def forward_product(seq: MatrixSequence, p: int, n: int, depth_cap=DEFAULT_DEPTH_CAP) -> np.ndarray:
    """``T(p+1) T(p+2) ... T(n)``."""
    if not 0 <= p < n:
        raise ValidationError(f"need 0 <= p < n, got p={p}, n={n}")
    if n - p > depth_cap:
        raise DepthCapExceeded(f"product of {n - p} matrices exceeds cap {depth_cap}")
    P = np.eye(seq.n_symbols)
    chunk = 4096
    for a in range(p + 1, n + 1, chunk):
        for T in seq.matrices(a, min(a + chunk, n + 1)):
            P = P @ T
    return P


@dataclass
class ProductLimit:
    """Outcome of :func:`product_limit_check`; ``achieved_n is None`` means not converged."""

    limit: np.ndarray
    achieved_n: int | None
    error: float
    p: int
    tol: float

    @property
    def converged(self) -> bool:
        return self.achieved_n is not None


def limit_matrix(seq: MatrixSequence) -> np.ndarray:
    return validate(seq.limit)


def product_limit_check(seq: MatrixSequence, p: int, tol: float, max_n: int) -> ProductLimit:
    """First ``n <= max_n`` with ``max|T(p+1)...T(n) - Q| <= tol``.

    ``Q`` has every row equal to the Perron vector of the limit matrix.
    """
    T_inf = limit_matrix(seq)
    v = perron_left(T_inf)
    Q = np.tile(v, (seq.n_symbols, 1))
    if max_n > p + DEFAULT_DEPTH_CAP:
        raise DepthCapExceeded(f"max_n={max_n} exceeds depth cap")
    P = np.eye(seq.n_symbols)
    err = math.inf
    chunk = 1024
    for a in range(p + 1, max_n + 1, chunk):
        mats = seq.matrices(a, min(a + chunk, max_n + 1))
        for k, T in enumerate(mats):
            P = P @ T
            err = float(_max_abs(P - Q))
            if err <= tol:
                return ProductLimit(_frozen(Q), a + k, err, p, tol)
    return ProductLimit(_frozen(Q), None, err, p, tol)
