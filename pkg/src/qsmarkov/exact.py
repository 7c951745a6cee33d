"""Exact rational arithmetic for small alphabets and short words.

Used to generate oracle values.  Matrix entries are read through their
decimal representation (``0.7 -> 7/10``), so configs written in decimals are
reproduced exactly.  Limited to ``N <= 3`` and depth ``<= 12``.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

from .errors import ValidationError

MAX_EXACT_N = 3
MAX_EXACT_DEPTH = 12


def q(x) -> Fraction:
    """Rational value of a decimal (via its shortest ``repr``)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def qmatrix(M):
    return [[q(x) for x in row] for row in M]


def _check_n(N):
    if N > MAX_EXACT_N:
        raise ValidationError(f"exact mode supports N <= {MAX_EXACT_N}, got {N}")


def _check_depth(d):
    if d > MAX_EXACT_DEPTH:
        raise ValidationError(f"exact mode supports depth <= {MAX_EXACT_DEPTH}, got {d}")


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def identity(N):
    return [[Fraction(int(i == j)) for j in range(N)] for i in range(N)]


def perron_left(T):
    """Solve ``lam T = lam``, ``sum lam = 1`` by Gaussian elimination over the rationals."""
    T = qmatrix(T)
    N = len(T)
    _check_n(N)
    # equations: sum_i lam_i (T_ij - delta_ij) = 0 for j < N-1, and sum_i lam_i = 1
    A = [[T[i][j] - (i == j) for i in range(N)] for j in range(N - 1)]
    A.append([Fraction(1)] * N)
    b = [Fraction(0)] * (N - 1) + [Fraction(1)]
    for c in range(N):
        piv = next(r for r in range(c, N) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        b[c], b[piv] = b[piv], b[c]
        for r in range(N):
            if r != c and A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
                b[r] -= f * b[c]
    return [b[i] / A[i][i] for i in range(N)]


def coefficient(rec: dict, n: int) -> Fraction:
    fam = rec["family"]
    if fam == "geometric":
        return q(rec["r"]) ** n
    p = rec["p"]
    if float(p) != int(p):
        raise ValidationError("exact mode needs integer power exponents")
    c = Fraction(1, n ** int(p))
    if fam == "signed_power":
        return c if n % 2 == 0 else -c
    if fam == "power":
        return c
    raise ValidationError(f"unknown coefficient family {fam!r}")


def matrices(rec: dict, stop: int):
    """Exact ``T(1), ..., T(stop - 1)`` for a sequence record."""
    _check_depth(stop - 1)
    kind = rec["kind"]
    out = []
    for n in range(1, stop):
        if kind == "constant":
            out.append(qmatrix(rec["matrix"]))
        elif kind == "eventually_constant":
            head = rec["head"]
            out.append(qmatrix(head[n - 1] if n <= len(head) else rec["tail"]))
        elif kind == "perturbation":
            L, D = qmatrix(rec["limit"]), qmatrix(rec["direction"])
            c = coefficient(rec["coefficients"], n)
            out.append([[L[i][j] + c * D[i][j] for j in range(len(L))] for i in range(len(L))])
        elif kind == "explicit":
            mats = rec["matrices"]
            if n > len(mats):
                raise ValidationError("exact evaluation beyond the listed horizon")
            out.append(qmatrix(mats[n - 1]))
        else:
            raise ValidationError(f"unknown sequence kind {kind!r}")
    if out:
        _check_n(len(out[0]))
    return out


def product_exact(mats):
    P = identity(len(mats[0]))
    for T in mats:
        P = matmul(P, T)
    return P


def cylinder_mass(lam, mats, word) -> Fraction:
    """``lam[i1] T(1)[i1, i2] ... T(n-1)[i(n-1), in]``."""
    if not word:
        return Fraction(1)
    _check_depth(len(word))
    m = q(lam[word[0]])
    for k in range(len(word) - 1):
        m *= mats[k][word[k]][word[k + 1]]
    return m


def mass_table(lam, mats, k):
    N = len(lam)
    _check_n(N)
    return [cylinder_mass(lam, mats, w) for w in product(range(N), repeat=k)]


def consistency_defect(lam, mats, depth) -> Fraction:
    """``max |sum_j mass(Ij) - mass(I)|`` over ``|I| < depth`` (zero when consistent)."""
    N = len(lam)
    worst = Fraction(0)
    for k in range(depth):
        for w in product(range(N), repeat=k):
            s = sum(cylinder_mass(lam, mats, w + (j,)) for j in range(N))
            worst = max(worst, abs(s - cylinder_mass(lam, mats, w)))
    return worst


def stationary_entry_squared(T, i, word) -> Fraction:
    """Square of ``<e_{iI}, S_i e_I>`` for the stationary measure of ``T``.

    Equals ``lam[I1] / (lam[i] T[i, I1]) * mass(iI) / mass(I)``.
    """
    T = qmatrix(T)
    lam = perron_left(T)
    mats = [T] * (len(word) + 1)
    pref = lam[word[0]] / (lam[i] * T[i][word[0]])
    return pref * cylinder_mass(lam, mats, (i,) + tuple(word)) / cylinder_mass(lam, mats, tuple(word))
