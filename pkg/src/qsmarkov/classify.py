"""Equivalence versus mutual singularity of two quasi-stationary Markov measures.

Two such measures are either equivalent or mutually singular, and their
representations are correspondingly unitarily equivalent or disjoint.  The
decision here is certified from closed-form data carried by the sequences:

* **SummableDifference** -- same limit matrix and finite ``sum_n |T(n) - T_inf|``
  for both sides, hence ``sum_n max|T(n) - T'(n)| < inf``: equivalent.
* **PerTermHellingerFloor** -- the limit matrices differ in some row ``i``.
  Per-step Hellinger gaps in that row converge to the limit gap, so from some
  ``n0`` on they stay above a positive floor; the row is visited infinitely
  often (every entry is at least ``c``), so the Kakutani sums diverge: singular.
* otherwise **Undecided**, with sampled Kakutani sums attached as advice.

The initial distributions never enter: they only rescale likelihood ratios by
a bounded constant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .density import PairEngine, hellinger_gap
from .errors import QSMarkovError
from .measure import MarkovMeasure, require_certificate, sample_path_array, stationary_limit_measure

SAMPLE_LENGTH = 200
SAMPLE_COUNT = 1000
SAMPLE_SEED = 0
MAX_N0 = 1 << 40


class Status(enum.Enum):
    EQUIVALENT = "Equivalent"
    SINGULAR = "Singular"
    UNDECIDED = "Undecided"
    NOT_APPLICABLE = "NotApplicable"


class Certificate(enum.Enum):
    SUMMABLE_DIFFERENCE = "SummableDifference"
    PER_TERM_HELLINGER_FLOOR = "PerTermHellingerFloor"
    SAMPLED_KAKUTANI = "SampledKakutani"
    STATIONARY_REDUCTION = "StationaryReduction"


@dataclass
class DichotomyVerdict:
    status: Status
    certificate: Certificate | None
    bound: float | None = None
    floor: float | None = None
    n0: int | None = None
    rows: tuple = ()
    detail: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def decided(self) -> bool:
        return self.status in (Status.EQUIVALENT, Status.SINGULAR)

    def to_record(self) -> dict:
        return {
            "status": self.status.value,
            "certificate": self.certificate.value if self.certificate else None,
            "bound": self.bound,
            "floor": self.floor,
            "n0": self.n0,
            "rows": list(self.rows),
            "detail": self.detail,
            "representations": representation_verdict(self),
            "diagnostics": self.diagnostics,
        }


def representation_verdict(v: DichotomyVerdict) -> str:
    return {
        Status.EQUIVALENT: "representations unitarily equivalent",
        Status.SINGULAR: "representations disjoint",
    }.get(v.status, "undecided")


# ---------------------------------------------------------------------------


def _row_distance_bound(seq, n) -> float:
    """Bound on the Hellinger distance between rows of ``T(n)`` and ``T_inf``.

    ``(sqrt p - sqrt q)^2 <= (p - q)^2 / (4c)`` and ``|T(n) - T_inf| <= B(n)``
    entrywise, so ``sqrt(h) <= B(n) sqrt(N / (8c))``.
    """
    return seq.tail_bound(n) * math.sqrt(seq.n_symbols / (8.0 * seq.entry_floor))


def hellinger_floor(a: MarkovMeasure, b: MarkovMeasure):
    """Certified ``(floor, n0, rows)`` for pairs with different limit rows, else ``None``.

    ``floor`` bounds ``hellinger_term(i, n)`` from below for every ``n >= n0``
    in the row of largest limit gap, and is at least half that gap.
    """
    gaps = hellinger_gap(a.seq.limit, b.seq.limit)
    i = int(np.argmax(gaps))
    h = float(gaps[i])
    if not h > 0:
        return None
    target = math.sqrt(h / 2.0)
    root = math.sqrt(h)
    slack = lambda n: _row_distance_bound(a.seq, n) + _row_distance_bound(b.seq, n)
    n0 = 1
    while root - slack(n0) < target:
        n0 *= 2
        if n0 > MAX_N0:
            return None
    if n0 > 1:  # smallest admissible n0 (the slack is non-increasing)
        lo, hi = n0 // 2, n0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if root - slack(mid) >= target:
                hi = mid
            else:
                lo = mid
        n0 = hi
    floor = (root - slack(n0)) ** 2
    rows = tuple(int(k) for k in np.flatnonzero(gaps > 0))
    return floor, n0, rows, gaps


def sampled_kakutani(a: MarkovMeasure, b: MarkovMeasure, length=SAMPLE_LENGTH, count=SAMPLE_COUNT,
                     seed=SAMPLE_SEED, thresholds=(1.0, 5.0)) -> dict:
    """Statistics of Kakutani partial sums along paths sampled from ``b``."""
    paths, _ = sample_path_array(b, length, count, seed)
    sums = PairEngine(a, b).kakutani_sums_batch(paths)
    final = sums[:, -1]
    half = sums[:, length // 2 - 1]
    out = {
        "length": length,
        "count": count,
        "seed": seed,
        "mean": float(final.mean()),
        "quantiles": {f"{q:g}": float(np.quantile(final, q)) for q in (0.01, 0.5, 0.99)},
        "mean_second_half_increment": float((final - half).mean()),
    }
    for t in thresholds:
        out[f"fraction_above_{t:g}"] = float(np.mean(final > t))
    return out


def classify_pair(a: MarkovMeasure, b: MarkovMeasure, *, sample_length=SAMPLE_LENGTH,
                  sample_count=SAMPLE_COUNT, seed=SAMPLE_SEED) -> DichotomyVerdict:
    """Decide equivalence or singularity of ``a`` and ``b`` from certificates.

    Raises
    ------
    NotQuasiStationary, MissingTailCertificate
        when either side lacks a quasi-stationarity certificate.
    """
    require_certificate(a, "a")
    require_certificate(b, "b")
    if a.seq.same_as(b.seq):
        return DichotomyVerdict(Status.EQUIVALENT, Certificate.SUMMABLE_DIFFERENCE, bound=0.0,
                                detail="identical matrix sequences")

    La, Lb = a.seq.limit, b.seq.limit
    if np.array_equal(La, Lb):
        da, db = a.seq.distance_sum(), b.seq.distance_sum()
        if da is not None and db is not None and math.isfinite(da + db):
            return DichotomyVerdict(
                Status.EQUIVALENT, Certificate.SUMMABLE_DIFFERENCE, bound=float(da + db),
                detail="same limit; sum_n max|T(n) - T'(n)| <= sum|T(n) - T_inf| + sum|T'(n) - T_inf|",
            )
    else:
        cert = hellinger_floor(a, b)
        if cert is not None:
            floor, n0, rows, gaps = cert
            return DichotomyVerdict(
                Status.SINGULAR, Certificate.PER_TERM_HELLINGER_FLOOR, floor=float(floor), n0=n0, rows=rows,
                detail="limit matrices differ; per-step Hellinger terms stay above the floor from n0 on",
                diagnostics={"limit_gaps": [float(g) for g in gaps]},
            )

    diag = sampled_kakutani(a, b, sample_length, sample_count, seed)
    return DichotomyVerdict(Status.UNDECIDED, Certificate.SAMPLED_KAKUTANI,
                            detail="no closed-form certificate; sampled sums are advisory", diagnostics=diag)


def stationary_equivalent(m: MarkovMeasure) -> DichotomyVerdict:
    """Equivalence with the stationary measure of the limit matrix.

    Requires ``sum_n n max|T(n) - T(n+1)| < inf``; the reported bound is that
    sum, which dominates ``sum_n max|T(n) - T_inf|``.  Anything else
    (including non-quasi-stationary input) yields ``NOT_APPLICABLE``.
    """
    try:
        require_certificate(m)
    except QSMarkovError as exc:
        return DichotomyVerdict(Status.NOT_APPLICABLE, None, detail=str(exc))
    w = m.seq.weighted_diff_sum()
    if w is None or not math.isfinite(w):
        return DichotomyVerdict(Status.NOT_APPLICABLE, None,
                                detail="no finite bound on sum_n n max|T(n) - T(n+1)|")
    return DichotomyVerdict(Status.EQUIVALENT, Certificate.STATIONARY_REDUCTION, bound=float(w),
                            detail="equivalent to the stationary measure of the limit matrix",
                            diagnostics={"limit_measure": stationary_limit_measure(m).to_record()})
