"""Acceptance criteria 1-10, each at its stated tolerance.

Every criterion records one ``PASS``/``FAIL`` line; the lines are printed in
the terminal summary (see ``conftest.py``) and by running this file directly.
"""

import itertools
import time

import numpy as np

from qsmarkov import families
from qsmarkov.classify import Certificate, Status, classify_pair, stationary_equivalent
from qsmarkov.cuntzrep import check_cuntz_relations, monic_cyclicity_check, norm_identity_residual, pvm_algebra_check
from qsmarkov.density import (
    DensityEngine,
    PairEngine,
    change_of_variables,
    martingale_residual_exhaustive,
    martingale_residual_sampled,
    sum_formula_residual,
)
from qsmarkov.matseq import product_limit_check
from qsmarkov.measure import (
    MarkovMeasure,
    QSStatus,
    consistency_check,
    cylinder_mass,
    is_quasi_stationary,
    mixing_correlation,
    mixing_correlation_bruteforce,
    stationary_limit_measure,
)
from qsmarkov.symbolic import Word, enumerate_words

RESULTS = {}

M = families.measure
TWO_SYMBOL = ("constant", "eventually_constant", "geometric", "power", "uniform", "skewed")
STATIONARY = ("constant", "uniform", "skewed", "constant3")
ALL_QS = TWO_SYMBOL + ("constant3",)


def record(k, ok, detail):
    RESULTS[k] = (bool(ok), detail)
    assert ok, f"criterion {k}: {detail}"


def words_up_to(N, k):
    return [W for n in range(k + 1) for W in enumerate_words(N, n)]


def test_1_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240101)
    worst = 0.0
    kinds = []
    for s in range(20):
        kind = families.KINDS[s % len(families.KINDS)]
        N = 2 + (s // len(families.KINDS)) % 2
        m = MarkovMeasure.build(families.random_sequence(rng, N, kind))
        worst = max(worst, consistency_check(m, 7).max_abs_deviation)  # every |I| <= 6
        kinds.append((kind, N))
    dt = time.perf_counter() - t0
    covered = {(k, n) for k, n in kinds} == set(itertools.product(families.KINDS, (2, 3)))
    record(1, worst <= 1e-12 and dt < 5 and covered,
           f"max deviation {worst:.2e} (<= 1e-12) over 20 specs, all kinds x N in {{2,3}}: {covered}, {dt:.2f}s (< 5s)")


def test_2_criteria_agreement():
    disagreements = []
    expected = {name: QSStatus.QUASI_STATIONARY for name in families.QS_SUITE}
    expected.update({name: QSStatus.NOT_QUASI_STATIONARY for name in families.NOT_QS_SUITE})
    for name, want in expected.items():
        v = is_quasi_stationary(M(name))
        reading = "convergent" if want is QSStatus.QUASI_STATIONARY else "divergent"
        for crit in ("empirical_ratio", "empirical_diff"):
            if v.evidence[crit] != reading:
                disagreements.append(f"{name}:{crit}={v.evidence[crit]}")
        if v.status is not want:
            disagreements.append(f"{name}:status={v.status.value}")
    record(2, not disagreements, f"{len(disagreements)} disagreements {disagreements} over {len(expected)} families")


def test_3_product_limit():
    t0 = time.perf_counter()
    const = product_limit_check(families.constant(), 1, 1e-7, 51)
    geo = product_limit_check(families.geometric(), 1, 1e-7, 200)
    Q_ok = np.allclose(const.limit, [[4 / 7, 3 / 7]] * 2, atol=1e-15)
    dt = time.perf_counter() - t0
    record(3, const.converged and geo.converged and Q_ok and dt < 1,
           f"constant reaches 1e-7 at n={const.achieved_n} (<= 51), geometric at n={geo.achieved_n} (<= 200), "
           f"{dt:.3f}s (< 1s)")


def test_4_mixing():
    worst = brute = 0.0
    for name in ("constant", "geometric"):
        m = M(name)
        mu_inf = stationary_limit_measure(m)
        for I in words_up_to(2, 2):
            for J in words_up_to(2, 2):
                target = cylinder_mass(mu_inf, I) * cylinder_mass(m, J)
                worst = max(worst, abs(mixing_correlation(m, I, J, 100) - target))
                brute = max(brute, abs(mixing_correlation(m, I, J, 3) - mixing_correlation_bruteforce(m, I, J, 3)))
    record(4, worst <= 1e-6 and brute <= 1e-14,
           f"max gap at k=100 {worst:.2e} (<= 1e-6); formula vs brute force at k=3 {brute:.2e} (<= 1e-14)")


def test_5_density_identities():
    rng = np.random.default_rng(5)
    worst_sum = 0.0
    for name in ALL_QS:
        m = M(name)
        e = DensityEngine(m)
        L = e.depth + 2  # long enough for the full truncation depth
        for chunk in range(10):  # 10^3 prefixes in chunks of 100
            x = rng.integers(0, m.n_symbols, size=(100, L), dtype=np.int32)
            worst_sum = max(worst_sum, sum_formula_residual(e, x))
    pairs = [("uniform", "skewed"), ("constant", "geometric"), ("geometric", "power"),
             ("eventually_constant", "power"), ("power", "skewed")]
    worst_ex = worst_mc = 0.0
    for a, b in pairs:
        p = PairEngine(M(a), M(b))
        worst_ex = max(worst_ex, martingale_residual_exhaustive(p, 10))
        worst_mc = max(worst_mc, martingale_residual_sampled(p, 30, 1000, 5))
    record(5, worst_sum <= 1e-10 and worst_ex <= 1e-12 and worst_mc <= 1e-12,
           f"sum formula {worst_sum:.2e} (<= 1e-10, 1000 prefixes x {len(ALL_QS)} families); martingale "
           f"exhaustive n<=10 {worst_ex:.2e}, sampled n<=30 {worst_mc:.2e} (<= 1e-12)")


def test_6_change_of_variables():
    t0 = time.perf_counter()
    worst = 0.0
    n_cyl = 0
    for name in ALL_QS:
        rows = change_of_variables(M(name), 10**6, 6, depth=3)
        worst = max(worst, max(abs(r.z_score) for r in rows))
        n_cyl += len(rows)
    dt = time.perf_counter() - t0
    record(6, worst <= 3 and dt < 30,
           f"max |z| {worst:.2f} (<= 3) over {n_cyl} cylinder tests, 10^6 samples x {len(ALL_QS)} families, "
           f"{dt:.1f}s (< 30s)")


def test_7_classifier():
    a = all(classify_pair(M(n), M(n)).status is Status.EQUIVALENT for n in ALL_QS)
    v = classify_pair(M("uniform"), M("skewed"))
    b = v.status is Status.SINGULAR and abs(v.floor - 0.051317) <= 1e-6
    w = classify_pair(M("geometric"), M("constant"))
    c = w.status is Status.EQUIVALENT and w.certificate is Certificate.SUMMABLE_DIFFERENCE
    d = True
    for name in ("constant", "eventually_constant", "geometric", "power"):
        m = M(name)
        d &= stationary_equivalent(m).status is Status.EQUIVALENT
        d &= classify_pair(m, stationary_limit_measure(m)).status is not Status.SINGULAR
    record(7, a and b and c and d,
           f"(a) self-equivalence {a}; (b) Singular with floor {v.floor:.6f} {b}; (c) geometric vs limit "
           f"Equivalent (bound {w.bound:g}) {c}; (d) stationary route {d}")


def test_8_cuntz_relations():
    stat = 0.0
    for name in STATIONARY:
        for n in range(1, 9):
            r = check_cuntz_relations(M(name), n)
            stat = max(stat, r.residual_isometry, r.residual_sum)
    g = M("geometric")
    r10 = check_cuntz_relations(g, 6, 1e-10).residual
    r12 = check_cuntz_relations(g, 6, 1e-12).residual
    record(8, stat <= 1e-12 and r10 <= 1e-6 and r12 < r10,
           f"stationary N<=3, n<=8: {stat:.2e} (<= 1e-12); geometric n=6: {r10!r} at eps_F=1e-10 (<= 1e-6), "
           f"{r12!r} at 1e-12 (strictly smaller: {r12 < r10})")


def test_9_cyclicity():
    bad = []
    for name in TWO_SYMBOL:
        for n in range(1, 7):
            r = monic_cyclicity_check(M(name), n)
            if r.dimension != 2**n:
                bad.append((name, n, r.dimension))
    record(9, not bad, f"dimension 2^n for n <= 6 on {len(TWO_SYMBOL)} families; failures {bad}")


def test_10_pvm():
    rng = np.random.default_rng(10)
    worst = 0.0
    for name in ALL_QS:
        m = M(name)
        N = m.n_symbols
        for n in range(1, 7):
            if N**n > 4096:
                continue
            worst = max(worst, pvm_algebra_check(m, n).residual)
            for _ in range(5):
                x = rng.normal(size=N**n)
                x /= np.linalg.norm(x)
                k = int(rng.integers(0, n + 1))
                worst = max(worst, norm_identity_residual(m, x, rng.normal(size=N**k), k))
    record(10, worst <= 1e-12, f"max residual {worst:.2e} (<= 1e-12), levels 1..6, {len(ALL_QS)} families")


def summary_lines():
    lines = []
    for k in range(1, 11):
        if k in RESULTS:
            ok, detail = RESULTS[k]
            lines.append(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            lines.append(f"criterion {k:2d}: NOT RUN")
    return lines


if __name__ == "__main__":
    for name, fn in sorted((n, f) for n, f in globals().items() if n.startswith("test_")):
        try:
            fn()
        except AssertionError:
            pass
    print("\n".join(summary_lines()))
