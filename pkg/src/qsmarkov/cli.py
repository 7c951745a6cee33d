"""Command-line front end.

Usage::

    qsmarkov qs --family geometric
    qsmarkov classify --family uniform --family skewed
    qsmarkov rep-check --config exp.yaml --out results/

Every command prints a text report followed by a JSON block; with ``--out``
the report and CSV tables are also written to that directory.  Exit codes:
0 success, 1 no decision reached (undecided / not applicable / not
converged), 2 invalid input, 3 a numerical check exceeded its tolerance.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import classify as cls
from . import config as cfgmod
from . import cuntzrep, density, families, kernels
from .errors import ConfigError, QSMarkovError
from .matseq import limit_matrix, product_limit_check
from .measure import (
    QSStatus,
    consistency_check,
    cylinder_mass,
    is_quasi_stationary,
    mass_table,
    mixing_correlation,
    sample_paths,
    stationary_limit_measure,
)
from .symbolic import enumerate_words

EXIT_OK, EXIT_UNDECIDED, EXIT_INVALID, EXIT_CHECK_FAILED = 0, 1, 2, 3

DEFAULT_TOL = {
    "validate": 1e-12,
    "limit": 1e-7,
    "mixing": 1e-6,
    "rn-check": 1e-10,
    "rep-check": 1e-12,
}
MARTINGALE_TOL = 1e-12
Z_LIMIT = 3.0


@dataclasses.dataclass
class Report:
    command: str
    lines: list = dataclasses.field(default_factory=list)
    data: dict = dataclasses.field(default_factory=dict)
    tables: dict = dataclasses.field(default_factory=dict)  # name -> (header, rows)
    code: int = EXIT_OK

    def say(self, text=""):
        self.lines.append(text)

    def text(self) -> str:
        body = "\n".join(self.lines)
        return f"{body}\n--- json ---\n{to_json(self.data)}\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def to_json(data) -> str:
    return json.dumps(_plain(data), indent=2, sort_keys=True)


def _fmt(x) -> str:
    return f"{x:.6g}" if isinstance(x, (float, np.floating)) else str(x)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(cfg, rep: Report):
    P = cfg.params
    tol = P.tol or DEFAULT_TOL["validate"]
    ok = True
    for spec, m in zip(cfg.measures, cfg.built()):
        m.seq.check(P.probe_depth)
        cr = consistency_check(m, P.depth + 1, tol)
        ok &= cr.ok
        rep.say(f"{spec.name}: kind={m.seq.kind} N={m.n_symbols} lambda={np.round(m.lam, 12).tolist()}")
        rep.say(f"  consistency |I| <= {P.depth}: max deviation {cr.max_abs_deviation:.3g} (tol {tol:g}) "
                f"{'ok' if cr.ok else 'FAILED'}")
        rep.data[spec.name] = {"spec": m.to_record(), "consistency": dataclasses.asdict(cr), "ok": cr.ok}
        words = enumerate_words(m.n_symbols, P.depth)
        rep.tables[f"mass_{spec.name}"] = (["word", "mass"],
                                           [(str(w), repr(float(v))) for w, v in zip(words, mass_table(m, P.depth))])
    rep.code = EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_qs(cfg, rep: Report):
    undecided = False
    for spec, m in zip(cfg.measures, cfg.built()):
        v = is_quasi_stationary(m, cfg.params.probe_depth)
        undecided |= v.status is QSStatus.UNDECIDED
        rep.say(f"{spec.name}: {v.status.value} ({v.criterion}); partial sums to depth {v.probe_depth}: "
                f"ratio {_fmt(v.evidence['ratio_partial_sum'])}, diff {_fmt(v.evidence['diff_partial_sum'])}; "
                f"growth reading: {v.empirical}")
        rep.data[spec.name] = v.to_record()
    rep.code = EXIT_UNDECIDED if undecided else EXIT_OK


def cmd_limit(cfg, rep: Report):
    P = cfg.params
    tol = P.tol or DEFAULT_TOL["limit"]
    code = EXIT_OK
    for spec, m in zip(cfg.measures, cfg.built()):
        L = limit_matrix(m.seq)
        pl = product_limit_check(m.seq, P.p, tol, P.max_n)
        rep.say(f"{spec.name}: limit matrix {np.round(L, 12).tolist()}")
        if pl.converged:
            rep.say(f"  products from p={P.p} within {tol:g} of Q at n={pl.achieved_n} (error {pl.error:.3g})")
        else:
            rep.say(f"  not converged by n={P.max_n} (error {pl.error:.3g}, tol {tol:g})")
            code = EXIT_UNDECIDED
        rep.data[spec.name] = {"limit": L, "Q": pl.limit, "achieved_n": pl.achieved_n, "error": pl.error,
                               "p": P.p, "tol": tol, "max_n": P.max_n}
    rep.code = code


def _pair(cfg):
    if len(cfg.measures) != 2:
        raise ConfigError("this command needs exactly two measures")
    return cfg.built()


def cmd_classify(cfg, rep: Report):
    a, b = _pair(cfg)
    v = cls.classify_pair(a, b, sample_length=cfg.params.length if cfg.params.length >= 2 else 2,
                          sample_count=cfg.params.samples, seed=cfg.params.seed)
    names = " vs ".join(s.name for s in cfg.measures)
    rep.say(f"{names}: {v.status.value} ({v.certificate.value if v.certificate else '-'})")
    if v.bound is not None:
        rep.say(f"  bound on summed differences: {_fmt(v.bound)}")
    if v.floor is not None:
        rep.say(f"  per-step Hellinger floor {_fmt(v.floor)} for n >= {v.n0}, rows {list(v.rows)}")
    rep.say(f"  {cls.representation_verdict(v)}")
    rep.data["verdict"] = v.to_record()
    rep.code = EXIT_OK if v.decided else EXIT_UNDECIDED


def cmd_stationary(cfg, rep: Report):
    code = EXIT_OK
    for spec, m in zip(cfg.measures, cfg.built()):
        v = cls.stationary_equivalent(m)
        rep.say(f"{spec.name}: {v.status.value}" + (f" (bound {_fmt(v.bound)})" if v.bound is not None else "")
                + f"; {v.detail}")
        rep.data[spec.name] = v.to_record()
        if v.status is not cls.Status.EQUIVALENT:
            code = EXIT_UNDECIDED
    rep.code = code


def cmd_mixing(cfg, rep: Report):
    P = cfg.params
    tol = P.tol or DEFAULT_TOL["mixing"]
    code = EXIT_OK
    for spec, m in zip(cfg.measures, cfg.built()):
        mu_inf = stationary_limit_measure(m)
        words = [w for k in range(1, P.word_length + 1) for w in enumerate_words(m.n_symbols, k)]
        rows = []
        for k in P.k_values:
            err = max(abs(mixing_correlation(m, I, J, k) - cylinder_mass(mu_inf, I) * cylinder_mass(m, J))
                      for I in words for J in words)
            rows.append((k, err))
        last_k, last_err = rows[-1]
        ok = last_err <= tol
        rep.say(f"{spec.name}: max |mu(shift^-k C(I) & C(J)) - mu_inf(I) mu(J)| over |I|,|J| <= {P.word_length}")
        for k, err in rows:
            rep.say(f"  k={k:<5d} {err:.3e}")
        rep.say(f"  at k={last_k}: {'ok' if ok else 'FAILED'} (tol {tol:g})")
        rep.data[spec.name] = {"sweep": rows, "tol": tol, "ok": ok}
        rep.tables[f"mixing_{spec.name}"] = (["k", "max_error"], [(k, repr(float(e))) for k, e in rows])
        if not ok:
            code = EXIT_CHECK_FAILED
    rep.code = code


def cmd_rn_check(cfg, rep: Report):
    P = cfg.params
    tol = P.tol or DEFAULT_TOL["rn-check"]
    built = cfg.built()
    rng = np.random.default_rng(P.seed)
    ok_all = True
    for spec, m in zip(cfg.measures, built):
        e = density.DensityEngine(m, P.eps_F)
        N = m.n_symbols
        x = rng.integers(0, N, size=(P.samples, max(P.length, 2)), dtype=np.int32)
        sres = density.sum_formula_residual(e, x)
        other = built[1] if (len(built) == 2 and m is built[0]) else (built[0] if len(built) == 2 else
                                                                       stationary_limit_measure(m))
        pair = density.PairEngine(m, other, P.eps_F)
        mres = density.martingale_residual_exhaustive(pair, min(P.depth, 10))
        cov = density.change_of_variables(m, P.samples, P.seed, eps_F=P.mc_eps_F)
        zmax = max(abs(c.z_score) for c in cov)
        ok = sres <= tol and mres <= MARTINGALE_TOL and zmax <= Z_LIMIT
        ok_all &= ok
        rep.say(f"{spec.name}: F truncation depth {e.depth} (eps_F {P.eps_F:g})")
        rep.say(f"  sum formula residual {sres:.3g} (tol {tol:g})")
        rep.say(f"  pair martingale residual {mres:.3g} for n <= {min(P.depth, 10)} (tol {MARTINGALE_TOL:g})")
        rep.say(f"  change of variables, {P.samples} samples, eps_F {P.mc_eps_F:g}: max |z| {zmax:.3g} "
                f"(limit {Z_LIMIT:g})")
        rep.say(f"  {'ok' if ok else 'FAILED'}")
        rep.data[spec.name] = {
            "depth": e.depth, "eps_F": P.eps_F, "sum_formula_residual": sres, "martingale_residual": mres,
            "change_of_variables": [dataclasses.asdict(c) | {"z": c.z_score} for c in cov], "ok": ok,
        }
        rows = density.density_rows(e, x[:20])
        rep.tables[f"density_{spec.name}"] = (["prefix", "F", "error_bound"],
                                              [(p, repr(v), repr(b)) for p, v, b in rows])
    rep.code = EXIT_OK if ok_all else EXIT_CHECK_FAILED


def cmd_rep_check(cfg, rep: Report):
    P = cfg.params
    tol = P.tol or DEFAULT_TOL["rep-check"]
    n = max(P.level, 1)
    rng = np.random.default_rng(P.seed)
    ok_all = True
    for spec, m in zip(cfg.measures, cfg.built()):
        N = m.n_symbols
        cr = cuntzrep.check_cuntz_relations(m, n, P.eps_F)
        rep.say(f"{spec.name}: level {n}, eps_F {P.eps_F:g}")
        rep.say(f"  max|S_i* S_j - delta_ij I| = {cr.residual_isometry:.3g}, "
                f"max|sum S_i S_i* - I| = {cr.residual_sum:.3g}, truncation budget {cr.error_budget:.3g}, "
                f"certified bound {cr.bound:.3g}")
        ok = cr.within(tol)
        record = {"cuntz": dataclasses.asdict(cr)}
        if N ** (n + 1) <= cuntzrep.DENSE_CAP:
            cy = cuntzrep.monic_cyclicity_check(m, n, P.eps_F)
            rep.say(f"  span of S_I S_I* 1 over |I| <= {n}: dimension {cy.dimension} of {cy.target}")
            ok &= cy.ok
            record["cyclicity"] = {"dimension": cy.dimension, "target": cy.target}
            ops = cuntzrep.compressed_family(m, n, P.eps_F)
            for op in ops:
                dense = op.dense()
                rep.tables[f"S{op.symbol}_{spec.name}"] = (
                    [f"c{c}" for c in range(dense.shape[1])], [[repr(float(v)) for v in row] for row in dense])
        else:
            rep.say(f"  cyclicity skipped: level {n + 1} exceeds the dense cap")
        pv = cuntzrep.pvm_algebra_check(m, min(n, 6))
        x = rng.normal(size=N ** min(n, 6))
        x /= np.linalg.norm(x)
        k = min(2, min(n, 6))
        f = rng.normal(size=N**k)
        nres = cuntzrep.norm_identity_residual(m, x, f, k)
        rep.say(f"  PVM: multiplicativity {pv.multiplicativity:.3g}, resolution {pv.resolution:.3g}, "
                f"norm identity {nres:.3g}")
        ok &= max(pv.residual, nres) <= max(tol, 1e-12)
        record["pvm"] = {"multiplicativity": pv.multiplicativity, "resolution": pv.resolution,
                         "norm_identity": nres}
        record["tol"] = tol
        record["ok"] = ok
        rep.say(f"  {'ok' if ok else 'FAILED'} (tol {tol:g})")
        rep.data[spec.name] = record
        ok_all &= ok
    rep.code = EXIT_OK if ok_all else EXIT_CHECK_FAILED


def cmd_sample(cfg, rep: Report):
    P = cfg.params
    for spec, m in zip(cfg.measures, cfg.built()):
        paths = sample_paths(m, P.length, P.samples, P.seed)
        rep.say(f"{spec.name}: {len(paths)} paths of length {P.length}, seed {P.seed}")
        counts = np.bincount([p.prefix[0] for p in paths], minlength=m.n_symbols)
        rep.say(f"  first-symbol frequencies {np.round(counts / len(paths), 6).tolist()} vs lambda "
                f"{np.round(m.lam, 6).tolist()}")
        rep.data[spec.name] = {"count": len(paths), "length": P.length, "seed": P.seed,
                               "first_symbol_counts": counts}
        rep.tables[f"samples_{spec.name}"] = (["index", "path", "log_mass"],
                                              [(p.index, str(p.prefix), repr(p.log_mass)) for p in paths])


COMMANDS = {
    "validate": (cmd_validate, "validate specs and check Kolmogorov consistency"),
    "qs": (cmd_qs, "quasi-stationarity verdict"),
    "limit": (cmd_limit, "limit matrix and forward-product convergence"),
    "classify": (cmd_classify, "equivalence / singularity of two measures"),
    "stationary": (cmd_stationary, "equivalence with the stationary limit measure"),
    "mixing": (cmd_mixing, "mixing correlations over a sweep of k"),
    "rn-check": (cmd_rn_check, "density identities and Monte Carlo change of variables"),
    "rep-check": (cmd_rep_check, "Cuntz relations, cyclicity and PVM checks"),
    "sample": (cmd_sample, "sample paths to CSV"),
}


def run(command: str, cfg: cfgmod.ExperimentConfig) -> Report:
    """Run one command; the report carries the exit code."""
    func, _ = COMMANDS[command]
    rep = Report(command)
    rep.data["config"] = cfg.to_dict()
    rep.data["backend"] = kernels.BACKEND
    func(cfg, rep)
    rep.data["exit_code"] = rep.code
    return rep


def write_outputs(rep: Report, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{rep.command}_report.txt").write_text(rep.text())
    (out / f"{rep.command}_report.json").write_text(to_json(rep.data) + "\n")
    for name, (header, rows) in rep.tables.items():
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsmarkov", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="YAML experiment config")
        p.add_argument("--family", action="append", choices=sorted(families.FAMILIES),
                       help="built-in sequence (repeat for a pair); used when no config is given")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, help="directory for report and CSV files")
        p.add_argument("--tol", type=float)
        p.add_argument("--depth", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--level", type=int, help="level n for rep-check")
        p.add_argument("--length", type=int, help="path length for sample/classify")
        p.add_argument("--eps-f", dest="eps_F", type=float, help="target error on log F")
    return parser


def load_config(args) -> cfgmod.ExperimentConfig:
    if args.config is not None:
        data = cfgmod.load(args.config).to_dict()
    elif args.family:
        data = {"measures": [{"name": f, "family": f} for f in args.family]}
    else:
        raise ConfigError("give --config or at least one --family")
    params = data.setdefault("params", {})
    for key in ("seed", "tol", "depth", "samples", "level", "length", "eps_F"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    if args.out is not None:
        data["out"] = str(args.out)
    return cfgmod.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        rep = run(args.command, cfg)
    except QSMarkovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(rep.text())
    if cfg.out:
        write_outputs(rep, Path(cfg.out))
    return rep.code


if __name__ == "__main__":
    sys.exit(main())
