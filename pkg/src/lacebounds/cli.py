"""Command-line front end: ``lacebounds {twopoint,diagrams,verify,sweep}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 a budget was exceeded (a partial report is still written).
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diagrams as dg
from . import oracle, verify
from .cache import Cache, canonical_json
from .connectivity import DEFAULT_PATH_LIMIT
from .errors import BudgetExceeded, ConfigError
from .kernels import DEFAULT_MEMORY_BUDGET
from .model import DEFAULT_BOND_LIMIT, ModelSpec, check_bond_budget, load_model

log = logging.getLogger("lacebounds")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


@dataclass
class RunConfig:
    model: Path
    command: str
    out: Path
    seed: int = 0
    bond_budget: int = DEFAULT_BOND_LIMIT
    path_budget: int = DEFAULT_PATH_LIMIT
    state_budget: int = oracle.DEFAULT_STATE_LIMIT
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    m_list: tuple[float, ...] = verify.DEFAULT_M_LIST
    ell_list: tuple[int, ...] = verify.DEFAULT_ELL_LIST
    N_max: int = 2
    p_grid: tuple[float, ...] = ()
    p: float | None = None
    force_recompute: bool = False
    cache_only: bool = False
    cache_dir: Path | None = None
    samples: int = 0
    skip_inclusions: bool = False

    def __post_init__(self):
        for name in ("bond_budget", "path_budget", "state_budget", "memory_budget"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name.replace('_', '-')} must be positive")
        if not self.m_list or any(m <= 0 for m in self.m_list):
            raise ConfigError("--m needs a non-empty list of positive values")
        if not self.ell_list or any(e not in (0, 1, 2) for e in self.ell_list):
            raise ConfigError("--ell values must be in {0, 1, 2}")
        if self.N_max < 0:
            raise ConfigError("--nmax must be >= 0")
        if self.samples < 0:
            raise ConfigError("--samples must be >= 0")

    def spec(self) -> ModelSpec:
        spec = load_model(self.model)
        if self.p is not None:
            spec = spec.with_p(self.p)
        return spec

    def cache(self) -> Cache:
        return Cache(self.cache_dir if self.cache_dir is not None else self.out / "cache")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lacebounds", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, type=Path, help="model file (key = value lines)")
    common.add_argument("--out", type=Path, default=Path("lacebounds-out"), help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--p", type=float, default=None, help="override p from the model file")
    common.add_argument("--bond-budget", type=int, default=DEFAULT_BOND_LIMIT)
    common.add_argument("--path-budget", type=int, default=DEFAULT_PATH_LIMIT)
    common.add_argument("--state-budget", type=int, default=oracle.DEFAULT_STATE_LIMIT)
    common.add_argument("--memory-budget", type=int, default=DEFAULT_MEMORY_BUDGET,
                        help="bytes allowed for one dense pair kernel")
    common.add_argument("--m", type=_floats, default=verify.DEFAULT_M_LIST, help="comma-separated m values")
    common.add_argument("--ell", type=_ints, default=verify.DEFAULT_ELL_LIST)
    common.add_argument("--nmax", type=int, default=2)
    common.add_argument("--force-recompute", action="store_true", help="ignore cached tables")
    common.add_argument("--cache-dir", type=Path, default=None, help="default: OUT/cache")
    common.add_argument("-v", "--verbose", action="count", default=0)

    tp = sub.add_parser("twopoint", parents=[common], help="two-point function table (CSV)")
    tp.add_argument("--samples", type=int, default=0, help="also write a Monte Carlo table")
    dp = sub.add_parser("diagrams", parents=[common], help="diagram values per m (JSON)")
    dp.add_argument("--cache-only", action="store_true", help="fail instead of computing phi")
    vp = sub.add_parser("verify", parents=[common], help="run every check family")
    vp.add_argument("--skip-inclusions", action="store_true")
    sp = sub.add_parser("sweep", parents=[common], help="diagrams and margins over a p grid (CSV)")
    sp.add_argument("--p-grid", type=_floats, required=True)
    return ap


def _config(args) -> RunConfig:
    return RunConfig(
        model=args.model, command=args.command, out=args.out, seed=args.seed,
        bond_budget=args.bond_budget, path_budget=args.path_budget, state_budget=args.state_budget,
        memory_budget=args.memory_budget,
        m_list=tuple(args.m), ell_list=tuple(args.ell), N_max=args.nmax,
        p_grid=tuple(getattr(args, "p_grid", ()) or ()), p=args.p,
        force_recompute=args.force_recompute, cache_only=getattr(args, "cache_only", False),
        cache_dir=args.cache_dir, samples=getattr(args, "samples", 0),
        skip_inclusions=getattr(args, "skip_inclusions", False),
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _table_csv(spec: ModelSpec, table: oracle.TwoPointTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    dcols = [f"dsigma{i + 1}" for i in range(spec.d)] if spec.d > 1 else ["dsigma"]
    w.writerow(dcols + ["dtau", "value"] + (["stderr"] if table.stderr is not None else []))
    for idx in np.ndindex(*table.values.shape):
        row = [*idx[1:], idx[0], _fmt(table.values[idx])]
        if table.stderr is not None:
            row.append(_fmt(table.stderr[idx]))
        w.writerow(row)
    return buf.getvalue()


def _phi(cfg: RunConfig, spec: ModelSpec, compute: bool = True) -> oracle.TwoPointTable:
    cache = cfg.cache()
    try:
        table, hit = oracle.cached_two_point(spec, cache, "transfer", cfg.force_recompute, compute,
                                             state_limit=cfg.state_budget)
    except BudgetExceeded:
        check_bond_budget(spec, cfg.bond_budget)
        table, hit = oracle.cached_two_point(spec, cache, "enumeration", cfg.force_recompute, compute,
                                             bond_limit=cfg.bond_budget)
    log.info("two-point table %s (%s)", "loaded from cache" if hit else "computed", table.method)
    return table


# -- commands ----------------------------------------------------------------

def cmd_twopoint(cfg: RunConfig) -> int:
    spec = cfg.spec()
    table = _phi(cfg, spec)
    if table.method == "transfer" and spec.n_bonds <= cfg.bond_budget:
        enum = oracle.two_point_enumeration(spec, cfg.bond_budget)
        diff = float(np.max(np.abs(enum.values - table.values)))
        log.info("enumeration cross-check: max |difference| = %r", diff)
        if diff > 1e-12:
            log.error("transfer and enumeration tables disagree")
            return EXIT_FAIL
    _write(cfg.out / "twopoint.csv", _table_csv(spec, table))
    if cfg.samples:
        mc = oracle.two_point_mc(spec, cfg.samples, cfg.seed)
        _write(cfg.out / "twopoint_mc.csv", _table_csv(spec, mc))
    return EXIT_OK


def cmd_diagrams(cfg: RunConfig) -> int:
    spec = cfg.spec()
    cache = cfg.cache()
    keys = [f"{spec.model_hash()}-m{float(m)!r}" for m in cfg.m_list]
    docs = [None if cfg.force_recompute else cache.load("diagrams", k) for k in keys]
    if any(d is None for d in docs):
        try:
            phi = _phi(cfg, spec, compute=not cfg.cache_only)
        except LookupError as exc:
            log.error("%s (--cache-only)", exc)
            return EXIT_CONFIG
        lines = dg.Lines(spec, phi)
        for i, (m, key) in enumerate(zip(cfg.m_list, keys)):
            if docs[i] is None:
                docs[i] = dg.compute_diagrams(spec, phi, m, lines).to_dict()
                cache.store("diagrams", key, docs[i])
    doc = {"model": spec.to_dict(), "diagrams": docs}
    _write(cfg.out / "diagrams.json", canonical_json(doc) + "\n")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    spec = cfg.spec()
    phi = None
    try:
        phi = _phi(cfg, spec)
    except BudgetExceeded as exc:
        log.warning("two-point function unavailable: %s", exc)
    rep = verify.run_all(spec, cfg.N_max, cfg.m_list, cfg.ell_list, path_limit=cfg.path_budget,
                         bond_limit=cfg.bond_budget, seed=cfg.seed, phi=phi,
                         inclusions=not cfg.skip_inclusions, memory_budget=cfg.memory_budget)
    _write(cfg.out / "report.json", rep.to_json())
    _write(cfg.out / "report.txt", rep.to_table())
    _write(cfg.out / "timings.json", canonical_json(rep.timings) + "\n")
    for f in rep.failures():
        log.warning("FAIL %s %s lhs=%r rhs=%r", f.check, f.params, f.lhs, f.rhs)
    if rep.skipped:
        return EXIT_BUDGET
    return EXIT_OK if rep.n_failures == 0 else EXIT_FAIL


def _min_slack(results) -> float:
    """Smallest relative slack ``(rhs - lhs) / rhs`` over inequalities with ``rhs > 0``."""
    vals = [(r.rhs - r.lhs) / r.rhs for r in results if r.kind == "inequality" and r.rhs > 0]
    return min(vals, default=0.0)


SWEEP_DIAGRAMS = ("T", "T_tilde", "S", "H", "W_max")


def cmd_sweep(cfg: RunConfig) -> int:
    base = cfg.spec()
    grid: list[float] = []
    for p in cfg.p_grid:
        if p in grid:
            log.warning("duplicate p=%r in --p-grid ignored", p)
        else:
            grid.append(p)
    if not grid:
        raise ConfigError("--p-grid is empty")
    rows, prev, monotone = [], None, True
    m = 1.0
    for p in sorted(grid):
        spec = base.with_p(p)
        phi = _phi(cfg, spec)
        d = dg.compute_diagrams(spec, phi, m)
        vals = {"T": d.T, "T_tilde": d.T_tilde, "S": d.S, "H": d.H, "W_max": max(d.W.values())}
        ok = prev is None or all(vals[k] >= prev[k] - 1e-12 * max(1.0, abs(prev[k])) for k in vals)
        monotone &= ok
        prev = vals
        rep = verify.check_lemma1(spec, cfg.N_max, phi, bond_limit=cfg.bond_budget,
                                  memory_budget=cfg.memory_budget)
        m1 = _min_slack(rep.results)
        rep2 = verify.check_lemma2(spec, cfg.N_max, cfg.m_list, cfg.ell_list, phi,
                                   bond_limit=cfg.bond_budget)
        m2 = _min_slack(rep2.results)
        rows.append([_fmt(p)] + [_fmt(vals[k]) for k in SWEEP_DIAGRAMS]
                    + [_fmt(m1), _fmt(m2), str(ok).lower()])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", *SWEEP_DIAGRAMS, "min_slack_lemma1", "min_slack_lemma2", "monotone"])
    w.writerows(rows)
    _write(cfg.out / "sweep.csv", buf.getvalue())
    if not monotone:
        log.error("diagram values are not nondecreasing in p")
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {"twopoint": cmd_twopoint, "diagrams": cmd_diagrams, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        log.error("budget exceeded: %s", exc)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
