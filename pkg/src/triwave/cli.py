"""
Command-line entry point: ``triwave {solve,sweep,verify,oracle}``.

Exit codes: 0 success; 1 configuration or input error; 2 a solve did not
converge; 3 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fieldio
from .analysis import harmonic_oracle_cases, inequality_sweep, oracle_harmonic, run_oracle_case
from .config import RunConfig, load_config
from .exceptions import ConfigurationError, InputError, TriwaveError
from .gnconst import load_gn_table
from .grid import FD_DIRICHLET, GridSpec, build_grid
from .model import ModelParams, sample_potential
from .solver import continuation_in_beta, minimize, verify_theorem

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_VERIFY = 0, 1, 2, 3
SUITES = ("gn", "coercivity", "symmetrize", "decomposition", "oracles")
SWEEP_COLUMNS = ["a", "b", "c", "beta", "p", "m", "lambda1", "lambda2", "lambda3",
                 "iterations", "converged"]

log = logging.getLogger("triwave")


def _fmt(x):
    return repr(float(x))


def build_potential(cfg: RunConfig, grid):
    pot = cfg.potential
    weights = pot.get("weights")
    if weights is not None and len(weights) == 3 * grid.dimension:
        weights = np.reshape(weights, (3, grid.dimension))
    return sample_potential(pot["kind"], grid, offsets=pot.get("offsets"), weights=weights,
                            path=pot.get("path"))


def _out_dir(cfg: RunConfig, override):
    out = Path(override or cfg.outputs.dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------------
# solve

def cmd_solve(cfg: RunConfig, out=None):
    out = _out_dir(cfg, out)
    grid = build_grid(cfg.grid)
    pot = build_potential(cfg, grid)
    rows = []
    every = cfg.solver.checkpoint_every

    def record(it, t, e, res, lam):
        if cfg.outputs.history:
            rows.append([it, _fmt(e)] + [_fmt(r) for r in res] + [_fmt(x) for x in lam])
        if every and it and it % every == 0:
            fieldio.write_fields(out / "checkpoint.bin", grid.spec, t.data)

    t0 = time.perf_counter()
    res = minimize(None, pot, cfg.model, cfg.solver, callback=record)
    elapsed = time.perf_counter() - t0
    rep = verify_theorem(res, pot, cfg.model, residual_tol=cfg.verify["residual_tol"],
                         mass_tol=cfg.verify["mass_tol"])

    summary = res.summary()
    summary.update(seconds=elapsed, verified=rep.passed, config=cfg.as_dict())
    _write_json(out / "result.json", summary)
    if cfg.outputs.history:
        with open(out / "history.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "energy", "r1", "r2", "r3", "lambda1", "lambda2", "lambda3"])
            w.writerows(rows)
    if cfg.outputs.fields:
        fieldio.write_fields(out / "fields.bin", grid.spec, res.minimizer.data)
    if cfg.outputs.report:
        _write_json(out / "report.json", rep.as_dict())

    print(f"energy {res.energy:.12g}  lambda {', '.join(f'{x:.9g}' for x in res.multipliers)}  "
          f"iterations {res.iterations}  {res.message}")
    if not res.converged:
        print(f"not converged: {res.message}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    if not rep.passed:
        print(f"verification failed: {', '.join(rep.failures)}", file=sys.stderr)
        return EXIT_VERIFY
    print("verified: " + ", ".join(rep.checks))
    return EXIT_OK


# ----------------------------------------------------------------------
# sweep

def _sweep_row(prm: ModelParams, res):
    return [_fmt(prm.masses[0]), _fmt(prm.masses[1]), _fmt(prm.masses[2]), _fmt(prm.beta),
            _fmt(prm.p), _fmt(res.energy)] + [_fmt(x) for x in res.multipliers] + \
        [str(res.iterations), str(bool(res.converged)).lower()]


def _solve_point(cfg: RunConfig, prm: ModelParams):
    grid = build_grid(cfg.grid)
    return minimize(None, build_potential(cfg, grid), prm, cfg.solver)


def cmd_sweep(cfg: RunConfig, betas=None, masses=None, out=None, jobs=1):
    if betas is None and masses is None:
        betas, masses = cfg.sweep.get("betas"), cfg.sweep.get("masses")
    if betas is not None and masses is not None:
        raise ConfigurationError("give either a beta list or a mass grid, not both")
    points = betas if betas is not None else masses
    if not points:
        raise ConfigurationError("sweep needs a nonempty beta list or mass grid",
                                 key="sweep.betas")
    out = _out_dir(cfg, out)
    grid = build_grid(cfg.grid)

    if betas is not None:
        params = [replace(cfg.model, beta=float(b)) for b in betas]
        results = continuation_in_beta(build_potential(cfg, grid), cfg.model, betas, cfg.solver)
    else:
        params = [replace(cfg.model, masses=tuple(m)) for m in masses]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(_solve_point, [cfg] * len(params), params))
        else:
            results = [_solve_point(cfg, prm) for prm in params]

    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for i, (prm, res) in enumerate(zip(params, results)):
            w.writerow(_sweep_row(prm, res))
            if cfg.outputs.fields:
                fieldio.write_fields(out / f"fields_{i:03d}.bin", grid.spec, res.minimizer.data)
    for prm, res in zip(params, results):
        print(f"masses {prm.masses} beta {prm.beta:g}: m = {res.energy:.12g} "
              f"({'converged' if res.converged else res.message})")
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOT_CONVERGED


# ----------------------------------------------------------------------
# verify

def _suite_setup(suite, cfg: RunConfig | None):
    """Grid, model and potential for a sweep suite."""
    if cfg is not None:
        spec = cfg.grid
        if suite == "symmetrize":
            spec = replace(spec, discretization=FD_DIRICHLET)
        grid = build_grid(spec)
        return grid, cfg.model, build_potential(cfg, grid)
    disc = FD_DIRICHLET if suite == "symmetrize" else "spectral_periodic"
    grid = build_grid(GridSpec(dimension=3, half_width=8.0, points=24, discretization=disc))
    prm = ModelParams(mu=1.0, beta=1.0, p=2.5, masses=1.0)
    return grid, prm, sample_potential("shifted_harmonic", grid, offsets=(0.0, -1.0, -2.0))


def run_suite(suite, cfg=None, trials=None, seed=0, constants=None):
    """Run one verify suite; returns (passed, verdict line, JSON-able report)."""
    if suite == "oracles":
        reports, ok = [], True
        for case, grid in harmonic_oracle_cases():
            passed, res, err = run_oracle_case(case, grid)
            ok &= passed
            reports.append({"name": case.name, "expected": case.expected_energy,
                            "energy": res.energy, "error": err, "tolerance": case.tolerance,
                            "multipliers": list(res.multipliers), "passed": passed})
        worst = max(r["error"] / r["tolerance"] for r in reports)
        line = (f"oracles: {'PASS' if ok else 'FAIL'} cases={len(reports)} "
                f"worst_error_over_tolerance={worst:.3g}")
        return ok, line, {"name": "oracles", "cases": reports}
    name = "energy_decomposition" if suite == "decomposition" else suite
    if trials is None:
        trials = 100 if name == "energy_decomposition" else 1000
    grid, prm, pot = _suite_setup(suite, cfg)
    table = load_gn_table(constants)
    rep = inequality_sweep(name, trials, seed, grid, prm, pot, table=table)
    line = (f"{suite}: {'PASS' if rep.passed else 'FAIL'} trials={rep.trials} "
            f"violations={rep.violations} worst_margin={rep.worst_margin:.3e}")
    return rep.passed, line, rep.as_dict()


def cmd_verify(suite="all", cfg=None, trials=None, seed=0, constants=None, out=None, jobs=1):
    if suite != "all" and suite not in SUITES:
        raise ConfigurationError(f"unknown suite {suite!r}; expected all or one of "
                                 f"{', '.join(SUITES)}")
    suites = SUITES if suite == "all" else (suite,)
    args = [(s, cfg, trials, seed, constants) for s in suites]
    if jobs > 1 and len(suites) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outcomes = list(ex.map(run_suite, *zip(*args)))
    else:
        outcomes = [run_suite(*a) for a in args]
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
    for s, (ok, line, rep) in zip(suites, outcomes):
        print(line)
        if out is not None:
            _write_json(out / f"report_{s}.json", rep)
    return EXIT_OK if all(ok for ok, _, _ in outcomes) else EXIT_VERIFY


# ----------------------------------------------------------------------
# oracle

def cmd_oracle(cfg=None, out=None):
    if cfg is None:
        cases = harmonic_oracle_cases()
    else:
        if cfg.potential["kind"] != "harmonic" or cfg.potential.get("offsets"):
            raise ConfigurationError("the oracle needs potential.kind = harmonic without offsets",
                                     key="potential.kind")
        grid = build_grid(cfg.grid)
        cases = [(oracle_harmonic(cfg.model, grid), grid)]
    ok_all, rows = True, []
    for case, grid in cases:
        ok, res, err = run_oracle_case(case, grid, cfg.solver if cfg else None)
        ok_all &= ok
        rows.append({"name": case.name, "expected_energy": case.expected_energy,
                     "energy": res.energy, "error": err, "tolerance": case.tolerance,
                     "expected_multipliers": list(case.expected_multipliers),
                     "multipliers": list(res.multipliers), "converged": res.converged,
                     "provenance": case.provenance, "passed": ok})
        print(f"{case.name}: {'PASS' if ok else 'FAIL'} energy {res.energy:.12g} "
              f"(expected {case.expected_energy:g}, error {err:.2e}, tol {case.tolerance:.1e})")
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "oracle.json", rows)
    return EXIT_OK if ok_all else EXIT_VERIFY


# ----------------------------------------------------------------------

def _float_list(text):
    text = text.strip()
    return [float(x) for x in text.split(",")] if text else []


def _triple_list(text):
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        vals = [float(x) for x in chunk.split(",")]
        if len(vals) != 3:
            raise argparse.ArgumentTypeError(f"mass triple needs 3 values: {chunk!r}")
        out.append(tuple(vals))
    return out


def build_parser():
    parser = argparse.ArgumentParser(prog="triwave", description=__doc__.strip().splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required):
        p.add_argument("--config", required=config_required, help="run config file")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--seed", type=int, help="random seed (overrides solver.seed)")

    p = sub.add_parser("solve", help="minimize J for one configuration")
    common(p, True)
    p = sub.add_parser("sweep", help="continuation in beta or a grid of masses")
    common(p, True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--betas", type=_float_list, help="comma-separated ascending betas")
    g.add_argument("--masses", type=_triple_list, help="mass triples 'a,b,c;a,b,c'")
    p = sub.add_parser("verify", help="inequality and oracle suites")
    p.add_argument("suite", nargs="?", default="all", help=f"all, {', '.join(SUITES)}")
    common(p, False)
    p.add_argument("--trials", type=int, help="trials per sweep suite")
    p.add_argument("--constants", help="GN constant table (default: shipped table)")
    p = sub.add_parser("oracle", help="harmonic-oscillator closed-form checks")
    common(p, False)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else None
        if cfg is not None and args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.jobs < 1:
            raise ConfigurationError("--jobs must be >= 1")
        if args.command == "solve":
            return cmd_solve(cfg, args.out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.betas, args.masses, args.out, args.jobs)
        if args.command == "verify":
            constants = args.constants or (cfg.verify.get("constants") if cfg else None)
            trials = args.trials or (cfg.verify.get("trials") if cfg else None)
            seed = args.seed if args.seed is not None else (cfg.solver.seed if cfg else 0)
            return cmd_verify(args.suite, cfg, trials, seed, constants, args.out, args.jobs)
        return cmd_oracle(cfg, args.out)
    except (ConfigurationError, InputError) as exc:
        print(f"triwave: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TriwaveError as exc:
        print(f"triwave: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
