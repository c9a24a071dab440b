"""Command-line interface.

Commands
--------
sigma       exponential-moment boundary of the martingale limit, by inverse
            pgf iteration (needs a finite pgf radius above 1)
tau         tail-scale fit for bounded offspring support, with the
            tail-exponent shape check
classify    gauge-measure verdict for a law plus gauge specification
simulate    tree or population realization; writes generation counts and
            optionally the node-level tree export
experiment  one seeded validation experiment (ks_gamma, size_bias,
            conservation, sandwich, independence, limsup_track)
verify      the aggregate invariant suite over canonical laws; exit code
            reflects the outcome

Exit codes: 0 success, 2 regime/domain error, 3 config error, 4 resource
limit. ``GWB_SEED`` overrides any configured seed for CI sweeps. All file
output lands under ``--out``; reports are byte-reproducible per seed except
for the wall-clock ``meta`` block, which the manifest hashes skip.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constants import sigma_inverse_iteration, tau_estimate
from .errors import (
    ConfigError,
    DomainError,
    GWBoundError,
    MemoryBudgetExceeded,
    NonConvergence,
    PrecisionFloor,
    RangeError,
    RegimeError,
)
from .gauge import GaugeFunction, GFunction, classify
from .offspring import law_from_config
from .reporting import now_meta, write_csv, write_json, write_manifest
from .tree import (
    default_w_depth,
    sample_w,
    simulate_population,
    simulate_tree,
    tree_to_text,
    z_counts_csv_rows,
)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_REGIME = 2
EXIT_CONFIG = 3
EXIT_RESOURCE = 4

EXPERIMENT_KINDS_HELP = (
    "ks_gamma", "size_bias", "conservation", "sandwich",
    "limsup_track", "independence",
)


def _load_json_arg(text: str) -> dict:
    """Accept a path to a JSON file or an inline JSON object."""
    s = text.strip()
    if s.startswith("{"):
        return json.loads(s)
    return json.loads(Path(text).read_text())


def _seed_of(args) -> int:
    env = os.environ.get("GWB_SEED")
    if env is not None:
        return int(env)
    if args.seed is None:
        raise ConfigError("a --seed is required (or set GWB_SEED)")
    return int(args.seed)


def _check_keys(cfg: dict, allowed: set, what: str):
    extra = set(cfg) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {what}: {sorted(extra)}")


def _gauge_from_config(law, cfg: dict) -> tuple[GaugeFunction, bool]:
    """Build a gauge from its JSON form; returns (gauge, tail_certificate)."""
    _check_keys(cfg, {"form", "b", "exponent", "r_exponent", "r_coeff",
                      "value", "tail_certificate"}, "gauge config")
    form = cfg.get("form")
    cert = bool(cfg.get("tail_certificate", False))
    if form == "psi_b":
        return GaugeFunction.log_power(law, float(cfg.get("b", 1.0))), cert
    if form == "phi_loglog_pow_exact":
        return GaugeFunction.loglog_exact(law), cert
    if form == "phi_loglog":
        return GaugeFunction.loglog(law), cert
    if form == "phi_rinverse":
        return GaugeFunction.r_inverse(
            law, float(cfg.get("r_exponent", 1.0)),
            float(cfg.get("r_coeff", 1.0))), cert
    if form == "loglog_pow":
        return GaugeFunction(
            math.log(law.mean_a),
            GFunction("loglog_pow", exponent=float(cfg["exponent"])),
            name="phi_loglog_pow"), cert
    if form == "const":
        return GaugeFunction(
            math.log(law.mean_a),
            GFunction("const", value=float(cfg.get("value", 1.0))),
            name="psi_const"), cert
    raise ConfigError(f"unknown gauge form {form!r}")


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = write_json(payload, out / f"{payload['command']}.json")
        write_manifest(out, [path])


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def cmd_sigma(args) -> int:
    law = law_from_config(_load_json_arg(args.law))
    est = sigma_inverse_iteration(law, n_max=args.n_max)
    payload = {
        "command": "sigma",
        "law": law.to_config(),
        "estimate": est.to_jsonable(),
        "meta": now_meta(),
    }
    _emit(payload, args)
    return EXIT_OK


def cmd_tau(args) -> int:
    law = law_from_config(_load_json_arg(args.law))
    seed = _seed_of(args)
    depth = args.depth or 20
    rng = np.random.default_rng(seed)
    w = sample_w(law, args.replicas, rng, depth=depth)
    est = tau_estimate(law, w)
    payload = {
        "command": "tau",
        "law": law.to_config(),
        "seed": seed,
        "depth": depth,
        "replicas": args.replicas,
        "estimate": est.to_jsonable(),
        "meta": now_meta(),
    }
    _emit(payload, args)
    return EXIT_OK


def cmd_classify(args) -> int:
    law = law_from_config(_load_json_arg(args.law))
    gauge_cfg = _load_json_arg(args.gauge)
    phi, cert = _gauge_from_config(law, gauge_cfg)
    seed = int(os.environ.get("GWB_SEED", args.seed or 0))
    verdict = classify(law, phi, estimate=args.estimate, seed=seed,
                       tail_certificate=cert)
    payload = {
        "command": "classify",
        "law": law.to_config(),
        "gauge": gauge_cfg,
        "verdict": verdict.to_jsonable(),
        "meta": now_meta(),
    }
    _emit(payload, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    law = law_from_config(_load_json_arg(args.law))
    seed = _seed_of(args)
    out = Path(args.out) if args.out else None
    files = []
    if args.mode == "tree":
        tree = simulate_tree(law, args.depth, seed, node_cap=args.node_cap)
        z = tree.z_counts
        if out and args.export_tree:
            p = out / "tree.txt"
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(tree_to_text(tree))
            files.append(p)
    else:
        z = simulate_population(law, args.depth, seed, node_cap=args.node_cap)
    payload = {
        "command": "simulate",
        "law": law.to_config(),
        "mode": args.mode,
        "depth": args.depth,
        "seed": seed,
        "z_counts": [int(v) for v in z],
        "normalized_final": float(z[-1] / law.mean_a**args.depth),
        "meta": now_meta(),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    if out:
        out.mkdir(parents=True, exist_ok=True)
        files.append(write_csv(z_counts_csv_rows(z), ("depth", "z"),
                               out / "z_counts.csv"))
        files.append(write_json(payload, out / "simulate.json"))
        write_manifest(out, files)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .experiments import ExperimentSpec, finalize_report, run_experiment

    law_cfg = _load_json_arg(args.law)
    law_from_config(law_cfg)  # validate early
    params = _load_json_arg(args.params) if args.params else {}
    if args.b is not None:
        params.setdefault("g", "power")
        params["b"] = args.b
    if args.g is not None:
        params["g"] = args.g
    spec = ExperimentSpec(
        kind=args.kind,
        law_config=law_cfg,
        seed=_seed_of(args),
        replicas=args.replicas,
        depth=args.depth,
        params=params,
        out_dir=Path(args.out) if args.out else None,
        fig_format=args.fig_format,
        workers=args.workers,
    )
    report = run_experiment(spec)
    print(report.pass_lines())
    if spec.out_dir:
        path = finalize_report(report, spec.out_dir)
        print(f"report: {path}")
    return EXIT_OK if report.passed else EXIT_CHECKS_FAILED


def cmd_verify(args) -> int:
    from .experiments import ExperimentSpec, finalize_report, run_invariant_suite

    seed = _seed_of(args)
    laws = [
        {"kind": "geomshift", "a": 5, "k": 1},
        {"kind": "explicit", "pmf": [0.25, 0.25, 0.5]},
    ]
    if args.law:
        laws = [_load_json_arg(args.law)]
    all_ok = True
    for i, law_cfg in enumerate(laws):
        spec = ExperimentSpec(
            kind="invariants", law_config=law_cfg, seed=seed + i,
            replicas=args.replicas, workers=args.workers,
            out_dir=Path(args.out) if args.out else None,
        )
        report = run_invariant_suite(spec)
        print(f"== invariant suite: {json.dumps(law_cfg)} ==")
        print(report.pass_lines())
        all_ok &= report.passed
        if spec.out_dir:
            finalize_report(report, spec.out_dir, stem=f"verify_{i}")
    print("VERIFY:", "PASS" if all_ok else "FAIL")
    return EXIT_OK if all_ok else EXIT_CHECKS_FAILED


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gwbound",
        description=(
            "Gauge-measure analysis on supercritical branching-tree "
            "boundaries: constants, classification verdicts, and seeded "
            "Monte Carlo validation."
        ),
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, seed=True):
        sp.add_argument("--out", help="output directory for reports/files")
        if seed:
            sp.add_argument("--seed", type=int, default=None,
                            help="RNG seed (GWB_SEED env overrides)")

    sp = sub.add_parser(
        "sigma",
        help="exponential-moment boundary via inverse pgf iteration",
        description=(
            "Computes the limit of a^(n+1)((f_n)^{-1}(S0)-1) over inverse "
            "pgf iterates, with Aitken acceleration; requires a finite pgf "
            "radius S0 in (1, inf). Exact algebra for the closed-form "
            "geometric-type family."
        ),
    )
    sp.add_argument("--law", required=True, help="law config (path or JSON)")
    sp.add_argument("--n-max", type=int, default=40)
    add_common(sp, seed=False)
    sp.set_defaults(func=cmd_sigma)

    sp = sub.add_parser(
        "tau",
        help="tail-scale fit for bounded offspring support",
        description=(
            "Fits -log P(W > x) against x^(gamma/(gamma-1)) on the upper "
            "empirical tail of deep population samples; reports the local "
            "slope as a shape check. Best-effort by construction."
        ),
    )
    sp.add_argument("--law", required=True)
    sp.add_argument("--replicas", type=int, default=100_000)
    sp.add_argument("--depth", type=int, default=None)
    add_common(sp)
    sp.set_defaults(func=cmd_tau)

    sp = sub.add_parser(
        "classify",
        help="gauge-measure verdict for a law and gauge",
        description=(
            "Decides absolutely-continuous / infinite / zero-off-exceptional "
            "/ zero / undecided for the gauge measure of the boundary, from "
            "certified offspring metadata; --estimate authorizes seeded "
            "Monte Carlo for constants without closed form."
        ),
    )
    sp.add_argument("--law", required=True)
    sp.add_argument("--gauge", required=True,
                    help='gauge config, e.g. {"form":"psi_b","b":0.4}')
    sp.add_argument("--estimate", action="store_true")
    add_common(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser(
        "simulate",
        help="realize a tree or its generation sizes",
        description=(
            "Simulates the branching tree to a depth (full arena or "
            "population-only; both consume the identical draw stream). "
            "Writes generation counts as CSV and optionally the node-level "
            "tree export."
        ),
    )
    sp.add_argument("--law", required=True)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--mode", choices=("tree", "population"),
                    default="population")
    sp.add_argument("--export-tree", action="store_true")
    sp.add_argument("--node-cap", type=int, default=100_000_000,
                    help="abort with a resource error past this many nodes")
    add_common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser(
        "experiment",
        help="run one seeded validation experiment",
        description=(
            "Experiment kinds: ks_gamma (Gamma oracle for normalized "
            "generation sizes), size_bias (weighted-ECDF ray identity), "
            "conservation (exact cutset mass checks), sandwich (two-sided "
            "decomposability bound), independence (increment independence "
            "plus scaling law), limsup_track (normalized running maxima; "
            "trend/bracket semantics only)."
        ),
    )
    sp.add_argument("--kind", required=True, choices=EXPERIMENT_KINDS_HELP)
    sp.add_argument("--law", required=True)
    sp.add_argument("--replicas", type=int, default=10_000)
    sp.add_argument("--depth", type=int, default=None)
    sp.add_argument("--params", default=None,
                    help="kind-specific parameters (path or JSON)")
    sp.add_argument("--g", default=None,
                    help="track profile for limsup_track (log|power)")
    sp.add_argument("--b", type=float, default=None,
                    help="power-profile exponent for limsup_track")
    sp.add_argument("--fig-format", choices=("svg", "png", "none"),
                    default="svg")
    sp.add_argument("--workers", type=int, default=1)
    add_common(sp)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser(
        "verify",
        help="run the aggregate invariant suite",
        description=(
            "Runs conservation, martingale, draw-stream agreement, "
            "extinction-frequency, size-bias, scaling, independence and "
            "sandwich batteries (plus the Gamma oracle where it applies) "
            "over canonical laws or --law. Exit code reflects the outcome."
        ),
    )
    sp.add_argument("--law", default=None)
    sp.add_argument("--replicas", type=int, default=5000)
    sp.add_argument("--workers", type=int, default=1)
    add_common(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RegimeError, DomainError, RangeError, NonConvergence,
            PrecisionFloor, OverflowError) as exc:
        print(f"regime/domain error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (MemoryBudgetExceeded, MemoryError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except GWBoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REGIME


if __name__ == "__main__":
    sys.exit(main())
