"""Command-line driver: ``petzlab <command> CONFIG [--seed S] [--out PATH]``.

Exit codes: 0 success, 1 property violation, 2 configuration error,
3 numerical hard error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys

import numpy as np

from .algebra import schatten_p_norm
from .entropy import dpi_gap, recoverability_bound, weighted_contraction_check
from .petz import NumericalError, decompose, fixed_point_analysis, iterate, l1_norm_probe_sequence
from .properties import REGISTRY, InstanceSpec, generate, run_properties
from .serialize import (
    channel_from_json,
    dumps,
    matrix_to_json,
    reference_from_json,
    state_from_json,
)

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
COMMANDS = ("analyze", "iterate", "decompose", "dpi", "bound", "fuzz", "probe-l1")


class ConfigError(ValueError):
    pass


def _seed_override(cfg, seed):
    cfg = copy.deepcopy(cfg)
    cfg["seed"] = seed
    for offset, key in enumerate(("channel", "reference", "state")):
        spec = cfg.get(key)
        if isinstance(spec, dict) and spec.get("kind") == "random":
            spec["seed"] = seed + offset
    return cfg


def load_problem(cfg):
    """``(phi, B, A)`` described by a config dict."""
    try:
        n = int(cfg["algebra"]["dim"])
        b = reference_from_json(cfg.get("reference", "identity"), n)
        phi = channel_from_json(cfg["channel"], n)
        a = state_from_json(cfg.get("state", "reference"), n, b)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    if b.dim != n or a.shape != (n, n):
        raise ConfigError("reference/state dimensions do not match the algebra")
    if not (phi.is_cp and phi.is_tp):
        raise ConfigError("channel is not CPTP")
    if not phi.is_strict:
        raise ConfigError("channel is not strict")
    return phi, b, a


def _eps_fix(cfg):
    return float(cfg.get("tolerances", {}).get("eps_fix", 1e-8))


def _slack(cfg):
    return float(cfg.get("tolerances", {}).get("slack", 1e-9))


def _p_list(cfg, default=(1.0, 1.5, 2.0, 3.0, math.inf)):
    return [float(p) for p in cfg.get("p_list", default)]


def _instances(cfg):
    """Instances for the sweep commands: the config problem or seeded specs."""
    if "num_instances" not in cfg:
        phi, b, a = load_problem(cfg)
        return [({"source": "config"}, phi, b, a)]
    num = int(cfg["num_instances"])
    if num < 1:
        raise ConfigError("num_instances must be >= 1")
    base = int(cfg.get("seed", 0))
    template = dict(cfg.get("instance", {}))
    template.pop("seed", None)
    out = []
    for i in range(num):
        spec = InstanceSpec.from_json({"seed": base + i, **template})
        inst = generate(spec)
        out.append((spec.to_json(), inst.phi, inst.b, inst.a))
    return out


def cmd_analyze(cfg):
    phi, b, _ = load_problem(cfg)
    an = fixed_point_analysis(phi, b, eps_fix=_eps_fix(cfg))
    return an.to_json(), EXIT_OK


def cmd_iterate(cfg):
    phi, b, a = load_problem(cfg)
    n_max = int(cfg.get("n_max", 40))
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    an = fixed_point_analysis(phi, b, eps_fix=_eps_fix(cfg))
    tr = iterate(phi, b, a, n_max, _p_list(cfg, ()), analysis=an)
    return tr.to_csv(), EXIT_OK


def cmd_decompose(cfg):
    phi, b, a = load_problem(cfg)
    d = decompose(phi, b, a, fixed_point_analysis(phi, b, eps_fix=_eps_fix(cfg)))
    status = EXIT_OK if all(d.checks.values()) else EXIT_VIOLATION
    return {"a0": matrix_to_json(d.a0), "c": matrix_to_json(d.c), "checks": d.checks}, status


def cmd_dpi(cfg):
    slack = _slack(cfg)
    rows, violated = [], False
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    for meta, phi, b, a in _instances(cfg):
        x = rng.standard_normal(a.shape) + 1j * rng.standard_normal(a.shape)
        gaps, contraction = {}, {}
        for p in _p_list(cfg):
            key = "inf" if math.isinf(p) else repr(p)
            gaps[key] = dpi_gap(phi, a, b, p)
            lhs, rhs = weighted_contraction_check(phi, b, x, p)
            contraction[key] = {"lhs": lhs, "rhs": rhs}
            violated |= gaps[key] < -slack or lhs > rhs + slack
        rows.append({"instance": meta, "dpi_gap": gaps, "weighted_contraction": contraction})
    return {"instances": rows, "violation": violated}, EXIT_VIOLATION if violated else EXIT_OK


def cmd_bound(cfg):
    slack = _slack(cfg)
    rows, violated = [], False
    for meta, phi, b, a in _instances(cfg):
        rep = recoverability_bound(phi, b, a, slack=slack)
        violated |= not rep.holds
        rows.append({"instance": meta, "bound": rep.to_json()})
    return {"instances": rows, "violation": violated}, EXIT_VIOLATION if violated else EXIT_OK


def cmd_fuzz(cfg):
    num = int(cfg.get("num_instances", 1))
    if num < 1:
        raise ConfigError("num_instances must be >= 1")
    registry = cfg.get("registry")
    if registry is not None:
        unknown = [r for r in registry if r not in REGISTRY]
        if unknown:
            raise ConfigError(f"unknown properties {unknown}")
    base = int(cfg.get("seed", 0))
    template = dict(cfg.get("instance", {}))
    template.pop("seed", None)
    specs = [InstanceSpec.from_json({"seed": base + i, **template}) for i in range(num)]
    report = run_properties(specs, registry)
    return report.to_json(), report.exit_status


def cmd_probe_l1(cfg):
    phi, b, a = load_problem(cfg)
    an = fixed_point_analysis(phi, b, eps_fix=_eps_fix(cfg))
    n_values = [int(n) for n in cfg.get("n_values", range(int(cfg.get("n_max", 10)) + 1))]
    seq = l1_norm_probe_sequence(
        phi, b, n_values, restarts=int(cfg.get("restarts", 32)), seed=int(cfg.get("seed", 0)),
        analysis=an, states=[a],
    )
    rows = [{"n": n, "lower_bound": float(v)} for n, v in zip(n_values, seq)]
    hd = a - an.psi(a)
    base = schatten_p_norm(hd, 1)
    monotone = all(seq[k + 1] <= seq[k] * (1 + 1e-8) + 1e-15 for k in range(len(seq) - 1))
    return {"probe": rows, "non_increasing": monotone, "state_l1_initial": base}, EXIT_OK


HANDLERS = {
    "analyze": cmd_analyze,
    "iterate": cmd_iterate,
    "decompose": cmd_decompose,
    "dpi": cmd_dpi,
    "bound": cmd_bound,
    "fuzz": cmd_fuzz,
    "probe-l1": cmd_probe_l1,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="petzlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="path to a JSON config file ('-' for stdin)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="write output here instead of stdout")
    return parser


def _read_config(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _read_config(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        if args.seed is not None:
            cfg = _seed_override(cfg, args.seed)
        result, status = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"petzlab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"petzlab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (KeyError, TypeError, ValueError) as exc:
        print(f"petzlab: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = result if isinstance(result, str) else dumps(result)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
