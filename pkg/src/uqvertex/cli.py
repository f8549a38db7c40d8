"""Command-line interface: ``uqvertex {smatrix,check,appendix,simulate}``.

Exit codes: 0 success, 1 a checked identity or acceptance band failed,
2 bad or singular parameters.  JSON output always carries ``schema_version``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Any

from .qarith import SingularValueError, as_float, scalar

SCHEMA_VERSION = 1

# fallbacks applied after flags and the --config file
DEFAULTS: dict[str, Any] = {
    "n": None, "l": None, "m": None, "q": None, "z": None, "lam": None, "mu": None, "alpha": None,
    "mode": "exact", "format": "json", "seed": 0, "bound": None, "L": None, "w": None,
    "output": None, "full": False, "model": "qhahn", "eta": None, "xi": None, "steps": 1,
    "replications": 100000, "workers": 1, "verbose": 0,
}


class ParameterError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _words(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _config_value(key: str, value):
    """Normalize a --config entry to the type the matching flag would produce."""
    if key == "m":
        return [int(v) for v in value] if isinstance(value, list) else _ints(str(value))
    if key in ("w", "z") and value is not None:
        return [str(v) for v in value] if isinstance(value, list) else _words(str(value))
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default values; explicit flags win")
    common.add_argument("-n", type=int, help="number of particle species")
    common.add_argument("-l", type=int, help="auxiliary (horizontal) spin")
    common.add_argument("-m", type=_ints, help="vertical spin(s), comma separated")
    common.add_argument("-q", help="quantum parameter (rational, e.g. 1/2)")
    common.add_argument("-z", type=_words, help="spectral parameter(s): rational, 'inf' or '0'")
    common.add_argument("--lambda", dest="lam", help="q-Hahn lambda")
    common.add_argument("--mu", help="q-Hahn mu")
    common.add_argument("--alpha", help="single-species alpha")
    common.add_argument("--mode", choices=("exact", "float"))
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--seed", type=int)
    common.add_argument("--bound", type=int, help="occupation bound")
    common.add_argument("-L", type=int, help="number of lattice sites")
    common.add_argument("-w", type=_words, help="site spectral parameters, comma separated")
    common.add_argument("-o", "--output", help="write the result here instead of stdout")
    common.add_argument("-v", "--verbose", action="count")

    parser = argparse.ArgumentParser(prog="uqvertex", description="Exact multi-species stochastic vertex models.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("smatrix", parents=[common], help="export the stochastic S(z) matrix")
    chk = sub.add_parser("check", parents=[common], help="run a verification suite")
    chk.add_argument("suite", help="suite name")
    chk.add_argument("--full", action="store_true", default=None, help="include the heaviest cases")
    sub.add_parser("appendix", parents=[common], help="rebuild the worked small-spin examples")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo duality estimates")
    sim.add_argument("--model", choices=("qhahn", "vertex"))
    sim.add_argument("--eta", help="forward initial configuration as JSON")
    sim.add_argument("--xi", help="reverse initial configuration as JSON")
    sim.add_argument("--steps", type=int, help="number of time steps")
    sim.add_argument("--replications", type=int)
    sim.add_argument("--workers", type=int)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the --config file over the built-in defaults."""
    merged = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read config {args.config}: {exc}") from exc
        aliases = {"lambda": "lam"}
        for key, value in cfg.items():
            key = aliases.get(key, key)
            if key not in merged and key != "suite":
                raise ParameterError(f"unknown config key {key!r}")
            merged[key] = _config_value(key, value)
    for key, value in vars(args).items():
        if value is not None and key != "config":
            merged[key] = value
    if merged["mode"] == "exact":
        for key in ("q", "lam", "mu", "alpha"):
            if merged[key] is not None:
                _rational(merged[key], key)
    return merged


def _rational(text, name: str):
    try:
        return scalar(str(text))
    except (ValueError, TypeError) as exc:
        raise ParameterError(f"{name} must be rational (integer or p/q), got {text!r}") from exc


def _emit(payload: str, output: str | None) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _dump(data: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **data}, indent=2, sort_keys=False) + "\n"


# subcommands


def cmd_smatrix(cfg: dict) -> int:
    from .vertex import check_stochastic, s_matrix

    ms = cfg["m"] or [1]
    if len(ms) != 1:
        raise ParameterError("smatrix takes a single -m")
    if cfg["q"] is None or not cfg["z"]:
        raise ParameterError("smatrix needs -q and -z")
    n, l, m = cfg["n"] or 1, cfg["l"] or 1, ms[0]
    q = _rational(cfg["q"], "q")
    z = cfg["z"][0]
    if z.lower() not in ("inf", "infinity"):
        _rational(z, "z")
    op = s_matrix(n, l, m, q, z)
    report = check_stochastic(op)
    report = {"sum_to_one": report["sum_to_one"], "nonnegative": report["nonnegative"],
              "witness": None if report["witness"] is None else [str(x) for x in report["witness"]]}
    params = {"n": n, "l": l, "m": m, "q": str(q), "z": z}
    if cfg["format"] == "csv":
        if cfg["mode"] == "float":
            lines = op.to_csv().splitlines()
            body = [lines[0]] + [",".join([row.split(",")[0]] + [repr(as_float(scalar(v))) for v in row.split(",")[1:]])
                                 for row in lines[1:]]
            payload = "\n".join(body) + "\n"
        else:
            payload = op.to_csv()
    else:
        data = op.to_json_dict(params)
        if cfg["mode"] == "float":
            for e in data["entries"]:
                e["value"] = repr(as_float(scalar(f"{e['num']}/{e['den']}")))
        payload = _dump({"command": "smatrix", **data, "stochasticity": report})
    _emit(payload, cfg["output"])
    print(f"stochasticity: sum_to_one={report['sum_to_one']} nonnegative={report['nonnegative']}", file=sys.stderr)
    return 0


def cmd_check(cfg: dict, suite: str) -> int:
    from .suites import SUITES, run_suite

    if suite not in SUITES:
        raise ParameterError(f"unknown suite {suite!r}; choose from {', '.join(sorted(SUITES))}")
    params = {"n": cfg["n"], "l": cfg["l"], "m": cfg["m"], "q": cfg["q"], "z": cfg["z"], "lam": cfg["lam"], "mu": cfg["mu"], "alpha": cfg["alpha"],
              "bound": cfg["bound"], "L": cfg["L"], "w": cfg["w"], "full": bool(cfg["full"])}
    start = time.perf_counter()
    report = run_suite(suite, **params)
    if cfg["verbose"]:
        print(f"{suite}: {report['count']} items in {time.perf_counter() - start:.1f}s", file=sys.stderr)
    _emit(_dump({"command": "check", **report}), cfg["output"])
    return 0 if report["status"] == "pass" else 1


def cmd_appendix(cfg: dict) -> int:
    from .appendix import run_appendix

    report = run_appendix()
    _emit(_dump({"command": "appendix", **report}), cfg["output"])
    return 0 if report["status"] == "pass" else 1


def _config_arg(text: str | None, name: str):
    if text is None:
        return None
    try:
        value = json.loads(text) if isinstance(text, str) else text
    except json.JSONDecodeError as exc:
        raise ParameterError(f"--{name} must be JSON, e.g. [[1,0],[0,0],[0,1]]") from exc
    return tuple(tuple(int(x) for x in site) for site in value)


def cmd_simulate(cfg: dict) -> int:
    from .sim import estimate_duality, estimate_to_json, qhahn_instance, vertex_instance

    n, size = cfg["n"] or 1, cfg["L"] or 3
    steps, reps, seed = cfg["steps"], cfg["replications"], cfg["seed"]
    if steps < 0 or reps < 2:
        raise ParameterError("need steps >= 0 and at least two replications")
    if cfg["model"] == "qhahn":
        q = _rational(cfg["q"] or "1/2", "q")
        lam = _rational(cfg["lam"] or "1/3", "lambda")
        mu = _rational(cfg["mu"] or "1/5", "mu")
        eta = _config_arg(cfg["eta"], "eta")
        xi = _config_arg(cfg["xi"], "xi")
        if eta is None or xi is None:
            if size != 3:
                raise ParameterError("give --eta and --xi for lattices other than L = 3")
            first, last, zero = tuple(int(i == 0) for i in range(n)), tuple(int(i == n - 1) for i in range(n)), (0,) * n
            eta = eta or (zero, tuple(2 * v for v in first), last)
            xi = xi or (first, zero, last)
        for cfg_ in (eta, xi):
            if len(cfg_) != size or any(len(s) != n for s in cfg_):
                raise ParameterError(f"q-Hahn configurations need {size} sites of {n} counts")
        fwd, rev, functional, columns = qhahn_instance(n, size, eta, xi, q, lam, mu, steps, reps, seed)
        params = {"model": "qhahn", "n": n, "L": size, "q": str(q), "lambda": str(lam), "mu": str(mu),
                  "eta": eta, "xi": xi}
    else:
        q = _rational(cfg["q"] or "1/2", "q")
        l = cfg["l"] or 1
        spins = tuple(cfg["m"] or [2] * size)
        size = len(spins)
        empty = tuple((0,) * n + (s,) for s in spins)
        eta = _config_arg(cfg["eta"], "eta") or empty
        xi = _config_arg(cfg["xi"], "xi") or empty
        for cfg_ in (eta, xi):
            if len(cfg_) != size or any(len(c) != n + 1 or sum(c) != s for c, s in zip(cfg_, spins)):
                raise ParameterError("vertex configurations need one composition of each site spin")
        z = cfg["z"][0] if cfg["z"] else None
        fwd, rev, functional, columns = vertex_instance(n, l, spins, eta, xi, q, steps, reps, seed, z=z)
        params = {"model": "vertex", "n": n, "l": l, "spins": spins, "q": str(q), "eta": eta, "xi": xi}
    exact = columns if _state_space_small(fwd, rev) else None
    est_f, est_r = estimate_duality(fwd, rev, functional, exact, workers=cfg["workers"])
    bands = {"forward_vs_reverse": est_f.within(est_r), "forward_vs_exact": est_f.within(),
             "reverse_vs_exact": est_r.within()}
    params.update({"steps": steps, "replications": reps, "seed": seed})
    report = {"command": "simulate", "params": params, "forward": estimate_to_json(est_f),
              "reverse": estimate_to_json(est_r), "bands_4sigma": bands,
              "status": "pass" if all(bands.values()) else "fail"}
    _emit(_dump(report), cfg["output"])
    return 0 if report["status"] == "pass" else 1


def _state_space_small(*specs) -> bool:
    """Exact references are attached when the reachable state space is at most 10^4."""
    from math import comb

    for spec in specs:
        cfg = spec.initial
        parts = sum(sum(site[: len(site) - (1 if spec.model == "vertex-sequential" else 0)]) for site in cfg)
        slots = len(cfg) * max(1, len(cfg[0]) - (1 if spec.model == "vertex-sequential" else 0))
        if comb(parts + slots - 1, slots - 1) > 10**4:
            return False
    return True


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        if args.command == "smatrix":
            return cmd_smatrix(cfg)
        if args.command == "check":
            return cmd_check(cfg, args.suite)
        if args.command == "appendix":
            return cmd_appendix(cfg)
        return cmd_simulate(cfg)
    except SingularValueError as exc:
        print(f"error: singular parameters: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
