"""Command-line driver: optimize | solve | sweep | verify | probe.

Settings come from defaults, then an optional ``--config`` file (flat
``key = value`` lines, or a manifest.json written by an earlier run), then
command-line flags.  Exit codes: 0 success, 2 configuration error,
3 non-convergence, 4 failed verification.
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .bubbles import Configuration
from .mesh import Mesh, trapezoid_weights
from .operator import assemble_inverse
from .reduced import NoCriticalPoint, boundary_blowdown_probe, conjecture_probe, maximize
from .solver import (GridFunction, NonConvergence, SingularJacobian, SolveReport, continuation,
                     lambda_schedule, solve_branch)
from .verify import AmbiguousZero, MissingPeak, diagnose, verify_solution

EXIT_OK, EXIT_CONFIG, EXIT_NONCONV, EXIT_VERIFY = 0, 2, 3, 4
COMMANDS = ("optimize", "solve", "sweep", "verify", "probe")
log = logging.getLogger("fracsinh")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = "optimize"
    k: int = 1
    signs: str = "alternating"
    xi: str = ""
    lambda_: float = 0.05
    lambda_range: str = "0.2:0.0125"
    factor: float = 0.5
    base_n: int = 128
    tol: float = 1e-10
    seed: int = 0
    seeds: int = 8
    n_starts: int = 200
    out: str = "out"
    profile: str = ""
    report: str = ""
    singulars: bool = True

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if not (self.lambda_ > 0 and self.factor > 0 and self.factor < 1 and self.tol > 0):
            raise ConfigError("lambda and tol must be positive and factor must lie in (0, 1)")
        if self.base_n < 64:
            raise ConfigError("base_n must be at least 64")
        if self.seeds < 1 or self.n_starts < 1:
            raise ConfigError("seeds and n_starts must be positive")
        self.sign_tuple()
        self.range_pair()
        self.explicit_xi()
        return self

    def sign_tuple(self):
        s = self.signs.strip()
        if s in ("alternating", "alt", ""):
            return tuple((-1) ** i for i in range(self.k))
        if set(s) <= {"+", "-"}:
            out = tuple(1 if c == "+" else -1 for c in s)
        else:
            try:
                out = tuple(int(v) for v in s.split(","))
            except ValueError as exc:
                raise ConfigError(f"cannot parse signs {s!r}") from exc
        if len(out) != self.k or any(v not in (-1, 1) for v in out):
            raise ConfigError(f"signs {s!r} do not give {self.k} values in {{+1, -1}}")
        return out

    def range_pair(self):
        try:
            start, end = (float(v) for v in self.lambda_range.split(":"))
        except ValueError as exc:
            raise ConfigError(f"lambda range {self.lambda_range!r} is not start:end") from exc
        if not 0 < end < start:
            raise ConfigError("lambda range must satisfy 0 < end < start")
        return start, end

    def explicit_xi(self):
        if not self.xi.strip():
            return None
        try:
            xs = tuple(float(v) for v in self.xi.split(","))
            return Configuration(xs, self.sign_tuple())
        except ValueError as exc:
            raise ConfigError(f"bad xi {self.xi!r}: {exc}") from exc

    def to_dict(self):
        # the output directory is left out so a relaunch elsewhere is byte-identical
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        d.pop("out")
        return d


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key, value):
    name = "lambda_" if key == "lambda" else key.replace("-", "_")
    if name not in _TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    typ = _TYPES[name]
    try:
        if typ in (bool, "bool"):
            if isinstance(value, bool):
                return name, value
            return name, str(value).strip().lower() in ("1", "true", "yes", "on")
        conv = {"int": int, "float": float, "str": str}.get(typ, typ) if isinstance(typ, str) else typ
        return name, conv(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def read_config_file(path):
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return dict(data.get("config", data))
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="fracsinh", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fracsinh {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value file or a previous manifest.json")
        s.add_argument("--k", type=int)
        s.add_argument("--signs", help="'alternating', a pattern like +-+, or 1,-1,1")
        s.add_argument("--xi", help="explicit comma-separated centres instead of the maximiser")
        s.add_argument("--lambda", dest="lambda_", type=float)
        s.add_argument("--lambda-range", dest="lambda_range", help="start:end")
        s.add_argument("--factor", type=float)
        s.add_argument("--base-n", dest="base_n", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--seed", type=int)
        s.add_argument("--seeds", type=int, help="multistart count for optimize")
        s.add_argument("--n-starts", dest="n_starts", type=int, help="start count for probe")
        s.add_argument("--out")
        s.add_argument("--profile", help="profile CSV for verify")
        s.add_argument("--report", help="report JSON for verify")
        s.add_argument("--no-singulars", dest="singulars", action="store_const", const=False,
                       help="skip the dense singular-value diagnostics")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve(args):
    values = {}
    if args.config:
        for key, value in read_config_file(args.config).items():
            if key == "command":
                continue
            name, v = _coerce(key, value)
            values[name] = v
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "command":
            values[f.name] = v
    values["command"] = args.command
    return RunConfig(**values).validate()


def write_manifest(cfg, out):
    io.write_json(out / "manifest.json", {"tool": "fracsinh", "version": __version__,
                                           "command": cfg.command, "config": cfg.to_dict()})


def reference_config(cfg):
    explicit = cfg.explicit_xi()
    if explicit is not None:
        return explicit
    return maximize(cfg.k, cfg.sign_tuple(), seeds=cfg.seeds, random_state=cfg.seed).config


def _tag(lam):
    return f"{lam:.6g}"


def _emit_solution(out, rep, ref, cfg):
    res = diagnose(rep, ref, tol=cfg.tol, singulars=cfg.singulars)
    d = res["diagnostics"]
    io.write_profile(out / f"profile_lambda_{_tag(rep.lam)}.csv",
                     rep.solution.mesh.nodes, rep.solution.values)
    body = io.solve_report_dict(rep, res, d["energy"], d.get("sigma_perp"), ref)
    body["checks"] = res["checks"]
    io.write_json(out / f"report_lambda_{_tag(rep.lam)}.json", body)
    return res


def cmd_optimize(cfg, out):
    try:
        rep = maximize(cfg.k, cfg.sign_tuple(), seeds=cfg.seeds, tol=min(cfg.tol, 1e-10),
                       random_state=cfg.seed)
        body = rep.to_dict()
    except NoCriticalPoint as exc:
        body = {"k": cfg.k, "signs": list(cfg.sign_tuple()), "xi": None, "value": None,
                "grad_norm": None, "hessian_eigs": None, "classification": "none found",
                "note": str(exc)}
    io.write_json(out / "optimize.json", body)
    print(json.dumps(io.rounded(body), sort_keys=True))
    return EXIT_OK


def cmd_solve(cfg, out):
    ref = reference_config(cfg)
    rep = solve_branch(ref, cfg.lambda_, base_n=cfg.base_n, tol=cfg.tol, factor=cfg.factor)
    res = _emit_solution(out, rep, ref, cfg)
    print(json.dumps(io.rounded({"lambda": rep.lam, "newton_iters": rep.newton_iters,
                                 "nodal_count": res["nodal"]["nodal_count"],
                                 "passed": res["passed"]}), sort_keys=True))
    return EXIT_OK if res["passed"] else EXIT_VERIFY


SUMMARY_BASE = ["lambda", "residual_sup", "newton_iters", "nodal_count"]


def cmd_sweep(cfg, out):
    ref = reference_config(cfg)
    start, end = cfg.range_pair()
    planned = lambda_schedule(start, end, cfg.factor)
    reports = continuation(ref, start, end, cfg.factor, base_n=cfg.base_n, tol=cfg.tol)
    k = ref.k
    header = (SUMMARY_BASE + [f"xi_{i}" for i in range(k)] + [f"height_{i}" for i in range(k)]
              + [f"height_gap_{i}" for i in range(k)] + [f"mass_error_{i}" for i in range(k)]
              + ["norm_gap", "energy_gap", "remainder_sup", "sigma_perp"])
    rows, passed = [], True
    for rep in reports:
        res = _emit_solution(out, rep, ref, cfg)
        d = res["diagnostics"]
        passed &= res["passed"]
        rows.append([rep.lam, rep.residual_sup, rep.newton_iters, d["nodal_count"],
                     *d["peak_locations"], *d["peak_heights"], *d["height_gaps"], *d["mass_errors"],
                     d["norm_gap"], d["energy_gap"], d["remainder_norms"]["sup"],
                     d.get("sigma_perp", float("nan"))])
    io.write_table(out / "summary.csv", header, rows)
    print(f"{len(reports)}/{len(planned)} continuation steps converged; "
          f"smallest lambda {reports[-1].lam if reports else 'none'}")
    if len(reports) < len(planned):
        return EXIT_NONCONV
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_verify(cfg, out):
    if not (cfg.profile and cfg.report):
        raise ConfigError("verify needs --profile and --report")
    try:
        x, u = io.read_profile(cfg.profile)
        data = io.read_json(cfg.report)
        ref = Configuration(tuple(data["config"]["xi"]), tuple(data["config"]["signs"]))
        lam = float(data["lambda"])
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot read verify inputs: {exc}") from exc
    mesh = Mesh(nodes=x, weights=trapezoid_weights(x))
    op = assemble_inverse(mesh)
    gf = GridFunction(mesh, u)
    resid = float(np.max(np.abs(u - op.apply(2.0 * lam * np.sinh(u)))))
    rep = SolveReport(lam=lam, solution=gf, newton_iters=int(data.get("newton_iters", 0)),
                      residual_sup=resid, operator=op, config=ref)
    # the re-assembled residual is limited by the digits stored in the CSV
    res = verify_solution(rep, ref, tol=max(cfg.tol, 1e-8))
    body = dict(data)
    body.update({"checks": res["checks"], "passed": res["passed"],
                 "measured": {"residual_sup_reassembled": resid,
                              "zero_locations": res["nodal"]["zero_locations"],
                              "certified": res["nodal"]["certified"],
                              "flags": res["nodal"]["flags"],
                              "height_gaps": [p["height_gap"] for p in res["peaks"]],
                              "mass_errors": [p["mass_error"] for p in res["peaks"]],
                              "profile_sup": res["profile_sup"],
                              "profile_weighted_sup": res["profile_weighted_sup"]}})
    io.write_json(out / "verify.json", body)
    print(json.dumps({"passed": res["passed"], "checks": res["checks"]}, sort_keys=True))
    return EXIT_OK if res["passed"] else EXIT_VERIFY


def cmd_probe(cfg, out):
    signs = cfg.sign_tuple()
    summary = {"k": cfg.k, "signs": list(signs)}
    if cfg.k >= 3:
        summary = conjecture_probe(cfg.k, signs, n_starts=cfg.n_starts, seed=cfg.seed)
    alternating = all(a == -b for a, b in zip(signs, signs[1:]))
    if alternating:
        try:
            rows = boundary_blowdown_probe(cfg.k, signs)
        except NoCriticalPoint:
            rows = []
        io.write_table(out / "blowdown.csv", ["kind", "distance", "value"], rows)
    io.write_json(out / "probe.json", summary)
    print(json.dumps(io.rounded({k: summary[k] for k in summary if k != "critical_points"}),
                     sort_keys=True))
    return EXIT_OK


HANDLERS = {"optimize": cmd_optimize, "solve": cmd_solve, "sweep": cmd_sweep,
            "verify": cmd_verify, "probe": cmd_probe}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(cfg, out)
        return HANDLERS[cfg.command](cfg, out)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergence, SingularJacobian, NoCriticalPoint, FloatingPointError) as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except (AmbiguousZero, MissingPeak) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ValueError as exc:
        # bad numeric input caught deeper down, e.g. lambda below the mesh floor
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
