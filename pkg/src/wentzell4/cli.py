"""Command-line entry point.

Subcommands: ``run`` (time integration, trajectory CSV + summary JSON),
``verify`` (closed-form verification suites, report JSON), ``spectrum``
(pencil eigenvalues, CSV) and ``resolvent`` (single shifted solve, CSV +
residual JSON).  One JSON config file drives everything; identical config
and seed produce byte-identical outputs.  Exit status is 0 exactly when
every check requested by the subcommand passes.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coefficient import DegeneracyClass, classify, constant_profile, power_profile
from .evolution import (
    ProblemConfig,
    Scheme,
    build_system,
    initial_dofs,
    resolve_space_spec,
    resolvent_solve,
    run,
)
from .forms import OperatorForm, WentzellParams
from .oracle import SUITES, dense_decompose, verification_report

__all__ = ["ConfigError", "CliConfig", "parse_config", "dispatch", "main"]


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.reason = message


def _reject_unknown(mapping, allowed, where):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(
            f"{where}.{sorted(unknown)[0]}" if where else sorted(unknown)[0],
            "unknown key",
        )


def _number(mapping, where, key, default=None, required=False):
    if key not in mapping:
        if required:
            raise ConfigError(f"{where}.{key}" if where else key, "missing required key")
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}" if where else key, "must be a number")
    return float(value)


@dataclass(frozen=True)
class CliConfig:
    problem: ProblemConfig
    verify_suites: tuple
    spectrum_count: int | None
    resolvent_lambda: float
    resolvent_f: object


def parse_config(text) -> CliConfig:
    """Validate a JSON config document and apply defaults.

    Required: operator, coefficient.x0, coefficient.K, wentzell.beta0/1,
    wentzell.gamma0/1, time.T.  Defaults: scheme implicit_euler, n = 32,
    dt = T/100, grading 2 for a strongly degenerate coefficient and 1
    otherwise.  Unknown keys anywhere are rejected.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be an object")
    _reject_unknown(
        doc,
        {
            "operator", "coefficient", "wentzell", "mesh", "time", "scheme",
            "u0", "project_u0", "forcing", "verify", "spectrum", "resolvent",
        },
        "",
    )

    operator = doc.get("operator")
    if operator not in ("divergence", "nondivergence"):
        raise ConfigError("operator", "must be 'divergence' or 'nondivergence'")
    form = OperatorForm(operator)

    cdoc = doc.get("coefficient")
    if not isinstance(cdoc, dict):
        raise ConfigError("coefficient", "missing or not an object")
    _reject_unknown(cdoc, {"x0", "K", "scale", "profile"}, "coefficient")
    profile = cdoc.get("profile", "power")
    if profile not in ("power", "constant"):
        raise ConfigError("coefficient.profile", "must be 'power' or 'constant'")
    scale = _number(cdoc, "coefficient", "scale", default=1.0)
    if scale <= 0.0:
        raise ConfigError("coefficient.scale", "must be > 0")
    if profile == "constant":
        coeff = constant_profile(scale, _number(cdoc, "coefficient", "x0", default=0.5))
    else:
        x0 = _number(cdoc, "coefficient", "x0", required=True)
        K = _number(cdoc, "coefficient", "K", required=True)
        if not 0.0 <= x0 <= 1.0:
            raise ConfigError("coefficient.x0", "must lie in [0, 1]")
        if K < 0.0:
            raise ConfigError("coefficient.K", "must be >= 0")
        coeff = power_profile(x0, K, scale)
    if classify(coeff) is DegeneracyClass.STRONG and coeff.K >= 2.0:
        raise ConfigError(
            "coefficient.K", "strong degeneracy requires K in [1, 2)"
        )

    wdoc = doc.get("wentzell")
    if not isinstance(wdoc, dict):
        raise ConfigError("wentzell", "missing or not an object")
    _reject_unknown(wdoc, {"beta0", "beta1", "gamma0", "gamma1"}, "wentzell")
    beta0 = _number(wdoc, "wentzell", "beta0", required=True)
    beta1 = _number(wdoc, "wentzell", "beta1", required=True)
    gamma0 = _number(wdoc, "wentzell", "gamma0", default=0.0)
    gamma1 = _number(wdoc, "wentzell", "gamma1", default=0.0)
    for name, value in (("beta0", beta0), ("beta1", beta1)):
        if value <= 0.0:
            raise ConfigError(f"wentzell.{name}", "must be > 0")
    for name, value in (("gamma0", gamma0), ("gamma1", gamma1)):
        if value > 0.0:
            raise ConfigError(f"wentzell.{name}", "must be <= 0")
    params = WentzellParams(beta0, beta1, gamma0, gamma1)

    mdoc = doc.get("mesh", {})
    if not isinstance(mdoc, dict):
        raise ConfigError("mesh", "must be an object")
    _reject_unknown(mdoc, {"n", "grading"}, "mesh")
    n = mdoc.get("n", 32)
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise ConfigError("mesh.n", "must be an integer >= 2")
    grading = _number(mdoc, "mesh", "grading")
    if grading is not None and grading < 1.0:
        raise ConfigError("mesh.grading", "must be >= 1")

    tdoc = doc.get("time")
    if not isinstance(tdoc, dict):
        raise ConfigError("time", "missing or not an object")
    _reject_unknown(tdoc, {"T", "dt"}, "time")
    T = _number(tdoc, "time", "T", required=True)
    if T <= 0.0:
        raise ConfigError("time.T", "must be > 0")
    dt = _number(tdoc, "time", "dt")
    if dt is not None and not 0.0 < dt <= T:
        raise ConfigError("time.dt", "must satisfy 0 < dt <= T")

    scheme_name = doc.get("scheme", "implicit_euler")
    try:
        scheme = Scheme(scheme_name)
    except ValueError:
        raise ConfigError(
            "scheme", "must be 'implicit_euler' or 'crank_nicolson'"
        ) from None

    u0 = doc.get("u0", "one")
    try:
        resolve_space_spec(u0)
    except ValueError as exc:
        raise ConfigError("u0", str(exc)) from None
    project_u0 = doc.get("project_u0", False)
    if not isinstance(project_u0, bool):
        raise ConfigError("project_u0", "must be a boolean")

    forcing = doc.get("forcing")
    if forcing is not None and not isinstance(forcing, (str, dict)):
        raise ConfigError("forcing", "must be 'zero' or an object")
    if isinstance(forcing, dict):
        _reject_unknown(forcing, {"kind", "space", "rate"}, "forcing")
        if forcing.get("kind") == "manufactured" and form is not OperatorForm.DIVERGENCE:
            raise ConfigError(
                "forcing.kind", "manufactured forcing targets the divergence form"
            )

    vdoc = doc.get("verify", {})
    if not isinstance(vdoc, dict):
        raise ConfigError("verify", "must be an object")
    _reject_unknown(vdoc, {"suites"}, "verify")
    suites = vdoc.get("suites", sorted(SUITES))
    if not isinstance(suites, list) or not all(isinstance(s, str) for s in suites):
        raise ConfigError("verify.suites", "must be a list of suite names")
    bad = set(suites) - set(SUITES)
    if bad:
        raise ConfigError("verify.suites", f"unknown suite {sorted(bad)[0]!r}")

    sdoc = doc.get("spectrum", {})
    if not isinstance(sdoc, dict):
        raise ConfigError("spectrum", "must be an object")
    _reject_unknown(sdoc, {"count"}, "spectrum")
    count = sdoc.get("count")
    if count is not None and (not isinstance(count, int) or count < 1):
        raise ConfigError("spectrum.count", "must be a positive integer")

    rdoc = doc.get("resolvent", {})
    if not isinstance(rdoc, dict):
        raise ConfigError("resolvent", "must be an object")
    _reject_unknown(rdoc, {"lambda", "f"}, "resolvent")
    lam = _number(rdoc, "resolvent", "lambda", default=1.0)
    if lam <= max(0.0, gamma0, gamma1):
        raise ConfigError("resolvent.lambda", "must exceed max(0, gamma0, gamma1)")
    rf = rdoc.get("f", "one")
    try:
        resolve_space_spec(rf)
    except ValueError as exc:
        raise ConfigError("resolvent.f", str(exc)) from None

    problem = ProblemConfig(
        form=form,
        coeff=coeff,
        params=params,
        T=T,
        dt=dt,
        n=n,
        grading=grading,
        scheme=scheme,
        u0=u0,
        forcing=forcing,
        project_u0=project_u0,
    )
    return CliConfig(problem, tuple(suites), count, lam, rf)


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_run(config: CliConfig, out: Path, seed):
    traj = run(config.problem)
    traj.write_csv(out / "trajectory.csv")
    summary = traj.summary()
    _write_json(out / "summary.json", summary)
    checks = [v for v in (summary["contraction_ok"], summary["energy_bound_ok"]) if v is not None]
    return all(checks)


def _cmd_verify(config: CliConfig, out: Path, seed):
    report = verification_report(config.verify_suites, seed=seed)
    _write_json(out / "verification.json", report)
    return report["all_pass"]


def _cmd_spectrum(config: CliConfig, out: Path, seed):
    system = build_system(config.problem)
    decomp = dense_decompose(system)
    count = config.spectrum_count or len(decomp.eigenvalues)
    with open(out / "spectrum.csv", "w") as fh:
        fh.write("index,eigenvalue\n")
        for i, lam in enumerate(decomp.eigenvalues[:count]):
            fh.write(f"{i},{lam:.17g}\n")
    lam_max = max(float(decomp.eigenvalues[-1]), 1.0)
    psd_ok = bool(decomp.eigenvalues[0] >= -1e-10 * lam_max)
    _write_json(
        out / "spectrum.json",
        {
            "min_eigenvalue": float(decomp.eigenvalues[0]),
            "max_eigenvalue": float(decomp.eigenvalues[-1]),
            "near_zero_count": decomp.near_zero_count(),
            "psd_ok": psd_ok,
        },
    )
    return psd_ok


def _cmd_resolvent(config: CliConfig, out: Path, seed):
    system = build_system(config.problem)
    f = initial_dofs(system, config.resolvent_f)
    u = resolvent_solve(system, config.resolvent_lambda, f)
    with open(out / "resolvent.csv", "w") as fh:
        fh.write("dof,value\n")
        for i, v in enumerate(u):
            fh.write(f"{i},{v:.17g}\n")
    Mf, Kf = system.free_matrices()
    A = config.resolvent_lambda * Mf + Kf
    b = (system.M @ f)[system.free]
    r = float(np.linalg.norm(A @ u[system.free] - b))
    b_norm = max(float(np.linalg.norm(b)), 1e-300)
    relative = r / b_norm
    # the plain relative residual has a floor of eps*||A||*||u|| / ||b||
    # that grows with refinement; the gate uses the normwise backward
    # error, which is mesh-independent
    backward = r / (
        float(np.linalg.norm(A, 2)) * float(np.linalg.norm(u[system.free])) + b_norm
    )
    ok = backward <= 1e-14
    _write_json(
        out / "resolvent.json",
        {
            "lambda": config.resolvent_lambda,
            "relative_residual": relative,
            "backward_error": backward,
            "residual_ok": ok,
        },
    )
    return ok


_COMMANDS = {
    "run": _cmd_run,
    "verify": _cmd_verify,
    "spectrum": _cmd_spectrum,
    "resolvent": _cmd_resolvent,
}


def dispatch(command, config: CliConfig, out, seed=0, threads=1):
    """Execute one subcommand; returns the process exit status."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if threads < 1:
        raise ConfigError("threads", "must be >= 1")
    ok = _COMMANDS[command](config, out, seed)
    return 0 if ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="wentzell4",
        description="Fourth-order degenerate parabolic problems with "
        "generalized Wentzell boundary conditions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "integrate the configured problem and write the trajectory"),
        ("verify", "run the closed-form verification suites"),
        ("spectrum", "write the pencil eigenvalues"),
        ("resolvent", "solve one shifted system and report the residual"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default="./out", help="output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=1,
            help="worker threads for element-parallel sections (default 1 "
            "for reproducibility; the current build is sequential)",
        )
        p.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    args = parser.parse_args(argv)

    try:
        config = parse_config(Path(args.config).read_text())
        return dispatch(args.command, config, args.out, seed=args.seed, threads=args.threads)
    except ConfigError as exc:
        print(json.dumps({"error": exc.reason, "key": exc.key}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": str(exc), "key": "--config"}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
