"""Scenario configuration and the classify/certify/simulate/verify pipeline.

A scenario is a YAML key/value tree; every field has a default except
``params``.  ``run_scenario`` emits the full set of audit files and maps
outcomes onto documented exit codes:

    0  all requested checks passed
    2  certificate or theorem inadmissible (reported, not an error)
    3  envelope, differential-inequality, or positivity violation
    4  input error (malformed config, invalid parameters)
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import verify
from .certificate import (CertificateOptions, LKCertificate, assemble_C,
                          build_certificate)
from .errors import CertificateError, DomainError, IntegrationError, ParameterError
from .model import ModelParams, classify_equilibria, derive_params
from .simulate import History, check_positivity_boundedness, integrate
from .spectrum import lemma_classify

EXIT_OK = 0
EXIT_INADMISSIBLE = 2
EXIT_VIOLATION = 3
EXIT_INPUT = 4

_HISTORY_PRESETS = ("constant", "equilibrium_plus_constant",
                    "equilibrium_plus_sine", "tabulated")
_OUTPUT_FILES = ("equilibria", "certificate", "trajectory",
                 "verification", "report")


class ConfigError(ValueError):
    """Malformed scenario configuration; message names the field."""


@dataclass
class Scenario:
    params: dict
    history_preset: str = "equilibrium_plus_constant"
    history_args: dict = field(default_factory=dict)
    horizon: float = 50.0
    step_divisor: int = 20
    stride: int = 1
    options: CertificateOptions = field(default_factory=CertificateOptions)
    out_dir: str = "out"
    files: tuple = _OUTPUT_FILES


def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError(f"missing key {key!r} in {where}")
    return mapping[key]


def load_scenario(config_path) -> Scenario:
    path = Path(config_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(tree, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    unknown = set(tree) - {"params", "history", "horizon", "solver",
                           "overrides", "outputs"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    params = _require(tree, "params", "config")
    if not isinstance(params, dict):
        raise ConfigError("'params' must be a mapping of rate names to numbers")

    hist = tree.get("history", {}) or {}
    preset = hist.get("preset", "equilibrium_plus_constant")
    if preset not in _HISTORY_PRESETS:
        raise ConfigError(f"history.preset must be one of {_HISTORY_PRESETS}, "
                          f"got {preset!r}")
    history_args = {k: v for k, v in hist.items() if k != "preset"}

    solver = tree.get("solver", {}) or {}
    overrides = tree.get("overrides", {}) or {}
    outputs = tree.get("outputs", {}) or {}
    files = tuple(outputs.get("files", _OUTPUT_FILES))
    for f in files:
        if f not in _OUTPUT_FILES:
            raise ConfigError(f"unknown output file kind {f!r}")
    try:
        options = CertificateOptions(
            alpha=float(overrides.get("alpha", 1.0)),
            m_fraction=float(overrides.get("m_fraction", 0.5)),
            mu_fraction=float(overrides.get("mu_fraction", 0.25)),
            h33_factor=float(overrides.get("h33_factor", 2.0)))
        return Scenario(
            params=dict(params),
            history_preset=preset,
            history_args=history_args,
            horizon=float(tree.get("horizon", 50.0)),
            step_divisor=int(solver.get("step_divisor", 20)),
            stride=int(solver.get("stride", 1)),
            options=options,
            out_dir=str(outputs.get("dir", "out")),
            files=files)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario field: {exc}") from exc


def build_history(scenario: Scenario, p: ModelParams) -> History:
    args = scenario.history_args
    preset = scenario.history_preset
    try:
        if preset == "constant":
            return History.constant(p, _require(args, "values", "history"))
        if preset == "equilibrium_plus_constant":
            return History.equilibrium_plus_constant(
                p, args.get("offsets", (0.0, 0.0, 0.0)))
        if preset == "equilibrium_plus_sine":
            return History.equilibrium_plus_sine(
                p, _require(args, "amplitudes", "history"),
                _require(args, "frequency", "history"),
                args.get("phase", 0.0))
        table_path = _require(args, "table", "history")
        rows = np.loadtxt(table_path, delimiter=",", skiprows=1)
        return History.tabulated(p, rows[:, 0], rows[:, 1:4])
    except (DomainError, OSError, IndexError) as exc:
        raise ConfigError(f"invalid history: {exc}") from exc


def _solver_step(scenario: Scenario, p: ModelParams) -> float:
    base = min(v for v in (p.tau1, p.tau2, 0.01) if v > 0.0)
    h0 = base / scenario.step_divisor
    if p.tau_min > 0.0:
        return p.tau_min / math.ceil(p.tau_min / h0)
    return h0


def run_scenario(config_path, out_dir=None) -> tuple[int, dict[str, Path]]:
    """Run the full pipeline for one scenario config; returns (exit code, files)."""
    try:
        scenario = load_scenario(config_path)
    except ConfigError as exc:
        print(f"input error: {exc}")
        return EXIT_INPUT, {}
    return run_loaded_scenario(scenario, out_dir)


def run_loaded_scenario(scenario: Scenario,
                        out_dir=None) -> tuple[int, dict[str, Path]]:
    out = Path(out_dir) if out_dir is not None else Path(scenario.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emitted: dict[str, Path] = {}

    def emit(kind, name, text):
        if kind in scenario.files:
            path = out / name
            path.write_text(text)
            emitted[kind] = path

    try:
        p = derive_params(**scenario.params)
    except (ParameterError, TypeError) as exc:
        print(f"input error: {exc}")
        return EXIT_INPUT, emitted

    eq = classify_equilibria(p)
    lines = [f"case: {eq.case_id}"]
    for label, point in eq.points:
        lines.append(f"{label}: "
                     + "  ".join(f"{v:.17g}" for v in point))
    try:
        verdict = lemma_classify(p)
        lines.append(f"verdict: {verdict.kind}")
        lines.append(f"witness: {verdict.witness}")
    except DomainError as exc:
        verdict = None
        lines.append(f"verdict: inapplicable ({exc})")
    emit("equilibria", "equilibria.txt", "\n".join(lines) + "\n")

    cert: LKCertificate | None = None
    cert_failure = None
    try:
        cert = build_certificate(p, scenario.options)
        creport = assemble_C(cert)
        emit("certificate", "certificate.txt",
             cert.report()
             + f"C positive definite on supported subspace: "
               f"{creport.positive_definite}\n"
               f"C min eigenvalue (supported): "
               f"{creport.min_eig_supported:.17g}\n")
    except (CertificateError, DomainError) as exc:
        cert_failure = str(exc)
        emit("certificate", "certificate.txt",
             f"certificate not constructed: {exc}\n")

    try:
        hist = build_history(scenario, p)
    except ConfigError as exc:
        print(f"input error: {exc}")
        return EXIT_INPUT, emitted
    try:
        traj = integrate(p, hist, scenario.horizon,
                         step=_solver_step(scenario, p))
    except (DomainError, IntegrationError) as exc:
        print(f"input error: {exc}")
        return EXIT_INPUT, emitted
    if "trajectory" in scenario.files:
        path = out / "trajectory.csv"
        traj.to_csv(path, stride=scenario.stride)
        emitted["trajectory"] = path

    positivity = check_positivity_boundedness(traj, p)
    report_lines = [f"positivity/boundedness: "
                    f"{'PASS' if positivity.passed else 'FAIL'}",
                    f"observed suprema: "
                    + "  ".join(f"{v:.17g}" for v in positivity.observed_sup)]
    report_lines += positivity.messages

    if cert is None:
        report_lines.append(f"theorem inadmissible: certificate not "
                            f"constructed ({cert_failure})")
        emit("report", "report.txt", "\n".join(report_lines) + "\n")
        return EXIT_INADMISSIBLE, emitted

    ext = verify.extend_history(hist, p)
    theorem = verify.check_initial_conditions(hist, ext, cert, p)
    report_lines.append(theorem.to_text().rstrip())

    if not theorem.envelopes_valid:
        failed = [name for name, c in theorem.conditions.items() if not c.passed]
        report_lines.append(
            f"theorem inadmissible: condition(s) {', '.join(failed)} failed")
        emit("report", "report.txt", "\n".join(report_lines) + "\n")
        return EXIT_INADMISSIBLE, emitted

    env = verify.check_envelope(traj, cert, theorem)
    dineq = verify.check_differential_inequality(traj, cert, p)
    report_lines.append(f"envelope check: {'PASS' if env.passed else 'FAIL'} "
                        f"(worst margins "
                        + "  ".join(f"{m:.17g}" for m in env.worst_margin)
                        + f", tolerance {env.tolerance:.17g})")
    report_lines.append(f"differential inequality: "
                        f"{'PASS' if dineq.passed else 'FAIL'} "
                        f"(worst slack {dineq.worst_slack:.17g})")
    emit("report", "report.txt", "\n".join(report_lines) + "\n")
    if "verification" in scenario.files:
        path = out / "verification.csv"
        verify.write_verification_csv(path, traj, cert, theorem, p)
        emitted["verification"] = path

    if not (positivity.passed and env.passed and dineq.passed):
        return EXIT_VIOLATION, emitted
    return EXIT_OK, emitted


def _set_scenario_value(scenario: Scenario, key: str, value: float):
    parts = key.split(".")
    if parts[0] == "params" and len(parts) == 2:
        if parts[1] not in scenario.params:
            raise ConfigError(f"unknown parameter {parts[1]!r}")
        scenario.params[parts[1]] = value
    elif parts[0] == "horizon" and len(parts) == 1:
        scenario.horizon = value
    elif parts[0] == "history" and len(parts) == 3:
        name, idx = parts[1], int(parts[2])
        seq = list(scenario.history_args.get(name, (0.0, 0.0, 0.0)))
        seq[idx] = value
        scenario.history_args[name] = seq
    elif parts[0] == "history" and len(parts) == 2:
        scenario.history_args[parts[1]] = value
    elif parts[0] == "overrides" and len(parts) == 2:
        kwargs = {"alpha": scenario.options.alpha,
                  "m_fraction": scenario.options.m_fraction,
                  "mu_fraction": scenario.options.mu_fraction,
                  "h33_factor": scenario.options.h33_factor}
        if parts[1] not in kwargs:
            raise ConfigError(f"unknown override {parts[1]!r}")
        kwargs[parts[1]] = value
        scenario.options = CertificateOptions(**kwargs)
    else:
        raise ConfigError(f"key {key!r} does not address a scalar field")


def sweep(config_path, key: str, values, out_dir=None) -> tuple[int, Path]:
    """Run the scenario once per value of one scalar field; write a summary CSV.

    A failing row is recorded and does not abort the sweep.
    """
    base_out = Path(out_dir) if out_dir is not None else None
    first = load_scenario(config_path)  # raises ConfigError on bad input
    root = base_out if base_out is not None else Path(first.out_dir)
    root.mkdir(parents=True, exist_ok=True)
    summary = root / "sweep_summary.csv"
    with open(summary, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "verdict", "sigma", "epsilon", "q", "V0",
                         "admissible", "worst_envelope_margin", "exit_code"])
        for i, value in enumerate(values):
            scenario = load_scenario(config_path)
            row_dir = root / f"sweep_{i:03d}"
            try:
                _set_scenario_value(scenario, key, float(value))
                code, _ = run_loaded_scenario(scenario, row_dir)
                row = _summary_row(scenario, value, code)
            except (ConfigError, ParameterError, DomainError) as exc:
                row = [f"{float(value):.17g}", f"error: {exc}",
                       "", "", "", "", "", "", str(EXIT_INPUT)]
            writer.writerow(row)
    return EXIT_OK, summary


def _summary_row(scenario: Scenario, value, code: int) -> list[str]:
    p = derive_params(**scenario.params)
    try:
        verdict = lemma_classify(p).kind
    except DomainError:
        verdict = "inapplicable"
    sigma = epsilon = q = v0 = ""
    admissible = ""
    worst = ""
    try:
        cert = build_certificate(p, scenario.options)
        sigma, epsilon, q = (f"{cert.sigma:.17g}", f"{cert.epsilon:.17g}",
                             f"{cert.q:.17g}")
        hist = build_history(scenario, p)
        ext = verify.extend_history(hist, p)
        theorem = verify.check_initial_conditions(hist, ext, cert, p)
        v0 = f"{theorem.V0:.17g}"
        admissible = str(theorem.envelopes_valid)
        if theorem.envelopes_valid:
            traj = integrate(p, hist, scenario.horizon,
                             step=_solver_step(scenario, p))
            env = verify.check_envelope(traj, cert, theorem)
            worst = f"{min(env.worst_margin):.17g}"
    except (CertificateError, DomainError, ConfigError, IntegrationError):
        pass
    return [f"{float(value):.17g}", verdict, sigma, epsilon, q, v0,
            admissible, worst, str(code)]
