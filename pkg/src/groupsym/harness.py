"""Run execution, artifact output, and artifact-only verification.

execute turns a parsed config into three files in an artifact directory:
result.json (series and final state, floats at full precision), trajectory.csv
(the lifted weight trajectory), and manifest.json (config hash, seed, RNG
algorithm, tool version), plus a normalized config.json copy.  All writes are
atomic, and a rerun of the same config and seed produces a byte-identical
trajectory CSV.

verify replays nothing: every check reads the artifacts alone and reports
pass/fail with its worst-case margin.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .actions import (
    decode_state,
    encode_state,
    load_state,
    pauli_matrices,
    pauli_quotient_group,
    permutation_action,
    regular_action,
)
from .applications import (
    ExperimentResult,
    run_dft,
    run_dynamical_decoupling,
    run_gossip_consensus,
    run_probability_symmetrization,
    run_quantum_gossip,
    run_random_state_generation,
    spectral_comparison,
)
from .config import ConfigError, RunConfig, config_hash, serialize_config
from .groups import (
    FiniteGroup,
    cyclic_group,
    group_from_json,
    symmetric_group,
    transposition_index,
)
from .lifted import (
    envelope_bounds,
    find_mixing_certificate,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .schedules import (
    RNG_ALGORITHM,
    CyclicSchedule,
    DDBisectionSchedule,
    ExplicitSchedule,
    RandomGossipSchedule,
    RandomSubsetSchedule,
    schedule_from_csv,
)

__all__ = [
    "HarnessError",
    "RunArtifacts",
    "CheckResult",
    "VerificationReport",
    "execute",
    "verify",
    "certify_run",
    "spectral_run",
    "result_to_dict",
    "EXIT_OK",
    "EXIT_NOT_CONVERGED",
    "EXIT_CONFIG",
    "EXIT_RUNTIME",
    "ENV_OUTPUT_ROOT",
    "VERIFY_CHECKS",
    "TOOL_VERSION",
]

TOOL_VERSION = "0.1.0"

EXIT_OK = 0
EXIT_NOT_CONVERGED = 3
EXIT_CONFIG = 4
EXIT_RUNTIME = 5

ENV_OUTPUT_ROOT = "GROUPSYM_OUTPUT_ROOT"

RESULT_FILE = "result.json"
TRAJECTORY_FILE = "trajectory.csv"
MANIFEST_FILE = "manifest.json"
CONFIG_FILE = "config.json"

VERIFY_CHECKS = (
    "artifacts",
    "weights",
    "lyapunov",
    "kl",
    "envelope",
    "conserved",
    "lift",
    "consistency",
)

# Verification slack: CSV and JSON round-trips are exact, so consistency
# comparisons use tight float tolerances; monotonicity allows accumulated
# rounding of one ulp-scale term per step.
WEIGHT_SUM_ATOL = 1e-9
WEIGHT_NEG_ATOL = 1e-12
SERIES_MATCH_ATOL = 1e-12
MONOTONE_ATOL = 1e-12
ENVELOPE_ATOL = 1e-12
KL_DISTINGUISH_ATOL = 1e-7


class HarnessError(RuntimeError):
    """Runtime failure inside a run, annotated with its module of origin."""

    def __init__(self, message: str, *, module: str = "harness", step: Optional[int] = None):
        where = f"[{module}" + (f", step {step}" if step is not None else "") + "]"
        super().__init__(f"{where} {message}")
        self.module = module
        self.step = step


def _substream(seed: int, key: int) -> int:
    """Derive an independent 64-bit stream seed from the top-level seed."""
    ss = np.random.SeedSequence(seed, spawn_key=(key,))
    return int(ss.generate_state(1, np.uint64)[0])


SEED_SCHEDULE = 0
SEED_STATE = 1
SEED_TRIALS = 2


# -- building runs from configs -----------------------------------------------


def _build_group(spec: dict, config: RunConfig) -> FiniteGroup:
    if spec["kind"] == "cyclic":
        return cyclic_group(spec["n"])
    if spec["kind"] == "symmetric":
        return symmetric_group(spec["m"])
    return group_from_json(config.resolve(spec["path"]))


def _resolve_elements(entries, group: FiniteGroup, m: Optional[int]) -> List[int]:
    """Map config-level entries (indices, [j, k] edges, names) to element indices."""
    names = getattr(group, "element_names", None)
    out = []
    for entry in entries:
        if isinstance(entry, list):
            if m is None:
                raise ConfigError(f"edge entry {entry} is only valid for node-based runs")
            out.append(transposition_index(group, entry[0], entry[1]))
        elif isinstance(entry, str):
            if not names or entry not in names:
                raise ConfigError(f"group has no element named {entry!r}")
            out.append(list(names).index(entry))
        else:
            out.append(int(entry))
    return out


def build_schedule(config: RunConfig, group: FiniteGroup, *, m: Optional[int] = None,
                   default_support: Optional[List[int]] = None):
    """Construct the schedule object a config describes over a concrete group."""
    spec = config.schedule
    kind = spec["kind"]
    if kind == "cyclic":
        elements = _resolve_elements(spec["elements"], group, m)
        return CyclicSchedule(group, elements, spec["alpha"])
    if kind in ("random-gossip", "random-subset"):
        if "support" in spec:
            support = _resolve_elements(spec["support"], group, m)
        elif default_support:
            support = list(default_support)
        else:
            raise ConfigError("schedule.support: required for this application")
        seed = spec.get("seed")
        if seed is None:
            seed = _substream(config.seed, SEED_SCHEDULE)
        cls = RandomGossipSchedule if kind == "random-gossip" else RandomSubsetSchedule
        return cls(group, support, tuple(spec["alpha_range"]), seed)
    if kind == "dd-bisection":
        chooser = _resolve_elements(spec["chooser"], group, None)
        return DDBisectionSchedule(group, chooser, spec["alpha"])
    # custom-sequence
    if "rows" in spec:
        rows = [np.asarray(row, dtype=np.float64) for row in spec["rows"]]
        return ExplicitSchedule(group, rows, policy=spec["policy"])
    return schedule_from_csv(config.resolve(spec["path"]), group, policy=spec["policy"])


def _state_rng(config: RunConfig) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_substream(config.seed, SEED_STATE)))


def _initial_array(config: RunConfig, shape, kind: str) -> np.ndarray:
    """Materialize the configured initial state for a target shape and flavor."""
    spec = config.initial_state
    if spec["source"] == "inline":
        data = spec["data"]
        if isinstance(data, dict):
            return decode_state(data)
        dtype = np.complex128 if kind in ("complex", "hermitian") else np.float64
        try:
            return np.asarray(data, dtype=dtype)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"initial_state.data: not a numeric array: {exc}")
    if spec["source"] == "file":
        return load_state(config.resolve(spec["path"]))
    rng = _state_rng(config)
    scale = spec["scale"]
    if kind == "real":
        return scale * rng.standard_normal(shape)
    if kind == "complex":
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    if kind == "prob":
        v = np.abs(rng.standard_normal(shape)) + 1e-3
        return v / v.sum()
    if kind == "hermitian":
        a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return scale * (a + a.conj().T) / 2.0
    if kind == "traceless-hermitian-2":
        sigma = pauli_matrices()
        coeffs = scale * rng.standard_normal(3)
        return np.tensordot(coeffs, sigma[1:], axes=1)
    raise ValueError(f"unknown state flavor {kind!r}")


def run_from_config(config: RunConfig) -> ExperimentResult:
    """Dispatch a validated config to its application runner."""
    tol = config.tolerances
    threshold = tol["residual"]
    engine = dict(threshold=threshold, certify=True, delta_floor=tol["delta_floor"])
    app = config.application
    params = config.params

    if app == "gossip":
        m, n, edges = params["m"], params["n"], params["edges"]
        group = symmetric_group(m)
        support = sorted({transposition_index(group, j, k) for j, k in edges})
        schedule = build_schedule(config, group, m=m, default_support=support)
        x0 = _initial_array(config, (m * n,), "real")
        return run_gossip_consensus(m, n, edges, schedule, x0, config.steps, **engine)

    if app == "prob-sym":
        m, size, edges = params["m"], params["outcome_size"], params["edges"]
        group = symmetric_group(m)
        support = sorted({transposition_index(group, j, k) for j, k in edges})
        schedule = build_schedule(config, group, m=m, default_support=support)
        joint0 = _initial_array(config, (size,) * m, "prob")
        return run_probability_symmetrization(
            m, size, edges, schedule, joint0, config.steps, **engine
        )

    if app == "quantum-gossip":
        m, d, edges = params["m"], params["local_dim"], params["edges"]
        group = symmetric_group(m)
        support = sorted({transposition_index(group, j, k) for j, k in edges})
        schedule = build_schedule(config, group, m=m, default_support=support)
        dim = d**m
        X0 = _initial_array(config, (dim, dim), "hermitian")
        return run_quantum_gossip(m, d, edges, schedule, X0, config.steps, **engine)

    if app == "dft":
        N = params["N"]
        group = cyclic_group(N)
        schedule = build_schedule(config, group)
        x = _initial_array(config, (N,), "complex")
        return run_dft(N, x, schedule, config.steps, **engine)

    if app == "random-state":
        group = _build_group(params["group"], config)
        action = regular_action(group)
        schedule = build_schedule(config, group)
        y0 = _initial_array(config, (group.order,), "real")
        return run_random_state_generation(
            action,
            y0,
            schedule,
            config.steps,
            config.trials,
            _substream(config.seed, SEED_TRIALS),
        )

    if app == "dd":
        group, unitaries = pauli_quotient_group(), pauli_matrices()
        chooser = _resolve_elements(config.schedule["chooser"], group, None)
        H_d = _initial_array(config, (2, 2), "traceless-hermitian-2")
        kwargs = {"threshold": threshold}
        if "dt" in params:
            kwargs["dt"] = params["dt"]
        if "frame_cap" in params:
            kwargs["frame_cap"] = params["frame_cap"]
        return run_dynamical_decoupling(
            group,
            H_d,
            unitaries,
            chooser,
            config.steps,
            config.schedule["alpha"],
            **kwargs,
        )

    raise ConfigError(f"application: unknown application {app!r}")


# -- artifact output -----------------------------------------------------------


def _jsonify(value):
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, np.ndarray):
        return encode_state(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    return value


def result_to_dict(result: ExperimentResult, config: RunConfig) -> dict:
    """JSON-safe result document; floats survive round-trips exactly."""
    cert = None
    if result.certificate is not None:
        cert = {
            "T": int(result.certificate.T),
            "delta": float(result.certificate.delta),
            "satisfied": bool(result.certificate.satisfied),
            "witness": _jsonify(result.certificate.witness),
        }
    extras = dict(result.extras)
    conserved = extras.pop("conserved_series", {})
    lift_tol = 0.01 if config.application == "random-state" else config.tolerances["residual"]
    return {
        "schema_version": 1,
        "application": config.application,
        "converged": bool(result.converged),
        "steps_run": int(result.steps_run),
        "threshold": float(result.threshold),
        "group_order": int(result.metadata.get("group_order", len(result.weights_trajectory[0].weights))),
        "residuals": [float(v) for v in result.residuals],
        "conserved_drift": float(result.conserved_drift),
        "conserved_series": {
            name: [np.asarray(v).tolist() for v in series]
            for name, series in conserved.items()
        },
        "lift_direct_gap": float(result.lift_direct_gap),
        "lift_tolerance": float(lift_tol),
        "tolerances": dict(config.tolerances),
        "certificate": cert,
        "final_state": encode_state(np.asarray(result.final_state)),
        "metadata": _jsonify(result.metadata),
        "extras": _jsonify(extras),
    }


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_trajectory(path: str, result: ExperimentResult) -> None:
    weights = np.array([w.weights for w in result.weights_trajectory])
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    os.close(fd)
    try:
        write_trajectory_csv(tmp, weights, result.lyapunov, result.kl)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _artifact_dir(config: RunConfig, out_dir: Optional[str]) -> str:
    if out_dir:
        return out_dir
    if config.output:
        return config.resolve(config.output)
    root = os.environ.get(ENV_OUTPUT_ROOT) or os.path.join(os.getcwd(), "runs")
    return os.path.join(root, f"{config.application}-{config_hash(config)[:8]}")


@dataclass
class RunArtifacts:
    """Where a run landed and how it went."""

    directory: str
    result: ExperimentResult
    exit_code: int
    files: List[str] = field(default_factory=list)


def execute(config: RunConfig, *, out_dir: Optional[str] = None) -> RunArtifacts:
    """Run the configured application and write the artifact set."""
    try:
        result = run_from_config(config)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{config.application}: {exc}") from exc
    except Exception as exc:
        raise HarnessError(str(exc), module=config.application) from exc

    directory = _artifact_dir(config, out_dir)
    os.makedirs(directory, exist_ok=True)
    try:
        doc = result_to_dict(result, config)
        _atomic_write_text(
            os.path.join(directory, RESULT_FILE), json.dumps(doc, indent=2) + "\n"
        )
        _atomic_write_trajectory(os.path.join(directory, TRAJECTORY_FILE), result)
        manifest = {
            "tool": "groupsym",
            "version": TOOL_VERSION,
            "rng": RNG_ALGORITHM,
            "seed": config.seed,
            "config_sha256": config_hash(config),
            "application": config.application,
            "artifacts": [CONFIG_FILE, RESULT_FILE, TRAJECTORY_FILE],
        }
        _atomic_write_text(
            os.path.join(directory, MANIFEST_FILE),
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        )
        _atomic_write_text(os.path.join(directory, CONFIG_FILE), serialize_config(config))
    except OSError as exc:
        raise HarnessError(f"could not write artifacts: {exc}", module="harness") from exc

    exit_code = EXIT_OK if result.converged else EXIT_NOT_CONVERGED
    return RunArtifacts(
        directory=directory,
        result=result,
        exit_code=exit_code,
        files=[RESULT_FILE, TRAJECTORY_FILE, MANIFEST_FILE, CONFIG_FILE],
    )


# -- verification from artifacts ----------------------------------------------


@dataclass
class CheckResult:
    """One verification check: pass/fail/skip with its worst margin."""

    name: str
    status: str
    margin: Optional[float]
    detail: str

    def line(self) -> str:
        tag = {"pass": "PASS", "fail": "FAIL", "skip": "SKIP"}[self.status]
        margin = "" if self.margin is None else f" margin={self.margin:.3e}"
        return f"{tag} {self.name}{margin} {self.detail}".rstrip()


@dataclass
class VerificationReport:
    """All checks for one artifact directory."""

    directory: str
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def lines(self) -> List[str]:
        return [c.line() for c in self.checks]


def _canonical_hash_of_doc(doc: dict) -> str:
    import hashlib

    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _uniform_lyapunov(weights: np.ndarray) -> np.ndarray:
    n = weights.shape[1]
    return ((weights - 1.0 / n) ** 2).sum(axis=1)


def _uniform_kl(weights: np.ndarray) -> np.ndarray:
    n = weights.shape[1]
    out = np.zeros(weights.shape[0])
    for i, row in enumerate(weights):
        mask = row > 0
        out[i] = float(np.sum(row[mask] * np.log(row[mask] * n)))
    return out


def verify(directory: str, checks: Optional[List[str]] = None) -> VerificationReport:
    """Check a run's artifacts without re-simulating anything."""
    selected = list(checks) if checks else list(VERIFY_CHECKS)
    for name in selected:
        if name not in VERIFY_CHECKS:
            raise ConfigError(
                f"unknown check {name!r}; expected one of {', '.join(VERIFY_CHECKS)}"
            )
    results: List[CheckResult] = []

    def record(name, status, margin, detail=""):
        if name in selected:
            results.append(CheckResult(name, status, margin, detail))

    missing = [
        f
        for f in (RESULT_FILE, TRAJECTORY_FILE, MANIFEST_FILE, CONFIG_FILE)
        if not os.path.isfile(os.path.join(directory, f))
    ]
    if missing:
        record("artifacts", "fail", None, f"missing: {', '.join(missing)}")
        for name in selected:
            if name != "artifacts":
                results.append(CheckResult(name, "skip", None, "skipped: artifacts missing"))
        return VerificationReport(directory, results)

    try:
        with open(os.path.join(directory, RESULT_FILE)) as fh:
            doc = json.load(fh)
        with open(os.path.join(directory, MANIFEST_FILE)) as fh:
            manifest = json.load(fh)
        with open(os.path.join(directory, CONFIG_FILE)) as fh:
            config_doc = json.load(fh)
        weights, lyapunov, kl = read_trajectory_csv(os.path.join(directory, TRAJECTORY_FILE))
    except (ValueError, OSError) as exc:
        record("artifacts", "fail", None, f"unreadable: {exc}")
        for name in selected:
            if name != "artifacts":
                results.append(CheckResult(name, "skip", None, "skipped: artifacts unreadable"))
        return VerificationReport(directory, results)

    hash_ok = manifest.get("config_sha256") == _canonical_hash_of_doc(config_doc)
    if hash_ok:
        record("artifacts", "pass", None, "all files present, config hash matches")
    else:
        record("artifacts", "fail", None, "manifest config_sha256 does not match config.json")

    rows, order = weights.shape

    # weights: every trajectory row is a distribution.
    sums = weights.sum(axis=1)
    min_entry = weights.min(axis=1)
    sum_dev = np.abs(sums - 1.0)
    worst_sum = int(np.argmax(sum_dev))
    worst_neg = int(np.argmin(min_entry))
    if sum_dev[worst_sum] > WEIGHT_SUM_ATOL:
        record(
            "weights",
            "fail",
            float(WEIGHT_SUM_ATOL - sum_dev[worst_sum]),
            f"row sum off by {sum_dev[worst_sum]:.3e} at step {worst_sum}",
        )
    elif min_entry[worst_neg] < -WEIGHT_NEG_ATOL:
        record(
            "weights",
            "fail",
            float(min_entry[worst_neg] + WEIGHT_NEG_ATOL),
            f"negative weight {min_entry[worst_neg]:.3e} at step {worst_neg}",
        )
    else:
        record(
            "weights",
            "pass",
            float(WEIGHT_SUM_ATOL - sum_dev[worst_sum]),
            f"{rows} rows are valid distributions",
        )

    # lyapunov: stored column matches the weights and never increases.
    recomputed = _uniform_lyapunov(weights)
    col_dev = np.abs(recomputed - lyapunov)
    worst = int(np.argmax(col_dev))
    if col_dev[worst] > SERIES_MATCH_ATOL:
        record(
            "lyapunov",
            "fail",
            float(SERIES_MATCH_ATOL - col_dev[worst]),
            f"stored value disagrees with weights at step {worst} (off by {col_dev[worst]:.3e})",
        )
    else:
        inc = np.diff(recomputed)
        if inc.size and inc.max() > MONOTONE_ATOL:
            at = int(np.argmax(inc)) + 1
            record(
                "lyapunov",
                "fail",
                float(MONOTONE_ATOL - inc.max()),
                f"increase of {inc.max():.3e} at step {at}",
            )
        else:
            margin = float(MONOTONE_ATOL - inc.max()) if inc.size else None
            record("lyapunov", "pass", margin, "column consistent and nonincreasing")

    cert = doc.get("certificate")
    certified = bool(cert and cert.get("satisfied"))

    # kl: stored column matches; strict decrease across certified windows.
    kl_re = _uniform_kl(weights)
    kl_dev = np.abs(kl_re - kl)
    worst = int(np.argmax(kl_dev))
    if kl_dev[worst] > 1e-9:
        record(
            "kl",
            "fail",
            float(1e-9 - kl_dev[worst]),
            f"stored value disagrees with weights at step {worst} (off by {kl_dev[worst]:.3e})",
        )
    elif not certified:
        record("kl", "skip", None, "skipped: no certificate")
    else:
        T = int(cert["T"])
        worst_gap = math.inf
        bad = None
        for t in range(rows - T):
            if np.abs(weights[t] - 1.0 / order).max() <= KL_DISTINGUISH_ATOL:
                continue
            gap = kl_re[t] - kl_re[t + T]
            if gap < worst_gap:
                worst_gap = gap
                bad = t
        if bad is None:
            record("kl", "pass", None, "no distinguishable windows to test")
        elif worst_gap <= 0:
            record(
                "kl",
                "fail",
                float(worst_gap),
                f"window decrease violated at step {bad} (gap {worst_gap:.3e})",
            )
        else:
            record("kl", "pass", float(worst_gap), f"strict decrease over {T}-step windows")

    # envelope: certified runs stay inside the closed-form bounds.
    if not certified:
        record("envelope", "skip", None, "skipped: no certificate")
    else:
        T = int(cert["T"])
        delta = float(cert["delta"])
        rho = 1.0 - order * delta
        worst_margin = math.inf
        bad = None
        for t in range(rows):
            k = t // T
            upper, lower = envelope_bounds(order, delta, k)
            row = weights[t]
            slack = min(
                upper + ENVELOPE_ATOL - row.max(),
                row.min() - (lower - ENVELOPE_ATOL),
                (abs(rho) ** k + ENVELOPE_ATOL) - np.abs(row - 1.0 / order).max(),
            )
            if slack < worst_margin:
                worst_margin = slack
                bad = t
        if worst_margin < 0:
            record(
                "envelope",
                "fail",
                float(worst_margin),
                f"bound violated at step {bad}",
            )
        else:
            record(
                "envelope",
                "pass",
                float(worst_margin),
                f"rho={rho:.6g}, T={T}, all {rows} steps inside",
            )

    # conserved: every monitor stays at its initial value.
    conserved_tol = float(doc.get("tolerances", {}).get("conserved", 1e-9))
    series = doc.get("conserved_series", {})
    if not series:
        record("conserved", "skip", None, "skipped: no conserved series recorded")
    else:
        worst_drift = 0.0
        worst_name = ""
        for name, values in series.items():
            arr = np.asarray(values, dtype=np.float64)
            drift = float(np.abs(arr - arr[0]).max()) if arr.size else 0.0
            if drift > worst_drift:
                worst_drift = drift
                worst_name = name
        if worst_drift > conserved_tol:
            record(
                "conserved",
                "fail",
                float(conserved_tol - worst_drift),
                f"{worst_name} drifted {worst_drift:.3e}",
            )
        else:
            record(
                "conserved",
                "pass",
                float(conserved_tol - worst_drift),
                f"{len(series)} monitored quantities held",
            )

    # lift: the recorded lift/direct reconstruction gap is within tolerance.
    lift_gap = float(doc.get("lift_direct_gap", math.inf))
    lift_tol = float(doc.get("lift_tolerance", 1e-8))
    if lift_gap <= lift_tol:
        record("lift", "pass", float(lift_tol - lift_gap), f"gap {lift_gap:.3e}")
    else:
        record("lift", "fail", float(lift_tol - lift_gap), f"gap {lift_gap:.3e} exceeds {lift_tol:.3e}")

    # consistency: result.json series agree with the CSV and declared lengths.
    problems = []
    if rows != int(doc.get("steps_run", -1)) + 1:
        problems.append(f"CSV has {rows} rows but steps_run={doc.get('steps_run')}")
    residuals = np.asarray(doc.get("residuals", []), dtype=np.float64)
    if residuals.size != rows:
        problems.append(f"residual series has {residuals.size} entries, expected {rows}")
    if problems:
        record("consistency", "fail", None, "; ".join(problems))
    else:
        record("consistency", "pass", None, "series lengths and trajectory agree")

    return VerificationReport(directory, results)


# -- certification and spectral comparison ------------------------------------


def certify_run(config: RunConfig, max_T: int, *, horizon: Optional[int] = None) -> dict:
    """Scan the configured schedule for a mixing certificate."""
    app = config.application
    params = config.params
    if app in ("gossip", "prob-sym", "quantum-gossip"):
        m = params["m"]
        group = symmetric_group(m)
        support = sorted(
            {transposition_index(group, j, k) for j, k in params["edges"]}
        )
        schedule = build_schedule(config, group, m=m, default_support=support)
    elif app == "dft":
        group = cyclic_group(params["N"])
        schedule = build_schedule(config, group)
    elif app == "random-state":
        group = _build_group(params["group"], config)
        schedule = build_schedule(config, group)
    else:  # dd
        group = pauli_quotient_group()
        chooser = _resolve_elements(config.schedule["chooser"], group, None)
        schedule = DDBisectionSchedule(group, chooser, config.schedule["alpha"])

    window = horizon if horizon is not None else max(1, min(config.steps, 256))
    signal = schedule.realize(window)
    cert = find_mixing_certificate(
        signal,
        max_T=max_T,
        horizon=window,
        delta_floor=config.tolerances["delta_floor"],
    )
    out = {
        "satisfied": bool(cert.satisfied),
        "T": int(cert.T),
        "delta": float(cert.delta),
        "group_order": group.order,
        "horizon": window,
        "witness": _jsonify(cert.witness),
    }
    if cert.satisfied:
        out["rho"] = 1.0 - group.order * cert.delta
    return out


def spectral_run(config: RunConfig) -> dict:
    """Compare consensus-matrix contraction with the lifted transition matrix."""
    if config.application != "gossip":
        raise ConfigError("application: spectral comparison applies to gossip configs")
    m = config.params["m"]
    group = symmetric_group(m)
    support = sorted(
        {transposition_index(group, j, k) for j, k in config.params["edges"]}
    )
    schedule = build_schedule(config, group, m=m, default_support=support)
    signal = schedule.realize(1)
    if not signal:
        raise ConfigError("steps: spectral comparison needs at least one step")
    s = signal[0]
    action = permutation_action(m, 1, group)
    A = np.zeros((m, m))
    for g in s.support():
        A = A + s.weights[g] * action.matrix(g).real
    comp = spectral_comparison(A, s)
    return {
        "sigma_consensus": comp.sigma_a,
        "sigma_lifted": comp.sigma_m,
        "degenerate_consensus": comp.degenerate_a,
        "degenerate_lifted": comp.degenerate_m,
        "eigenvalues_consensus": [[v.real, v.imag] for v in comp.eigenvalues_a],
        "eigenvalues_lifted": [[v.real, v.imag] for v in comp.eigenvalues_m],
        "group_order": group.order,
        "nodes": m,
    }
