"""End-to-end symmetrization experiments built from the core modules.

Every runner drives the same loop: a schedule emits convex weights, the state
mixes under a linear action while the lifted weight vector runs in lockstep,
and the recorded series (fixed-point residual, Lyapunov norm, relative
entropy, conserved-quantity drift, lift-vs-direct gap) certify the run.  The
applications differ only in the action and in what counts as the conserved
structure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .actions import (
    LinearAction,
    axis_permutation_action,
    conjugation_action,
    dft_action,
    fixed_point_residual,
    permutation_action,
    step,
    subsystem_permutation_unitaries,
    symmetrizer,
)
from .groups import FiniteGroup, symmetric_group, transposition_index
from .lifted import (
    ConvexWeights,
    MixingCertificate,
    convolve,
    find_mixing_certificate,
    lyapunov_norm,
    relative_entropy,
    run_lifted,
    transition_matrix,
)
from .schedules import Schedule, DDBisectionSchedule, _check_seed

__all__ = [
    "ExperimentResult",
    "run_symmetrization",
    "edge_transpositions",
    "run_gossip_consensus",
    "SpectralComparison",
    "spectral_comparison",
    "star_consensus_example",
    "run_probability_symmetrization",
    "run_quantum_gossip",
    "run_dft",
    "run_random_state_generation",
    "run_dynamical_decoupling",
    "birkhoff_decomposition",
    "birkhoff_weights",
]

RESIDUAL_THRESHOLD = 1e-8
DELTA_FLOOR = 1e-6
QUANTUM_DIM_CAP = 64
OUTCOME_SIZE_CAP = 8
OUTCOME_AXES_CAP = 4


@dataclass
class ExperimentResult:
    """Everything a run produces, series sized steps_run + 1."""

    residuals: np.ndarray
    lyapunov: np.ndarray
    kl: np.ndarray
    weights_trajectory: List[ConvexWeights]
    certificate: Optional[MixingCertificate]
    final_state: np.ndarray
    conserved_drift: float
    lift_direct_gap: float
    converged: bool
    threshold: float
    steps_run: int
    metadata: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


def _realize(schedule, steps: int) -> List[ConvexWeights]:
    if isinstance(schedule, Schedule):
        return schedule.realize(steps)
    signal = list(schedule)
    if len(signal) < steps:
        raise ValueError(
            f"signal supplies {len(signal)} steps but {steps} were requested"
        )
    return signal[:steps]


def _describe(schedule) -> dict:
    if isinstance(schedule, Schedule):
        return schedule.describe()
    return {"kind": "inline-signal"}


def run_symmetrization(
    action: LinearAction,
    x0,
    schedule,
    steps: int,
    *,
    threshold: float = RESIDUAL_THRESHOLD,
    early_stop: bool = True,
    certify: bool = False,
    max_T: Optional[int] = None,
    cert_horizon: Optional[int] = None,
    delta_floor: float = DELTA_FLOOR,
    monitors: Optional[Dict[str, Callable[[np.ndarray], object]]] = None,
    residual_fn: Optional[Callable[[np.ndarray], float]] = None,
    metadata: Optional[dict] = None,
) -> ExperimentResult:
    """Mix x0 under the schedule while tracking the lifted weight vector.

    The direct state and the lifted weights advance in lockstep; every step
    verifies that the weights reconstruct the state from the initial orbit.
    Monitors are callables of the state whose values must stay at their
    initial value; their worst drift is reported.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    t_start = time.perf_counter()
    x = action.space.validate(x0)
    signal = _realize(schedule, steps)
    monitors = dict(monitors or {})
    if residual_fn is None:
        residual_fn = lambda state: fixed_point_residual(action, state)

    orbit_matrix = np.array([v.ravel() for v in action.orbit(x)])
    uniform = ConvexWeights.uniform(action.group)
    p = ConvexWeights.point_mass(action.group)

    residuals = [float(residual_fn(x))]
    lyap = [lyapunov_norm(p)]
    kl = [relative_entropy(p, uniform)]
    weights_traj = [p]
    monitor_series = {name: [np.asarray(fn(x))] for name, fn in monitors.items()}
    lift_gap = 0.0
    steps_run = 0

    for t in range(steps):
        s = signal[t]
        x = step(action, s, x)
        p = convolve(s, p)
        steps_run = t + 1
        residuals.append(float(residual_fn(x)))
        lyap.append(lyapunov_norm(p))
        kl.append(relative_entropy(p, uniform))
        weights_traj.append(p)
        recon = p.weights @ orbit_matrix
        lift_gap = max(lift_gap, float(np.abs(recon - x.ravel()).max()))
        for name, fn in monitors.items():
            monitor_series[name].append(np.asarray(fn(x)))
        if early_stop and residuals[-1] <= threshold:
            break

    drift = 0.0
    for name, series in monitor_series.items():
        base = series[0]
        for v in series[1:]:
            drift = max(drift, float(np.abs(v - base).max()))

    certificate = None
    if certify and len(signal) > 0:
        horizon = cert_horizon if cert_horizon is not None else min(len(signal), 256)
        cap = max_T if max_T is not None else max(1, min(4 * action.group.order, horizon))
        certificate = find_mixing_certificate(
            signal[:horizon], max_T=cap, delta_floor=delta_floor
        )

    meta = {
        "schedule": _describe(schedule),
        "steps_requested": steps,
        "threshold": threshold,
        "runtime_seconds": time.perf_counter() - t_start,
        "group_order": action.group.order,
        "action": action.name,
    }
    meta.update(metadata or {})

    return ExperimentResult(
        residuals=np.array(residuals),
        lyapunov=np.array(lyap),
        kl=np.array(kl),
        weights_trajectory=weights_traj,
        certificate=certificate,
        final_state=x,
        conserved_drift=drift,
        lift_direct_gap=lift_gap,
        converged=bool(residuals[-1] <= threshold),
        threshold=threshold,
        steps_run=steps_run,
        metadata=meta,
        extras={"conserved_series": {k: np.array(v) for k, v in monitor_series.items()}},
    )


# -- gossip consensus -----------------------------------------------------------


def edge_transpositions(group: FiniteGroup, m: int, edges) -> List[int]:
    """Map node pairs to transposition indices, validating ranges."""
    idxs = []
    for edge in edges:
        j, k = (int(v) for v in edge)
        if not (0 <= j < m and 0 <= k < m):
            raise ValueError(f"edge ({j}, {k}) references nodes outside 0..{m - 1}")
        if j == k:
            raise ValueError(f"edge ({j}, {k}) must join two distinct nodes")
        idxs.append(transposition_index(group, j, k))
    return idxs


def _check_schedule_support(schedule, allowed: set, what: str) -> None:
    if isinstance(schedule, Schedule):
        extra = schedule.union_support() - allowed
        if extra:
            raise ValueError(
                f"schedule support {sorted(extra)} lies outside the declared {what}"
            )


def run_gossip_consensus(
    m: int,
    n: int,
    edges,
    schedule,
    x0,
    steps: int,
    *,
    threshold: float = RESIDUAL_THRESHOLD,
    early_stop: bool = True,
    certify: bool = False,
    **engine_kwargs,
) -> ExperimentResult:
    """Pairwise averaging of m agents holding n-dimensional values.

    Each swap edge (j, k) mixed with weight alpha moves both agents toward
    their pairwise mean; with a connected edge process all agents reach the
    barycenter, and every coordinate's mean over agents stays constant.
    """
    group = symmetric_group(m)
    action = permutation_action(m, n, group)
    allowed = set(edge_transpositions(group, m, edges)) | {group.identity}
    _check_schedule_support(schedule, allowed, "edge set")
    x0 = action.space.validate(x0)

    def component_mean(c):
        return lambda state: float(state.reshape(m, n)[:, c].mean())

    monitors = {f"component_mean_{c}": component_mean(c) for c in range(n)}
    result = run_symmetrization(
        action,
        x0,
        schedule,
        steps,
        threshold=threshold,
        early_stop=early_stop,
        certify=certify,
        monitors=monitors,
        metadata={"application": "gossip", "m": m, "n": n, "edges": [list(map(int, e)) for e in edges]},
        **engine_kwargs,
    )
    target = symmetrizer(action, x0)
    result.extras["barycenter"] = target.reshape(m, n)[0]
    result.extras["target_gap"] = float(np.abs(result.final_state - target).max())
    return result


# -- spectral comparison ----------------------------------------------------------


@dataclass(frozen=True)
class SpectralComparison:
    """Dominant non-unit eigenvalue moduli of the direct and lifted maps."""

    sigma_a: float
    sigma_m: float
    degenerate_a: bool
    degenerate_m: bool
    eigenvalues_a: tuple
    eigenvalues_m: tuple


def _sigma(matrix: np.ndarray, tol: float = 1e-9) -> Tuple[float, bool, np.ndarray]:
    eigs = np.linalg.eigvals(matrix)
    keep = np.abs(eigs - 1.0) > tol
    if not keep.any():
        return 1.0, True, eigs
    return float(np.abs(eigs[keep]).max()), False, eigs


def spectral_comparison(consensus_matrix, lifted_signal) -> SpectralComparison:
    """Compare convergence factors of a direct map and its lifted transition.

    sigma is the largest modulus among eigenvalues that differ from 1; if
    every eigenvalue equals 1 the map is flagged degenerate and sigma is
    reported as 1.
    """
    A = np.asarray(consensus_matrix, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"consensus matrix must be square, got shape {A.shape}")
    if isinstance(lifted_signal, Schedule):
        (s,) = lifted_signal.realize(1)
    elif isinstance(lifted_signal, ConvexWeights):
        s = lifted_signal
    else:
        raise ValueError("lifted_signal must be ConvexWeights or a Schedule")
    M = transition_matrix(s).matrix
    sigma_a, degen_a, eigs_a = _sigma(A)
    sigma_m, degen_m, eigs_m = _sigma(M)
    return SpectralComparison(
        sigma_a=sigma_a,
        sigma_m=sigma_m,
        degenerate_a=degen_a,
        degenerate_m=degen_m,
        eigenvalues_a=tuple(complex(v) for v in eigs_a),
        eigenvalues_m=tuple(complex(v) for v in eigs_m),
    )


def star_consensus_example(alpha: float):
    """Three agents averaging toward agent 0 with rate alpha.

    Returns (A, signal, group): the 3x3 doubly stochastic one-shot map and
    the constant convex-weight signal whose transition matrix lifts it.
    """
    if not 0.0 < alpha <= 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5], got {alpha}")
    A = np.array(
        [
            [1.0 - 2.0 * alpha, alpha, alpha],
            [alpha, 1.0 - alpha, 0.0],
            [alpha, 0.0, 1.0 - alpha],
        ]
    )
    group = symmetric_group(3)
    w = np.zeros(6)
    w[group.identity] = 1.0 - 2.0 * alpha
    w[transposition_index(group, 0, 1)] = alpha
    w[transposition_index(group, 0, 2)] = alpha
    return A, ConvexWeights(w, group), group


# -- probability symmetrization ---------------------------------------------------


def run_probability_symmetrization(
    m: int,
    outcome_sizes,
    edges,
    schedule,
    joint0,
    steps: int,
    *,
    threshold: float = RESIDUAL_THRESHOLD,
    early_stop: bool = True,
    certify: bool = False,
    **engine_kwargs,
) -> ExperimentResult:
    """Exchange mixing of a joint distribution over m finite outcome sets.

    Swapping variables j and k with probability alpha replaces the joint
    tensor by the matching convex combination of index transpositions; the
    limit is exchangeable and total probability is conserved.
    """
    if isinstance(outcome_sizes, (int, np.integer)):
        sizes = [int(outcome_sizes)] * m
    else:
        sizes = [int(v) for v in outcome_sizes]
    if len(sizes) != m:
        raise ValueError(f"expected {m} outcome sizes, got {len(sizes)}")
    if len(set(sizes)) != 1:
        raise ValueError(
            f"outcome sizes must all be equal for exchange symmetry, got {sizes}"
        )
    size = sizes[0]
    if not 1 <= size <= OUTCOME_SIZE_CAP:
        raise ValueError(f"outcome size {size} outside 1..{OUTCOME_SIZE_CAP}")
    if not 1 <= m <= OUTCOME_AXES_CAP:
        raise ValueError(f"m={m} outside 1..{OUTCOME_AXES_CAP}")

    joint = np.asarray(joint0, dtype=np.float64)
    if joint.shape != (size,) * m:
        raise ValueError(
            f"joint distribution has shape {joint.shape}, expected {(size,) * m}"
        )
    if joint.min() < -1e-12:
        raise ValueError("joint distribution has negative entries")
    if abs(joint.sum() - 1.0) > 1e-9:
        raise ValueError(f"joint distribution sums to {joint.sum()}, expected 1")

    group = symmetric_group(m)
    action = axis_permutation_action(m, size, group)
    allowed = set(edge_transpositions(group, m, edges)) | {group.identity}
    _check_schedule_support(schedule, allowed, "edge set")

    monitors = {"total_mass": lambda P: float(P.sum())}
    result = run_symmetrization(
        action,
        joint,
        schedule,
        steps,
        threshold=threshold,
        early_stop=early_stop,
        certify=certify,
        monitors=monitors,
        metadata={
            "application": "prob-sym",
            "m": m,
            "outcome_size": size,
            "edges": [list(map(int, e)) for e in edges],
        },
        **engine_kwargs,
    )
    target = symmetrizer(action, joint)
    result.extras["target_gap"] = float(np.abs(result.final_state - target).max())
    return result


# -- quantum gossip ----------------------------------------------------------------


def run_quantum_gossip(
    m: int,
    local_dim: int,
    edges,
    schedule,
    X0,
    steps: int,
    *,
    threshold: float = RESIDUAL_THRESHOLD,
    early_stop: bool = True,
    certify: bool = False,
    **engine_kwargs,
) -> ExperimentResult:
    """Swap-conjugation mixing of a Hermitian operator on m subsystems.

    Edge (j, k) acts by the subsystem-swap unitary; the limit is the average
    over all subsystem permutations.  Trace, Hermiticity, and the spectrum of
    the orbit average are monitored.
    """
    dim = local_dim**m
    if dim > QUANTUM_DIM_CAP:
        raise ValueError(
            f"total dimension {dim} exceeds the dense cap {QUANTUM_DIM_CAP}"
        )
    group = symmetric_group(m)
    U = subsystem_permutation_unitaries(group, local_dim)
    action = conjugation_action(group, U)
    allowed = set(edge_transpositions(group, m, edges)) | {group.identity}
    _check_schedule_support(schedule, allowed, "edge set")

    X0 = np.asarray(X0, dtype=np.complex128)
    if X0.shape != (dim, dim):
        raise ValueError(f"X0 has shape {X0.shape}, expected {(dim, dim)}")
    herm = float(np.abs(X0 - X0.conj().T).max())
    if herm > 1e-10:
        raise ValueError(f"X0 is not Hermitian (defect {herm:.3e})")

    target = symmetrizer(action, X0)
    target_spectrum = np.sort(np.linalg.eigvalsh(target))

    monitors = {
        "trace_real": lambda X: float(np.trace(X).real),
        "trace_imag": lambda X: float(np.trace(X).imag),
        "hermiticity": lambda X: float(np.abs(X - X.conj().T).max()),
        "average_spectrum": lambda X: np.sort(
            np.linalg.eigvalsh(symmetrizer(action, X))
        ),
    }
    result = run_symmetrization(
        action,
        X0,
        schedule,
        steps,
        threshold=threshold,
        early_stop=early_stop,
        certify=certify,
        monitors=monitors,
        metadata={
            "application": "quantum-gossip",
            "m": m,
            "local_dim": local_dim,
            "edges": [list(map(int, e)) for e in edges],
        },
        **engine_kwargs,
    )
    result.extras["target_gap"] = float(np.abs(result.final_state - target).max())
    result.extras["target_spectrum"] = target_spectrum
    return result


# -- distributed discrete Fourier transform ----------------------------------------


def run_dft(
    N: int,
    x,
    schedule,
    steps: int,
    *,
    threshold: float = RESIDUAL_THRESHOLD,
    early_stop: bool = True,
    certify: bool = False,
    **engine_kwargs,
) -> ExperimentResult:
    """Fourier transform by symmetrization: mix X = x 1^T under shift-phase maps.

    The orbit average carries chi = DFT(x)/N in its first row; the run reports
    how far the trajectory's first row is from chi at the end.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (N,):
        raise ValueError(f"x has shape {x.shape}, expected ({N},)")
    action = dft_action(N)
    X0 = np.outer(x, np.ones(N))
    chi = np.fft.fft(x) / N

    result = run_symmetrization(
        action,
        X0,
        schedule,
        steps,
        threshold=threshold,
        early_stop=early_stop,
        certify=certify,
        metadata={"application": "dft", "N": N},
        **engine_kwargs,
    )
    x_hat = symmetrizer(action, X0)
    result.extras["chi"] = chi
    result.extras["x_hat_exact"] = x_hat
    result.extras["exact_first_row_gap"] = float(np.abs(x_hat[0] - chi).max())
    result.extras["first_row_gap"] = float(np.abs(result.final_state[0] - chi).max())
    return result


# -- random state generation --------------------------------------------------------


def run_random_state_generation(
    action: LinearAction,
    y0,
    schedule,
    t_steps: int,
    trials: int,
    seed: int,
    *,
    threshold: float = 0.01,
) -> ExperimentResult:
    """Sample group-element trajectories and compare the endpoint law to uniform.

    Each trial draws g(t) from the step weights independently and composes;
    the endpoint distribution over the orbit is exactly the lifted weight
    vector p(t_steps), so the empirical histogram is checked against both it
    and the uniform law.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    seed = _check_seed(seed)
    group = action.group
    y0 = action.space.validate(y0)

    orbit = action.orbit(y0)
    for g in range(group.order):
        for h in range(g + 1, group.order):
            if np.abs(orbit[g] - orbit[h]).max() < 1e-12:
                raise ValueError(
                    f"orbit collision between elements {g} and {h}; "
                    "the orbit must have full group size"
                )

    signal = _realize(schedule, t_steps)
    traj = run_lifted(ConvexWeights.point_mass(group), signal, t_steps)
    exact_law = traj[-1].weights

    rng = np.random.Generator(np.random.PCG64(seed))
    walk = np.full(trials, group.identity, dtype=np.int64)
    table = group.table
    for s in signal:
        draws = rng.choice(group.order, size=trials, p=s.weights)
        walk = table[draws, walk]
    counts = np.bincount(walk, minlength=group.order)
    empirical = counts / float(trials)

    uniform = np.full(group.order, 1.0 / group.order)
    tv_empirical_uniform = 0.5 * float(np.abs(empirical - uniform).sum())
    tv_exact_uniform_series = np.array(
        [0.5 * float(np.abs(p.weights - uniform).sum()) for p in traj]
    )
    tv_empirical_exact = 0.5 * float(np.abs(empirical - exact_law).sum())

    uniform_w = ConvexWeights.uniform(group)
    return ExperimentResult(
        residuals=tv_exact_uniform_series,
        lyapunov=np.array([lyapunov_norm(p) for p in traj]),
        kl=np.array([relative_entropy(p, uniform_w) for p in traj]),
        weights_trajectory=traj,
        certificate=None,
        final_state=empirical,
        conserved_drift=0.0,
        lift_direct_gap=tv_empirical_exact,
        converged=bool(tv_empirical_uniform <= threshold),
        threshold=threshold,
        steps_run=t_steps,
        metadata={
            "application": "random-state",
            "schedule": _describe(schedule),
            "trials": trials,
            "seed": seed,
            "rng": "pcg64",
            "group_order": group.order,
        },
        extras={
            "empirical": empirical,
            "exact_law": exact_law,
            "tv_empirical_uniform": tv_empirical_uniform,
            "tv_empirical_exact": tv_empirical_exact,
            "orbit_size": group.order,
        },
    )


# -- dynamical decoupling -------------------------------------------------------------


def run_dynamical_decoupling(
    group: FiniteGroup,
    H_d,
    group_unitaries,
    chooser,
    n_max: int,
    alpha: float = 0.5,
    *,
    dt: Optional[float] = None,
    frame_cap: int = 12,
    threshold: float = RESIDUAL_THRESHOLD,
    class_atol: float = 1e-10,
) -> ExperimentResult:
    """Bisection decoupling: average a drift Hamiltonian to a scalar.

    Iteration n mixes conjugation by the chosen h(n) into the averaged
    Hamiltonian; the residual series is the off-scalar Frobenius norm of the
    running average.  The realized frame sequence and, when dt is given, the
    gap between the exact ordered-product propagator and the first-order
    average are attached for diagnostics.
    """
    action = conjugation_action(group, group_unitaries)
    H = action.space.validate(np.asarray(H_d, dtype=np.complex128))
    dim = H.shape[0]
    herm = float(np.abs(H - H.conj().T).max())
    if herm > 1e-10:
        raise ValueError(f"H_d is not Hermitian (defect {herm:.3e})")

    average = symmetrizer(action, H)
    scalar_part = (np.trace(average) / dim) * np.eye(dim)
    class_residual = float(np.linalg.norm(average - scalar_part))
    if class_residual > class_atol:
        raise ValueError(
            "the group average of H_d is not scalar "
            f"(off-scalar residual {class_residual:.3e}); "
            "this perturbation class cannot be decoupled by this group"
        )

    schedule = DDBisectionSchedule(group, chooser, alpha)

    def off_scalar(X: np.ndarray) -> float:
        return float(np.linalg.norm(X - (np.trace(X) / dim) * np.eye(dim)))

    result = run_symmetrization(
        action,
        H,
        schedule,
        n_max,
        threshold=threshold,
        early_stop=False,
        certify=True,
        monitors={"trace_real": lambda X: float(np.trace(X).real)},
        residual_fn=off_scalar,
        metadata={"application": "dd", "n_max": n_max, "alpha": alpha},
    )

    frames_n = min(n_max, frame_cap)
    frames = schedule.expand_frames(frames_n)
    result.extras["frames"] = frames
    result.extras["frames_depth"] = frames_n
    result.extras["class_residual"] = class_residual
    result.extras["drift_norm"] = float(np.linalg.norm(H))

    if dt is not None:
        gaps = {}
        frame_hams = {}
        for n in range(frames_n + 1):
            seq = schedule.expand_frames(n)
            U_exact = np.eye(dim, dtype=np.complex128)
            for f in seq:
                if f not in frame_hams:
                    frame_hams[f] = action.apply(f, H)
                U_exact = expm(-1j * dt * frame_hams[f]) @ U_exact
            H_bar_n = sum(
                result.weights_trajectory[n].weights[g] * action.apply(g, H)
                for g in range(group.order)
            )
            U_avg = expm(-1j * dt * (2**n) * H_bar_n)
            gaps[n] = float(np.linalg.norm(U_exact - U_avg, 2))
        result.extras["propagator_gap"] = gaps
        result.extras["dt"] = dt
    return result


# -- doubly stochastic decompositions -------------------------------------------------


def birkhoff_decomposition(A, *, atol: float = 1e-9, max_terms: Optional[int] = None):
    """Greedy convex decomposition of a doubly stochastic matrix.

    Returns (weights, perms) with perms rows pi satisfying
    A = sum_k weights[k] * P_k, P_k[i, pi_k[i]] = 1, up to atol.  Greedy
    extraction: repeatedly find a perfect matching on the positive support
    and remove the largest multiple it allows.  Decompositions are not
    unique; this picks one.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if A.min() < -atol:
        raise ValueError("matrix has negative entries")
    rows = np.abs(A.sum(axis=1) - 1.0).max()
    cols = np.abs(A.sum(axis=0) - 1.0).max()
    if max(rows, cols) > 1e-8:
        raise ValueError(
            f"matrix is not doubly stochastic (row defect {rows:.3e}, "
            f"column defect {cols:.3e})"
        )
    residual = A.copy()
    weights = []
    perms = []
    cap = max_terms if max_terms is not None else n * n + 1
    for _ in range(cap):
        if residual.max() <= atol:
            break
        support = csr_matrix((residual > atol).astype(np.int8))
        match = maximum_bipartite_matching(support, perm_type="column")
        if (match < 0).any():
            raise ValueError(
                "no perfect matching on the positive support; "
                "residual is not doubly stochastic within tolerance"
            )
        pi = np.asarray(match, dtype=np.int64)
        w = float(residual[np.arange(n), pi].min())
        weights.append(w)
        perms.append(pi)
        residual[np.arange(n), pi] -= w
    if residual.max() > atol:
        raise ValueError("decomposition did not converge within the term cap")
    return np.array(weights), np.array(perms, dtype=np.int64)


def birkhoff_weights(A, group: FiniteGroup, *, atol: float = 1e-9) -> ConvexWeights:
    """Express a doubly stochastic matrix as convex weights over a symmetric group.

    The matrix rows act as agents: entry A[i, j] is the weight of routing j's
    value to slot i, so each extracted permutation matrix P with
    P[i, pi[i]] = 1 is the block-permutation matrix of the group element
    whose permutation sends pi[i] to i.
    """
    from .groups import permutation_index

    weights, perms = birkhoff_decomposition(A, atol=atol)
    w = np.zeros(group.order)
    for wk, pi in zip(weights, perms):
        sigma = np.argsort(pi)
        w[permutation_index(group, sigma)] += wk
    total = w.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"decomposition weights sum to {total}")
    return ConvexWeights(w / total if abs(total - 1.0) > 1e-15 else w, group)
