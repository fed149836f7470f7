"""Convex-weight dynamics lifted onto a finite group.

A signal assigns each step a convex weight vector s(t) over group elements;
the lifted state evolves by group convolution

    p_g(t+1) = sum_h s_h(t) * p_{h^-1 g}(t),

equivalently p(t+1) = M(t) p(t) with M(t) = sum_h s_h(t) * Pi_h, where Pi_h
permutes indices by left translation.  The uniform vector is always a fixed
point; mixing certificates quantify how fast trajectories contract onto it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .groups import FiniteGroup, same_group

__all__ = [
    "WEIGHT_ATOL",
    "RENORM_DRIFT",
    "GroupMismatchError",
    "ConvexWeights",
    "TransitionMatrix",
    "MixingCertificate",
    "convolve",
    "transition_matrix",
    "window_weights",
    "check_mixing",
    "find_mixing_certificate",
    "run_lifted",
    "envelope_bounds",
    "rate_bound",
    "lyapunov_norm",
    "relative_entropy",
    "laplacian",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "TRAJECTORY_FLOAT_FORMAT",
]

# Entry / normalization tolerance for weight vectors.
WEIGHT_ATOL = 1e-12
# Sum drift beyond which a weight vector is silently renormalized.
RENORM_DRIFT = 1e-13
# Floats in trajectory CSVs round-trip exactly at 17 significant digits.
TRAJECTORY_FLOAT_FORMAT = "%.17g"


class GroupMismatchError(ValueError):
    """Two weight vectors refer to different groups."""


class ConvexWeights:
    """Convex weight vector over the elements of a finite group.

    Entries must be nonnegative (within WEIGHT_ATOL) and sum to 1 (within
    WEIGHT_ATOL).  Small negative round-off is clamped to zero and sums
    drifting by more than RENORM_DRIFT are renormalized, so repeated
    arithmetic cannot silently walk out of the simplex.
    """

    __slots__ = ("weights", "group")

    def __init__(self, weights, group: FiniteGroup):
        w = np.array(weights, dtype=np.float64)
        if w.shape != (group.order,):
            raise ValueError(
                f"expected {group.order} weights, got shape {w.shape}"
            )
        low = w.min()
        if low < -WEIGHT_ATOL:
            g = int(np.argmin(w))
            raise ValueError(
                f"weight for element {g} is {w[g]:.3e}, below -{WEIGHT_ATOL:g}"
            )
        if low < 0.0:
            w[w < 0.0] = 0.0
        total = w.sum()
        if abs(total - 1.0) > WEIGHT_ATOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        if abs(total - 1.0) > RENORM_DRIFT:
            w /= total
        w.setflags(write=False)
        self.weights = w
        self.group = group

    @classmethod
    def point_mass(cls, group: FiniteGroup, element: Optional[int] = None) -> "ConvexWeights":
        """All mass on one element (the identity by default)."""
        g = group.identity if element is None else int(element)
        w = np.zeros(group.order)
        w[g] = 1.0
        return cls(w, group)

    @classmethod
    def uniform(cls, group: FiniteGroup) -> "ConvexWeights":
        return cls(np.full(group.order, 1.0 / group.order), group)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0.0)

    def __repr__(self) -> str:
        return f"ConvexWeights({self.weights!r})"


def _require_same_group(a: ConvexWeights, b: ConvexWeights) -> None:
    if not same_group(a.group, b.group):
        raise GroupMismatchError(
            f"weight vectors live on different groups "
            f"({a.group!r} vs {b.group!r})"
        )


def convolve(s: ConvexWeights, p: ConvexWeights) -> ConvexWeights:
    """Group convolution (s * p)_g = sum_h s_h p_{h^-1 g}.

    One application of the transition operator M = sum_h s_h Pi_h to p.
    Runs in O(support(s) * order) without materializing the matrix.
    """
    _require_same_group(s, p)
    table = s.group.table
    inv = s.group.inverses
    out = np.zeros(s.group.order)
    for h in np.flatnonzero(s.weights):
        out += s.weights[h] * p.weights[table[inv[h]]]
    return ConvexWeights(out, s.group)


class TransitionMatrix:
    """Dense matrix M = sum_h s_h Pi_h of one convolution step.

    Doubly stochastic by construction (each Pi_h is a permutation matrix);
    validated to 1e-12 so corrupted inputs fail loudly.
    """

    __slots__ = ("matrix", "group")

    def __init__(self, matrix, group: FiniteGroup):
        m = np.array(matrix, dtype=np.float64)
        n = group.order
        if m.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {m.shape}")
        if m.min() < -WEIGHT_ATOL:
            raise ValueError("matrix has a negative entry beyond tolerance")
        ones = np.ones(n)
        if np.abs(m.sum(axis=0) - ones).max() > WEIGHT_ATOL:
            raise ValueError("column sums deviate from 1 beyond tolerance")
        if np.abs(m.sum(axis=1) - ones).max() > WEIGHT_ATOL:
            raise ValueError("row sums deviate from 1 beyond tolerance")
        m.setflags(write=False)
        self.matrix = m
        self.group = group


def transition_matrix(s: ConvexWeights) -> TransitionMatrix:
    """Materialize M(s): M[g, k] = s_{g k^-1}, so that M p = convolve(s, p)."""
    group = s.group
    idx = group.table[:, group.inverses]  # idx[g, k] = g * k^-1
    return TransitionMatrix(s.weights[idx], group)


def window_weights(signal: Sequence[ConvexWeights], t: int, T: int) -> ConvexWeights:
    """Composite weights q(t,T) of the window [t, t+T).

    Iterated convolution starting from the identity point mass; the result
    satisfies sum_g q_g Pi_g = M(t+T-1) ... M(t+1) M(t).
    """
    if T < 1:
        raise ValueError(f"window length must be >= 1, got {T}")
    if t < 0 or t + T > len(signal):
        raise ValueError(
            f"window [{t}, {t + T}) exceeds signal length {len(signal)}"
        )
    q = ConvexWeights.point_mass(signal[t].group)
    for i in range(T):
        q = convolve(signal[t + i], q)
    return q


@dataclass(frozen=True)
class MixingCertificate:
    """Window-positivity certificate for a signal.

    When ``satisfied``, every length-T window starting in the scanned range
    put composite weight at least ``delta`` on every group element (so
    necessarily delta <= 1/order).  On failure ``witness`` is the first
    (start, element) pair at or below the threshold.
    """

    T: int
    delta: float
    satisfied: bool
    witness: Optional[Tuple[int, int]] = None


def check_mixing(
    signal: Sequence[ConvexWeights],
    t0: int,
    horizon: int,
    T: int,
    delta: float,
) -> MixingCertificate:
    """Scan every window start t in [t0, t0+horizon-T] for min_g q_g(t,T) > delta."""
    if T < 1:
        raise ValueError(f"window length must be >= 1, got {T}")
    if horizon < T:
        raise ValueError(f"horizon {horizon} is shorter than the window {T}")
    if t0 < 0 or t0 + horizon > len(signal):
        raise ValueError(
            f"scan range [{t0}, {t0 + horizon}) exceeds signal length {len(signal)}"
        )
    for t in range(t0, t0 + horizon - T + 1):
        q = window_weights(signal, t, T)
        g = int(np.argmin(q.weights))
        if q.weights[g] <= delta:
            return MixingCertificate(T, delta, False, witness=(t, g))
    return MixingCertificate(T, delta, True)


def find_mixing_certificate(
    signal: Sequence[ConvexWeights],
    *,
    max_T: int,
    t0: int = 0,
    horizon: Optional[int] = None,
    delta_floor: float = 0.0,
) -> MixingCertificate:
    """Measure the smallest window T whose composite weights cover the group.

    Returns a satisfied certificate at the smallest T <= max_T for which
    min over scanned starts of min_g q_g(t,T) exceeds ``delta_floor``, with
    ``delta`` the achieved minimum.  Otherwise returns an unsatisfied
    certificate at max_T whose witness is the worst (start, element) pair.
    """
    if horizon is None:
        horizon = len(signal) - t0
    if max_T < 1:
        raise ValueError(f"max_T must be >= 1, got {max_T}")
    if horizon < 1 or t0 < 0 or t0 + horizon > len(signal):
        raise ValueError(
            f"scan range [{t0}, {t0 + horizon}) exceeds signal length {len(signal)}"
        )
    max_T = min(max_T, horizon)
    group = signal[t0].group
    mins = np.full(max_T + 1, np.inf)
    argmins: List[Optional[Tuple[int, int]]] = [None] * (max_T + 1)
    for t in range(t0, t0 + horizon):
        cap = min(max_T, t0 + horizon - t)
        q = ConvexWeights.point_mass(group)
        for T in range(1, cap + 1):
            q = convolve(signal[t + T - 1], q)
            g = int(np.argmin(q.weights))
            if q.weights[g] < mins[T]:
                mins[T] = q.weights[g]
                argmins[T] = (t, g)
    for T in range(1, max_T + 1):
        if mins[T] > delta_floor:
            return MixingCertificate(T, float(mins[T]), True)
    return MixingCertificate(max_T, float(mins[max_T]), False, witness=argmins[max_T])


def run_lifted(
    p0: ConvexWeights, signal: Sequence[ConvexWeights], steps: int
) -> List[ConvexWeights]:
    """Evolve p(t+1) = convolve(s(t), p(t)); returns [p(0), ..., p(steps)].

    Every intermediate state passes the ConvexWeights checks, so a signal
    that pushes the state out of the simplex fails the run.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if len(signal) < steps:
        raise ValueError(
            f"signal exhausted: {len(signal)} steps provided, {steps} requested"
        )
    trajectory = [p0]
    p = p0
    for t in range(steps):
        p = convolve(signal[t], p)
        trajectory.append(p)
    return trajectory


def envelope_bounds(order: int, delta: float, k: int) -> Tuple[float, float]:
    """Upper/lower envelopes (x_k, y_k) around 1/order after k certified windows.

    x(k) = 1/n + (n-1)/n * (1-n*delta)^k and y(k) = 1/n - 1/n * (1-n*delta)^k;
    every entry of p(k*T) lies in [y(k), x(k)].
    """
    if not 0.0 < delta <= 1.0 / order + WEIGHT_ATOL:
        raise ValueError(
            f"delta must lie in (0, 1/{order}], got {delta!r}"
        )
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    rho = max(0.0, 1.0 - order * delta) ** k
    x = 1.0 / order + (order - 1) / order * rho
    y = 1.0 / order - rho / order
    return x, y


def rate_bound(group: FiniteGroup, T: int, delta: float, t: int) -> float:
    """Envelope width (1 - order*delta)^floor(t/T) certified after t steps."""
    if T < 1:
        raise ValueError(f"window length must be >= 1, got {T}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    x, y = envelope_bounds(group.order, delta, t // T)
    return x - y


def lyapunov_norm(p: ConvexWeights) -> float:
    """Squared distance to the uniform vector, ||p - uniform||^2.

    Never increases under a convolution step (the transition matrices are
    doubly stochastic, so M^T M - I is negative semidefinite).
    """
    d = p.weights - 1.0 / p.group.order
    return float(d @ d)


def relative_entropy(p: ConvexWeights, q: ConvexWeights) -> float:
    """KL divergence sum_g p_g (log p_g - log q_g), natural log, 0 log 0 = 0.

    Requires q to carry mass everywhere p does.
    """
    _require_same_group(p, q)
    mask = p.weights > 0.0
    if np.any(q.weights[mask] <= 0.0):
        g = int(np.flatnonzero(mask & (q.weights <= 0.0))[0])
        raise ValueError(
            f"relative entropy undefined: q is zero on element {g} where p is not"
        )
    pw = p.weights[mask]
    return float(np.sum(pw * (np.log(pw) - np.log(q.weights[mask]))))


def laplacian(M: TransitionMatrix) -> np.ndarray:
    """Continuous-time generator I - M; rows and columns sum to zero."""
    return np.eye(M.group.order) - M.matrix


def write_trajectory_csv(
    path,
    weights: np.ndarray,
    lyapunov: Sequence[float],
    kl: Sequence[float],
) -> None:
    """Write a lifted trajectory as CSV: step,g0,...,g_{n-1},lyapunov,kl.

    Floats are written with 17 significant digits so parsing returns the
    exact doubles that were computed.
    """
    weights = np.asarray(weights)
    steps, order = weights.shape
    if len(lyapunov) != steps or len(kl) != steps:
        raise ValueError("column lengths do not match the trajectory")
    header = ["step"] + [f"g{i}" for i in range(order)] + ["lyapunov", "kl"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(steps):
            row = [str(t)]
            row += [TRAJECTORY_FLOAT_FORMAT % v for v in weights[t]]
            row.append(TRAJECTORY_FLOAT_FORMAT % lyapunov[t])
            row.append(TRAJECTORY_FLOAT_FORMAT % kl[t])
            writer.writerow(row)


def read_trajectory_csv(path) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read back (weights, lyapunov, kl) from a trajectory CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "step" or header[-2:] != ["lyapunov", "kl"]:
            raise ValueError(f"unrecognized trajectory header: {header}")
        order = len(header) - 3
        rows, lyap, kl = [], [], []
        for t, row in enumerate(reader):
            if len(row) != len(header):
                raise ValueError(f"row {t} has {len(row)} fields, expected {len(header)}")
            if int(row[0]) != t:
                raise ValueError(f"row {t} is labeled step {row[0]}")
            values = [float(v) for v in row[1:]]
            rows.append(values[:order])
            lyap.append(values[order])
            kl.append(values[order + 1])
    return np.array(rows), np.array(lyap), np.array(kl)
