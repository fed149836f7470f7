"""Linear group actions on finite-dimensional state spaces.

An action assigns each group element g a linear map a(g, .) with
a(e, x) = x and a(h, a(g, x)) = a(h*g, x).  Mixing a state with convex
weights, x' = sum_g s_g a(g, x), drives x toward the orbit average
F(x) = (1/|G|) sum_g a(g, x), and the lifted weight trajectory reconstructs
the direct one exactly: x(t) = sum_g p_g(t) a(g, x(0)).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .groups import FiniteGroup, cyclic_group, group_from_table, same_group, symmetric_group
from .lifted import ConvexWeights

__all__ = [
    "VectorSpace",
    "LinearAction",
    "permutation_action",
    "regular_action",
    "dft_action",
    "conjugation_action",
    "axis_permutation_action",
    "subsystem_permutation_unitaries",
    "pauli_matrices",
    "pauli_quotient_group",
    "pauli_unitaries",
    "step",
    "symmetrizer",
    "fixed_point_residual",
    "inner",
    "conserved_value",
    "ProjectionCheck",
    "is_projection",
    "restricted_operator_bound",
    "encode_state",
    "decode_state",
    "save_state",
    "load_state",
]

UNITARY_ATOL = 1e-10
FIXED_POINT_ATOL = 1e-10


@dataclass(frozen=True)
class VectorSpace:
    """Dense state space descriptor: array shape plus real/complex scalars."""

    shape: Tuple[int, ...]
    complex: bool = False

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    def validate(self, x) -> np.ndarray:
        arr = np.asarray(x)
        if arr.shape != self.shape:
            raise ValueError(f"state shape {arr.shape} does not match {self.shape}")
        if self.complex:
            return np.ascontiguousarray(arr, dtype=np.complex128)
        if np.iscomplexobj(arr):
            raise ValueError("real state space cannot hold complex data")
        return np.ascontiguousarray(arr, dtype=np.float64)


class LinearAction:
    """Group action by linear maps on a fixed vector space.

    ``apply_fn(g, x)`` must implement a left action with respect to the
    group table.  ``adjoint_map`` names, per element, the element whose map
    is the adjoint of a(g, .); all bundled actions are unitary, so it is the
    inverse map.
    """

    def __init__(
        self,
        group: FiniteGroup,
        space: VectorSpace,
        apply_fn: Callable[[int, np.ndarray], np.ndarray],
        *,
        adjoint_map: Optional[np.ndarray] = None,
        name: str = "",
    ):
        self.group = group
        self.space = space
        self._apply = apply_fn
        self.adjoint_map = (
            None if adjoint_map is None else np.asarray(adjoint_map, dtype=np.int64)
        )
        self.name = name
        self._matrices: dict = {}

    def apply(self, g: int, x, *, validate: bool = True) -> np.ndarray:
        if not 0 <= g < self.group.order:
            raise ValueError(f"element index {g} out of range")
        if validate:
            x = self.space.validate(x)
        return self._apply(g, x)

    def orbit(self, x) -> list:
        """[a(g, x) for every g], in element order."""
        x = self.space.validate(x)
        return [self._apply(g, x) for g in range(self.group.order)]

    def matrix(self, g: int) -> np.ndarray:
        """Materialize a(g, .) on the flattened space (cached)."""
        if g not in self._matrices:
            dim = self.space.dim
            dtype = np.complex128 if self.space.complex else np.float64
            basis = np.eye(dim, dtype=dtype)
            cols = [
                self.apply(g, basis[j].reshape(self.space.shape)).ravel()
                for j in range(dim)
            ]
            self._matrices[g] = np.array(cols).T
        return self._matrices[g]

    def __repr__(self) -> str:
        label = self.name or "LinearAction"
        return f"{label}(group={self.group!r}, shape={self.space.shape})"


# -- concrete actions ---------------------------------------------------------


def permutation_action(m: int, n: int, group: Optional[FiniteGroup] = None) -> LinearAction:
    """Permutation of m stacked n-dimensional blocks of a real vector.

    a(pi, x) routes block i to slot pi(i); gossip steps over pair swaps are
    the classic use.  The maps are orthogonal, so the adjoint of a(g, .) is
    a(g^-1, .).
    """
    if m < 1 or n < 1:
        raise ValueError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    if group is None:
        group = symmetric_group(m)
    if group.perms is None or group.perms.shape[1] != m:
        raise ValueError(f"group does not act on {m} blocks")
    inverse_perms = group.perms[group.inverses]

    def apply_fn(g: int, x: np.ndarray) -> np.ndarray:
        return x.reshape(m, n)[inverse_perms[g]].reshape(m * n)

    return LinearAction(
        group,
        VectorSpace((m * n,)),
        apply_fn,
        adjoint_map=group.inverses,
        name=f"block-permutation(m={m}, n={n})",
    )


def regular_action(group: FiniteGroup) -> LinearAction:
    """Left translation on functions over the group: a(h, v)_g = v_{h^-1 g}.

    Basis vectors move as a(h, e_g) = e_{h g}; the |G| translation maps are
    linearly independent, and the orbit of e_identity enumerates the group.
    """
    table = group.table
    inv = group.inverses

    def apply_fn(h: int, v: np.ndarray) -> np.ndarray:
        return v[table[inv[h]]]

    return LinearAction(
        group,
        VectorSpace((group.order,)),
        apply_fn,
        adjoint_map=group.inverses,
        name="regular",
    )


def dft_action(N: int, group: Optional[FiniteGroup] = None) -> LinearAction:
    """Cyclic action on N x N complex matrices: a(k, X) = S^k X D^-k.

    S is the cyclic row shift (row j of S X is row j+1 of X) and
    D = diag(1, w, ..., w^{N-1}) with w = exp(2i pi / N).  Averaging the
    orbit of X = x 1^T leaves the discrete Fourier transform of x in the
    first row.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if group is None:
        group = cyclic_group(N)
    if group.order != N:
        raise ValueError("group order must match N")
    n = np.arange(N)
    # column phases of D^-k: exp(-2i pi k n / N)
    phases = np.exp(-2j * np.pi * np.outer(n, n) / N)

    def apply_fn(k: int, X: np.ndarray) -> np.ndarray:
        return np.roll(X, -k, axis=0) * phases[k][None, :]

    return LinearAction(
        group,
        VectorSpace((N, N), complex=True),
        apply_fn,
        adjoint_map=group.inverses,
        name=f"dft(N={N})",
    )


def conjugation_action(
    group: FiniteGroup, unitaries, *, atol: float = UNITARY_ATOL
) -> LinearAction:
    """Unitary conjugation a(g, X) = U_g X U_g^dagger on d x d complex matrices.

    ``unitaries`` maps each element to a d x d unitary forming a projective
    homomorphism: U_g U_h = phase * U_{g*h} with |phase| = 1.  Phases cancel
    under conjugation, so the action axioms hold exactly on the quotient.
    """
    U = np.asarray(unitaries, dtype=np.complex128)
    if U.ndim != 3 or U.shape[0] != group.order or U.shape[1] != U.shape[2]:
        raise ValueError(
            f"expected {group.order} stacked square matrices, got shape {U.shape}"
        )
    d = U.shape[1]
    eye = np.eye(d)
    for g in range(group.order):
        defect = np.abs(U[g].conj().T @ U[g] - eye).max()
        if defect > atol:
            raise ValueError(
                f"matrix for element {g} is not unitary (defect {defect:.3e})"
            )
    for g in range(group.order):
        for h in range(group.order):
            prod = U[g] @ U[h]
            target = U[group.mul(g, h)]
            phase = np.trace(target.conj().T @ prod) / d
            if abs(abs(phase) - 1.0) > 1e-8 or np.abs(prod - phase * target).max() > atol:
                raise ValueError(
                    f"unitaries do not form a projective homomorphism at ({g},{h})"
                )

    def apply_fn(g: int, X: np.ndarray) -> np.ndarray:
        return U[g] @ X @ U[g].conj().T

    action = LinearAction(
        group,
        VectorSpace((d, d), complex=True),
        apply_fn,
        adjoint_map=group.inverses,
        name=f"conjugation(d={d})",
    )
    action.unitaries = U
    return action


def axis_permutation_action(
    m: int, size: int, group: Optional[FiniteGroup] = None
) -> LinearAction:
    """Permutation of the m axes of a real tensor with equal axis lengths.

    Acting on a joint probability tensor, a(pi, P)[i_0..i_{m-1}] =
    P[i_{pi(0)}, ..., i_{pi(m-1)}]; the orbit average is exchangeable.
    """
    if m < 1 or size < 1:
        raise ValueError(f"need m >= 1 and size >= 1, got m={m}, size={size}")
    if group is None:
        group = symmetric_group(m)
    if group.perms is None or group.perms.shape[1] != m:
        raise ValueError(f"group does not act on {m} axes")
    # np.transpose(x, axes=sigma) composes anti-homomorphically in sigma, so a
    # left action needs the inverse permutation as the axes argument.
    inverse_perms = group.perms[group.inverses]

    def apply_fn(g: int, x: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(np.transpose(x, axes=inverse_perms[g]))

    return LinearAction(
        group,
        VectorSpace((size,) * m),
        apply_fn,
        adjoint_map=group.inverses,
        name=f"axis-permutation(m={m}, size={size})",
    )


def subsystem_permutation_unitaries(group: FiniteGroup, local_dim: int) -> np.ndarray:
    """Stacked permutation unitaries rearranging m tensor factors of C^d.

    V_pi |i_1 .. i_m> = |j_1 .. j_m> with j_k = i_{pi^-1(k)}; the family is a
    genuine homomorphism with respect to the group table, and conjugation by
    V_pi permutes local operators: V (A_1 x .. x A_m) V^dag = A_{pi^-1(1)} x ...
    """
    if group.perms is None:
        raise ValueError("group does not carry permutation data")
    m = group.perms.shape[1]
    dim = local_dim**m
    digits = np.empty((dim, m), dtype=np.int64)
    rem = np.arange(dim)
    for k in range(m - 1, -1, -1):
        digits[:, k] = rem % local_dim
        rem //= local_dim
    radix = local_dim ** np.arange(m - 1, -1, -1, dtype=np.int64)
    U = np.zeros((group.order, dim, dim), dtype=np.complex128)
    for g in range(group.order):
        target = digits[:, group.perms[group.inverses[g]]] @ radix
        U[g, target, np.arange(dim)] = 1.0
    return U


def pauli_matrices() -> np.ndarray:
    """The 2x2 matrices I, X, Y, Z, stacked in that order."""
    return np.array(
        [
            [[1, 0], [0, 1]],
            [[0, 1], [1, 0]],
            [[0, -1j], [1j, 0]],
            [[1, 0], [0, -1]],
        ],
        dtype=np.complex128,
    )


def pauli_quotient_group() -> FiniteGroup:
    """Single-qubit Pauli group modulo phases: the Klein four-group {I, X, Y, Z}."""
    table = [
        [0, 1, 2, 3],
        [1, 0, 3, 2],
        [2, 3, 0, 1],
        [3, 2, 1, 0],
    ]
    return group_from_table(table, name="pauli-1q", element_names=["I", "X", "Y", "Z"])


def pauli_unitaries() -> Tuple[FiniteGroup, np.ndarray]:
    """(group, unitaries) pair for conjugation by single-qubit Paulis."""
    return pauli_quotient_group(), pauli_matrices()


# -- mixing, averaging, and diagnostics ---------------------------------------


def step(action: LinearAction, s: ConvexWeights, x) -> np.ndarray:
    """One mixing step x' = sum_g s_g a(g, x), restricted to the support of s."""
    if not same_group(action.group, s.group):
        raise ValueError("weights and action refer to different groups")
    x = action.space.validate(x)
    out = np.zeros_like(x)
    for g in s.support():
        out += s.weights[g] * action.apply(g, x, validate=False)
    return out


def symmetrizer(action: LinearAction, x) -> np.ndarray:
    """Orbit average F(x) = (1/|G|) sum_g a(g, x); idempotent by construction."""
    orbit = action.orbit(x)
    return sum(orbit[1:], start=orbit[0]) / action.group.order


def fixed_point_residual(action: LinearAction, x) -> float:
    """max_g ||a(g, x) - x||_2; zero exactly on common fixed points."""
    x = action.space.validate(x)
    return max(
        float(np.linalg.norm(action.apply(g, x, validate=False) - x))
        for g in range(action.group.order)
    )


def inner(y, x) -> complex:
    """Inner product <y, x>, conjugate-linear in y; Frobenius on matrices."""
    return np.vdot(y, x)


def conserved_value(action: LinearAction, z, x, *, atol: float = FIXED_POINT_ATOL):
    """<z, x> for a common fixed point z; invariant under every mixing step.

    Requires the action to declare its adjoint structure and z to satisfy
    a(g, z) = z for all g (checked to ``atol``).
    """
    if action.adjoint_map is None:
        raise ValueError("action does not declare an adjoint map")
    z = action.space.validate(z)
    residual = fixed_point_residual(action, z)
    if residual > atol:
        raise ValueError(
            f"z is not a common fixed point (residual {residual:.3e} > {atol:g})"
        )
    value = inner(z, x)
    return value if action.space.complex else float(value.real)


@dataclass(frozen=True)
class ProjectionCheck:
    """Residuals of F^2 = F and F = F^dagger for the orbit average."""

    idempotency_residual: float
    self_adjoint_residual: float
    is_projection: bool


def is_projection(action: LinearAction, *, atol: float = FIXED_POINT_ATOL) -> ProjectionCheck:
    """Materialize the orbit average and test idempotency and self-adjointness.

    Idempotency holds for any action; self-adjointness needs the adjoint maps
    to hit the same family (e.g. unitary actions), making F an orthogonal
    projection.
    """
    F = sum(action.matrix(g) for g in range(action.group.order)) / action.group.order
    idem = float(np.abs(F @ F - F).max())
    adj = float(np.abs(F - F.conj().T).max())
    return ProjectionCheck(idem, adj, idem <= atol and adj <= atol)


def restricted_operator_bound(action: LinearAction, x0) -> float:
    """Largest operator norm of any a(g, .) restricted to span{a(g, x0)}.

    A mixing run started at x0 never leaves that span, so one-step moves and
    residual-vs-distance comparisons along the run carry constants like
    (1 + b) with b this bound.  Cheap because the span has dimension at most
    |G|.
    """
    orbit = action.orbit(x0)
    stacked = np.array([v.ravel() for v in orbit])
    # orthonormal basis of the orbit span
    q, r = np.linalg.qr(stacked.conj().T)
    keep = np.abs(np.diag(r)) > 1e-12 * max(1.0, np.abs(r).max())
    basis = q[:, keep]
    worst = 0.0
    for g in range(action.group.order):
        images = np.array(
            [action.apply(g, v.reshape(action.space.shape)).ravel() for v in basis.T]
        ).T
        coeffs = basis.conj().T @ images
        worst = max(worst, float(np.linalg.norm(coeffs, ord=2)))
    return worst


# -- state serialization -------------------------------------------------------


def _encode_entries(arr: np.ndarray):
    if np.iscomplexobj(arr):
        if arr.ndim == 0:
            return [float(arr.real), float(arr.imag)]
        return [_encode_entries(sub) for sub in arr]
    return arr.tolist()


def encode_state(x: np.ndarray) -> dict:
    """JSON-ready form: nested lists, complex entries as [re, im] pairs."""
    arr = np.asarray(x)
    return {
        "shape": list(arr.shape),
        "complex": bool(np.iscomplexobj(arr)),
        "data": _encode_entries(arr),
    }


def _decode_entries(data, complex_entries: bool):
    arr = np.asarray(data, dtype=np.float64)
    if complex_entries:
        if arr.shape[-1] != 2:
            raise ValueError("complex state entries must be [re, im] pairs")
        return arr[..., 0] + 1j * arr[..., 1]
    return arr


def decode_state(payload: dict) -> np.ndarray:
    """Inverse of encode_state, with shape verification."""
    if not isinstance(payload, dict):
        raise ValueError("state payload must be a JSON object")
    missing = {"shape", "complex", "data"} - set(payload)
    if missing:
        raise ValueError(f"state payload missing keys: {sorted(missing)}")
    arr = _decode_entries(payload["data"], payload["complex"])
    shape = tuple(payload["shape"])
    if arr.shape != shape:
        raise ValueError(f"state data has shape {arr.shape}, expected {shape}")
    return arr


def save_state(path, x) -> None:
    with open(path, "w") as fh:
        json.dump(encode_state(x), fh)


def load_state(path) -> np.ndarray:
    with open(path) as fh:
        return decode_state(json.load(fh))
