"""Truncated Fock-space primitives for the atom (x) field (x) mirror system.

Operators are plain complex ``numpy`` arrays.  Full-space operators live on a
:class:`TensorLayout`, ordered atom-major, then field, then mirror, with atomic
index 0 = |e> and 1 = |g>.  Subsystem-local operators are small square arrays
that :func:`embed` lifts to the full space.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache
from types import SimpleNamespace
from typing import Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.stats import poisson

from .errors import (
    HermiticityError,
    InvalidDimensionError,
    LayoutError,
    TruncationError,
)

SLOTS = ("atom", "field", "mirror")
HERMITIAN_RTOL = 1e-10
DEFAULT_LEAKAGE_THRESHOLD = 1e-8
DEFAULT_GUARD = 2


@dataclass(frozen=True)
class TensorLayout:
    """Dimensions of the atom (x) field (x) mirror product basis."""

    field_dim: int
    mirror_dim: int

    def __post_init__(self):
        for name in ("field_dim", "mirror_dim"):
            value = getattr(self, name)
            if int(value) != value or value < 2:
                raise InvalidDimensionError(f"{name} must be an integer >= 2, got {value!r}")

    @property
    def atom_dim(self) -> int:
        return 2

    @property
    def total_dim(self) -> int:
        return 2 * self.field_dim * self.mirror_dim

    def slot_dim(self, slot: str) -> int:
        try:
            return {"atom": 2, "field": self.field_dim, "mirror": self.mirror_dim}[slot]
        except KeyError:
            raise LayoutError(f"unknown slot {slot!r}; expected one of {SLOTS}") from None

    def index(self, a: int, n: int, m: int) -> int:
        """Basis index of |a, n, m>."""
        return (a * self.field_dim + n) * self.mirror_dim + m

    def labels(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-basis-state (atom, field, mirror) indices, each of length ``total_dim``."""
        a, n, m = np.indices((2, self.field_dim, self.mirror_dim))
        return a.ravel(), n.ravel(), m.ravel()

    def interior(self) -> np.ndarray:
        """Boolean mask of basis states below the top field level."""
        _, n, _ = self.labels()
        return n < self.field_dim - 1


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    layout: TensorLayout
    leakage: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.layout.total_dim,):
            raise LayoutError(
                f"state has shape {amps.shape}, layout needs ({self.layout.total_dim},)"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


# --- subsystem-local operators ---------------------------------------------


def _check_dim(dim) -> int:
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def ladder_ops(dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated lowering, raising and number operators on ``dim`` Fock levels."""
    dim = _check_dim(dim)
    lowering = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    raising = lowering.conj().T.copy()
    number = np.diag(np.arange(dim, dtype=float)).astype(complex)
    return lowering, raising, number


def sg_ops(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Susskind-Glogower phase operators V = (n+1)^(-1/2) a and V^dag.

    In the truncated space V is the unit shift |n+1> -> |n>, so that
    V^dag V = 1 - |0><0| holds exactly while V V^dag misses the top level.
    """
    dim = _check_dim(dim)
    V = np.eye(dim, k=1, dtype=complex)
    return V, V.conj().T.copy()


def atom_ops() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pauli ladder and inversion operators in the (|e>, |g>) basis."""
    sigma_plus = np.array([[0, 1], [0, 0]], dtype=complex)
    sigma_minus = sigma_plus.T.copy()
    sigma_z = np.diag([1.0, -1.0]).astype(complex)
    return sigma_plus, sigma_minus, sigma_z


def embed(op: np.ndarray, slot: str, layout: TensorLayout) -> np.ndarray:
    """Lift a subsystem-local operator to the full space."""
    op = np.asarray(op)
    dim = layout.slot_dim(slot)
    if op.shape != (dim, dim):
        raise LayoutError(f"operator of shape {op.shape} does not fit slot {slot!r} (dim {dim})")
    factors = [np.eye(layout.slot_dim(s), dtype=complex) for s in SLOTS]
    factors[SLOTS.index(slot)] = op
    return kron3(*factors)


def kron3(atom_op=None, field_op=None, mirror_op=None, layout: TensorLayout | None = None):
    """Kronecker product in the fixed slot order; ``None`` means identity.

    ``layout`` is needed only when some factor is omitted.
    """
    ops = [atom_op, field_op, mirror_op]
    if any(op is None for op in ops):
        if layout is None:
            raise LayoutError("layout required when a kron3 factor is omitted")
        ops = [np.eye(layout.slot_dim(s), dtype=complex) if op is None else op
               for s, op in zip(SLOTS, ops)]
    return np.kron(np.kron(ops[0], ops[1]), ops[2]).astype(complex, copy=False)


@lru_cache(maxsize=16)
def local_ops(layout: TensorLayout) -> SimpleNamespace:
    """Cached read-only subsystem-local operators for a layout.

    Field operators carry an ``f`` suffix (``a``, ``ad``, ``nf``), mirror
    operators are ``b``, ``bd``, ``nm`` and the quadrature ``x = b + b^dag``.
    """
    a, ad, nf = ladder_ops(layout.field_dim)
    b, bd, nm = ladder_ops(layout.mirror_dim)
    V, Vd = sg_ops(layout.field_dim)
    sp, sm, sz = atom_ops()
    x = b + bd
    ns = SimpleNamespace(
        a=a, ad=ad, nf=nf, V=V, Vd=Vd,
        b=b, bd=bd, nm=nm, x=x, x2=x @ x,
        sp=sp, sm=sm, sz=sz, sx=sp + sm,
        pe=np.diag([1.0, 0.0]).astype(complex), pg=np.diag([0.0, 1.0]).astype(complex),
        i2=np.eye(2, dtype=complex),
        if_=np.eye(layout.field_dim, dtype=complex),
        im=np.eye(layout.mirror_dim, dtype=complex),
        n_values=np.arange(layout.field_dim, dtype=float),
    )
    for value in vars(ns).values():
        value.flags.writeable = False
    return ns


def field_function(values, layout: TensorLayout) -> np.ndarray:
    """Local diagonal field operator f(n) from its values on n = 0..N_f-1."""
    values = np.asarray(values, dtype=complex)
    if values.shape != (layout.field_dim,):
        raise LayoutError(f"expected {layout.field_dim} field values, got {values.shape}")
    return np.diag(values)


# --- linear algebra ----------------------------------------------------------


def dot(*ops) -> np.ndarray:
    """Chain matrix product that routes mostly-zero factors through CSR.

    The numbers are the same as a dense product; only the zero work is skipped.
    """
    result = None
    for op in ops:
        if not sparse.issparse(op):
            op = np.asarray(op)
            if np.count_nonzero(op) < 0.1 * op.size:
                op = sparse.csr_array(op)
        result = op if result is None else result @ op
    if sparse.issparse(result):
        return result.toarray()
    return np.asarray(result)


def commutator(A, B) -> np.ndarray:
    return dot(A, B) - dot(B, A)


def hermitian_deviation(H: np.ndarray) -> tuple[float, float]:
    H = np.asarray(H)
    return float(np.max(np.abs(H - H.conj().T), initial=0.0)), float(np.max(np.abs(H), initial=0.0))


def check_hermitian(H: np.ndarray, rtol: float = HERMITIAN_RTOL) -> None:
    deviation, scale = hermitian_deviation(H)
    if deviation > rtol * scale:
        raise HermiticityError(deviation, scale)


def invariant_blocks(H: np.ndarray) -> list[np.ndarray]:
    """Index sets of the connected components of the nonzero pattern of ``H``.

    Entries coupling different components are exactly zero, so spectral work can
    be done block by block without approximation.
    """
    pattern = sparse.csr_array(np.abs(H) > 0)
    count, labels = csgraph.connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(count + 1))
    return [order[bounds[k]:bounds[k + 1]] for k in range(count)]


class HermitianSpectrum:
    """Block-wise eigendecomposition of a Hermitian matrix.

    ``propagator(t)`` gives exp(-i H t); ``evolve(psi, t)`` applies it to a
    vector without forming the matrix.
    """

    def __init__(self, H: np.ndarray, check: bool = True):
        H = np.asarray(H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise LayoutError(f"expected a square matrix, got shape {H.shape}")
        if check:
            check_hermitian(H)
        self.dim = H.shape[0]
        self.blocks = []
        for idx in invariant_blocks(H):
            sub = H[np.ix_(idx, idx)]
            evals, evecs = np.linalg.eigh(0.5 * (sub + sub.conj().T))
            self.blocks.append((idx, evals, evecs))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.concatenate([evals for _, evals, _ in self.blocks]))

    def propagator(self, t: float) -> np.ndarray:
        U = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, evals, evecs in self.blocks:
            U[np.ix_(idx, idx)] = (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T
        return U

    def propagator_sparse(self, t: float) -> sparse.csr_array:
        rows, cols, vals = [], [], []
        for idx, evals, evecs in self.blocks:
            block = (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T
            r, c = np.meshgrid(idx, idx, indexing="ij")
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(block.ravel())
        return sparse.csr_array(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.dim, self.dim),
        )

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        out = np.empty(self.dim, dtype=complex)
        for idx, evals, evecs in self.blocks:
            coeffs = evecs.conj().T @ psi[idx]
            out[idx] = evecs @ (np.exp(-1j * evals * t) * coeffs)
        return out


def expm_hermitian(H: np.ndarray, t: float) -> np.ndarray:
    """Return exp(-i H t) by spectral decomposition.

    Raises
    ------
    HermiticityError
        If ``max|H - H^dag|`` exceeds ``1e-10 * max|H|``.
    """
    return HermitianSpectrum(H).propagator(t)


def expm_antihermitian(G: np.ndarray) -> np.ndarray:
    """exp(G) for anti-Hermitian ``G`` (a unitary), via exp(-i (iG) * 1)."""
    return expm_hermitian(1j * np.asarray(G), 1.0)


# --- states ------------------------------------------------------------------


@dataclass(frozen=True)
class Fock:
    n: int


@dataclass(frozen=True)
class Coherent:
    alpha: complex


ModeSpec = Union[Fock, Coherent]


@dataclass(frozen=True)
class StateSpec:
    """Product initial state.

    ``atom`` is ``"e"``, ``"g"`` or a pair of amplitudes ``(c_e, c_g)`` that is
    normalised on construction.
    """

    atom: Union[str, tuple] = "e"
    field: ModeSpec = dataclasses.field(default_factory=lambda: Fock(0))
    mirror: ModeSpec = dataclasses.field(default_factory=lambda: Fock(0))


def _atom_vector(atom) -> np.ndarray:
    if isinstance(atom, str):
        if atom not in ("e", "g"):
            raise ValueError(f"atom level must be 'e' or 'g', got {atom!r}")
        return np.array([1, 0] if atom == "e" else [0, 1], dtype=complex)
    vec = np.asarray(atom, dtype=complex)
    if vec.shape != (2,) or np.linalg.norm(vec) == 0:
        raise ValueError(f"atom amplitudes must be a nonzero pair, got {atom!r}")
    return vec / np.linalg.norm(vec)


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Unnormalised truncated expansion alpha^n exp(-|alpha|^2/2) / sqrt(n!)."""
    amps = np.empty(dim, dtype=complex)
    amps[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return amps


def coherent_tail(alpha: complex, dim: int, guard: int = DEFAULT_GUARD) -> float:
    """Poisson mass of |alpha> on levels n >= dim - guard (before truncation)."""
    return float(poisson.sf(dim - guard - 1, abs(alpha) ** 2))


def _mode_vector(spec: ModeSpec, dim: int, guard: int) -> tuple[np.ndarray, float]:
    if isinstance(spec, Fock):
        if not 0 <= spec.n < dim:
            raise LayoutError(f"Fock index {spec.n} out of range for dimension {dim}")
        vec = np.zeros(dim, dtype=complex)
        vec[spec.n] = 1.0
        return vec, 1.0 if spec.n >= dim - guard else 0.0
    if isinstance(spec, Coherent):
        amps = coherent_amplitudes(spec.alpha, dim)
        return amps / np.linalg.norm(amps), coherent_tail(spec.alpha, dim, guard)
    raise TypeError(f"unsupported mode specification {spec!r}")


def _required_dim(alpha: complex, guard: int, threshold: float) -> int:
    dim = 2
    while coherent_tail(alpha, dim, guard) > threshold:
        dim += 1
    return dim


def make_state(
    spec: StateSpec,
    layout: TensorLayout,
    *,
    guard: int = DEFAULT_GUARD,
    max_leakage: float = DEFAULT_LEAKAGE_THRESHOLD,
    allow_leakage: bool = False,
) -> StateVector:
    """Build a normalised product state.

    Coherent components are renormalised after truncation.  The recorded
    ``leakage`` is the pre-renormalisation probability that the untruncated
    state sits in the guard band or beyond; exceeding ``max_leakage`` raises
    :class:`TruncationError` unless ``allow_leakage`` is set.
    """
    atom = _atom_vector(spec.atom)
    field_vec, field_leak = _mode_vector(spec.field, layout.field_dim, guard)
    mirror_vec, mirror_leak = _mode_vector(spec.mirror, layout.mirror_dim, guard)
    leak = 1.0 - (1.0 - field_leak) * (1.0 - mirror_leak)
    if leak > max_leakage and not allow_leakage:
        hints = []
        for name, mode, dim in (("field", spec.field, layout.field_dim),
                                ("mirror", spec.mirror, layout.mirror_dim)):
            if isinstance(mode, Coherent):
                hints.append(f"{name}_dim >= {_required_dim(mode.alpha, guard, max_leakage)}")
            elif mode.n >= dim - guard:
                hints.append(f"{name}_dim >= {mode.n + guard + 1}")
        raise TruncationError(
            f"initial-state leakage {leak:.3e} exceeds {max_leakage:.1e}; "
            f"requires {', '.join(hints)}"
        )
    amps = np.kron(np.kron(atom, field_vec), mirror_vec)
    return StateVector(amps / np.linalg.norm(amps), layout, leak)


def _check_same_layout(*layouts: TensorLayout) -> None:
    if any(lay != layouts[0] for lay in layouts[1:]):
        raise LayoutError(f"layout mismatch: {layouts}")


def expectation(state: StateVector, op: np.ndarray) -> complex:
    """<psi|A|psi>."""
    op = np.asarray(op) if not sparse.issparse(op) else op
    if op.shape != (state.layout.total_dim,) * 2:
        raise LayoutError(f"operator shape {op.shape} does not match layout {state.layout}")
    psi = state.amplitudes
    return complex(np.vdot(psi, op @ psi))


def fidelity(psi: StateVector, phi: StateVector) -> float:
    """Pure-state fidelity |<psi|phi>|^2."""
    _check_same_layout(psi.layout, phi.layout)
    value = abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2
    return float(min(value, 1.0))


def leakage_mask(layout: TensorLayout, guard: int) -> np.ndarray:
    if not 0 <= guard < min(layout.field_dim, layout.mirror_dim):
        raise LayoutError(
            f"guard {guard} must be below min(field_dim, mirror_dim) = "
            f"{min(layout.field_dim, layout.mirror_dim)}"
        )
    _, n, m = layout.labels()
    return (n >= layout.field_dim - guard) | (m >= layout.mirror_dim - guard)


def leakage(state: StateVector, guard: int = DEFAULT_GUARD) -> float:
    """Probability on basis states within ``guard`` levels of either cutoff."""
    mask = leakage_mask(state.layout, guard)
    return float(np.sum(np.abs(state.amplitudes[mask]) ** 2))
