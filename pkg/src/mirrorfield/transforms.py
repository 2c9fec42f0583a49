"""Unitary and isometric transformations that reduce the interaction Hamiltonian.

The chain is

    H_int  --M-->  H_tilde  --R-->  H_R  --U1, U2-->  H_2 ~ H_eff

where M = diag(1, V) in the atomic basis (V the Susskind-Glogower shift),
R = (1/sqrt 2)[[1, 1], [-1, 1]] on the atom, and U1, U2 are the small
rotations exp(xi1 (b^dag s+ - b s-)) and exp(xi2 (b s+ - b^dag s-)) with
photon-number dependent angles.  M is only an isometry away from the
|g>(x)|0>_field block, which is carried separately by rho22.
"""
from __future__ import annotations

from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import sparse

from .hamiltonians import (
    H2_FORMS,
    SystemParams,
    build_h_effective,
    build_h2_first_order,
    build_h_int,
    build_h_rotated,
    build_h_tilde,
    build_rho22,
    check_pole,
    xi_arrays,
    xi_coefficients,
)
from .operators import (
    HermitianSpectrum,
    TensorLayout,
    dot,
    expm_antihermitian,
    kron3,
    local_ops,
)

_R2 = np.array([[1.0, 1.0], [-1.0, 1.0]], dtype=complex) / np.sqrt(2.0)


def m_ops(layout: TensorLayout) -> tuple[np.ndarray, np.ndarray]:
    """M = |e><e| (x) 1 + |g><g| (x) V and its adjoint, on the full layout."""
    o = local_ops(layout)
    M = kron3(o.pe, o.if_, o.im) + kron3(o.pg, o.V, o.im)
    return M, M.conj().T.copy()


def r_op(layout: TensorLayout) -> np.ndarray:
    """Exact atomic rotation R = (1/sqrt 2)[[1, 1], [-1, 1]], identity elsewhere."""
    o = local_ops(layout)
    return kron3(_R2, o.if_, o.im)


def vacuum_projector(layout: TensorLayout) -> np.ndarray:
    """P_g0 = |g><g| (x) |0><0| (x) 1, the kernel of M."""
    o = local_ops(layout)
    vac = np.zeros((layout.field_dim, layout.field_dim), dtype=complex)
    vac[0, 0] = 1.0
    return kron3(o.pg, vac, o.im)


def top_projector(layout: TensorLayout) -> np.ndarray:
    """P_top = |g><g| (x) |N_f-1><N_f-1| (x) 1, the defect of M M^dag."""
    o = local_ops(layout)
    top = np.zeros((layout.field_dim, layout.field_dim), dtype=complex)
    top[-1, -1] = 1.0
    return kron3(o.pg, top, o.im)


def rotation_generators(
    params: SystemParams, layout: TensorLayout, xi: Optional[tuple] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Anti-Hermitian generators xi1(n)(b^dag s+ - b s-) and xi2(n)(b s+ - b^dag s-).

    ``xi`` optionally overrides the per-sector angle arrays.
    """
    o = local_ops(layout)
    xi1, xi2 = xi_arrays(params, layout.field_dim) if xi is None else xi
    d1 = np.diag(np.asarray(xi1, dtype=complex))
    d2 = np.diag(np.asarray(xi2, dtype=complex))
    G1 = kron3(o.sp, d1, o.bd) - kron3(o.sm, d1, o.b)
    G2 = kron3(o.sp, d2, o.b) - kron3(o.sm, d2, o.bd)
    return G1, G2


def small_rotations(params: SystemParams, layout: TensorLayout) -> tuple[np.ndarray, np.ndarray]:
    """U1 and U2, exponentiated exactly (not to first order)."""
    G1, G2 = rotation_generators(params, layout)
    return expm_antihermitian(G1), expm_antihermitian(G2)


def build_h_v(params: SystemParams, layout: TensorLayout) -> np.ndarray:
    """H_V = M^dag H_tilde M."""
    M, Mdag = m_ops(layout)
    return dot(Mdag, build_h_tilde(params, layout), M)


def cancellation_residuals(
    params: SystemParams,
    n_max: int,
    xi: Optional[Callable[[int], tuple[float, float]]] = None,
    form: str = "as_printed",
) -> list[tuple[int, float, float]]:
    """Coefficients left on the sideband terms b^dag s+ + b s- and b s+ + b^dag s-.

    c_jc(n) = chi/2 - xi1 (nu + k lam sqrt(n+1)),
    c_ajc(n) = chi/2 + xi2 (nu - k lam sqrt(n+1)),

    with k = 1 for ``form="as_printed"`` and k = 2 for ``"derivation"``
    (see :func:`~mirrorfield.hamiltonians.build_h2_first_order`).  ``xi`` maps
    n to a caller-chosen (xi1, xi2); by default the cancelling angles are used.
    """
    if form not in H2_FORMS:
        raise ValueError(f"form must be one of {H2_FORMS}, got {form!r}")
    k = 1.0 if form == "as_printed" else 2.0
    out = []
    for n in range(n_max + 1):
        xi1, xi2 = xi_coefficients(n, params) if xi is None else xi(n)
        r = np.sqrt(n + 1)
        c_jc = 0.5 * params.chi - xi1 * (params.nu + k * params.lam * r)
        c_ajc = 0.5 * params.chi + xi2 * (params.nu - k * params.lam * r)
        out.append((n, float(c_jc), float(c_ajc)))
    return out


def first_order_residual(params: SystemParams, layout: TensorLayout, form: str = "derivation") -> float:
    """max |U2 U1 H_R U1^dag U2^dag - H2_first_order| over entries.

    With ``form="derivation"`` this is second order in the rotation angles.
    """
    U1, U2 = small_rotations(params, layout)
    U = dot(U2, U1)
    conj = dot(U, build_h_rotated(params, layout), U.conj().T)
    return float(np.max(np.abs(conj - build_h2_first_order(params, layout, form=form))))


class TransformChain:
    """Cached matrices of the transformation chain for one parameter point."""

    def __init__(self, params: SystemParams, layout: TensorLayout, variant: Optional[str] = None):
        self.params = params
        self.layout = layout
        self.variant = variant or params.eff_variant

    # operators
    @cached_property
    def M(self) -> np.ndarray:
        return m_ops(self.layout)[0]

    @cached_property
    def Mdag(self) -> np.ndarray:
        return self.M.conj().T.copy()

    @cached_property
    def R_full(self) -> np.ndarray:
        return r_op(self.layout)

    @cached_property
    def rotations(self) -> tuple[np.ndarray, np.ndarray]:
        for n in range(self.layout.field_dim):
            check_pole(n, self.params)
        return small_rotations(self.params, self.layout)

    @property
    def U1(self) -> np.ndarray:
        return self.rotations[0]

    @property
    def U2(self) -> np.ndarray:
        return self.rotations[1]

    @cached_property
    def W(self) -> np.ndarray:
        """U2 U1 R: maps the H_tilde frame to the effective frame."""
        return dot(self.U2, self.U1, self.R_full)

    @cached_property
    def p_g0(self) -> np.ndarray:
        return vacuum_projector(self.layout)

    @cached_property
    def h_int(self) -> np.ndarray:
        return build_h_int(self.params, self.layout)

    @cached_property
    def h_tilde(self) -> np.ndarray:
        return build_h_tilde(self.params, self.layout)

    @cached_property
    def rho22(self) -> np.ndarray:
        return build_rho22(self.params, self.layout)

    @cached_property
    def h_eff(self) -> np.ndarray:
        return build_h_effective(self.params, self.layout, self.variant)

    # spectra
    @cached_property
    def spec_int(self) -> HermitianSpectrum:
        return HermitianSpectrum(self.h_int)

    @cached_property
    def spec_tilde(self) -> HermitianSpectrum:
        return HermitianSpectrum(self.h_tilde)

    @cached_property
    def spec_eff(self) -> HermitianSpectrum:
        return HermitianSpectrum(self.h_eff)

    @cached_property
    def _rho_diag(self) -> np.ndarray:
        return np.real(np.diag(self.rho22))

    @cached_property
    def _g0_mask(self) -> np.ndarray:
        return np.real(np.diag(self.p_g0)) > 0.5

    @cached_property
    def _sp(self) -> dict:
        return {
            "M": sparse.csr_array(self.M),
            "Mdag": sparse.csr_array(self.Mdag),
            "W": sparse.csr_array(self.W),
            "Wdag": sparse.csr_array(self.W.conj().T),
        }

    def _rho_phase(self, t: float) -> np.ndarray:
        return np.exp(-1j * self._rho_diag * t)

    # propagators
    def exact_propagator(self, t: float) -> np.ndarray:
        return self.spec_int.propagator(t)

    def operator_distance(self, t: float, kind: str = "effective") -> float:
        """max |(U_exact - U_kind) P_interior| over entries, P_interior dropping the top field level."""
        other = {"effective": self.effective_propagator_sparse,
                 "formula": self.formula_propagator_sparse}[kind](t)
        diff = (self.spec_int.propagator_sparse(t) - other)[:, self._interior_idx]
        return float(np.max(np.abs(diff.data), initial=0.0))

    @cached_property
    def _interior_idx(self) -> np.ndarray:
        return np.nonzero(self.layout.interior())[0]

    def formula_propagator(self, t: float) -> np.ndarray:
        """M^dag e^{-i H_tilde t} M e^{-i rho22 t} + |g><g| |0><0| e^{-i rho22 t}."""
        return self.formula_propagator_sparse(t).toarray()

    def formula_propagator_sparse(self, t: float) -> sparse.csr_array:
        sp = self._sp
        E = sparse.diags_array(self._rho_phase(t))
        U = sp["Mdag"] @ self.spec_tilde.propagator_sparse(t) @ sp["M"] @ E
        vac = sparse.diags_array(np.where(self._g0_mask, 1.0, 0.0)) @ E
        return (U + vac).tocsr()

    def effective_propagator(self, t: float) -> np.ndarray:
        """M^dag W^dag e^{-i H_eff t} W M e^{-i rho22 t} + P_g0 e^{-i rho22 t}."""
        return self.effective_propagator_sparse(t).toarray()

    def effective_propagator_sparse(self, t: float) -> sparse.csr_array:
        sp = self._sp
        E = sparse.diags_array(self._rho_phase(t))
        U = sp["Mdag"] @ sp["Wdag"] @ self.spec_eff.propagator_sparse(t) @ sp["W"] @ sp["M"] @ E
        vac = sparse.diags_array(np.where(self._g0_mask, 1.0, 0.0)) @ E
        return (U + vac).tocsr()

    # state-level evolution (no full propagator is formed)
    def exact_state(self, psi: np.ndarray, t: float) -> np.ndarray:
        return self.spec_int.evolve(psi, t)

    def formula_state(self, psi: np.ndarray, t: float) -> np.ndarray:
        sp = self._sp
        phased = self._rho_phase(t) * psi
        out = sp["Mdag"] @ self.spec_tilde.evolve(sp["M"] @ phased, t)
        return out + np.where(self._g0_mask, phased, 0.0)

    def effective_state(self, psi: np.ndarray, t: float) -> np.ndarray:
        sp = self._sp
        phased = self._rho_phase(t) * psi
        inner = sp["W"] @ (sp["M"] @ phased)
        out = sp["Mdag"] @ (sp["Wdag"] @ self.spec_eff.evolve(inner, t))
        return out + np.where(self._g0_mask, phased, 0.0)


def evolution_formula(t: float, params: SystemParams, layout: TensorLayout) -> np.ndarray:
    """Propagator of the interaction Hamiltonian assembled from H_tilde and rho22."""
    return TransformChain(params, layout).formula_propagator(t)


def effective_propagator(
    t: float, params: SystemParams, layout: TensorLayout, variant: Optional[str] = None
) -> np.ndarray:
    """Propagator implied by the effective Hamiltonian, mapped back through the chain."""
    chain = TransformChain(params, layout, variant)
    chain.h_eff  # surfaces lambda/pole errors before any exponentiation
    return chain.effective_propagator(t)
