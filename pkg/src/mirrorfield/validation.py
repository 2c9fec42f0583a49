"""Exact-identity and property checks of the transformation chain.

Each check returns a :class:`Check` holding the measured value, the tolerance
it is compared against and the verdict, so the same functions back the
``validate`` command and the test suite.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .analysis import sector_spectrum
from .hamiltonians import (
    SystemParams,
    build_h_rotated,
    sector_params,
    xi_coefficients,
    xi_sum,
)
from .operators import TensorLayout, commutator, dot, hermitian_deviation, kron3, local_ops
from .transforms import TransformChain, build_h_v, cancellation_residuals, first_order_residual

EQ_TIMES = (1.0, 5.0, 10.0)
D_CHIS = (0.05, 0.025, 0.0125)
D_RATIO_WINDOW = (3.2, 4.8)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool

    @classmethod
    def at_most(cls, name: str, value: float, tol: float) -> "Check":
        return cls(name, float(value), float(tol), bool(value <= tol))


def _max_abs(A) -> float:
    return float(np.max(np.abs(A), initial=0.0))


def _interior(A: np.ndarray, layout: TensorLayout) -> np.ndarray:
    idx = np.nonzero(layout.interior())[0]
    return A[np.ix_(idx, idx)]


def identity_checks(params: SystemParams, layout: TensorLayout, chain: TransformChain | None = None) -> list[Check]:
    """Identities that hold exactly in the truncated space, up to rounding."""
    chain = chain or TransformChain(params, layout)
    h_int = chain.h_int
    scale = _max_abs(h_int)
    checks = []

    for label, H in (("h_int", h_int), ("h_tilde", chain.h_tilde),
                     ("h_rotated", build_h_rotated(params, layout))):
        dev, sc = hermitian_deviation(H)
        checks.append(Check.at_most(f"hermitian_{label}", dev, 1e-10 * sc))

    h_v = build_h_v(params, layout)
    checks.append(Check.at_most(
        "decomposition", _max_abs(_interior(h_v + chain.rho22 - h_int, layout)), 1e-12 * scale))
    checks.append(Check.at_most("hv_rho22_commute", _max_abs(commutator(h_v, chain.rho22)), 1e-12))
    nf = kron3(None, local_ops(layout).nf, None, layout=layout)
    checks.append(Check.at_most("h_tilde_conserves_n", _max_abs(commutator(chain.h_tilde, nf)), 1e-12))

    R = chain.R_full
    rotated = dot(R, chain.h_tilde, R.conj().T)
    checks.append(Check.at_most(
        "rotation_closed_form", _max_abs(rotated - build_h_rotated(params, layout)), 1e-12))

    unit = params.lam if params.lam > 0 else 1.0
    idx = np.nonzero(layout.interior())[0]
    for k in EQ_TIMES:
        t = k / unit
        diff = (chain.spec_int.propagator_sparse(t) - chain.formula_propagator_sparse(t)).tocsr()
        diff = diff[idx][:, idx]
        checks.append(Check.at_most(f"propagator_formula_t{k:g}", _max_abs(diff.data), 1e-8))

    if params.lam > 0:
        worst = max(max(abs(c1), abs(c2))
                    for _, c1, c2 in cancellation_residuals(params, layout.field_dim - 2))
        checks.append(Check.at_most("cancellation_residuals", worst, 1e-14 * abs(params.chi)))
    return checks


def property_checks(params: SystemParams, layout: TensorLayout, chain: TransformChain | None = None) -> list[Check]:
    """Unitarity, angle closed forms, perturbative scaling and sector spectra."""
    chain = chain or TransformChain(params, layout)
    checks = []
    eye = np.eye(layout.total_dim)
    unit = params.lam if params.lam > 0 else 1.0
    U = chain.exact_propagator(10.0 / unit)
    checks.append(Check.at_most("unitarity_exact", _max_abs(U.conj().T @ U - eye), 1e-10))
    if params.lam == 0:
        return checks

    for label, op in (("U1", chain.U1), ("U2", chain.U2), ("W", chain.W)):
        checks.append(Check.at_most(f"unitarity_{label}", _max_abs(dot(op.conj().T, op) - eye), 1e-10))

    worst = 0.0
    for n in range(layout.field_dim):
        xi1, xi2 = xi_coefficients(n, params)
        closed = xi_sum(n, params)
        worst = max(worst, abs(xi1 + xi2 - closed) / max(abs(closed), 1e-300))
    checks.append(Check.at_most("xi_sum_closed_form", worst if params.chi else 0.0, 1e-12))

    d = [first_order_residual(
        dataclasses.replace(params, chi=c, cavity_length=None, mirror_mass=None), layout) for c in D_CHIS]
    lo, hi = D_RATIO_WINDOW
    for i in range(2):
        ratio = d[i] / d[i + 1] if d[i + 1] > 0 else math.nan
        checks.append(Check(f"second_order_ratio_{i + 1}", ratio, hi, bool(lo <= ratio <= hi)))

    count = layout.mirror_dim // 2
    worst = 0.0
    for n in range(min(8, layout.field_dim - 1) + 1):
        for s in (1, -1):
            if not sector_params(n, s, params).stable:
                continue
            analytic = sector_spectrum(n, s, params, method="analytic", mirror_dim=layout.mirror_dim)
            numeric = sector_spectrum(n, s, params, method="numeric", mirror_dim=layout.mirror_dim)
            worst = max(worst, _max_abs(analytic[:count] - numeric[:count]))
    checks.append(Check.at_most("sector_spectra", worst, 1e-8 * params.nu))
    return checks


def run_validation(params: SystemParams, layout: TensorLayout) -> list[Check]:
    chain = TransformChain(params, layout)
    return identity_checks(params, layout, chain) + property_checks(params, layout, chain)
