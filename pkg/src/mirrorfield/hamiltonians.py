"""Hamiltonians of the mirror-field-atom problem on a truncated layout.

Units have hbar = 1.  ``lam`` is the atom-field coupling and ``chi`` the
radiation-pressure coupling of the interaction-picture model

    H = nu N + chi n (b + b^dag) + lam (a s+ + a^dag s-).

Every builder returns a dense Hermitian matrix on the full layout.  Functions
of the photon number (the small-rotation angles, sqrt(n+1), ...) are applied
sector by sector, which is exact because n commutes with everything else in
those expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, ModelAssumptionError, PoleError
from .operators import TensorLayout, kron3, local_ops

VARIANTS = ("derivation", "as_printed")
H2_FORMS = ("derivation", "as_printed")
DEFAULT_POLE_GUARD = 1e-6


@dataclass(frozen=True)
class SystemParams:
    """Physical constants and model flags.

    ``omega0`` defaults to ``omega`` (resonance).  When both ``cavity_length``
    and ``mirror_mass`` are given, ``|chi|`` must match :func:`coupling_g`.
    """

    nu: float
    lam: float
    chi: float
    omega: float = 1.0
    omega0: Optional[float] = None
    cavity_length: Optional[float] = None
    mirror_mass: Optional[float] = None
    eff_variant: str = "derivation"
    pole_guard: float = DEFAULT_POLE_GUARD

    def __post_init__(self):
        if self.omega0 is None:
            object.__setattr__(self, "omega0", self.omega)
        for name in ("nu", "omega", "omega0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a finite positive number, got {value!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ConfigError(f"lambda must be finite and >= 0, got {self.lam!r}")
        if not math.isfinite(self.chi):
            raise ConfigError(f"chi must be finite, got {self.chi!r}")
        if self.eff_variant not in VARIANTS:
            raise ConfigError(f"eff_variant must be one of {VARIANTS}, got {self.eff_variant!r}")
        if not self.pole_guard >= 0:
            raise ConfigError(f"pole_guard must be >= 0, got {self.pole_guard!r}")
        if (self.cavity_length is None) != (self.mirror_mass is None):
            raise ConfigError("cavity_length and mirror_mass must be given together")
        if self.cavity_length is not None:
            g = coupling_g(self.omega, self.cavity_length, self.mirror_mass, self.nu)
            if abs(abs(self.chi) - g) > 1e-12 * g:
                raise ConfigError(
                    f"|chi| = {abs(self.chi)!r} is inconsistent with the coupling {g!r} "
                    "implied by omega, cavity_length, mirror_mass and nu"
                )

    def is_resonant(self, rtol: float = 1e-12) -> bool:
        return abs(self.omega - self.omega0) <= rtol * max(self.omega, self.omega0)


@dataclass(frozen=True)
class SectorSpec:
    """Mirror problem nu N + kappa X + mu X^2 + offset in one (n, s) sector."""

    n: int
    s: int
    kappa: float
    mu: float
    offset: float
    stable: bool


def coupling_g(omega: float, L: float, m: float, nu: float) -> float:
    """Single-photon radiation-pressure coupling (omega / L) sqrt(1 / (2 m nu))."""
    for name, value in (("omega", omega), ("L", L), ("m", m), ("nu", nu)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value!r}")
    return omega / L * math.sqrt(1.0 / (2.0 * m * nu))


def _diag(values) -> np.ndarray:
    return np.diag(np.asarray(values, dtype=complex))


def build_h_lab(params: SystemParams, layout: TensorLayout, model: str = "afm") -> np.ndarray:
    """Lab-frame Hamiltonian: ``"fm"`` (field + mirror) or ``"afm"`` (adds the atom).

    The mirror coupling is written -g n (b + b^dag) with g = |chi|.
    """
    o = local_ops(layout)
    g = abs(params.chi)
    H = (params.omega * kron3(None, o.nf, None, layout=layout)
         + params.nu * kron3(None, None, o.nm, layout=layout)
         - g * kron3(None, o.nf, o.x, layout=layout))
    if model == "fm":
        return H
    if model != "afm":
        raise ValueError(f"lab model must be 'fm' or 'afm', got {model!r}")
    H += 0.5 * params.omega0 * kron3(o.sz, None, None, layout=layout)
    H += params.lam * (kron3(o.sp, o.a, None, layout=layout) + kron3(o.sm, o.ad, None, layout=layout))
    return H


def build_h_int(params: SystemParams, layout: TensorLayout) -> np.ndarray:
    """Resonant interaction-picture Hamiltonian; the reference exact model."""
    if not params.is_resonant():
        raise ModelAssumptionError(
            f"the interaction-picture model assumes resonance omega == omega0, "
            f"got omega={params.omega!r}, omega0={params.omega0!r}"
        )
    o = local_ops(layout)
    return (params.nu * kron3(None, None, o.nm, layout=layout)
            + params.chi * kron3(None, o.nf, o.x, layout=layout)
            + params.lam * (kron3(o.sp, o.a, None, layout=layout)
                            + kron3(o.sm, o.ad, None, layout=layout)))


def build_h_tilde(params: SystemParams, layout: TensorLayout) -> np.ndarray:
    """Field-diagonal 2x2 atomic block Hamiltonian.

    Diagonal blocks nu N + chi n X (|e>) and nu N + chi (n+1) X (|g>),
    off-diagonal lam sqrt(n+1).  Photon number is a constant of motion here.
    """
    o = local_ops(layout)
    n = o.n_values
    return (params.nu * kron3(None, None, o.nm, layout=layout)
            + params.chi * kron3(o.pe, o.nf, o.x)
            + params.chi * kron3(o.pg, _diag(n + 1), o.x)
            + params.lam * kron3(o.sx, _diag(np.sqrt(n + 1)), o.im))


def build_rho22(params: SystemParams, layout: TensorLayout) -> np.ndarray:
    """nu N restricted to the |g> (x) |0>_field block."""
    o = local_ops(layout)
    vac = np.zeros((layout.field_dim, layout.field_dim), dtype=complex)
    vac[0, 0] = 1.0
    return params.nu * kron3(o.pg, vac, o.nm)


def build_h_rotated(params: SystemParams, layout: TensorLayout) -> np.ndarray:
    """Atomic-rotated form nu N + chi (n+1/2) X + lam sqrt(n+1) sz + (chi/2) sx X."""
    o = local_ops(layout)
    n = o.n_values
    return (params.nu * kron3(None, None, o.nm, layout=layout)
            + params.chi * kron3(o.i2, _diag(n + 0.5), o.x)
            + params.lam * kron3(o.sz, _diag(np.sqrt(n + 1)), o.im)
            + 0.5 * params.chi * kron3(o.sx, o.if_, o.x))


# --- small-rotation angles -------------------------------------------------


def resonance_distance(n: int, params: SystemParams) -> float:
    return abs(params.nu - params.lam * math.sqrt(n + 1))


def check_pole(n: int, params: SystemParams) -> None:
    distance = resonance_distance(n, params)
    guard = params.pole_guard * max(params.nu, params.lam)
    if distance <= guard:
        raise PoleError(n, distance, guard)


def xi_coefficients(n: int, params: SystemParams) -> tuple[float, float]:
    """Rotation angles that cancel the sideband terms in photon sector ``n``.

    xi1 = chi / (2 (nu + lam sqrt(n+1))),  xi2 = -chi / (2 (nu - lam sqrt(n+1))).
    """
    if n < 0:
        raise ValueError(f"photon number must be >= 0, got {n}")
    check_pole(n, params)
    r = math.sqrt(n + 1)
    xi1 = params.chi / (2.0 * (params.nu + params.lam * r))
    xi2 = -params.chi / (2.0 * (params.nu - params.lam * r))
    return xi1, xi2


def xi_sum(n: int, params: SystemParams) -> float:
    """Closed form of xi1 + xi2: lam chi sqrt(n+1) / (lam^2 (n+1) - nu^2)."""
    check_pole(n, params)
    r = math.sqrt(n + 1)
    return params.lam * params.chi * r / (params.lam ** 2 * (n + 1) - params.nu ** 2)


def xi_diff(n: int, params: SystemParams) -> float:
    """Closed form of xi2 - xi1: chi nu / (lam^2 (n+1) - nu^2)."""
    check_pole(n, params)
    return params.chi * params.nu / (params.lam ** 2 * (n + 1) - params.nu ** 2)


def xi_arrays(params: SystemParams, field_dim: int) -> tuple[np.ndarray, np.ndarray]:
    pairs = [xi_coefficients(n, params) for n in range(field_dim)]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


def build_h2_first_order(
    params: SystemParams,
    layout: TensorLayout,
    use_chosen_xi: bool = True,
    form: str = "derivation",
) -> np.ndarray:
    """First-order expansion of U2 U1 H_R U1^dag U2^dag in the rotation angles.

    With ``use_chosen_xi=False`` both angles are zero and the result is the
    rotated Hamiltonian itself.

    ``form`` selects the coefficients of the expansion:

    ``"derivation"``
        Commutators evaluated with Pauli matrices, [s+, sz] = -2 s+.  The
        sideband brackets read chi/2 - xi1 (nu + 2 lam sqrt(n+1)) and
        chi/2 + xi2 (nu - 2 lam sqrt(n+1)), and the squeezing term is
        (chi/2)(xi1 + xi2) sz X^2.  This is the true first-order term, so the
        conjugation residual is O(xi^2).
    ``"as_printed"``
        The spin-1/2 form with lam in place of 2 lam and chi in place of
        chi/2.  Its sideband brackets vanish identically for the chosen
        angles, but it follows from the commutators
        [s+, sz] = -s+, so against the Pauli H_R it leaves an O(xi) residual.
    """
    if form not in H2_FORMS:
        raise ValueError(f"form must be one of {H2_FORMS}, got {form!r}")
    o = local_ops(layout)
    n = o.n_values
    r = np.sqrt(n + 1)
    chi, nu, lam = params.chi, params.nu, params.lam
    if use_chosen_xi:
        xi1, xi2 = xi_arrays(params, layout.field_dim)
    else:
        xi1 = xi2 = np.zeros(layout.field_dim)
    lam_eff = 2.0 * lam if form == "derivation" else lam
    squeeze = 0.5 * chi if form == "derivation" else chi
    c_jc = 0.5 * chi - xi1 * (nu + lam_eff * r)
    c_ajc = 0.5 * chi + xi2 * (nu - lam_eff * r)
    diff = xi2 - xi1
    return (nu * kron3(None, None, o.nm, layout=layout)
            + lam * kron3(o.sz, _diag(r), o.im)
            + chi * kron3(o.i2, _diag(n + 0.5), o.x)
            + squeeze * kron3(o.sz, _diag(xi1 + xi2), o.x2)
            + 0.5 * chi * kron3(o.sx @ o.sx, _diag(diff), o.im)
            + chi * kron3(o.sx, _diag(diff * (n + 0.5)), o.im)
            + kron3(o.sp, _diag(c_jc), o.bd) + kron3(o.sm, _diag(c_jc), o.b)
            + kron3(o.sp, _diag(c_ajc), o.b) + kron3(o.sm, _diag(c_ajc), o.bd))


def _effective_prefactor(params: SystemParams, field_dim: int) -> np.ndarray:
    if params.lam == 0:
        raise ModelAssumptionError("the effective Hamiltonian divides by lambda; lambda must be > 0")
    for n in range(field_dim):
        check_pole(n, params)
    return params.chi ** 2 / (params.lam * np.sqrt(np.arange(field_dim) + 1.0))


def build_h_effective(
    params: SystemParams, layout: TensorLayout, variant: Optional[str] = None
) -> np.ndarray:
    """Diagonal-in-(n, sz) effective Hamiltonian.

    nu N + chi (n+1/2) X + lam sqrt(n+1) sz + chi^2 / (lam sqrt(n+1)) [sz] X^2,
    where the bracketed sz is present for ``variant="derivation"`` (the sign it
    inherits from the (xi1 + xi2) chi sz X^2 term) and absent for
    ``"as_printed"``.
    """
    variant = variant or params.eff_variant
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    o = local_ops(layout)
    n = o.n_values
    mu = _effective_prefactor(params, layout.field_dim)
    quad_atom = o.sz if variant == "derivation" else o.i2
    return (params.nu * kron3(None, None, o.nm, layout=layout)
            + params.chi * kron3(o.i2, _diag(n + 0.5), o.x)
            + params.lam * kron3(o.sz, _diag(np.sqrt(n + 1)), o.im)
            + kron3(quad_atom, _diag(mu), o.x2))


def sector_params(
    n: int, s: int, params: SystemParams, variant: Optional[str] = None
) -> SectorSpec:
    variant = variant or params.eff_variant
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if s not in (1, -1):
        raise ValueError(f"s must be +1 or -1, got {s!r}")
    if n < 0:
        raise ValueError(f"photon number must be >= 0, got {n}")
    if params.lam == 0:
        raise ModelAssumptionError("the effective Hamiltonian divides by lambda; lambda must be > 0")
    r = math.sqrt(n + 1)
    mu = params.chi ** 2 / (params.lam * r)
    if variant == "derivation":
        mu *= s
    return SectorSpec(
        n=n, s=s,
        kappa=params.chi * (n + 0.5),
        mu=mu,
        offset=s * params.lam * r,
        stable=params.nu + 4.0 * mu > 0,
    )
