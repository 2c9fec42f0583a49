"""Per-sector spectra of the effective Hamiltonian and dispersive-regime diagnostics."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import InstabilityError
from .hamiltonians import SectorSpec, SystemParams, sector_params
from .operators import ladder_ops

MARGINAL_XI = 0.1


class TruncationArtifactWarning(UserWarning):
    """A truncated spectrum is not bounded from below in the untruncated limit."""


def sector_block(spec: SectorSpec, nu: float, mirror_dim: int) -> np.ndarray:
    """Real symmetric matrix nu N + kappa X + mu X^2 + offset on ``mirror_dim`` levels.

    X^2 is the square of the truncated quadrature, matching the full-space
    effective Hamiltonian block for block.
    """
    b, bd, nm = ladder_ops(mirror_dim)
    x = np.real(b + bd)
    return nu * np.real(nm) + spec.kappa * x + spec.mu * (x @ x) + spec.offset * np.eye(mirror_dim)


def analytic_levels(spec: SectorSpec, nu: float, count: int) -> np.ndarray:
    """Closed-form spectrum of the sector oscillator.

    Writing X = sqrt(2) q, the block is a harmonic oscillator of frequency
    sqrt(nu (nu + 4 mu)) displaced by completing the square in q:

        E_m = sqrt(nu (nu + 4 mu)) (m + 1/2) - nu/2 - kappa^2 / (nu + 4 mu) + offset.
    """
    stiffness = nu + 4.0 * spec.mu
    if not stiffness > 0:
        raise InstabilityError(
            f"sector (n={spec.n}, s={spec.s}) is unbounded below: nu + 4 mu = {stiffness:.3e} <= 0"
        )
    m = np.arange(count, dtype=float)
    return (math.sqrt(nu * stiffness) * (m + 0.5) - 0.5 * nu
            - spec.kappa ** 2 / stiffness + spec.offset)


def sector_spectrum(
    n: int,
    s: int,
    params: SystemParams,
    variant: Optional[str] = None,
    method: str = "analytic",
    mirror_dim: int = 32,
) -> np.ndarray:
    """Ascending eigenvalues of the (n, s) mirror block of the effective Hamiltonian.

    Parameters
    ----------
    method : {"analytic", "numeric"}
        ``"analytic"`` evaluates the closed form and refuses unstable sectors
        (nu + 4 mu <= 0).  ``"numeric"`` diagonalises the truncated block; for
        an unstable sector it still runs but warns, since the lowest levels are
        then set by the cutoff.
    mirror_dim : int
        Number of phonon levels, which is also the number of levels returned.
    """
    spec = sector_params(n, s, params, variant)
    if method == "analytic":
        return analytic_levels(spec, params.nu, mirror_dim)
    if method != "numeric":
        raise ValueError(f"method must be 'analytic' or 'numeric', got {method!r}")
    if not spec.stable:
        warnings.warn(
            f"sector (n={n}, s={s}) has nu + 4 mu <= 0; its truncated spectrum is a "
            "cutoff artifact",
            TruncationArtifactWarning,
            stacklevel=2,
        )
    return np.linalg.eigvalsh(sector_block(spec, params.nu, mirror_dim))


@dataclass(frozen=True)
class RegimeReport:
    n_max: int
    max_xi1: float
    max_xi2: float
    min_resonance_distance: float
    resonant_n: Optional[int]
    chi_over_lambda: Optional[float]
    nu_over_lambda: Optional[float]
    pole_guard: float
    marginal_xi: float
    verdict: str

    def to_dict(self) -> dict:
        return asdict(self)


def regime_check(params: SystemParams, n_max: int, pole_guard: Optional[float] = None) -> RegimeReport:
    """Size of the small-rotation angles for photon numbers 0..n_max.

    The verdict is ``"invalid"`` if any sector is within the pole guard of
    nu = lam sqrt(n+1), ``"marginal"`` if an angle exceeds 0.1, and
    ``"dispersive_ok"`` otherwise.  Never raises.
    """
    guard = params.pole_guard if pole_guard is None else pole_guard
    nu, lam, chi = params.nu, params.lam, params.chi
    max1 = max2 = 0.0
    min_dist = math.inf
    resonant_n = None
    for n in range(max(n_max, 0) + 1):
        r = math.sqrt(n + 1)
        dist = abs(nu - lam * r)
        if dist < min_dist:
            min_dist, resonant_n = dist, n
        max1 = max(max1, abs(chi / (2 * (nu + lam * r))))
        if dist == 0:
            max2 = math.inf if chi != 0 else max2
        else:
            max2 = max(max2, abs(chi / (2 * (nu - lam * r))))
    if min_dist <= guard * max(nu, lam):
        verdict = "invalid"
    elif max(max1, max2) > MARGINAL_XI:
        verdict = "marginal"
    else:
        verdict = "dispersive_ok"
    return RegimeReport(
        n_max=n_max,
        max_xi1=max1,
        max_xi2=max2,
        min_resonance_distance=min_dist,
        resonant_n=resonant_n if verdict == "invalid" else None,
        chi_over_lambda=chi / lam if lam else None,
        nu_over_lambda=nu / lam if lam else None,
        pole_guard=guard,
        marginal_xi=MARGINAL_XI,
        verdict=verdict,
    )
