"""Time evolution under the exact, formula-based and effective propagators."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from .analysis import RegimeReport, regime_check
from .errors import RegimeError, TruncationError
from .hamiltonians import SystemParams, build_h_lab
from .operators import (
    DEFAULT_GUARD,
    DEFAULT_LEAKAGE_THRESHOLD,
    HermitianSpectrum,
    StateVector,
    TensorLayout,
    kron3,
    leakage_mask,
    local_ops,
)
from .transforms import TransformChain

KINDS = ("exact", "formula", "effective")


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if not self.t_start >= 0:
            raise ValueError(f"t_start must be >= 0, got {self.t_start!r}")
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end must exceed t_start, got {self.t_end!r} <= {self.t_start!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be an integer >= 1, got {self.steps!r}")

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / self.steps

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.step * np.arange(self.steps + 1)


@dataclass(frozen=True)
class ObservableSeries:
    kind: str
    times: np.ndarray
    inversion: np.ndarray
    photon: np.ndarray
    phonon: np.ndarray
    quadrature: np.ndarray
    leakage: np.ndarray
    energy: np.ndarray

    COLUMNS = ("t", "inversion", "photon", "phonon", "quadrature", "leakage", "energy")

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.times, "inversion": self.inversion, "photon": self.photon,
            "phonon": self.phonon, "quadrature": self.quadrature,
            "leakage": self.leakage, "energy": self.energy,
        }


@dataclass(frozen=True)
class ComparisonReport:
    variant: str
    times: np.ndarray
    fidelity: np.ndarray
    min_fidelity: float
    operator_distance: Optional[np.ndarray]
    regime: RegimeReport
    alternate: Optional["ComparisonReport"] = None

    COLUMNS = ("t", "fidelity", "operator_distance")

    def columns(self) -> dict[str, np.ndarray]:
        dist = self.operator_distance
        if dist is None:
            dist = np.full(len(self.times), np.nan)
        return {"t": self.times, "fidelity": self.fidelity, "operator_distance": dist}


class _Observables:
    def __init__(self, layout: TensorLayout, hamiltonian: np.ndarray, guard: int):
        o = local_ops(layout)
        a_idx, n_idx, m_idx = layout.labels()
        self.sz = np.where(a_idx == 0, 1.0, -1.0)
        self.n = n_idx.astype(float)
        self.N = m_idx.astype(float)
        self.x = sparse.csr_array(kron3(o.i2, o.if_, o.x))
        self.h = sparse.csr_array(hamiltonian)
        self.mask = leakage_mask(layout, guard)
        self.field_band = n_idx >= layout.field_dim - guard
        self.mirror_band = m_idx >= layout.mirror_dim - guard

    def __call__(self, psi: np.ndarray) -> tuple[float, ...]:
        p = np.abs(psi) ** 2
        return (
            float(p @ self.sz),
            float(p @ self.n),
            float(p @ self.N),
            float(np.real(np.vdot(psi, self.x @ psi))),
            float(p[self.mask].sum()),
            float(np.real(np.vdot(psi, self.h @ psi))),
        )

    def band_split(self, psi: np.ndarray) -> tuple[float, float]:
        p = np.abs(psi) ** 2
        return float(p[self.field_band].sum()), float(p[self.mirror_band].sum())


def _leakage_error(layout: TensorLayout, field_leak: float, mirror_leak: float,
                   total: float, threshold: float, when: str) -> TruncationError:
    hints = []
    if field_leak > threshold / 2:
        hints.append(f"field_dim > {layout.field_dim}")
    if mirror_leak > threshold / 2:
        hints.append(f"mirror_dim > {layout.mirror_dim}")
    return TruncationError(
        f"truncation leakage {total:.3e} exceeds {threshold:.1e} {when}; "
        f"requires {' and '.join(hints) or 'larger dimensions'}"
    )


def occupied_photon_max(state: StateVector, tol: float = 1e-12) -> int:
    """Largest photon number carrying more than ``tol`` probability."""
    _, n_idx, _ = state.layout.labels()
    pops = np.bincount(n_idx, weights=np.abs(state.amplitudes) ** 2,
                       minlength=state.layout.field_dim)
    occupied = np.nonzero(pops > tol)[0]
    return int(occupied[-1]) if occupied.size else 0


def evolve(
    psi0: StateVector,
    kind: str,
    grid: TimeGrid,
    params: SystemParams,
    variant: Optional[str] = None,
    *,
    chain: Optional[TransformChain] = None,
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD,
    guard: int = DEFAULT_GUARD,
    strict_leakage: bool = True,
    model: str = "int",
) -> ObservableSeries:
    """Observable time series from one initial state.

    ``kind`` is ``"exact"`` (spectral propagator of the interaction
    Hamiltonian), ``"formula"`` (the same propagator assembled from H_tilde and
    rho22) or ``"effective"`` (the effective Hamiltonian mapped back through
    the transformation chain).  ``model="fm"`` or ``"afm"`` evolves under the
    lab-frame Hamiltonian instead; only ``kind="exact"`` applies there.

    The energy column is always measured with the generator of the exact
    dynamics, so it is conserved for the exact and formula kinds only.  With
    ``strict_leakage`` a guard-band population above ``leakage_threshold`` at
    t = 0 or at any sample time raises :class:`TruncationError`.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    layout = psi0.layout
    chain = chain or TransformChain(params, layout, variant)
    if model == "int":
        generator = chain.h_int
    elif kind == "exact":
        generator = build_h_lab(params, layout, model)
    else:
        raise ValueError(f"kind {kind!r} requires the interaction-picture model")
    obs = _Observables(layout, generator, guard)
    psi = np.asarray(psi0.amplitudes)
    f0, m0 = obs.band_split(psi)
    if strict_leakage and f0 + m0 > leakage_threshold:
        raise _leakage_error(layout, f0, m0, f0 + m0, leakage_threshold, "in the initial state")

    if model != "int":
        spectrum = HermitianSpectrum(generator)
        step = spectrum.evolve
    else:
        step = {"exact": chain.exact_state, "formula": chain.formula_state,
                "effective": chain.effective_state}[kind]
    rows = []
    for t in grid.times:
        psi_t = step(psi, t)
        values = obs(psi_t)
        if strict_leakage and values[4] > leakage_threshold:
            f, m = obs.band_split(psi_t)
            raise _leakage_error(layout, f, m, values[4], leakage_threshold, f"at t={t:.6g}")
        rows.append(values)
    cols = np.array(rows).T if rows else np.zeros((6, 0))
    return ObservableSeries(kind, grid.times, *cols)


def compare(
    psi0: StateVector,
    params: SystemParams,
    grid: TimeGrid,
    variant: Optional[str] = None,
    *,
    both_variants: bool = False,
    override_regime: bool = False,
    operator_distance: bool = True,
    leakage_threshold: float = DEFAULT_LEAKAGE_THRESHOLD,
    guard: int = DEFAULT_GUARD,
) -> ComparisonReport:
    """Exact versus effective evolution of the same initial state.

    The regime is assessed over the photon numbers occupied by ``psi0``; an
    ``"invalid"`` verdict raises :class:`RegimeError` unless
    ``override_regime`` is set, in which case the pole guard is dropped and
    only an exact pole still fails.  The operator distance is the max-entry
    norm of (U_exact - U_eff) restricted to columns below the top field level.
    """
    variant = variant or params.eff_variant
    layout = psi0.layout
    regime = regime_check(params, occupied_photon_max(psi0))
    if regime.verdict == "invalid":
        if not override_regime:
            raise RegimeError(
                f"dispersive regime invalid: resonance nu = lambda*sqrt(n+1) at "
                f"n={regime.resonant_n} (distance {regime.min_resonance_distance:.3e})"
            )
    if override_regime:
        params = dataclasses.replace(params, pole_guard=0.0)

    chain = TransformChain(params, layout, variant)
    psi = np.asarray(psi0.amplitudes)
    obs = _Observables(layout, chain.h_int, guard)
    f0, m0 = obs.band_split(psi)
    if f0 + m0 > leakage_threshold:
        raise _leakage_error(layout, f0, m0, f0 + m0, leakage_threshold, "in the initial state")

    fids, dists = [], []
    for t in grid.times:
        exact = chain.exact_state(psi, t)
        eff = chain.effective_state(psi, t)
        leak = obs.band_split(exact)
        if sum(leak) > leakage_threshold:
            raise _leakage_error(layout, *leak, sum(leak), leakage_threshold, f"at t={t:.6g}")
        fids.append(min(abs(np.vdot(exact, eff)) ** 2, 1.0))
        if operator_distance:
            dists.append(chain.operator_distance(t))
    fids = np.array(fids)
    alternate = None
    if both_variants:
        other = "as_printed" if variant == "derivation" else "derivation"
        alternate = compare(
            psi0, params, grid, other, override_regime=override_regime,
            operator_distance=operator_distance, leakage_threshold=leakage_threshold, guard=guard,
        )
    return ComparisonReport(
        variant=variant,
        times=grid.times,
        fidelity=fids,
        min_fidelity=float(fids.min()),
        operator_distance=np.array(dists) if operator_distance else None,
        regime=regime,
        alternate=alternate,
    )
