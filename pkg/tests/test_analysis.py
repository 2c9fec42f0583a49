from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorfield.analysis import (
    TruncationArtifactWarning,
    analytic_levels,
    regime_check,
    sector_block,
    sector_spectrum,
)
from mirrorfield.errors import InstabilityError
from mirrorfield.hamiltonians import SectorSpec, SystemParams


def spec(kappa=0.0, mu=0.0, offset=0.0, nu=1.0):
    return SectorSpec(n=0, s=1, kappa=kappa, mu=mu, offset=offset, stable=nu + 4 * mu > 0)


def test_free_ladder():
    levels = analytic_levels(spec(offset=0.3), 0.7, 10)
    np.testing.assert_allclose(np.diff(levels), 0.7, rtol=1e-14)
    np.testing.assert_allclose(levels, 0.7 * np.arange(10) + 0.3, atol=1e-14)


def test_squeezed_oscillator():
    levels = analytic_levels(spec(mu=0.25, offset=0.1), 1.0, 4)
    np.testing.assert_allclose(np.diff(levels), math.sqrt(2), rtol=1e-14)
    assert levels[0] == pytest.approx(math.sqrt(2) / 2 - 0.5 + 0.1, abs=1e-14)
    numeric = np.linalg.eigvalsh(sector_block(spec(mu=0.25, offset=0.1), 1.0, 64))[:4]
    np.testing.assert_allclose(numeric, levels, atol=1e-10)


def test_displaced_oscillator():
    levels = analytic_levels(spec(kappa=0.25), 1.0, 3)
    assert levels[0] == pytest.approx(-0.0625, abs=1e-15)
    numeric = np.linalg.eigvalsh(sector_block(spec(kappa=0.25), 1.0, 64))[0]
    assert numeric == pytest.approx(-0.0625, abs=1e-12)


def test_unstable_sector():
    bad = spec(mu=-0.3)
    with pytest.raises(InstabilityError):
        analytic_levels(bad, 1.0, 3)
    p = SystemParams(nu=0.05, lam=0.6, chi=0.3)
    with pytest.raises(InstabilityError):
        sector_spectrum(0, -1, p, "derivation")
    with pytest.warns(TruncationArtifactWarning):
        sector_spectrum(0, -1, p, "derivation", method="numeric", mirror_dim=16)
    # the as_printed variant keeps mu positive in both sectors
    sector_spectrum(0, -1, p, "as_printed")


def test_sector_spectrum_method_validated():
    with pytest.raises(ValueError):
        sector_spectrum(0, 1, SystemParams(nu=0.1, lam=1.0, chi=0.01), method="exact")


@given(
    nu=st.floats(0.1, 0.5),
    lam=st.floats(0.5, 2.0),
    chi_ratio=st.floats(0.0, 0.2),
    n=st.integers(0, 8),
    s=st.sampled_from([1, -1]),
    variant=st.sampled_from(["derivation", "as_printed"]),
)
def test_analytic_matches_numeric(nu, lam, chi_ratio, n, s, variant):
    # chi <= 0.2 nu keeps the displaced lower half of the ladder inside 128 levels
    p = SystemParams(nu=nu, lam=lam, chi=chi_ratio * nu)
    dim = 128
    analytic = sector_spectrum(n, s, p, variant, "analytic", dim)
    numeric = sector_spectrum(n, s, p, variant, "numeric", dim)
    assert np.max(np.abs(analytic[: dim // 2] - numeric[: dim // 2])) <= 1e-8 * nu


def test_regime_dispersive_example():
    rep = regime_check(SystemParams(nu=0.1, lam=1.0, chi=0.005), 16)
    assert rep.max_xi2 == pytest.approx(0.005 / 1.8, rel=1e-12)
    assert rep.max_xi1 == pytest.approx(0.005 / 2.2, rel=1e-12)
    assert rep.verdict == "dispersive_ok"
    assert rep.resonant_n is None


def test_regime_resonant():
    rep = regime_check(SystemParams(nu=1.0, lam=1.0, chi=0.005), 0)
    assert rep.verdict == "invalid"
    assert rep.resonant_n == 0
    assert rep.min_resonance_distance == 0


def test_regime_chi_zero():
    rep = regime_check(SystemParams(nu=0.1, lam=1.0, chi=0.0), 10)
    assert rep.max_xi1 == rep.max_xi2 == 0
    assert rep.verdict == "dispersive_ok"


def test_regime_marginal():
    rep = regime_check(SystemParams(nu=0.9, lam=1.0, chi=0.05), 3)
    assert rep.verdict == "marginal"
    assert rep.to_dict()["verdict"] == "marginal"


def test_regime_never_raises_on_lambda_zero():
    rep = regime_check(SystemParams(nu=0.1, lam=0.0, chi=0.01), 4)
    assert rep.chi_over_lambda is None
