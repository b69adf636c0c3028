import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capflow.caps import CapSpec, cap_radial
from capflow.grid import GridSpec, RadialField, build_grid
from capflow.initial import (InadmissibleInitialData, InitSpec, collar_cutoff, make_initial,
                             perturbation_profile, validate)
from capflow.integrals import integrate

axis = build_grid(GridSpec(n_beta=128))
full = build_grid(GridSpec(n_beta=64, n_xi=32, axisymmetric=False))


def test_cap_is_admissible():
    theta = math.pi / 3
    f, rep = make_initial(InitSpec(kind="cap"), theta, axis)
    assert rep.admissible
    assert rep.min_H == pytest.approx(2.0, abs=1e-3)
    assert rep.bc_residual <= 1e-10
    np.testing.assert_array_equal(f.phi, np.log(cap_radial(CapSpec(theta), axis.beta)))


def test_zero_epsilon_is_the_cap():
    theta = 2 * math.pi / 3
    a, _ = make_initial(InitSpec(kind="cap", r=1.3), theta, axis)
    b, _ = make_initial(InitSpec(kind="perturbed_cap", r=1.3, epsilon=0.0, seed=9), theta, axis)
    np.testing.assert_array_equal(a.phi, b.phi)


def test_seeded_obtuse_perturbation():
    theta = 2 * math.pi / 3
    f, rep = make_initial(InitSpec(kind="perturbed_cap", epsilon=0.05, seed=7), theta, axis)
    assert rep.admissible and rep.min_H > 0 and rep.retries_used == 0
    cap = integrate(make_initial(InitSpec(), theta, axis)[0], theta)
    assert integrate(f, theta).deficit_norm > cap.deficit_norm


def test_dimple_is_rejected():
    theta = math.radians(60)
    base = np.log(cap_radial(CapSpec(theta), axis.beta))
    bump = np.exp(-(axis.beta / 0.15) ** 2)
    rep = validate(RadialField(axis, base + np.log1p(-0.5 * bump)), theta)
    assert not rep.admissible
    assert rep.min_H < 0


def test_boundary_residual_after_enforcement():
    # slope at the equator is nonzero before the ghost closes it
    phi = 0.2 * np.sin(axis.beta) ** 2
    rep = validate(RadialField(axis, phi), math.pi / 2)
    assert rep.bc_residual <= 1e-10


def test_collar_cutoff_shape():
    d = math.pi / 10
    b = np.linspace(0, math.pi / 2, 2001)
    c = collar_cutoff(b, d)
    assert np.all(c[b <= math.pi / 2 - 2 * d] == 1.0)
    assert np.all(c[b >= math.pi / 2 - d] == 0.0)
    assert np.all(np.diff(c) <= 0)
    assert np.all((c >= 0) & (c <= 1))


def test_perturbation_is_collar_supported():
    theta = math.radians(120)
    spec = InitSpec(kind="perturbed_cap", epsilon=0.05, seed=1)
    f, _ = make_initial(spec, theta, axis)
    cap = np.log(cap_radial(CapSpec(theta), axis.beta))
    outside = axis.beta >= math.pi / 2 - spec.cutoff_delta
    np.testing.assert_array_equal(f.phi[outside], cap[outside])
    assert 0 < np.max(np.abs(f.phi - cap)) <= 0.05


@pytest.mark.parametrize("grid", [axis, full], ids=["axisymmetric", "full"])
def test_profile_normalised(grid):
    Y = perturbation_profile(InitSpec(kind="perturbed_cap", seed=4, modes=((1, 1.0), (2, 0.5))), grid)
    assert np.max(np.abs(Y)) == pytest.approx(1.0, rel=1e-14)


def test_full_grid_profile_is_pole_regular():
    Y = perturbation_profile(InitSpec(kind="perturbed_cap", seed=4, modes=((1, 1.0), (2, 0.5), (3, 0.3))), full)
    # sin(beta)^m cos(m xi) -> 0 at the pole for m >= 1
    assert np.max(np.abs(Y[0])) < 0.1
    # the pole row carries no azimuthal mode the polar filter would remove
    np.testing.assert_allclose(full.polar_filter(Y), Y, atol=1e-14)


def test_deterministic_for_fixed_seed():
    spec = InitSpec(kind="perturbed_cap", epsilon=0.05, seed=11)
    a, _ = make_initial(spec, 1.0, axis)
    b, _ = make_initial(spec, 1.0, axis)
    assert a.phi.tobytes() == b.phi.tobytes()
    c, _ = make_initial(InitSpec(kind="perturbed_cap", epsilon=0.05, seed=12), 1.0, axis)
    assert not np.array_equal(a.phi, c.phi)


def test_epsilon_halving_is_reported():
    spec = InitSpec(kind="perturbed_cap", epsilon=3.0, seed=2)
    f, rep = make_initial(spec, math.radians(60), axis)
    assert rep.admissible
    assert rep.retries_used > 0
    assert rep.epsilon_used == pytest.approx(3.0 / 2**rep.retries_used)


def test_inadmissible_after_retries_carries_report():
    spec = InitSpec(kind="perturbed_cap", epsilon=0.05, h_min_factor=10.0)
    with pytest.raises(InadmissibleInitialData) as info:
        make_initial(spec, math.radians(60), axis)
    assert info.value.report.retries_used == 8
    assert not info.value.report.admissible


@pytest.mark.parametrize("kwargs", [dict(kind="blob"), dict(epsilon=-1.0), dict(cutoff_delta=1.0),
                                    dict(r=0.0), dict(modes=((9, 1.0),))])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        InitSpec(**kwargs)


@given(st.integers(0, 10_000), st.sampled_from([30.0, 60.0, 90.0, 120.0, 150.0]))
def test_admissible_outputs_satisfy_hypotheses(seed, deg):
    theta = math.radians(deg)
    f, rep = make_initial(InitSpec(kind="perturbed_cap", epsilon=0.05, seed=seed), theta, axis)
    assert np.all(np.isfinite(f.phi))
    assert rep.min_u > 0
    assert rep.min_H >= rep.h_min > 0
    assert rep.bc_residual <= 1e-10
