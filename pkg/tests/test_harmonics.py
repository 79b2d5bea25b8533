import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from fracwave.harmonics import (GridField, GroupSpec, SpectralField, analyze, apply_fractional_laplacian,
                                build_grid, character, enumerate_dual, fractional_multiplier, get_dual,
                                lq_norm, parse_group, plancherel_norm, random_band_limited, sobolev_norm,
                                synthesize, torus_mode)
from fracwave.wigner import wigner_D


def test_enumeration_sizes():
    assert len(enumerate_dual(GroupSpec.torus(2, 3))) == 49
    reps = enumerate_dual(GroupSpec.so3(4))
    assert [r.label for r in reps] == [(l,) for l in range(5)]
    assert [r.casimir for r in reps] == [0, 2, 6, 12, 20]
    assert sum(r.dim ** 2 for r in reps) == get_dual(GroupSpec.so3(4)).size


def test_group_validation():
    with pytest.raises(ValueError):
        GroupSpec("sphere", 3)
    with pytest.raises(ValueError):
        GroupSpec.torus(2, 0)
    assert parse_group("torus:3", 2).n == 3
    assert parse_group("so3", 2).dimension == 3
    with pytest.raises(ValueError):
        parse_group("heisenberg", 2)


def test_weights_are_probability():
    for g in (GroupSpec.torus(2, 4), GroupSpec.so3(4), GroupSpec.so3(3, 2.5)):
        assert build_grid(g).weights.sum() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("fixture", ["torus2", "so3"])
def test_round_trip_and_plancherel(fixture, request):
    g, dual, grid = request.getfixturevalue(fixture)
    spec = random_band_limited(dual, 7, 0.3)
    f = synthesize(spec, grid)
    assert np.isrealobj(f.values)
    back = analyze(f)
    assert np.max(np.abs(back.data - spec.data)) < 1e-12
    assert plancherel_norm(spec) == pytest.approx(lq_norm(f, 2), rel=1e-12)


def test_constant_field_is_trivial_mode(so3):
    g, dual, grid = so3
    f = GridField(grid, np.full(grid.size, 3.0))
    spec = analyze(f)
    assert spec.trivial() == pytest.approx(3.0)
    assert np.max(np.abs(spec.data[1:])) < 1e-12


def test_character_norm_and_analysis(so3):
    g, dual, grid = so3
    chi = synthesize(character(dual, 1), grid)
    assert lq_norm(chi, 2) ** 2 == pytest.approx(1.0, abs=1e-12)
    back = analyze(chi)
    assert np.allclose(back.block((1,)), np.eye(3) / 3, atol=1e-13)


def test_torus_mode_is_cosine(torus2):
    g, dual, grid = torus2
    f = synthesize(torus_mode(dual, (1, 2), 2.0, real=True), grid)
    x, y = grid.nodes.T
    assert np.allclose(f.values, 2 * np.cos(x + 2 * y), atol=1e-13)


def test_reality_projection_on_so3(so3):
    g, dual, grid = so3
    spec = random_band_limited(dual, 3, 0.0, real=False).enforce_reality()
    vals = synthesize(spec._like(spec.data, real=False), grid).values
    assert np.max(np.abs(vals.imag)) < 1e-12


def test_fractional_multiplier(torus2):
    g, dual, grid = torus2
    assert fractional_multiplier(dual, 0.5)[0] == 0
    spec = torus_mode(dual, (4, 0), 1.0)
    # (-L)^(s/2) has symbol |k|^s
    assert apply_fractional_laplacian(spec, 0.5).block((4, 0))[0, 0] == pytest.approx(2.0)
    assert apply_fractional_laplacian(spec, 2).block((4, 0))[0, 0] == pytest.approx(16.0)
    assert sobolev_norm(spec, 0.5) == pytest.approx(3.0)
    const = SpectralField.zeros(dual)
    const.data[0] = -2.5
    assert np.all(apply_fractional_laplacian(const, 0.7).data == 0)
    assert sobolev_norm(const, 0.7) == pytest.approx(2.5)


def test_lq_norm_of_mode_is_one(torus2):
    g, dual, grid = torus2
    f = synthesize(torus_mode(dual, (2, -1), 1.0), grid)
    for q in (2, 3, 4, 6):
        assert lq_norm(f, q) == pytest.approx(1.0, abs=1e-12)


def test_serialization_round_trip(so3, tmp_path):
    g, dual, grid = so3
    spec = random_band_limited(dual, 5, 0.5)
    again = SpectralField.from_json(spec.to_json())
    assert again.dual == dual and again.real
    assert np.array_equal(again.data, spec.data)
    obj = json.loads(spec.to_json())
    assert obj["group"] == "so3" and obj["bandlimit"] == g.bandlimit
    f = synthesize(spec, grid)
    f.save_binary(tmp_path / "f.bin")
    assert np.array_equal(GridField.load_binary(grid, tmp_path / "f.bin").values, f.values)
    f.save_csv(tmp_path / "f.csv")
    assert np.allclose(GridField.load_csv(grid, tmp_path / "f.csv").values, f.values, rtol=1e-15, atol=0)


def test_shape_mismatch_rejected(torus2, so3):
    with pytest.raises(ValueError):
        SpectralField(torus2[1], np.zeros(3))
    with pytest.raises(ValueError):
        random_band_limited(torus2[1], 0) + random_band_limited(so3[1], 0)


def _evaluate_so3(spec, euler):
    """Pointwise synthesis sum_l d_l tr(u_hat(l) D^l(g)) at ZYZ angles."""
    total = 0.0
    for r in spec.dual.reps:
        l = r.label[0]
        total += r.dim * np.trace(spec.block(r.label) @ wigner_D(l, *euler))
    return total


def test_pointwise_matches_grid(so3):
    g, dual, grid = so3
    spec = random_band_limited(dual, 9, 0.2)
    f = synthesize(spec, grid)
    for i in (0, 17, grid.size // 2, grid.size - 3):
        assert _evaluate_so3(spec, grid.nodes[i]).real == pytest.approx(f.values[i], abs=1e-12)


def test_casimir_along_one_parameter_subgroups(so3):
    """Sum of second derivatives along the three axes gives -l(l+1) on degree l."""
    g, dual, grid = so3
    h = 1e-3
    for l in (1, 2, 3):
        spec = SpectralField.zeros(dual, real=False)
        rng = np.random.default_rng(l)
        spec.set_block((l,), rng.standard_normal((2 * l + 1,) * 2))
        g0 = Rotation.from_euler("ZYZ", [0.4, 1.1, 2.3])
        f0 = _evaluate_so3(spec, g0.as_euler("ZYZ"))
        lap = 0.0
        for axis in np.eye(3):
            fp = _evaluate_so3(spec, (g0 * Rotation.from_rotvec(h * axis)).as_euler("ZYZ"))
            fm = _evaluate_so3(spec, (g0 * Rotation.from_rotvec(-h * axis)).as_euler("ZYZ"))
            lap += (fp - 2 * f0 + fm) / h ** 2
        assert abs(lap + l * (l + 1) * f0) <= 1e-4 * max(1.0, abs(l * (l + 1) * f0))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), decay=st.floats(0, 2), n=st.integers(1, 3))
def test_property_round_trip_torus(seed, decay, n):
    g = GroupSpec.torus(n, 3)
    dual, grid = get_dual(g), build_grid(g)
    spec = random_band_limited(dual, seed, decay)
    back = analyze(synthesize(spec, grid))
    assert np.max(np.abs(back.data - spec.data)) <= 1e-12 * max(1.0, np.max(np.abs(spec.data)))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), K=st.integers(1, 5))
def test_property_plancherel_so3(seed, K):
    g = GroupSpec.so3(K)
    spec = random_band_limited(get_dual(g), seed)
    f = synthesize(spec, build_grid(g))
    assert lq_norm(f, 2) == pytest.approx(plancherel_norm(spec), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.01, 1.5), t=st.floats(0.01, 1.5))
def test_property_multiplier_semigroup(s, t):
    dual = get_dual(GroupSpec.torus(2, 3))
    lhs = fractional_multiplier(dual, s) * fractional_multiplier(dual, t)
    assert np.allclose(lhs, fractional_multiplier(dual, s + t), rtol=1e-12, atol=0)
