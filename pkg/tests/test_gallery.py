import math

import numpy as np
import pytest

from prodsub import ProductSpace, analyze_point, evaluate_jet, membership_residual
from prodsub.errors import ChartError
from prodsub.extrinsic import FieldCache, normal_derivative_H, second_fundamental
from prodsub.gallery import (
    GALLERY,
    make_chart,
    make_cmc_product,
    make_partial_tube,
    make_theorem1,
    make_vertical_cylinder,
)
from prodsub.immersion import probe_grid
from conftest import random_interior_points, theorem1_closed_forms


def test_slice_fields(slice_s4):
    t = slice_s4.space.t_index
    for u in random_interior_points(slice_s4, 20, seed=40):
        pg = analyze_point(slice_s4, u)
        assert pg.pos[t] == 0.25
        assert pg.T_norm <= 1e-14
        assert second_fundamental(pg).H_norm <= 1e-14


def test_vertical_cylinder_geodesic_fields(vcyl_geodesic):
    for u in random_interior_points(vcyl_geodesic, 10, seed=41):
        pg = analyze_point(vcyl_geodesic, u)
        assert pg.eta_norm <= 1e-14
        assert pg.T_norm == pytest.approx(1.0, abs=1e-14)
        assert second_fundamental(pg).H_norm <= 1e-14


@pytest.mark.parametrize("eps", [1, -1])
def test_vertical_cylinder_circle_is_cmc(eps):
    space = ProductSpace(eps, 4)
    ch = make_vertical_cylinder(space, {"kind": "circle", "r": 0.7})
    want = (1 / math.tan(0.7) if eps == 1 else 1 / math.tanh(0.7)) / 2

    cache = FieldCache(ch)
    norms = []
    for u in random_interior_points(ch, 8, seed=42):
        pg, ed = cache.geometry(u)
        norms.append(ed.H_norm)
        ws = normal_derivative_H(ch, u, cache)
        assert max(np.linalg.norm(w) for w in ws) <= 1e-6
    assert np.allclose(norms, want, atol=1e-10)


@pytest.mark.parametrize("eps,a", [(1, 0.8), (1, 0.6), (-1, 1.25)])
def test_theorem1_shape_data_every_sample(eps, a):
    forms = theorem1_closed_forms(a, eps)
    ch = make_theorem1(ProductSpace(eps, 4), a=a)
    for u in random_interior_points(ch, 30, seed=43):
        pg = analyze_point(ch, u)
        ed = second_fundamental(pg)
        assert ed.H_norm == pytest.approx(forms["H_norm"], abs=1e-9)
        A1 = ed.shape_in_direction(ed.H / ed.H_norm)
        assert np.allclose(
            np.sort(np.linalg.eigvalsh(A1)), forms["eig_A1"], atol=1e-9
        )


def test_theorem1_parameter_errors(s4, h4):
    with pytest.raises(ChartError):
        make_theorem1(s4, a=1.2)
    with pytest.raises(ChartError):
        make_theorem1(h4, a=0.9)
    with pytest.raises(ChartError):
        make_theorem1(s4, a=0.8, phi_kind="helicoid", phi_params={"pitch": 3.0})
    with pytest.raises(ChartError):
        make_theorem1(ProductSpace(1, 3), a=0.8)
    with pytest.raises(ChartError):
        make_theorem1(s4, a=0.8, a2=0.5)


def test_theorem1_minimality_oracle_rejects_nonminimal_phi(s4):
    # a non-geodesic circle cylinder in Q^2_a is not minimal
    a = 0.7
    coords = [
        "0.56*cos(u1)",
        "0.56*sin(u1)",
        "0.42",
        "u2",
    ]
    with pytest.raises(ChartError, match="minimal"):
        make_theorem1(
            s4, a=a, phi_kind="custom", phi_params={"coords": coords}
        )


def test_theorem1_custom_phi_accepts_the_geodesic_cylinder(s4):
    coords = ["0.8*cos(u1/0.8)", "0.8*sin(u1/0.8)", "0", "u2"]
    ch = make_theorem1(s4, a=0.8, phi_kind="custom", phi_params={"coords": coords})
    ref = make_theorem1(s4, a=0.8)
    for u in random_interior_points(ref, 5, seed=44):
        assert np.allclose(
            evaluate_jet(ch, u).values, evaluate_jet(ref, u).values, atol=1e-14
        )


def _helicoid_phi_oracle(a, lam, eps):
    """Mean curvature of the helicoid surface factor inside Q^2_a x R,
    computed directly (independent of the chart machinery)."""
    sig = np.array([-1.0 if eps == -1 else 1.0, 1.0, 1.0, 1.0])

    def sdot(x, y):
        return float(np.sum(sig * x * y))

    rng = np.random.default_rng(45)
    worst = 0.0
    for u, v in rng.uniform(-0.8, 0.8, (20, 2)):
        if eps == 1:
            phi = np.array([a * math.cos(u) * math.cos(v), a * math.cos(u) * math.sin(v), a * math.sin(u), 0.0])
            pu = np.array([-a * math.sin(u) * math.cos(v), -a * math.sin(u) * math.sin(v), a * math.cos(u), 0.0])
            pv = np.array([-a * math.cos(u) * math.sin(v), a * math.cos(u) * math.cos(v), 0.0, lam])
            puu = np.array([-a * math.cos(u) * math.cos(v), -a * math.cos(u) * math.sin(v), -a * math.sin(u), 0.0])
            pvv = np.array([-a * math.cos(u) * math.cos(v), -a * math.cos(u) * math.sin(v), 0.0, 0.0])
        else:
            phi = np.array([a * math.cosh(u), a * math.sinh(u) * math.cos(v), a * math.sinh(u) * math.sin(v), 0.0])
            pu = np.array([a * math.sinh(u), a * math.cosh(u) * math.cos(v), a * math.cosh(u) * math.sin(v), 0.0])
            pv = np.array([0.0, -a * math.sinh(u) * math.sin(v), a * math.sinh(u) * math.cos(v), lam])
            puu = np.array([a * math.cosh(u), a * math.sinh(u) * math.cos(v), a * math.sinh(u) * math.sin(v), 0.0])
            pvv = np.array([0.0, -a * math.sinh(u) * math.cos(v), -a * math.sinh(u) * math.sin(v), 0.0])
        g = np.array([[sdot(pu, pu), sdot(pu, pv)], [sdot(pv, pu), sdot(pv, pv)]])
        gi = np.linalg.inv(g)
        hvec = gi[0, 0] * puu + gi[1, 1] * pvv  # g is diagonal here
        hvec = hvec - (sdot(hvec, phi) / (eps * a * a)) * phi
        coef = gi @ np.array([sdot(hvec, pu), sdot(hvec, pv)])
        hvec = hvec - np.column_stack([pu, pv]) @ coef
        worst = max(worst, math.sqrt(abs(sdot(hvec, hvec))) / 2)
    return worst


@pytest.mark.parametrize("eps,a", [(1, 0.8), (-1, 1.25)])
def test_helicoid_factor_is_minimal(eps, a):
    assert _helicoid_phi_oracle(a, 0.5, eps) <= 1e-10
    # and the generator accepts it
    make_theorem1(
        ProductSpace(eps, 4), a=a, phi_kind="helicoid", phi_params={"pitch": 0.5}
    )


def test_partial_tube_class_A(tube_s3):
    from prodsub.classify import class_A_residual

    for u in random_interior_points(tube_s3, 10, seed=46):
        pg = analyze_point(tube_s3, u)
        assert class_A_residual(pg, second_fundamental(pg)) <= 1e-6


def test_partial_tube_constraint_errors():
    sp3 = ProductSpace(1, 3)
    with pytest.raises(ChartError, match="alpha"):
        make_partial_tube(
            sp3, profile={"coords": ["cos(0.4*s)", "sin(0.4*s)", "0.5"]}
        )
    with pytest.raises(ChartError, match="quadric"):
        make_partial_tube(
            sp3, profile={"coords": ["cos(s)", "0.5*sin(s)", "0.6*s"]}
        )
    with pytest.raises(ChartError, match="k <= 2"):
        make_partial_tube(sp3, base={"kind": "geodesic", "k": 3})


def test_partial_tube_k0_reduces_to_vertical_cylinder():
    sp3 = ProductSpace(1, 3)
    tube = make_partial_tube(sp3, base={"kind": "geodesic", "k": 0}, profile={"coords": ["1", "s"]})
    cyl = make_vertical_cylinder(sp3)
    for u in random_interior_points(tube, 10, seed=47):
        assert np.allclose(
            evaluate_jet(tube, u).values, evaluate_jet(cyl, u).values, atol=1e-12
        )
        pg = analyze_point(tube, u)
        assert pg.eta_norm <= 1e-12


@pytest.mark.parametrize("eps", [1, -1])
def test_cmc_product_constant_H(eps):
    ch = make_cmc_product(ProductSpace(eps, 3), 0.7)
    want = (2.0 / 3.0) * (1 / math.tan(0.7) if eps == 1 else 1 / math.tanh(0.7))
    norms = [
        second_fundamental(analyze_point(ch, u)).H_norm
        for u in random_interior_points(ch, 10, seed=48)
    ]
    assert np.allclose(norms, want, atol=1e-10)


def test_cmc_product_equator_minimal_and_vertical():
    ch = make_cmc_product(ProductSpace(1, 3), math.pi / 2)
    assert "minimal" in ch.label
    pg = analyze_point(ch, [0.1, 0.2, -0.1])
    assert second_fundamental(pg).H_norm <= 1e-14
    assert pg.nu is not None and abs(pg.nu) <= 1e-14


def test_cmc_product_parameter_range():
    with pytest.raises(ChartError):
        make_cmc_product(ProductSpace(1, 3), 2.0)
    with pytest.raises(ChartError):
        make_cmc_product(ProductSpace(-1, 3), -0.3)


def test_gallery_registry_and_factory(s4):
    assert set(GALLERY) == {
        "slice",
        "vertical_cylinder",
        "theorem1",
        "partial_tube",
        "cmc_product",
    }
    assert "eps=+1: a^2+b^2=1" in GALLERY["theorem1"]["constraints"]
    assert "sum alpha_i^2 = 1" in GALLERY["partial_tube"]["constraints"]
    ch = make_chart(s4, {"kind": "slice", "t0": 0.1})
    assert ch.label.startswith("slice")
    with pytest.raises(ChartError, match="unknown gallery kind"):
        make_chart(s4, {"kind": "nope"})


def test_expression_curve_cylinder(s4):
    ch = make_vertical_cylinder(
        s4,
        {
            "kind": "exprs",
            "coords": ["cos(u1)", "sin(u1)", "0", "0", "0"],
        },
    )
    ref = make_vertical_cylinder(s4)
    for u in random_interior_points(ch, 5, seed=49):
        assert np.allclose(
            evaluate_jet(ch, u).values, evaluate_jet(ref, u).values, atol=1e-14
        )


def test_membership_oracle_on_all_generators(all_gallery_charts):
    for ch in all_gallery_charts:
        worst = max(
            membership_residual(ch.space, evaluate_jet(ch, u).values)
            for u in probe_grid(ch.domain, 5)
        )
        assert worst <= 1e-12, ch.label
