"""Exact generators for the named constructions, with analytic 2-jets.

Every generator validates its parameter constraints and self-checks the
membership of its image at construction time; the theorem-1 family also runs
a minimality oracle on its surface factor and the partial tube checks that
its base normals are parallel and its profile stays on the fiber quadric.
"""

from __future__ import annotations

import math

import numpy as np

from . import exprlang, jets
from .ambient import ProductSpace
from .errors import ChartError
from .immersion import Chart, probe_grid
from .jets import VecJet2, fd_gradient

__all__ = [
    "make_slice",
    "make_vertical_cylinder",
    "make_theorem1",
    "make_partial_tube",
    "make_cmc_product",
    "make_chart",
    "GALLERY",
]


def _const(value: float, m: int = 0):
    # m is taken from the seed jets so closures can be shared across charts
    return lambda us: jets.jet_const(value, us[0].m)


def _zero(m: int = 0):
    return _const(0.0)


def make_slice(space: ProductSpace, t0: float = 0.0) -> Chart:
    """Coordinate patch of a totally geodesic Q^2 sitting in the slice
    Q^n_eps x {t0}; T vanishes identically."""
    m = 2
    if space.epsilon == 1:
        coords = [
            lambda us: jets.cos(us[0]) * jets.cos(us[1]),
            lambda us: jets.cos(us[0]) * jets.sin(us[1]),
            lambda us: jets.sin(us[0]),
        ]
    else:
        coords = [
            lambda us: jets.cosh(us[0]) * jets.cosh(us[1]),
            lambda us: jets.sinh(us[0]),
            lambda us: jets.cosh(us[0]) * jets.sinh(us[1]),
        ]
    coords += [_zero(m)] * (space.n - 2)
    coords.append(_const(t0, m))
    chart = Chart(
        space=space,
        m=m,
        coords=coords,
        domain=[(-0.6, 0.6), (-0.6, 0.6)],
        var_names=["u1", "u2"],
        label=f"slice(t0={t0})",
    )
    chart.validate_membership()
    return chart


def _curve_coords(space: ProductSpace, curve: dict, m: int, var: str, var_names):
    """Coordinate closures (n+1 of them) for a curve in the Q factor."""
    kind = curve.get("kind", "geodesic")
    idx = var_names.index(var)
    if kind == "geodesic":
        if space.epsilon == 1:
            qc = [lambda us: jets.cos(us[idx]), lambda us: jets.sin(us[idx])]
        else:
            qc = [lambda us: jets.cosh(us[idx]), lambda us: jets.sinh(us[idx])]
        qc += [_zero(m)] * (space.n - 1)
        return qc
    if kind == "circle":
        r = float(curve["r"])
        if r <= 0:
            raise ChartError("circle radius must be positive")
        if space.epsilon == 1:
            if r >= math.pi / 2:
                raise ChartError("circle radius must be < pi/2 on the sphere")
            cr, sr = math.cos(r), math.sin(r)
        else:
            cr, sr = math.cosh(r), math.sinh(r)
        qc = [
            _const(cr, m),
            lambda us: sr * jets.cos(us[idx]),
            lambda us: sr * jets.sin(us[idx]),
        ]
        qc += [_zero(m)] * (space.n - 2)
        return qc
    if kind == "exprs":
        srcs = curve["coords"]
        if len(srcs) != space.n + 1:
            raise ChartError(f"curve needs {space.n + 1} coordinate expressions")
        params = curve.get("params", {})
        out = []
        for src in srcs:
            ast = exprlang.parse(src) if isinstance(src, str) else src

            def coord(us, ast=ast):
                return exprlang.eval_jet(ast, dict(zip(var_names, us)), params)

            out.append(coord)
        return out
    raise ChartError(f"unknown curve kind {kind!r}")


def make_vertical_cylinder(space: ProductSpace, curve: dict | None = None) -> Chart:
    """gamma x R for a curve gamma in the Q factor; eta vanishes identically."""
    curve = curve or {"kind": "geodesic"}
    m = 2
    var_names = ["u1", "s"]
    coords = _curve_coords(space, curve, m, "u1", var_names)
    coords.append(lambda us: us[1])
    chart = Chart(
        space=space,
        m=m,
        coords=coords,
        domain=[(-1.5, 1.5), (-1.0, 1.0)],
        var_names=var_names,
        s_index=1,
        label=f"vertical_cylinder({curve.get('kind', 'geodesic')})",
    )
    chart.validate_membership()
    return chart


def _phi_factor(space: ProductSpace, a: float, phi_kind: str, phi_params: dict):
    """Surface-factor closures (3 Q slots + 1 R slot) over (u1, u2)."""
    if space.epsilon == 1:
        if phi_kind == "geodesic_cylinder":
            qc = [
                lambda us: a * jets.cos(us[0] / a),
                lambda us: a * jets.sin(us[0] / a),
                _zero(2),
            ]
            fr = lambda us: us[1]
            dom = [(-1.0, 1.0), (-1.0, 1.0)]
        elif phi_kind == "helicoid":
            lam = float(phi_params.get("pitch", 0.5))
            if not 0.0 < lam <= 2.0:
                raise ChartError("helicoid pitch must lie in (0, 2]")
            qc = [
                lambda us: a * jets.cos(us[0]) * jets.cos(us[1]),
                lambda us: a * jets.cos(us[0]) * jets.sin(us[1]),
                lambda us: a * jets.sin(us[0]),
            ]
            fr = lambda us: lam * us[1]
            dom = [(-math.pi / 2 + 0.2, math.pi / 2 - 0.2), (-1.0, 1.0)]
        elif phi_kind == "custom":
            qc, fr, dom = _custom_phi(phi_params)
        else:
            raise ChartError(f"unknown phi kind {phi_kind!r}")
    else:
        if phi_kind == "geodesic_cylinder":
            qc = [
                lambda us: a * jets.cosh(us[0] / a),
                lambda us: a * jets.sinh(us[0] / a),
                _zero(2),
            ]
            fr = lambda us: us[1]
            dom = [(-1.0, 1.0), (-1.0, 1.0)]
        elif phi_kind == "helicoid":
            lam = float(phi_params.get("pitch", 0.5))
            if not 0.0 < lam <= 2.0:
                raise ChartError("helicoid pitch must lie in (0, 2]")
            qc = [
                lambda us: a * jets.cosh(us[0]),
                lambda us: a * jets.sinh(us[0]) * jets.cos(us[1]),
                lambda us: a * jets.sinh(us[0]) * jets.sin(us[1]),
            ]
            fr = lambda us: lam * us[1]
            dom = [(-0.9, 0.9), (-1.0, 1.0)]
        elif phi_kind == "custom":
            qc, fr, dom = _custom_phi(phi_params)
        else:
            raise ChartError(f"unknown phi kind {phi_kind!r}")
    return qc, fr, dom


def _custom_phi(phi_params: dict):
    srcs = phi_params.get("coords")
    if not srcs or len(srcs) != 4:
        raise ChartError("custom phi needs 4 coordinate expressions in (u1, u2)")
    params = phi_params.get("params", {})
    names = ["u1", "u2"]

    def wrap(src):
        ast = exprlang.parse(src) if isinstance(src, str) else src
        return lambda us: exprlang.eval_jet(ast, dict(zip(names, us)), params)

    dom = [tuple(iv) for iv in phi_params.get("domain", [(-1.0, 1.0), (-1.0, 1.0)])]
    coords = [wrap(s) for s in srcs]
    return coords[:3], coords[3], dom


def _phi_geometry_check(space, a, qc, fr, dom, check_T: bool, tol_min: float = 1e-8):
    """Minimality oracle for the surface factor phi in Q^2_a x R, plus the
    nowhere-vanishing test on its T field."""
    eps = space.epsilon
    sig = np.array([eps if eps == -1 else 1.0, 1.0, 1.0, 1.0])

    def sdot(x, y):
        return float(np.sum(sig * x * y))

    worst_h = 0.0
    min_t = math.inf
    for u in probe_grid(dom, 5):
        seeds = (jets.jet_var(0, u[0], 2), jets.jet_var(1, u[1], 2))
        vj = VecJet2([qc[0](seeds), qc[1](seeds), qc[2](seeds), fr(seeds)])
        J = vj.jac
        phiq = vj.values.copy()
        phiq[3] = 0.0
        g = np.array([[sdot(J[:, i], J[:, j]) for j in range(2)] for i in range(2)])
        det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
        if det <= 1e-14:
            raise ChartError("phi factor is degenerate on the probe grid")
        g_inv = np.linalg.inv(g)

        def proj(v):
            out = v - (sdot(v, phiq) / (eps * a * a)) * phiq
            coef = g_inv @ np.array([sdot(out, J[:, 0]), sdot(out, J[:, 1])])
            return out - J @ coef

        hvec = np.zeros(4)
        for i in range(2):
            for j in range(2):
                hvec += g_inv[i, j] * vj.second(i, j)
        hvec = 0.5 * proj(hvec)
        worst_h = max(worst_h, math.sqrt(abs(sdot(hvec, hvec))))
        if check_T:
            tq = np.array([J[3, 0], J[3, 1]])
            min_t = min(min_t, float(tq @ g_inv @ tq))
    if worst_h > tol_min:
        raise ChartError(
            f"phi is not minimal: ||H_phi|| reaches {worst_h:.3e} > {tol_min:.1e}"
        )
    if check_T and min_t < 1e-10:
        raise ChartError("T_phi vanishes somewhere on the probe grid")


def make_theorem1(
    space: ProductSpace,
    a: float | None = None,
    phi_kind: str = "geodesic_cylinder",
    phi_params: dict | None = None,
    a2: float | None = None,
) -> Chart:
    """Circle-times-minimal-surface chart (b cos(s/b), b sin(s/b), phi(p)).

    eps = +1 takes 0 < |a| < 1 with b = sqrt(1 - a^2); eps = -1 needs |a| > 1
    and uses b = sqrt(a^2 - 1) so that the image stays on the quadric.
    """
    if space.n != 4:
        raise ChartError("theorem1 charts live in Q^4_eps x R")
    phi_params = phi_params or {}
    if a is None:
        if a2 is None:
            raise ChartError("theorem1 needs a or a2")
        if a2 <= 0:
            raise ChartError("a2 must be positive")
        a = math.sqrt(a2)
    elif a2 is not None and abs(a * a - a2) > 1e-12:
        raise ChartError("inconsistent a and a2")
    if space.epsilon == 1:
        if not 0.0 < abs(a) < 1.0:
            raise ChartError(f"eps=+1 needs 0 < |a| < 1, got a={a}")
        b = math.sqrt(1.0 - a * a)
    else:
        if not abs(a) > 1.0:
            raise ChartError(f"eps=-1 needs |a| > 1, got a={a}")
        b = math.sqrt(a * a - 1.0)

    qc, fr, phidom = _phi_factor(space, a, phi_kind, phi_params)
    _phi_geometry_check(space, a, qc, fr, phidom, check_T=phi_kind != "geodesic_cylinder")

    m = 3
    cs = lambda us: b * jets.cos(us[2] / b)
    sn = lambda us: b * jets.sin(us[2] / b)
    if space.epsilon == 1:
        coords = [cs, sn, qc[0], qc[1], qc[2], fr]
    else:
        # timelike coordinate of the phi factor goes to slot 0
        coords = [qc[0], qc[1], qc[2], cs, sn, fr]

    smax = 1.2
    chart = Chart(
        space=space,
        m=m,
        coords=coords,
        params={"a": a, "b": b},
        domain=[phidom[0], phidom[1], (-smax, smax)],
        var_names=["u1", "u2", "s"],
        s_index=2,
        label=f"theorem1(a={a:g}, {phi_kind})",
    )
    chart.validate_membership()
    return chart


def make_partial_tube(
    space: ProductSpace, base: dict | None = None, profile: dict | None = None
) -> Chart:
    """Parallel transport of a profile curve through a flat parallel normal
    subbundle of a base curve in the Q factor."""
    base = base or {"kind": "geodesic"}
    var_names = ["u1", "s"]
    m = 2
    gamma = _curve_coords(space, base, m, "u1", var_names)

    normals = base.get("normals")
    k = int(base.get("k", 1)) if normals is None else len(normals)
    if not 0 <= k <= 2:
        raise ChartError("partial tube supports k <= 2 parallel normals")
    if normals is None:
        # constant coordinate directions, normal to the default curves
        first = 2 if base.get("kind", "geodesic") == "geodesic" else 3
        if first + k > space.n + 1:
            raise ChartError(f"base curve leaves no room for {k} normals in Q^{space.n}")
        normal_asts = []
        for i in range(k):
            comps = ["0"] * (space.n + 1)
            comps[first + i] = "1"
            normal_asts.append([exprlang.parse(c) for c in comps])
    else:
        normal_asts = []
        for srcs in normals:
            asts = [exprlang.parse(s) if isinstance(s, str) else s for s in srcs]
            if len(asts) != space.n + 1:
                raise ChartError(f"each normal needs {space.n + 1} components")
            normal_asts.append(asts)

    def normal_fn(i):
        def fn(x: float) -> np.ndarray:
            return np.array(
                [exprlang.eval_value(t, {"u1": x}) for t in normal_asts[i]]
            )

        return fn

    normal_fns = [normal_fn(i) for i in range(k)]

    profile = profile or {
        "coords": ["cos(0.4*s)", "sin(0.4*s)", "0.6*s"][: k + 2]
        if space.epsilon == 1
        else ["cosh(0.4*s)", "sinh(0.4*s)", "0.6*s"][: k + 2]
    }
    srcs = profile["coords"]
    if len(srcs) != k + 2:
        raise ChartError(f"profile needs k+2 = {k + 2} components")
    pparams = profile.get("params", {})
    alpha_asts = [exprlang.parse(s) if isinstance(s, str) else s for s in srcs]

    sdom = tuple(profile.get("domain", (-1.0, 1.0)))
    xdom = tuple(base.get("domain", (-1.2, 1.2)))

    _validate_tube_data(space, gamma, normal_fns, alpha_asts, pparams, xdom, sdom, k)

    def gamma_floats(x: float) -> np.ndarray:
        seeds = (jets.jet_const(x, m), jets.jet_const(0.0, m))
        return np.array([c(seeds).value for c in gamma])

    def coord_factory(slot: int):
        def coord(us):
            alphas = [
                exprlang.eval_jet(t, {"s": us[1]}, pparams) for t in alpha_asts
            ]
            if slot == space.t_index:
                return alphas[k + 1]
            acc = alphas[0] * gamma[slot](us)
            for i in range(k):
                comp = exprlang.eval_jet(normal_asts[i][slot], {"u1": us[0]}, {})
                acc = acc + alphas[1 + i] * comp
            return acc

        return coord

    coords = [coord_factory(slot) for slot in range(space.ambient_dim)]
    chart = Chart(
        space=space,
        m=m,
        coords=coords,
        domain=[xdom, sdom],
        var_names=var_names,
        s_index=1,
        label=f"partial_tube(k={k})",
    )
    chart.validate_membership()
    return chart


def _validate_tube_data(space, gamma, normal_fns, alpha_asts, pparams, xdom, sdom, k):
    sig = space.signature[: space.n + 1]

    def qdot(x, y):
        return float(np.sum(sig * x * y))

    # base normals: orthonormal, tangent to Q, normal and parallel along gamma
    def gamma_val(x):
        seeds = (jets.jet_const(x, 2), jets.jet_const(0.0, 2))
        return np.array([c(seeds).value for c in gamma])

    def gamma_tan(x):
        seeds = (jets.jet_var(0, x, 2), jets.jet_const(0.0, 2))
        return np.array([c(seeds).grad[0] for c in gamma])

    xs = np.linspace(xdom[0] + 0.02, xdom[1] - 0.02, 7)
    for x in xs:
        gv, gt = gamma_val(x), gamma_tan(x)
        for i, nf in enumerate(normal_fns):
            xi = nf(x)
            if abs(qdot(xi, xi) - 1.0) > 1e-8 or abs(qdot(xi, gv)) > 1e-8 or abs(
                qdot(xi, gt)
            ) > 1e-8:
                raise ChartError(f"base normal {i} is not unit-normal along gamma")
            for jj in range(i):
                if abs(qdot(xi, normal_fns[jj](x))) > 1e-8:
                    raise ChartError("base normals are not orthonormal")
            # parallelism: project D_x xi onto the normal space of gamma in Q
            d = fd_gradient(lambda y: nf(float(y[0])), np.array([x]), 0)
            d = d - space.epsilon * qdot(d, gv) * gv
            d = d - (qdot(d, gt) / qdot(gt, gt)) * gt
            if math.sqrt(abs(qdot(d, d))) > 1e-6:
                raise ChartError(f"base normal {i} is not parallel along gamma")

    # profile constraints on the quadric fiber
    for s in np.linspace(sdom[0] + 0.02, sdom[1] - 0.02, 9):
        seed = {"s": jets.jet_var(0, float(s), 1)}
        avals = [exprlang.eval_jet(t, seed, pparams) for t in alpha_asts]
        quad = sum(
            (1.0 if (i > 0 or space.epsilon == 1) else -1.0) * avals[i].value ** 2
            for i in range(k + 1)
        )
        if abs(quad - space.epsilon) > 1e-9:
            raise ChartError(
                f"profile leaves the fiber quadric: sum alpha_i^2 = {quad:.6f}"
            )
        if space.epsilon == -1 and avals[0].value <= 0:
            raise ChartError("profile alpha_0 must stay positive for eps=-1")
        if abs(avals[k + 1].grad[0]) < 1e-8:
            raise ChartError("profile violates alpha_{k+1}' != 0")


def make_cmc_product(space: ProductSpace, r: float) -> Chart:
    """N^{n-1} x R for N a geodesic sphere of radius r in Q^n_eps
    (codimension 1; constant mean curvature, eta = 0)."""
    if space.epsilon == 1:
        if not 0.0 < r <= math.pi / 2:
            raise ChartError("eps=+1 needs 0 < r <= pi/2")
        c0, s0 = math.cos(r), math.sin(r)
    else:
        if not r > 0.0:
            raise ChartError("eps=-1 needs r > 0")
        c0, s0 = math.cosh(r), math.sinh(r)
    n = space.n
    m = n
    if n == 3:
        omega = [
            lambda us: jets.cos(us[0]) * jets.cos(us[1]),
            lambda us: jets.cos(us[0]) * jets.sin(us[1]),
            lambda us: jets.sin(us[0]),
        ]
    elif n == 4:
        omega = [
            lambda us: jets.cos(us[0]) * jets.cos(us[1]) * jets.cos(us[2]),
            lambda us: jets.cos(us[0]) * jets.cos(us[1]) * jets.sin(us[2]),
            lambda us: jets.cos(us[0]) * jets.sin(us[1]),
            lambda us: jets.sin(us[0]),
        ]
    else:
        raise ChartError("cmc_product supports n in {3, 4}")
    coords = [_const(c0, m)]
    coords += [lambda us, w=w: s0 * w(us) for w in omega]
    coords.append(lambda us: us[m - 1])
    var_names = [f"u{i + 1}" for i in range(m - 1)] + ["s"]
    chart = Chart(
        space=space,
        m=m,
        coords=coords,
        params={"r": r},
        domain=[(-0.6, 0.6)] * (m - 1) + [(-1.0, 1.0)],
        var_names=var_names,
        s_index=m - 1,
        label=f"cmc_product(r={r:g})" + (" [minimal]" if space.epsilon == 1 and abs(r - math.pi / 2) < 1e-12 else ""),
    )
    chart.validate_membership()
    return chart


GALLERY = {
    "slice": {
        "factory": make_slice,
        "params": {"t0": "height of the slice (default 0)"},
        "constraints": "none",
    },
    "vertical_cylinder": {
        "factory": make_vertical_cylinder,
        "params": {
            "curve": "{kind: geodesic | circle (r) | exprs (coords)} in the Q factor"
        },
        "constraints": "curve stays on Q^n_eps (membership oracle)",
    },
    "theorem1": {
        "factory": make_theorem1,
        "params": {
            "a": "surface-factor radius (or a2 = a^2)",
            "phi_kind": "geodesic_cylinder | helicoid | custom",
            "phi_params": "pitch for helicoid; coords/domain for custom",
        },
        "constraints": "eps=+1: a^2+b^2=1 with 0<|a|<1; eps=-1: a^2-b^2=1 with |a|>1; "
        "phi minimal (||H_phi|| <= 1e-8) with T_phi nowhere zero",
    },
    "partial_tube": {
        "factory": make_partial_tube,
        "params": {
            "base": "curve in Q^n_eps with k <= 2 parallel unit normals",
            "profile": "k+2 profile expressions alpha_i(s)",
        },
        "constraints": "sum alpha_i^2 = 1 on the fiber quadric and alpha_{k+1}' != 0",
    },
    "cmc_product": {
        "factory": make_cmc_product,
        "params": {"r": "geodesic-sphere radius in Q^n_eps"},
        "constraints": "eps=+1: 0 < r <= pi/2 (r = pi/2 is the minimal equator); eps=-1: r > 0",
    },
}


def make_chart(space: ProductSpace, spec: dict) -> Chart:
    """Build a gallery chart from a scene-style mapping {kind, ...params}."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in GALLERY:
        raise ChartError(f"unknown gallery kind {kind!r}")
    return GALLERY[kind]["factory"](space, **spec)
