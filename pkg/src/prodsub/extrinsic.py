"""Second fundamental form, mean curvature, normal connection and the
residuals of the first-order structure equations.

Derivative depth discipline: quantities built from the position 2-jet are
exact ("jet level"); one finite-difference layer on top of jet-level fields
is accurate to about tol_fd = 1e-6; nested differences (only the normal
Laplacian of H needs them) to about tol_fd2 = 1e-4.  Every differentiated
field is gauge-invariant (H, eta, alpha contractions, the normal projector),
never a frame vector from the pivoted normal Gram-Schmidt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ambient import ProductSpace, inner
from .immersion import Chart, PointGeometry, analyze_point
from .jets import fd_gradient

__all__ = [
    "ExtrinsicData",
    "FieldCache",
    "second_fundamental",
    "christoffels",
    "onb_connection",
    "normal_derivative_H",
    "normal_laplacian_H",
    "structure_residuals",
    "T_eta_residuals",
    "TOL_JET",
    "TOL_FD",
    "TOL_FD2",
    "FD_NESTED_STEP",
]

TOL_JET = 1e-9
TOL_FD = 1e-6
TOL_FD2 = 1e-4

#: outer step for nested finite differences (inner layer carries ~1e-10 noise)
FD_NESTED_STEP = 5e-4


@dataclass
class ExtrinsicData:
    """Second-fundamental-form data at one point, in the orthonormal frames.

    ``alpha[a][i, j]`` are the components of the second fundamental form
    against normal xi_a over the tangent ONB; in an orthonormal frame these
    matrices are exactly the shape operators, so ``shape_ops`` aliases them.
    """

    pg: PointGeometry
    alpha: list
    shape_ops: list
    H: np.ndarray
    H_norm: float
    conn: np.ndarray | None = None

    def shape_in_direction(self, w: np.ndarray) -> np.ndarray:
        """Shape operator A_w for an ambient normal vector w (ONB matrix)."""
        sp = self.pg.space
        out = np.zeros_like(self.shape_ops[0])
        for a, xi in enumerate(self.pg.normal_onb):
            out += inner(sp, w, xi) * self.shape_ops[a]
        return out

    def alpha_vec(self, x_onb: np.ndarray, y_onb: np.ndarray) -> np.ndarray:
        """alpha(X, Y) as an ambient vector, for tangent ONB coordinates."""
        out = np.zeros(self.pg.space.ambient_dim)
        for a, xi in enumerate(self.pg.normal_onb):
            out += float(x_onb @ self.alpha[a] @ y_onb) * xi
        return out


def second_fundamental(pg: PointGeometry, with_connection: bool = False) -> ExtrinsicData:
    """alpha, shape operators and the mean curvature vector at a point.

    alpha^a_{ij} = <d2f/du_i du_j, xi_a>: the normal frame is orthogonal to
    both the tangent space and the quadric position, which removes the
    Christoffel and inclusion-umbilic parts of the flat second derivative.
    ``with_connection`` also fills the ONB connection coefficients, which
    need a finite-difference stencil around the point.
    """
    sp = pg.space
    m = pg.chart.m
    d2 = pg.jet.d2  # (n+2, m, m)
    sig = sp.signature
    C = pg.tangent_coeffs
    alpha = []
    for xi in pg.normal_onb:
        a_chart = np.einsum("c,cij->ij", sig * xi, d2)
        a_onb = C @ a_chart @ C.T
        alpha.append(0.5 * (a_onb + a_onb.T))
    H = np.zeros(sp.ambient_dim)
    for a, xi in enumerate(pg.normal_onb):
        H += np.trace(alpha[a]) * xi
    H /= m
    H_norm = math.sqrt(max(inner(sp, H, H), 0.0))
    ed = ExtrinsicData(pg=pg, alpha=alpha, shape_ops=alpha, H=H, H_norm=H_norm)
    if with_connection:
        ed.conn = onb_connection(pg)
    return ed


def christoffels(pg: PointGeometry) -> np.ndarray:
    """Chart-coordinate Christoffel symbols, exact at jet level.

    Returns G[l, i, j] = Gamma^l_{ij}; the metric first derivatives come from
    the position 2-jet, d_k g_ij = <f_ik, f_j> + <f_i, f_jk>.
    """
    J = pg.jet.jac
    d2 = pg.jet.d2
    sig = pg.space.signature
    # dg[k, i, j] = d_k g_ij
    dg = np.einsum("c,cik,cj->kij", sig, d2, J) + np.einsum(
        "c,ci,cjk->kij", sig, J, d2
    )
    # Gamma_{ij,k} = (d_i g_jk + d_j g_ik - d_k g_ij) / 2
    low = 0.5 * (dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0))
    return np.einsum("lk,ijk->lij", pg.g_inv, low)


def onb_connection(pg: PointGeometry, cache: "FieldCache | None" = None) -> np.ndarray:
    """Connection coefficients in the tangent ONB,
    conn[i, j, k] = <nabla_{E_i} E_j, E_k> (one finite-difference layer)."""
    cache = cache or FieldCache(pg.chart)
    sp = pg.space
    m = pg.chart.m
    C = pg.tangent_coeffs

    def frame_field(j):
        return lambda v: cache.geometry(v)[0].tangent_onb[j]

    d_frames = np.array(
        [[fd_gradient(frame_field(j), pg.u, p) for p in range(m)] for j in range(m)]
    )  # (j, p, coord)
    conn = np.zeros((m, m, m))
    for i in range(m):
        for j in range(m):
            dv = np.einsum("p,pc->c", C[i], d_frames[j])
            for k in range(m):
                conn[i, j, k] = inner(sp, dv, pg.tangent_onb[k])
    return conn


class FieldCache:
    """Memo for point geometry across finite-difference stencils.

    Keys are exact float tuples: the stencil offsets of repeated fd calls
    around the same center are computed identically, so lookups hit.
    """

    def __init__(self, chart: Chart):
        self.chart = chart
        self._memo: dict = {}

    def geometry(self, u) -> tuple[PointGeometry, ExtrinsicData]:
        key = tuple(float(x) for x in np.asarray(u))
        hit = self._memo.get(key)
        if hit is None:
            pg = analyze_point(self.chart, np.asarray(u, dtype=float))
            hit = (pg, second_fundamental(pg))
            self._memo[key] = hit
        return hit

    # -- gauge-invariant fields -------------------------------------------

    def H_field(self, v) -> np.ndarray:
        return self.geometry(v)[1].H

    def eta_field(self, v) -> np.ndarray:
        return self.geometry(v)[0].eta

    def T_chart_field(self, v) -> np.ndarray:
        return self.geometry(v)[0].T_coeffs

    def projector_field(self, v) -> np.ndarray:
        return self.geometry(v)[0].normal_projector().ravel()

    def christoffel_field(self, v) -> np.ndarray:
        return christoffels(self.geometry(v)[0]).ravel()


def normal_derivative_H(
    chart: Chart, u, cache: FieldCache | None = None
) -> list[np.ndarray]:
    """nabla^perp_{d_i} H per chart direction: normal projection of the
    finite-difference ambient derivative of the H field (gauge-free)."""
    cache = cache or FieldCache(chart)
    pg, _ = cache.geometry(u)
    out = []
    for i in range(chart.m):
        d = fd_gradient(cache.H_field, pg.u, i)
        out.append(pg.proj_normal(d))
    return out


def normal_laplacian_H(chart: Chart, u, cache: FieldCache | None = None) -> np.ndarray:
    """Trace Laplacian of H in the normal bundle by nested finite differences
    (tol_fd2 accuracy): sum g^{pq} (nabla^perp_p nabla^perp_q H
    - Gamma^k_{pq} nabla^perp_k H)."""
    cache = cache or FieldCache(chart)
    pg, _ = cache.geometry(u)
    m = chart.m
    G = christoffels(pg)

    def w_field(q):
        def field(v):
            pgv, _ = cache.geometry(v)
            d = fd_gradient(cache.H_field, pgv.u, q)
            return pgv.proj_normal(d)

        return field

    W0 = [w_field(q)(pg.u) for q in range(m)]
    out = np.zeros(pg.space.ambient_dim)
    for p in range(m):
        for q in range(m):
            dW = fd_gradient(w_field(q), pg.u, p, step=FD_NESTED_STEP)
            corr = np.einsum("k,kc->c", G[:, p, q], np.array(W0))
            out += pg.g_inv[p, q] * (dW - corr)
    return pg.proj_normal(out)


def _wedge(sp: ProductSpace, a, b, c) -> np.ndarray:
    """(a ^ b) c = <b, c> a - <a, c> b with the signature inner product."""
    return inner(sp, b, c) * a - inner(sp, a, c) * b


def structure_residuals(
    chart: Chart,
    u,
    X,
    Y,
    Z,
    a: int = 0,
    cache: FieldCache | None = None,
) -> dict:
    """Gauss, Codazzi and Ricci residuals (LHS - RHS as ambient vectors) for
    constant-coefficient coordinate fields X, Y, Z and normal index ``a``."""
    cache = cache or FieldCache(chart)
    pg, ed = cache.geometry(u)
    sp = chart.space
    m = chart.m
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    d2 = pg.jet.d2
    G = christoffels(pg)
    P0 = pg.normal_projector()

    Xa, Ya, Za = pg.push(X), pg.push(Y), pg.push(Z)
    X_onb, Y_onb = pg.onb_coords(Xa), pg.onb_coords(Ya)
    T = pg.T_ambient

    # ---- Gauss: R(X,Y)Z = A_{alpha(Y,Z)}X - A_{alpha(X,Z)}Y + eps-terms
    DG = np.array(
        [
            fd_gradient(cache.christoffel_field, pg.u, i).reshape(m, m, m)
            for i in range(m)
        ]
    )  # DG[i, l, j, k] = d_i Gamma^l_{jk}
    t1 = np.einsum("i,iljk,j,k->l", X, DG, Y, Z)
    t2 = np.einsum("j,jlik,i,k->l", Y, DG, X, Z)
    t3 = np.einsum("lim,mjk,i,j,k->l", G, G, X, Y, Z)
    t4 = np.einsum("ljm,mik,i,j,k->l", G, G, X, Y, Z)
    lhs_gauss = pg.push(t1 - t2 + t3 - t4)

    aYZ = pg.proj_normal(np.einsum("cjk,j,k->c", d2, Y, Z))
    aXZ = pg.proj_normal(np.einsum("cjk,j,k->c", d2, X, Z))
    rhs_gauss = pg.from_onb(ed.shape_in_direction(aYZ) @ X_onb) - pg.from_onb(
        ed.shape_in_direction(aXZ) @ Y_onb
    )
    rhs_gauss += sp.epsilon * (
        _wedge(sp, Xa, Ya, Za)
        + inner(sp, Xa, T) * _wedge(sp, Ya, T, Za)
        - inner(sp, Ya, T) * _wedge(sp, Xa, T, Za)
    )

    # ---- Codazzi: the nabla_X Y terms cancel between the two sides because
    # coordinate fields commute, leaving
    #   P d_X alpha(Y,Z) - P d_Y alpha(X,Z) - alpha(Y, nab_X Z) + alpha(X, nab_Y Z)
    def alpha_field(A, B):
        def field(v):
            pgv, _ = cache.geometry(v)
            return pgv.proj_normal(np.einsum("cjk,j,k->c", pgv.jet.d2, A, B))

        return field

    dYZ = sum(X[i] * fd_gradient(alpha_field(Y, Z), pg.u, i) for i in range(m))
    dXZ = sum(Y[j] * fd_gradient(alpha_field(X, Z), pg.u, j) for j in range(m))
    nabXZ = np.einsum("kij,i,j->k", G, X, Z)
    nabYZ = np.einsum("kij,i,j->k", G, Y, Z)
    lhs_cod = (
        P0 @ dYZ
        - P0 @ dXZ
        - pg.proj_normal(np.einsum("cjk,j,k->c", d2, Y, nabXZ))
        + pg.proj_normal(np.einsum("cjk,j,k->c", d2, X, nabYZ))
    )
    rhs_cod = sp.epsilon * inner(sp, _wedge(sp, Xa, Ya, T), Za) * pg.eta

    # ---- Ricci: with the projector field P(u) and the extension xi = P xi0,
    #   R^perp(X,Y)xi = P [D_X P, D_Y P] xi0   (coordinate fields commute)
    xi = pg.normal_onb[a]
    k = sp.ambient_dim
    DP = [fd_gradient(cache.projector_field, pg.u, i).reshape(k, k) for i in range(m)]
    DPX = sum(X[i] * DP[i] for i in range(m))
    DPY = sum(Y[j] * DP[j] for j in range(m))
    lhs_ricci = P0 @ (DPX @ DPY - DPY @ DPX) @ xi

    A_a = ed.shape_ops[a]
    w1 = (A_a @ Y_onb) @ pg.tangent_coeffs  # chart coords of A_xi Y
    w2 = (A_a @ X_onb) @ pg.tangent_coeffs
    rhs_ricci = pg.proj_normal(
        np.einsum("cjk,j,k->c", d2, X, w1)
    ) - pg.proj_normal(np.einsum("cjk,j,k->c", d2, w2, Y))

    return {
        "gauss": lhs_gauss - rhs_gauss,
        "codazzi": lhs_cod - rhs_cod,
        "ricci": lhs_ricci - rhs_ricci,
    }


def T_eta_residuals(chart: Chart, u, cache: FieldCache | None = None) -> dict:
    """Residuals of nabla_X T = A_eta X and alpha(X, T) = -nabla^perp_X eta,
    maximized over the tangent ONB directions."""
    cache = cache or FieldCache(chart)
    pg, ed = cache.geometry(u)
    sp = chart.space
    m = chart.m
    G = christoffels(pg)
    C = pg.tangent_coeffs
    P0 = pg.normal_projector()

    dT = np.array(
        [fd_gradient(cache.T_chart_field, pg.u, p) for p in range(m)]
    )  # dT[p, k] = d_p T^k
    d_eta = np.array([fd_gradient(cache.eta_field, pg.u, p) for p in range(m)])

    A_eta = ed.shape_in_direction(pg.eta)
    T_onb = pg.onb_coords(pg.T_ambient)

    vt = 0.0
    veta = 0.0
    for i in range(m):
        nab_chart = np.einsum(
            "p,pk->k", C[i], dT + np.einsum("kpq,q->pk", G, pg.T_coeffs)
        )
        nab_T = pg.push(nab_chart)
        vt = max(vt, float(np.linalg.norm(nab_T - pg.from_onb(A_eta[:, i]))))

        alpha_iT = np.zeros(sp.ambient_dim)
        for aa, xi in enumerate(pg.normal_onb):
            alpha_iT += float(ed.alpha[aa][i] @ T_onb) * xi
        nab_eta = P0 @ np.einsum("p,pc->c", C[i], d_eta)
        veta = max(veta, float(np.linalg.norm(alpha_iT + nab_eta)))
    return {"vt": vt, "veta": veta}
