"""Derived quantities and numerical verification of the flow's identities.

This module computes the tensor norms tracked along the flow
(|grad u|^2, Theta = |del delbar u|^2, Theta' = |del del u|^2,
Gamma = |del delbar del u|^2, the auxiliary functional Q), checks the
linearization of the phase operator against finite differences, verifies
the evolution identities of u^2, |grad u|^2, Theta and Theta' specialized
to the flat torus (zero curvature tensor, base-curvature derivative terms
retained), certifies the first- and second-derivative identities at
stationary points, and monitors the convergence mechanisms: maximum
principle, oscillation contraction, and Harnack quotients.

Index conventions follow geometry.py: a matrix field M[..., p, q] holds the
coefficient with holomorphic index p and anti-holomorphic index q, the
inverse metric contraction g^{i jbar} corresponds to g_inv[j, i], and the
eta-inverse contraction eta^{p qbar} corresponds to eta_inv[..., q, p].

Time derivatives for identity checks use second-order central differences
of stored trajectory samples, never integrator internals, so the verifier
is independent of the time stepper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .geometry import TorusGeometry, complex_hessian, volume_integral
from .phase import phase_fields

__all__ = [
    "QConfig",
    "DiagnosticsRecord",
    "TensorNorms",
    "IdentityReport",
    "CSV_COLUMNS",
    "tensor_norms",
    "q_functional",
    "build_record",
    "verify_linearization",
    "verify_evolution_identity",
    "dhym_point_identities",
    "maximum_principle_monitor",
    "oscillation_decay",
    "harnack_monitor",
]

CSV_COLUMNS = (
    "t,residual_sup,theta_max,theta_min,grad_sq_sup,Theta_sup,ThetaP_sup,"
    "Gamma_sup,Q_sup,hess_sup,Z_re,Z_im,osc_udot,mean_u"
)


@dataclass(frozen=True)
class QConfig:
    """Constants of the auxiliary functional Q; the base point is a grid index."""

    K1: float = 1.0
    K2: float = 1.0
    p: tuple = ()

    def __post_init__(self):
        if self.K1 <= 0 or self.K2 <= 0:
            raise ValueError("Q constants K1, K2 must be positive")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    residual_sup: float
    theta_max: float
    theta_min: float
    grad_sq_sup: float
    Theta_sup: float
    ThetaP_sup: float
    Gamma_sup: float
    Q_sup: float
    hess_sup: float
    Z_re: float
    Z_im: float
    osc_udot: float
    mean_u: float

    def csv_row(self) -> str:
        vals = [
            self.t, self.residual_sup, self.theta_max, self.theta_min,
            self.grad_sq_sup, self.Theta_sup, self.ThetaP_sup, self.Gamma_sup,
            self.Q_sup, self.hess_sup, self.Z_re, self.Z_im, self.osc_udot,
            self.mean_u,
        ]
        return ",".join(repr(float(v)) for v in vals)


@dataclass(frozen=True, eq=False)
class TensorNorms:
    grad_sq: np.ndarray
    Theta: np.ndarray
    ThetaP: np.ndarray
    Gamma: np.ndarray
    grad_sq_sup: float
    Theta_sup: float
    ThetaP_sup: float
    Gamma_sup: float
    hess_sup: float  # sup_x sqrt(Theta(x) + Theta'(x))


@dataclass(frozen=True)
class IdentityReport:
    identity: str
    t: float
    lhs_norm: float
    rhs_norm: float
    residual_rel: float
    dt_used: float
    resolution: int

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "t": self.t,
            "lhs_norm": self.lhs_norm,
            "rhs_norm": self.rhs_norm,
            "residual_rel": self.residual_rel,
            "dt_used": self.dt_used,
            "resolution": self.resolution,
        }


# ---------------------------------------------------------------------------
# derivative stacks


def derivative_stacks(geom: TorusGeometry, u: np.ndarray, third: bool = True,
                      pure_third: bool = False) -> SimpleNamespace:
    """Spectral derivative arrays of a real scalar field.

    du[..., i]      = u_i
    H[..., i, j]    = u_{i jbar}           (Hermitian)
    S[..., i, p]    = u_{i p}              (symmetric)
    T[..., i, j, k] = u_{i jbar k}         (symmetric in i, k; with `third`)
    P[..., i, p, k] = u_{i p k}            (fully symmetric; with `pure_third`)
    """
    n = geom.n
    uh = geom.fft(np.asarray(u, dtype=np.float64))
    zm = [geom.dz_multiplier(i) for i in range(n)]
    zb = [geom.dzbar_multiplier(j) for j in range(n)]
    shape = geom.shape

    du = np.empty(shape + (n,), dtype=np.complex128)
    for i in range(n):
        du[..., i] = geom.ifft(zm[i] * uh)

    H = np.empty(shape + (n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(i, n):
            e = geom.ifft(zm[i] * zb[j] * uh)
            H[..., i, j] = e
            if j != i:
                H[..., j, i] = e.conj()

    S = np.empty(shape + (n, n), dtype=np.complex128)
    for i in range(n):
        for p in range(i, n):
            e = geom.ifft(zm[i] * zm[p] * uh)
            S[..., i, p] = e
            if p != i:
                S[..., p, i] = e

    out = SimpleNamespace(du=du, H=H, S=S, T=None, P=None)
    if third:
        T = np.empty(shape + (n, n, n), dtype=np.complex128)
        for j in range(n):
            for i in range(n):
                for k in range(i, n):
                    e = geom.ifft(zm[i] * zb[j] * zm[k] * uh)
                    T[..., i, j, k] = e
                    if k != i:
                        T[..., k, j, i] = e
        out.T = T
    if pure_third:
        P = np.empty(shape + (n, n, n), dtype=np.complex128)
        for i in range(n):
            for p in range(i, n):
                for k in range(p, n):
                    e = geom.ifft(zm[i] * zm[p] * zm[k] * uh)
                    for perm in {(i, p, k), (i, k, p), (p, i, k),
                                 (p, k, i), (k, i, p), (k, p, i)}:
                        P[(...,) + perm] = e
        out.P = P
    return out


def tensor_norms(geom: TorusGeometry, u: np.ndarray) -> TensorNorms:
    """The four tensor norms of u and their sups, all metric-contracted."""
    st = derivative_stacks(geom, u, third=True)
    G = geom.g_inv
    grad_sq = np.einsum("ji,...i,...j->...", G, st.du, st.du.conj()).real
    Theta = np.einsum("ji,lk,...il,...kj->...", G, G, st.H, st.H).real
    ThetaP = np.einsum("ji,qp,...ip,...jq->...", G, G, st.S, st.S.conj()).real
    Gamma = np.einsum(
        "ai,jb,ck,...ijk,...abc->...", G, G, G, st.T, st.T.conj()
    ).real
    hess_sup = float(np.sqrt((Theta + ThetaP).max()))
    return TensorNorms(
        grad_sq=grad_sq,
        Theta=Theta,
        ThetaP=ThetaP,
        Gamma=Gamma,
        grad_sq_sup=float(grad_sq.max()),
        Theta_sup=float(Theta.max()),
        ThetaP_sup=float(ThetaP.max()),
        Gamma_sup=float(Gamma.max()),
        hess_sup=hess_sup,
    )


def q_functional(geom: TorusGeometry, u: np.ndarray, u0_at_p: float,
                 qcfg: QConfig | None = None):
    """Pointwise Q = Theta + Theta' + K1 |grad u|^2 + K2/2 (u - u0(p))^2."""
    qcfg = qcfg or QConfig()
    tn = tensor_norms(geom, u)
    Q = (
        tn.Theta + tn.ThetaP + qcfg.K1 * tn.grad_sq
        + 0.5 * qcfg.K2 * (np.asarray(u) - u0_at_p) ** 2
    )
    return Q, float(Q.max())


def build_record(geom: TorusGeometry, base, hat_theta: float, t: float,
                 u: np.ndarray, theta: np.ndarray | None = None,
                 u0_at_p: float = 0.0, qcfg: QConfig | None = None) -> DiagnosticsRecord:
    """Assemble the per-sample scalar diagnostics."""
    F = base.field() + complex_hessian(geom, u)
    pf = phase_fields(geom, F)
    if theta is None:
        theta = pf.theta
    udot = theta - hat_theta
    tn = tensor_norms(geom, u)
    _, q_sup = q_functional(geom, u, u0_at_p, qcfg)
    Z = volume_integral(geom, pf.zeta)
    return DiagnosticsRecord(
        t=float(t),
        residual_sup=float(np.abs(udot).max()),
        theta_max=float(theta.max()),
        theta_min=float(theta.min()),
        grad_sq_sup=tn.grad_sq_sup,
        Theta_sup=tn.Theta_sup,
        ThetaP_sup=tn.ThetaP_sup,
        Gamma_sup=tn.Gamma_sup,
        Q_sup=q_sup,
        hess_sup=tn.hess_sup,
        Z_re=float(Z.real),
        Z_im=float(Z.imag),
        osc_udot=float(udot.max() - udot.min()),
        mean_u=float(np.mean(u)),
    )


# ---------------------------------------------------------------------------
# linearization


def _base_field(geom: TorusGeometry, base) -> np.ndarray:
    if hasattr(base, "field"):
        return base.field()
    return np.asarray(base, dtype=np.complex128)


def _theta_of(geom: TorusGeometry, F_hat: np.ndarray, u: np.ndarray) -> tuple:
    pf = phase_fields(geom, F_hat + complex_hessian(geom, u))
    return pf.theta, pf.eta_inv


def verify_linearization(geom: TorusGeometry, base, u: np.ndarray,
                         phi: np.ndarray, eps: float) -> float:
    """Relative sup-norm error of the central-difference phase derivative.

    Compares (theta(F_{u + eps*phi}) - theta(F_{u - eps*phi})) / (2 eps)
    against the analytic directional derivative eta^{p qbar} phi_{p qbar}.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps outside the supported range [1e-7, 1e-3]")
    F_hat = _base_field(geom, base)
    phi = np.asarray(phi, dtype=np.float64)
    if not np.any(phi):
        return 0.0
    tp, _ = _theta_of(geom, F_hat, u + eps * phi)
    tm, _ = _theta_of(geom, F_hat, u - eps * phi)
    _, eta_inv = _theta_of(geom, F_hat, u)
    numeric = (tp - tm) / (2.0 * eps)
    Hphi = complex_hessian(geom, phi)
    analytic = np.einsum("...qp,...pq->...", eta_inv, Hphi).real
    scale = np.abs(analytic).max()
    return float(np.abs(numeric - analytic).max() / scale)


# ---------------------------------------------------------------------------
# evolution identities (flat case)


def _eta_derivative(geom: TorusGeometry, eta: np.ndarray) -> np.ndarray:
    """dEta[..., p, a, b] = d/dz_p eta_{a bbar}, spectrally, entrywise."""
    n = geom.n
    eh = geom.fft(eta)
    out = np.empty(geom.shape + (n, n, n), dtype=np.complex128)
    for p in range(n):
        m = geom.dz_multiplier(p)[..., np.newaxis, np.newaxis]
        out[..., p, :, :] = geom.ifft(m * eh)
    return out


def _psi_fourth(geom: TorusGeometry, psi_hat, kinds: str) -> np.ndarray:
    """Fourth-derivative stack of the base potential, multiplier products.

    kinds = "zZzZ" gives D[..., i, l, p, q] = d_i d_lbar d_p d_qbar psi;
    kinds = "zzzZ" gives D[..., i, p, k, l] = d_i d_p d_k d_lbar psi.
    """
    n = geom.n
    out = np.zeros(geom.shape + (n,) * 4, dtype=np.complex128)
    if psi_hat is None:
        return out
    mults = {
        "z": [geom.dz_multiplier(i) for i in range(n)],
        "Z": [geom.dzbar_multiplier(i) for i in range(n)],
    }
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    m = (mults[kinds[0]][a] * mults[kinds[1]][b]
                         * mults[kinds[2]][c] * mults[kinds[3]][d])
                    out[..., a, b, c, d] = geom.ifft(m * psi_hat)
    return out


def _sample_context(geom: TorusGeometry, base, u: np.ndarray,
                    pure_third: bool = False) -> SimpleNamespace:
    """Everything the identity right-hand sides need at one sample."""
    st = derivative_stacks(geom, u, third=True, pure_third=pure_third)
    F_hat = _base_field(geom, base)
    F = F_hat + st.H
    pf = phase_fields(geom, F)
    psi = getattr(base, "psi", None)
    psi_hat = geom.fft(np.asarray(psi, dtype=np.float64)) if psi is not None else None

    n = geom.n
    dFhat = np.zeros(geom.shape + (n, n, n), dtype=np.complex128)
    if psi_hat is not None:
        zm = [geom.dz_multiplier(i) for i in range(n)]
        zb = [geom.dzbar_multiplier(i) for i in range(n)]
        for i in range(n):
            for p in range(n):
                for q in range(n):
                    dFhat[..., i, p, q] = geom.ifft(zm[i] * zm[p] * zb[q] * psi_hat)
    # dF[..., i, p, q] = d_i F_{p qbar}; the Hessian part is u_{p qbar i}
    dF = dFhat + np.moveaxis(st.T, -1, -3)
    return SimpleNamespace(
        st=st, F=F, pf=pf, psi_hat=psi_hat, dFhat=dFhat, dF=dF,
        eta_inv=pf.eta_inv, theta=pf.theta,
    )


def _laplace_eta(geom: TorusGeometry, eta_inv: np.ndarray, f: np.ndarray) -> np.ndarray:
    Hf = complex_hessian(geom, np.asarray(f, dtype=np.float64))
    return np.einsum("...qp,...pq->...", eta_inv, Hf).real


def _quantity(geom: TorusGeometry, which: str, u: np.ndarray) -> np.ndarray:
    if which == "u_sq":
        return np.asarray(u) ** 2
    tn = tensor_norms(geom, u)
    if which == "grad_sq":
        return tn.grad_sq
    if which == "Theta":
        return tn.Theta
    if which == "ThetaP":
        return tn.ThetaP
    raise ValueError(f"unknown evolution identity {which!r}")


def _identity_rhs(geom: TorusGeometry, which: str, ctx: SimpleNamespace,
                  hat_theta: float, u: np.ndarray) -> np.ndarray:
    G = geom.g_inv
    Hinv = ctx.eta_inv
    st = ctx.st
    if which == "u_sq":
        lap_u = np.einsum("...qp,...pq->...", Hinv, st.H).real
        grad_part = np.einsum("...qp,...p,...q->...", Hinv, st.du, st.du.conj()).real
        return 2.0 * np.asarray(u) * (ctx.theta - hat_theta - lap_u) - 2.0 * grad_part

    if which == "grad_sq":
        A = np.einsum("...qp,ji,...ip,...jq->...", Hinv, G, st.S, st.S.conj())
        B = np.einsum("...qp,ji,...iq,...pj->...", Hinv, G, st.H, st.H)
        C = np.einsum("...qp,ji,...ipq,...j->...", Hinv, G, ctx.dFhat, st.du.conj())
        return -(A + B).real + 2.0 * C.real

    dEta = _eta_derivative(geom, ctx.pf.eta)
    # (d/dzbar_l eta)_{a bbar} = conj((d/dz_l eta)_{b abar})
    dEtaBar = np.conj(np.swapaxes(dEta, -1, -2))

    if which == "Theta":
        T1 = np.einsum("...lk,ji,qp,...ilp,...jkq->...",
                       Hinv, G, G, st.T, st.T.conj())
        T2 = np.einsum("...lk,ji,qp,...liq,...kjp->...",
                       Hinv, G, G, st.T.conj(), st.T)
        mix = np.einsum("ji,lk,...bp,...qa,...lab,...ipq,...kj->...",
                        G, G, Hinv, Hinv, dEtaBar, ctx.dF, st.H)
        ddFh = _psi_fourth(geom, ctx.psi_hat, "zZzZ")
        hat = np.einsum("ji,lk,...qp,...kj,...ilpq->...",
                        G, G, Hinv, st.H, ddFh)
        return -(T1 + T2).real - 2.0 * mix.real + 2.0 * hat.real

    if which == "ThetaP":
        e1 = np.einsum("...lk,ji,qp,...ipk,...jql->...",
                       Hinv, G, G, st.P, st.P.conj())
        e2 = np.einsum("...lk,ji,qp,...ilp,...jkq->...",
                       Hinv, G, G, st.T, st.T.conj())
        mix = np.einsum("ji,qp,...bk,...la,...pab,...ikl,...jq->...",
                        G, G, Hinv, Hinv, dEta, ctx.dF, st.S.conj())
        ddFh = _psi_fourth(geom, ctx.psi_hat, "zzzZ")
        hat = np.einsum("ji,qp,...lk,...ipkl,...jq->...",
                        G, G, Hinv, ddFh, st.S.conj())
        return -(e1 + e2).real - 2.0 * mix.real + 2.0 * hat.real

    raise ValueError(f"unknown evolution identity {which!r}")


def _bracket(trajectory, t: float):
    samples = list(trajectory.samples)
    if len(samples) < 3:
        raise ValueError("insufficient trajectory sampling")
    times = np.array([s.t for s in samples])
    j = int(np.argmin(np.abs(times - t)))
    if j == 0 or j == len(samples) - 1:
        raise ValueError("insufficient trajectory sampling")
    dt_m = times[j] - times[j - 1]
    dt_p = times[j + 1] - times[j]
    if abs(dt_p - dt_m) > 1e-9 * max(dt_p, dt_m):
        raise ValueError("insufficient trajectory sampling")
    return samples[j - 1], samples[j], samples[j + 1], float(dt_p)


def verify_evolution_identity(which: str, trajectory, t: float) -> IdentityReport:
    """Check one flat-case evolution identity at trajectory time t.

    The left side is the central time difference of the quantity minus its
    spectral eta-Laplacian at the bracketing center; the right side is
    assembled from the stored sample there.  The discrepancy shrinks as
    O(dt^2) under sample-spacing refinement.
    """
    geom = trajectory.geometry
    prev, mid, nxt, dt_s = _bracket(trajectory, t)
    q_prev = _quantity(geom, which, prev.u)
    q_mid = _quantity(geom, which, mid.u)
    q_next = _quantity(geom, which, nxt.u)
    ctx = _sample_context(geom, trajectory.base, mid.u, pure_third=(which == "ThetaP"))
    lhs = (q_next - q_prev) / (2.0 * dt_s) - _laplace_eta(geom, ctx.eta_inv, q_mid)
    rhs = _identity_rhs(geom, which, ctx, trajectory.hat_theta, mid.u)
    resid = float(np.abs(lhs - rhs).max())
    rhs_norm = float(np.abs(rhs).max())
    return IdentityReport(
        identity=which,
        t=float(mid.t),
        lhs_norm=float(np.abs(lhs).max()),
        rhs_norm=rhs_norm,
        residual_rel=resid / (1.0 + rhs_norm),
        dt_used=dt_s,
        resolution=geom.N,
    )


# ---------------------------------------------------------------------------
# stationary-point identities


def dhym_point_identities(geom: TorusGeometry, base, u_hat: np.ndarray,
                          hat_theta: float | None = None,
                          residual_tol: float = 1e-9):
    """First- and second-derivative identities at a converged endpoint.

    Returns a pair of IdentityReports: the first records
    sup |eta^{p qbar} F_{p qbar, i}| (zero at an exact stationary metric),
    the second the relative residual of the second-derivative expansion
    eta^{p qbar} F_{p qbar, jbar i} = eta^{p tbar} eta^{s qbar}
    eta_{s tbar, i} F_{p qbar, jbar}.
    """
    from .cohomology import winding_hat_theta

    ctx = _sample_context(geom, base, u_hat)
    if hat_theta is None:
        hat_theta = winding_hat_theta(geom, _base_field(geom, base))
    residual = float(np.abs(ctx.theta - hat_theta).max())
    if residual > residual_tol:
        raise ValueError(
            f"not a dHYM point: residual {residual:.3e} exceeds {residual_tol:.1e}"
        )
    Hinv = ctx.eta_inv
    # (i): the phase gradient contraction, one complex field per direction i
    first = np.einsum("...qp,...ipq->...i", Hinv, ctx.dF)
    first_sup = float(np.abs(first).max())
    rep1 = IdentityReport(
        identity="dhym_first_derivative",
        t=math.nan,
        lhs_norm=first_sup,
        rhs_norm=0.0,
        residual_rel=first_sup,
        dt_used=0.0,
        resolution=geom.N,
    )

    # (ii): second derivatives of the full curvature, d_i d_jbar F_{p qbar}
    n = geom.n
    uh4 = geom.fft(np.asarray(u_hat, dtype=np.float64))
    zm = [geom.dz_multiplier(i) for i in range(n)]
    zb = [geom.dzbar_multiplier(i) for i in range(n)]
    ddF = _psi_fourth(geom, ctx.psi_hat, "zZzZ").copy()
    for i in range(n):
        for l in range(n):
            for p in range(n):
                for q in range(n):
                    ddF[..., i, l, p, q] += geom.ifft(
                        zm[i] * zb[l] * zm[p] * zb[q] * uh4
                    )
    lhs = np.einsum("...qp,...ijpq->...ij", Hinv, ddF)
    dEta = _eta_derivative(geom, ctx.pf.eta)
    dFbar = np.conj(np.swapaxes(ctx.dF, -1, -2))  # d_jbar F_{p qbar} at [..., j, p, q]
    rhs = np.einsum("...tp,...qs,...ist,...jpq->...ij", Hinv, Hinv, dEta, dFbar)
    resid = float(np.abs(lhs - rhs).max())
    rhs_norm = float(np.abs(rhs).max())
    rep2 = IdentityReport(
        identity="dhym_second_derivative",
        t=math.nan,
        lhs_norm=float(np.abs(lhs).max()),
        rhs_norm=rhs_norm,
        residual_rel=resid / (1.0 + rhs_norm),
        dt_used=0.0,
        resolution=geom.N,
    )
    return rep1, rep2


# ---------------------------------------------------------------------------
# monitors


@dataclass(frozen=True)
class MonitorResult:
    passed: bool
    worst_violation: float
    location: float | None  # sample time of the worst violation


def maximum_principle_monitor(trajectory, hat_theta: float | None = None) -> MonitorResult:
    """Check that max theta is nonincreasing and min theta nondecreasing.

    Allows slack 1e-9 * (1 + |hat_theta|) per unit time.
    """
    records = trajectory.records
    if len(records) < 2:
        raise ValueError("need at least two samples")
    if hat_theta is None:
        hat_theta = trajectory.hat_theta
    rate = 1e-9 * (1.0 + abs(hat_theta))
    worst = -np.inf
    where = None
    for a, b in zip(records, records[1:]):
        allow = rate * (b.t - a.t)
        for v in (b.theta_max - a.theta_max, a.theta_min - b.theta_min):
            if v - allow > worst:
                worst = v - allow
                where = b.t
    return MonitorResult(passed=worst <= 0.0, worst_violation=float(worst), location=where)


@dataclass(frozen=True, eq=False)
class OscillationFit:
    times: np.ndarray
    chi: np.ndarray
    rate: float
    r_squared: float
    contraction: list  # (t, per-unit-time ratio) pairs over consecutive samples
    max_consecutive_ratio: float


def oscillation_decay(trajectory, tail_fraction: float = 0.5) -> OscillationFit:
    """Fit the exponential decay rate of the oscillation of du/dt.

    chi(t) = sup - inf of the velocity field at each sample; the rate is the
    negative slope of a least-squares line through log chi over the tail.
    """
    records = trajectory.records
    times = np.array([r.t for r in records])
    chi = np.array([r.osc_udot for r in records])
    k0 = int(math.floor(len(records) * (1.0 - tail_fraction)))
    tail_t, tail_chi = times[k0:], chi[k0:]
    keep = tail_chi > 1e-14
    if keep.sum() < 8:
        raise RuntimeError("oscillation below floor; nothing to fit")
    tt, cc = tail_t[keep], np.log(tail_chi[keep])
    slope, intercept = np.polyfit(tt, cc, 1)
    pred = slope * tt + intercept
    ss_res = float(((cc - pred) ** 2).sum())
    ss_tot = float(((cc - cc.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    ratios = []
    max_ratio = 0.0
    for a_t, a_c, b_t, b_c in zip(times[:-1], chi[:-1], times[1:], chi[1:]):
        if a_c > 1e-14 and b_c > 0 and b_t > a_t:
            r = (b_c / a_c) ** (1.0 / (b_t - a_t))
            ratios.append((float(a_t), float(r)))
            max_ratio = max(max_ratio, b_c / a_c)
    return OscillationFit(
        times=tail_t[keep],
        chi=tail_chi[keep],
        rate=float(-slope),
        r_squared=float(r2),
        contraction=ratios,
        max_consecutive_ratio=float(max_ratio),
    )


@dataclass(frozen=True, eq=False)
class HarnackReport:
    m: int
    taus: np.ndarray
    sup_xi: np.ndarray
    inf_xi: np.ndarray
    sup_psi: np.ndarray
    inf_psi: np.ndarray
    quotient_xi: float
    quotient_psi: float
    positive: bool
    monotone: bool
    fail_location: tuple | None
    fitted_constants: tuple  # (C1, C2, C3), reported only, never asserted


def harnack_monitor(trajectory, m: int = 1) -> HarnackReport:
    """Harnack quotients of the positive caps/cups of du/dt over [m-1, m].

    Builds xi(x, tau) = sup_y phi(y, m-1) - phi(x, m-1+tau) and
    psi(x, tau) = phi(x, m-1+tau) - inf_y phi(y, m-1) from stored samples,
    checks their positivity for tau > 0 and the maximum-principle
    monotonicity of their sup/inf, and reports the quotients
    sup(., 1/2) / inf(., 1).  The Harnack constants are least-squares
    metadata only.
    """
    samples = list(trajectory.samples)
    times = np.array([s.t for s in samples])
    t0 = float(m - 1)
    j0 = int(np.argmin(np.abs(times - t0)))
    if abs(times[j0] - t0) > 1e-9 * (1.0 + abs(t0)):
        raise ValueError("insufficient trajectory sampling")
    phi0 = samples[j0].udot
    osc0 = float(phi0.max() - phi0.min())
    if osc0 < 1e-14 * (1.0 + float(np.abs(phi0).max())):
        raise ValueError("degenerate: flow already spatially constant")
    sup0, inf0 = float(phi0.max()), float(phi0.min())

    taus, sup_xi, inf_xi, sup_psi, inf_psi = [], [], [], [], []
    positive = True
    fail = None
    for s in samples[j0 + 1:]:
        tau = s.t - t0
        if tau > 1.0 + 1e-9:
            break
        xi = sup0 - s.udot
        psi = s.udot - inf0
        taus.append(tau)
        sup_xi.append(float(xi.max()))
        inf_xi.append(float(xi.min()))
        sup_psi.append(float(psi.max()))
        inf_psi.append(float(psi.min()))
        if positive and (xi.min() <= 0.0 or psi.min() <= 0.0):
            positive = False
            fail = (float(s.t), "xi" if xi.min() <= 0.0 else "psi")
    if not taus:
        raise ValueError("insufficient trajectory sampling")
    taus = np.array(taus)
    sup_xi, inf_xi = np.array(sup_xi), np.array(inf_xi)
    sup_psi, inf_psi = np.array(sup_psi), np.array(inf_psi)

    slack = 1e-9 * (1.0 + osc0)
    monotone = bool(
        (np.diff(sup_xi) <= slack).all() and (np.diff(inf_xi) >= -slack).all()
        and (np.diff(sup_psi) <= slack).all() and (np.diff(inf_psi) >= -slack).all()
    )

    def _at(arr, tau):
        j = int(np.argmin(np.abs(taus - tau)))
        if abs(taus[j] - tau) > 1e-9:
            raise ValueError("insufficient trajectory sampling")
        return float(arr[j])

    q_xi = _at(sup_xi, 0.5) / _at(inf_xi, 1.0)
    q_psi = _at(sup_psi, 0.5) / _at(inf_psi, 1.0)

    # Least-squares fit of log sup v(t1) - log inf v(t2) against the Harnack
    # form C1 (t2-t1) + C2 log(t2/t1) + C3/(t2-t1), over available pairs.
    rows, obs = [], []
    grid = [tau for tau in (0.25, 0.5, 0.75, 1.0)
            if np.abs(taus - tau).min() < 1e-9]
    for a in grid:
        for b in grid:
            if b <= a:
                continue
            for sup_arr, inf_arr in ((sup_xi, inf_xi), (sup_psi, inf_psi)):
                s_v, i_v = _at(sup_arr, a), _at(inf_arr, b)
                if s_v > 0 and i_v > 0:
                    rows.append([b - a, math.log(b / a), 1.0 / (b - a)])
                    obs.append(math.log(s_v / i_v))
    if rows:
        sol, *_ = np.linalg.lstsq(np.array(rows), np.array(obs), rcond=None)
        constants = tuple(float(c) for c in sol)
    else:
        constants = (math.nan, math.nan, math.nan)

    return HarnackReport(
        m=m, taus=taus, sup_xi=sup_xi, inf_xi=inf_xi,
        sup_psi=sup_psi, inf_psi=inf_psi,
        quotient_xi=float(q_xi), quotient_psi=float(q_psi),
        positive=positive, monotone=monotone, fail_location=fail,
        fitted_constants=constants,
    )
