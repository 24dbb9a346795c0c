"""Pitchfork branch machinery: null eigenvector, K2 coefficient, verdicts.

At chi = chi_S_k the steady-state branch bifurcates along the null vector
(P_k, Q_k, 1) cos(k pi x / L).  Expanding the branch as

    (u, v, w) = (u_eq, v_eq, w_eq) + s (P_k, Q_k, 1) cos(k pi x/L) + O(s^2),
    chi_k(s)  = chi_S_k + s^2 K2 + o(s^2),

the linear term of chi_k(s) vanishes identically (pitchfork), and the sign
of K2 decides branch stability on the minimizing mode: K2 > 0 means the
branch turns right (supercritical) and is stable.

K2 is assembled from three exact 3x3 solves:
  * mean-mode system      -> integrals of the O(s^2) fields over (0, L)
  * double-mode system    -> their projections onto cos(2k pi x / L)
  * mode-k system (M)     -> projections of the O(s^3) fields onto cos(k pi x/L)
followed by the cos(k pi x / L) projection of the O(s^3) equation for u.
All solves use closed-form Cramer determinants with a pivoted-elimination
shadow path for verification.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBranch, SensitivityVanishesAtEquilibrium, SingularSystem, ZeroMode
from .model import Parameters, Sensitivity, equilibrium, sensitivity_eval
from .stability import ThresholdKind, chi_H, chi_S, chi_zero

__all__ = [
    "ModeAmplitudes",
    "FirstOrderIntegrals",
    "SecondOrderIntegrals",
    "K2Result",
    "BranchVerdict",
    "mode_amplitudes",
    "det_M",
    "first_order_integrals",
    "second_order_integrals",
    "compute_K2",
    "branch_verdict",
    "solve3_cramer",
    "solve3_elim",
    "k2_table_csv",
    "k2_ledger_text",
]

_COND_LIMIT = 1e12


def _det3(a: np.ndarray) -> float:
    return (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )


def solve3_cramer(a: np.ndarray, b: np.ndarray, name: str = "A") -> np.ndarray:
    """Exact-closed-form 3x3 solve; raises SingularSystem on cond > 1e12."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    det = _det3(a)
    norm_a = np.abs(a).sum(axis=1).max()
    if det == 0.0:
        raise SingularSystem(name, math.inf)
    x = np.empty(3)
    for j in range(3):
        aj = a.copy()
        aj[:, j] = b
        x[j] = _det3(aj) / det
    # cond_1 estimate from the explicit adjugate
    adj_norm = 0.0
    for i in range(3):
        row = 0.0
        for j in range(3):
            minor = np.delete(np.delete(a, j, axis=0), i, axis=1)
            row += abs(minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
        adj_norm = max(adj_norm, row)
    cond = norm_a * adj_norm / abs(det)
    if cond > _COND_LIMIT:
        raise SingularSystem(name, cond)
    return x


def solve3_elim(a: np.ndarray, b: np.ndarray, name: str = "A") -> np.ndarray:
    """Gaussian elimination with partial pivoting; shadow path for Cramer."""
    m = np.concatenate([np.asarray(a, dtype=float), np.asarray(b, dtype=float)[:, None]], axis=1)
    for col in range(3):
        piv = col + int(np.argmax(np.abs(m[col:, col])))
        if m[piv, col] == 0.0:
            raise SingularSystem(name, math.inf)
        if piv != col:
            m[[col, piv]] = m[[piv, col]]
        for row in range(col + 1, 3):
            f = m[row, col] / m[col, col]
            m[row, col:] -= f * m[col, col:]
    x = np.empty(3)
    for row in (2, 1, 0):
        x[row] = (m[row, 3] - m[row, row + 1 : 3] @ x[row + 1 :]) / m[row, row]
    return x


@dataclass(frozen=True)
class ModeAmplitudes:
    """Predator components of the null eigenvector (P, Q, 1) cos(k pi x/L)."""

    P: float
    Q: float


def mode_amplitudes(p: Parameters, s: Sensitivity, k: int) -> ModeAmplitudes:
    if k < 1:
        raise ZeroMode(f"mode amplitudes need k >= 1, got {k}")
    eq = equilibrium(p)
    phi = sensitivity_eval(s, eq.w)[0]
    if phi == 0.0:
        raise SensitivityVanishesAtEquilibrium("phi(w_eq) = 0")
    kap2 = (k * math.pi / p.L) ** 2
    H2 = p.d2 * kap2 + p.alpha2 * eq.v
    H3 = p.d3 * kap2 + p.alpha3 * eq.w
    Q = (p.xi * eq.v * phi * kap2 + p.beta2 * eq.v) / H2
    P = -(p.beta32 / p.beta31) * Q - H3 / (p.beta31 * eq.w)
    return ModeAmplitudes(P=P, Q=Q)


def _matrix_M(p: Parameters, s: Sensitivity, k: int) -> np.ndarray:
    """The 3x3 matrix M of the orthogonality-closed projection systems."""
    eq = equilibrium(p)
    phi = sensitivity_eval(s, eq.w)[0]
    kap2 = (k * math.pi / p.L) ** 2
    H2 = p.d2 * kap2 + p.alpha2 * eq.v
    H3 = p.d3 * kap2 + p.alpha3 * eq.w
    amp = mode_amplitudes(p, s, k)
    return np.array(
        [
            [0.0, H2, -(p.xi * eq.v * phi * kap2 + p.beta2 * eq.v)],
            [p.beta31 * eq.w, p.beta32 * eq.w, H3],
            [amp.P, amp.Q, 1.0],
        ]
    )


def det_M(p: Parameters, s: Sensitivity, k: int) -> float:
    """Determinant of M; strictly negative for every group-defense draw."""
    if k < 1:
        raise ZeroMode(f"det_M needs k >= 1, got {k}")
    return _det3(_matrix_M(p, s, k))


@dataclass(frozen=True)
class FirstOrderIntegrals:
    """Integrals of the O(s^2) correction fields (phi1, psi1, gamma1).

    J_* are the plain means over (0, L); D_* are the projections onto
    cos(2 k pi x / L).  The projections onto cos(k pi x / L) vanish by the
    orthogonality of the branch expansion and are asserted, not stored.
    """

    J_u: float
    J_v: float
    J_w: float
    D_u: float
    D_v: float
    D_w: float


def first_order_integrals(p: Parameters, s: Sensitivity, k: int) -> FirstOrderIntegrals:
    """Solve the mean-mode and double-mode 3x3 systems at chi = chi_S_k."""
    chi = chi_S(p, s, k)
    eq = equilibrium(p)
    phi, dphi, _ = sensitivity_eval(s, eq.w)
    kap2 = (k * math.pi / p.L) ** 2
    amp = mode_amplitudes(p, s, k)
    P, Q = amp.P, amp.Q
    L = p.L

    B0 = np.array(
        [
            [p.alpha1 * eq.u, 0.0, -p.beta1 * eq.u],
            [0.0, p.alpha2 * eq.v, -p.beta2 * eq.v],
            [p.beta31 * eq.w, p.beta32 * eq.w, p.alpha3 * eq.w],
        ]
    )
    rhs_mean = np.array(
        [
            -L / 2.0 * P * (p.alpha1 * P - p.beta1),
            -L / 2.0 * Q * (p.alpha2 * Q - p.beta2),
            -L / 2.0 * (p.beta31 * P + p.beta32 * Q + p.alpha3),
        ]
    )
    J = solve3_cramer(B0, rhs_mean, "B0")

    # cos(2 k pi x / L) projection: the second derivative brings the factor
    # 4 kappa^2 onto both the diffusion and the taxis entries, and the
    # cos^2 forcing of the prey equation projects to a nonzero third entry
    C0 = np.array(
        [
            [4.0 * p.d1 * kap2 + p.alpha1 * eq.u, 0.0,
             -(4.0 * chi * eq.u * phi * kap2 + p.beta1 * eq.u)],
            [0.0, 4.0 * p.d2 * kap2 + p.alpha2 * eq.v,
             -(4.0 * p.xi * eq.v * phi * kap2 + p.beta2 * eq.v)],
            [p.beta31 * eq.w, p.beta32 * eq.w, 4.0 * p.d3 * kap2 + p.alpha3 * eq.w],
        ]
    )
    M3 = chi * L / 2.0 * kap2 * (eq.u * dphi + P * phi) - L / 4.0 * (p.alpha1 * P - p.beta1) * P
    M4 = p.xi * L / 2.0 * kap2 * (eq.v * dphi + Q * phi) - L / 4.0 * (p.alpha2 * Q - p.beta2) * Q
    M5 = -L / 4.0 * (p.beta31 * P + p.beta32 * Q + p.alpha3)
    D = solve3_cramer(C0, np.array([M3, M4, M5]), "C0")

    return FirstOrderIntegrals(J[0], J[1], J[2], D[0], D[1], D[2])


@dataclass(frozen=True)
class SecondOrderIntegrals:
    """cos(k pi x / L) projections of the O(s^3) fields (phi2, psi2, gamma2)."""

    I_u: float
    I_v: float
    I_w: float


def _m1_m2(p: Parameters, s: Sensitivity, k: int, f: FirstOrderIntegrals):
    eq = equilibrium(p)
    phi, dphi, ddphi = sensitivity_eval(s, eq.w)
    kap2 = (k * math.pi / p.L) ** 2
    amp = mode_amplitudes(p, s, k)
    P, Q = amp.P, amp.Q
    L = p.L
    M1 = (
        -(p.alpha2 * Q - p.beta2 / 2.0 + p.xi * phi * kap2 / 2.0) * f.D_v
        + 0.5 * (p.xi * eq.v * dphi * kap2 + p.beta2 * Q + 2.0 * p.xi * Q * phi * kap2) * f.D_w
        - (p.alpha2 * Q - p.beta2 / 2.0 - p.xi * phi * kap2 / 2.0) * f.J_v
        + 0.5 * (p.xi * eq.v * dphi * kap2 + p.beta2 * Q) * f.J_w
        + p.xi * kap2 * L / 8.0 * (eq.v * ddphi / 2.0 + Q * dphi)
    )
    M2 = (
        -p.beta31 / 2.0 * (f.J_u + f.D_u)
        - p.beta32 / 2.0 * (f.J_v + f.D_v)
        - 0.5 * (p.beta31 * P + p.beta32 * Q + 2.0 * p.alpha3) * (f.J_w + f.D_w)
    )
    return M1, M2


def second_order_integrals(
    p: Parameters, s: Sensitivity, k: int, f: FirstOrderIntegrals
) -> SecondOrderIntegrals:
    """Solve the mode-k system M (I_u, I_v, I_w) = (M1, M2, 0)."""
    M1, M2 = _m1_m2(p, s, k, f)
    sol = solve3_cramer(_matrix_M(p, s, k), np.array([M1, M2, 0.0]), "A0")
    return SecondOrderIntegrals(sol[0], sol[1], sol[2])


@dataclass(frozen=True)
class K2Result:
    """Pitchfork coefficient with its full intermediate ledger."""

    k: int
    chi_S_k: float
    K2: float
    amplitudes: ModeAmplitudes
    first_order: FirstOrderIntegrals
    second_order: SecondOrderIntegrals
    M1: float
    M2: float
    M3: float
    M4: float
    M5: float
    detM: float


def compute_K2(
    p: Parameters,
    s: Sensitivity,
    k: int,
    degeneracy_tol: float = 1e-6,
) -> K2Result:
    """K2 for branch k, extracted from the mode-k projection at O(s^3).

    The branch parameter s never enters the pipeline (K2 is even in s by
    construction); the linear coefficient of chi_k(s) is identically zero
    on this branch.
    """
    cs, ch = chi_S(p, s, k), chi_H(p, s, k)
    if abs(cs - ch) <= degeneracy_tol * max(abs(cs), abs(ch)):
        raise DegenerateBranch(f"chi_S_{k} and chi_H_{k} coincide at {cs:.9g}")
    if not math.isfinite(cs):
        raise SensitivityVanishesAtEquilibrium(f"chi_S_{k} is not finite")

    eq = equilibrium(p)
    phi, dphi, ddphi = sensitivity_eval(s, eq.w)
    kap2 = (k * math.pi / p.L) ** 2
    amp = mode_amplitudes(p, s, k)
    P = amp.P
    L = p.L
    f = first_order_integrals(p, s, k)
    g = second_order_integrals(p, s, k, f)
    M1, M2 = _m1_m2(p, s, k, f)
    M3 = cs * L / 2.0 * kap2 * (eq.u * dphi + P * phi) - L / 4.0 * (p.alpha1 * P - p.beta1) * P
    M4 = p.xi * L / 2.0 * kap2 * (eq.v * dphi + amp.Q * phi) - L / 4.0 * (p.alpha2 * amp.Q - p.beta2) * amp.Q
    M5 = -L / 4.0 * (p.beta31 * P + p.beta32 * amp.Q + p.alpha3)

    H1 = p.d1 * kap2 + p.alpha1 * eq.u
    rhs = (
        H1 * g.I_u
        - (cs * eq.u * phi * kap2 + p.beta1 * eq.u) * g.I_w
        + (p.alpha1 * P - p.beta1 / 2.0 + cs * phi * kap2 / 2.0) * f.D_u
        - 0.5 * (cs * eq.u * dphi * kap2 + p.beta1 * P + 2.0 * cs * P * phi * kap2) * f.D_w
        + (p.alpha1 * P - p.beta1 / 2.0 - cs * phi * kap2 / 2.0) * f.J_u
        - 0.5 * (cs * eq.u * dphi * kap2 + p.beta1 * P) * f.J_w
        - cs * kap2 * L / 8.0 * (eq.u * ddphi / 2.0 + P * dphi)
    )
    K2 = rhs / (eq.u * phi * kap2 * L / 2.0)
    return K2Result(
        k=k,
        chi_S_k=cs,
        K2=K2,
        amplitudes=amp,
        first_order=f,
        second_order=g,
        M1=M1, M2=M2, M3=M3, M4=M4, M5=M5,
        detM=det_M(p, s, k),
    )


class BranchKind(enum.Enum):
    STEADY_STATE = "SteadyState"
    HOPF = "Hopf"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class BranchVerdict:
    k: int
    kind: BranchKind
    stability: str  # "stable" | "unstable" | "undetermined" | "not-applicable"
    reason: str
    K2: float | None = None


def branch_verdict(
    p: Parameters,
    s: Sensitivity,
    kmax: int | None = None,
    degeneracy_tol: float = 1e-6,
) -> list[BranchVerdict]:
    """Classify every bifurcation branch up to kmax.

    Steady-state case (chi0 = chi_S_{k0}): branch k0 is stable iff
    K2(k0) > 0; all other steady branches are unstable; no Hopf bifurcation
    occurs.  Hopf case (chi0 = chi_H_{k1}): every steady branch is unstable;
    the left-most Hopf branch k1 is the unique stable candidate (stable if
    supercritical, which is not computed analytically here); all Hopf
    branches to its right are unstable.
    """
    table = chi_zero(p, s, kmax=kmax, degeneracy_tol=degeneracy_tol)
    if table.kind is ThresholdKind.DEGENERATE:
        raise DegenerateBranch(
            f"chi0 is degenerate at k = {table.k_star}: chi_S = chi_H = {table.chi0:.9g}"
        )
    verdicts: list[BranchVerdict] = []
    if table.kind is ThresholdKind.STEADY_STATE:
        k0 = table.k_star
        r = compute_K2(p, s, k0, degeneracy_tol)
        for k in table.k:
            k = int(k)
            if k == k0:
                stab = "stable" if r.K2 > 0 else "unstable"
                why = (
                    f"minimizing steady branch: K2 = {r.K2:.6g} "
                    f"{'> 0 (right-turning)' if r.K2 > 0 else '< 0 (left-turning)'}"
                )
                verdicts.append(BranchVerdict(k, BranchKind.STEADY_STATE, stab, why, r.K2))
            else:
                verdicts.append(
                    BranchVerdict(
                        k, BranchKind.STEADY_STATE, "unstable",
                        "steady branch away from the minimizing mode",
                    )
                )
            verdicts.append(
                BranchVerdict(
                    k, BranchKind.HOPF, "not-applicable",
                    "chi0 is a steady-state point; no Hopf bifurcation occurs",
                )
            )
    else:  # HOPF or ALWAYS_STABLE
        if table.kind is ThresholdKind.ALWAYS_STABLE:
            raise DegenerateBranch("phi(w_eq) > 0: no bifurcation for chi > 0")
        k1 = table.k_star
        for k in table.k:
            k = int(k)
            verdicts.append(
                BranchVerdict(
                    k, BranchKind.STEADY_STATE, "unstable",
                    "chi0 is a Hopf point; every steady branch is unstable",
                )
            )
            if k == k1:
                verdicts.append(
                    BranchVerdict(
                        k, BranchKind.HOPF, "undetermined",
                        "left-most Hopf branch: unique stable candidate "
                        "(stable if supercritical)",
                    )
                )
            else:
                verdicts.append(
                    BranchVerdict(
                        k, BranchKind.HOPF, "unstable",
                        "Hopf branch right of the left-most one",
                    )
                )
    return verdicts


def k2_table_csv(results, verdicts=None) -> str:
    """CSV rows: k, chi_S_k, P_k, Q_k, detM, K2, verdict."""
    if isinstance(results, K2Result):
        results = [results]
    by_k = {}
    for v in verdicts or []:
        if v.kind is BranchKind.STEADY_STATE:
            by_k[v.k] = v.stability
    lines = ["k,chi_S_k,P_k,Q_k,detM,K2,verdict"]
    for r in results:
        verdict = by_k.get(r.k, "")
        lines.append(
            f"{r.k},{r.chi_S_k:.6g},{r.amplitudes.P:.6g},{r.amplitudes.Q:.6g},"
            f"{r.detM:.6g},{r.K2:.6g},{verdict}"
        )
    return "\n".join(lines) + "\n"


def k2_ledger_text(r: K2Result) -> str:
    """Structured plain-text dump of every intermediate of the K2 pipeline."""
    f, g = r.first_order, r.second_order
    lines = [
        f"mode k                    = {r.k}",
        f"chi_S_k                   = {r.chi_S_k:.12g}",
        f"P_k                       = {r.amplitudes.P:.12g}",
        f"Q_k                       = {r.amplitudes.Q:.12g}",
        f"det M                     = {r.detM:.12g}",
        f"mean integrals  (J_u,J_v,J_w)   = {f.J_u:.12g}, {f.J_v:.12g}, {f.J_w:.12g}",
        f"double-mode     (D_u,D_v,D_w)   = {f.D_u:.12g}, {f.D_v:.12g}, {f.D_w:.12g}",
        f"mode-k O(s^3)   (I_u,I_v,I_w)   = {g.I_u:.12g}, {g.I_v:.12g}, {g.I_w:.12g}",
        f"M1, M2                    = {r.M1:.12g}, {r.M2:.12g}",
        f"M3, M4, M5                = {r.M3:.12g}, {r.M4:.12g}, {r.M5:.12g}",
        f"K2                        = {r.K2:.12g}",
    ]
    return "\n".join(lines) + "\n"
