"""Linear stability of the coexistence equilibrium, mode by mode.

Perturbations proportional to cos(k pi x / L) decouple; each mode k feels a
3x3 matrix whose characteristic polynomial is

    sigma^3 + eta2 sigma^2 + eta1 sigma + eta0 = 0.

Routh-Hurwitz (eta0 > 0, eta1 > 0, eta1 eta2 - eta0 > 0) holds for every k
iff the equilibrium is linearly stable.  With group defense (phi(w_eq) < 0)
each condition fails beyond a closed-form taxis threshold:

    chi_S_k : eta0 = 0            (steady-state / pitchfork candidate)
    chi_H_k : eta1 eta2 - eta0 = 0 (Hopf candidate, frequency sqrt(eta1))
    chi_M_k : eta1 = 0            (separates the two orderings)

The overall instability threshold is chi0 = min_k {chi_S_k, chi_H_k}.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NoPositiveEquilibrium,
    NotAHopfPoint,
    SensitivityVanishesAtEquilibrium,
    ZeroMode,
)
from .model import Parameters, Sensitivity, equilibrium, sensitivity_eval

__all__ = [
    "ThresholdKind",
    "EtaCoefficients",
    "ThresholdTable",
    "EigenTriple",
    "StabilityVerdict",
    "stability_matrix",
    "eta",
    "chi_S",
    "chi_H",
    "chi_M",
    "chi_zero",
    "is_stable",
    "eigenvalues",
    "cubic_roots",
    "hopf_frequency",
    "transversality",
    "threshold_table_csv",
    "auto_kmax",
]


def _mode_ingredients(p: Parameters, s: Sensitivity, k: int):
    """Shared precomputation: equilibrium, phi(w_eq), kappa^2 = (k pi / L)^2, H1..H3."""
    eq = equilibrium(p)
    phi = sensitivity_eval(s, eq.w)[0]
    kap2 = (k * math.pi / p.L) ** 2
    H1 = p.d1 * kap2 + p.alpha1 * eq.u
    H2 = p.d2 * kap2 + p.alpha2 * eq.v
    H3 = p.d3 * kap2 + p.alpha3 * eq.w
    return eq, phi, kap2, H1, H2, H3


def _require_group_defense(phi: float):
    if phi == 0.0:
        raise SensitivityVanishesAtEquilibrium("phi(w_eq) = 0")


def stability_matrix(p: Parameters, s: Sensitivity, chi: float, k: int) -> np.ndarray:
    """Mode-k linearization matrix around the coexistence equilibrium."""
    eq, phi, kap2, H1, H2, H3 = _mode_ingredients(p, s, k)
    return np.array(
        [
            [-H1, 0.0, chi * eq.u * phi * kap2 + p.beta1 * eq.u],
            [0.0, -H2, p.xi * eq.v * phi * kap2 + p.beta2 * eq.v],
            [-p.beta31 * eq.w, -p.beta32 * eq.w, -H3],
        ]
    )


@dataclass(frozen=True)
class EtaCoefficients:
    """Coefficients of sigma^3 + eta2 sigma^2 + eta1 sigma + eta0."""

    eta0: float
    eta1: float
    eta2: float

    def routh_hurwitz(self):
        """The three stability margins (eta0, eta1, eta1*eta2 - eta0)."""
        return self.eta0, self.eta1, self.eta1 * self.eta2 - self.eta0


def eta(p: Parameters, s: Sensitivity, chi: float, k: int) -> EtaCoefficients:
    """Closed-form characteristic coefficients of the mode-k matrix.

    Equivalent to (-det, sum of principal 2x2 minors, -trace); the matrix
    route is kept as a test oracle.
    """
    eq, phi, kap2, H1, H2, H3 = _mode_ingredients(p, s, k)
    b1u = p.beta31 * p.beta1 * eq.u
    b2v = p.beta32 * p.beta2 * eq.v
    eta2 = H1 + H2 + H3
    eta1 = (
        H1 * H2 + H1 * H3 + H2 * H3
        + (b1u + b2v) * eq.w
        + (p.beta31 * eq.u * chi + p.beta32 * eq.v * p.xi) * eq.w * phi * kap2
    )
    eta0 = (
        H1 * H2 * H3
        + H2 * b1u * eq.w
        + H1 * b2v * eq.w
        + H2 * p.beta31 * eq.u * eq.w * phi * kap2 * chi
        + H1 * p.beta32 * eq.v * eq.w * phi * kap2 * p.xi
    )
    return EtaCoefficients(eta0=eta0, eta1=eta1, eta2=eta2)


def _threshold_guard(p: Parameters, s: Sensitivity, k: int):
    if k < 1:
        raise ZeroMode(f"threshold formulas need k >= 1, got {k}")
    eq, phi, kap2, H1, H2, H3 = _mode_ingredients(p, s, k)
    _require_group_defense(phi)
    return eq, phi, kap2, H1, H2, H3


def chi_S(p: Parameters, s: Sensitivity, k: int) -> float:
    """Taxis value where eta0(chi, k) vanishes (steady-state threshold)."""
    eq, phi, kap2, H1, H2, H3 = _threshold_guard(p, s, k)
    return (
        -(p.beta32 * eq.v * H1) / (p.beta31 * eq.u * H2) * p.xi
        - (
            H1 * H2 * H3
            + H2 * p.beta31 * p.beta1 * eq.u * eq.w
            + H1 * p.beta32 * p.beta2 * eq.v * eq.w
        )
        / (H2 * p.beta31 * eq.u * eq.w * phi * kap2)
    )


def chi_H(p: Parameters, s: Sensitivity, k: int) -> float:
    """Taxis value where eta1*eta2 - eta0 vanishes (Hopf threshold)."""
    eq, phi, kap2, H1, H2, H3 = _threshold_guard(p, s, k)
    sym = (
        H1 * H1 * H2 + H1 * H2 * H2 + H1 * H1 * H3 + H1 * H3 * H3
        + H2 * H2 * H3 + H2 * H3 * H3 + 2.0 * H1 * H2 * H3
    )
    return (
        -sym / ((H1 + H3) * p.beta31 * eq.u * eq.w * phi * kap2)
        - (
            (H1 + H3) * p.beta31 * p.beta1 * eq.u
            + (H2 + H3) * p.beta32 * p.beta2 * eq.v
        )
        / ((H1 + H3) * p.beta31 * eq.u * phi * kap2)
        - (H2 + H3) * p.beta32 * eq.v * p.xi / ((H1 + H3) * p.beta31 * eq.u)
    )


def chi_M(p: Parameters, s: Sensitivity, k: int) -> float:
    """The unique root of eta1(chi, k) = 0."""
    eq, phi, kap2, H1, H2, H3 = _threshold_guard(p, s, k)
    return (
        -(H1 * H2 + H1 * H3 + H2 * H3) / (p.beta31 * eq.u * eq.w * phi * kap2)
        - (
            p.xi * p.beta32 * eq.v * phi * kap2
            + p.beta32 * p.beta2 * eq.v
            + p.beta31 * p.beta1 * eq.u
        )
        / (p.beta31 * eq.u * phi * kap2)
    )


def auto_kmax(p: Parameters, s: Sensitivity, lo: int = 30) -> int:
    """Tail rule for the mode sweep.

    Both thresholds grow like k^2 eventually, so stop at the smallest
    kmax >= lo such that chi_S_k and chi_H_k have been increasing for 5
    consecutive modes and exceed 10x the running minimum.
    """
    cs_prev = ch_prev = None
    rising = 0
    best = math.inf
    k = 0
    while True:
        k += 1
        cs, ch = chi_S(p, s, k), chi_H(p, s, k)
        best = min(best, cs, ch)
        if cs_prev is not None and cs > cs_prev and ch > ch_prev:
            rising += 1
        else:
            rising = 0
        cs_prev, ch_prev = cs, ch
        if (
            k >= lo
            and rising >= 5
            and cs > 10.0 * abs(best)
            and ch > 10.0 * abs(best)
        ):
            return k
        if k > 100000:  # pragma: no cover - guards pathological inputs
            return k


class ThresholdKind(enum.Enum):
    STEADY_STATE = "SteadyState"
    HOPF = "Hopf"
    DEGENERATE = "Degenerate"
    ALWAYS_STABLE = "AlwaysStable"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ThresholdTable:
    """Per-mode thresholds plus the overall instability threshold chi0.

    For group defense (phi(w_eq) < 0) chi0 = min_k {chi_S_k, chi_H_k} and
    k_star is the minimizing mode.  If phi(w_eq) > 0 every threshold is
    negative, kind is ALWAYS_STABLE and chi0 holds the *maximum* threshold
    (the equilibrium is stable for any chi above it, hence for all chi > 0).
    """

    k: np.ndarray
    chi_S: np.ndarray
    chi_H: np.ndarray
    chi_M: np.ndarray
    chi0: float
    k_star: int
    kind: ThresholdKind


def chi_zero(
    p: Parameters,
    s: Sensitivity,
    kmax: int | None = None,
    degeneracy_tol: float = 1e-6,
) -> ThresholdTable:
    """Tabulate thresholds for k = 1..kmax and locate chi0.

    kmax = None applies the tail rule (auto_kmax).  kind is DEGENERATE when
    the minimizing chi_S and chi_H agree within degeneracy_tol (relative);
    bifurcation classification refuses to run in that case.
    """
    eq = equilibrium(p)
    phi = sensitivity_eval(s, eq.w)[0]
    _require_group_defense(phi)
    if kmax is None:
        kmax = auto_kmax(p, s)
    if kmax < 1:
        raise ZeroMode(f"kmax must be >= 1, got {kmax}")
    ks = np.arange(1, kmax + 1)
    cs = np.array([chi_S(p, s, int(k)) for k in ks])
    ch = np.array([chi_H(p, s, int(k)) for k in ks])
    cm = np.array([chi_M(p, s, int(k)) for k in ks])
    if phi > 0:
        # thresholds are all negative; stability for every chi above their max
        chi0 = float(max(cs.max(), ch.max()))
        k_star = int(ks[np.argmax(np.maximum(cs, ch))])
        return ThresholdTable(ks, cs, ch, cm, chi0, k_star, ThresholdKind.ALWAYS_STABLE)
    iS = int(np.argmin(cs))
    iH = int(np.argmin(ch))
    minS, minH = float(cs[iS]), float(ch[iH])
    scale = max(abs(minS), abs(minH), 1e-300)
    if abs(minS - minH) <= degeneracy_tol * scale:
        kind = ThresholdKind.DEGENERATE
        chi0, k_star = minS, int(ks[iS])
    elif minS < minH:
        kind = ThresholdKind.STEADY_STATE
        chi0, k_star = minS, int(ks[iS])
    else:
        kind = ThresholdKind.HOPF
        chi0, k_star = minH, int(ks[iH])
    return ThresholdTable(ks, cs, ch, cm, chi0, k_star, kind)


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of the Routh-Hurwitz sweep over modes 0..kmax."""

    status: str  # "stable" | "unstable" | "marginal"
    k: int | None = None
    condition: str | None = None  # "eta0" | "eta1" | "eta1*eta2-eta0"

    @property
    def stable(self) -> bool:
        return self.status == "stable"


def is_stable(
    p: Parameters,
    s: Sensitivity,
    chi: float,
    kmax: int | None = None,
    margin: float = 1e-9,
) -> StabilityVerdict:
    """Routh-Hurwitz verdict for the given chi, including the k = 0 mode.

    The uniform mode cannot destabilize under coexistence, but it is checked
    rather than assumed.  Returns the first violating mode and condition.
    """
    if not p.coexistence:
        raise NoPositiveEquilibrium("is_stable needs the positive equilibrium")
    if kmax is None:
        kmax = auto_kmax(p, s)
    marginal = None
    for k in range(0, kmax + 1):
        e = eta(p, s, chi, k)
        for name, value in zip(("eta0", "eta1", "eta1*eta2-eta0"), e.routh_hurwitz()):
            if abs(value) <= margin:
                if marginal is None:
                    marginal = StabilityVerdict("marginal", k, name)
            elif value < 0.0:
                return StabilityVerdict("unstable", k, name)
    return marginal if marginal is not None else StabilityVerdict("stable")


def cubic_roots(eta0: float, eta1: float, eta2: float):
    """Roots of sigma^3 + eta2 sigma^2 + eta1 sigma + eta0 = 0.

    Depressed-cubic resolvent with the trigonometric branch for three real
    roots and Cardano otherwise, then one Newton polish per real root.
    Deterministic and dependency-free.
    """

    def poly(x):
        return ((x + eta2) * x + eta1) * x + eta0

    def dpoly(x):
        return (3.0 * x + 2.0 * eta2) * x + eta1

    def polish(x):
        d = dpoly(x)
        if d != 0.0:
            step = poly(x) / d
            if abs(step) < 1.0 + abs(x):
                x = x - step
        return x

    shift = eta2 / 3.0
    pp = eta1 - eta2 * eta2 / 3.0
    qq = 2.0 * eta2**3 / 27.0 - eta2 * eta1 / 3.0 + eta0
    disc = (qq / 2.0) ** 2 + (pp / 3.0) ** 3

    if disc <= 0.0:
        # three real roots (trigonometric branch)
        if pp == 0.0:
            reals = [-shift, -shift, -shift]
        else:
            m = 2.0 * math.sqrt(-pp / 3.0)
            arg = 3.0 * qq / (pp * m)
            arg = min(1.0, max(-1.0, arg))
            theta = math.acos(arg)
            reals = [
                m * math.cos((theta - 2.0 * math.pi * j) / 3.0) - shift
                for j in range(3)
            ]
        roots = [complex(polish(r), 0.0) for r in reals]
    else:
        rt = math.sqrt(disc)
        su = math.copysign(abs(-qq / 2.0 + rt) ** (1.0 / 3.0), -qq / 2.0 + rt)
        uu = math.copysign(abs(-qq / 2.0 - rt) ** (1.0 / 3.0), -qq / 2.0 - rt)
        real_root = polish(su + uu - shift)
        # deflate: sigma^2 + b sigma + c
        b = eta2 + real_root
        c = eta1 + real_root * b
        half = -b / 2.0
        rad = c - half * half
        im = math.sqrt(rad) if rad > 0.0 else 0.0
        roots = [complex(real_root, 0.0), complex(half, im), complex(half, -im)]

    roots.sort(key=lambda z: (-z.real, -z.imag))
    return tuple(roots)


@dataclass(frozen=True)
class EigenTriple:
    """Eigenvalues of a mode matrix, sorted by (Re desc, Im desc)."""

    sigma1: complex
    sigma2: complex
    sigma3: complex

    def __iter__(self):
        return iter((self.sigma1, self.sigma2, self.sigma3))


def eigenvalues(m: np.ndarray) -> EigenTriple:
    """Spectrum of a 3x3 real matrix via its characteristic cubic."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    minors = (
        m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    )
    det = (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    return EigenTriple(*cubic_roots(-det, minors, -tr))


def hopf_frequency(p: Parameters, s: Sensitivity, k: int):
    """(tau0, period) of the Hopf pair at chi_H_k.

    Requires chi_H_k < chi_S_k; at such points eta1(chi_H_k, k) > 0 and the
    pair is +-i tau0 with tau0 = sqrt(eta1).  Predicted orbit period is
    2 pi / tau0.
    """
    ch, cs = chi_H(p, s, k), chi_S(p, s, k)
    if not ch < cs:
        raise NotAHopfPoint(f"chi_H_{k} = {ch:.6g} >= chi_S_{k} = {cs:.6g}")
    e1 = eta(p, s, ch, k).eta1
    if e1 <= 0.0:
        raise NotAHopfPoint(f"eta1(chi_H_{k}, {k}) = {e1:.6g} <= 0")
    tau0 = math.sqrt(e1)
    return tau0, 2.0 * math.pi / tau0


def transversality(p: Parameters, s: Sensitivity, k: int):
    """(sigma1', lambda') at the Hopf point chi_H_k.

    sigma1' is the chi-derivative of the real eigenvalue (negative under
    group defense); lambda' = -sigma1'/2 > 0 is the crossing speed of the
    complex pair's real part.
    """
    tau0, _ = hopf_frequency(p, s, k)  # validates the Hopf point
    eq, phi, kap2, H1, H2, H3 = _mode_ingredients(p, s, k)
    ch = chi_H(p, s, k)
    eta2 = eta(p, s, ch, k).eta2
    sigma1_prime = (
        p.beta31 * eq.w * eq.u * phi * kap2 * (H1 + H3) / (tau0**2 + eta2**2)
    )
    return sigma1_prime, -0.5 * sigma1_prime


def threshold_table_csv(table: ThresholdTable) -> str:
    """Deterministic CSV: one row per mode, then a chi0/k_star/kind trailer."""
    lines = ["k,chi_S,chi_H,chi_M"]
    for i, k in enumerate(table.k):
        lines.append(
            f"{int(k)},{table.chi_S[i]:.6g},{table.chi_H[i]:.6g},{table.chi_M[i]:.6g}"
        )
    lines.append(f"chi0,{table.chi0:.6g},{table.k_star},{table.kind}")
    return "\n".join(lines) + "\n"
