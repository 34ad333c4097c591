"""Character averages of central values, by two independent routes.

Route A averages per-character smoothed central sums; every character of
Pic(O_c) is evaluated with the ambient level-c data and the cutoff conductor
of its own true conductor c'.  Route B never touches characters: orthogonality
collapses the average to the principal counting function r(n) of the maximal
order, a leading sum at the full conductor, and one divisor-correction term
per proper divisor built from the modified cutoff.  For prime-power
conductors the two routes agree exactly up to truncation; the report carries
the measured gap.

The main-term predictor combines L(1, eta), the symmetric-square ratio (with
its pole diagnostic), and for the derivative case the logarithmic-derivative
bracket including (1/2) log Y - gamma - log(2 pi).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .arith import divisors, moebius
from .errors import DomainError, NumericError, StateError
from .hecke import TensorCoefficients
from .lseries import (
    CentralValueResult,
    QuadraticCharacter,
    RankinSetup,
    Sym2Value,
    _afe_double_sum,
    afe_cutoff_length,
    central_value,
    coprime_mask,
    dirichlet_L,
    dirichlet_L_complex,
    dirichlet_L_log_derivative,
    generic_parity,
    root_number,
    sym2_ratio_log_derivative,
    sym2_with_offset,
    zeta_excluded,
    zeta_excluded_log_derivative,
)
from .params import TOLERANCES
from .quadorders import QuadOrder, build_class_group, dedekind_class_number
from .special import cutoff_function, tensor_ring_class_arch

EULER_GAMMA = 0.5772156649015328606


@dataclass
class MomentReport:
    fundamental_discriminant: int
    conductor: int
    tensor_label: str
    k: int
    Y: float
    per_character: list[tuple[int, float]] = field(default_factory=list)
    H: float | None = None          # route A average
    H_route_b: float | None = None
    D_leading: float | None = None
    D_tilde_terms: list[tuple[int, float]] = field(default_factory=list)
    main_term: float | None = None
    residual: float | None = None
    route_gap: float | None = None
    pole_diagnostic: dict | None = None
    basechange_is_default: bool = True

    def to_dict(self) -> dict:
        return {
            "fundamental_discriminant": self.fundamental_discriminant,
            "conductor": self.conductor,
            "tensor": self.tensor_label,
            "k": self.k,
            "Y": self.Y,
            "per_character": [
                {"conductor": c, "value": v} for c, v in self.per_character
            ],
            "H": self.H,
            "H_route_b": self.H_route_b,
            "D_leading": self.D_leading,
            "D_tilde_terms": [
                {"divisor": d, "value": v} for d, v in self.D_tilde_terms
            ],
            "main_term": self.main_term,
            "residual": self.residual,
            "route_gap": self.route_gap,
            "pole_diagnostic": self.pole_diagnostic,
            "basechange_conductor_is_default_heuristic": self.basechange_is_default,
        }


def _base_setup(tensor: TensorCoefficients, d_k: int, c: int, **kw) -> RankinSetup:
    return RankinSetup(tensor, QuadOrder(d_k, c), None, **kw)


def average_route_A(
    tensor: TensorCoefficients,
    d_k: int,
    c: int,
    k: int | None = None,
    a: float = 0.25,
    threads: int = 1,
    basechange_conductor: float | None = None,
) -> MomentReport:
    """Mean of per-character central values over Pic(O_c)^dual."""
    setup = _base_setup(tensor, d_k, c, basechange_conductor=basechange_conductor)
    group = setup.group
    kk = generic_parity(setup) if k is None else int(k)
    chars = group.characters()
    # warm shared caches before any parallel evaluation (single-writer builds)
    nmax = afe_cutoff_length(setup.Y)
    tensor.coefficient_table(nmax)
    group.representation_table(nmax)
    for ch in chars:
        _ = ch.conductor
    cutoff_function(kk, tensor_ring_class_arch(tensor.weights), a=a)

    def one(ch) -> CentralValueResult:
        s = RankinSetup(
            tensor,
            setup.order,
            ch,
            basechange_conductor=setup.basechange_conductor
            if not setup.basechange_is_default
            else None,
        )
        return central_value(s, k=kk, a=a)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, chars))
    else:
        results = [one(ch) for ch in chars]
    per_char = [(r.character_conductor, r.value) for r in results]
    H = math.fsum(v for _, v in per_char) / group.h
    return MomentReport(
        fundamental_discriminant=d_k,
        conductor=c,
        tensor_label=tensor.label,
        k=kk,
        Y=setup.Y,
        per_character=per_char,
        H=H,
        basechange_is_default=setup.basechange_is_default,
    )


def average_route_B(
    tensor: TensorCoefficients,
    d_k: int,
    c: int,
    k: int | None = None,
    a: float = 0.25,
    basechange_conductor: float | None = None,
) -> MomentReport:
    """Orthogonality route: (1/2) H = D(c) - (1/h) sum_{c'|c, c'<c} h(c') Dt(c').

    D uses the plain cutoff at the full conductor; each correction term uses
    the modified cutoff with ratio (divisor / successor divisor) evaluated at
    the successor's conductor, which makes the telescoping against route A
    exact along divisor chains.
    """
    setup = _base_setup(tensor, d_k, c, basechange_conductor=basechange_conductor)
    kk = generic_parity(setup) if k is None else int(k)
    eps = root_number(setup)
    pref = 1.0 + eps * (-1.0) ** kk
    arch = tensor_ring_class_arch(tensor.weights)
    maximal = build_class_group(d_k, 1)
    ds = divisors(c)
    Ys = [setup.conductor_sqrt(d) for d in ds]
    nmax = afe_cutoff_length(Ys[-1])
    r_table = maximal.principal_count_table(nmax).astype(np.float64)
    cpi = tensor.coefficient_table(nmax)
    mask = coprime_mask(nmax, c)
    ns = np.arange(nmax + 1, dtype=np.float64)
    weights = np.where(mask, cpi * r_table / np.sqrt(np.maximum(ns, 1.0)), 0.0)
    eta = setup.eta
    eta_vals = eta.values(eta.modulus - 1)

    V = cutoff_function(kk, arch, a=a)
    d_lead, _, _ = _afe_double_sum(eta_vals, weights, V, Ys[-1], nmax)

    h_full = dedekind_class_number(d_k, c)
    corr = 0.0
    tilde_terms = []
    for j in range(len(ds) - 1):
        ratio = ds[j] / ds[j + 1]
        Vmod = cutoff_function(
            kk, arch, a=a, ratio=ratio, ratio_exponent=setup.rank
        )
        val, _, _ = _afe_double_sum(eta_vals, weights, Vmod, Ys[j + 1], nmax)
        tilde_terms.append((ds[j], val))
        corr += dedekind_class_number(d_k, ds[j]) * val
    H = 2.0 * (pref / 2.0) * (d_lead - corr / h_full)
    return MomentReport(
        fundamental_discriminant=d_k,
        conductor=c,
        tensor_label=tensor.label,
        k=kk,
        Y=setup.Y,
        H_route_b=H,
        D_leading=(pref / 2.0) * d_lead,
        D_tilde_terms=tilde_terms,
        basechange_is_default=setup.basechange_is_default,
    )


def average_both_routes(
    tensor: TensorCoefficients,
    d_k: int,
    c: int,
    k: int | None = None,
    a: float = 0.25,
    threads: int = 1,
    with_main_term: bool = True,
) -> MomentReport:
    ra = average_route_A(tensor, d_k, c, k=k, a=a, threads=threads)
    rb = average_route_B(tensor, d_k, c, k=k, a=a)
    ra.H_route_b = rb.H_route_b
    ra.D_leading = rb.D_leading
    ra.D_tilde_terms = rb.D_tilde_terms
    ra.route_gap = abs(ra.H - rb.H_route_b) / max(abs(ra.H), 1.0)
    if with_main_term:
        inputs = main_term_inputs(
            tensor, d_k, c, ra.Y, need_derivatives=(ra.k == 1)
        )
        ra.main_term = main_term(inputs, ra.k)
        ra.residual = ra.H - ra.main_term
        ra.pole_diagnostic = inputs.diagnostic_dict()
    return ra


# ---------------------------------------------------------------------------
# main term
# ---------------------------------------------------------------------------


@dataclass
class MainTermInputs:
    L1_eta: float
    sym2: Sym2Value
    w: int
    Y: float
    zeta_c_2: float
    Lprime_over_L_eta: float | None = None
    sym2_logderiv: float | None = None
    zeta_c_logderiv: float | None = None
    d: int = 1

    def diagnostic_dict(self) -> dict:
        return {
            "sym2_pole_flagged": self.sym2.pole_flagged,
            "sym2_acknowledged": self.sym2.acknowledged,
            "sym2_s0": self.sym2.s0,
            "sym2_growth_slope": self.sym2.growth_slope,
            "sym2_drift": self.sym2.drift,
        }


def main_term_inputs(
    tensor: TensorCoefficients,
    d_k: int,
    c: int,
    Y: float,
    need_derivatives: bool = False,
) -> MainTermInputs:
    eta = QuadraticCharacter(d_k)
    sym2 = sym2_with_offset(tensor, c)
    out = MainTermInputs(
        L1_eta=dirichlet_L(eta, 1.0),
        sym2=sym2,
        w=QuadOrder(d_k, c).unit_count,
        Y=Y,
        zeta_c_2=zeta_excluded(2.0, c),
    )
    if need_derivatives:
        out.Lprime_over_L_eta = dirichlet_L_log_derivative(eta, 1.0)
        out.sym2_logderiv = sym2_ratio_log_derivative(
            tensor, c, sym2.s0, nmax=sym2.cutoff
        )
        out.zeta_c_logderiv = zeta_excluded_log_derivative(2.0, c)
    return out


def main_term(inputs: MainTermInputs, k: int) -> float:
    """Predicted average: (4/w) L(1,eta) ratio, times the log bracket if k=1."""
    if inputs.sym2.pole_flagged and not inputs.sym2.acknowledged:
        raise StateError(
            "symmetric-square input carries an unacknowledged pole diagnostic; "
            "evaluate with the s0 offset first"
        )
    base = 4.0 / inputs.w * inputs.L1_eta * inputs.sym2.ratio
    if k == 0:
        return base
    if k != 1:
        raise DomainError("k must be 0 or 1")
    missing = [
        n
        for n, v in (
            ("Lprime_over_L_eta", inputs.Lprime_over_L_eta),
            ("sym2_logderiv", inputs.sym2_logderiv),
            ("zeta_c_logderiv", inputs.zeta_c_logderiv),
        )
        if v is None
    ]
    if missing:
        raise StateError(f"derivative inputs missing: {missing}")
    bracket = (
        0.5 * math.log(inputs.Y)
        + inputs.Lprime_over_L_eta
        + inputs.sym2_logderiv
        - inputs.zeta_c_logderiv
        - inputs.d * EULER_GAMMA
        - math.log(2.0 * math.pi)
    )
    return base * bracket


# ---------------------------------------------------------------------------
# b = 0 contour identity
# ---------------------------------------------------------------------------


def b0_contour_check(
    tensor: TensorCoefficients,
    d_k: int,
    c: int,
    k: int,
    a: float = 0.25,
    a_cut: int = 4000,
) -> tuple[float, float, float]:
    """The diagonal (b = 0) sum two ways: direct summation vs the contour
    integral of its own Mellin transform.  Returns (direct, contour, gap).
    """
    setup = _base_setup(tensor, d_k, c)
    Y = setup.Y
    w = setup.order.unit_count
    arch = tensor_ring_class_arch(tensor.weights)
    V = cutoff_function(k, arch, a=a)
    eta = setup.eta
    eta_vals = eta.values(eta.modulus - 1)

    # direct side: (2/w) sum_m eta(m)/m sum_{(a,c)=1} C(a^2)/a V(m^2 a^2 / Y)
    amax = int(math.sqrt(afe_cutoff_length(Y))) + 1
    csq = np.zeros(amax + 1)
    for n in range(1, amax + 1):
        csq[n] = tensor.coefficient(n * n)
    mask = coprime_mask(amax, c)
    aa = np.arange(amax + 1, dtype=np.float64)
    weights = np.where(mask, csq / np.maximum(aa, 1.0), 0.0)
    direct = 0.0
    m = 1
    while m * m <= afe_cutoff_length(Y):
        em = eta_vals[m % len(eta_vals)]
        if em:
            acut = int(math.sqrt(afe_cutoff_length(Y) / (m * m))) + 1
            idx = np.nonzero(weights[: min(acut, amax) + 1])[0]
            if len(idx):
                args = (m * m) * aa[idx] ** 2 / Y
                direct += em / m * float(np.sum(weights[idx] * V.bulk(args)))
        m += 1
    direct *= 2.0 / w

    # contour side: the same Dirichlet series under the integral sign
    csq_full = np.zeros(a_cut + 1)
    for n in range(1, a_cut + 1):
        csq_full[n] = tensor.coefficient(n * n)
    mask_full = coprime_mask(a_cut, c)
    avals = np.arange(a_cut + 1, dtype=np.float64)
    ln_a = np.log(np.maximum(avals, 1.0))

    def extra(s):
        s = np.atleast_1d(s)
        w_arg = 2.0 * s + 1.0
        lvals = dirichlet_L_complex(eta, w_arg)
        svals = np.zeros_like(s)
        sel = np.nonzero(mask_full)[0]
        for i, sv in enumerate(w_arg.ravel()):
            svals.ravel()[i] = np.sum(
                csq_full[sel] * np.exp(-sv * ln_a[sel])
            )
        return (2.0 / w) * lvals * svals

    contour = V.contour_integral_with(extra, 1.0 / Y)
    gap = abs(direct - contour) / max(abs(direct), 1e-30)
    return direct, contour, gap


# ---------------------------------------------------------------------------
# primitive subaverages
# ---------------------------------------------------------------------------


def primitive_subaverage(
    d_k: int, c: int, averages: dict[int, float]
) -> float:
    """Weighted primitive average from full averages over all divisors:
    |P(c)| P_c = sum_{c'|c} mu(c/c') h(O_c') H_c'."""
    missing = [d for d in divisors(c) if d not in averages]
    if missing:
        raise StateError(f"averages missing for divisors {missing}")
    num = 0.0
    count = 0
    for d in divisors(c):
        mu = moebius(c // d)
        if mu == 0:
            continue
        h = dedekind_class_number(d_k, d)
        num += mu * h * averages[d]
        count += mu * h
    if count <= 0:
        raise DomainError("no primitive characters at this conductor")
    return num / count


def primitive_character_count(d_k: int, c: int) -> int:
    return sum(
        moebius(c // d) * dedekind_class_number(d_k, d)
        for d in divisors(c)
        if moebius(c // d) != 0
    )
