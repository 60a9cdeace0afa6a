"""
Truncated side-band systems and Floquet residuals.

Model A drives the barrier, Model B the well bottom. In both, the barrier
coefficients are carried scaled,

    u_l = a_l * exp(+q_l b),    v_l = b_l * exp(-q_l a),

so matrix entries only involve D_l = exp(-q_l (b - a)), |D_l| <= 1. The
unscaled families f_la, f_lb, g_la, g_lb are recovered from the scaled ones
on demand.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import InvalidParameters, ResidualPole, UnphysicalRoot
from .linsys import solve_equilibrated
from .potential import check_drive, off_branch_point, sideband_kinematics, SidebandKinematics
from .rootfind import RootConfig, solve_root
from .special import BesselTable, bessel_table, default_table_order
from .types import DriveSpec, FloquetRoot, Model, SidebandCoefficients, WellGeometry

logger = logging.getLogger(__name__)

ComplexFn = Callable[[complex], complex]

ZONE_TOLERANCE = 1.0e-6  # units of v0


# ----------------------------
# Shared per-epsilon setup
# ----------------------------

@dataclass(frozen=True, eq=False)
class ChannelTerms:
    kin: SidebandKinematics
    table: BesselTable
    sin_ka: np.ndarray
    cos_ka: np.ndarray
    sinc_ka: np.ndarray  # sin(k a)/k, equal to a at k = 0
    damping: np.ndarray  # D = exp(-q (b - a))

    @property
    def center(self) -> int:
        return (len(self.kin.orders) - 1) // 2

    @property
    def side(self) -> np.ndarray:
        """Array positions of the l != 0 channels."""
        return np.flatnonzero(self.kin.orders != 0)


def channel_terms(geom: WellGeometry, drive: DriveSpec, epsilon: complex) -> ChannelTerms:
    eps = off_branch_point(geom, drive, epsilon)
    kin = sideband_kinematics(geom, drive, eps)
    alpha = drive.alpha(geom.hbar)
    order = max(default_table_order(alpha, drive.n_sidebands), 2 * drive.n_sidebands)
    ka = kin.k * geom.a
    return ChannelTerms(
        kin=kin,
        table=bessel_table(alpha, order),
        sin_ka=np.sin(ka),
        cos_ka=np.cos(ka),
        sinc_ka=geom.a * np.sinc(ka / np.pi),
        damping=np.exp(-kin.q * geom.width),
    )


# ----------------------------
# Model A
# ----------------------------

@dataclass(frozen=True, eq=False)
class MatchingCoefficients:
    """
    Side-band barrier coefficients per unit central coefficient, l != 0.

    Scaled families: u_l = grow_a*u_0 + grow_b*v_0 and v_l = decay_a*u_0 + decay_b*v_0.
    """
    epsilon: complex
    orders: np.ndarray
    grow_a: np.ndarray
    grow_b: np.ndarray
    decay_a: np.ndarray
    decay_b: np.ndarray
    condition_estimate: float
    q: np.ndarray
    q0: complex
    a: float
    b: float

    @property
    def a_of_a0(self) -> np.ndarray:
        """f_la."""
        return self.grow_a * np.exp((self.q0 - self.q) * self.b)

    @property
    def a_of_b0(self) -> np.ndarray:
        """f_lb."""
        return self.grow_b * np.exp(-self.q0 * self.a - self.q * self.b)

    @property
    def b_of_a0(self) -> np.ndarray:
        """g_la."""
        return self.decay_a * np.exp(self.q * self.a + self.q0 * self.b)

    @property
    def b_of_b0(self) -> np.ndarray:
        """g_lb."""
        return self.decay_b * np.exp((self.q - self.q0) * self.a)


@dataclass(frozen=True, eq=False)
class FCoefficients:
    f: np.ndarray

    def __post_init__(self) -> None:
        if self.f.shape != (8,):
            raise InvalidParameters("FCoefficients: need exactly 8 values")

    def at(self, i: int) -> complex:
        """F_i, 1-based."""
        return complex(self.f[i - 1])


def _inner_system_a(terms: ChannelTerms) -> Tuple[np.ndarray, np.ndarray]:
    """Rows: well-side then outer-side combinations for n != 0. Columns: u_l then v_l."""
    side = terms.side
    orders = terms.kin.orders[side]
    k = terms.kin.k[side]
    q = terms.kin.q[side]
    c = terms.cos_ka[side]
    st = terms.sinc_ka[side]
    d = terms.damping[side]
    j = terms.table.coupling(orders, orders)

    m_wu = (c[:, None] - st[:, None] * q[None, :]) * d[None, :] * j
    m_wv = (c[:, None] + st[:, None] * q[None, :]) * j
    m_ou = (1j * k[:, None] - q[None, :]) * j
    m_ov = (1j * k[:, None] + q[None, :]) * d[None, :] * j
    matrix = np.block([[m_wu, m_wv], [m_ou, m_ov]])

    cen = terms.center
    q0, d0 = terms.kin.q[cen], terms.damping[cen]
    jn = terms.table.at(orders)
    rhs_u0 = np.concatenate([-jn * (c - st * q0) * d0, -jn * (1j * k - q0)])
    rhs_v0 = np.concatenate([-jn * (c + st * q0), -jn * (1j * k + q0) * d0])
    return matrix, np.column_stack([rhs_u0, rhs_v0])


def _matching(geom: WellGeometry, terms: ChannelTerms) -> MatchingCoefficients:
    side = terms.side
    n2 = len(side)
    eps = terms.kin.epsilon
    if n2:
        matrix, rhs = _inner_system_a(terms)
        sol, cond = solve_equilibrated(matrix, rhs, epsilon=eps)
    else:
        sol, cond = np.zeros((0, 2), dtype=complex), 1.0
    return MatchingCoefficients(
        epsilon=eps,
        orders=terms.kin.orders[side],
        grow_a=sol[:n2, 0],
        grow_b=sol[:n2, 1],
        decay_a=sol[n2:, 0],
        decay_b=sol[n2:, 1],
        condition_estimate=float(cond),
        q=terms.kin.q[side],
        q0=complex(terms.kin.q[terms.center]),
        a=geom.a,
        b=geom.b,
    )


def matching_coefficients_A(geom: WellGeometry, drive: DriveSpec, epsilon: complex) -> MatchingCoefficients:
    if drive.n_sidebands < 1:
        raise InvalidParameters("matching_coefficients_A: need n_sidebands >= 1")
    return _matching(geom, channel_terms(geom, drive, epsilon))


def _f_values(terms: ChannelTerms, mc: MatchingCoefficients) -> FCoefficients:
    side = terms.side
    cen = terms.center
    j0 = terms.table[0]
    jm = terms.table.at(-terms.kin.orders[side])
    d = terms.damping[side]
    d0 = terms.damping[cen]
    ratio = terms.kin.q[side] / terms.kin.q[cen]

    def total(x: np.ndarray) -> complex:
        return complex(np.sum(x * jm))

    f = np.array([
        j0 + total(mc.grow_a * d + mc.decay_a) / d0,
        j0 + total(mc.grow_b * d + mc.decay_b),
        j0 + total(ratio * (mc.grow_a * d - mc.decay_a)) / d0,
        j0 - total(ratio * (mc.grow_b * d - mc.decay_b)),
        j0 + total(mc.grow_a + mc.decay_a * d),
        j0 + total(mc.grow_b + mc.decay_b * d) / d0,
        j0 + total(ratio * (mc.grow_a - mc.decay_a * d)),
        j0 - total(ratio * (mc.grow_b - mc.decay_b * d)) / d0,
    ], dtype=complex)
    return FCoefficients(f=f)


def f_coefficients(
    geom: WellGeometry,
    drive: DriveSpec,
    epsilon: complex,
    mc: MatchingCoefficients,
) -> FCoefficients:
    terms = channel_terms(geom, drive, epsilon)
    if terms.kin.epsilon != mc.epsilon or len(mc.orders) != len(terms.side):
        raise InvalidParameters("f_coefficients: matching coefficients were computed at another epsilon or truncation")
    return _f_values(terms, mc)


def _central_ratio(terms: ChannelTerms, fc: FCoefficients) -> complex:
    """(F8 q0 + i F6 k0) / (F7 q0 - i F5 k0): ratio u_0 / (v_0 D_0) fixed by the outer edge."""
    cen = terms.center
    k0, q0 = terms.kin.k[cen], terms.kin.q[cen]
    den = fc.at(7) * q0 - 1j * fc.at(5) * k0
    if den == 0.0:
        raise ResidualPole("F7*q0 - i*F5*k0 vanishes", epsilon=terms.kin.epsilon)
    return (fc.at(8) * q0 + 1j * fc.at(6) * k0) / den


def _residual_a(terms: ChannelTerms, fc: FCoefficients, width: float) -> complex:
    cen = terms.center
    k0, q0 = terms.kin.k[cen], terms.kin.q[cen]
    cos0 = terms.cos_ka[cen]
    if cos0 == 0.0:
        raise ResidualPole("tan(k0 a) pole", epsilon=terms.kin.epsilon)
    tangent = (q0 / k0) * terms.sin_ka[cen] / cos0
    ratio = _central_ratio(terms, fc)
    val = complex(
        fc.at(4) * tangent + fc.at(2)
        - ratio * (fc.at(3) * tangent - fc.at(1)) * np.exp(-2.0 * q0 * width)
    )
    if not np.isfinite(val):
        raise ResidualPole("non-finite residual", epsilon=terms.kin.epsilon)
    return val


def residual_A(geom: WellGeometry, drive: DriveSpec, epsilon: complex) -> complex:
    if drive.model is not Model.A:
        raise InvalidParameters("residual_A: drive.model must be A")
    terms = channel_terms(geom, drive, epsilon)
    mc = _matching(geom, terms)
    return _residual_a(terms, _f_values(terms, mc), geom.width)


# ----------------------------
# Model B
# ----------------------------

@dataclass(frozen=True, eq=False)
class ModelBCoefficients:
    """A'_n = c[n] * A'_0 over n in [-N, N]."""
    orders: np.ndarray
    c: np.ndarray
    condition_estimate: float

    def __post_init__(self) -> None:
        center = (len(self.orders) - 1) // 2
        if self.c.shape != self.orders.shape or self.c[center] != 1.0:
            raise InvalidParameters("ModelBCoefficients: c must cover all orders with c[0] = 1")


def _outgoing_ratio(terms: ChannelTerms) -> np.ndarray:
    """B+_{l,l} / B-_{l,l} = (k_l + i q_l) / (k_l - i q_l)."""
    k, q = terms.kin.k, terms.kin.q
    return (k + 1j * q) / (k - 1j * q)


def _edge_rows_b(terms: ChannelTerms, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """
    Row l of the combined edge condition multiplied by D_l:
    [(k_n cos k_n a - q_l sin k_n a) D_l^2 - rho_l (k_n cos k_n a + q_l sin k_n a)] J_{l-n}.
    """
    kc = (terms.kin.k * terms.cos_ka)[cols]
    sn = terms.sin_ka[cols]
    q = terms.kin.q[rows]
    d2 = terms.damping[rows] ** 2
    rho = _outgoing_ratio(terms)[rows]
    orders = terms.kin.orders
    j = terms.table.coupling(orders[rows], orders[cols])
    minus = kc[None, :] - q[:, None] * sn[None, :]
    plus = kc[None, :] + q[:, None] * sn[None, :]
    return (minus * d2[:, None] - rho[:, None] * plus) * j


def _model_b(terms: ChannelTerms) -> ModelBCoefficients:
    side = terms.side
    cen = terms.center
    c = np.ones(len(terms.kin.orders), dtype=complex)
    cond = 1.0
    if len(side):
        matrix = _edge_rows_b(terms, side, side)
        rhs = -_edge_rows_b(terms, side, np.array([cen]))[:, 0]
        sol, cond = solve_equilibrated(matrix, rhs, epsilon=terms.kin.epsilon)
        c[side] = sol
    return ModelBCoefficients(orders=terms.kin.orders, c=c, condition_estimate=float(cond))


def model_b_coefficients(geom: WellGeometry, drive: DriveSpec, epsilon: complex) -> ModelBCoefficients:
    return _model_b(channel_terms(geom, drive, epsilon))


def _residual_b(terms: ChannelTerms, mb: ModelBCoefficients) -> complex:
    cen = terms.center
    q0, d0 = terms.kin.q[cen], terms.damping[cen]
    rho0 = _outgoing_ratio(terms)[cen]
    kc = terms.kin.k * terms.cos_ka
    sn = terms.sin_ka
    bracket = (kc - q0 * sn) * d0 - rho0 * (kc + q0 * sn) / d0
    val = complex(np.sum(bracket * terms.table.at(-terms.kin.orders) * mb.c))
    if not np.isfinite(val):
        raise ResidualPole("non-finite residual", epsilon=terms.kin.epsilon)
    return val


def residual_B(geom: WellGeometry, drive: DriveSpec, epsilon: complex) -> complex:
    if drive.model is not Model.B:
        raise InvalidParameters("residual_B: drive.model must be B")
    terms = channel_terms(geom, drive, epsilon)
    return _residual_b(terms, _model_b(terms))


def residual(geom: WellGeometry, drive: DriveSpec, epsilon: complex) -> complex:
    if drive.model is Model.A:
        return residual_A(geom, drive, epsilon)
    return residual_B(geom, drive, epsilon)


# ----------------------------
# Roots and coefficients
# ----------------------------

def _coefficients_a(geom: WellGeometry, terms: ChannelTerms) -> SidebandCoefficients:
    mc = _matching(geom, terms)
    fc = _f_values(terms, mc)
    cen, side = terms.center, terms.side
    d = terms.damping
    d0 = d[cen]
    ratio = _central_ratio(terms, fc)

    v0 = terms.sin_ka[cen] / (fc.at(2) + ratio * d0 * d0 * fc.at(1))
    u0 = ratio * d0 * v0
    n = len(terms.kin.orders)
    u = np.zeros(n, dtype=complex)
    v = np.zeros(n, dtype=complex)
    u[cen], v[cen] = u0, v0
    u[side] = mc.grow_a * u0 + mc.grow_b * v0
    v[side] = mc.decay_a * u0 + mc.decay_b * v0

    orders = terms.kin.orders
    j = terms.table.coupling(orders, orders)
    q, k = terms.kin.q, terms.kin.k
    inner_value = j @ (u * d + v)        # A_n sin(k_n a)
    inner_slope = j @ (q * (u * d - v))  # k_n A_n cos(k_n a)
    kcos = k * terms.cos_ka
    use_value = np.abs(terms.sin_ka) >= np.abs(kcos)
    with np.errstate(divide="ignore", invalid="ignore"):
        well = np.where(use_value, inner_value / terms.sin_ka, inner_slope / kcos)
    well[cen] = 1.0
    outgoing = j @ (u + v * d)  # t_n exp(i k_n b)
    return SidebandCoefficients(orders=orders, well=well, growing=u, decaying=v, outgoing=outgoing)


def _coefficients_b(terms: ChannelTerms) -> SidebandCoefficients:
    mb = _model_b(terms)
    orders = terms.kin.orders
    j = terms.table.coupling(orders, orders)  # rows l, cols n: J_{l-n}
    value = j @ (mb.c * terms.sin_ka)
    slope = j @ (mb.c * terms.kin.k * terms.cos_ka)
    q = terms.kin.q
    d = terms.damping
    v = 0.5 * (value - slope / q)
    u = -d * v / _outgoing_ratio(terms)
    return SidebandCoefficients(orders=orders, well=mb.c.copy(), growing=u, decaying=v, outgoing=u + v * d)


def floquet_root(
    geom: WellGeometry,
    drive: DriveSpec,
    epsilon: complex,
    *,
    residual_norm: Optional[float] = None,
) -> FloquetRoot:
    """Coefficients at an already polished quasienergy, normalized A_0 = 1 (A'_0 = 1)."""
    terms = channel_terms(geom, drive, epsilon)
    if drive.model is Model.A:
        mc = _matching(geom, terms)
        coeffs = _coefficients_a(geom, terms)
        cond = mc.condition_estimate
        res = _residual_a(terms, _f_values(terms, mc), geom.width)
    else:
        mb = _model_b(terms)
        coeffs = _coefficients_b(terms)
        cond = mb.condition_estimate
        res = _residual_b(terms, mb)
    return FloquetRoot(
        epsilon=terms.kin.epsilon,
        model=drive.model,
        n_sidebands=drive.n_sidebands,
        geometry=geom,
        drive=drive,
        coefficients=coeffs,
        residual_norm=abs(res) if residual_norm is None else float(residual_norm),
        condition=cond,
    )


def solve_floquet(
    geom: WellGeometry,
    drive: DriveSpec,
    guess: complex,
    cfg: Optional[RootConfig] = None,
    *,
    allow_strong: bool = False,
    validate_truncation: bool = True,
) -> FloquetRoot:
    check_drive(geom, drive, allow_strong=allow_strong, validate_truncation=validate_truncation)
    cfg = cfg or RootConfig.for_geometry(geom)
    result = solve_root(lambda e: residual(geom, drive, e), guess, cfg)
    eps = result.root
    if eps.imag > cfg.residual_tol * max(1.0, abs(eps)):
        raise UnphysicalRoot(f"solve_floquet: root {eps!r} has Im > 0")
    root = floquet_root(geom, drive, eps, residual_norm=result.residual)
    logger.debug("model %s root %r (N=%d, cond=%.3e)", drive.model.value, root.epsilon, drive.n_sidebands, root.condition)
    return root


def boundary_defect_A(geom: WellGeometry, drive: DriveSpec, epsilon: complex, coeffs: SidebandCoefficients) -> float:
    """
    Largest relative defect of the four edge-matching equations of the
    oscillating-barrier model (value and slope at x=a and x=b, every band).
    """
    terms = channel_terms(geom, drive, epsilon)
    orders = terms.kin.orders
    if not np.array_equal(coeffs.orders, orders):
        raise InvalidParameters("boundary_defect_A: coefficient orders do not match the drive")
    j = terms.table.coupling(orders, orders)
    k, q, d = terms.kin.k, terms.kin.q, terms.damping
    u, v, well, out = coeffs.growing, coeffs.decaying, coeffs.well, coeffs.outgoing
    pairs = (
        (well * terms.sin_ka, j @ (u * d + v)),
        (k * well * terms.cos_ka, j @ (q * (u * d - v))),
        (out, j @ (u + v * d)),
        (1j * k * out, j @ (q * (u - v * d))),
    )
    worst = 0.0
    for lhs, rhs in pairs:
        scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), np.finfo(float).tiny)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / scale))
    return worst


@dataclass(frozen=True)
class TruncationCheck:
    converged: bool
    epsilon: complex
    epsilon_next: complex
    delta: float


def truncation_converged(
    geom: WellGeometry,
    drive: DriveSpec,
    guess: complex,
    cfg: Optional[RootConfig] = None,
    *,
    tol: Optional[float] = None,
) -> TruncationCheck:
    """Solves at N and N+1 from the same guess and compares the roots."""
    tol = ZONE_TOLERANCE * geom.v0 if tol is None else tol
    first = solve_floquet(geom, drive, guess, cfg, validate_truncation=False)
    wider = DriveSpec(drive.v1, drive.omega, drive.model, drive.n_sidebands + 1)
    second = solve_floquet(geom, wider, first.epsilon, cfg, validate_truncation=False)
    delta = abs(second.epsilon - first.epsilon)
    if delta > tol:
        logger.warning("side-band truncation N=%d not converged: |delta eps|=%.3e", drive.n_sidebands, delta)
    return TruncationCheck(delta <= tol, first.epsilon, second.epsilon, delta)
