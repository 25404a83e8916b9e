"""Staircase-of-saddles landscape.

The domain D is a chain of tau-by-tau axis-aligned squares: saddle blocks
alternating with buffer squares, ending in a block that holds the global
minimum.  Odd blocks are escaped rightward along x1, even blocks upward
along x2; each buffer carries a quintic blend that stitches the two
adjacent quadratics together with a continuous gradient.  Every branch of
the function and its gradient is closed-form, so values and derivatives
are exact up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

Point = tuple[float, float]


class OutsideDomainError(ValueError):
    """Evaluation requested at a point not covered by any region."""


class RegionKind(Enum):
    ODD_BLOCK = "odd_block"
    EVEN_BLOCK = "even_block"
    ODD_EVEN_BUFFER = "odd_even_buffer"
    EVEN_ODD_BUFFER = "even_odd_buffer"
    FINAL_BLOCK = "final_block"
    OUTSIDE = "outside"

    @property
    def is_block(self) -> bool:
        return self in (RegionKind.ODD_BLOCK, RegionKind.EVEN_BLOCK, RegionKind.FINAL_BLOCK)

    @property
    def is_buffer(self) -> bool:
        return self in (RegionKind.ODD_EVEN_BUFFER, RegionKind.EVEN_ODD_BUFFER)


@dataclass(frozen=True)
class RegionId:
    """Which region of the chain a point belongs to.

    ``order`` is the 0-based position in the chain B1, B1', B2, B2', ...:
    2*(index-1) for blocks, 2*(index-1)+1 for buffers.  Outside carries
    neither index nor order.
    """

    kind: RegionKind
    index: int | None = None
    order: int | None = None

    @property
    def is_outside(self) -> bool:
        return self.kind is RegionKind.OUTSIDE


OUTSIDE = RegionId(RegionKind.OUTSIDE)


@dataclass(frozen=True)
class LandscapeParams:
    """User-facing construction parameters.

    L is the benign curvature, gamma the (weaker) escape curvature,
    tau the side length of every block and buffer, n_saddles the number
    of saddle blocks; the chain has n_saddles + 1 blocks in total, the
    last one holding the minimum.
    """

    L: float = 1.0
    gamma: float = 0.5
    tau: float = 1.0
    n_saddles: int = 9

    def __post_init__(self):
        if not (self.L > 0 and self.gamma > 0 and self.tau > 0):
            raise ValueError(f"L, gamma, tau must be positive, got {self}")
        if self.L < self.gamma:
            raise ValueError(f"construction requires L >= gamma, got L={self.L} gamma={self.gamma}")
        if int(self.n_saddles) != self.n_saddles or self.n_saddles < 1:
            raise ValueError(f"n_saddles must be an integer >= 1, got {self.n_saddles}")

    @property
    def n_blocks(self) -> int:
        return self.n_saddles + 1


@dataclass(frozen=True)
class DerivedConstants:
    L2: float            # wrong-side curvature, 4*L
    nu: float            # per-block value offset, (3/4)*(L+gamma)*tau^2
    eta_default: float   # step size 1/(4*L); eta_default * L2 == 1
    lower_bound_base: float  # L/gamma, the per-saddle escape-time growth base


@dataclass(frozen=True)
class BlockGeometry:
    """Bounds (x1_min, x1_max, x2_min, x2_max) and quadratic center."""

    bounds: tuple[float, float, float, float]
    center: Point


@dataclass(frozen=True)
class BufferBranch:
    """Endpoint curvatures of a buffer's cross-coordinate blend.

    c1 is always L (matching the block being left); c2 is -gamma on the
    escape side of the next block, L2 on its wrong side, and L only in
    the buffer that leads into the final block.
    """

    c1: float
    c2: float


def derive_constants(params: LandscapeParams) -> DerivedConstants:
    """Constants fixed by the construction: L2, the offset nu, default step."""
    L, g, tau = params.L, params.gamma, params.tau
    L2 = 4.0 * L
    # nu = (1/4)*L*tau^2 - g1(2*tau); closed form (3/4)*(L+gamma)*tau^2
    nu = 0.75 * (L + g) * tau * tau
    return DerivedConstants(L2=L2, nu=nu, eta_default=1.0 / L2, lower_bound_base=L / g)


def floor_to_multiple(x: float, period: float) -> float:
    """Largest multiple of ``period`` that does not exceed ``x``."""
    if period <= 0:
        raise ValueError(f"period must be positive, got {period}")
    return math.floor(x / period) * period


def hermite_cubic(f0: float, f1: float, df0: float, df1: float,
                  y0: float, y1: float) -> tuple[float, float, float, float]:
    """Coefficients (c0, c1, c2, c3) of the cubic matching endpoint values
    and slopes on [y0, y1], as a polynomial in (y - y0)."""
    if y1 == y0:
        raise ValueError("degenerate interval: y0 == y1")
    h = y1 - y0
    s = (f1 - f0) / h
    c2 = (3.0 * s - df1 - 2.0 * df0) / h
    c3 = -(2.0 * s - df1 - df0) / (h * h)
    return (f0, df0, c2, c3)


def ramp_profile(u: float, params: LandscapeParams) -> tuple[float, float]:
    """Along-travel buffer profile and its derivative on u in [tau, 2*tau].

    The profile is a quadratic ramp whose slope runs from -gamma*tau at the
    block exit to -L*tau at the next block's entry, shifted so the value at
    u = tau matches the block's exit level.
    """
    tau = params.tau
    if not (tau <= u <= 2.0 * tau):
        raise ValueError(f"u={u} outside buffer range [{tau}, {2 * tau}]")
    return _ramp_value(u, params), _ramp_slope(u, params)


def _ramp_value(u, params):
    L, g, tau = params.L, params.gamma, params.tau
    # p(x) = 0.5*(gamma-L)*x^2 + (L-2*gamma)*tau*x, shifted by -p(tau) - gamma*tau^2/4
    p_u = 0.5 * (g - L) * u * u + (L - 2.0 * g) * tau * u
    p_tau = 0.5 * (g - L) * tau * tau + (L - 2.0 * g) * tau * tau
    return p_u - p_tau - 0.25 * g * tau * tau


def _ramp_slope(u, params):
    L, g, tau = params.L, params.gamma, params.tau
    return (g - L) * u + (L - 2.0 * g) * tau


def quintic_blend(u: float, branch: BufferBranch, tau: float) -> tuple[float, float]:
    """Quintic blend from c1 at u = tau to c2 at u = 2*tau and its derivative.

    Both endpoint derivatives vanish (double roots at tau and 2*tau), which
    is what keeps the assembled gradient continuous across block edges.
    """
    if not (tau <= u <= 2.0 * tau):
        raise ValueError(f"u={u} outside buffer range [{tau}, {2 * tau}]")
    return (_blend_value(u, branch.c1, branch.c2, tau),
            _blend_slope(u, branch.c1, branch.c2, tau))


def _blend_value(u, c1, c2, tau):
    # normalized z = (u - 2*tau)/tau in [-1, 0]; explicit products keep the
    # scalar and vectorized paths bitwise identical and the endpoints exact
    z = (u - 2.0 * tau) / tau
    z2 = z * z
    d = c1 - c2
    return c2 - d * z2 * z * (10.0 + 15.0 * z + 6.0 * z2)


def _blend_slope(u, c1, c2, tau):
    z = (u - 2.0 * tau) / tau
    zp = z + 1.0
    d = c1 - c2
    return -30.0 * d * z * z * zp * zp / tau


@dataclass(frozen=True)
class _Region:
    """Internal region record: identity plus everything needed to evaluate."""

    rid: RegionId
    bounds: tuple[float, float, float, float]
    center: Point
    # buffers only:
    travel_axis: int | None = None   # 0: u along x1 (odd->even), 1: u along x2
    u_base: float | None = None      # u = coord - u_base, in [tau, 2*tau]
    into_final: bool = False         # buffer leading into the final block

    def contains(self, x1: float, x2: float) -> bool:
        a, b, c, d = self.bounds
        return a <= x1 <= b and c <= x2 <= d


def _build_regions(params: LandscapeParams) -> tuple[_Region, ...]:
    tau, n = params.tau, params.n_blocks
    out = []
    for i in range(1, n + 1):
        if i % 2 == 1:
            k = (i - 1) // 2
            bounds = (2 * k * tau, (2 * k + 1) * tau, 2 * k * tau, (2 * k + 1) * tau)
            kind = RegionKind.ODD_BLOCK
        else:
            k = i // 2
            bounds = (2 * k * tau, (2 * k + 1) * tau, (2 * k - 2) * tau, (2 * k - 1) * tau)
            kind = RegionKind.EVEN_BLOCK
        if i == n:
            kind = RegionKind.FINAL_BLOCK
        center = (0.5 * (bounds[0] + bounds[1]), 0.5 * (bounds[2] + bounds[3]))
        out.append(_Region(RegionId(kind, i, 2 * (i - 1)), bounds, center))
        if i == n:
            break
        if i % 2 == 1:
            k = (i - 1) // 2
            bbounds = ((2 * k + 1) * tau, (2 * k + 2) * tau, 2 * k * tau, (2 * k + 1) * tau)
            bkind, axis, u_base = RegionKind.ODD_EVEN_BUFFER, 0, 2 * k * tau
        else:
            k = i // 2
            bbounds = (2 * k * tau, (2 * k + 1) * tau, (2 * k - 1) * tau, 2 * k * tau)
            bkind, axis, u_base = RegionKind.EVEN_ODD_BUFFER, 1, (2 * k - 2) * tau
        bcenter = (0.5 * (bbounds[0] + bbounds[1]), 0.5 * (bbounds[2] + bbounds[3]))
        out.append(_Region(RegionId(bkind, i, 2 * (i - 1) + 1), bbounds, bcenter,
                           travel_axis=axis, u_base=u_base, into_final=(i == n - 1)))
    return tuple(out)


class Landscape:
    """The assembled piecewise function f on D with exact gradients.

    Pure and immutable after construction; safe to share across threads.
    """

    def __init__(self, params: LandscapeParams):
        self.params = params
        self.derived = derive_constants(params)
        self.regions = _build_regions(params)
        self.nu = self.derived.nu

    # -- region queries ----------------------------------------------------

    def locate(self, p: Point) -> _Region | None:
        """First region in chain order whose closed square contains p.

        Shared edges therefore belong to the earlier region, which makes
        classification total and deterministic without any epsilon.
        """
        x1, x2 = p
        for reg in self.regions:
            if reg.contains(x1, x2):
                return reg
        return None

    def classify(self, p: Point) -> RegionId:
        reg = self.locate(p)
        return OUTSIDE if reg is None else reg.rid

    def geometry(self, region: RegionId) -> BlockGeometry:
        if region.is_outside:
            raise ValueError("Outside has no geometry")
        if region.order is None or not (0 <= region.order < len(self.regions)):
            raise ValueError(f"region order out of range: {region}")
        reg = self.regions[region.order]
        return BlockGeometry(bounds=reg.bounds, center=reg.center)

    # -- scalar evaluation ---------------------------------------------------

    def value(self, p: Point) -> float:
        reg = self.locate(p)
        if reg is None:
            raise OutsideDomainError(f"point {p} is outside D")
        return self.value_in(reg, p)

    def gradient(self, p: Point) -> Point:
        reg = self.locate(p)
        if reg is None:
            raise OutsideDomainError(f"point {p} is outside D")
        return self.gradient_in(reg, p)

    def value_and_gradient(self, p: Point) -> tuple[float, Point]:
        reg = self.locate(p)
        if reg is None:
            raise OutsideDomainError(f"point {p} is outside D")
        return self.value_in(reg, p), self.gradient_in(reg, p)

    def value_in(self, reg: _Region, p: Point, branch: int = 0) -> float:
        """Evaluate the closed form of a specific region at p.

        ``branch`` forces a branch on the region's internal branch line:
        +1 the escape-side branch, -1 the wrong-side branch, 0 pick by sign.
        Used by seam scans to compare adjacent closed forms at the same point.
        """
        L, g = self.params.L, self.params.gamma
        L2, nu = self.derived.L2, self.nu
        x1, x2 = p
        s1, s2 = reg.center
        base = -reg.rid.index * nu
        kind = reg.rid.kind
        if kind is RegionKind.FINAL_BLOCK:
            d1, d2 = x1 - s1, x2 - s2
            return base + L * d1 * d1 + L * d2 * d2
        if kind is RegionKind.ODD_BLOCK:
            d1, d2 = x1 - s1, x2 - s2
            if branch > 0 or (branch == 0 and d1 > 0):
                return base - g * d1 * d1 + L * d2 * d2
            return base + L2 * d1 * d1 + L * d2 * d2
        if kind is RegionKind.EVEN_BLOCK:
            d1, d2 = x1 - s1, x2 - s2
            if branch > 0 or (branch == 0 and d2 > 0):
                return base + L * d1 * d1 - g * d2 * d2
            return base + L * d1 * d1 + L2 * d2 * d2
        u, w = self._buffer_coords(reg, x1, x2)
        c2 = self._buffer_c2(reg, w, branch)
        return base + _ramp_value(u, self.params) + _blend_value(u, L, c2, self.params.tau) * w * w

    def gradient_in(self, reg: _Region, p: Point, branch: int = 0) -> Point:
        L, g = self.params.L, self.params.gamma
        L2 = self.derived.L2
        x1, x2 = p
        s1, s2 = reg.center
        kind = reg.rid.kind
        if kind is RegionKind.FINAL_BLOCK:
            return (2.0 * L * (x1 - s1), 2.0 * L * (x2 - s2))
        if kind is RegionKind.ODD_BLOCK:
            d1, d2 = x1 - s1, x2 - s2
            if branch > 0 or (branch == 0 and d1 > 0):
                return (-2.0 * g * d1, 2.0 * L * d2)
            return (2.0 * L2 * d1, 2.0 * L * d2)
        if kind is RegionKind.EVEN_BLOCK:
            d1, d2 = x1 - s1, x2 - s2
            if branch > 0 or (branch == 0 and d2 > 0):
                return (2.0 * L * d1, -2.0 * g * d2)
            return (2.0 * L * d1, 2.0 * L2 * d2)
        u, w = self._buffer_coords(reg, x1, x2)
        c2 = self._buffer_c2(reg, w, branch)
        tau = self.params.tau
        du = _ramp_slope(u, self.params) + _blend_slope(u, L, c2, tau) * w * w
        dw = 2.0 * _blend_value(u, L, c2, tau) * w
        if reg.travel_axis == 0:
            return (du, dw)
        return (dw, du)

    def _buffer_coords(self, reg: _Region, x1: float, x2: float) -> tuple[float, float]:
        """(u, w): along-travel coordinate in [tau, 2*tau] and centered cross."""
        if reg.travel_axis == 0:
            return x1 - reg.u_base, x2 - reg.center[1]
        return x2 - reg.u_base, x1 - reg.center[0]

    def _buffer_c2(self, reg: _Region, w: float, branch: int) -> float:
        if reg.into_final:
            return self.params.L
        if branch > 0 or (branch == 0 and w > 0):
            return -self.params.gamma
        return self.derived.L2

    def buffer_branch(self, reg: _Region, w: float, branch: int = 0) -> BufferBranch:
        return BufferBranch(c1=self.params.L, c2=self._buffer_c2(reg, w, branch))

    # -- vectorized evaluation (verification workloads) ----------------------

    def classify_many(self, xy: np.ndarray) -> np.ndarray:
        """Chain orders for an (N, 2) array of points; -1 for outside."""
        x1, x2 = xy[:, 0], xy[:, 1]
        orders = np.full(len(xy), -1, dtype=np.int64)
        unassigned = np.ones(len(xy), dtype=bool)
        for reg in self.regions:
            a, b, c, d = reg.bounds
            m = unassigned & (x1 >= a) & (x1 <= b) & (x2 >= c) & (x2 <= d)
            orders[m] = reg.rid.order
            unassigned &= ~m
        return orders

    def value_many(self, xy: np.ndarray, orders: np.ndarray | None = None) -> np.ndarray:
        v, _ = self._eval_many(xy, orders, want_grad=False)
        return v

    def gradient_many(self, xy: np.ndarray, orders: np.ndarray | None = None) -> np.ndarray:
        _, gr = self._eval_many(xy, orders, want_grad=True)
        return gr

    def _eval_many(self, xy, orders, want_grad):
        if orders is None:
            orders = self.classify_many(xy)
        if np.any(orders < 0):
            bad = int(np.argmax(orders < 0))
            raise OutsideDomainError(f"point {tuple(xy[bad])} is outside D")
        values = np.empty(len(xy))
        grads = np.empty_like(xy) if want_grad else None
        for reg in self.regions:
            m = orders == reg.rid.order
            if not m.any():
                continue
            v, gr = self.eval_region_many(reg, xy[m], want_grad=want_grad)
            values[m] = v
            if want_grad:
                grads[m] = gr
        return values, grads

    def eval_region_many(self, reg: _Region, xy: np.ndarray, branch: int = 0,
                         want_grad: bool = True):
        """Vectorized closed form of one region, with optional forced branch."""
        L, g, tau = self.params.L, self.params.gamma, self.params.tau
        L2, nu = self.derived.L2, self.nu
        x1, x2 = xy[:, 0], xy[:, 1]
        s1, s2 = reg.center
        base = -reg.rid.index * nu
        kind = reg.rid.kind
        grads = np.empty_like(xy) if want_grad else None
        if kind.is_block:
            d1, d2 = x1 - s1, x2 - s2
            if kind is RegionKind.FINAL_BLOCK:
                k1 = np.full(d1.shape, L)
                k2 = np.full(d1.shape, L)
            elif kind is RegionKind.ODD_BLOCK:
                esc = np.full(d1.shape, branch > 0) if branch else (d1 > 0)
                k1 = np.where(esc, -g, L2)
                k2 = np.full(d1.shape, L)
            else:
                esc = np.full(d2.shape, branch > 0) if branch else (d2 > 0)
                k1 = np.full(d1.shape, L)
                k2 = np.where(esc, -g, L2)
            values = base + k1 * d1 * d1 + k2 * d2 * d2
            if want_grad:
                grads[:, 0] = 2.0 * k1 * d1
                grads[:, 1] = 2.0 * k2 * d2
            return values, grads
        if reg.travel_axis == 0:
            u, w = x1 - reg.u_base, x2 - s2
        else:
            u, w = x2 - reg.u_base, x1 - s1
        if reg.into_final:
            c2 = np.full(u.shape, L)
        elif branch:
            c2 = np.full(u.shape, -g if branch > 0 else L2)
        else:
            c2 = np.where(w > 0, -g, L2)
        values = base + _ramp_value(u, self.params) + _blend_value(u, L, c2, tau) * w * w
        if want_grad:
            du = _ramp_slope(u, self.params) + _blend_slope(u, L, c2, tau) * w * w
            dw = 2.0 * _blend_value(u, L, c2, tau) * w
            if reg.travel_axis == 0:
                grads[:, 0], grads[:, 1] = du, dw
            else:
                grads[:, 0], grads[:, 1] = dw, du
        return values, grads

    # -- sampling and bounds --------------------------------------------------

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n points uniform over D (all regions are equal-area squares)."""
        idx = rng.integers(0, len(self.regions), size=n)
        lo = np.array([(r.bounds[0], r.bounds[2]) for r in self.regions])
        side = self.params.tau
        return lo[idx] + side * rng.random((n, 2))

    def gradient_lipschitz_bound(self) -> float:
        """Documented bound on the gradient's Lipschitz constant.

        2*L2 covers every quadratic branch; the second term bounds the
        blend's cross contribution 30*(c1-c2)*(u-2t)^2(u-t)^2/t^5 * w^2
        with |c1-c2| <= L2+gamma and |w| <= tau/2.
        """
        L2, g, tau = self.derived.L2, self.params.gamma, self.params.tau
        return 2.0 * L2 + 30.0 * (L2 + g) * (tau / 2.0) ** 2 / tau


def block_geometry(params: LandscapeParams, region: RegionId) -> BlockGeometry:
    """Bounds and center of one region of the chain."""
    return Landscape(params).geometry(region)


def classify(params: LandscapeParams, p: Point) -> RegionId:
    return Landscape(params).classify(p)
