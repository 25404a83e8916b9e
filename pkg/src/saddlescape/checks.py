"""Independent numerical verification of the landscape.

Everything here treats the landscape as a black box and probes it with
finite differences, seam comparisons, circle probes, and random pair
sampling.  All checks are deterministic given a seed and fan out over
numpy arrays, so the full parameter grid stays fast.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .landscape import Landscape, Point, RegionKind, _Region


@dataclass
class CheckReport:
    name: str
    samples: int
    worst_error: float
    threshold: float
    passed: bool
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "worst_error": self.worst_error,
            "threshold": self.threshold,
            "passed": self.passed,
            "witnesses": self.witnesses,
            "details": self.details,
        }


def _report(name, samples, worst, threshold, witnesses=None, details=None) -> CheckReport:
    return CheckReport(name=name, samples=samples, worst_error=worst, threshold=threshold,
                       passed=bool(worst <= threshold), witnesses=witnesses or [],
                       details=details or {})


def fd_gradient(landscape: Landscape, p: Point, h: float) -> Point:
    """Central-difference gradient; both axis neighbors must lie in D."""
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    x1, x2 = p
    f = landscape.value
    g1 = (f((x1 + h, x2)) - f((x1 - h, x2))) / (2.0 * h)
    g2 = (f((x1, x2 + h)) - f((x1, x2 - h))) / (2.0 * h)
    return (g1, g2)


def _seam_distance(landscape: Landscape, xy: np.ndarray) -> np.ndarray:
    """Per-point distance to the nearest seam line.

    Every seam (region edge or in-region branch line) lies on a line where
    one coordinate is a multiple of tau/2, so the distance to the nearest
    such multiple bounds the seam distance from below.
    """
    half = landscape.params.tau / 2.0
    r = np.mod(xy, half)
    d = np.minimum(r, half - r)
    return d.min(axis=1)


def gradient_check(landscape: Landscape, n_samples: int = 10_000, h: float | None = None,
                   tol: float = 1e-6, seed: int = 0) -> CheckReport:
    """Analytic gradient vs central differences on seam-free interior points."""
    tau = landscape.params.tau
    if h is None:
        h = 1e-5 * tau
    if n_samples == 0:
        return _report("gradient_check", 0, 0.0, tol)
    rng = np.random.default_rng(seed)
    pts = np.empty((0, 2))
    while len(pts) < n_samples:
        cand = landscape.sample_points(2 * n_samples, rng)
        cand = cand[_seam_distance(landscape, cand) > 10.0 * h]
        pts = np.vstack([pts, cand])
    pts = pts[:n_samples]

    grad = landscape.gradient_many(pts)
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    fd = np.empty_like(grad)
    fd[:, 0] = (landscape.value_many(pts + e1) - landscape.value_many(pts - e1)) / (2 * h)
    fd[:, 1] = (landscape.value_many(pts + e2) - landscape.value_many(pts - e2)) / (2 * h)
    scale = np.maximum(1.0, np.abs(grad).max(axis=1))
    err = np.abs(fd - grad).max(axis=1) / scale
    worst = float(err.max())
    witnesses = []
    if worst > tol:
        for i in np.argsort(err)[-3:][::-1]:
            witnesses.append({"point": [float(pts[i, 0]), float(pts[i, 1])],
                              "analytic": [float(g) for g in grad[i]],
                              "fd": [float(g) for g in fd[i]],
                              "rel_error": float(err[i])})
    return _report("gradient_check", n_samples, worst, tol, witnesses,
                   {"h": h, "seed": seed})


def _enumerate_seams(landscape: Landscape):
    """All interior seams as (label, axis, level, lo, hi, side_a, side_b).

    axis is the seam-normal coordinate (0: vertical line x1=level, 1:
    horizontal line x2=level); [lo, hi] is the seam extent along the other
    coordinate.  Each side is (region, forced_branch) for branch-exact
    evaluation at the seam itself.
    """
    seams = []
    regs = landscape.regions
    for a, b in zip(regs, regs[1:]):
        if b.bounds[0] == a.bounds[1]:          # b to the right of a
            lo = max(a.bounds[2], b.bounds[2])
            hi = min(a.bounds[3], b.bounds[3])
            seams.append((f"edge[{a.rid.order}|{b.rid.order}]", 0, a.bounds[1],
                          lo, hi, (a, 0), (b, 0)))
        elif b.bounds[2] == a.bounds[3]:        # b above a
            lo = max(a.bounds[0], b.bounds[0])
            hi = min(a.bounds[1], b.bounds[1])
            seams.append((f"edge[{a.rid.order}|{b.rid.order}]", 1, a.bounds[3],
                          lo, hi, (a, 0), (b, 0)))
        else:
            raise AssertionError("chain neighbours must share an edge")
    for reg in regs:
        kind = reg.rid.kind
        if kind is RegionKind.ODD_BLOCK:
            seams.append((f"branch[{reg.rid.order}]", 0, reg.center[0],
                          reg.bounds[2], reg.bounds[3], (reg, +1), (reg, -1)))
        elif kind is RegionKind.EVEN_BLOCK:
            seams.append((f"branch[{reg.rid.order}]", 1, reg.center[1],
                          reg.bounds[0], reg.bounds[1], (reg, +1), (reg, -1)))
        elif kind.is_buffer:
            if reg.travel_axis == 0:
                seams.append((f"branch[{reg.rid.order}]", 1, reg.center[1],
                              reg.bounds[0], reg.bounds[1], (reg, +1), (reg, -1)))
            else:
                seams.append((f"branch[{reg.rid.order}]", 0, reg.center[0],
                              reg.bounds[2], reg.bounds[3], (reg, +1), (reg, -1)))
    return seams


def _eval_side(landscape: Landscape, side: tuple[_Region, int], xy: np.ndarray):
    reg, branch = side
    return landscape.eval_region_many(reg, xy, branch=branch)


def seam_scan(landscape: Landscape, samples_per_seam: int = 1000,
              tol_value: float = 1e-9, tol_grad: float = 1e-5,
              seed: int = 0) -> CheckReport:
    """Branch agreement at every interior seam.

    At each sampled seam point the two adjacent closed forms are evaluated
    at the seam itself (value and gradient), and a central difference taken
    across the seam (offsets 1e-7*tau) is compared against both analytic
    normal derivatives.  worst_error is the largest error normalized by its
    tolerance, so the report threshold is 1.
    """
    if samples_per_seam == 0:
        return _report("seam_scan", 0, 0.0, 1.0)
    rng = np.random.default_rng(seed)
    tau = landscape.params.tau
    off = 1e-7 * tau
    worst_v = 0.0
    worst_g = 0.0
    worst_fd = 0.0
    witnesses = []
    n_total = 0
    for label, axis, level, lo, hi, side_a, side_b in _enumerate_seams(landscape):
        t = lo + (hi - lo) * rng.random(samples_per_seam)
        xy = np.empty((samples_per_seam, 2))
        xy[:, axis] = level
        xy[:, 1 - axis] = t
        va, ga = _eval_side(landscape, side_a, xy)
        vb, gb = _eval_side(landscape, side_b, xy)
        n_total += samples_per_seam

        v_err = np.abs(va - vb) / np.maximum(1.0, np.abs(va))
        g_err = np.abs(ga - gb).max(axis=1) / np.maximum(1.0, np.abs(ga).max(axis=1))

        step = np.zeros(2)
        step[axis] = off
        fd = (landscape.value_many(xy + step) - landscape.value_many(xy - step)) / (2 * off)
        gn = ga[:, axis]
        fd_err = np.abs(fd - gn) / np.maximum(1.0, np.abs(gn))

        for err, tol, tag in ((v_err, tol_value, "value"),
                              (g_err, tol_grad, "gradient"),
                              (fd_err, tol_grad, "fd")):
            w = float(err.max())
            if tag == "value":
                worst_v = max(worst_v, w)
            elif tag == "gradient":
                worst_g = max(worst_g, w)
            else:
                worst_fd = max(worst_fd, w)
            if w > tol:
                i = int(np.argmax(err))
                witnesses.append({"seam": label, "kind": tag,
                                  "point": [float(xy[i, 0]), float(xy[i, 1])],
                                  "error": w})
    worst = max(worst_v / tol_value, worst_g / tol_grad, worst_fd / tol_grad)
    return _report("seam_scan", n_total, worst, 1.0, witnesses,
                   {"worst_value_jump": worst_v, "worst_gradient_jump": worst_g,
                    "worst_fd_mismatch": worst_fd, "tol_value": tol_value,
                    "tol_grad": tol_grad, "offset": off, "seed": seed})


def stationary_check(landscape: Landscape, n_angles: int = 256) -> CheckReport:
    """Exact zero gradient at every block center plus curvature signatures.

    Saddle centers must see both strictly lower and strictly higher values
    on a circle of radius 1e-3*tau; the final center only higher ones.
    worst_error counts violated assertions.
    """
    tau = landscape.params.tau
    r = 1e-3 * tau
    theta = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    ring = r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    violations = []
    n_saddles = 0
    n_minima = 0
    samples = 0
    for reg in landscape.regions:
        if not reg.rid.kind.is_block:
            continue
        center = reg.center
        g = landscape.gradient(center)
        samples += 1
        if not (g[0] == 0.0 and g[1] == 0.0):
            violations.append({"region": reg.rid.order, "kind": "nonzero_gradient",
                               "gradient": [g[0], g[1]]})
        fc = landscape.value(center)
        pts = np.asarray(center) + ring
        vals = landscape.value_many(pts)
        samples += n_angles
        if reg.rid.kind is RegionKind.FINAL_BLOCK:
            n_minima += 1
            if not np.all(vals > fc):
                violations.append({"region": reg.rid.order, "kind": "not_local_minimum"})
        else:
            n_saddles += 1
            if not (np.any(vals > fc) and np.any(vals < fc)):
                violations.append({"region": reg.rid.order, "kind": "not_saddle"})
    return _report("stationary_check", samples, float(len(violations)), 0.0,
                   violations, {"saddles": n_saddles, "minima": n_minima,
                                "probe_radius": r})


def global_minimum_check(landscape: Landscape, n_points: int = 1_000_000,
                         seed: int = 0) -> CheckReport:
    """The final-block center is the sampled global minimum over D."""
    rng = np.random.default_rng(seed)
    pts = landscape.sample_points(n_points, rng)
    vals = landscape.value_many(pts)
    center = landscape.regions[-1].center
    fc = landscape.value(center)
    at_or_below = vals <= fc
    n_bad = int(at_or_below.sum())
    witnesses = []
    if n_bad:
        for i in np.nonzero(at_or_below)[0][:3]:
            witnesses.append({"point": [float(pts[i, 0]), float(pts[i, 1])],
                              "value": float(vals[i]), "center_value": fc})
    return _report("global_minimum", n_points, float(n_bad), 0.0, witnesses,
                   {"center": list(center), "center_value": fc,
                    "sampled_min": float(vals.min()), "seed": seed})


def lipschitz_probe(landscape: Landscape, n_pairs: int = 100_000, seed: int = 0) -> float:
    """Max gradient-difference ratio over random same-region point pairs."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    regs = landscape.regions
    idx = rng.integers(0, len(regs), size=n_pairs)
    lo = np.array([(r.bounds[0], r.bounds[2]) for r in regs])[idx]
    tau = landscape.params.tau
    a = lo + tau * rng.random((n_pairs, 2))
    b = lo + tau * rng.random((n_pairs, 2))
    orders = np.array([r.rid.order for r in regs])[idx]
    ga = landscape.gradient_many(a, orders)
    gb = landscape.gradient_many(b, orders)
    dist = np.linalg.norm(a - b, axis=1)
    keep = dist > 0
    ratios = np.linalg.norm(ga[keep] - gb[keep], axis=1) / dist[keep]
    return float(ratios.max())


def lipschitz_report(landscape: Landscape, n_pairs: int = 100_000, seed: int = 0) -> CheckReport:
    est = lipschitz_probe(landscape, n_pairs, seed)
    bound = landscape.gradient_lipschitz_bound()
    return _report("gradient_lipschitz", n_pairs, est, bound, details={"seed": seed})


def run_all_checks(landscape: Landscape, n_grad_samples: int = 10_000,
                   samples_per_seam: int = 1000, n_min_points: int = 1_000_000,
                   n_pairs: int = 100_000, seed: int = 0) -> list[CheckReport]:
    return [
        gradient_check(landscape, n_grad_samples, seed=seed),
        seam_scan(landscape, samples_per_seam, seed=seed),
        stationary_check(landscape),
        global_minimum_check(landscape, n_min_points, seed=seed),
        lipschitz_report(landscape, n_pairs, seed=seed),
    ]
