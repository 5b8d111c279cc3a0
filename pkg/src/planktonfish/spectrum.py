"""Characteristic quasi-polynomial of the linearized model.

Evaluates Q(lambda) = det(lambda*E - A - exp(-lambda*tau1) B1
- exp(-lambda*tau2) B2), applies the delay-independent stability
classification, and locates roots numerically with the argument
principle plus Newton polishing.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .model import LinearizedSystem, ModelParams, coexistence_threshold

Rect = tuple[float, float, float, float]  # (re_min, re_max, im_min, im_max)

ROOT_RESIDUAL_TOL = 1e-9
_MAX_DEPTH = 12


@dataclass(frozen=True)
class StabilityVerdict:
    """Delay-independent classification of the plankton-only point."""

    kind: str  # AsymptoticallyStable | Unstable | DelayDependent
    witness: str


@dataclass
class RootReport:
    roots: list[complex]
    residuals: list[float]
    rightmost_real_part: float
    search_region: Rect
    counts: list[tuple[Rect, int]] = field(default_factory=list)


def eval_Q(lam: complex, lin: LinearizedSystem, p: ModelParams) -> complex:
    """Direct 3x3 complex determinant of the characteristic matrix."""
    m = (lam * np.eye(3) - lin.A
         - cmath.exp(-lam * p.tau1) * lin.B1
         - cmath.exp(-lam * p.tau2) * lin.B2)
    return complex(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))


def eval_factors(lam: complex, lin: LinearizedSystem,
                 p: ModelParams) -> tuple[complex, complex]:
    """The two factors whose product is Q."""
    a = p.r * lin.x0 / p.K
    e1t = cmath.exp(-lam * p.tau1)
    q1 = ((lam + a) * (lam + p.d1 - p.d1 * e1t)
          + p.c1 * p.d1 * lin.y0 * e1t)
    q2 = lam + p.d2 - p.e2 * p.c2 * lin.y0 * cmath.exp(-lam * p.tau2)
    return q1, q2


def _q_vec(lam: np.ndarray, lin: LinearizedSystem, p: ModelParams) -> np.ndarray:
    # vectorized Q via the factorization (identity with eval_Q is tested)
    a = p.r * lin.x0 / p.K
    e1t = np.exp(-lam * p.tau1)
    q1 = (lam + a) * (lam + p.d1 - p.d1 * e1t) + p.c1 * p.d1 * lin.y0 * e1t
    q2 = lam + p.d2 - p.e2 * p.c2 * lin.y0 * np.exp(-lam * p.tau2)
    return q1 * q2


def _dq(lam: complex, lin: LinearizedSystem, p: ModelParams) -> complex:
    # product-rule derivative over the factorization
    a = p.r * lin.x0 / p.K
    e1t = cmath.exp(-lam * p.tau1)
    e2t = cmath.exp(-lam * p.tau2)
    q1 = (lam + a) * (lam + p.d1 - p.d1 * e1t) + p.c1 * p.d1 * lin.y0 * e1t
    q2 = lam + p.d2 - p.e2 * p.c2 * lin.y0 * e2t
    dq1 = ((lam + p.d1 - p.d1 * e1t)
           + (lam + a) * (1.0 + p.d1 * p.tau1 * e1t)
           - p.c1 * p.d1 * lin.y0 * p.tau1 * e1t)
    dq2 = 1.0 + p.e2 * p.c2 * lin.y0 * p.tau2 * e2t
    return dq1 * q2 + q1 * dq2


def lemma_classify(p: ModelParams) -> StabilityVerdict:
    """Delay-independent verdict for the plankton-only equilibrium.

    Strict inequalities on both sides; anything between the instability
    and stability thresholds is reported as delay dependent.
    """
    u = p.e1 * p.c1 * p.K
    if p.e1 * p.c1 <= 0.0:
        raise DomainError("classification requires e1*c1 > 0")
    if p.d1 > u:
        raise DomainError(f"classification requires d1 <= e1*c1*K ({p.d1} > {u})")
    t = coexistence_threshold(p)
    lower = u * max(1.0 / 3.0, -math.inf if t == -math.inf else t / u)
    if lower < p.d1 < u:
        return StabilityVerdict(
            "AsymptoticallyStable",
            f"e1*c1*K*max(1/3, 1 - c1*d2/(e2*c2*r)) = {lower:.17g} "
            f"< d1 = {p.d1:.17g} < e1*c1*K = {u:.17g}")
    if p.d1 < t:
        return StabilityVerdict(
            "Unstable",
            f"d1 = {p.d1:.17g} < e1*c1*K*(1 - c1*d2/(e2*c2*r)) = {t:.17g}")
    return StabilityVerdict(
        "DelayDependent",
        f"d1 = {p.d1:.17g} in the gap [{t:.17g}, {lower:.17g}]")


def default_region(p: ModelParams) -> Rect:
    scale = 10.0 * max(p.r, p.d1, p.d2)
    return (-scale, 1.0, -50.0, 50.0)


def _boundary(rect: Rect, n: int) -> np.ndarray:
    re0, re1, im0, im1 = rect
    bottom = np.linspace(re0, re1, n, endpoint=False) + 1j * im0
    right = re1 + 1j * np.linspace(im0, im1, n, endpoint=False)
    top = np.linspace(re1, re0, n, endpoint=False) + 1j * im1
    left = re0 + 1j * np.linspace(im1, im0, n, endpoint=False)
    return np.concatenate([bottom, right, top, left])


def _winding(rect: Rect, lin, p, depth: int = 0) -> int:
    """Winding number of Q around the rectangle boundary.

    Phase increments are tracked on progressively denser samplings until
    no step exceeds pi/2; near-zero boundary values trigger a jittered
    (slightly enlarged) rectangle.
    """
    if depth > _MAX_DEPTH:
        raise RuntimeError("root scan: contour jitter depth exceeded")
    size = rect[1] - rect[0] + rect[3] - rect[2]
    n = 64
    while n <= 8192:
        z = _boundary(rect, n)
        q = _q_vec(z, lin, p)
        aq = np.abs(q)
        if np.min(aq) < 1e-12 * max(float(np.median(aq)), 1e-300):
            break  # boundary essentially hits a root; jitter below
        dphi = np.angle(np.roll(q, -1) / q)
        if np.max(np.abs(dphi)) <= 0.5 * np.pi:
            return int(round(np.sum(dphi) / (2.0 * np.pi)))
        n *= 2
    # a root sits on or very near the boundary: enlarge slightly and retry
    pad = size / 1024.0 * 2.0 ** depth
    grown = (rect[0] - pad, rect[1] + pad, rect[2] - pad, rect[3] + pad)
    return _winding(grown, lin, p, depth + 1)


def _newton(z0: complex, lin, p, tol: float = 1e-12,
            max_iter: int = 50) -> complex | None:
    z = z0
    for _ in range(max_iter):
        q1, q2 = eval_factors(z, lin, p)
        dq = _dq(z, lin, p)
        if dq == 0:
            return None
        step = q1 * q2 / dq
        z -= step
        if abs(step) <= tol * (1.0 + abs(z)):
            return z
    return None


def _in_rect(z: complex, rect: Rect, slack: float = 1e-9) -> bool:
    re0, re1, im0, im1 = rect
    w = slack * (abs(re1 - re0) + abs(im1 - im0) + 1.0)
    return re0 - w <= z.real <= re1 + w and im0 - w <= z.imag <= im1 + w


def _roots_in_rect(rect: Rect, lin, p, depth: int = 0) -> list[complex]:
    count = _winding(rect, lin, p)
    if count == 0:
        return []
    center = complex(0.5 * (rect[0] + rect[1]), 0.5 * (rect[2] + rect[3]))
    root = _newton(center, lin, p)
    if (count == 1 and root is not None and _in_rect(root, rect)
            and abs(_q_vec(np.array([root]), lin, p)[0]) <= ROOT_RESIDUAL_TOL):
        return [root]
    tiny = (rect[1] - rect[0] < 1e-8) and (rect[3] - rect[2] < 1e-8)
    if depth >= _MAX_DEPTH or tiny:
        if root is not None and _in_rect(root, rect):
            return [root]
        return []
    rm = 0.5 * (rect[0] + rect[1])
    im = 0.5 * (rect[2] + rect[3])
    quads = [(rect[0], rm, rect[2], im), (rm, rect[1], rect[2], im),
             (rect[0], rm, im, rect[3]), (rm, rect[1], im, rect[3])]
    found: list[complex] = []
    for quad in quads:
        found.extend(_roots_in_rect(quad, lin, p, depth + 1))
    return found


def root_scan(lin: LinearizedSystem, p: ModelParams,
              region: Rect | None = None,
              grid: tuple[int, int] = (8, 8)) -> RootReport:
    """Locate roots of Q in a rectangle of the complex plane.

    Argument-principle winding counts over a coarse grid of
    sub-rectangles select candidates, which are then resolved by
    adaptive subdivision and Newton polishing.  Every reported root has
    residual |Q| <= 1e-9.
    """
    if region is None:
        region = default_region(p)
    re0, re1, im0, im1 = region
    if not all(math.isfinite(v) for v in region) or re0 >= re1 or im0 >= im1:
        raise DomainError(f"invalid search region {region!r}")
    nr, ni = grid
    if nr < 8 or ni < 8:
        raise DomainError("grid resolution must be at least 8x8")
    re_edges = np.linspace(re0, re1, nr + 1)
    im_edges = np.linspace(im0, im1, ni + 1)
    counts: list[tuple[Rect, int]] = []
    roots: list[complex] = []
    for i in range(nr):
        for j in range(ni):
            sub = (float(re_edges[i]), float(re_edges[i + 1]),
                   float(im_edges[j]), float(im_edges[j + 1]))
            c = _winding(sub, lin, p)
            counts.append((sub, c))
            if c != 0:
                roots.extend(_roots_in_rect(sub, lin, p))
    polished: list[complex] = []
    residuals: list[float] = []
    for z in roots:
        res = abs(eval_Q(z, lin, p))
        if res > ROOT_RESIDUAL_TOL:
            continue
        if any(abs(z - w) <= 1e-6 * (1.0 + abs(w)) for w in polished):
            continue
        polished.append(z)
        residuals.append(res)
    rightmost = max((z.real for z in polished), default=-math.inf)
    return RootReport(roots=polished, residuals=residuals,
                      rightmost_real_part=rightmost,
                      search_region=region, counts=counts)
