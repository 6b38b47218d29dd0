"""Piecewise paths in the plane and quadrature of multivalued power products along them.

A path is a chain of straight segments and circular arcs.  Logarithms of
``u - s`` for the tracked singular points ``s`` are continued along the path
from a base point by a "skeleton": each piece is cut into sub-pieces short
compared with their distance to every tracked point, logs are chained from
knot to knot with principal logs of ratios, and a quadrature node gets the log
of its nearest knot plus the principal log of the ratio.  The branch is thus
a property of the path, not of the quadrature nodes, and a quadrature
schedule can be frozen and reused when the geometry moves slightly.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

# Gauss-Kronrod 7/15 on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG7 = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG7[:-1], _WG7[::-1]])

_ARC_MAX_SWEEP = math.pi / 4


class ContourError(ValueError):
    """Malformed path: open where a cycle is required, through a singularity, self-intersecting."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature ran out of panels before reaching the tolerance."""


# ---------------------------------------------------------------------------
# primitives


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    def point(self, t):
        return self.start + np.asarray(t) * (self.end - self.start)

    def deriv(self, t):
        return np.full(np.shape(t), self.end - self.start, dtype=complex)

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)

    def transformed(self, scale: complex, shift: complex) -> "Segment":
        return Segment(scale * self.start + shift, scale * self.end + shift)

    def to_dict(self) -> dict:
        return {"type": "segment", "start": [self.start.real, self.start.imag],
                "end": [self.end.real, self.end.imag]}


@dataclass(frozen=True)
class Arc:
    """``center + radius * exp(i theta)`` for theta from ``theta0`` to ``theta1``."""

    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, t):
        th = self.theta0 + np.asarray(t) * (self.theta1 - self.theta0)
        return self.center + self.radius * np.exp(1j * th)

    def deriv(self, t):
        th = self.theta0 + np.asarray(t) * (self.theta1 - self.theta0)
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)

    @property
    def start(self) -> complex:
        return complex(self.point(0.0))

    @property
    def end(self) -> complex:
        return complex(self.point(1.0))

    @property
    def length(self) -> float:
        return abs(self.radius * (self.theta1 - self.theta0))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta1, self.theta0)

    def transformed(self, scale: complex, shift: complex) -> "Arc":
        s = complex(scale)
        return Arc(s * self.center + shift, self.radius * abs(s),
                   self.theta0 + math.atan2(s.imag, s.real), self.theta1 + math.atan2(s.imag, s.real))

    def to_dict(self) -> dict:
        return {"type": "arc", "center": [self.center.real, self.center.imag], "radius": self.radius,
                "theta0": self.theta0, "theta1": self.theta1}


def _piece_from_dict(d: dict):
    if d["type"] == "segment":
        return Segment(complex(*d["start"]), complex(*d["end"]))
    if d["type"] == "arc":
        return Arc(complex(*d["center"]), float(d["radius"]), float(d["theta0"]), float(d["theta1"]))
    raise ValueError(f"unknown piece type {d['type']!r}")


@dataclass(frozen=True)
class Path:
    """Chain of pieces.  Branches are fixed at the start of piece ``base_piece``."""

    pieces: tuple
    base_piece: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise ContourError("empty path")
        if not 0 <= self.base_piece < len(self.pieces):
            raise ContourError("base_piece out of range")
        for p, q in zip(self.pieces[:-1], self.pieces[1:]):
            if abs(p.end - q.start) > 1e-12 * max(1.0, abs(p.end)):
                raise ContourError(f"pieces do not join: {p.end} vs {q.start}")

    @property
    def start(self) -> complex:
        return complex(self.pieces[0].start)

    @property
    def end(self) -> complex:
        return complex(self.pieces[-1].end)

    @property
    def base_point(self) -> complex:
        return complex(self.pieces[self.base_piece].start)

    @property
    def closed(self) -> bool:
        return abs(self.start - self.end) <= 1e-12 * max(1.0, abs(self.start))

    @property
    def length(self) -> float:
        return sum(p.length for p in self.pieces)

    def reversed(self) -> "Path":
        pieces = tuple(p.reversed() for p in reversed(self.pieces))
        # base stays at the same point: old start of base piece = new end of a piece
        m = len(self.pieces)
        return Path(pieces, (m - self.base_piece) % m)

    def transformed(self, scale: complex = 1.0, shift: complex = 0.0) -> "Path":
        return Path(tuple(p.transformed(scale, shift) for p in self.pieces), self.base_piece)

    def to_json(self) -> str:
        return json.dumps({"base_piece": self.base_piece, "pieces": [p.to_dict() for p in self.pieces]})

    @classmethod
    def from_json(cls, text: str) -> "Path":
        d = json.loads(text)
        return cls(tuple(_piece_from_dict(p) for p in d["pieces"]), int(d.get("base_piece", 0)))

    def sample(self, per_piece: int = 64) -> np.ndarray:
        """Points along the path, for plotting and intersection tests."""
        t = np.linspace(0.0, 1.0, per_piece + 1)
        return np.concatenate([p.point(t)[:-1] for p in self.pieces] + [np.array([self.end])])


# ---------------------------------------------------------------------------
# constructors


def pochhammer_loop(a: float, b: float, clearance: float | None = None,
                    bridge: str = "arc", height: float | None = None) -> Path:
    """Closed Pochhammer loop around the real points ``a < b``.

    Based at ``a + clearance``; goes around ``b`` counterclockwise, around
    ``a`` counterclockwise, around ``b`` clockwise, around ``a`` clockwise,
    travelling between the small circles along a bridge in the upper half
    plane.  ``bridge="arc"`` uses the semicircle over ``[a, b]``;
    ``bridge="box"`` a rectangular detour of the given ``height``.
    """
    a, b = float(a), float(b)
    if not b > a:
        raise ContourError(f"pochhammer_loop needs a < b, got {a}, {b}")
    r = 0.25 * (b - a) if clearance is None else float(clearance)
    if not 0 < r < 0.5 * (b - a):
        raise ContourError(f"clearance {r} must lie in (0, (b-a)/2)")
    A, B = complex(a + r), complex(b - r)
    if bridge == "arc":
        mid, rho = 0.5 * (a + b), 0.5 * (b - a) - r
        go = [Arc(complex(mid), rho, math.pi, 0.0)]
    elif bridge == "box":
        h = 0.5 * (b - a) if height is None else float(height)
        if h <= 0:
            raise ContourError("bridge height must be positive")
        go = [Segment(A, A + 1j * h), Segment(A + 1j * h, B + 1j * h), Segment(B + 1j * h, B)]
    else:
        raise ValueError(f"unknown bridge style {bridge!r}")
    back = [p.reversed() for p in reversed(go)]
    pieces = (
        go + [Arc(complex(b), r, math.pi, 3 * math.pi)]
        + back + [Arc(complex(a), r, 0.0, 2 * math.pi)]
        + go + [Arc(complex(b), r, math.pi, -math.pi)]
        + back + [Arc(complex(a), r, 0.0, -2 * math.pi)]
    )
    return Path(tuple(pieces), 0)


def lasso_loop(anchor: float, target: float, clearance: float) -> Path:
    """Loop from ``anchor`` out to the real point ``target < anchor``, once around it
    counterclockwise and back along the same tail.

    The tail is the upper semicircle from ``anchor`` to ``target + clearance``,
    so it winds zero times around every real point strictly between them.
    Tails of lassos sharing an anchor are tangent there and nowhere else.
    The branch is based at the start of the small circle.
    """
    anchor, target, r = float(anchor), float(target), float(clearance)
    if not target + r < anchor:
        raise ContourError("lasso target must lie left of the anchor by more than the clearance")
    P = target + r
    centre, rho = 0.5 * (anchor + P), 0.5 * (anchor - P)
    tail = Arc(complex(centre), rho, 0.0, math.pi)
    circle = Arc(complex(target), r, 0.0, 2 * math.pi)
    return Path((tail, circle, tail.reversed()), 1)


def paths_intersect(paths, per_piece: int = 256, tol: float = 0.0, ignore=()) -> bool:
    """Polyline test for crossings or touching between distinct paths.

    Points listed in ``ignore`` (shared endpoints such as a lasso anchor) are
    excluded by discarding polyline segments within ``tol`` of them.
    """
    polys = [p.sample(per_piece) for p in paths]
    ign = np.asarray(list(ignore), dtype=complex)
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if _polylines_cross(polys[i], polys[j], ign, tol):
                return True
    return False


def _polylines_cross(P, Q, ignore, tol) -> bool:
    p0, p1 = P[:-1], P[1:]
    q0, q1 = Q[:-1], Q[1:]
    if ignore.size:
        keep_p = np.all(np.abs(p0[:, None] - ignore[None]) > tol, axis=1) & np.all(np.abs(p1[:, None] - ignore[None]) > tol, axis=1)
        keep_q = np.all(np.abs(q0[:, None] - ignore[None]) > tol, axis=1) & np.all(np.abs(q1[:, None] - ignore[None]) > tol, axis=1)
        p0, p1, q0, q1 = p0[keep_p], p1[keep_p], q0[keep_q], q1[keep_q]

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    d = p1 - p0
    e = q1 - q0
    # block over P to bound memory
    for s in range(0, len(p0), 512):
        A, D = p0[s:s + 512, None], d[s:s + 512, None]
        den = cross(D, e[None])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = cross(q0[None] - A, e[None]) / den
            u = cross(q0[None] - A, D) / den
        hit = (np.abs(den) > 0) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
        if np.any(hit):
            return True
    return False


# ---------------------------------------------------------------------------
# branch tracking


def _dist_lower_bound(piece, t0, t1, s):
    z0, z1 = complex(piece.point(t0)), complex(piece.point(t1))
    chord = _dist_point_segment(s, z0, z1)
    if isinstance(piece, Segment):
        return chord
    sweep = abs(piece.theta1 - piece.theta0) * (t1 - t0)
    sag = piece.radius * (1.0 - math.cos(0.5 * min(sweep, math.pi)))
    return max(abs(abs(s - piece.center) - piece.radius), chord - sag)


def _dist_point_segment(s, z0, z1):
    d = z1 - z0
    L2 = abs(d) ** 2
    if L2 == 0:
        return abs(s - z0)
    t = ((s - z0) * d.conjugate()).real / L2
    t = min(1.0, max(0.0, t))
    return abs(s - (z0 + t * d))


def _piece_knots(piece, points, scale) -> np.ndarray:
    """Knot parameters in [0, 1] such that each sub-piece is short relative to its
    distance from every tracked point (points at piece endpoints are exempt)."""
    z0, z1 = complex(piece.start), complex(piece.end)
    eps = 1e-13 * scale
    active = [s for s in points if abs(s - z0) > eps and abs(s - z1) > eps]
    if isinstance(piece, Arc):
        n0 = max(1, math.ceil(abs(piece.theta1 - piece.theta0) / _ARC_MAX_SWEEP - 1e-12))
    else:
        n0 = 1
    stack = [(k / n0, (k + 1) / n0) for k in range(n0 - 1, -1, -1)]
    knots = [0.0]
    while stack:
        t0, t1 = stack.pop()
        ln = piece.length * (t1 - t0)
        ok = True
        for s in active:
            d = _dist_lower_bound(piece, t0, t1, s)
            if d <= 1e-14 * scale:
                ok = False
                if t1 - t0 < 1e-12:
                    raise ContourError(f"path passes through the singular point {s}")
                break
            if ln > 0.5 * d:
                ok = False
                break
        if ok:
            knots.append(t1)
        else:
            tm = 0.5 * (t0 + t1)
            stack.append((tm, t1))
            stack.append((t0, tm))
    return np.array(knots)


class BranchTracker:
    """Continuation of ``log(u - s)`` along a path for a fixed set of points ``s``.

    ``logs_at(piece, t)`` returns the continued logs, an array of shape
    ``(len(t), len(points))``; at the base point they equal ``base_logs``
    (principal logs by default).
    """

    def __init__(self, path: Path, points, base_logs=None):
        self.path = path
        self.points = np.atleast_1d(np.asarray(points, dtype=complex))
        P = self.points.size
        bp = path.base_point
        if base_logs is None:
            base_logs = np.log(bp - self.points) if P else np.zeros(0, complex)
        base_logs = np.asarray(base_logs, dtype=complex).reshape(P)
        if P and np.any(np.abs(bp - self.points) == 0):
            raise ContourError("base point coincides with a tracked point")
        scale = max(1.0, float(np.max(np.abs(self.points))) if P else 1.0, abs(bp))
        pts = [complex(s) for s in self.points]
        m = len(path.pieces)
        self.knots: list[np.ndarray] = [None] * m
        self.knot_u: list[np.ndarray] = [None] * m
        self.knot_logs: list[np.ndarray] = [None] * m
        for k, piece in enumerate(path.pieces):
            tk = _piece_knots(piece, pts, scale) if P else np.array([0.0, 1.0])
            self.knots[k] = tk
            self.knot_u[k] = piece.point(tk)
        # forward from the base
        cur = base_logs.copy()
        for k in range(path.base_piece, m):
            cur = self._chain(k, cur, forward=True)
        cur = base_logs.copy()
        for k in range(path.base_piece - 1, -1, -1):
            cur = self._chain(k, cur, forward=False)

    def _chain(self, k, start_logs, forward):
        u = self.knot_u[k]
        n = u.size
        L = np.full((n, self.points.size), np.nan + 0j)
        idx = range(n) if forward else range(n - 1, -1, -1)
        prev_u, prev_L = None, start_logs
        for i in idx:
            d = u[i] - self.points
            if prev_u is None:
                L[i] = prev_L
            else:
                pd = prev_u - self.points
                with np.errstate(divide="ignore", invalid="ignore"):
                    L[i] = prev_L + np.log(d / pd)
                zero = d == 0
                if np.any(zero):
                    # endpoint singularity: only allowed at the ends of the path
                    last = (forward and k == len(self.path.pieces) - 1 and i == n - 1) or (
                        not forward and k == 0 and i == 0)
                    if not last:
                        raise ContourError("path passes through a tracked point")
                    L[i, zero] = np.nan
                bad_prev = pd == 0
                if np.any(bad_prev):
                    raise ContourError("path passes through a tracked point")
            prev_u, prev_L = u[i], L[i]
        self.knot_logs[k] = L
        return prev_L

    def logs_at(self, k: int, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        u = self.path.pieces[k].point(t)
        tk, uk, Lk = self.knots[k], self.knot_u[k], self.knot_logs[k]
        if self.points.size == 0:
            return np.zeros((t.size, 0), complex)
        j = np.clip(np.searchsorted(tk, t, side="right") - 1, 0, tk.size - 2)
        dl = np.abs(uk[j][:, None] - self.points[None])
        dr = np.abs(uk[j + 1][:, None] - self.points[None])
        use_right = dr > dl
        ref_u = np.where(use_right, uk[j + 1][:, None], uk[j][:, None])
        ref_L = np.where(use_right, Lk[j + 1], Lk[j])
        return ref_L + np.log((u[:, None] - self.points[None]) / (ref_u - self.points[None]))


# ---------------------------------------------------------------------------
# integrands


@dataclass
class MultiPowerIntegrand:
    """``prod_j (u - s_j)^{e_j}`` times an optional holomorphic ``multiplier(u)``.

    ``base_log`` fixes the branch: the value of ``sum_j e_j log(u - s_j)`` at
    ``base_point``.  Default is the sum of principal logs.
    """

    singularities: tuple
    exponents: tuple
    base_point: complex | None = None
    base_log: complex | None = None
    multiplier: object = None

    def __post_init__(self):
        self.singularities = np.asarray(self.singularities, dtype=complex)
        self.exponents = np.asarray(self.exponents, dtype=complex)
        if self.singularities.shape != self.exponents.shape:
            raise ValueError("singularities and exponents differ in length")

    def offset_for(self, base_point: complex) -> complex:
        """Constant added to the continued principal-based log sum."""
        if self.base_log is None:
            return 0j
        if self.base_point is not None and abs(self.base_point - base_point) > 1e-12 * max(1.0, abs(base_point)):
            raise ContourError("integrand base point differs from the path base point")
        principal = np.sum(self.exponents * np.log(base_point - self.singularities))
        return complex(self.base_log) - complex(principal)

    def values(self, u, logs, offset=0j):
        with np.errstate(invalid="ignore"):
            out = np.exp(logs @ self.exponents + offset)
        out = np.where(np.isnan(out), 0.0, out)
        if self.multiplier is not None:
            out = out * self.multiplier(u)
        return out


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod along a path


@dataclass
class QuadInfo:
    schedule: tuple            # ((piece, t0, t1), ...) sorted
    error: float
    n_panels: int
    l1: float = 0.0


def _panel_eval(path, tracker, f, offset, k, t0, t1):
    half = 0.5 * (t1 - t0)
    t = 0.5 * (t0 + t1) + half * GK_NODES
    u = path.pieces[k].point(t)
    du = path.pieces[k].deriv(t) * half
    vals = f.values(u, tracker.logs_at(k, t), offset) * du
    K = np.dot(GK_WEIGHTS, vals)
    G = np.dot(G_WEIGHTS, vals)
    return complex(K), float(abs(K - G)), float(np.dot(GK_WEIGHTS, np.abs(vals)))


def _initial_panels(path):
    out = []
    for k, piece in enumerate(path.pieces):
        if isinstance(piece, Arc):
            n0 = max(2, math.ceil(abs(piece.theta1 - piece.theta0) / _ARC_MAX_SWEEP - 1e-12))
        else:
            n0 = 2
        out.extend((k, i / n0, (i + 1) / n0) for i in range(n0))
    return out


def _adaptive(evaluate, initial, tol, max_panels):
    heap = []
    store = {}
    for key in initial:
        K, E, A = evaluate(*key)
        store[key] = (K, E, A)
        heapq.heappush(heap, (-E, key))
    eps = np.finfo(float).eps
    while True:
        total = sum(v[0] for v in store.values())
        err = sum(v[1] for v in store.values())
        l1 = sum(v[2] for v in store.values())
        target = max(tol * max(abs(total), 1e-6 * l1), 50 * eps * l1)
        if err <= target:
            break
        if len(store) >= max_panels:
            raise QuadratureError(f"no convergence with {len(store)} panels: err {err:.3e} > {target:.3e}")
        negE, key = heapq.heappop(heap)
        k, t0, t1 = key
        del store[key]
        tm = 0.5 * (t0 + t1)
        for child in ((k, t0, tm), (k, tm, t1)):
            K, E, A = evaluate(*child)
            store[child] = (K, E, A)
            heapq.heappush(heap, (-E, child))
    keys = tuple(sorted(store))
    total = 0j
    for key in keys:
        total += store[key][0]
    return total, QuadInfo(keys, err, len(keys), l1)


def _check_closed(path):
    if not path.closed:
        raise ContourError("integration path is not closed")


def integrate_branch_tracked(f: MultiPowerIntegrand, path: Path, tol: float = 1e-10,
                             schedule=None, full_output: bool = False, max_panels: int = 20000):
    """Integral of the multivalued ``f`` over the closed ``path``, branches continued
    from the path base point.  A previously returned ``schedule`` skips adaptivity."""
    _check_closed(path)
    tracker = BranchTracker(path, f.singularities)
    offset = f.offset_for(path.base_point)

    def ev(k, t0, t1):
        return _panel_eval(path, tracker, f, offset, k, t0, t1)

    if schedule is not None:
        total, err, l1 = 0j, 0.0, 0.0
        for key in schedule:
            K, E, A = ev(*key)
            total += K
            err += E
            l1 += A
        info = QuadInfo(tuple(schedule), err, len(schedule), l1)
    else:
        total, info = _adaptive(ev, _initial_panels(path), tol, max_panels)
    return (total, info) if full_output else total


# ---------------------------------------------------------------------------
# product cycles


@dataclass(frozen=True)
class ProductCycle:
    """Product of closed paths, one per integration variable ``u_1..u_m``."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        for p in self.factors:
            _check_closed(p)

    @property
    def m(self) -> int:
        return len(self.factors)

    def to_json(self) -> str:
        return json.dumps([json.loads(p.to_json()) for p in self.factors])

    @classmethod
    def from_json(cls, text: str) -> "ProductCycle":
        return cls(tuple(Path.from_json(json.dumps(d)) for d in json.loads(text)))


@dataclass
class ProductIntegrand:
    """``prod_{i,j} (u_i - x_j)^{E[i,j]} prod_{i<k} (u_k - u_i)^{F[i,k]}`` times an
    optional ``multiplier(us)`` (``us`` a list of broadcastable arrays).

    Each ``log(u_i - x_j)`` is continued along factor ``i`` from its base point.
    ``log(u_k - u_i)`` starts, at ``u_i = b_i`` and ``u_k = b_k``, from
    the principal value of ``log(b_k - b_i)`` and is continued first in ``u_i``
    and then in ``u_k``.  ``offset`` is added to the total log.
    """

    points: np.ndarray
    E: np.ndarray
    F: np.ndarray
    offset: complex = 0j
    multiplier: object = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        self.E = np.atleast_2d(np.asarray(self.E, dtype=complex))
        m = self.E.shape[0]
        self.F = np.zeros((m, m), complex) if self.F is None else np.asarray(self.F, dtype=complex)


@dataclass
class _LevelRule:
    u: np.ndarray
    w: np.ndarray          # weights times du/dt
    xlogs: np.ndarray      # (N, J) continued log(u - x_j)
    blogs: np.ndarray      # (N, m) continued log(u - b_k) for k > level (else 0)


def _level_rule(path, tracker, schedule, nb):
    us, ws, Ls = [], [], []
    for k, t0, t1 in schedule:
        half = 0.5 * (t1 - t0)
        t = 0.5 * (t0 + t1) + half * GK_NODES
        us.append(path.pieces[k].point(t))
        ws.append(GK_WEIGHTS * path.pieces[k].deriv(t) * half)
        Ls.append(tracker.logs_at(k, t))
    L = np.concatenate(Ls)
    return _LevelRule(np.concatenate(us), np.concatenate(ws), L[:, :nb], L[:, nb:])


def path_rule(path: Path, points, schedule, base_logs=None):
    """Nodes ``u``, weights ``w`` (including ``du/dt``) and continued logs of
    ``u - points`` for a frozen panel schedule on ``path``."""
    tracker = BranchTracker(path, points, base_logs)
    pts = np.atleast_1d(np.asarray(points)).size
    r = _level_rule(path, tracker, schedule, pts)
    return r.u, r.w, r.xlogs


def _refine(schedule):
    out = []
    for k, t0, t1 in schedule:
        tm = 0.5 * (t0 + t1)
        out += [(k, t0, tm), (k, tm, t1)]
    return tuple(out)


class ProductQuadrature:
    """Tensor-product Gauss-Kronrod rule on a product cycle.

    Per-factor panel schedules come from adaptive quadrature of the marginal
    integrand (other variables frozen at their base points) and are then
    bisected once.  Schedules can be exported and reused for nearby
    geometry, which keeps finite differences in the endpoints free of
    quadrature jitter.
    """

    def __init__(self, phi: ProductIntegrand, cycle: ProductCycle, tol: float = 1e-10,
                 schedules=None, max_panels: int = 4000):
        self.phi, self.cycle, self.tol = phi, cycle, tol
        m = cycle.m
        if phi.E.shape[0] != m:
            raise ValueError("integrand and cycle have different numbers of variables")
        self.bases = np.array([p.base_point for p in cycle.factors])
        self.trackers = []
        for i, p in enumerate(cycle.factors):
            pts = np.concatenate([phi.points, self.bases[i + 1:]])
            self.trackers.append(BranchTracker(p, pts))
        if schedules is None:
            schedules = tuple(_refine(self._marginal_schedule(i, max_panels)) for i in range(m))
        self.schedules = tuple(tuple(s) for s in schedules)

    def _marginal_schedule(self, i, max_panels):
        phi, path = self.phi, self.cycle.factors[i]
        b = self.bases
        # pair factors with earlier variables (k < i): (u_i - b_k) with exponent F[k, i]
        extra_pts = [b[k] for k in range(i)]
        extra_exp = [phi.F[k, i] for k in range(i)]
        later_exp = [phi.F[i, k] for k in range(i + 1, self.cycle.m)]
        f = MultiPowerIntegrand(
            np.concatenate([phi.points, b[i + 1:], np.array(extra_pts, complex)]),
            np.concatenate([phi.E[i], np.array(later_exp, complex), np.array(extra_exp, complex)]),
            multiplier=None if phi.multiplier is None else self._marginal_multiplier(i),
        )
        ptr = BranchTracker(path, f.singularities)

        def ev(k, t0, t1):
            return _panel_eval(path, ptr, f, 0j, k, t0, t1)

        _, info = _adaptive(ev, _initial_panels(path), self.tol, max_panels)
        return info.schedule

    def _marginal_multiplier(self, i):
        def mult(u):
            us = [np.full(u.shape, b, dtype=complex) for b in self.bases]
            us[i] = u
            return self.phi.multiplier(us)
        return mult

    def rules(self, schedules=None):
        schedules = self.schedules if schedules is None else schedules
        J = self.phi.points.size
        return [_level_rule(p, tr, s, J) for p, tr, s in zip(self.cycle.factors, self.trackers, schedules)]

    def integrate(self, schedules=None) -> complex:
        phi = self.phi
        rules = self.rules(schedules)
        m = len(rules)
        b = self.bases
        # per-level single-variable logs
        single = [r.xlogs @ phi.E[i] for i, r in enumerate(rules)]
        # pair logs log(u_k - u_i) on grids (N_i, N_k)
        pair = {}
        for i in range(m):
            for k in range(i + 1, m):
                if phi.F[i, k] == 0:
                    continue
                # log(b_k - u_i) continued in u_i from principal log(b_k - b_i)
                start = rules[i].blogs[:, k - i - 1] + (np.log(b[k] - b[i]) - np.log(b[i] - b[k]))
                tr = BranchTracker(self.cycle.factors[k], rules[i].u, base_logs=start)
                Lk = []
                for kk, t0, t1 in (self.schedules[k] if schedules is None else schedules[k]):
                    half = 0.5 * (t1 - t0)
                    t = 0.5 * (t0 + t1) + half * GK_NODES
                    Lk.append(tr.logs_at(kk, t))
                pair[(i, k)] = phi.F[i, k] * np.concatenate(Lk).T       # (N_i, N_k), exponent applied
        return complex(_tensor_sum(rules, single, pair, phi, m))

    def integrate_with_error(self):
        fine = self.integrate()
        coarse_sched = tuple(_coarsen(s) for s in self.schedules)
        coarse = self.integrate(coarse_sched)
        return fine, abs(fine - coarse)


def _coarsen(schedule):
    # undo one bisection where both halves are present
    out = []
    s = list(schedule)
    i = 0
    while i < len(s):
        if i + 1 < len(s) and s[i][0] == s[i + 1][0] and s[i][2] == s[i + 1][1] and \
                abs((s[i][2] - s[i][1]) - (s[i + 1][2] - s[i + 1][1])) < 1e-15:
            out.append((s[i][0], s[i][1], s[i + 1][2]))
            i += 2
        else:
            out.append(s[i])
            i += 1
    return tuple(out)


def _tensor_sum(rules, single, pair, phi, m):
    if m == 1:
        vals = np.exp(single[0] + phi.offset)
        if phi.multiplier is not None:
            vals = vals * phi.multiplier([rules[0].u])
        return np.sum(rules[0].w * vals)
    # loop over all but the last two levels, vectorize the last two
    total = 0j
    outer = [range(rules[i].u.size) for i in range(m - 2)]
    for idx in itertools.product(*outer):
        logc = phi.offset + sum(single[i][j] for i, j in enumerate(idx))
        wc = 1.0 + 0j
        for i, j in enumerate(idx):
            wc *= rules[i].w[j]
        for (i, k), P in pair.items():
            if k < m - 2:
                logc = logc + P[idx[i], idx[k]]
        a, c = m - 2, m - 1
        G = logc + single[a][:, None] + single[c][None, :]
        for (i, k), P in pair.items():
            if k < m - 2:
                continue
            if i < m - 2:
                row = P[idx[i]]
                G = G + (row[:, None] if k == a else row[None, :])
            else:
                G = G + P
        vals = np.exp(G)
        if phi.multiplier is not None:
            us = [np.array(rules[i].u[j]) for i, j in enumerate(idx)]
            us += [rules[a].u[:, None], rules[c].u[None, :]]
            vals = vals * phi.multiplier(us)
        total += wc * (rules[a].w @ vals @ rules[c].w)
    return total


def integrate_product_cycle(phi: ProductIntegrand, cycle: ProductCycle, tol: float = 1e-10,
                            schedules=None, full_output: bool = False):
    """Integral of ``phi`` over the product cycle; returns ``(value, info)`` when
    ``full_output`` with ``info = (schedules, error_estimate)``."""
    q = ProductQuadrature(phi, cycle, tol, schedules)
    val, err = q.integrate_with_error()
    return (val, (q.schedules, err)) if full_output else val
