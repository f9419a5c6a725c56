"""Numerical geodesic tracing.

The geodesic equation in a chart is  z'' + f(z) z'^2 = 0, integrated as the
first-order system (z' = v, v' = -f(z) v^2) with an embedded Dormand-Prince
5(4) pair.  Alongside the state we continue the primitive K of f dz along the
trajectory (branch chosen by continuity), which yields

  * the first integral c = v * exp(K), constant on exact geodesics and used
    as a per-step error monitor, and
  * the flat-metric speed |v| * exp(Re K), integrated into the arclength s_g.

Two charts cover the sphere: the standard one and w = 1/z; trajectories
escaping past the switch radius continue in the infinity chart.
"""

from __future__ import annotations

import bisect
import cmath
import math
import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .connection import (FuchsianConnection, INFINITY, STANDARD, SpherePoint,
                         is_real_residues)

POLE_FLOOR = 1e-6
_MACH_EPS = math.ulp(1.0)
PATH_CLEARANCE = 1e-9


@dataclass(frozen=True)
class GeodesicState:
    chart: str
    z: complex
    v: complex
    k_phase: complex = 0j

    def __post_init__(self):
        if self.v == 0:
            raise errors.ZeroVelocity("v = 0 does not parametrize a geodesic")

    @property
    def c(self) -> complex:
        return self.v * cmath.exp(self.k_phase)


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    state: GeodesicState
    s_g: float

    @property
    def c(self) -> complex:
        return self.state.c

    @property
    def z_std(self) -> complex:
        if self.state.chart == STANDARD:
            return self.state.z
        return 1.0 / self.state.z

    @property
    def v_std(self) -> complex:
        if self.state.chart == STANDARD:
            return self.state.v
        return -self.state.v / self.state.z ** 2


@dataclass
class IntegratorOptions:
    rtol: float = 1e-12
    atol: float = 1e-14
    c_budget: float = 1e-11      # relative first-integral drift per unit time
    c_noise: float = 1.5         # drift allowance in units of the per-step
                                 # cancellation noise near poles
    pole_floor: float = POLE_FLOOR
    switch_radius: float | None = None   # None: take it from the connection
    switching: bool = True
    max_steps: int = 1_000_000
    max_seconds: float | None = None
    h0: float = 1e-3
    h_max: float = 5.0


@dataclass
class Trajectory:
    conn: FuchsianConnection
    samples: list = field(default_factory=list)
    events: list = field(default_factory=list)   # (t, kind, payload)
    termination: str = "t_max"

    _times_cache: list | None = field(default=None, repr=False, compare=False)

    @property
    def times(self):
        if self._times_cache is None or len(self._times_cache) != len(self.samples):
            self._times_cache = [s.t for s in self.samples]
        return self._times_cache

    @property
    def t_end(self) -> float:
        return self.samples[-1].t

    def support_std(self):
        return [s.z_std for s in self.samples]

    def _interval(self, t: float) -> int:
        ts = self.times
        if not (ts[0] - 1e-12 <= t <= ts[-1] + 1e-12):
            raise ValueError(f"t={t} outside trajectory span [{ts[0]}, {ts[-1]}]")
        i = bisect.bisect_right(ts, t) - 1
        return max(0, min(i, len(ts) - 2))

    def interpolate(self, t: float):
        """Cubic-Hermite position and velocity (standard chart) at time t."""
        i = self._interval(t)
        a, b = self.samples[i], self.samples[i + 1]
        chart = a.state.chart
        z0, v0 = a.state.z, a.state.v
        if b.state.chart == chart:
            z1, v1 = b.state.z, b.state.v
        else:  # sample b recorded after a chart switch: convert back
            z1 = 1.0 / b.state.z
            v1 = -b.state.v / b.state.z ** 2
        h = b.t - a.t
        th = (t - a.t) / h if h else 0.0
        z, v = _hermite(z0, v0, z1, v1, h, th)
        if chart == INFINITY:
            z, v = 1.0 / z, -v / z ** 2
        return z, v


def _hermite(z0, v0, z1, v1, h, th):
    """Cubic Hermite on [0,1]; returns value and d/dt."""
    h00 = (1 + 2 * th) * (1 - th) ** 2
    h10 = th * (1 - th) ** 2
    h01 = th * th * (3 - 2 * th)
    h11 = th * th * (th - 1)
    z = h00 * z0 + h10 * h * v0 + h01 * z1 + h11 * h * v1
    d00 = 6 * th * (th - 1)
    d10 = (1 - th) * (1 - 3 * th)
    d01 = -d00
    d11 = th * (3 * th - 2)
    v = (d00 * z0 / h + d10 * v0 + d01 * z1 / h + d11 * v1) if h else v0
    return z, v


# -- local representation and primitive continuation ---------------------------

def _f_eval(poles, z):
    acc = 0j
    for pos, res in poles:
        acc += res / (z - pos)
    return acc


def _dK_segment(poles, a, b, depth=0):
    """Continuation increment of K = int f dz along the chord [a, b].

    Principal logarithms are valid as long as the chord subtends less than
    pi/2 at every pole; otherwise the chord is split.
    """
    if depth > 48:
        raise errors.PathThroughPole("segment subdivision did not converge")
    for pos, _res in poles:
        da, db = a - pos, b - pos
        ra, rb = abs(da), abs(db)
        if ra <= PATH_CLEARANCE or rb <= PATH_CLEARANCE:
            raise errors.PathThroughPole(f"path within {PATH_CLEARANCE} of pole {pos}")
        seg = b - a
        L2 = abs(seg) ** 2
        if L2 > 0:
            t = ((pos - a).real * seg.real + (pos - a).imag * seg.imag) / L2
            if 0.0 < t < 1.0 and abs(a + t * seg - pos) <= PATH_CLEARANCE:
                raise errors.PathThroughPole(f"path within {PATH_CLEARANCE} of pole {pos}")
        if abs(cmath.phase(db / da)) >= math.pi / 2:
            m = 0.5 * (a + b)
            return (_dK_segment(poles, a, m, depth + 1)
                    + _dK_segment(poles, m, b, depth + 1))
    acc = 0j
    for pos, res in poles:
        acc += res * cmath.log((b - pos) / (a - pos))
    return acc


def canonical_K(conn: FuchsianConnection, z: complex) -> complex:
    """Principal-branch K(z) = sum rho_j Log(z - p_j); its real part is the
    single-valued log of the metric density."""
    acc = 0j
    for pos, res in conn.chart_poles(STANDARD):
        acc += res * cmath.log(z - pos)
    return acc


def continue_K(conn: FuchsianConnection, path) -> list:
    """K along a polyline (standard chart), branch chosen by continuity."""
    pts = [complex(p) for p in path]
    poles = conn.chart_poles(STANDARD)
    out = [canonical_K(conn, pts[0])]
    for a, b in zip(pts[:-1], pts[1:]):
        out.append(out[-1] + _dK_segment(poles, a, b))
    return out


def metric_density(conn: FuchsianConnection, z: complex) -> float:
    """prod_j |z - p_j|^{rho_j} in the standard chart."""
    acc = 0.0
    for pos, res in conn.chart_poles(STANDARD):
        acc += res.real * math.log(abs(z - pos))
    return math.exp(acc)


# -- Dormand-Prince 5(4) -------------------------------------------------------

_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _rhs(poles, z, v):
    return v, -_f_eval(poles, z) * v * v


def _dp_step(poles, z, v, h):
    kz = [0j] * 7
    kv = [0j] * 7
    kz[0], kv[0] = _rhs(poles, z, v)
    for i in range(1, 7):
        az = z
        av = v
        for j, a in enumerate(_DP_A[i]):
            if a:
                az += h * a * kz[j]
                av += h * a * kv[j]
        kz[i], kv[i] = _rhs(poles, az, av)
    z1 = z + h * sum(b * k for b, k in zip(_DP_B5, kz) if b)
    v1 = v + h * sum(b * k for b, k in zip(_DP_B5, kv) if b)
    ez = h * sum(e * k for e, k in zip(_DP_E, kz) if e)
    ev = h * sum(e * k for e, k in zip(_DP_E, kv) if e)
    return z1, v1, ez, ev


# -- the tracer ----------------------------------------------------------------

def trace(conn: FuchsianConnection, initial, t_max: float,
          opts: IntegratorOptions | None = None) -> Trajectory:
    """Integrate the geodesic through ``initial`` up to time ``t_max``."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    opts = opts or IntegratorOptions()

    if isinstance(initial, GeodesicState):
        chart = initial.chart
        z, v = initial.z, initial.v
    else:
        chart = STANDARD
        z, v = complex(initial[0]), complex(initial[1])
    if v == 0:
        raise errors.ZeroVelocity("v = 0 does not parametrize a geodesic")

    poles = conn.chart_poles(chart)
    for pos, _res in poles:
        if abs(z - pos) <= opts.pole_floor:
            raise errors.StartAtPole(f"initial position within pole floor of {pos}")

    if isinstance(initial, GeodesicState):
        K = initial.k_phase
    elif chart == STANDARD:
        K = canonical_K(conn, z)
    else:
        K = 0j

    switch_radius = opts.switch_radius if opts.switch_radius is not None else conn.switch_radius

    traj = Trajectory(conn=conn)
    t = 0.0
    s_g = 0.0
    c = v * cmath.exp(K)
    c_scale = abs(c)
    traj.samples.append(TrajectorySample(t, GeodesicState(chart, z, v, K), s_g))

    h = min(opts.h0, t_max)
    steps = 0
    started = _time.monotonic()
    collapsed = False

    while t < t_max:
        if steps >= opts.max_steps:
            traj.termination = "max_steps"
            break
        if opts.max_seconds is not None and _time.monotonic() - started > opts.max_seconds:
            traj.termination = "time_budget"
            break
        steps += 1
        h = min(h, t_max - t, opts.h_max)
        if h < 1e-14 * max(1.0, abs(t)):
            traj.termination = "step_collapse"
            traj.events.append((t, "step_collapse", {"h": h}))
            collapsed = True
            break

        z1, v1, ez, ev = _dp_step(poles, z, v, h)
        err = max(abs(ez) / (opts.atol + opts.rtol * max(abs(z), abs(z1))),
                  abs(ev) / (opts.atol + opts.rtol * max(abs(v), abs(v1))))
        if err > 1.0 or not (math.isfinite(z1.real) and math.isfinite(v1.real)):
            if not math.isfinite(err):
                h *= 0.1
            else:
                h *= max(0.2, 0.9 * err ** -0.2)
            continue

        # continue K along the step chord and fold the first-integral drift
        # into the error controller as a rate (budget per unit time), so the
        # total drift over the trace stays below c_budget * t_max
        try:
            dK = _dK_segment(poles, z, z1)
        except errors.PathThroughPole:
            h *= 0.5
            continue
        K1 = K + dK
        c1 = v1 * cmath.exp(K1)
        # Allowance: a rate term (caps accumulated drift on long traces at
        # roughly c_budget * t_max) plus the arithmetic noise scale of the
        # branch-continued log terms.  Near a pole the increment of K loses
        # eps*|z|/d of relative accuracy to cancellation in z - p; that part
        # of the drift is h-independent, so rejecting below it only stalls
        # the stepper.
        noise = _MACH_EPS * max(1.0, abs(z1)) * sum(
            abs(rho) / min(abs(z - pos), abs(z1 - pos)) for pos, rho in poles)
        allowed = (opts.c_budget * h + opts.c_noise * noise) * c_scale
        err = max(err, abs(c1 - c) / allowed)
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue

        # accepted: arclength increment by Simpson with a Hermite midpoint
        zm, vm = _hermite(z, v, z1, v1, h, 0.5)
        d0 = abs(v) * _chart_density(conn, chart, z)
        dm = abs(vm) * _chart_density(conn, chart, zm)
        d1 = abs(v1) * _chart_density(conn, chart, z1)
        ds = h / 6.0 * (d0 + 4.0 * dm + d1)

        # pole-floor crossing inside the accepted step
        hit = _pole_hit(poles, z, v, h, z1, opts.pole_floor)
        if hit is not None:
            hh, zh, vh = hit
            t_hit = t + hh
            dK_h = _dK_segment(poles, z, zh)
            s_hit = s_g + ds * (hh / h)  # linear share; diagnostic only
            traj.samples.append(TrajectorySample(
                t_hit, GeodesicState(chart, zh, vh, K + dK_h), s_hit))
            pole = _nearest_pole(conn, chart, zh)
            traj.events.append((t_hit, "pole_approach", {"pole": pole}))
            traj.termination = "pole_approach"
            collapsed = True
            break

        t += h
        z, v, K, c = z1, v1, K1, c1
        s_g += ds
        traj.samples.append(TrajectorySample(t, GeodesicState(chart, z, v, K), s_g))

        # chart switching with hysteresis
        if opts.switching:
            if chart == STANDARD and abs(z) > switch_radius:
                z, v, K = _to_infinity(z, v, K)
                chart = INFINITY
                poles = conn.chart_poles(chart)
                traj.events.append((t, "chart_switch", {"to": chart}))
            elif chart == INFINITY and abs(z) > 1.5 / switch_radius:
                z, v, K = _to_standard(z, v, K)
                chart = STANDARD
                poles = conn.chart_poles(chart)
                traj.events.append((t, "chart_switch", {"to": chart}))

        h *= min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0 else 5.0

    if not collapsed and t >= t_max:
        traj.termination = "t_max"
    traj.events.append((traj.samples[-1].t, "terminated", {"reason": traj.termination}))
    return traj


def _chart_density(conn, chart, u):
    """Metric length element per |du| in the given chart coordinate."""
    acc = math.log(conn.chart_density_const(chart)) if chart == INFINITY else 0.0
    for pos, res in conn.chart_poles(chart):
        acc += res.real * math.log(abs(u - pos))
    return math.exp(acc)


def _pole_hit(poles, z0, v0, h, z1, floor):
    """Entry of the step arc into a pole floor: (sub-step, z, v) or None.

    Refinement re-runs the integrator step at partial sizes so the located
    state keeps the step's accuracy (a Hermite fit degrades near the pole).
    """
    suspect = any(abs(z1 - pos) < floor or _chord_close(z0, z1, pos, floor)
                  for pos, _res in poles)
    if not suspect:
        return None

    def dist(hh):
        if hh <= 0:
            return min(abs(z0 - pos) for pos, _ in poles), z0, v0
        za, va, _, _ = _dp_step(poles, z0, v0, hh)
        return min(abs(za - pos) for pos, _ in poles), za, va

    # locate a sub-step strictly inside the floor (handles fly-by minima)
    n = 64
    inside = None
    for k in range(1, n + 1):
        d, _, _ = dist(h * k / n)
        if d < floor:
            inside = k
            break
    if inside is None:
        return None
    lo, hi = h * (inside - 1) / n, h * inside / n
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        d, _, _ = dist(mid)
        if d < floor:
            hi = mid
        else:
            lo = mid
    _, zh, vh = dist(lo)
    return lo, zh, vh


def _chord_close(z0, z1, pos, floor):
    seg = z1 - z0
    L2 = abs(seg) ** 2
    if L2 == 0:
        return abs(z0 - pos) < floor
    t = ((pos - z0).real * seg.real + (pos - z0).imag * seg.imag) / L2
    t = max(0.0, min(1.0, t))
    return abs(z0 + t * seg - pos) < floor


def _nearest_pole(conn, chart, u) -> SpherePoint:
    best, bd = None, math.inf
    for pos, _res in conn.chart_poles(chart):
        d = abs(u - pos)
        if d < bd:
            bd, best = d, pos
    if chart == INFINITY:
        return SpherePoint.inf() if best == 0 else SpherePoint.of(1.0 / best)
    return SpherePoint.of(best)


def _to_infinity(z, v, K):
    w = 1.0 / z
    vw = -v / z ** 2
    # keep c = v exp(K) continuous: K_w = K_z + log(v_z / v_w)
    return w, vw, K + cmath.log(-z ** 2)


def _to_standard(w, vw, K):
    z = 1.0 / w
    v = -vw / w ** 2
    return z, v, K + cmath.log(-w ** 2)


# -- derived quantities --------------------------------------------------------

def first_integral(traj: Trajectory):
    """(c at t=0, max relative drift of v*exp(K) over the samples)."""
    if not traj.samples:
        raise ValueError("empty trajectory")
    c0 = traj.samples[0].c
    scale = abs(c0)
    drift = max(abs(s.c - c0) for s in traj.samples) / scale
    return c0, drift


def g_length(traj: Trajectory, t_a: float, t_b: float) -> float:
    """Flat-metric length of the arc between t_a and t_b, by quadrature of
    prod |z - p_j|^{rho_j} |z'| over the stored samples."""
    if not is_real_residues(traj.conn):
        raise errors.NonRealResidues("metric length needs real residues")
    if t_a >= t_b:
        raise ValueError("need t_a < t_b")

    def speed(t):
        z, v = traj.interpolate(t)
        return metric_density(traj.conn, z) * abs(v)

    ts = [t for t in traj.times if t_a < t < t_b]
    knots = [t_a] + ts + [t_b]
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if b - a <= 0:
            continue
        m = 0.5 * (a + b)
        total += (b - a) / 6.0 * (speed(a) + 4.0 * speed(m) + speed(b))
    return total


# -- self-intersections --------------------------------------------------------

@dataclass(frozen=True)
class IntersectionRecord:
    t_i: float
    t_j: float
    point: complex
    transversal: bool


def _seg_intersect(p0, p1, q0, q1):
    """Parameters (s, u) in [0,1]^2 where segments cross, or None."""
    d1 = p1 - p0
    d2 = q1 - q0
    den = d1.real * d2.imag - d1.imag * d2.real
    if den == 0:
        return None
    r = q0 - p0
    s = (r.real * d2.imag - r.imag * d2.real) / den
    u = (r.real * d1.imag - r.imag * d1.real) / den
    if 0.0 <= s <= 1.0 and 0.0 <= u <= 1.0:
        return s, u
    return None


def _polyline_pairs(pts):
    """Candidate crossing segment pairs, by vectorized bounding-box overlap.
    Yields (i, j) with j > i + 1 whose segment boxes intersect."""
    n = len(pts) - 1
    if n < 2:
        return
    p = np.asarray(pts)
    a, b = p[:-1], p[1:]
    xmin, xmax = np.minimum(a.real, b.real), np.maximum(a.real, b.real)
    ymin, ymax = np.minimum(a.imag, b.imag), np.maximum(a.imag, b.imag)
    for i0 in range(0, n, 512):
        i1 = min(i0 + 512, n)
        ovl = ((xmin[i0:i1, None] <= xmax[None, :])
               & (xmax[i0:i1, None] >= xmin[None, :])
               & (ymin[i0:i1, None] <= ymax[None, :])
               & (ymax[i0:i1, None] >= ymin[None, :]))
        ii, jj = np.nonzero(ovl)
        ii += i0
        keep = jj > ii + 1
        yield from zip(ii[keep].tolist(), jj[keep].tolist())


def _decimate(pts, ts, max_segments):
    """Thin a polyline to at most max_segments, keeping both endpoints."""
    n = len(pts) - 1
    if n <= max_segments:
        return pts, ts
    stride = -(-n // max_segments)
    idx = list(range(0, n, stride)) + [n]
    return [pts[i] for i in idx], [ts[i] for i in idx]


def self_intersections(traj: Trajectory, max_count: int = 64) -> list:
    """Transversal self-crossings of the sampled trajectory, refined on the
    Hermite interpolant to ~1e-12."""
    if len(traj.samples) < 3:
        return []
    pts, ts = _decimate(traj.support_std(), traj.times, 4000)
    out = []
    for i, j in _polyline_pairs(pts):
        hit = _seg_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1])
        if hit is None:
            continue
        s, u = hit
        t1 = ts[i] + s * (ts[i + 1] - ts[i])
        t2 = ts[j] + u * (ts[j + 1] - ts[j])
        rec = _refine_crossing(traj, traj, t1, t2)
        if rec is None:
            continue
        t1, t2, pt, transversal = rec
        if t2 - t1 < 1e-9:
            continue
        out.append(IntersectionRecord(t1, t2, pt, transversal))
        if len(out) >= max_count:
            break
    out.sort(key=lambda r: (r.t_i, r.t_j))
    return out


def cross_intersections(a: Trajectory, b: Trajectory, max_count: int = 64) -> list:
    """Crossings between two trajectories (brute-force segment scan)."""
    pa, pb = a.support_std(), b.support_std()
    ta, tb = a.times, b.times
    out = []
    for i in range(len(pa) - 1):
        for j in range(len(pb) - 1):
            hit = _seg_intersect(pa[i], pa[i + 1], pb[j], pb[j + 1])
            if hit is None:
                continue
            s, u = hit
            t1 = ta[i] + s * (ta[i + 1] - ta[i])
            t2 = tb[j] + u * (tb[j + 1] - tb[j])
            rec = _refine_crossing(a, b, t1, t2)
            if rec is not None:
                out.append(IntersectionRecord(rec[0], rec[1], rec[2], rec[3]))
                if len(out) >= max_count:
                    return out
    return out


def _refine_crossing(ta: Trajectory, tb: Trajectory, t1, t2, iters=30):
    """Newton refinement of gamma_a(t1) = gamma_b(t2)."""
    lo1, hi1 = ta.samples[0].t, ta.t_end
    lo2, hi2 = tb.samples[0].t, tb.t_end
    for _ in range(iters):
        z1, v1 = ta.interpolate(t1)
        z2, v2 = tb.interpolate(t2)
        F = z1 - z2
        den = v1.real * (-v2.imag) - v1.imag * (-v2.real)
        if den == 0:
            return None
        dt1 = (-F.real * (-v2.imag) + F.imag * (-v2.real)) / den
        dt2 = (-v1.real * F.imag + v1.imag * F.real) / den
        t1 += dt1
        t2 += dt2
        t1 = min(max(t1, lo1), hi1)
        t2 = min(max(t2, lo2), hi2)
        if abs(dt1) + abs(dt2) < 1e-13:
            break
    z1, v1 = ta.interpolate(t1)
    z2, v2 = tb.interpolate(t2)
    if abs(z1 - z2) > 1e-9 * max(1.0, abs(z1)):
        return None
    cross = abs((v1 / abs(v1)).real * (v2 / abs(v2)).imag
                - (v1 / abs(v1)).imag * (v2 / abs(v2)).real)
    return t1, t2, 0.5 * (z1 + z2), cross >= 1e-3


# -- export --------------------------------------------------------------------

CSV_HEADER = "t,re_z,im_z,re_v,im_v,s_g"


def trajectory_to_csv(traj: Trajectory) -> str:
    """Rows in the standard chart, floats at 17 significant digits."""
    lines = [CSV_HEADER]
    for s in traj.samples:
        z, v = s.z_std, s.v_std
        lines.append(",".join(f"{x:.17g}" for x in
                              (s.t, z.real, z.imag, v.real, v.imag, s.s_g)))
    return "\n".join(lines) + "\n"
