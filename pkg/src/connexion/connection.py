"""Fuchsian connections on the Riemann sphere.

A connection is stored as its pole set: finite locations plus the point at
infinity, each with a residue.  The local representation in the standard
chart is the rational function

    f(z) = sum_j  rho_j / (z - p_j)          (finite poles only),

and in the infinity chart (w = 1/z)

    f_inf(w) = -f(1/w)/w^2 - 2/w,

which is again a simple-pole rational function whose pole at w = 0 carries
the residue of the pole at infinity.  The sphere forces

    sum of all residues = -2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from . import errors

RESIDUE_SUM = -2.0
SUM_TOL = 1e-12
POLE_EVAL_TOL = 1e-12
LOOP_CLEARANCE = 1e-9

STANDARD = "standard"
INFINITY = "infinity"


@dataclass(frozen=True)
class SpherePoint:
    """A point of the sphere: a finite complex coordinate or infinity."""

    z: complex = 0j
    infinite: bool = False

    def __post_init__(self):
        if not self.infinite:
            if not (math.isfinite(self.z.real) and math.isfinite(self.z.imag)):
                raise ValueError("finite SpherePoint needs finite coordinates")

    @staticmethod
    def inf() -> "SpherePoint":
        return SpherePoint(0j, infinite=True)

    @staticmethod
    def of(z: complex) -> "SpherePoint":
        return SpherePoint(complex(z))

    def __repr__(self):
        return "inf" if self.infinite else f"{self.z!r}"


@dataclass(frozen=True)
class PoleSpec:
    location: SpherePoint
    residue: complex  # real in all metric contexts; complex only behind a flag

    @property
    def rho(self) -> float:
        return self.residue.real if isinstance(self.residue, complex) else float(self.residue)


@dataclass(frozen=True)
class LoopPath:
    """Closed polyline in the finite plane, avoiding all poles."""

    vertices: tuple
    positive: bool = True

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise ValueError("a loop needs at least 3 vertices")
        if abs(self.vertices[0] - self.vertices[-1]) > 1e-12:
            raise ValueError("loop must be closed (first == last vertex)")


@dataclass(frozen=True)
class FuchsianConnection:
    """Immutable pole set; all operations on it are pure."""

    poles: tuple  # of PoleSpec, infinity pole explicit (unless residue 0 and minimal)
    switch_radius: float = 10.0
    real_periods: bool = True
    _finite: tuple = field(default=(), repr=False)

    @property
    def finite_poles(self) -> tuple:
        return self._finite

    @property
    def infinity_residue(self) -> complex:
        for p in self.poles:
            if p.location.infinite:
                return p.residue
        return complex(RESIDUE_SUM) - sum((p.residue for p in self._finite), 0j)

    def residue_at(self, loc: SpherePoint) -> complex:
        if loc.infinite:
            return self.infinity_residue
        for p in self._finite:
            if abs(p.location.z - loc.z) <= POLE_EVAL_TOL:
                return p.residue
        raise KeyError(f"no pole at {loc}")

    def chart_poles(self, chart: str) -> list:
        """(coordinate, residue) pairs of the simple poles of the local
        representation in the given chart."""
        if chart == STANDARD:
            return [(p.location.z, p.residue) for p in self._finite]
        if chart != INFINITY:
            raise ValueError(f"unknown chart {chart!r}")
        out = [(0j, self.infinity_residue)]
        for p in self._finite:
            if p.location.z != 0:
                out.append((1.0 / p.location.z, p.residue))
        return out

    def chart_density_const(self, chart: str) -> float:
        """Multiplier so that density(chart) * |du| equals the global metric
        length element normalized in the standard chart."""
        if chart == STANDARD:
            return 1.0
        acc = 0.0
        for p in self._finite:
            if p.location.z != 0:
                acc += p.rho * math.log(abs(p.location.z))
        return math.exp(acc)


def is_real_residues(conn: FuchsianConnection, tol: float = SUM_TOL) -> bool:
    return all(abs(p.residue.imag) <= tol for p in conn.poles)


def build_connection(poles, switch_radius: float = 10.0,
                     allow_complex: bool = False,
                     minimal: bool = False) -> FuchsianConnection:
    """Validate a pole list and return a connection.

    If the pole at infinity is absent its residue is implied by the sum
    identity; it is materialized explicitly unless that residue is exactly 0
    and ``minimal`` is requested.
    """
    specs = [p if isinstance(p, PoleSpec) else PoleSpec(*p) for p in poles]
    if not specs and not minimal:
        # a connection with no poles at all cannot satisfy the sum identity
        raise errors.SumMismatch("a pole-free connection is impossible on the sphere")

    finite = [p for p in specs if not p.location.infinite]
    at_inf = [p for p in specs if p.location.infinite]
    if len(at_inf) > 1:
        raise errors.DuplicatePole("infinity listed twice")
    for i, p in enumerate(finite):
        for q in finite[i + 1:]:
            if abs(p.location.z - q.location.z) <= POLE_EVAL_TOL:
                raise errors.DuplicatePole(f"poles coincide at {p.location}")
    if not allow_complex:
        for p in specs:
            if abs(complex(p.residue).imag) > SUM_TOL:
                raise errors.NonRealResidue(f"residue {p.residue} is not real")

    specs = [PoleSpec(p.location, complex(p.residue)) for p in finite]
    finite_sum = sum((p.residue for p in specs), 0j)
    if at_inf:
        inf_res = complex(at_inf[0].residue)
        total = finite_sum + inf_res
        if abs(total - RESIDUE_SUM) > SUM_TOL:
            raise errors.SumMismatch(
                f"residues sum to {total}, the sphere requires {RESIDUE_SUM}")
    else:
        inf_res = complex(RESIDUE_SUM) - finite_sum

    all_poles = list(specs)
    if not (minimal and inf_res == 0):
        all_poles.append(PoleSpec(SpherePoint.inf(), inf_res))
    if not all_poles:
        raise errors.SumMismatch("a pole-free connection is impossible on the sphere")

    real = all(abs(p.residue.imag) <= SUM_TOL for p in all_poles)
    return FuchsianConnection(tuple(all_poles), float(switch_radius),
                              real_periods=real, _finite=tuple(specs))


def local_rep(conn: FuchsianConnection, chart: str, point: complex) -> complex:
    """Value of f in the requested chart at the given chart coordinate."""
    point = complex(point)
    acc = 0j
    for pos, res in conn.chart_poles(chart):
        d = point - pos
        if abs(d) <= POLE_EVAL_TOL:
            raise errors.EvalAtPole(f"evaluation at pole {pos} in {chart} chart")
        acc += res / d
    return acc


def winding_number(loop: LoopPath, point: complex) -> int:
    """Winding of a closed polyline around a point, by continuous
    argument summation (robust equivalent of jittered ray casting)."""
    total = 0.0
    vs = loop.vertices
    for a, b in zip(vs[:-1], vs[1:]):
        da, db = a - point, b - point
        if abs(da) <= LOOP_CLEARANCE or abs(db) <= LOOP_CLEARANCE:
            raise errors.LoopThroughPole(f"loop vertex at distance <= {LOOP_CLEARANCE} from {point}")
        # edge may still pass close to the point: check segment distance
        seg = b - a
        if abs(seg) > 0:
            t = max(0.0, min(1.0, ((point - a).real * seg.real + (point - a).imag * seg.imag)
                             / (abs(seg) ** 2)))
            if abs(a + t * seg - point) <= LOOP_CLEARANCE:
                raise errors.LoopThroughPole(f"loop edge within {LOOP_CLEARANCE} of {point}")
        total += cmath.phase(db / da)
    n = total / (2.0 * math.pi)
    k = round(n)
    if abs(n - k) > 1e-6:
        raise errors.LoopThroughPole("argument sum far from an integer multiple of 2*pi")
    return int(k) if loop.positive else -int(k)


def monodromy_of_loop(conn: FuchsianConnection, loop: LoopPath) -> complex:
    """exp(2*pi*i * sum_j winding_j * rho_j); unit modulus iff residues real."""
    acc = 0j
    for pos, res in conn.chart_poles(STANDARD):
        w = winding_number(loop, pos)
        if w:
            acc += w * res
    return cmath.exp(2j * math.pi * acc)


def from_k_differential(numerator_roots, denominator_roots, k: int,
                        switch_radius: float = 10.0) -> FuchsianConnection:
    """Connection adapted to q = prod (z - a_i)^{m_i} dz^k.

    The induced 1-form is (1/k) dq/q, so each finite root contributes residue
    m_i/k (negative m_i for poles of q); the residue at infinity follows from
    the sum identity and equals -(deg q)/k - 2.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    roots = [(complex(a), int(m)) for a, m in numerator_roots]
    roots += [(complex(a), -abs(int(m))) for a, m in denominator_roots]
    for a, m in roots:
        if m == 0:
            raise errors.InvalidOrder(f"root {a} has order zero")
    for i, (a, _) in enumerate(roots):
        for b, _ in roots[i + 1:]:
            if abs(a - b) <= POLE_EVAL_TOL:
                raise errors.DuplicateRoot(f"repeated root {a}")
    poles = [PoleSpec(SpherePoint.of(a), complex(m / k)) for a, m in roots]
    return build_connection(poles, switch_radius=switch_radius)


# -- serialization (schema shared with the CLI) --------------------------------

def connection_to_dict(conn: FuchsianConnection) -> dict:
    out = []
    for p in conn.poles:
        if p.location.infinite:
            out.append({"inf": True, "residue": p.rho})
        else:
            out.append({"re": p.location.z.real, "im": p.location.z.imag,
                        "residue": p.rho})
    return {"poles": out}


def connection_from_dict(data: dict, switch_radius: float = 10.0) -> FuchsianConnection:
    poles = []
    for item in data["poles"]:
        res = float(item["residue"])
        if item.get("inf"):
            poles.append(PoleSpec(SpherePoint.inf(), res))
        else:
            poles.append(PoleSpec(SpherePoint.of(complex(float(item["re"]),
                                                         float(item.get("im", 0.0)))), res))
    return build_connection(poles, switch_radius=switch_radius)
