"""Geometry of a single decorated tetrahedron.

A tetrahedron of shape ``k`` has ``k`` hyperideal vertices followed by
``4 - k`` ideal ones (vertex labels ``0..3``).  Edge vectors are ordered as
``EDGES``: (0,1), (0,2), (0,3), (1,2), (1,3), (2,3).

All cosine quantities are evaluated from log-magnitudes of positive sums so
that large lengths neither overflow nor cancel.
"""

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, NotRealizableError, NumericError, UnsupportedConfigurationError
from .special import lobachevsky

EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
EDGE_INDEX = {e: i for i, e in enumerate(EDGES)}
EDGE_INDEX.update({(b, a): i for (a, b), i in list(EDGE_INDEX.items())})
# Pairs of opposite edges, as indices into EDGES.
OPPOSITE_PAIRS = ((0, 5), (1, 4), (2, 3))
SHAPE_NAMES = {0: "0-4", 1: "1-3", 2: "2-2", 3: "3-1", 4: "4-0"}

STRICT_MARGIN = 1e-14
DEGENERATION_EPS = 1e-9
_LOG2 = math.log(2.0)
_EXP_CAP = 700.0


def parse_shape(shape):
    """Accept ``2``, ``"2"`` or ``"2-2"`` and return the hyperideal count."""
    if isinstance(shape, str):
        s = shape.strip()
        for k, name in SHAPE_NAMES.items():
            if s == name:
                return k
        try:
            shape = int(s)
        except ValueError:
            raise DomainError(f"unknown shape {shape!r}") from None
    if isinstance(shape, bool) or not isinstance(shape, (int, np.integer)):
        raise DomainError(f"unknown shape {shape!r}")
    k = int(shape)
    if not 0 <= k <= 4:
        raise DomainError(f"hyperideal count must be in 0..4, got {k}")
    return k


def hyperideal_edges(shape):
    """Indices of edges joining two hyperideal vertices."""
    k = parse_shape(shape)
    return tuple(i for i, (a, b) in enumerate(EDGES) if b < k)


def _as_lengths(l):
    arr = np.asarray(l, dtype=float)
    if arr.shape != (6,):
        raise DomainError(f"expected 6 edge lengths, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("edge lengths must be finite")
    return arr


def _check_closure(k, arr):
    for i in hyperideal_edges(k):
        if arr[i] < 0.0:
            raise DomainError(
                f"edge {EDGES[i]} joins hyperideal vertices and has negative length {arr[i]}"
            )


def _check_region(k, arr):
    for i in hyperideal_edges(k):
        if not arr[i] > 0.0:
            raise DomainError(
                f"edge {EDGES[i]} joins hyperideal vertices and must have positive length"
            )


# -- log-domain helpers ------------------------------------------------------

def _lse(*xs):
    m = max(xs)
    if m == -math.inf:
        return m
    return m + math.log(math.fsum(math.exp(x - m) for x in xs))


def _lcosh(x):
    a = abs(x)
    return a + math.log1p(math.exp(-2.0 * a)) - _LOG2


def _lsinh(x):
    # x >= 0
    if x == 0.0:
        return -math.inf
    return x + math.log(-math.expm1(-2.0 * x)) - _LOG2


@dataclass(frozen=True)
class VertexLink:
    """Side lengths of the link triangle at one vertex.

    ``kind`` is ``"hyperbolic"`` for a hyperideal vertex and ``"euclidean"``
    for an ideal one (the horosphere section, defined up to scale only through
    the decoration).  ``sides`` maps a pair of the other vertices to the side
    joining the corresponding link points.
    """

    vertex: int
    kind: str
    sides: dict = field(default_factory=dict)

    def corner_cosines(self):
        """Cosine of the link corner at each other vertex, via the cosine law."""
        out = {}
        others = sorted({p for pq in self.sides for p in pq})
        for a in others:
            b, c = [p for p in others if p != a]
            x = self.sides[_key(a, b)]
            y = self.sides[_key(a, c)]
            z = self.sides[_key(b, c)]
            if self.kind == "hyperbolic":
                out[a] = (math.cosh(x) * math.cosh(y) - math.cosh(z)) / (
                    math.sinh(x) * math.sinh(y)
                )
            else:
                out[a] = (x * x + y * y - z * z) / (2.0 * x * y)
        return out


def _key(p, q):
    return (p, q) if p < q else (q, p)


class _Link:
    """Log-magnitudes of the positive building blocks at a vertex ``v``.

    With ``g_p``/``f_p`` equal to cosh/sinh of ``l_vp`` for hyperideal ``p``
    and both equal to ``exp(l_vp)`` for ideal ``p``, each pair of the other
    vertices has a positive term ``X_pq``.  The corner cosine numerators below
    are the expanded forms in which the identity ``g² - f² ∈ {0, 1}`` has
    already removed the large leading terms, so nothing cancels
    catastrophically when lengths are big.
    """

    __slots__ = ("v", "hyper", "k", "logf", "logg", "logX", "logA", "logAm", "logAp")

    def __init__(self, k, l, v):
        self.v = v
        self.k = k
        self.hyper = v < k
        others = [p for p in range(4) if p != v]
        L = lambda p, q: l[EDGE_INDEX[(p, q)]]
        self.logf, self.logg = {}, {}
        self.logX, self.logA, self.logAm, self.logAp = {}, {}, {}, {}
        for p in others:
            x = L(v, p)
            if self.hyper and p < k:
                self.logf[p] = _lsinh(x)
                self.logg[p] = _lcosh(x)
            else:
                self.logf[p] = self.logg[p] = x
        for i, p in enumerate(others):
            for q in others[i + 1:]:
                # order so that a hyperideal endpoint comes first
                a, b = (p, q) if p < k or q >= k else (q, p)
                lab, lva, lvb = L(a, b), L(v, a), L(v, b)
                key = _key(p, q)
                if self.hyper:
                    if a < k and b < k:
                        X = _lcosh(lab)
                        Am = _lse(X, _lcosh(lva - lvb))
                        Ap = _lse(X, _lcosh(lva + lvb))
                    elif a < k:
                        X = lab
                        Am = _lse(lab, lvb - lva)
                        Ap = _lse(lab, lvb + lva)
                    else:
                        X = _LOG2 + lab
                        Am = X
                        Ap = _lse(X, _LOG2 + lva + lvb)
                    self.logX[key] = X
                    self.logA[key] = _lse(X, self.logg[a] + self.logg[b])
                    self.logAm[key] = Am
                    self.logAp[key] = Ap
                else:
                    if a < k and b < k:
                        self.logX[key] = _LOG2 + _lcosh(lab)
                        self.logA[key] = _LOG2 + _lse(_lcosh(lab), _lcosh(lva - lvb))
                    elif a < k:
                        self.logX[key] = lab
                        self.logA[key] = _lse(lab, lvb - lva)
                    else:
                        self.logX[key] = self.logA[key] = lab

    def corner_cos(self, a):
        """Cosine of the dihedral angle at edge (v, a)."""
        b, c = [p for p in range(4) if p not in (self.v, a)]
        Xab = self.logX[_key(a, b)]
        Xac = self.logX[_key(a, c)]
        Xbc = self.logX[_key(b, c)]
        ga, gb, gc = self.logg[a], self.logg[b], self.logg[c]
        a_hyper = a < self.k
        if self.hyper:
            fa = self.logf[a]
            if fa == -math.inf:
                # zero-length truncated edge: the two face normals coincide
                return 1.0
            terms = [Xab + Xac, ga + gc + Xab, ga + gb + Xac]
            if a_hyper:
                terms.append(gb + gc)
            n1 = _lse(*terms)
            n2 = Xbc + 2.0 * fa
            D = 0.5 * (
                self.logAm[_key(a, b)] + self.logAp[_key(a, b)]
                + self.logAm[_key(a, c)] + self.logAp[_key(a, c)]
            )
            return _signed_diff(n1, n2, D)
        terms = [Xab + gc, Xac + gb]
        if a_hyper:
            terms.append(_LOG2 + gb + gc - ga)
        n1 = _lse(*terms)
        n2 = Xbc + ga
        D = _LOG2 + 0.5 * (self.logA[_key(a, b)] + self.logA[_key(a, c)] + gb + gc)
        return _signed_diff(n1, n2, D)

    def side(self, p, q):
        key = _key(p, q)
        if self.hyper:
            # sinh^2(θ/2) = (A - f_p f_q) / (2 f_p f_q)
            w = 0.5 * (self.logAm[key] - _LOG2 - self.logf[p] - self.logf[q])
            if w > 20.0:
                return 2.0 * (w + _LOG2)
            return 2.0 * math.asinh(math.exp(w))
        return math.exp(0.5 * (self.logA[key] - self.logf[p] - self.logf[q]))


def _signed_diff(n1, n2, D):
    """exp(n1 - D) - exp(n2 - D), saturating to ±inf on overflow."""
    s = max(n1, n2)
    if s - D > _EXP_CAP:
        d = math.exp(n1 - s) - math.exp(n2 - s)
        if d == 0.0:
            return 0.0
        return math.copysign(math.inf, d)
    return math.exp(n1 - D) - math.exp(n2 - D)


def _phi_unchecked(k, l):
    links = {}
    out = np.empty(6)
    for i, (a, b) in enumerate(EDGES):
        if a not in links:
            links[a] = _Link(k, l, a)
        out[i] = links[a].corner_cos(b)
    return out


def phi(shape, l):
    """Closed-form cosine quantities φ for the six edges.

    Defined on the closure of the region where edges between hyperideal
    vertices are positive.  Equal to the cosine of the dihedral angle when
    the metric is realizable.
    """
    k = parse_shape(shape)
    arr = _as_lengths(l)
    _check_closure(k, arr)
    return _phi_unchecked(k, [float(x) for x in arr])


def theta_chain(shape, l, vertex):
    """Link triangle side lengths at ``vertex``."""
    k = parse_shape(shape)
    arr = _as_lengths(l)
    _check_region(k, arr)
    if vertex not in range(4):
        raise DomainError(f"vertex must be in 0..3, got {vertex!r}")
    link = _Link(k, [float(x) for x in arr], vertex)
    others = [p for p in range(4) if p != vertex]
    sides = {}
    for i, p in enumerate(others):
        for q in others[i + 1:]:
            sides[(p, q)] = link.side(p, q)
    kind = "hyperbolic" if vertex < k else "euclidean"
    return VertexLink(vertex=vertex, kind=kind, sides=sides)


def chain_angles(shape, l):
    """Dihedral angles from link side lengths and the cosine laws.

    Independent evaluation route used for cross-checking ``phi``; it does not
    clip and is only meaningful on the realizable region.
    """
    k = parse_shape(shape)
    links = {v: theta_chain(k, l, v).corner_cosines() for v in range(4)}
    out = np.empty(6)
    for i, (a, b) in enumerate(EDGES):
        out[i] = math.acos(max(-1.0, min(1.0, links[a][b])))
    return out


def is_realizable(shape, l):
    """True when the metric comes from a non-degenerate decorated tetrahedron."""
    k = parse_shape(shape)
    arr = _as_lengths(l)
    if any(not arr[i] > 0.0 for i in hyperideal_edges(k)):
        return False
    f = _phi_unchecked(k, [float(x) for x in arr])
    return bool(np.all(np.abs(f) < 1.0 - STRICT_MARGIN))


def dihedral_angles_strict(shape, l):
    """Dihedral angles of a realizable metric."""
    k = parse_shape(shape)
    arr = _as_lengths(l)
    _check_region(k, arr)
    f = _phi_unchecked(k, [float(x) for x in arr])
    bad = np.flatnonzero(np.abs(f) >= 1.0 - STRICT_MARGIN)
    if bad.size:
        i = int(bad[0])
        raise NotRealizableError(
            f"metric is degenerate: φ at edge {EDGES[i]} is {float(f[i])!r}"
        )
    return np.arccos(f)


def clamp_truncated_edges(shape, l):
    """Replace negative lengths on hyperideal-hyperideal edges by zero."""
    k = parse_shape(shape)
    arr = _as_lengths(l).copy()
    for i in hyperideal_edges(k):
        if arr[i] < 0.0:
            arr[i] = 0.0
    return arr


def dihedral_angles_extended(shape, l):
    """Continuous extension of the dihedral angles to all of R^6."""
    k = parse_shape(shape)
    arr = clamp_truncated_edges(k, l)
    f = _phi_unchecked(k, [float(x) for x in arr])
    return np.arccos(np.clip(f, -1.0, 1.0))


class DegenerationClass(enum.Enum):
    INTERIOR_L = "InteriorL"
    OMEGA_1 = "Omega_1"
    OMEGA_2 = "Omega_2"
    OMEGA_3 = "Omega_3"
    BOUNDARY_X1 = "BoundaryX_1"
    BOUNDARY_X2 = "BoundaryX_2"
    BOUNDARY_X3 = "BoundaryX_3"
    CLAMPED_FACE = "ClampedFace"

    def __str__(self):
        return self.value


_OMEGA = (DegenerationClass.OMEGA_1, DegenerationClass.OMEGA_2, DegenerationClass.OMEGA_3)
_BOUNDARY = (
    DegenerationClass.BOUNDARY_X1,
    DegenerationClass.BOUNDARY_X2,
    DegenerationClass.BOUNDARY_X3,
)


def classify_degeneration(shape, l, eps=DEGENERATION_EPS):
    """Locate ``l`` relative to the realizable region.

    Pair ``i`` (edges (0,i) and its opposite) is tagged ``Omega_i`` when the
    φ value of edge (0, i) is below ``-1 - eps`` and ``BoundaryX_i`` when it
    lies within ``eps`` of ``-1``.  ``ClampedFace`` covers points where some
    φ equals one without any pair reaching minus one; these only occur where a
    hyperideal-hyperideal edge has length zero.
    """
    k = parse_shape(shape)
    arr = _as_lengths(l)
    _check_closure(k, arr)
    f = _phi_unchecked(k, [float(x) for x in arr])
    if np.all(np.abs(f) < 1.0 - STRICT_MARGIN):
        return DegenerationClass.INTERIOR_L
    for i, (e, _) in enumerate(OPPOSITE_PAIRS):
        if f[e] < -1.0 - eps:
            return _OMEGA[i]
    for i, (e, _) in enumerate(OPPOSITE_PAIRS):
        if f[e] <= -1.0 + eps:
            return _BOUNDARY[i]
    return DegenerationClass.CLAMPED_FACE


# -- volumes -----------------------------------------------------------------

ANGLE_TOL = 1e-7  # arccos near 0 or π amplifies φ rounding to ~1e-9


def _check_angles(k, alpha):
    a = np.asarray(alpha, dtype=float)
    if a.shape != (6,) or not np.all(np.isfinite(a)):
        raise DomainError("expected 6 finite dihedral angles")
    if np.any(a < -ANGLE_TOL) or np.any(a > math.pi + ANGLE_TOL):
        raise DomainError("dihedral angles must lie in [0, π]")
    for v in range(4):
        s = sum(a[EDGE_INDEX[(v, w)]] for w in range(4) if w != v)
        if v < k and s > math.pi + ANGLE_TOL:
            raise DomainError(f"angle sum {s} at hyperideal vertex {v} exceeds π")
        if v >= k and abs(s - math.pi) > ANGLE_TOL:
            raise DomainError(f"angle sum {s} at ideal vertex {v} differs from π")
    return a


def _vol_04(a):
    return 0.5 * sum(lobachevsky(x) for x in a)


def _vol_13(a):
    s = sum(lobachevsky(x) for x in a)
    s += lobachevsky(0.5 * (math.pi - a[0] - a[1] - a[2]))
    return 0.5 * s


def _vol_22(a):
    s = lobachevsky(a[1]) + lobachevsky(a[2]) + lobachevsky(a[3]) + lobachevsky(a[4])
    for x, y in ((a[1], a[2]), (a[3], a[4])):
        for sg in (1.0, -1.0):
            s += lobachevsky(0.5 * (math.pi + sg * a[0] - x - y))
    return 0.5 * s


def _vol_31(a):
    s = lobachevsky(a[2]) + lobachevsky(a[4]) + lobachevsky(a[5])
    for p, q, c in ((a[0], a[1], a[2]), (a[0], a[3], a[4]), (a[1], a[3], a[5])):
        for s1 in (1.0, -1.0):
            for s2 in (1.0, -1.0):
                s += lobachevsky(0.5 * (math.pi + s1 * p + s2 * q - c))
    return 0.5 * s


# Edge (i, j) is the intersection of the faces opposite the two other vertices.
_COMPLEMENT = {(0, 1): (2, 3), (0, 2): (1, 3), (0, 3): (1, 2),
               (1, 2): (0, 3), (1, 3): (0, 2), (2, 3): (0, 1)}
_MINOR_IDX = [[[r for r in range(4) if r != i] for i in range(4)]]


def truncated_lengths(alpha):
    """Edge lengths of the fully truncated tetrahedron with dihedral angles ``alpha``.

    Uses the cofactors of the Gram matrix of the four face normals.
    """
    a = np.asarray(alpha, dtype=float)
    G = np.eye(4)
    for (i, j), (p, q) in _COMPLEMENT.items():
        G[p, q] = G[q, p] = -math.cos(a[EDGE_INDEX[(i, j)]])
    minors = np.empty((4, 4, 3, 3))
    for i in range(4):
        ri = [r for r in range(4) if r != i]
        for j in range(4):
            rj = [r for r in range(4) if r != j]
            minors[i, j] = G[np.ix_(ri, rj)]
    C = np.linalg.det(minors) * ((-1.0) ** np.add.outer(np.arange(4), np.arange(4)))
    out = np.empty(6)
    for n, (i, j) in enumerate(EDGES):
        denom = C[i, i] * C[j, j]
        x = C[i, j] / math.sqrt(denom) if denom > 0 else math.inf
        out[n] = math.acosh(max(1.0, x)) if math.isfinite(x) else math.inf
    return out


_OCTA = 8.0 * lobachevsky(math.pi / 4.0)


def _vol_40(a):
    a = np.asarray(a, dtype=float)
    if not np.any(a):
        return _OCTA

    def integrand(t):
        return float(np.dot(truncated_lengths(t * a), a))

    val, _ = quad(integrand, 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-12)
    return _OCTA - 0.5 * val


_VOLUME = {0: _vol_04, 1: _vol_13, 2: _vol_22, 3: _vol_31, 4: _vol_40}


def tet_volume(shape, alpha):
    """Hyperbolic volume of the truncated tetrahedron with dihedral angles ``alpha``.

    The fully hyperideal shape has no Lobachevsky closed form; its volume is
    obtained by integrating the Schläfli formula from the regular ideal
    octahedron (all angles zero).
    """
    k = parse_shape(shape)
    a = _check_angles(k, alpha)
    v = float(_VOLUME[k](a))
    if not math.isfinite(v):
        raise NumericError("volume evaluation produced a non-finite value")
    return v


def _covolume_closed(k, arr):
    alpha = dihedral_angles_strict(k, arr)
    return 2.0 * float(_VOLUME[k](alpha)) + float(np.dot(alpha, arr))


@lru_cache(maxsize=None)
def anchor_point(shape):
    """A fixed realizable metric used as base point for the extended co-volume."""
    k = parse_shape(shape)
    l = np.array([1.0 if b < k else 0.0 for (a, b) in EDGES])
    if not is_realizable(k, l):  # pragma: no cover - guarded by tests
        raise UnsupportedConfigurationError(f"no anchor for shape {SHAPE_NAMES[k]}")
    return tuple(float(x) for x in l), _covolume_closed(k, l)


def _clip_pattern(k, l):
    arr = clamp_truncated_edges(k, l)
    f = _phi_unchecked(k, [float(x) for x in arr])
    return tuple((f <= -1.0).tolist() + (f >= 1.0).tolist() + (np.asarray(l) < arr).tolist())


def _segment_knots(k, p, d, samples=64):
    """Parameters in [0, 1] where the extended angles along p + t·d lose smoothness."""
    f = lambda t: _clip_pattern(k, p + t * d)
    ts = np.linspace(0.0, 1.0, samples + 1)
    pats = [f(t) for t in ts]
    knots = [0.0]
    for t0, t1, s0, s1 in zip(ts[:-1], ts[1:], pats[:-1], pats[1:]):
        if s0 == s1:
            continue
        lo, hi = t0, t1
        while hi - lo > 1e-14:
            mid = 0.5 * (lo + hi)
            if f(mid) == s0:
                lo = mid
            else:
                hi = mid
        knots.append(0.5 * (lo + hi))
    knots.append(1.0)
    return knots


def covolume(shape, l):
    """Co-volume ``2·vol + Σ α·l``, extended continuously to all of R^6.

    Off the realizable region the value is the line integral of the extended
    angles along the segment from a fixed anchor metric.
    """
    k = parse_shape(shape)
    arr = _as_lengths(l)
    if is_realizable(k, arr):
        return _covolume_closed(k, arr)
    p, base = anchor_point(k)
    p = np.asarray(p)
    d = arr - p

    def integrand(t):
        return float(np.dot(dihedral_angles_extended(k, p + t * d), d))

    val = 0.0
    knots = _segment_knots(k, p, d)
    for t0, t1 in zip(knots[:-1], knots[1:]):
        part, _ = quad(integrand, t0, t1, limit=200, epsabs=1e-12, epsrel=1e-12)
        val += part
    out = base + val
    if not math.isfinite(out):
        raise NumericError("co-volume line integral did not converge")
    return out


def fd_step(l):
    return 1e-5 * max(1.0, float(np.max(np.abs(l))))


def _phi_jacobian(k, arr, h, cols):
    """Richardson-extrapolated central differences of φ in the given columns."""
    J = np.zeros((6, 6))
    base = [float(x) for x in arr]

    def central(j, step):
        up, dn = list(base), list(base)
        up[j] += step
        dn[j] -= step
        return (_phi_unchecked(k, up) - _phi_unchecked(k, dn)) / (2.0 * step)

    for j in cols:
        J[:, j] = (4.0 * central(j, 0.5 * h) - central(j, h)) / 3.0
    return J


def covolume_hessian(shape, l, h=None):
    """Hessian of the co-volume, i.e. the Jacobian of the extended angles.

    Differentiates the smooth quantity φ numerically and applies the
    derivative of arccos exactly, which keeps the result accurate when a
    dihedral angle is close to 0 or π.  Clipped angles and clamped edges
    contribute zero derivatives.
    """
    k = parse_shape(shape)
    arr = _as_lengths(l)
    if h is None:
        h = 1e-4 * max(1.0, float(np.max(np.abs(arr))))
    c = clamp_truncated_edges(k, arr)
    trunc = [i in hyperideal_edges(k) for i in range(6)]
    near_corner = [j for j in range(6) if trunc[j] and 0.0 <= arr[j] < h]
    smooth = [j for j in range(6) if j not in near_corner and not (trunc[j] and arr[j] < 0.0)]
    f = _phi_unchecked(k, [float(x) for x in c])
    inside = np.abs(f) < 1.0
    darc = np.zeros(6)
    darc[inside] = -1.0 / np.sqrt((1.0 - f[inside]) * (1.0 + f[inside]))
    H = darc[:, None] * _phi_jacobian(k, c, h, smooth)
    fd = fd_step(arr)
    for j in near_corner:
        e = np.zeros(6)
        e[j] = fd
        H[:, j] = (dihedral_angles_extended(k, arr + e) - dihedral_angles_extended(k, arr - e)) / (2 * fd)
    return H


def decoration_directions(shape):
    """Basis of length changes coming from re-decorating the ideal vertices."""
    k = parse_shape(shape)
    out = []
    for v in range(k, 4):
        w = np.zeros(6)
        for i, e in enumerate(EDGES):
            if v in e:
                w[i] = 1.0
        out.append(w)
    return out
