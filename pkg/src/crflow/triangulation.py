"""Face-pairing descriptions of triangulated 3-dimensional pseudo-manifolds.

Face ``f`` of a tetrahedron is the face opposite its vertex ``f``.  A gluing
entry ``{"tet": j, "face": g, "perm": [p0, p1, p2, p3]}`` attached to face
``f`` of tetrahedron ``i`` identifies vertex ``v`` of tetrahedron ``i`` with
vertex ``perm[v]`` of tetrahedron ``j``; necessarily ``perm[f] == g``.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tetra
from .errors import DomainError, NotRealizableError, ValidationError

LOCAL_EDGES = tetra.EDGES
_LOCAL_EDGE_INDEX = tetra.EDGE_INDEX


@dataclass(frozen=True)
class FaceGluing:
    tet: int
    face: int
    perm: tuple


@dataclass
class GluingSpec:
    """Raw face pairings plus optional ideal/hyperideal vertex flags.

    ``vertex_flags`` maps a vertex-class key to ``"ideal"`` or
    ``"hyperideal"``.  A key is either the class index (as numbered by
    ``build_complex``) or ``"t:v"`` naming tetrahedron ``t``'s vertex ``v``.
    Unlisted classes are ideal.
    """

    n_tets: int
    gluings: list
    vertex_flags: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ValidationError("gluing description must be a JSON object")
        try:
            n = data["tets"]
            raw = data["gluings"]
        except KeyError as exc:
            raise ValidationError(f"missing key {exc.args[0]!r}") from None
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ValidationError(f"'tets' must be a non-negative integer, got {n!r}")
        if not isinstance(raw, list) or len(raw) != n:
            raise ValidationError(f"'gluings' must list exactly {n} tetrahedra")
        gluings = []
        for t, faces in enumerate(raw):
            if not isinstance(faces, list) or len(faces) > 4:
                raise ValidationError("each tetrahedron has at most 4 face gluings", tet=t)
            faces = faces + [None] * (4 - len(faces))  # missing faces are reported as unglued
            row = []
            for f, g in enumerate(faces):
                if g is None:
                    row.append(None)
                    continue
                try:
                    row.append(FaceGluing(int(g["tet"]), int(g["face"]), tuple(int(x) for x in g["perm"])))
                except (KeyError, TypeError, ValueError):
                    raise ValidationError("malformed face gluing", tet=t, item=f"face {f}") from None
            gluings.append(row)
        flags = data.get("vertex_flags") or {}
        if not isinstance(flags, dict):
            raise ValidationError("'vertex_flags' must be an object")
        return cls(n, gluings, {str(k): v for k, v in flags.items()})

    def to_dict(self):
        out = {
            "tets": self.n_tets,
            "gluings": [
                [None if g is None else {"tet": g.tet, "face": g.face, "perm": list(g.perm)} for g in row]
                for row in self.gluings
            ],
        }
        if self.vertex_flags:
            out["vertex_flags"] = dict(self.vertex_flags)
        return out


def load_gluing(path):
    """Read a ``GluingSpec`` from a JSON file."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None
    return GluingSpec.from_dict(data)


def figure_eight_spec():
    """Two-tetrahedron ideal triangulation of the figure-eight knot complement."""
    path = Path(__file__).with_name("data") / "figure_eight.json"
    return load_gluing(path)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class TriangulatedComplex:
    """A validated triangulation with edge and vertex classes.

    ``tet_edges[t][c]`` is the edge class of canonical edge ``c`` of
    tetrahedron ``t``; canonical labels put hyperideal vertices first, and
    ``relabel[t][c]`` gives the original vertex of canonical slot ``c``.
    """

    spec: GluingSpec
    edge_classes: list
    vertex_classes: list
    vertex_ideal: list
    edge_endpoints: list
    shapes: list
    relabel: list
    tet_edges: np.ndarray
    valences: list

    @property
    def n_tets(self):
        return self.spec.n_tets

    @property
    def n_edges(self):
        return len(self.edge_classes)

    @property
    def n_vertices(self):
        return len(self.vertex_classes)

    @property
    def ideal_vertices(self):
        return [i for i, ideal in enumerate(self.vertex_ideal) if ideal]

    def tet_lengths(self, m, t):
        return np.asarray(m, dtype=float)[self.tet_edges[t]]

    def decoration_matrix(self):
        """Matrix ``A`` with ``A[e, j]`` = endpoints of edge ``e`` at ideal vertex ``j``."""
        ideal = self.ideal_vertices
        col = {v: j for j, v in enumerate(ideal)}
        A = np.zeros((self.n_edges, len(ideal)))
        for e, ends in enumerate(self.edge_endpoints):
            for v in ends:
                if v in col:
                    A[e, col[v]] += 1.0
        return A

    def summary(self):
        return {
            "tets": self.n_tets,
            "edges": self.n_edges,
            "vertices": self.n_vertices,
            "edge_valences": list(self.valences),
            "min_valence": min(self.valences, default=0),
            "all_valences_at_least_10": all(v >= 10 for v in self.valences),
            "vertex_types": ["ideal" if x else "hyperideal" for x in self.vertex_ideal],
            "tet_shapes": [tetra.SHAPE_NAMES[k] for k in self.shapes],
            "vertex_link_euler": vertex_link_euler(self),
        }


def _check_gluings(spec):
    n = spec.n_tets
    for t, row in enumerate(spec.gluings):
        for f, g in enumerate(row):
            where = f"face {f}"
            if g is None:
                raise ValidationError("face is not glued; the complex must be closed", tet=t, item=where)
            if not 0 <= g.tet < n:
                raise ValidationError(f"gluing targets missing tetrahedron {g.tet}", tet=t, item=where)
            if not 0 <= g.face < 4:
                raise ValidationError(f"gluing targets invalid face {g.face}", tet=t, item=where)
            if sorted(g.perm) != [0, 1, 2, 3]:
                raise ValidationError(f"{list(g.perm)} is not a permutation of 0..3", tet=t, item=where)
            if g.perm[f] != g.face:
                raise ValidationError("permutation does not carry the face onto the target face", tet=t, item=where)
            if g.tet == t and g.face == f:
                raise ValidationError("face is glued to itself", tet=t, item=where)
            back = spec.gluings[g.tet][g.face]
            inv = [0] * 4
            for v, w in enumerate(g.perm):
                inv[w] = v
            if back is None or back.tet != t or back.face != f or list(back.perm) != inv:
                raise ValidationError("face pairing is not involutive", tet=t, item=where)


def _walk_edges(spec, edge_of, edge_classes):
    """Walk around each edge and check the incidences form one cycle."""
    valences = []
    for cls, members in enumerate(edge_classes):
        t0, e0 = members[0]
        a, b = LOCAL_EDGES[e0]
        c, d = [v for v in range(4) if v not in (a, b)]
        start = (t0, a, b, c, d)
        state = start
        seen = []
        while True:
            t, a, b, c, d = state
            seen.append((t, _LOCAL_EDGE_INDEX[(a, b)], a, b))
            g = spec.gluings[t][d]
            p = g.perm
            state = (g.tet, p[a], p[b], p[d], p[c])
            if state == start:
                break
            if len(seen) > 6 * spec.n_tets + 6:
                raise ValidationError("edge walk did not close", tet=t0, item=f"edge {LOCAL_EDGES[e0]}")
        incid = [(t, e) for t, e, _, _ in seen]
        if len(set(incid)) != len(incid) or sorted(incid) != sorted(members):
            bad = next((x for x in incid if incid.count(x) > 1), members[0])
            raise ValidationError(
                "edge is identified with itself in a non-cyclic way",
                tet=bad[0], item=f"edge {LOCAL_EDGES[bad[1]]}",
            )
        valences.append(len(incid))
    return valences


def _resolve_flags(spec, vertex_of, n_vclasses):
    ideal = [True] * n_vclasses
    for key, val in spec.vertex_flags.items():
        if val not in ("ideal", "hyperideal"):
            raise ValidationError(f"vertex flag {key!r} must be 'ideal' or 'hyperideal', got {val!r}")
        if ":" in key:
            try:
                t, v = (int(x) for x in key.split(":"))
                cls = vertex_of[t][v]
            except (ValueError, IndexError):
                raise ValidationError(f"bad vertex reference {key!r}") from None
        else:
            try:
                cls = int(key)
            except ValueError:
                raise ValidationError(f"bad vertex reference {key!r}") from None
            if not 0 <= cls < n_vclasses:
                raise ValidationError(f"vertex class {cls} does not exist")
        ideal[cls] = val == "ideal"
    return ideal


def build_complex(spec):
    """Validate ``spec`` and compute edge/vertex classes and tetrahedron shapes."""
    if not isinstance(spec, GluingSpec):
        spec = GluingSpec.from_dict(spec)
    _check_gluings(spec)
    n = spec.n_tets
    uf_e = _UnionFind(6 * n)
    uf_v = _UnionFind(4 * n)
    for t, row in enumerate(spec.gluings):
        for f, g in enumerate(row):
            face = [v for v in range(4) if v != f]
            for v in face:
                uf_v.union(4 * t + v, 4 * g.tet + g.perm[v])
            for i, a in enumerate(face):
                for b in face[i + 1:]:
                    e2 = _LOCAL_EDGE_INDEX[(g.perm[a], g.perm[b])]
                    uf_e.union(6 * t + _LOCAL_EDGE_INDEX[(a, b)], 6 * g.tet + e2)

    def classes(uf, size, count):
        index, members = {}, []
        of = [[0] * size for _ in range(n)]
        for t in range(n):
            for x in range(size):
                r = uf.find(size * t + x)
                if r not in index:
                    index[r] = len(members)
                    members.append([])
                of[t][x] = index[r]
                members[index[r]].append((t, x))
        return of, members

    edge_of, edge_classes = classes(uf_e, 6, n)
    vertex_of, vertex_classes = classes(uf_v, 4, n)
    valences = _walk_edges(spec, edge_of, edge_classes)
    ideal = _resolve_flags(spec, vertex_of, len(vertex_classes))

    endpoints = []
    for members in edge_classes:
        t, e = members[0]
        a, b = LOCAL_EDGES[e]
        endpoints.append(tuple(sorted((vertex_of[t][a], vertex_of[t][b]))))

    shapes, relabel = [], []
    tet_edges = np.zeros((n, 6), dtype=int)
    for t in range(n):
        order = sorted(range(4), key=lambda v: (ideal[vertex_of[t][v]], v))
        shapes.append(sum(1 for v in range(4) if not ideal[vertex_of[t][v]]))
        relabel.append(tuple(order))
        for c, (i, j) in enumerate(LOCAL_EDGES):
            tet_edges[t, c] = edge_of[t][_LOCAL_EDGE_INDEX[(order[i], order[j])]]

    return TriangulatedComplex(
        spec=spec,
        edge_classes=edge_classes,
        vertex_classes=vertex_classes,
        vertex_ideal=ideal,
        edge_endpoints=endpoints,
        shapes=shapes,
        relabel=relabel,
        tet_edges=tet_edges,
        valences=valences,
    )


def vertex_link_euler(cx):
    """Euler characteristic of each vertex link surface.

    The link of a vertex class is triangulated by one triangle per corner;
    its vertices are the edge ends at that class and its edges are the face
    corners glued in pairs.
    """
    out = []
    for v, corners in enumerate(cx.vertex_classes):
        faces = len(corners)
        edges = 3 * faces // 2
        verts = sum(1 for ends in cx.edge_endpoints for w in ends if w == v)
        out.append(verts - edges + faces)
    return out


def edge_valences(cx):
    return list(cx.valences)


def _check_metric(cx, m):
    arr = np.asarray(m, dtype=float)
    if arr.shape != (cx.n_edges,):
        raise DomainError(f"metric must have {cx.n_edges} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("metric entries must be finite")
    return arr


def tet_angles(cx, m, extended=False):
    """Per-tetrahedron dihedral angles in canonical edge order."""
    arr = _check_metric(cx, m)
    out = np.empty((cx.n_tets, 6))
    for t, k in enumerate(cx.shapes):
        lt = arr[cx.tet_edges[t]]
        if extended:
            out[t] = tetra.dihedral_angles_extended(k, lt)
        else:
            try:
                out[t] = tetra.dihedral_angles_strict(k, lt)
            except (NotRealizableError, DomainError):
                tag = tetra.classify_degeneration(k, tetra.clamp_truncated_edges(k, lt))
                raise NotRealizableError(
                    f"tetrahedron {t} ({tetra.SHAPE_NAMES[k]}) is not realizable: {tag}",
                    tet=t, degeneration=tag,
                ) from None
    return out


def _assemble(cx, angles):
    K = np.full(cx.n_edges, 2.0 * math.pi)
    np.subtract.at(K, cx.tet_edges.ravel(), angles.ravel())
    return K


def curvature(cx, m):
    """Edge curvatures ``2π - Σ angles`` for a realizable metric."""
    return _assemble(cx, tet_angles(cx, m))


def extended_curvature(cx, m):
    """Edge curvatures from the extended angles; defined for every metric."""
    return _assemble(cx, tet_angles(cx, m, extended=True))


def apply_decoration(cx, m, w):
    """Move the horosphere at each ideal vertex class by ``w``.

    ``w`` has one entry per vertex class; an edge from ``v`` to ``v'`` gains
    ``w[v] + w[v']``.  Entries at hyperideal classes must be zero.
    """
    arr = _check_metric(cx, m)
    w = np.asarray(w, dtype=float)
    if w.shape != (cx.n_vertices,):
        raise DomainError(f"decoration needs {cx.n_vertices} entries, got shape {w.shape}")
    bad = [v for v in range(cx.n_vertices) if not cx.vertex_ideal[v] and w[v] != 0.0]
    if bad:
        raise DomainError(f"decoration is nonzero at hyperideal vertex classes {bad}")
    return arr + cx.decoration_matrix() @ w[cx.ideal_vertices]


def decoration_residual(cx, m1, m2):
    """Least-squares decoration ``w`` with ``m2 ≈ apply_decoration(m1, w)``.

    Returns ``(w, residual)`` where ``w`` is indexed by vertex class (zero at
    hyperideal classes) and ``residual`` is the 2-norm of what is left over.
    """
    d = _check_metric(cx, m2) - _check_metric(cx, m1)
    w = np.zeros(cx.n_vertices)
    A = cx.decoration_matrix()
    if A.shape[1] == 0:
        return w, float(np.linalg.norm(d))
    sol, *_ = np.linalg.lstsq(A, d, rcond=None)
    w[cx.ideal_vertices] = sol
    return w, float(np.linalg.norm(d - A @ sol))


def strip_decoration(cx, m):
    """Component of ``m`` orthogonal to all decoration changes."""
    arr = _check_metric(cx, m)
    A = cx.decoration_matrix()
    if A.shape[1] == 0:
        return arr.copy()
    w, *_ = np.linalg.lstsq(A, arr, rcond=None)
    return arr - A @ w


def vertex_length_sums(cx, m):
    """For each ideal vertex class, Σ over edge ends at it of the edge length."""
    arr = _check_metric(cx, m)
    return cx.decoration_matrix().T @ arr


def realizable_tets(cx, m):
    arr = _check_metric(cx, m)
    return [tetra.is_realizable(k, arr[cx.tet_edges[t]]) for t, k in enumerate(cx.shapes)]


def is_realizable(cx, m):
    return all(realizable_tets(cx, m))


def total_volume(cx, m):
    """Sum of tetrahedron volumes; requires a realizable metric."""
    angles = tet_angles(cx, m)
    return float(sum(tetra.tet_volume(k, a) for k, a in zip(cx.shapes, angles)))


def h_value(cx, m):
    """``Σ co-volumes - 2π Σ lengths``; its gradient is minus the curvature."""
    arr = _check_metric(cx, m)
    cov = sum(tetra.covolume(k, arr[cx.tet_edges[t]]) for t, k in enumerate(cx.shapes))
    return float(cov - 2.0 * math.pi * arr.sum())


def h_hessian(cx, m, h=None):
    """Hessian of ``h_value``: the Jacobian of minus the extended curvature."""
    arr = _check_metric(cx, m)
    if h is None:
        h = tetra.fd_step(arr)
    n = cx.n_edges
    H = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        H[:, j] = -(extended_curvature(cx, arr + e) - extended_curvature(cx, arr - e)) / (2 * h)
    return H
