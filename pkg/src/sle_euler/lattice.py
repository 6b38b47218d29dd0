"""Discrete models: site percolation on the triangular lattice in marked polygons,
Wilson's algorithm on square grids, discrete harmonic measure and the
loop-erased walk event counted by Fomin's determinant.

Random numbers come from a splitmix64 counter stream keyed by
``(seed, replica)``, so every replica is reproducible on its own and results do
not depend on how many worker threads run.  ``SLE_EULER_THREADS`` caps the
thread count.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange
from scipy import ndimage, sparse
from scipy.sparse import linalg as splinalg

from .pairings import NonCrossingPartition, catalan, enumerate_noncrossing_pairings, pairing_to_partition

# prefer OpenMP; old system TBB builds trigger a version warning on first use
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

AXIAL_NEIGHBORS = np.array([(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)], dtype=np.int64)
GRID_NEIGHBORS = np.array([(1, 0), (0, 1), (-1, 0), (0, -1)], dtype=np.int64)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def configure_threads() -> int:
    """Apply ``SLE_EULER_THREADS`` (if set) and return the active thread count."""
    env = os.environ.get("SLE_EULER_THREADS")
    if env:
        k = max(1, min(int(env), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(k)
    return numba.get_num_threads()


# ---------------------------------------------------------------------------
# counter-based RNG


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _stream_key(seed, replica):
    return _mix64(np.uint64(seed) + _mix64(np.uint64(replica) * _GOLDEN + np.uint64(1)))


@njit(cache=True)
def _draw(key, counter):
    # splitmix64 output number ``counter`` of the stream ``key``
    return _mix64(key + np.uint64(counter + 1) * _GOLDEN)


def _key(seed, replica) -> np.uint64:
    # called from Python the jitted function returns a Python int; keep it unsigned 64-bit
    return np.uint64(_stream_key(np.uint64(seed), np.uint64(replica)))


def stream_values(seed: int, replica: int, count: int) -> np.ndarray:
    """First ``count`` 64-bit outputs of the stream ``(seed, replica)``."""
    return _stream_values(np.uint64(seed), np.uint64(replica), count)


@njit(cache=True)
def _stream_values(seed, replica, count):
    key = _stream_key(seed, replica)
    out = np.empty(count, dtype=np.uint64)
    for c in range(count):
        out[c] = _draw(key, c)
    return out


# ---------------------------------------------------------------------------
# geometry


def _points_in_polygon(pts: np.ndarray, poly: np.ndarray, slack: float) -> np.ndarray:
    # even-odd ray casting; points within ``slack`` of an edge count as inside
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    m = len(poly)
    for k in range(m):
        (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % m]
        cond = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= cond & (x < xc)
    return inside | (_distance_to_boundary(pts, poly)[0] <= slack)


def _distance_to_boundary(pts: np.ndarray, poly: np.ndarray):
    """Distance to the polygon boundary and the perimeter fraction of the nearest point."""
    m = len(poly)
    seg = np.roll(poly, -1, axis=0) - poly
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    per = cum[-1]
    best = np.full(len(pts), np.inf)
    param = np.zeros(len(pts))
    for k in range(m):
        d = pts - poly[k]
        t = np.clip((d @ seg[k]) / seglen[k] ** 2, 0.0, 1.0)
        proj = poly[k] + t[:, None] * seg[k]
        dist = np.hypot(*(pts - proj).T)
        better = dist < best - 1e-15
        best[better] = dist[better]
        param[better] = (cum[k] + t[better] * seglen[k]) / per
    return best, param % 1.0


def perimeter_fraction(poly, z: complex) -> float:
    poly = np.asarray(poly, dtype=float)
    _, t = _distance_to_boundary(np.array([[z.real, z.imag]]), poly)
    return float(t[0])


def _arc_of(params: np.ndarray, marks: np.ndarray) -> np.ndarray:
    # arc k runs from mark k to mark k+1 (cyclically)
    idx = np.searchsorted(marks, params, side="right") - 1
    return np.where(idx < 0, len(marks) - 1, idx)


# ---------------------------------------------------------------------------
# domains


@dataclass
class LatticeDomain:
    """Sites of a lattice inside a marked polygon at mesh ``mesh``.

    ``sites`` are interior lattice coordinates (axial for the triangular
    lattice, Cartesian for the square one).  ``boundary`` are the outside
    sites adjacent to the interior; ``boundary_arc[b]`` is the arc holding
    boundary site ``b`` (arc ``k`` runs from mark ``k`` to mark ``k+1``) or
    ``-1`` for an unmarked domain.  ``neighbors[i]`` lists node ids of the
    neighbours of interior site ``i``; ids ``>= len(sites)`` are boundary sites.
    """

    kind: str
    mesh: float
    sites: np.ndarray
    boundary: np.ndarray
    boundary_arc: np.ndarray
    neighbors: np.ndarray
    vertices: np.ndarray | None = None
    marks: np.ndarray | None = None
    _index: dict = field(default=None, repr=False)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_arcs(self) -> int:
        return 0 if self.marks is None else len(self.marks)

    def positions(self, coords=None) -> np.ndarray:
        c = self.sites if coords is None else np.asarray(coords)
        if self.kind == "triangular":
            return self.mesh * np.stack([c[:, 0] + 0.5 * c[:, 1], c[:, 1] * math.sqrt(3) / 2], axis=1)
        return self.mesh * c.astype(float)

    def node(self, coord) -> int:
        """Node id of an interior or boundary site given its lattice coordinates."""
        if self._index is None:
            idx = {tuple(s): i for i, s in enumerate(self.sites.tolist())}
            k = self.n_sites
            idx.update({tuple(s): k + b for b, s in enumerate(self.boundary.tolist())})
            self._index = idx
        return self._index[tuple(int(v) for v in coord)]

    def node_position(self, node: int) -> np.ndarray:
        c = self.sites[node] if node < self.n_sites else self.boundary[node - self.n_sites]
        return self.positions(c[None, :])[0]

    def arc_edges(self) -> np.ndarray:
        """Edges of the percolation graph: interior pairs and interior-to-arc pairs (arc node ``n_sites + k``)."""
        K = self.n_sites
        nb = self.neighbors
        src = np.repeat(np.arange(K), nb.shape[1])
        dst = nb.ravel()
        keep = dst >= 0
        src, dst = src[keep], dst[keep]
        bnd = dst >= K
        dst = np.where(bnd, K + self.boundary_arc[np.clip(dst - K, 0, None)], dst)
        inner = ~bnd & (src < dst)
        e = np.concatenate([np.stack([src[inner], dst[inner]], 1), np.stack([src[bnd], dst[bnd]], 1)])
        return np.unique(e, axis=0).astype(np.int64)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "mesh": self.mesh,
                           "vertices": None if self.vertices is None else self.vertices.tolist(),
                           "marks": None if self.marks is None else self.marks.tolist()})


def _lattice_offsets(kind):
    if kind == "triangular":
        return AXIAL_NEIGHBORS
    if kind == "square":
        return GRID_NEIGHBORS
    raise ValueError(f"unknown lattice kind {kind!r}")


def _assemble(kind, mesh, inside_coords, vertices=None, marks=None, params_fn=None):
    offs = _lattice_offsets(kind)
    sites = np.asarray(inside_coords, dtype=np.int64)
    index = {tuple(s): i for i, s in enumerate(sites.tolist())}
    bindex: dict = {}
    nb = np.empty((len(sites), len(offs)), dtype=np.int64)
    bnd = []
    for i, s in enumerate(sites.tolist()):
        for k, (di, dj) in enumerate(offs.tolist()):
            c = (s[0] + di, s[1] + dj)
            j = index.get(c)
            if j is None:
                j = bindex.get(c)
                if j is None:
                    j = bindex[c] = len(bnd)
                    bnd.append(c)
                j = len(sites) + j
            nb[i, k] = j
    bnd = np.array(bnd, dtype=np.int64).reshape(-1, 2)
    dom = LatticeDomain(kind, mesh, sites, bnd, np.full(len(bnd), -1, dtype=np.int64), nb,
                        None if vertices is None else np.asarray(vertices, float),
                        None if marks is None else np.asarray(marks, float))
    if marks is not None:
        params = params_fn(dom.positions(bnd))
        dom.boundary_arc = _arc_of(params, dom.marks).astype(np.int64)
        counts = np.bincount(dom.boundary_arc, minlength=len(marks))
        if np.any(counts == 0):
            raise ValueError("mesh too coarse: some boundary arc holds no lattice site")
    return dom


def build_polygon_domain(vertices, marks, mesh: float, kind: str = "triangular") -> LatticeDomain:
    """Lattice sites inside a simple polygon with ``2n`` marked boundary points.

    ``vertices`` are complex numbers in counterclockwise order.  ``marks`` are
    perimeter fractions in ``[0, 1)`` measured from the first vertex, or
    complex points that get projected onto the boundary.  They must be in
    cyclic (counterclockwise) order.
    """
    poly = np.array([[complex(v).real, complex(v).imag] for v in vertices], dtype=float)
    if len(poly) < 3:
        raise ValueError("polygon needs at least 3 vertices")
    area = 0.5 * np.sum(poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])
    if area <= 0:
        raise ValueError("vertices must be in counterclockwise order")
    marks = [perimeter_fraction(poly, complex(m)) if isinstance(m, complex) else float(m) % 1.0 for m in marks]
    marks = np.array(marks)
    if len(marks) < 2 or len(marks) % 2:
        raise ValueError("need an even number >= 2 of marks")
    shift = int(np.argmin(marks))
    rolled = np.roll(marks, -shift)
    if np.any(np.diff(rolled) <= 0):
        raise ValueError("marks must be distinct and in counterclockwise order")
    if mesh <= 0:
        raise ValueError("mesh must be positive")
    _lattice_offsets(kind)
    # candidate lattice coordinates covering the bounding box
    lo, hi = poly.min(0), poly.max(0)
    if kind == "triangular":
        jlo, jhi = math.floor(lo[1] / (mesh * math.sqrt(3) / 2)) - 1, math.ceil(hi[1] / (mesh * math.sqrt(3) / 2)) + 1
        ilo = math.floor(lo[0] / mesh - 0.5 * jhi) - 1
        ihi = math.ceil(hi[0] / mesh - 0.5 * jlo) + 1
    else:
        jlo, jhi = math.floor(lo[1] / mesh) - 1, math.ceil(hi[1] / mesh) + 1
        ilo, ihi = math.floor(lo[0] / mesh) - 1, math.ceil(hi[0] / mesh) + 1
    I, Jg = np.meshgrid(np.arange(ilo, ihi + 1), np.arange(jlo, jhi + 1), indexing="ij")
    coords = np.stack([I.ravel(), Jg.ravel()], 1)
    probe = LatticeDomain(kind, mesh, coords, coords[:0], coords[:0, 0], coords[:0])
    pts = probe.positions(coords)
    inside = _points_in_polygon(pts, poly, 1e-9 * mesh)
    grid = inside.reshape(I.shape)
    if kind == "triangular":
        structure = np.array([[0, 1, 1], [1, 1, 1], [1, 1, 0]])
    else:
        structure = ndimage.generate_binary_structure(2, 1)
    labels, count = ndimage.label(grid, structure=structure)
    if count == 0:
        raise ValueError("mesh too coarse: no lattice site inside the polygon")
    if count > 1:
        raise ValueError("the lattice approximation of the polygon is disconnected")
    # arcs are built on sorted marks, then relabelled so arc k starts at the k-th mark given
    order = np.argsort(marks)
    dom = _assemble(kind, mesh, coords[inside], poly, marks[order], lambda p: _distance_to_boundary(p, poly)[1])
    dom.boundary_arc = order[dom.boundary_arc].astype(np.int64)
    dom.marks = marks
    return dom


def lozenge_domain(mesh: float) -> LatticeDomain:
    """Unit rhombus with 60 degree angle at the origin, marks at the four corners."""
    w = complex(0.5, math.sqrt(3) / 2)
    return build_polygon_domain([0, 1, 1 + w, w], [0.0, 0.25, 0.5, 0.75], mesh)


def regular_hexagon_domain(mesh: float, diameter: float = 1.0) -> LatticeDomain:
    """Regular hexagon with vertices at angles ``k pi / 3``, marked at its corners."""
    r = 0.5 * diameter
    verts = [r * complex(math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)) for k in range(6)]
    return build_polygon_domain(verts, [k / 6 for k in range(6)], mesh)


def disk_domain(angles, mesh: float, radius: float = 0.5, sides: int = 720) -> LatticeDomain:
    """Polygonal approximation of a disc with marks at the given angles (radians)."""
    verts = [radius * complex(math.cos(2 * math.pi * k / sides), math.sin(2 * math.pi * k / sides))
             for k in range(sides)]
    return build_polygon_domain(verts, [(a / (2 * math.pi)) % 1.0 for a in angles], mesh)


def square_grid_domain(m: int) -> LatticeDomain:
    """``m x m`` interior sites ``1..m`` of the square lattice; mesh ``1/(m+1)``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    I, Jg = np.meshgrid(np.arange(1, m + 1), np.arange(1, m + 1), indexing="ij")
    coords = np.stack([I.ravel(), Jg.ravel()], 1)
    return _assemble("square", 1.0 / (m + 1), coords)


def domain_from_json(text: str) -> LatticeDomain:
    """Domain description: ``{"kind", "mesh", "vertices": [[x, y], ...], "marks": [...]}``
    or ``{"kind": "square_grid", "size": m}``."""
    d = json.loads(text)
    if d.get("kind") == "square_grid":
        return square_grid_domain(int(d["size"]))
    verts = [complex(x, y) for x, y in d["vertices"]]
    marks = [complex(*m) if isinstance(m, (list, tuple)) else float(m) for m in d["marks"]]
    return build_polygon_domain(verts, marks, float(d["mesh"]), d.get("kind", "triangular"))


def domain_to_json(vertices, marks, mesh: float, kind: str = "triangular") -> str:
    return json.dumps({"kind": kind, "mesh": mesh,
                       "vertices": [[complex(v).real, complex(v).imag] for v in vertices],
                       "marks": [float(m) for m in marks]})


# ---------------------------------------------------------------------------
# percolation


@njit(cache=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def _percolate(src, dst, n_sites, n_arcs, key, parent, color, roots):
    n_nodes = n_sites + n_arcs
    for i in range(n_nodes):
        parent[i] = i
    word = np.uint64(0)
    for i in range(n_sites):
        if i % 64 == 0:
            word = _draw(key, i // 64)
        color[i] = np.uint8((word >> np.uint64(i % 64)) & np.uint64(1))
    for k in range(n_arcs):
        # even arcs blue (1), odd arcs yellow (0)
        color[n_sites + k] = np.uint8(1 - k % 2)
    for e in range(src.shape[0]):
        a = src[e]
        b = dst[e]
        if color[a] == color[b]:
            ra = _find(parent, a)
            rb = _find(parent, b)
            if ra < rb:
                parent[rb] = ra
            elif rb < ra:
                parent[ra] = rb
    for k in range(n_arcs):
        roots[k] = _find(parent, n_sites + k)


@njit(cache=True)
def _blue_code(roots, n_arcs):
    # restricted growth string of the blue-arc partition packed in base n
    n = n_arcs // 2
    code = 0
    mult = 1
    for b in range(n):
        lab = b
        for c in range(b):
            if roots[2 * c] == roots[2 * b]:
                lab = c
                break
        code += lab * mult
        mult *= n
    return code


@njit(cache=True, parallel=True)
def _percolation_codes(src, dst, n_sites, n_arcs, seed, first, count, blocks):
    out = np.empty(count, dtype=np.int64)
    per = (count + blocks - 1) // blocks
    for b in prange(blocks):
        parent = np.empty(n_sites + n_arcs, dtype=np.int32)
        color = np.empty(n_sites + n_arcs, dtype=np.uint8)
        roots = np.empty(n_arcs, dtype=np.int32)
        for s in range(b * per, min(count, (b + 1) * per)):
            key = _stream_key(np.uint64(seed), np.uint64(first + s))
            _percolate(src, dst, n_sites, n_arcs, key, parent, color, roots)
            out[s] = _blue_code(roots, n_arcs)
    return out


def _code_table(n: int) -> dict[int, NonCrossingPartition]:
    table = {}
    for p in enumerate_noncrossing_pairings(n):
        part = pairing_to_partition(p)
        code = 0
        for b in range(n):
            block = part.block_of(2 * b + 1)
            code += ((min(block) - 1) // 2) * n ** b
        table[code] = part
    return table


def _decode(code: int, n: int) -> NonCrossingPartition:
    labels = [(code // n ** b) % n for b in range(n)]
    blocks: dict[int, list[int]] = {}
    for b, lab in enumerate(labels):
        blocks.setdefault(lab, []).append(2 * b + 1)
    return NonCrossingPartition(n, tuple(tuple(v) for v in blocks.values()))


@dataclass
class EventOutcome:
    """Connectivity of same-colour arcs and the induced partition of the blue edges.

    Edge ``e_{k+1}`` is arc ``k``; blue edges have odd labels.
    """

    connectivity: np.ndarray
    partition: NonCrossingPartition

    def to_json(self) -> str:
        return json.dumps({"connectivity": self.connectivity.tolist(),
                           "blocks": [list(b) for b in self.partition.blocks]})


def _check_marked(dom: LatticeDomain):
    if dom.kind != "triangular" or dom.n_arcs < 2:
        raise ValueError("percolation needs a marked triangular-lattice domain")


def percolation_event_sample(dom: LatticeDomain, seed: int, replica: int = 0) -> EventOutcome:
    """One critical site-percolation colouring (replica ``replica`` of stream ``seed``)."""
    _check_marked(dom)
    m = dom.n_arcs
    src, dst = _edge_columns(dom)
    parent = np.empty(dom.n_sites + m, dtype=np.int32)
    color = np.empty(dom.n_sites + m, dtype=np.uint8)
    roots = np.empty(m, dtype=np.int32)
    _percolate(src, dst, dom.n_sites, m, _key(seed, replica), parent, color, roots)
    conn = np.zeros((m, m), dtype=np.int64)
    for a in range(m):
        for b in range(m):
            conn[a, b] = int(a % 2 == b % 2 and roots[a] == roots[b])
    part = _decode(int(_blue_code(roots, m)), m // 2)
    return EventOutcome(conn, part)


@dataclass
class EventEstimate:
    n_samples: int
    partitions: list
    counts: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n_samples

    @property
    def stderr(self) -> np.ndarray:
        p = self.frequencies
        return np.sqrt(p * (1 - p) / self.n_samples)

    def to_json(self) -> str:
        return json.dumps({"n_samples": self.n_samples, "events": [
            {"blocks": [list(b) for b in part.blocks], "count": int(c), "frequency": float(f), "stderr": float(s)}
            for part, c, f, s in zip(self.partitions, self.counts, self.frequencies, self.stderr)]})


def percolation_codes(dom: LatticeDomain, n_samples: int, seed: int, first: int = 0) -> np.ndarray:
    _check_marked(dom)
    configure_threads()
    blocks = max(1, min(n_samples, 64 * numba.get_num_threads()))
    src, dst = _edge_columns(dom)
    return _percolation_codes(src, dst, dom.n_sites, dom.n_arcs, seed, first, n_samples, blocks)


def _edge_columns(dom):
    e = dom.arc_edges()
    return np.ascontiguousarray(e[:, 0], dtype=np.int32), np.ascontiguousarray(e[:, 1], dtype=np.int32)


def estimate_event_probabilities(dom: LatticeDomain, n_samples: int, seed: int) -> EventEstimate:
    """Monte Carlo frequencies of every blue-edge partition, in pairing enumeration order."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n = dom.n_arcs // 2
    codes = percolation_codes(dom, n_samples, seed)
    table = _code_table(n)
    order = [pairing_to_partition(p) for p in enumerate_noncrossing_pairings(n)]
    pos = {part: i for i, part in enumerate(order)}
    counts = np.zeros(catalan(n), dtype=np.int64)
    vals, cnt = np.unique(codes, return_counts=True)
    for v, c in zip(vals.tolist(), cnt.tolist()):
        part = table.get(v)
        if part is None:
            raise AssertionError(f"crossing partition realized: {_decode(v, n)}")
        counts[pos[part]] += c
    return EventEstimate(n_samples, order, counts)


# ---------------------------------------------------------------------------
# spanning trees and loop-erased walks


@njit(cache=True)
def _wilson(neighbors, degree, absorbing, order, key, nxt, in_tree):
    counter = 0
    for v in range(len(absorbing)):
        in_tree[v] = absorbing[v]
        nxt[v] = -1
    for t in range(len(order)):
        v = order[t]
        u = v
        while not in_tree[u]:
            r = _draw(key, counter)
            counter += 1
            nxt[u] = neighbors[u, r % np.uint64(degree[u])]
            u = nxt[u]
        u = v
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]


@dataclass
class Graph:
    """Padded adjacency; ``absorbing`` nodes are roots of the wired forest."""

    neighbors: np.ndarray
    degree: np.ndarray
    absorbing: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.degree)


def domain_graph(dom: LatticeDomain) -> Graph:
    """Interior sites plus boundary sites; boundary sites are wired together as the root."""
    K, B = dom.n_sites, len(dom.boundary)
    nb = np.full((K + B, dom.neighbors.shape[1]), -1, dtype=np.int64)
    nb[:K] = dom.neighbors
    deg = np.concatenate([np.full(K, dom.neighbors.shape[1]), np.zeros(B, dtype=np.int64)]).astype(np.int64)
    absorbing = np.concatenate([np.zeros(K, bool), np.ones(B, bool)])
    return Graph(nb, deg, absorbing)


def grid_graph(rows: int, cols: int, root: int = 0) -> Graph:
    """Free rectangular grid graph with node ``r * cols + c``; ``root`` is the absorbing node."""
    V = rows * cols
    nb = np.full((V, 4), -1, dtype=np.int64)
    deg = np.zeros(V, dtype=np.int64)
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            for dr, dc in ((1, 0), (0, 1), (-1, 0), (0, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    nb[v, deg[v]] = rr * cols + cc
                    deg[v] += 1
    absorbing = np.zeros(V, bool)
    absorbing[root] = True
    return Graph(nb, deg, absorbing)


def wilson_ust(g, seed: int, replica: int = 0, order=None) -> np.ndarray:
    """Uniform spanning tree (forest wired at the absorbing nodes) by Wilson's algorithm.

    ``g`` is a :class:`Graph` or a :class:`LatticeDomain`.  Returns the parent
    array: ``parent[v]`` is the next node from ``v`` towards the root, ``-1``
    at absorbing nodes.
    """
    if isinstance(g, LatticeDomain):
        g = domain_graph(g)
    free = np.flatnonzero(~g.absorbing)
    if np.any(g.degree[free] == 0) or not g.absorbing.any():
        raise ValueError("graph is disconnected from the root")
    _check_connected(g)
    order = free if order is None else np.asarray(order, dtype=np.int64)
    nxt = np.empty(g.n_nodes, dtype=np.int64)
    in_tree = np.empty(g.n_nodes, dtype=np.bool_)
    _wilson(g.neighbors, g.degree, g.absorbing, order, _key(seed, replica), nxt, in_tree)
    nxt[g.absorbing] = -1
    return nxt


@njit(cache=True)
def _wilson_batch(neighbors, degree, absorbing, order, seed, first, count):
    V = len(degree)
    out = np.empty((count, V), dtype=np.int64)
    nxt = np.empty(V, dtype=np.int64)
    in_tree = np.empty(V, dtype=np.bool_)
    for s in range(count):
        _wilson(neighbors, degree, absorbing, order, _stream_key(np.uint64(seed), np.uint64(first + s)), nxt, in_tree)
        for v in range(V):
            out[s, v] = -1 if absorbing[v] else nxt[v]
    return out


def wilson_trees(g, n_samples: int, seed: int, first: int = 0) -> np.ndarray:
    """Parent arrays of ``n_samples`` independent trees; row ``s`` equals ``wilson_ust(g, seed, first + s)``."""
    if isinstance(g, LatticeDomain):
        g = domain_graph(g)
    _check_connected(g)
    order = np.flatnonzero(~g.absorbing).astype(np.int64)
    return _wilson_batch(g.neighbors, g.degree, g.absorbing, order, seed, first, n_samples)


def _check_connected(g: Graph):
    V = g.n_nodes
    rows = np.repeat(np.arange(V), g.neighbors.shape[1])
    cols = g.neighbors.ravel()
    keep = cols >= 0
    A = sparse.coo_matrix((np.ones(keep.sum()), (rows[keep], cols[keep])), shape=(V, V))
    _, labels = sparse.csgraph.connected_components(A + A.T, directed=False)
    if not set(labels.tolist()) <= set(labels[g.absorbing].tolist()):
        raise ValueError("graph is disconnected from the root")


def tree_branch(parent: np.ndarray, v: int) -> list[int]:
    """Path from ``v`` to the root in a parent array."""
    path = [int(v)]
    while parent[path[-1]] >= 0:
        path.append(int(parent[path[-1]]))
    return path


def tree_edge_key(parent: np.ndarray) -> tuple:
    return tuple(sorted((min(v, int(p)), max(v, int(p))) for v, p in enumerate(parent) if p >= 0))


# ---------------------------------------------------------------------------
# harmonic measure


def _walk_system(dom: LatticeDomain):
    K = dom.n_sites
    nb = dom.neighbors
    deg = nb.shape[1]
    rows = np.repeat(np.arange(K), deg)
    cols = nb.ravel()
    inner = cols < K
    Q = sparse.csr_matrix((np.full(inner.sum(), 1.0 / deg), (rows[inner], cols[inner])), shape=(K, K))
    R = sparse.csr_matrix((np.full((~inner).sum(), 1.0 / deg), (rows[~inner], cols[~inner] - K)),
                          shape=(K, len(dom.boundary)))
    return sparse.identity(K, format="csc") - Q.tocsc(), R.tocsc()


class HarmonicMeasure:
    """Exit distribution of simple random walk killed on the boundary of ``dom``.

    One sparse LU factorization serves all targets.
    """

    def __init__(self, dom: LatticeDomain):
        self.dom = dom
        self.A, self.R = _walk_system(dom)
        self.lu = splinalg.splu(self.A)
        self._cols: dict[int, np.ndarray] = {}

    def column(self, x_node: int) -> np.ndarray:
        b = x_node - self.dom.n_sites
        if not 0 <= b < len(self.dom.boundary):
            raise ValueError("target must be a boundary site")
        if b not in self._cols:
            rhs = self.R[:, b].toarray().ravel()
            h = self.lu.solve(rhs)
            res = float(np.max(np.abs(self.A @ h - rhs)))
            if res > 1e-12:
                raise ArithmeticError(f"harmonic measure residual {res:.2e}")
            self._cols[b] = h
        return self._cols[b]

    def __call__(self, y_node: int, x_node: int) -> float:
        if not 0 <= y_node < self.dom.n_sites:
            raise ValueError("y must be an interior site")
        return float(self.column(x_node)[y_node])

    def matrix(self, ys, xs) -> np.ndarray:
        return np.array([[self(y, x) for x in xs] for y in ys])


def discrete_harmonic_measure(dom: LatticeDomain, y, x) -> float:
    """Probability that simple random walk from interior site ``y`` first leaves at boundary site ``x``.

    Sites are given as lattice coordinates or node ids.
    """
    yn = y if isinstance(y, (int, np.integer)) else dom.node(y)
    xn = x if isinstance(x, (int, np.integer)) else dom.node(x)
    if not 0 <= yn < dom.n_sites:
        raise ValueError("y must be an interior site")
    return HarmonicMeasure(dom)(yn, xn)


# ---------------------------------------------------------------------------
# Fomin event


@njit(cache=True)
def _fomin_event(neighbors, degree, absorbing, ys, xs, key, nxt, in_tree):
    counter = 0
    for v in range(len(absorbing)):
        in_tree[v] = absorbing[v]
    for k in range(len(ys)):
        v = ys[k]
        if in_tree[v]:
            return False
        u = v
        while not in_tree[u]:
            r = _draw(key, counter)
            counter += 1
            nxt[u] = neighbors[u, r % np.uint64(degree[u])]
            u = nxt[u]
        # u is where the loop-erased branch from y_k joins the tree
        if u != xs[k]:
            return False
        u = v
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    return True


@njit(cache=True, parallel=True)
def _fomin_counts(neighbors, degree, absorbing, ys, xs, seed, count, blocks):
    hits = np.zeros(blocks, dtype=np.int64)
    per = (count + blocks - 1) // blocks
    for b in prange(blocks):
        nxt = np.empty(len(degree), dtype=np.int64)
        in_tree = np.empty(len(degree), dtype=np.bool_)
        h = 0
        for s in range(b * per, min(count, (b + 1) * per)):
            if _fomin_event(neighbors, degree, absorbing, ys, xs, _stream_key(np.uint64(seed), np.uint64(s)),
                            nxt, in_tree):
                h += 1
        hits[b] = h
    return hits.sum()


def _ccw_order_ok(dom: LatticeDomain, nodes) -> bool:
    pts = np.array([dom.node_position(v) for v in nodes])
    centre = dom.positions().mean(axis=0)
    ang = np.arctan2(pts[:, 1] - centre[1], pts[:, 0] - centre[0])
    d = np.diff(np.concatenate([ang, ang[:1]])) % (2 * math.pi)
    return bool(np.all(d > 0) and abs(d.sum() - 2 * math.pi) < 1e-9)


def _fomin_nodes(dom, x, y):
    xs = [v if isinstance(v, (int, np.integer)) else dom.node(v) for v in x]
    ys = [v if isinstance(v, (int, np.integer)) else dom.node(v) for v in y]
    if len(xs) != len(ys) or not xs:
        raise ValueError("need n >= 1 boundary targets and n starting sites")
    if any(v < dom.n_sites for v in xs):
        raise ValueError("x must be boundary sites")
    if any(v >= dom.n_sites for v in ys):
        raise ValueError("y must be interior sites")
    if len(xs) > 1 and not _ccw_order_ok(dom, xs + ys[::-1]):
        raise ValueError("points must be in counterclockwise order x_1..x_n, y_n..y_1")
    return np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64)


@dataclass
class FominEstimate:
    n_samples: int
    hits: int
    determinant: float

    @property
    def frequency(self) -> float:
        return self.hits / self.n_samples

    @property
    def stderr(self) -> float:
        p = self.frequency
        return math.sqrt(max(p * (1 - p), 1.0 / self.n_samples) / self.n_samples)

    def to_json(self) -> str:
        return json.dumps({"n_samples": self.n_samples, "hits": self.hits, "frequency": self.frequency,
                           "stderr": self.stderr, "determinant": self.determinant})


def harmonic_determinant(dom: LatticeDomain, x, y, hm: HarmonicMeasure | None = None) -> float:
    """``det(H(y_i, x_j))``."""
    xs, ys = _fomin_nodes(dom, x, y)
    hm = HarmonicMeasure(dom) if hm is None else hm
    return float(np.linalg.det(hm.matrix(ys, xs)))


def fomin_event_estimate(dom: LatticeDomain, x, y, n_samples: int, seed: int) -> FominEstimate:
    """Frequency of: the tree branches from ``y_1..y_n`` are disjoint and the branch from ``y_i`` exits at ``x_i``."""
    xs, ys = _fomin_nodes(dom, x, y)
    g = domain_graph(dom)
    configure_threads()
    blocks = max(1, min(n_samples, 64 * numba.get_num_threads()))
    hits = int(_fomin_counts(g.neighbors, g.degree, g.absorbing, ys, xs, seed, n_samples, blocks))
    return FominEstimate(n_samples, hits, harmonic_determinant(dom, xs.tolist(), ys.tolist()))


# ---------------------------------------------------------------------------
# continuum comparison on the unit square


def _square_modulus() -> float:
    # parameter m with K(1 - m) = 2 K(m): the rectangle [-K, K] x [0, K'] is then a square
    from scipy.optimize import brentq
    from scipy.special import ellipk

    return brentq(lambda m: ellipk(1 - m) - 2 * ellipk(m), 1e-6, 0.5, xtol=1e-15)


def square_to_half_plane(a: np.ndarray) -> np.ndarray:
    """Bottom-side points ``(a, 0)`` of the unit square mapped to the real line by Jacobi ``sn``.

    ``sn(. | m)`` maps the rectangle ``[-K, K] x [0, K']`` onto the upper half
    plane; ``m`` is chosen so that ``K' = 2K``.
    """
    from scipy.special import ellipj, ellipk

    m = _square_modulus()
    K = ellipk(m)
    sn, _, _, _ = ellipj((2 * np.asarray(a, dtype=float) - 1) * K, m)
    return sn


def fomin_refinement_scan(x_pos, y_pos, sizes=(19, 39, 79)) -> list[dict]:
    """Normalized discrete determinants for points ``(a, 0)`` on the bottom side at several meshes.

    ``x_pos`` and ``y_pos`` are positions in ``(0, 1)``; targets are the
    boundary sites below them and starts the interior sites just above.
    """
    from .fomin import fomin_density

    target = fomin_density(square_to_half_plane(x_pos), square_to_half_plane(y_pos))
    out = []
    for m in sizes:
        dom = square_grid_domain(m)
        L = m + 1
        xs = [(int(round(a * L)), 0) for a in x_pos]
        ys = [(int(round(a * L)), 1) for a in y_pos]
        hm = HarmonicMeasure(dom)
        H = hm.matrix([dom.node(c) for c in ys], [dom.node(c) for c in xs])
        ratio = float(np.linalg.det(H) / np.prod(np.diag(H)))
        out.append({"mesh": 1.0 / L, "normalized_det": ratio, "continuum": float(target),
                    "discrepancy": abs(ratio - float(target))})
    return out
