"""Structured meshes for plate, interval and thin profile domains.

All meshes are tensor product grids: quadrilaterals for 2D domains, segments
for intervals, and triangles obtained by splitting quads along a fixed
diagonal.  Thin domains

    Omega_delta = { (x, y) : a < x < b, -delta*f1(x) < y < delta*f2(x) }

are meshed by pushing the grid of (a,b) x (0,1) through the profile map, so
the whole delta family shares one topology.  Meshes are immutable after
construction.
"""

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import UnsupportedConfigurationError


class ElementKind(str, Enum):
    SEGMENT = "segment"
    QUAD4 = "quad4"
    TRI3 = "tri3"


class BoundaryTag(str, Enum):
    LATERAL = "lateral"
    TOP_BOTTOM = "top_bottom"
    WHOLE_BOUNDARY = "whole_boundary"


@dataclass(frozen=True)
class Facet:
    """Boundary facet: node tuple, owning element, tag, outward unit normal."""

    nodes: tuple
    element: int
    tag: BoundaryTag
    normal: np.ndarray

    def __post_init__(self):
        self.normal.flags.writeable = False


@dataclass(frozen=True)
class Mesh:
    dim: int
    element_kind: ElementKind
    nodes: np.ndarray  # (n_nodes, dim)
    elements: np.ndarray  # (n_elements, nodes_per_element)
    facets: tuple  # of Facet
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes.flags.writeable = False
        self.elements.flags.writeable = False

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear function given by breakpoints; callable on arrays."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or len(self.xs) < 2:
            raise ValueError("need matching xs/ys with at least two points")
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("breakpoints must be strictly increasing")

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    @staticmethod
    def constant(c: float, a: float, b: float) -> "PiecewiseLinear":
        return PiecewiseLinear(np.array([a, b]), np.array([c, c], dtype=float))


@dataclass(frozen=True)
class ThinDomainSpec:
    """Thin domain over a base interval with piecewise-linear profiles.

    g(x) = f1(x) + f2(x) is the section measure of the reference domain
    (delta = 1); the physical section measure is delta * g(x).  Meshes are
    only built for one thin direction (d = 1); d enters the limit-operator
    coefficients as a plain parameter.
    """

    base_interval: tuple
    f1: PiecewiseLinear
    f2: PiecewiseLinear
    delta: float
    d: int = 1

    def __post_init__(self):
        a, b = self.base_interval
        if not a < b:
            raise ValueError("base interval must have a < b")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        xs = np.linspace(a, b, 257)
        if np.min(self.f1(xs)) <= 0 or np.min(self.f2(xs)) <= 0:
            raise ValueError("profiles must be bounded below by a positive constant")

    def g(self, x):
        return self.f1(x) + self.f2(x)


def constant_profile_spec(a: float, b: float, half_width: float, delta: float) -> ThinDomainSpec:
    """Cylinder Omega_delta = (a,b) x (-delta*half_width, delta*half_width)."""
    return ThinDomainSpec(
        (a, b),
        PiecewiseLinear.constant(half_width, a, b),
        PiecewiseLinear.constant(half_width, a, b),
        delta,
    )


def build_rect_mesh(lx: float, ly: float, nx: int, ny: int) -> Mesh:
    """Quad4 mesh of (0, lx) x (0, ly) with nx*ny cells, boundary tagged whole."""
    if lx <= 0 or ly <= 0:
        raise ValueError("side lengths must be positive")
    if nx < 1 or ny < 1:
        raise ValueError("need at least one subdivision per direction")
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    elements = _grid_quads(nx, ny)
    facets = _grid_boundary_facets(nodes, elements, nx, ny, lambda side: BoundaryTag.WHOLE_BOUNDARY)
    return Mesh(2, ElementKind.QUAD4, nodes, elements, facets, meta={"kind": "rect", "nx": nx, "ny": ny})


def build_interval_mesh(a: float, b: float, n: int) -> Mesh:
    """Segment mesh of (a, b) with n elements; endpoint facets carry +-1 normals."""
    if a >= b:
        raise ValueError("need a < b")
    if n < 1:
        raise ValueError("need at least one element")
    nodes = np.linspace(a, b, n + 1)[:, None]
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    facets = (
        Facet((0,), 0, BoundaryTag.WHOLE_BOUNDARY, np.array([-1.0])),
        Facet((n,), n - 1, BoundaryTag.WHOLE_BOUNDARY, np.array([1.0])),
    )
    return Mesh(1, ElementKind.SEGMENT, nodes, elements, facets, meta={"kind": "interval", "n": n})


def build_thin_mesh(spec: ThinDomainSpec, nx: int, ny: int) -> Mesh:
    """Quad4 mesh of the thin domain via (x, s) -> (x, -delta*f1 + s*delta*(f1+f2)).

    Lateral facets (x = a, x = b) are tagged LATERAL, profile facets
    TOP_BOTTOM.  Profiles are sampled at the nx+1 grid points, so the meshed
    boundary is their piecewise-linear chord.
    """
    if spec.d != 1:
        raise UnsupportedConfigurationError("thin meshes are only built for d = 1")
    if nx < 1 or ny < 1:
        raise ValueError("need at least one subdivision per direction")
    a, b = spec.base_interval
    xs = np.linspace(a, b, nx + 1)
    f1 = spec.f1(xs)
    f2 = spec.f2(xs)
    s = np.linspace(0.0, 1.0, ny + 1)
    # node (i, j): x = xs[i], y = -delta f1(x_i) + s_j delta (f1+f2)(x_i)
    Y = -spec.delta * f1[None, :] + s[:, None] * spec.delta * (f1 + f2)[None, :]
    X = np.broadcast_to(xs[None, :], Y.shape)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    elements = _grid_quads(nx, ny)

    def tag(side):
        return BoundaryTag.LATERAL if side in ("left", "right") else BoundaryTag.TOP_BOTTOM

    facets = _grid_boundary_facets(nodes, elements, nx, ny, tag)
    meta = {"kind": "thin", "nx": nx, "ny": ny, "delta": spec.delta, "base_interval": (a, b)}
    return Mesh(2, ElementKind.QUAD4, nodes, elements, facets, meta=meta)


def rescale_to_reference(mesh_delta: Mesh, spec: ThinDomainSpec) -> Mesh:
    """Image of a thin mesh under (x, y) -> (x, y/delta); same connectivity."""
    meta = mesh_delta.meta
    if meta.get("kind") != "thin" or abs(meta.get("delta", np.nan) - spec.delta) > 1e-14:
        raise ValueError("mesh was not built by build_thin_mesh with this spec")
    nodes = mesh_delta.nodes.copy()
    nodes[:, 1] /= spec.delta
    facets = tuple(
        Facet(f.nodes, f.element, f.tag, _facet_normal(nodes, mesh_delta.elements, f))
        for f in mesh_delta.facets
    )
    new_meta = dict(meta, delta=1.0, rescaled_from=spec.delta)
    return Mesh(2, ElementKind.QUAD4, nodes, mesh_delta.elements.copy(), facets, meta=new_meta)


def split_quads(mesh: Mesh) -> Mesh:
    """Split each quad along its local (0,0)-(1,1) diagonal into two triangles.

    Deterministic, so a mesh family sharing topology shares one triangulation.
    """
    if mesh.element_kind != ElementKind.QUAD4:
        raise ValueError("can only split quad meshes")
    quads = mesh.elements
    tris = np.empty((2 * quads.shape[0], 3), dtype=quads.dtype)
    tris[0::2] = quads[:, [0, 1, 2]]
    tris[1::2] = quads[:, [0, 2, 3]]
    # quad facet (n0,n1) lives on triangle 2e for local edges 0-1 / 1-2,
    # and on 2e+1 for edges 2-3 / 3-0
    facets = []
    for f in mesh.facets:
        quad_nodes = list(quads[f.element])
        pair = {quad_nodes.index(f.nodes[0]), quad_nodes.index(f.nodes[1])}
        owner = 2 * f.element if pair <= {0, 1, 2} else 2 * f.element + 1
        facets.append(Facet(f.nodes, owner, f.tag, f.normal.copy()))
    return Mesh(2, ElementKind.TRI3, mesh.nodes.copy(), tris, tuple(facets), meta=dict(mesh.meta, split=True))


def element_measures(mesh: Mesh) -> np.ndarray:
    """Length/area of every element (areas via the shoelace formula)."""
    pts = mesh.nodes[mesh.elements]
    if mesh.element_kind == ElementKind.SEGMENT:
        return np.abs(pts[:, 1, 0] - pts[:, 0, 0])
    x, y = pts[..., 0], pts[..., 1]
    xs, ys = np.roll(x, -1, axis=1), np.roll(y, -1, axis=1)
    return 0.5 * np.abs(np.sum(x * ys - xs * y, axis=1))


def mesh_to_dict(mesh: Mesh) -> dict:
    return {
        "dim": mesh.dim,
        "element_kind": mesh.element_kind.value,
        "nodes": mesh.nodes.tolist(),
        "elements": mesh.elements.tolist(),
        "facets": [
            {"nodes": list(f.nodes), "element": f.element, "tag": f.tag.value, "normal": f.normal.tolist()}
            for f in mesh.facets
        ],
        "meta": {k: v for k, v in mesh.meta.items() if isinstance(v, (int, float, str, bool, tuple, list))},
    }


def mesh_from_dict(data: dict) -> Mesh:
    facets = tuple(
        Facet(tuple(f["nodes"]), f["element"], BoundaryTag(f["tag"]), np.array(f["normal"], dtype=float))
        for f in data["facets"]
    )
    return Mesh(
        data["dim"],
        ElementKind(data["element_kind"]),
        np.array(data["nodes"], dtype=float),
        np.array(data["elements"], dtype=np.int64),
        facets,
        meta=dict(data.get("meta", {})),
    )


def save_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        json.dump(mesh_to_dict(mesh), fh)


def load_mesh(path) -> Mesh:
    with open(path) as fh:
        return mesh_from_dict(json.load(fh))


def _grid_quads(nx: int, ny: int) -> np.ndarray:
    """Counterclockwise quads on an (nx+1) x (ny+1) node grid, x-fastest."""
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    n0 = (j * (nx + 1) + i).ravel()
    return np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]).astype(np.int64)


def _facet_normal(nodes, elements, facet: Facet) -> np.ndarray:
    """Outward unit normal of a 2-node facet, oriented away from the centroid."""
    p0, p1 = nodes[facet.nodes[0]], nodes[facet.nodes[1]]
    t = p1 - p0
    n = np.array([t[1], -t[0]]) / np.hypot(t[0], t[1])
    centroid = nodes[elements[facet.element]].mean(axis=0)
    if np.dot(n, 0.5 * (p0 + p1) - centroid) < 0:
        n = -n
    return n


def _grid_boundary_facets(nodes, elements, nx, ny, tag_for_side) -> tuple:
    facets = []

    def add(n0, n1, elem, side):
        f = Facet((n0, n1), elem, tag_for_side(side), np.zeros(2))
        facets.append(Facet(f.nodes, elem, f.tag, _facet_normal(nodes, elements, f)))

    for i in range(nx):
        add(i, i + 1, i, "bottom")
    for j in range(ny):
        n0 = j * (nx + 1) + nx
        add(n0, n0 + nx + 1, j * nx + nx - 1, "right")
    for i in range(nx):
        n0 = ny * (nx + 1) + i
        add(n0, n0 + 1, (ny - 1) * nx + i, "top")
    for j in range(ny):
        n0 = j * (nx + 1)
        add(n0, n0 + nx + 1, j * nx, "left")
    return tuple(facets)
