"""Deterministic generators for the six grid families.

Planar families live on [-1, 1]^2 with N0 * 2**level cells per side; the
annular families (harc/harco) are high-aspect-ratio annulus sectors with
2**(level + 1) cells per direction.  Successive levels quadruple the cell
count in every family, and identical parameters (including the seed) give
bit-identical meshes.
"""

from __future__ import annotations

import bisect
import dataclasses
import math

import numpy as np

from .errors import BadPatch, DegenerateCell, FoldedMesh, NonPositiveError
from .mesh import Mesh, build_geometry

PLANAR_TAGS = ("left", "right", "bottom", "top")
ANNULAR_TAGS = ("theta-min", "theta-max", "inner", "outer")

DEFAULT_N0 = 4
DEFAULT_DOMAIN = (-1.0, 1.0, -1.0, 1.0)
DEFAULT_AMPLITUDE = 0.1
DEFAULT_BETA = 0.25
DEFAULT_PATCHES = ((-0.5, -0.5, 0.5, 0.5), (-0.25, -0.25, 0.25, 0.25))
DEFAULT_R = 1.0
DEFAULT_A = 1000.0
DEFAULT_DTHETA0 = 0.256
DEFAULT_OBLIQUE_DEG = 45.0


def _structured(X, Y, tags=PLANAR_TAGS, reorient=False) -> Mesh:
    """Quad mesh from node coordinate arrays of shape (nx+1, ny+1).

    Index [i, j]: i is the first logical direction (tags[0]/tags[1] at
    i = 0 / i = nx), j the second (tags[2]/tags[3] at j = 0 / j = ny).
    """
    nx, ny = X.shape[0] - 1, X.shape[1] - 1
    nid = np.arange((nx + 1) * (ny + 1), dtype=np.int64).reshape(ny + 1, nx + 1)
    nodes = np.column_stack([X.T.ravel(), Y.T.ravel()])

    nh = nx * (ny + 1)
    nv = (nx + 1) * ny
    face_nodes = np.empty((nh + nv, 2), dtype=np.int64)
    owner = np.empty(nh + nv, dtype=np.int64)
    neigh = np.empty(nh + nv, dtype=np.int64)

    def cid(i, j):
        return j * nx + i

    jj, ii = np.meshgrid(np.arange(ny + 1), np.arange(nx), indexing="ij")
    hid = (jj * nx + ii).ravel()
    face_nodes[hid, 0] = nid[jj, ii].ravel()
    face_nodes[hid, 1] = nid[jj, ii + 1].ravel()
    below = cid(ii, jj - 1).ravel()
    above = cid(ii, np.minimum(jj, ny - 1)).ravel()
    jflat = jj.ravel()
    owner[hid] = np.where(jflat > 0, below, above)
    neigh[hid] = np.where((jflat > 0) & (jflat < ny), cid(ii, jj).ravel(), -1)

    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx + 1), indexing="ij")
    vid = nh + (jj * (nx + 1) + ii).ravel()
    face_nodes[vid, 0] = nid[jj, ii].ravel()
    face_nodes[vid, 1] = nid[jj + 1, ii].ravel()
    left = cid(ii - 1, jj).ravel()
    right = cid(np.minimum(ii, nx - 1), jj).ravel()
    iflat = ii.ravel()
    owner[vid] = np.where(iflat > 0, left, right)
    neigh[vid] = np.where((iflat > 0) & (iflat < nx), cid(ii, jj).ravel(), -1)

    face_tags = [""] * (nh + nv)
    for i in range(nx):
        face_tags[i] = tags[2]
        face_tags[ny * nx + i] = tags[3]
    for j in range(ny):
        face_tags[nh + j * (nx + 1)] = tags[0]
        face_tags[nh + j * (nx + 1) + nx] = tags[1]

    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    h_lo = (jj * nx + ii).ravel()
    h_hi = ((jj + 1) * nx + ii).ravel()
    v_lo = nh + (jj * (nx + 1) + ii).ravel()
    v_hi = nh + (jj * (nx + 1) + ii + 1).ravel()
    cell_face_idx = np.column_stack([h_lo, v_hi, h_hi, v_lo]).ravel()
    cell_face_ptr = 4 * np.arange(nx * ny + 1, dtype=np.int64)

    loops = np.column_stack([nid[jj, ii].ravel(), nid[jj, ii + 1].ravel(),
                             nid[jj + 1, ii + 1].ravel(), nid[jj + 1, ii].ravel()])
    mesh = Mesh(nodes, face_nodes, owner, neigh, face_tags,
                cell_face_ptr, cell_face_idx,
                cell_nodes_ptr=4 * np.arange(nx * ny + 1, dtype=np.int64),
                cell_nodes_idx=loops.ravel().astype(np.int64))
    return build_geometry(mesh, reorient=reorient)


def _planar_nodes(level, n0=DEFAULT_N0, domain=DEFAULT_DOMAIN):
    if level < 0:
        raise NonPositiveError("level must be >= 0")
    n = n0 * 2**level
    x0, x1, y0, y1 = domain
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    return np.meshgrid(xs, ys, indexing="ij")


def gen_cartesian(level, n0=DEFAULT_N0, domain=DEFAULT_DOMAIN) -> Mesh:
    X, Y = _planar_nodes(level, n0, domain)
    return _structured(X, Y)


def gen_smooth_mapped(level, n0=DEFAULT_N0, domain=DEFAULT_DOMAIN,
                      amplitude=DEFAULT_AMPLITUDE) -> Mesh:
    """Smoothly mapped structured grid; skewness/unevenness shrink with h."""
    if not 0.0 <= amplitude <= 0.25:
        raise NonPositiveError("amplitude must lie in [0, 0.25]")
    if amplitude == 0.0:
        return gen_cartesian(level, n0, domain)
    XI, ETA = _planar_nodes(level, n0, domain)
    bump = amplitude * np.sin(math.pi * XI) * np.sin(math.pi * ETA)
    try:
        return _structured(XI + bump, ETA + bump)
    except DegenerateCell as exc:
        raise FoldedMesh(f"smooth map folds the grid: {exc}") from None


def gen_perturbed(level, seed, n0=DEFAULT_N0, domain=DEFAULT_DOMAIN,
                  beta=DEFAULT_BETA) -> Mesh:
    """Cartesian grid with nodes displaced by uniform draws in [-beta*h, beta*h].

    Boundary nodes slide tangentially only and corners stay fixed.  The
    Philox counter-based generator keyed by the seed makes the node
    displacements bit-reproducible; each level draws a fresh sequence so
    skewness does not diminish under refinement.
    """
    if not 0.0 <= beta <= 0.4:
        raise NonPositiveError("beta must lie in [0, 0.4]")
    X, Y = _planar_nodes(level, n0, domain)
    n = n0 * 2**level
    h = (domain[1] - domain[0]) / n
    rng = np.random.Generator(np.random.Philox(key=seed))
    disp = rng.uniform(-beta * h, beta * h, size=(n + 1, n + 1, 2))
    # boundary nodes: tangential motion only; corners pinned
    disp[0, :, 0] = 0.0
    disp[-1, :, 0] = 0.0
    disp[:, 0, 1] = 0.0
    disp[:, -1, 1] = 0.0
    for i in (0, -1):
        for j in (0, -1):
            disp[i, j] = 0.0
    try:
        return _structured(X + disp[:, :, 0], Y + disp[:, :, 1])
    except DegenerateCell as exc:
        raise FoldedMesh(f"perturbation folds the grid: {exc}") from None


def gen_harc(level, R=DEFAULT_R, A=DEFAULT_A, dtheta0=DEFAULT_DTHETA0) -> Mesh:
    """High-aspect-ratio annulus sector, 2**(level+1) cells per direction.

    Circumferential spacing dtheta0 / 2**level, radial spacing
    R * dtheta / A; the sector is centred on theta = 0 with x = r sin(theta),
    y = r cos(theta).
    """
    if level < 0:
        raise NonPositiveError("level must be >= 0")
    n = 2**(level + 1)
    dtheta = dtheta0 / 2**level
    dr = R * dtheta / A
    theta = (np.arange(n + 1) - n / 2) * dtheta
    r = R + np.arange(n + 1) * dr
    TH, RR = np.meshgrid(theta, r, indexing="ij")
    return _structured(RR * np.sin(TH), RR * np.cos(TH), tags=ANNULAR_TAGS)


def gen_harco(level, R=DEFAULT_R, A=DEFAULT_A, dtheta0=DEFAULT_DTHETA0,
              oblique_deg=DEFAULT_OBLIQUE_DEG) -> Mesh:
    """Oblique variant of gen_harc: cross-layer grid lines are sheared so
    they meet the circumferential layers at oblique_deg at the inner radius.
    """
    if level < 0:
        raise NonPositiveError("level must be >= 0")
    n = 2**(level + 1)
    dtheta = dtheta0 / 2**level
    dr = R * dtheta / A
    theta = (np.arange(n + 1) - n / 2) * dtheta
    r = R + np.arange(n + 1) * dr
    TH, RR = np.meshgrid(theta, r, indexing="ij")
    TH = TH + (RR - R) * math.tan(math.radians(oblique_deg)) / R
    return _structured(RR * np.sin(TH), RR * np.cos(TH), tags=ANNULAR_TAGS)


# ---------------------------------------------------------------------------
# Locally refined Cartesian grid (2:1 graded patches)


def _check_patches(patches, domain, h):
    """Patch k must nest inside patch k-1 and align to the h / 2**k grid."""
    x0, x1, y0, y1 = domain
    prev = (x0, y0, x1, y1)
    for k, p in enumerate(patches):
        px0, py0, px1, py1 = p
        hk = h / 2**k
        if not (px0 < px1 and py0 < py1):
            raise BadPatch(f"empty patch rectangle {p}")
        if not (prev[0] <= px0 and py0 >= prev[1] and px1 <= prev[2] and py1 <= prev[3]):
            raise BadPatch(f"patch {p} is not nested inside {prev}")
        for v, ref in ((px0, x0), (px1, x0), (py0, y0), (py1, y0)):
            steps = (v - ref) / hk
            if abs(steps - round(steps)) > 1e-9:
                raise BadPatch(f"patch edge {v} does not align to spacing {hk}")
        prev = p


def gen_locally_refined(level, n0=DEFAULT_N0, domain=DEFAULT_DOMAIN,
                        patches=DEFAULT_PATCHES) -> Mesh:
    """Cartesian base grid with nested refinement patches.

    Patch k (0-based) is resolved 2**(k+1) times finer than the base grid;
    interfaces are 2:1 graded, so a coarse cell bordering a patch carries
    two sub-faces on that side.  The patch layout is level-independent,
    which keeps the interface skewness the same on every level.
    """
    if level < 0:
        raise NonPositiveError("level must be >= 0")
    n = n0 * 2**level
    x0, x1, y0, y1 = domain
    h = (x1 - x0) / n
    if abs((y1 - y0) / n - h) > 1e-15:
        raise BadPatch("locally refined grids require a square domain")
    _check_patches(patches, domain, h)
    np_depth = len(patches)
    unit = 2**np_depth  # integer units per base cell side
    scale = h / unit

    # patch rectangles in exact integer units
    ipatch = [tuple(round((v - ref) / scale)
                    for v, ref in ((p[0], x0), (p[1], y0), (p[2], x0), (p[3], y0)))
              for p in patches]

    # quadtree subdivision: a square at depth d splits when it lies fully
    # inside patch d
    squares = []  # (ix, iy, size) in units of h / 2**np_depth

    def emit(ix, iy, size, d):
        if d < np_depth:
            px0, py0, px1, py1 = ipatch[d]
            if px0 <= ix and py0 <= iy and ix + size <= px1 and iy + size <= py1:
                half = size // 2
                for sj in (0, half):
                    for si in (0, half):
                        emit(ix + si, iy + sj, half, d + 1)
                return
        squares.append((ix, iy, size))

    for bj in range(n):
        for bi in range(n):
            emit(bi * unit, bj * unit, unit, 0)

    # node table over all square corners
    node_id = {}
    xs_on_line = {}   # x -> sorted list of node ys (vertical grid lines)
    ys_on_line = {}   # y -> sorted list of node xs

    def add_node(ix, iy):
        if (ix, iy) not in node_id:
            node_id[(ix, iy)] = len(node_id)
            xs_on_line.setdefault(ix, []).append(iy)
            ys_on_line.setdefault(iy, []).append(ix)

    for ix, iy, s in squares:
        add_node(ix, iy)
        add_node(ix + s, iy)
        add_node(ix + s, iy + s)
        add_node(ix, iy + s)
    for v in xs_on_line.values():
        v.sort()
    for v in ys_on_line.values():
        v.sort()

    def span(vals, lo, hi):
        a = bisect.bisect_left(vals, lo)
        b = bisect.bisect_right(vals, hi)
        return vals[a:b]

    nmax = n * unit
    face_key = {}
    faces = []  # [a, b, owner, neighbour, tag]
    cells = []
    loops = []
    for c, (ix, iy, s) in enumerate(squares):
        # sub-nodes along each side, CCW: bottom, right, top, left
        bot = [(x, iy) for x in span(ys_on_line[iy], ix, ix + s)]
        rgt = [(ix + s, y) for y in span(xs_on_line[ix + s], iy, iy + s)]
        top = [(x, iy + s) for x in reversed(span(ys_on_line[iy + s], ix, ix + s))]
        lft = [(ix, y) for y in reversed(span(xs_on_line[ix], iy, iy + s))]
        ring = bot[:-1] + rgt[:-1] + top[:-1] + lft[:-1]
        loops.append([node_id[p] for p in ring])
        cfaces = []
        for k in range(len(ring)):
            a = node_id[ring[k]]
            b = node_id[ring[(k + 1) % len(ring)]]
            key = (a, b) if a < b else (b, a)
            f = face_key.get(key)
            if f is None:
                f = len(faces)
                face_key[key] = f
                pa, pb = ring[k], ring[(k + 1) % len(ring)]
                if pa[1] == pb[1] and pa[1] == 0:
                    tag = "bottom"
                elif pa[1] == pb[1] and pa[1] == nmax:
                    tag = "top"
                elif pa[0] == pb[0] and pa[0] == 0:
                    tag = "left"
                elif pa[0] == pb[0] and pa[0] == nmax:
                    tag = "right"
                else:
                    tag = None
                faces.append([a, b, c, -1, tag])
            else:
                faces[f][3] = c
            cfaces.append(f)
        cells.append(cfaces)

    for f in faces:
        if f[3] < 0 and f[4] is None:
            raise BadPatch("internal error: unmatched interior face")

    pts = np.empty((len(node_id), 2))
    for (ix, iy), i in node_id.items():
        pts[i] = (x0 + ix * scale, y0 + iy * scale)

    fn = np.array([[f[0], f[1]] for f in faces], dtype=np.int64)
    owner = np.array([f[2] for f in faces], dtype=np.int64)
    neigh = np.array([f[3] for f in faces], dtype=np.int64)
    tags = [f[4] if f[3] < 0 else "" for f in faces]
    ptr = np.zeros(len(cells) + 1, dtype=np.int64)
    for i, cf in enumerate(cells):
        ptr[i + 1] = ptr[i] + len(cf)
    idx = np.fromiter((f for cf in cells for f in cf), dtype=np.int64)
    nptr = np.zeros(len(loops) + 1, dtype=np.int64)
    for i, lp in enumerate(loops):
        nptr[i + 1] = nptr[i] + len(lp)
    nidx = np.fromiter((v for lp in loops for v in lp), dtype=np.int64)
    mesh = Mesh(pts, fn, owner, neigh, tags, ptr, idx,
                cell_nodes_ptr=nptr, cell_nodes_idx=nidx)
    return build_geometry(mesh, reorient=False)


# ---------------------------------------------------------------------------
# Family dispatch


@dataclasses.dataclass
class GridFamilySpec:
    family: str           # cartesian | smooth-mapped | locally-refined |
                          # perturbed | harc | harco
    level: int
    params: dict = dataclasses.field(default_factory=dict)


FAMILIES = ("cartesian", "smooth-mapped", "locally-refined",
            "perturbed", "harc", "harco")

_GENERATORS = {
    "cartesian": gen_cartesian,
    "smooth-mapped": gen_smooth_mapped,
    "locally-refined": gen_locally_refined,
    "perturbed": gen_perturbed,
    "harc": gen_harc,
    "harco": gen_harco,
}


def generate(spec: GridFamilySpec) -> Mesh:
    if spec.family not in _GENERATORS:
        raise ValueError(f"unknown grid family {spec.family!r}")
    return _GENERATORS[spec.family](spec.level, **spec.params)
