"""2D general-polygon mesh with owner/neighbour face topology.

A mesh is built from node coordinates, faces (two node ids plus owner and
neighbour cell, neighbour -1 for boundary faces with a tag) and per-cell
ordered face lists.  ``build_geometry`` populates derived geometry
(centroids, areas, face normals) after which the mesh is treated as
immutable.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from . import dd
from .errors import DegenerateCell, MeshFormatError, NoNeighbour


class NfPolicy(enum.Enum):
    NEIGHBOUR_CENTROID = "neighbour-centroid"       # N_f at the neighbour centroid
    PROJECTED_FACE_CENTROID = "projected-centroid"  # N_f at the skew-projected point
    MIDPOINT = "midpoint"                           # N_f midway between the centroids


@dataclasses.dataclass
class Mesh:
    nodes: np.ndarray               # (n_nodes, 2)
    face_nodes: np.ndarray          # (n_faces, 2) int64
    face_owner: np.ndarray          # (n_faces,) int64
    face_neighbour: np.ndarray      # (n_faces,) int64, -1 for boundary
    face_tags: list                 # '' for interior faces
    cell_face_ptr: np.ndarray       # CSR pointers, (n_cells + 1,)
    cell_face_idx: np.ndarray       # CSR face ids

    # populated by build_geometry
    cell_nodes_ptr: np.ndarray | None = None
    cell_nodes_idx: np.ndarray | None = None
    cell_centroid: np.ndarray | None = None
    cell_area: np.ndarray | None = None
    face_centroid: np.ndarray | None = None
    face_length: np.ndarray | None = None
    face_normal: np.ndarray | None = None   # unit, owner -> neighbour
    face_flip: np.ndarray | None = None     # sign applied to perp(b - a)

    _cache: dict = dataclasses.field(default_factory=dict, repr=False)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_faces(self):
        return len(self.face_nodes)

    @property
    def n_cells(self):
        return len(self.cell_face_ptr) - 1

    @property
    def boundary_faces(self):
        return np.flatnonzero(self.face_neighbour < 0)

    @property
    def boundary_pos(self):
        """Map face id -> index into the boundary-face arrays (-1 interior)."""
        pos = self._cache.get("boundary_pos")
        if pos is None:
            pos = np.full(self.n_faces, -1, dtype=np.int64)
            pos[self.boundary_faces] = np.arange(len(self.boundary_faces))
            self._cache["boundary_pos"] = pos
        return pos

    def cell_faces(self, cell: int) -> np.ndarray:
        return self.cell_face_idx[self.cell_face_ptr[cell]:self.cell_face_ptr[cell + 1]]


def from_lists(nodes, faces, cells, cell_nodes=None) -> Mesh:
    """Assemble a Mesh from plain lists.

    faces: iterables (a, b, owner, neighbour) with neighbour either an int
    cell id or a string boundary tag.  cells: per-cell ordered face-id
    lists.  cell_nodes (optional): per-cell ordered CCW node loops; when
    omitted they are reconstructed by chaining the face lists.
    """
    nodes = np.asarray(nodes, dtype=np.float64).reshape(-1, 2)
    fn = np.empty((len(faces), 2), dtype=np.int64)
    owner = np.empty(len(faces), dtype=np.int64)
    nb = np.empty(len(faces), dtype=np.int64)
    tags = []
    for i, (a, b, own, ngb) in enumerate(faces):
        fn[i] = (a, b)
        owner[i] = own
        if isinstance(ngb, str):
            nb[i] = -1
            tags.append(ngb)
        else:
            nb[i] = ngb
            tags.append("" if ngb >= 0 else "boundary")
    ptr = np.zeros(len(cells) + 1, dtype=np.int64)
    for i, c in enumerate(cells):
        ptr[i + 1] = ptr[i] + len(c)
    idx = np.concatenate([np.asarray(c, dtype=np.int64) for c in cells]) if cells else np.empty(0, np.int64)
    mesh = Mesh(nodes, fn, owner, nb, tags, ptr, idx)
    if cell_nodes is not None:
        nptr = np.zeros(len(cell_nodes) + 1, dtype=np.int64)
        for i, loop in enumerate(cell_nodes):
            nptr[i + 1] = nptr[i] + len(loop)
        mesh.cell_nodes_ptr = nptr
        mesh.cell_nodes_idx = np.concatenate([np.asarray(l, dtype=np.int64) for l in cell_nodes])
    return mesh


def _chain_cell_loops(mesh: Mesh):
    """Reconstruct ordered node loops by walking each cell's face list."""
    ptr = np.zeros(mesh.n_cells + 1, dtype=np.int64)
    loops = []
    fn = mesh.face_nodes
    for c in range(mesh.n_cells):
        fids = mesh.cell_faces(c)
        if len(fids) < 3:
            raise MeshFormatError(f"cell {c} has fewer than 3 faces")
        for start_rev in (False, True):
            a, b = fn[fids[0]]
            if start_rev:
                a, b = b, a
            loop = [a]
            cur = b
            ok = True
            for f in fids[1:]:
                fa, fb = fn[f]
                if fa == cur:
                    loop.append(fa)
                    cur = fb
                elif fb == cur:
                    loop.append(fb)
                    cur = fa
                else:
                    ok = False
                    break
            if ok and cur == loop[0]:
                break
        else:
            raise MeshFormatError(f"cell {c}: face list is not a closed ordered loop")
        loops.append(loop)
        ptr[c + 1] = ptr[c] + len(loop)
    mesh.cell_nodes_ptr = ptr
    mesh.cell_nodes_idx = np.asarray([n for loop in loops for n in loop], dtype=np.int64)


def _loop_next(ptr, n):
    """Index of the cyclic successor within each CSR segment."""
    pos = np.arange(n, dtype=np.int64)
    nxt = pos + 1
    last = ptr[1:] - 1
    nxt[last] = ptr[:-1]
    return nxt


def build_geometry(mesh: Mesh, reorient: bool = True) -> Mesh:
    """Populate centroids, areas, face centroids/lengths/normals in place.

    With reorient=False a clockwise node loop is an error rather than being
    flipped; generators use this to detect folded cells.
    """
    if mesh.cell_nodes_ptr is None:
        _chain_cell_loops(mesh)
    ptr, idx = mesh.cell_nodes_ptr, mesh.cell_nodes_idx
    x = mesh.nodes[idx, 0]
    y = mesh.nodes[idx, 1]
    nxt = _loop_next(ptr, len(idx))
    xn, yn = mesh.nodes[idx[nxt], 0], mesh.nodes[idx[nxt], 1]
    cross = x * yn - xn * y
    signed = 0.5 * np.add.reduceat(cross, ptr[:-1])
    # normalize loops to CCW
    neg_cells = np.flatnonzero(signed < 0) if reorient else np.empty(0, np.int64)
    if len(neg_cells):
        idx = idx.copy()
        for c in neg_cells:
            s, e = ptr[c], ptr[c + 1]
            idx[s:e] = idx[s:e][::-1]
        mesh.cell_nodes_idx = idx
        x, y = mesh.nodes[idx, 0], mesh.nodes[idx, 1]
        nxt = _loop_next(ptr, len(idx))
        xn, yn = mesh.nodes[idx[nxt], 0], mesh.nodes[idx[nxt], 1]
        cross = x * yn - xn * y
        signed = 0.5 * np.add.reduceat(cross, ptr[:-1])
    if np.any(signed <= 0):
        bad = int(np.argmax(signed <= 0))
        raise DegenerateCell(f"cell {bad} has non-positive area {signed[bad]:.3e}")
    mesh.cell_area = signed
    cx = np.add.reduceat((x + xn) * cross, ptr[:-1]) / (6.0 * signed)
    cy = np.add.reduceat((y + yn) * cross, ptr[:-1]) / (6.0 * signed)
    mesh.cell_centroid = np.column_stack([cx, cy])

    a = mesh.nodes[mesh.face_nodes[:, 0]]
    b = mesh.nodes[mesh.face_nodes[:, 1]]
    mesh.face_centroid = 0.5 * (a + b)
    e = b - a
    mesh.face_length = np.hypot(e[:, 0], e[:, 1])
    if np.any(mesh.face_length == 0.0):
        raise DegenerateCell("zero-length face")
    n = np.column_stack([e[:, 1], -e[:, 0]]) / mesh.face_length[:, None]
    own_c = mesh.cell_centroid[mesh.face_owner]
    dot = np.einsum("ij,ij->i", n, mesh.face_centroid - own_c)
    if np.any(dot == 0.0):
        raise DegenerateCell("face centroid coincides with the owner centroid line")
    flip = np.where(dot > 0.0, 1.0, -1.0)
    mesh.face_normal = n * flip[:, None]
    mesh.face_flip = flip
    mesh._cache.clear()
    return mesh


def check_mesh(mesh: Mesh):
    """Validate topology and the closed-surface identity; raises on failure."""
    counts = np.zeros(mesh.n_faces, dtype=np.int64)
    for c in range(mesh.n_cells):
        for f in mesh.cell_faces(c):
            counts[f] += 1
            if mesh.face_owner[f] != c and mesh.face_neighbour[f] != c:
                raise MeshFormatError(f"face {f} listed by cell {c} but owned elsewhere")
    interior = mesh.face_neighbour >= 0
    if not np.all(counts[interior] == 2):
        raise MeshFormatError("an interior face is not referenced by exactly two cells")
    if not np.all(counts[~interior] == 1):
        raise MeshFormatError("a boundary face is not referenced by exactly one cell")
    t = cellface_table(mesh)
    svx = np.add.reduceat(t.svx, mesh.cell_face_ptr[:-1])
    svy = np.add.reduceat(t.svy, mesh.cell_face_ptr[:-1])
    per = np.add.reduceat(mesh.face_length[mesh.cell_face_idx], mesh.cell_face_ptr[:-1])
    if np.any(np.hypot(svx, svy) > 1e-12 * per):
        raise MeshFormatError("closed-surface identity violated")


# ---------------------------------------------------------------------------
# Per cell-face geometry


@dataclasses.dataclass
class CellFaceGeom:
    R: np.ndarray        # N_f - P per the requested policy
    D: np.ndarray | None  # P_f - P, interior only
    d_hat: np.ndarray
    s_hat: np.ndarray    # outward unit normal for this cell
    S_vec: np.ndarray
    c_prime: np.ndarray | None
    alpha: float
    m: np.ndarray | None


def cell_face_geom(mesh: Mesh, cell: int, face: int, nf_policy: NfPolicy,
                   boundary_ok: bool = True) -> CellFaceGeom:
    if face not in mesh.cell_faces(cell):
        raise ValueError(f"face {face} does not belong to cell {cell}")
    P = mesh.cell_centroid[cell]
    cf = mesh.face_centroid[face]
    sign = 1.0 if mesh.face_owner[face] == cell else -1.0
    s_hat = sign * mesh.face_normal[face]
    S_vec = mesh.face_length[face] * s_hat
    if mesh.face_neighbour[face] < 0 and mesh.face_owner[face] == cell:
        if not boundary_ok:
            raise NoNeighbour(f"face {face} is a boundary face")
        R = cf - P
        return CellFaceGeom(R=R, D=None, d_hat=R / np.linalg.norm(R), s_hat=s_hat,
                            S_vec=S_vec, c_prime=None, alpha=math.nan, m=None)
    nb = mesh.face_neighbour[face] if sign > 0 else mesh.face_owner[face]
    Pf = mesh.cell_centroid[nb]
    D = Pf - P
    nD2 = float(D @ D)
    assert nD2 > 0.0, "coincident cell centroids"
    alpha = float((cf - P) @ D) / nD2
    c_prime = P + alpha * D
    m = 0.5 * (P + Pf)
    if nf_policy is NfPolicy.NEIGHBOUR_CENTROID:
        R = D
    elif nf_policy is NfPolicy.PROJECTED_FACE_CENTROID:
        R = alpha * D
    else:
        R = 0.5 * D
    return CellFaceGeom(R=R, D=D, d_hat=D / math.sqrt(nD2), s_hat=s_hat,
                        S_vec=S_vec, c_prime=c_prime, alpha=alpha, m=m)


# ---------------------------------------------------------------------------
# Quality metrics


@dataclasses.dataclass
class QualityMetrics:
    skewness: np.ndarray          # per interior face (nan at boundary faces)
    unevenness: np.ndarray
    nonorthogonality: np.ndarray  # radians
    aspect_ratio: np.ndarray      # per cell, max/min face length

    def summary(self) -> dict:
        out = {}
        for name in ("skewness", "unevenness", "nonorthogonality"):
            v = getattr(self, name)
            v = v[np.isfinite(v)]
            out[f"mean_{name}"] = float(v.mean()) if len(v) else 0.0
            out[f"max_{name}"] = float(v.max()) if len(v) else 0.0
        out["mean_aspect_ratio"] = float(self.aspect_ratio.mean())
        out["max_aspect_ratio"] = float(self.aspect_ratio.max())
        return out


def quality(mesh: Mesh) -> QualityMetrics:
    interior = mesh.face_neighbour >= 0
    P = mesh.cell_centroid[mesh.face_owner]
    skew = np.full(mesh.n_faces, np.nan)
    unev = np.full(mesh.n_faces, np.nan)
    nonorth = np.full(mesh.n_faces, np.nan)
    Pf = mesh.cell_centroid[mesh.face_neighbour[interior]]
    Po = P[interior]
    D = Pf - Po
    nD = np.hypot(D[:, 0], D[:, 1])
    cf = mesh.face_centroid[interior]
    alpha = np.einsum("ij,ij->i", cf - Po, D) / nD**2
    cp = Po + alpha[:, None] * D
    skew[interior] = np.hypot(*(cf - cp).T) / nD
    mid = 0.5 * (Po + Pf)
    unev[interior] = np.hypot(*(cp - mid).T) / nD
    d_hat = D / nD[:, None]
    dots = np.clip(np.einsum("ij,ij->i", d_hat, mesh.face_normal[interior]), -1.0, 1.0)
    nonorth[interior] = np.arccos(dots)
    flen = mesh.face_length[mesh.cell_face_idx]
    amax = np.maximum.reduceat(flen, mesh.cell_face_ptr[:-1])
    amin = np.minimum.reduceat(flen, mesh.cell_face_ptr[:-1])
    return QualityMetrics(skew, unev, nonorth, amax / amin)


# ---------------------------------------------------------------------------
# Flat cell-face tables consumed by the gradient kernels


@dataclasses.dataclass
class CellFaceTable:
    """Per (cell, face) incidence arrays, flattened in CSR order."""
    cell: np.ndarray
    face: np.ndarray
    sign: np.ndarray
    is_bnd: np.ndarray
    nb: np.ndarray
    Dx: np.ndarray       # P_f - P (interior) or c_f - P (boundary)
    Dy: np.ndarray
    normD: np.ndarray
    alpha: np.ndarray    # nan on boundary entries
    snx: np.ndarray      # outward unit normal
    sny: np.ndarray
    svx: np.ndarray      # outward face vector S_f * s_hat
    svy: np.ndarray
    S: np.ndarray
    cfx: np.ndarray
    cfy: np.ndarray
    cpx: np.ndarray      # projected point c'_f (c_f on boundary entries)
    cpy: np.ndarray


def cellface_table(mesh: Mesh) -> CellFaceTable:
    t = mesh._cache.get("table")
    if t is not None:
        return t
    ptr, fid = mesh.cell_face_ptr, mesh.cell_face_idx
    counts = np.diff(ptr)
    cell = np.repeat(np.arange(mesh.n_cells, dtype=np.int64), counts)
    sign = np.where(mesh.face_owner[fid] == cell, 1.0, -1.0)
    nb = np.where(sign > 0, mesh.face_neighbour[fid], mesh.face_owner[fid])
    is_bnd = nb < 0
    P = mesh.cell_centroid[cell]
    cf = mesh.face_centroid[fid]
    other = np.where(is_bnd, 0, nb)
    Pf = np.where(is_bnd[:, None], cf, mesh.cell_centroid[other])
    D = Pf - P
    normD = np.hypot(D[:, 0], D[:, 1])
    alpha = np.where(
        is_bnd, np.nan,
        np.einsum("ij,ij->i", cf - P, D) / np.where(is_bnd, 1.0, normD**2))
    cp = np.where(is_bnd[:, None], cf, P + alpha[:, None] * D)
    sn = mesh.face_normal[fid] * sign[:, None]
    S = mesh.face_length[fid]
    t = CellFaceTable(cell=cell, face=fid, sign=sign, is_bnd=is_bnd, nb=nb,
                      Dx=D[:, 0], Dy=D[:, 1], normD=normD, alpha=alpha,
                      snx=sn[:, 0], sny=sn[:, 1], svx=S * sn[:, 0], svy=S * sn[:, 1],
                      S=S, cfx=cf[:, 0], cfy=cf[:, 1], cpx=cp[:, 0], cpy=cp[:, 1])
    mesh._cache["table"] = t
    return t


@dataclasses.dataclass
class CellFaceTableDD:
    """Double-double version of CellFaceTable.

    The binary64 centroids and node coordinates are promoted exactly and all
    derived quantities are recomputed in compensated arithmetic, so the
    cancellation-prone parts of a gradient assembly can run at ~106-bit
    precision against the same geometric points the double path uses.
    """
    Dx: tuple
    Dy: tuple
    normD: tuple
    alpha: tuple
    snx: tuple
    sny: tuple
    svx: tuple
    svy: tuple
    S: tuple
    omega: tuple


def cellface_table_dd(mesh: Mesh) -> CellFaceTableDD:
    t = mesh._cache.get("table_dd")
    if t is not None:
        return t
    base = cellface_table(mesh)
    fid = base.face
    ccx, ccy = cell_centroid_dd(mesh)
    fcx, fcy = face_centroid_dd(mesh)
    Px = (ccx[0][base.cell], ccx[1][base.cell])
    Py = (ccy[0][base.cell], ccy[1][base.cell])
    cfx = (fcx[0][fid], fcx[1][fid])
    cfy = (fcy[0][fid], fcy[1][fid])
    other = np.where(base.is_bnd, 0, base.nb)
    Pfx = (np.where(base.is_bnd, cfx[0], ccx[0][other]),
           np.where(base.is_bnd, cfx[1], ccx[1][other]))
    Pfy = (np.where(base.is_bnd, cfy[0], ccy[0][other]),
           np.where(base.is_bnd, cfy[1], ccy[1][other]))
    Dx = dd.sub(Pfx, Px)
    Dy = dd.sub(Pfy, Py)
    normD = dd.norm2(Dx, Dy)
    # alpha = (c_f - P) . D / |D|^2
    gx = dd.sub(cfx, Px)
    gy = dd.sub(cfy, Py)
    dot = dd.add(dd.mul(gx, Dx), dd.mul(gy, Dy))
    alpha_dd = dd.div(dot, dd.sqr(normD))
    alpha = (np.where(base.is_bnd, np.nan, alpha_dd[0]),
             np.where(base.is_bnd, 0.0, alpha_dd[1]))
    # face vector from exact node differences
    a = mesh.nodes[mesh.face_nodes[fid, 0]]
    b = mesh.nodes[mesh.face_nodes[fid, 1]]
    ex = dd.sub(dd.from_double(b[:, 0]), dd.from_double(a[:, 0]))
    ey = dd.sub(dd.from_double(b[:, 1]), dd.from_double(a[:, 1]))
    S = dd.norm2(ex, ey)
    orient = mesh.face_flip[fid] * base.sign
    svx = dd.mul_d(ey, orient)
    svy = dd.mul_d(dd.neg(ex), orient)
    snx = dd.div(svx, S)
    sny = dd.div(svy, S)
    t = CellFaceTableDD(Dx=Dx, Dy=Dy, normD=normD, alpha=alpha,
                        snx=snx, sny=sny, svx=svx, svy=svy, S=S,
                        omega=_cell_area_dd(mesh))
    mesh._cache["table_dd"] = t
    return t


def _segment_sum_dd(values, counts):
    """Sequential per-segment accumulation of a dd array (CSR layout)."""
    n = len(counts)
    maxf = int(counts.max())
    mask = np.arange(maxf)[None, :] < counts[:, None]
    vh = np.zeros((n, maxf))
    vl = np.zeros((n, maxf))
    vh[mask] = values[0]
    vl[mask] = values[1]
    acc = (np.zeros(n), np.zeros(n))
    for k in range(maxf):
        acc = dd.add(acc, (vh[:, k], vl[:, k]))
    return acc


def _cell_geometry_dd(mesh: Mesh):
    """Shoelace areas and centroids in double-double.

    The binary64 shoelace loses ~half its digits on thin cells far from
    the origin, which is enough to visibly bend the most weight-sensitive
    reconstruction schemes; recomputing from the exact node coordinates
    removes that.
    """
    cached = mesh._cache.get("cell_geom_dd")
    if cached is not None:
        return cached
    ptr, idx = mesh.cell_nodes_ptr, mesh.cell_nodes_idx
    nxt = _loop_next(ptr, len(idx))
    x = dd.from_double(mesh.nodes[idx, 0])
    y = dd.from_double(mesh.nodes[idx, 1])
    xn = dd.from_double(mesh.nodes[idx[nxt], 0])
    yn = dd.from_double(mesh.nodes[idx[nxt], 1])
    cross = dd.sub(dd.mul(x, yn), dd.mul(xn, y))
    counts = np.diff(ptr)
    area = dd.mul_pwr2(_segment_sum_dd(cross, counts), 0.5)
    sx = _segment_sum_dd(dd.mul(dd.add(x, xn), cross), counts)
    sy = _segment_sum_dd(dd.mul(dd.add(y, yn), cross), counts)
    six_a = dd.mul_d(area, 6.0)
    cx = dd.div(sx, six_a)
    cy = dd.div(sy, six_a)
    out = (area, cx, cy)
    mesh._cache["cell_geom_dd"] = out
    return out


def _cell_area_dd(mesh: Mesh):
    return _cell_geometry_dd(mesh)[0]


def cell_centroid_dd(mesh: Mesh):
    """((cx_hi, cx_lo), (cy_hi, cy_lo)) cell centroids from exact nodes."""
    _, cx, cy = _cell_geometry_dd(mesh)
    return cx, cy


def face_centroid_dd(mesh: Mesh):
    """Face midpoints (a + b) / 2 in double-double, per face."""
    cached = mesh._cache.get("face_centroid_dd")
    if cached is not None:
        return cached
    a = mesh.nodes[mesh.face_nodes[:, 0]]
    b = mesh.nodes[mesh.face_nodes[:, 1]]
    cfx = dd.mul_pwr2(dd.add(dd.from_double(a[:, 0]), dd.from_double(b[:, 0])), 0.5)
    cfy = dd.mul_pwr2(dd.add(dd.from_double(a[:, 1]), dd.from_double(b[:, 1])), 0.5)
    mesh._cache["face_centroid_dd"] = (cfx, cfy)
    return cfx, cfy


# ---------------------------------------------------------------------------
# Interchange format


FORMAT_HEADER = "fvgrad-mesh v1"


def write_mesh(mesh: Mesh, fh):
    fh.write(FORMAT_HEADER + "\n")
    fh.write(f"{mesh.n_nodes} {mesh.n_faces} {mesh.n_cells}\n")
    for xy in mesh.nodes:
        fh.write(f"{float(xy[0])!r} {float(xy[1])!r}\n")
    for i in range(mesh.n_faces):
        a, b = mesh.face_nodes[i]
        nb = mesh.face_neighbour[i]
        tail = f"B:{mesh.face_tags[i]}" if nb < 0 else str(nb)
        fh.write(f"{a} {b} {mesh.face_owner[i]} {tail}\n")
    for c in range(mesh.n_cells):
        fh.write(" ".join(str(f) for f in mesh.cell_faces(c)) + "\n")


def read_mesh(fh) -> Mesh:
    lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != FORMAT_HEADER:
        raise MeshFormatError("missing 'fvgrad-mesh v1' header")
    try:
        nn, nf, nc = (int(s) for s in lines[1].split())
        pos = 2
        nodes = np.array([[float(v) for v in lines[pos + i].split()] for i in range(nn)])
        pos += nn
        faces = []
        for i in range(nf):
            a, b, own, tail = lines[pos + i].split()
            nbv = tail[2:] if tail.startswith("B:") else int(tail)
            faces.append((int(a), int(b), int(own), nbv))
        pos += nf
        cells = [[int(v) for v in lines[pos + i].split()] for i in range(nc)]
    except (ValueError, IndexError) as exc:
        raise MeshFormatError(f"malformed mesh file: {exc}") from None
    return from_lists(nodes, faces, cells)
