"""P1 finite elements on triangulated polygons.

Builds meshes for a unit square, an L-shape and regular n-gons inscribed in
the unit circle, assembles the dense stiffness/mass/boundary matrices, and
exposes the trace operator together with its spectral (Steklov) structure
and the Robin/Dirichlet solution operators used by the inequality lab.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg
from .errors import (
    DegenerateTriangle,
    InvalidSpec,
    NoInteriorVertices,
    SOutOfRange,
)
from .operators import (
    WeightedOperator,
    WeightedSpace,
    adjoint,
    gram_orthonormalize,
    pseudoinverse,
)

# structural null modes of trace-derived operators sit at ~1e-9 relative
# after the congruence eigensolve, well above the generic default cut at
# mesh sizes in the hundreds; true singular values stay within a few
# decades of the top, so a 1e-7 relative cut separates them cleanly
FEM_RANK_RTOL = 1e-7

MIN_TRIANGLE_AREA = 1e-14


@dataclass(eq=False)
class Mesh:
    """Triangulation with an ordered, closed boundary vertex loop."""

    vertices: np.ndarray        # (n, 2) float
    triangles: np.ndarray       # (m, 3) int, counterclockwise
    boundary_loop: np.ndarray   # (L,) int, single CCW cycle

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.boundary_loop = np.ascontiguousarray(self.boundary_loop, dtype=np.int64)


@dataclass(eq=False)
class FemMatrices:
    """Dense P1 matrices; boundary objects use boundary-loop numbering."""

    K: np.ndarray          # stiffness, kernel = constants
    M: np.ndarray          # domain mass
    Mb: np.ndarray         # boundary mass
    Kb: np.ndarray         # boundary (arclength) stiffness
    T: np.ndarray          # trace restriction, one unit entry per row
    boundary: np.ndarray   # the loop, kept for interior/boundary splits


class SteklovSystem(NamedTuple):
    lambdas: np.ndarray    # ascending, lambdas[0] = 0
    sigmas: np.ndarray     # (1 + lambda)^(-1/2), descending in (0, 1]
    V: np.ndarray          # harmonic eigenfunctions, Gram-orthonormal
    Z: np.ndarray          # boundary functions trace(v_k)/sigma_k


class TraceSpaces(NamedTuple):
    h1: WeightedSpace      # vertex functions, Gram K + T'·Mb·T
    l2b: WeightedSpace     # boundary functions, Gram Mb
    l2: WeightedSpace      # domain functions, Gram M
    gamma: WeightedOperator


class PoissonOperators(NamedTuple):
    e: WeightedOperator        # inclusion into the domain L2 space
    estar: WeightedOperator    # Robin solve (adjoint of e)
    e0star: WeightedOperator   # zero-trace Dirichlet solve
    e1: WeightedOperator       # adjoint of estar - e0star
    f1: WeightedOperator       # pseudoinverse of e1


# ---------------------------------------------------------------------------
# mesh construction
# ---------------------------------------------------------------------------

def _triangle_areas(vertices, triangles):
    p = vertices[triangles]
    u = p[:, 1] - p[:, 0]
    v = p[:, 2] - p[:, 0]
    return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])


def _validate(mesh):
    n = len(mesh.vertices)
    if mesh.triangles.size and (mesh.triangles.min() < 0 or mesh.triangles.max() >= n):
        raise InvalidSpec("triangle index out of range")
    areas = _triangle_areas(mesh.vertices, mesh.triangles)
    if np.any(areas <= MIN_TRIANGLE_AREA):
        raise DegenerateTriangle(f"triangle area {areas.min():.3e} not positive")
    loop = mesh.boundary_loop
    if len(set(loop.tolist())) != len(loop):
        raise InvalidSpec("boundary loop repeats a vertex")
    counts = {}
    for tri in mesh.triangles:
        for u, v in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            counts[(min(u, v), max(u, v))] = counts.get((min(u, v), max(u, v)), 0) + 1
    exposed = {edge for edge, c in counts.items() if c == 1}
    loop_edges = {
        (min(loop[i], loop[(i + 1) % len(loop)]), max(loop[i], loop[(i + 1) % len(loop)]))
        for i in range(len(loop))
    }
    if exposed != loop_edges:
        raise InvalidSpec("boundary loop does not match the exposed edges")
    return mesh


def _square_seed():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]])
    triangles = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])
    return Mesh(vertices, triangles, np.arange(4))


def _lshape_seed():
    vertices = np.array([
        [0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 0.5],
        [0.5, 0.5], [0.5, 1.0], [0.0, 1.0], [0.0, 0.5],
        [0.25, 0.25], [0.75, 0.25], [0.25, 0.75],
    ])
    triangles = np.array([
        [0, 1, 8], [1, 4, 8], [4, 7, 8], [7, 0, 8],
        [1, 2, 9], [2, 3, 9], [3, 4, 9], [4, 1, 9],
        [7, 4, 10], [4, 5, 10], [5, 6, 10], [6, 7, 10],
    ])
    return Mesh(vertices, triangles, np.arange(8))


def _ngon_seed(sides):
    angles = 2.0 * np.pi * np.arange(sides) / sides
    ring = np.column_stack([np.cos(angles), np.sin(angles)])
    if sides == 3:
        return Mesh(ring, np.array([[0, 1, 2]]), np.arange(3))
    vertices = np.vstack([ring, [[0.0, 0.0]]])
    triangles = np.array([[j, (j + 1) % sides, sides] for j in range(sides)])
    return Mesh(vertices, triangles, np.arange(sides))


def _quadrisect(mesh, project_circle):
    coords = list(mesh.vertices)
    midpoint = {}

    def mid(u, v):
        key = (min(u, v), max(u, v))
        if key not in midpoint:
            midpoint[key] = len(coords)
            coords.append(0.5 * (mesh.vertices[u] + mesh.vertices[v]))
        return midpoint[key]

    children = []
    for a, b, c in mesh.triangles:
        mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
        children += [[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]]

    loop = []
    old = mesh.boundary_loop
    for i in range(len(old)):
        u, v = old[i], old[(i + 1) % len(old)]
        loop.append(u)
        w = mid(u, v)
        if project_circle:
            coords[w] = coords[w] / np.hypot(*coords[w])
        loop.append(w)
    return Mesh(np.array(coords), np.array(children), np.array(loop))


def parse_domain(spec):
    """Domain mini-grammar: 'square', 'lshape' or 'ngon:<sides>'."""
    text = spec.strip().lower()
    if text == "square":
        return "square", 0
    if text == "lshape":
        return "lshape", 0
    if text.startswith("ngon:"):
        try:
            sides = int(text.split(":", 1)[1])
        except ValueError:
            raise InvalidSpec(f"bad n-gon side count in {spec!r}") from None
        if sides < 3:
            raise InvalidSpec(f"an n-gon needs at least 3 sides, got {sides}")
        return "ngon", sides
    raise InvalidSpec(f"unknown domain {spec!r}; use square, lshape or ngon:<sides>")


def build_mesh(spec, refine=0):
    """Mesh for a named domain, quadrisected ``refine`` times.

    N-gon boundary midpoints created by refinement are re-projected onto
    the unit circle so boundary vertices stay at distance 1.
    """
    if refine < 0:
        raise InvalidSpec(f"refine must be >= 0, got {refine}")
    kind, sides = parse_domain(spec)
    if kind == "square":
        mesh = _square_seed()
    elif kind == "lshape":
        mesh = _lshape_seed()
    else:
        mesh = _ngon_seed(sides)
    for _ in range(refine):
        mesh = _quadrisect(mesh, project_circle=(kind == "ngon"))
    return _validate(mesh)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble(mesh):
    """Exact P1 integration of all five matrices."""
    n = len(mesh.vertices)
    areas = _triangle_areas(mesh.vertices, mesh.triangles)
    if np.any(areas <= MIN_TRIANGLE_AREA):
        raise DegenerateTriangle(f"triangle area {areas.min():.3e} not positive")

    stiff = np.zeros((n, n))
    mass = np.zeros((n, n))
    mass_local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    for tri, area in zip(mesh.triangles, areas):
        p = mesh.vertices[tri]
        # gradient of hat i is the rotated opposite edge over twice the area
        b = np.array([p[1, 1] - p[2, 1], p[2, 1] - p[0, 1], p[0, 1] - p[1, 1]])
        c = np.array([p[2, 0] - p[1, 0], p[0, 0] - p[2, 0], p[1, 0] - p[0, 0]])
        k_local = (np.outer(b, b) + np.outer(c, c)) / (4.0 * area)
        stiff[np.ix_(tri, tri)] += k_local
        mass[np.ix_(tri, tri)] += area * mass_local

    loop = mesh.boundary_loop
    nb = len(loop)
    mass_b = np.zeros((nb, nb))
    stiff_b = np.zeros((nb, nb))
    for i in range(nb):
        j = (i + 1) % nb
        h = float(np.hypot(*(mesh.vertices[loop[j]] - mesh.vertices[loop[i]])))
        mass_b[np.ix_((i, j), (i, j))] += h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
        stiff_b[np.ix_((i, j), (i, j))] += 1.0 / h * np.array([[1.0, -1.0], [-1.0, 1.0]])

    trace = np.zeros((nb, n))
    trace[np.arange(nb), loop] = 1.0
    return FemMatrices(stiff, mass, mass_b, stiff_b, trace, loop.copy())


def spaces_and_trace(fem, tag=""):
    """The three weighted spaces and the trace operator between them."""
    gram = fem.K + fem.T.T @ fem.Mb @ fem.T
    h1 = WeightedSpace(fem.K.shape[0], 0.5 * (gram + gram.T), f"H1_boundary{tag}")
    l2b = WeightedSpace(fem.Mb.shape[0], fem.Mb, f"L2_boundary{tag}")
    l2 = WeightedSpace(fem.M.shape[0], fem.M, f"L2_domain{tag}")
    return TraceSpaces(h1, l2b, l2, WeightedOperator(h1, l2b, fem.T))


def trace_pair(fem, tag=""):
    """(Gamma, pseudoinverse(Gamma)) with the structural rank cut applied."""
    spaces = spaces_and_trace(fem, tag)
    return spaces.gamma, pseudoinverse(spaces.gamma, tol=FEM_RANK_RTOL)


def interior_indices(fem):
    return np.setdiff1d(np.arange(fem.K.shape[0]), fem.boundary)


def harmonic_basis(fem):
    """Gram-orthonormal basis of the interior-equilibrium subspace.

    Column j extends the j-th boundary node value harmonically: interior
    rows of K annihilate it. With no interior vertices the whole space is
    harmonic (warned, not an error).
    """
    n = fem.K.shape[0]
    gram = fem.K + fem.T.T @ fem.Mb @ fem.T
    inner = interior_indices(fem)
    if inner.size == 0:
        warnings.warn("mesh has no interior vertices; harmonic subspace is everything",
                      NoInteriorVertices)
        return gram_orthonormalize(np.eye(n), gram)
    basis = np.zeros((n, len(fem.boundary)))
    basis[fem.boundary, np.arange(len(fem.boundary))] = 1.0
    k_ii = fem.K[np.ix_(inner, inner)]
    k_ib = fem.K[np.ix_(inner, fem.boundary)]
    basis[inner] = -linalg.chol_solve(linalg.cholesky(k_ii), k_ib)
    return gram_orthonormalize(basis, gram)


def steklov(fem):
    """Boundary spectrum K v = lambda (T'·Mb·T) v on the harmonic subspace."""
    basis = harmonic_basis(fem)
    th = fem.T @ basis
    stiff_h = basis.T @ fem.K @ basis
    mass_h = th.T @ fem.Mb @ th
    eig = linalg.gen_sym_eig(0.5 * (stiff_h + stiff_h.T), 0.5 * (mass_h + mass_h.T))
    lambdas = np.clip(eig.values, 0.0, None)  # spectrum is >= 0, clip roundoff
    sigmas = 1.0 / np.sqrt(1.0 + lambdas)
    v = basis @ (eig.vectors * sigmas)        # rescaled to full-Gram orthonormal
    z = (fem.T @ v) / sigmas
    return SteklovSystem(lambdas, sigmas, v, z)


def boundary_fractional_gram(fem, s):
    """Spectral boundary Gram G_s = Mb·W·diag((1+mu)^s)·W'·Mb, 0 <= s <= 1."""
    if not 0.0 <= s <= 1.0:
        raise SOutOfRange(f"boundary exponent must be in [0, 1], got {s}")
    eig = linalg.gen_sym_eig(fem.Kb, fem.Mb)
    mu = np.clip(eig.values, 0.0, None)
    core = fem.Mb @ (eig.vectors * (1.0 + mu) ** s) @ eig.vectors.T @ fem.Mb
    return 0.5 * (core + core.T)


def poisson_operators(fem, tag=""):
    """Inclusion, Robin and zero-trace Dirichlet solves, and their algebra."""
    spaces = spaces_and_trace(fem, tag)
    n = fem.K.shape[0]
    e = WeightedOperator(spaces.h1, spaces.l2, np.eye(n))
    estar = adjoint(e)
    inner = interior_indices(fem)
    dirichlet = np.zeros((n, n))
    if inner.size == 0:
        warnings.warn("mesh has no interior vertices; zero-trace solve is trivial",
                      NoInteriorVertices)
    else:
        k_ii = fem.K[np.ix_(inner, inner)]
        dirichlet[inner] = linalg.chol_solve(linalg.cholesky(k_ii), fem.M[inner])
    e0star = WeightedOperator(spaces.l2, spaces.h1, dirichlet)
    e1 = adjoint(estar - e0star)
    f1 = pseudoinverse(e1, tol=FEM_RANK_RTOL)
    return PoissonOperators(e, estar, e0star, e1, f1)


# ---------------------------------------------------------------------------
# text exchange formats
# ---------------------------------------------------------------------------

def mesh_to_text(mesh):
    lines = [f"vertices {len(mesh.vertices)}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(f"triangles {len(mesh.triangles)}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"boundary {len(mesh.boundary_loop)}")
    lines.append(" ".join(str(i) for i in mesh.boundary_loop))
    return "\n".join(lines) + "\n"


def mesh_from_text(text):
    rows = [line for line in text.splitlines() if line.strip()]
    pos = 0

    def expect(keyword):
        nonlocal pos
        if pos >= len(rows):
            raise InvalidSpec(f"mesh text ended before {keyword!r} section")
        parts = rows[pos].split()
        if len(parts) != 2 or parts[0] != keyword or not parts[1].isdigit():
            raise InvalidSpec(f"expected '{keyword} N', got {rows[pos]!r}")
        pos += 1
        return int(parts[1])

    try:
        count = expect("vertices")
        vertices = np.array([[float(t) for t in rows[pos + i].split()] for i in range(count)])
        pos += count
        count = expect("triangles")
        triangles = np.array(
            [[int(t) for t in rows[pos + i].split()] for i in range(count)], dtype=np.int64
        ).reshape(count, 3)
        pos += count
        count = expect("boundary")
        loop = np.array([int(t) for t in rows[pos].split()], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise InvalidSpec(f"malformed mesh text: {exc}") from None
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise InvalidSpec("vertex lines must hold two coordinates")
    if len(loop) != count:
        raise InvalidSpec("boundary length does not match its header")
    return _validate(Mesh(vertices, triangles, loop))


def write_mesh(mesh, path):
    with open(path, "w", newline="\n") as handle:
        handle.write(mesh_to_text(mesh))


def read_mesh(path):
    with open(path) as handle:
        return mesh_from_text(handle.read())


def dump_matrix_csv(matrix, path):
    """Debug dump: dense rows, 17 significant digits, LF endings."""
    mat = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w", newline="\n") as handle:
        for row in mat:
            handle.write(",".join(f"{x:.17g}" for x in row) + "\n")
