"""Dense linear algebra, special functions, RNG streams, and a tensor quadrature oracle.

Vectors are plain 1-D numpy arrays, complex values are Python/numpy complex.
Everything here is deterministic; the only stateful object is RngStream,
which is owned by exactly one consumer at a time.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss


class NotPositiveDefiniteError(ValueError):
    """Matrix handed to a Cholesky-backed routine is not positive definite."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of the operation."""


class GridCapError(ValueError):
    """Quadrature grid exceeds the configured node or dimension cap."""


class ChainAbortError(RuntimeError):
    """A sampler hit a state it cannot continue from (e.g. gradient overflow)."""


class NumericalFailure(RuntimeError):
    """A cross-check between two computation routes disagreed beyond tolerance."""


# ---------------------------------------------------------------------------
# RNG
# ---------------------------------------------------------------------------

_U64 = np.uint64


@dataclass
class RngStream:
    """Counter-based random stream keyed by (seed, stream).

    Streams with distinct (seed, stream) pairs are statistically independent
    by construction (Philox keys), and identical pairs reproduce bit-identical
    draw sequences across runs and platforms.
    """

    seed: int
    stream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not (0 <= self.stream < 2**64):
            raise DomainError("stream id must be a 64-bit unsigned integer")
        key = np.array([self.seed, self.stream], dtype=_U64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def substream(self, offset: int) -> "RngStream":
        """A fresh independent stream; offsets must be managed by the caller."""
        return RngStream(self.seed, (self.stream + offset) % 2**64)

    # thin draw helpers so call sites do not reach into .generator everywhere
    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def exponential(self, size=None):
        return self._gen.standard_exponential(size)

    def gamma(self, shape, size=None):
        return self._gen.standard_gamma(shape, size)


# ---------------------------------------------------------------------------
# SPD matrices
# ---------------------------------------------------------------------------

class SpdMatrix:
    """Symmetric positive definite matrix with its lower Cholesky factor.

    The factor is computed on construction; construction fails with
    NotPositiveDefiniteError when a pivot is non-positive and with
    DomainError when the input is visibly asymmetric.
    """

    _SYM_TOL = 1e-12
    _ROUNDTRIP_TOL = 1e-10

    def __init__(self, entries):
        entries = np.array(entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DomainError("entries must be a square matrix")
        scale = np.max(np.abs(entries))
        if scale == 0.0:
            raise NotPositiveDefiniteError("not positive definite: zero matrix")
        if np.max(np.abs(entries - entries.T)) > self._SYM_TOL * scale:
            raise DomainError("matrix is not symmetric")
        entries = 0.5 * (entries + entries.T)
        try:
            chol = np.linalg.cholesky(entries)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("not positive definite") from exc
        if np.any(np.diag(chol) <= 0.0):
            raise NotPositiveDefiniteError("not positive definite")
        if np.max(np.abs(chol @ chol.T - entries)) > self._ROUNDTRIP_TOL * scale:
            raise NumericalFailure("Cholesky round-trip exceeded tolerance")
        self.entries = entries
        self.chol = chol
        self.dim = entries.shape[0]

    @classmethod
    def identity(cls, d: int) -> "SpdMatrix":
        return cls(np.eye(d))

    @classmethod
    def diagonal(cls, values) -> "SpdMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def apply(self, v):
        return self.entries @ np.asarray(v, dtype=float)

    def apply_inverse(self, v):
        """Solve S x = v through the Cholesky factor."""
        v = np.asarray(v, dtype=float)
        y = np.linalg.solve(self.chol, v)
        return np.linalg.solve(self.chol.T, y)

    def sqrt_apply(self, z):
        """Map z -> L z; sends N(0, I) draws to N(0, S) draws."""
        return self.chol @ np.asarray(z, dtype=float)

    def inv_sqrt_t_apply(self, v):
        """Solve L^T u = v; maps radially symmetric points to S-contoured ones."""
        return np.linalg.solve(self.chol.T, np.asarray(v, dtype=float))

    def quad_form(self, u):
        """u^T S u, vectorised over rows when u has shape (n, d)."""
        u = np.asarray(u, dtype=float)
        w = u @ self.chol
        return np.sum(w * w, axis=-1)

    def det(self) -> float:
        return float(np.prod(np.diag(self.chol)) ** 2)

    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def __repr__(self):
        return f"SpdMatrix({self.entries.tolist()})"


def cholesky_solve_and_sqrt(matrix) -> SpdMatrix:
    """Factor a positive definite matrix, exposing L and the inverse-apply routine."""
    return matrix if isinstance(matrix, SpdMatrix) else SpdMatrix(matrix)


# ---------------------------------------------------------------------------
# Rotations and special functions
# ---------------------------------------------------------------------------

def random_rotation(d: int, rng: RngStream) -> np.ndarray:
    """Haar-ish random rotation (orthogonal with det +1) via sign-fixed QR.

    d = 1 returns [[1.0]] so that the only degree of freedom (the sign) is fixed.
    """
    if d < 1:
        raise DomainError("dimension must be >= 1")
    if d == 1:
        return np.ones((1, 1))
    a = rng.normal((d, d))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0.0:
        q[:, -1] = -q[:, -1]
    return q


def log_gamma(z: float) -> float:
    """log Gamma(z) for z > 0."""
    if not z > 0.0:
        raise DomainError("log_gamma requires z > 0")
    return math.lgamma(z)


def gamma_reflected(z: float) -> float:
    """Gamma(z) valid at negative non-integer arguments via the reflection formula."""
    if z > 0.0:
        return math.gamma(z)
    if z == math.floor(z):
        raise DomainError(f"gamma pole at non-positive integer z={z}")
    # Gamma(z) Gamma(1 - z) = pi / sin(pi z), with z < 0 here
    return math.pi / (math.sin(math.pi * z) * math.gamma(1.0 - z))


# ---------------------------------------------------------------------------
# Tensor quadrature oracle
# ---------------------------------------------------------------------------

NODE_CAP = 10_000_000
DIM_CAP = 3


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product grid on a box, trapezoid or Gauss-Legendre per axis.

    Exists for desk-scale ground truth only: at most 3 axes and 1e7 nodes.
    """

    bounds: tuple
    node_counts: tuple
    rule: str = "trapezoid"

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        counts = tuple(int(m) for m in self.node_counts)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "node_counts", counts)
        if len(bounds) != len(counts):
            raise DomainError("bounds and node_counts must have equal length")
        if len(bounds) > DIM_CAP:
            raise GridCapError(f"quadrature capped at {DIM_CAP} dimensions")
        for (a, b), m in zip(bounds, counts):
            if not a < b:
                raise DomainError(f"empty axis [{a}, {b}]")
            if m < 2:
                raise DomainError("need at least 2 nodes per axis")
        total = math.prod(counts)
        if total > NODE_CAP:
            raise GridCapError(f"grid has {total} nodes, cap is {NODE_CAP}")
        if self.rule not in ("trapezoid", "gauss-legendre"):
            raise DomainError(f"unknown rule {self.rule!r}")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @classmethod
    def uniform(cls, lo, hi, nodes, dim=1, rule="trapezoid") -> "QuadratureGrid":
        return cls(tuple((lo, hi) for _ in range(dim)),
                   tuple(nodes for _ in range(dim)), rule)

    def axis(self, i: int):
        """Nodes and weights along axis i."""
        (a, b), m = self.bounds[i], self.node_counts[i]
        if self.rule == "trapezoid":
            x = np.linspace(a, b, m)
            w = np.full(m, (b - a) / (m - 1))
            w[0] *= 0.5
            w[-1] *= 0.5
        else:
            x0, w0 = leggauss(m)
            x = 0.5 * (b - a) * x0 + 0.5 * (a + b)
            w = 0.5 * (b - a) * w0
        return x, w

    def nodes_and_weights(self):
        """Full tensor grid: points of shape (total, dim), weights (total,)."""
        axes = [self.axis(i) for i in range(self.dim)]
        grids = np.meshgrid(*[x for x, _ in axes], indexing="ij")
        pts = np.stack([g.reshape(-1) for g in grids], axis=-1)
        w = axes[0][1]
        for _, wi in axes[1:]:
            w = np.multiply.outer(w, wi)
        return pts, w.reshape(-1)

    def halved(self) -> "QuadratureGrid":
        counts = tuple(max(2, (m + 1) // 2) for m in self.node_counts)
        return QuadratureGrid(self.bounds, counts, self.rule)


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error: float

    @property
    def real(self) -> float:
        return self.value.real


def quad_integrate(f, grid: QuadratureGrid, vectorized: bool = False) -> QuadResult:
    """Integrate a complex-valued f over the grid's box.

    The reported error is a crude proxy: the difference against the same rule
    at half resolution (which re-evaluates f).  `vectorized=True` promises
    that f maps an (n, d) array of points to an (n,) array of values.
    """
    def run(g: QuadratureGrid) -> complex:
        pts, w = g.nodes_and_weights()
        if vectorized:
            vals = np.asarray(f(pts))
        else:
            vals = np.array([f(p) for p in pts])
        if not np.all(np.isfinite(vals.real)) or not np.all(np.isfinite(np.imag(vals))):
            raise DomainError("integrand is not finite on all grid nodes")
        return complex(np.sum(w * vals))

    full = run(grid)
    half = run(grid.halved())
    return QuadResult(full, abs(full - half))
