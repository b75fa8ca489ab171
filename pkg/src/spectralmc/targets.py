"""Characteristic-function target models and payoff transforms.

A target is exposed through its (possibly damped, complex) Fourier transform
cf(u), the spectral log-density log|cf(u)|, its gradient, and the unit-modulus
phase cf(u)/|cf(u)|.  All evaluators accept a single point of shape (d,) or a
batch of shape (n, d) and return matching scalars or (n,) arrays.
"""

import math
from abc import ABC, abstractmethod

import numpy as np

from .numerics import (
    DomainError,
    QuadratureGrid,
    SpdMatrix,
    gamma_reflected,
)

_SQRT_PI_HALF = math.sqrt(math.pi / 2.0)


def _as_batch(u, dim):
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        if u.shape[0] != dim:
            raise DomainError(f"expected a point of dimension {dim}")
        return u[None, :], True
    if u.ndim == 2 and u.shape[1] == dim:
        return u, False
    raise DomainError(f"expected shape ({dim},) or (n, {dim})")


def _unbatch(values, single):
    return values[0] if single else values


class CharacteristicTarget(ABC):
    """A distribution seen through its Fourier transform."""

    dim: int

    @abstractmethod
    def cf(self, u):
        """Fourier transform F[pi](u) (complex)."""

    @abstractmethod
    def log_abs_cf(self, u):
        """log |F[pi](u)|, the unnormalised spectral log-density."""

    @abstractmethod
    def grad_log_abs_cf(self, u):
        """Gradient of log |F[pi]| with respect to u."""

    def phase(self, u):
        """Unit-modulus factor F[pi](u)/|F[pi](u)|.

        Subclasses override with an analytic form; the fallback divides and
        refuses points of exactly zero modulus.
        """
        values = np.atleast_1d(self.cf(u))
        mod = np.abs(values)
        if np.any(mod == 0.0):
            raise DomainError("phase undefined: characteristic function vanishes")
        out = values / mod
        return out[0] if np.asarray(u).ndim == 1 else out


# ---------------------------------------------------------------------------
# Elliptically contoured stable family
# ---------------------------------------------------------------------------

class EcsdTarget(CharacteristicTarget):
    """Elliptically contoured alpha-stable target.

    cf(u) = exp(-(u^T S u)^(alpha/2) + i u.mu) with alpha in (0, 2] and S
    strictly positive definite.  alpha = 2 is Gaussian, alpha = 1 Cauchy.
    """

    def __init__(self, alpha: float, sigma: SpdMatrix, mu=None):
        if not 0.0 < alpha <= 2.0:
            raise DomainError("alpha must lie in (0, 2]")
        self.alpha = float(alpha)
        self.sigma = sigma
        self.dim = sigma.dim
        self.mu = np.zeros(self.dim) if mu is None else np.asarray(mu, dtype=float)
        if self.mu.shape != (self.dim,):
            raise DomainError("mu has wrong dimension")

    def cf(self, u):
        ub, single = _as_batch(u, self.dim)
        q = self.sigma.quad_form(ub)
        vals = np.exp(-q ** (self.alpha / 2.0) + 1j * (ub @ self.mu))
        return _unbatch(vals, single)

    def log_abs_cf(self, u):
        ub, single = _as_batch(u, self.dim)
        return _unbatch(-self.sigma.quad_form(ub) ** (self.alpha / 2.0), single)

    def grad_log_abs_cf(self, u):
        ub, single = _as_batch(u, self.dim)
        q = self.sigma.quad_form(ub)
        if np.any(q == 0.0):
            if self.alpha < 2.0:
                raise DomainError("gradient singular at the origin for alpha < 2")
            grad = -2.0 * ub @ self.sigma.entries
            return _unbatch(grad, single)
        grad = -self.alpha * q[:, None] ** (self.alpha / 2.0 - 1.0) * (ub @ self.sigma.entries)
        return _unbatch(grad, single)

    def phase(self, u):
        ub, single = _as_batch(u, self.dim)
        return _unbatch(np.exp(1j * (ub @ self.mu)), single)

    # -- original-domain density, closed form for the Cauchy and Gaussian cases

    def density(self, x):
        if self.alpha == 1.0:
            return cauchy_density(self, x)
        if self.alpha == 2.0:
            xb, single = _as_batch(x, self.dim)
            q = _inv_quad_form(self.sigma, xb - self.mu)
            norm = (4.0 * math.pi) ** (-self.dim / 2.0) / math.sqrt(self.sigma.det())
            return _unbatch(norm * np.exp(-0.25 * q), single)
        raise DomainError("closed-form density only for alpha in {1, 2}")

    def log_density(self, x):
        xb, single = _as_batch(x, self.dim)
        q = _inv_quad_form(self.sigma, xb - self.mu)
        if self.alpha == 1.0:
            vals = _cauchy_log_norm(self.dim, self.sigma) - 0.5 * (self.dim + 1) * np.log1p(q)
        elif self.alpha == 2.0:
            vals = (-self.dim / 2.0 * math.log(4.0 * math.pi)
                    - 0.5 * self.sigma.log_det() - 0.25 * q)
        else:
            raise DomainError("closed-form density only for alpha in {1, 2}")
        return _unbatch(vals, single)

    def grad_log_density(self, x):
        xb, single = _as_batch(x, self.dim)
        centred = xb - self.mu
        sinv_x = np.linalg.solve(self.sigma.entries, centred.T).T
        if self.alpha == 1.0:
            q = np.sum(centred * sinv_x, axis=-1)
            grad = -(self.dim + 1.0) * sinv_x / (1.0 + q)[:, None]
        elif self.alpha == 2.0:
            grad = -0.5 * sinv_x
        else:
            raise DomainError("closed-form density only for alpha in {1, 2}")
        return _unbatch(grad, single)


def _inv_quad_form(sigma: SpdMatrix, v):
    y = np.linalg.solve(sigma.chol, v.T)
    return np.sum(y * y, axis=0)


def _cauchy_log_norm(d: int, sigma: SpdMatrix) -> float:
    return (math.lgamma((d + 1) / 2.0) - (d + 1) / 2.0 * math.log(math.pi)
            - 0.5 * sigma.log_det())


def cauchy_density(target: EcsdTarget, x):
    """Closed-form density of the elliptical Cauchy member (alpha = 1)."""
    if target.alpha != 1.0:
        raise DomainError("cauchy_density requires alpha = 1")
    xb, single = _as_batch(x, target.dim)
    q = _inv_quad_form(target.sigma, xb - target.mu)
    norm = math.exp(_cauchy_log_norm(target.dim, target.sigma))
    vals = norm * (1.0 + q) ** (-(target.dim + 1) / 2.0)
    return _unbatch(vals, single)


# ---------------------------------------------------------------------------
# Symmetric infinitely divisible targets
# ---------------------------------------------------------------------------

_DEFAULT_JUMP_NODES = {1: 2001, 2: 301, 3: 101}


class LevyTripletTarget(CharacteristicTarget):
    """Symmetric infinitely divisible target given by a triplet (Sigma, mu, nu).

    cf(u) = exp(-u^T Sigma u / 2 + i mu.u + integral (cos(x.u) - 1) nu(x) dx),
    the jump integral evaluated on a fixed tensor grid since nu is user code
    whose support cannot be known a priori.  Sigma may be the zero matrix.
    """

    def __init__(self, sigma, mu, nu, grid: QuadratureGrid = None, dim: int = None):
        if sigma is None and dim is None:
            raise DomainError("need sigma or an explicit dim")
        if sigma is None:
            self.sigma_matrix = np.zeros((dim, dim))
        elif isinstance(sigma, SpdMatrix):
            self.sigma_matrix = sigma.entries
        else:
            self.sigma_matrix = np.asarray(sigma, dtype=float)
        self.dim = self.sigma_matrix.shape[0]
        if self.sigma_matrix.shape != (self.dim, self.dim):
            raise DomainError("sigma must be square")
        if np.max(np.abs(self.sigma_matrix - self.sigma_matrix.T)) > 1e-12 * (
                1.0 + np.max(np.abs(self.sigma_matrix))):
            raise DomainError("sigma must be symmetric")
        self.mu = np.zeros(self.dim) if mu is None else np.asarray(mu, dtype=float)
        self.nu = nu
        if grid is None:
            nodes = _DEFAULT_JUMP_NODES.get(self.dim)
            if nodes is None:
                raise DomainError("default jump grid only for d <= 3; pass one")
            grid = QuadratureGrid.uniform(-25.0, 25.0, nodes, dim=self.dim)
        self.grid = grid
        pts, w = grid.nodes_and_weights()
        dens = np.asarray([float(nu(p)) for p in pts])
        if np.any(dens < 0.0) or not np.all(np.isfinite(dens)):
            raise DomainError("nu must be finite and nonnegative on the grid")
        self._check_symmetry(pts, dens)
        self.jump_points = pts
        self.jump_mass = dens * w
        small = np.minimum(1.0, np.sum(pts * pts, axis=-1))
        self._levy_moment = float(np.sum(small * self.jump_mass))
        if not np.isfinite(self._levy_moment):
            raise DomainError("integral of min(1, |x|^2) nu diverges on the grid")

    def _check_symmetry(self, pts, dens):
        probe = pts[:: max(1, len(pts) // 64)]
        for p in probe:
            if not math.isclose(float(self.nu(p)), float(self.nu(-p)),
                                rel_tol=1e-9, abs_tol=1e-12):
                raise DomainError("nu must be symmetric: nu(x) == nu(-x)")

    def exponent(self, u):
        """Log characteristic function (complex), vectorised over rows of u."""
        ub, single = _as_batch(u, self.dim)
        quad = np.sum((ub @ self.sigma_matrix) * ub, axis=-1)
        jump = self._jump_integral(np.cos, ub, offset=-1.0)
        vals = -0.5 * quad + 1j * (ub @ self.mu) + jump
        return _unbatch(vals, single)

    def _jump_integral(self, fn, ub, offset=0.0, weight_points=False):
        # chunk over u rows to bound the (n_u, n_nodes) intermediate
        out_shape = (len(ub), self.dim) if weight_points else (len(ub),)
        out = np.zeros(out_shape)
        step = max(1, int(2e7) // max(1, len(self.jump_points)))
        for lo in range(0, len(ub), step):
            block = ub[lo:lo + step]
            inner = block @ self.jump_points.T
            vals = fn(inner) + offset
            if weight_points:
                out[lo:lo + step] = (vals * self.jump_mass) @ self.jump_points
            else:
                out[lo:lo + step] = vals @ self.jump_mass
        return out

    def cf(self, u):
        return np.exp(self.exponent(u))

    def log_abs_cf(self, u):
        return np.real(self.exponent(u))

    def grad_log_abs_cf(self, u):
        """-Sigma u - integral x sin(u.x) nu(x) dx."""
        ub, single = _as_batch(u, self.dim)
        jump = self._jump_integral(np.sin, ub, weight_points=True)
        grad = -(ub @ self.sigma_matrix) - jump
        return _unbatch(grad, single)

    def phase(self, u):
        ub, single = _as_batch(u, self.dim)
        return _unbatch(np.exp(1j * (ub @ self.mu)), single)


# ---------------------------------------------------------------------------
# CGMY model (independent coordinates, exponentially damped)
# ---------------------------------------------------------------------------

class CgmyModel(CharacteristicTarget):
    """Tempered-stable pure-jump log-price model with exponential damping.

    Coordinates are independent copies of a CGMY(T) marginal with parameters
    (c, g, m, y), risk-free rate `rate` and maturity.  `damping` holds the
    per-coordinate shift R with -g < R_k <= 0; cf() evaluates the transform
    at the complex-shifted argument u - iR, which is what the spectral
    density |cf| and the pricing estimators need.
    """

    def __init__(self, c, g, m, y, rate, maturity, damping=None, dim: int = 1):
        if c < 0.0 or g <= 0.0 or m <= 0.0:
            raise DomainError("need c >= 0 and g, m > 0")
        if not 0.0 < y < 2.0:
            raise DomainError("y must lie in (0, 2)")
        if y == 1.0:
            raise DomainError("y = 1 is rejected: the drift/cf formulas degenerate")
        if maturity <= 0.0:
            raise DomainError("maturity must be positive")
        self.c, self.g, self.m, self.y = float(c), float(g), float(m), float(y)
        self.rate, self.maturity = float(rate), float(maturity)
        self.dim = int(dim)
        if damping is None:
            damping = np.zeros(self.dim)
        self.damping = np.broadcast_to(
            np.asarray(damping, dtype=float), (self.dim,)).copy()
        if np.any(self.damping <= -self.g) or np.any(self.damping > 0.0):
            raise DomainError("damping must satisfy -g < R_k <= 0")
        self._gamma_negy = gamma_reflected(-self.y)
        self._drift = None

    def drift(self) -> float:
        """Martingale drift: rate - c Gamma(-y) [(m-1)^y - m^y + (g+1)^y - g^y]."""
        if self._drift is None:
            if self.m <= 1.0:
                raise DomainError("drift requires m > 1")
            bracket = ((self.m - 1.0) ** self.y - self.m ** self.y
                       + (self.g + 1.0) ** self.y - self.g ** self.y)
            self._drift = self.rate - self.c * self._gamma_negy * bracket
        return self._drift

    def _exponent_1d(self, w):
        """Log cf of one coordinate at complex argument w (principal branches)."""
        mu = self.drift()
        t, c, y = self.maturity, self.c, self.y
        bracket = ((self.m - 1j * w) ** y - self.m ** y
                   + (self.g + 1j * w) ** y - self.g ** y)
        return 1j * mu * w * t + t * c * self._gamma_negy * bracket

    def exponent(self, u, damping=None):
        """Summed per-coordinate log cf at the shifted argument u - iR."""
        ub, single = _as_batch(u, self.dim)
        r = self.damping if damping is None else np.broadcast_to(
            np.asarray(damping, dtype=float), (self.dim,))
        w = ub - 1j * r
        return _unbatch(np.sum(self._exponent_1d(w), axis=-1), single)

    def cf(self, u):
        return np.exp(self.exponent(u))

    def log_abs_cf(self, u):
        return np.real(self.exponent(u))

    def grad_log_abs_cf(self, u):
        """Central differences of log|cf|: coordinates are independent, so the
        gradient separates; step 1e-5 (1 + |u_k|) per coordinate."""
        ub, single = _as_batch(u, self.dim)
        w = ub - 1j * self.damping
        grad = np.empty_like(ub)
        for k in range(self.dim):
            h = 1e-5 * (1.0 + np.abs(ub[:, k]))
            up = np.real(self._exponent_1d(w[:, k] + h))
            dn = np.real(self._exponent_1d(w[:, k] - h))
            grad[:, k] = (up - dn) / (2.0 * h)
        return _unbatch(grad, single)

    def phase(self, u):
        ub, single = _as_batch(u, self.dim)
        w = ub - 1j * self.damping
        return _unbatch(np.exp(1j * np.sum(np.imag(self._exponent_1d(w)), axis=-1)), single)

    def undamped(self) -> "CgmyModel":
        return CgmyModel(self.c, self.g, self.m, self.y, self.rate,
                         self.maturity, damping=np.zeros(self.dim), dim=self.dim)


def cgmy_drift(model: CgmyModel) -> float:
    return model.drift()


def cgmy_damped_cf(model: CgmyModel, u):
    return model.cf(u)


# ---------------------------------------------------------------------------
# Payoffs and their transforms
# ---------------------------------------------------------------------------

def _sech(t):
    # 2 e^{-|t|} / (1 + e^{-2|t|}) avoids cosh overflow for large |t|
    a = np.abs(t)
    return 2.0 * np.exp(-a) / (1.0 + np.exp(-2.0 * a))


def sech_payoff(x):
    """g(x) = prod_i sech(sqrt(pi/2) x_i); a fixed point of the transform."""
    x = np.asarray(x, dtype=float)
    return np.prod(_sech(_SQRT_PI_HALF * x), axis=-1)


def sech_payoff_ft(u):
    """F[g](u) = (2 pi)^(d/2) prod_i sech(sqrt(pi/2) u_i); even in u."""
    u = np.asarray(u, dtype=float)
    d = u.shape[-1] if u.ndim else 1
    return (2.0 * math.pi) ** (d / 2.0) * np.prod(_sech(_SQRT_PI_HALF * u), axis=-1)


def max_put_payoff(x, strike: float):
    """(K - max_k e^{x_k})^+ on log prices x."""
    if strike <= 0.0:
        raise DomainError("strike must be positive")
    x = np.asarray(x, dtype=float)
    return np.maximum(strike - np.exp(np.max(x, axis=-1)), 0.0)


def max_put_payoff_ft(model: CgmyModel, strike: float, u, spot: float = 1.0):
    """Damped transform of the put-on-maximum payoff, evaluated at iR - u.

    With b_k = R_k + i u_k and B = sum b_k:

        F[g](iR - u) = spot (-1)^(d+1) (K/spot)^(1-B) / ((B - 1) prod_k b_k)

    `spot` folds the common log-price origin log(spot) into the transform so
    chains and quadrature can work in log-return coordinates.  Valid only on
    the damping strip: R_k < 0 for all k and sum R_k != 1.
    """
    if strike <= 0.0 or spot <= 0.0:
        raise DomainError("strike and spot must be positive")
    r = model.damping
    if np.any(r == 0.0):
        raise DomainError("payoff transform has a pole at R_k = 0")
    if float(np.sum(r)) == 1.0:
        raise DomainError("payoff transform has a pole at sum R_k = 1")
    ub, single = _as_batch(u, model.dim)
    b = r + 1j * ub
    bsum = np.sum(b, axis=-1)
    moneyness = strike / spot
    vals = (spot * (-1.0) ** (model.dim + 1)
            * moneyness ** (1.0 - bsum)
            / ((bsum - 1.0) * np.prod(b, axis=-1)))
    return _unbatch(vals, single)
