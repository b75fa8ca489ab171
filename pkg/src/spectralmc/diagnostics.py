"""Numeric probes of geometric-ergodicity conditions, in either domain.

Each probe inspects a target through callables (log-density, gradient, or a
sample) on finite grids and emits an ErgodicityReport.  Probes collect
evidence, never proofs: "inconsistent" is only issued when a necessary
condition fails beyond tolerance, and thresholds are configuration defaults
chosen to separate clear-cut positive and negative cases.
"""

import math
from dataclasses import dataclass

import numpy as np

from .numerics import DomainError, QuadratureGrid, RngStream, quad_integrate
from .samplers import Proposal, RandomWalkGaussian

CONSISTENT = "consistent-with-geometric-ergodicity"
INCONSISTENT = "inconsistent"
INCONCLUSIVE = "inconclusive"

DRIFT_DIVERGE_THRESHOLD = -10.0
DRIFT_VANISH_TOL = 0.05
GRADIENT_VANISH_TOL = 1e-3
MOMENT_STABILIZE_TOL = 1e-3
DEFAULT_S_GRID = (0.01, 0.1, 0.5, 1.0)
DEFAULT_RADIUS_GRID = (10.0, 20.0, 40.0, 80.0)


@dataclass
class ErgodicityReport:
    """Outcome of one probe: the raw values plus a cautious verdict."""

    probe: str
    domain: str
    grids: dict
    values: list
    verdict: str
    notes: str = ""

    def to_record(self) -> str:
        lines = [f"probe = {self.probe}", f"domain = {self.domain}"]
        for name, grid in sorted(self.grids.items()):
            lines.append(f"grid.{name} = " + ",".join(f"{v:.17g}" for v in grid))
        lines.append("values = " + ",".join(f"{float(v):.17g}" for v in self.values))
        lines.append(f"verdict = {self.verdict}")
        if self.notes:
            lines.append(f"notes = {self.notes}")
        return "\n".join(lines) + "\n"


def _monotone_decreasing(seq, strict=False) -> bool:
    pairs = zip(seq[:-1], seq[1:])
    return all(a > b for a, b in pairs) if strict else all(a >= b for a, b in pairs)


def radial_drift_profile(grad_log_rho, direction, radii, domain: str = "",
                         diverge_threshold: float = DRIFT_DIVERGE_THRESHOLD,
                         vanish_tol: float = DRIFT_VANISH_TOL) -> ErgodicityReport:
    """Radial derivative <e, grad log rho(r e)> along one unit direction.

    Values heading to -infinity support the random-walk drift condition
    ("consistent" when the last value is below `diverge_threshold` and the
    top half keeps decreasing); values shrinking towards zero mean the
    gradient vanishes at infinity, which breaks the Langevin necessary
    condition ("inconsistent").  Anything else is inconclusive.
    """
    e = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise DomainError("direction must be a unit vector")
    radii = [float(r) for r in radii]
    if any(r <= 0.0 for r in radii) or not _monotone_decreasing(radii[::-1], strict=True):
        raise DomainError("radii must be positive and strictly increasing")

    values, notes = [], ""
    for r in radii:
        try:
            grad = np.asarray(grad_log_rho(r * e), dtype=float)
        except Exception as exc:  # a probe failure is evidence, not a crash
            return ErgodicityReport("radial-drift", domain, {"radii": radii},
                                    values, INCONCLUSIVE,
                                    notes=f"gradient failed at r={r}: {exc}")
        if not np.all(np.isfinite(grad)):
            return ErgodicityReport("radial-drift", domain, {"radii": radii},
                                    values, INCONCLUSIVE,
                                    notes=f"gradient not finite at r={r}")
        values.append(float(np.dot(e, grad)))

    top = values[len(values) // 2:]
    if values[-1] < diverge_threshold and _monotone_decreasing(top, strict=True):
        verdict = CONSISTENT
    elif abs(values[-1]) < vanish_tol and _monotone_decreasing([abs(v) for v in top]):
        verdict = INCONSISTENT
        notes = "radial derivative vanishes at large radius"
    else:
        verdict = INCONCLUSIVE
    return ErgodicityReport("radial-drift", domain, {"radii": radii},
                            values, verdict, notes)


def exponential_moment_probe(dim: int, s_grid=None, radius_grid=None,
                             density=None, sample=None, domain: str = "",
                             nodes_per_axis: int = 801,
                             stabilize_tol: float = MOMENT_STABILIZE_TOL) -> ErgodicityReport:
    """Does integral exp(s|x|) rho(x) dx stay finite for some s > 0?

    Integrates (or averages, given a sample) exp(s|x|) over nested balls.
    Stabilisation of the partial integrals for some s is "consistent";
    growth without stabilisation for every probed s means the exponential
    moment diverges, which breaks the random-walk necessary condition.
    """
    if density is None and sample is None:
        raise DomainError("need a density evaluator or an i.i.d. sample")
    s_grid = list(DEFAULT_S_GRID) if s_grid is None else [float(s) for s in s_grid]
    radius_grid = (list(DEFAULT_RADIUS_GRID) if radius_grid is None
                   else [float(r) for r in radius_grid])
    if len(radius_grid) < 2:
        raise DomainError("need at least two radii to see a trend")

    if sample is not None:
        pts = np.asarray(sample, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != dim:
            raise DomainError("sample must have shape (n, dim)")
        norms = np.linalg.norm(pts, axis=1)

    def partial(s, radius):
        if sample is not None:
            inside = norms <= radius
            return float(np.mean(np.where(inside, np.exp(np.minimum(s * norms, 700.0)), 0.0)))
        grid = QuadratureGrid.uniform(-radius, radius, nodes_per_axis, dim=dim)

        def f(pts):
            r = np.linalg.norm(pts, axis=-1)
            vals = np.where(r <= radius,
                            np.exp(np.minimum(s * r, 700.0))
                            * np.atleast_1d(density(pts)), 0.0)
            return vals.astype(complex)

        return quad_integrate(f, grid, vectorized=True).real

    all_values, stabilized_any = [], False
    for s in s_grid:
        series = [partial(s, r) for r in radius_grid]
        all_values.extend(series)
        last, prev = series[-1], series[-2]
        if last <= 0.0:
            continue
        if (last - prev) <= stabilize_tol * last:
            stabilized_any = True
    verdict = CONSISTENT if stabilized_any else INCONSISTENT
    notes = "" if stabilized_any else "partial integrals grow for every probed s"
    return ErgodicityReport("exponential-moment", domain,
                            {"s": s_grid, "radii": radius_grid},
                            all_values, verdict, notes)


def mala_gradient_limit_probe(grad_log_rho, directions, radii, domain: str = "",
                              vanish_tol: float = GRADIENT_VANISH_TOL) -> ErgodicityReport:
    """Checks the Langevin necessary condition grad log rho(x) not -> 0.

    Reports |grad log rho(r e)| per radius per direction; "inconsistent" when
    the norms decay monotonically below `vanish_tol` at the largest radii in
    every probed direction.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    radii = [float(r) for r in radii]
    values, vanishing = [], []
    for e in directions:
        e = e / np.linalg.norm(e)
        norms = []
        for r in radii:
            try:
                grad = np.asarray(grad_log_rho(r * e), dtype=float)
            except Exception as exc:
                return ErgodicityReport("mala-gradient-limit", domain,
                                        {"radii": radii}, values, INCONCLUSIVE,
                                        notes=f"gradient failed at r={r}: {exc}")
            if not np.all(np.isfinite(grad)):
                return ErgodicityReport("mala-gradient-limit", domain,
                                        {"radii": radii}, values, INCONCLUSIVE,
                                        notes=f"gradient not finite at r={r}")
            norms.append(float(np.linalg.norm(grad)))
        values.extend(norms)
        top = norms[len(norms) // 2:]
        vanishing.append(top[-1] < vanish_tol and _monotone_decreasing(top))
    verdict = INCONSISTENT if all(vanishing) else CONSISTENT
    notes = "gradient norm vanishes in every probed direction" if all(vanishing) else ""
    return ErgodicityReport("mala-gradient-limit", domain, {"radii": radii},
                            values, verdict, notes)


@dataclass
class SmoothnessSummary:
    """Finite-difference evidence for the Langevin sufficient conditions."""

    lipschitz_estimate: float
    min_hessian_eigenvalue: float
    max_third_derivative: float
    probe_box: float
    large_radius: float


def _fd_hessian(f, x, h):
    d = len(x)
    hess = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            ei = np.zeros(d); ei[i] = h
            ej = np.zeros(d); ej[j] = h
            val = (f(x + ei + ej) - f(x + ei - ej)
                   - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h * h)
            hess[i, j] = hess[j, i] = val
    return hess


def mala_sufficient_probe(log_rho, dim: int, rng: RngStream,
                          box_radius: float = 10.0, probe_count: int = 32,
                          large_radius: float = None, grad_log_rho=None,
                          domain: str = "") -> ErgodicityReport:
    """Estimates the three Langevin sufficient-condition quantities.

    (a) a gradient Lipschitz constant from random pairs, (b) the smallest
    eigenvalue of -Hessian(log rho) at points beyond `large_radius`, and
    (c) the largest third directional derivative.  Finite-difference steps:
    Hessian 1e-4 (1 + |x|), third derivative 1e-3 (1 + |x|).  The verdict is
    never "inconsistent": sufficient conditions cannot refute ergodicity.
    """
    if large_radius is None:
        large_radius = 0.5 * box_radius
    if grad_log_rho is None:
        def grad_log_rho(x):
            h = 1e-6 * (1.0 + np.linalg.norm(x))
            out = np.empty(dim)
            for i in range(dim):
                e = np.zeros(dim); e[i] = h
                out[i] = (log_rho(x + e) - log_rho(x - e)) / (2.0 * h)
            return out

    points = rng.uniform(-box_radius, box_radius, (probe_count, dim))
    pairs = rng.uniform(-box_radius, box_radius, (probe_count, 2, dim))
    shell_dirs = rng.normal((probe_count, dim))
    shell_dirs /= np.linalg.norm(shell_dirs, axis=1, keepdims=True)
    shell_radii = rng.uniform(large_radius, box_radius, probe_count)
    shell = shell_radii[:, None] * shell_dirs
    third_dirs = rng.normal((probe_count, dim))
    third_dirs /= np.linalg.norm(third_dirs, axis=1, keepdims=True)

    try:
        lipschitz = 0.0
        for x, y in pairs:
            gap = np.linalg.norm(x - y)
            if gap < 1e-9:
                continue
            lipschitz = max(lipschitz, float(
                np.linalg.norm(np.asarray(grad_log_rho(x))
                               - np.asarray(grad_log_rho(y))) / gap))

        min_eig = math.inf
        for x in shell:
            h = 1e-4 * (1.0 + np.linalg.norm(x))
            eigs = np.linalg.eigvalsh(-_fd_hessian(log_rho, x, h))
            min_eig = min(min_eig, float(eigs[0]))

        third = 0.0
        for x, v in zip(points, third_dirs):
            h = 1e-3 * (1.0 + np.linalg.norm(x))
            val = (log_rho(x + 2 * h * v) - 2.0 * log_rho(x + h * v)
                   + 2.0 * log_rho(x - h * v) - log_rho(x - 2 * h * v)) / (2.0 * h ** 3)
            third = max(third, abs(float(val)))
    except (FloatingPointError, OverflowError, ValueError) as exc:
        return ErgodicityReport("mala-sufficient", domain, {}, [], INCONCLUSIVE,
                                notes=f"finite differences broke down: {exc}")

    values = [lipschitz, min_eig, third]
    if not all(np.isfinite(values)):
        return ErgodicityReport(
            "mala-sufficient", domain,
            {"box": [box_radius], "large_radius": [large_radius]},
            values, INCONCLUSIVE, notes="finite differences not finite")
    verdict = CONSISTENT if min_eig > 0.0 else INCONCLUSIVE
    notes = ("lipschitz,min_hessian_eig,third_derivative"
             + ("" if min_eig > 0.0 else "; strong convexity not observed"))
    return ErgodicityReport("mala-sufficient", domain,
                            {"box": [box_radius], "large_radius": [large_radius]},
                            values, verdict, notes)


def summarize_sufficient(report: ErgodicityReport,
                         box_radius: float, large_radius: float) -> SmoothnessSummary:
    lip, eig, third = report.values
    return SmoothnessSummary(lip, eig, third, box_radius, large_radius)


def acceptance_region_mass_probe(log_rho, proposal: Proposal, x_points,
                                 mc_draws: int, rng: RngStream,
                                 domain: str = "") -> ErgodicityReport:
    """Monte Carlo mass of the certain-acceptance region around far-out points.

    For each probe x, estimates P(rho(x + xi) >= rho(x)) with xi ~ q.  The
    caller inspects the trend; a liminf bounded away from zero supports the
    random-walk sufficient condition.  Only meaningful for random-walk kinds.
    """
    if not isinstance(proposal, RandomWalkGaussian):
        raise DomainError("acceptance-region probe needs a random-walk proposal")
    x_points = np.atleast_2d(np.asarray(x_points, dtype=float))
    masses = []
    for x in x_points:
        xi = proposal.draw_increments(mc_draws, rng)
        base = float(log_rho(x))
        hits = sum(1 for inc in xi if float(log_rho(x + inc)) >= base)
        masses.append(hits / mc_draws)
    radii = [float(np.linalg.norm(x)) for x in x_points]
    return ErgodicityReport("acceptance-region-mass", domain,
                            {"radii": radii, "draws": [mc_draws]},
                            masses, INCONCLUSIVE,
                            notes="masses reported for inspection; no verdict rule")
