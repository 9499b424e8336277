"""Domain types for the robust mean-variance engine.

Uncertainty sets, market scenarios, jump specifications, optimization
criteria and wealth dynamics.  Everything downstream (worst-case search,
closed-form strategies, PDE verification, Monte Carlo) consumes these
types.  All instances are immutable after construction and safe to share
across threads; arrays are stored read-only.

Conventions
-----------
* drifts are per unit time, volatilities per square-root unit time;
* a scenario is a pair (b, Sigma) of drift vector and covariance matrix,
  optionally extended with a jump specification;
* jump sizes Y live on (-1, inf) so a fully invested position cannot
  lose more than its value in a single jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import (
    AssumptionViolated,
    DimensionMismatch,
    InvalidBounds,
    NonBankruptcyViolated,
    NotPositiveDefinite,
)

CriterionKind = Literal["terminal_wealth", "log_return", "wealth_scaled"]

CRITERION_KINDS: tuple[str, ...] = ("terminal_wealth", "log_return", "wealth_scaled")

_MOMENT_TOL = 1e-12


def _ro(values, dtype=float) -> np.ndarray:
    """Copy into a read-only ndarray (dataclasses here are frozen)."""
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def cholesky_or_raise(mat: np.ndarray, what: str = "matrix") -> np.ndarray:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{what} is not positive definite") from exc


def build_covariance(vols: Sequence[float], corr: np.ndarray) -> np.ndarray:
    """Assemble Sigma_ij = sigma_i sigma_j rho_ij and verify it factorizes.

    `corr` must be symmetric with unit diagonal; positive definiteness of
    the result is equivalent to positive definiteness of `corr` and is
    checked by attempting a Cholesky factorization.
    """
    v = np.asarray(vols, dtype=float)
    c = np.asarray(corr, dtype=float)
    if v.ndim != 1 or c.shape != (v.size, v.size):
        raise DimensionMismatch(
            f"vols has length {v.size} but corr has shape {c.shape}"
        )
    if np.any(v <= 0):
        raise InvalidBounds("volatilities must be strictly positive")
    if not np.allclose(c, c.T, atol=1e-12):
        raise NotPositiveDefinite("correlation matrix is not symmetric")
    if not np.allclose(np.diag(c), 1.0, atol=1e-12):
        raise NotPositiveDefinite("correlation matrix must have unit diagonal")
    sigma = np.outer(v, v) * c
    cholesky_or_raise(sigma, "covariance built from vols/corr")
    return sigma


def corr_from_cov(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a covariance matrix into (vols, correlation matrix)."""
    v = np.sqrt(np.diag(cov))
    corr = cov / np.outer(v, v)
    return v, corr


# ---------------------------------------------------------------------------
# jump-size laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JumpSizeLaw:
    """One-dimensional jump-size distribution with support in (-1, inf).

    The analytic first and second moments are exposed because the closed
    forms depend on the law only through them, while the simulator draws
    exact samples.  Supported samplers:

    * ``two-point``: values (a, b) with P(a) = p;
    * ``uniform``: uniform on (lo, hi) with lo > -1;
    * ``shifted-lognormal``: exp(Z) - 1 with Z ~ N(m, s^2).
    """

    sampler: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.sampler == "two-point":
            a, b, p = self.params
            if not (0.0 <= p <= 1.0):
                raise InvalidBounds("two-point probability must lie in [0, 1]")
            if min(a, b) <= -1.0:
                raise InvalidBounds("jump sizes must stay above -1")
        elif self.sampler == "uniform":
            lo, hi = self.params
            if lo <= -1.0 or hi < lo:
                raise InvalidBounds("uniform jump support must be an interval in (-1, inf)")
        elif self.sampler == "shifted-lognormal":
            _, s = self.params
            if s < 0:
                raise InvalidBounds("lognormal scale must be nonnegative")
        else:
            raise InvalidBounds(f"unknown jump-size sampler {self.sampler!r}")

    # --- constructors -----------------------------------------------------

    @classmethod
    def two_point(cls, a: float, b: float, p: float) -> "JumpSizeLaw":
        return cls("two-point", (float(a), float(b), float(p)))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "JumpSizeLaw":
        return cls("uniform", (float(lo), float(hi)))

    @classmethod
    def shifted_lognormal(cls, m: float, s: float) -> "JumpSizeLaw":
        return cls("shifted-lognormal", (float(m), float(s)))

    @classmethod
    def two_point_from_moments(cls, mean: float, second_moment: float) -> "JumpSizeLaw":
        """Symmetric-probability two-point law matching both moments exactly."""
        var = second_moment - mean * mean
        if var < -_MOMENT_TOL:
            raise InvalidBounds("second moment below squared mean")
        s = math.sqrt(max(var, 0.0))
        return cls.two_point(mean - s, mean + s, 0.5)

    # --- analytic moments ---------------------------------------------------

    @property
    def mean(self) -> float:
        if self.sampler == "two-point":
            a, b, p = self.params
            return p * a + (1.0 - p) * b
        if self.sampler == "uniform":
            lo, hi = self.params
            return 0.5 * (lo + hi)
        m, s = self.params
        return math.exp(m + 0.5 * s * s) - 1.0

    @property
    def second_moment(self) -> float:
        if self.sampler == "two-point":
            a, b, p = self.params
            return p * a * a + (1.0 - p) * b * b
        if self.sampler == "uniform":
            lo, hi = self.params
            return (lo * lo + lo * hi + hi * hi) / 3.0
        m, s = self.params
        return math.exp(2.0 * m + 2.0 * s * s) - 2.0 * math.exp(m + 0.5 * s * s) + 1.0

    def check_stated_moments(self, mean: float, second_moment: float) -> None:
        """Reject stated moments that disagree with the sampler's analytic ones."""
        if abs(self.mean - mean) > _MOMENT_TOL or abs(self.second_moment - second_moment) > _MOMENT_TOL:
            raise InvalidBounds(
                "stated jump moments do not match the sampler: "
                f"analytic ({self.mean!r}, {self.second_moment!r}) vs stated ({mean!r}, {second_moment!r})"
            )

    # --- sampling -----------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sampler == "two-point":
            a, b, p = self.params
            return np.where(rng.random(size) < p, a, b)
        if self.sampler == "uniform":
            lo, hi = self.params
            return rng.uniform(lo, hi, size)
        m, s = self.params
        return np.exp(m + s * rng.standard_normal(size)) - 1.0

    def two_point_surrogate(self) -> tuple[tuple[float, float], ...]:
        """(value, probability) pairs of a two-point law with the same moments.

        Used where a finite atom list standing in for the law must preserve
        the first two moments exactly (e.g. inside the jump generator).
        """
        m = self.mean
        s = math.sqrt(max(self.second_moment - m * m, 0.0))
        if s == 0.0:
            return ((m, 1.0),)
        return ((m - s, 0.5), (m + s, 0.5))


# ---------------------------------------------------------------------------
# jump specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompoundPoissonJumps:
    """Multivariate compound Poisson jumps with per-type size laws.

    Stocks load on k independent Poisson streams through the
    ``loadings`` matrix (n x k, entries in [0, 1]); stream l fires with
    intensity ``intensity[l]`` and multiplies each loading by an
    independent draw from ``size_laws[l]``.
    """

    loadings: np.ndarray
    intensity: np.ndarray
    size_laws: tuple[JumpSizeLaw, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "loadings", _ro(self.loadings))
        object.__setattr__(self, "intensity", _ro(self.intensity))
        J, mu = self.loadings, self.intensity
        if J.ndim != 2:
            raise DimensionMismatch("loadings must be an n x k matrix")
        k = J.shape[1]
        if mu.shape != (k,) or len(self.size_laws) != k:
            raise DimensionMismatch("intensity and size_laws must have one entry per jump type")
        if np.any(mu <= 0):
            raise InvalidBounds("jump intensities must be strictly positive")
        if np.any(J < 0) or np.any(J > 1):
            raise InvalidBounds("jump loadings must lie in [0, 1]")
        if np.linalg.matrix_rank(J) != k:
            raise InvalidBounds("jump loading matrix must have full column rank")
        for law in self.size_laws:
            if law.second_moment < law.mean**2 - _MOMENT_TOL:
                raise InvalidBounds("jump-size law with inconsistent moments")

    @property
    def n_assets(self) -> int:
        return self.loadings.shape[0]

    @property
    def n_types(self) -> int:
        return self.loadings.shape[1]

    def mean_sizes(self) -> np.ndarray:
        return np.array([law.mean for law in self.size_laws])

    def second_moments(self) -> np.ndarray:
        return np.array([law.second_moment for law in self.size_laws])

    def drift_adjustment(self) -> np.ndarray:
        """J E[Y] mu, the expected relative jump flow per asset per unit time."""
        return self.loadings @ (self.intensity * self.mean_sizes())

    def covariance_adjustment(self) -> np.ndarray:
        """sum_l mu_l E[Y_l^2] J_l J_l^T, positive semidefinite by construction."""
        w = self.intensity * self.second_moments()
        return (self.loadings * w) @ self.loadings.T

    def compensation_within_unit(self) -> bool:
        """Whether sum_l |mu_l E[Y_l] J_il| < 1 for every asset i.

        The drift compensation applied for the jump flow is only a small
        correction when this holds; configurations violating it are
        rejected by `validate_compensation`.
        """
        per_asset = np.abs(self.loadings) @ np.abs(self.intensity * self.mean_sizes())
        return bool(np.all(per_asset < 1.0))

    def validate_compensation(self) -> None:
        if not self.compensation_within_unit():
            raise InvalidBounds(
                "expected jump flow |mu E[Y]| J exceeds 1 for some asset; "
                "reduce intensities or mean jump sizes"
            )


@dataclass(frozen=True)
class DiscreteLevyJumps:
    """Finite atom list {(z_j, f_j)} standing in for a Levy measure.

    Continuous measures must be pre-discretized; the closed forms depend on
    the measure only through sum f_j z_j and sum f_j z_j z_j^T.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", _ro(np.atleast_2d(self.atoms)))
        object.__setattr__(self, "weights", _ro(self.weights))
        z, f = self.atoms, self.weights
        if f.ndim != 1 or z.shape[0] != f.size:
            raise DimensionMismatch("need one weight per atom")
        if not np.all(np.isfinite(z)) or not np.all(np.isfinite(f)):
            raise InvalidBounds("atoms and weights must be finite")
        if np.any(f <= 0):
            raise InvalidBounds("atom weights must be strictly positive")

    @property
    def n_assets(self) -> int:
        return self.atoms.shape[1]

    def drift_adjustment(self) -> np.ndarray:
        return self.weights @ self.atoms

    def covariance_adjustment(self) -> np.ndarray:
        return (self.atoms.T * self.weights) @ self.atoms


JumpSpec = CompoundPoissonJumps | DiscreteLevyJumps


@dataclass(frozen=True)
class JumpAtom:
    """One atom of the (possibly surrogate) jump measure.

    ``vec`` is the per-asset relative jump; ``small`` records whether the
    underlying point z satisfies ||z|| < 1, which decides whether the
    generator compensates the atom's drift.
    """

    vec: np.ndarray
    weight: float
    small: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "vec", _ro(self.vec))


def atom_table(jump: JumpSpec | None) -> tuple[JumpAtom, ...]:
    """Finite atom representation of a jump spec.

    Compound Poisson types are replaced by their moment-preserving
    two-point surrogates: solved strategies depend on the size laws only
    through (E[Y], E[Y^2]), which the surrogate reproduces exactly.
    """
    if jump is None:
        return ()
    out: list[JumpAtom] = []
    if isinstance(jump, CompoundPoissonJumps):
        for l, law in enumerate(jump.size_laws):
            for y, p in law.two_point_surrogate():
                out.append(
                    JumpAtom(
                        vec=y * jump.loadings[:, l],
                        weight=float(jump.intensity[l] * p),
                        small=abs(y) < 1.0,
                    )
                )
    else:
        norms = np.linalg.norm(jump.atoms, axis=1)
        for z, f, nz in zip(jump.atoms, jump.weights, norms):
            out.append(JumpAtom(vec=z, weight=float(f), small=bool(nz < 1.0)))
    return tuple(out)


def atoms_near_unit_sphere(jump: JumpSpec | None, tol: float = 1e-9) -> list[int]:
    """Indices of atoms within `tol` of the small/large jump cutoff."""
    if jump is None:
        return []
    if isinstance(jump, CompoundPoissonJumps):
        norms = []
        for law in jump.size_laws:
            norms.extend(abs(y) for y, _ in law.two_point_surrogate())
    else:
        norms = list(np.linalg.norm(jump.atoms, axis=1))
    return [i for i, nz in enumerate(norms) if abs(nz - 1.0) < tol]


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """One market scenario theta = (b, Sigma [, jumps]).

    The covariance must pass a Cholesky factorization; jump dimensions
    must match the asset count.
    """

    drift: np.ndarray
    cov: np.ndarray
    jump: JumpSpec | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "drift", _ro(self.drift))
        object.__setattr__(self, "cov", _ro(self.cov))
        b, s = self.drift, self.cov
        if b.ndim != 1 or s.shape != (b.size, b.size):
            raise DimensionMismatch(f"drift has length {b.size} but cov has shape {s.shape}")
        if not np.allclose(s, s.T, atol=1e-10):
            raise NotPositiveDefinite("covariance is not symmetric")
        cholesky_or_raise(s, "scenario covariance")
        if self.jump is not None and self.jump.n_assets != b.size:
            raise DimensionMismatch("jump spec asset count differs from drift length")

    @property
    def n(self) -> int:
        return self.drift.size

    @property
    def vols(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    @property
    def corr(self) -> np.ndarray:
        return corr_from_cov(self.cov)[1]

    def chol(self) -> np.ndarray:
        return np.linalg.cholesky(self.cov)

    def with_jump(self, jump: JumpSpec | None) -> "Scenario":
        return Scenario(self.drift, self.cov, jump)


def adjusted_moments(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Jump-adjusted drift and second-moment matrix (b_F, Sigma_F).

    Without jumps this returns (b, Sigma) unchanged; the jump adjustment
    adds the expected jump flow to the drift and a positive semidefinite
    term to the covariance, so positive definiteness is preserved.
    """
    if scenario.jump is None:
        return np.array(scenario.drift), np.array(scenario.cov)
    b_f = scenario.drift + scenario.jump.drift_adjustment()
    sigma_f = scenario.cov + scenario.jump.covariance_adjustment()
    return b_f, sigma_f


# ---------------------------------------------------------------------------
# jump ambiguity bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompoundPoissonBounds:
    """Boxes for the adversary's jump choice: intensity and the first two
    size moments per jump type, with fixed loadings."""

    loadings: np.ndarray
    intensity_lo: np.ndarray
    intensity_hi: np.ndarray
    mean_lo: np.ndarray
    mean_hi: np.ndarray
    second_lo: np.ndarray
    second_hi: np.ndarray

    def __post_init__(self) -> None:
        for name in ("loadings", "intensity_lo", "intensity_hi", "mean_lo", "mean_hi", "second_lo", "second_hi"):
            object.__setattr__(self, name, _ro(getattr(self, name)))
        k = self.loadings.shape[1]
        for lo, hi, what in (
            (self.intensity_lo, self.intensity_hi, "intensity"),
            (self.mean_lo, self.mean_hi, "mean"),
            (self.second_lo, self.second_hi, "second moment"),
        ):
            if lo.shape != (k,) or hi.shape != (k,):
                raise DimensionMismatch(f"jump {what} bounds need one entry per type")
            if np.any(lo > hi):
                raise InvalidBounds(f"jump {what} bounds are unordered")
        if np.any(self.intensity_lo <= 0):
            raise InvalidBounds("jump intensities must stay strictly positive")

    def spec_at(self, intensity, means, seconds) -> CompoundPoissonJumps:
        laws = tuple(
            JumpSizeLaw.two_point_from_moments(m, s) for m, s in zip(means, seconds)
        )
        return CompoundPoissonJumps(self.loadings, np.asarray(intensity, dtype=float), laws)


@dataclass(frozen=True)
class DiscreteLevyBounds:
    """Weight intervals per atom of a discrete Levy measure."""

    atoms: np.ndarray
    weight_lo: np.ndarray
    weight_hi: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", _ro(np.atleast_2d(self.atoms)))
        object.__setattr__(self, "weight_lo", _ro(self.weight_lo))
        object.__setattr__(self, "weight_hi", _ro(self.weight_hi))
        m = self.atoms.shape[0]
        if self.weight_lo.shape != (m,) or self.weight_hi.shape != (m,):
            raise DimensionMismatch("need one weight interval per atom")
        if np.any(self.weight_lo > self.weight_hi) or np.any(self.weight_lo <= 0):
            raise InvalidBounds("atom weight intervals must be ordered and positive")

    def spec_at(self, weights) -> DiscreteLevyJumps:
        return DiscreteLevyJumps(self.atoms, np.asarray(weights, dtype=float))


JumpBounds = CompoundPoissonBounds | DiscreteLevyBounds


# ---------------------------------------------------------------------------
# uncertainty sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UncertaintySet:
    """Product uncertainty set: a drift box times a covariance family.

    For two assets the covariance family is parametrized by marginal
    volatility boxes and a correlation interval.  For n > 2 it is the
    convex hull of user-supplied positive definite correlation matrices,
    sampled by convex combination.  Jump ambiguity enters through an
    optional box on intensities and size moments.
    """

    drift_lo: np.ndarray
    drift_hi: np.ndarray
    vol_lo: np.ndarray
    vol_hi: np.ndarray
    rho_lo: float | None = None
    rho_hi: float | None = None
    corr_vertices: tuple[np.ndarray, ...] | None = None
    jump_bounds: JumpBounds | None = None

    def __post_init__(self) -> None:
        for name in ("drift_lo", "drift_hi", "vol_lo", "vol_hi"):
            object.__setattr__(self, name, _ro(getattr(self, name)))
        n = self.drift_lo.size
        for name in ("drift_hi", "vol_lo", "vol_hi"):
            if getattr(self, name).shape != (n,):
                raise DimensionMismatch("bound vectors must share one length")
        if np.any(self.drift_lo > self.drift_hi) or np.any(self.vol_lo > self.vol_hi):
            raise InvalidBounds("lower bounds must not exceed upper bounds")
        if np.any(self.vol_lo <= 0):
            raise InvalidBounds("volatility lower bounds must be strictly positive")
        if n == 1:
            if self.rho_lo is not None or self.corr_vertices is not None:
                raise InvalidBounds("single-asset sets carry no correlation ambiguity")
        elif n == 2:
            if self.corr_vertices is not None:
                raise InvalidBounds("two-asset sets use a correlation interval, not a hull")
            if self.rho_lo is None or self.rho_hi is None:
                raise InvalidBounds("two-asset sets need a correlation interval")
            if not (-1.0 < self.rho_lo <= self.rho_hi < 1.0):
                raise InvalidBounds("correlation interval must satisfy -1 < lo <= hi < 1")
        else:
            if self.corr_vertices is None or len(self.corr_vertices) == 0:
                raise InvalidBounds("sets with n > 2 need correlation hull vertices")
            if self.rho_lo is not None or self.rho_hi is not None:
                raise InvalidBounds("hull sets do not take a correlation interval")
            verts = tuple(_ro(v) for v in self.corr_vertices)
            object.__setattr__(self, "corr_vertices", verts)
            for v in verts:
                if v.shape != (n, n):
                    raise DimensionMismatch("correlation vertices must be n x n")
                build_covariance(np.ones(n), v)
        if self.jump_bounds is not None and isinstance(self.jump_bounds, CompoundPoissonBounds):
            if self.jump_bounds.loadings.shape[0] != n:
                raise DimensionMismatch("jump bounds loadings row count must match assets")
        # every corner must factor: with |rho| < 1 (or PD vertices) any
        # vol corner yields a PD covariance, so only the hull needs work
        # and the loop above already did it.

    # --- constructors -----------------------------------------------------

    @classmethod
    def single_asset(cls, drift: tuple[float, float], vol: tuple[float, float],
                     jump_bounds: JumpBounds | None = None) -> "UncertaintySet":
        return cls([drift[0]], [drift[1]], [vol[0]], [vol[1]], jump_bounds=jump_bounds)

    @classmethod
    def two_asset(
        cls,
        drift1: tuple[float, float],
        drift2: tuple[float, float],
        vol1: tuple[float, float],
        vol2: tuple[float, float],
        rho: tuple[float, float],
        jump_bounds: JumpBounds | None = None,
        require_ordering: bool = True,
    ) -> "UncertaintySet":
        """Two-asset product set for the case-split worst-case solver.

        By construction asset 1 is the one with the (weakly) better drift
        and tighter volatility: the solver requires drift2 <= drift1 and
        vol2 >= vol1 bound-by-bound, plus nonnegative drift lower bounds.
        Pass ``require_ordering=False`` only for sets meant exclusively
        for the numeric search.
        """
        out = cls(
            [drift1[0], drift2[0]],
            [drift1[1], drift2[1]],
            [vol1[0], vol2[0]],
            [vol1[1], vol2[1]],
            rho_lo=float(rho[0]),
            rho_hi=float(rho[1]),
            jump_bounds=jump_bounds,
        )
        if require_ordering:
            out.check_two_asset_ordering()
        return out

    @classmethod
    def hull(cls, drift_lo, drift_hi, vol_lo, vol_hi, corr_vertices,
             jump_bounds: JumpBounds | None = None) -> "UncertaintySet":
        return cls(drift_lo, drift_hi, vol_lo, vol_hi,
                   corr_vertices=tuple(corr_vertices), jump_bounds=jump_bounds)

    @classmethod
    def point(cls, scenario: Scenario) -> "UncertaintySet":
        """Singleton set containing exactly one diffusion scenario."""
        v, corr = corr_from_cov(scenario.cov)
        n = scenario.n
        if n == 1:
            return cls(scenario.drift, scenario.drift, v, v)
        if n == 2:
            rho = float(corr[0, 1])
            return cls(scenario.drift, scenario.drift, v, v, rho_lo=rho, rho_hi=rho)
        return cls(scenario.drift, scenario.drift, v, v, corr_vertices=(corr,))

    # --- structure ----------------------------------------------------------

    @property
    def n(self) -> int:
        return self.drift_lo.size

    @property
    def is_singleton(self) -> bool:
        point = bool(
            np.all(self.drift_lo == self.drift_hi) and np.all(self.vol_lo == self.vol_hi)
        )
        if self.n == 2:
            point = point and self.rho_lo == self.rho_hi
        elif self.n > 2:
            point = point and len(self.corr_vertices) == 1
        if self.jump_bounds is not None:
            jb = self.jump_bounds
            if isinstance(jb, CompoundPoissonBounds):
                point = point and bool(
                    np.all(jb.intensity_lo == jb.intensity_hi)
                    and np.all(jb.mean_lo == jb.mean_hi)
                    and np.all(jb.second_lo == jb.second_hi)
                )
            else:
                point = point and bool(np.all(jb.weight_lo == jb.weight_hi))
        return point

    def check_two_asset_ordering(self) -> None:
        """Standing assumptions of the two-asset case solver.

        Asset ordering (drift2 bounds below drift1's, vol2 bounds above
        vol1's) plus nonnegative drift lower bounds and positive
        volatility lower bounds.  Raises AssumptionViolated naming the
        first inequality that fails.
        """
        if self.n != 2:
            raise AssumptionViolated("the case solver handles exactly two assets")
        b_lo, b_hi = self.drift_lo, self.drift_hi
        v_lo, v_hi = self.vol_lo, self.vol_hi
        checks = (
            (b_hi[1] <= b_hi[0], f"drift_hi[1] <= drift_hi[0] (got {b_hi[1]} > {b_hi[0]})"),
            (b_lo[1] <= b_lo[0], f"drift_lo[1] <= drift_lo[0] (got {b_lo[1]} > {b_lo[0]})"),
            (v_hi[1] >= v_hi[0], f"vol_hi[1] >= vol_hi[0] (got {v_hi[1]} < {v_hi[0]})"),
            (v_lo[1] >= v_lo[0], f"vol_lo[1] >= vol_lo[0] (got {v_lo[1]} < {v_lo[0]})"),
            (np.all(b_lo >= 0), f"drift_lo >= 0 elementwise (got {b_lo.tolist()})"),
        )
        for ok, msg in checks:
            if not ok:
                raise AssumptionViolated(f"two-asset ordering assumption violated: requires {msg}")

    def two_asset_ordering_holds(self) -> bool:
        try:
            self.check_two_asset_ordering()
        except AssumptionViolated:
            return False
        return True

    def corr_matrix_from_weights(self, weights: np.ndarray) -> np.ndarray:
        w = np.asarray(weights, dtype=float)
        return sum(wi * vi for wi, vi in zip(w, self.corr_vertices))

    def contains(self, scenario: Scenario, tol: float = 1e-9) -> bool:
        """Box containment of drift and vols plus correlation containment."""
        if scenario.n != self.n:
            return False
        b, v = scenario.drift, scenario.vols
        if np.any(b < self.drift_lo - tol) or np.any(b > self.drift_hi + tol):
            return False
        if np.any(v < self.vol_lo - tol) or np.any(v > self.vol_hi + tol):
            return False
        if self.n == 1:
            return True
        if self.n == 2:
            rho = scenario.cov[0, 1] / (v[0] * v[1])
            return bool(self.rho_lo - tol <= rho <= self.rho_hi + tol)
        return self._hull_contains(scenario.corr, tol)

    def _hull_contains(self, corr: np.ndarray, tol: float) -> bool:
        # feasibility LP: corr = sum w_i V_i with w >= 0, sum w = 1
        from scipy.optimize import linprog

        iu = np.triu_indices(self.n)
        a_eq = np.stack([v[iu] for v in self.corr_vertices], axis=1)
        a_eq = np.vstack([a_eq, np.ones((1, len(self.corr_vertices)))])
        b_eq = np.concatenate([corr[iu], [1.0]])
        res = linprog(
            c=np.zeros(len(self.corr_vertices)),
            A_eq=a_eq,
            b_eq=b_eq,
            bounds=[(0, None)] * len(self.corr_vertices),
            method="highs",
        )
        if not res.success:
            return False
        return bool(np.max(np.abs(a_eq @ res.x - b_eq)) <= max(tol, 1e-8))


# ---------------------------------------------------------------------------
# criteria and wealth dynamics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Criterion:
    """Which mean-variance problem is being solved.

    ``lam`` is the risk-aversion level; for kind ``wealth_scaled`` the
    effective aversion is lam / x.  The state for ``log_return`` is the
    log of wealth, for the other kinds wealth itself.
    """

    kind: str
    lam: float
    horizon: float
    t0: float = 0.0
    x0: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in CRITERION_KINDS:
            raise InvalidBounds(f"unknown criterion kind {self.kind!r}")
        if self.lam <= 0:
            raise InvalidBounds("risk aversion must be strictly positive")
        if self.horizon <= self.t0:
            raise InvalidBounds("horizon must exceed the initial time")
        if self.kind == "wealth_scaled" and self.x0 <= 0:
            raise InvalidBounds("wealth-scaled aversion divides by wealth: x0 must be positive")

    @property
    def span(self) -> float:
        return self.horizon - self.t0

    def risk_aversion_at(self, x: float) -> float:
        if self.kind == "wealth_scaled":
            return self.lam / x
        return self.lam


@dataclass(frozen=True)
class WealthDynamics:
    """Drift, diffusion and jump maps of the controlled state.

    * terminal_wealth / wealth_scaled: state is wealth, control alpha is
      money in stocks; drift alpha.b, jump alpha.v per relative jump v.
    * log_return: state is log wealth, control is the fraction of wealth
      in stocks; drift alpha.b - alpha.Sigma.alpha / 2, jump log(1 + alpha.v).
    """

    kind: str

    @classmethod
    def for_criterion(cls, criterion: Criterion) -> "WealthDynamics":
        return cls(criterion.kind)

    @property
    def state_is_log(self) -> bool:
        return self.kind == "log_return"

    def drift(self, alpha: np.ndarray, scenario: Scenario) -> float:
        base = float(alpha @ scenario.drift)
        if self.state_is_log:
            base -= 0.5 * float(alpha @ scenario.cov @ alpha)
        return base

    def diffusion_sq(self, alpha: np.ndarray, scenario: Scenario) -> float:
        return float(alpha @ scenario.cov @ alpha)

    def jump_size(self, x: float, alpha: np.ndarray, vec: np.ndarray) -> float:
        move = float(alpha @ vec)
        if self.state_is_log:
            if move <= -1.0:
                raise NonBankruptcyViolated(
                    f"log-state jump 1 + alpha.v = {1.0 + move} is not positive"
                )
            return math.log1p(move)
        return move

    def levy_drift(self, x: float, alpha: np.ndarray, scenario: Scenario) -> float:
        """Drift of the compensated-small-jump representation: the raw
        drift plus the expected flow of atoms with ||z|| < 1."""
        total = self.drift(alpha, scenario)
        for atom in atom_table(scenario.jump):
            if atom.small:
                total += atom.weight * self.jump_size(x, alpha, atom.vec)
        return total


def nonbankruptcy_intervals(alpha: np.ndarray, jump: CompoundPoissonJumps) -> np.ndarray:
    """Per-type exposures alpha.J_l; admissible strategies keep each in [0, 1]."""
    return np.asarray(alpha, dtype=float) @ jump.loadings


def nonbankruptcy_violations(alpha: np.ndarray, jump: CompoundPoissonJumps,
                             tol: float = 1e-12) -> list[int]:
    expo = nonbankruptcy_intervals(alpha, jump)
    return [int(l) for l, e in enumerate(expo) if e < -tol or e > 1.0 + tol]
