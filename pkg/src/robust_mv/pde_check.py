"""Numerical verification of the equilibrium PDE structure.

The solved strategies are certified by substitution: the generator of
the controlled state applied to the solution components must vanish at
the equilibrium pair, and the saddle objective

    F(alpha, theta) = (generator of V) - lam * (quadratic variation of g)

(equivalently, in objective form, A f + 2 lam g A g, which agrees with
the value form identically for constant aversion) must be nonpositive
in alpha at the worst case and nonnegative in theta at the equilibrium
strategy, vanishing at the pair.  `residual_grid` checks the equation
systems on a lattice; `saddle_check` samples the two inequalities.

Derivatives use the solutions' analytic partials when present and
fourth-order central differences otherwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DerivativeFailure
from .fields import ScalarField
from .model import (
    Criterion,
    Scenario,
    UncertaintySet,
    WealthDynamics,
    atom_table,
)
from .worst_case import sample_scenarios


@dataclass(frozen=True)
class FdSteps:
    """Finite-difference stencil widths: x step 1e-5 (1 + |x|), t step
    1e-6 times the horizon length.  Fourth-order central stencils."""

    x_rel: float = 1e-5
    t_rel: float = 1e-6


def _fd4_first(f: Callable[[float], float], z: float, h: float) -> float:
    return (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12.0 * h)


def _fd4_second(f: Callable[[float], float], z: float, h: float) -> float:
    return (
        -f(z + 2 * h) + 16 * f(z + h) - 30 * f(z) + 16 * f(z - h) - f(z - 2 * h)
    ) / (12.0 * h * h)


class OperatorSet:
    """Generator, quadratic-variation and jump operators for one dynamics.

    All operators evaluate scalar fields at a point (t, x) for a given
    (alpha, theta).  The jump integral runs over the finite atom table
    of the scenario (compound Poisson types are represented by their
    moment-preserving two-point surrogates).
    """

    def __init__(self, dynamics: WealthDynamics, span: float,
                 fd: FdSteps = FdSteps(), use_analytic: bool = True):
        self.dynamics = dynamics
        self.span = span
        self.fd = fd
        self.use_analytic = use_analytic

    # --- derivatives --------------------------------------------------------

    def partials(self, field: ScalarField, t: float, x: float) -> tuple[float, float, float]:
        if self.use_analytic and field.has_analytic:
            return field.dt(t, x), field.dx(t, x), field.dxx(t, x)
        h_x = self.fd.x_rel * (1.0 + abs(x))
        h_t = self.fd.t_rel * self.span
        if x + 2 * h_x == x or t + 2 * h_t == t:
            raise DerivativeFailure(f"stencil width underflowed at (t={t}, x={x})")
        ft = _fd4_first(lambda s: field.value(s, x), t, h_t)
        fx = _fd4_first(lambda z: field.value(t, z), x, h_x)
        fxx = _fd4_second(lambda z: field.value(t, z), x, h_x)
        return ft, fx, fxx

    # --- operators ------------------------------------------------------------

    def jump_integral(self, field: ScalarField, alpha: np.ndarray, theta: Scenario,
                      t: float, x: float, fx: float | None = None) -> float:
        """Sum over atoms of psi(t, x + zeta) - psi(t, x) - zeta 1{small} psi_x."""
        atoms = atom_table(theta.jump)
        if not atoms:
            return 0.0
        if fx is None:
            fx = self.partials(field, t, x)[1]
        base = field.value(t, x)
        total = 0.0
        for atom in atoms:
            zeta = self.dynamics.jump_size(x, alpha, atom.vec)
            term = field.value(t, x + zeta) - base
            if atom.small:
                term -= zeta * fx
            total += atom.weight * term
        return total

    def generator(self, field: ScalarField, alpha: np.ndarray, theta: Scenario,
                  t: float, x: float) -> float:
        """Full generator of the controlled state: diffusion part with the
        compensated-small-jump drift, plus the jump integral.  Reduces to
        psi_t + eta psi_x + ||xi||^2 psi_xx / 2 without jumps."""
        ft, fx, fxx = self.partials(field, t, x)
        eta = self.dynamics.levy_drift(x, alpha, theta)
        val = ft + eta * fx + 0.5 * self.dynamics.diffusion_sq(alpha, theta) * fxx
        return val + self.jump_integral(field, alpha, theta, t, x, fx=fx)

    def quadratic_variation(self, field: ScalarField, alpha: np.ndarray, theta: Scenario,
                            t: float, x: float) -> float:
        """Carried quadratic variation of the field: ||xi||^2 psi_x^2 plus
        the jump term sum_atoms w (psi(t, x + zeta) - psi(t, x))^2.

        The jump term is what makes the value-form and objective-form
        saddle objectives agree identically under jump dynamics.
        """
        fx = self.partials(field, t, x)[1]
        total = self.dynamics.diffusion_sq(alpha, theta) * fx * fx
        atoms = atom_table(theta.jump)
        if atoms:
            base = field.value(t, x)
            for atom in atoms:
                zeta = self.dynamics.jump_size(x, alpha, atom.vec)
                total += atom.weight * (field.value(t, x + zeta) - base) ** 2
        return total


def jump_operator_value(field: ScalarField, alpha: np.ndarray, theta: Scenario,
                        t: float, x: float, dynamics: WealthDynamics,
                        span: float = 1.0) -> float:
    """Standalone jump-integral evaluation (linear in the field)."""
    ops = OperatorSet(dynamics, span)
    return ops.jump_integral(field, np.asarray(alpha, dtype=float), theta, t, x)


# ---------------------------------------------------------------------------
# solution adapters
# ---------------------------------------------------------------------------


class _SolutionView:
    """Light delegate allowing probe tests to swap individual fields."""

    def __init__(self, base, v_field=None, g_field=None):
        self.kind = base.kind
        self.criterion = base.criterion
        self.worst_case = base.worst_case
        self.premium = base.premium
        self.alpha_hat = base.alpha_hat
        self.V_field = v_field if v_field is not None else base.V_field
        self.g_field = g_field if g_field is not None else base.g_field
        self.f_field = base.f_field


def with_scaled_value(sol, factor: float) -> _SolutionView:
    """The same solution with V (and its partials) multiplied by a constant;
    a falsification probe for the residual and saddle checks."""
    return _SolutionView(sol, v_field=sol.V_field.scaled(factor))


def saddle_objective(sol, ops: OperatorSet, alpha: np.ndarray, theta: Scenario,
                     t: float, x: float) -> float:
    """F(alpha, theta) at (t, x) for the solution's criterion.

    Constant aversion: generator of V minus lam times the quadratic
    variation of g.  Wealth-scaled aversion: objective form
    A f^x + 2 lam(x) g A g with the aversion argument frozen at x.
    """
    lam = sol.criterion.lam
    if sol.kind == "wealth_scaled":
        f_field = sol.f_field(y=x)
        g_field = sol.g_field
        af = ops.generator(f_field, alpha, theta, t, x)
        ag = ops.generator(g_field, alpha, theta, t, x)
        return af + 2.0 * (lam / x) * g_field.value(t, x) * ag
    av = ops.generator(sol.V_field, alpha, theta, t, x)
    hg = ops.quadratic_variation(sol.g_field, alpha, theta, t, x)
    return av - lam * hg


# ---------------------------------------------------------------------------
# residual grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualRow:
    t: float
    x: float
    eq_id: str
    residual: float


@dataclass(frozen=True)
class ResidualTable:
    rows: tuple[ResidualRow, ...]

    @property
    def max_abs(self) -> float:
        return max((abs(r.residual) for r in self.rows), default=0.0)

    def max_by_equation(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for r in self.rows:
            out[r.eq_id] = max(out.get(r.eq_id, 0.0), abs(r.residual))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "eq_id", "residual"])
            for r in self.rows:
                writer.writerow([repr(float(r.t)), repr(float(r.x)), r.eq_id,
                                 repr(float(r.residual))])


def default_grid(criterion: Criterion, nt: int = 10, nx: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Interior (t, x) lattice: t away from both endpoints, x around x0
    (strictly positive for wealth-scaled aversion)."""
    t_nodes = criterion.t0 + criterion.span * np.linspace(0.05, 0.95, nt)
    if criterion.kind == "wealth_scaled":
        x_nodes = criterion.x0 * np.linspace(0.5, 2.0, nx)
    else:
        scale = 1.0 + abs(criterion.x0)
        x_nodes = criterion.x0 + scale * np.linspace(-0.5, 1.0, nx)
    return t_nodes, x_nodes


def residual_grid(sol, t_nodes: Sequence[float] | None = None,
                  x_nodes: Sequence[float] | None = None,
                  nt: int = 10, nx: int = 10,
                  use_analytic: bool = True) -> ResidualTable:
    """Evaluate every equation of the applicable system at the equilibrium
    pair on a (t, x) lattice.

    Constant aversion checks both the value-form system (value equation
    plus the conditional-mean equation) and the objective-form system
    (objective equation, mean equation and their combination).  The
    wealth-scaled kind checks the objective-form system only, which is
    the one its solution solves.
    """
    criterion = sol.criterion
    if t_nodes is None or x_nodes is None:
        t_default, x_default = default_grid(criterion, nt, nx)
        t_nodes = t_default if t_nodes is None else t_nodes
        x_nodes = x_default if x_nodes is None else x_nodes
    dynamics = WealthDynamics.for_criterion(criterion)
    ops = OperatorSet(dynamics, criterion.span, use_analytic=use_analytic)
    theta = sol.worst_case.scenario
    lam = criterion.lam

    rows: list[ResidualRow] = []
    for t in np.asarray(t_nodes, dtype=float):
        for x in np.asarray(x_nodes, dtype=float):
            alpha = np.atleast_1d(sol.alpha_hat(t, x))
            g_field = sol.g_field
            ag = ops.generator(g_field, alpha, theta, t, x)
            rows.append(ResidualRow(t, x, "mean_pde", ag))
            if sol.kind == "wealth_scaled":
                f_field = sol.f_field(y=x)
                af = ops.generator(f_field, alpha, theta, t, x)
                rows.append(ResidualRow(t, x, "objective_pde", af))
                rows.append(ResidualRow(
                    t, x, "hjb_objective",
                    af + 2.0 * (lam / x) * g_field.value(t, x) * ag,
                ))
            else:
                av = ops.generator(sol.V_field, alpha, theta, t, x)
                hg = ops.quadratic_variation(g_field, alpha, theta, t, x)
                rows.append(ResidualRow(t, x, "hjb_value", av - lam * hg))
                f_field = sol.f_field()
                af = ops.generator(f_field, alpha, theta, t, x)
                rows.append(ResidualRow(t, x, "objective_pde", af))
                rows.append(ResidualRow(
                    t, x, "hjb_objective",
                    af + 2.0 * lam * g_field.value(t, x) * ag,
                ))
    return ResidualTable(tuple(rows))


# ---------------------------------------------------------------------------
# saddle sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SaddleViolation:
    side: str
    value: float
    eps: float
    t: float
    x: float
    index: int


@dataclass(frozen=True)
class SaddleReport:
    """Sampled check of F(alpha, theta_hat) <= eps, F(alpha_hat, theta) >= -eps
    and |F(alpha_hat, theta_hat)| <= eps, with eps = 1e-9 scale."""

    samples: int
    seed: int
    saddle_value: float
    saddle_eps: float
    violations: tuple[SaddleViolation, ...]
    max_alpha_side: float
    min_theta_side: float

    @property
    def ok(self) -> bool:
        return not self.violations and abs(self.saddle_value) <= self.saddle_eps


def saddle_check(sol, uset: UncertaintySet, samples: int = 1000, seed: int = 0,
                 radius_scale: float = 10.0, eps_rel: float = 1e-9) -> SaddleReport:
    """Randomized saddle-structure verification.

    Strategies are drawn from a ball of radius ``radius_scale`` times
    |alpha_hat| around alpha_hat, scenarios uniformly from the set (the
    worst case's own jump spec is attached when the set itself carries
    no jump ambiguity).  Points (t, x) are sampled per draw; the
    tolerance scales with (1 + premium)(1 + |x|).
    """
    criterion = sol.criterion
    rng = np.random.default_rng([int(seed), 0x5A])
    dynamics = WealthDynamics.for_criterion(criterion)
    ops = OperatorSet(dynamics, criterion.span)
    theta_hat = sol.worst_case.scenario
    fixed_jump = theta_hat.jump if uset.jump_bounds is None else None
    thetas = sample_scenarios(uset, samples, rng, fixed_jump=fixed_jump)

    t_lo = criterion.t0 + 0.02 * criterion.span
    t_hi = criterion.horizon - 0.02 * criterion.span
    if criterion.kind == "wealth_scaled":
        x_lo, x_hi = 0.5 * criterion.x0, 2.0 * criterion.x0
    else:
        s = 1.0 + abs(criterion.x0)
        x_lo, x_hi = criterion.x0 - 0.5 * s, criterion.x0 + 1.0 * s

    def eps_at(x: float) -> float:
        return eps_rel * (1.0 + sol.premium) * (1.0 + abs(x))

    t_mid = 0.5 * (t_lo + t_hi)
    x_mid = 0.5 * (x_lo + x_hi)
    a_mid = np.atleast_1d(sol.alpha_hat(t_mid, x_mid))
    saddle_value = saddle_objective(sol, ops, a_mid, theta_hat, t_mid, x_mid)
    saddle_eps = eps_at(x_mid)

    violations: list[SaddleViolation] = []
    max_alpha_side = -math.inf
    min_theta_side = math.inf
    n = a_mid.size
    for i in range(samples):
        t = rng.uniform(t_lo, t_hi)
        x = rng.uniform(x_lo, x_hi)
        eps = eps_at(x)
        a_hat = np.atleast_1d(sol.alpha_hat(t, x))
        radius = radius_scale * max(float(np.linalg.norm(a_hat)), 1e-12)
        direction = rng.standard_normal(n)
        norm = float(np.linalg.norm(direction))
        alpha = a_hat if norm == 0 else a_hat + direction / norm * radius * rng.random() ** (1.0 / n)

        f_alpha = saddle_objective(sol, ops, alpha, theta_hat, t, x)
        max_alpha_side = max(max_alpha_side, f_alpha)
        if f_alpha > eps:
            violations.append(SaddleViolation("alpha", f_alpha, eps, t, x, i))

        f_theta = saddle_objective(sol, ops, a_hat, thetas[i], t, x)
        min_theta_side = min(min_theta_side, f_theta)
        if f_theta < -eps:
            violations.append(SaddleViolation("theta", f_theta, eps, t, x, i))

    return SaddleReport(
        samples=samples,
        seed=seed,
        saddle_value=saddle_value,
        saddle_eps=saddle_eps,
        violations=tuple(violations),
        max_alpha_side=max_alpha_side,
        min_theta_side=min_theta_side,
    )
