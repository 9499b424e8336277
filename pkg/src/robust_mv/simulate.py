"""Monte Carlo engine for controlled wealth paths and perturbation tests.

Euler-Maruyama for the diffusion part; compound Poisson jumps by
per-step thinning (counts inverted from one uniform per step and type,
sizes drawn lazily per event); discrete Levy atoms by independent
Poisson counts per atom with the compensator drift subtracted for
small atoms.

Every path owns a counter-based RNG stream keyed by (seed, path index),
with disjoint counter blocks for normals, jump-count uniforms and
per-event jump sizes.  Results are therefore independent of chunking
and scheduling, and bit-identical across repeated runs of the same
configuration.  Reductions are single fixed-order ndarray sums.

The perturbation operations realize the local-variation definitions of
worst-case scenario and equilibrium at desk scale: constant splices on
[t0, t0 + h) with common random numbers across the spliced and
unspliced runs, reported as difference quotients with error bars.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidBounds, NonBankruptcyViolated
from .model import (
    CompoundPoissonJumps,
    Criterion,
    DiscreteLevyJumps,
    JumpSpec,
    Scenario,
    UncertaintySet,
    WealthDynamics,
    nonbankruptcy_violations,
)
from .closed_form import ClosedFormSolution
from .worst_case import corner_scenarios, sobol_scenarios

_TAG_NORMALS = 1
_TAG_COUNTS = 2
_TAG_SIZES = 3
_SE_FLOOR = float(np.finfo(float).tiny)
_MAGIC = b"RMVP"


def _stream(seed: int, stream_index: int, tag: int, step: int = 0, sub: int = 0) -> np.random.Generator:
    key = np.array([seed, stream_index], dtype=np.uint64)
    counter = np.array([0, step, sub, tag], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _poisson_counts(u: np.ndarray, lam: float) -> np.ndarray:
    """Invert the Poisson CDF at the given uniforms (exact, monotone in u)."""
    counts = np.zeros(u.shape, dtype=np.int64)
    if lam <= 0.0:
        return counts
    pmf = math.exp(-lam)
    cdf = np.full(u.shape, pmf)
    active = u > cdf
    k = 0
    pk = pmf
    while active.any():
        k += 1
        pk *= lam / k
        cdf += pk
        counts[active] = k
        active = u > cdf
        if k > 10_000:  # lam dt is tiny here; this is unreachable in practice
            raise InvalidBounds("Poisson inversion failed to converge")
    return counts


# ---------------------------------------------------------------------------
# configuration, batches, estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Path count, step size and the 64-bit seed every run must pin."""

    n_paths: int
    dt: float
    seed: int
    scheme: str = "euler"
    antithetic: bool = False
    keep_paths: bool = False
    chunk_paths: int = 65536

    def __post_init__(self) -> None:
        if self.n_paths < 2:
            raise InvalidBounds("need at least two paths")
        if self.dt <= 0:
            raise InvalidBounds("dt must be positive")
        if self.scheme != "euler":
            raise InvalidBounds(f"unknown scheme {self.scheme!r}")
        if self.seed < 0 or self.seed >= 2**64:
            raise InvalidBounds("seed must fit in 64 bits")
        if self.antithetic and self.n_paths % 2:
            raise InvalidBounds("antithetic runs need an even path count")

    def steps_for(self, span: float) -> tuple[int, float]:
        """Number of steps and the effective dt: the requested dt is rounded
        down so the horizon is an integer number of steps."""
        n = max(1, math.ceil(span / self.dt - 1e-9))
        return n, span / n


@dataclass(frozen=True)
class PathBatch:
    """Simulated terminal states (and optionally full paths) plus provenance."""

    terminal: np.ndarray
    t0: float
    horizon: float
    dt: float
    n_steps: int
    seed: int
    kind: str
    x0: float
    paths: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.terminal.size

    def spill(self, path) -> None:
        """Write the binary columnar dump (needs keep_paths=True).

        Layout: magic ``RMVP``, one version byte, n_paths and n_steps as
        little-endian uint64, then float64 node columns (n_steps + 1
        columns of n_paths values each, little-endian).
        """
        if self.paths is None:
            raise InvalidBounds("path spill needs a batch simulated with keep_paths=True")
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4sBQQ", _MAGIC, 1, self.n_paths, self.n_steps))
            fh.write(np.ascontiguousarray(self.paths.T, dtype="<f8").tobytes())

    @staticmethod
    def load(path) -> tuple[int, int, np.ndarray]:
        """Read a spill file back; returns (n_paths, n_steps, path matrix)."""
        with open(path, "rb") as fh:
            magic, version, n_paths, n_steps = struct.unpack("<4sBQQ", fh.read(21))
            if magic != _MAGIC or version != 1:
                raise InvalidBounds("not a version-1 path dump")
            data = np.frombuffer(fh.read(), dtype="<f8")
        if data.size != n_paths * (n_steps + 1):
            raise InvalidBounds("path dump payload has the wrong size")
        return int(n_paths), int(n_steps), data.reshape(n_steps + 1, n_paths).T.copy()


@dataclass(frozen=True)
class JEstimate:
    """Sample estimate of the mean-variance functional J = E - lam Var.

    The standard error combines the errors of the mean and of the
    variance through the delta method (influence function of J).
    """

    j_hat: float
    mean_hat: float
    var_hat: float
    standard_error_j: float
    n_paths: int
    standard_error_mean: float

    def to_json_dict(self) -> dict:
        return {
            "j_hat": self.j_hat,
            "mean_hat": self.mean_hat,
            "var_hat": self.var_hat,
            "standard_error_j": self.standard_error_j,
            "standard_error_mean": self.standard_error_mean,
            "n_paths": self.n_paths,
        }


def _influence(x: np.ndarray, lam: float) -> np.ndarray:
    m = np.mean(x)
    v = np.var(x, ddof=1)
    c = x - m
    return c - lam * (c * c - v)


def estimate_J(batch: PathBatch, criterion: Criterion) -> JEstimate:
    """Sample mean minus lam(x0) times the unbiased sample variance."""
    x = batch.terminal
    n = x.size
    lam = criterion.risk_aversion_at(criterion.x0)
    m = float(np.mean(x))
    v = float(np.var(x, ddof=1))
    psi = _influence(x, lam)
    se = float(np.std(psi, ddof=1) / math.sqrt(n))
    se_mean = float(np.std(x, ddof=1) / math.sqrt(n))
    return JEstimate(
        j_hat=m - lam * v,
        mean_hat=m,
        var_hat=v,
        standard_error_j=max(se, _SE_FLOOR),
        n_paths=n,
        standard_error_mean=max(se_mean, _SE_FLOOR),
    )


def paired_difference(a: PathBatch, b: PathBatch, criterion: Criterion) -> tuple[float, float]:
    """J(a) - J(b) with the standard error of the paired (CRN) difference."""
    lam = criterion.risk_aversion_at(criterion.x0)
    ja = estimate_J(a, criterion).j_hat
    jb = estimate_J(b, criterion).j_hat
    psi = _influence(a.terminal, lam) - _influence(b.terminal, lam)
    se = float(np.std(psi, ddof=1) / math.sqrt(a.terminal.size))
    return ja - jb, max(se, _SE_FLOOR)


# ---------------------------------------------------------------------------
# strategies and scenario timelines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantStrategy:
    vec: np.ndarray

    def __post_init__(self):
        v = np.array(self.vec, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)

    def constant_at(self, t: float) -> np.ndarray | None:
        return self.vec

    def values(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.vec


@dataclass(frozen=True)
class SolutionStrategy:
    """Wraps a closed-form solution's alpha_hat for the simulator."""

    sol: ClosedFormSolution

    def constant_at(self, t: float) -> np.ndarray | None:
        if self.sol.kind == "wealth_scaled":
            return None
        return self.sol.alpha_coef

    def values(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.sol.alpha_hat(t, x)


@dataclass(frozen=True)
class SplicedStrategy:
    """Constant vector w on [t0, switch), the base strategy afterwards."""

    window_vec: np.ndarray
    switch: float
    base: ConstantStrategy | SolutionStrategy

    def __post_init__(self):
        v = np.array(self.window_vec, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "window_vec", v)

    def constant_at(self, t: float) -> np.ndarray | None:
        if t < self.switch - 1e-12:
            return self.window_vec
        return self.base.constant_at(t)

    def values(self, t: float, x: np.ndarray) -> np.ndarray:
        if t < self.switch - 1e-12:
            return self.window_vec
        return self.base.values(t, x)


@dataclass(frozen=True)
class ConstantScenario:
    scenario: Scenario

    def at(self, t: float) -> Scenario:
        return self.scenario


@dataclass(frozen=True)
class SplicedScenario:
    """Scenario u on [t0, switch), the base scenario afterwards."""

    window: Scenario
    switch: float
    base: Scenario

    def at(self, t: float) -> Scenario:
        if t < self.switch - 1e-12:
            return self.window
        return self.base


# ---------------------------------------------------------------------------
# the engine
# ---------------------------------------------------------------------------


class _Segment:
    """Per-scenario precomputation shared by all steps of one splice segment."""

    def __init__(self, scenario: Scenario, dynamics: WealthDynamics, dt: float):
        self.scenario = scenario
        self.chol = scenario.chol()
        self.drift = np.asarray(scenario.drift, dtype=float)
        self.cov = np.asarray(scenario.cov, dtype=float)
        self.dt = dt
        jump = scenario.jump
        if isinstance(jump, CompoundPoissonJumps):
            self.jump_kind = "cp"
            self.loadings = np.asarray(jump.loadings, dtype=float)
            self.lam_dt = np.asarray(jump.intensity, dtype=float) * dt
            self.size_laws = jump.size_laws
            self.n_streams = jump.n_types
        elif isinstance(jump, DiscreteLevyJumps):
            self.jump_kind = "ld"
            self.atom_vecs = np.asarray(jump.atoms, dtype=float)
            self.lam_dt = np.asarray(jump.weights, dtype=float) * dt
            self.small = np.linalg.norm(self.atom_vecs, axis=1) < 1.0
            self.n_streams = jump.weights.size
        else:
            self.jump_kind = "none"
            self.n_streams = 0


class ShockCache:
    """Per-path shock tables, drawn once and reused across CRN runs.

    Keyed by chunk start; all runs sharing a cache must share the seed,
    step count, asset count, jump-stream count and antithetic flag.
    """

    def __init__(self) -> None:
        self.store: dict[int, tuple[np.ndarray, np.ndarray | None]] = {}


def _chunk_shocks(seed: int, start: int, size: int, n_steps: int, n_assets: int,
                  n_streams: int, antithetic: bool,
                  cache: ShockCache | None) -> tuple[np.ndarray, np.ndarray | None]:
    if cache is not None and start in cache.store:
        return cache.store[start]
    z = np.empty((size, n_steps, n_assets))
    u = np.empty((size, n_steps, n_streams)) if n_streams else None
    for row in range(size):
        path = start + row
        stream = path // 2 if antithetic else path
        g = _stream(seed, stream, _TAG_NORMALS)
        draw = g.standard_normal(n_steps * n_assets).reshape(n_steps, n_assets)
        if antithetic and path % 2:
            draw = -draw
        z[row] = draw
        if n_streams:
            gu = _stream(seed, stream, _TAG_COUNTS)
            u[row] = gu.random(n_steps * n_streams).reshape(n_steps, n_streams)
    out = (z, u)
    if cache is not None:
        cache.store[start] = out
    return out


def _event_sizes(seed: int, stream_index: int, step: int, type_index: int,
                 law, count: int) -> np.ndarray:
    g = _stream(seed, stream_index, _TAG_SIZES, step=step, sub=type_index)
    return law.sample(g, count)


def simulate_paths(
    dynamics: WealthDynamics,
    strategy,
    scenario,
    cfg: SimConfig,
    t0: float,
    horizon: float,
    x0: float,
    shock_cache: ShockCache | None = None,
    enforce_admissibility: bool = True,
) -> PathBatch:
    """Euler paths of the controlled state under (strategy, scenario).

    ``scenario`` may be a bare Scenario or a timeline (``ConstantScenario``
    / ``SplicedScenario``).  Under terminal-wealth jump dynamics,
    admissible constant strategies must keep every per-type exposure in
    [0, 1]; a path whose wealth still hits zero aborts the run.
    """
    timeline = ConstantScenario(scenario) if isinstance(scenario, Scenario) else scenario
    n_steps, dt = cfg.steps_for(horizon - t0)
    t_nodes = t0 + dt * np.arange(n_steps)

    # build splice segments: consecutive step ranges sharing a scenario
    segments: list[tuple[_Segment, int, int]] = []
    s = 0
    while s < n_steps:
        scen = timeline.at(t_nodes[s])
        e = s + 1
        while e < n_steps and timeline.at(t_nodes[e]) is scen:
            e += 1
        segments.append((_Segment(scen, dynamics, dt), s, e))
        s = e

    n_assets = segments[0][0].drift.size
    n_streams = max(seg.n_streams for seg, _, _ in segments)
    has_jumps = n_streams > 0
    guard_wealth = has_jumps and dynamics.kind in ("terminal_wealth", "wealth_scaled")

    if enforce_admissibility and has_jumps and dynamics.kind == "terminal_wealth":
        for seg, lo, _ in segments:
            if seg.jump_kind != "cp":
                continue
            vec = strategy.constant_at(t_nodes[lo])
            if vec is not None:
                bad = nonbankruptcy_violations(vec, seg.scenario.jump)
                if bad:
                    raise NonBankruptcyViolated(
                        f"strategy exposure alpha.J outside [0, 1] for jump types {bad}; "
                        "refusing to simulate jump dynamics"
                    )

    chunk = _effective_chunk(cfg.chunk_paths, n_steps, max(n_assets, n_streams))
    terminal = np.empty(cfg.n_paths)
    paths = np.empty((cfg.n_paths, n_steps + 1)) if cfg.keep_paths else None
    sqrt_dt = math.sqrt(dt)

    for start in range(0, cfg.n_paths, chunk):
        size = min(chunk, cfg.n_paths - start)
        z, u = _chunk_shocks(cfg.seed, start, size, n_steps, n_assets, n_streams,
                             cfg.antithetic, shock_cache)
        x = np.full(size, float(x0))
        if cfg.keep_paths:
            paths[start:start + size, 0] = x
        for seg, lo, hi in segments:
            counts = None
            if seg.n_streams:
                counts = np.empty((size, hi - lo, seg.n_streams), dtype=np.int64)
                for l in range(seg.n_streams):
                    counts[:, :, l] = _poisson_counts(u[:, lo:hi, l], float(seg.lam_dt[l]))
            # strategies constant across the segment take a precomputed path
            const_vec = strategy.constant_at(t_nodes[lo])
            if const_vec is not None:
                tail_vec = strategy.constant_at(t_nodes[hi - 1])
                if tail_vec is None or not np.array_equal(const_vec, tail_vec):
                    const_vec = None
            pre = _ConstPrep(dynamics, seg, const_vec) if const_vec is not None else None
            for s_rel, s_abs in enumerate(range(lo, hi)):
                t = t_nodes[s_abs]
                step_counts = None if counts is None else counts[:, s_rel, :]
                if pre is not None:
                    x = x + pre.drift_dt + (z[:, s_abs, :] @ pre.vol_vec) * sqrt_dt
                    if step_counts is not None:
                        x = x + pre.jump_increment(step_counts, cfg.seed, start, s_abs,
                                                   cfg.antithetic)
                else:
                    x = _advance(dynamics, strategy, seg, t, x, z[:, s_abs, :],
                                 step_counts, cfg.seed, start, s_abs, cfg.antithetic)
                if guard_wealth and dynamics.kind != "log_return" and np.any(x <= 0.0):
                    bad = int(np.argmax(x <= 0.0)) + start
                    raise NonBankruptcyViolated(
                        f"wealth hit zero on path {bad} at t = {t + dt:.6g} under jump dynamics"
                    )
                if cfg.keep_paths:
                    paths[start:start + size, s_abs + 1] = x
        terminal[start:start + size] = x

    return PathBatch(
        terminal=terminal, t0=t0, horizon=horizon, dt=dt, n_steps=n_steps,
        seed=cfg.seed, kind=dynamics.kind, x0=float(x0), paths=paths,
    )


def _effective_chunk(requested: int, n_steps: int, width: int) -> int:
    budget = 12_000_000  # floats per per-chunk shock table (~96 MB)
    cap = max(512, budget // max(1, n_steps * max(1, width)))
    return max(1, min(requested, cap))


class _ConstPrep:
    """Per-segment constants for strategies constant over the segment."""

    def __init__(self, dynamics: WealthDynamics, seg: _Segment, vec: np.ndarray):
        self.seg = seg
        self.vec = np.asarray(vec, dtype=float)
        drift = float(self.vec @ seg.drift)
        if dynamics.state_is_log:
            drift -= 0.5 * float(self.vec @ seg.cov @ self.vec)
        self.drift_dt = drift * seg.dt
        self.vol_vec = seg.chol.T @ self.vec
        self.log_state = dynamics.state_is_log
        if seg.jump_kind == "cp":
            self.expos = self.vec @ seg.loadings  # (k,)
        elif seg.jump_kind == "ld":
            # compensated-small-jump form: the drift carries the expected
            # flow of small atoms, which the jump increment subtracts back
            moves = seg.atom_vecs @ self.vec
            self.zeta = np.log1p(moves) if self.log_state else moves
            small = seg.small
            self.comp_dt = float(np.sum(seg.lam_dt[small] * self.zeta[small])) if np.any(small) else 0.0
            self.drift_dt += self.comp_dt

    def jump_increment(self, step_counts, seed, chunk_start, step_abs, antithetic):
        seg = self.seg
        if seg.jump_kind == "ld":
            return step_counts @ self.zeta - self.comp_dt
        inc = np.zeros(step_counts.shape[0])
        for l in range(seg.n_streams):
            rows = np.nonzero(step_counts[:, l])[0]
            if rows.size == 0:
                continue
            for row in rows:
                path = chunk_start + int(row)
                stream = path // 2 if antithetic else path
                sizes = _event_sizes(seed, stream, step_abs, l, seg.size_laws[l],
                                     int(step_counts[row, l]))
                if self.log_state:
                    moves = self.expos[l] * sizes
                    if np.any(moves <= -1.0):
                        raise NonBankruptcyViolated(
                            f"log-state jump 1 + alpha.J y <= 0 on path {path}"
                        )
                    inc[row] += float(np.sum(np.log1p(moves)))
                else:
                    inc[row] += self.expos[l] * float(np.sum(sizes))
        return inc


def _advance(dynamics, strategy, seg: _Segment, t, x, z_step, counts,
             seed, chunk_start, step_abs, antithetic):
    dt = seg.dt
    alpha = strategy.values(t, x)
    log_state = dynamics.state_is_log
    if alpha.ndim == 1:
        drift = float(alpha @ seg.drift)
        if log_state:
            drift -= 0.5 * float(alpha @ seg.cov @ alpha)
        vol_vec = seg.chol.T @ alpha
        inc = drift * dt + z_step @ vol_vec * math.sqrt(dt)
    else:
        drift = alpha @ seg.drift
        if log_state:
            drift = drift - 0.5 * np.einsum("pi,ij,pj->p", alpha, seg.cov, alpha)
        inc = drift * dt + np.einsum("pi,pi->p", alpha @ seg.chol, z_step) * math.sqrt(dt)

    if seg.jump_kind == "cp" and counts is not None:
        inc = inc + _cp_jump_increment(dynamics, seg, alpha, counts, seed,
                                       chunk_start, step_abs, antithetic, x.size)
    elif seg.jump_kind == "ld" and counts is not None:
        inc = inc + _ld_jump_increment(dynamics, seg, alpha, counts, dt)
    return x + inc


def _cp_jump_increment(dynamics, seg: _Segment, alpha, counts, seed,
                       chunk_start, step_abs, antithetic, size):
    inc = np.zeros(size)
    for l in range(seg.n_streams):
        rows = np.nonzero(counts[:, l])[0]
        if rows.size == 0:
            continue
        loading = seg.loadings[:, l]
        for row in rows:
            path = chunk_start + int(row)
            stream = path // 2 if antithetic else path
            sizes = _event_sizes(seed, stream, step_abs, l, seg.size_laws[l],
                                 int(counts[row, l]))
            expo = float(alpha @ loading) if alpha.ndim == 1 else float(alpha[row] @ loading)
            if dynamics.state_is_log:
                moves = expo * sizes
                if np.any(moves <= -1.0):
                    raise NonBankruptcyViolated(
                        f"log-state jump 1 + alpha.J y <= 0 on path {path}"
                    )
                inc[row] += float(np.sum(np.log1p(moves)))
            else:
                inc[row] += expo * float(np.sum(sizes))
    return inc


def _ld_jump_increment(dynamics, seg: _Segment, alpha, counts, dt):
    # compensated-small-jump bookkeeping: the expected small-atom flow is a
    # drift rider, the realized jumps enter net of it; the sum telescopes to
    # the raw uncompensated jump increment
    if alpha.ndim == 1:
        moves = seg.atom_vecs @ alpha  # (m,)
        zeta = np.log1p(moves) if dynamics.state_is_log else moves
        comp = float(np.sum(seg.lam_dt[seg.small] * zeta[seg.small])) if np.any(seg.small) else 0.0
        return comp + (counts @ zeta - comp)
    moves = alpha @ seg.atom_vecs.T  # (paths, m)
    zeta = np.log1p(moves) if dynamics.state_is_log else moves
    inc = np.einsum("pm,pm->p", counts.astype(float), zeta)
    comp = (zeta[:, seg.small] * seg.lam_dt[seg.small]).sum(axis=1) if np.any(seg.small) else 0.0
    return comp + (inc - comp)


def simulate_solution(sol: ClosedFormSolution, cfg: SimConfig,
                      scenario=None, shock_cache: ShockCache | None = None) -> PathBatch:
    """Simulate the solution's own strategy, by default under its worst case."""
    dynamics = WealthDynamics.for_criterion(sol.criterion)
    strategy = SolutionStrategy(sol)
    timeline = scenario if scenario is not None else sol.worst_case.scenario
    if sol.nonbankruptcy is not None and not sol.nonbankruptcy.ok:
        raise NonBankruptcyViolated(
            "solution is flagged inadmissible for jump dynamics "
            f"(types {sol.nonbankruptcy.violating_types})"
        )
    return simulate_paths(dynamics, strategy, timeline, cfg,
                          sol.criterion.t0, sol.criterion.horizon, sol.criterion.x0,
                          shock_cache=shock_cache)


# ---------------------------------------------------------------------------
# perturbation tests (local constant variations with CRN)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationRow:
    h: float
    index: int
    quotient: float
    se: float
    violated: bool
    detail: str


@dataclass(frozen=True)
class PerturbationReport:
    """Difference quotients of local splices, with CRN error bars.

    ``kind`` is "worst_case" (scenario varied: quotients must not exceed
    +3 se/h) or "equilibrium" (strategy varied against the inner worst
    splice: quotients must not fall below -3 se/h).
    """

    kind: str
    rows: tuple[PerturbationRow, ...]
    j_base: float
    se_base: float
    h_list: tuple[float, ...]

    @property
    def violations(self) -> tuple[PerturbationRow, ...]:
        return tuple(r for r in self.rows if r.violated)

    @property
    def ok(self) -> bool:
        return not self.violations

    def per_h_extreme(self) -> dict[float, float]:
        """min quotient per h for equilibrium, max per h for worst-case."""
        out: dict[float, float] = {}
        for h in self.h_list:
            qs = [r.quotient for r in self.rows if r.h == h]
            if qs:
                out[h] = min(qs) if self.kind == "equilibrium" else max(qs)
        return out

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "j_base": self.j_base,
            "se_base": self.se_base,
            "h_list": list(self.h_list),
            "rows": [
                {
                    "h": r.h, "index": r.index, "quotient": r.quotient,
                    "se": r.se, "violated": r.violated, "detail": r.detail,
                }
                for r in self.rows
            ],
            "per_h_extreme": {str(h): v for h, v in self.per_h_extreme().items()},
            "ok": self.ok,
        }


def scenario_candidates(uset: UncertaintySet, count: int,
                        theta_hat: Scenario,
                        fixed_jump: JumpSpec | None = None) -> list[Scenario]:
    """Deterministic u-candidates: the worst case itself, then box
    corners, then a low-discrepancy interior fill, deduplicated."""
    def key(s: Scenario):
        return (tuple(np.round(s.drift, 12)), tuple(np.round(s.cov.ravel(), 12)))

    out: list[Scenario] = [theta_hat]
    seen = {key(theta_hat)}
    pool = corner_scenarios(uset, fixed_jump=fixed_jump)
    if len(out) + len(pool) < count:
        pool = pool + sobol_scenarios(uset, 2 * count, fixed_jump=fixed_jump)
    for s in pool:
        if len(out) >= count:
            break
        k = key(s)
        if k not in seen:
            seen.add(k)
            out.append(s)
    return out


def strategy_candidates(alpha_hat: np.ndarray, count: int, seed: int,
                        radius_scale: float = 1.0) -> list[np.ndarray]:
    """The strategy itself plus uniform draws from a ball around it."""
    rng = np.random.default_rng([int(seed), 0x77])
    out = [np.array(alpha_hat, dtype=float)]
    n = out[0].size
    radius = radius_scale * float(np.linalg.norm(out[0]))
    if radius == 0.0:
        radius = radius_scale
    while len(out) < count:
        direction = rng.standard_normal(n)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            continue
        r = radius * rng.random() ** (1.0 / n)
        out.append(out[0] + direction / norm * r)
    return out


def _aligned_h(h: float, dt: float) -> float:
    """Snap the splice length to a whole number of steps."""
    steps = max(1, round(h / dt))
    return steps * dt


def perturb_worst_case(
    sol: ClosedFormSolution,
    uset: UncertaintySet,
    h_list: Sequence[float],
    u_samples: int,
    cfg: SimConfig,
) -> PerturbationReport:
    """Local scenario variations: quotient (J(a, th) - J(a, th_{h,u})) / h.

    A true worst case keeps every quotient below +3 se/h (se from the
    CRN-paired difference).
    """
    criterion = sol.criterion
    theta_hat = sol.worst_case.scenario
    fixed_jump = theta_hat.jump if uset.jump_bounds is None else None
    cache = ShockCache()
    base = simulate_solution(sol, cfg, shock_cache=cache)
    base_est = estimate_J(base, criterion)
    us = scenario_candidates(uset, u_samples, theta_hat, fixed_jump=fixed_jump)

    rows: list[PerturbationRow] = []
    _, dt = cfg.steps_for(criterion.span)
    for h_raw in h_list:
        h = _aligned_h(float(h_raw), dt)
        for iu, u in enumerate(us):
            timeline = SplicedScenario(u, criterion.t0 + h, theta_hat)
            run = simulate_solution(sol, cfg, scenario=timeline, shock_cache=cache)
            diff, se = paired_difference(base, run, criterion)
            quotient = diff / h
            rows.append(
                PerturbationRow(
                    h=h, index=iu, quotient=quotient, se=se,
                    violated=bool(quotient > 3.0 * se / h),
                    detail=f"u[{iu}]",
                )
            )
    return PerturbationReport(
        kind="worst_case", rows=tuple(rows),
        j_base=base_est.j_hat, se_base=base_est.standard_error_j,
        h_list=tuple(_aligned_h(float(h), dt) for h in h_list),
    )


def perturb_equilibrium(
    sol: ClosedFormSolution,
    uset: UncertaintySet,
    h_list: Sequence[float],
    w_samples: int,
    u_samples: int,
    cfg: SimConfig,
    base_strategy: np.ndarray | None = None,
) -> PerturbationReport:
    """Local strategy variations against their own worst window splice.

    For each window length h and each constant strategy w near alpha_hat,
    the window scenario is driven to its sampled worst u; the quotient

        (J(base, th) - min_u J(w on window, u on window)) / h

    must not fall below -3 se/h at an equilibrium.  Passing a
    ``base_strategy`` (e.g. a deliberately scaled alpha_hat) probes the
    test's power: a non-equilibrium base produces violations.

    For the solved cases the worst-case scenario does not depend on the
    strategy, so the same theta_hat drives the post-window segment of
    every candidate.  Candidates are drawn around alpha_hat(t0, x0);
    under terminal-wealth jump dynamics, inadmissible candidates (per-
    type exposure outside [0, 1]) are dropped since their paths are not
    simulable.
    """
    criterion = sol.criterion
    theta_hat = sol.worst_case.scenario
    fixed_jump = theta_hat.jump if uset.jump_bounds is None else None
    dynamics = WealthDynamics.for_criterion(criterion)
    if sol.kind == "wealth_scaled":
        alpha_ref = np.atleast_1d(np.asarray(sol.alpha_hat(criterion.t0, criterion.x0)))
    else:
        alpha_ref = sol.alpha_coef
    if base_strategy is None:
        base_strat = SolutionStrategy(sol)
    else:
        base_strat = ConstantStrategy(np.asarray(base_strategy, dtype=float))

    cache = ShockCache()
    base = simulate_paths(dynamics, base_strat, theta_hat, cfg,
                          criterion.t0, criterion.horizon, criterion.x0,
                          shock_cache=cache)
    base_est = estimate_J(base, criterion)
    us = scenario_candidates(uset, u_samples, theta_hat, fixed_jump=fixed_jump)
    ws = strategy_candidates(alpha_ref, w_samples, cfg.seed)
    if isinstance(theta_hat.jump, CompoundPoissonJumps) and dynamics.kind == "terminal_wealth":
        # only admissible window strategies are simulable under jump dynamics
        ws = [w for w in ws if not nonbankruptcy_violations(w, theta_hat.jump)]

    rows: list[PerturbationRow] = []
    _, dt = cfg.steps_for(criterion.span)
    for h_raw in h_list:
        h = _aligned_h(float(h_raw), dt)
        switch = criterion.t0 + h
        for iw, w in enumerate(ws):
            strategy = SplicedStrategy(w, switch, base_strat)
            best: tuple[float, float, int] | None = None
            for iu, u in enumerate(us):
                timeline = SplicedScenario(u, switch, theta_hat)
                run = simulate_paths(dynamics, strategy, timeline, cfg,
                                     criterion.t0, criterion.horizon, criterion.x0,
                                     shock_cache=cache)
                diff, se = paired_difference(base, run, criterion)
                if best is None or diff > best[0]:
                    # inner inf over u == max of (J_base - J_run)
                    best = (diff, se, iu)
            quotient = best[0] / h
            rows.append(
                PerturbationRow(
                    h=h, index=iw, quotient=quotient, se=best[1],
                    violated=bool(quotient < -3.0 * best[1] / h),
                    detail=f"w[{iw}] u*[{best[2]}]",
                )
            )
    return PerturbationReport(
        kind="equilibrium", rows=tuple(rows),
        j_base=base_est.j_hat, se_base=base_est.standard_error_j,
        h_list=tuple(_aligned_h(float(h), dt) for h in h_list),
    )
