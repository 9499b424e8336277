"""Command-line surface: robust-mv <command> <file.json> [--out DIR] [--quiet] [--json].

Commands
--------
worst-case   solve for the adversarial scenario and print it
strategy     evaluate the closed-form strategy and value functions
verify       residual grid plus saddle sampling, PASS/FAIL
simulate     Monte Carlo consistency of J and the mean against V and g
perturb      local-splice difference-quotient tests

Problem files are strict JSON: unknown top-level keys are rejected, the
version tag must be "1", and every randomized command must carry an
explicit seed.  Exit codes: 0 pass, 1 assertion failure, 2 schema
error, 3 model assumption violated, 4 runtime budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import closed_form, pde_check, simulate as sim
from .errors import (
    AssumptionViolated,
    BudgetExceeded,
    InvalidBounds,
    NonBankruptcyViolated,
    NotPositiveDefinite,
    RobustMVError,
    SchemaError,
)
from .model import (
    CompoundPoissonBounds,
    CompoundPoissonJumps,
    Criterion,
    DiscreteLevyBounds,
    DiscreteLevyJumps,
    JumpSizeLaw,
    UncertaintySet,
    atoms_near_unit_sphere,
)
from .worst_case import find_worst_case, worst_case_numeric, worst_case_two_asset

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_SCHEMA = 2
EXIT_ASSUMPTION = 3
EXIT_BUDGET = 4

_TOP_KEYS = {"version", "assets", "uncertainty", "jumps", "criterion",
             "worst_case", "verify", "simulate", "perturb"}


# ---------------------------------------------------------------------------
# strict parsing
# ---------------------------------------------------------------------------


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing required key {key!r}")
    return obj[key]


def _no_extras(obj: dict, allowed: set[str], where: str) -> None:
    extras = set(obj) - allowed
    if extras:
        raise SchemaError(f"{where}: unknown keys {sorted(extras)}")


def _vector(value, n: int, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise SchemaError(f"{where}: expected {n} numbers")
    return arr


def load_problem(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read problem file: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("problem file must hold a JSON object")
    _no_extras(doc, _TOP_KEYS, "problem")
    if _need(doc, "version", "problem") != "1":
        raise SchemaError('unsupported version tag (need "1")')
    return doc


def parse_uncertainty(doc: dict) -> UncertaintySet:
    n = _need(doc, "assets", "problem")
    if not isinstance(n, int) or n < 1:
        raise SchemaError("assets must be a positive integer")
    unc = _need(doc, "uncertainty", "problem")
    allowed = {"drift_lo", "drift_hi", "vol_lo", "vol_hi", "rho_lo", "rho_hi",
               "corr_vertices", "jump_bounds"}
    _no_extras(unc, allowed, "uncertainty")
    kwargs = dict(
        drift_lo=_vector(_need(unc, "drift_lo", "uncertainty"), n, "drift_lo"),
        drift_hi=_vector(_need(unc, "drift_hi", "uncertainty"), n, "drift_hi"),
        vol_lo=_vector(_need(unc, "vol_lo", "uncertainty"), n, "vol_lo"),
        vol_hi=_vector(_need(unc, "vol_hi", "uncertainty"), n, "vol_hi"),
    )
    if n == 2:
        kwargs["rho_lo"] = float(_need(unc, "rho_lo", "uncertainty"))
        kwargs["rho_hi"] = float(_need(unc, "rho_hi", "uncertainty"))
    elif n > 2:
        verts = _need(unc, "corr_vertices", "uncertainty")
        kwargs["corr_vertices"] = tuple(np.asarray(v, dtype=float) for v in verts)
    if "jump_bounds" in unc:
        kwargs["jump_bounds"] = parse_jump_bounds(unc["jump_bounds"], n)
    try:
        return UncertaintySet(**kwargs)
    except (InvalidBounds, NotPositiveDefinite) as exc:
        raise SchemaError(f"uncertainty: {exc}") from exc


def parse_jump_bounds(obj: dict, n: int):
    kind = _need(obj, "kind", "jump_bounds")
    if kind == "compound_poisson":
        _no_extras(obj, {"kind", "loadings", "intensity_lo", "intensity_hi",
                         "mean_lo", "mean_hi", "second_lo", "second_hi"}, "jump_bounds")
        loadings = np.asarray(_need(obj, "loadings", "jump_bounds"), dtype=float)
        k = loadings.shape[1] if loadings.ndim == 2 else 0
        return CompoundPoissonBounds(
            loadings=loadings,
            intensity_lo=_vector(_need(obj, "intensity_lo", "jump_bounds"), k, "intensity_lo"),
            intensity_hi=_vector(_need(obj, "intensity_hi", "jump_bounds"), k, "intensity_hi"),
            mean_lo=_vector(_need(obj, "mean_lo", "jump_bounds"), k, "mean_lo"),
            mean_hi=_vector(_need(obj, "mean_hi", "jump_bounds"), k, "mean_hi"),
            second_lo=_vector(_need(obj, "second_lo", "jump_bounds"), k, "second_lo"),
            second_hi=_vector(_need(obj, "second_hi", "jump_bounds"), k, "second_hi"),
        )
    if kind == "levy_discrete":
        _no_extras(obj, {"kind", "atoms", "weight_lo", "weight_hi"}, "jump_bounds")
        atoms = np.atleast_2d(np.asarray(_need(obj, "atoms", "jump_bounds"), dtype=float))
        m = atoms.shape[0]
        return DiscreteLevyBounds(
            atoms=atoms,
            weight_lo=_vector(_need(obj, "weight_lo", "jump_bounds"), m, "weight_lo"),
            weight_hi=_vector(_need(obj, "weight_hi", "jump_bounds"), m, "weight_hi"),
        )
    raise SchemaError(f"jump_bounds: unknown kind {kind!r}")


def parse_size_law(obj: dict, index: int) -> JumpSizeLaw:
    where = f"jumps.sizes[{index}]"
    sampler = _need(obj, "sampler", where)
    if sampler == "two-point":
        _no_extras(obj, {"sampler", "values", "prob", "mean", "second_moment"}, where)
        if "values" in obj:
            a, b = obj["values"]
            law = JumpSizeLaw.two_point(float(a), float(b), float(_need(obj, "prob", where)))
        else:
            law = JumpSizeLaw.two_point_from_moments(
                float(_need(obj, "mean", where)),
                float(_need(obj, "second_moment", where)),
            )
    elif sampler == "uniform":
        _no_extras(obj, {"sampler", "lo", "hi", "mean", "second_moment"}, where)
        law = JumpSizeLaw.uniform(float(_need(obj, "lo", where)), float(_need(obj, "hi", where)))
    elif sampler == "shifted-lognormal":
        _no_extras(obj, {"sampler", "m", "s", "mean", "second_moment"}, where)
        law = JumpSizeLaw.shifted_lognormal(float(_need(obj, "m", where)), float(_need(obj, "s", where)))
    else:
        raise SchemaError(f"{where}: unknown sampler {sampler!r}")
    if "mean" in obj and "second_moment" in obj:
        try:
            law.check_stated_moments(float(obj["mean"]), float(obj["second_moment"]))
        except InvalidBounds as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    return law


def parse_jumps(doc: dict, n: int):
    if "jumps" not in doc:
        return None
    obj = doc["jumps"]
    kind = _need(obj, "kind", "jumps")
    try:
        if kind == "compound_poisson":
            _no_extras(obj, {"kind", "loadings", "intensity", "sizes"}, "jumps")
            sizes = [parse_size_law(s, i) for i, s in enumerate(_need(obj, "sizes", "jumps"))]
            return CompoundPoissonJumps(
                loadings=np.asarray(_need(obj, "loadings", "jumps"), dtype=float),
                intensity=np.asarray(_need(obj, "intensity", "jumps"), dtype=float),
                size_laws=tuple(sizes),
            )
        if kind == "levy_discrete":
            _no_extras(obj, {"kind", "atoms", "weights"}, "jumps")
            return DiscreteLevyJumps(
                atoms=np.asarray(_need(obj, "atoms", "jumps"), dtype=float),
                weights=np.asarray(_need(obj, "weights", "jumps"), dtype=float),
            )
    except (InvalidBounds, RobustMVError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"jumps: {exc}") from exc
    raise SchemaError(f"jumps: unknown kind {kind!r}")


def parse_criterion(doc: dict) -> Criterion:
    obj = _need(doc, "criterion", "problem")
    _no_extras(obj, {"kind", "lambda", "T", "t0", "x0"}, "criterion")
    try:
        return Criterion(
            kind=_need(obj, "kind", "criterion"),
            lam=float(_need(obj, "lambda", "criterion")),
            horizon=float(_need(obj, "T", "criterion")),
            t0=float(obj.get("t0", 0.0)),
            x0=float(obj.get("x0", 1.0)),
        )
    except InvalidBounds as exc:
        raise SchemaError(f"criterion: {exc}") from exc


def _block(doc: dict, name: str, allowed: set[str], required: set[str]) -> dict:
    obj = doc.get(name)
    if obj is None:
        raise SchemaError(f"problem: command needs a {name!r} block")
    _no_extras(obj, allowed, name)
    for key in required:
        _need(obj, key, name)
    return obj


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


class Emitter:
    def __init__(self, args):
        self.quiet = args.quiet
        self.as_json = args.json
        self.out_dir = Path(args.out) if args.out else None
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def say(self, line: str = "") -> None:
        if not self.quiet and not self.as_json:
            print(line)

    def payload(self, command: str, body: dict) -> None:
        doc = {"command": command, **body}
        if self.as_json:
            print(json.dumps(doc, indent=2, sort_keys=True))
        if self.out_dir:
            with open(self.out_dir / f"{command.replace('-', '_')}.json", "w") as fh:
                json.dump(doc, fh, indent=2, sort_keys=True)


def _worst_case_dict(res) -> dict:
    scen = res.scenario
    out = {
        "case": res.case_label,
        "risk_premium": res.risk_premium,
        "manifold": res.manifold,
        "drift": scen.drift.tolist(),
        "vols": scen.vols.tolist(),
        "cov": scen.cov.tolist(),
    }
    if scen.n == 2:
        out["rho"] = float(scen.corr[0, 1])
    if res.evaluations:
        out["evaluations"] = res.evaluations
        out["skipped"] = res.skipped
    return out


def _print_worst_case(em: Emitter, res) -> None:
    scen = res.scenario
    em.say(f"worst case           {res.case_label}" + ("  (manifold: minimizer not unique)" if res.manifold else ""))
    em.say(f"risk premium         {res.risk_premium:.10g}")
    em.say(f"drift                {np.array2string(scen.drift, precision=6)}")
    em.say(f"vols                 {np.array2string(scen.vols, precision=6)}")
    if scen.n == 2:
        em.say(f"rho                  {scen.corr[0, 1]:.6g}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_worst_case(doc: dict, em: Emitter) -> int:
    uset = parse_uncertainty(doc)
    criterion = parse_criterion(doc)
    jumps = parse_jumps(doc, uset.n)
    block = doc.get("worst_case", {})
    _no_extras(block, {"method", "grid_resolution", "refinements"}, "worst_case")
    method = block.get("method", "auto")
    resolution = int(block.get("grid_resolution", 21))
    refinements = int(block.get("refinements", 2))
    if method == "closed":
        if jumps is not None:
            raise InvalidBounds("closed method covers diffusion ambiguity; use numeric with jumps")
        res = worst_case_two_asset(uset, criterion)
    elif method == "numeric":
        res = worst_case_numeric(uset, criterion, jump=jumps,
                                 resolution=resolution, refinements=refinements)
    elif method == "auto":
        res = find_worst_case(uset, criterion, jump=jumps,
                              resolution=resolution, refinements=refinements)
    else:
        raise SchemaError(f"worst_case.method must be closed|numeric|auto, got {method!r}")
    _print_worst_case(em, res)
    em.payload("worst-case", {"result": _worst_case_dict(res)})
    return EXIT_OK


def _solve_from_doc(doc: dict, em: Emitter):
    uset = parse_uncertainty(doc)
    criterion = parse_criterion(doc)
    jumps = parse_jumps(doc, uset.n)
    sol = closed_form.solve(uset, criterion, jump=jumps)
    ties = atoms_near_unit_sphere(sol.worst_case.scenario.jump)
    if ties:
        em.say(f"WARNING: jump atoms {list(ties)} sit within 1e-9 of the "
               "small/large cutoff |z| = 1; compensation tagging is a tie")
    return uset, criterion, jumps, sol


def cmd_strategy(doc: dict, em: Emitter) -> int:
    _, criterion, jumps, sol = _solve_from_doc(doc, em)
    t0, x0 = criterion.t0, criterion.x0
    _print_worst_case(em, sol.worst_case)
    if sol.worst_case.scenario.jump is not None:
        b_f, sigma_f = sol.worst_case.adjusted
        em.say(f"adjusted drift b_F   {np.array2string(b_f, precision=6)}")
        em.say(f"adjusted cov Sigma_F {np.array2string(sigma_f, precision=6).replace(chr(10), chr(10) + ' ' * 21)}")
    em.say()
    if sol.kind == "wealth_scaled":
        em.say(f"alpha_hat(t0, x0)    {np.array2string(np.atleast_1d(sol.alpha_hat(t0, x0)), precision=6)}")
        em.say("growth factors (mean factor A, second-moment factor B):")
        idx = np.linspace(0, sol.ode.t.size - 1, min(11, sol.ode.t.size)).astype(int)
        em.say("      t           A               B")
        for i in idx:
            em.say(f"  {sol.ode.t[i]:8.4f}  {sol.ode.a[i]:.10f}  {sol.ode.b[i]:.10f}")
    else:
        em.say(f"alpha_hat            {np.array2string(sol.alpha_coef, precision=6)}")
    em.say(f"V(t0, x0)            {sol.V(t0, x0):.10g}")
    em.say(f"g(t0, x0)            {sol.g(t0, x0):.10g}")
    em.say(f"f(t0, x0)            {sol.f(t0, x0):.10g}")
    if sol.nonbankruptcy is not None:
        rep = sol.nonbankruptcy
        em.say(f"jump exposures       {np.array2string(rep.exposures, precision=6)}"
               + ("" if rep.ok else f"  WARNING: types {list(rep.violating_types)} outside [0, 1]"))
    em.payload("strategy", {"result": sol.to_json_dict(ode_stride=100)})
    return EXIT_OK


def cmd_verify(doc: dict, em: Emitter) -> int:
    uset, criterion, jumps, sol = _solve_from_doc(doc, em)
    block = _block(doc, "verify", {"grid", "samples", "seed", "residual_tol"}, {"seed"})
    nt, nx = block.get("grid", [10, 10])
    samples = int(block.get("samples", 1000))
    seed = int(block["seed"])
    tol = float(block.get("residual_tol", 1e-8))

    table = pde_check.residual_grid(sol, nt=int(nt), nx=int(nx))
    saddle = pde_check.saddle_check(sol, uset, samples=samples, seed=seed)
    res_ok = table.max_abs <= tol
    ok = res_ok and saddle.ok

    em.say(f"residual grid        max |residual| {table.max_abs:.3e} "
           f"(tolerance {tol:.1e})  {'PASS' if res_ok else 'FAIL'}")
    for eq, val in sorted(table.max_by_equation().items()):
        em.say(f"  {eq:<18} {val:.3e}")
    em.say(f"saddle check         {samples} samples, seed {seed}: "
           f"{len(saddle.violations)} violations  {'PASS' if saddle.ok else 'FAIL'}")
    em.say(f"  F at saddle        {saddle.saddle_value:.3e} (eps {saddle.saddle_eps:.1e})")
    em.say(f"  max alpha side     {saddle.max_alpha_side:.3e}")
    em.say(f"  min theta side     {saddle.min_theta_side:.3e}")
    if em.out_dir:
        table.to_csv(em.out_dir / "residuals.csv")
    em.payload("verify", {
        "result": {
            "ok": ok,
            "max_residual": table.max_abs,
            "residual_tol": tol,
            "residuals_by_equation": table.max_by_equation(),
            "saddle": {
                "ok": saddle.ok,
                "samples": saddle.samples,
                "seed": saddle.seed,
                "violations": len(saddle.violations),
                "value_at_saddle": saddle.saddle_value,
                "eps": saddle.saddle_eps,
                "max_alpha_side": saddle.max_alpha_side,
                "min_theta_side": saddle.min_theta_side,
            },
        }
    })
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_simulate(doc: dict, em: Emitter) -> int:
    _, criterion, jumps, sol = _solve_from_doc(doc, em)
    block = _block(doc, "simulate",
                   {"n_paths", "dt", "seed", "antithetic", "keep_paths", "spill"},
                   {"n_paths", "dt", "seed"})
    cfg = sim.SimConfig(
        n_paths=int(block["n_paths"]),
        dt=float(block["dt"]),
        seed=int(block["seed"]),
        antithetic=bool(block.get("antithetic", False)),
        keep_paths=bool(block.get("keep_paths", False)),
    )
    batch = sim.simulate_solution(sol, cfg)
    est = sim.estimate_J(batch, criterion)
    t0, x0 = criterion.t0, criterion.x0
    v_ref, g_ref = sol.V(t0, x0), sol.g(t0, x0)
    j_ok = abs(est.j_hat - v_ref) <= 3.0 * est.standard_error_j
    g_ok = abs(est.mean_hat - g_ref) <= 3.0 * est.standard_error_mean
    em.say(f"paths                {est.n_paths} (dt {batch.dt:.3g}, {batch.n_steps} steps, seed {cfg.seed})")
    em.say(f"J estimate           {est.j_hat:.8f} +- {est.standard_error_j:.2e}")
    em.say(f"V(t0, x0)            {v_ref:.8f}   |diff| {abs(est.j_hat - v_ref):.2e}  "
           f"{'PASS' if j_ok else 'FAIL'}")
    em.say(f"mean X_T             {est.mean_hat:.8f} +- {est.standard_error_mean:.2e}")
    em.say(f"g(t0, x0)            {g_ref:.8f}   |diff| {abs(est.mean_hat - g_ref):.2e}  "
           f"{'PASS' if g_ok else 'FAIL'}")
    if block.get("spill"):
        target = (em.out_dir or Path(".")) / str(block["spill"])
        batch.spill(target)
        em.say(f"paths spilled to     {target}")
    em.payload("simulate", {
        "result": {
            "ok": bool(j_ok and g_ok),
            "estimate": est.to_json_dict(),
            "V": v_ref,
            "g": g_ref,
            "dt_effective": batch.dt,
            "n_steps": batch.n_steps,
        }
    })
    return EXIT_OK if (j_ok and g_ok) else EXIT_CHECK_FAILED


def cmd_perturb(doc: dict, em: Emitter) -> int:
    uset, criterion, jumps, sol = _solve_from_doc(doc, em)
    block = _block(doc, "perturb",
                   {"h_list", "w_samples", "u_samples", "n_paths", "dt", "seed",
                    "mode", "base_scale"},
                   {"h_list", "w_samples", "u_samples", "n_paths", "dt", "seed"})
    cfg = sim.SimConfig(n_paths=int(block["n_paths"]), dt=float(block["dt"]),
                        seed=int(block["seed"]))
    h_list = [float(h) for h in block["h_list"]]
    mode = block.get("mode", "both")
    base_scale = block.get("base_scale")
    base = None if base_scale is None else float(base_scale) * sol.alpha_coef

    reports = {}
    if mode in ("both", "worst_case"):
        reports["worst_case"] = sim.perturb_worst_case(
            sol, uset, h_list, u_samples=int(block["u_samples"]), cfg=cfg)
    if mode in ("both", "equilibrium"):
        reports["equilibrium"] = sim.perturb_equilibrium(
            sol, uset, h_list, w_samples=int(block["w_samples"]),
            u_samples=int(block["u_samples"]), cfg=cfg, base_strategy=base)

    ok = all(rep.ok for rep in reports.values())
    for name, rep in reports.items():
        em.say(f"{name:<12} J(base) {rep.j_base:.6f} +- {rep.se_base:.2e}  "
               f"{'PASS' if rep.ok else 'FAIL'}")
        for h, q in sorted(rep.per_h_extreme().items()):
            word = "min" if rep.kind == "equilibrium" else "max"
            em.say(f"  h {h:<8g} {word} quotient {q:+.6f}")
        for row in rep.violations:
            em.say(f"  VIOLATION h={row.h:g} {row.detail}: quotient {row.quotient:+.6f} "
                   f"(3 se/h = {3 * row.se / row.h:.6f})")
    em.payload("perturb", {
        "result": {
            "ok": ok,
            **{name: rep.to_json_dict() for name, rep in reports.items()},
        }
    })
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


_COMMANDS = {
    "worst-case": cmd_worst_case,
    "strategy": cmd_strategy,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "perturb": cmd_perturb,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="robust-mv",
        description="Robust dynamic mean-variance: worst-case scenarios, "
                    "closed-form strategies, verification and simulation.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("file", help="problem file (strict JSON, version tag '1')")
    parser.add_argument("--out", help="directory for JSON/CSV artifacts")
    parser.add_argument("--quiet", action="store_true", help="suppress the text report")
    parser.add_argument("--json", action="store_true", help="print machine-readable JSON to stdout")
    args = parser.parse_args(argv)

    em = Emitter(args)
    try:
        doc = load_problem(args.file)
        return _COMMANDS[args.command](doc, em)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (AssumptionViolated, InvalidBounds, NotPositiveDefinite, NonBankruptcyViolated) as exc:
        print(f"model assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
