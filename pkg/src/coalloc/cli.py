"""Command-line front end: instance generation, exact and heuristic
solving, verification of the reference counterexamples, and evaluation
output as plot-ready CSV.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 size
guard. The default seed (0) can be overridden with the COALLOC_SEED
environment variable.
"""

from __future__ import annotations

import csv
import glob
import json
import os
import sys
import time
from dataclasses import replace
from fractions import Fraction

import click
import numpy as np

from . import jsonio, mps, setcover, vrp
from .games import SizeGuardError, coalition, members

EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_GUARD = 3


def _default_seed() -> int:
    return int(os.environ.get("COALLOC_SEED", "0"))


def _report(**fields) -> None:
    """One JSON run report on stdout; every listed file exists."""
    for path in fields.get("outputs", []):
        assert os.path.exists(path), path
    click.echo(json.dumps(fields, indent=1, default=str))


def _fail_input(msg: str) -> None:
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_INPUT)


@click.group()
def main() -> None:
    """Cost allocation for cooperative games."""


# ---------------------------------------------------------------------------
# exact


@main.command()
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["nucleolus", "happy"]),
              default="nucleolus", show_default=True)
@click.option("--fractional", is_flag=True,
              help="For set-cover input: use optimal fractional cover costs.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--verbose", is_flag=True, help="Print the stage trace.")
def exact(input, mode, fractional, out, verbose):
    """Exact (happy) nucleolus of a game file (type auto-detected)."""
    t0 = time.time()
    try:
        schema = jsonio.detect_schema(input)
    except (ValueError, json.JSONDecodeError) as exc:
        _fail_input(str(exc))
    try:
        if schema == "vrp":
            if fractional:
                _fail_input("--fractional applies to set-cover input only")
            if mode != "happy":
                _fail_input("exact vehicle-routing allocations support "
                            "--mode happy only (coalition costs of the full "
                            "game are partition optima, out of exact reach)")
            inst = vrp.load(input)
            y = vrp.exact_happy_nucleolus_smallcap(inst)
            values, is_exact, trace = list(y), False, []
        else:
            if schema == "setcover":
                sc_inst = setcover.load(input)
                game = (setcover.fractional_game(sc_inst) if fractional
                        else setcover.game(sc_inst))
            else:
                if fractional:
                    _fail_input("--fractional applies to set-cover input only")
                game = jsonio.load_explicit_game(input)
            y, trace = mps.mps_run(game, mode=mode)
            values, is_exact = list(y), True
    except SizeGuardError as exc:
        click.echo(f"size guard: {exc}", err=True)
        sys.exit(EXIT_GUARD)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        _fail_input(str(exc))
    if verbose:
        for i, st in enumerate(trace, 1):
            fixed = [list(members(s)) for s in st.fixed]
            click.echo(f"stage {i}: xi={jsonio.format_rational(st.xi)} "
                       f"rank={st.rank} fixed={fixed}")
    outputs = []
    if out:
        jsonio.save_allocation(out, values, exact=is_exact)
        outputs.append(out)
    _report(command="exact", input=input, mode=mode, schema=schema,
            fractional=fractional, stages=len(trace),
            allocation=[jsonio.format_rational(v) if is_exact else float(v)
                        for v in values],
            wall_time_s=round(time.time() - t0, 3), outputs=outputs)


# ---------------------------------------------------------------------------
# verify-paper


def _claims(perturb: int, corrupt: bool):
    """The counterexample battery as (name, thunk) pairs; each thunk
    returns True on success."""
    F = Fraction
    tri = setcover.game(setcover.fixture("triangle"))
    nine_inst = setcover.fixture("three_triangles")
    nine = setcover.game(nine_inst)
    six_inst = setcover.fixture("frac_dominated")
    if corrupt:
        six_inst = setcover.with_set_cost(six_inst, 0, 11)
    fam9 = mps.default_family(9)

    def triangle_values():
        y, _ = mps.mps_run(tri)
        yh, _ = mps.mps_run(tri, mode="happy")
        return y == (F(2, 3),) * 3 and yh == (F(1, 2),) * 3

    def nine_happy():
        yh, _ = mps.mps_run(nine, mode="happy")
        return (yh == (F(1, 2),) * 9
                and mps.total_value(nine, fam9, "happy") == F(9, 2))

    def nine_nucleolus():
        y, _ = mps.mps_run(nine)
        want = tuple(F(3, 5) if p in (0, 1, 2, 6, 7, 8) else F(7, 15)
                     for p in range(9))
        return y == want

    def nine_least_core():
        eps, _ = mps.least_core(nine, fam9)
        return eps == F(2, 5)

    def nine_outside_extended_happy_core():
        y, _ = mps.mps_run(nine)
        ok, _ = mps.core_membership(nine, y, fam9, "extended_happy_core")
        return not ok

    def six_fractional():
        a = setcover.fractional_cost(six_inst, coalition([0, 1, 2]))
        b = setcover.fractional_cost(six_inst, coalition([3, 4, 5]))
        return a == 17 and b == 17

    def six_happy_split():
        yh, _ = mps.mps_run(setcover.game(six_inst), mode="happy")
        return yh == tuple(F(16, 3) if p % 2 else F(14, 3) for p in range(6))

    def six_fractional_nucleolus():
        y, _ = mps.mps_run(setcover.fractional_game(six_inst))
        return y == (F(5),) * 6

    def six_sensitivity():
        base, _ = mps.mps_run(setcover.game(six_inst), mode="happy")
        for cost in (17, 19):
            bumped = setcover.with_set_cost(six_inst, 9, cost)
            y, _ = mps.mps_run(setcover.game(bumped), mode="happy")
            if y == base:
                return False
        up = setcover.with_set_cost(six_inst, 9, 19)
        y, _ = mps.mps_run(setcover.fractional_game(up))
        return y == (F(5),) * 6

    out = [
        ("triangle nucleolus 2/3, happy nucleolus 1/2", triangle_values),
        ("nine players: happy nucleolus 1/2 at total 9/2", nine_happy),
        ("nine players: nucleolus 3/5 and 7/15", nine_nucleolus),
        ("nine players: least-core epsilon 2/5", nine_least_core),
        ("nine players: nucleolus outside the extended happy core",
         nine_outside_extended_happy_core),
        ("six players: both triples fractional cost 17", six_fractional),
        ("six players: happy nucleolus splits 5 +/- 1/3", six_happy_split),
        ("six players: fractional-game nucleolus 5", six_fractional_nucleolus),
    ]
    if perturb:
        out.append(("six players: happy nucleolus moves under +/-1 cost "
                    "change, fractional nucleolus stays", six_sensitivity))
    return out


@main.command("verify-paper")
@click.option("--perturb", type=int, default=1, show_default=True,
              help="0 skips the cost-perturbation sensitivity claim.")
@click.option("--corrupt", is_flag=True, hidden=True,
              help="Test hook: corrupt a fixture to force a failure.")
def verify_paper(perturb, corrupt):
    """Run the counterexample battery; PASS/FAIL per claim."""
    t0 = time.time()
    failed = []
    for name, thunk in _claims(perturb, corrupt):
        ok = thunk()
        click.echo(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failed.append(name)
    _report(command="verify-paper", claims=len(_claims(perturb, corrupt)),
            failed=failed, wall_time_s=round(time.time() - t0, 3), outputs=[])
    if failed:
        sys.exit(EXIT_VERIFY)


# ---------------------------------------------------------------------------
# gen


@main.command()
@click.option("--n", type=int, required=True)
@click.option("--capacity", type=int, required=True)
@click.option("--seed", type=int, default=None,
              help="Defaults to COALLOC_SEED or 0.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen(n, capacity, seed, out):
    """Write a random Euclidean vehicle-routing instance as JSON."""
    seed = _default_seed() if seed is None else seed
    t0 = time.time()
    try:
        inst = vrp.random_instance(n, capacity, seed)
    except ValueError as exc:
        _fail_input(str(exc))
    vrp.save(inst, out)
    _report(command="gen", n=n, capacity=capacity, seed=seed,
            wall_time_s=round(time.time() - t0, 3), outputs=[out])


# ---------------------------------------------------------------------------
# heuristic


@main.command()
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--iterations", type=int, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--post-opt-start", type=int, default=None)
@click.option("--prune-age", type=int, default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--seed", type=int, default=None,
              help="Defaults to COALLOC_SEED or 0.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--trace", type=click.Path(dir_okay=False), default=None,
              help="Convergence CSV (iteration, rel change, pool size, xi).")
def heuristic(input, out, trace, seed, **flags):
    """Approximate happy nucleolus of a vehicle-routing instance."""
    t0 = time.time()
    try:
        if jsonio.detect_schema(input) != "vrp":
            _fail_input(f"{input} is not a vehicle-routing instance")
        inst = vrp.load(input)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail_input(str(exc))
    overrides = {k: v for k, v in flags.items() if v is not None}
    if seed is not None:
        overrides["seed"] = seed
    elif "COALLOC_SEED" in os.environ:
        overrides["seed"] = _default_seed()
    try:
        config = replace(vrp.HeuristicConfig(), **overrides)
    except ValueError as exc:
        _fail_input(str(exc))
    y, records = vrp.run_heuristic(inst, config)
    outputs = []
    if out:
        jsonio.save_allocation(out, y, exact=False)
        outputs.append(out)
    if trace:
        _write_trace(trace, records)
        outputs.append(trace)
    _report(command="heuristic", input=input, seed=config.seed,
            iterations=len(records),
            final_rel_change=records[-1].l1_rel_change,
            pool_size=records[-1].pool_size, total=float(y.sum()),
            wall_time_s=round(time.time() - t0, 3), outputs=outputs)


def _write_trace(path: str, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "l1_rel_change", "pool_size", "xi_final"])
        for r in records:
            w.writerow([r.index, repr(r.l1_rel_change), r.pool_size,
                        repr(r.xi_final)])


# ---------------------------------------------------------------------------
# eval


def _load_reference(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        return np.load(path)
    return np.array([float(v) for v in jsonio.load_allocation(path)])


@main.command("eval")
@click.argument("instances", type=click.Path(exists=True, file_okay=False))
@click.option("--exact-ref", type=click.Path(file_okay=False), default=None,
              help="Directory of reference allocations (<stem>.json/.npy); "
                   "instances without one are evaluated convergence-only.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--bin-width", type=float, default=0.01, show_default=True,
              help="Relative-error histogram bin width.")
@click.option("--seed", type=int, default=None,
              help="Defaults to COALLOC_SEED or 0.")
def eval_cmd(instances, exact_ref, out, bin_width, seed):
    """Run the heuristic over a directory of instances; emit per-player
    relative-error histogram and convergence CSVs."""
    t0 = time.time()
    seed = _default_seed() if seed is None else seed
    files = sorted(glob.glob(os.path.join(instances, "*.json")))
    if not files:
        _fail_input(f"no instance files in {instances}")
    os.makedirs(out, exist_ok=True)
    config = replace(vrp.HeuristicConfig(), seed=seed)
    errors: list[float] = []
    outputs = []
    skipped = []
    last_changes = {}
    for path in files:
        stem = os.path.splitext(os.path.basename(path))[0]
        try:
            inst = vrp.load(path)
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            _fail_input(f"{path}: {exc}")
        y, records = vrp.run_heuristic(inst, config)
        trace_path = os.path.join(out, f"{stem}_trace.csv")
        _write_trace(trace_path, records)
        outputs.append(trace_path)
        last_changes[stem] = records[-1].l1_rel_change
        ref = None
        if exact_ref:
            for ext in (".json", ".npy"):
                cand = os.path.join(exact_ref, stem + ext)
                if os.path.exists(cand):
                    ref = _load_reference(cand)
                    break
        if ref is None:
            skipped.append(stem)
            continue
        if len(ref) != inst.n:
            _fail_input(f"reference for {stem} has {len(ref)} players, "
                        f"instance has {inst.n}")
        errors.extend((np.abs(y - ref) / np.abs(ref)).tolist())
    stats = {}
    if errors:
        arr = np.array(errors)
        hist_path = os.path.join(out, "error_histogram.csv")
        edges = np.arange(0.0, arr.max() + bin_width, bin_width)
        counts, edges = np.histogram(arr, bins=edges if len(edges) > 1
                                     else 1)
        with open(hist_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_low", "bin_high", "count"])
            for lo, hi, cnt in zip(edges[:-1], edges[1:], counts):
                w.writerow([repr(float(lo)), repr(float(hi)), int(cnt)])
        outputs.append(hist_path)
        stats = {"mean_rel_error": float(arr.mean()),
                 "median_rel_error": float(np.median(arr)),
                 "max_rel_error": float(arr.max())}
    if skipped:
        click.echo(f"no reference for: {', '.join(skipped)} "
                   "(convergence only)", err=True)
    _report(command="eval", seed=seed, instances=len(files),
            evaluated=len(files) - len(skipped),
            last_rel_change=last_changes, **stats,
            wall_time_s=round(time.time() - t0, 3), outputs=outputs)


if __name__ == "__main__":
    main()
