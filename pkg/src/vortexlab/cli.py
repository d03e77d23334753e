"""Command-line front end.

    vortexlab [--config PATH] [--out DIR] [--seed N] [--quiet] COMMAND ...

Commands: critical, flow, bvp, morse, audit, check-h.  Exit codes: 0
success, 2 configuration or stability error, 3 I/O error, 4 search failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io as vio
from .config import ConfigError, ProblemConfig
from .flow import finite, pde
from .flow.bvp import FlowLineSearchError, action_profile, find_flow_line, gauge_equivalent
from .gaugefix import compute_coulomb_data, coulomb_project
from .group_action import check_hypothesis_H
from .loopspace import (
    GaugeTransform,
    critical_residual,
    enumerate_vortex_critical,
    gauge_apply,
    parse_label,
    require_circle,
    vortex_critical_point,
)
from .morse.complex import principle_check
from .morse.sphere import CountingError, build_sphere_demo

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SEARCH = 4


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class _Printer:
    def __init__(self, quiet):
        self.quiet = quiet

    def __call__(self, *args):
        if not self.quiet:
            print(*args)


def _label_str(label):
    m, sign = label
    return f"{m},{'+' if sign > 0 else '-'}"


def _write_config(out: Path, config: ProblemConfig):
    vio.write_json(out / "config.json", {"config": config.to_dict(), "config_hash": config.config_hash})


# --- critical ----------------------------------------------------------------


def cmd_critical(config: ProblemConfig, m_min, m_max, out=None, quiet=False):
    say = _Printer(quiet)
    try:
        require_circle(config.action)
    except ValueError as exc:
        raise CommandError(f"config key 'action': {exc}", EXIT_CONFIG) from exc
    H = config.hamiltonian
    rows = []
    for cp in enumerate_vortex_critical(config.action, m_min, m_max, config.nt):
        rows.append({
            "label": cp.label_str,
            "m": cp.m,
            "sign": cp.sign,
            "action": cp.action_value,
            "residual": critical_residual(config.action, cp.path, H),
        })
    say(f"{'label':>8} {'action':>22} {'residual':>12}")
    for r in rows:
        say(f"{r['label']:>8} {r['action']:>22.16g} {r['residual']:>12.3e}")
    result = {"schema": vio.SCHEMA, "command": "critical", "nt": config.nt, "m_min": m_min,
              "m_max": m_max, "points": rows}
    if out is not None:
        out = Path(out)
        _write_config(out, config)
        vio.write_json(out / "critical.json", result)
    return result


# --- flow ------------------------------------------------------------------------


def _initial_path(config: ProblemConfig, initial, perturbation, seed):
    try:
        label = parse_label(initial)
    except (ValueError, KeyError):
        label = None
    if label is not None:
        try:
            path = vortex_critical_point(config.action, label[0], label[1], config.nt).path
        except ValueError as exc:
            raise CommandError(f"config key 'action': {exc}", EXIT_CONFIG) from exc
    else:
        try:
            path = vio.load_path(initial)
        except OSError as exc:
            raise CommandError(f"cannot read initial path {initial}: {exc}", EXIT_IO) from exc
        except ValueError as exc:
            raise CommandError(f"malformed initial path {initial}: {exc}", EXIT_CONFIG) from exc
    if perturbation:
        path = pde.perturb(path, np.random.default_rng(seed), amplitude=perturbation)
    return path


def _snapshot_writer(out: Path, config: ProblemConfig, H, action_start):
    def write(state):
        proj, _ = coulomb_project(config.action, state.path)
        d = vio.snapshot_dict(state, config.config_hash, compute_coulomb_data(config.action, proj, H).to_dict())
        d["action_start"] = action_start
        vio.write_json(out / "snapshots" / f"snapshot_{state.step_index:07d}.json", d)

    return write


def cmd_flow(config: ProblemConfig, initial="1,+", out=None, perturbation=None, resume=None, quiet=False):
    """Run a temporal-gauge flow and write the run directory."""
    say = _Printer(quiet)
    system = config.system
    H = config.hamiltonian
    settings = config.flow_settings()
    if perturbation is None:
        perturbation = config.data["solver"]["perturbation"]
    action_start = None
    if resume is not None:
        try:
            snap = vio.read_json(resume)
        except OSError as exc:
            raise CommandError(f"cannot read snapshot {resume}: {exc}", EXIT_IO) from exc
        try:
            start = vio.state_from_snapshot(snap, config.config_hash)
        except (ValueError, KeyError) as exc:
            raise CommandError(f"snapshot {resume}: {exc}", EXIT_CONFIG) from exc
        action_start = snap.get("action_start")
    else:
        start = _initial_path(config, initial, perturbation, config.seed)
    start_path = start.path if isinstance(start, pde.FlowState) else start
    if action_start is None:
        action_start = pde.system_action(system, start_path, H)
    writer = None
    if out is not None:
        out = Path(out)
        _write_config(out, config)
        writer = _snapshot_writer(out, config, H, action_start)
    try:
        res = pde.run_flow(start, system, H, config.jfamily, settings, snapshot=writer, start_action=action_start)
    except pde.FlowInstability as exc:
        raise CommandError(f"config key 'grid.ds': {exc}", EXIT_CONFIG) from exc
    summary = {"schema": vio.SCHEMA, "command": "flow", "kind": "pde", "system": system.kind,
               "config_hash": config.config_hash, **res.summary()}
    if out is not None:
        vio.write_csv(out / "trajectory.csv", ["s", "E", "gradient_norm"],
                      [[float(s), float(e), float(g)] for s, e, g in res.history])
        index = []
        for s, p in res.samples:
            # named by step so a resumed run writes the same file for the same s
            name = f"paths/path_{int(round(s / settings.ds)):07d}.csv"
            vio.write_path_csv(out / name, p)
            index.append([float(s), name])
        summary["paths"] = index
        vio.write_json(out / "summary.json", summary)
    say(f"terminal: {res.terminal}  label: {summary['terminal_label']}  s = {res.state.s:.6g}")
    say(f"E = {res.E:.12g}   action drop = {summary['action_drop']:.12g}")
    if res.terminal == pde.DIVERGED:
        say(f"flow diverged: {res.message}")
        raise CommandError(f"config key 'grid.ds': {res.message}", EXIT_CONFIG)
    return summary


def cmd_flow_finite(problem_name="double-well", out=None, ds=1e-3, x0=None, tol=1e-10, s_max=60.0,
                    quiet=False):
    """Finite-dimensional flow line; the default is the full orbit from 0 to 1."""
    say = _Printer(quiet)
    if problem_name != "double-well":
        raise CommandError(f"unknown finite problem {problem_name!r}", EXIT_CONFIG)
    prob = finite.MorseProblem.double_well()
    if x0 is None:
        traj = finite.connecting_orbit(prob, [1.0 / math.sqrt(2.0)], ds, s_max, tol)
    else:
        traj = finite.integrate_flow_line(prob, [float(x0)], 1, ds, s_max, tol)
    summary = {"schema": vio.SCHEMA, "command": "flow", "kind": "finite", "problem": "double_well",
               "ds": ds, "terminal": traj.terminal, "samples": len(traj),
               "x_start": traj.x[0].tolist(), "x_end": traj.x[-1].tolist()}
    if out is not None:
        out = Path(out)
        vio.write_csv(out / "trajectory.csv", ["s", "x1"], [[float(s), float(x[0])] for s, x in zip(traj.s, traj.x)])
        vio.write_json(out / "summary.json", summary)
    say(f"finite flow: {traj.terminal}, {len(traj)} samples, x: {traj.x[0][0]:.3e} -> {traj.x[-1][0]:.12g}")
    return summary


# --- bvp ---------------------------------------------------------------------------


def cmd_bvp(config: ProblemConfig, from_label="1,+", to_labels=None, seeds=None, out=None, quiet=False):
    """Search flow lines from one critical component to adjacent ones."""
    say = _Printer(quiet)
    act = config.action
    try:
        require_circle(act)
    except ValueError as exc:
        raise CommandError(f"config key 'action': {exc}", EXIT_CONFIG) from exc
    try:
        src = parse_label(from_label)
        if to_labels is None:
            targets = [(src[0] - 1, 1), (src[0] - 1, -1)]
        else:
            targets = [parse_label(t) for t in to_labels]
    except (ValueError, KeyError) as exc:
        raise CommandError(f"bad label: {exc}", EXIT_CONFIG) from exc
    if any(t == src for t in targets):
        raise CommandError("source and target coincide; a flow line needs positive energy", EXIT_CONFIG)
    seeds = [config.seed] if not seeds else list(seeds)
    H = config.hamiltonian
    settings = config.bvp_settings()
    c_minus = vortex_critical_point(act, src[0], src[1], config.nt).path
    lines = []
    failures = []
    best = math.inf
    for tgt in targets:
        c_plus = vortex_critical_point(act, tgt[0], tgt[1], config.nt).path
        for seed in seeds:
            try:
                line = find_flow_line(act, c_minus, c_plus, H, seed, settings)
            except FlowLineSearchError as exc:
                best = min(best, exc.best_residual)
                failures.append({"target": _label_str(tgt), "seed": seed, "message": str(exc),
                                 "best_residual": exc.best_residual})
                say(f"{from_label} -> {_label_str(tgt)} seed {seed}: failed ({exc})")
                continue
            lines.append((tgt, seed, line))
            say(f"{from_label} -> {_label_str(tgt)} seed {seed}: E = {line.energy:.10g} "
                f"(action drop {line.action_drop:.10g}, rel. err {line.energy_error:.2e}), "
                f"residual {line.residual:.2e}, method {line.method}")
    n = len(lines)
    equiv = [[gauge_equivalent(lines[i][2], lines[j][2], act) if i != j else True for j in range(n)]
             for i in range(n)]
    positive = [i for i in range(n) if 0 < lines[i][2].energy < math.inf]
    distinct = _max_pairwise_inequivalent(positive, equiv)
    success = len(distinct) >= 2
    if n:
        say("gauge-equivalence matrix:")
        for i in range(n):
            say("  " + " ".join("T" if e else "F" for e in equiv[i]))
    say(f"non-equivalent positive-energy solutions: {len(distinct)}; success: {success}")
    result = {
        "schema": vio.SCHEMA, "command": "bvp", "source": _label_str(src),
        "targets": [_label_str(t) for t in targets], "seeds": seeds,
        "solutions": [{"target": _label_str(t), "seed": s, **line.summary(),
                       "max_action_increase": float(np.max(np.diff(action_profile(line, act, H))))}
                      for t, s, line in lines],
        "failures": failures, "gauge_equivalent": equiv, "success": success,
    }
    if out is not None:
        out = Path(out)
        _write_config(out, config)
        for j, (t, s, line) in enumerate(lines):
            prof = []
            for i in range(len(line.s)):
                p = line.path(i)
                prof.append([float(line.s[i]), float(np.mean(p.eta)), float(np.min(np.abs(p.v))),
                             float(np.real(p.v[0, 0])), float(np.real(p.v[-1, 0]))])
            vio.write_csv(out / f"solution_{j:02d}.csv", ["s", "eta_mean", "min_abs_v", "re_v_t0", "re_v_t1"], prof)
        vio.write_json(out / "bvp.json", result)
    if not lines:
        raise CommandError(f"no flow line found; best residual {best:.3e}", EXIT_SEARCH)
    return result


def _max_pairwise_inequivalent(indices, equiv):
    chosen = []
    for i in indices:
        if all(not equiv[i][j] for j in chosen):
            chosen.append(i)
    return chosen


# --- morse -----------------------------------------------------------------------------


def cmd_morse(l1, l2, l3, resolution=256, check_doubling=True, out=None, quiet=False):
    say = _Printer(quiet)
    try:
        demo, cover, quotient, counts = build_sphere_demo(l1, l2, l3, resolution)
    except ValueError as exc:
        raise CommandError(str(exc), EXIT_CONFIG) from exc
    except CountingError as exc:
        raise CommandError(str(exc), EXIT_SEARCH) from exc
    stable = None
    if check_doubling:
        stable = build_sphere_demo(l1, l2, l3, 2 * resolution)[3] == counts
    hc = cover.homology_ranks()
    hq = quotient.homology_ranks()
    orbit_counts = {
        "[e3]->[e2]": counts[("+e3", "+e2")] + counts[("+e3", "-e2")],
        "[e2]->[e1]": counts[("+e2", "+e1")] + counts[("+e2", "-e1")],
    }
    verdict = principle_check(sum(hc), sum(hq), 2)
    say(f"eigenvalues: {demo.eigenvalues}")
    say("flow-line counts (cover):")
    for (a, b), c in counts.items():
        say(f"  {a} -> {b}: {c}")
    for key, c in orbit_counts.items():
        say(f"  orbit {key}: {c} (mod 2: {c % 2})")
    say(f"{'':10}{'chain ranks':>14}{'homology ranks':>18}{'total':>8}")
    say(f"{'cover':10}{str(cover.chain_ranks()):>14}{str(hc):>18}{sum(hc):>8}")
    say(f"{'quotient':10}{str(quotient.chain_ranks()):>14}{str(hq):>18}{sum(hq):>8}")
    say(f"chain-rank relation: {cover.total_chain_rank()} = 2 x {quotient.total_chain_rank()}: "
        f"{'ok' if cover.total_chain_rank() == 2 * quotient.total_chain_rank() else 'FAILED'}")
    say(f"∂² = 0: {'ok' if cover.is_complex() and quotient.is_complex() else 'FAILED'}")
    if stable is not None:
        say(f"counts stable under doubled shooting resolution: {'yes' if stable else 'NO'}")
    say(f"principle: {sum(hc)} != 2 x {sum(hq)} -> "
        f"{'a flow line of positive energy exists' if verdict else 'no conclusion'}")
    result = {
        "schema": vio.SCHEMA, "command": "morse", "eigenvalues": list(demo.eigenvalues),
        "counts": {f"{a}->{b}": c for (a, b), c in counts.items()},
        "orbit_counts": orbit_counts,
        "cover": {"chain_ranks": cover.chain_ranks(), "homology_ranks": hc, "total": sum(hc),
                  "complex": cover.to_dict()},
        "quotient": {"chain_ranks": quotient.chain_ranks(), "homology_ranks": hq, "total": sum(hq),
                     "complex": quotient.to_dict()},
        "boundary_squared_zero": cover.is_complex() and quotient.is_complex(),
        "counts_stable_under_doubling": stable,
        "principle": verdict,
    }
    if out is not None:
        vio.write_json(Path(out) / "morse.json", result)
    return result


# --- audit ------------------------------------------------------------------------------


def _audit_finite(run: Path, summary):
    header, data = vio.read_csv(run / "trajectory.csv")
    if header[0] != "s" or data.shape[0] < 1:
        raise ValueError("trajectory.csv must start with an s column")
    prob = finite.MorseProblem.double_well()
    s = data[:, 0]
    ds = float(summary["ds"])
    traj = finite.Trajectory(s, data[:, 1:], summary["terminal"], ds)
    audit = finite.bogomolnyi_audit(traj, prob)
    el = finite.euler_lagrange_residual(traj, prob) if len(traj) >= 3 else 0.0
    return {"kind": "finite", "E": audit["E"], "delta_f": audit["delta_f"],
            "selfdual": audit["selfdual_" + audit["sign"]], "bogomolnyi_residual": audit["residual"],
            "euler_lagrange_residual": el, "samples": len(traj)}


def _audit_pde(run: Path, summary, config: ProblemConfig, seed):
    system = config.system
    H = config.hamiltonian
    paths = [(float(s), vio.read_path_csv(run / name)) for s, name in summary["paths"]]
    actions = [pde.system_action(system, p, H) for _, p in paths]
    increases = [b - a for a, b in zip(actions, actions[1:])]
    E = float(summary["E"])
    drop = float(summary["action_start"]) - actions[-1]
    abs_err = abs(E - drop)
    rel_err = abs_err / abs(drop) if abs(drop) > 1e-12 else 0.0
    # gauge spot check: A(h0 p) - A(p) is the same number for every sample
    rng = np.random.default_rng(seed)
    nt = paths[0][1].nt
    t = np.linspace(0.0, 1.0, nt + 1)
    xi = np.outer(np.sin(np.pi * t), rng.normal(size=config.action.k)) * 0.5
    h0 = GaugeTransform(xi, config.action)
    shifts = [pde.system_action(system, gauge_apply(h0, p), H) - a for (_, p), a in zip(paths, actions)]
    spread = float(np.max(shifts) - np.min(shifts)) if H is None or H.invariant else None
    return {"kind": "pde", "E": E, "action_start": float(summary["action_start"]), "action_end": actions[-1],
            "action_drop": drop, "energy_abs_error": abs_err, "energy_rel_error": rel_err,
            "max_action_increase": max(increases) if increases else 0.0,
            "gauge_shift_spread": spread, "samples": len(paths), "terminal": summary.get("terminal")}


def cmd_audit(run_dir, config: ProblemConfig | None = None, seed=0, out=None, quiet=False):
    say = _Printer(quiet)
    run = Path(run_dir)
    try:
        summary = vio.read_json(run / "summary.json")
    except OSError as exc:
        raise CommandError(f"cannot read {run / 'summary.json'}: {exc}", EXIT_IO) from exc
    except ValueError as exc:
        raise CommandError(f"malformed summary.json: {exc}", EXIT_CONFIG) from exc
    try:
        if summary.get("kind") == "finite":
            report = _audit_finite(run, summary)
        elif summary.get("kind") == "pde":
            if config is None:
                cfg = vio.read_json(run / "config.json")
                config = ProblemConfig.from_dict(cfg["config"])
            report = _audit_pde(run, summary, config, seed)
        else:
            raise ValueError(f"unknown trajectory kind {summary.get('kind')!r}")
    except OSError as exc:
        raise CommandError(f"cannot read trajectory files: {exc}", EXIT_IO) from exc
    except (ValueError, KeyError, IndexError) as exc:
        raise CommandError(f"malformed trajectory files: {exc}", EXIT_CONFIG) from exc
    report = {"schema": vio.SCHEMA, "command": "audit", **report}
    for key, value in report.items():
        if key not in ("schema", "command"):
            say(f"{key:>26}: {value}")
    if out is not None:
        vio.write_json(Path(out) / "audit.json", report)
    return report


# --- check-h -----------------------------------------------------------------------------


def cmd_check_h(config: ProblemConfig, samples=32, radius=1.0, out=None, quiet=False):
    say = _Printer(quiet)
    rep = check_hypothesis_H(config.action, samples, radius, np.random.default_rng(config.seed))
    d = {"schema": vio.SCHEMA, "command": "check-h", **rep.to_dict()}
    for key, value in d.items():
        if key not in ("schema", "command"):
            say(f"{key:>22}: {value}")
    if out is not None:
        vio.write_json(Path(out) / "check_h.json", d)
    return d


# --- argument parsing ------------------------------------------------------------------------


def _global_options(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON problem configuration")
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--seed", type=int, default=default, help="override solver.seed")
    parser.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser():
    parser = argparse.ArgumentParser(prog="vortexlab", description=__doc__.splitlines()[0])
    _global_options(parser, False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("critical", help="enumerate circle-case critical points")
    p.add_argument("--m-min", type=int, default=-2)
    p.add_argument("--m-max", type=int, default=2)

    p = sub.add_parser("flow", help="run a temporal-gauge flow (or a finite-dimensional one)")
    p.add_argument("--initial", default="1,+", help="critical label 'm,+' or a path file (.csv/.json)")
    p.add_argument("--perturb", type=float, default=None, help="perturbation amplitude")
    p.add_argument("--resume", default=None, help="snapshot JSON to resume from")
    p.add_argument("--finite", default=None, choices=["double-well"], help="finite-dimensional problem")
    p.add_argument("--ds", type=float, default=1e-3, help="step for --finite")
    p.add_argument("--x0", type=float, default=None, help="start point for --finite")

    p = sub.add_parser("bvp", help="search connecting flow lines")
    p.add_argument("--from", dest="from_label", default="1,+")
    p.add_argument("--to", dest="to_labels", action="append", default=None)
    p.add_argument("--seeds", type=int, nargs="*", default=None)

    p = sub.add_parser("morse", help="sphere / projective-plane rank principle")
    p.add_argument("eigenvalues", type=float, nargs=3)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--no-doubling", action="store_true")

    p = sub.add_parser("audit", help="audit a trajectory directory")
    p.add_argument("trajectory_dir")

    p = sub.add_parser("check-h", help="check the hypothesis on the configured action")
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--radius", type=float, default=1.0)

    for sp in sub.choices.values():
        _global_options(sp, True)
    return parser


def _load_config(args):
    cfg = ProblemConfig.load(args.config) if args.config else ProblemConfig.from_dict({})
    if args.seed is not None:
        cfg = cfg.with_overrides(solver={"seed": args.seed})
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    quiet = bool(args.quiet)
    try:
        config = _load_config(args)
        out = Path(args.out) if args.out else None
        default_out = Path(config.data["output"]["dir"]) / args.command
        if args.command == "critical":
            cmd_critical(config, args.m_min, args.m_max, out or default_out, quiet)
        elif args.command == "flow":
            if args.finite:
                cmd_flow_finite(args.finite, out or default_out, args.ds, args.x0, quiet=quiet)
            else:
                cmd_flow(config, args.initial, out or default_out, args.perturb, args.resume, quiet)
        elif args.command == "bvp":
            res = cmd_bvp(config, args.from_label, args.to_labels, args.seeds, out or default_out, quiet)
            if not res["success"]:
                return EXIT_SEARCH
        elif args.command == "morse":
            cmd_morse(*args.eigenvalues, resolution=args.resolution, check_doubling=not args.no_doubling,
                      out=out, quiet=quiet)
        elif args.command == "audit":
            cmd_audit(args.trajectory_dir, config if args.config else None, config.seed, out, quiet)
        elif args.command == "check-h":
            cmd_check_h(config, args.samples, args.radius, out, quiet)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
