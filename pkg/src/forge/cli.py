"""``forge`` command line."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from forge import experiments as ex
from forge.continuum import continuum_residual, integrate_schrodinger, interpolate_controls
from forge.graph import generate_regular_graph, load_instance, save_instance
from forge.io import ExperimentConfig, derive_seed, load_config, write_csv, write_json, write_manifest
from forge.optimize.gradient import Problem
from forge.optimize.methods import METHODS, OptimizerOptions, run_method
from forge.quantum import AngleSchedule
from forge.spectral import digital_population_trace, instance_seeds

log = logging.getLogger("forge")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _hard_instances(args, cfg: ExperimentConfig):
    """Hard set from ``--instances`` (a directory written by ``forge screen``) or a fresh screen."""
    if getattr(args, "instances", None):
        paths = sorted(Path(args.instances).glob("hard_*.json"))
        if not paths:
            raise SystemExit(f"no hard_*.json instances in {args.instances}")
        return [load_instance(p) for p in paths][: cfg.n_hard]
    return ex.hard_set(ex.screen(cfg), cfg.n_hard)


def _schedule(path) -> AngleSchedule:
    data = json.loads(Path(path).read_text())
    if "schedule" in data:
        data = data["schedule"]
    return AngleSchedule.from_dict(data)


# --- commands -------------------------------------------------------------


def cmd_gen(args):
    out = _outdir(args)
    for i, s in enumerate(instance_seeds(args.seed, args.count)):
        inst = generate_regular_graph(args.n, args.degree, s, label=f"rr{args.degree}_n{args.n}_{i:03d}")
        save_instance(inst, out / f"instance_{i:03d}.json")
    print(f"{args.count} instances written to {out}")


def cmd_optimize(args):
    inst = load_instance(args.instance)
    opts = OptimizerOptions(args.gtol, args.ftol, args.max_iter)
    start = time.perf_counter()
    results = run_method(Problem(inst), args.method, args.pmax, seed=args.seed, nc=args.nc, n_r=args.nr,
                         alpha=args.alpha, r=args.R, opts=opts)
    wall = time.perf_counter() - start
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    best = results[max(results)]
    write_json(out, {"method": args.method, "instance": inst.label, "seed": args.seed,
                     "results": {str(p): r.to_dict() for p, r in sorted(results.items())},
                     "schedule": best.final_angles.to_dict()})
    # wall time is kept out of the payload so reruns stay byte-identical
    write_json(out.with_suffix(".timing.json"), {"wall_time": wall})
    print(f"{args.method} P={best.p} residual={best.residual:.6e} fidelity={best.fidelity:.6f}")


def cmd_screen(args):
    cfg = _config(args)
    out = _outdir(args)

    def progress(i, inst, scan):
        log.info("%3d %s gap=%.3e s*=%.4f", i, inst.label, scan.min_gap, scan.s_at_min)

    result = ex.screen(cfg, progress)
    result.write_cdf(out / "fig3.csv")
    files = ["fig3.csv"]
    write_json(out / "scans.json", [s.to_dict() for s in result.scans])
    files.append("scans.json")
    for i, inst in enumerate(ex.hard_set(result, cfg.n_hard)):
        name = f"hard_{i:02d}.json"
        save_instance(inst, out / name)
        files.append(name)
    write_manifest(out, cfg, "screen", files)
    print(f"{len(result.hard)} hard instances (gap <= {cfg.gap_threshold})")


def cmd_compare(args):
    cfg = _config(args)
    out = _outdir(args)
    rows = []
    payload = {}
    for inst in _hard_instances(args, cfg):
        cmp = ex.compare_methods(inst, cfg.p_list, cfg.methods, cfg.seed, cfg.n_r, cfg.nc_step, ex.options_from(cfg))
        rows.extend(cmp.rows())
        payload[inst.label] = {f"{m}_p{p}": r.to_dict() for (m, p), r in sorted(cmp.results.items())}
        payload[inst.label]["rank_agreement"] = cmp.rank_agreement()
    write_csv(out / "fig4.csv", ["instance", "method", "p", "residual", "infidelity", "n_evaluations"], rows)
    write_json(out / "fig4.json", payload)
    write_manifest(out, cfg, "compare", ["fig4.csv", "fig4.json"])


def cmd_populations(args):
    inst = load_instance(args.instance)
    trace = digital_population_trace(inst, _schedule(args.schedule), k=args.k, order=args.order)
    out = _outdir(args)
    trace.write_csv(out / "populations.csv")
    write_json(out / "populations.json", {**trace.to_dict(), **ex.sta_signature(trace)})
    print(ex.sta_signature(trace))


def cmd_transfer(args):
    cfg = _config(args)
    out = _outdir(args)
    insts = _hard_instances(args, cfg)
    if len(insts) < 2:
        raise SystemExit("transferability needs at least two hard instances")
    source, targets = insts[0], insts[1:]
    opts = ex.options_from(cfg)
    rows, reports = [], []
    for p in cfg.transfer_p:
        s = derive_seed(cfg.seed, source.label, cfg.transfer_method, p)
        src = ex.native_result(source, cfg.transfer_method, p, s, cfg.n_r, cfg.nc_step, opts)
        rep = ex.run_transferability(src, targets, cfg.seed, source_label=source.label, opts=opts,
                                     n_r=cfg.n_r, nc_step=cfg.nc_step)
        reports.append(rep.to_dict())
        rows.append((cfg.transfer_method, p, rep.delta_trans, rep.sem_trans, rep.delta_lo, rep.sem_lo))
    write_csv(out / "fig8.csv", ["method", "p", "delta_trans", "sem_trans", "delta_lo", "sem_lo"], rows)
    write_json(out / "fig8.json", reports)
    write_manifest(out, cfg, "transfer", ["fig8.csv", "fig8.json"])


def cmd_hessian(args):
    cfg = _config(args)
    out = _outdir(args)
    inst = _hard_instances(args, cfg)[0]
    p = cfg.smooth_p
    methods = [m for m in cfg.methods if m != "lin"]
    cmp = ex.compare_methods(inst, [p], methods, cfg.seed, cfg.n_r, cfg.nc_step, ex.options_from(cfg))
    report = ex.run_hessian_analysis(inst, [cmp.results[(m, p)] for m in methods], cfg.fd_step)
    write_json(out / "fig11_12.json", report.to_dict())
    rows = [(c.tags[0], c.tags[1], lam, eps) for c in report.paths for lam, eps in zip(c.lam, c.eps)]
    write_csv(out / "fig12.csv", ["method_a", "method_b", "lambda", "residual"], rows)
    write_manifest(out, cfg, "hessian", ["fig11_12.json", "fig12.csv"])


def cmd_smooth_vs_irregular(args):
    cfg = _config(args)
    out = _outdir(args)
    inst = _hard_instances(args, cfg)[0]
    rep = ex.run_smooth_vs_irregular(inst, cfg.smooth_p, cfg.seed, n_r=cfg.n_r, nc_step=cfg.nc_step, dt_c=cfg.dt_c,
                                     k_levels=cfg.k_levels, stride=args.stride, opts=ex.options_from(cfg))
    files = ["fig9_10.json"]
    write_json(out / "fig9_10.json", rep.to_dict())
    for name, trace in rep.digital_traces.items():
        trace.write_csv(out / f"populations_{name}.csv")
        files.append(f"populations_{name}.csv")
    for name, trace in rep.continuum_traces.items():
        trace.write_csv(out / f"continuum_{name}.csv")
        files.append(f"continuum_{name}.csv")
    write_manifest(out, cfg, "smooth-vs-irregular", files)
    print(f"digital ratio={rep.digital_ratio:.3f} continuum ratio={rep.continuum_ratio:.3f}")


def cmd_continuum(args):
    inst = load_instance(args.instance)
    controls = interpolate_controls(_schedule(args.schedule), rate=args.rate)
    out = _outdir(args)
    _, trace = integrate_schrodinger(inst, controls, args.dtc, k_levels=2, stride=args.stride)
    trace.write_csv(out / "continuum_trace.csv")
    controls.save(out / "controls.json")
    eps = continuum_residual(inst, controls, args.dtc)
    write_json(out / "continuum.json", {"residual": eps, "tau": controls.tau, "dt_c": args.dtc})
    print(f"continuum residual={eps:.6e} tau={controls.tau:.4f}")


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="forge", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate weighted random regular graphs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("optimize", help="optimize a schedule on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--pmax", "--p", dest="pmax", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nc", type=int, default=None)
    p.add_argument("--nr", type=int, default=10, help="CRAB frequency redraws")
    p.add_argument("--alpha", type=float, default=0.6, help="FOURIER perturbation strength")
    p.add_argument("--R", type=int, default=10, help="FOURIER perturbed restarts")
    p.add_argument("--gtol", type=float, default=1e-8)
    p.add_argument("--ftol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out", required=True, help="result JSON file")
    p.set_defaults(func=cmd_optimize)

    for name, func, hlp in [
        ("screen", cmd_screen, "minimum-gap screening and hard-instance selection"),
        ("compare", cmd_compare, "method comparison on the hard set"),
        ("transfer", cmd_transfer, "transferability of optimal schedules"),
        ("hessian", cmd_hessian, "Hessian and convex-path landscape analysis"),
        ("smooth-vs-irregular", cmd_smooth_vs_irregular, "continuum transfer of smooth and irregular schedules"),
    ]:
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--config", help="TOML or JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--out", required=True)
        if name != "screen":
            p.add_argument("--instances", help="directory with hard_*.json from 'forge screen'")
        if name == "smooth-vs-irregular":
            p.add_argument("--stride", type=int, default=0, help="continuum population sampling stride")
        p.set_defaults(func=func)

    p = sub.add_parser("populations", help="instantaneous effective-eigenstate populations")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_populations)

    p = sub.add_parser("continuum", help="continuous-time transfer of a schedule")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--dtc", type=float, default=0.1)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--rate", choices=("angles", "unit"), default="angles")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_continuum)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
