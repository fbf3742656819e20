"""Command-line surface: solve stereo pairs, synthesize scenes, score results.

Subcommands:
  run    solve a rectified pair from a JSON config (flags override fields)
  synth  render a synthetic two-layer scene with ground truth to disk
  eval   score a predicted disparity/occlusion against ground truth
  viz    re-render the images for a finished run directory

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__, io_files, metrics, solver, synth, viz
from .costs import AlphaWeights, StereoPair
from .fields import EllipseSpec
from .occlusion import gt_occlusion_from_disparity


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


SOLVER_KEYS = ("dt", "eps", "mu", "beta", "max_iters", "reinit_every",
               "median_k", "phi_tol", "conv_window", "n_levels", "base",
               "overlap_stride_ratio", "sigma_g", "max_step", "fit_margin",
               "rng_seed")


def solver_config_from_dict(cfg):
    kwargs = {k: cfg[k] for k in SOLVER_KEYS if cfg.get(k) is not None}
    alphas = AlphaWeights(alpha1=cfg.get("alpha1", 0.2),
                          alpha2=cfg.get("alpha2", 0.8),
                          alpha3=cfg.get("alpha3", 0.1))
    return solver.SolverConfig(alphas=alphas, **kwargs)


def _config_snapshot(cfg, ellipse, d_max):
    snap = dataclasses.asdict(cfg)
    snap["alphas"] = dataclasses.asdict(cfg.alphas)
    snap["ellipse"] = dataclasses.asdict(ellipse)
    snap["d_max"] = int(d_max)
    return snap


def _trace_rows(trace):
    header = list(solver.TraceRecord.CSV_FIELDS)
    header += [f"fg_c{i}" for i in range(6)] + [f"bg_c{i}" for i in range(6)]
    header.append("warning")
    return header, [r.csv_row() for r in trace]


def write_trace_csv(path, trace):
    header, rows = _trace_rows(trace)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


METRICS_HEADER = ("image", "precision", "recall", "f1", "bad4")


def write_metrics_csv(path, image_name, report):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(METRICS_HEADER)
        w.writerow([image_name] + report.csv_cells())


def save_visualizations(result, out_dir, d_max, left=None):
    """Render a solve result's image outputs into out_dir."""
    render_outputs(out_dir, result.disparity, result.occlusion, result.phi,
                   result.consensus, d_max, left)


def render_outputs(out_dir, disparity, occlusion, phi, consensus, d_max,
                   left=None):
    viz.save_rgb(os.path.join(out_dir, "disparity_occlusion.png"),
                 viz.disparity_to_rgb(disparity, d_max, occlusion))
    base = left if left is not None else np.clip(disparity / max(d_max, 1), 0, 1)
    viz.save_rgb(os.path.join(out_dir, "boundary_overlay.png"),
                 viz.overlay_contour(base, phi))
    if consensus is not None:
        viz.save_gray(os.path.join(out_dir, "consensus_mean.png"),
                      viz.scalar_to_gray(consensus.d_bar, 0, d_max))
        with np.errstate(divide="ignore"):
            inv_sigma = np.where(np.isfinite(consensus.sigma),
                                 1.0 / consensus.sigma, 0.0)
        viz.save_gray(os.path.join(out_dir, "consensus_precision.png"),
                      viz.scalar_to_gray(inv_sigma))


def cmd_run(args):
    cfg = {}
    if args.config:
        _require_file(args.config)
        with open(args.config) as f:
            cfg = json.load(f)
    for key in ("left", "right", "gt", "gt_occ", "boundary", "out", "d_max",
                "max_iters", "seed", "dt", "mu", "eps", "beta", "median_k",
                "reinit_every", "phi_tol", "n_levels", "base", "sigma_g",
                "max_step", "fit_margin", "alpha1", "alpha2", "alpha3"):
        val = getattr(args, key, None)
        if val is not None:
            cfg["rng_seed" if key == "seed" else key] = val
    if args.ellipse:
        cfg["ellipse"] = [float(v) for v in args.ellipse.split(",")]

    for required in ("left", "right", "out"):
        if not cfg.get(required):
            raise UsageError(f"run: missing required option --{required}")
    if not cfg.get("ellipse") or len(cfg["ellipse"]) != 4:
        raise UsageError("run: --ellipse cx,cy,rx,ry (or config key) is required")

    _require_file(cfg["left"])
    _require_file(cfg["right"])
    left = io_files.load_image(cfg["left"])
    right = io_files.load_image(cfg["right"])
    d_max = int(cfg.get("d_max", 32))
    pair = StereoPair(left=left, right=right, d_max=d_max)
    ellipse = EllipseSpec(*cfg["ellipse"])
    solver_cfg = solver_config_from_dict(cfg)

    result = solver.run(pair, solver_cfg, ellipse)

    out_dir = cfg["out"]
    os.makedirs(out_dir, exist_ok=True)
    io_files.save_pfm(os.path.join(out_dir, "disparity.pfm"), result.disparity)
    io_files.save_mask(os.path.join(out_dir, "occlusion.png"), result.occlusion)
    if cfg.get("save_fields", True):
        np.save(os.path.join(out_dir, "phi.npy"), result.phi)
    write_trace_csv(os.path.join(out_dir, "trace.csv"), result.trace)

    report = None
    if cfg.get("gt"):
        _require_file(cfg["gt"])
        gt = io_files.load_pfm(cfg["gt"]).astype(float)
        if cfg.get("gt_occ"):
            _require_file(cfg["gt_occ"])
            gt_occ = io_files.load_mask(cfg["gt_occ"])
        else:
            gt_occ = gt_occlusion_from_disparity(gt)
        if cfg.get("boundary"):
            _require_file(cfg["boundary"])
            boundary = io_files.load_mask(cfg["boundary"])
        else:
            boundary = metrics.boundary_from_disparity(gt)
        report = metrics.evaluate(result.disparity, result.occlusion, gt,
                                  gt_occ, boundary)
        write_metrics_csv(os.path.join(out_dir, "metrics.csv"),
                          os.path.basename(cfg["left"]), report)

    if cfg.get("save_visualizations", True):
        render_outputs(out_dir, result.disparity, result.occlusion, result.phi,
                       result.consensus, d_max, left)

    manifest = {
        "version": __version__,
        "config": _config_snapshot(solver_cfg, ellipse, d_max),
        "inputs": {k: {"path": cfg[k], "sha256": io_files.sha256_file(cfg[k])}
                   for k in ("left", "right", "gt", "gt_occ", "boundary")
                   if cfg.get(k)},
        "converged": result.converged,
        "iterations": len(result.trace),
        "trace": [dataclasses.asdict(t) for t in result.trace],
        "metrics": dataclasses.asdict(report) if report else None,
    }
    io_files.write_json_atomic(os.path.join(out_dir, "manifest.json"), manifest)
    print(f"run: {len(result.trace)} iterations, converged={result.converged}, "
          f"outputs in {out_dir}")
    if report:
        print(f"metrics: precision={report.precision:.4f} recall={report.recall:.4f} "
              f"f1={report.f1:.4f} bad4={report.bad4:.4f}")
    return 0


def scene_spec_from_dict(d):
    return synth.SceneSpec(width=d["width"], height=d["height"],
                           region=tuple(d["region"]),
                           fg_coeffs=tuple(d["fg_coeffs"]),
                           bg_coeffs=tuple(d["bg_coeffs"]),
                           d_max=d["d_max"], seed=d.get("seed", 0),
                           texture=d.get("texture", "noise"),
                           noise_level=d.get("noise_level", 0.0))


def cmd_synth(args):
    _require_file(args.spec)
    with open(args.spec) as f:
        spec = scene_spec_from_dict(json.load(f))
    pair, d_gt, occ, boundary = synth.generate_scene(spec)
    os.makedirs(args.out, exist_ok=True)
    io_files.save_image(os.path.join(args.out, "left.png"), pair.left)
    io_files.save_image(os.path.join(args.out, "right.png"), pair.right)
    io_files.save_pfm(os.path.join(args.out, "gt_disparity.pfm"), d_gt)
    io_files.save_mask(os.path.join(args.out, "gt_occlusion.png"), occ)
    io_files.save_mask(os.path.join(args.out, "gt_boundary.png"), boundary)
    manifest = {
        "version": __version__,
        "scene": dataclasses.asdict(spec),
        "outputs": {name: io_files.sha256_file(os.path.join(args.out, name))
                    for name in ("left.png", "right.png", "gt_disparity.pfm",
                                 "gt_occlusion.png", "gt_boundary.png")},
    }
    io_files.write_json_atomic(os.path.join(args.out, "scene.json"), manifest)
    print(f"synth: scene written to {args.out}")
    return 0


def cmd_eval(args):
    for p in (args.pred, args.gt, args.boundary):
        _require_file(p)
    pred = io_files.load_pfm(args.pred).astype(float)
    gt = io_files.load_pfm(args.gt).astype(float)
    boundary = io_files.load_mask(args.boundary)
    if args.pred_occ:
        _require_file(args.pred_occ)
        pred_occ = io_files.load_mask(args.pred_occ)
    else:
        pred_occ = np.zeros(pred.shape, dtype=bool)
    if args.gt_occ:
        _require_file(args.gt_occ)
        gt_occ = io_files.load_mask(args.gt_occ)
    else:
        gt_occ = gt_occlusion_from_disparity(gt)
    report = metrics.evaluate(pred, pred_occ, gt, gt_occ, boundary,
                              radius=args.radius)
    name = os.path.basename(args.pred)
    if args.out:
        write_metrics_csv(args.out, name, report)
    print(f"{name}: precision={report.precision:.4f} recall={report.recall:.4f} "
          f"f1={report.f1:.4f} bad4={report.bad4:.4f}")
    return 0


def cmd_viz(args):
    run_dir = args.run
    manifest_path = os.path.join(run_dir, "manifest.json")
    _require_file(manifest_path)
    with open(manifest_path) as f:
        manifest = json.load(f)
    d_max = manifest["config"]["d_max"]
    disparity = io_files.load_pfm(os.path.join(run_dir, "disparity.pfm")).astype(float)
    occlusion = io_files.load_mask(os.path.join(run_dir, "occlusion.png"))
    phi_path = os.path.join(run_dir, "phi.npy")
    phi = np.load(phi_path) if os.path.exists(phi_path) else np.where(occlusion, -1.0, 1.0)
    out_dir = args.out or run_dir
    os.makedirs(out_dir, exist_ok=True)
    left = None
    left_info = manifest.get("inputs", {}).get("left")
    if left_info and os.path.exists(left_info["path"]):
        left = io_files.load_image(left_info["path"])
    render_outputs(out_dir, disparity, occlusion, phi, None, d_max, left)
    print(f"viz: images written to {out_dir}")
    return 0


def _require_file(path):
    if not path or not os.path.exists(path):
        raise FileNotFoundError(f"input file not found: {path}")


def build_parser():
    parser = _Parser(prog="bilayer-stereo",
                     description="Occlusion-aware two-layer level-set stereo")
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="solve a rectified stereo pair")
    p_run.add_argument("--config", help="JSON config with flat solver keys")
    p_run.add_argument("--left")
    p_run.add_argument("--right")
    p_run.add_argument("--gt")
    p_run.add_argument("--gt-occ", dest="gt_occ")
    p_run.add_argument("--boundary")
    p_run.add_argument("--out")
    p_run.add_argument("--ellipse", help="cx,cy,rx,ry initial boundary")
    p_run.add_argument("--d-max", dest="d_max", type=int)
    p_run.add_argument("--max-iters", dest="max_iters", type=int)
    p_run.add_argument("--seed", type=int)
    for flag, typ in (("--dt", float), ("--mu", float), ("--eps", float),
                      ("--beta", float), ("--median-k", int),
                      ("--reinit-every", int), ("--phi-tol", float),
                      ("--n-levels", int), ("--base", int),
                      ("--sigma-g", float), ("--max-step", float),
                      ("--fit-margin", float), ("--alpha1", float),
                      ("--alpha2", float), ("--alpha3", float)):
        p_run.add_argument(flag, dest=flag[2:].replace("-", "_"), type=typ)

    p_synth = sub.add_parser("synth", help="generate a synthetic scene")
    p_synth.add_argument("--spec", required=True, help="scene spec JSON")
    p_synth.add_argument("--out", required=True)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--pred", required=True, help="predicted disparity PFM")
    p_eval.add_argument("--pred-occ", dest="pred_occ")
    p_eval.add_argument("--gt", required=True, help="ground-truth disparity PFM")
    p_eval.add_argument("--gt-occ", dest="gt_occ")
    p_eval.add_argument("--boundary", required=True, help="boundary mask PNG")
    p_eval.add_argument("--radius", type=int, default=metrics.BAND_RADIUS)
    p_eval.add_argument("--out", help="metrics CSV path")

    p_viz = sub.add_parser("viz", help="re-render images for a run directory")
    p_viz.add_argument("--run", required=True)
    p_viz.add_argument("--out")
    return parser


COMMANDS = {"run": cmd_run, "synth": cmd_synth, "eval": cmd_eval, "viz": cmd_viz}


def cli_main(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(parser.format_usage())
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (FileNotFoundError, io_files.UnsupportedFormat, io_files.CorruptFile,
            io_files.BadHeader, io_files.TruncatedPayload, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
