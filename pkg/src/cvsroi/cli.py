"""Batch command-line front end.

Subcommands: fuse, assess, eval, loss, synth. Exit codes: 0 success,
2 input error, 3 internal invariant violation. Errors are reported as one JSON
line on stderr: ``{"error": "<Code>", "message": "..."}``.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from cvsroi.config import RunConfig, load_config
from cvsroi.errors import CvsError, InputError, IoFailure, MissingFile, MissingTruth, ShapeMismatch
from cvsroi.fusion import FusionMode, fuse_streams
from cvsroi.geometry import RoiQuad, quad_outline_mask
from cvsroi.label_io import FUSED, STREAM1, load_label_map, save_label_map, save_pgm
from cvsroi.metrics import score_run
from cvsroi.rules import CvsAssessment, assess_cvs
from cvsroi.sobel_loss import LossConfig, check_gradient, grad_total_loss, loss_terms
from cvsroi.synth import corpus_plan, frame_name, generate_frame, write_frame

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3
OVERLAY_ID = 250


def _emit_error(exc: BaseException) -> int:
    code = exc.code if isinstance(exc, CvsError) else type(exc).__name__
    print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
    if isinstance(exc, (InputError, IoFailure, ValueError)):
        return EXIT_INPUT
    return EXIT_INTERNAL


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# --- fuse ----------------------------------------------------------------------


def cmd_fuse(args, cfg: RunConfig) -> int:
    mode = FusionMode(args.mode) if args.mode else cfg.fusion_mode
    p1 = load_label_map(args.p1, expect=STREAM1)
    p2 = load_label_map(args.p2)
    save_label_map(fuse_streams(p1, p2, mode), args.out)
    return EXIT_OK


# --- assess ---------------------------------------------------------------------


def _assess_one(job):
    path, cfg, quad_list, overlay_dir = job
    name = Path(path).stem
    try:
        label_map = load_label_map(path, expect=FUSED)
    except InputError as exc:
        failed = CvsAssessment(False, False, False, False, {}, None, exc.code)
        return json.dumps(failed.to_json(name))
    roi = RoiQuad.from_list(quad_list) if quad_list is not None else None
    result = assess_cvs(label_map, cfg.assess_config(), roi)
    if overlay_dir is not None:
        data = label_map.data.copy()
        if result.roi is not None:
            data[quad_outline_mask(result.roi, data.shape)] = OVERLAY_ID
        save_pgm(data, Path(overlay_dir) / f"{name}.overlay.pgm")
    return json.dumps(result.to_json(name))


def _read_truth(truth_dir: Path, name: str) -> dict:
    p = truth_dir / f"{name}.truth.json"
    if not p.is_file():
        raise MissingTruth(f"no truth file for frame {name} in {truth_dir}")
    return json.loads(p.read_text())


def _run_jobs(fn, jobs: List, n_workers: int) -> List:
    if n_workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        # map preserves input order, so output order never depends on scheduling
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * n_workers))))


def cmd_assess(args, cfg: RunConfig) -> int:
    in_dir = Path(args.input_dir)
    if not in_dir.is_dir():
        raise MissingFile(f"input directory {in_dir} does not exist")
    frames = sorted(in_dir.glob("*.pgm"), key=lambda p: p.name)
    overlay_dir = args.overlay or cfg.overlay_dir
    if overlay_dir:
        Path(overlay_dir).mkdir(parents=True, exist_ok=True)
    jobs = []
    for p in frames:
        quad = None
        if args.roi_from:
            quad = _read_truth(Path(args.roi_from), p.stem)["quad"]
        jobs.append((str(p), cfg, quad, overlay_dir))
    lines = _run_jobs(_assess_one, jobs, args.jobs)
    _write_text(args.out, "".join(line + "\n" for line in lines))
    return EXIT_OK


# --- eval ----------------------------------------------------------------------


def cmd_eval(args, cfg: RunConfig) -> int:
    report = Path(args.report)
    if not report.is_file():
        raise MissingFile(f"report {report} does not exist")
    truth_dir = Path(args.truth_dir)
    preds, truths, missing = [], [], []
    for line in report.read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        try:
            truths.append(_read_truth(truth_dir, rec["frame"]))
        except MissingTruth:
            missing.append(rec["frame"])
            continue
        preds.append(rec)
    if missing:
        raise MissingTruth(f"{len(missing)} report frame(s) without truth, first: {missing[0]}")
    if not preds:
        raise MissingTruth("report holds no frames to score")
    scores = score_run(truths, preds)
    out = {"frames": len(preds)}
    for k, m in scores.items():
        out[k] = {"acc": m["acc"], "bacc": m["bacc"], "ppv": m["ppv"], "npv": m["npv"], "counts": m["counts"]}
    _write_text(args.out, json.dumps(out) + "\n")
    return EXIT_OK


# --- loss ----------------------------------------------------------------------


def read_tensor(path) -> np.ndarray:
    """Dense text tensor: header ``channels height width`` then channel-major rows."""
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"{p} does not exist")
    tokens = p.read_text().split()
    try:
        c, h, w = (int(t) for t in tokens[:3])
        values = np.array([float(t) for t in tokens[3:]], dtype=float)
    except ValueError as exc:
        raise ShapeMismatch(f"{p}: malformed tensor: {exc}") from exc
    if min(c, h, w) < 1 or values.size != c * h * w:
        raise ShapeMismatch(f"{p}: header says {c}x{h}x{w} but holds {values.size} values")
    return values.reshape(c, h, w)


def format_tensor(t: np.ndarray) -> str:
    c, h, w = t.shape
    lines = [f"{c} {h} {w}"]
    for ch in t:
        for row in ch:
            lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_tensor(t: np.ndarray, path) -> None:
    Path(path).write_text(format_tensor(t))


def cmd_loss(args, cfg: RunConfig) -> int:
    lcfg = cfg.loss
    overrides = {}
    if args.lam is not None:
        overrides["lam"] = args.lam
    if args.beta is not None:
        overrides["beta"] = args.beta
    if args.reduce is not None:
        overrides["channel_reduce"] = args.reduce
    lcfg = LossConfig(**{**lcfg.__dict__, **overrides})
    g = read_tensor(args.g)
    p = read_tensor(args.p)
    if g.shape != p.shape:
        raise ShapeMismatch(f"ground truth {g.shape} vs prediction {p.shape}")
    out = loss_terms(g, p, lcfg)
    status = EXIT_OK
    if args.check_grad:
        err = check_gradient(g, p, lcfg)
        out["max_rel_err"] = err
        if not err < 1e-5:
            status = EXIT_INTERNAL
    print(json.dumps(out))
    if args.grad:
        _write_text(args.grad, format_tensor(grad_total_loss(g, p, lcfg)))
    return status


# --- synth ----------------------------------------------------------------------


def _synth_one(job):
    seed, index, kind, flip_rate, out_dir = job
    scene = generate_frame(seed, index, kind, flip_rate)
    write_frame(scene, Path(out_dir), frame_name(index))
    return index


def cmd_synth(args, cfg: RunConfig) -> int:
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc
    kinds = corpus_plan(args.n, args.seed, args.positive_fraction)
    jobs = [(args.seed, i, k, args.flip_rate, str(out)) for i, k in enumerate(kinds)]
    _run_jobs(_synth_one, jobs, args.jobs)
    return EXIT_OK


# --- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvsroi", description="Rule-based CVS assessment on segmentation label maps")
    parser.add_argument("--config", help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="merge a Stream1 map with the fat mask of a Stream2 map")
    p.add_argument("p1")
    p.add_argument("p2")
    p.add_argument("out")
    p.add_argument("--mode", choices=[m.value for m in FusionMode])
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("assess", help="assess every fused frame in a directory")
    p.add_argument("input_dir")
    p.add_argument("--out", "-o", help="JSON-lines report (default stdout)")
    p.add_argument("--jobs", "-j", type=int, default=1)
    p.add_argument("--overlay", help="directory for ROI overlay PGMs")
    p.add_argument("--roi-from", help="truth directory whose reference quads replace the estimated ROI")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("eval", help="score a report against truth JSON files")
    p.add_argument("report")
    p.add_argument("truth_dir")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("loss", help="cross-entropy + Sobel loss of two dense tensors")
    p.add_argument("g")
    p.add_argument("p")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--reduce", choices=["sum", "max"])
    p.add_argument("--grad", help="write the gradient tensor to this path ('-' for stdout)")
    p.add_argument("--check-grad", action="store_true", help="compare against central finite differences")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("n", type=int)
    p.add_argument("seed", type=int)
    p.add_argument("out_dir")
    p.add_argument("--positive-fraction", type=float, default=0.25)
    p.add_argument("--flip-rate", type=float, default=0.0)
    p.add_argument("--jobs", "-j", type=int, default=1)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (CvsError, ValueError) as exc:
        return _emit_error(exc)


if __name__ == "__main__":
    sys.exit(main())
