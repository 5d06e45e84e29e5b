"""Command-line front end: synthesize, recover, evaluate, sweep, report.

Corpus directories hold, per image stem, ``<stem>.pbm`` (skeleton),
``<stem>.gt.txt`` (pen order as a point list) and optionally
``<stem>.traj.txt`` (the on-line source). Recovered trajectories are
written as ``<stem>.rec.txt``.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import svg
from .evaluation.accuracy import cluster_accuracy
from .evaluation.corpus import CorpusConfig, Sample, random_corpus
from .evaluation.metrics import Bands, compare, complexity
from .evaluation.raster import rasterize, read_trajectory, write_trajectory as write_online
from .evaluation.sweeps import DEFAULT_ETAS, Evaluator, sensitivity_sweep, stability_sweep, sweep_values
from .pairing import resolve_all
from .params import DELTA_FIELDS, ParamSet, apply_overrides, load_params, parse_assignment
from .pbm import read_pbm, write_pbm
from .reconstruct import Scenario, format_point_list, read_point_list, recover, write_trajectory
from .skeleton import SkeletonImage, analyze

CSV_COLUMNS = ("id", "n_c_real", "n_c_est", "theta", "rmse", "snr", "dtw", "complexity", "band", "scenario")


class CommandError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def build_params(args: argparse.Namespace) -> ParamSet:
    """Defaults, then the ``--params`` file, then ``--set`` flags."""
    params = ParamSet()
    if getattr(args, "params", None):
        params = load_params(args.params, params)
    sets = getattr(args, "set", None) or []
    if sets:
        params = apply_overrides(params, [parse_assignment(s) for s in sets])
    return params


def _expand(inputs: Sequence[str], pattern: str) -> list[Path]:
    out: list[Path] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            out.extend(sorted(p.glob(pattern)))
        elif p.exists():
            out.append(p)
        else:
            raise CommandError(f"{p}: no such file or directory")
    return out


def _stem(path: Path) -> str:
    name = path.name
    for suffix in (".traj.txt", ".gt.txt", ".rec.txt", ".pbm", ".txt"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def write_sample(sample: Sample, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    write_pbm(sample.image, outdir / f"{sample.name}.pbm")
    (outdir / f"{sample.name}.gt.txt").write_text(format_point_list(sample.strokes, {"ground_truth": sample.name}))
    if sample.trajectory is not None:
        write_online(sample.trajectory, outdir / f"{sample.name}.traj.txt")


def load_corpus_dir(directory: Path) -> list[Sample]:
    samples = []
    for pbm in sorted(directory.glob("*.pbm")):
        gt = pbm.with_name(f"{_stem(pbm)}.gt.txt")
        if not gt.exists():
            _warn(f"{pbm}: no ground truth file {gt.name}; skipped")
            continue
        _, strokes = read_point_list(gt)
        samples.append(Sample(_stem(pbm), None, read_pbm(pbm), strokes))
    if not samples:
        raise CommandError(f"{directory}: no <stem>.pbm + <stem>.gt.txt pairs")
    return samples


def _corpus_from_args(args: argparse.Namespace) -> list[Sample]:
    if args.random:
        return random_corpus(CorpusConfig(n_images=args.random, seed=args.seed))
    if not args.corpus:
        raise CommandError("give a corpus directory or --random N")
    return load_corpus_dir(Path(args.corpus))


# --- synthesize ----------------------------------------------------------------


def cmd_synthesize(args: argparse.Namespace) -> int:
    outdir = Path(args.out)
    if args.random:
        for sample in random_corpus(CorpusConfig(n_images=args.random, seed=args.seed)):
            write_sample(sample, outdir)
        return 0
    files = _expand(args.inputs, "*.txt")
    if not files:
        raise CommandError("no trajectory files given")
    status = 0
    for path in files:
        try:
            traj = read_trajectory(path)
            image, strokes = rasterize(traj, scale=args.scale)
        except ValueError as exc:
            _err(str(exc))
            status = 1
            continue
        write_sample(Sample(_stem(path), None, image, strokes), outdir)
    return status


# --- recover -------------------------------------------------------------------


def _thin_warnings(image: SkeletonImage) -> list[str]:
    """Flag full 3x3 ink blocks; crossings of one-pixel lines never fill one."""
    g = image.pixels
    if min(g.shape) < 3:
        return []
    blocks = np.ones((g.shape[0] - 2, g.shape[1] - 2), dtype=bool)
    for dr in range(3):
        for dc in range(3):
            blocks &= g[dr : dr + g.shape[0] - 2, dc : dc + g.shape[1] - 2]
    return [f"3x3 ink block at (row={r}, col={c}); input may not be one pixel wide" for r, c in np.argwhere(blocks)[:5].tolist()]


def _recover_one(job: tuple[str, str, str, str, ParamSet, bool]) -> tuple[str, list[str], str | None]:
    pbm, gt_dir, outdir, scenario, params, want_svg = job
    path = Path(pbm)
    stem = _stem(path)
    warnings: list[str] = []
    try:
        image = read_pbm(path)
        warnings = [f"{path}: {w}" for w in _thin_warnings(image)]
        starts = None
        if Scenario.parse(scenario) != Scenario.ESTNC:
            gt = Path(gt_dir) / f"{stem}.gt.txt" if gt_dir else path.with_name(f"{stem}.gt.txt")
            if not gt.exists():
                return stem, warnings, f"{path}: {scenario} needs ground truth; {gt} not found"
            _, strokes = read_point_list(gt)
            starts = [s[0] for s in strokes]
        skel = analyze(image, params.branch_points, params.brotherhood_dist)
        traj = recover(skel, resolve_all(skel, params), params, scenario, starts)
        write_trajectory(traj, Path(outdir) / f"{stem}.rec.txt", params)
        if want_svg:
            (Path(outdir) / f"{stem}.svg").write_text(svg.overlay(image, [c.points for c in traj.components]))
    except (ValueError, KeyError) as exc:
        return stem, warnings, f"{path}: {exc}"
    return stem, warnings, None


def cmd_recover(args: argparse.Namespace) -> int:
    params = build_params(args)
    Scenario.parse(args.scenario)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    files = _expand(args.inputs, "*.pbm")
    if not files:
        raise CommandError("no PBM files given")
    jobs = [(str(f), args.gt or "", str(outdir), args.scenario, params, args.svg) for f in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_recover_one, jobs))
    else:
        results = [_recover_one(j) for j in jobs]
    status = 0
    for _, warnings, error in results:
        for w in warnings:
            _warn(w)
        if error:
            _err(error)
            status = 1
    return status


# --- evaluate / report -----------------------------------------------------------


def evaluate_rows(gt_dir: Path, rec_files: Sequence[Path], params: ParamSet) -> tuple[list[dict], list[str]]:
    rows, problems = [], []
    for rec in rec_files:
        stem = _stem(rec)
        gt, pbm = gt_dir / f"{stem}.gt.txt", gt_dir / f"{stem}.pbm"
        if not gt.exists() or not pbm.exists():
            problems.append(f"{rec}: no matching {gt.name} / {pbm.name} in {gt_dir}")
            continue
        header, comps = read_point_list(rec)
        _, strokes = read_point_list(gt)
        skel = analyze(read_pbm(pbm), params.branch_points, params.brotherhood_dist)
        acc = cluster_accuracy(skel, resolve_all(skel, params), strokes)
        real = [p for s in strokes for p in s]
        est = [p for c in comps for p in c]
        r, s, d = compare([(c, row) for row, c in real], [(c, row) for row, c in est])
        n3 = sum(1 for c in skel.clusters if c.rank == 3)
        ngt3 = sum(1 for c in skel.clusters if c.rank > 3)
        rows.append(
            {
                "id": stem,
                "n_c_real": len(strokes),
                "n_c_est": len(comps),
                "theta": acc.theta,
                "rmse": r,
                "snr": s,
                "dtw": d,
                "complexity": complexity(len(strokes), n3, ngt3),
                "band": "",
                "scenario": header.get("scenario", ""),
            }
        )
    if rows:
        bands = Bands.from_values([row["complexity"] for row in rows])
        for row in rows:
            row["band"] = bands.band(row["complexity"])
    return rows, problems


def format_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def summarize(rows: Sequence[dict]) -> list[dict]:
    """Mean and standard error of each metric per (scenario, band), plus an 'all' band."""
    groups: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        for band in (row["band"], "all"):
            groups.setdefault((row["scenario"], band), []).append(row)
    order = {"low": 0, "medium": 1, "high": 2, "all": 3}
    out = []
    for (scenario, band), members in sorted(groups.items(), key=lambda kv: (kv[0][0], order.get(kv[0][1], 9))):
        entry: dict = {"scenario": scenario, "band": band, "n": len(members)}
        for metric in ("theta", "rmse", "snr", "dtw"):
            vals = np.array([float(m[metric]) for m in members])
            se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            entry[f"{metric}_mean"] = float(vals.mean())
            entry[f"{metric}_se"] = se
        out.append(entry)
    return out


SUMMARY_COLUMNS = ("scenario", "band", "n") + tuple(f"{m}_{s}" for m in ("theta", "rmse", "snr", "dtw") for s in ("mean", "se"))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_evaluate(args: argparse.Namespace) -> int:
    params = build_params(args)
    rec_files = _expand(args.recovered, "*.rec.txt")
    rows, problems = evaluate_rows(Path(args.gt), rec_files, params)
    for p in problems:
        _err(p)
    _emit(format_csv(rows, CSV_COLUMNS), args.out)
    summary = format_csv(summarize(rows), SUMMARY_COLUMNS)
    if args.summary:
        Path(args.summary).write_text(summary)
    elif not args.out:
        sys.stdout.write("\n" + summary)
    return 1 if problems or not rows else 0


def cmd_report(args: argparse.Namespace) -> int:
    rows = []
    for path in args.inputs:
        with open(path, newline="") as fh:
            rows.extend(csv.DictReader(fh))
    if not rows:
        raise CommandError("no rows in the given CSV files")
    _emit(format_csv(summarize(rows), SUMMARY_COLUMNS), args.out)
    return 0


# --- sweep -----------------------------------------------------------------------


def cmd_sweep(args: argparse.Namespace) -> int:
    params = build_params(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    evaluator = Evaluator(_corpus_from_args(args))
    if args.kind == "sensitivity":
        indices = args.delta or sorted(DELTA_FIELDS)
        for k in indices:
            curve = sensitivity_sweep(evaluator, params, k, sweep_values(k, args.points))
            rows = [{"delta": k, "name": curve.name, "value": v, "theta": t} for v, t in zip(curve.values, curve.thetas)]
            (outdir / f"sensitivity_d{k}.csv").write_text(format_csv(rows, ("delta", "name", "value", "theta")))
            mids = [(a + b) / 2 for a, b in zip(curve.values, curve.values[1:])] or list(curve.values)
            grades = list(curve.grades) or [0.0]
            (outdir / f"sensitivity_d{k}.svg").write_text(svg.line_plot(mids, grades, f"dtheta/ddelta, delta {k} ({curve.name})"))
        return 0
    etas = args.etas or list(DEFAULT_ETAS)
    table = stability_sweep(evaluator, params, etas, args.repetitions, args.seed)
    rows = [{"eta": r.eta, "repetition": i, "theta": t} for r in table for i, t in enumerate(r.thetas)]
    (outdir / "stability.csv").write_text(format_csv(rows, ("eta", "repetition", "theta")))
    stats = [{"eta": r.eta, "median": r.median, "q1": r.q1, "q3": r.q3, "n_outliers": len(r.outliers)} for r in table]
    (outdir / "stability_summary.csv").write_text(format_csv(stats, ("eta", "median", "q1", "q3", "n_outliers")))
    boxes = []
    for r in table:
        iqr = r.q3 - r.q1
        inliers = [t for t in r.thetas if t not in r.outliers] or list(r.thetas)
        boxes.append((max(min(inliers), r.q1 - 1.5 * iqr), r.q1, r.median, r.q3, min(max(inliers), r.q3 + 1.5 * iqr), r.outliers))
    (outdir / "stability.svg").write_text(svg.box_plot(etas, boxes, "theta under weight noise"))
    return 0


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajrec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--params", help="key=value parameter file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter, e.g. d9=6 or normal.ext=0.3")
        p.add_argument("--seed", type=int, default=20240917, help="generator seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("synthesize", help="rasterize on-line trajectories into skeletons plus pen order")
    common(p)
    p.add_argument("inputs", nargs="*", help="trajectory files or directories (*.txt)")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--scale", type=float, default=1.0, help="coordinate scale before rounding to pixels")
    p.add_argument("--random", type=int, default=0, metavar="N", help="generate N random controlled-crossing samples instead")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("recover", help="recover trajectories from skeleton PBM files")
    common(p)
    p.add_argument("inputs", nargs="+", help="PBM files or directories")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--scenario", default="estnc", choices=["estnc", "rsenc", "rseoc"])
    p.add_argument("--gt", help="directory holding <stem>.gt.txt (default: next to each PBM)")
    p.add_argument("--svg", action="store_true", help="also write an SVG overlay per image")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("evaluate", help="compare recovered trajectories with ground truth")
    common(p)
    p.add_argument("recovered", nargs="+", help="*.rec.txt files or directories")
    p.add_argument("--gt", required=True, help="corpus directory with <stem>.pbm and <stem>.gt.txt")
    p.add_argument("-o", "--out", help="CSV output file (default: stdout)")
    p.add_argument("--summary", help="per-band summary CSV file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="threshold sensitivity or weight stability sweep")
    common(p)
    p.add_argument("kind", choices=["sensitivity", "stability"])
    p.add_argument("corpus", nargs="?", help="corpus directory with <stem>.pbm and <stem>.gt.txt")
    p.add_argument("--random", type=int, default=0, metavar="N", help="use N generated samples instead of a directory")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--delta", type=int, action="append", choices=sorted(DELTA_FIELDS), help="restrict to these thresholds")
    p.add_argument("--points", type=int, default=10, help="values per threshold range")
    p.add_argument("--etas", type=float, nargs="+", help="noise levels (default 0.05..0.50)")
    p.add_argument("--repetitions", type=int, default=10)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="per-band mean and standard error from evaluate CSV files")
    p.add_argument("inputs", nargs="+", help="CSV files written by evaluate")
    p.add_argument("-o", "--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CommandError, ValueError, KeyError, OSError) as exc:
        _err(str(exc).strip("'\""))
        return 1


if __name__ == "__main__":
    sys.exit(main())
