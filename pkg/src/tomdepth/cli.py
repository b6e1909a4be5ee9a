"""Batch orchestration: distill labels over a manifest, evaluate, report.

Subcommands: ``inpaint``, ``distill mono``, ``distill stereo``,
``evaluate``, ``report``. Exit codes: 0 success, 1 partial per-sample
failures, 2 configuration error. Runs are deterministic for a fixed seed:
identical configs produce byte-identical output trees regardless of the
worker count.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .backend import EXTERNAL_EXEC, PRECOMPUTED_DIR, BackendSpec, base_key, mono_key
from .core import (
    ScalarMap,
    Space,
    TomMask,
    depth_to_disparity,
    disparity_to_depth,
    resize_quarter,
)
from .distill import (
    DistillConfig,
    Strategy,
    distill_mono,
    distill_stereo_virtual_disparity,
    merge_with_alignment,
    sample_palette,
)
from .errors import TomDepthError
from .formats import (
    DatasetManifest,
    SampleRecord,
    _atomic_write,
    collapse_mask,
    load_manifest,
    read_class_raster,
    read_pfm,
    read_png16_depth,
    read_rgb,
    write_pfm,
    write_rgb,
)
from .metrics import (
    BAD_THRESHOLDS_PX,
    DELTA_THRESHOLDS,
    MetricReport,
    SPLIT_ALL,
    SPLIT_OTHER,
    SPLIT_TOM,
    aggregate_reports,
    evaluate_sample,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def parse_backend_spec(text: str) -> BackendSpec:
    """Parse a backend flag: ``dir:<space>:<path>`` or ``exec:<space>:<template>``."""
    parts = text.split(":", 2)
    if len(parts) != 3:
        raise TomDepthError(
            f"backend spec {text!r} must look like dir:<space>:<path> or exec:<space>:<template>"
        )
    kind_token, space_token, location = parts
    kinds = {"dir": PRECOMPUTED_DIR, "exec": EXTERNAL_EXEC}
    if kind_token not in kinds:
        raise TomDepthError(f"unknown backend kind {kind_token!r} (use dir or exec)")
    try:
        space = Space(space_token)
    except ValueError:
        raise TomDepthError(f"unknown backend space {space_token!r}") from None
    return BackendSpec(kind=kinds[kind_token], location=location, output_space=space)


def _write_json(path: Path, payload) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    _atomic_write(path, text.encode("utf-8"))


def _load_mask(record: SampleRecord, manifest: DatasetManifest) -> TomMask:
    if record.mask is None:
        raise TomDepthError(f"sample {record.id!r} has no mask")
    raw = read_class_raster(record.mask)
    if manifest.class_map is not None:
        return collapse_mask(raw, manifest.class_map)
    # no collapse rule: treat the raster as a binary mask, nonzero = ToM
    return TomMask((raw != 0).astype(np.uint8))


def _load_gt(record: SampleRecord) -> ScalarMap:
    if record.gt is None or record.gt_space is None:
        raise TomDepthError(f"sample {record.id!r} has no ground truth")
    if record.gt.suffix.lower() == ".pfm":
        return read_pfm(record.gt, space=record.gt_space)
    if record.gt_space is not Space.DEPTH_MM:
        raise TomDepthError(
            f"sample {record.id!r}: PNG ground truth must be depth_mm, got {record.gt_space.value}"
        )
    return read_png16_depth(record.gt)


def _gt_disparity(record: SampleRecord, manifest: DatasetManifest) -> ScalarMap:
    gt = _load_gt(record)
    if gt.space is Space.DISPARITY_PX:
        return gt
    calib = manifest.calibration_for(record)
    if calib is None:
        raise TomDepthError(f"sample {record.id!r}: depth GT needs calibration to triangulate")
    return depth_to_disparity(gt, calib)


def _run_pool(samples, worker, workers: int, fail_fast: bool):
    """Run worker(record) over samples; returns id-sorted (ok, failures).

    Sorting keeps summaries byte-identical regardless of the worker count.
    """
    failures: list[tuple[str, str]] = []
    ok: list[str] = []
    if workers <= 1:
        for rec in samples:
            try:
                worker(rec)
                ok.append(rec.id)
            except Exception as e:
                failures.append((rec.id, str(e)))
                logger.error("sample %s failed: %s", rec.id, e)
                if fail_fast:
                    break
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(worker, rec): rec.id for rec in samples}
            for fut, sid in futures.items():
                try:
                    fut.result()
                    ok.append(sid)
                except Exception as e:
                    failures.append((sid, str(e)))
                    logger.error("sample %s failed: %s", sid, e)
                    if fail_fast:
                        for other in futures:
                            other.cancel()
                        break
    return sorted(ok), sorted(failures)


def _distill_summary(out: Path, command: str, cfg: DistillConfig, ok, failures) -> None:
    _write_json(
        out / "summary.json",
        {
            "command": command,
            "strategy": cfg.strategy.value,
            "num_colors": cfg.num_colors,
            "seed": cfg.seed,
            "labels_dir": "labels",
            "samples": [{"id": sid, "label": f"labels/{sid}.pfm", "sidecar": f"labels/{sid}.json"} for sid in ok],
            "failures": [{"id": sid, "error": msg} for sid, msg in failures],
        },
    )


def cmd_inpaint(args) -> int:
    manifest = load_manifest(args.manifest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = DistillConfig(num_colors=args.colors, seed=args.seed)

    def worker(rec: SampleRecord) -> None:
        from .inpaint import inpaint

        image = read_rgb(rec.left)
        mask = _load_mask(rec, manifest)
        palette = sample_palette(cfg.seed, rec.id, cfg.num_colors)
        for i, color in enumerate(palette.colors):
            write_rgb(inpaint(image, mask, color), out / f"{rec.id}_c{i}.png")

    ok, failures = _run_pool(manifest.samples, worker, args.workers, args.fail_fast)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_distill_mono(args) -> int:
    manifest = load_manifest(args.manifest)
    backend = parse_backend_spec(args.backend)
    cfg = DistillConfig(num_colors=args.colors, seed=args.seed, strategy=Strategy.MONO_VIRTUAL_DEPTH)
    out = Path(args.out)
    labels = out / "labels"
    labels.mkdir(parents=True, exist_ok=True)

    def worker(rec: SampleRecord) -> None:
        image = read_rgb(rec.left)
        mask = _load_mask(rec, manifest)
        label = distill_mono(image, mask, backend, cfg, rec.id)
        write_pfm(label, labels / f"{rec.id}.pfm")
        palette = sample_palette(cfg.seed, rec.id, cfg.num_colors)
        _write_json(
            labels / f"{rec.id}.json",
            {
                "sample": rec.id,
                "strategy": cfg.strategy.value,
                "seed": cfg.seed,
                "num_colors": cfg.num_colors,
                "palette": [c.as_tuple() for c in palette.colors],
                "backend_keys": [mono_key(rec.id, i) for i in range(cfg.num_colors)],
                "space": label.space.value,
                "alignment": None,
            },
        )

    ok, failures = _run_pool(manifest.samples, worker, args.workers, args.fail_fast)
    _distill_summary(out, "distill-mono", cfg, ok, failures)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_distill_stereo(args) -> int:
    manifest = load_manifest(args.manifest)
    strategy = Strategy(args.strategy)
    if strategy is Strategy.MONO_VIRTUAL_DEPTH:
        raise TomDepthError("distill stereo expects a stereo strategy")
    stereo_backend = parse_backend_spec(args.stereo_backend)
    mono_backend = parse_backend_spec(args.mono_backend) if args.mono_backend else None
    if strategy is Strategy.STEREO_MERGED and mono_backend is None:
        raise TomDepthError("stereo_merged needs --mono-backend")
    cfg = DistillConfig(num_colors=args.colors, seed=args.seed, strategy=strategy)
    out = Path(args.out)
    labels = out / "labels"
    labels.mkdir(parents=True, exist_ok=True)

    def worker(rec: SampleRecord) -> None:
        if rec.right is None:
            raise TomDepthError(f"sample {rec.id!r} is not stereo")
        left = read_rgb(rec.left)
        right = read_rgb(rec.right)
        mask = _load_mask(rec, manifest)
        alignment = None
        if strategy is Strategy.STEREO_MERGED:
            label, alignment = merge_with_alignment(
                left, right, mask, mono_backend, stereo_backend, cfg, rec.id
            )
            keys = [base_key(rec.id)] + [mono_key(rec.id, i) for i in range(cfg.num_colors)]
        else:
            gt_disp = _gt_disparity(rec, manifest)
            label = distill_stereo_virtual_disparity(
                left, right, mask, gt_disp, stereo_backend, cfg, rec.id
            )
            keys = [mono_key(rec.id, i) for i in range(cfg.num_colors)]
        write_pfm(label, labels / f"{rec.id}.pfm")
        palette = sample_palette(cfg.seed, rec.id, cfg.num_colors)
        _write_json(
            labels / f"{rec.id}.json",
            {
                "sample": rec.id,
                "strategy": cfg.strategy.value,
                "seed": cfg.seed,
                "num_colors": cfg.num_colors,
                "palette": [c.as_tuple() for c in palette.colors],
                "backend_keys": keys,
                "space": label.space.value,
                "alignment": None
                if alignment is None
                else {"scale": alignment.scale, "shift": alignment.shift},
            },
        )

    ok, failures = _run_pool(manifest.samples, worker, args.workers, args.fail_fast)
    _distill_summary(out, "distill-stereo", cfg, ok, failures)
    return EXIT_PARTIAL if failures else EXIT_OK


def _report_row(r: MetricReport) -> dict:
    return {
        "split": r.split,
        "count": r.count,
        "delta": None if r.delta is None else {f"{t:.2f}": v for t, v in r.delta.items()},
        "mae": r.mae,
        "abs_rel": r.abs_rel,
        "rmse": r.rmse,
        "bad": None if r.bad is None else {f"{t:g}": v for t, v in r.bad.items()},
    }


def _row_to_report(row: dict) -> MetricReport:
    return MetricReport(
        split=row["split"],
        count=row["count"],
        delta=None if row["delta"] is None else {float(t): v for t, v in row["delta"].items()},
        mae=row["mae"],
        abs_rel=row["abs_rel"],
        rmse=row["rmse"],
        bad=None if row["bad"] is None else {float(t): v for t, v in row["bad"].items()},
    )


def _fmt(value, width: int = 8) -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return "n/a".rjust(width)
    return f"{value:.2f}".rjust(width)


def format_table(per_split: dict[str, MetricReport], method: str, space: Space, splits) -> str:
    """Aggregate table in the layout of the benchmark tables: one category
    block per split, depth columns (deltas, MAE, Abs Rel, RMSE) or disparity
    columns (bad-tau, MAE, RMSE)."""
    if space is Space.DEPTH_MM:
        headers = [f"d<{t:.2f}" for t in sorted(DELTA_THRESHOLDS, reverse=True)]
        headers += ["MAE(mm)", "AbsRel", "RMSE(mm)"]
    else:
        headers = [f"bad-{t:g}" for t in BAD_THRESHOLDS_PX] + ["MAE(px)", "RMSE(px)"]
    lines = []
    lines.append(" | ".join(["Category".ljust(8), "Method".ljust(24)] + [h.rjust(8) for h in headers]))
    lines.append("-" * len(lines[0]))
    for split in splits:
        rep = per_split.get(split)
        cells: list[str]
        if rep is None or rep.empty:
            cells = [_fmt(None) for _ in headers]
        elif space is Space.DEPTH_MM:
            cells = [_fmt(rep.delta[t] if rep.delta else None) for t in sorted(DELTA_THRESHOLDS, reverse=True)]
            cells += [_fmt(rep.mae), _fmt(rep.abs_rel), _fmt(rep.rmse)]
        else:
            cells = [_fmt(rep.bad[t] if rep.bad else None) for t in BAD_THRESHOLDS_PX]
            cells += [_fmt(rep.mae), _fmt(rep.rmse)]
        lines.append(" | ".join([split.ljust(8), method.ljust(24)] + cells))
    return "\n".join(lines) + "\n"


def _emit_plots(per_split: dict[str, MetricReport], space: Space, out_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir.mkdir(parents=True, exist_ok=True)
    splits = [s for s, r in per_split.items() if not r.empty]
    if not splits:
        return
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    scalar_names = ["MAE", "RMSE"] + (["AbsRel x100"] if space is Space.DEPTH_MM else [])
    width = 0.8 / len(splits)
    for k, split in enumerate(splits):
        rep = per_split[split]
        scalars = [rep.mae, rep.rmse]
        if space is Space.DEPTH_MM:
            scalars.append(None if rep.abs_rel is None else rep.abs_rel * 100)
        xs = np.arange(len(scalar_names)) + k * width
        axes[0].bar(xs, [0 if v is None else v for v in scalars], width=width, label=split)
        if space is Space.DEPTH_MM and rep.delta:
            ts = sorted(rep.delta)
            axes[1].bar(np.arange(len(ts)) + k * width, [rep.delta[t] for t in ts], width=width, label=split)
            axes[1].set_xticks(np.arange(len(ts)) + 0.4, [f"d<{t:.2f}" for t in ts])
            axes[1].set_ylabel("% accurate")
        elif rep.bad:
            ts = sorted(rep.bad)
            axes[1].bar(np.arange(len(ts)) + k * width, [rep.bad[t] for t in ts], width=width, label=split)
            axes[1].set_xticks(np.arange(len(ts)) + 0.4, [f"bad-{t:g}" for t in ts])
            axes[1].set_ylabel("% bad")
    axes[0].set_xticks(np.arange(len(scalar_names)) + 0.4, scalar_names)
    axes[0].set_title("error metrics")
    axes[1].set_title("threshold metrics")
    for ax in axes:
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "metrics.png", dpi=100)
    plt.close(fig)


_SPLIT_TOKENS = {"all": SPLIT_ALL, "tom": SPLIT_TOM, "other": SPLIT_OTHER}


def _parse_splits(text: str) -> list[str]:
    chosen = []
    for token in text.split(","):
        token = token.strip().lower()
        if token not in _SPLIT_TOKENS:
            raise TomDepthError(f"unknown split {token!r} (use all, tom, other)")
        chosen.append(_SPLIT_TOKENS[token])
    return chosen


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    pred_dir = Path(args.pred)
    if not pred_dir.is_dir():
        raise TomDepthError(f"prediction directory {pred_dir} does not exist")
    pred_space = Space(args.pred_space)
    splits = _parse_splits(args.splits)
    resolution = args.resolution or manifest.eval_resolution
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    records: list[dict] = []
    failures: list[tuple[str, str]] = []
    for rec in manifest.samples:
        try:
            pfm = pred_dir / f"{rec.id}.pfm"
            if not pfm.exists():
                raise TomDepthError(f"missing prediction {pfm}")
            pred = read_pfm(pfm, space=pred_space)
            gt = _load_gt(rec)
            if args.eval_space != "gt":
                target = Space(args.eval_space)
                calib = manifest.calibration_for(rec)
                if gt.space is not target:
                    if calib is None:
                        raise TomDepthError(f"sample {rec.id!r}: eval-space conversion needs calibration")
                    gt = depth_to_disparity(gt, calib) if target is Space.DISPARITY_PX else disparity_to_depth(gt, calib)
            mask = _load_mask(rec, manifest) if rec.mask is not None else None
            if resolution == "quarter":
                pred = resize_quarter(pred)
                gt = resize_quarter(gt)
                mask = resize_quarter(mask) if mask is not None else None
            reports = evaluate_sample(pred, gt, mask, rescale=args.rescale)
            for rep in reports:
                records.append({"sample": rec.id, "space": gt.space.value, **_report_row(rep)})
        except Exception as e:
            failures.append((rec.id, str(e)))
            logger.error("sample %s failed: %s", rec.id, e)
            if args.fail_fast:
                break

    lines = [json.dumps(r, sort_keys=True) for r in records]
    _atomic_write(out / "records.jsonl", ("\n".join(lines) + "\n").encode("utf-8") if lines else b"")

    if records:
        space = Space(records[0]["space"])
        per_split = {
            split: aggregate_reports(
                [_row_to_report(r) for r in records if r["split"] == split],
                weighted=not args.per_image,
            )
            for split in splits
        }
        table = format_table(per_split, args.method, space, splits)
        _atomic_write(out / "table.txt", table.encode("utf-8"))
        sys.stdout.write(table)
        if args.plots:
            _emit_plots(per_split, space, out / "plots")
    for sid, msg in failures:
        print(f"FAILED {sid}: {msg}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_report(args) -> int:
    records_path = Path(args.records)
    if not records_path.exists():
        raise TomDepthError(f"records file {records_path} does not exist")
    records = [json.loads(line) for line in records_path.read_text(encoding="utf-8").splitlines() if line]
    if not records:
        raise TomDepthError("records file is empty")
    splits = _parse_splits(args.splits)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    space = Space(records[0]["space"])
    per_split = {
        split: aggregate_reports(
            [_row_to_report(r) for r in records if r["split"] == split],
            weighted=not args.per_image,
        )
        for split in splits
    }
    table = format_table(per_split, args.method, space, splits)
    _atomic_write(out / "table.txt", table.encode("utf-8"))
    sys.stdout.write(table)
    if args.plots:
        _emit_plots(per_split, space, out / "plots")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomdepth",
        description="Distill and evaluate depth/disparity pseudo-labels for transparent and mirror surfaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_colors=True):
        p.add_argument("--manifest", required=True, help="dataset manifest JSON")
        p.add_argument("--out", required=True, help="output directory")
        if with_colors:
            p.add_argument("--colors", type=int, default=5, metavar="N", help="palette size (default 5)")
            p.add_argument("--seed", type=int, default=0, metavar="S", help="root seed (default 0)")
        p.add_argument("--workers", type=int, default=1, help="parallel sample workers")
        p.add_argument("--fail-fast", action="store_true", help="abort on the first failing sample")

    p_inpaint = sub.add_parser("inpaint", help="write the N augmented images per sample (debug)")
    add_common(p_inpaint)
    p_inpaint.set_defaults(func=cmd_inpaint)

    p_distill = sub.add_parser("distill", help="produce pseudo-label datasets")
    dsub = p_distill.add_subparsers(dest="mode", required=True)

    p_mono = dsub.add_parser("mono", help="virtual-depth labels from a mono backend")
    add_common(p_mono)
    p_mono.add_argument("--backend", required=True, help="mono backend: dir:<space>:<path> or exec:<space>:<template>")
    p_mono.set_defaults(func=cmd_distill_mono)

    p_stereo = dsub.add_parser("stereo", help="disparity labels from stereo (+ mono) backends")
    add_common(p_stereo)
    p_stereo.add_argument(
        "--strategy",
        default=Strategy.STEREO_MERGED.value,
        choices=[Strategy.STEREO_MERGED.value, Strategy.STEREO_VIRTUAL_DISPARITY.value],
    )
    p_stereo.add_argument("--stereo-backend", required=True, help="stereo backend spec")
    p_stereo.add_argument("--mono-backend", help="mono backend spec (required for stereo_merged)")
    p_stereo.set_defaults(func=cmd_distill_stereo)

    p_eval = sub.add_parser("evaluate", help="score predictions against ground truth")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--pred", required=True, help="directory of <sample_id>.pfm predictions")
    p_eval.add_argument("--pred-space", required=True, choices=[s.value for s in Space])
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--method", default="pred", help="method name for the table")
    p_eval.add_argument("--rescale", default="lse", choices=["lse", "none"])
    p_eval.add_argument("--resolution", choices=["full", "quarter"], help="override the manifest eval resolution")
    p_eval.add_argument("--splits", default="all,tom,other", help="comma list of all,tom,other")
    p_eval.add_argument("--eval-space", default="gt", choices=["gt", Space.DEPTH_MM.value, Space.DISPARITY_PX.value],
                        help="convert GT to this space before scoring (default: keep GT space)")
    p_eval.add_argument("--per-image", action="store_true", help="unweighted per-image averaging")
    p_eval.add_argument("--plots", action="store_true", help="emit bar-chart PNGs")
    p_eval.add_argument("--fail-fast", action="store_true")
    p_eval.set_defaults(func=cmd_evaluate)

    p_report = sub.add_parser("report", help="re-render table/plots from records.jsonl")
    p_report.add_argument("--records", required=True)
    p_report.add_argument("--out", required=True)
    p_report.add_argument("--method", default="pred")
    p_report.add_argument("--splits", default="all,tom,other")
    p_report.add_argument("--per-image", action="store_true")
    p_report.add_argument("--plots", action="store_true")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TomDepthError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
