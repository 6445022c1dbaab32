"""Command-line entry point.

Subcommands: ingest, synth, classify, evaluate, optimize, serve, stats.
All outputs carry a provenance header (tool version, variant, thresholds)
and are written atomically (temp file + rename). Exit codes: 0 success,
1 data error (with a machine-readable JSON line on stderr), 2 usage.
The GAZE360_DATA_ROOT environment variable supplies the default data root
for `serve` and `stats`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    FormatError,
    LabelTrack,
    PrimaryLabel,
    Recording,
    SecondaryLabel,
    head_motion_fraction,
    parse_labels,
    parse_recording,
    samples_to_events,
    serialize_events,
    serialize_labels,
    serialize_recording,
)
from .detector import ThresholdSet, VARIANTS, run_pipeline
from .evaluation import evaluate_corpus, format_report
from .ingest import ColumnMapping, convert_recording
from .optimizer import fit_gaze_thresholds, fit_saccade_thresholds
from .synth import PhaseKind, PhaseSpec, five_phase_script, generate

DATA_ROOT_ENV = "GAZE360_DATA_ROOT"


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def provenance(variant: str | None = None, thresholds: ThresholdSet | None = None
               ) -> list[tuple[str, str]]:
    items = [("tool", f"gaze360 {__version__}")]
    if variant is not None:
        items.append(("variant", variant))
    if thresholds is not None:
        items.append(("thresholds", " ".join(
            f"{k}={v:g}" for k, v in thresholds.to_dict().items())))
    return items


def load_thresholds(path: str | None) -> ThresholdSet:
    if path is None:
        return ThresholdSet()
    return ThresholdSet.from_dict(json.loads(Path(path).read_text()))


def _recording_paths(inputs: list[str]) -> list[Path]:
    paths: list[Path] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.rec")))
        else:
            paths.append(p)
    if not paths:
        raise FormatError("no recordings found")
    return paths


# --- subcommands -------------------------------------------------------------

def cmd_ingest(args: argparse.Namespace) -> int:
    mapping = None
    if args.mapping:
        mapping = ColumnMapping.from_json(Path(args.mapping).read_text())
    out_dir = Path(args.out) if args.out else None
    failures = 0
    for path in _recording_paths(args.inputs):
        if mapping is not None:
            rec = convert_recording(path.read_text(), mapping, source_name=path.name)
        else:
            rec = parse_recording(path.read_bytes())
        if args.validate:
            issues = not rec.report.ok() if rec.report is not None else False
            out_of_fov = int(rec.fov_bounds_exceeded().sum())
            print(f"{path}: {'issues' if issues else 'ok'}"
                  + (f", {out_of_fov} samples outside headset FOV" if out_of_fov else ""))
            if issues:
                print(rec.report.summary())
                failures += 1
        if out_dir is not None:
            atomic_write(out_dir / f"{path.stem}.rec", serialize_recording(rec))
    return 1 if (args.strict and failures) else 0


def _phases_from_file(path: str) -> list[PhaseSpec]:
    raw = json.loads(Path(path).read_text())
    phases = []
    for item in raw:
        kind = PhaseKind(item.pop("kind"))
        phases.append(PhaseSpec(kind=kind, **item))
    return phases


def cmd_synth(args: argparse.Namespace) -> int:
    phases = _phases_from_file(args.phases) if args.phases else five_phase_script(args.noise)
    out = Path(args.out)
    for k in range(args.count):
        seed = args.seed + k
        rec, truth = generate(phases, rate_hz=args.rate, seed=seed,
                              video_id="synthetic", observer_id=f"synth{seed:03d}")
        stem = f"synthetic_{seed:03d}"
        atomic_write(out / f"{stem}.rec", serialize_recording(rec))
        atomic_write(out / f"{stem}.labels",
                     serialize_labels(truth, provenance() + [("seed", str(seed))]))
        print(f"wrote {out / stem}.rec + .labels ({rec.n_samples} samples)")
    return 0


def _classify_one(task: tuple[str, str, dict, str]) -> str:
    rec_path, out_dir, thr_dict, variant = task
    rec = parse_recording(Path(rec_path).read_bytes())
    thr = ThresholdSet.from_dict(thr_dict)
    track = run_pipeline(rec, variant, thr)
    prim_events, sec_events = samples_to_events(track, rate_hz=rec.meta.sampling_rate_hz)
    stem = Path(rec_path).stem
    prov = provenance(variant, thr)
    atomic_write(Path(out_dir) / f"{stem}.labels", serialize_labels(track, prov))
    atomic_write(Path(out_dir) / f"{stem}.primary.events",
                 serialize_events(prim_events, "primary", prov))
    atomic_write(Path(out_dir) / f"{stem}.secondary.events",
                 serialize_events(sec_events, "secondary", prov))
    return stem


def cmd_classify(args: argparse.Namespace) -> int:
    thr = load_thresholds(args.thresholds)
    paths = _recording_paths(args.recordings)
    tasks = [(str(p), args.out, thr.to_dict(), args.variant) for p in paths]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            stems = list(pool.map(_classify_one, tasks))
    else:
        stems = [_classify_one(t) for t in tasks]
    for stem in stems:
        print(f"classified {stem} ({args.variant})")
    return 0


def _label_pairs(gt_dir: str, pred_dir: str) -> list[tuple[LabelTrack, LabelTrack]]:
    gt_files = {p.stem: p for p in sorted(Path(gt_dir).glob("*.labels"))}
    pred_files = {p.stem: p for p in sorted(Path(pred_dir).glob("*.labels"))}
    common = sorted(set(gt_files) & set(pred_files))
    if not common:
        raise FormatError(f"no matching label files between {gt_dir} and {pred_dir}")
    return [
        (parse_labels(gt_files[s].read_bytes()), parse_labels(pred_files[s].read_bytes()))
        for s in common
    ]


def cmd_evaluate(args: argparse.Namespace) -> int:
    scores = evaluate_corpus(_label_pairs(args.gt, args.pred))
    report = format_report(scores, args.report)
    if args.out:
        atomic_write(Path(args.out), report)
    else:
        print(report, end="")
    return 0


def _manifest_pairs(path: str, split: str) -> list[tuple[Recording, LabelTrack]]:
    manifest = json.loads(Path(path).read_text())
    base = Path(path).parent
    pairs = []
    for entry in manifest[split]:
        rec = parse_recording((base / entry["recording"]).read_bytes())
        track = parse_labels((base / entry["labels"]).read_bytes())
        pairs.append((rec, track))
    if not pairs:
        raise FormatError(f"manifest split {split!r} is empty")
    return pairs


def _grid_from_file(path: str | None) -> list[tuple[float, float]] | None:
    if path is None:
        return None
    return [(float(lo), float(hi)) for lo, hi in json.loads(Path(path).read_text())]


def cmd_optimize(args: argparse.Namespace) -> int:
    pairs = _manifest_pairs(args.train, "train")
    thr = load_thresholds(args.thresholds)
    if args.stage in ("saccade", "both"):
        res = fit_saccade_thresholds(pairs, _grid_from_file(args.grid), thr, args.variant)
        thr = ThresholdSet.from_dict({**thr.to_dict(), "sacc_low": res.low, "sacc_high": res.high})
        print(f"saccade stage: ({res.low}, {res.high}) objective {res.objective:.4f}")
    if args.stage in ("gaze", "both"):
        grid = _grid_from_file(args.gaze_grid if args.stage == "both" else args.grid)
        res = fit_gaze_thresholds(pairs, (thr.sacc_low, thr.sacc_high), grid, thr, args.variant)
        thr = ThresholdSet.from_dict({**thr.to_dict(), "gaze_low": res.low, "gaze_high": res.high})
        print(f"gaze stage: ({res.low}, {res.high}) objective {res.objective:.4f}")
    atomic_write(Path(args.out), json.dumps(thr.to_dict(), indent=2) + "\n")
    print(f"wrote {args.out}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    out: dict = {}
    if args.labels:
        counts = {label.name: 0 for label in PrimaryLabel}
        sec_counts = {label.name: 0 for label in SecondaryLabel}
        event_counts = {label.name: 0 for label in PrimaryLabel if label != PrimaryLabel.UNLABELLED}
        sec_event_counts = {label.name: 0 for label in SecondaryLabel if label != SecondaryLabel.NONE}
        total = 0
        for path in sorted(Path(args.labels).glob("*.labels")):
            track = parse_labels(path.read_bytes())
            total += track.n_samples
            for label in PrimaryLabel:
                counts[label.name] += int(np.sum(track.primary == label))
            for label in SecondaryLabel:
                sec_counts[label.name] += int(np.sum(track.secondary == label))
            prim_ev, sec_ev = samples_to_events(track)
            for ev in prim_ev:
                event_counts[ev.label.name] += 1
            for ev in sec_ev:
                sec_event_counts[ev.label.name] += 1
        if total == 0:
            raise FormatError(f"no label files under {args.labels}")
        out["samples"] = total
        out["primary_share"] = {k: round(v / total, 4) for k, v in counts.items()}
        out["secondary_share"] = {k: round(v / total, 4) for k, v in sec_counts.items()}
        out["primary_events"] = event_counts
        out["secondary_events"] = sec_event_counts
    if args.recordings:
        fracs = []
        weights = []
        for path in sorted(Path(args.recordings).glob("*.rec")):
            rec = parse_recording(path.read_bytes())
            fracs.append(head_motion_fraction(rec, args.head_threshold))
            weights.append(rec.n_samples)
        if fracs:
            pooled = float(np.average(fracs, weights=weights))
            out["head_motion_fraction"] = round(pooled, 4)
            out["head_motion_threshold_deg_s"] = args.head_threshold
    if not out:
        raise FormatError("stats needs --labels and/or --recordings")
    print(json.dumps(out, indent=2))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server.app import create_app

    root = args.data_root or os.environ.get(DATA_ROOT_ENV)
    if not root:
        raise FormatError(f"serve needs --data-root or ${DATA_ROOT_ENV}")
    ui_dir = Path(args.ui_dir) if args.ui_dir else None
    if ui_dir is None:
        candidate = Path.cwd() / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(Path(root), frontend_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaze360",
        description="Eye movement classification for 360-degree head-free eye tracking",
    )
    parser.add_argument("--version", action="version", version=f"gaze360 {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and/or convert recordings")
    p.add_argument("inputs", nargs="+", help="recording files or directories")
    p.add_argument("--from", dest="mapping", metavar="MAPPING",
                   help="JSON column-mapping file describing a foreign dataset layout")
    p.add_argument("--validate", action="store_true", help="print validation reports")
    p.add_argument("--strict", action="store_true", help="exit 1 if any file has issues")
    p.add_argument("--out", help="directory for canonical output files")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate labelled synthetic recordings")
    p.add_argument("--phases", help="JSON phase list; default is the five-phase script")
    p.add_argument("--noise", type=float, default=0.15, help="gaze jitter SD in degrees")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1, help="number of recordings (seed, seed+1, ...)")
    p.add_argument("--rate", type=float, default=120.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("classify", help="run the classifier over recordings")
    p.add_argument("recordings", nargs="+", help="recording files or directories")
    p.add_argument("--variant", choices=VARIANTS, default="combined")
    p.add_argument("--thresholds", help="JSON threshold file; default Table values")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--gt", required=True, help="directory of ground-truth .labels files")
    p.add_argument("--pred", required=True, help="directory of predicted .labels files")
    p.add_argument("--report", choices=("md", "csv"), default="md")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="staged threshold grid search")
    p.add_argument("--train", required=True, help="JSON manifest with a 'train' split")
    p.add_argument("--stage", choices=("saccade", "gaze", "both"), required=True)
    p.add_argument("--grid", help="JSON [[low, high], ...] grid for the selected stage")
    p.add_argument("--gaze-grid", help="gaze grid when --stage both")
    p.add_argument("--thresholds", help="starting threshold file")
    p.add_argument("--variant", choices=VARIANTS, default="combined")
    p.add_argument("--out", required=True, help="output threshold JSON")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("stats", help="corpus label shares and head-motion fraction")
    p.add_argument("--labels", help="directory of .labels files")
    p.add_argument("--recordings", help="directory of .rec files")
    p.add_argument("--head-threshold", type=float, default=10.0)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--data-root", help=f"defaults to ${DATA_ROOT_ENV}")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8360)
    p.add_argument("--ui-dir", help="built frontend to serve at /; default ./frontend/dist")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, FileNotFoundError, ValueError, KeyError) as exc:
        print(json.dumps({"error": str(exc), "kind": type(exc).__name__}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
