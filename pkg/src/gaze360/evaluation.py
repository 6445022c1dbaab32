"""Sample- and event-level F1 scoring of predicted label tracks.

Sample F1 is the usual one-vs-rest score over per-sample confusion
counts. Event F1 uses one-to-one matching: ground-truth events of a
class are visited in temporal order and each takes the earliest
overlapping, not-yet-matched predicted event of the same class; matched
pairs are hits, leftover ground truth misses, leftover predictions false
alarms, and F1 = 2H / (2H + M + FA). Corpus scores pool counts across
recordings (micro-average) for both tiers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import (
    PRIMARY_CLASSES,
    SECONDARY_CLASSES,
    EventSegment,
    LabelTrack,
    PrimaryLabel,
    SecondaryLabel,
    samples_to_events,
)


@dataclass
class ClassScores:
    label: PrimaryLabel | SecondaryLabel
    tier: str
    sample_f1: float
    event_f1: float
    sample_tp: int = 0
    sample_fp: int = 0
    sample_fn: int = 0
    hits: int = 0
    misses: int = 0
    false_alarms: int = 0


def _f1(tp: int, fp: int, fn: int) -> float:
    # a class with no positives on either side is vacuously perfect; any
    # spurious or missed positive makes the denominator positive
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 1.0


def _check_aligned(gt: LabelTrack, pred: LabelTrack) -> None:
    if not np.array_equal(gt.t_us, pred.t_us):
        raise ValueError("tracks are not sample-aligned")


def sample_confusion(gt: LabelTrack, pred: LabelTrack,
                     label: PrimaryLabel | SecondaryLabel) -> tuple[int, int, int]:
    """(tp, fp, fn) for one class; secondary classes score the secondary tier."""
    _check_aligned(gt, pred)
    tier_gt = gt.secondary if isinstance(label, SecondaryLabel) else gt.primary
    tier_pred = pred.secondary if isinstance(label, SecondaryLabel) else pred.primary
    g = tier_gt == int(label)
    p = tier_pred == int(label)
    tp = int(np.sum(g & p))
    fp = int(np.sum(~g & p))
    fn = int(np.sum(g & ~p))
    return tp, fp, fn


def sample_f1(gt: LabelTrack, pred: LabelTrack, label: PrimaryLabel | SecondaryLabel) -> float:
    return _f1(*sample_confusion(gt, pred, label))


def _check_event_list(events: Sequence[EventSegment]) -> None:
    for a, b in zip(events, events[1:]):
        if b.start_us < a.start_us:
            raise ValueError("events must be sorted by start time")
        if a.overlaps(b):
            raise ValueError(f"overlapping events in one list: {a} / {b}")


def match_events(gt_events: Sequence[EventSegment], pred_events: Sequence[EventSegment],
                 label: PrimaryLabel | SecondaryLabel) -> tuple[int, int, int]:
    """(hits, misses, false_alarms) under earliest-overlap one-to-one matching."""
    _check_event_list(gt_events)
    _check_event_list(pred_events)
    # enum members are singletons; `is` avoids IntEnum cross-tier equality
    gts = [e for e in gt_events if e.label is label]
    preds = [e for e in pred_events if e.label is label]
    matched = [False] * len(preds)
    hits = 0
    for g in gts:
        for i, p in enumerate(preds):
            if matched[i]:
                continue
            if p.start_us >= g.end_us:
                break
            if g.overlaps(p):
                matched[i] = True
                hits += 1
                break
    misses = len(gts) - hits
    false_alarms = len(preds) - hits
    return hits, misses, false_alarms


def event_f1(gt_events: Sequence[EventSegment], pred_events: Sequence[EventSegment],
             label: PrimaryLabel | SecondaryLabel) -> float:
    hits, misses, fas = match_events(gt_events, pred_events, label)
    return _f1(hits, fas, misses)


def evaluate_pair(gt: LabelTrack, pred: LabelTrack) -> list[ClassScores]:
    """Scores for one recording (convenience wrapper around evaluate_corpus)."""
    return evaluate_corpus([(gt, pred)])


def evaluate_corpus(pairs: Iterable[tuple[LabelTrack, LabelTrack]]) -> list[ClassScores]:
    """Pooled per-class scores over (ground truth, prediction) pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one (gt, pred) pair")
    classes: list[tuple[PrimaryLabel | SecondaryLabel, str]] = [
        (label, "primary") for label in PRIMARY_CLASSES
    ] + [(label, "secondary") for label in SECONDARY_CLASSES]
    totals = {(tier, label.name): np.zeros(6, dtype=np.int64) for label, tier in classes}
    for gt, pred in pairs:
        _check_aligned(gt, pred)
        gt_prim, gt_sec = samples_to_events(gt)
        pred_prim, pred_sec = samples_to_events(pred)
        for label, tier in classes:
            tp, fp, fn = sample_confusion(gt, pred, label)
            gt_events = gt_sec if tier == "secondary" else gt_prim
            pred_events = pred_sec if tier == "secondary" else pred_prim
            h, m, fa = match_events(gt_events, pred_events, label)
            totals[(tier, label.name)] += np.array([tp, fp, fn, h, m, fa])
    out = []
    for label, tier in classes:
        tp, fp, fn, h, m, fa = (int(v) for v in totals[(tier, label.name)])
        out.append(ClassScores(
            label=label, tier=tier,
            sample_f1=_f1(tp, fp, fn), event_f1=_f1(h, fa, m),
            sample_tp=tp, sample_fp=fp, sample_fn=fn,
            hits=h, misses=m, false_alarms=fa,
        ))
    return out


def _absent(s: ClassScores) -> bool:
    return (s.sample_tp + s.sample_fp + s.sample_fn
            + s.hits + s.misses + s.false_alarms) == 0


def scores_as_rows(scores: Sequence[ClassScores]) -> list[dict]:
    # classes absent from both sides report dashes instead of the vacuous 1.0
    return [
        {
            "tier": s.tier,
            "class": s.label.name,
            "sample_f1": "-" if _absent(s) else round(s.sample_f1, 4),
            "event_f1": "-" if _absent(s) else round(s.event_f1, 4),
            "hits": s.hits,
            "misses": s.misses,
            "false_alarms": s.false_alarms,
        }
        for s in scores
    ]


def format_report(scores: Sequence[ClassScores], fmt: str = "md") -> str:
    rows = scores_as_rows(scores)
    if fmt == "csv":
        lines = ["tier,class,sample_f1,event_f1,hits,misses,false_alarms"]
        lines += [
            f"{r['tier']},{r['class']},{r['sample_f1']},{r['event_f1']},"
            f"{r['hits']},{r['misses']},{r['false_alarms']}"
            for r in rows
        ]
        return "\n".join(lines) + "\n"
    if fmt == "md":
        lines = [
            "| tier | class | sample F1 | event F1 | hits | misses | false alarms |",
            "|---|---|---|---|---|---|---|",
        ]
        lines += [
            f"| {r['tier']} | {r['class']} | {r['sample_f1']} | {r['event_f1']} "
            f"| {r['hits']} | {r['misses']} | {r['false_alarms']} |"
            for r in rows
        ]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
