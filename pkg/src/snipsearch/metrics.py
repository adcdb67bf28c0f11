"""Detection metrics: IoU, NMS, AP/AR/mAP, and human-study aggregation.

The evaluation follows the standard one-class object-detection recipe:
detections are pooled across images, greedily matched to ground truth at
an IoU threshold, and average precision is integrated over the 101-point
interpolated precision-recall curve. mAP averages AP over the ten IoU
thresholds 0.50, 0.55, ..., 0.95. All reported metrics are percentages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import MalformedPrediction
from .layout import BBox, iou
from .mining import PairRecord

IOU_SWEEP = [0.50 + 0.05 * i for i in range(10)]
RECALL_POINTS = [i / 100.0 for i in range(101)]


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    score: float

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"detection confidence {self.score} outside [0, 1]")


@dataclass(frozen=True)
class EvalReport:
    ap50: float
    ap75: float
    ar50: float
    ar75: float
    map: float

    def to_dict(self) -> dict:
        return {
            "ap50": round(self.ap50, 2),
            "ap75": round(self.ap75, 2),
            "ar50": round(self.ar50, 2),
            "ar75": round(self.ar75, 2),
            "map": round(self.map, 2),
        }


def nms(dets: Sequence[Detection], iou_th: float) -> list[Detection]:
    """Greedy non-maximum suppression by descending score.

    A detection is kept iff its IoU with every already-kept detection is
    at most iou_th; score ties break by input position.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    kept: list[Detection] = []
    for i in order:
        cand = dets[i]
        if all(iou(cand.bbox, k.bbox) <= iou_th for k in kept):
            kept.append(cand)
    return kept


def _match_pooled(
    preds: Sequence[Sequence[Detection]],
    gts: Sequence[Sequence[BBox]],
    iou_th: float,
) -> tuple[list[bool], int]:
    """Pooled greedy matching; returns per-detection TP flags in score order."""
    pooled: list[tuple[float, int, int]] = []
    for img, dets in enumerate(preds):
        for j, det in enumerate(dets):
            pooled.append((det.score, img, j))
    pooled.sort(key=lambda t: (-t[0], t[1], t[2]))
    matched: list[set[int]] = [set() for _ in gts]
    flags: list[bool] = []
    for score, img, j in pooled:
        det = preds[img][j]
        best_iou = 0.0
        best_gt = -1
        for g, gt_box in enumerate(gts[img]):
            if g in matched[img]:
                continue
            v = iou(det.bbox, gt_box)
            if v >= iou_th and v > best_iou:
                best_iou = v
                best_gt = g
        if best_gt >= 0:
            matched[img].add(best_gt)
            flags.append(True)
        else:
            flags.append(False)
    n_gt = sum(len(g) for g in gts)
    return flags, n_gt


def average_precision(
    preds: Sequence[Sequence[Detection]],
    gts: Sequence[Sequence[BBox]],
    iou_th: float,
) -> float:
    """101-point interpolated AP (percentage) at one IoU threshold."""
    flags, n_gt = _match_pooled(preds, gts, iou_th)
    if n_gt == 0:
        return 0.0
    precisions: list[float] = []
    recalls: list[float] = []
    tp = 0
    for rank, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
        precisions.append(tp / rank)
        recalls.append(tp / n_gt)
    # Monotone precision envelope from the right.
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    total = 0.0
    j = 0
    for r in RECALL_POINTS:
        while j < len(recalls) and recalls[j] < r:
            j += 1
        if j < len(precisions):
            total += precisions[j]
    return total / len(RECALL_POINTS) * 100.0


def average_recall(
    preds: Sequence[Sequence[Detection]],
    gts: Sequence[Sequence[BBox]],
    iou_th: float,
    max_dets: int = 100,
) -> float:
    """Fraction of ground truths matched by top-max_dets detections, x100."""
    n_gt = sum(len(g) for g in gts)
    if n_gt == 0:
        return 0.0
    capped = []
    for dets in preds:
        order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
        capped.append([dets[i] for i in order[:max_dets]])
    flags, _ = _match_pooled(capped, gts, iou_th)
    return sum(flags) / n_gt * 100.0


def mean_ap(
    preds: Sequence[Sequence[Detection]],
    gts: Sequence[Sequence[BBox]],
) -> float:
    """Mean AP over IoU thresholds 0.50:0.05:0.95 (percentage)."""
    return sum(average_precision(preds, gts, t) for t in IOU_SWEEP) / len(IOU_SWEEP)


def evaluate_detections(
    preds: Sequence[Sequence[Detection]],
    gts: Sequence[Sequence[BBox]],
    conf_th: float = 0.4,
    nms_iou: float = 0.45,
) -> EvalReport:
    """Confidence-filter and NMS the detections, then compute the report."""
    cleaned = [nms([d for d in dets if d.score >= conf_th], nms_iou) for dets in preds]
    return EvalReport(
        ap50=average_precision(cleaned, gts, 0.50),
        ap75=average_precision(cleaned, gts, 0.75),
        ar50=average_recall(cleaned, gts, 0.50),
        ar75=average_recall(cleaned, gts, 0.75),
        map=mean_ap(cleaned, gts),
    )


def read_predictions(path: str, n_pairs: int) -> list[list[Detection]]:
    """Read a line-delimited predictions file keyed by pair index."""
    preds: list[list[Detection]] = [[] for _ in range(n_pairs)]
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                pair_id = int(obj["pair_id"])
                dets = [
                    Detection(BBox(*d["bbox"]), float(d["score"]))
                    for d in obj["detections"]
                ]
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise MalformedPrediction(f"predictions line {line_no}: {exc}") from exc
            if not (0 <= pair_id < n_pairs):
                raise MalformedPrediction(
                    f"predictions line {line_no}: pair_id {pair_id} outside 0..{n_pairs - 1}"
                )
            preds[pair_id].extend(dets)
    return preds


def evaluate_files(
    pred_path: str,
    pairs: Sequence[PairRecord],
    conf_th: float = 0.4,
    nms_iou: float = 0.45,
) -> EvalReport:
    """Evaluate a predictions file against a mined pair dataset.

    The pair at line i of the dataset is image i; its ground-truth boxes
    are the pair's region boxes.
    """
    gts = [[r.bbox for r in pair.gt_regions] for pair in pairs]
    preds = read_predictions(pred_path, len(pairs))
    return evaluate_detections(preds, gts, conf_th, nms_iou)


@dataclass(frozen=True)
class HumanSplitCounts:
    """Aggregated region judgments for one evaluation split.

    highlighted_similar: highlighted regions the judges deemed similar.
    similar_not_highlighted: similar regions the system missed.
    highlighted_not_similar: highlighted regions judged dissimilar.
    nonexact_correct: correctly highlighted regions that are not exact copies.
    complex_count: samples whose layout pattern was flagged hard.
    n_samples: number of samples judged in the split.
    """

    highlighted_similar: int
    similar_not_highlighted: int
    highlighted_not_similar: int
    nonexact_correct: int
    complex_count: int
    n_samples: int

    def __post_init__(self):
        counts = (
            self.highlighted_similar,
            self.similar_not_highlighted,
            self.highlighted_not_similar,
            self.nonexact_correct,
            self.complex_count,
            self.n_samples,
        )
        if any(c < 0 for c in counts):
            raise ValueError("counts must be non-negative")
        if self.nonexact_correct > self.highlighted_similar:
            raise ValueError("nonexact_correct cannot exceed highlighted_similar")


def aggregate_counts(rows: Sequence[HumanSplitCounts]) -> HumanSplitCounts:
    return HumanSplitCounts(
        sum(r.highlighted_similar for r in rows),
        sum(r.similar_not_highlighted for r in rows),
        sum(r.highlighted_not_similar for r in rows),
        sum(r.nonexact_correct for r in rows),
        sum(r.complex_count for r in rows),
        sum(r.n_samples for r in rows),
    )


def human_split_metrics(
    counts: HumanSplitCounts,
) -> tuple[Optional[float], Optional[float], Optional[float], Optional[float], Optional[float]]:
    """(precision, recall, f1, pct_complex, pct_nonexact) percentages.

    Zero denominators yield None (undefined), never a silent 0.
    """
    hs = counts.highlighted_similar
    hn = counts.highlighted_not_similar
    sn = counts.similar_not_highlighted
    precision = hs / (hs + hn) * 100.0 if hs + hn > 0 else None
    recall = hs / (hs + sn) * 100.0 if hs + sn > 0 else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    pct_complex = (
        counts.complex_count / counts.n_samples * 100.0 if counts.n_samples > 0 else None
    )
    pct_nonexact = counts.nonexact_correct / hs * 100.0 if hs > 0 else None
    return precision, recall, f1, pct_complex, pct_nonexact


def human_study_aggregate(rows: Sequence[Sequence[float]]) -> list[float]:
    """Unweighted per-column mean over split metric rows."""
    if not rows:
        raise ValueError("no rows to aggregate")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged metric rows")
    return [sum(r[c] for r in rows) / len(rows) for c in range(width)]


HUMAN_COUNT_COLUMNS = (
    "split",
    "highlighted_similar",
    "similar_not_highlighted",
    "highlighted_not_similar",
    "nonexact_correct",
    "complex_count",
    "n_samples",
)


def read_human_counts(path: str) -> dict[str, HumanSplitCounts]:
    """Read per-split (or per-sample) judgment counts from a CSV file.

    Header row must name the columns of HUMAN_COUNT_COLUMNS in any order;
    rows sharing a split value are summed, so one row per sample and one
    row per split are both accepted.
    """
    import csv

    per_split: dict[str, list[HumanSplitCounts]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(HUMAN_COUNT_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise MalformedPrediction(
                f"human-study file missing columns: {sorted(missing)}"
            )
        for i, row in enumerate(reader):
            try:
                counts = HumanSplitCounts(
                    int(row["highlighted_similar"]),
                    int(row["similar_not_highlighted"]),
                    int(row["highlighted_not_similar"]),
                    int(row["nonexact_correct"]),
                    int(row["complex_count"]),
                    int(row["n_samples"]),
                )
            except (TypeError, ValueError) as exc:
                raise MalformedPrediction(f"human-study row {i}: {exc}") from exc
            per_split.setdefault(str(row["split"]), []).append(counts)
    if not per_split:
        raise MalformedPrediction("human-study file has no rows")
    return {split: aggregate_counts(rows) for split, rows in sorted(per_split.items())}


def human_study_report(per_split: dict[str, HumanSplitCounts]) -> dict:
    """Per-split metric rows plus their unweighted average, to 2 decimals."""
    order = ("precision", "recall", "f1", "pct_complex", "pct_nonexact")
    rows = {}
    complete: list[Sequence[float]] = []
    for split, counts in per_split.items():
        p, r, f1, pc, pn = human_split_metrics(counts)
        values = (p, r, f1, pc, pn)
        rows[split] = {
            name: (None if v is None else round(v, 2))
            for name, v in zip(order, values)
        }
        if all(v is not None for v in values):
            complete.append([v for v in values if v is not None])
    report: dict = {"splits": rows}
    if complete:
        mean = human_study_aggregate(complete)
        report["average"] = {name: round(v, 2) for name, v in zip(order, mean)}
    return report
