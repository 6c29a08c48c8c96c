"""Scenario evaluation harness: pair planning, PCE scoring, ROC/AUC reports.

A corpus manifest lists videos with device / content / origin / motion /
resolution labels. Six scenarios pair reference and query videos by content
and origin; every reference is matched against every query of the same
resolution, matching pairs being those from the same device. Scores feed a
threshold-sweep ROC whose trapezoidal AUC equals the Mann-Whitney U statistic
with half credit for ties.
"""

import csv
import hashlib
import io
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, FormatError, RejectedInputError
from .fingerprint import (
    Fingerprint,
    accumulate,
    finalize,
    load_fingerprint,
    new_accumulator,
    save_fingerprint,
)
from .formats import atomic_write
from .h264.masks import load_masks
from .matcher import PceParams, link_videos
from .noise import DenoiseParams, extract_noise
from .y4m import read_y4m

MANIFEST_HEADER = [
    "path", "mask_path", "device_id", "content", "origin", "motion",
    "resolution_class",
]
SCORE_HEADER = [
    "scenario", "method", "ref_path", "query_path", "ref_device",
    "query_device", "is_matching", "pce", "status",
]
SUMMARY_HEADER = [
    "scenario", "method", "resolution_class", "auc", "n_matching",
    "n_nonmatching",
]

CONTENTS = ("flat", "natural")
ORIGINS = ("native", "youtube")
MOTIONS = ("still", "move", "pan")
METHODS = ("c1", "c2", "block")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    mask_path: str
    device_id: str
    content: str
    origin: str
    motion: str
    resolution_class: str


@dataclass(frozen=True)
class Scenario:
    """Reference/query content+origin filters for one evaluation scenario."""

    id: int
    reference: tuple  # (content, origin)
    query: tuple


SCENARIOS = {
    1: Scenario(1, ("flat", "native"), ("natural", "native")),
    2: Scenario(2, ("natural", "native"), ("natural", "native")),
    3: Scenario(3, ("flat", "native"), ("natural", "youtube")),
    4: Scenario(4, ("natural", "native"), ("natural", "youtube")),
    5: Scenario(5, ("flat", "youtube"), ("natural", "youtube")),
    6: Scenario(6, ("natural", "youtube"), ("natural", "youtube")),
}


def load_manifest(source):
    """Parse and validate a corpus manifest CSV (path or file object)."""
    if hasattr(source, "read"):
        reader = csv.reader(source)
        rows = list(reader)
    else:
        with open(source, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    if not rows:
        raise FormatError("manifest is empty")
    if rows[0] != MANIFEST_HEADER:
        raise FormatError(
            f"manifest header {rows[0]!r} does not match {MANIFEST_HEADER!r}"
        )
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(MANIFEST_HEADER):
            raise FormatError(
                f"manifest line {lineno}: {len(row)} fields, expected "
                f"{len(MANIFEST_HEADER)}"
            )
        entry = ManifestEntry(*row)
        if not entry.device_id:
            raise FormatError(f"manifest line {lineno}: empty device_id")
        if entry.content not in CONTENTS:
            raise FormatError(
                f"manifest line {lineno}: bad content {entry.content!r}"
            )
        if entry.origin not in ORIGINS:
            raise FormatError(
                f"manifest line {lineno}: bad origin {entry.origin!r}"
            )
        if entry.motion not in MOTIONS:
            raise FormatError(
                f"manifest line {lineno}: bad motion {entry.motion!r}"
            )
        if not entry.resolution_class:
            raise FormatError(f"manifest line {lineno}: empty resolution_class")
        entries.append(entry)
    return entries


def plan_pairs(manifest, scenario):
    """Exhaustive reference x query pairing under the scenario filters.

    Same-resolution pairs only, self-pairs (identical file both sides)
    excluded; a pair matches iff both sides share a device_id. The manifest
    is canonically sorted first so row order never changes the plan.
    """
    if isinstance(scenario, int):
        scenario = SCENARIOS[scenario]
    entries = sorted(manifest, key=lambda e: (e.path, e.device_id))
    refs = [e for e in entries if (e.content, e.origin) == scenario.reference]
    queries = [e for e in entries if (e.content, e.origin) == scenario.query]
    plan = []
    for ref in refs:
        for query in queries:
            if ref.path == query.path:
                continue
            if ref.resolution_class != query.resolution_class:
                continue
            plan.append((ref, query, ref.device_id == query.device_id))
    if not plan:
        warnings.warn(
            f"scenario {scenario.id}: no pairs under filters "
            f"ref={scenario.reference} query={scenario.query}",
            stacklevel=2,
        )
    return plan


class FingerprintCache:
    """Disk cache of per-video fingerprints keyed by (video, method, params)."""

    def __init__(self, cache_dir, denoise_params: DenoiseParams = DenoiseParams()):
        self.cache_dir = cache_dir
        self.denoise_params = denoise_params
        self._params_tag = hashlib.blake2b(
            repr(denoise_params).encode(), digest_size=8
        ).hexdigest()
        if cache_dir:
            os.makedirs(cache_dir, exist_ok=True)
        self._mem = {}

    def _key(self, entry: ManifestEntry, method):
        raw = f"{os.path.abspath(entry.path)}|{method}|{self._params_tag}"
        return hashlib.blake2b(raw.encode(), digest_size=16).hexdigest()

    def get(self, entry: ManifestEntry, method) -> Fingerprint:
        key = self._key(entry, method)
        if key in self._mem:
            return self._mem[key]
        path = os.path.join(self.cache_dir, key + ".prnufp") if self.cache_dir else None
        if path and os.path.exists(path):
            fp = load_fingerprint(path)
        else:
            fp = estimate_video_fingerprint(
                entry.path, method, mask_path=entry.mask_path,
                denoise_params=self.denoise_params,
            )
            if path:
                save_fingerprint(fp, path)
        self._mem[key] = fp
        return fp


def estimate_video_fingerprint(video_path, method,
                               mask_path="",
                               denoise_params: DenoiseParams = DenoiseParams()):
    """One video's fingerprint under a frame policy.

    c1 uses only I frames (types come from the mask file, never from file
    names), c2 uses every frame, block applies the per-frame masks to the
    compression-aware estimator.
    """
    if method not in METHODS:
        raise RejectedInputError(f"unknown method {method!r}")
    frames, width, height = read_y4m(video_path)
    masks = None
    if method in ("c1", "block"):
        if not mask_path:
            raise RejectedInputError(
                f"method {method} requires a mask file for {video_path}"
            )
        masks = load_masks(mask_path)
        if len(masks) != len(frames):
            raise FormatError(
                f"{mask_path}: {len(masks)} masks for {len(frames)} frames"
            )
        if (masks[0].width, masks[0].height) != (width, height):
            raise FormatError(
                f"{mask_path}: mask dims {masks[0].width}x{masks[0].height} "
                f"vs video {width}x{height}"
            )
    acc = new_accumulator(height, width, masked_mode=(method == "block"))
    used = 0
    for i, frame in enumerate(frames):
        if method == "c1" and masks[i].frame_type != "I":
            continue
        plane = frame.astype(np.float64)
        residual = extract_noise(plane, denoise_params)
        if method == "block":
            accumulate(acc, plane, residual, masks[i].bits)
        else:
            accumulate(acc, plane, residual)
        used += 1
    if used == 0:
        raise RejectedInputError(
            f"{video_path}: no frames selected by method {method}"
        )
    return finalize(acc, source_label=f"{video_path}:{method}")


def run_plan(plan, method, scenario_id, cache: FingerprintCache,
             pce_params: PceParams = PceParams(aligned_mode=True)):
    """Score every pair; per-pair failures are recorded, not fatal.

    Returns (rows, failures): rows follow SCORE_HEADER ordering and are
    sorted by (ref_path, query_path) so output bytes are reproducible.
    """
    rows = []
    failures = []
    for ref, query, is_matching in sorted(
        plan, key=lambda p: (p[0].path, p[1].path)
    ):
        try:
            fp_ref = cache.get(ref, method)
            fp_query = cache.get(query, method)
            result = link_videos(fp_ref, fp_query, params=pce_params)
            pce_text = f"{result.pce:.12g}"
            status = "ok"
        except Exception as exc:  # noqa: BLE001 - summary lists all failures
            pce_text = ""
            status = f"error:{type(exc).__name__}"
            failures.append((ref.path, query.path, str(exc)))
        rows.append([
            str(scenario_id), method, ref.path, query.path,
            ref.device_id, query.device_id,
            "1" if is_matching else "0", pce_text, status,
        ])
    return rows, failures


@dataclass(frozen=True)
class RocReport:
    method: str
    scenario_id: int
    resolution_class: str
    points: tuple  # ((fpr, tpr), ...) sorted by descending threshold
    auc: float
    n_matching: int
    n_nonmatching: int


def roc_auc(scores, method="", scenario_id=0, resolution_class=""):
    """Threshold-sweep ROC over (value, is_matching) pairs.

    The sweep visits every distinct score with the decision "value >=
    threshold"; the trapezoidal integral over the resulting staircase equals
    the Mann-Whitney U statistic with half credit for tied scores.
    """
    values = np.asarray([s for s, _ in scores], dtype=np.float64)
    labels = np.asarray([bool(m) for _, m in scores])
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError(
            f"ROC needs both classes, got {n_pos} matching / {n_neg} non-matching"
        )
    if not np.all(np.isfinite(values) | np.isposinf(values)):
        raise RejectedInputError("scores must be finite or +inf")
    points = [(0.0, 0.0)]
    for t in np.unique(values)[::-1]:
        hit = values >= t
        tpr = float(np.count_nonzero(hit & labels)) / n_pos
        fpr = float(np.count_nonzero(hit & ~labels)) / n_neg
        points.append((fpr, tpr))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocReport(
        method=method,
        scenario_id=scenario_id,
        resolution_class=resolution_class,
        points=tuple(points),
        auc=auc,
        n_matching=n_pos,
        n_nonmatching=n_neg,
    )


def rows_to_scores(rows):
    """Extract (pce, is_matching) pairs from successful score rows."""
    return [
        (float(row[7]), row[6] == "1")
        for row in rows
        if row[8] == "ok"
    ]


def _csv_bytes(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def write_scores(rows, path):
    atomic_write(path, _csv_bytes(SCORE_HEADER, rows))


def emit_report(reports, out_dir, score_rows=None):
    """Write the AUC summary, optional score tables, and SVG ROC plots.

    One plot per (scenario, resolution_class) with a curve per method.
    Output bytes are reproducible across runs.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    summary_rows = [
        [str(r.scenario_id), r.method, r.resolution_class, f"{r.auc:.12g}",
         str(r.n_matching), str(r.n_nonmatching)]
        for r in reports
    ]
    summary_path = os.path.join(out_dir, "auc_summary.csv")
    atomic_write(summary_path, _csv_bytes(SUMMARY_HEADER, summary_rows))
    written.append(summary_path)
    if score_rows:
        scores_path = os.path.join(out_dir, "scores.csv")
        write_scores(score_rows, scores_path)
        written.append(scores_path)
    groups = {}
    for r in reports:
        groups.setdefault((r.scenario_id, r.resolution_class), []).append(r)
    for (scenario_id, res_class), group in sorted(groups.items()):
        path = os.path.join(
            out_dir, f"roc_scenario{scenario_id}_{res_class or 'all'}.svg"
        )
        _plot_roc(sorted(group, key=lambda r: r.method), path)
        written.append(path)
    return written


def _plot_roc(reports, path):
    import matplotlib

    matplotlib.use("svg", force=False)
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "prnuvid"}):
        fig, ax = plt.subplots(figsize=(5, 5))
        for r in reports:
            xs = [p[0] for p in r.points]
            ys = [p[1] for p in r.points]
            ax.plot(xs, ys, label=f"{r.method} (AUC={r.auc:.3f})")
        ax.plot([0, 1], [0, 1], linestyle=":", color="gray", linewidth=0.8)
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
        ax.set_title(
            f"Scenario {reports[0].scenario_id}"
            + (f" ({reports[0].resolution_class})"
               if reports[0].resolution_class else "")
        )
        ax.legend(loc="lower right")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    atomic_write(path, buf.getvalue())


def evaluate(manifest, scenario_id, methods, out_dir, cache_dir=None,
             denoise_params: DenoiseParams = DenoiseParams(),
             pce_params: PceParams = PceParams(aligned_mode=True)):
    """Full pipeline: plan, score every method, and write the report files.

    Returns (reports, all_rows, failures).
    """
    scenario = SCENARIOS[scenario_id]
    plan = plan_pairs(manifest, scenario)
    cache = FingerprintCache(
        cache_dir or os.path.join(out_dir, "fp_cache"), denoise_params
    )
    reports = []
    all_rows = []
    failures = []
    pair_res = {(ref.path, query.path): ref.resolution_class
                for ref, query, _ in plan}
    res_classes = sorted(set(pair_res.values()))
    for method in methods:
        rows, fails = run_plan(plan, method, scenario_id, cache, pce_params)
        all_rows.extend(rows)
        failures.extend(fails)
        for res_class in res_classes:
            class_rows = [
                row for row in rows
                if pair_res.get((row[2], row[3])) == res_class
            ]
            scores = rows_to_scores(class_rows)
            if any(m for _, m in scores) and any(not m for _, m in scores):
                reports.append(roc_auc(scores, method, scenario_id, res_class))
    emit_report(reports, out_dir, score_rows=all_rows)
    return reports, all_rows, failures
