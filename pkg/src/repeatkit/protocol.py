"""Sequence evaluation protocol and report emission.

Every base_stride-th frame is matched against its `window` subsequent frames
for every configured detector; pairs are bucketed by rounded camera-center
distance. Jobs are distributed over a worker pool and reduced in submission
order keyed by (detector, base, offset), so the pool size never changes the
output bytes. Pairs with undefined repeatability (empty common region) are
excluded from every aggregate.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

from .dataset_io import DatasetManifest, load_frame
from .detectors import DetectorConfig, detect
from .errors import ConfigError
from .matching import EvalParams, evaluate_pair
from .semantics import ClassReport, per_class_repeatability


@dataclass(frozen=True)
class ProtocolConfig:
    detectors: tuple[DetectorConfig, ...]
    eval_params: EvalParams = field(default_factory=EvalParams)
    base_stride: int = 20
    window: int = 19
    distance_bucket: float = 1.0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if not self.detectors:
            raise ValueError("at least one detector is required")
        if self.base_stride < 1:
            raise ValueError(f"base_stride must be >= 1, got {self.base_stride}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if not (self.distance_bucket > 0):
            raise ValueError(f"distance_bucket must be positive, got {self.distance_bucket}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def detector_names(self) -> tuple[str, ...]:
        names = []
        seen: dict[str, int] = {}
        for d in self.detectors:
            seen[d.kind] = seen.get(d.kind, 0) + 1
            names.append(d.kind if seen[d.kind] == 1 else f"{d.kind}-{seen[d.kind]}")
        return tuple(names)


@dataclass(frozen=True)
class PairRecord:
    detector: str
    base_id: str
    other_id: str
    camera_distance: float
    n_d1: int
    n_d2: int
    n_matches: int
    repeatability: float | None


@dataclass(frozen=True)
class SequenceReport:
    detector_names: tuple[str, ...]
    pair_records: tuple[PairRecord, ...]
    class_reports: dict[str, ClassReport]
    distance_bucket: float
    config_echo: Mapping

    def records_for(self, detector: str) -> list[PairRecord]:
        return [r for r in self.pair_records if r.detector == detector]

    def curve(self, detector: str) -> list[tuple[float, float, int]]:
        """(distance_m, mean repeatability, pair count) per distance bucket."""
        buckets: dict[int, list[float]] = {}
        for rec in self.records_for(detector):
            if rec.repeatability is None:
                continue
            b = int(math.floor(rec.camera_distance / self.distance_bucket + 0.5))
            buckets.setdefault(b, []).append(rec.repeatability)
        return [
            (b * self.distance_bucket, sum(v) / len(v), len(v))
            for b, v in sorted(buckets.items())
        ]

    def overall_mean(self, detector: str) -> float | None:
        vals = [r.repeatability for r in self.records_for(detector) if r.repeatability is not None]
        if not vals:
            return None
        return sum(vals) / len(vals)

    def summary_rows(self) -> list[tuple[str, float | None, int]]:
        """(detector, overall mean, defined pair count), best mean first."""
        rows = []
        for name in self.detector_names:
            n = sum(1 for r in self.records_for(name) if r.repeatability is not None)
            rows.append((name, self.overall_mean(name), n))
        return sorted(rows, key=lambda r: (-(r[1] if r[1] is not None else -math.inf), r[0]))


def protocol_pairs(n_frames: int, base_stride: int, window: int) -> list[tuple[int, int]]:
    """(base, other) frame index pairs; bases without in-range pairs drop out."""
    pairs = []
    for base in range(0, n_frames, base_stride):
        for k in range(1, window + 1):
            if base + k < n_frames:
                pairs.append((base, base + k))
    return pairs


# Worker-process state: the manifest and config arrive once via the pool
# initializer; bundles and detections are cached per process.
_STATE: dict = {}


def _init_worker(manifest: DatasetManifest, cfg: ProtocolConfig) -> None:
    _STATE.clear()
    _STATE.update(manifest=manifest, cfg=cfg, bundles={}, detections={})


def _bundle(index: int):
    bundles = _STATE["bundles"]
    if index not in bundles:
        bundles[index] = load_frame(_STATE["manifest"], index)
    return bundles[index]


def _keypoints(det_idx: int, frame_idx: int):
    key = (det_idx, frame_idx)
    detections = _STATE["detections"]
    if key not in detections:
        cfg: ProtocolConfig = _STATE["cfg"]
        detections[key] = detect(_bundle(frame_idx).image, cfg.detectors[det_idx])
    return detections[key]


def _run_job(job: tuple[int, int, int]):
    det_idx, base_idx, other_idx = job
    cfg: ProtocolConfig = _STATE["cfg"]
    b1 = _bundle(base_idx)
    b2 = _bundle(other_idx)
    result = evaluate_pair(
        b1,
        b2,
        cfg.detectors[det_idx],
        cfg.eval_params,
        kps1=_keypoints(det_idx, base_idx),
        kps2=_keypoints(det_idx, other_idx),
    )
    report = None
    if b1.labels is not None:
        report = per_class_repeatability(result, _keypoints(det_idx, base_idx), b1.labels)
    return (
        det_idx,
        b1.frame_id,
        b2.frame_id,
        result.camera_distance,
        result.n_d1,
        result.n_d2,
        len(result.matches),
        result.repeatability,
        report,
    )


def run_sequence(
    manifest: DatasetManifest, cfg: ProtocolConfig, source: str | None = None
) -> SequenceReport:
    """Run the evaluation protocol over a whole sequence."""
    if len(manifest) < 2:
        raise ConfigError(f"manifest has {len(manifest)} frames, need at least 2")
    pairs = protocol_pairs(len(manifest), cfg.base_stride, cfg.window)
    if not pairs:
        raise ConfigError("protocol produced no frame pairs")
    names = cfg.detector_names()
    jobs = [(d, i, j) for d in range(len(cfg.detectors)) for (i, j) in pairs]

    if cfg.workers == 1:
        _init_worker(manifest, cfg)
        raw = [_run_job(job) for job in jobs]
        _STATE.clear()
    else:
        with ProcessPoolExecutor(
            max_workers=cfg.workers, initializer=_init_worker, initargs=(manifest, cfg)
        ) as pool:
            chunk = max(1, len(jobs) // (cfg.workers * 4))
            raw = list(pool.map(_run_job, jobs, chunksize=chunk))

    records = []
    class_reports = {name: ClassReport.empty() for name in names}
    have_labels = {name: False for name in names}
    for det_idx, base_id, other_id, dist, n_d1, n_d2, n_matches, rep, cls in raw:
        name = names[det_idx]
        records.append(
            PairRecord(name, base_id, other_id, dist, n_d1, n_d2, n_matches, rep)
        )
        if cls is not None:
            class_reports[name] = class_reports[name].merge(cls)
            have_labels[name] = True
    class_reports = {n: r for n, r in class_reports.items() if have_labels[n]}
    if all(r.repeatability is None for r in records):
        raise ConfigError(
            f"none of the {len(pairs)} frame pairs produced a defined repeatability "
            "(empty common regions everywhere); check depth maps and pose overlap"
        )

    echo = {
        "manifest": source if source is not None else str(manifest.root),
        "detectors": [
            {"name": name, **asdict(det)} for name, det in zip(names, cfg.detectors)
        ],
        "eval": asdict(cfg.eval_params),
        "protocol": {
            "base_stride": cfg.base_stride,
            "window": cfg.window,
            "distance_bucket": cfg.distance_bucket,
        },
    }
    return SequenceReport(
        detector_names=names,
        pair_records=tuple(records),
        class_reports=class_reports,
        distance_bucket=cfg.distance_bucket,
        config_echo=echo,
    )


def _fmt(v: float) -> str:
    return format(v, ".6g")


def emit_reports(report: SequenceReport, out_dir) -> list[Path]:
    """Write curve/summary/per-class CSVs and run.json; returns paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    for name in report.detector_names:
        path = out / f"curve_{name}.csv"
        lines = ["distance_m,mean_repeatability,pairs"]
        for dist, mean_r, count in report.curve(name):
            lines.append(f"{_fmt(dist)},{_fmt(mean_r)},{count}")
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    path = out / "summary.csv"
    lines = ["detector,mean_repeatability,pairs"]
    for name, mean_r, count in report.summary_rows():
        lines.append(f"{name},{_fmt(mean_r) if mean_r is not None else ''},{count}")
    path.write_text("\n".join(lines) + "\n")
    written.append(path)

    for name in report.detector_names:
        path = out / f"per_class_{name}.csv"
        lines = ["class,n_d1,matches,repeatability"]
        cls = report.class_reports.get(name)
        if cls is not None:
            rows = sorted(
                cls.repeatability_by_class().items(),
                key=lambda kv: (-kv[1], cls.name_of(kv[0])),
            )
            for cid, rate in rows:
                n_d1 = cls.n_d1_by_class[cid]
                n_m = cls.n_matches_by_class.get(cid, 0)
                lines.append(f"{cls.name_of(cid)},{n_d1},{n_m},{_fmt(rate)}")
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    path = out / "run.json"
    path.write_text(json.dumps(report.config_echo, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written
