"""End-to-end orchestration: synthesize, evaluate, ablate, report.

``synthesize_dataset`` turns an :class:`ExperimentConfig` into a CSV of
channel-magnitude records: scenes are generated per episode (each episode
draws its own traffic density and advects one placement over time), every
snapshot is ray traced per receiver, the taps pass through the training
reception model, and the least-squares estimate's frequency response
magnitudes are written out with the ground-truth count.

``evaluate_dataset`` ingests such a file (from this package or recorded
elsewhere in the same format), preprocesses the magnitude series, runs
grid-searched cross-validation per configured model family, and writes
result tables. All randomness descends from the config seed, so outputs
are byte-identical across runs and worker counts.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .chanest import (
    NoiseModel,
    estimated_cfr,
    ls_estimate,
    simulate_reception,
    training_matrix,
    training_sequence,
)
from .config import ExperimentConfig, ModelGridConfig
from .dataio import CfrRecord, Dataset, build_dataset, read_records, write_records
from .errors import DataError
from .learn import (
    CrossValidationResult,
    ModelSpec,
    cross_validate,
    grid_search,
    spec_with,
)
from .preprocess import PreprocessConfig, preprocess_matrix
from .raytrace import taps_from_paths, trace_paths
from .scene import count_vehicles, generate_scene, write_scene_csv
from .seeding import derive_seed, keyed_map, rng_for

DATASET_FILE = "dataset.csv"
MANIFEST_FILE = "manifest.json"
SCENES_FILE = "scenes.csv"
CLASSIFICATION_TABLE = "classification_table.csv"
REGRESSION_TABLE = "regression_table.csv"
PER_FOLD_FILE = "per_fold.csv"
ROC_FILE = "roc_points.csv"
PREDICTIONS_FILE = "predictions.csv"
ABLATION_CLASSIFICATION = "ablation_classification.csv"
ABLATION_REGRESSION = "ablation_regression.csv"
REPORT_FILE = "report.txt"

ALGORITHM_LABELS = {
    "knn": "KNN",
    "random_forest": "Random Forest",
    "extra_trees": "Extra Trees",
    "gradient_boosting": "Gradient Boosting",
}


def resolve_count_region(config: ExperimentConfig) -> tuple[float, float]:
    """Counting span along the road; defaults to the antenna extent."""
    if config.count_region is not None:
        return config.count_region
    xs = [config.scene.tx_position[0]]
    xs += [p[0] for p in config.scene.rx_positions[: config.receivers]]
    lo, hi = min(xs), max(xs)
    if hi <= lo:  # antennas share one x plane; fall back to the whole road
        return (0.0, config.scene.road_length)
    return (lo, hi)


def reference_channel_power(config: ExperimentConfig) -> float:
    """Tap energy of the traffic-free channel at the first receiver.

    With unit-modulus training the mean received sample power equals the
    tap energy, so this is the signal power an SNR target refers to.
    """
    empty_cfg = config.scene.model_copy(update={"density": 0.0, "rng_seed": 0})
    empty = generate_scene(empty_cfg, 0)
    taps = taps_from_paths(trace_paths(empty, config.radio, 0), config.radio)
    return float(np.sum(np.abs(taps) ** 2))


def resolve_sigma_sq(config: ExperimentConfig) -> float:
    if config.noise.sigma_sq is not None:
        return config.noise.sigma_sq
    power = reference_channel_power(config)
    return power / (10.0 ** (config.noise.snr_db / 10.0))


@dataclass
class SynthesisSummary:
    dataset_path: str
    manifest_path: str
    scenes_path: str | None
    rows: int
    snapshots: int
    zero_count_snapshots: int
    count_min: int
    count_max: int
    sigma_sq: float
    elapsed_s: float


def _episode_scene_config(config: ExperimentConfig, episode: int):
    if config.calibration_every is not None and episode % config.calibration_every == 0:
        density = 0.0
    elif config.density_range is None:
        density = config.scene.density
    else:
        lo, hi = config.density_range
        density = float(rng_for(config.seed, "density", episode).uniform(lo, hi))
    return config.scene.model_copy(update={
        "density": density,
        "rng_seed": derive_seed(config.seed, "scene", episode),
    })


def synthesize_dataset(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    write_scenes: bool = False,
) -> SynthesisSummary:
    start = time.monotonic()
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    sigma_sq = resolve_sigma_sq(config)
    region = resolve_count_region(config)
    seq = training_sequence(config.radio.subcarrier_count, config.radio.tap_count)
    matrix = training_matrix(seq)
    episode_configs = [
        _episode_scene_config(config, e)
        for e in range((config.dataset_size + config.episode_length - 1)
                       // config.episode_length)
    ]

    def one_snapshot(g: int):
        episode, step = divmod(g, config.episode_length)
        scene = generate_scene(episode_configs[episode], step)
        count = count_vehicles(scene, region)
        records = []
        for rx in range(config.receivers):
            taps = taps_from_paths(trace_paths(scene, config.radio, rx), config.radio)
            estimates = []
            for rep in range(config.noise.estimates_per_packet):
                noise = NoiseModel(sigma_sq, derive_seed(config.seed, "noise", g, rx, rep))
                y = simulate_reception(taps, matrix, noise)
                estimates.append(ls_estimate(y, matrix))
            tap_estimate = np.mean(estimates, axis=0)
            cfr = estimated_cfr(tap_estimate, config.radio.subcarrier_count)
            records.append(CfrRecord(snapshot=g, receiver=rx,
                                     magnitudes=np.abs(cfr), count=count))
        return scene, records

    results = keyed_map(one_snapshot, range(config.dataset_size), config.workers)
    all_records = [rec for _, recs in results for rec in recs]

    dataset_path = out / DATASET_FILE
    with open(dataset_path, "w", encoding="utf-8", newline="") as fh:
        rows = write_records(all_records, fh)

    scenes_path = None
    if write_scenes:
        scenes_path = out / SCENES_FILE
        with open(scenes_path, "w", encoding="utf-8", newline="") as fh:
            write_scene_csv([scene for scene, _ in results], fh)

    counts = np.array([recs[0].count for _, recs in results])
    manifest = {
        "kind": "synthesis",
        "config": config.model_dump(mode="json"),
        "sigma_sq": sigma_sq,
        "count_region": list(region),
        "dataset": dataset_path.name,
        "rows": rows,
        "snapshots": int(counts.size),
        "zero_count_snapshots": int(np.count_nonzero(counts == 0)),
        "count_min": int(counts.min()),
        "count_max": int(counts.max()),
    }
    manifest_path = out / MANIFEST_FILE
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    return SynthesisSummary(
        dataset_path=str(dataset_path),
        manifest_path=str(manifest_path),
        scenes_path=None if scenes_path is None else str(scenes_path),
        rows=rows,
        snapshots=int(counts.size),
        zero_count_snapshots=int(np.count_nonzero(counts == 0)),
        count_min=int(counts.min()),
        count_max=int(counts.max()),
        sigma_sq=sigma_sq,
        elapsed_s=time.monotonic() - start,
    )


@dataclass
class ModelOutcome:
    family: str
    task: str
    label: str
    best_spec: ModelSpec
    cv: CrossValidationResult
    grid_scores: list[tuple[dict, float]]

    @property
    def report(self) -> metrics.MetricsReport:
        return self.cv.report


@dataclass
class EvaluationOutcome:
    gamma: float
    snapshots: int
    outcomes: list[ModelOutcome]
    output_files: list[str]


def _evaluate_models(
    config: ExperimentConfig,
    dataset: Dataset,
    preprocess: PreprocessConfig,
) -> list[ModelOutcome]:
    features, _ = preprocess_matrix(dataset.features, dataset.counts, preprocess)
    outcomes = []
    for mg in config.models:
        base = ModelSpec(family=mg.family, task=mg.task)
        target = dataset.labels.astype(float) if mg.task == "classify" \
            else dataset.counts.astype(float)
        grid_scores: list[tuple[dict, float]] = []
        n_combos = math.prod(len(v) for v in mg.grid.values()) if mg.grid else 0
        if n_combos > 1:
            gs = grid_search(
                base, mg.grid, features, target, config.cv_folds,
                seed=derive_seed(config.seed, "grid", mg.family, mg.task),
                workers=config.workers,
            )
            best = gs.best_spec
            grid_scores = [
                ({k: getattr(s, k) for k in mg.grid}, v) for s, v in gs.entries
            ]
        elif n_combos == 1:
            # a single candidate needs no search pass; score it in the final CV
            best = spec_with(base, **{k: v[0] for k, v in mg.grid.items()})
        else:
            best = base
        cv = cross_validate(
            best, features, target, config.cv_folds,
            seed=derive_seed(config.seed, "final", mg.family, mg.task),
            workers=config.workers,
        )
        outcomes.append(ModelOutcome(
            family=mg.family, task=mg.task,
            label=ALGORITHM_LABELS[mg.family],
            best_spec=best, cv=cv, grid_scores=grid_scores,
        ))
    return outcomes


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    import csv as _csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_result_files(out: Path, outcomes: list[ModelOutcome],
                        dataset: Dataset) -> list[str]:
    written: list[str] = []
    classify = [o for o in outcomes if o.task == "classify"]
    regress = [o for o in outcomes if o.task == "regress"]

    if classify:
        rows = [metrics.classification_row(o.label, o.report) for o in classify]
        _write_csv(out / CLASSIFICATION_TABLE, metrics.CLASSIFICATION_COLUMNS, rows)
        written.append(CLASSIFICATION_TABLE)

        roc_rows = []
        for o in classify:
            try:
                fpr, tpr, thr = metrics.roc_points(
                    o.cv.actual.astype(int), o.cv.oof_score)
            except metrics.MetricUndefinedError:
                continue
            for i in range(fpr.size):
                roc_rows.append([o.label, repr(float(fpr[i])), repr(float(tpr[i])),
                                 repr(float(thr[i]))])
        _write_csv(out / ROC_FILE, ["algorithm", "fpr", "tpr", "threshold"], roc_rows)
        written.append(ROC_FILE)

    if regress:
        rows = [metrics.regression_row(o.label, o.report) for o in regress]
        _write_csv(out / REGRESSION_TABLE, metrics.REGRESSION_COLUMNS, rows)
        written.append(REGRESSION_TABLE)

        pred_rows = []
        for o in regress:
            for i in range(dataset.snapshots.size):
                pred_rows.append([
                    o.label, int(dataset.snapshots[i]),
                    repr(float(o.cv.actual[i])),
                    repr(float(o.cv.oof_prediction[i])),
                ])
        _write_csv(out / PREDICTIONS_FILE,
                   ["algorithm", "snapshot", "actual", "estimated"], pred_rows)
        written.append(PREDICTIONS_FILE)

    fold_rows = []
    for o in outcomes:
        names = metrics.CLASSIFICATION_FIELDS if o.task == "classify" \
            else metrics.REGRESSION_FIELDS
        for f, fold in enumerate(o.report.folds):
            values = fold.as_dict()
            for name in names:
                v = values[name]
                fold_rows.append([o.label, o.task, f, name,
                                  "NA" if v is None else f"{v:.6f}"])
    _write_csv(out / PER_FOLD_FILE,
               ["algorithm", "task", "fold", "metric", "value"], fold_rows)
    written.append(PER_FOLD_FILE)
    return written


def evaluate_dataset(
    config: ExperimentConfig,
    dataset_path: str | Path | None = None,
    out_dir: str | Path | None = None,
) -> EvaluationOutcome:
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = Path(dataset_path) if dataset_path is not None else out / DATASET_FILE
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    records, _rejected = read_records(path)
    dataset = build_dataset(records, config.receivers, config.gamma)

    outcomes = _evaluate_models(config, dataset, config.preprocess)
    written = _write_result_files(out, outcomes, dataset)

    manifest = {
        "kind": "evaluation",
        "config": config.model_dump(mode="json"),
        "dataset": str(path),
        "gamma": dataset.gamma,
        "snapshots": int(dataset.snapshots.size),
        "models": [
            {
                "family": o.family,
                "task": o.task,
                "best_spec": asdict(o.best_spec),
                "means": o.report.means,
                "defined_counts": o.report.defined_counts,
                "grid_scores": [
                    {"params": params, "score": score}
                    for params, score in o.grid_scores
                ],
            }
            for o in outcomes
        ],
    }
    manifest_path = out / MANIFEST_FILE
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    written.append(MANIFEST_FILE)
    return EvaluationOutcome(
        gamma=dataset.gamma,
        snapshots=int(dataset.snapshots.size),
        outcomes=outcomes,
        output_files=[str(out / name) for name in written],
    )


ABLATION_VARIANTS = ("all_stages", "no_hampel", "no_wavelet", "no_background", "raw")


def _variant_preprocess(base: PreprocessConfig, variant: str) -> PreprocessConfig:
    toggles = {
        "all_stages": {"hampel": True, "wavelet": True, "background": True},
        "no_hampel": {"hampel": False, "wavelet": True, "background": True},
        "no_wavelet": {"hampel": True, "wavelet": False, "background": True},
        "no_background": {"hampel": True, "wavelet": True, "background": False},
        "raw": {"hampel": False, "wavelet": False, "background": False},
    }[variant]
    return base.model_copy(update=toggles)


@dataclass
class AblationOutcome:
    gamma: float
    variants: list[tuple[str, list[ModelOutcome]]]
    output_files: list[str]


def ablate_dataset(
    config: ExperimentConfig,
    dataset_path: str | Path | None = None,
    out_dir: str | Path | None = None,
) -> AblationOutcome:
    """Re-run the evaluation under each preprocessing variant."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = Path(dataset_path) if dataset_path is not None else out / DATASET_FILE
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    records, _ = read_records(path)
    dataset = build_dataset(records, config.receivers, config.gamma)

    variants = []
    for name in ABLATION_VARIANTS:
        outcomes = _evaluate_models(config, dataset,
                                    _variant_preprocess(config.preprocess, name))
        variants.append((name, outcomes))

    class_rows = []
    regress_rows = []
    for name, outcomes in variants:
        for o in outcomes:
            if o.task == "classify":
                class_rows.append([name] + metrics.classification_row(o.label, o.report))
            else:
                regress_rows.append([name] + metrics.regression_row(o.label, o.report))
    written = []
    if class_rows:
        _write_csv(out / ABLATION_CLASSIFICATION,
                   ["Variant"] + metrics.CLASSIFICATION_COLUMNS, class_rows)
        written.append(ABLATION_CLASSIFICATION)
    if regress_rows:
        _write_csv(out / ABLATION_REGRESSION,
                   ["Variant"] + metrics.REGRESSION_COLUMNS, regress_rows)
        written.append(ABLATION_REGRESSION)
    return AblationOutcome(
        gamma=dataset.gamma,
        variants=variants,
        output_files=[str(out / name) for name in written],
    )


def _read_table(path: Path) -> list[list[str]] | None:
    import csv as _csv

    if not path.exists():
        return None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(_csv.reader(fh))


def _format_table(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines)


def render_report(out_dir: str | Path) -> str:
    """Human-readable summary of a finished run directory."""
    out = Path(out_dir)
    sections: list[str] = []

    manifest_path = out / MANIFEST_FILE
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        head = [f"Run directory: {out}"]
        if "gamma" in manifest:
            head.append(f"Intensity threshold gamma: {manifest['gamma']}")
        if "snapshots" in manifest:
            head.append(f"Snapshots: {manifest['snapshots']}")
        if "sigma_sq" in manifest:
            head.append(f"Noise variance: {manifest['sigma_sq']:.6g}")
        sections.append("\n".join(head))

    titled = [
        (CLASSIFICATION_TABLE, "Two-class intensity (cross-validated means)"),
        (REGRESSION_TABLE, "Vehicle count regression (cross-validated means)"),
        (ABLATION_CLASSIFICATION, "Preprocessing ablation: intensity"),
        (ABLATION_REGRESSION, "Preprocessing ablation: count regression"),
    ]
    for filename, title in titled:
        rows = _read_table(out / filename)
        if rows:
            sections.append(f"{title}\n{'-' * len(title)}\n{_format_table(rows)}")

    if not sections:
        raise DataError(f"no result files found under {out}")
    text = "\n\n".join(sections) + "\n"
    (out / REPORT_FILE).write_text(text, encoding="utf-8")
    return text
