"""Parameter sweeps and the target x transform x clustering grid."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..cohort.loader import load_cohort_dir
from ..cohort.models import Cohort
from ..errors import InvalidParameter, SimfuseError
from ..evaluation.metrics import METRIC_NAMES, relative_improvement
from ..evaluation.report import LEDGER_COLUMNS, EvalReport
from ..settings import RunConfig
from .orchestrator import run_pipeline
from .run_store import RunStore

logger = logging.getLogger(__name__)

SWEEP_AXES = ("k_clusters", "observation_hours", "workers")
GRID_FILE = "grid.csv"
BASELINE_DT = "none"


def _shared_cohort(cfg: RunConfig, cohort_dir: Optional[Union[str, Path]], cohort: Optional[Cohort]) -> Optional[Cohort]:
    # load once for local runs; distributed runs pass the directory through
    if cohort is None and not cfg.endpoints and cohort_dir is not None:
        return load_cohort_dir(cohort_dir)
    return cohort


def sweep(
    template: RunConfig,
    axis: str,
    values: Sequence[Any],
    cohort_dir: Optional[Union[str, Path]] = None,
    cohort: Optional[Cohort] = None,
    store: Optional[RunStore] = None,
    repeats: int = 1,
    force: bool = False,
) -> pd.DataFrame:
    """Run the template once per axis value and tabulate the results.

    Each value runs `repeats` times with seeds seed, seed+1, ...; metrics are
    averaged over the runs that succeeded. A failing run is recorded in the
    `error` column and the sweep moves on. Worker sweeps always recompute,
    since the wall clock is what they measure.

    Returns:
        The table also written to sweep_<axis>.csv under the store root.

    Raises:
        InvalidParameter: For an unknown axis, fewer than 2 values or repeats < 1.
    """
    if axis not in SWEEP_AXES:
        raise InvalidParameter(f"sweep axis must be one of {list(SWEEP_AXES)}, got '{axis}'")
    if len(values) < 2:
        raise InvalidParameter(f"a sweep needs at least 2 values, got {len(values)}")
    if repeats < 1:
        raise InvalidParameter(f"repeats must be >= 1, got {repeats}")

    store = store or RunStore()
    cohort = _shared_cohort(template, cohort_dir, cohort)
    rerun = force or axis == "workers"

    rows: List[Dict[str, Any]] = []
    for value in values:
        reports: List[EvalReport] = []
        errors: List[str] = []
        for repeat in range(repeats):
            try:
                cfg = template.updated(**{axis: value, "seed": template.seed + repeat})
                reports.append(run_pipeline(cfg, cohort_dir, cohort, store, force=rerun))
            except SimfuseError as e:
                logger.error(f"Sweep run {axis}={value} (repeat {repeat}) failed: {e}")
                errors.append(str(e))

        row: Dict[str, Any] = {axis: value, "runs": len(reports), "failed": len(errors)}
        for name in METRIC_NAMES:
            row[name] = float(np.mean([r.metric_values()[name] for r in reports])) if reports else np.nan
        row["wall_clock_s"] = float(np.mean([r.wall_clock_s for r in reports])) if reports else np.nan
        row["error"] = " | ".join(errors)
        rows.append(row)

    frame = pd.DataFrame(rows)
    out_path = store.root / f"sweep_{axis}.csv"
    frame.to_csv(out_path, index=False)
    logger.info(f"Sweep over {axis} ({len(values)} values x {repeats} repeats) written to {out_path}")
    return frame


def run_grid(
    template: RunConfig,
    targets: Sequence[str],
    dt_methods: Sequence[str],
    clusterings: Sequence[str],
    cohort_dir: Optional[Union[str, Path]] = None,
    cohort: Optional[Cohort] = None,
    store: Optional[RunStore] = None,
    force: bool = False,
) -> pd.DataFrame:
    """Run every target x DT method x clustering combination.

    Each row carries, per metric, the percent change over the `none` DT method
    with the same target and clustering (NaN when that baseline is absent or 0).
    k_clusters follows the per-target default unless the template fixes it.
    """
    store = store or RunStore()
    cohort = _shared_cohort(template, cohort_dir, cohort)

    rows: List[Dict[str, Any]] = []
    for target in targets:
        for clustering in clusterings:
            for dt_method in dt_methods:
                try:
                    cfg = template.updated(target=target, dt_method=dt_method, clustering=clustering)
                    report = run_pipeline(cfg, cohort_dir, cohort, store, force=force)
                except SimfuseError as e:
                    logger.error(f"Grid run {target}/{dt_method}/{clustering} failed: {e}")
                    rows.append({"target": target, "dt_method": dt_method, "clustering": clustering, "error": str(e)})
                    continue
                rows.append({**report.ledger_row(), "error": ""})

    frame = pd.DataFrame(rows, columns=[*LEDGER_COLUMNS, "error"])
    for name in METRIC_NAMES:
        frame[f"{name}_improvement_pct"] = np.nan
    for (target, clustering), group in frame.groupby(["target", "clustering"]):
        baseline = group[(group["dt_method"] == BASELINE_DT) & (group["error"] == "")]
        if baseline.empty:
            continue
        for name in METRIC_NAMES:
            base = float(baseline[name].iloc[0])
            frame.loc[group.index, f"{name}_improvement_pct"] = [
                relative_improvement(float(v), base) for v in group[name]
            ]

    out_path = store.root / GRID_FILE
    frame.to_csv(out_path, index=False)
    logger.info(f"Grid of {len(frame)} runs written to {out_path}")
    return frame
