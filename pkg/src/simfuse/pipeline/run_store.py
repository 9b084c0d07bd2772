"""Run directories under the artifact root, keyed by configuration hash."""

import json
import logging
import shutil
from pathlib import Path
from typing import Optional, Union

from ..evaluation.report import EvalReport
from ..settings import RunConfig, run_root

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
REPORT_FILE = "report.json"
LEDGER_FILE = "results.csv"


class RunStore:
    """Artifact root holding one directory per run plus the shared results ledger."""

    def __init__(self, root: Optional[Union[str, Path]] = None):
        self.root = Path(root) if root is not None else run_root()
        self.root.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Using run directory root: {self.root}")

    @property
    def ledger_path(self) -> Path:
        return self.root / LEDGER_FILE

    def run_path(self, cfg: RunConfig, fingerprint: str) -> Path:
        return self.root / cfg.run_name(fingerprint)

    def is_complete(self, cfg: RunConfig, fingerprint: str) -> bool:
        return (self.run_path(cfg, fingerprint) / REPORT_FILE).exists()

    def load_report(self, cfg: RunConfig, fingerprint: str) -> EvalReport:
        with open(self.run_path(cfg, fingerprint) / REPORT_FILE, "r", encoding="utf-8") as f:
            return EvalReport.from_dict(json.load(f))

    def prepare(self, cfg: RunConfig, fingerprint: str, force: bool = False) -> Path:
        """Create a fresh run directory and record the configuration in it."""
        path = self.run_path(cfg, fingerprint)
        if path.exists() and force:
            logger.info(f"Discarding previous artifacts in {path}")
            shutil.rmtree(path)
        path.mkdir(parents=True, exist_ok=True)
        config = {**cfg.to_json_dict(), "k_clusters": cfg.cluster_count, "cohort_fingerprint": fingerprint}
        with open(path / CONFIG_FILE, "w", encoding="utf-8") as f:
            json.dump(config, f, indent=2)
        return path
