"""Run configuration: packaged defaults, config files and CLI overrides."""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .cluster.models import ClusterAlgorithm
from .cohort.models import LABEL_NAMES, Cohort
from .distengine.protocol import parse_endpoint
from .dtw.kernel import DtwConfig
from .errors import InvalidParameter
from .evaluation.report import RunDescriptor
from .transform.models import TransformMethod

logger = logging.getLogger(__name__)

DEFAULTS_FILE = Path(__file__).parent / "config" / "defaults.yaml"
RUN_DIR_ENV = "SIMFUSE_RUN_DIR"
DEFAULT_RUN_DIR = "./runs"

# Best configuration per target: aWOE + k-means with these cluster counts
DEFAULT_K = {"cad": 125, "chf": 150}

# Fields that change how a run executes but not what it computes
EXECUTION_FIELDS = frozenset({"workers", "endpoints", "timeout_s", "retries"})

# Algorithms that take a cluster count
K_ALGORITHMS = frozenset({ClusterAlgorithm.KMEANS, ClusterAlgorithm.AGGLOMERATIVE, ClusterAlgorithm.SPECTRAL})


class RunConfig(BaseModel):
    """One pipeline run, validated in full before any compute starts."""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    target: str = "cad"
    dt_method: TransformMethod = TransformMethod.AWOE
    clustering: ClusterAlgorithm = ClusterAlgorithm.KMEANS
    k_clusters: Optional[int] = Field(default=None, ge=1)
    lam: int = Field(default=1, ge=1, alias="lambda")
    band: Optional[int] = Field(default=None, ge=0)
    q: int = Field(default=20, ge=1)
    epsilon: float = Field(default=1e-4, gt=0)
    unique_threshold: int = Field(default=100, ge=1)
    seed: int = 0
    workers: int = Field(default=1, ge=1)
    endpoints: List[str] = Field(default_factory=list)
    observation_hours: Optional[float] = Field(default=None, gt=0)
    test_fraction: float = Field(default=0.2, gt=0, lt=1)
    block_size: int = Field(default=25, ge=1)
    timeout_s: float = Field(default=60.0, gt=0)
    retries: int = Field(default=3, ge=0)
    gamma: Optional[float] = Field(default=None, gt=0)
    min_samples: int = Field(default=5, ge=2)
    eps_extract: Optional[float] = Field(default=None, ge=0)
    variates: Optional[List[str]] = None
    final_sqrt: bool = True
    kmeans_max_iter: int = Field(default=300, ge=1)
    kmeans_tol: float = Field(default=1e-6, ge=0)

    @field_validator("target")
    @classmethod
    def _known_target(cls, value: str) -> str:
        if value not in LABEL_NAMES:
            raise ValueError(f"target must be one of {list(LABEL_NAMES)}")
        return value

    @field_validator("endpoints", mode="before")
    @classmethod
    def _split_endpoints(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [e.strip() for e in value.split(",") if e.strip()]
        return value

    @field_validator("endpoints")
    @classmethod
    def _valid_endpoints(cls, value: List[str]) -> List[str]:
        for endpoint in value:
            parse_endpoint(endpoint)
        return value

    @field_validator("variates")
    @classmethod
    def _non_empty_variates(cls, value: Optional[List[str]]) -> Optional[List[str]]:
        if value is not None and not value:
            raise ValueError("variates must name at least one variate when given")
        return value

    @model_validator(mode="after")
    def _clusters_needed(self) -> "RunConfig":
        if self.clustering is ClusterAlgorithm.SPECTRAL and self.cluster_count < 2:
            raise ValueError("spectral clustering needs k_clusters >= 2")
        return self

    @property
    def cluster_count(self) -> int:
        """k_clusters, or the per-target default when unset."""
        return self.k_clusters if self.k_clusters is not None else DEFAULT_K[self.target]

    def check_cohort(self, cohort: Cohort) -> None:
        """Reject settings the given cohort cannot satisfy.

        Raises:
            InvalidParameter: Naming every problem found.
        """
        problems = []
        if self.clustering in K_ALGORITHMS and self.cluster_count > len(cohort):
            problems.append(
                f"k_clusters {self.cluster_count} exceeds the {len(cohort)} patients of the cohort"
            )
        if self.variates:
            unknown = sorted(set(self.variates) - set(cohort.variates))
            if unknown:
                problems.append(f"variates not present in the cohort: {unknown}")
        if problems:
            raise InvalidParameter(f"invalid run configuration: {'; '.join(problems)}")

    def dtw_config(self) -> DtwConfig:
        return DtwConfig(band=self.band, final_sqrt=self.final_sqrt)

    def descriptor(self) -> RunDescriptor:
        return RunDescriptor(
            target=self.target,
            dt_method=self.dt_method.value,
            clustering=self.clustering.value,
            k_clusters=self.cluster_count,
            lam=self.lam,
        )

    def to_json_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)

    def run_hash(self, fingerprint: str = "") -> str:
        """Hash of everything that determines the run's results."""
        payload = {k: v for k, v in self.to_json_dict().items() if k not in EXECUTION_FIELDS}
        payload["k_clusters"] = self.cluster_count
        payload["cohort"] = fingerprint
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    def run_name(self, fingerprint: str = "") -> str:
        return f"{self.target}-{self.dt_method.value}-{self.clustering.value}-{self.run_hash(fingerprint)[:12]}"

    def updated(self, **changes: Any) -> "RunConfig":
        """A validated copy with some fields replaced."""
        if "lam" in changes:
            changes["lambda"] = changes.pop("lam")
        return build_run_config({**self.to_json_dict(), **changes})


def build_run_config(values: Mapping[str, Any]) -> RunConfig:
    """Validate raw values into a RunConfig.

    Raises:
        InvalidParameter: Naming every rejected field.
    """
    try:
        return RunConfig.model_validate(dict(values))
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise InvalidParameter(f"invalid run configuration: {problems}") from None


def _read_mapping(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            # YAML is a superset of JSON, one loader serves both
            data = yaml.safe_load(f)
    except OSError as e:
        raise InvalidParameter(f"cannot read config file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise InvalidParameter(f"config file {path} is not valid JSON or YAML: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidParameter(f"config file {path} must hold a mapping")
    return data


def load_run_config(
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Layer packaged defaults, an optional config file and overrides.

    Later layers win; override values of None are ignored so unset CLI flags
    do not mask the file.
    """
    values = _read_mapping(DEFAULTS_FILE)
    if config_file is not None:
        values.update(_read_mapping(Path(config_file)))
        logger.debug(f"Loaded run config from {config_file}")
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return build_run_config(values)


def run_root() -> Path:
    return Path(os.getenv(RUN_DIR_ENV, DEFAULT_RUN_DIR))
