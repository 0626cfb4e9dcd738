"""Declarative experiment description, loaded from YAML with strict keys."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from beem.core import WeightMode


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class Method(str, enum.Enum):
    BEEM = "BEEM"
    EM = "EM"
    EM_RESTARTS = "EM_RESTARTS"
    DAEM = "DAEM"


class ModelFamily(str, enum.Enum):
    GMM = "GMM"
    MHMM = "MHMM"
    MGP = "MGP"


class Init(str, enum.Enum):
    A = "A"
    B = "B"
    SMYTH = "Smyth"


# (family, method, init) -> allowed weight modes; None means "not applicable"
VALID_COMBINATIONS = {
    (ModelFamily.GMM, Method.BEEM, Init.A): {WeightMode.UNIFORM, WeightMode.LEARNED},
    (ModelFamily.GMM, Method.BEEM, Init.B): {WeightMode.UNIFORM},
    (ModelFamily.GMM, Method.EM, Init.A): {None},
    (ModelFamily.GMM, Method.EM, Init.B): {None},
    (ModelFamily.GMM, Method.EM_RESTARTS, Init.A): {None},
    (ModelFamily.GMM, Method.DAEM, Init.A): {None},
    (ModelFamily.MHMM, Method.BEEM, Init.A): {WeightMode.UNIFORM},
    (ModelFamily.MHMM, Method.EM, Init.A): {None},
    (ModelFamily.MHMM, Method.EM, Init.SMYTH): {None},
    (ModelFamily.MGP, Method.BEEM, Init.A): {WeightMode.UNIFORM},
}

_BEEM_KEYS = {"tau0", "alpha", "patience", "max_iters", "epsilon", "best_of"}
HYPERPARAM_KEYS = {
    (ModelFamily.GMM, Method.BEEM): _BEEM_KEYS,
    (ModelFamily.GMM, Method.EM): {"max_iters", "tol"},
    (ModelFamily.GMM, Method.EM_RESTARTS): {"max_iters", "tol", "restarts"},
    (ModelFamily.GMM, Method.DAEM): {"max_iters", "tol", "beta_schedule", "inner_iters", "perturbation"},
    (ModelFamily.MHMM, Method.BEEM): _BEEM_KEYS | {"n_states", "bw_iters", "bw_tol"},
    (ModelFamily.MHMM, Method.EM): {"max_iters", "tol", "n_states", "best_of", "smyth_bw_iters"},
    (ModelFamily.MGP, Method.BEEM): _BEEM_KEYS | {"kernel", "noise_variance", "gp_budget",
                                                   "output_variance", "learn_noise", "leave_one_out"},
}

DATASET_PARAMS = {
    "square": {"counts", "side", "var"},
    "rainbow": {"n", "radius", "k"},
    "random_hmm": {"k", "n_states", "state_means", "state_std", "seqs_per_cluster", "len_lo", "len_hi"},
    "sinusoid": {"variant", "noise", "subsample"},
    "csv": {"path", "label_column"},
    "sequence_corpus": {"path", "classes"},
}
FAMILY_DATASETS = {
    ModelFamily.GMM: {"square", "rainbow", "csv"},
    ModelFamily.MHMM: {"random_hmm", "sequence_corpus"},
    ModelFamily.MGP: {"sinusoid", "csv"},
}


@dataclass(frozen=True)
class DatasetSpec:
    """A built-in generator (``name`` + parameters) or a file loader."""

    name: str
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_file(self) -> bool:
        return self.name in ("csv", "sequence_corpus")

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, **self.params}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec
    method: Method
    model_family: ModelFamily
    init: Init
    k: int
    weight_mode: Optional[WeightMode] = None
    repeats: int = 100
    base_seed: int = 0
    method_hyperparams: Dict[str, Any] = field(default_factory=dict)

    def with_repeats(self, repeats: int) -> "ExperimentConfig":
        return validate(_replace(self, repeats=repeats))

    def with_dataset_params(self, **params) -> "ExperimentConfig":
        ds = DatasetSpec(self.dataset.name, {**self.dataset.params, **params})
        return validate(_replace(self, dataset=ds))

    def hp(self, key: str, default=None):
        return self.method_hyperparams.get(key, default)

    @property
    def weight_label(self) -> str:
        return self.weight_mode.value if self.weight_mode is not None else "-"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset.to_dict(),
            "method": self.method.value,
            "model_family": self.model_family.value,
            "init": self.init.value,
            "weight_mode": self.weight_mode.value if self.weight_mode is not None else None,
            "k": self.k,
            "repeats": self.repeats,
            "base_seed": self.base_seed,
            "method_hyperparams": dict(self.method_hyperparams),
        }


def _replace(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    d = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    d.update(kw)
    return ExperimentConfig(**d)


def _enum(cls, value, what):
    if isinstance(value, cls):
        return value
    for member in cls:
        if str(value) == member.value or str(value).upper() == member.name:
            return member
    allowed = ", ".join(m.value for m in cls)
    raise ConfigError(f"{what}: {value!r} is not one of {allowed}")


def _int(value, what, minimum):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{what} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{what} must be >= {minimum}, got {value}")
    return value


def _dataset(value, base_dir: Optional[Path]) -> DatasetSpec:
    if isinstance(value, DatasetSpec):
        return value
    if isinstance(value, str):
        path = Path(value)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"dataset file {path} does not exist")
        name = "sequence_corpus" if path.is_dir() else "csv"
        return DatasetSpec(name, {"path": str(path)})
    if not isinstance(value, dict) or "name" not in value:
        raise ConfigError("dataset must be a file path or a mapping with a 'name' key")
    name = value["name"]
    if name not in DATASET_PARAMS:
        raise ConfigError(f"dataset name {name!r} is not one of {', '.join(sorted(DATASET_PARAMS))}")
    params = {k: v for k, v in value.items() if k != "name"}
    unknown = set(params) - DATASET_PARAMS[name]
    if unknown:
        raise ConfigError(f"unknown parameter(s) for dataset {name!r}: {', '.join(sorted(unknown))}")
    if name in ("csv", "sequence_corpus"):
        if "path" not in params:
            raise ConfigError(f"dataset {name!r} needs a 'path'")
        if base_dir is not None and not Path(params["path"]).is_absolute():
            params["path"] = str(base_dir / params["path"])
        if not Path(params["path"]).exists():
            raise ConfigError(f"dataset file {params['path']} does not exist")
    return DatasetSpec(name, params)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check every field and the (family, method, init, weight) combination."""
    fam, meth, init = cfg.model_family, cfg.method, cfg.init
    key = (fam, meth, init)
    if key not in VALID_COMBINATIONS:
        raise ConfigError(
            f"unsupported combination: method={meth.value} with model_family={fam.value} "
            f"and init={init.value}"
        )
    allowed = VALID_COMBINATIONS[key]
    if cfg.weight_mode not in allowed:
        if allowed == {None}:
            raise ConfigError(f"weight_mode applies to BEEM only; remove it for method={meth.value}")
        names = ", ".join(sorted(w.value for w in allowed))
        raise ConfigError(
            f"weight_mode={cfg.weight_label} is not available for {meth.value}/{fam.value}/init "
            f"{init.value} (allowed: {names})"
        )
    _int(cfg.k, "k", 1)
    _int(cfg.repeats, "repeats", 1)
    _int(cfg.base_seed, "base_seed", 0)
    if cfg.dataset.name not in FAMILY_DATASETS[fam]:
        raise ConfigError(f"dataset {cfg.dataset.name!r} does not fit model_family={fam.value}")
    unknown = set(cfg.method_hyperparams) - HYPERPARAM_KEYS[(fam, meth)]
    if unknown:
        raise ConfigError(
            f"unknown method_hyperparams for {meth.value}/{fam.value}: {', '.join(sorted(unknown))}"
        )
    best_of = cfg.method_hyperparams.get("best_of", 1)
    _int(best_of, "method_hyperparams.best_of", 1)
    return cfg


def config_from_dict(d: Dict[str, Any], base_dir: Optional[Path] = None) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    missing = {"dataset", "method", "model_family", "init", "k"} - set(d)
    if missing:
        raise ConfigError(f"missing config key(s): {', '.join(sorted(missing))}")
    method = _enum(Method, d["method"], "method")
    wm = d.get("weight_mode")
    weight = None if wm is None else _enum(WeightMode, wm, "weight_mode")
    if weight is None and method is Method.BEEM:
        weight = WeightMode.UNIFORM
    hyper = d.get("method_hyperparams") or {}
    if not isinstance(hyper, dict):
        raise ConfigError("method_hyperparams must be a mapping")
    cfg = ExperimentConfig(
        dataset=_dataset(d["dataset"], base_dir),
        method=method,
        model_family=_enum(ModelFamily, d["model_family"], "model_family"),
        init=_enum(Init, d["init"], "init"),
        k=d["k"],
        weight_mode=weight,
        repeats=d.get("repeats", 100),
        base_seed=d.get("base_seed", 0),
        method_hyperparams=dict(hyper),
    )
    return validate(cfg)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    return config_from_dict(doc, base_dir=path.parent)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
