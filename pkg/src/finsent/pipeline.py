"""Pipeline configuration, seeds and run manifests."""

from __future__ import annotations

import configparser
import hashlib
import json
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .boost import BoostParams

__all__ = [
    "MissingInputError",
    "PipelineConfig",
    "derive_seed",
    "sha256_file",
    "Manifest",
    "ARTIFACTS",
]


class MissingInputError(FileNotFoundError):
    pass


# fixed artifact names per stage (relative to the output directory)
ARTIFACTS = {
    "ingest": "documents.jsonl",
    "topics": "topics.json",
    "filter": "filtered.jsonl",
    "annotate": "ground_truth.json",
    "lexicon": "lexicon.csv",
    "train": "model.json",
    "predict-lexicon": "predictions-lexicon.csv",
    "predict-boost": "predictions-boost.csv",
    "evaluate": "evaluation.json",
    "correlate": "correlation.json",
}


def derive_seed(root: int, stage: str) -> int:
    """Stage seed = first 4 bytes of sha256("<root>/<stage>") as an unsigned int."""
    digest = hashlib.sha256(f"{root}/{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_keep(text: str | None) -> tuple[int, ...]:
    if not text:
        return ()
    return tuple(sorted({int(t) for t in str(text).replace(" ", "").split(",") if t}))


def _parse_bool(text: Any) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class PipelineConfig:
    # inputs
    corpus: Path | None = None
    corpus_format: str = "jsonl"
    lexicon: Path | None = None
    bigrams: Path | None = None
    synonyms: Path | None = None
    removals: Path | None = None
    annotations: Path | None = None
    prices: Path | None = None
    scores: dict[str, Path] = field(default_factory=dict)
    output: Path = Path("out")
    # stage parameters
    seed: int = 0
    k: int = 10
    keep: tuple[int, ...] = ()
    nmf_iters: int = 300
    nmf_tol: float = 1e-5
    topic_min_df: int = 2
    headline_min_df: int = 1
    experiment: int = 3
    boost: BoostParams = field(default_factory=BoostParams)
    test_fraction: float = 0.2
    cv_splits: int = 5
    band: float = 0.05
    window_from: str | None = None
    window_to: str | None = None
    horizon: int = 1
    carry_forward: bool = False
    correlate_method: str = "boost"

    PATH_KEYS = ("corpus", "lexicon", "bigrams", "synonyms", "removals", "annotations", "prices", "output")

    @classmethod
    def from_ini(cls, path: str | Path) -> "PipelineConfig":
        """Read an INI-style ``[section]`` / ``key = value`` file.

        Relative paths resolve against the config file's directory.
        """
        path = Path(path)
        if not path.is_file():
            raise MissingInputError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        parser.read(path, encoding="utf-8")
        base = path.parent
        cfg = cls()
        overrides: dict[str, Any] = {}
        if parser.has_section("paths"):
            for key, value in parser.items("paths"):
                if key in cls.PATH_KEYS:
                    overrides[key] = base / value
                elif key == "corpus_format":
                    overrides[key] = value
                else:
                    raise ValueError(f"unknown [paths] key {key!r}")
        if parser.has_section("scores"):
            overrides["scores"] = {name: base / value for name, value in parser.items("scores")}
        for section in ("run", "topics", "lexicon", "train", "eval", "market"):
            if parser.has_section(section):
                overrides.update(dict(parser.items(section)))
        boost = {k[len("boost_"):]: v for k, v in list(overrides.items()) if k.startswith("boost_")}
        for k in list(overrides):
            if k.startswith("boost_"):
                del overrides[k]
        if parser.has_section("boost"):
            boost.update(dict(parser.items("boost")))
        cfg = cfg.updated(overrides)
        if boost:
            cfg = cfg.updated({"boost": boost})
        return cfg

    def updated(self, values: Mapping[str, Any]) -> "PipelineConfig":
        """Copy with ``values`` applied; strings are coerced to field types."""
        known = {f.name: f for f in fields(self)}
        data = {f: getattr(self, f) for f in known}
        for key, value in values.items():
            if value is None:
                continue
            if key not in known:
                raise ValueError(f"unknown configuration key {key!r}")
            data[key] = self._coerce(key, value, data[key])
        return PipelineConfig(**data)

    @staticmethod
    def _coerce(key: str, value: Any, current: Any) -> Any:
        if key == "boost":
            if isinstance(value, BoostParams):
                return value
            params = {f.name: getattr(current, f.name) for f in fields(BoostParams)}
            for k, v in value.items():
                if k not in params:
                    raise ValueError(f"unknown boost parameter {k!r}")
                params[k] = type(params[k])(v)
            return BoostParams(**params)
        if key == "keep":
            return _parse_keep(value) if not isinstance(value, tuple) else value
        if key == "scores":
            return {k: Path(v) for k, v in dict(value).items()}
        if key in PipelineConfig.PATH_KEYS:
            return Path(value)
        if key == "carry_forward":
            return _parse_bool(value)
        if key in ("window_from", "window_to", "corpus_format", "correlate_method"):
            return str(value)
        if isinstance(current, bool):
            return _parse_bool(value)
        if isinstance(current, int):
            return int(value)
        if isinstance(current, float):
            return float(value)
        return value

    def require(self, name: str) -> Path:
        value = getattr(self, name)
        if value is None:
            raise ValueError(f"configuration lacks required path {name!r}")
        path = Path(value)
        if not path.exists():
            raise MissingInputError(f"input {name!r} not found: {path}")
        return path

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)


class Manifest:
    """Run record written next to a stage's primary artifact.

    Everything except ``timings`` is a deterministic function of the inputs.
    """

    def __init__(self, stage: str, params: Mapping[str, Any] | None = None, seed: int | None = None):
        self.stage = stage
        self.params = dict(params or {})
        self.seed = seed
        self.inputs: dict[str, dict] = {}
        self.outputs: dict[str, str] = {}
        self._t0 = time.perf_counter()

    def add_input(self, name: str, path: str | Path) -> Path:
        path = Path(path)
        if not path.exists():
            raise MissingInputError(f"{self.stage}: missing input {name!r} ({path})")
        self.inputs[name] = {"file": path.name, "sha256": sha256_file(path)}
        return path

    def add_output(self, path: str | Path) -> None:
        path = Path(path)
        self.outputs[path.name] = sha256_file(path)

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "inputs": self.inputs,
            "params": self.params,
            "seed": self.seed,
            "outputs": self.outputs,
            "timings": {"seconds": round(time.perf_counter() - self._t0, 6)},
        }

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"{self.stage}.manifest.json"
        path.write_text(json.dumps(self.to_json(), indent=1, sort_keys=True, default=str) + "\n", encoding="utf-8")
        return path
