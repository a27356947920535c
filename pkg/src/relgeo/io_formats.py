"""On-disk formats: embedding matrices, configs, CSV emission, run manifests.

The embedding container is a little-endian binary layout

    magic "RGEM" | u32 version | u64 rows | u64 cols |
    rows*cols float64 row-major payload | u32 CRC32(payload)

chosen so write-then-read is bit-identical and corruption is detected.
CSV output uses a header row, "." decimals, and 17-significant-digit reals
so every float round-trips exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .numerics import as_matrix

__all__ = [
    "EmbeddingFormatError",
    "ConfigError",
    "write_embedding",
    "read_embedding",
    "format_real",
    "write_csv",
    "read_csv_columns",
    "write_labels",
    "read_labels",
    "write_correspondence_csv",
    "ExperimentConfig",
    "load_config",
    "config_hash",
    "write_manifest",
]

EMBEDDING_MAGIC = b"RGEM"
EMBEDDING_VERSION = 1


class EmbeddingFormatError(ValueError):
    """Loaded embedding file violates its declared invariants."""


class ConfigError(ValueError):
    """Config document is malformed or holds unknown keys."""


def write_embedding(path, matrix) -> None:
    matrix = as_matrix(matrix, "matrix")
    rows, cols = matrix.shape
    payload = np.ascontiguousarray(matrix, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<I", EMBEDDING_VERSION))
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))


def read_embedding(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    header = 4 + 4 + 16
    if len(blob) < header + 4:
        raise EmbeddingFormatError(f"{path}: truncated embedding file")
    if blob[:4] != EMBEDDING_MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {blob[:4]!r}")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != EMBEDDING_VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported version {version}")
    rows, cols = struct.unpack("<QQ", blob[8:24])
    expected = rows * cols * 8
    payload = blob[header:header + expected]
    if len(payload) != expected or len(blob) != header + expected + 4:
        raise EmbeddingFormatError(f"{path}: payload length does not match declared dims")
    (crc_stored,) = struct.unpack("<I", blob[header + expected:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise EmbeddingFormatError(f"{path}: CRC mismatch, payload corrupted")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()


def format_real(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, header: list[str], rows) -> None:
    """Plain deterministic CSV; floats at 17 significant digits."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(format_real(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv_columns(path) -> dict[str, list[str]]:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    columns: dict[str, list[str]] = {name: [] for name in header}
    for line in lines[1:]:
        for name, cell in zip(header, line.split(",")):
            columns[name].append(cell)
    return columns


def write_labels(path, labels) -> None:
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    write_csv(path, ["index", "label"],
              [(i, int(v)) for i, v in enumerate(labels)])


def read_labels(path) -> np.ndarray:
    columns = read_csv_columns(path)
    return np.asarray([int(v) for v in columns["label"]], dtype=np.int64)


def write_correspondence_csv(path, indices, scores) -> None:
    write_csv(path, ["source_index", "target_index", "score"],
              [(i, int(j), float(s)) for i, (j, s) in enumerate(zip(indices, scores))])


_TOP_LEVEL_KEYS = {
    "seed", "dataset", "models", "anchors", "relrep", "alignment",
    "metrics", "output_dir",
}
_SECTION_KEYS = {
    "dataset": {"kind", "n", "ambient_dim", "latent_dim", "noise", "n_components"},
    "anchors": {"k", "scheme", "repeats", "k_list"},
    "relrep": {"mode", "metric", "steps", "metric_eps"},
    "alignment": {"kind", "center"},
}
_MODEL_KEYS = {"name", "encoder", "decoder", "epochs", "batch_size",
               "learning_rate", "seed_offset", "head"}


def _check_keys(doc: dict, allowed: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


@dataclass
class ExperimentConfig:
    """Validated experiment description; unknown keys are rejected outright."""

    seed: int
    dataset: dict = field(default_factory=dict)
    models: list = field(default_factory=list)
    anchors: dict = field(default_factory=dict)
    relrep: dict = field(default_factory=dict)
    alignment: dict = field(default_factory=dict)
    metrics: list = field(default_factory=list)
    output_dir: str = "out"
    base_dir: Path = field(default_factory=Path)

    def resolve(self, relative: str) -> Path:
        """Interpret a path relative to the config file's directory."""
        return (self.base_dir / relative).resolve()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config root must be an object")
    _check_keys(doc, _TOP_LEVEL_KEYS, "config root")
    for section, allowed in _SECTION_KEYS.items():
        if section in doc:
            if not isinstance(doc[section], dict):
                raise ConfigError(f"{section} must be an object")
            _check_keys(doc[section], allowed, section)
    for model in doc.get("models", []):
        if not isinstance(model, dict):
            raise ConfigError("models entries must be objects")
        _check_keys(model, _MODEL_KEYS, "models entry")
    if "seed" not in doc:
        raise ConfigError("config requires a seed")
    return ExperimentConfig(
        seed=int(doc["seed"]),
        dataset=doc.get("dataset", {}),
        models=doc.get("models", []),
        anchors=doc.get("anchors", {}),
        relrep=doc.get("relrep", {}),
        alignment=doc.get("alignment", {}),
        metrics=doc.get("metrics", []),
        output_dir=doc.get("output_dir", "out"),
        base_dir=path.parent,
    )


def config_hash(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_manifest(path, command: str, seed: int, config_doc: dict | None = None,
                   extra: dict | None = None) -> None:
    """Provenance record; the timestamp lives here and only here."""
    from . import __version__

    manifest = {
        "command": command,
        "seed": seed,
        "config_hash": config_hash(config_doc) if config_doc is not None else None,
        "versions": {
            "relgeo": __version__,
            "numpy": np.__version__,
        },
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
