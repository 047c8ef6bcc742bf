"""CSV tables and JSON manifests."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .encoding import EncodedMeasure, rule_to_dict
from .errors import ValidationError
from .spectra import SpectralMeasure


def fmt(x: float) -> str:
    return format(float(x), ".16e")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj: Any, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


def write_table(path: str | Path, header: Iterable[str], rows: Iterable[Iterable[float]]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_table(path: str | Path, header: list[str]) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"missing input file {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None or [h.strip() for h in got] != header:
            raise ValidationError(f"{path}: expected header {','.join(header)}, got {got}")
        try:
            rows = [[float(v) for v in r] for r in reader if r]
        except ValueError as exc:
            raise ValidationError(f"{path}: non-numeric entry ({exc})") from exc
    if any(len(r) != len(header) for r in rows):
        raise ValidationError(f"{path}: ragged rows")
    return np.array(rows, dtype=float).reshape(-1, len(header))


def meta_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_spectrum(sm: SpectralMeasure, path: str | Path) -> list[Path]:
    p = write_table(path, ["lambda", "weight"], zip(sm.lambdas, sm.weights))
    return [p, write_json(sm.metadata(), meta_path(path))]


def read_spectrum(path: str | Path) -> SpectralMeasure:
    """Load a spectrum CSV plus its sidecar manifest; invariants are re-checked."""
    data = read_table(path, ["lambda", "weight"])
    mp = meta_path(path)
    meta = read_json(mp) if mp.exists() else {}
    lam, w = data[:, 0], data[:, 1]
    lam_max = meta.get("lambda_max")
    if lam_max is None:
        lam_max = float(lam[-1]) if lam.size else 0.0
    return SpectralMeasure(
        lam, w, float(lam_max),
        dimension=meta.get("dimension"),
        volume=meta.get("volume"),
        gamma_expected=meta.get("gamma_expected"),
        label=meta.get("label", Path(path).stem),
        generator=meta.get("generator", "file"),
        params=meta.get("params", {}),
        seed=meta.get("seed"),
    )


def write_encoded(em: EncodedMeasure, path: str | Path) -> list[Path]:
    p = write_table(path, ["C", "weight"], zip(em.C, em.weights))
    manifest = {"rule": rule_to_dict(em.rule), "edge": em.edge, "above_edge": em.above_edge,
                "source": em.source.metadata()}
    return [p, write_json(manifest, meta_path(path))]


def write_counting(curve, path: str | Path) -> Path:
    return write_table(path, ["y", "N", "N_smoothed", "rho"], curve.rows())


@dataclass
class RunManifest:
    command: str
    params: dict[str, Any]
    argv: list[str]
    input_files: list[str] = field(default_factory=list)
    output_files: list[str] = field(default_factory=list)
    seed: int | None = None
    tool_version: str = ""
    timestamp: str = ""

    def write(self, path: str | Path) -> Path:
        return write_json(asdict(self), path)
