"""Config loading, seed derivation and deterministic CSV / JSON writers."""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import platform
import sys
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class ExperimentConfig:
    seed: int = 0
    n: int = 14
    degree: int = 3
    pool: int = 100
    n_hard: int = 10
    gap_threshold: float = 5e-3
    n_grid: int = 64
    sector: str = "parity_even"
    p_list: list[int] = field(default_factory=lambda: [4, 8, 16, 32, 64])
    methods: list[str] = field(default_factory=lambda: ["lin", "fcrab", "ccrab", "loginterp"])
    n_r: int = 10
    nc_step: int = 10
    gtol: float = 1e-8
    ftol: float = 1e-12
    max_iter: int = 1000
    transfer_method: str = "loginterp"
    transfer_p: list[int] = field(default_factory=lambda: [4, 8, 16])
    smooth_p: int = 64
    dt_c: float = 0.1
    fd_step: float = 1e-4
    k_levels: int = 3

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if path.suffix == ".toml":
        data = tomllib.loads(path.read_text())
    else:
        data = json.loads(path.read_text())
    return ExperimentConfig.from_mapping(data)


def derive_seed(master: int, *keys) -> int:
    """Stable child seed for ``(master, *keys)``; strings are hashed with CRC32."""
    words = [int(master) & 0xFFFFFFFF]
    for k in keys:
        words.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)[0] >> 1)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def versions() -> dict:
    import scipy

    from forge import __version__, kernels

    out = {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
           "forge": __version__, "backend": kernels.BACKEND}
    try:
        import numba
        out["numba"] = numba.__version__
    except ImportError:
        out["numba"] = None
    return out


def write_manifest(outdir, config: ExperimentConfig, command: str, files) -> None:
    """``manifest.json``: config, its hash, versions and SHA-256 of every output."""
    outdir = Path(outdir)
    entries = {}
    for f in sorted(files):
        entries[f] = hashlib.sha256((outdir / f).read_bytes()).hexdigest()
    write_json(outdir / "manifest.json", {
        "command": command,
        "config": config.to_dict(),
        "config_sha256": config.digest(),
        "versions": versions(),
        "outputs": entries,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    })
