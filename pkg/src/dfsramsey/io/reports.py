"""JSON fit reports, the run manifest, config echo and plot-ready tables."""

from __future__ import annotations

import dataclasses
import json
import logging
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

logger = logging.getLogger(__name__)

#: distributions whose versions are recorded in every manifest
RECORDED_PACKAGES = ("dfsramsey", "numpy", "pandas", "scipy", "statsmodels", "PyYAML", "click")


def to_builtin(obj):
    """Recursively convert numpy scalars/arrays, tuples, paths and dataclasses to JSON types."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(to_builtin(obj), indent=2, sort_keys=True, allow_nan=True)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info("Wrote %s", path)
    return path


def write_table(table: pd.DataFrame, path) -> Path:
    """CSV without index and with ``\\n`` line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, lineterminator="\n")
    logger.info("Wrote %s (%d rows)", path, len(table))
    return path


def write_plot_data(path, x, y, sigma=None) -> Path:
    """
    Write x, y, sigma triplets for an external plotting tool.

    :param path: CSV path, conventionally ``plot_<name>.csv``
    :param x: abscissae
    :param y: ordinates
    :param sigma: 1-sigma errors of y, NaN if omitted
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = np.full_like(y, np.nan) if sigma is None else np.asarray(sigma, dtype=float)
    return write_table(pd.DataFrame({"x": x, "y": y, "sigma": sigma}), path)


def echo_config(config: dict, path) -> Path:
    """Write the resolved configuration as YAML; it can be fed back to the CLI."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        yaml.safe_dump(to_builtin(config), sort_keys=True, default_flow_style=False),
        encoding="utf-8",
    )
    logger.info("Wrote %s", path)
    return path


def package_versions() -> dict:
    versions = {}
    for name in RECORDED_PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = None
    return versions


def write_manifest(out_dir, mode: str, config: dict, seed, outputs, extra=None) -> Path:
    """
    Write ``manifest.json``: mode, seed, config echo, package versions and output files.

    :param out_dir: run directory
    :param str mode: pipeline mode
    :param dict config: resolved configuration
    :param seed: seed used (None for runs without simulation)
    :param outputs: paths written by the run
    :param dict extra: additional entries, e.g. the count of non-converged fits
    """
    out_dir = Path(out_dir)
    manifest = {
        "mode": mode,
        "seed": seed,
        "config": config,
        "versions": package_versions(),
        "outputs": sorted(str(Path(p).relative_to(out_dir)) for p in outputs),
    }
    manifest.update(extra or {})
    return write_json(manifest, out_dir / "manifest.json")
