"""Parity datasets on disk: a CSV table plus a JSON metadata sidecar."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import pandas as pd

from ..simulation import COLUMNS, ParityDataset
from .reports import write_json, write_table

logger = logging.getLogger(__name__)


def write_dataset(dataset: ParityDataset, path) -> tuple[Path, Path]:
    """
    Write ``<path>.csv`` (tau_s, parity, sigma, shots) and ``<path>.json`` (metadata).

    Floats are written with their shortest round-trip representation and the JSON keys
    are sorted, so equal datasets give identical bytes.

    :param dataset: ParityDataset
    :param path: target stem; a trailing .csv or .json is dropped, any other dot is kept
    :return: (csv path, json path)
    """
    stem = Path(path)
    if stem.suffix in (".csv", ".json"):
        stem = stem.with_suffix("")
    csv_path = write_table(dataset.data[COLUMNS], stem.with_name(stem.name + ".csv"))
    json_path = write_json(dataset.metadata, stem.with_name(stem.name + ".json"))
    return csv_path, json_path


def read_dataset(path) -> ParityDataset:
    """
    Read a dataset CSV and, if present, the JSON sidecar next to it.

    :param path: path to the CSV file
    :return: ParityDataset
    :raises ValueError: for missing columns or parity estimates outside [-1, 1]
    """
    path = Path(path)
    data = pd.read_csv(path)
    missing = set(COLUMNS).difference(data.columns)
    if missing:
        raise ValueError(f"{path} lacks the columns {sorted(missing)}.")
    data = data.astype({"tau_s": float, "parity": float, "sigma": float, "shots": int})
    sidecar = path.with_suffix(".json")
    metadata = {}
    if sidecar.exists():
        metadata = json.loads(sidecar.read_text(encoding="utf-8"))
    logger.info("Read %d points from %s", len(data), path)
    return ParityDataset(data, metadata)
