#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""File utility functions for the TWOPHOTON project.

JSON documents are written with sorted keys so that two runs with the same
inputs produce byte-identical files. Tables go through pandas.
"""

import os
import json
import math
import logging
from typing import Dict, List, Any, Optional, TextIO

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.8e'


def ensure_directory_exists(directory_path: str) -> None:
    """Ensure that a directory exists, creating it if necessary."""
    if directory_path and not os.path.exists(directory_path):
        os.makedirs(directory_path)
        logger.info(f"Created directory: {directory_path}")


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars and arrays, tuples and complex numbers to JSON types.

    Non-finite floats become the strings 'inf', '-inf' and 'nan'.
    """
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': to_jsonable(float(value.real)), 'im': to_jsonable(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
    return value


def dump_json(data: Dict[str, Any], stream: TextIO) -> None:
    """Write a document to an open stream, sorted and indented, with a trailing newline."""
    json.dump(to_jsonable(data), stream, indent=2, sort_keys=True)
    stream.write('\n')


def save_json(data: Dict[str, Any], file_path: str) -> None:
    """Save a document to a JSON file.

    Args:
        data: Document to save
        file_path: Path to the output file
    """
    ensure_directory_exists(os.path.dirname(file_path))
    with open(file_path, 'w') as f:
        dump_json(data, f)
    logger.debug(f"Saved JSON data to {file_path}")


def load_json(file_path: str) -> Dict[str, Any]:
    """Load data from a JSON file.

    Raises:
        FileNotFoundError: If the file does not exist
        json.JSONDecodeError: If the file is not valid JSON
    """
    with open(file_path, 'r') as f:
        data = json.load(f)
    logger.debug(f"Loaded JSON data from {file_path}")
    return data


def records_to_dataframe(records: List[Dict[str, Any]], columns: Optional[List[str]] = None) -> pd.DataFrame:
    """Flatten a list of result records into a table, one row per record."""
    frame = pd.json_normalize([to_jsonable(record) for record in records], sep='.')
    if columns is not None:
        frame = frame.reindex(columns=columns)
    return frame


def save_dataframe(df: pd.DataFrame, file_path: str) -> None:
    """Save a DataFrame as CSV with a fixed float format."""
    ensure_directory_exists(os.path.dirname(file_path))
    df.to_csv(file_path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.debug(f"Saved {len(df)} rows to {file_path}")


def load_dataframe(file_path: str) -> pd.DataFrame:
    df = pd.read_csv(file_path)
    logger.debug(f"Loaded {len(df)} rows from {file_path}")
    return df


def write_dataframe(df: pd.DataFrame, stream: TextIO) -> None:
    """Write a DataFrame as CSV to an open stream with the fixed float format."""
    df.to_csv(stream, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
