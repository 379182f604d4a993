"""Shared JSON encoding helpers.

Complex numbers are encoded as [re, im] pairs, arrays as nested lists in
row-major order.  ``dumps_canonical`` fixes key order and separators so
that artifacts written under a fixed seed are byte-identical across runs.
"""

from __future__ import annotations

import json

import numpy as np


def complex_array_to_json(arr) -> list:
    arr = np.asarray(arr, dtype=complex)
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def complex_array_from_json(obj) -> np.ndarray:
    stacked = np.asarray(obj, dtype=float)
    if stacked.shape[-1] != 2:
        raise ValueError("complex arrays must be encoded as [re, im] pairs")
    return stacked[..., 0] + 1j * stacked[..., 1]


def real_array_to_json(arr) -> list:
    return np.asarray(arr, dtype=float).tolist()


def real_array_from_json(obj) -> np.ndarray:
    return np.asarray(obj, dtype=float)


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
