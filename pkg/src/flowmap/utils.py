"""Information-theory and file-system helpers shared across modules."""

import math
from collections.abc import Iterable

import numpy as np
from fs import open_fs
from fs.base import FS


def plogp(p: float) -> float:
    """Compute ``p * log2(p)`` with the convention ``0 * log2(0) = 0``.

    Tiny negative values left over from incremental updates
    are treated as zero.

    Args:
        p: A probability or (unnormalized) flow.

    Returns:
        The contribution of ``p`` to an entropy sum, in bits.
    """
    if p <= 0.0:
        return 0.0
    return p * math.log2(p)


def entropy(weights: Iterable[float]) -> float:
    """Compute the Shannon entropy of weights after normalization.

    The weights need not sum to one, which matches how module
    codebooks are written in terms of unnormalized flows.

    Args:
        weights: Non-negative weights.

    Returns:
        The entropy in bits, or 0 if all weights are zero.
    """
    values = np.fromiter(weights, dtype=float)
    values = values[values > 0]
    total = values.sum()
    if total <= 0:
        return 0.0
    probabilities = values / total
    return float(-np.sum(probabilities * np.log2(probabilities)))


def perplexity(weights: Iterable[float]) -> float:
    """Compute the effective number of outcomes, ``2 ** entropy``."""
    return float(2.0 ** entropy(weights))


def open_parent_fs(url: str) -> tuple[FS, str]:
    """Open the file system containing a file URL.

    Args:
        url: Local path or PyFilesystem URL of a file.

    Returns:
        The file system and the path of the file within it.
    """
    # Split off the scheme so that `partition("/")` only sees the resource
    scheme, separator, resource = url.rpartition("://")
    prefix = "osfs://" if separator == "" else scheme + separator

    # The top-most folder must exist for the FS to be constructed
    fs_root, _, path = resource.partition("/")
    if fs_root == "":
        fs_root = "/"
    if path == "":
        path = fs_root
        fs_root = ""

    return open_fs(prefix + fs_root), path
