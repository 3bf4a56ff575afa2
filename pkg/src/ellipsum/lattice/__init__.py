"""
Lattice point enumeration in ellipsoids, radii queries, shell sums and
their on-disk cache.
"""

from __future__ import annotations

from .cache_format import (
    CacheHeader,
    CacheKind,
    CacheReader,
    CacheStore,
    CacheWriter,
    cache_roundtrip,
)
from .enumerate import LatticeEnumerator, PointBlock, enumerate_points
from .radii import RadiiMultiset, build_radii, count_upto
from .shells import ShellBuckets, bucket_shells

__all__ = [
    "CacheHeader",
    "CacheKind",
    "CacheReader",
    "CacheStore",
    "CacheWriter",
    "LatticeEnumerator",
    "PointBlock",
    "RadiiMultiset",
    "ShellBuckets",
    "bucket_shells",
    "build_radii",
    "cache_roundtrip",
    "count_upto",
    "enumerate_points",
]
