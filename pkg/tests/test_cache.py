from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ellipsum.arith.diophantine import parse_shift
from ellipsum.arith.quadform import build_ctx
from ellipsum.errors import CorruptCache
from ellipsum.lattice import (
    CacheHeader,
    CacheKind,
    CacheReader,
    CacheStore,
    RadiiMultiset,
    build_radii,
    cache_roundtrip,
)
from ellipsum.lattice.cache_format import read_cache, write_cache
from ellipsum.spectral import ExpSumSeries, rep_sums

M = [[2, 1], [1, 3]]


def _series() -> ExpSumSeries:
    ctx = build_ctx(M)
    return rep_sums(ctx, parse_shift("sqrt2-1,1/3", 2), 300)


def test_series_roundtrip_is_bit_identical(tmp_path: Path) -> None:
    series = _series()

    back = cache_roundtrip(series, tmp_path, ExpSumSeries.from_cache)

    assert back == series
    assert back.alpha_spec == "sqrt2-1,1/3"
    assert back.volume == series.volume


def test_radii_roundtrip_is_bit_identical(tmp_path: Path) -> None:
    rm = build_radii(build_ctx(M), parse_shift("1/2,0", 2), 12.5)

    back = cache_roundtrip(rm, tmp_path, RadiiMultiset.from_cache)

    assert back == rm
    assert back.R_max == 12.5
    assert not back.radii.flags.writeable


def test_header_pack_and_unpack() -> None:
    header = CacheHeader(
        kind=CacheKind.RADII,
        matrix=((2, 1), (1, 3)),
        alpha_spec="0",
        bound=7.25,
    )

    parsed, off = CacheHeader.unpack(header.pack() + b"tail")

    assert parsed == header
    assert off == len(header.pack())


def test_tampered_file_is_rejected(tmp_path: Path) -> None:
    path = tmp_path / "series.elsm"
    write_cache(path, _series())
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0x01
    path.write_bytes(bytes(raw))

    with pytest.raises(CorruptCache, match="Digest mismatch"):
        read_cache(path, ExpSumSeries.from_cache)


def test_bad_magic_and_truncation(tmp_path: Path) -> None:
    path = tmp_path / "x.elsm"
    path.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(CorruptCache):
        CacheReader(path).open()

    path.write_bytes(b"ELSM")
    with pytest.raises(CorruptCache):
        CacheReader(path).open()


def test_loader_rejects_wrong_kind(tmp_path: Path) -> None:
    path = tmp_path / "series.elsm"
    write_cache(path, _series())

    with pytest.raises(CorruptCache, match="rejected"):
        read_cache(path, RadiiMultiset.from_cache)


def test_store_hits_and_recomputes(tmp_path: Path) -> None:
    store = CacheStore(tmp_path / "cache")
    series = _series()
    calls: list[int] = []

    def build() -> ExpSumSeries:
        calls.append(1)
        return series

    header = series.cache_header()
    first = store.fetch(header, ExpSumSeries.from_cache, build)
    second = store.fetch(header, ExpSumSeries.from_cache, build)
    assert len(calls) == 1
    assert first == second

    path = store.path_for(header)
    raw = bytearray(path.read_bytes())
    raw[-40] ^= 0xFF
    path.write_bytes(bytes(raw))

    third = store.fetch(header, ExpSumSeries.from_cache, build)
    assert len(calls) == 2
    assert third == series
    assert read_cache(path, ExpSumSeries.from_cache)[0] == series


def test_store_inspect_and_clear(tmp_path: Path) -> None:
    store = CacheStore(tmp_path)
    series = _series()
    store.fetch(series.cache_header(), ExpSumSeries.from_cache, _series)
    (tmp_path / "junk.elsm").write_bytes(b"garbage")

    entries = store.inspect()
    assert len(entries) == 2
    kinds = {e.to_dict().get("kind") for e in entries}
    assert kinds == {"series", None}
    assert any(e.to_dict().get("corrupt") for e in entries)

    assert store.clear() == 2
    assert store.inspect() == []


def test_unsupported_dtype_is_refused(tmp_path: Path) -> None:
    class Odd:
        def cache_header(self) -> CacheHeader:
            return CacheHeader(CacheKind.RADII, ((1,),), "0", 1.0)

        def cache_arrays(self) -> list[np.ndarray]:
            return [np.zeros(3, dtype=np.float32)]

    with pytest.raises(TypeError):
        write_cache(tmp_path / "odd.elsm", Odd())
