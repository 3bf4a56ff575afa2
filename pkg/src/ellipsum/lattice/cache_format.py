"""
Binary cache files for radii multisets and exponential-sum series.

Layout (little-endian)::

    magic     4 bytes   b"ELSM"
    version   u32
    kind      u8        1 = radii, 2 = series
    n         u32
    matrix    n*n i64
    spec_len  u32, followed by the UTF-8 alpha spec
    bound     f64       R_max or p_max
    arrays    u32 count, then per array: u8 dtype code, u64 length, data
    digest    32 bytes  sha256 of everything above
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import (
    BinaryIO,
    Callable,
    Dict,
    List,
    Optional,
    Protocol,
    Sequence,
    Tuple,
    TypeVar,
)

import numpy as np

from ellipsum.arith.quadform import IntMatrix
from ellipsum.errors import CorruptCache
from ellipsum.utils.logging import logger

CACHE_MAGIC = b"ELSM"
CACHE_VERSION = 1
CACHE_SUFFIX = ".elsm"
_DIGEST_LEN = 32

_DTYPES: Dict[int, str] = {1: "<f8", 2: "<c16", 3: "<i8"}
_CODES: Dict[str, int] = {np.dtype(v).str: k for k, v in _DTYPES.items()}


class CacheKind(IntEnum):
    """Payload stored in a cache file."""

    RADII = 1
    SERIES = 2


@dataclass(frozen=True)
class CacheHeader:
    """
    Identifying header of a cache file.

    :ivar kind (CacheKind): Payload kind.
    :ivar matrix (IntMatrix): Matrix of the form.
    :ivar alpha_spec (str): Spec string of the shift.
    :ivar bound (float): R_max for radii, p_max for series.
    :ivar magic (bytes): File magic.
    :ivar version (int): Format version.
    """

    kind: CacheKind
    matrix: IntMatrix
    alpha_spec: str
    bound: float
    magic: bytes = CACHE_MAGIC
    version: int = CACHE_VERSION

    @property
    def n(self) -> int:
        """Dimension."""
        return len(self.matrix)

    @property
    def key(self) -> str:
        """Hex key naming the cache entry."""
        text = ";".join(",".join(str(v) for v in row) for row in self.matrix)
        raw = f"{int(self.kind)}|{text}|{self.alpha_spec}|{self.bound!r}"
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:24]

    def pack(self) -> bytes:
        """Serialize the header."""
        n = self.n
        spec = self.alpha_spec.encode("utf-8")
        flat = [v for row in self.matrix for v in row]
        return b"".join(
            [
                self.magic,
                struct.pack("<IBI", self.version, int(self.kind), n),
                struct.pack(f"<{n * n}q", *flat),
                struct.pack("<I", len(spec)),
                spec,
                struct.pack("<d", self.bound),
            ]
        )

    @classmethod
    def unpack(cls, buf: bytes) -> Tuple["CacheHeader", int]:
        """
        Parse a header from the start of ``buf``.

        :param buf: File contents.
        :type buf: bytes
        :return: Header and the offset just past it.
        :rtype: Tuple[CacheHeader, int]
        :raises CorruptCache: On bad magic, version or kind.
        """
        try:
            if buf[:4] != CACHE_MAGIC:
                raise CorruptCache("Not an ellipsum cache file (bad magic)")
            version, kind, n = struct.unpack_from("<IBI", buf, 4)
            if version != CACHE_VERSION:
                raise CorruptCache(f"Unsupported cache version {version}")
            off = 4 + struct.calcsize("<IBI")
            flat = struct.unpack_from(f"<{n * n}q", buf, off)
            off += 8 * n * n
            (spec_len,) = struct.unpack_from("<I", buf, off)
            off += 4
            spec = buf[off : off + spec_len].decode("utf-8")
            off += spec_len
            (bound,) = struct.unpack_from("<d", buf, off)
            off += 8
            header = cls(
                kind=CacheKind(kind),
                matrix=tuple(
                    tuple(flat[i * n : (i + 1) * n]) for i in range(n)
                ),
                alpha_spec=spec,
                bound=bound,
            )
        except (struct.error, ValueError, UnicodeDecodeError) as exc:
            raise CorruptCache(f"Malformed cache header: {exc}") from exc
        return header, off


class CacheWriter:
    """Cache file writer; the file appears atomically on close."""

    def __init__(self, path: Path, header: CacheHeader):
        """
        :param path: Destination path.
        :type path: Path
        :param header: Header to write.
        :type header: CacheHeader
        """
        self.path = path
        self.header = header
        self._tmp = path.with_suffix(path.suffix + ".tmp")
        self._f: Optional[BinaryIO] = None
        self._hash = hashlib.sha256()

    def open(self) -> None:
        """Open the temporary file and write the header."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._f = self._tmp.open("wb")
        self._emit(self.header.pack())

    def _emit(self, data: bytes):
        assert self._f is not None
        self._f.write(data)
        self._hash.update(data)

    def write_arrays(self, arrays: Sequence[np.ndarray]) -> None:
        """
        Write the payload arrays.

        :param arrays: float64, complex128 or int64 arrays.
        :type arrays: Sequence[np.ndarray]
        """
        if not self._f:
            raise RuntimeError("CacheWriter is not open")
        self._emit(struct.pack("<I", len(arrays)))
        for arr in arrays:
            le = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))
            code = _CODES.get(le.dtype.str)
            if code is None:
                raise TypeError(f"Unsupported cache dtype {arr.dtype}")
            self._emit(struct.pack("<BQ", code, le.size))
            self._emit(le.tobytes())

    def close(self) -> None:
        """Append the digest and move the file into place."""
        if self._f:
            self._f.write(self._hash.digest())
            self._f.flush()
            os.fsync(self._f.fileno())
            self._f.close()
            self._f = None
            os.replace(self._tmp, self.path)

    @property
    def digest(self) -> str:
        """Hex digest of the written content."""
        return self._hash.hexdigest()


class CacheReader:
    """Cache file reader verifying magic, version and digest."""

    def __init__(self, path: Path):
        """
        :param path: Cache file path.
        :type path: Path
        """
        self.path = path
        self.header: Optional[CacheHeader] = None
        self.digest: Optional[str] = None
        self._buf: Optional[bytes] = None
        self._offset = 0

    def open(self) -> CacheHeader:
        """
        Read and verify the file.

        :return: The cache header.
        :rtype: CacheHeader
        :raises CorruptCache: On any mismatch.
        """
        data = self.path.read_bytes()
        if len(data) < _DIGEST_LEN + 4:
            raise CorruptCache(f"Cache file {self.path} is truncated")
        body, stored = data[:-_DIGEST_LEN], data[-_DIGEST_LEN:]
        actual = hashlib.sha256(body)
        if actual.digest() != stored:
            raise CorruptCache(f"Digest mismatch in {self.path}")
        self.header, self._offset = CacheHeader.unpack(body)
        self.digest = actual.hexdigest()
        self._buf = body
        return self.header

    def arrays(self) -> List[np.ndarray]:
        """
        Payload arrays in write order.

        :return: Arrays (read-only views copied out of the file buffer).
        :rtype: List[np.ndarray]
        """
        if self._buf is None:
            raise RuntimeError("CacheReader is not open")
        buf, off = self._buf, self._offset
        out: List[np.ndarray] = []
        try:
            (count,) = struct.unpack_from("<I", buf, off)
            off += 4
            for _ in range(count):
                code, size = struct.unpack_from("<BQ", buf, off)
                off += struct.calcsize("<BQ")
                dtype = np.dtype(_DTYPES[code])
                end = off + size * dtype.itemsize
                if end > len(buf):
                    raise CorruptCache("Array extends past end of file")
                arr = np.frombuffer(buf[off:end], dtype=dtype)
                out.append(arr.astype(dtype.newbyteorder("=")))
                off = end
        except (struct.error, KeyError) as exc:
            raise CorruptCache(f"Malformed cache payload: {exc}") from exc
        if off != len(buf):
            raise CorruptCache("Trailing bytes after cache payload")
        return out

    def close(self) -> None:
        """Release the buffer."""
        self._buf = None


class Cacheable(Protocol):
    """Objects that can live in the cache."""

    def cache_header(self) -> CacheHeader:
        """Header identifying the object."""

    def cache_arrays(self) -> List[np.ndarray]:
        """Payload arrays."""


C = TypeVar("C", bound=Cacheable)


def write_cache(path: Path, obj: Cacheable) -> str:
    """
    Write an object to ``path``.

    :return: Hex digest of the file body.
    :rtype: str
    """
    writer = CacheWriter(path, obj.cache_header())
    writer.open()
    try:
        writer.write_arrays(obj.cache_arrays())
    finally:
        writer.close()
    return writer.digest


def read_cache(
    path: Path, loader: Callable[[CacheHeader, List[np.ndarray]], C]
) -> Tuple[C, str]:
    """
    Read an object from ``path``.

    :param loader: Builds the object from header and arrays.
    :type loader: Callable[[CacheHeader, List[np.ndarray]], C]
    :return: Object and the file digest.
    :rtype: Tuple[C, str]
    :raises CorruptCache: On any mismatch.
    """
    reader = CacheReader(path)
    try:
        header = reader.open()
        arrays = reader.arrays()
    finally:
        reader.close()
    try:
        obj = loader(header, arrays)
    except (ValueError, IndexError) as exc:
        raise CorruptCache(f"Cache payload rejected: {exc}") from exc
    assert reader.digest is not None
    return obj, reader.digest


@dataclass(frozen=True)
class CacheEntry:
    """
    Summary of one cache file.

    :ivar path (Path): File path.
    :ivar header (Optional[CacheHeader]): Parsed header, None if corrupt.
    :ivar size (int): File size in bytes.
    """

    path: Path
    header: Optional[CacheHeader]
    size: int

    def to_dict(self) -> dict:
        """JSON-ready mapping."""
        out: dict = {"path": str(self.path), "size": self.size}
        if self.header is None:
            out["corrupt"] = True
        else:
            out.update(
                kind=self.header.kind.name.lower(),
                n=self.header.n,
                matrix=[list(r) for r in self.header.matrix],
                alpha=self.header.alpha_spec,
                bound=self.header.bound,
            )
        return out


class CacheStore:
    """
    Directory of cache files keyed by (kind, matrix, alpha spec, bound).

    A corrupt or mismatching file is never reused: the object is rebuilt
    and the file rewritten.
    """

    def __init__(self, directory: Path):
        """
        :param directory: Cache directory (created on first write).
        :type directory: Path
        """
        self.directory = Path(directory)
        self.digests: Dict[str, str] = {}

    def path_for(self, header: CacheHeader) -> Path:
        """File path of the entry identified by ``header``."""
        return self.directory / (
            f"{header.kind.name.lower()}-{header.key}{CACHE_SUFFIX}"
        )

    def fetch(
        self,
        header: CacheHeader,
        loader: Callable[[CacheHeader, List[np.ndarray]], C],
        build: Callable[[], C],
    ) -> C:
        """
        Load the entry or build and store it.

        :param header: Header the entry must match exactly.
        :type header: CacheHeader
        :param loader: Builds the object from header and arrays.
        :type loader: Callable[[CacheHeader, List[np.ndarray]], C]
        :param build: Computes the object on a miss.
        :type build: Callable[[], C]
        :return: Cached or freshly built object.
        :rtype: C
        """
        path = self.path_for(header)
        if path.exists():
            try:
                obj, digest = read_cache(path, loader)
                if obj.cache_header() != header:
                    raise CorruptCache(f"Header mismatch in {path}")
                self.digests[path.name] = digest
                logger.info(f"Cache hit {path.name}")
                return obj
            except CorruptCache as exc:
                logger.warning(f"Recomputing corrupt cache entry: {exc}")
        obj = build()
        self.digests[path.name] = write_cache(path, obj)
        logger.info(f"Cache stored {path.name}")
        return obj

    def inspect(self) -> List[CacheEntry]:
        """Entries in the directory, sorted by file name."""
        if not self.directory.is_dir():
            return []
        entries = []
        for path in sorted(self.directory.glob(f"*{CACHE_SUFFIX}")):
            try:
                reader = CacheReader(path)
                header: Optional[CacheHeader] = reader.open()
                reader.close()
            except CorruptCache:
                header = None
            entries.append(CacheEntry(path, header, path.stat().st_size))
        return entries

    def clear(self) -> int:
        """
        Delete every cache file.

        :return: Number of files removed.
        :rtype: int
        """
        removed = 0
        if not self.directory.is_dir():
            return removed
        for path in self.directory.glob(f"*{CACHE_SUFFIX}*"):
            path.unlink()
            removed += 1
        logger.info(f"Removed {removed} cache files from {self.directory}")
        return removed


def cache_roundtrip(
    obj: C,
    directory: Path,
    loader: Callable[[CacheHeader, List[np.ndarray]], C],
) -> C:
    """
    Write ``obj`` and read it back.

    :param obj: Radii multiset or series.
    :type obj: C
    :param directory: Writable directory.
    :type directory: Path
    :param loader: Builds the object from header and arrays.
    :type loader: Callable[[CacheHeader, List[np.ndarray]], C]
    :return: The object read back.
    :rtype: C
    :raises CorruptCache: If the file does not verify.
    """
    path = CacheStore(directory).path_for(obj.cache_header())
    write_cache(path, obj)
    back, _ = read_cache(path, loader)
    return back


