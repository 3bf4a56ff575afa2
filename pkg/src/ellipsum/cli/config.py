"""
Run configuration: a flat set of ``key=value`` settings shared by every
subcommand, read from a plain-text file and overridden by flags.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from ellipsum.averaging.kernel import AveragingKernel
from ellipsum.errors import ConfigError
from ellipsum.utils.logging import logger

CACHE_ENV = "ELLIPSUM_CACHE"
DEFAULT_CACHE_DIR = ".ellipsum-cache"
COMMANDS = (
    "dio",
    "repsums",
    "meansq",
    "count",
    "fdev",
    "variance",
    "shell",
    "theta-check",
)

_FloatList = Tuple[float, ...]
_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off", "")


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return str(value)


def _fallback(key: str, value: Any, default: Any) -> Any:
    logger.warning(
        f"Config key {key!r}: unreadable value {value!r}, "
        f"using default {_format(default)!r}"
    )
    return default


def _as_float(key: str, value: Any, default: Any) -> Any:
    if value is None or value == "":
        return default
    try:
        return float(value)
    except (TypeError, ValueError):
        return _fallback(key, value, default)


def _as_int(key: str, value: Any, default: int) -> int:
    if value is None or value == "":
        return default
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        return _fallback(key, value, default)
    if not as_float.is_integer():
        return _fallback(key, value, default)
    return int(as_float)


def _as_bool(key: str, value: Any, default: bool) -> bool:
    if value is None:
        return default
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    return _fallback(key, value, default)


def _as_floats(key: str, value: Any, default: _FloatList) -> _FloatList:
    if value is None:
        return default
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [s for s in str(value).replace(" ", "").split(",") if s]
    try:
        return tuple(float(v) for v in items)
    except (TypeError, ValueError):
        return _fallback(key, value, default)


def _as_text(value: Any, default: str) -> str:
    if value is None:
        return default
    return str(value).strip()


# Justification: one flat record of every run setting, so that each run
# has a single canonical text.
# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True)
class RunConfig:
    """
    Settings of one run.

    :ivar command (str): Subcommand name.
    :ivar matrix (str): Matrix spec (``diag:...``, ``full:...``, ...).
    :ivar alpha (str): Shift spec, empty for the zero center.
    :ivar pmax (int): Last shell of exponential-sum series.
    :ivar rmax (Optional[float]): Enumeration radius; derived when unset.
    :ivar T (Tuple[float, ...]): Averaging scales.
    :ivar K (Tuple[float, ...]): Smoothing parameters.
    :ivar zeta (float): Truncation exponent, in (0, 2].
    :ivar gamma (float): Shell exponent eps = T^-gamma, in (0, 1).
    :ivar P (int): Truncation of the variance series.
    :ivar eps (Optional[float]): Explicit shell width.
    :ivar t (Tuple[float, ...]): Radii for pointwise counts.
    :ivar qmax (int): Denominator bound of the type estimate.
    :ivar coeff_bound (int): Relation search bound, 0 to skip.
    :ivar a (str): Diagonal weights for theta checks.
    :ivar v (Tuple[float, ...]): Decreasing imaginary parts.
    :ivar sharpness (float): Sharpness of the radial cutoff.
    :ivar kernel (str): Averaging kernel ``bump:c0,c1``.
    :ivar checkpoints (Tuple[float, ...]): Mean-square checkpoints.
    :ivar out (str): Output directory.
    :ivar cache (str): Cache directory, empty for the default.
    :ivar workers (int): Worker threads.
    :ivar assume_property_1 (bool): Allow non-diagonal forms where the
        limit is only established for diagonal ones.
    """

    command: str = ""
    matrix: str = "diag:1,1"
    alpha: str = ""
    pmax: int = 10_000
    rmax: Optional[float] = None
    T: _FloatList = (100.0,)
    K: _FloatList = ()
    zeta: float = 0.5
    gamma: float = 0.5
    P: int = 100_000
    eps: Optional[float] = None
    t: _FloatList = ()
    qmax: int = 10_000
    coeff_bound: int = 0
    a: str = "1,1"
    v: _FloatList = (1e-2, 1e-3)
    sharpness: float = 20.0
    kernel: str = "bump:1,2"
    checkpoints: _FloatList = ()
    out: str = "ellipsum-out"
    cache: str = ""
    workers: int = 1
    assume_property_1: bool = False

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> "RunConfig":
        """
        Build a config from parsed text or flags.

        Unknown keys are ignored and unreadable values fall back to the
        defaults, each with a warning. Call :meth:`validate` afterwards.

        :param data: Key/value pairs; values may be strings.
        :type data: Optional[Mapping[str, Any]]
        :return: Config.
        :rtype: RunConfig
        """
        if not isinstance(data, Mapping):
            return cls()
        defaults = cls()
        known = {f.name for f in fields(cls)}
        for key in sorted(set(data) - known):
            logger.warning(f"Ignoring unknown config key {key!r}")
        get = data.get
        return cls(
            command=_as_text(get("command"), defaults.command),
            matrix=_as_text(get("matrix"), defaults.matrix),
            alpha=_as_text(get("alpha"), defaults.alpha),
            pmax=_as_int("pmax", get("pmax"), defaults.pmax),
            rmax=_as_float("rmax", get("rmax"), defaults.rmax),
            T=_as_floats("T", get("T"), defaults.T),
            K=_as_floats("K", get("K"), defaults.K),
            zeta=_as_float("zeta", get("zeta"), defaults.zeta),
            gamma=_as_float("gamma", get("gamma"), defaults.gamma),
            P=_as_int("P", get("P"), defaults.P),
            eps=_as_float("eps", get("eps"), defaults.eps),
            t=_as_floats("t", get("t"), defaults.t),
            qmax=_as_int("qmax", get("qmax"), defaults.qmax),
            coeff_bound=_as_int(
                "coeff_bound", get("coeff_bound"), defaults.coeff_bound
            ),
            a=_as_text(get("a"), defaults.a),
            v=_as_floats("v", get("v"), defaults.v),
            sharpness=_as_float(
                "sharpness", get("sharpness"), defaults.sharpness
            ),
            kernel=_as_text(get("kernel"), defaults.kernel),
            checkpoints=_as_floats(
                "checkpoints", get("checkpoints"), defaults.checkpoints
            ),
            out=_as_text(get("out"), defaults.out) or defaults.out,
            cache=_as_text(get("cache"), defaults.cache),
            workers=_as_int("workers", get("workers"), defaults.workers),
            assume_property_1=_as_bool(
                "assume_property_1",
                get("assume_property_1"),
                defaults.assume_property_1,
            ),
        )

    def validate(self) -> "RunConfig":
        """
        Check the numeric invariants.

        :return: self
        :rtype: RunConfig
        :raises ConfigError: Naming the offending key.
        """
        if self.command and self.command not in COMMANDS:
            raise ConfigError(f"command: unknown command {self.command!r}")
        for key in ("pmax", "P", "qmax", "workers"):
            if getattr(self, key) < 1:
                raise ConfigError(
                    f"{key}: must be positive, got {getattr(self, key)}"
                )
        if self.qmax < 2:
            raise ConfigError(f"qmax: must be >= 2, got {self.qmax}")
        if self.coeff_bound < 0:
            raise ConfigError(
                f"coeff_bound: must be >= 0, got {self.coeff_bound}"
            )
        for key in ("rmax", "eps"):
            value = getattr(self, key)
            if value is not None and not value > 0:
                raise ConfigError(f"{key}: must be positive, got {value}")
        for key in ("T", "K", "t", "v", "checkpoints"):
            values = getattr(self, key)
            if any(not x > 0 for x in values):
                raise ConfigError(f"{key}: must be positive, got {values}")
        if any(not float(x).is_integer() for x in self.checkpoints):
            raise ConfigError(
                f"checkpoints: must be integers, got {self.checkpoints}"
            )
        if not self.sharpness > 0:
            raise ConfigError(
                f"sharpness: must be positive, got {self.sharpness}"
            )
        if not 0 < self.zeta <= 2:
            raise ConfigError(f"zeta: must lie in (0, 2], got {self.zeta}")
        if not 0 < self.gamma < 1:
            raise ConfigError(f"gamma: must lie in (0, 1), got {self.gamma}")
        parse_kernel_spec(self.kernel)
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Field values keyed by name."""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def canonical_text(self) -> str:
        """
        Sorted ``key=value`` lines; parsing them reproduces this config.

        :return: Canonical text ending with a newline.
        :rtype: str
        """
        items = sorted(self.to_dict().items())
        return "".join(f"{k}={_format(v)}\n" for k, v in items)

    def cache_dir(self) -> Path:
        """
        Cache directory: the ``cache`` key when set, else $ELLIPSUM_CACHE,
        else ``.ellipsum-cache`` in the working directory.
        """
        if self.cache:
            return Path(self.cache)
        return Path(os.environ.get(CACHE_ENV) or DEFAULT_CACHE_DIR)


def parse_config_text(text: str) -> Dict[str, str]:
    """
    Parse ``key=value`` lines; ``#`` starts a comment.

    :param text: File contents.
    :type text: str
    :return: Raw values keyed by name, later lines winning.
    :rtype: Dict[str, str]
    :raises ConfigError: On a line without ``=`` or with an empty key.
    """
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(
                f"line {lineno}: expected key=value, got {raw!r}"
            )
        out[key] = value.strip()
    return out


def load_config(
    path: Optional[Path], overrides: Mapping[str, Any]
) -> RunConfig:
    """
    Read a config file (if any) and apply flag overrides.

    :param path: Config file, None for flags only.
    :type path: Optional[Path]
    :param overrides: Values given on the command line.
    :type overrides: Mapping[str, Any]
    :return: Validated config.
    :rtype: RunConfig
    :raises ConfigError: If the file cannot be read or parsed.
    """
    merged: Dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"--config: cannot read {path}: {exc}") from exc
        merged.update(parse_config_text(text))
    merged.update(overrides)
    return RunConfig.from_dict(merged).validate()


def parse_kernel_spec(spec: str) -> Tuple[float, float]:
    """
    Parse ``bump:c0,c1``; ``bump`` alone is the bump on [1, 2].

    :param spec: Kernel spec.
    :type spec: str
    :return: Support (c0, c1).
    :rtype: Tuple[float, float]
    :raises ConfigError: On a malformed spec.
    """
    text = "".join(spec.split())
    name, _, args = text.partition(":")
    if name != "bump":
        raise ConfigError(f"kernel: only 'bump' kernels exist, got {spec!r}")
    if not args:
        return 1.0, 2.0
    try:
        c0, c1 = (float(v) for v in args.split(","))
    except ValueError as exc:
        raise ConfigError(
            f"kernel: expected bump:c0,c1, got {spec!r}"
        ) from exc
    if not 0 < c0 < c1:
        raise ConfigError(f"kernel: need 0 < c0 < c1, got {spec!r}")
    return c0, c1


def build_kernel(spec: str) -> AveragingKernel:
    """Kernel named by a ``bump:c0,c1`` spec."""
    c0, c1 = parse_kernel_spec(spec)
    return AveragingKernel(c0, c1)
