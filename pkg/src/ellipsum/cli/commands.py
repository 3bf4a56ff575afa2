"""
Subcommand implementations. Each takes a RunSession, writes its tables
into the output directory and returns a JSON-ready summary.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence

from ellipsum.arith.diophantine import (
    ShiftVector,
    estimate_type,
    independence_scan,
    parse_shift,
)
from ellipsum.arith.quadform import QuadFormCtx, Rationalized, parse_matrix
from ellipsum.averaging.experiments import (
    EpsRule,
    diag_shell_variance,
    fit_trend,
    is_decaying,
    mean_F,
    spectral_error,
    var_F,
    var_S,
)
from ellipsum.cli.config import RunConfig, build_kernel
from ellipsum.cli.emit import csv_text, json_text, write_text
from ellipsum.cli.manifest import RunManifest
from ellipsum.errors import EllipsumError, PropertyOneRequired, ValidationError
from ellipsum.lattice.cache_format import CacheHeader, CacheKind, CacheStore
from ellipsum.lattice.radii import RadiiMultiset, build_radii
from ellipsum.spectral.counting import DeviationEvaluator, SpectralEvaluator
from ellipsum.spectral.expsums import (
    ExpSumSeries,
    boundedness_check,
    mean_square_trace,
    rep_sums,
)
from ellipsum.theta.bridge import bridge_check, diagonal_ctx
from ellipsum.theta.profiles import RadialIndicatorApprox
from ellipsum.utils.logging import bind_run, logger
from ellipsum.utils.profiler import StageTimer

_TRUNCATION_GUARD = 1e-9
BOUNDEDNESS_START = 1000


@contextmanager
def _source(key: str) -> Iterator[None]:
    """Prefix validation messages with the key that produced the value."""
    try:
        yield
    except ValidationError as exc:
        raise type(exc)(f"{key}: {exc}") from exc


@dataclass
class RunSession:
    """
    State of one run: config, cache, output directory and the records
    that end up in the manifest.

    :ivar cfg (RunConfig): Validated config.
    :ivar store (CacheStore): Cache of series and radii.
    :ivar out_dir (Path): Output directory.
    :ivar timer (StageTimer): Stage marks.
    :ivar outputs (Dict[str, str]): sha256 per written file.
    :ivar est_errors (Dict[str, float]): Error estimate per result.
    """

    cfg: RunConfig
    store: CacheStore
    out_dir: Path
    timer: StageTimer = field(default_factory=StageTimer)
    outputs: Dict[str, str] = field(default_factory=dict)
    est_errors: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "RunSession":
        """Session with the cache directory and outputs of ``cfg``."""
        return cls(
            cfg=cfg,
            store=CacheStore(cfg.cache_dir()),
            out_dir=Path(cfg.out),
        )

    def series(
        self, ctx: QuadFormCtx, alpha: Optional[ShiftVector], p_max: int
    ) -> ExpSumSeries:
        """Twisted representation numbers through the cache."""
        header = CacheHeader(
            kind=CacheKind.SERIES,
            matrix=ctx.M,
            alpha_spec=alpha.spec if alpha is not None else "0",
            bound=float(p_max),
        )
        series = self.store.fetch(
            header,
            ExpSumSeries.from_cache,
            lambda: rep_sums(ctx, alpha, p_max, workers=self.cfg.workers),
        )
        self.timer.mark(f"series {ctx.n}x{ctx.n} p<={p_max}")
        return series

    def radii(
        self, ctx: QuadFormCtx, alpha: Optional[ShiftVector], R_max: float
    ) -> RadiiMultiset:
        """Radii of the ball of radius R_max through the cache."""
        header = CacheHeader(
            kind=CacheKind.RADII,
            matrix=ctx.M,
            alpha_spec=alpha.spec if alpha is not None else "0",
            bound=float(R_max),
        )
        rm = self.store.fetch(
            header,
            RadiiMultiset.from_cache,
            lambda: build_radii(ctx, alpha, R_max, workers=self.cfg.workers),
        )
        self.timer.mark(f"radii R<={R_max:g}")
        return rm

    def write_csv(
        self, name: str, header: Sequence[str], rows: List[Sequence[Any]]
    ) -> Path:
        """Write a CSV table into the output directory."""
        path = self.out_dir / name
        self.outputs[name] = write_text(path, csv_text(header, rows))
        logger.info(f"Wrote {len(rows)} rows to {path}")
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        """Write a JSON document into the output directory."""
        path = self.out_dir / name
        self.outputs[name] = write_text(path, json_text(payload))
        logger.info(f"Wrote {path}")
        return path


def _form(cfg: RunConfig, allow_scale: bool = False) -> Rationalized:
    with _source("matrix"):
        form = parse_matrix(cfg.matrix)
    if form.scale != 1 and not allow_scale:
        raise ValidationError(
            f"matrix: {cfg.command} needs an integral form; "
            f"{cfg.matrix!r} has denominators (scale {form.scale})"
        )
    return form


def _shift(spec: str, n: int) -> Optional[ShiftVector]:
    if not spec:
        return None
    with _source("alpha"):
        return parse_shift(spec, n)


def _require_property_1(cfg: RunConfig, ctx: QuadFormCtx) -> None:
    if ctx.is_diagonal or cfg.assume_property_1:
        return
    raise PropertyOneRequired(
        f"matrix: the limit behind {cfg.command!r} is established for "
        f"diagonal forms only and is not claimed for {cfg.matrix!r}; pass "
        "--assume-property-1 to run the extension anyway"
    )


def _spectral_cut(K: float, zeta: float) -> int:
    return int(math.floor(K ** (2.0 + zeta) + _TRUNCATION_GUARD))


def _require(values: Sequence[float], key: str) -> Sequence[float]:
    if not values:
        raise ValidationError(f"{key}: no values given")
    return values


def run_dio(session: RunSession) -> dict:
    """Diophantine type estimate (and relation scan) of alpha."""
    cfg = session.cfg
    if not cfg.alpha:
        raise ValidationError("alpha: dio needs a shift vector")
    n = len(cfg.alpha.split(","))
    alpha = _shift(cfg.alpha, n)
    assert alpha is not None
    report = estimate_type(alpha, cfg.qmax)
    payload: Dict[str, Any] = {"alpha": alpha.spec, **report.to_dict()}
    if cfg.coeff_bound > 0:
        relation = independence_scan(alpha, cfg.coeff_bound)
        payload["relation"] = {
            "coeff_bound": relation.coeff_bound,
            "found": relation.found,
            "witness": relation.witness,
        }
    session.timer.mark("dio")
    session.write_json("dio.json", payload)
    return payload


def run_repsums(session: RunSession) -> dict:
    """Table of r(p) and the cumulative mean square."""
    cfg = session.cfg
    ctx = _form(cfg).ctx
    alpha = _shift(cfg.alpha, ctx.n)
    series = session.series(ctx, alpha, cfg.pmax)
    rows: List[Sequence[Any]] = [
        (p, r.real, r.imag, a2, rc)
        for p, (r, a2, rc) in enumerate(
            zip(series.r.tolist(), series.abs2.tolist(), series.R_cum.tolist())
        )
    ]
    session.write_csv(
        "repsums.csv", ("p", "re_r", "im_r", "abs2_r", "R_cum"), rows
    )
    summary: Dict[str, Any] = {
        "p_max": series.p_max,
        "R_cum": float(series.R_cum[-1]),
        "volume": series.volume,
    }
    if series.p_max >= 1:
        start = min(BOUNDEDNESS_START, series.p_max)
        summary["bounded_ratio"] = boundedness_check(series, start)
    session.write_json("repsums.json", summary)
    return summary


def _checkpoints(cfg: RunConfig) -> List[int]:
    if cfg.checkpoints:
        return sorted({int(c) for c in cfg.checkpoints})
    points = [10**k for k in range(1, 19) if 10**k < cfg.pmax]
    return points + [cfg.pmax]


def run_meansq(session: RunSession) -> dict:
    """R(N)/N^(n/2) at the checkpoints next to |E^M|."""
    cfg = session.cfg
    ctx = _form(cfg).ctx
    _require_property_1(cfg, ctx)
    alpha = _shift(cfg.alpha, ctx.n)
    series = session.series(ctx, alpha, cfg.pmax)
    with _source("checkpoints"):
        trace = mean_square_trace(series, _checkpoints(cfg))
    session.write_csv(
        "meansq.csv",
        ("N", "ratio", "target"),
        [(row.N, row.ratio, row.target) for row in trace],
    )
    last = trace[-1]
    summary = {
        "N": last.N,
        "ratio": last.ratio,
        "target": last.target,
        "rel_error": abs(last.ratio - last.target) / last.target,
    }
    session.write_json("meansq.json", summary)
    return summary


def run_count(session: RunSession) -> dict:
    """Pointwise N and F (and S with eps) at the radii t."""
    cfg = session.cfg
    form = _form(cfg, allow_scale=True)
    ctx = form.ctx
    alpha = _shift(cfg.alpha, ctx.n)
    ts = sorted(_require(cfg.t, "t"))
    width = cfg.eps or 0.0
    R_max = cfg.rmax or form.map_radius(ts[-1] + width)
    rm = session.radii(ctx, alpha, R_max)
    c = float(form.scale)
    n = ctx.n
    mapped = [form.map_radius(t) for t in ts]
    ev = DeviationEvaluator(rm, shell_allowance=math.sqrt(c) * width)
    with _source("t"):
        counts = [int(ev.N(t)) for t in mapped]
        devs = [float(ev.F(t)) * c ** ((n - 1) / 4.0) for t in mapped]
    session.write_csv(
        "count.csv", ("t", "N", "F"), list(zip(ts, counts, devs))
    )
    summary: Dict[str, Any] = {"points": rm.count, "R_max": rm.R_max}
    if cfg.eps is not None:
        with _source("eps"):
            shells = [
                float(ev.S(t, math.sqrt(c) * width)) * c ** (n / 4.0)
                for t in mapped
            ]
        session.write_csv(
            "shell.csv",
            ("t", "eps", "S"),
            [(t, width, s) for t, s in zip(ts, shells)],
        )
    session.write_json("count.json", summary)
    return summary


def run_fdev(session: RunSession) -> dict:
    """<F>_T over the scales and, with K, the spectral error trend."""
    cfg = session.cfg
    form = _form(cfg, allow_scale=True)
    ctx = form.ctx
    alpha = _shift(cfg.alpha, ctx.n)
    kernel = build_kernel(cfg.kernel)
    Ts = _require(cfg.T, "T")
    root_c = math.sqrt(form.scale)
    R_max = cfg.rmax or kernel.c1 * root_c * max(Ts)
    rm = session.radii(ctx, alpha, R_max)
    with _source("T"):
        results = mean_F(
            ctx,
            alpha,
            [root_c * T for T in Ts],
            kernel=kernel,
            rm=rm,
            workers=cfg.workers,
        )
    session.timer.mark("mean_F")
    factor = float(form.scale) ** ((ctx.n - 1) / 4.0)
    rows = []
    for T, res in zip(Ts, results):
        rows.append((T, factor * res.value, factor * res.est_error))
        session.est_errors[f"mean_F@T={T:g}"] = factor * res.est_error
    session.write_csv("fdev.csv", ("T", "mean_F", "est_error"), rows)
    summary: Dict[str, Any] = {
        "T": list(Ts),
        "mean_F": [row[1] for row in rows],
        "decaying": is_decaying(results),
    }
    if cfg.K:
        summary["trend"] = _spectral_trend(session, ctx, alpha, rm, form)
    session.write_json("fdev.json", summary)
    return summary


def _spectral_trend(
    session: RunSession,
    ctx: QuadFormCtx,
    alpha: Optional[ShiftVector],
    rm: RadiiMultiset,
    form: Rationalized,
) -> dict:
    cfg = session.cfg
    if form.scale != 1:
        raise ValidationError(
            "K: the spectral expansion needs an integral form"
        )
    kernel = build_kernel(cfg.kernel)
    T = max(cfg.T)
    adj = session.series(
        ctx.adjugate(), alpha, _spectral_cut(max(cfg.K), cfg.zeta)
    )
    rows = []
    values = []
    for K in cfg.K:
        with _source("K"):
            sp = SpectralEvaluator.for_form(ctx, adj, K, zeta=cfg.zeta)
        res = spectral_error(rm, sp, T, kernel=kernel)
        rows.append((K, T, res.value, res.est_error))
        values.append(res.value)
        session.est_errors[f"spectral@K={K:g}"] = res.est_error
    session.timer.mark("spectral")
    session.write_csv(
        "spectral.csv", ("K", "T", "value", "est_error"), rows
    )
    trend: Dict[str, Any] = {"T": T, "values": values}
    if all(v > 0 for v in values):
        fit = fit_trend(cfg.K, values, T, ctx.n)
        trend.update(C=fit.C, max_factor=fit.max_factor)
    return trend


def run_variance(session: RunSession) -> dict:
    """<|F|^2>_T at the largest T against the variance constant."""
    cfg = session.cfg
    ctx = _form(cfg).ctx
    _require_property_1(cfg, ctx)
    alpha = _shift(cfg.alpha, ctx.n)
    kernel = build_kernel(cfg.kernel)
    T = max(_require(cfg.T, "T"))
    rm = session.radii(ctx, alpha, cfg.rmax or kernel.c1 * T)
    K = max(cfg.K) if cfg.K else None
    p_adj = cfg.P
    if K is not None:
        p_adj = max(p_adj, _spectral_cut(K, cfg.zeta))
    adj = session.series(ctx.adjugate(), alpha, p_adj)
    report = var_F(
        ctx,
        alpha,
        T,
        kernel=kernel,
        P=cfg.P,
        adj_series=adj,
        rm=rm,
        K=K,
        workers=cfg.workers,
    )
    session.timer.mark("variance")
    session.est_errors[f"var_F@T={T:g}"] = report.est_error
    payload = report.to_dict()
    session.write_json("variance.json", payload)
    return payload


def run_shell(session: RunSession) -> dict:
    """<|S(., eps)|^2>_T at the largest T against n |E^M|."""
    cfg = session.cfg
    ctx = _form(cfg).ctx
    _require_property_1(cfg, ctx)
    alpha = _shift(cfg.alpha, ctx.n)
    kernel = build_kernel(cfg.kernel)
    T = max(_require(cfg.T, "T"))
    rule = EpsRule(cfg.gamma)
    width = cfg.eps if cfg.eps is not None else rule(T)
    rm = session.radii(ctx, alpha, cfg.rmax or kernel.c1 * T + width)
    report = var_S(
        ctx,
        alpha,
        T,
        eps_rule=rule,
        kernel=kernel,
        rm=rm,
        eps=cfg.eps,
        workers=cfg.workers,
    )
    session.timer.mark("shell")
    session.est_errors[f"var_S@T={T:g}"] = report.est_error
    payload: Dict[str, Any] = report.to_dict()
    if cfg.K:
        K = max(cfg.K)
        adj = session.series(
            ctx.adjugate(), alpha, _spectral_cut(K, cfg.zeta)
        )
        payload["diag_spectral"] = diag_shell_variance(
            ctx, adj, report.eps, K, zeta=cfg.zeta
        )
    session.write_json("shell.json", payload)
    return payload


def _weights(text: str) -> List[int]:
    try:
        values = [int(v) for v in "".join(text.split()).split(",")]
    except ValueError as exc:
        raise ValidationError(
            f"a: expected positive integers, got {text!r}"
        ) from exc
    return values


def run_theta_check(session: RunSession) -> dict:
    """Theta side, representation-number side and target per v."""
    cfg = session.cfg
    a = _weights(cfg.a)
    with _source("a"):
        ctx = diagonal_ctx(a)
    alpha = _shift(cfg.alpha, ctx.n)
    vs = _require(cfg.v, "v")
    support_sq = RadialIndicatorApprox(cfg.sharpness).support_sq
    need = max(1, int(math.floor(support_sq / min(vs))))
    series = session.series(ctx, alpha, need)
    with _source("v"):
        rows = bridge_check(
            a,
            alpha,
            vs,
            sharpness=cfg.sharpness,
            series=series,
            workers=cfg.workers,
        )
    session.timer.mark("theta-check")
    session.write_csv(
        "theta.csv",
        ("v", "theta_msq", "repsum_msq", "target"),
        [(r.v, r.theta_msq, r.repsum_msq, r.target) for r in rows],
    )
    summary = {"rows": [r.to_dict() for r in rows]}
    return summary


COMMAND_TABLE: Dict[str, Callable[[RunSession], dict]] = {
    "dio": run_dio,
    "repsums": run_repsums,
    "meansq": run_meansq,
    "count": run_count,
    "fdev": run_fdev,
    "variance": run_variance,
    "shell": run_shell,
    "theta-check": run_theta_check,
}


@dataclass(frozen=True)
class RunOutcome:
    """
    Result of :func:`run`.

    :ivar exit_code (int): 0, 2 (validation) or 3 (budget).
    :ivar summary (Optional[dict]): Command summary on success.
    :ivar manifest (Path): Manifest path.
    """

    exit_code: int
    summary: Optional[dict]
    manifest: Path


def run(cfg: RunConfig, version: str = "0.0.0") -> RunOutcome:
    """
    Dispatch ``cfg.command`` and write its outputs and manifest.

    :param cfg: Validated config.
    :type cfg: RunConfig
    :param version: Tool version recorded in the manifest.
    :type version: str
    :return: Exit code, summary and manifest path.
    :rtype: RunOutcome
    :raises ValidationError: On an unknown command.
    """
    if cfg.command not in COMMAND_TABLE:
        raise ValidationError(f"command: unknown command {cfg.command!r}")
    session = RunSession.from_config(cfg)
    manifest = RunManifest(
        tool_version=version,
        command=cfg.command,
        config_text=cfg.canonical_text(),
    )
    started = time.perf_counter()
    session.timer.mark("start")
    summary: Optional[dict] = None
    label = f"{cfg.command}@{manifest.config_sha256[:8]}"
    with bind_run(label):
        try:
            summary = COMMAND_TABLE[cfg.command](session)
        except EllipsumError as exc:
            manifest.exit_code = exc.exit_code
            manifest.error = f"{type(exc).__name__}: {exc}"
            logger.error(manifest.error)
        # Justification: unexpected failures are logged with their traceback
        # before they propagate.
        # pylint: disable=broad-exception-caught
        except Exception as exc:
            manifest.exit_code = 1
            manifest.error = f"{type(exc).__name__}: {exc}"
            logger.exception(f"Unhandled exception in {cfg.command}: {exc}")
            raise
        # pylint: enable=broad-exception-caught
        finally:
            report = session.timer.emit()
            manifest.stages = dict(report.stages_s)
            manifest.wall_seconds = time.perf_counter() - started
            manifest.cache_digests = dict(session.store.digests)
            manifest.outputs = dict(session.outputs)
            manifest.est_errors = dict(session.est_errors)
            path = manifest.write(session.out_dir)
    return RunOutcome(
        exit_code=manifest.exit_code, summary=summary, manifest=path
    )
