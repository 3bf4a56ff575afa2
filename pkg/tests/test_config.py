from __future__ import annotations

from pathlib import Path

import pytest

from ellipsum.cli.config import (
    DEFAULT_CACHE_DIR,
    RunConfig,
    build_kernel,
    load_config,
    parse_config_text,
    parse_kernel_spec,
)
from ellipsum.errors import ConfigError


def test_canonical_text_round_trips() -> None:
    cfg = RunConfig(
        command="shell",
        alpha="sqrt2-1,1/3",
        T=(50.0, 100.0),
        K=(10.0,),
        eps=0.25,
        assume_property_1=True,
    )

    parsed = RunConfig.from_dict(parse_config_text(cfg.canonical_text()))

    assert parsed == cfg


def test_canonical_text_is_sorted() -> None:
    lines = RunConfig(command="dio").canonical_text().splitlines()

    keys = [line.split("=", 1)[0] for line in lines]
    assert keys == sorted(keys)
    assert "rmax=" in lines
    assert "assume_property_1=false" in lines


def test_unreadable_values_fall_back_with_warning(monkeypatch) -> None:
    logged: list = []
    monkeypatch.setattr("ellipsum.cli.config.logger.warning", logged.append)

    cfg = RunConfig.from_dict(
        {"pmax": "many", "T": "1,x", "workers": "2.5", "colour": "red"}
    )

    assert cfg.pmax == RunConfig().pmax
    assert cfg.T == RunConfig().T
    assert cfg.workers == 1
    assert len(logged) == 4
    assert any("'colour'" in msg for msg in logged)


def test_from_dict_accepts_non_mapping() -> None:
    assert RunConfig.from_dict(None) == RunConfig()


@pytest.mark.parametrize(
    "overrides, key",
    [
        ({"zeta": "0"}, "zeta:"),
        ({"zeta": "2.5"}, "zeta:"),
        ({"gamma": "1"}, "gamma:"),
        ({"pmax": "0"}, "pmax:"),
        ({"qmax": "1"}, "qmax:"),
        ({"checkpoints": "0.5,10"}, "checkpoints:"),
        ({"T": "10,-1"}, "T:"),
        ({"eps": "0"}, "eps:"),
        ({"kernel": "box:1,2"}, "kernel:"),
        ({"command": "plot"}, "command:"),
    ],
)
def test_validate_names_the_key(overrides: dict, key: str) -> None:
    with pytest.raises(ConfigError, match=key):
        RunConfig.from_dict(overrides).validate()


def test_parse_config_text() -> None:
    text = "# comment\n\nmatrix = diag:1,2  # trailing\npmax=10\npmax=20\n"

    assert parse_config_text(text) == {"matrix": "diag:1,2", "pmax": "20"}
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("pmax=1\njust words\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("=5\n")


def test_load_config_reads_file_and_overrides(tmp_path: Path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text("alpha=1/3\nqmax=99\n", encoding="utf-8")

    cfg = load_config(path, {"command": "dio", "qmax": "7"})

    assert cfg.alpha == "1/3"
    assert cfg.qmax == 7
    with pytest.raises(ConfigError, match="--config"):
        load_config(tmp_path / "missing.cfg", {})


def test_cache_dir_precedence(tmp_path: Path, monkeypatch) -> None:
    monkeypatch.delenv("ELLIPSUM_CACHE", raising=False)
    assert RunConfig().cache_dir() == Path(DEFAULT_CACHE_DIR)

    monkeypatch.setenv("ELLIPSUM_CACHE", str(tmp_path / "env"))
    assert RunConfig().cache_dir() == tmp_path / "env"

    explicit = RunConfig(cache=str(tmp_path / "flag"))
    assert explicit.cache_dir() == tmp_path / "flag"


def test_kernel_specs() -> None:
    assert parse_kernel_spec("bump") == (1.0, 2.0)
    assert parse_kernel_spec(" bump: 0.5, 3 ") == (0.5, 3.0)
    for bad in ("bump:2,1", "bump:1", "bump:a,b"):
        with pytest.raises(ConfigError, match="kernel:"):
            parse_kernel_spec(bad)

    kernel = build_kernel("bump:1,2")
    assert (kernel.c0, kernel.c1) == (1.0, 2.0)
