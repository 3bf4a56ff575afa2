from __future__ import annotations

from importlib.metadata import PackageNotFoundError

import ellipsum


def test_get_version_falls_back_without_metadata(monkeypatch) -> None:
    logged: list = []

    def missing(name: str) -> str:
        raise PackageNotFoundError(name)

    monkeypatch.setattr(ellipsum, "version", missing)
    monkeypatch.setattr(ellipsum.logger, "warning", logged.append)

    assert ellipsum.get_version() == "0.0.0"
    assert logged == [
        "Package 'ellipsum' not found. Returning default version '0.0.0'."
    ]


def test_get_version_reads_metadata(monkeypatch) -> None:
    monkeypatch.setattr(ellipsum, "version", lambda name: f"{name}-1.2.3")

    assert ellipsum.get_version() == "ellipsum-1.2.3"
