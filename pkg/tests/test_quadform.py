from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from ellipsum.arith import quadform
from ellipsum.arith.quadform import (
    MAX_DIM,
    ball_volume,
    build_ctx,
    dual_norm_sq,
    parse_matrix,
    qform_value,
    rationalize,
)
from ellipsum.errors import (
    DimensionMismatch,
    DimensionTooLarge,
    DimensionZero,
    MatrixSyntaxError,
    NotPositiveDefinite,
    NotSymmetric,
    ValidationError,
)


def test_build_ctx_caches_exact_invariants() -> None:
    ctx = build_ctx([[2, 1], [1, 2]])

    assert ctx.n == 2
    assert ctx.detM == 3
    assert ctx.adjM == ((2, -1), (-1, 2))
    assert ctx.volume == pytest.approx(math.pi / math.sqrt(3))
    assert not ctx.is_diagonal
    assert np.allclose(ctx.chol @ ctx.chol.T, ctx.as_array())


def test_adjugate_identity_holds_exactly_for_random_forms() -> None:
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(1, 6))
        a = rng.integers(-3, 4, size=(n, n))
        m = (a @ a.T + np.eye(n, dtype=np.int64)).tolist()
        ctx = build_ctx(m)
        for i in range(n):
            for j in range(n):
                entry = sum(ctx.M[i][k] * ctx.adjM[k][j] for k in range(n))
                assert entry == (ctx.detM if i == j else 0)


def test_build_ctx_of_dimension_one() -> None:
    ctx = build_ctx([[5]])

    assert ctx.detM == 5
    assert ctx.adjM == ((1,),)
    assert ctx.volume == pytest.approx(2 / math.sqrt(5))


def test_build_ctx_rejects_invalid_matrices() -> None:
    with pytest.raises(DimensionZero):
        build_ctx([])
    with pytest.raises(NotSymmetric):
        build_ctx([[1, 2], [0, 1]])
    with pytest.raises(NotPositiveDefinite):
        build_ctx([[1, 2], [2, 1]])
    with pytest.raises(NotPositiveDefinite):
        build_ctx([[0, 0], [0, 1]])
    big = np.eye(MAX_DIM + 1, dtype=np.int64).tolist()
    with pytest.raises(DimensionTooLarge):
        build_ctx(big)


def test_build_ctx_checks_the_adjugate_minors(monkeypatch) -> None:
    real = quadform._bareiss_leading_minors
    seen: list = []

    def record(rows):
        seen.append(tuple(tuple(r) for r in rows))
        return real(rows)

    monkeypatch.setattr(quadform, "_bareiss_leading_minors", record)
    ctx = build_ctx([[3, 1, 0], [1, 2, 1], [0, 1, 4]])

    assert seen == [ctx.M, ctx.adjM]
    assert all(m > 0 for m in real(ctx.adjM))

    def adjugate_fails(rows):
        return real(rows) if rows == ctx.M else [7, -1]

    monkeypatch.setattr(quadform, "_bareiss_leading_minors", adjugate_fails)
    with pytest.raises(ArithmeticError, match="adj\\(M\\) leading minor"):
        build_ctx(ctx.M)


def test_build_ctx_checks_the_cholesky_factor(monkeypatch) -> None:
    real = np.linalg.cholesky
    M = [[2, 1], [1, 2]]

    chol = build_ctx(M).chol
    assert np.max(np.abs(chol @ chol.T - np.array(M))) <= 2e-12

    monkeypatch.setattr(np.linalg, "cholesky", lambda a: real(a) * 1.000001)
    with pytest.raises(ArithmeticError, match="chol"):
        build_ctx(M)


def test_validation_errors_are_value_errors_with_exit_code_two() -> None:
    with pytest.raises(ValueError) as info:
        build_ctx([[1, 2], [2, 1]])

    assert isinstance(info.value, ValidationError)
    assert info.value.exit_code == 2


def test_qform_value_is_exact_for_integers_and_fractions() -> None:
    ctx = build_ctx([[2, 1], [1, 2]])

    assert qform_value(ctx, [1, -1]) == 2
    assert isinstance(qform_value(ctx, [1, -1]), int)
    assert qform_value(ctx, [Fraction(1, 2), Fraction(1, 2)]) == Fraction(
        3, 2
    )
    assert qform_value(ctx, [0.5, 0.5]) == pytest.approx(1.5)
    with pytest.raises(DimensionMismatch):
        qform_value(ctx, [1, 2, 3])


def test_dual_norm_sq_uses_the_adjugate() -> None:
    ctx = build_ctx([[1, 0], [0, 2]])

    assert dual_norm_sq(ctx, [1, 0]) == Fraction(2, 2)
    assert dual_norm_sq(ctx, [0, 1]) == Fraction(1, 2)


def test_ball_volume_matches_known_values() -> None:
    assert ball_volume(1) == pytest.approx(2.0)
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_parse_matrix_grammar() -> None:
    assert parse_matrix("diag:1,2").ctx.M == ((1, 0), (0, 2))
    assert parse_matrix(" full: [[2, 1], [1, 2]] ").ctx.detM == 3
    assert parse_matrix("diag:1").scale == 1

    rat = parse_matrix("qdiag:1/2,1/3")
    assert rat.scale == 6
    assert rat.ctx.M == ((3, 0), (0, 2))
    assert rat.map_radius(2.0) == pytest.approx(2.0 * math.sqrt(6))

    assert parse_matrix("qfull:[[1,1/2],[1/2,1]]").ctx.M == ((2, 1), (1, 2))


@pytest.mark.parametrize(
    "spec",
    ["diag", "diag:", "diag:1,,2", "diag:1.5", "full:[1,2]", "cube:1"],
)
def test_parse_matrix_rejects_malformed_specs(spec: str) -> None:
    with pytest.raises(MatrixSyntaxError):
        parse_matrix(spec)


def test_rationalize_scales_by_lcm_of_denominators() -> None:
    rat = rationalize([["1/4", 0], [0, "1/6"]])

    assert rat.scale == 12
    assert rat.ctx.M == ((3, 0), (0, 2))


def test_digest_depends_only_on_the_matrix() -> None:
    a = build_ctx([[1, 0], [0, 2]])
    b = parse_matrix("diag:1,2").ctx

    assert a.digest == b.digest
    assert a.digest != build_ctx([[2, 0], [0, 1]]).digest
    assert a == b
