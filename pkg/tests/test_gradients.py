import numpy as np
import pytest

from hopreader.core.config import build_train_config
from hopreader.core.errors import GradientCheckFailed
from hopreader.core.gradcheck import check_gradients, relative_error
from hopreader.core.profiles import load_profile
from hopreader.core.tensor import parameter, tsum
from hopreader.diagnostics import (
    MODEL_THRESHOLD, OP_THRESHOLD, assert_passed, operation_names, run_gradient_suite, toy_model,
)


@pytest.fixture(scope="module")
def gradcheck_config():
    return build_train_config(load_profile("gradcheck"))


@pytest.fixture(scope="module")
def suite(gradcheck_config):
    return run_gradient_suite(gradcheck_config)


def test_relative_error_floor():
    assert relative_error(1.0, 1.0) == 0.0
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)
    # почти нулевые градиенты сравниваются абсолютно
    assert relative_error(1e-9, 0.0) == pytest.approx(1e-7)


def test_check_gradients_on_quadratic():
    w = parameter([1.5, -2.0, 0.25])
    worst, checked = check_gradients(lambda: tsum(w * w * w), [w])
    assert checked == 3
    assert worst < 1e-7


def test_every_operation_passes(suite):
    failed = [(r.name, r.max_rel_err) for r in suite if not r.passed]
    assert failed == []
    assert_passed(suite)


def test_report_lists_every_op_once(suite):
    names = [r.name for r in suite]
    assert len(names) == len(set(names))
    assert names == operation_names()
    assert "full_model" in names
    assert all(r.checked > 0 for r in suite)


def test_thresholds(suite):
    by_name = {r.name: r for r in suite}
    assert by_name["full_model"].threshold == MODEL_THRESHOLD
    assert by_name["matmul"].threshold == OP_THRESHOLD


def test_corrupted_gradient_is_caught(gradcheck_config):
    results = run_gradient_suite(gradcheck_config, corrupt="softmax", only=["softmax", "tanh"])
    by_name = {r.name: r for r in results}
    assert not by_name["softmax"].passed
    assert by_name["tanh"].passed
    with pytest.raises(GradientCheckFailed, match="softmax"):
        assert_passed(results)


def test_toy_model_dimensions(gradcheck_config):
    model, example = toy_model(gradcheck_config)
    assert len(example.passage) == 3
    assert len(example.question_tokens) == 2
    assert model.config.hops == 2
    assert model.config.dims.embed == 4
