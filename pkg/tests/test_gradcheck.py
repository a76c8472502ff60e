import numpy as np
import pytest

import gradients
from gradcheck import REPORT_COLUMNS, relative_error, run_gradcheck, summarize
from transforms import TransformKind


def test_relative_error_scale():
    assert relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert relative_error([2.0, 0.0], [1.0, 0.0]) == pytest.approx(0.5)
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0


def test_suite_passes_for_correct_gradients():
    report = run_gradcheck(kinds=[TransformKind.ZCA, TransformKind.CD, TransformKind.ITN], cases=2, levels=("transform",))
    assert list(report.columns) == REPORT_COLUMNS
    # ItN is checked at three iteration counts
    assert len(report) == (1 + 1 + 3) * 4
    assert report["passed"].all()


def test_layer_and_model_levels():
    report = run_gradcheck(kinds=[TransformKind.BN], cases=1, levels=("layer", "model"))
    assert set(report["level"]) == {"layer", "model"}
    assert set(report["recovery"]) == {"scale_shift", "coloring"}
    assert report["passed"].all()


def test_sign_flip_is_caught(monkeypatch):
    original = gradients.backward_zca

    def flipped(dw, cache, **kwargs):
        return -original(dw, cache, **kwargs)

    monkeypatch.setitem(gradients.BACKWARD_FUNCTIONS, TransformKind.ZCA, flipped)
    report = run_gradcheck(kinds=[TransformKind.ZCA], cases=1, levels=("transform",))
    assert not report["passed"].any()
    summary = summarize(report)
    assert summary.loc[0, "transform"] == "ZCA"
    assert not summary.loc[0, "passed"]


def test_every_level_runs_the_requested_cases():
    report = run_gradcheck(kinds=[TransformKind.BN], cases=3)
    assert set(report["level"]) == {"transform", "layer", "model"}
    assert (report["cases"] == 3).all()
