# src/gradcheck.py
"""
Finite-difference oracle for every analytic backward pass.

Three levels are checked:
    transform  ∂L/∂Σ of each whitening matrix, L = Σ_ij dW_ij W_ij(Σ)
    layer      ∂L/∂X and recovery gradients of center → whiten → recover
    model      every parameter gradient of a tiny BW-equipped MLP

Errors are reported as max |analytic − numeric| over a case, divided by the
largest magnitude seen in either gradient.
"""
import logging

import numpy as np
import pandas as pd

from bw_layer import LayerState, backward_train, forward_train
from config import DEFAULT_EPSILON
from errors import NumericError
from gradients import backward_whitening
from mlp import Mlp, MlpConfig, softmax_cross_entropy
from transforms import Recovery, TransformKind, WhiteningSpec, whitening_matrix

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
TRANSFORM_TOLERANCE = 1e-5
END_TO_END_TOLERANCE = 1e-4
TRANSFORM_DIMS = (2, 4, 8, 16)
ITN_CHECK_ITERATIONS = (1, 3, 5)
LAYER_DIM = 6
LAYER_BATCH = 24
LAYER_GROUPS = (3, 6)
MODEL_WIDTHS = (8, 6, 6, 4)
MODEL_BATCH = 16

LEVELS = ("transform", "layer", "model")
REPORT_COLUMNS = [
    "level", "transform", "dim", "group", "recovery", "cases", "max_rel_error", "tolerance", "passed",
]


def relative_error(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(float(np.abs(analytic).max(initial=0.0)), float(np.abs(numeric).max(initial=0.0)), 1e-12)
    return float(np.abs(analytic - numeric).max(initial=0.0)) / scale


def random_spd(rng, dim):
    """SPD matrix with eigenvalues spaced at least 0.5 apart in [1, 1 + dim/2 + 0.25]."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    eigenvalues = 1.0 + 0.5 * np.arange(dim) + rng.uniform(0.0, 0.25, dim)
    sigma = (q * eigenvalues) @ q.T
    return 0.5 * (sigma + sigma.T)


# --- Transform level ---

def _whitening_loss(sigma, dw, spec):
    w, _ = whitening_matrix(sigma, spec.kind, spec.itn_iterations, spec.eig_solver)
    return float(np.sum(dw * w))


def check_transform_case(spec, sigma, dw, h=FD_STEP):
    """
    Compares ∂L/∂Σ against central differences along symmetric perturbations.

    Off-diagonal directions move Σ_ij and Σ_ji together, so the analytic side
    is G_ij + G_ji there and G_ii on the diagonal.
    """
    _, cache = whitening_matrix(sigma, spec.kind, spec.itn_iterations, spec.eig_solver)
    grad = backward_whitening(dw, cache, gap_floor=spec.gap_floor, clamp_eigengap=spec.clamp_eigengap)
    dim = sigma.shape[0]
    rows, cols = np.triu_indices(dim)
    numeric = np.empty(rows.size)
    for n, (i, j) in enumerate(zip(rows, cols)):
        step = np.zeros((dim, dim))
        step[i, j] = h
        step[j, i] = h
        numeric[n] = (_whitening_loss(sigma + step, dw, spec) - _whitening_loss(sigma - step, dw, spec)) / (2.0 * h)
    analytic = np.where(rows == cols, grad[rows, cols], grad[rows, cols] + grad[cols, rows])
    return relative_error(analytic, numeric)


# --- Layer level ---

def _layer_loss(state, x, dy):
    y, _ = forward_train(state, x, update_statistics=False)
    return float(np.sum(dy * y))


def _central_difference(loss, values, h=FD_STEP):
    numeric = np.empty_like(values)
    flat = values.reshape(-1)
    out = numeric.reshape(-1)
    for n in range(flat.size):
        original = flat[n]
        flat[n] = original + h
        plus = loss()
        flat[n] = original - h
        minus = loss()
        flat[n] = original
        out[n] = (plus - minus) / (2.0 * h)
    return numeric


def check_layer_case(spec, rng, dim=LAYER_DIM, batch=LAYER_BATCH):
    state = LayerState.create(dim, spec)
    # Move the recovery away from the identity so every term is exercised
    for values in state.parameters().values():
        values += 0.3 * rng.standard_normal(values.shape)
    x = rng.standard_normal((dim, batch)) + rng.standard_normal((dim, 1))
    dy = rng.standard_normal((dim, batch))
    _, cache = forward_train(state, x, update_statistics=False)
    grads = backward_train(state, cache, dy)

    analytic = [grads.dx]
    numeric = [_central_difference(lambda: _layer_loss(state, x, dy), x)]
    for name, values in state.parameters().items():
        analytic.append(grads.parameters()[name])
        numeric.append(_central_difference(lambda: _layer_loss(state, x, dy), values))
    return relative_error(np.concatenate([a.ravel() for a in analytic]), np.concatenate([n.ravel() for n in numeric]))


# --- Model level ---

def check_model_case(spec, rng, widths=MODEL_WIDTHS, batch=MODEL_BATCH):
    config = MlpConfig(layer_widths=widths, norm=spec, lr=0.0, batch=batch, epochs=0)
    model = Mlp.initialize(config, int(rng.integers(2 ** 31)))
    x = rng.standard_normal((widths[0], batch))
    labels = rng.integers(0, widths[-1], batch)

    def loss():
        result = model.forward_train(x, update_statistics=False)
        return softmax_cross_entropy(result.logits, labels)[0]

    result = model.forward_train(x, update_statistics=False)
    _, dlogits, _ = softmax_cross_entropy(result.logits, labels)
    grads = model.backward(result, dlogits)
    params = model.parameters()
    analytic = np.concatenate([grads[name].ravel() for name in params])
    numeric = np.concatenate([_central_difference(loss, values).ravel() for values in params.values()])
    return relative_error(analytic, numeric)


# --- Suite ---

def transform_specs(kinds, eig_solver):
    specs = []
    for kind in kinds:
        kind = TransformKind(kind)
        if kind is TransformKind.ITN:
            specs.extend(WhiteningSpec(kind=kind, itn_iterations=t, eig_solver=eig_solver) for t in ITN_CHECK_ITERATIONS)
        else:
            specs.append(WhiteningSpec(kind=kind, eig_solver=eig_solver))
    return specs


def _run_level(level, spec, dim, group, cases, seed, case_fn, tolerance):
    rng = np.random.default_rng([seed, LEVELS.index(level), dim, group, list(TransformKind).index(spec.kind), spec.itn_iterations])
    worst = 0.0
    for _ in range(cases):
        try:
            worst = max(worst, case_fn(rng))
        except NumericError as e:
            logger.warning("%s check of %s (d=%d) raised %s", level, spec.label, dim, e)
            worst = np.inf
            break
    passed = bool(worst < tolerance)
    if not passed:
        logger.warning("%s check failed for %s d=%d g=%d: max relative error %.3e", level, spec.label, dim, group, worst)
    return {
        "level": level,
        "transform": spec.label.split("-")[0],
        "dim": dim,
        "group": group,
        "recovery": spec.recovery.value if level != "transform" else "",
        "cases": cases,
        "max_rel_error": worst,
        "tolerance": tolerance,
        "passed": passed,
    }


def run_gradcheck(kinds=tuple(TransformKind), cases=50, seed=0, eig_solver="jacobi", levels=LEVELS):
    """
    Runs the finite-difference suite.

    Args:
        kinds: Transforms to check.
        cases (int): Random cases per configuration, at every level.
        seed (int): Base seed.
        eig_solver (str): Eigensolver for PCA/ZCA.
        levels: Subset of ("transform", "layer", "model").

    Returns:
        pd.DataFrame: One row per configuration with the REPORT_COLUMNS.
    """
    rows = []
    specs = transform_specs(kinds, eig_solver)
    if "transform" in levels:
        for spec in specs:
            for dim in TRANSFORM_DIMS:
                def case(rng, spec=spec, dim=dim):
                    return check_transform_case(spec, random_spd(rng, dim), rng.standard_normal((dim, dim)))
                rows.append(_run_level("transform", spec, dim, dim, cases, seed, case, TRANSFORM_TOLERANCE))
    if "layer" in levels:
        for spec in specs:
            for recovery in Recovery:
                for group in LAYER_GROUPS:
                    layer_spec = spec.with_(recovery=recovery, group_size=group, epsilon=DEFAULT_EPSILON)
                    rows.append(
                        _run_level(
                            "layer", layer_spec, LAYER_DIM, group, cases, seed,
                            lambda rng, s=layer_spec: check_layer_case(s, rng), END_TO_END_TOLERANCE,
                        )
                    )
    if "model" in levels:
        for spec in specs:
            for group in (3, None):
                model_spec = spec.with_(group_size=group)
                rows.append(
                    _run_level(
                        "model", model_spec, MODEL_WIDTHS[1], group or MODEL_WIDTHS[1], cases, seed,
                        lambda rng, s=model_spec: check_model_case(s, rng), END_TO_END_TOLERANCE,
                    )
                )
    report = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    failed = int((~report["passed"]).sum())
    logger.info("Gradient check: %d configurations, %d failed", len(report), failed)
    return report


def summarize(report):
    """Per-transform worst relative error and pass flag."""
    return report.groupby("transform", sort=False).agg(
        max_rel_error=("max_rel_error", "max"), passed=("passed", "all")
    ).reset_index()
