"""Dense matrix helpers and the finite-difference gradient checker.

The array functions here are the plain-numpy mirror of the tape ops in
:mod:`affordkit.tape`; they validate shapes and handle degenerate inputs,
which the training path never sees.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import tape
from .errors import DegenerateInputWarning, DimensionError, ProbeError


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product in float64 with an explicit shape check."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    return a @ b


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilised by subtracting each row's maximum."""
    logits = np.asarray(logits, dtype=np.float64)
    return tape.softmax_rows_values(logits)


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference over all entries of two equal-shape matrices."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"mse: shapes differ, {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity clamped to [-1, 1].

    A zero-norm operand is treated as uncorrelated: the result is 0 and a
    :class:`DegenerateInputWarning` is emitted.
    """
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise DimensionError(f"cosine: lengths differ, {u.size} vs {v.size}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        warnings.warn("cosine of a zero-norm vector, returning 0", DegenerateInputWarning)
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


@dataclass
class GradCheckReport:
    """Outcome of one finite-difference sweep over a parameter set."""

    max_rel_error: float
    worst_param: str | None
    tol: float
    entries_checked: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol


def grad_check(
    loss_fn: Callable[[tape.ParamSet], tape.Tensor],
    params: tape.ParamSet,
    h: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    ``loss_fn`` must rebuild its scalar loss from the current parameter
    values on every call.  Each parameter entry is perturbed by ±h and the
    relative error |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
    is tracked; the report passes iff the maximum is below ``tol``.
    """
    if h <= 0:
        raise ValueError("grad_check step h must be positive")
    params.zero_grad()
    loss = loss_fn(params)
    if not np.isfinite(loss.value):
        raise ProbeError("loss is non-finite at the unperturbed parameters")
    loss.backward()
    analytic = {name: np.array(t.grad, dtype=np.float64) for name, t in params.items()}

    max_err = 0.0
    worst: str | None = None
    checked = 0
    for name, t in params.items():
        flat = t.value.reshape(-1)
        ana = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(loss_fn(params).value)
            flat[i] = orig - h
            fm = float(loss_fn(params).value)
            flat[i] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise ProbeError(f"non-finite loss while probing parameter {name!r}")
            numeric = (fp - fm) / (2.0 * h)
            rel = abs(ana[i] - numeric) / max(abs(ana[i]), abs(numeric), 1e-8)
            checked += 1
            if rel > max_err:
                max_err = rel
                worst = name
    return GradCheckReport(max_rel_error=max_err, worst_param=worst, tol=tol, entries_checked=checked)
