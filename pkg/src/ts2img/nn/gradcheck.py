"""Central finite-difference checks of the backward passes.

The numeric side only ever calls the forward pass, so it is independent of
the gradient code it judges. Models are checked in float64. Stochastic
layers (dropout) are pinned by reseeding the model's generator with the
same seed before every forward evaluation, so the analytic and numeric
sides see identical masks. Batch-norm running statistics drift during the
repeated forwards, but they never enter the train-mode loss.

relative_error uses |a - b| / max(|a|, |b|, floor); the floor absorbs the
finite-difference noise (~1e-11 for h = 1e-5 in float64) on gradients that
are genuinely zero while leaving real defects, which show up orders of
magnitude above any tolerance, fully visible.

Relu and max-pooling make the loss piecewise smooth. When the evaluation
point sits within h of a crease, the central difference straddles two
pieces and stops estimating the derivative, so no backward pass, correct
or not, can agree with it there. Those entries are detected and skipped
rather than failed. The detector costs nothing extra: for a single crease
inside [x-h, x+h] the loss is linear on each side at this scale, and the
second difference |f(x+h) + f(x-h) - 2 f(x)| / (2h) equals the exact gap
between the central slope and the one-sided derivative at x. An entry is
skipped only when that bound accounts for the observed disagreement. On
smooth pieces the same quantity is O(h * f''), orders of magnitude below
any real defect, so genuine gradient bugs still fail: a broken backward
pass disagrees by O(gradient) at the overwhelming majority of entries,
where the bound explains nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import TRAIN

DEFAULT_H = 1e-5
DEFAULT_TOL = 1e-4
ERROR_FLOOR = 1e-6


def relative_error(a: float, b: float, floor: float = ERROR_FLOOR) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


@dataclass(frozen=True)
class GradCheckReport:
    """Outcome of one model-wide gradient check.

    max_error covers every entry whose finite-difference estimate was
    valid; skipped counts entries rejected by the crease detector. A
    healthy check skips a handful of entries out of hundreds.
    """

    max_error: float
    checked: int
    skipped: int
    worst_entry: str

    def __float__(self) -> float:
        return self.max_error


def _pinned_loss(model, x, y, mask_seed: int) -> float:
    model.rng = np.random.default_rng(mask_seed)
    if hasattr(model, "head"):
        model.head.rng = np.random.default_rng(mask_seed + 1)
        model.branch_image.rng = np.random.default_rng(mask_seed + 2)
        model.branch_raw.rng = np.random.default_rng(mask_seed + 3)
    return model.loss_eval(x, y)


def _entry_indices(shape, max_entries, rng):
    total = int(np.prod(shape)) if shape else 1
    if max_entries is None or total <= max_entries:
        return np.arange(total)
    return rng.choice(total, size=max_entries, replace=False)


class _Tally:
    def __init__(self, tol: float) -> None:
        self.tol = tol
        self.max_error = 0.0
        self.checked = 0
        self.skipped = 0
        self.worst_entry = ""

    def add(self, label: str, base: float, lp: float, lm: float, h: float, analytic: float) -> None:
        numeric = (lp - lm) / (2.0 * h)
        rel = relative_error(numeric, analytic)
        if rel > self.tol:
            crease_bound = abs(lp + lm - 2.0 * base) / (2.0 * h)
            scale = max(abs(numeric), abs(analytic), ERROR_FLOOR)
            if abs(numeric - analytic) <= 1.5 * crease_bound + self.tol * scale:
                self.skipped += 1
                return
        self.checked += 1
        if rel > self.max_error:
            self.max_error = rel
            self.worst_entry = label


def check_model_gradients(
    model,
    x,
    y,
    h: float = DEFAULT_H,
    tol: float = DEFAULT_TOL,
    mask_seed: int = 0,
    max_entries_per_param: int | None = None,
    max_input_entries: int | None = 16,
    entry_rng=None,
) -> GradCheckReport:
    """Compare backprop against central finite differences, model-wide.

    Checks every trainable parameter (optionally subsampled) and a sample
    of input entries, which exercises the backward pass of parameter-free
    layers. The model must be float64 for the quoted tolerances to hold.
    tol feeds the crease detector only; pass/fail stays with the caller.
    """
    entry_rng = entry_rng or np.random.default_rng(0)
    old_mode = model.mode
    if hasattr(model, "_set_mode"):
        model._set_mode(TRAIN)
    else:
        model.mode = TRAIN
    try:
        base = _pinned_loss(model, x, y, mask_seed)  # also primes caches
        model.rng = np.random.default_rng(mask_seed)
        if hasattr(model, "head"):
            model.head.rng = np.random.default_rng(mask_seed + 1)
            model.branch_image.rng = np.random.default_rng(mask_seed + 2)
            model.branch_raw.rng = np.random.default_rng(mask_seed + 3)
        _, grads, _, input_grad = model.train_step(x, y)
        params = model.parameters()
        tally = _Tally(tol)
        for name, g in grads.items():
            p = params[name]
            flat_p = p.reshape(-1)
            flat_g = np.asarray(g).reshape(-1)
            for k in _entry_indices(p.shape, max_entries_per_param, entry_rng):
                saved = flat_p[k]
                flat_p[k] = saved + h
                lp = _pinned_loss(model, x, y, mask_seed)
                flat_p[k] = saved - h
                lm = _pinned_loss(model, x, y, mask_seed)
                flat_p[k] = saved
                tally.add(f"{name}[{k}]", base, lp, lm, h, float(flat_g[k]))
        _check_input_gradient(
            model, x, y, input_grad, base, h, mask_seed, max_input_entries, entry_rng, tally
        )
        return GradCheckReport(tally.max_error, tally.checked, tally.skipped, tally.worst_entry)
    finally:
        if hasattr(model, "_set_mode"):
            model._set_mode(old_mode)
        else:
            model.mode = old_mode


def _check_input_gradient(model, x, y, input_grad, base, h, mask_seed, max_entries, entry_rng, tally):
    if isinstance(x, (tuple, list)):
        parts = list(x)
        grads = list(input_grad)
    else:
        parts = [x]
        grads = [input_grad]
    for part_index, (part, grad) in enumerate(zip(parts, grads)):
        part = np.asarray(part)
        flat_x = part.reshape(-1)
        flat_g = np.asarray(grad).reshape(-1)
        for k in _entry_indices(part.shape, max_entries, entry_rng):
            saved = flat_x[k]
            flat_x[k] = saved + h
            lp = _pinned_loss(model, _repack(parts, x), y, mask_seed)
            flat_x[k] = saved - h
            lm = _pinned_loss(model, _repack(parts, x), y, mask_seed)
            flat_x[k] = saved
            tally.add(f"input{part_index}[{k}]", base, lp, lm, h, float(flat_g[k]))


def _repack(parts, original):
    if isinstance(original, (tuple, list)):
        return tuple(parts)
    return parts[0]
