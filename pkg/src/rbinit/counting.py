"""Elementwise operation counters for the per-particle kernels.

Kernels run on :class:`Counted` arrays, which forward every numpy ufunc call
and tally one operation per output element (``n - 1`` for a reduction).
Results of full reductions come back as plain floats, so scalar bookkeeping
done afterwards is not charged to the particles.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

_CATEGORY = {
    np.add: "add",
    np.subtract: "add",
    np.negative: "add",
    np.multiply: "mul",
    np.square: "mul",
    np.divide: "div",
    np.reciprocal: "div",
    np.sqrt: "sqrt",
    np.remainder: "mod",
    np.fmod: "mod",
    np.sin: "trig",
    np.cos: "trig",
    np.tan: "trig",
    np.arctan: "trig",
    np.arctan2: "trig",
    np.arcsin: "trig",
    np.arccos: "trig",
    np.hypot: "sqrt",
}


class OpCounter(Counter):
    """Running totals keyed by operation category (``add``, ``mul``, ``div``, ``trig``...)."""

    def tally(self, category: str, n: int = 1) -> None:
        self[category] += int(n)

    def per(self, n: int) -> dict[str, float]:
        return {k: v / n for k, v in self.items()}

    def snapshot(self) -> dict[str, int]:
        return dict(self)


class Counted(np.lib.mixins.NDArrayOperatorsMixin):
    """Thin ndarray wrapper that charges ufunc calls to an :class:`OpCounter`."""

    __slots__ = ("a", "counter")

    def __init__(self, a, counter: OpCounter):
        self.a = np.asarray(a)
        self.counter = counter

    def __array__(self, dtype=None, copy=None):
        return self.a if dtype is None else self.a.astype(dtype)

    def __len__(self):
        return len(self.a)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        raw = [x.a if isinstance(x, Counted) else x for x in inputs]
        out = getattr(ufunc, method)(*raw, **kwargs)
        cat = _CATEGORY.get(ufunc, ufunc.__name__)
        if method == "__call__":
            self.counter.tally(cat, np.size(out))
        elif method == "reduce":
            n_in = np.size(raw[0])
            self.counter.tally(cat, max(n_in - np.size(out), 0))
        if np.ndim(out) == 0:
            return float(out)
        return Counted(out, self.counter)


def unwrap(x):
    return x.a if isinstance(x, Counted) else x
