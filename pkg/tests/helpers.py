from __future__ import annotations

import numpy as np

from agar import tensor as tn

# one entry per acceptance criterion: (label, passed, detail); printed by conftest
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record(label: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE_RESULTS.append((label, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
    return bool(passed)


def numeric_grad(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of scalar ``f(x)`` with respect to every entry of ``x``."""
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + h
        fp = f(x)
        x[idx] = orig - h
        fm = f(x)
        x[idx] = orig
        g[idx] = (fp - fm) / (2 * h)
    return g


def check_op_grad(build, *arrays, h=1e-6, atol=1e-6, rtol=1e-5, weights=None):
    """Compare reverse-mode gradients of ``sum(w * build(*tensors))`` with FD."""
    arrays = [np.array(a, dtype=float) for a in arrays]
    probe = build(*[tn.Tensor(a) for a in arrays]).data
    w = np.random.default_rng(1).normal(size=probe.shape) if weights is None else weights

    def loss(*xs):
        return float(np.sum(w * build(*[tn.Tensor(a) for a in xs]).data))

    ts = [tn.Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = build(*ts)
    tn.sum(tn.mul(out, w)).backward()
    for i, (a, t) in enumerate(zip(arrays, ts)):
        def f(x, i=i):
            xs = list(arrays)
            xs[i] = x
            return loss(*xs)

        num = numeric_grad(f, a.copy(), h)
        ana = np.zeros_like(a) if t.grad is None else np.broadcast_to(t.grad, a.shape)
        np.testing.assert_allclose(ana, num, atol=atol, rtol=rtol)
