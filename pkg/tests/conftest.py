import numpy as np


def central_difference_grad(fn, z, h=1e-5):
    """Independent gradient oracle: central finite differences of a scalar
    loss over each logit coordinate."""
    z = np.asarray(z, dtype=np.float64)
    grad = np.zeros_like(z)
    for i in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        grad[i] = (fn(zp) - fn(zm)) / (2.0 * h)
    return grad


def grad_errors(analytic, numeric):
    """Per-entry absolute error and relative error (vs the larger magnitude)."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, diff / scale, 0.0)
    return diff, rel


def assert_grad_close(analytic, numeric, rel_tol=1e-5, abs_tol=1e-8):
    """Standard gradient-check rule: every entry passes the relative bound
    or, where the magnitude sits below the finite-difference noise floor,
    the absolute bound."""
    diff, rel = grad_errors(analytic, numeric)
    ok = (diff < abs_tol) | (rel < rel_tol)
    assert np.all(ok), f"grad mismatch: abs {diff[~ok].max():.3e}, rel {rel[~ok].max():.3e}"


def random_loss_case(rng, max_classes=64):
    """One seeded random input set spanning all loss-kernel arguments."""
    c = int(rng.integers(1, max_classes + 1))
    z = rng.uniform(-8.0, 8.0, size=c)
    y = rng.integers(0, 2, size=c).astype(np.float64)
    rhat = rng.uniform(0.0, 2.0, size=c)
    nu = rng.uniform(-1.0, 1.0, size=c)
    lam = float(rng.choice([1.0, 2.0, 5.0]))
    return c, z, y, rhat, nu, lam
