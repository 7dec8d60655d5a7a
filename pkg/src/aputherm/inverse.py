"""Non-negative power-map reconstruction from thermal maps.

Given the learned response matrix R and a measured temperature-rise vector
t, the power map solves

    minimize ||R p - t||_2   subject to  p >= 0

via an active-set iteration in the Lawson-Hanson style: start with every
block clamped at zero, repeatedly free the most negative-gradient index,
solve the unconstrained least squares on the free set, and walk back along
the line segment whenever a freed coordinate would go negative. On these
small dense systems the method terminates with an exact KKT certificate,
which a separate verifier re-checks from scratch.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InversionError
from .thermal import PowerMap, Provenance, ResponseMatrix, ThermalMap

#: Temperature rises in [-NOISE_CLAMP_K, 0) are treated as sensor noise and
#: clamped to zero; anything lower is rejected as misconfiguration.
NOISE_CLAMP_K = 0.5


@dataclass(frozen=True)
class InversionOptions:
    kkt_tolerance: float = 1e-8
    max_iterations: int = 0  # 0 -> 10 * n_blocks
    tikhonov_lambda: float = 0.0

    def __post_init__(self):
        if self.kkt_tolerance <= 0:
            raise ValueError("kkt_tolerance must be positive")
        if self.tikhonov_lambda < 0:
            raise ValueError("tikhonov_lambda must be >= 0")


@dataclass(frozen=True)
class InversionResult:
    p_star: PowerMap
    residual_norm: float  # K
    active_set: frozenset  # indices clamped at zero
    iterations: int
    converged: bool
    kkt_ok: bool


def _as_matrix(rm):
    return rm.r if isinstance(rm, ResponseMatrix) else np.asarray(rm, dtype=float)


def _as_rise(t, n):
    if isinstance(t, ThermalMap):
        if t.kind != "rise":
            raise InversionError("nnls expects a thermal map in kelvin-rise form")
        vals = t.values
    else:
        vals = np.asarray(t, dtype=float)
    if vals.shape != (n,):
        raise InversionError(f"thermal map has shape {vals.shape}, expected ({n},)")
    if not np.all(np.isfinite(vals)):
        raise InversionError("thermal map contains non-finite values")
    return vals


def kkt_check(rm, t_rise, p, tol=1e-8, tikhonov_lambda=0.0):
    """Independent optimality certificate for min ||R p - t|| s.t. p >= 0.

    Recomputes the gradient g = R^T (R p - t) (+ lambda p) and verifies
    |g_i| <= tol * scale on free coordinates and g_i >= -tol * scale on
    clamped ones. Deliberately shares no state with the solver.
    """
    r = _as_matrix(rm)
    t = np.asarray(t_rise, dtype=float)
    p = p.values if isinstance(p, PowerMap) else np.asarray(p, dtype=float)
    g = r.T @ (r @ p - t) + tikhonov_lambda * p
    scale = max(1.0, float(np.max(np.abs(r.T @ t))) if t.size else 1.0)
    free = p > 0
    ok_free = np.all(np.abs(g[free]) <= tol * scale)
    ok_clamped = np.all(g[~free] >= -tol * scale)
    return bool(ok_free and ok_clamped)


def nnls(rm, t, opts: InversionOptions = None) -> InversionResult:
    """Active-set non-negative least squares.

    Ties on the entering index break toward the lowest block index, making
    the iteration order (and hence the result on degenerate problems)
    deterministic. With ``tikhonov_lambda`` > 0 the system is augmented with
    sqrt(lambda) * I, shrinking the solution norm.
    """
    opts = opts or InversionOptions()
    r = _as_matrix(rm)
    m, n = r.shape
    t_vals = _as_rise(t, m)

    if opts.tikhonov_lambda > 0.0:
        r_aug = np.vstack([r, math.sqrt(opts.tikhonov_lambda) * np.eye(n)])
        t_aug = np.concatenate([t_vals, np.zeros(n)])
    else:
        r_aug, t_aug = r, t_vals

    max_iter = opts.max_iterations if opts.max_iterations > 0 else 10 * n
    scale = max(1.0, float(np.max(np.abs(r_aug.T @ t_aug))))
    tol = opts.kkt_tolerance * scale

    x = np.zeros(n)
    free = np.zeros(n, dtype=bool)
    iterations = 0
    converged = False

    while True:
        grad = r_aug.T @ (t_aug - r_aug @ x)  # negative objective gradient
        candidates = np.where(~free & (grad > tol))[0]
        if candidates.size == 0:
            converged = True
            break
        if iterations >= max_iter:
            break
        # steepest descent coordinate enters; lowest index on near-ties
        grads = grad[candidates]
        best = int(candidates[grads >= grads.max() - 1e-12 * scale][0])
        free[best] = True

        while True:
            iterations += 1
            z = np.zeros(n)
            idx = np.where(free)[0]
            z[idx], *_ = np.linalg.lstsq(r_aug[:, idx], t_aug, rcond=None)
            if np.all(z[idx] > 0):
                x = z
                break
            # step toward z until the first freed coordinate hits zero
            neg = idx[z[idx] <= 0]
            alphas = x[neg] / (x[neg] - z[neg])
            alpha = float(np.min(alphas))
            x = x + alpha * (z - x)
            newly_clamped = idx[x[idx] <= tol * 1e-8]
            x[newly_clamped] = 0.0
            free[newly_clamped] = False
            if iterations >= max_iter:
                break
        if iterations >= max_iter and not converged:
            grad = r_aug.T @ (t_aug - r_aug @ x)
            if not np.any(~free & (grad > tol)):
                converged = True
            break

    x = np.maximum(x, 0.0)
    residual = float(np.linalg.norm(r @ x - t_vals))
    kkt = kkt_check(r, t_vals, x, tol=opts.kkt_tolerance,
                    tikhonov_lambda=opts.tikhonov_lambda)
    return InversionResult(
        p_star=PowerMap(x, provenance=Provenance.RECONSTRUCTED),
        residual_norm=residual,
        active_set=frozenset(int(i) for i in np.where(x == 0.0)[0]),
        iterations=iterations,
        converged=converged,
        kkt_ok=kkt,
    )


def reconstruct(rm: ResponseMatrix, t_absolute, inlet_c=None,
                opts: InversionOptions = None) -> InversionResult:
    """Reconstruct the power map from an absolute-Celsius thermal map.

    Subtracts the inlet temperature, clamps small negative rises (down to
    -NOISE_CLAMP_K) to zero, and rejects maps implausibly below the inlet.
    """
    if inlet_c is None:
        inlet_c = rm.inlet_c
    if isinstance(t_absolute, ThermalMap):
        if t_absolute.kind != "celsius":
            raise InversionError("reconstruct expects absolute Celsius input")
        vals = t_absolute.values
    else:
        vals = np.asarray(t_absolute, dtype=float)
    rise = vals - inlet_c
    if np.any(rise < -NOISE_CLAMP_K):
        worst = float(np.min(rise))
        raise InversionError(
            f"temperature {worst + inlet_c:.2f} C is more than {NOISE_CLAMP_K} K "
            f"below the inlet ({inlet_c} C); check sensor configuration"
        )
    rise = np.maximum(rise, 0.0)
    return nnls(rm, rise, opts)


def total_power_error(result: InversionResult, measured_total_w):
    """|sum(p*) - measured| / measured."""
    if measured_total_w <= 0:
        raise ValueError("measured total power must be positive")
    return abs(result.p_star.total - measured_total_w) / measured_total_w
