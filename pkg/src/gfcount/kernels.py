"""Hot loops: Dormand-Prince stepping of chained linear systems and windowed slopes.

The kernels return integer status codes instead of raising, so that the same
source runs under numba and as plain numpy.
"""
import numpy as np

from ._jit import kernel

OK = 0
STEP_UNDERFLOW = 1
NON_FINITE = 2
MAX_STEPS = 3

# Dormand-Prince 5(4) tableau
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


@kernel
def chain_rhs(AT, BT, coup, Y):
    """F[k] = A Y[k] + coup[k] B Y[k-1] for a stack of row-vector states Y."""
    F = np.dot(Y, AT)
    m = Y.shape[0]
    if m > 1:
        G = np.dot(Y[: m - 1], BT)
        for k in range(1, m):
            c = coup[k]
            if c != 0.0:
                for j in range(Y.shape[1]):
                    F[k, j] += c * G[k - 1, j]
    return F


@kernel
def _error_norm(Y, Ynew, E, rtol, atol):
    acc = 0.0
    n = 0
    for k in range(Y.shape[0]):
        for j in range(Y.shape[1]):
            scale = atol + rtol * max(abs(Y[k, j]), abs(Ynew[k, j]))
            r = abs(E[k, j]) / scale
            acc += r * r
            n += 1
    return np.sqrt(acc / n)


@kernel
def dopri5_chain(AT, BT, coup, Y0, t_out, rtol, atol, h0, hmax, max_steps):
    """Integrate dY/dt = chain_rhs(Y) from t=0, sampling at each time in ``t_out``.

    ``t_out`` must be sorted and non-negative.  Steps are clipped so that every
    output time is hit exactly.  Returns ``(samples, status, n_accepted,
    n_rejected)``.
    """
    n_out = t_out.shape[0]
    out = np.zeros((n_out, Y0.shape[0], Y0.shape[1]), dtype=np.complex128)
    Y = Y0.copy()
    t = 0.0
    h = h0
    n_acc = 0
    n_rej = 0
    status = 0
    K1 = chain_rhs(AT, BT, coup, Y)
    for i in range(n_out):
        t_end = t_out[i]
        while t < t_end:
            if t_end - t <= 1e-14 * max(1.0, abs(t_end)):
                t = t_end
                break
            if n_acc + n_rej >= max_steps:
                status = 3
                return out, status, n_acc, n_rej
            if h > hmax:
                h = hmax
            if h <= 1e-14 * max(1.0, abs(t)):
                status = 1
                return out, status, n_acc, n_rej
            clipped = False
            hs = h
            if t + hs >= t_end:
                hs = t_end - t
                clipped = True
            K2 = chain_rhs(AT, BT, coup, Y + hs * (_A21 * K1))
            K3 = chain_rhs(AT, BT, coup, Y + hs * (_A31 * K1 + _A32 * K2))
            K4 = chain_rhs(AT, BT, coup, Y + hs * (_A41 * K1 + _A42 * K2 + _A43 * K3))
            K5 = chain_rhs(AT, BT, coup,
                           Y + hs * (_A51 * K1 + _A52 * K2 + _A53 * K3 + _A54 * K4))
            K6 = chain_rhs(AT, BT, coup,
                           Y + hs * (_A61 * K1 + _A62 * K2 + _A63 * K3 + _A64 * K4 + _A65 * K5))
            Ynew = Y + hs * (_B1 * K1 + _B3 * K3 + _B4 * K4 + _B5 * K5 + _B6 * K6)
            K7 = chain_rhs(AT, BT, coup, Ynew)
            E = hs * (_E1 * K1 + _E3 * K3 + _E4 * K4 + _E5 * K5 + _E6 * K6 + _E7 * K7)
            err = _error_norm(Y, Ynew, E, rtol, atol)
            if not np.isfinite(err):
                for k in range(Ynew.shape[0]):
                    for j in range(Ynew.shape[1]):
                        if not (np.isfinite(Ynew[k, j].real) and np.isfinite(Ynew[k, j].imag)):
                            status = 2
                            return out, status, n_acc, n_rej
                # finite state, but the error scale underflowed
                n_rej += 1
                h = 0.2 * hs
                continue
            if err <= 1.0:
                t = t_end if clipped else t + hs
                Y = Ynew
                K1 = K7
                n_acc += 1
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                if clipped:
                    # a short landing step says nothing against the previous proposal
                    h = max(h, hs * fac)
                else:
                    h = hs * fac
            else:
                n_rej += 1
                h = hs * max(0.2, 0.9 * err ** -0.2)
        for k in range(Y.shape[0]):
            for j in range(Y.shape[1]):
                if not np.isfinite(Y[k, j].real) or not np.isfinite(Y[k, j].imag):
                    status = 2
                    return out, status, n_acc, n_rej
        out[i] = Y
    return out, status, n_acc, n_rej


@kernel
def window_slopes(P, y0, count_idx, n_per, dt, max_windows, rtol, atol, n_span):
    """Step ``y <- P y`` and fit the slope of ``sum(y[count_idx])`` per window.

    Each window spans ``n_per`` propagator steps of length ``dt``.  Iteration
    stops once the last ``n_span + 1`` slopes all lie within
    ``rtol * |slope| + atol`` of each other.  Returns ``(slopes, n_windows,
    converged, y_end)``.
    """
    y = y0.copy()
    slopes = np.zeros(max_windows)
    npts = n_per + 1
    tbar = 0.5 * n_per * dt
    stt = 0.0
    for j in range(npts):
        stt += (j * dt - tbar) ** 2
    xs = np.zeros(npts)
    for w in range(max_windows):
        x = 0.0
        for c in count_idx:
            x += y[c].real
        xs[0] = x
        for j in range(1, npts):
            y = np.dot(P, y)
            x = 0.0
            for c in count_idx:
                x += y[c].real
            xs[j] = x
        xbar = xs.mean()
        sxt = 0.0
        for j in range(npts):
            sxt += (j * dt - tbar) * (xs[j] - xbar)
        slopes[w] = sxt / stt
        if w >= n_span:
            lo = slopes[w]
            hi = slopes[w]
            for k in range(w - n_span, w):
                lo = min(lo, slopes[k])
                hi = max(hi, slopes[k])
            if hi - lo <= rtol * abs(slopes[w]) + atol:
                return slopes[: w + 1], w + 1, True, y
    return slopes, max_windows, False, y
