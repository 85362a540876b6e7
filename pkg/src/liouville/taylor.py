"""Compiled Taylor-series kernels for the pair of linear equations w'' + P(z) w = 0.

The state is the 4-vector ``(w1, w1', w2, w2')``.  It is renormalised after
every step so that its largest component has modulus one; the discarded size
is accumulated in a real log-scale ``L``, i.e. the true state equals
``exp(L) * y``.  This keeps dominant solutions representable far beyond the
double-precision overflow radius.

Each step expands both solutions in a local power series of order ``order``
about the current centre.  Coefficients follow from the three-term-free
recurrence

    a[n+2] = - sum_m q[m] a[n-m] / ((n+1)(n+2)),

where ``q`` are the coefficients of P re-expanded about the centre.  The step
length is chosen from the root test on the two highest coefficients so that
the truncated tail is about ``tol`` relative to the state.
"""
import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAXSTEPS = 2
STATUS_NONFINITE = 3


@njit(cache=True, nogil=True)
def shift_poly(p, c):
    """Ascending coefficients of P(c + x) given those of P(x)."""
    n = p.size
    q = p.copy()
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            q[j] += c * q[j + 1]
    return q


@njit(cache=True, nogil=True)
def _series(q, y, order, a):
    d = q.size - 1
    for i in range(2):
        a[i, 0] = y[2 * i]
        a[i, 1] = y[2 * i + 1]
        for n in range(order - 1):
            acc = 0j
            mmax = d if d < n else n
            for m in range(mmax + 1):
                acc += q[m] * a[i, n - m]
            a[i, n + 2] = -acc / ((n + 1) * (n + 2))


@njit(cache=True, nogil=True)
def _horner(a, order, zeta, out):
    for i in range(2):
        acc = 0j
        dacc = 0j
        for n in range(order, 0, -1):
            acc = acc * zeta + a[i, n]
            dacc = dacc * zeta + n * a[i, n]
        acc = acc * zeta + a[i, 0]
        out[2 * i] = acc
        out[2 * i + 1] = dacc


@njit(cache=True, nogil=True)
def _step_size(a, order, y, tol):
    scale = 0.0
    for i in range(4):
        v = abs(y[i])
        if v > scale:
            scale = v
    rho = 0.0
    for i in range(2):
        for j in (order - 1, order):
            v = abs(a[i, j]) / scale
            if v > 0.0:
                r = v ** (1.0 / j)
                if r > rho:
                    rho = r
    if rho == 0.0:
        return np.inf
    return tol ** (1.0 / order) / rho


@njit(cache=True, nogil=True)
def _drift(y, w0, L):
    wr = y[0] * y[3] - y[2] * y[1]
    e = -2.0 * L
    expected = w0 * np.exp(e) if e > -700.0 else 0j
    ref = abs(y[0] * y[3]) + abs(y[2] * y[1])
    if abs(expected) > ref:
        ref = abs(expected)
    if ref == 0.0:
        return 0.0
    return abs(wr - expected) / ref


@njit(cache=True, nogil=True)
def advance(p, z0, y0, L0, w0, z1, fracs, order, tol, max_steps):
    """Integrate along the segment z0 -> z1 with dense output.

    ``fracs`` is a nondecreasing array in [0, 1]; the state at
    ``z0 + fracs[k] * (z1 - z0)`` is returned in ``out[k]`` with log-scale
    ``outL[k]``.  ``w0`` is the true (unscaled) Wronskian, used only for the
    drift monitor.  Returns (out, outL, y_end, L_end, nsteps, max_drift, status).
    """
    nout = fracs.size
    out = np.zeros((nout, 4), np.complex128)
    outL = np.zeros(nout)
    a = np.zeros((2, order + 1), np.complex128)
    tmp = np.zeros(4, np.complex128)
    y = y0.copy()
    L = L0
    sc = 0.0
    for i in range(4):
        if abs(y[i]) > sc:
            sc = abs(y[i])
    if sc > 0.0:
        for i in range(4):
            y[i] /= sc
        L += np.log(sc)
    total = z1 - z0
    length = abs(total)
    u = total / length if length > 0 else 1.0 + 0j
    s = 0.0
    k = 0
    nsteps = 0
    status = STATUS_OK
    max_drift = _drift(y, w0, L)
    while k < nout and fracs[k] * length <= 1e-15 * length:
        out[k] = y
        outL[k] = L
        k += 1
    while s < length:
        c = z0 + s * u
        q = shift_poly(p, c)
        _series(q, y, order, a)
        h = _step_size(a, order, y, tol)
        if h < 1e-13 * max(1.0, abs(c)):
            status = STATUS_UNDERFLOW
            break
        if nsteps >= max_steps:
            status = STATUS_MAXSTEPS
            break
        send = s + h
        if send >= length * (1.0 - 1e-15):
            send = length
        while k < nout and fracs[k] * length <= send:
            _horner(a, order, (fracs[k] * length - s) * u, tmp)
            out[k] = tmp
            outL[k] = L
            k += 1
        _horner(a, order, (send - s) * u, y)
        sc = 0.0
        for i in range(4):
            if abs(y[i]) > sc:
                sc = abs(y[i])
        if not (sc > 0.0 and sc < np.inf):
            status = STATUS_NONFINITE
            break
        for i in range(4):
            y[i] /= sc
        L += np.log(sc)
        s = send
        nsteps += 1
        dr = _drift(y, w0, L)
        if dr > max_drift:
            max_drift = dr
    # points not reached stay as zeros; caller checks status
    while k < nout and status == STATUS_OK:
        out[k] = y
        outL[k] = L
        k += 1
    return out, outL, y, L, nsteps, max_drift, status


@njit(cache=True, nogil=True)
def eval_points(p, base, y0, w0, zs, order, tol, max_steps):
    """State at each target of ``zs``, integrating straight from ``base``."""
    n = zs.size
    out = np.zeros((n, 4), np.complex128)
    outL = np.zeros(n)
    drift = np.zeros(n)
    status = np.zeros(n, np.int64)
    one = np.ones(1)
    for i in range(n):
        o, oL, _, _, _, md, st = advance(p, base, y0, 0.0, w0, zs[i], one, order, tol, max_steps)
        out[i] = o[0]
        outL[i] = oL[0]
        drift[i] = md
        status[i] = st
    return out, outL, drift, status


@njit(cache=True, nogil=True)
def eval_cluster(p, base, y0, w0, centre, offsets, order, tol, max_steps):
    """States at ``centre + offsets`` via one long leg to the centre and short legs out.

    Errors of the long leg are shared by every point of the cluster, so finite
    difference stencils built from the result only see the local truncation
    error.
    """
    one = np.ones(1)
    n = offsets.size
    out = np.zeros((n, 4), np.complex128)
    outL = np.zeros(n)
    _, _, yc, Lc, _, md, st = advance(p, base, y0, 0.0, w0, centre, one, order, tol, max_steps)
    if st != STATUS_OK:
        return out, outL, md, st
    for i in range(n):
        o, oL, _, _, _, d2, st2 = advance(p, centre, yc, Lc, w0, centre + offsets[i], one, order, tol, max_steps)
        if st2 != STATUS_OK:
            return out, outL, md, st2
        if d2 > md:
            md = d2
        out[i] = o[0]
        outL[i] = oL[0]
    return out, outL, md, st
