"""Numeric hot loops: candidate filtering for the Darboux search and the
adaptive Runge-Kutta path integrator.

Both kernels ship in two interchangeable builds: a numba-compiled one and
a pure-numpy/python one.  Selection happens once at import time; setting
the environment variable PAINLEVEKIT_DISABLE_NUMBA to a nonempty value
forces the fallback.  Results are identical between builds (the test
suite and the benchmark compare them).
"""

import os

import numpy as np

HAS_NUMBA = False
if not os.environ.get("PAINLEVEKIT_DISABLE_NUMBA"):
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        pass

# Mersenne prime 2^31 - 1: residues square inside int64
MOD_P = 2_147_483_647


# ---------------------------------------------------------------------------
# stage-1 Darboux filter
#
# For candidate cofactor coefficient vectors g, decide whether the system
# matrix A - sum_k g[k]*B[k] can have a nontrivial rational kernel.  Full
# column rank mod p implies full rank over Q, so rank_p < ncols is a sound
# keep-filter (false positives are removed by the exact stage).


def _modinv(a, p):
    t0, t1 = 0, 1
    r0, r1 = p, a % p
    while r1 != 0:
        q = r0 // r1
        t0, t1 = t1, t0 - q * t1
        r0, r1 = r1, r0 - q * r1
    return t0 % p


if HAS_NUMBA:
    _modinv = njit(cache=True)(_modinv)


def _kernel_flags_loop(A, B, cand, p):
    # one small dense elimination mod p per candidate
    N = cand.shape[0]
    R, C = A.shape
    m = B.shape[0]
    out = np.zeros(N, np.uint8)
    for n in range(N):
        M = A.copy()
        for k in range(m):
            c = cand[n, k]
            if c != 0:
                for i in range(R):
                    for j in range(C):
                        M[i, j] = (M[i, j] - c * B[k, i, j]) % p
        rank = 0
        row = 0
        for col in range(C):
            piv = -1
            for i in range(row, R):
                if M[i, col] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != row:
                for j in range(col, C):
                    tmp = M[row, j]
                    M[row, j] = M[piv, j]
                    M[piv, j] = tmp
            inv = _modinv(M[row, col], p)
            for j in range(col, C):
                M[row, j] = (M[row, j] * inv) % p
            for i in range(row + 1, R):
                f = M[i, col]
                if f != 0:
                    for j in range(col, C):
                        M[i, j] = (M[i, j] - f * M[row, j]) % p
            row += 1
            rank += 1
            if rank == C:
                break
        if rank < C:
            out[n] = 1
    return out


kernel_flags_numba = njit(cache=True)(_kernel_flags_loop) if HAS_NUMBA else None


def _modinv_vec(a, p):
    # a^(p-2) mod p by binary powering; entries stay below p^2 < 2^63
    result = np.ones_like(a)
    base = a % p
    e = p - 2
    while e:
        if e & 1:
            result = (result * base) % p
        base = (base * base) % p
        e >>= 1
    return result


def kernel_flags_numpy(A, B, cand, p, chunk=4096):
    # vectorized elimination over the candidate axis, chunked for memory
    N, m = cand.shape
    R, C = A.shape
    out = np.zeros(N, np.uint8)
    rr = np.arange(R)
    for s in range(0, N, chunk):
        g = cand[s:s + chunk]
        n = g.shape[0]
        M = (A[None, :, :] - np.tensordot(g, B, axes=(1, 0))) % p
        rank = np.zeros(n, np.int64)
        row = np.zeros(n, np.int64)
        for col in range(C):
            colv = M[:, :, col]
            avail = (rr[None, :] >= row[:, None]) & (colv != 0)
            has = avail.any(axis=1)
            ns = np.nonzero(has)[0]
            if ns.size == 0:
                continue
            k = ns.size
            Mi = M[ns]
            piv = np.argmax(avail[ns], axis=1)
            r0 = row[ns]
            ar = np.arange(k)
            tmp = Mi[ar, r0].copy()
            Mi[ar, r0] = Mi[ar, piv]
            Mi[ar, piv] = tmp
            pivrow = Mi[ar, r0]
            inv = _modinv_vec(pivrow[:, col], p)
            pivrow = (pivrow * inv[:, None]) % p
            Mi[ar, r0] = pivrow
            below = rr[None, :] > r0[:, None]
            fact = np.where(below, Mi[:, :, col], 0)
            Mi = (Mi - fact[:, :, None] * pivrow[:, None, :]) % p
            M[ns] = Mi
            row[ns] += 1
            rank[ns] += 1
        out[s:s + chunk] = rank < C
    return out


def darboux_candidate_flags(A, B, cand, p=MOD_P):
    """Boolean keep-mask over cofactor candidates (nontrivial kernel mod p)."""
    A = np.ascontiguousarray(np.asarray(A, np.int64) % p)
    B = np.ascontiguousarray(np.asarray(B, np.int64) % p)
    cand = np.ascontiguousarray(np.asarray(cand, np.int64))
    if kernel_flags_numba is not None:
        return kernel_flags_numba(A, B, cand, p).astype(bool)
    return kernel_flags_numpy(A, B, cand, p).astype(bool)


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) along a polyline in the complex t-plane
#
# Each right-hand-side component is N(x, y, t)/D(t) with N a sparse
# monomial sum (integer exponent triples, complex coefficients) and D a
# dense polynomial in t (coefficients ascending).  The path is
# parametrized by arclength; within a segment dt/dsigma is the constant
# unit direction.

_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (
    9017 / 3168,
    -355 / 33,
    46732 / 5247,
    49 / 176,
    -5103 / 18656,
)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth-order minus embedded fourth-order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

STATUS_COMPLETED = 0
STATUS_POLE = 1
STATUS_ABORTED = 2


def _cpow(z, k):
    out = 1 + 0j
    for _ in range(k):
        out *= z
    return out


if HAS_NUMBA:
    _cpow = njit(cache=True)(_cpow)


def _eval_rhs(ex, co, de, x, y, t):
    num = 0j
    for n in range(ex.shape[0]):
        num += co[n] * _cpow(x, ex[n, 0]) * _cpow(y, ex[n, 1]) * _cpow(t, ex[n, 2])
    den = 0j
    for i in range(de.shape[0] - 1, -1, -1):
        den = den * t + de[i]
    return num / den


if HAS_NUMBA:
    _eval_rhs = njit(cache=True)(_eval_rhs)


def _dopri5_core(fex, fco, fde, gex, gco, gde, wps, y0, x0, tol,
                 blowup, hfloor, maxsteps):
    nseg = wps.shape[0] - 1
    ts = np.empty(maxsteps + 2, np.complex128)
    ys = np.empty(maxsteps + 2, np.complex128)
    xs = np.empty(maxsteps + 2, np.complex128)
    cnt = 0
    t = wps[0]
    y = y0
    x = x0
    ts[cnt] = t
    ys[cnt] = y
    xs[cnt] = x
    cnt += 1
    status = STATUS_COMPLETED
    t_est = t
    steps = 0
    for seg in range(nseg):
        a = wps[seg]
        b = wps[seg + 1]
        seglen = abs(b - a)
        u = (b - a) / seglen
        sigma = 0.0
        h = seglen * 1e-3
        if h > 1e-2:
            h = 1e-2
        # first stage recomputed per segment: the direction changed
        k1y = u * _eval_rhs(fex, fco, fde, x, y, t)
        k1x = u * _eval_rhs(gex, gco, gde, x, y, t)
        while sigma < seglen:
            if steps >= maxsteps or cnt >= maxsteps + 1:
                return ts[:cnt], ys[:cnt], xs[:cnt], STATUS_ABORTED, t
            steps += 1
            if h > seglen - sigma:
                h = seglen - sigma
            t2 = t + _C2 * h * u
            y2 = y + h * (_A21 * k1y)
            x2 = x + h * (_A21 * k1x)
            k2y = u * _eval_rhs(fex, fco, fde, x2, y2, t2)
            k2x = u * _eval_rhs(gex, gco, gde, x2, y2, t2)
            t3 = t + _C3 * h * u
            y3 = y + h * (_A31 * k1y + _A32 * k2y)
            x3 = x + h * (_A31 * k1x + _A32 * k2x)
            k3y = u * _eval_rhs(fex, fco, fde, x3, y3, t3)
            k3x = u * _eval_rhs(gex, gco, gde, x3, y3, t3)
            t4 = t + _C4 * h * u
            y4 = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
            x4 = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
            k4y = u * _eval_rhs(fex, fco, fde, x4, y4, t4)
            k4x = u * _eval_rhs(gex, gco, gde, x4, y4, t4)
            t5 = t + _C5 * h * u
            y5 = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
            x5 = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
            k5y = u * _eval_rhs(fex, fco, fde, x5, y5, t5)
            k5x = u * _eval_rhs(gex, gco, gde, x5, y5, t5)
            t6 = t + h * u
            y6 = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y
                          + _A64 * k4y + _A65 * k5y)
            x6 = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x
                          + _A64 * k4x + _A65 * k5x)
            k6y = u * _eval_rhs(fex, fco, fde, x6, y6, t6)
            k6x = u * _eval_rhs(gex, gco, gde, x6, y6, t6)
            t7 = t + h * u
            y7 = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
            x7 = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
            k7y = u * _eval_rhs(fex, fco, fde, x7, y7, t7)
            k7x = u * _eval_rhs(gex, gco, gde, x7, y7, t7)
            erry = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y
                        + _E6 * k6y + _E7 * k7y)
            errx = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x
                        + _E6 * k6x + _E7 * k7x)
            sy = tol * (1.0 + abs(y))
            sx = tol * (1.0 + abs(x))
            err = np.sqrt(0.5 * ((abs(erry) / sy) ** 2 + (abs(errx) / sx) ** 2))
            bad = (np.isnan(err) or np.isinf(err)
                   or np.isnan(abs(y7)) or np.isinf(abs(y7))
                   or np.isnan(abs(x7)) or np.isinf(abs(x7)))
            if not bad and err <= 1.0:
                sigma += h
                t = t7
                y = y7
                x = x7
                k1y = k7y
                k1x = k7x
                ts[cnt] = t
                ys[cnt] = y
                xs[cnt] = x
                cnt += 1
            if bad:
                fac = 0.2
            else:
                fac = 0.9 * err ** -0.2
                if fac < 0.2:
                    fac = 0.2
                elif fac > 5.0:
                    fac = 5.0
            h = h * fac
            if h < hfloor and sigma < seglen:
                if abs(y) > blowup or abs(x) > blowup or bad:
                    status = STATUS_POLE
                else:
                    status = STATUS_ABORTED
                return ts[:cnt], ys[:cnt], xs[:cnt], status, t
    return ts[:cnt], ys[:cnt], xs[:cnt], status, t_est


dopri5_python = _dopri5_core
dopri5_numba = njit(cache=True)(_dopri5_core) if HAS_NUMBA else None


def dopri5_path(fex, fco, fde, gex, gco, gde, wps, y0, x0, tol,
                blowup=1e8, hfloor=1e-12, maxsteps=200_000):
    """Integrate along the polyline; returns (t, y, x arrays, status, t_est)."""
    fex = np.ascontiguousarray(np.asarray(fex, np.int64).reshape(-1, 3))
    gex = np.ascontiguousarray(np.asarray(gex, np.int64).reshape(-1, 3))
    fco = np.ascontiguousarray(np.asarray(fco, np.complex128))
    gco = np.ascontiguousarray(np.asarray(gco, np.complex128))
    fde = np.ascontiguousarray(np.asarray(fde, np.complex128))
    gde = np.ascontiguousarray(np.asarray(gde, np.complex128))
    wps = np.ascontiguousarray(np.asarray(wps, np.complex128))
    impl = dopri5_numba if dopri5_numba is not None else dopri5_python
    return impl(fex, fco, fde, gex, gco, gde, wps,
                complex(y0), complex(x0), float(tol),
                float(blowup), float(hfloor), int(maxsteps))
