"""Trajectory integration kernels.

Two interchangeable backends implement the same Dormand-Prince 5(4) embedded
scheme over the joint 27-component state (6 classical means + 21 unique
covariance entries):

* a fused scalar-loop kernel compiled with ``numba.njit`` (default), and
* a vectorized pure-numpy fallback.

``MODOMECH_DISABLE_NUMBA=1`` (or numba being unavailable) selects the
fallback. Both paths are importable directly for benchmarking regardless of
the flag; only the default binding changes.

State layout
------------
``y[0:6]``  classical means ``(q1, p1, q2, p2, re<a>, im<a>)``;
``y[6:27]`` row-major upper triangle of the symmetric 6x6 covariance, so the
covariance stays exactly symmetric by construction at every step.
"""

from __future__ import annotations

import math
import os

import numpy as np

_FLAG = os.environ.get("MODOMECH_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in {"1", "true", "yes", "on"}

if not _DISABLED:
    try:
        from numba import njit as _njit

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA
BACKEND = "numba" if USE_NUMBA else "numpy"

N_CLASSICAL = 6
N_COV = 21
N_STATE = 27

_TRI_ROWS, _TRI_COLS = np.triu_indices(6)
_TRI_FLAT = (_TRI_ROWS * 6 + _TRI_COLS).astype(np.int64)
_TRI_FLAT_T = (_TRI_COLS * 6 + _TRI_ROWS).astype(np.int64)
#: packed indices of the covariance diagonal
_DIAG_PACKED = np.array([0, 6, 11, 15, 18, 20], dtype=np.int64)

SQRT2 = math.sqrt(2.0)

# parameter-vector layout used by the kernels
# [omega_m, delta0, kappa, gamma_m, g, e0, e1, omega_mod, lambda0, tau,
#  d_mech, d_cav]
N_PARAMS = 12


def pack_params(params, n_th: float) -> np.ndarray:
    d_mech = params.gamma_m * (2.0 * n_th + 1.0)
    return np.array(
        [
            params.omega_m,
            params.delta0,
            params.kappa,
            params.gamma_m,
            params.g,
            params.e0,
            params.e1,
            params.omega_mod,
            params.lambda0,
            params.modulation_period,
            d_mech,
            params.kappa,
        ],
        dtype=np.float64,
    )


def pack_covariance(cov: np.ndarray) -> np.ndarray:
    return np.asarray(cov, dtype=np.float64).reshape(36)[_TRI_FLAT].copy()


def unpack_covariance(packed: np.ndarray) -> np.ndarray:
    flat = np.empty(36)
    flat[_TRI_FLAT] = packed
    flat[_TRI_FLAT_T] = packed
    return flat.reshape(6, 6)


# --- Dormand-Prince 5(4) tableau -------------------------------------------

C2 = 1.0 / 5.0
C3 = 3.0 / 10.0
C4 = 4.0 / 5.0
C5 = 8.0 / 9.0

A21 = 1.0 / 5.0
A31 = 3.0 / 40.0
A32 = 9.0 / 40.0
A41 = 44.0 / 45.0
A42 = -56.0 / 15.0
A43 = 32.0 / 9.0
A51 = 19372.0 / 6561.0
A52 = -25360.0 / 2187.0
A53 = 64448.0 / 6561.0
A54 = -212.0 / 729.0
A61 = 9017.0 / 3168.0
A62 = -355.0 / 33.0
A63 = 46732.0 / 5247.0
A64 = 49.0 / 176.0
A65 = -5103.0 / 18656.0

B1 = 35.0 / 384.0
B3 = 500.0 / 1113.0
B4 = 125.0 / 192.0
B5 = -2187.0 / 6784.0
B6 = 11.0 / 84.0

# difference between the 5th- and 4th-order weights
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0

#: nominal order of the propagated solution
METHOD_ORDER = 5

STATUS_OK = 0
STATUS_DIVERGED = 1
STATUS_STEP_UNDERFLOW = 2
STATUS_NAN = 3

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0


# --- scalar kernels (numba path) -------------------------------------------


def _rhs_scalar(t, y, dy, P, A, V, M):
    omega_m = P[0]
    delta0 = P[1]
    kappa = P[2]
    gamma_m = P[3]
    g = P[4]
    e0 = P[5]
    e1 = P[6]
    omega_mod = P[7]
    lam0 = P[8]
    tau = P[9]
    d_mech = P[10]
    d_cav = P[11]

    t_red = t % tau
    cosine = math.cos(omega_mod * t_red)
    drive = e0 + e1 * cosine
    lam = lam0 * cosine

    q1 = y[0]
    p1 = y[1]
    q2 = y[2]
    p2 = y[3]
    ar = y[4]
    ai = y[5]
    photon = ar * ar + ai * ai
    detuning = delta0 + g * (q1 + q2)

    dy[0] = omega_m * p1
    dy[1] = -omega_m * q1 - g * photon - lam * q2 - gamma_m * p1
    dy[2] = omega_m * p2
    dy[3] = -omega_m * q2 - g * photon - lam * q1 - gamma_m * p2
    dy[4] = -kappa * ar + detuning * ai + drive
    dy[5] = -detuning * ar - kappa * ai

    gx = -SQRT2 * g * ar
    gy = -SQRT2 * g * ai

    for i in range(6):
        for j in range(6):
            A[i, j] = 0.0
    A[0, 1] = omega_m
    A[1, 0] = -omega_m
    A[1, 1] = -gamma_m
    A[1, 2] = -lam
    A[1, 4] = gx
    A[1, 5] = gy
    A[2, 3] = omega_m
    A[3, 0] = -lam
    A[3, 2] = -omega_m
    A[3, 3] = -gamma_m
    A[3, 4] = gx
    A[3, 5] = gy
    A[4, 0] = -gy
    A[4, 2] = -gy
    A[4, 4] = -kappa
    A[4, 5] = detuning
    A[5, 0] = gx
    A[5, 2] = gx
    A[5, 4] = -detuning
    A[5, 5] = -kappa

    k = 0
    for i in range(6):
        for j in range(i, 6):
            v = y[6 + k]
            V[i, j] = v
            V[j, i] = v
            k += 1

    for i in range(6):
        for j in range(6):
            acc = 0.0
            for l in range(6):
                acc += A[i, l] * V[l, j]
            M[i, j] = acc

    k = 0
    for i in range(6):
        for j in range(i, 6):
            val = M[i, j] + M[j, i]
            if i == j:
                if i == 1 or i == 3:
                    val += d_mech
                elif i >= 4:
                    val += d_cav
            dy[6 + k] = val
            k += 1


def _site_frame(a, b, d):
    """Rotation (c, s) and scale alpha that make the site block ``[[a,b],[b,d]]``
    isotropic; identity when the block is not positive definite."""
    det = a * d - b * b
    if not (det > 0.0 and a > 0.0 and d > 0.0):
        return 1.0, 0.0, 1.0
    half = 0.5 * math.atan2(2.0 * b, a - d)
    c = math.cos(half)
    s = math.sin(half)
    lam_big = 0.5 * (a + d + math.hypot(a - d, 2.0 * b))
    lam_small = det / lam_big
    alpha = (lam_big / lam_small) ** 0.25
    return c, s, alpha


def _sample_metrics(y):
    """Log negativity of the mechanical pair and the largest eigenvalue of
    the difference-mode 2x2 covariance, from the packed state."""
    v00 = y[6 + 0]
    v01 = y[6 + 1]
    v02 = y[6 + 2]
    v03 = y[6 + 3]
    v11 = y[6 + 6]
    v12 = y[6 + 7]
    v13 = y[6 + 8]
    v22 = y[6 + 11]
    v23 = y[6 + 12]
    v33 = y[6 + 15]

    var_q = 0.5 * (v00 + v22 - 2.0 * v02)
    var_p = 0.5 * (v11 + v33 - 2.0 * v13)
    cov_qp = 0.5 * (v01 - v03 - v12 + v23)
    half_gap = 0.5 * (var_q - var_p)
    eig = 0.5 * (var_q + var_p) + math.sqrt(half_gap * half_gap + cov_qp * cov_qp)

    # Deep in the unstable zone the site blocks grow anisotropic enough that
    # the raw minor expansion cancels past double precision.  Balance each
    # site with a local symplectic rotation+scale first; every determinant
    # below is invariant under the transform.
    c1, s1, a1 = _site_frame(v00, v01, v11)
    c2, s2, a2 = _site_frame(v22, v23, v33)
    r00 = c1 / a1
    r01 = s1 / a1
    r10 = -s1 * a1
    r11 = c1 * a1
    q00 = c2 / a2
    q01 = s2 / a2
    q10 = -s2 * a2
    q11 = c2 * a2

    w00 = r00 * r00 * v00 + 2.0 * r00 * r01 * v01 + r01 * r01 * v11
    w01 = r00 * r10 * v00 + (r00 * r11 + r01 * r10) * v01 + r01 * r11 * v11
    w11 = r10 * r10 * v00 + 2.0 * r10 * r11 * v01 + r11 * r11 * v11
    w22 = q00 * q00 * v22 + 2.0 * q00 * q01 * v23 + q01 * q01 * v33
    w23 = q00 * q10 * v22 + (q00 * q11 + q01 * q10) * v23 + q01 * q11 * v33
    w33 = q10 * q10 * v22 + 2.0 * q10 * q11 * v23 + q11 * q11 * v33
    u00 = r00 * v02 + r01 * v12
    u01 = r00 * v03 + r01 * v13
    u10 = r10 * v02 + r11 * v12
    u11 = r10 * v03 + r11 * v13
    w02 = u00 * q00 + u01 * q01
    w03 = u00 * q10 + u01 * q11
    w12 = u10 * q00 + u11 * q01
    w13 = u10 * q10 + u11 * q11

    det_a = w00 * w11 - w01 * w01
    det_b = w22 * w33 - w23 * w23
    det_c = w02 * w13 - w03 * w12

    # 4x4 determinant by Laplace expansion in 2x2 minors of rows (0,1)
    m01 = w00 * w11 - w01 * w01
    m02 = w00 * w12 - w02 * w01
    m03 = w00 * w13 - w03 * w01
    m12 = w01 * w12 - w02 * w11
    m13 = w01 * w13 - w03 * w11
    m23 = w02 * w13 - w03 * w12
    n01 = w02 * w13 - w12 * w03
    n02 = w02 * w23 - w22 * w03
    n03 = w02 * w33 - w23 * w03
    n12 = w12 * w23 - w22 * w13
    n13 = w12 * w33 - w23 * w13
    n23 = w22 * w33 - w23 * w23
    det_v2 = m01 * n23 - m02 * n13 + m03 * n12 + m12 * n03 - m13 * n02 + m23 * n01

    sigma = det_a + det_b - 2.0 * det_c
    rad = sigma * sigma - 4.0 * det_v2
    if rad < 0.0:
        rad = 0.0
    # smaller root in quotient form; the subtractive form cancels when nu- << nu+
    denom = sigma + math.sqrt(rad)
    if denom <= 0.0:
        en = math.nan
    else:
        nu_sq = 2.0 * det_v2 / denom
        if nu_sq <= 0.0:
            en = math.nan
        else:
            en = -0.5 * math.log(4.0 * nu_sq)
            if en < 0.0:
                en = 0.0
    return en, eig


def _dp5_loop_scalar(
    P,
    y,
    ts,
    rtol,
    atol,
    h_max,
    h_init,
    h_min,
    div_thresh,
    fixed_h,
    snap_every,
    en_out,
    eig_out,
    snap_t,
    snap_y,
):
    n_samples = ts.shape[0]
    k1 = np.empty(N_STATE)
    k2 = np.empty(N_STATE)
    k3 = np.empty(N_STATE)
    k4 = np.empty(N_STATE)
    k5 = np.empty(N_STATE)
    k6 = np.empty(N_STATE)
    k7 = np.empty(N_STATE)
    ytmp = np.empty(N_STATE)
    ynew = np.empty(N_STATE)
    A = np.empty((6, 6))
    V = np.empty((6, 6))
    M = np.empty((6, 6))

    t = ts[0]
    _rhs_scalar(t, y, k1, P, A, V, M)
    en, eig = _sample_metrics(y)
    en_out[0] = en
    eig_out[0] = eig
    n_snap = 0
    if snap_every > 0:
        snap_t[0] = t
        for i in range(N_STATE):
            snap_y[0, i] = y[i]
        n_snap = 1

    n_accept = 0
    n_reject = 0
    status = STATUS_OK
    stop_time = t
    h = fixed_h if fixed_h > 0.0 else h_init
    sample = 1

    while sample < n_samples:
        target = ts[sample]
        dt_to = target - t
        hit = False
        if fixed_h > 0.0:
            h_step = fixed_h
        else:
            h_step = h
            if h_step > h_max:
                h_step = h_max
        if h_step >= dt_to:
            h_step = dt_to
            hit = True

        for i in range(N_STATE):
            ytmp[i] = y[i] + h_step * A21 * k1[i]
        _rhs_scalar(t + C2 * h_step, ytmp, k2, P, A, V, M)
        for i in range(N_STATE):
            ytmp[i] = y[i] + h_step * (A31 * k1[i] + A32 * k2[i])
        _rhs_scalar(t + C3 * h_step, ytmp, k3, P, A, V, M)
        for i in range(N_STATE):
            ytmp[i] = y[i] + h_step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _rhs_scalar(t + C4 * h_step, ytmp, k4, P, A, V, M)
        for i in range(N_STATE):
            ytmp[i] = y[i] + h_step * (
                A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]
            )
        _rhs_scalar(t + C5 * h_step, ytmp, k5, P, A, V, M)
        for i in range(N_STATE):
            ytmp[i] = y[i] + h_step * (
                A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
            )
        _rhs_scalar(t + h_step, ytmp, k6, P, A, V, M)
        for i in range(N_STATE):
            ynew[i] = y[i] + h_step * (
                B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]
            )
        _rhs_scalar(t + h_step, ynew, k7, P, A, V, M)

        if fixed_h > 0.0:
            err = 0.0
            accept = True
        else:
            acc = 0.0
            for i in range(N_STATE):
                ay = abs(y[i])
                an = abs(ynew[i])
                big = ay if ay > an else an
                scale = atol + rtol * big
                ev = h_step * (
                    E1 * k1[i]
                    + E3 * k3[i]
                    + E4 * k4[i]
                    + E5 * k5[i]
                    + E6 * k6[i]
                    + E7 * k7[i]
                )
                r = ev / scale
                acc += r * r
            err = math.sqrt(acc / N_STATE)
            accept = err <= 1.0
            if err != err:  # NaN: force a hard rejection
                accept = False
                err = 1e10

        if accept:
            t = target if hit else t + h_step
            bad_nan = False
            too_big = False
            trace = 0.0
            for i in range(N_STATE):
                v = ynew[i]
                y[i] = v
                if v != v:
                    bad_nan = True
                if i >= N_CLASSICAL and (v > div_thresh or v < -div_thresh):
                    too_big = True
            for i in range(6):
                trace += y[6 + _DIAG_PACKED[i]]
            tmp = k1
            k1 = k7
            k7 = tmp
            n_accept += 1
            if bad_nan:
                status = STATUS_NAN
                stop_time = t
                break
            if too_big or trace > div_thresh:
                status = STATUS_DIVERGED
                stop_time = t
                break
            if hit:
                # a NaN metric is recorded as-is; only a non-finite state aborts
                en, eig = _sample_metrics(y)
                en_out[sample] = en
                eig_out[sample] = eig
                if snap_every > 0 and sample % snap_every == 0:
                    snap_t[n_snap] = t
                    for i in range(N_STATE):
                        snap_y[n_snap, i] = y[i]
                    n_snap += 1
                sample += 1
        else:
            n_reject += 1

        if fixed_h <= 0.0:
            if err > 1e-30:
                fac = _SAFETY * err ** (-0.2)
            else:
                fac = _FAC_MAX
            if fac > _FAC_MAX:
                fac = _FAC_MAX
            if fac < _FAC_MIN:
                fac = _FAC_MIN
            if accept:
                if not hit:
                    h = h_step * fac
                    if h > h_max:
                        h = h_max
                elif fac < 1.0:
                    h = h_step * fac
            else:
                h = h_step * fac
                if h < h_min:
                    status = STATUS_STEP_UNDERFLOW
                    stop_time = t
                    break

    if status == STATUS_OK:
        stop_time = t
    return status, stop_time, sample, n_snap, n_accept, n_reject


if USE_NUMBA:
    _rhs_scalar = _njit(cache=True)(_rhs_scalar)
    _site_frame = _njit(cache=True)(_site_frame)
    _sample_metrics = _njit(cache=True)(_sample_metrics)
    _dp5_loop_scalar = _njit(cache=True)(_dp5_loop_scalar)


# --- vectorized kernels (numpy fallback) ------------------------------------


def _rhs_vector(t, y, P):
    (
        omega_m,
        delta0,
        kappa,
        gamma_m,
        g,
        e0,
        e1,
        omega_mod,
        lam0,
        tau,
        d_mech,
        d_cav,
    ) = P

    t_red = t % tau
    cosine = math.cos(omega_mod * t_red)
    drive = e0 + e1 * cosine
    lam = lam0 * cosine

    q1, p1, q2, p2, ar, ai = y[:6]
    photon = ar * ar + ai * ai
    detuning = delta0 + g * (q1 + q2)
    gx = -SQRT2 * g * ar
    gy = -SQRT2 * g * ai

    dy = np.empty(N_STATE)
    dy[0] = omega_m * p1
    dy[1] = -omega_m * q1 - g * photon - lam * q2 - gamma_m * p1
    dy[2] = omega_m * p2
    dy[3] = -omega_m * q2 - g * photon - lam * q1 - gamma_m * p2
    dy[4] = -kappa * ar + detuning * ai + drive
    dy[5] = -detuning * ar - kappa * ai

    A = np.zeros((6, 6))
    A[0, 1] = omega_m
    A[1, 0] = -omega_m
    A[1, 1] = -gamma_m
    A[1, 2] = -lam
    A[1, 4] = gx
    A[1, 5] = gy
    A[2, 3] = omega_m
    A[3, 0] = -lam
    A[3, 2] = -omega_m
    A[3, 3] = -gamma_m
    A[3, 4] = gx
    A[3, 5] = gy
    A[4, 0] = -gy
    A[4, 2] = -gy
    A[4, 4] = -kappa
    A[4, 5] = detuning
    A[5, 0] = gx
    A[5, 2] = gx
    A[5, 4] = -detuning
    A[5, 5] = -kappa

    flat = np.empty(36)
    packed = y[6:]
    flat[_TRI_FLAT] = packed
    flat[_TRI_FLAT_T] = packed
    V = flat.reshape(6, 6)

    M = A @ V
    dV = M + M.T
    dV[1, 1] += d_mech
    dV[3, 3] += d_mech
    dV[4, 4] += d_cav
    dV[5, 5] += d_cav
    dy[6:] = dV.reshape(36)[_TRI_FLAT]
    return dy


def _sample_metrics_py(y):
    return _metrics_from_packed(y[6:])


def _metrics_from_packed(packed):
    v00, v01, v02, v03 = packed[0], packed[1], packed[2], packed[3]
    v11, v12, v13 = packed[6], packed[7], packed[8]
    v22, v23 = packed[11], packed[12]
    v33 = packed[15]

    var_q = 0.5 * (v00 + v22 - 2.0 * v02)
    var_p = 0.5 * (v11 + v33 - 2.0 * v13)
    cov_qp = 0.5 * (v01 - v03 - v12 + v23)
    half_gap = 0.5 * (var_q - var_p)
    eig = 0.5 * (var_q + var_p) + math.sqrt(half_gap * half_gap + cov_qp * cov_qp)

    # same site balancing as the scalar kernel; see _sample_metrics
    c1, s1, a1 = _site_frame(v00, v01, v11)
    c2, s2, a2 = _site_frame(v22, v23, v33)
    t_one = np.array([[c1 / a1, s1 / a1], [-s1 * a1, c1 * a1]])
    t_two = np.array([[c2 / a2, s2 / a2], [-s2 * a2, c2 * a2]])
    site_one = np.array([[v00, v01], [v01, v11]])
    site_two = np.array([[v22, v23], [v23, v33]])
    cross = np.array([[v02, v03], [v12, v13]])
    w_one = t_one @ site_one @ t_one.T
    w_two = t_two @ site_two @ t_two.T
    w_cross = t_one @ cross @ t_two.T
    w00, w01, w11 = w_one[0, 0], w_one[0, 1], w_one[1, 1]
    w22, w23, w33 = w_two[0, 0], w_two[0, 1], w_two[1, 1]
    w02, w03 = w_cross[0, 0], w_cross[0, 1]
    w12, w13 = w_cross[1, 0], w_cross[1, 1]

    det_a = w00 * w11 - w01 * w01
    det_b = w22 * w33 - w23 * w23
    det_c = w02 * w13 - w03 * w12

    m01 = w00 * w11 - w01 * w01
    m02 = w00 * w12 - w02 * w01
    m03 = w00 * w13 - w03 * w01
    m12 = w01 * w12 - w02 * w11
    m13 = w01 * w13 - w03 * w11
    m23 = w02 * w13 - w03 * w12
    n01 = w02 * w13 - w12 * w03
    n02 = w02 * w23 - w22 * w03
    n03 = w02 * w33 - w23 * w03
    n12 = w12 * w23 - w22 * w13
    n13 = w12 * w33 - w23 * w13
    n23 = w22 * w33 - w23 * w23
    det_v2 = m01 * n23 - m02 * n13 + m03 * n12 + m12 * n03 - m13 * n02 + m23 * n01

    sigma = det_a + det_b - 2.0 * det_c
    rad = max(sigma * sigma - 4.0 * det_v2, 0.0)
    denom = sigma + math.sqrt(rad)
    if denom <= 0.0:
        en = math.nan
    else:
        nu_sq = 2.0 * det_v2 / denom
        if nu_sq <= 0.0:
            en = math.nan
        else:
            en = max(0.0, -0.5 * math.log(4.0 * nu_sq))
    return en, eig


def _dp5_loop_vector(
    P,
    y,
    ts,
    rtol,
    atol,
    h_max,
    h_init,
    h_min,
    div_thresh,
    fixed_h,
    snap_every,
    en_out,
    eig_out,
    snap_t,
    snap_y,
):
    n_samples = ts.shape[0]
    t = ts[0]
    k1 = _rhs_vector(t, y, P)
    en, eig = _sample_metrics_py(y)
    en_out[0] = en
    eig_out[0] = eig
    n_snap = 0
    if snap_every > 0:
        snap_t[0] = t
        snap_y[0] = y
        n_snap = 1

    n_accept = 0
    n_reject = 0
    status = STATUS_OK
    stop_time = t
    h = fixed_h if fixed_h > 0.0 else h_init
    sample = 1

    while sample < n_samples:
        target = ts[sample]
        dt_to = target - t
        hit = False
        if fixed_h > 0.0:
            h_step = fixed_h
        else:
            h_step = min(h, h_max)
        if h_step >= dt_to:
            h_step = dt_to
            hit = True

        k2 = _rhs_vector(t + C2 * h_step, y + h_step * (A21 * k1), P)
        k3 = _rhs_vector(t + C3 * h_step, y + h_step * (A31 * k1 + A32 * k2), P)
        k4 = _rhs_vector(
            t + C4 * h_step, y + h_step * (A41 * k1 + A42 * k2 + A43 * k3), P
        )
        k5 = _rhs_vector(
            t + C5 * h_step,
            y + h_step * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
            P,
        )
        k6 = _rhs_vector(
            t + h_step,
            y + h_step * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
            P,
        )
        ynew = y + h_step * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = _rhs_vector(t + h_step, ynew, P)

        if fixed_h > 0.0:
            err = 0.0
            accept = True
        else:
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
            ev = h_step * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            err = math.sqrt(float(np.mean((ev / scale) ** 2)))
            accept = err <= 1.0
            if math.isnan(err):
                accept = False
                err = 1e10

        if accept:
            t = target if hit else t + h_step
            y[:] = ynew
            k1 = k7
            n_accept += 1
            cov = y[6:]
            if np.any(np.isnan(y)):
                status = STATUS_NAN
                stop_time = t
                break
            if (
                np.max(np.abs(cov)) > div_thresh
                or np.sum(cov[_DIAG_PACKED]) > div_thresh
            ):
                status = STATUS_DIVERGED
                stop_time = t
                break
            if hit:
                # a NaN metric is recorded as-is; only a non-finite state aborts
                en, eig = _sample_metrics_py(y)
                en_out[sample] = en
                eig_out[sample] = eig
                if snap_every > 0 and sample % snap_every == 0:
                    snap_t[n_snap] = t
                    snap_y[n_snap] = y
                    n_snap += 1
                sample += 1
        else:
            n_reject += 1

        if fixed_h <= 0.0:
            fac = _SAFETY * err ** (-0.2) if err > 1e-30 else _FAC_MAX
            fac = min(max(fac, _FAC_MIN), _FAC_MAX)
            if accept:
                if not hit:
                    h = min(h_step * fac, h_max)
                elif fac < 1.0:
                    h = h_step * fac
            else:
                h = h_step * fac
                if h < h_min:
                    status = STATUS_STEP_UNDERFLOW
                    stop_time = t
                    break

    if status == STATUS_OK:
        stop_time = t
    return status, stop_time, sample, n_snap, n_accept, n_reject


def run_loop(backend: str, *args):
    if backend == "numba":
        if not USE_NUMBA:
            raise RuntimeError("numba backend requested but unavailable/disabled")
        return _dp5_loop_scalar(*args)
    if backend == "numpy":
        return _dp5_loop_vector(*args)
    raise ValueError(f"unknown backend {backend!r}")
