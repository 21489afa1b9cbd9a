# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the serial-chain hot path.

Numerically equivalent to `_kernels_py`; selected at import in `_backend`.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, sin, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline void _qmul(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]


cdef inline void _qrot(const double* q, const double* v, double* out) noexcept nogil:
    cdef double tx = 2.0 * (q[2] * v[2] - q[3] * v[1])
    cdef double ty = 2.0 * (q[3] * v[0] - q[1] * v[2])
    cdef double tz = 2.0 * (q[1] * v[1] - q[2] * v[0])
    out[0] = v[0] + q[0] * tx + (q[2] * tz - q[3] * ty)
    out[1] = v[1] + q[0] * ty + (q[3] * tx - q[1] * tz)
    out[2] = v[2] + q[0] * tz + (q[1] * ty - q[2] * tx)


cdef inline void _qnorm(double* q) noexcept nogil:
    cdef double n = sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    q[0] /= n
    q[1] /= n
    q[2] /= n
    q[3] /= n


cdef void _fk_chain(const signed char[:] types, const double[:, :] axes,
                    const double[:, :] oq, const double[:, :] ot,
                    const double[:] q, double[:, :] frames_q,
                    double[:, :] frames_t) noexcept nogil:
    cdef int n = q.shape[0]
    cdef int i, k
    cdef double acc_q[4]
    cdef double acc_t[3]
    cdef double tmp_q[4]
    cdef double tmp_v[3]
    cdef double motion[4]
    cdef double half, s
    acc_q[0] = 1.0
    acc_q[1] = acc_q[2] = acc_q[3] = 0.0
    acc_t[0] = acc_t[1] = acc_t[2] = 0.0
    for i in range(n):
        _qrot(acc_q, &ot[i, 0], tmp_v)
        for k in range(3):
            acc_t[k] += tmp_v[k]
        _qmul(acc_q, &oq[i, 0], tmp_q)
        for k in range(4):
            acc_q[k] = tmp_q[k]
        _qnorm(acc_q)
        if types[i] == 0:
            half = 0.5 * q[i]
            s = sin(half)
            motion[0] = cos(half)
            motion[1] = axes[i, 0] * s
            motion[2] = axes[i, 1] * s
            motion[3] = axes[i, 2] * s
            _qmul(acc_q, motion, tmp_q)
            for k in range(4):
                acc_q[k] = tmp_q[k]
            _qnorm(acc_q)
        else:
            for k in range(3):
                tmp_v[k] = axes[i, k] * q[i]
            _qrot(acc_q, tmp_v, motion)  # reuse motion[0:3] as scratch
            for k in range(3):
                acc_t[k] += motion[k]
        for k in range(4):
            frames_q[i, k] = acc_q[k]
        for k in range(3):
            frames_t[i, k] = acc_t[k]


def fk_frames(const signed char[:] types, const double[:, :] axes, const double[:, :] oq,
              const double[:, :] ot, const double[:] q):
    cdef int n = q.shape[0]
    frames_q_arr = np.empty((n, 4))
    frames_t_arr = np.empty((n, 3))
    cdef double[:, :] frames_q = frames_q_arr
    cdef double[:, :] frames_t = frames_t_arr
    with nogil:
        _fk_chain(types, axes, oq, ot, q, frames_q, frames_t)
    return frames_q_arr, frames_t_arr


def fk_ee(const signed char[:] types, const double[:, :] axes, const double[:, :] oq,
          const double[:, :] ot, const double[:] eq, const double[:] et, const double[:] q):
    cdef int n = q.shape[0]
    ee_q_arr = np.empty(4)
    ee_t_arr = np.empty(3)
    cdef double[:] ee_q = ee_q_arr
    cdef double[:] ee_t = ee_t_arr
    cdef double last_q[4]
    cdef double last_t[3]
    cdef double tmp[4]
    cdef double tv[3]
    cdef int k
    frames_q_arr = np.empty((n, 4))
    frames_t_arr = np.empty((n, 3))
    cdef double[:, :] frames_q = frames_q_arr
    cdef double[:, :] frames_t = frames_t_arr
    with nogil:
        _fk_chain(types, axes, oq, ot, q, frames_q, frames_t)
        if n == 0:
            last_q[0] = 1.0
            last_q[1] = last_q[2] = last_q[3] = 0.0
            last_t[0] = last_t[1] = last_t[2] = 0.0
        else:
            for k in range(4):
                last_q[k] = frames_q[n - 1, k]
            for k in range(3):
                last_t[k] = frames_t[n - 1, k]
        _qrot(last_q, &et[0], tv)
        for k in range(3):
            ee_t[k] = last_t[k] + tv[k]
        _qmul(last_q, &eq[0], tmp)
        _qnorm(tmp)
        for k in range(4):
            ee_q[k] = tmp[k]
    return ee_q_arr, ee_t_arr


def fk_jacobian(const signed char[:] types, const double[:, :] axes, const double[:, :] oq,
                const double[:, :] ot, const double[:] eq, const double[:] et, const double[:] q):
    cdef int n = q.shape[0]
    ee_q_arr = np.empty(4)
    ee_t_arr = np.empty(3)
    jac_arr = np.zeros((6, n))
    frames_q_arr = np.empty((n, 4))
    frames_t_arr = np.empty((n, 3))
    cdef double[:] ee_q = ee_q_arr
    cdef double[:] ee_t = ee_t_arr
    cdef double[:, :] J = jac_arr
    cdef double[:, :] frames_q = frames_q_arr
    cdef double[:, :] frames_t = frames_t_arr
    cdef double z[3]
    cdef double r[3]
    cdef double tmp[4]
    cdef double tv[3]
    cdef int i, k
    if n == 0:
        ee_q_arr[:] = np.asarray(eq)
        ee_t_arr[:] = np.asarray(et)
        return ee_q_arr, ee_t_arr, jac_arr
    with nogil:
        _fk_chain(types, axes, oq, ot, q, frames_q, frames_t)
        _qrot(&frames_q[n - 1, 0], &et[0], tv)
        for k in range(3):
            ee_t[k] = frames_t[n - 1, k] + tv[k]
        _qmul(&frames_q[n - 1, 0], &eq[0], tmp)
        _qnorm(tmp)
        for k in range(4):
            ee_q[k] = tmp[k]
        for i in range(n):
            _qrot(&frames_q[i, 0], &axes[i, 0], z)
            if types[i] == 0:
                for k in range(3):
                    r[k] = ee_t[k] - frames_t[i, k]
                J[0, i] = z[1] * r[2] - z[2] * r[1]
                J[1, i] = z[2] * r[0] - z[0] * r[2]
                J[2, i] = z[0] * r[1] - z[1] * r[0]
                J[3, i] = z[0]
                J[4, i] = z[1]
                J[5, i] = z[2]
            else:
                J[0, i] = z[0]
                J[1, i] = z[1]
                J[2, i] = z[2]
    return ee_q_arr, ee_t_arr, jac_arr


def pose_error6(const double[:] qc, const double[:] tc, const double[:] q, const double[:] t):
    out_arr = np.empty(6)
    cdef double[:] out = out_arr
    cdef double conj[4]
    cdef double rel[4]
    cdef double s, angle, scale
    cdef int k
    with nogil:
        for k in range(3):
            out[k] = tc[k] - t[k]
        conj[0] = q[0]
        conj[1] = -q[1]
        conj[2] = -q[2]
        conj[3] = -q[3]
        _qmul(&qc[0], conj, rel)
        _qnorm(rel)
        if rel[0] < 0.0:
            for k in range(4):
                rel[k] = -rel[k]
        s = sqrt(rel[1] * rel[1] + rel[2] * rel[2] + rel[3] * rel[3])
        if s < 1e-15:
            out[3] = out[4] = out[5] = 0.0
        else:
            angle = 2.0 * atan2(s, rel[0])
            scale = angle / s
            out[3] = rel[1] * scale
            out[4] = rel[2] * scale
            out[5] = rel[3] * scale
    return out_arr


def integrate_joints(const double[:] q, const double[:] dq, double dt, const double[:] lo,
                     const double[:] hi, const double[:] vel):
    cdef int n = q.shape[0]
    out_arr = np.empty(n)
    cdef double[:] out = out_arr
    cdef double v
    cdef int i
    with nogil:
        for i in range(n):
            v = dq[i]
            if v > vel[i]:
                v = vel[i]
            elif v < -vel[i]:
                v = -vel[i]
            v = q[i] + v * dt
            if v < lo[i]:
                v = lo[i]
            elif v > hi[i]:
                v = hi[i]
            out[i] = v
    return out_arr
