# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled rigid-body kernels. Same signatures and semantics as ``_kernels_py``."""

import numpy as np
from libc.math cimport sin, cos

cdef enum:
    REVOLUTE = 0


cdef inline void cross3(const double* a, const double* b, double* out) noexcept nogil:
    cdef double x = a[1] * b[2] - a[2] * b[1]
    cdef double y = a[2] * b[0] - a[0] * b[2]
    cdef double z = a[0] * b[1] - a[1] * b[0]
    out[0] = x
    out[1] = y
    out[2] = z


cdef inline void matvec3(const double* E, const double* x, double* out) noexcept nogil:
    cdef double y0 = E[0] * x[0] + E[1] * x[1] + E[2] * x[2]
    cdef double y1 = E[3] * x[0] + E[4] * x[1] + E[5] * x[2]
    cdef double y2 = E[6] * x[0] + E[7] * x[1] + E[8] * x[2]
    out[0] = y0
    out[1] = y1
    out[2] = y2


cdef inline void matTvec3(const double* E, const double* x, double* out) noexcept nogil:
    cdef double y0 = E[0] * x[0] + E[3] * x[1] + E[6] * x[2]
    cdef double y1 = E[1] * x[0] + E[4] * x[1] + E[7] * x[2]
    cdef double y2 = E[2] * x[0] + E[5] * x[1] + E[8] * x[2]
    out[0] = y0
    out[1] = y1
    out[2] = y2


cdef inline void matmul3(const double* A, const double* B, double* out) noexcept nogil:
    cdef int i, j
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = A[3 * i] * B[j] + A[3 * i + 1] * B[3 + j] + A[3 * i + 2] * B[6 + j]


cdef inline void motion(const double* E, const double* r, const double* m, double* out) noexcept nogil:
    # out = X m, X = [[E, 0], [-E S(r), E]]
    cdef double tmp[3]
    cdef double rw[3]
    cross3(r, m, rw)
    tmp[0] = m[3] - rw[0]
    tmp[1] = m[4] - rw[1]
    tmp[2] = m[5] - rw[2]
    matvec3(E, m, out)
    matvec3(E, tmp, out + 3)


cdef inline void force_T(const double* E, const double* r, const double* f, double* out) noexcept nogil:
    # out = X^T f
    cdef double fl[3]
    cdef double n[3]
    cdef double rf[3]
    matTvec3(E, f + 3, fl)
    matTvec3(E, f, n)
    cross3(r, fl, rf)
    out[0] = n[0] + rf[0]
    out[1] = n[1] + rf[1]
    out[2] = n[2] + rf[2]
    out[3] = fl[0]
    out[4] = fl[1]
    out[5] = fl[2]


cdef inline void cross_motion(const double* v, const double* m, double* out) noexcept nogil:
    cdef double t1[3]
    cdef double t2[3]
    cdef double t3[3]
    cross3(v, m, t1)
    cross3(v, m + 3, t2)
    cross3(v + 3, m, t3)
    out[0] = t1[0]
    out[1] = t1[1]
    out[2] = t1[2]
    out[3] = t2[0] + t3[0]
    out[4] = t2[1] + t3[1]
    out[5] = t2[2] + t3[2]


cdef inline void cross_force(const double* v, const double* f, double* out) noexcept nogil:
    cdef double t1[3]
    cdef double t2[3]
    cdef double t3[3]
    cross3(v, f, t1)
    cross3(v + 3, f + 3, t2)
    cross3(v, f + 3, t3)
    out[0] = t1[0] + t2[0]
    out[1] = t1[1] + t2[1]
    out[2] = t1[2] + t2[2]
    out[3] = t3[0]
    out[4] = t3[1]
    out[5] = t3[2]


cdef inline void inertia_apply(const double* th, const double* m, double* out) noexcept nogil:
    cdef double hu[3]
    cdef double hw[3]
    cross3(th + 1, m + 3, hu)
    cross3(th + 1, m, hw)
    out[0] = th[4] * m[0] + th[5] * m[1] + th[7] * m[2] + hu[0]
    out[1] = th[5] * m[0] + th[6] * m[1] + th[8] * m[2] + hu[1]
    out[2] = th[7] * m[0] + th[8] * m[1] + th[9] * m[2] + hu[2]
    out[3] = th[0] * m[3] - hw[0]
    out[4] = th[0] * m[4] - hw[1]
    out[5] = th[0] * m[5] - hw[2]


cdef void link_transforms(const long long[::1] jtype, const double[:, ::1] axis,
                          const double[:, :, ::1] Et, const double[:, ::1] rt,
                          const double[::1] q, double[:, ::1] E, double[:, ::1] r) noexcept nogil:
    cdef Py_ssize_t i, n = q.shape[0]
    cdef int c_i
    cdef double x, y, z, c, s, C
    cdef double Rt[9]
    cdef double d[3]
    for i in range(n):
        if jtype[i] == REVOLUTE:
            x = axis[i, 0]
            y = axis[i, 1]
            z = axis[i, 2]
            c = cos(q[i])
            s = sin(q[i])
            C = 1.0 - c
            Rt[0] = c + x * x * C
            Rt[1] = x * y * C + z * s
            Rt[2] = x * z * C - y * s
            Rt[3] = y * x * C - z * s
            Rt[4] = c + y * y * C
            Rt[5] = y * z * C + x * s
            Rt[6] = z * x * C + y * s
            Rt[7] = z * y * C - x * s
            Rt[8] = c + z * z * C
            matmul3(Rt, &Et[i, 0, 0], &E[i, 0])
            r[i, 0] = rt[i, 0]
            r[i, 1] = rt[i, 1]
            r[i, 2] = rt[i, 2]
        else:
            for c_i in range(9):
                E[i, c_i] = Et[i, c_i // 3, c_i % 3]
            d[0] = axis[i, 0] * q[i]
            d[1] = axis[i, 1] * q[i]
            d[2] = axis[i, 2] * q[i]
            matTvec3(&Et[i, 0, 0], d, &r[i, 0])
            r[i, 0] += rt[i, 0]
            r[i, 1] += rt[i, 1]
            r[i, 2] += rt[i, 2]


cdef inline void subspace(long long jt, const double[:, ::1] axis, Py_ssize_t i, double* S) noexcept nogil:
    cdef int k
    for k in range(6):
        S[k] = 0.0
    if jt == REVOLUTE:
        S[0] = axis[i, 0]
        S[1] = axis[i, 1]
        S[2] = axis[i, 2]
    else:
        S[3] = axis[i, 0]
        S[4] = axis[i, 1]
        S[5] = axis[i, 2]


cdef void forward_pass(const long long[::1] parent, const long long[::1] jtype,
                       const double[:, ::1] axis, double[:, ::1] E, double[:, ::1] r,
                       const double[::1] v, const double[::1] a, const double* a_root,
                       double[:, ::1] vel, double[:, ::1] acc) noexcept nogil:
    cdef Py_ssize_t i, n = v.shape[0]
    cdef int k
    cdef double S[6]
    cdef double vj[6]
    cdef double tmp[6]
    cdef long long p
    for i in range(n):
        subspace(jtype[i], axis, i, S)
        for k in range(6):
            vj[k] = S[k] * v[i]
        p = parent[i]
        if p < 0:
            for k in range(6):
                vel[i, k] = vj[k]
            motion(&E[i, 0], &r[i, 0], a_root, &acc[i, 0])
            for k in range(6):
                acc[i, k] += S[k] * a[i]
        else:
            motion(&E[i, 0], &r[i, 0], &vel[p, 0], &vel[i, 0])
            for k in range(6):
                vel[i, k] += vj[k]
            motion(&E[i, 0], &r[i, 0], &acc[p, 0], &acc[i, 0])
            cross_motion(&vel[i, 0], vj, tmp)
            for k in range(6):
                acc[i, k] += S[k] * a[i] + tmp[k]


def rnea(const long long[::1] parent, const long long[::1] jtype, const double[:, ::1] axis,
         const double[:, :, ::1] Et, const double[:, ::1] rt, const double[:, ::1] inertia,
         gravity, const double[::1] q, const double[::1] v, const double[::1] a):
    cdef Py_ssize_t i, n = q.shape[0]
    cdef int k
    cdef double a_root[6]
    cdef double S[6]
    cdef double Iv[6]
    cdef double tmp[6]
    cdef double ft[6]
    E_arr = np.empty((n, 9))
    r_arr = np.empty((n, 3))
    vel_arr = np.empty((n, 6))
    acc_arr = np.empty((n, 6))
    f_arr = np.empty((n, 6))
    tau_arr = np.empty(n)
    cdef double[:, ::1] E = E_arr
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] vel = vel_arr
    cdef double[:, ::1] acc = acc_arr
    cdef double[:, ::1] f = f_arr
    cdef double[::1] tau = tau_arr
    a_root[0] = 0.0
    a_root[1] = 0.0
    a_root[2] = 0.0
    a_root[3] = -gravity[0]
    a_root[4] = -gravity[1]
    a_root[5] = -gravity[2]
    link_transforms(jtype, axis, Et, rt, q, E, r)
    forward_pass(parent, jtype, axis, E, r, v, a, a_root, vel, acc)
    for i in range(n):
        inertia_apply(&inertia[i, 0], &acc[i, 0], &f[i, 0])
        inertia_apply(&inertia[i, 0], &vel[i, 0], Iv)
        cross_force(&vel[i, 0], Iv, tmp)
        for k in range(6):
            f[i, k] += tmp[k]
    for i in range(n - 1, -1, -1):
        subspace(jtype[i], axis, i, S)
        tau[i] = 0.0
        for k in range(6):
            tau[i] += S[k] * f[i, k]
        if parent[i] >= 0:
            force_T(&E[i, 0], &r[i, 0], &f[i, 0], ft)
            for k in range(6):
                f[parent[i], k] += ft[k]
    return tau_arr


cdef void build_X(const double* E, const double* r, double* X) noexcept nogil:
    # row-major 6x6
    cdef int i, j
    cdef double R[9]
    R[0] = 0.0
    R[1] = -r[2]
    R[2] = r[1]
    R[3] = r[2]
    R[4] = 0.0
    R[5] = -r[0]
    R[6] = -r[1]
    R[7] = r[0]
    R[8] = 0.0
    for i in range(36):
        X[i] = 0.0
    for i in range(3):
        for j in range(3):
            X[6 * i + j] = E[3 * i + j]
            X[6 * (i + 3) + j + 3] = E[3 * i + j]
            X[6 * (i + 3) + j] = -(E[3 * i] * R[j] + E[3 * i + 1] * R[3 + j] + E[3 * i + 2] * R[6 + j])


def crba(const long long[::1] parent, const long long[::1] jtype, const double[:, ::1] axis,
         const double[:, :, ::1] Et, const double[:, ::1] rt, const double[:, ::1] inertia,
         const double[::1] q):
    cdef Py_ssize_t i, j, n = q.shape[0]
    cdef int k, l, m
    cdef double S[6]
    cdef double F[6]
    cdef double G[6]
    cdef double T[36]
    cdef double acc_
    cdef long long p
    E_arr = np.empty((n, 9))
    r_arr = np.empty((n, 3))
    X_arr = np.empty((n, 36))
    Ic_arr = np.zeros((n, 36))
    M_arr = np.zeros((n, n))
    cdef double[:, ::1] E = E_arr
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] X = X_arr
    cdef double[:, ::1] Ic = Ic_arr
    cdef double[:, ::1] M = M_arr
    link_transforms(jtype, axis, Et, rt, q, E, r)
    for i in range(n):
        build_X(&E[i, 0], &r[i, 0], &X[i, 0])
        # spatial inertia [[I, S(h)], [S(h)^T, m 1]]
        Ic[i, 0] = inertia[i, 4]
        Ic[i, 1] = inertia[i, 5]
        Ic[i, 2] = inertia[i, 7]
        Ic[i, 6] = inertia[i, 5]
        Ic[i, 7] = inertia[i, 6]
        Ic[i, 8] = inertia[i, 8]
        Ic[i, 12] = inertia[i, 7]
        Ic[i, 13] = inertia[i, 8]
        Ic[i, 14] = inertia[i, 9]
        Ic[i, 4] = -inertia[i, 3]
        Ic[i, 5] = inertia[i, 2]
        Ic[i, 9] = inertia[i, 3]
        Ic[i, 11] = -inertia[i, 1]
        Ic[i, 15] = -inertia[i, 2]
        Ic[i, 16] = inertia[i, 1]
        for k in range(3):
            for l in range(3):
                Ic[i, 6 * (k + 3) + l] = Ic[i, 6 * l + k + 3]
            Ic[i, 6 * (k + 3) + k + 3] = inertia[i, 0]
    for i in range(n - 1, -1, -1):
        p = parent[i]
        if p < 0:
            continue
        # T = Ic_i X_i ; Ic_p += X_i^T T
        for k in range(6):
            for l in range(6):
                acc_ = 0.0
                for m in range(6):
                    acc_ = acc_ + Ic[i, 6 * k + m] * X[i, 6 * m + l]
                T[6 * k + l] = acc_
        for k in range(6):
            for l in range(6):
                acc_ = 0.0
                for m in range(6):
                    acc_ = acc_ + X[i, 6 * m + k] * T[6 * m + l]
                Ic[p, 6 * k + l] += acc_
    for i in range(n):
        subspace(jtype[i], axis, i, S)
        for k in range(6):
            acc_ = 0.0
            for l in range(6):
                acc_ = acc_ + Ic[i, 6 * k + l] * S[l]
            F[k] = acc_
        acc_ = 0.0
        for k in range(6):
            acc_ = acc_ + S[k] * F[k]
        M[i, i] = acc_
        j = i
        while parent[j] >= 0:
            for k in range(6):
                acc_ = 0.0
                for l in range(6):
                    acc_ = acc_ + X[j, 6 * l + k] * F[l]
                G[k] = acc_
            for k in range(6):
                F[k] = G[k]
            j = parent[j]
            subspace(jtype[j], axis, j, S)
            acc_ = 0.0
            for k in range(6):
                acc_ = acc_ + S[k] * F[k]
            M[i, j] = acc_
            M[j, i] = acc_
    return M_arr


cdef inline void hat3(const double* w, double* S) noexcept nogil:
    S[0] = 0.0
    S[1] = -w[2]
    S[2] = w[1]
    S[3] = w[2]
    S[4] = 0.0
    S[5] = -w[0]
    S[6] = -w[1]
    S[7] = w[0]
    S[8] = 0.0


cdef void body_regressor(const double* vel, const double* acc, double* A) noexcept nogil:
    # A is 6x10 row-major
    cdef double Sw[9]
    cdef double Su[9]
    cdef double Sdu[9]
    cdef double Sdw[9]
    cdef double P1[9]
    cdef double P2[9]
    cdef double P3[9]
    cdef double Lw[18]
    cdef double Ldw[18]
    cdef double wu[3]
    cdef int i, j, k
    cdef const double* w = vel
    cdef const double* u = vel + 3
    cdef const double* dw = acc
    cdef const double* du = acc + 3
    for i in range(60):
        A[i] = 0.0
    hat3(w, Sw)
    hat3(u, Su)
    hat3(du, Sdu)
    hat3(dw, Sdw)
    matmul3(Sw, Su, P1)
    matmul3(Su, Sw, P2)
    matmul3(Sw, Sw, P3)
    for i in range(18):
        Lw[i] = 0.0
        Ldw[i] = 0.0
    # (I x) as a linear map of (xx, xy, yy, xz, yz, zz)
    Lw[0] = w[0]; Lw[1] = w[1]; Lw[3] = w[2]
    Lw[7] = w[0]; Lw[8] = w[1]; Lw[10] = w[2]
    Lw[15] = w[0]; Lw[16] = w[1]; Lw[17] = w[2]
    Ldw[0] = dw[0]; Ldw[1] = dw[1]; Ldw[3] = dw[2]
    Ldw[7] = dw[0]; Ldw[8] = dw[1]; Ldw[10] = dw[2]
    Ldw[15] = dw[0]; Ldw[16] = dw[1]; Ldw[17] = dw[2]
    cross3(w, u, wu)
    for i in range(3):
        for j in range(3):
            A[10 * i + 1 + j] = -Sdu[3 * i + j] - P1[3 * i + j] + P2[3 * i + j]
            A[10 * (i + 3) + 1 + j] = Sdw[3 * i + j] + P3[3 * i + j]
        for j in range(6):
            A[10 * i + 4 + j] = Ldw[6 * i + j] + Sw[3 * i] * Lw[j] + Sw[3 * i + 1] * Lw[6 + j] + Sw[3 * i + 2] * Lw[12 + j]
        A[10 * (i + 3)] = du[i] + wu[i]


def regressor(const long long[::1] parent, const long long[::1] jtype, const double[:, ::1] axis,
              const double[:, :, ::1] Et, const double[:, ::1] rt, gravity,
              const double[::1] q, const double[::1] v, const double[::1] a,
              const long long[::1] body_col, Py_ssize_t ncols):
    cdef Py_ssize_t i, j, n = q.shape[0]
    cdef int k, c
    cdef long long b
    cdef double a_root[6]
    cdef double S[6]
    cdef double A[60]
    cdef double col[6]
    cdef double out[6]
    cdef double s
    E_arr = np.empty((n, 9))
    r_arr = np.empty((n, 3))
    vel_arr = np.empty((n, 6))
    acc_arr = np.empty((n, 6))
    Y_arr = np.zeros((n, 10 * ncols))
    cdef double[:, ::1] E = E_arr
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] vel = vel_arr
    cdef double[:, ::1] acc = acc_arr
    cdef double[:, ::1] Y = Y_arr
    a_root[0] = 0.0
    a_root[1] = 0.0
    a_root[2] = 0.0
    a_root[3] = -gravity[0]
    a_root[4] = -gravity[1]
    a_root[5] = -gravity[2]
    link_transforms(jtype, axis, Et, rt, q, E, r)
    forward_pass(parent, jtype, axis, E, r, v, a, a_root, vel, acc)
    for i in range(n):
        b = body_col[i]
        if b < 0:
            continue
        body_regressor(&vel[i, 0], &acc[i, 0], A)
        j = i
        while True:
            subspace(jtype[j], axis, j, S)
            for c in range(10):
                s = 0.0
                for k in range(6):
                    s = s + S[k] * A[10 * k + c]
                Y[j, 10 * b + c] = s
            if parent[j] < 0:
                break
            for c in range(10):
                for k in range(6):
                    col[k] = A[10 * k + c]
                force_T(&E[j, 0], &r[j, 0], col, out)
                for k in range(6):
                    A[10 * k + c] = out[k]
            j = parent[j]
    return Y_arr


def point_kinematics(const long long[::1] parent, const long long[::1] jtype, const double[:, ::1] axis,
                     const double[:, :, ::1] Et, const double[:, ::1] rt,
                     const double[::1] q, const double[::1] v, const double[::1] a,
                     Py_ssize_t link, offset):
    cdef Py_ssize_t i, j, n = q.shape[0]
    cdef int k
    cdef long long p
    cdef double zero[6]
    cdef double off[3]
    cdef double tmp[3]
    cdef double t2[3]
    cdef double body[3]
    cdef double ax[3]
    cdef double d[3]
    for k in range(6):
        zero[k] = 0.0
    off[0] = offset[0]
    off[1] = offset[1]
    off[2] = offset[2]
    E_arr = np.empty((n, 9))
    r_arr = np.empty((n, 3))
    vel_arr = np.empty((n, 6))
    acc_arr = np.empty((n, 6))
    E0_arr = np.empty((n, 9))
    p0_arr = np.empty((n, 3))
    pos_arr = np.empty(3)
    pvel_arr = np.empty(3)
    pacc_arr = np.empty(3)
    J_arr = np.zeros((3, n))
    cdef double[:, ::1] E = E_arr
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] vel = vel_arr
    cdef double[:, ::1] acc = acc_arr
    cdef double[:, ::1] E0 = E0_arr
    cdef double[:, ::1] p0 = p0_arr
    cdef double[::1] pos = pos_arr
    cdef double[::1] pvel = pvel_arr
    cdef double[::1] pacc = pacc_arr
    cdef double[:, ::1] J = J_arr
    link_transforms(jtype, axis, Et, rt, q, E, r)
    forward_pass(parent, jtype, axis, E, r, v, a, zero, vel, acc)
    for i in range(n):
        p = parent[i]
        if p < 0:
            for k in range(9):
                E0[i, k] = E[i, k]
            for k in range(3):
                p0[i, k] = r[i, k]
        else:
            matmul3(&E[i, 0], &E0[p, 0], &E0[i, 0])
            matTvec3(&E0[p, 0], &r[i, 0], tmp)
            for k in range(3):
                p0[i, k] = p0[p, k] + tmp[k]
    matTvec3(&E0[link, 0], off, tmp)
    for k in range(3):
        pos[k] = p0[link, k] + tmp[k]
    # velocity
    cross3(&vel[link, 0], off, tmp)
    for k in range(3):
        body[k] = vel[link, 3 + k] + tmp[k]
    matTvec3(&E0[link, 0], body, &pvel[0])
    # acceleration
    cross3(&vel[link, 0], &vel[link, 3], tmp)
    for k in range(3):
        body[k] = acc[link, 3 + k] + tmp[k]
    cross3(&acc[link, 0], off, tmp)
    for k in range(3):
        body[k] += tmp[k]
    cross3(&vel[link, 0], off, tmp)
    cross3(&vel[link, 0], tmp, t2)
    for k in range(3):
        body[k] += t2[k]
    matTvec3(&E0[link, 0], body, &pacc[0])
    j = link
    while j >= 0:
        matTvec3(&E0[j, 0], &axis[j, 0], ax)
        if jtype[j] == REVOLUTE:
            for k in range(3):
                d[k] = pos[k] - p0[j, k]
            cross3(ax, d, tmp)
            for k in range(3):
                J[k, j] = tmp[k]
        else:
            for k in range(3):
                J[k, j] = ax[k]
        j = parent[j]
    return pos_arr, pvel_arr, pacc_arr, J_arr
