# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled register-program kernel; same contract as ``_kernel_py``."""
import numpy as np
from libc.math cimport exp, log, sin, cos, fabs

cdef double TINY = 1e-300


cdef inline double ipow(double x, int k) nogil:
    cdef double r = 1.0
    while k > 0:
        if k & 1:
            r *= x
        x *= x
        k >>= 1
    return r


def run_program(int[::1] ops, int[::1] a, int[::1] b, double[::1] consts,
                double[:, ::1] points, int[::1] outputs):
    cdef Py_ssize_t npts = points.shape[0]
    cdef Py_ssize_t nops = ops.shape[0]
    cdef Py_ssize_t nout = outputs.shape[0]
    cdef double[::1] regs = np.empty(max(nops, 1))
    result = np.empty((npts, nout))
    cdef double[:, ::1] out = result
    cdef Py_ssize_t p, i, j
    cdef int op, k, err = 0, err_slot = -1, err_point = -1
    cdef double x, den
    with nogil:
        for p in range(npts):
            for i in range(nops):
                op = ops[i]
                if op == 0:
                    regs[i] = consts[a[i]]
                elif op == 1:
                    regs[i] = points[p, a[i]]
                elif op == 2:
                    regs[i] = regs[a[i]] + regs[b[i]]
                elif op == 3:
                    regs[i] = regs[a[i]] * regs[b[i]]
                elif op == 4:
                    x = regs[a[i]]
                    k = b[i]
                    if k < 0:
                        den = ipow(x, -k)
                        if fabs(den) < TINY:
                            err = 2
                            err_slot = i
                            err_point = p
                            break
                        regs[i] = 1.0 / den
                    else:
                        regs[i] = ipow(x, k)
                elif op == 5:
                    regs[i] = exp(regs[a[i]])
                elif op == 6:
                    x = regs[a[i]]
                    if x <= 0.0:
                        err = 1
                        err_slot = i
                        err_point = p
                        break
                    regs[i] = log(x)
                elif op == 7:
                    regs[i] = sin(regs[a[i]])
                else:
                    regs[i] = cos(regs[a[i]])
            if err != 0:
                break
            for j in range(nout):
                out[p, j] = regs[outputs[j]]
    if err != 0:
        return None, err, err_slot, err_point
    return result, 0, -1, -1
