# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Fused trial kernel: communication and confirmation phases in C.

Bit-compatible with the pure-Python codec: floating-point expressions are
evaluated in the same order (the extension is compiled with contraction
disabled), threshold/split decisions use the same exact integer arithmetic,
and channel uniforms are consumed from the same buffered stream.  Group
counts and start indices stay Python integers (they overflow any fixed-width
type), everything touched per symbol is a flat C array.
"""

from libc.math cimport frexp, isfinite, log2
from libc.string cimport memcpy, memmove

import numpy as np

from .core import SpmTopError

cdef double TINY = 1e-300
cdef double _MANT = 9007199254740992.0  # 2**53


cdef class _Chan:
    """Direct view of a BscChannel's uniform buffer."""

    cdef object ch
    cdef double[::1] buf
    cdef Py_ssize_t pos
    cdef double crossover
    cdef long long uses

    def __cinit__(self, ch):
        self.ch = ch
        self.buf = ch._buf
        self.pos = ch._pos
        self.crossover = ch.crossover
        self.uses = 0

    cdef double next_u(self) except? -1.0:
        cdef double u
        if self.pos >= self.buf.shape[0]:
            self.ch.refill()
            self.buf = self.ch._buf
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u

    cdef int transmit(self, int x) except? -1:
        cdef double u = self.next_u()
        self.uses += 1
        return x ^ (1 if u < self.crossover else 0)

    cdef flush(self):
        self.ch._pos = self.pos
        self.ch.uses = self.ch.uses + self.uses


cdef inline void _materialize(double* rho, double* w, long long* order,
                              Py_ssize_t npos, Py_ssize_t i) nogil:
    cdef long long s = order[i]
    cdef long long s2
    cdef double wv = w[s]
    cdef double r, wn
    if wv != 1.0:
        r = rho[s] * wv
        if r < TINY:
            r = TINY
        rho[s] = r
        if i + 1 < npos:
            s2 = order[i + 1]
            wn = w[s2] * wv
            if wn < TINY:
                wn = TINY
            w[s2] = wn
        w[s] = 1.0


cdef long long _update_merge(double* rho, double* w, long long* order,
                             long long* scratch, Py_ssize_t npos, Py_ssize_t m,
                             double p0, int y, double p, double q,
                             double qmp) except -1:
    """Rescale S0 eagerly, fold the S1 factor into its first group's pending
    weight, and re-merge.  Returns the number of links visited."""
    cdef double py_mass = p0 if y == 0 else 1.0 - p0
    cdef double den = py_mass * qmp + p
    cdef double w0, w1, r, wn
    cdef Py_ssize_t a, b, out_len
    cdef long long s, sa, sb
    cdef long long ops = 0
    if not den > 0.0 or not isfinite(den):
        raise SpmTopError("non-positive update denominator; mass corrupted")
    if y == 0:
        w0 = q / den
        w1 = p / den
    else:
        w0 = p / den
        w1 = q / den
    for a in range(m + 1):
        s = order[a]
        r = rho[s] * w0
        if r < TINY:
            r = TINY
        rho[s] = r
        ops += 1
    s = order[m + 1]
    wn = w[s] * w1
    if wn < TINY:
        wn = TINY
    w[s] = wn
    a = 0
    b = m + 1
    out_len = 0
    while a <= m and b < npos:
        _materialize(rho, w, order, npos, b)
        ops += 1
        sb = order[b]
        sa = order[a]
        if rho[sb] > rho[sa]:
            scratch[out_len] = sb
            b += 1
        else:
            scratch[out_len] = sa
            a += 1
        out_len += 1
    while a <= m:
        scratch[out_len] = order[a]
        a += 1
        out_len += 1
    # elements past b are already in place; out_len == b here when S0 drained
    memcpy(order, scratch, out_len * sizeof(long long))
    return ops


def run_trial_kernel(ch, double[::1] rho0, counts0, long long k, double p,
                     double q, double c2, double eps_u, long long n0,
                     long long loc_h, object loc_n, double gamma,
                     long long cap, bint validate, long long tau0):
    """Run communication + confirmation on pre-initialized type groups.

    Returns (tau, top_h, top_start, ops_partition, ops_update, fallbacks,
    sead_violations, partitions).  The caller transmits the systematic bits,
    builds the initial posteriors, and decodes (top_h, top_start) into a
    message.
    """
    cdef Py_ssize_t n_max = <Py_ssize_t>(k + 3 + cap)
    rho_a = np.empty(n_max, dtype=np.float64)
    w_a = np.empty(n_max, dtype=np.float64)
    cntf_a = np.empty(n_max, dtype=np.float64)
    ht_a = np.empty(n_max, dtype=np.int64)
    order_a = np.empty(n_max, dtype=np.int64)
    scratch_a = np.empty(n_max, dtype=np.int64)
    cdef double[::1] rho_v = rho_a
    cdef double[::1] w_v = w_a
    cdef double[::1] cntf_v = cntf_a
    cdef long long[::1] ht_v = ht_a
    cdef long long[::1] order_v = order_a
    cdef long long[::1] scratch_v = scratch_a
    cdef double* rho = &rho_v[0]
    cdef double* w = &w_v[0]
    cdef double* cntf = &cntf_v[0]
    cdef long long* htype = &ht_v[0]
    cdef long long* order = &order_v[0]
    cdef long long* scratch = &scratch_v[0]

    counts = list(counts0)
    starts = [0] * (k + 1)
    cdef Py_ssize_t npos = k + 1
    cdef Py_ssize_t i
    for i in range(npos):
        rho[i] = rho0[i]
        w[i] = 1.0
        cntf[i] = <double>float(counts[i])
        htype[i] = i
        order[i] = i

    cdef _Chan chan = _Chan(ch)
    cdef double qmp = q - p
    cdef long long tau = tau0
    cdef long long ops_p = 0
    cdef long long ops_u = 0
    cdef long long fallbacks = 0
    cdef long long sead_violations = 0
    cdef long long partitions = 0
    cdef long long loc_slot = loc_h
    one = 1

    cdef Py_ssize_t m
    cdef double p0, rho_m, top, u
    cdef long long top_slot, g_slot, t, visited, z, n_walk
    cdef int x, y, mant_e, s_exp, e, ei, f, f2, ei2
    # mantissas and prefix sums stay Python ints: shift amounts routinely
    # exceed 63 bits, so C integer shifts would be undefined behavior
    cdef double mant
    cdef bint shorten, sead_ok

    try:
        while True:
            _materialize(rho, w, order, npos, 0)
            top_slot = order[0]
            top = rho[top_slot]
            if top >= 0.5:
                # confirmation phase
                if counts[top_slot] != 1:
                    raise SpmTopError(
                        "non-singleton group at posterior >= 1/2; update bug")
                shorten = False
                if gamma > 0.0:
                    shorten = chan.next_u() < gamma
                u = log2(top / (1.0 - top))
                n_walk = n0
                if u + (n_walk - 1) * c2 >= eps_u:
                    n_walk -= 1
                if shorten:
                    n_walk -= 1
                x = 0 if top_slot == loc_slot else 1
                z = 0
                while 0 <= z < n_walk:
                    y = chan.transmit(x)
                    z += 1 - 2 * y
                    tau += 1
                if z == -1:
                    fallbacks += 1
                    ops_u += _update_merge(rho, w, order, scratch, npos, 0,
                                           top, 1, p, q, qmp)
                    continue
                break
            if tau >= cap:
                raise SpmTopError(
                    f"trial exceeded {cap} channel uses (k={k}, p={p}); "
                    "state is likely corrupted")

            # threshold scan and split index in exact dyadic arithmetic
            m = 0
            p0 = 0.0
            s_int = 0
            s_exp = -1
            visited = 1
            g_slot = order[0]
            while True:
                mant = frexp(rho[g_slot], &mant_e)
                mi = <long long>(mant * _MANT)
                ei = mant_e - 53
                cmi = counts[g_slot] * mi
                e = min(s_exp, ei)
                s_new = (s_int << (s_exp - e)) + (cmi << (ei - e))
                if s_new >= one << (-1 - e):
                    break
                s_int = s_new
                s_exp = e
                p0 += cntf[g_slot] * rho[g_slot]
                m += 1
                if m >= npos:
                    raise SpmTopError("posterior mass below 1/2; state corrupted")
                _materialize(rho, w, order, npos, m)
                g_slot = order[m]
                visited += 1
            rho_m = rho[g_slot]
            e = min(s_exp, -1)
            num = (one << (-1 - e)) - (s_int << (s_exp - e))
            if e >= ei:
                n_obj = -((-(num << (e - ei))) // mi)
            else:
                n_obj = -((-num) // (mi << (ei - e)))
            f = min(e, ei - 1)
            over = ((n_obj * mi) << (ei - f)) - (num << (e - f))
            if over > mi << (ei - 1 - f):
                n_obj -= 1
                over -= mi << (ei - f)
            if n_obj == 0:
                m -= 1
            elif n_obj < counts[g_slot]:
                t = len(counts)  # next free slot: one new slot per split
                counts.append(counts[g_slot] - n_obj)
                starts.append(starts[g_slot] + n_obj)
                counts[g_slot] = n_obj
                cntf[g_slot] = <double>float(n_obj)
                cntf[t] = <double>float(counts[t])
                rho[t] = rho_m
                w[t] = 1.0
                htype[t] = htype[g_slot]
                if loc_slot == g_slot and loc_n >= starts[t]:
                    loc_slot = t
                memmove(order + m + 2, order + m + 1,
                        (npos - m - 1) * sizeof(long long))
                order[m + 1] = t
                npos += 1
            p0 = p0 + (<double>float(n_obj)) * rho_m
            if m < 0 or m + 1 >= npos:
                raise SpmTopError("degenerate partition; state corrupted")
            partitions += 1
            ops_p += visited
            if validate:
                mant = frexp(rho[order[m]], &mant_e)
                mi2 = <long long>(mant * _MANT)
                ei2 = mant_e - 53
                f2 = min(f, ei2)
                sead_ok = abs(over) << (f - f2 + 1) <= mi2 << (ei2 - f2)
                if not sead_ok:
                    sead_violations += 1

            x = 1
            for i in range(m + 1):
                if order[i] == loc_slot:
                    x = 0
                    break
            y = chan.transmit(x)
            tau += 1
            ops_u += _update_merge(rho, w, order, scratch, npos, m,
                                   p0, y, p, q, qmp)
    finally:
        chan.flush()

    top_slot = order[0]
    return (tau, htype[top_slot], starts[top_slot], ops_p, ops_u,
            fallbacks, sead_violations, partitions)
