# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled slot-loop kernel.

Statement-for-statement transcription of _kernel_py.simulate_slots; both
use the same libm calls and evaluation order (the build disables FMA
contraction), so outputs are bit-identical. Any change there must be
mirrored here.
"""

import numpy as np

from libc.math cimport expm1, floor, log1p, rint

COMPILED = True

cdef double _LN2 = 0.6931471805599453

cdef int POL_TO = 0
cdef int POL_GREEDY = 1
cdef int POL_MTO = 2
cdef int POL_UNBUFFERED = 3
cdef int POL_FADING_TO_LINEAR = 5
cdef int POL_WF = 6
cdef int POL_MWF = 7
cdef int POL_CONST_POWER = 8
cdef int POL_MDP = 9

cdef int RF_LINEAR = 0
cdef int RF_LOGE = 1
cdef int RF_LOG2 = 2
cdef int RF_SHANNON_HALF = 3


cdef inline double _g(int rf_code, double rf_coef, double v) nogil:
    if rf_code == RF_LINEAR:
        return rf_coef * v
    elif rf_code == RF_LOGE:
        return log1p(rf_coef * v)
    elif rf_code == RF_LOG2:
        return log1p(rf_coef * v) / _LN2
    return 0.5 * log1p(rf_coef * v)


cdef inline double _finv(int rf_code, double rf_coef, double r) nogil:
    # Saturates far above any buffer so min() with e stays well-defined
    # when the backlog is enormous.
    cdef double a
    if rf_code == RF_LINEAR:
        return r / rf_coef
    if rf_code == RF_LOGE:
        a = r
    elif rf_code == RF_LOG2:
        a = r * _LN2
    else:
        a = 2.0 * r
    if a > 700.0:
        return 1e300
    return expm1(a) / rf_coef


def simulate_slots(
    x,
    y,
    z,
    h,
    double q0,
    double e0,
    int policy_code,
    double pp0,
    double pp1,
    double pp2,
    double pp3,
    int rf_code,
    double rf_coef,
    double energy_cap,
    double data_cap,
    double quantize_step,
    long warmup,
    long trace_stride,
    mdp_actions,
    double mdp_step_q,
    double mdp_step_e,
    int track_hits,
    double hit_q,
    double hit_e,
    double hit_tol,
):
    """See _kernel_py.simulate_slots; identical contract and results."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef bint has_z = z is not None
    cdef bint has_h = h is not None
    cdef double[::1] zv = (
        np.ascontiguousarray(z, dtype=np.float64)
        if has_z
        else np.empty(0, dtype=np.float64)
    )
    cdef double[::1] hv = (
        np.ascontiguousarray(h, dtype=np.float64)
        if has_h
        else np.empty(0, dtype=np.float64)
    )
    cdef double[:, ::1] acts
    cdef long nq_t = 0, ne_t = 0
    if policy_code == POL_MDP:
        acts = np.ascontiguousarray(mdp_actions, dtype=np.float64)
        nq_t = acts.shape[0]
        ne_t = acts.shape[1]
    else:
        acts = np.empty((1, 1), dtype=np.float64)

    cdef long n = xv.shape[0]
    cdef long trace_len = (n + trace_stride - 1) // trace_stride
    trace_q_arr = np.empty(trace_len, dtype=np.float64)
    trace_e_arr = np.empty(trace_len, dtype=np.float64)
    hits_arr = np.empty(n if track_hits else 0, dtype=np.int64)
    cdef double[::1] trace_q = trace_q_arr
    cdef double[::1] trace_e = trace_e_arr
    cdef long[::1] hits = hits_arr
    cdef long nhit = 0
    cdef long j = 0

    cdef double q = q0
    cdef double e = e0
    cdef double y_prev = 0.0
    cdef double min_q = q, min_e = e, max_q = q, max_e = e

    cdef double sum_q_post = 0.0
    cdef long n_post = 0
    cdef double sum_t_post = 0.0
    cdef double waste_post = 0.0
    cdef double served_post = 0.0
    cdef double arrived_post = 0.0
    cdef double dropped_post = 0.0
    cdef long outage_post = 0
    cdef double sum_t_all = 0.0
    cdef double served_all = 0.0
    cdef double arrived_all = 0.0
    cdef double dropped_all = 0.0
    cdef double z_paid_all = 0.0
    cdef double overflow_all = 0.0
    cdef double sum_y_all = 0.0

    cdef long k, iq, ie
    cdef bint post, outage
    cdef double hk, zk, gate, e_av, t, boost, cap, fq, v, srv, served, qa
    cdef double needed, w, xk, qn, drop, yk, en, dq, de

    for k in range(n):
        if k % trace_stride == 0:
            trace_q[j] = q
            trace_e[j] = e
            j += 1
        post = k >= warmup
        if post:
            sum_q_post += q
            n_post += 1

        hk = hv[k] if has_h else 1.0

        outage = False
        e_av = e
        if has_z:
            zk = zv[k]
            gate = zk
            if policy_code == POL_CONST_POWER and zk > 0.0:
                gate = zk + pp0
            if e < gate:
                outage = True
            else:
                e_av = e - zk
                z_paid_all += zk

        if outage:
            t = 0.0
        elif policy_code == POL_TO:
            t = pp0
        elif policy_code == POL_GREEDY:
            t = _finv(rf_code, rf_coef, q)
        elif policy_code == POL_MTO:
            boost = e_av - pp1 * q
            if boost < 0.0:
                boost = 0.0
            cap = pp2 * (pp0 + pp3 * boost)
            t = _finv(rf_code, rf_coef, q)
            if cap < t:
                t = cap
        elif policy_code == POL_UNBUFFERED:
            t = y_prev
        elif policy_code == POL_FADING_TO_LINEAR:
            t = pp0 if hk >= pp1 - 1e-12 else 0.0
        elif policy_code == POL_WF:
            if hk > 0.0:
                t = 1.0 / pp0 - 1.0 / hk
                if t < 0.0:
                    t = 0.0
            else:
                t = 0.0
        elif policy_code == POL_MWF:
            if hk > 0.0:
                boost = e_av - pp1 * q
                if boost < 0.0:
                    boost = 0.0
                t = 1.0 / pp0 - 1.0 / hk + pp3 * boost
                if t < 0.0:
                    t = 0.0
                fq = _finv(rf_code, rf_coef, q)
                if fq < t:
                    t = fq
            else:
                t = 0.0
        elif policy_code == POL_CONST_POWER:
            t = pp0
        else:
            iq = <long>rint(q / mdp_step_q)
            if iq < 0:
                iq = 0
            elif iq >= nq_t:
                iq = nq_t - 1
            ie = <long>floor(e_av / mdp_step_e + 1e-9)
            if ie < 0:
                ie = 0
            elif ie >= ne_t:
                ie = ne_t - 1
            t = acts[iq, ie]

        if t < 0.0:
            t = 0.0
        if t > e_av:
            t = e_av

        v = hk * t
        srv = _g(rf_code, rf_coef, v)
        served = q if q < srv else srv
        qa = q - srv
        if qa < 0.0:
            qa = 0.0
        if quantize_step > 0.0:
            qa = rint(qa / quantize_step) * quantize_step

        sum_t_all += t
        served_all += served
        if post:
            sum_t_post += t
            served_post += served
            needed = 0.0
            if served > 0.0 and hk > 0.0:
                needed = _finv(rf_code, rf_coef, served) / hk
            w = t - needed
            if w > 0.0:
                waste_post += w
            if outage:
                outage_post += 1

        xk = 0.0 if outage else xv[k]
        arrived_all += xk
        if post:
            arrived_post += xk
        qn = qa + xk
        if qn > data_cap:
            drop = qn - data_cap
            dropped_all += drop
            if post:
                dropped_post += drop
            qn = data_cap

        yk = yv[k]
        sum_y_all += yk
        en = e_av - t + yk
        if en > energy_cap:
            overflow_all += en - energy_cap
            en = energy_cap

        q = qn
        e = en
        y_prev = yk
        if q < min_q:
            min_q = q
        if q > max_q:
            max_q = q
        if e < min_e:
            min_e = e
        if e > max_e:
            max_e = e
        if track_hits:
            dq = q - hit_q
            if dq < 0.0:
                dq = -dq
            de = e - hit_e
            if de < 0.0:
                de = -de
            if dq <= 1e-9 and de <= hit_tol:
                hits[nhit] = k + 1
                nhit += 1

    stats = {
        "sum_q_post": sum_q_post,
        "n_post": float(n_post),
        "sum_t_post": sum_t_post,
        "waste_post": waste_post,
        "served_post": served_post,
        "arrived_post": arrived_post,
        "dropped_post": dropped_post,
        "outage_post": float(outage_post),
        "sum_t_all": sum_t_all,
        "served_all": served_all,
        "arrived_all": arrived_all,
        "dropped_all": dropped_all,
        "z_paid_all": z_paid_all,
        "overflow_all": overflow_all,
        "sum_y_all": sum_y_all,
        "final_q": q,
        "final_e": e,
        "min_q": min_q,
        "min_e": min_e,
        "max_q": max_q,
        "max_e": max_e,
    }
    return stats, trace_q_arr, trace_e_arr, hits_arr[:nhit]
