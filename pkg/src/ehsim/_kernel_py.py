"""Pure-Python slot-loop kernel (fallback when the compiled core is absent).

The compiled twin (_kernel.pyx) transcribes this loop statement for
statement; both use the same libm calls and evaluation order, so their
outputs are bit-identical. Any change here must be mirrored there.
"""

from __future__ import annotations

import math

import numpy as np

COMPILED = False

_LN2 = 0.6931471805599453

# Policy codes. UNFADED_TO shares the TO code at pack time.
POL_TO = 0
POL_GREEDY = 1
POL_MTO = 2
POL_UNBUFFERED = 3
POL_FADING_TO_LINEAR = 5
POL_WF = 6
POL_MWF = 7
POL_CONST_POWER = 8
POL_MDP = 9

# Rate-function codes.
RF_LINEAR = 0
RF_LOGE = 1
RF_LOG2 = 2
RF_SHANNON_HALF = 3


def simulate_slots(
    x,
    y,
    z,
    h,
    q0,
    e0,
    policy_code,
    pp0,
    pp1,
    pp2,
    pp3,
    rf_code,
    rf_coef,
    energy_cap,
    data_cap,
    quantize_step,
    warmup,
    trace_stride,
    mdp_actions,
    mdp_step_q,
    mdp_step_e,
    track_hits,
    hit_q,
    hit_e,
    hit_tol,
):
    """Run n slots; returns (stats dict, trace_q, trace_e, hit_slots).

    Slot order: observe (q, e, h) -> pay sensing cost (outage skips the
    slot when the buffer cannot cover z, or z plus the constant transmit
    budget under CONST_POWER) -> decide T -> serve g(h*T) bits -> add
    arrivals (suppressed on outage) -> add harvest; buffers clip at their
    caps with overflow accounted.
    Traces record the pre-slot state every trace_stride slots; post-warmup
    sums skip slots k < warmup.
    """
    n = len(x)
    has_z = z is not None
    has_h = h is not None
    xs = x.tolist() if isinstance(x, np.ndarray) else list(x)
    ys = y.tolist() if isinstance(y, np.ndarray) else list(y)
    zs = z.tolist() if has_z and isinstance(z, np.ndarray) else z
    hs = h.tolist() if has_h and isinstance(h, np.ndarray) else h
    acts = None
    nq_t = ne_t = 0
    if policy_code == POL_MDP:
        acts = [row.tolist() for row in np.asarray(mdp_actions)]
        nq_t = len(acts)
        ne_t = len(acts[0])

    trace_len = (n + trace_stride - 1) // trace_stride
    trace_q = np.empty(trace_len, dtype=np.float64)
    trace_e = np.empty(trace_len, dtype=np.float64)
    hits = np.empty(n if track_hits else 0, dtype=np.int64)
    nhit = 0
    j = 0

    q = float(q0)
    e = float(e0)
    y_prev = 0.0
    min_q = q
    min_e = e
    max_q = q
    max_e = e

    sum_q_post = 0.0
    n_post = 0
    sum_t_post = 0.0
    waste_post = 0.0
    served_post = 0.0
    arrived_post = 0.0
    dropped_post = 0.0
    outage_post = 0
    sum_t_all = 0.0
    served_all = 0.0
    arrived_all = 0.0
    dropped_all = 0.0
    z_paid_all = 0.0
    overflow_all = 0.0
    sum_y_all = 0.0

    log1p = math.log1p
    expm1 = math.expm1

    for k in range(n):
        if k % trace_stride == 0:
            trace_q[j] = q
            trace_e[j] = e
            j += 1
        post = k >= warmup
        if post:
            sum_q_post += q
            n_post += 1

        hk = hs[k] if has_h else 1.0

        # Sensing: the slot's duty cycle needs z_k (plus the full constant
        # transmit budget for CONST_POWER). A buffer that cannot cover it
        # is an outage slot: the node skips the slot entirely (no sensing,
        # no packet, no transmission, nothing spent).
        outage = False
        e_av = e
        if has_z:
            zk = zs[k]
            need = zk
            if policy_code == POL_CONST_POWER and zk > 0.0:
                need = zk + pp0
            if e < need:
                outage = True
            else:
                e_av = e - zk
                z_paid_all += zk

        # Decide T from the observed (q, e_av, hk, y_prev).
        if outage:
            t = 0.0
        elif policy_code == POL_TO:
            t = pp0
        elif policy_code == POL_GREEDY:
            if rf_code == RF_LINEAR:
                t = q / rf_coef
            else:
                if rf_code == RF_LOGE:
                    a = q
                elif rf_code == RF_LOG2:
                    a = q * _LN2
                else:
                    a = 2.0 * q
                # Saturate far above any buffer so min() with e stays
                # well-defined when the backlog is enormous.
                t = 1e300 if a > 700.0 else expm1(a) / rf_coef
        elif policy_code == POL_MTO:
            boost = e_av - pp1 * q
            if boost < 0.0:
                boost = 0.0
            cap = pp2 * (pp0 + pp3 * boost)
            if rf_code == RF_LINEAR:
                t = q / rf_coef
            else:
                if rf_code == RF_LOGE:
                    a = q
                elif rf_code == RF_LOG2:
                    a = q * _LN2
                else:
                    a = 2.0 * q
                t = 1e300 if a > 700.0 else expm1(a) / rf_coef
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
                if rf_code == RF_LINEAR:
                    fq = q / rf_coef
                else:
                    if rf_code == RF_LOGE:
                        a = q
                    elif rf_code == RF_LOG2:
                        a = q * _LN2
                    else:
                        a = 2.0 * q
                    fq = 1e300 if a > 700.0 else expm1(a) / rf_coef
                if fq < t:
                    t = fq
            else:
                t = 0.0
        elif policy_code == POL_CONST_POWER:
            t = pp0
        else:  # POL_MDP
            iq = int(round(q / mdp_step_q))
            if iq < 0:
                iq = 0
            elif iq >= nq_t:
                iq = nq_t - 1
            ie = int(math.floor(e_av / mdp_step_e + 1e-9))
            if ie < 0:
                ie = 0
            elif ie >= ne_t:
                ie = ne_t - 1
            t = acts[iq][ie]

        if t < 0.0:
            t = 0.0
        if t > e_av:
            t = e_av

        # Serve g(h*t) bits.
        v = hk * t
        if rf_code == RF_LINEAR:
            srv = rf_coef * v
        elif rf_code == RF_LOGE:
            srv = log1p(rf_coef * v)
        elif rf_code == RF_LOG2:
            srv = log1p(rf_coef * v) / _LN2
        else:
            srv = 0.5 * log1p(rf_coef * v)
        served = q if q < srv else srv
        qa = q - srv
        if qa < 0.0:
            qa = 0.0
        if quantize_step > 0.0:
            qa = float(round(qa / quantize_step)) * quantize_step

        sum_t_all += t
        served_all += served
        if post:
            sum_t_post += t
            served_post += served
            needed = 0.0
            if served > 0.0 and hk > 0.0:
                if rf_code == RF_LINEAR:
                    needed = served / rf_coef / hk
                else:
                    if rf_code == RF_LOGE:
                        a = served
                    elif rf_code == RF_LOG2:
                        a = served * _LN2
                    else:
                        a = 2.0 * served
                    needed = (
                        1e300 if a > 700.0 else expm1(a) / rf_coef
                    ) / hk
            w = t - needed
            if w > 0.0:
                waste_post += w
            if outage:
                outage_post += 1

        # Arrivals (the sensed packet never forms on an outage slot).
        xk = 0.0 if outage else xs[k]
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

        # Harvest.
        yk = ys[k]
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
    return stats, trace_q, trace_e, hits[:nhit]
