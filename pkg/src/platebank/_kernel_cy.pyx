# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rollout kernel.

A verbatim re-implementation of the pure-Python engine's day loop: same
splitmix64 substreams, same samplers, same order of floating-point
operations, so results are bit-identical to the reference backend
(tests/test_backend_equiv.py enforces this).  The loop releases the GIL, so
batches can be spread over threads.
"""

from libc.math cimport exp
from libc.stdint cimport int64_t, uint64_t

cdef enum:
    MAXM = 64

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15

# purpose codes; must match streams.py
cdef int ARRIVAL_AGES = 0
cdef int DEMAND_AM = 1
cdef int DEMAND_PM = 2
cdef int REQUEST_LABEL = 3
cdef int REQUEST_PRED = 4
cdef int EMERGENCY_AGE = 5
cdef int SLIPPAGE = 6


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline uint64_t chain(uint64_t state, uint64_t component) nogil:
    return mix64(state ^ (component * GOLDEN + 1))


cdef inline double next_u(uint64_t* state) nogil:
    state[0] = state[0] + GOLDEN
    return <double>(mix64(state[0]) >> 11) * (1.0 / 9007199254740992.0)


cdef inline int64_t poisson_draw(uint64_t* state, double lam) nogil:
    cdef double u = next_u(state)
    cdef double p = exp(-lam)
    cdef double f = p
    cdef int64_t k = 0
    while u > f and k < 100000:
        k += 1
        p *= lam / k
        f += p
    return k


cdef inline int cat_draw(uint64_t* state, const double* cdf, int m) nogil:
    cdef double u = next_u(state)
    cdef int i
    for i in range(m):
        if u < cdf[i]:
            return i
    return m - 1


cdef void one_rollout(const double* mu_half, const double* cdf7,
                      double rho, double phi,
                      double cf, double cv, double ch, double cs, double cw,
                      double gamma, int m, int64_t a_max,
                      int rep_kind, int64_t q,
                      const int64_t* s_small, const int64_t* s_big, bint violated,
                      int mode, double alpha, double beta,
                      int64_t horizon, int64_t warmup,
                      int64_t rollout_index, uint64_t master_seed,
                      double* row) nogil:
    cdef int64_t stock[MAXM]
    cdef int64_t pending[MAXM]
    cdef int64_t u_today[MAXM]
    cdef int i, tau, idx
    cdef int64_t t, a, j, k, req, d_am, d_pm, pj, nslip, life
    cdef int64_t x_total = 0, e_day, z0, slip, expired, ret_day
    cdef bint label, pred
    cdef double u, reward
    cdef uint64_t prefix, day_prefix, label_prefix, pred_prefix, emerg_prefix, st
    cdef const double* cdf_tau

    cdef double reward_sum = 0.0
    cdef int64_t sc_demand = 0, sc_emerg = 0, sc_recv = 0, sc_expiry = 0
    cdef int64_t sc_slip = 0, sc_z0 = 0, sc_order = 0, sc_ret = 0, sc_days = 0
    cdef int64_t lt_demand = 0, lt_emerg = 0, lt_recv = 0, lt_expiry = 0
    cdef int64_t lt_slip = 0, lt_z0 = 0, lt_ret = 0, final_pending = 0

    for i in range(m):
        stock[i] = 0
        pending[i] = 0

    prefix = chain(mix64(master_seed), <uint64_t>rollout_index)

    for t in range(horizon):
        tau = <int>(t % 7)
        cdf_tau = cdf7 + tau * m
        day_prefix = chain(prefix, <uint64_t>t)

        # stage 1: order and same-day arrivals
        if rep_kind == 0:
            a = q
        elif violated:
            a = 0
        elif x_total <= s_small[tau]:
            a = s_big[tau] - x_total
            if a < 0:
                a = 0
        else:
            a = 0
        if a > a_max:
            a = a_max
        if a > 0:
            st = chain(chain(day_prefix, <uint64_t>ARRIVAL_AGES), 0)
            for j in range(a):
                stock[cat_draw(&st, cdf_tau, m)] += 1
            x_total += a

        for i in range(m):
            u_today[i] = 0
        e_day = 0
        ret_day = 0
        label_prefix = chain(day_prefix, <uint64_t>REQUEST_LABEL)
        pred_prefix = chain(day_prefix, <uint64_t>REQUEST_PRED)
        emerg_prefix = chain(day_prefix, <uint64_t>EMERGENCY_AGE)

        # stage 2: morning demand
        st = chain(chain(day_prefix, <uint64_t>DEMAND_AM), 0)
        d_am = poisson_draw(&st, mu_half[tau])
        for k in range(d_am):
            req = k
            st = chain(label_prefix, <uint64_t>req)
            label = next_u(&st) < rho
            if label:
                ret_day += 1
            if x_total > 0:
                if mode == 2:
                    st = chain(pred_prefix, <uint64_t>req)
                    u = next_u(&st)
                    if label:
                        pred = u < alpha
                    else:
                        pred = u > beta
                elif mode == 0:
                    pred = 0
                else:
                    pred = 1
                if pred:
                    for i in range(m):
                        if stock[i] > 0:
                            idx = i
                            break
                else:
                    for i in range(m - 1, -1, -1):
                        if stock[i] > 0:
                            idx = i
                            break
                stock[idx] -= 1
                x_total -= 1
                if label:
                    u_today[idx] += 1
            else:
                e_day += 1
                st = chain(emerg_prefix, <uint64_t>req)
                idx = cat_draw(&st, cdf_tau, m)
                if label:
                    u_today[idx] += 1

        # stage 3: midday returns
        z0 = pending[m - 1]
        slip = 0
        for life in range(1, m):
            pj = pending[m - 1 - life]
            if pj > 0:
                st = chain(chain(day_prefix, <uint64_t>SLIPPAGE), <uint64_t>life)
                nslip = 0
                for j in range(pj):
                    if next_u(&st) < phi:
                        nslip += 1
                stock[m - life] += pj - nslip
                x_total += pj - nslip
                slip += nslip

        # stage 4: afternoon demand
        st = chain(chain(day_prefix, <uint64_t>DEMAND_PM), 0)
        d_pm = poisson_draw(&st, mu_half[tau])
        for k in range(d_pm):
            req = d_am + k
            st = chain(label_prefix, <uint64_t>req)
            label = next_u(&st) < rho
            if label:
                ret_day += 1
            if x_total > 0:
                if mode == 2:
                    st = chain(pred_prefix, <uint64_t>req)
                    u = next_u(&st)
                    if label:
                        pred = u < alpha
                    else:
                        pred = u > beta
                elif mode == 0:
                    pred = 0
                else:
                    pred = 1
                if pred:
                    for i in range(m):
                        if stock[i] > 0:
                            idx = i
                            break
                else:
                    for i in range(m - 1, -1, -1):
                        if stock[i] > 0:
                            idx = i
                            break
                stock[idx] -= 1
                x_total -= 1
                if label:
                    u_today[idx] += 1
            else:
                e_day += 1
                st = chain(emerg_prefix, <uint64_t>req)
                idx = cat_draw(&st, cdf_tau, m)
                if label:
                    u_today[idx] += 1

        # stage 5: age stock
        expired = stock[m - 1]
        for i in range(m - 1, 0, -1):
            stock[i] = stock[i - 1]
        stock[0] = 0
        x_total -= expired

        # stage 6: reward, state update
        reward = 0.0
        if a > 0:
            reward -= cf
        reward -= cv * a
        reward -= ch * x_total
        reward -= cs * e_day
        reward -= cw * ((expired + slip) + z0 / gamma)
        for i in range(m):
            pending[i] = u_today[i]

        lt_demand += d_am + d_pm
        lt_emerg += e_day
        lt_recv += a
        lt_expiry += expired
        lt_slip += slip
        lt_z0 += z0
        lt_ret += ret_day
        if t >= warmup:
            reward_sum += reward
            sc_demand += d_am + d_pm
            sc_emerg += e_day
            sc_recv += a
            sc_expiry += expired
            sc_slip += slip
            sc_z0 += z0
            sc_order += a
            sc_ret += ret_day
            sc_days += 1

    for i in range(m):
        final_pending += pending[i]

    row[0] = reward_sum
    row[1] = <double>sc_demand
    row[2] = <double>sc_emerg
    row[3] = <double>sc_recv
    row[4] = <double>sc_expiry
    row[5] = <double>sc_slip
    row[6] = <double>sc_z0
    row[7] = <double>sc_order
    row[8] = <double>sc_ret
    row[9] = <double>sc_days
    row[10] = <double>lt_demand
    row[11] = <double>lt_emerg
    row[12] = <double>lt_recv
    row[13] = <double>lt_expiry
    row[14] = <double>lt_slip
    row[15] = <double>lt_z0
    row[16] = <double>lt_ret
    row[17] = <double>x_total
    row[18] = <double>final_pending


def run_rollouts(double[::1] mu_half, double[:, ::1] cdf7,
                 double rho, double phi,
                 double cf, double cv, double ch, double cs, double cw,
                 double gamma, int m, int64_t a_max,
                 int rep_kind, int64_t q,
                 int64_t[::1] s_small, int64_t[::1] s_big, bint violated,
                 int mode, double alpha, double beta,
                 int64_t horizon, int64_t warmup,
                 int64_t[::1] indices, uint64_t master_seed,
                 double[:, ::1] out):
    """Fill `out[r]` with the result row of rollout `indices[r]`."""
    if m < 1 or m > MAXM:
        raise ValueError(f"max_life must be within [1, {MAXM}]")
    if out.shape[0] != indices.shape[0] or out.shape[1] != 19:
        raise ValueError("output array shape mismatch")
    if cdf7.shape[0] != 7 or cdf7.shape[1] != m or mu_half.shape[0] != 7:
        raise ValueError("scenario array shape mismatch")
    cdef Py_ssize_t r
    cdef Py_ssize_t n = indices.shape[0]
    with nogil:
        for r in range(n):
            one_rollout(&mu_half[0], &cdf7[0, 0], rho, phi,
                        cf, cv, ch, cs, cw, gamma, m, a_max,
                        rep_kind, q, &s_small[0], &s_big[0], violated,
                        mode, alpha, beta, horizon, warmup,
                        indices[r], master_seed, &out[r, 0])
