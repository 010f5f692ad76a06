"""Compiled inner loop: electrical integration, PWM, fault overlay and the
fast short-circuit detector, advanced over a block of electrical steps.

Everything here works on flat numpy arrays so numba can compile it.  The
engine calls :func:`advance` once per control tick (and again after a fast
trip interrupts a block).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .circuit import carrier, emf, leg_reference
from .detection import hp_step
from .faults import effective_leg

# Scalar plant/solver parameters packed into one float64 vector.
P_DT, P_VSRC, P_RSRC, P_CDC, P_ESR, P_RON, P_RLOAD, P_LLOAD, P_EMF, P_FREQ, P_RBLEED, P_FPWM, \
    P_RACTIVE, P_ALPHA, P_THRESH, P_SIGV, P_SIGI, P_ESW = range(18)
N_PARAMS = 18

# Integer controls.
C_SOURCE_ON, C_ACTIVE_ON, C_SAMPLE_EVERY, C_CONFIRM, C_NEG_POLARITY, C_ARMED, C_NOISE, C_SEED = range(8)
N_CONTROLS = 8

# Fault codes.
F_HIGH_SHORT, F_LOW_SHORT, F_OPEN, F_INJECT, F_SURGE, F_RLOAD_DIV, F_SPOOF_V, F_SPOOF_I = range(8)

# Mutable scalar state.
S_VDC, S_HP_X, S_HP_Y, S_HP_SEEDED, S_COUNT, S_TRIPPED = range(6)
N_STATE = 6

# Accumulators (reset by the engine every control tick unless noted).
# A_CMD_ST counts steps where the controller itself commanded BothOn on a leg.
# A_V_LAST holds the latest instantaneous measured link voltage.
A_E_SRC, A_E_DISS, A_E_EMF, A_E_BLEED, A_E_ACTIVE, A_V_MEAS, A_AC_PEAK, A_CMD_ST, A_V_LAST = range(9)
N_ACC = 9

# Outcome vector.
O_K_STOP, O_TRIP_K, O_TRIP_LEG, O_TRIP_SWITCH, O_DIVERGED = range(5)


@njit(cache=True)
def splitmix64(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    z = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def uniform01(seed, counter):
    z = splitmix64(np.uint64(seed) ^ splitmix64(np.uint64(counter)))
    return (float(z >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def gauss(seed, counter):
    """Standard normal draw that depends only on ``(seed, counter)``."""
    u1 = uniform01(seed, 2 * counter)
    u2 = uniform01(seed, 2 * counter + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def advance(k0, k1, n, pp, ctl, refs, override, iso_mask,
            f_code, f_leg, f_value, f_k0, f_k1,
            i, st, acc, i2_acc, sw_e, last_leg,
            w_k0, w_k1, w_off, rec, out):
    dt = pp[P_DT]
    l_load = pp[P_LLOAD]
    r_on = pp[P_RON]
    c_dc = pp[P_CDC]
    r_st = 2.0 * r_on + pp[P_ESR]
    seed = ctl[C_SEED]
    n_faults = f_code.shape[0]

    cmd = np.empty(n, dtype=np.int64)
    eff = np.empty(n, dtype=np.int64)
    forced = np.empty(n, dtype=np.int64)
    open_leg = np.empty(n, dtype=np.bool_)
    hi_short = np.empty(n, dtype=np.bool_)
    lo_short = np.empty(n, dtype=np.bool_)
    b = np.empty(n)
    e = np.empty(n)
    i_new = np.empty(n)
    spoof_i = np.empty(n)
    kind = np.empty(n, dtype=np.int64)  # 0 conducting, 1 open, 2 isolated, 3 diode

    out[O_TRIP_K] = -1
    out[O_TRIP_LEG] = -1
    out[O_TRIP_SWITCH] = 0
    out[O_DIVERGED] = 0

    k = k0
    while k < k1:
        t = k * dt
        # fault overlay for this step
        v_src = pp[P_VSRC]
        r_load = pp[P_RLOAD]
        spoof_v = 0.0
        for j in range(n):
            forced[j] = -1
            open_leg[j] = False
            hi_short[j] = False
            lo_short[j] = False
            spoof_i[j] = 0.0
        for f in range(n_faults):
            if f_k0[f] <= k < f_k1[f]:
                c = f_code[f]
                if c == F_HIGH_SHORT:
                    hi_short[f_leg[f]] = True
                elif c == F_LOW_SHORT:
                    lo_short[f_leg[f]] = True
                elif c == F_OPEN:
                    open_leg[f_leg[f]] = True
                elif c == F_INJECT:
                    forced[f_leg[f]] = int(f_value[f])
                elif c == F_SURGE:
                    v_src += f_value[f]
                elif c == F_RLOAD_DIV:
                    r_load /= f_value[f]
                elif c == F_SPOOF_V:
                    spoof_v += f_value[f]
                elif c == F_SPOOF_I:
                    spoof_i[f_leg[f]] += f_value[f]

        # commanded and effective leg states
        crr = carrier(t, pp[P_FPWM])
        for j in range(n):
            if override[j] >= 0:
                cmd[j] = override[j]
            else:
                cmd[j] = 1 if leg_reference(t, j, n, refs[j], pp[P_FREQ]) > crr else 0
            if cmd[j] == 3:
                acc[A_CMD_ST] += 1.0
            eff[j] = effective_leg(cmd[j], forced[j], open_leg[j], hi_short[j], lo_short[j])
            e[j] = emf(t, j, n, pp[P_EMF], pp[P_FREQ])
            if iso_mask[j] and eff[j] == override[j]:
                kind[j] = 2
            elif eff[j] == 2:
                # open leg: freewheels through the body diode picked by the
                # current sign until the current reaches zero
                if i[j] > 0.0:
                    kind[j] = 3
                    b[j] = 0.0
                elif i[j] < 0.0:
                    kind[j] = 3
                    b[j] = 1.0
                else:
                    kind[j] = 1
            else:
                kind[j] = 0
                b[j] = 1.0 if eff[j] == 1 else (0.5 if eff[j] == 3 else 0.0)

        v = st[S_VDC]
        r_ph = r_load + r_on
        # star point from the legs tied to it; a diode leg whose current
        # would reverse is extinguished and the star point is solved again
        # (phase currents sum to zero, so the star legs carry the negative of
        # whatever flows in the isolated windings)
        decay = 1.0 + dt * r_ph / l_load
        for _ in range(n + 1):
            n_cond = 0
            v_n = 0.0
            i_star = 0.0
            i_off = 0.0
            for j in range(n):
                if kind[j] == 0 or kind[j] == 3:
                    n_cond += 1
                    v_n += b[j] * v - e[j]
                    i_star += i[j]
                elif kind[j] == 2:
                    i_off += i[j] / decay
            if n_cond > 0:
                v_n = (v_n + l_load / dt * (i_star + decay * i_off)) / n_cond
            extinguished = False
            for j in range(n):
                if kind[j] == 3:
                    i_try = (i[j] + dt / l_load * (b[j] * v - v_n - e[j])) / decay
                    if i_try * i[j] <= 0.0:
                        kind[j] = 1
                        extinguished = True
            if not extinguished:
                break

        i_inv = 0.0
        n_short = 0
        p_res = 0.0
        p_emf = 0.0
        for j in range(n):
            if kind[j] == 0 or kind[j] == 3:
                i_new[j] = (i[j] + dt / l_load * (b[j] * v - v_n - e[j])) / decay
                i_inv += b[j] * i_new[j]
                p_res += r_ph * i_new[j] * i_new[j]
                p_emf += e[j] * i_new[j]
                if eff[j] == 3:
                    n_short += 1
            elif kind[j] == 1:
                i_new[j] = 0.0
            else:
                i_new[j] = i[j] / decay
                p_res += r_ph * i_new[j] * i_new[j]

        g_s = 1.0 / pp[P_RSRC] if ctl[C_SOURCE_ON] else 0.0
        g_a = 1.0 / pp[P_RACTIVE] if ctl[C_ACTIVE_ON] else 0.0
        g_b = 1.0 / pp[P_RBLEED]
        g_st = n_short / r_st
        v_new = (v + dt / c_dc * (g_s * v_src - i_inv)) / (1.0 + dt / c_dc * (g_s + g_b + g_st + g_a))

        # energy bookkeeping on end-of-step values
        dv_src = v_src - v_new
        acc[A_E_SRC] += v_src * g_s * dv_src * dt
        acc[A_E_DISS] += (g_s * dv_src * dv_src + v_new * v_new * (g_b + g_st + g_a) + p_res) * dt
        acc[A_E_EMF] += p_emf * dt
        acc[A_E_BLEED] += v_new * v_new * g_b * dt
        acc[A_E_ACTIVE] += v_new * v_new * g_a * dt

        # per-switch conduction and switching energy [high_j, low_j]
        for j in range(n):
            ij = i_new[j]
            if eff[j] <= 1 and last_leg[j] <= 1 and eff[j] != last_leg[j] and last_leg[j] >= 0:
                sw_e[2 * j + (0 if eff[j] == 1 else 1)] += pp[P_ESW]
            last_leg[j] = eff[j]
            if kind[j] == 2:
                if override[j] == 1:
                    sw_e[2 * j] += r_on * ij * ij * dt
                else:
                    sw_e[2 * j + 1] += r_on * ij * ij * dt
            elif eff[j] == 1:
                sw_e[2 * j] += r_on * ij * ij * dt
            elif eff[j] == 0:
                sw_e[2 * j + 1] += r_on * ij * ij * dt
            elif kind[j] == 3:
                sw_e[2 * j + (0 if b[j] == 1.0 else 1)] += r_on * ij * ij * dt
            elif eff[j] == 3:
                i_st = v_new / r_st
                sw_e[2 * j] += r_on * (i_st + 0.5 * ij) ** 2 * dt
                sw_e[2 * j + 1] += r_on * (i_st - 0.5 * ij) ** 2 * dt

        # commit state
        st[S_VDC] = v_new
        finite = math.isfinite(v_new)
        for j in range(n):
            i[j] = i_new[j]
            if not math.isfinite(i_new[j]):
                finite = False
        if not finite:
            out[O_DIVERGED] = 1
            out[O_K_STOP] = k + 1
            return

        # measurement chain
        v_meas = v_new + spoof_v
        if ctl[C_NOISE]:
            v_meas += pp[P_SIGV] * gauss(seed, (k + 1) * (n + 1))
        acc[A_V_MEAS] += v_meas * dt
        acc[A_V_LAST] = v_meas
        for j in range(n):
            im = i_new[j] + spoof_i[j]
            if ctl[C_NOISE]:
                im += pp[P_SIGI] * gauss(seed, (k + 1) * (n + 1) + 1 + j)
            i2_acc[j] += im * im * dt

        ac = 0.0
        sampled = (k + 1) % ctl[C_SAMPLE_EVERY] == 0
        if sampled:
            if st[S_HP_SEEDED] == 0.0:
                st[S_HP_X] = v_meas
                st[S_HP_Y] = 0.0
                st[S_HP_SEEDED] = 1.0
            else:
                ac = hp_step(st[S_HP_X], st[S_HP_Y], v_meas, pp[P_ALPHA])
                st[S_HP_X] = v_meas
                st[S_HP_Y] = ac
            mag = -ac if ctl[C_NEG_POLARITY] else abs(ac)
            if mag > acc[A_AC_PEAK]:
                acc[A_AC_PEAK] = mag

        # full-resolution capture around fault events
        for w in range(w_k0.shape[0]):
            if w_k0[w] <= k < w_k1[w]:
                row = w_off[w] + (k - w_k0[w])
                rec[row, 0] = (k + 1) * dt
                rec[row, 1] = v_new
                rec[row, 2] = v_meas
                rec[row, 3] = st[S_HP_Y]
                for j in range(n):
                    rec[row, 4 + j] = i_new[j]
                    rec[row, 4 + n + j] = eff[j]

        if sampled and ctl[C_ARMED] and st[S_TRIPPED] == 0.0:
            mag = -ac if ctl[C_NEG_POLARITY] else abs(ac)
            if mag > pp[P_THRESH]:
                st[S_COUNT] += 1.0
            else:
                st[S_COUNT] = 0.0
            if st[S_COUNT] >= ctl[C_CONFIRM]:
                st[S_TRIPPED] = 1.0
                out[O_TRIP_K] = k + 1
                for j in range(n):
                    if eff[j] == 3:
                        out[O_TRIP_LEG] = j
                        # the switch conducting against its command is the faulty one
                        if cmd[j] == 1:
                            out[O_TRIP_SWITCH] = 2  # Low
                        elif cmd[j] == 0:
                            out[O_TRIP_SWITCH] = 1  # High
                        break
                out[O_K_STOP] = k + 1
                return
        k += 1
    out[O_K_STOP] = k
