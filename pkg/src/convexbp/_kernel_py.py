"""Pure-Python message-passing kernel.

This is the fallback twin of the compiled kernel in ``_kernel_cy.pyx``.
Both implement exactly the same arithmetic, statement for statement, so a
run is reproducible bit for bit regardless of which one is active:

  * log domain throughout; -inf encodes an exact zero potential/message
  * coefficient 0 times any log value is 0 (dropped term), a positive
    coefficient times -inf is -inf, a negative coefficient times -inf is
    an overflow (status 1)
  * messages are renormalized to max entry 0 after every update
  * the asynchronous schedule visits edges in a SplitMix64-seeded
    Fisher-Yates permutation, refreshed every sweep

Status codes: 0 ok, 1 overflow (+inf appeared), 2 NaN appeared, 3 a
message lost all support.
"""

from __future__ import annotations

from math import exp, inf, isnan, log1p

_M64 = (1 << 64) - 1

SEMIRING_SUM = 0
SEMIRING_MAX = 1
SCHEDULE_ASYNC = 0
SCHEDULE_SYNC = 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    z = z ^ (z >> 31)
    return state, z


def _logaddexp(a: float, b: float) -> float:
    if a == -inf:
        return b
    if b == -inf:
        return a
    if a >= b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


def run_sweeps(
    var_card,
    edge_var,
    edge_factor,
    edge_pos,
    scope_off,
    stride_flat,
    table_off,
    var_edge_off,
    var_edge_list,
    msg_off,
    logpsi,
    gamma,
    f2v,
    v2f,
    semiring: int,
    damping: float,
    max_sweeps: int,
    tol: float,
    schedule: int,
    seed: int,
):
    """Run message-passing sweeps in place. Returns (sweeps, delta, converged, status)."""
    n_edges = len(edge_var)
    var_card = [int(c) for c in var_card]
    edge_var = [int(x) for x in edge_var]
    edge_factor = [int(x) for x in edge_factor]
    edge_pos = [int(x) for x in edge_pos]
    scope_off = [int(x) for x in scope_off]
    stride_flat = [int(x) for x in stride_flat]
    table_off = [int(x) for x in table_off]
    var_edge_off = [int(x) for x in var_edge_off]
    var_edge_list = [int(x) for x in var_edge_list]
    msg_off = [int(x) for x in msg_off]
    logpsi_l = [float(x) for x in logpsi]
    gamma_l = [float(x) for x in gamma]
    f2v_l = [float(x) for x in f2v]
    v2f_l = [float(x) for x in v2f]

    max_card = max(var_card)
    m0f = [0.0] * max_card
    m0v = [0.0] * max_card
    state = [0] * 64
    perm = list(range(n_edges))
    prev_f2v = list(f2v_l)
    prev_v2f = list(v2f_l)
    rng = seed & _M64

    status = 0
    delta = inf
    converged = False
    sweeps = 0

    for sweep in range(max_sweeps):
        sweeps = sweep + 1
        delta = 0.0
        # Fisher-Yates, refreshed every sweep from the running stream.
        for k in range(n_edges):
            perm[k] = k
        for k in range(n_edges - 1, 0, -1):
            rng, z = _splitmix64(rng)
            j = z % (k + 1)
            perm[k], perm[j] = perm[j], perm[k]
        if schedule == SCHEDULE_SYNC:
            prev_f2v[:] = f2v_l
            prev_v2f[:] = v2f_l
            read_f2v = prev_f2v
            read_v2f = prev_v2f
        else:
            read_f2v = f2v_l
            read_v2f = v2f_l

        for idx in range(n_edges):
            e = perm[idx]
            a = edge_factor[e]
            p = edge_pos[e]
            i = edge_var[e]
            ci = var_card[i]
            eb = scope_off[a]
            arity = scope_off[a + 1] - eb
            tb = table_off[a]
            size = table_off[a + 1] - tb

            # m0 factor->variable: reduce the reweighted potential and the
            # other variables' messages over everything but position p.
            for s in range(ci):
                m0f[s] = -inf
            for q in range(arity):
                state[q] = 0
            for cell in range(size):
                lp = logpsi_l[tb + cell]
                if lp != -inf:
                    acc = lp
                    for q in range(arity):
                        if q != p:
                            v = read_v2f[msg_off[eb + q] + state[q]]
                            if v == -inf:
                                acc = -inf
                                break
                            acc += v
                    if acc != -inf:
                        sp = state[p]
                        if semiring == SEMIRING_MAX:
                            if acc > m0f[sp]:
                                m0f[sp] = acc
                        else:
                            m0f[sp] = _logaddexp(m0f[sp], acc)
                # odometer over the scope, last position fastest
                for q in range(arity - 1, -1, -1):
                    state[q] += 1
                    if state[q] < var_card[edge_var[eb + q]]:
                        break
                    state[q] = 0

            # m0 variable->factor: product of the other factors' messages.
            for s in range(ci):
                acc = 0.0
                for t in range(var_edge_off[i], var_edge_off[i + 1]):
                    e2 = var_edge_list[t]
                    if e2 != e:
                        w = read_f2v[msg_off[e2] + s]
                        if w == -inf:
                            acc = -inf
                            break
                        acc += w
                m0v[s] = acc

            # reweighting, damping, renormalization
            g = gamma_l[i]
            gm1 = g - 1.0
            mx_f = -inf
            mx_v = -inf
            for s in range(ci):
                xf = m0f[s]
                xv = m0v[s]

                # The net weight a zero carries decides the outcome: positive
                # keeps the state dead, negative is a genuine overflow, zero
                # cancels and only the finite terms remain.
                coef = 0.0
                acc = 0.0
                if xf == -inf:
                    coef += g
                else:
                    acc += g * xf
                if xv == -inf:
                    coef += gm1
                elif gm1 != 0.0:
                    acc += gm1 * xv
                if coef > 0.0:
                    nf = -inf
                elif coef < 0.0:
                    status = 1
                    break
                else:
                    nf = acc

                coef = 0.0
                acc = 0.0
                if xv == -inf:
                    coef += g
                else:
                    acc += g * xv
                if xf == -inf:
                    coef += gm1
                elif gm1 != 0.0:
                    acc += gm1 * xf
                if coef > 0.0:
                    nv = -inf
                elif coef < 0.0:
                    status = 1
                    break
                else:
                    nv = acc

                if damping > 0.0:
                    of = f2v_l[msg_off[e] + s]
                    ov = v2f_l[msg_off[e] + s]
                    nf = -inf if (nf == -inf or of == -inf) else (1.0 - damping) * nf + damping * of
                    nv = -inf if (nv == -inf or ov == -inf) else (1.0 - damping) * nv + damping * ov
                m0f[s] = nf
                m0v[s] = nv
                if nf > mx_f:
                    mx_f = nf
                if nv > mx_v:
                    mx_v = nv
            if status != 0:
                break
            if mx_f == -inf or mx_v == -inf:
                status = 3
                break

            for s in range(ci):
                o = msg_off[e] + s
                nf = m0f[s]
                nv = m0v[s]
                if nf != -inf:
                    nf -= mx_f
                if nv != -inf:
                    nv -= mx_v
                if isnan(nf) or isnan(nv):
                    status = 2
                    break
                old = f2v_l[o]
                if nf != old:
                    d = inf if (nf == -inf or old == -inf) else abs(nf - old)
                    if d > delta:
                        delta = d
                old = v2f_l[o]
                if nv != old:
                    d = inf if (nv == -inf or old == -inf) else abs(nv - old)
                    if d > delta:
                        delta = d
                f2v_l[o] = nf
                v2f_l[o] = nv
            if status != 0:
                break

        if status != 0:
            break
        if delta < tol:
            converged = True
            break

    for k in range(len(f2v_l)):
        f2v[k] = f2v_l[k]
        v2f[k] = v2f_l[k]
    if status != 0:
        return sweeps, delta, False, status
    return sweeps, delta, converged, status
