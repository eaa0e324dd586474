"""Pure-Python trajectory sampler: fallback and reference backend.

The compiled kernel in _mc_kernel.pyx mirrors this module draw for draw
and operation for operation; the two must stay bit-identical. Keep any
arithmetic change in sync with the kernel, including expression grouping.

Draw discipline: one uniform per elementary generation attempt, one
uniform per swap or distillation attempt after its children, nothing
else. Werner-parameter arithmetic never touches the stream, so the
waiting-time marginal of the swap-only protocol depends only on
(p_gen, p_swap, n, seed).
"""

from __future__ import annotations

import math

from .werner import decay, distill_success_prob, distilled_werner


def generation_time(rng, p_gen: float) -> int:
    """Geometric sample by inverting the CDF at a uniform draw.

    The draw happens before the p_gen = 1 short-circuit so the stream
    position never depends on parameter values.
    """
    u = rng.random()
    if p_gen >= 1.0:
        return 1
    t = math.ceil(math.log1p(-u) / math.log1p(-p_gen))
    return t if t >= 1 else 1


def swap_level(rng, level, p_gen, p_swap, w0, T_coh, d, comm):
    """One link spanning 2^level segments, as (time, Werner, attempts).

    Retries are a loop, not recursion: a run of bad luck must not grow
    the stack. Child links recurse, bounded in depth by level + d.
    """
    if level == 0:
        return generation_time(rng, p_gen), w0, 1
    total = 0
    gens = 0
    while True:
        t_a, w_a, g_a = dist_link(rng, level, d, p_gen, p_swap, w0, T_coh, d, comm)
        t_b, w_b, g_b = dist_link(rng, level, d, p_gen, p_swap, w0, T_coh, d, comm)
        gens += g_a + g_b
        t_att = t_a if t_a > t_b else t_b
        w = w_a * w_b * math.exp(-abs(t_a - t_b) / T_coh)
        if comm:
            delay = 1 << (level - 1)
            t_att += delay
            w *= math.exp(-delay / T_coh)
        total += t_att
        if rng.random() < p_swap:
            return total, w, gens


def dist_link(rng, level, d_remaining, p_gen, p_swap, w0, T_coh, d, comm):
    """One d_remaining-distilled link ready for swapping at `level`."""
    if d_remaining == 0:
        return swap_level(rng, level - 1, p_gen, p_swap, w0, T_coh, d, comm)
    total = 0
    gens = 0
    while True:
        t_a, w_a, g_a = dist_link(
            rng, level, d_remaining - 1, p_gen, p_swap, w0, T_coh, d, comm
        )
        t_b, w_b, g_b = dist_link(
            rng, level, d_remaining - 1, p_gen, p_swap, w0, T_coh, d, comm
        )
        gens += g_a + g_b
        if t_a <= t_b:
            w_early, w_late, t_att = w_a, w_b, t_b
            dt = t_b - t_a
        else:
            w_early, w_late, t_att = w_b, w_a, t_a
            dt = t_a - t_b
        w_early = decay(w_early, dt, T_coh)
        # The success probability sees the decayed pair: the early link has
        # already idled by the time the attempt can be evaluated.
        p_succ = distill_success_prob(w_early, w_late)
        total += t_att
        if rng.random() < p_succ:
            return total, distilled_werner(w_early, w_late), gens


def sample_chain(rng, n, d, p_gen, p_swap, w0, T_coh, comm):
    """One end-to-end sample: (time, Werner parameter, elementary attempts)."""
    return swap_level(rng, n, p_gen, p_swap, w0, T_coh, d, comm)
