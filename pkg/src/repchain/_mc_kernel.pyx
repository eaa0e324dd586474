# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory sampler.

Mirrors _mc_sampler_py.py operation for operation; results must stay
bit-identical between the two backends, so expression grouping here
follows the Python module exactly and the build disables floating-point
contraction. Uniform draws come straight from the bit generator's
next_double, the same source Generator.random() uses.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport ceil, exp, log1p
from numpy.random cimport bitgen_t


cdef struct LinkOut:
    long long t
    double w
    long long gens


cdef inline double _uniform(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)


cdef inline long long _generation_time(bitgen_t *rng, double p_gen) noexcept nogil:
    cdef double u = rng.next_double(rng.state)
    cdef double t
    if p_gen >= 1.0:
        return 1
    t = ceil(log1p(-u) / log1p(-p_gen))
    if t < 1.0:
        return 1
    return <long long> t


cdef LinkOut _swap_level(bitgen_t *rng, int level, double p_gen, double p_swap,
                         double w0, double T_coh, int d, bint comm) noexcept nogil:
    cdef LinkOut out, a, b
    cdef long long total = 0, gens = 0, t_att, dt, delay
    cdef double w
    if level == 0:
        out.t = _generation_time(rng, p_gen)
        out.w = w0
        out.gens = 1
        return out
    while True:
        a = _dist_link(rng, level, d, p_gen, p_swap, w0, T_coh, d, comm)
        b = _dist_link(rng, level, d, p_gen, p_swap, w0, T_coh, d, comm)
        gens += a.gens + b.gens
        t_att = a.t if a.t > b.t else b.t
        dt = a.t - b.t
        if dt < 0:
            dt = -dt
        w = a.w * b.w * exp(-<double> dt / T_coh)
        if comm:
            delay = 1 << (level - 1)
            t_att += delay
            w *= exp(-<double> delay / T_coh)
        total += t_att
        if _uniform(rng) < p_swap:
            out.t = total
            out.w = w
            out.gens = gens
            return out


cdef LinkOut _dist_link(bitgen_t *rng, int level, int d_remaining, double p_gen,
                        double p_swap, double w0, double T_coh, int d,
                        bint comm) noexcept nogil:
    cdef LinkOut out, a, b
    cdef long long total = 0, gens = 0, t_att, dt
    cdef double w_early, w_late, p_succ, w
    if d_remaining == 0:
        return _swap_level(rng, level - 1, p_gen, p_swap, w0, T_coh, d, comm)
    while True:
        a = _dist_link(rng, level, d_remaining - 1, p_gen, p_swap, w0, T_coh, d, comm)
        b = _dist_link(rng, level, d_remaining - 1, p_gen, p_swap, w0, T_coh, d, comm)
        gens += a.gens + b.gens
        if a.t <= b.t:
            w_early = a.w
            w_late = b.w
            t_att = b.t
            dt = b.t - a.t
        else:
            w_early = b.w
            w_late = a.w
            t_att = a.t
            dt = a.t - b.t
        w_early = w_early * exp(-<double> dt / T_coh)
        p_succ = (1.0 + w_early * w_late) / 2.0
        total += t_att
        if _uniform(rng) < p_succ:
            w = (1.0 + (w_early + w_late) + 5.0 * (w_early * w_late)) / (6.0 * p_succ) - 1.0 / 3.0
            # Same clamp the Python range check applies to round-off spill.
            if w < 0.0:
                w = 0.0
            elif w > 1.0:
                w = 1.0
            out.t = total
            out.w = w
            out.gens = gens
            return out


def sample_one(bit_generator, int n, int d, double p_gen, double p_swap,
               double w0, double T_coh, bint comm):
    """One end-to-end sample: (time, Werner parameter, elementary attempts).

    `bit_generator` is a numpy BitGenerator whose stream is consumed in
    place, exactly as the Python backend's Generator would consume it.
    """
    cdef bitgen_t *rng
    cdef LinkOut out
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a BitGenerator capsule")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    with nogil:
        out = _swap_level(rng, n, p_gen, p_swap, w0, T_coh, d, comm)
    return out.t, out.w, out.gens
