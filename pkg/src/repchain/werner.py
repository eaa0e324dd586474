"""Physical state-update rules for links in a repeater chain.

A link is a Werner state: a mixture w|Phi+><Phi+| + (1-w)*I/4 of a Bell
state with the maximally mixed state, summarized by the single parameter
w in [0, 1]. Its fidelity with the Bell state is F = (1 + 3w)/4. Idle
storage decays w exponentially with the memory coherence time. Swapping
two links multiplies their Werner parameters; distilling two links is
probabilistic and can raise the output above both inputs.

Every function here is stateless. Times are in units of L0/c, the travel
time of light over one segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

# Werner parameters are analytically confined to [0,1]; round-off may push
# them out by a hair. Clamp that hair, treat anything bigger as a bug.
RANGE_TOL = 1e-12


class LinkSample(NamedTuple):
    """One realized entangled link: delivery time and Werner parameter."""

    t: int
    w: float


@dataclass(frozen=True)
class ProtocolParams:
    """All knobs of a 2^n-segment chain run.

    Parameters
    ----------
    p_gen : success probability of one elementary generation attempt, (0,1].
    p_swap : success probability of an entanglement swap, (0,1].
    w0 : Werner parameter of a fresh elementary link, [0,1].
    T_coh : memory coherence time in L0/c units; math.inf disables decay.
    n : nesting level; the chain spans 2^n segments.
    d : distillation rounds per nesting level; 0 means swap-only.
    include_comm_time : add the 2^level steps a swap's heralding signal
        takes, with the matching decay.
    t_trunc : truncation time for deterministic computation; None when the
        caller chooses it later (0 is allowed and means "keep nothing",
        which the mean-bound bracket accepts).
    """

    p_gen: float
    p_swap: float
    w0: float = 1.0
    T_coh: float = math.inf
    n: int = 0
    d: int = 0
    include_comm_time: bool = False
    t_trunc: int | None = None

    def __post_init__(self):
        if not 0.0 < self.p_gen <= 1.0:
            raise ValueError(f"p_gen must be in (0, 1], got {self.p_gen}")
        if not 0.0 < self.p_swap <= 1.0:
            raise ValueError(f"p_swap must be in (0, 1], got {self.p_swap}")
        if not 0.0 <= self.w0 <= 1.0:
            raise ValueError(f"w0 must be in [0, 1], got {self.w0}")
        if not self.T_coh > 0.0:
            raise ValueError(f"T_coh must be positive, got {self.T_coh}")
        if self.n < 0 or self.n != int(self.n):
            raise ValueError(f"n must be a nonnegative integer, got {self.n}")
        if self.d < 0 or self.d != int(self.d):
            raise ValueError(f"d must be a nonnegative integer, got {self.d}")
        if self.t_trunc is not None and (
            self.t_trunc < 0 or self.t_trunc != int(self.t_trunc)
        ):
            raise ValueError(
                f"t_trunc must be a nonnegative integer, got {self.t_trunc}"
            )

    @property
    def segments(self) -> int:
        return 2**self.n


def _checked_range(w: float) -> float:
    if w < 0.0 or w > 1.0:
        if -RANGE_TOL < w < 1.0 + RANGE_TOL:
            return min(max(w, 0.0), 1.0)
        raise ValueError(f"Werner parameter {w} left [0, 1] by more than round-off")
    return w


def fidelity_from_werner(w: float) -> float:
    """Bell-state fidelity (1 + 3w)/4 of a Werner state."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"Werner parameter must be in [0, 1], got {w}")
    return (1.0 + 3.0 * w) / 4.0


def werner_from_fidelity(fidelity: float) -> float:
    """Inverse of fidelity_from_werner; fidelity must be in [0.25, 1]."""
    if not 0.25 <= fidelity <= 1.0:
        raise ValueError(f"fidelity must be in [0.25, 1], got {fidelity}")
    return _checked_range((4.0 * fidelity - 1.0) / 3.0)


def decay(w: float, dt: float, T_coh: float) -> float:
    """Werner parameter after idling dt time steps: w * exp(-dt/T_coh)."""
    if dt < 0.0:
        raise ValueError(f"elapsed time must be nonnegative, got {dt}")
    # dt/inf == 0.0, so infinite coherence time needs no special case.
    return w * math.exp(-dt / T_coh)


def swap_time(t_a: int, t_b: int) -> int:
    """Delivery time of a swapped link: the later input."""
    return max(t_a, t_b)


def swap_werner(w_a: float, w_b: float) -> float:
    """Werner parameter of a swapped link: the product of the inputs."""
    return w_a * w_b


def swap_werner_decayed(a: LinkSample, b: LinkSample, T_coh: float) -> float:
    """Swap output Werner parameter with the earlier link's idle decay.

    The first-delivered link waits |t_a - t_b| steps for the other, so the
    product picks up one decay factor. Symmetric in its arguments.
    """
    return swap_werner(a.w, b.w) * math.exp(-abs(a.t - b.t) / T_coh)


def swap_links(a: LinkSample, b: LinkSample, T_coh: float) -> LinkSample:
    """Combine two links through an entanglement swap (no signaling time)."""
    return LinkSample(swap_time(a.t, b.t), _checked_range(swap_werner_decayed(a, b, T_coh)))


def swap_links_with_comm(
    a: LinkSample, b: LinkSample, T_coh: float, level: int
) -> LinkSample:
    """Swap two 2^level-hop links, charging the heralding signal.

    The measurement outcome must travel across the swapped span, which
    takes 2^level extra steps during which the output state decays.
    """
    delay = 1 << level
    t = swap_time(a.t, b.t) + delay
    w = swap_werner_decayed(a, b, T_coh) * math.exp(-delay / T_coh)
    return LinkSample(t, _checked_range(w))


def distill_success_prob(w_a: float, w_b: float) -> float:
    """Success probability (1 + w_a*w_b)/2 of one distillation attempt."""
    return (1.0 + w_a * w_b) / 2.0


def distilled_werner(w_a: float, w_b: float) -> float:
    """Werner parameter after a successful distillation of two links.

    (1 + w_a + w_b + 5 w_a w_b) / (6 p_success) - 1/3, where p_success is
    distill_success_prob. Exceeds both inputs when they are good enough
    (above 1/3 for equal inputs), and degrades them when they are poor.
    """
    p = distill_success_prob(w_a, w_b)
    # Grouped so the expression is symmetric in (w_a, w_b) bitwise, not just
    # up to rounding; distill_links relies on that at delivery-time ties.
    return _checked_range(
        (1.0 + (w_a + w_b) + 5.0 * (w_a * w_b)) / (6.0 * p) - 1.0 / 3.0
    )


def distill_links(a: LinkSample, b: LinkSample, T_coh: float) -> LinkSample:
    """Combine two links through distillation, decaying the earlier one.

    The link delivered first idles until the other arrives; distillation
    then acts on the decayed pair. Output time is the later delivery.
    Symmetric in its arguments; a tie means no decay on either side.
    """
    if a.t <= b.t:
        early, late = a, b
    else:
        early, late = b, a
    w_early = decay(early.w, late.t - early.t, T_coh)
    return LinkSample(late.t, distilled_werner(w_early, late.w))
