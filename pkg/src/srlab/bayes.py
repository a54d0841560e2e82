"""Beta-Binomial estimation of conditional bounce probabilities.

Each (kind, b_prev) cell is a Bernoulli experiment: a uniform prior on the
bounce probability updated by a binomial likelihood gives a Beta posterior
with closed-form mean and variance.
"""

from __future__ import annotations

from dataclasses import dataclass

from srlab.engine import EntryEvent, Kind, Outcome


@dataclass(frozen=True)
class BounceCell:
    """Outcome counts for one (kind, b_prev) cell: n bounces, k penetrations."""

    kind: Kind
    b_prev: int
    n: int
    k: int

    def __post_init__(self):
        if self.n < 0 or self.k < 0:
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.n + self.k


@dataclass(frozen=True)
class BouncePosterior:
    cell: BounceCell
    mean: float
    variance: float

    @property
    def sd(self) -> float:
        return self.variance**0.5


def posterior(cell: BounceCell) -> BouncePosterior:
    """Beta(n+1, N-n+1) posterior summary for one cell.

    mean = (n+1)/(N+2), variance = (n+1)(N-n+1)/((N+3)(N+2)^2); an empty
    cell returns the uniform-prior summary (0.5, 1/12).
    """
    n, total = cell.n, cell.total
    mean = (n + 1) / (total + 2)
    variance = (n + 1) * (total - n + 1) / ((total + 3) * (total + 2) ** 2)
    return BouncePosterior(cell=cell, mean=mean, variance=variance)


PosteriorTable = dict[tuple[Kind, int], BouncePosterior]


def aggregate(events: list[EntryEvent], cap: int) -> PosteriorTable:
    """Posterior per (kind, b_prev) for b_prev in 0..cap.

    Combined cells pool support and resistance events.  Cells with no
    events stay at the prior (N = 0).
    """
    counts: dict[tuple[Kind, int], list[int]] = {}
    for kind in (Kind.SUPPORT, Kind.RESISTANCE, Kind.COMBINED):
        for b in range(cap + 1):
            counts[(kind, b)] = [0, 0]
    for ev in events:
        slot = 0 if ev.outcome is Outcome.BOUNCE else 1
        counts[(ev.kind, ev.b_prev)][slot] += 1
        counts[(Kind.COMBINED, ev.b_prev)][slot] += 1
    return {
        (kind, b): posterior(BounceCell(kind=kind, b_prev=b, n=nk[0], k=nk[1]))
        for (kind, b), nk in counts.items()
    }
