"""Infinite-sites mutations on genealogies and frequency-spectrum statistics.

Mutations fall on the genealogy as a Poisson process along each line, at
rate u_active/2 while the line is active and u_dormant/2 while it is
dormant.  Every mutation hits a fresh site, so it is carried by exactly the
leaves below the block it landed on; tabulating those leaf counts gives the
site frequency spectrum, from which the detection statistics are computed.

The difference statistics are implemented in unnormalized numerator form
(theta_pi - theta_H and S - a_n * xi_1); the variance denominators belong to
the wider inference literature and are out of scope here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .coalescent import ACTIVE, DORMANT, Genealogy, mark_segments
from .streams import as_rng

__all__ = [
    "Mutation",
    "MutationSet",
    "SiteFrequencySpectrum",
    "drop_mutations",
    "sfs",
    "segregating_sites",
    "singletons",
    "theta_pi",
    "fay_wu_h",
    "fu_li_d_numerator",
]


@dataclass(frozen=True)
class Mutation:
    block: int  # block id the mutation landed on
    time: float
    mark: str  # mark of the block at placement time
    leaves: frozenset[int]  # sample members below the block


@dataclass
class MutationSet:
    sample_size: int
    mutations: list[Mutation]

    def __len__(self) -> int:
        return len(self.mutations)


@dataclass(frozen=True)
class SiteFrequencySpectrum:
    """Counts xi_1 .. xi_{n-1}: mutations carried by exactly i sampled leaves."""

    sample_size: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.sample_size < 2:
            raise ValueError("the frequency spectrum needs a sample of at least 2")
        if len(self.counts) != self.sample_size - 1:
            raise ValueError(
                f"need {self.sample_size - 1} frequency classes, got {len(self.counts)}"
            )
        if any(c < 0 for c in self.counts):
            raise ValueError("negative mutation count")


def drop_mutations(g: Genealogy, u_active: float, u_dormant: float, seed=None) -> MutationSet:
    """Place infinite-sites mutations on a completed genealogy.

    Each maximal constant-mark segment of each block's lifetime receives a
    Poisson(rate/2 x length) number of mutations, with the rate picked by the
    segment's mark.  Mutations on the root line are never generated (they
    would not segregate).
    """
    if not g.reached_mrca:
        raise ValueError("mutation dropping needs a genealogy that reached the MRCA")
    if u_active < 0.0 or u_dormant < 0.0:
        raise ValueError("mutation rates must be nonnegative")
    rng = as_rng(seed)
    muts: list[Mutation] = []
    for block, leaves, mark, t0, t1 in mark_segments(g):
        rate = (u_active if mark == ACTIVE else u_dormant) / 2.0
        if rate <= 0.0:
            continue
        count = rng.poisson(rate * (t1 - t0))
        for _ in range(count):
            muts.append(
                Mutation(block=block, time=float(rng.uniform(t0, t1)), mark=mark, leaves=leaves)
            )
    return MutationSet(sample_size=g.sample_size, mutations=muts)


def sfs(g: Genealogy, muts: MutationSet) -> SiteFrequencySpectrum:
    """Histogram of subtended leaf counts."""
    n = g.sample_size
    if muts.sample_size != n:
        raise ValueError("mutation set does not belong to this genealogy")
    counts = [0] * (n - 1)
    for mu in muts.mutations:
        size = len(mu.leaves)
        if not 1 <= size <= n - 1:
            raise ValueError(f"mutation subtends {size} of {n} leaves; not a segregating site")
        counts[size - 1] += 1
    return SiteFrequencySpectrum(sample_size=n, counts=tuple(counts))


def segregating_sites(spectrum: SiteFrequencySpectrum) -> int:
    return sum(spectrum.counts)


def singletons(spectrum: SiteFrequencySpectrum) -> int:
    return spectrum.counts[0]


def theta_pi(spectrum: SiteFrequencySpectrum) -> float:
    """Average pairwise difference: sum of i(n-i) xi_i over C(n, 2)."""
    n = spectrum.sample_size
    num = sum(i * (n - i) * c for i, c in enumerate(spectrum.counts, start=1))
    return num / math.comb(n, 2)


def fay_wu_h(spectrum: SiteFrequencySpectrum) -> float:
    """theta_pi minus the homozygosity-weighted estimator (unnormalized).

    Negative values flag an excess of high-frequency derived mutations.
    """
    n = spectrum.sample_size
    theta_h = sum(i * i * c for i, c in enumerate(spectrum.counts, start=1)) / math.comb(n, 2)
    return theta_pi(spectrum) - theta_h


def fu_li_d_numerator(spectrum: SiteFrequencySpectrum) -> float:
    """S - a_n * xi_1 with a_n the (n-1)-th harmonic number (unnormalized)."""
    n = spectrum.sample_size
    a_n = sum(1.0 / i for i in range(1, n))
    return segregating_sites(spectrum) - a_n * singletons(spectrum)
