"""The standard test corpus: exact caps, unions, an interior sphere, perturbations and the probe."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .gauge import Gauge
from .shapes import CapSpec, CompositeSpec, PerturbationSpec, ProbeSpec, cap

PI = math.pi
PROBE_RADIUS = 2e-5


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    spec: object
    theta: float
    dimension: int
    exact: bool
    centers: tuple = ()  # true Wulff centers for exact entries

    def gauge(self) -> Gauge:
        return Gauge(self.theta, self.dimension)


def entries() -> list[CorpusEntry]:
    out = []
    for n in (2, 1):
        for label, th in (("60", PI / 3), ("90", PI / 2), ("120", 2 * PI / 3)):
            o = (0.0,) * (n + 1)
            out.append(CorpusEntry(f"cap_n{n}_{label}", cap(theta=th, dimension=n), th, n, True, (o,)))
    out.append(CorpusEntry("two_hemispheres", CompositeSpec((cap(center=(0, 0, 0)), cap(center=(4, 0, 0)))),
                           PI / 2, 2, True, ((0.0, 0.0, 0.0), (4.0, 0.0, 0.0))))
    gap = math.sqrt(3.0) + 0.01
    out.append(CorpusEntry("near_touching_60", CompositeSpec((cap(theta=PI / 3), cap(center=(gap, 0, 0), theta=PI / 3))),
                           PI / 3, 2, True, ((0.0, 0.0, 0.0), (gap, 0.0, 0.0))))
    out.append(CorpusEntry("interior_sphere", CapSpec.sphere((0, 0, 3), 1.0, PI / 2), PI / 2, 2, True,
                           ((0.0, 0.0, 3.0),)))
    for a in (0.02, 0.05, 0.1):
        out.append(CorpusEntry(f"perturbed_90_{a:g}", PerturbationSpec(cap(), amplitude=a), PI / 2, 2, False))
    out.append(CorpusEntry("perturbed_60_0.05", PerturbationSpec(cap(theta=PI / 3), amplitude=0.05), PI / 3, 2, False))
    out.append(CorpusEntry("probe", ProbeSpec(cap(), eps_radius=PROBE_RADIUS), PI / 2, 2, False))
    return out


def get(name: str) -> CorpusEntry:
    for e in entries():
        if e.name == name:
            return e
    raise KeyError(name)
