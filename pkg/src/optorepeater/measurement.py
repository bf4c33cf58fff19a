"""Projective post-selection and two-atom entanglement metrics.

"Entropy" here is the linear entropy 1 - Tr(rho_A^2) of one atom of the
residual pair, not the von Neumann entropy. For a state
c13 |1,3> + c31 |3,1> it equals

    1 - (|c13|^4 + |c31|^4) / (|c13|^2 + |c31|^2)^2,

which lies in [0, 1/2] and reaches 1/2 when |c13| = |c31|. It is
evaluated as the equivalent 2 |c13|^2 |c31|^2 / (|c13|^2 + |c31|^2)^2,
which avoids cancellation near product states.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .fock import MODES, AtomLevel, BasisKet

__all__ = [
    "ProjectorSpec",
    "TwoAtomState",
    "post_select",
    "outcome_probabilities",
    "residual_indices",
    "linear_entropy",
    "success_probability",
    "pair_metrics",
]

L1, L3 = AtomLevel.L1, AtomLevel.L3


@dataclass(frozen=True)
class ProjectorSpec:
    """Required mode occupations and atom levels of one measurement outcome.

    ``residual_atoms`` are the two unmeasured atoms, in the order used
    to label the residual |1,3> / |3,1> amplitudes.
    """

    atom_levels: Mapping[int, AtomLevel]
    residual_atoms: tuple[int, int]
    mode_occupations: Mapping[str, int] = field(
        default_factory=lambda: {m: 0 for m in MODES}
    )

    def __post_init__(self):
        object.__setattr__(
            self, "atom_levels", {int(k): AtomLevel(v) for k, v in self.atom_levels.items()}
        )
        object.__setattr__(self, "mode_occupations", dict(self.mode_occupations))
        object.__setattr__(self, "residual_atoms", tuple(int(a) for a in self.residual_atoms))
        for mode in self.mode_occupations:
            if mode not in MODES:
                raise ValueError(f"unknown mode {mode!r}")
        if len(self.residual_atoms) != 2 or len(set(self.residual_atoms)) != 2:
            raise ValueError("residual_atoms must name two distinct atoms")
        if set(self.atom_levels) & set(self.residual_atoms):
            raise ValueError("measured atoms and residual atoms must be disjoint")

    @classmethod
    def vacuum_outcome(
        cls,
        measured: tuple[int, int],
        levels: tuple[AtomLevel, AtomLevel],
        residual: tuple[int, int],
        modes: Sequence[str] = MODES,
    ) -> "ProjectorSpec":
        """Modes in vacuum and the measured pair found in ``levels``."""
        return cls(
            atom_levels=dict(zip(measured, levels)),
            residual_atoms=residual,
            mode_occupations={m: 0 for m in modes},
        )

    def matches(self, ket: BasisKet) -> bool:
        occ = ket.occupations
        if any(occ[m] != n for m, n in self.mode_occupations.items()):
            return False
        return all(ket.atoms[a] == lvl for a, lvl in self.atom_levels.items())


@dataclass(frozen=True)
class TwoAtomState:
    """c13 |1,3> + c31 |3,1> on an atom pair.

    ``empty`` marks the residual of a zero-probability outcome.
    """

    c13: complex
    c31: complex
    normalized: bool = False
    empty: bool = False

    def __post_init__(self):
        object.__setattr__(self, "c13", complex(self.c13))
        object.__setattr__(self, "c31", complex(self.c31))
        if self.normalized and abs(self.norm_sq - 1.0) > 1e-12:
            raise ValueError("state flagged normalized does not have unit norm")

    @property
    def norm_sq(self) -> float:
        return abs(self.c13) ** 2 + abs(self.c31) ** 2

    def normalize(self) -> "TwoAtomState":
        n = np.sqrt(self.norm_sq)
        if n == 0:
            raise ValueError("cannot normalize a zero state")
        return TwoAtomState(self.c13 / n, self.c31 / n, normalized=True)


def post_select(
    state: np.ndarray, basis: Sequence[BasisKet], spec: ProjectorSpec
) -> tuple[float, TwoAtomState]:
    """Project ``state`` (amplitudes over ``basis``) onto one outcome.

    Returns the outcome probability and the normalized residual state of
    the unmeasured pair. A zero-probability outcome returns an ``empty``
    residual instead of raising.
    """
    amps = np.asarray(state, dtype=complex)
    if amps.shape != (len(basis),):
        raise ValueError("state length does not match basis")
    if abs(np.linalg.norm(amps) - 1.0) > 1e-10:
        raise ValueError("state must be normalized")

    matched = [i for i, ket in enumerate(basis) if spec.matches(ket)]
    if not matched:
        raise ValueError("projector matches no basis ket")

    c13 = c31 = 0j
    r1, r2 = spec.residual_atoms
    for i in matched:
        pair = (basis[i].atoms[r1], basis[i].atoms[r2])
        if pair == (L1, L3):
            c13 += amps[i]
        elif pair == (L3, L1):
            c31 += amps[i]
        elif amps[i] != 0:
            raise ValueError(
                f"residual pair of {basis[i].label()} lies outside span{{|1,3>,|3,1>}}"
            )
    raw = TwoAtomState(c13, c31)
    probability = success_probability(raw)
    if probability == 0.0:
        return 0.0, TwoAtomState(0, 0, empty=True)
    return probability, raw.normalize()


def residual_indices(
    basis: Sequence[BasisKet], spec: ProjectorSpec
) -> tuple[list[int], list[int]]:
    """Basis positions feeding the residual |1,3> and |3,1> amplitudes."""
    idx13, idx31 = [], []
    r1, r2 = spec.residual_atoms
    for i, ket in enumerate(basis):
        if not spec.matches(ket):
            continue
        pair = (ket.atoms[r1], ket.atoms[r2])
        if pair == (L1, L3):
            idx13.append(i)
        elif pair == (L3, L1):
            idx31.append(i)
    if not idx13 and not idx31:
        raise ValueError("projector selects no residual |1,3>/|3,1> ket")
    return idx13, idx31


def outcome_probabilities(
    state: np.ndarray,
    basis: Sequence[BasisKet],
    measured_atoms: Sequence[int],
    modes: Sequence[str] = MODES,
) -> dict[tuple, float]:
    """Probabilities of every joint outcome on the measured subsystems."""
    amps = np.asarray(state, dtype=complex)
    probs: dict[tuple, float] = defaultdict(float)
    for amp, ket in zip(amps, basis):
        occ = ket.occupations
        key = tuple(occ[m] for m in modes) + tuple(int(ket.atoms[a]) for a in measured_atoms)
        probs[key] += abs(amp) ** 2
    return dict(sorted(probs.items()))


def success_probability(s: TwoAtomState) -> float:
    return float(s.norm_sq)


def linear_entropy(s: TwoAtomState) -> float:
    p = s.norm_sq
    if p == 0:
        raise ValueError("entropy undefined for a zero-norm state")
    return float(2.0 * abs(s.c13) ** 2 * abs(s.c31) ** 2 / p**2)


def pair_metrics(c13, c31) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (entropy, probability) for amplitude arrays.

    Entropy is NaN where the probability vanishes.
    """
    m13 = np.abs(np.asarray(c13)) ** 2
    m31 = np.abs(np.asarray(c31)) ** 2
    prob = m13 + m31
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(prob > 0, 2.0 * m13 * m31 / prob**2, np.nan)
    return ent, prob
