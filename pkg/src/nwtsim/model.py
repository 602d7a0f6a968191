"""Membrane-system domain types: compartments, species, reactions.

A :class:`MembraneSystem` is the static description of a model. Engines copy
the initial counts out of it and never mutate it, so one prepared system can
be shared by many concurrent runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

AVOGADRO = 6.0221415e23
MAX_ORDER = 3


class ModelError(ValueError):
    """Raised when a model is malformed or fails validation."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class Compartment:
    id: str
    volume: float
    parent: Optional[str] = None


@dataclass(frozen=True)
class Species:
    id: str
    compartment: str
    count: int
    # initial concentration (molar) when the model stated one; kept for round-trips
    conc: Optional[float] = None
    consuming_reactions: tuple = ()

    @property
    def key(self):
        return f"{self.compartment}.{self.id}"


@dataclass(frozen=True)
class Reaction:
    """A mass-action rule.

    ``reactants`` and ``products`` hold indices into the alphabet; a species
    listed twice takes part twice. ``const_discrete`` is filled in by
    :func:`prepare`.
    """

    id: str
    reactants: tuple
    products: tuple
    k_conc: float
    const_discrete: float = math.nan

    @property
    def order(self):
        return len(self.reactants)


@dataclass(frozen=True)
class MembraneSystem:
    compartments: tuple = ()
    alphabet: tuple = ()
    reactions: tuple = ()
    prepared: bool = field(default=False, compare=False)

    def compartment(self, cid):
        for c in self.compartments:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def species_index(self, sid, compartment=None):
        """Resolve a species id (optionally compartment-qualified) to its index."""
        hits = [i for i, s in enumerate(self.alphabet)
                if s.id == sid and (compartment is None or s.compartment == compartment)]
        if len(hits) != 1:
            where = f" in {compartment}" if compartment else ""
            if not hits:
                raise KeyError(f"unknown species {sid!r}{where}")
            raise KeyError(f"ambiguous species {sid!r}; qualify it with a compartment")
        return hits[0]

    def species_labels(self):
        """Column labels, compartment-qualified only where ids collide."""
        ids = [s.id for s in self.alphabet]
        return [s.key if ids.count(s.id) > 1 else s.id for s in self.alphabet]

    def initial_counts(self):
        return [s.count for s in self.alphabet]

    def reaction_volume(self, reaction):
        # single-volume kinetics: the first reactant's compartment decides
        return self.compartment(self.alphabet[reaction.reactants[0]].compartment).volume


def discrete_constant(k_conc, volume, order, reaction_id=None):
    """Convert a concentration-based rate to molecule-count units.

    ``k / (V**(order-1) * N_A**(order-1))``; identity for first-order rules.
    """
    label = f"reaction {reaction_id}: " if reaction_id is not None else ""
    if not k_conc > 0:
        raise ModelError(f"{label}rate constant must be positive, got {k_conc!r}")
    if not volume > 0:
        raise ModelError(f"{label}volume must be positive, got {volume!r}")
    if order not in (1, 2, 3):
        raise ModelError(f"{label}order {order} out of range 1..3")
    return k_conc / (volume ** (order - 1) * AVOGADRO ** (order - 1))


def concentration_to_count(conc, volume):
    """Molar concentration to a molecule count, rounding half away from zero."""
    if conc < 0 or math.isnan(conc):
        raise ModelError(f"concentration must be non-negative, got {conc!r}")
    if not volume > 0:
        raise ModelError(f"volume must be positive, got {volume!r}")
    n = conc * volume * AVOGADRO
    if not math.isfinite(n):
        raise ModelError(f"concentration {conc!r} in volume {volume!r} overflows a count")
    return int(math.floor(n + 0.5))


def validate(system):
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    comp_ids = [c.id for c in system.compartments]
    comps = {c.id: c for c in system.compartments}

    for cid in sorted({c for c in comp_ids if comp_ids.count(c) > 1}):
        problems.append(f"compartment {cid}: duplicate id")
    for c in system.compartments:
        if not (isinstance(c.volume, (int, float)) and c.volume > 0 and math.isfinite(c.volume)):
            problems.append(f"compartment {c.id}: volume must be positive and finite")
        if c.parent is not None and c.parent not in comps:
            problems.append(f"compartment {c.id}: unknown parent {c.parent}")
    roots = [c for c in system.compartments if c.parent is None]
    if system.compartments and len(roots) != 1:
        problems.append(f"membrane hierarchy must have exactly one root, found {len(roots)}")
    for c in system.compartments:
        seen = {c.id}
        cur = c.parent
        while cur is not None and cur in comps:
            if cur in seen:
                problems.append(f"compartment {c.id}: parent chain forms a cycle")
                break
            seen.add(cur)
            cur = comps[cur].parent

    keys = [(s.compartment, s.id) for s in system.alphabet]
    for comp, sid in sorted({k for k in keys if keys.count(k) > 1}):
        problems.append(f"species {sid}: duplicate id in compartment {comp}")
    for s in system.alphabet:
        if s.compartment not in comps:
            problems.append(f"species {s.id}: unknown compartment {s.compartment}")
        if not isinstance(s.count, int) or isinstance(s.count, bool) or s.count < 0:
            problems.append(f"species {s.id}: count must be a non-negative integer, got {s.count!r}")

    rids = [r.id for r in system.reactions]
    for rid in sorted({r for r in rids if rids.count(r) > 1}):
        problems.append(f"reaction {rid}: duplicate id")
    n = len(system.alphabet)
    for r in system.reactions:
        if len(r.reactants) > MAX_ORDER:
            problems.append(f"reaction {r.id}: arity>3 ({len(r.reactants)} reactants), "
                            "decompose into lower-order reactions")
        elif not r.reactants:
            problems.append(f"reaction {r.id}: needs at least one reactant")
        if len(r.products) > MAX_ORDER:
            problems.append(f"reaction {r.id}: more than 3 products ({len(r.products)}), "
                            "decompose into lower-order reactions")
        for ref in tuple(r.reactants) + tuple(r.products):
            if not (isinstance(ref, int) and 0 <= ref < n):
                problems.append(f"reaction {r.id}: unresolved species reference {ref!r}")
        if not (isinstance(r.k_conc, (int, float)) and r.k_conc > 0 and math.isfinite(r.k_conc)):
            problems.append(f"reaction {r.id}: rate constant must be positive, got {r.k_conc!r}")
    return problems


def build_reaction_index(system):
    """Return a copy whose species carry the indices of the reactions consuming them."""
    consumers = [[] for _ in system.alphabet]
    for j, r in enumerate(system.reactions):
        for s in dict.fromkeys(r.reactants):
            consumers[s].append(j)
    alphabet = tuple(replace(s, consuming_reactions=tuple(c))
                     for s, c in zip(system.alphabet, consumers))
    return replace(system, alphabet=alphabet)


def prepare(system):
    """Validate, index consumers and compute discrete constants.

    Raises :class:`ModelError` listing every violation if the system is invalid.
    Idempotent.
    """
    if system.prepared:
        return system
    problems = validate(system)
    if problems:
        raise ModelError("invalid model:\n  " + "\n  ".join(problems), problems)
    system = build_reaction_index(system)
    reactions = tuple(
        replace(r, const_discrete=discrete_constant(
            r.k_conc, system.reaction_volume(r), r.order, r.id))
        for r in system.reactions)
    return replace(system, reactions=reactions, prepared=True)


def make_system(compartments: Sequence[Compartment], species: Sequence[Species],
                reactions: Sequence[tuple]):
    """Convenience builder used by tests and scripts.

    ``reactions`` are ``(id, [reactant ids], [product ids], k)`` tuples with
    plain species ids.
    """
    base = MembraneSystem(tuple(compartments), tuple(species), ())
    built = []
    for rid, reac, prod, k in reactions:
        built.append(Reaction(rid, tuple(base.species_index(s) for s in reac),
                              tuple(base.species_index(s) for s in prod), float(k)))
    return prepare(replace(base, reactions=tuple(built)))
