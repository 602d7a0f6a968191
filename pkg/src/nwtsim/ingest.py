"""Model file formats: a line-oriented native format and a mass-action SBML subset.

Native format::

    # comment
    compartment cell volume=1e-15 [parent=<id>]
    species A in cell count=10
    species B in cell conc=1e-9
    reaction R1: A + B -> C @ 0.5
    reaction R2: C -> @ @ 0.1        # "@" alone is the empty sink

Species in reactions may be written ``compartment.id`` when an id is used
in more than one compartment.
"""

from __future__ import annotations

import logging
import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace

from .model import (Compartment, MembraneSystem, ModelError, Reaction, Species,
                    concentration_to_count, prepare)

log = logging.getLogger(__name__)

_ID = r"[A-Za-z_][A-Za-z0-9_']*"
_REF = rf"{_ID}(?:\.{_ID})?"
_COMPARTMENT = re.compile(rf"^compartment\s+({_ID})\s+volume=(\S+)(?:\s+parent=({_ID}))?$")
_SPECIES = re.compile(rf"^species\s+({_ID})\s+in\s+({_ID})\s+(count|conc)=(\S+)$")
_REACTION = re.compile(rf"^reaction\s+({_ID})\s*:\s*(.*?)\s*->\s*(.*?)\s*@\s*(\S+)$")
_REF_RE = re.compile(rf"^{_REF}$")


class ParseError(ModelError):
    """Syntax or semantic error in a model document, with its location."""

    def __init__(self, message, line=None, violations=()):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message, violations)
        self.line = line


class UnsupportedSBMLFeature(ParseError):
    def __init__(self, element, line=None):
        super().__init__(f"unsupported SBML feature <{element}>", line)
        self.element = element


@dataclass
class ModelDocument:
    source: str
    format: str
    system: MembraneSystem

    @property
    def initial_modes(self):
        return {s.key: ("conc" if s.conc is not None else "count") for s in self.system.alphabet}


def _float(text, what, line):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{what}: not a number: {text!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"{what}: must be finite, got {text!r}", line)
    return v


def _finish(compartments, species, raw_reactions, where=None):
    """Resolve species references and validate. ``raw_reactions`` holds
    ``(id, reactant refs, product refs, k, line)``; ``where`` maps
    ``(kind, id)`` to source lines so violations can be located."""
    base = MembraneSystem(tuple(compartments), tuple(species), ())
    reactions = []
    for rid, reac, prod, k, line in raw_reactions:
        try:
            r_idx = tuple(_resolve(base, ref) for ref in reac)
            p_idx = tuple(_resolve(base, ref) for ref in prod)
        except KeyError as exc:
            raise ParseError(f"reaction {rid}: {exc.args[0]}", line) from None
        reactions.append(Reaction(rid, r_idx, p_idx, k))
    try:
        return prepare(replace(base, reactions=tuple(reactions)))
    except ModelError as exc:
        raise ParseError(str(exc), _locate(exc.violations, where or {}), exc.violations) from None


def _locate(violations, where):
    for v in violations:
        m = re.match(rf"(compartment|species|reaction) ({_ID}):", v)
        if m and (m.group(1), m.group(2)) in where:
            return where[m.group(1), m.group(2)]
    # hierarchy problems have no single owner; point at the first compartment
    firsts = [line for (kind, _), line in where.items() if kind == "compartment"]
    return min(firsts) if firsts else None


def _resolve(system, ref):
    if "." in ref:
        comp, sid = ref.split(".", 1)
        return system.species_index(sid, comp)
    return system.species_index(ref)


def _species_list(text, line):
    text = text.strip()
    if text in ("", "@"):
        return []
    refs = [t.strip() for t in text.split("+")]
    for ref in refs:
        if not _REF_RE.match(ref):
            raise ParseError(f"bad species reference {ref!r}", line)
    return refs


def parse_native(text):
    """Parse the native line format into a prepared :class:`MembraneSystem`."""
    compartments, species, raw = [], [], []
    comp_volume = {}
    pending_conc = []
    where = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        keyword = line.split(None, 1)[0]
        if keyword == "compartment":
            m = _COMPARTMENT.match(line)
            if not m:
                raise ParseError("expected 'compartment <id> volume=<liters> [parent=<id>]'", lineno)
            vol = _float(m.group(2), "volume", lineno)
            compartments.append(Compartment(m.group(1), vol, m.group(3)))
            comp_volume[m.group(1)] = vol
            where.setdefault(("compartment", m.group(1)), lineno)
        elif keyword == "species":
            m = _SPECIES.match(line)
            if not m:
                raise ParseError("expected 'species <id> in <compartment> (count=<int>|conc=<molar>)'",
                                 lineno)
            sid, comp, mode, value = m.groups()
            where.setdefault(("species", sid), lineno)
            if mode == "count":
                if not re.fullmatch(r"\d{1,18}", value):
                    raise ParseError(f"species {sid}: count must be a non-negative integer "
                                     "below 10^18", lineno)
                species.append(Species(sid, comp, int(value)))
            else:
                conc = _float(value, f"species {sid} concentration", lineno)
                if conc < 0:
                    raise ParseError(f"species {sid}: negative concentration", lineno)
                species.append(Species(sid, comp, 0, conc))
                pending_conc.append((len(species) - 1, lineno))
        elif keyword == "reaction":
            m = _REACTION.match(line)
            if not m:
                raise ParseError("expected 'reaction <id>: <lhs> -> <rhs> @ <k>'", lineno)
            rid, lhs, rhs, k = m.groups()
            where.setdefault(("reaction", rid), lineno)
            raw.append((rid, _species_list(lhs, lineno), _species_list(rhs, lineno),
                        _float(k, f"reaction {rid} rate", lineno), lineno))
        else:
            raise ParseError(f"unknown statement {keyword!r}", lineno)

    for i, lineno in pending_conc:
        s = species[i]
        if s.compartment not in comp_volume:
            raise ParseError(f"species {s.id}: unknown compartment {s.compartment}", lineno)
        try:
            count = concentration_to_count(s.conc, comp_volume[s.compartment])
        except ModelError as exc:
            raise ParseError(f"species {s.id}: {exc}", lineno) from None
        species[i] = replace(s, count=count)
    return _finish(compartments, species, raw, where)


def _num(x):
    return repr(float(x))


def write_native(system):
    """Canonical native serialization; ``parse_native`` inverts it."""
    out = ["# nwtsim model"]
    if system.compartments:
        out.append("")
    for c in system.compartments:
        parent = f" parent={c.parent}" if c.parent else ""
        out.append(f"compartment {c.id} volume={_num(c.volume)}{parent}")
    if system.alphabet:
        out.append("")
    labels = system.species_labels()
    for s in system.alphabet:
        init = f"conc={_num(s.conc)}" if s.conc is not None else f"count={s.count}"
        out.append(f"species {s.id} in {s.compartment} {init}")
    if system.reactions:
        out.append("")
    for r in system.reactions:
        lhs = " + ".join(labels[i] for i in r.reactants)
        rhs = " + ".join(labels[i] for i in r.products) or "@"
        out.append(f"reaction {r.id}: {lhs} -> {rhs} @ {_num(r.k_conc)}")
    return "\n".join(out) + "\n"


def load_model(path, fmt=None, strict=True):
    """Read a model file, picking the format from ``fmt`` or the file suffix."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt is None:
        fmt = "sbml" if str(path).endswith((".xml", ".sbml")) else "native"
    if fmt == "sbml":
        return ModelDocument(str(path), "sbml-subset", parse_sbml_subset(text, strict=strict))
    if fmt == "native":
        return ModelDocument(str(path), "native", parse_native(text))
    raise ValueError(f"unknown model format {fmt!r}")


# --- SBML subset -------------------------------------------------------------

_STRUCTURE = {
    "sbml": {"model"},
    "model": {"listOfCompartments", "listOfSpecies", "listOfReactions"},
    "listOfCompartments": {"compartment"},
    "listOfSpecies": {"species"},
    "listOfReactions": {"reaction"},
    "reaction": {"listOfReactants", "listOfProducts", "kineticLaw"},
    "listOfReactants": {"speciesReference"},
    "listOfProducts": {"speciesReference"},
    "kineticLaw": {"math", "listOfParameters", "listOfLocalParameters"},
    "listOfParameters": {"parameter"},
    "listOfLocalParameters": {"localParameter"},
    "compartment": set(),
    "species": set(),
    "speciesReference": set(),
    "parameter": set(),
    "localParameter": set(),
}


def _local(tag):
    return tag.rsplit("}", 1)[-1]


def _check_structure(elem, strict, dropped):
    tag = _local(elem.tag)
    allowed = _STRUCTURE.get(tag, set())
    for child in list(elem):
        ctag = _local(child.tag)
        if tag == "kineticLaw" and ctag == "math":
            # the rate law is read positionally from the parameter, never evaluated
            continue
        if ctag not in allowed:
            if strict:
                raise UnsupportedSBMLFeature(ctag)
            log.warning("ignoring unsupported SBML feature <%s>", ctag)
            dropped.append(ctag)
            elem.remove(child)
            continue
        _check_structure(child, strict, dropped)


def _children(elem, name):
    return [c for c in elem if _local(c.tag) == name]


def _attr(elem, name, what):
    v = elem.get(name)
    if v is None:
        raise ParseError(f"{what}: missing attribute {name!r}")
    return v


def parse_sbml_subset(xml_text, strict=True):
    """Parse mass-action SBML into a prepared :class:`MembraneSystem`.

    Accepts compartments (``size``), species (``initialAmount`` as a
    molecule count or ``initialConcentration`` in molar) and reactions
    whose kinetic law carries exactly one numeric parameter, taken as the
    mass-action rate constant. Anything else raises
    :class:`UnsupportedSBMLFeature` in strict mode and is dropped with a
    warning otherwise.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed SBML: {exc}", exc.position[0]) from None
    if _local(root.tag) != "sbml":
        raise ParseError(f"root element is <{_local(root.tag)}>, expected <sbml>")
    _check_structure(root, strict, [])
    models = _children(root, "model")
    if len(models) != 1:
        raise ParseError("expected exactly one <model>")
    model = models[0]

    compartments = []
    for lst in _children(model, "listOfCompartments"):
        for c in _children(lst, "compartment"):
            cid = _attr(c, "id", "compartment")
            size = _float(c.get("size", c.get("volume", "1")), f"compartment {cid} size", None)
            compartments.append(Compartment(cid, size, c.get("outside")))
    volumes = {c.id: c.volume for c in compartments}

    species = []
    for lst in _children(model, "listOfSpecies"):
        for s in _children(lst, "species"):
            sid = _attr(s, "id", "species")
            comp = _attr(s, "compartment", f"species {sid}")
            if comp not in volumes:
                raise ParseError(f"species {sid}: unknown compartment {comp}")
            if s.get("initialConcentration") is not None:
                conc = _float(s.get("initialConcentration"), f"species {sid} concentration", None)
                species.append(Species(sid, comp, concentration_to_count(conc, volumes[comp]), conc))
            else:
                amount = _float(s.get("initialAmount", "0"), f"species {sid} amount", None)
                if amount < 0 or amount != int(amount):
                    raise ParseError(f"species {sid}: initialAmount must be a whole molecule count")
                species.append(Species(sid, comp, int(amount)))

    raw = []
    for lst in _children(model, "listOfReactions"):
        for r in _children(lst, "reaction"):
            rid = _attr(r, "id", "reaction")
            reac = _references(r, "listOfReactants", rid)
            prod = _references(r, "listOfProducts", rid)
            laws = _children(r, "kineticLaw")
            if len(laws) != 1:
                raise ParseError(f"reaction {rid}: expected one <kineticLaw>")
            params = [p for lst2 in laws[0] for p in lst2
                      if _local(p.tag) in ("parameter", "localParameter")]
            if len(params) != 1:
                raise UnsupportedSBMLFeature(f"kineticLaw with {len(params)} parameters in {rid}")
            k = _float(_attr(params[0], "value", f"reaction {rid} parameter"),
                       f"reaction {rid} rate", None)
            raw.append((rid, reac, prod, k, None))
    return _finish(compartments, species, raw)


def _references(reaction, list_name, rid):
    refs = []
    for lst in _children(reaction, list_name):
        for ref in _children(lst, "speciesReference"):
            sid = _attr(ref, "species", f"reaction {rid} speciesReference")
            stoich = _float(ref.get("stoichiometry", "1"), f"reaction {rid} stoichiometry", None)
            if stoich != int(stoich) or stoich < 1:
                raise ParseError(f"reaction {rid}: stoichiometry must be a positive integer")
            if stoich > 3:
                raise ParseError(f"reaction {rid}: arity>3, decompose into lower-order reactions")
            refs.extend([sid] * int(stoich))
    return refs
