"""Turning an eligible model into a discovery task.

The pipeline strips metadata, shuffles component order, renames every
component id to a fresh 4-character alphanumeric identifier, determines a
simulation window, and removes all reactions (plus anything referencing
them) to produce the agent-visible partial model. A final textual scan
proves the partial leaks nothing about what was removed.

Randomness comes from numpy's Philox generator, a named counter-based
64-bit algorithm, so a (document, seed) pair yields the same task bundle on
any platform.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .expressions import Expression
from .model import Model, PassthroughFragment, Reaction
from .sbml import check_eligibility, element_to_xml, parse_sbml, serialize_sbml
from .simulate import determine_duration

__all__ = [
    "IdMap",
    "TaskInstance",
    "CurationError",
    "anonymize",
    "mask_reactions",
    "leakage_scan",
    "curate_document",
    "write_bundle",
    "read_bundle",
    "DEFAULT_N_POINTS",
]

ID_PATTERN = re.compile(r"[A-Za-z][A-Za-z0-9]{3}\Z")
DEFAULT_N_POINTS = 101

_FIRST_CHARS = string.ascii_letters
_REST_CHARS = string.ascii_letters + string.digits
_ID_SPACE = len(_FIRST_CHARS) * len(_REST_CHARS) ** 3


class CurationError(Exception):
    """A model could not be turned into a sound task."""


@dataclass(frozen=True)
class IdMap:
    """Injective original-id to anonymized-id mapping for one curation run."""

    forward: tuple[tuple[str, str], ...]
    seed: int

    def as_dict(self) -> dict[str, str]:
        return dict(self.forward)

    def reverse(self) -> dict[str, str]:
        return {new: old for old, new in self.forward}


EMPTY_ID_MAP = IdMap(forward=(), seed=0)


@dataclass(frozen=True)
class TaskInstance:
    """A curated discovery task: hidden reference plus agent-visible partial."""

    reference: Model
    partial: Model
    id_map: IdMap = EMPTY_ID_MAP
    duration_s: float | None = None
    n_points: int | None = None
    seed: int = 0


# ---------------------------------------------------------------------------
# Metadata stripping

_METADATA_ATTRS = ("metaid", "sboTerm")
_METADATA_FRAGMENT_TAGS = frozenset({"notes", "annotation"})


def _scrub_fragment(xml: str) -> str:
    """Drop metaid attributes, names, and notes/annotation subtrees from a fragment."""
    import xml.etree.ElementTree as ET

    root = ET.fromstring(xml)

    def scrub(el: ET.Element) -> None:
        for attr in (*_METADATA_ATTRS, "name"):
            el.attrib.pop(attr, None)
        for child in [c for c in el if _fragment_local(c.tag) in _METADATA_FRAGMENT_TAGS]:
            el.remove(child)
        for child in el:
            scrub(child)

    scrub(root)
    return element_to_xml(root, default_ns="", indent=2)


def _fragment_local(tag: str) -> str:
    return tag.rpartition("}")[2]


# ---------------------------------------------------------------------------
# Anonymization


def _draw_id(rng: np.random.Generator, taken: set[str], document_text: str) -> str:
    for _ in range(10_000):
        chars = [_FIRST_CHARS[rng.integers(len(_FIRST_CHARS))]]
        chars.extend(_REST_CHARS[rng.integers(len(_REST_CHARS))] for _ in range(3))
        candidate = "".join(chars)
        # avoid collisions with surviving identifiers (unit ids, attribute values)
        if candidate not in taken and not _word_match(candidate, document_text):
            taken.add(candidate)
            return candidate
    raise CurationError("anonymized id space exhausted")


def _word_match(token: str, text: str) -> bool:
    return re.search(rf"(?<![A-Za-z0-9_]){re.escape(token)}(?![A-Za-z0-9_])", text) is not None


def _rename_expression(expr: Expression, mapping: dict[str, str]) -> Expression:
    if expr.kind == "sym":
        return replace(expr, name=mapping.get(expr.name, expr.name))
    if expr.kind == "call":
        return replace(expr, args=tuple(_rename_expression(a, mapping) for a in expr.args))
    return expr


def anonymize(model: Model, seed: int) -> tuple[Model, IdMap]:
    """De-identify a model without touching its dynamics.

    Strips metadata (notes, annotations, metaids, display names other than
    species names), shuffles species/parameter/compartment/reaction order,
    and renames every component id to a fresh 4-character identifier
    starting with a letter, rewriting all references consistently. Same
    (model, seed) always yields the same output.
    """
    n_components = (
        len(model.species) + len(model.parameters) + len(model.compartments)
        + len(model.reactions) + sum(len(r.local_parameters) for r in model.reactions)
        + 1  # model id
    )
    if n_components > _ID_SPACE:
        raise CurationError(f"model has {n_components} components, id space is {_ID_SPACE}")

    rng = np.random.Generator(np.random.Philox(key=seed))

    def shuffled(items: tuple) -> list:
        items = list(items)
        order = rng.permutation(len(items))
        return [items[i] for i in order]

    parameters = shuffled(model.parameters)
    reactions = shuffled(model.reactions)
    species = shuffled(model.species)
    compartments = shuffled(model.compartments)

    document_text = serialize_sbml(model).decode("utf-8")
    taken: set[str] = set()
    mapping: dict[str, str] = {}
    pairs: list[tuple[str, str]] = []

    def remap(original: str) -> str:
        if original in mapping:
            return mapping[original]
        fresh = _draw_id(rng, taken, document_text)
        mapping[original] = fresh
        pairs.append((original, fresh))
        return fresh

    model_id = remap(model.id) if model.id is not None else None
    for c in compartments:
        remap(c.id)
    for s in species:
        remap(s.id)
    for p in parameters:
        remap(p.id)
    for r in reactions:
        remap(r.id)

    # reaction-local ids are scoped: qualify the key if the bare id is taken
    local_maps: dict[str, dict[str, str]] = {}
    for r in reactions:
        local_map: dict[str, str] = {}
        for p in r.local_parameters:
            fresh = _draw_id(rng, taken, document_text)
            key = p.id if p.id not in mapping else f"{r.id}.{p.id}"
            mapping.setdefault(p.id, fresh)
            pairs.append((key, fresh))
            local_map[p.id] = fresh
        local_maps[r.id] = local_map

    new_compartments = tuple(
        replace(c, id=mapping[c.id], name=None) for c in compartments
    )
    new_species = tuple(
        replace(s, id=mapping[s.id], compartment=mapping[s.compartment]) for s in species
    )
    new_parameters = tuple(
        replace(p, id=mapping[p.id], name=None) for p in parameters
    )
    new_reactions = []
    for r in reactions:
        law_map = dict(mapping)
        law_map.update(local_maps[r.id])
        new_reactions.append(Reaction(
            id=mapping[r.id],
            reactants=tuple((mapping[sid], st) for sid, st in r.reactants),
            products=tuple((mapping[sid], st) for sid, st in r.products),
            kinetic_law=_rename_expression(r.kinetic_law, law_map),
            modifiers=tuple(mapping[sid] for sid in r.modifiers),
            local_parameters=tuple(
                replace(p, id=local_maps[r.id][p.id], name=None) for p in r.local_parameters
            ),
            reversible=r.reversible,
            name=None,
        ))

    passthrough = []
    for frag in model.passthrough:
        if frag.tag in _METADATA_FRAGMENT_TAGS:
            continue
        xml = _scrub_fragment(frag.xml)
        for original, fresh in mapping.items():
            xml = re.sub(
                rf"(?<![A-Za-z0-9_]){re.escape(original)}(?![A-Za-z0-9_])", fresh, xml
            )
        passthrough.append(PassthroughFragment(frag.tag, xml))

    attributes = tuple(
        (k, v) for k, v in model.attributes if k not in _METADATA_ATTRS
    )
    anonymized = Model(
        species=new_species,
        parameters=new_parameters,
        compartments=new_compartments,
        reactions=tuple(new_reactions),
        passthrough=tuple(passthrough),
        id=model_id,
        name=None,
        attributes=attributes,
    )
    return anonymized, IdMap(forward=tuple(pairs), seed=seed)


# ---------------------------------------------------------------------------
# Masking


def mask_reactions(model: Model, id_map: IdMap = EMPTY_ID_MAP) -> TaskInstance:
    """Remove all reactions from a model, producing the discovery task pair.

    Passthrough fragments that textually reference a removed reaction are
    deleted whole, then global parameters referenced by nothing remaining
    are dropped. Species, compartments, and units survive untouched; the
    reference model keeps everything.
    """
    removed_reaction_ids = [r.id for r in model.reactions]

    kept_fragments = []
    for frag in model.passthrough:
        if any(_word_match(rid, frag.xml) for rid in removed_reaction_ids):
            continue
        kept_fragments.append(frag)

    remaining_text = "\n".join(f.xml for f in kept_fragments)
    kept_parameters = tuple(
        p for p in model.parameters if _word_match(p.id, remaining_text)
    )

    partial = Model(
        species=model.species,
        parameters=kept_parameters,
        compartments=model.compartments,
        reactions=(),
        passthrough=tuple(kept_fragments),
        id=model.id,
        name=model.name,
        attributes=model.attributes,
    )
    return TaskInstance(reference=model, partial=partial, id_map=id_map)


def leakage_scan(task: TaskInstance) -> list[str]:
    """Identifiers from the hidden side that still occur in the partial document.

    Scans the serialized partial model for removed reaction ids, removed
    parameter ids, and every pre-anonymization id; any hit is a leak. The
    removed-parameter set is recomputed from the reference (what masking is
    supposed to drop), so a partial that illegally retains an orphaned
    parameter is caught too.
    """
    text = serialize_sbml(task.partial).decode("utf-8")
    expected_partial = (
        task.partial if not task.reference.reactions else mask_reactions(task.reference).partial
    )
    surviving_parameter_ids = {p.id for p in expected_partial.parameters}

    candidates: list[str] = []
    for r in task.reference.reactions:
        candidates.append(r.id)
        candidates.extend(p.id for p in r.local_parameters)
    candidates.extend(
        p.id for p in task.reference.parameters if p.id not in surviving_parameter_ids
    )
    candidates.extend(original for original, _ in task.id_map.forward)

    hits = []
    seen: set[str] = set()
    for token in candidates:
        if token in seen:
            continue
        seen.add(token)
        if _word_match(token, text):
            hits.append(token)
    return hits


# ---------------------------------------------------------------------------
# Pipeline and bundle layout


def curate_document(document: bytes | str, seed: int,
                    n_points: int = DEFAULT_N_POINTS) -> TaskInstance:
    """Full curation: eligibility, anonymization, duration, masking, leak scan."""
    report = check_eligibility(document, sim_probe=True)
    if not report.accepted:
        raise CurationError(
            "ineligible document: " + ", ".join(report.reasons)
            + ("" if not report.messages else f" ({'; '.join(report.messages)})")
        )
    model = parse_sbml(document)
    anonymized, id_map = anonymize(model, seed)
    duration, _termination = determine_duration(anonymized)
    task = mask_reactions(anonymized, id_map)
    task = replace(task, duration_s=duration, n_points=n_points, seed=seed)
    leaks = leakage_scan(task)
    if leaks:
        raise CurationError(f"leakage scan failed: {leaks}")
    return task


def write_bundle(task: TaskInstance, directory: str | Path) -> Path:
    """Write the task to disk: reference.xml, partial.xml, idmap.tsv, task.toml."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "reference.xml").write_bytes(serialize_sbml(task.reference))
    (directory / "partial.xml").write_bytes(serialize_sbml(task.partial))
    rows = sorted(task.id_map.forward)
    (directory / "idmap.tsv").write_text(
        "".join(f"{original}\t{fresh}\n" for original, fresh in rows)
    )
    from . import __version__

    meta = [
        f"duration_s = {task.duration_s!r}",
        f"n_points = {task.n_points!r}",
        f"seed = {task.seed!r}",
        f'version = "{__version__}"',
    ]
    (directory / "task.toml").write_text("\n".join(meta) + "\n")
    return directory


def read_bundle(directory: str | Path) -> TaskInstance:
    directory = Path(directory)
    reference = parse_sbml((directory / "reference.xml").read_bytes())
    partial = parse_sbml((directory / "partial.xml").read_bytes())
    pairs = []
    idmap_path = directory / "idmap.tsv"
    if idmap_path.exists():
        for line in idmap_path.read_text().splitlines():
            if line.strip():
                original, fresh = line.split("\t")
                pairs.append((original, fresh))
    meta: dict[str, str] = {}
    for line in (directory / "task.toml").read_text().splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    seed = int(meta.get("seed", "0"))
    return TaskInstance(
        reference=reference,
        partial=partial,
        id_map=IdMap(forward=tuple(pairs), seed=seed),
        duration_s=float(meta["duration_s"]),
        n_points=int(meta["n_points"]),
        seed=seed,
    )
