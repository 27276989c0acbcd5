"""Restricted SBML dialect: parsing, serialization, benchmark eligibility.

The dialect covers Level 2 Version 4 through Level 3 Version 2 core
documents whose models consist of compartments, species, parameters, and
reactions with content-MathML kinetic laws. Level 2 inputs are up-converted
to the Level 3 in-memory form. Anything else hanging off the model element
(unit definitions, notes, annotations, rule/event containers, ...) is kept
as an opaque passthrough fragment, re-emitted verbatim on serialization;
parsing itself is lossless and judgement about forbidden content is left to
validation and eligibility checking.

Only the standard library XML machinery is used: documents this size parse
in microseconds and the restricted tag inventory does not justify a binding
to a full SBML library.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

from . import expressions as ex
from .expressions import Expression
from .model import (
    Compartment,
    Model,
    Parameter,
    PassthroughFragment,
    Reaction,
    Species,
    validate_model,
)

__all__ = [
    "SBML_L3V2_NS",
    "MATHML_NS",
    "SbmlParseError",
    "EligibilityReport",
    "parse_sbml",
    "serialize_sbml",
    "check_eligibility",
]

SBML_L3V2_NS = "http://www.sbml.org/sbml/level3/version2/core"
MATHML_NS = "http://www.w3.org/1998/Math/MathML"

# Accepted document namespaces, oldest first.
_ACCEPTED_NS = (
    "http://www.sbml.org/sbml/level2/version4",
    "http://www.sbml.org/sbml/level2/version5",
    "http://www.sbml.org/sbml/level3/version1/core",
    SBML_L3V2_NS,
)


class SbmlParseError(ValueError):
    """Raised for malformed documents, unsupported constructs, or dangling references."""


def _split_tag(tag: str) -> tuple[str, str]:
    if tag.startswith("{"):
        ns, _, local = tag[1:].partition("}")
        return ns, local
    return "", tag


def _local(el: ET.Element) -> str:
    return _split_tag(el.tag)[1]


def _parse_bool(raw: str | None, default: bool, context: str) -> bool:
    if raw is None:
        return default
    if raw in ("true", "1"):
        return True
    if raw in ("false", "0"):
        return False
    raise SbmlParseError(f"bad boolean {raw!r} on {context}")


def _parse_float(raw: str, context: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise SbmlParseError(f"bad number {raw!r} on {context}") from None


# ---------------------------------------------------------------------------
# XML writing
#
# ElementTree's serializer invents ns0: prefixes; this dialect reads better
# with default namespaces, so a small writer handles output. Elements with
# mixed content (notes) are written compactly to preserve text exactly.


def _has_mixed_content(el: ET.Element) -> bool:
    if el.text is not None and el.text.strip():
        return True
    for child in el:
        if child.tail is not None and child.tail.strip():
            return True
    return False


def _write_element(el: ET.Element, default_ns: str, indent: int, out: list[str],
                   compact: bool = False) -> None:
    ns, local = _split_tag(el.tag)
    attrs = []
    if ns and ns != default_ns:
        attrs.append(f"xmlns={quoteattr(ns)}")
        child_ns = ns
    else:
        child_ns = default_ns
    for key, value in el.attrib.items():
        key_ns, key_local = _split_tag(key)
        if key_ns:
            # namespaced attributes are outside the dialect; keep the local name
            key = key_local
        attrs.append(f"{key}={quoteattr(value)}")
    head = f"<{local}" + (" " + " ".join(attrs) if attrs else "")

    pad = "" if compact else "  " * indent
    children = list(el)
    text = el.text if el.text is not None else ""

    if not children and not text.strip():
        out.append(f"{pad}{head} />")
        return

    mixed = compact or _has_mixed_content(el)
    if mixed:
        parts = [f"{pad}{head}>"]
        parts.append(escape(text) if text else "")
        for child in children:
            sub: list[str] = []
            _write_element(child, child_ns, 0, sub, compact=True)
            parts.append("".join(sub))
            if child.tail:
                parts.append(escape(child.tail))
        parts.append(f"</{local}>")
        out.append("".join(parts))
        return

    out.append(f"{pad}{head}>")
    for child in children:
        _write_element(child, child_ns, indent + 1, out)
    out.append(f"{pad}</{local}>")


def element_to_xml(el: ET.Element, default_ns: str = SBML_L3V2_NS, indent: int = 0) -> str:
    out: list[str] = []
    _write_element(el, default_ns, indent, out)
    return "\n".join(out)


def _retag(el: ET.Element, old_ns: str, new_ns: str) -> None:
    """Rewrite a subtree's namespace in place (Level 2 -> Level 3 up-conversion)."""
    ns, local = _split_tag(el.tag)
    if ns == old_ns:
        el.tag = f"{{{new_ns}}}{local}"
    for child in el:
        _retag(child, old_ns, new_ns)


# ---------------------------------------------------------------------------
# MathML -> Expression

_MATHML_BINARY_MIN = {"minus": 1, "divide": 2, "power": 2}
_MATHML_DIRECT = {
    "plus", "minus", "times", "divide", "power",
    "exp", "ln", "abs", "floor", "ceiling",
    "lt", "leq", "gt", "geq", "eq", "neq",
    "and", "or", "not",
}


def _parse_cn(el: ET.Element) -> Expression:
    cn_type = el.get("type", "real")
    sep = [c for c in el if _local(c) == "sep"]
    head = (el.text or "").strip()
    tail = (sep[0].tail or "").strip() if sep else ""
    try:
        if cn_type in ("real", "integer"):
            return ex.num(float(head))
        if cn_type == "e-notation":
            return ex.num(float(f"{head}e{tail}"))
        if cn_type == "rational":
            return ex.num(float(head) / float(tail))
    except (ValueError, ZeroDivisionError):
        raise SbmlParseError(f"bad cn content {head!r}/{tail!r}") from None
    raise SbmlParseError(f"unsupported cn type {cn_type!r}")


def _parse_apply(el: ET.Element) -> Expression:
    children = list(el)
    if not children:
        raise SbmlParseError("empty apply element")
    op = _local(children[0])
    raw_args = children[1:]

    if op == "log":
        # default base 10; an explicit logbase rewrites to ln(x)/ln(b)
        base: Expression | None = None
        operands = []
        for child in raw_args:
            if _local(child) == "logbase":
                inner = list(child)
                if len(inner) != 1:
                    raise SbmlParseError("logbase requires exactly one child")
                base = _parse_math_node(inner[0])
            else:
                operands.append(_parse_math_node(child))
        if len(operands) != 1:
            raise SbmlParseError("log requires exactly one operand")
        if base is None or (base.kind == "num" and base.value == 10.0):
            return ex.call("log10", operands[0])
        if base.kind == "num" and base.value == math.e:
            return ex.call("ln", operands[0])
        return ex.call("divide", ex.call("ln", operands[0]), ex.call("ln", base))

    if op == "root":
        degree: Expression | None = None
        operands = []
        for child in raw_args:
            if _local(child) == "degree":
                inner = list(child)
                if len(inner) != 1:
                    raise SbmlParseError("degree requires exactly one child")
                degree = _parse_math_node(inner[0])
            else:
                operands.append(_parse_math_node(child))
        if len(operands) != 1:
            raise SbmlParseError("root requires exactly one operand")
        if degree is None or (degree.kind == "num" and degree.value == 2.0):
            return ex.call("sqrt", operands[0])
        return ex.call("power", operands[0], ex.call("divide", ex.num(1.0), degree))

    args = tuple(_parse_math_node(c) for c in raw_args)
    if op in _MATHML_DIRECT:
        minimum = _MATHML_BINARY_MIN.get(op)
        if minimum is not None and len(args) < minimum:
            raise SbmlParseError(f"{op} applied to too few arguments")
        if op in ("divide", "power", "minus") and len(args) > 2:
            raise SbmlParseError(f"{op} applied to too many arguments")
        if op in ex.RELATIONS and len(args) != 2:
            raise SbmlParseError(f"{op} requires exactly two arguments")
        if op in ("exp", "ln", "abs", "floor", "ceiling", "not") and len(args) != 1:
            raise SbmlParseError(f"{op} requires exactly one argument")
        return ex.call(op, *args)
    raise SbmlParseError(f"unsupported MathML operator {op!r}")


def _parse_piecewise(el: ET.Element) -> Expression:
    args: list[Expression] = []
    default: Expression | None = None
    for child in el:
        local = _local(child)
        if local == "piece":
            inner = list(child)
            if len(inner) != 2:
                raise SbmlParseError("piece requires a value and a condition")
            args.append(_parse_math_node(inner[0]))
            args.append(_parse_math_node(inner[1]))
        elif local == "otherwise":
            inner = list(child)
            if len(inner) != 1:
                raise SbmlParseError("otherwise requires exactly one child")
            default = _parse_math_node(inner[0])
        else:
            raise SbmlParseError(f"unsupported piecewise child {local!r}")
    if default is not None:
        args.append(default)
    return ex.call("piecewise", *args)


def _parse_math_node(el: ET.Element) -> Expression:
    local = _local(el)
    if local == "ci":
        name = (el.text or "").strip()
        if not name:
            raise SbmlParseError("empty ci element")
        return ex.sym(name)
    if local == "cn":
        return _parse_cn(el)
    if local == "apply":
        return _parse_apply(el)
    if local == "piecewise":
        return _parse_piecewise(el)
    if local == "pi":
        return ex.num(math.pi)
    if local == "exponentiale":
        return ex.num(math.e)
    if local == "true":
        return ex.num(1.0)
    if local == "false":
        return ex.num(0.0)
    raise SbmlParseError(f"unsupported MathML construct {local!r}")


def parse_math(math_el: ET.Element) -> Expression:
    ns, local = _split_tag(math_el.tag)
    if local != "math" or ns != MATHML_NS:
        raise SbmlParseError("kineticLaw math must be MathML content markup")
    children = list(math_el)
    if len(children) != 1:
        raise SbmlParseError("math element must contain exactly one expression")
    return _parse_math_node(children[0])


# ---------------------------------------------------------------------------
# Expression -> MathML


def _m(tag: str, *children: ET.Element, text: str | None = None,
       attrib: dict[str, str] | None = None) -> ET.Element:
    el = ET.Element(f"{{{MATHML_NS}}}{tag}", attrib or {})
    if text is not None:
        el.text = text
    el.extend(children)
    return el


def _number_element(value: float) -> ET.Element:
    text = repr(value)
    if "e" in text:
        mantissa, _, exponent = text.partition("e")
        el = _m("cn", attrib={"type": "e-notation"}, text=f" {mantissa} ")
        sep = _m("sep")
        sep.tail = f" {exponent} "
        el.append(sep)
        return el
    if text.endswith(".0"):
        return _m("cn", attrib={"type": "integer"}, text=f" {text[:-2]} ")
    return _m("cn", text=f" {text} ")


def math_to_element(expr: Expression) -> ET.Element:
    return _m("math", _expression_element(expr))


def _expression_element(expr: Expression) -> ET.Element:
    if expr.kind == "num":
        return _number_element(expr.value)
    if expr.kind == "sym":
        return _m("ci", text=f" {expr.name} ")

    op = expr.name
    if op == "piecewise":
        pw = _m("piecewise")
        n_pairs = len(expr.args) // 2
        for i in range(n_pairs):
            pw.append(_m("piece",
                         _expression_element(expr.args[2 * i]),
                         _expression_element(expr.args[2 * i + 1])))
        if len(expr.args) % 2 == 1:
            pw.append(_m("otherwise", _expression_element(expr.args[-1])))
        return pw
    if op == "sqrt":
        return _m("apply", _m("root"), _expression_element(expr.args[0]))
    if op == "log10":
        return _m("apply", _m("log"), _expression_element(expr.args[0]))
    return _m("apply", _m(op), *(_expression_element(a) for a in expr.args))


# ---------------------------------------------------------------------------
# Document parsing

_CORE_MODEL_CHILDREN = frozenset(
    {"listOfCompartments", "listOfSpecies", "listOfParameters", "listOfReactions"}
)

# Canonical emission order of model children; passthrough fragments slot in
# around the core lists.
_MODEL_CHILD_ORDER = (
    "notes",
    "annotation",
    "listOfFunctionDefinitions",
    "listOfUnitDefinitions",
    "listOfCompartments",
    "listOfSpecies",
    "listOfParameters",
    "listOfInitialAssignments",
    "listOfRules",
    "listOfConstraints",
    "listOfReactions",
    "listOfEvents",
)

_MODEL_PASSTHROUGH_ATTRS = (
    "substanceUnits", "timeUnits", "volumeUnits", "areaUnits", "lengthUnits",
    "extentUnits", "conversionFactor", "metaid", "sboTerm",
)


def _parse_species(el: ET.Element, compartment_sizes: dict[str, float]) -> Species:
    sid = el.get("id")
    if not sid:
        raise SbmlParseError("species without id")
    compartment = el.get("compartment")
    if not compartment:
        raise SbmlParseError(f"species {sid!r} without compartment")
    hosu = _parse_bool(el.get("hasOnlySubstanceUnits"), False, f"species {sid}")

    conc_raw = el.get("initialConcentration")
    amount_raw = el.get("initialAmount")
    if conc_raw is not None and amount_raw is not None:
        raise SbmlParseError(f"species {sid!r} sets both initialAmount and initialConcentration")
    if conc_raw is not None:
        value = _parse_float(conc_raw, f"species {sid}")
        if hosu:
            # substance-units species are tracked as amounts
            size = compartment_sizes.get(compartment, 1.0)
            value = value * size
    elif amount_raw is not None:
        value = _parse_float(amount_raw, f"species {sid}")
        if not hosu:
            size = compartment_sizes.get(compartment)
            if size is None:
                raise SbmlParseError(f"species {sid!r} references unknown compartment {compartment!r}")
            if size <= 0:
                raise SbmlParseError(f"species {sid!r} in nonpositive-size compartment {compartment!r}")
            value = value / size
    else:
        value = 0.0

    return Species(
        id=sid,
        compartment=compartment,
        initial_value=value,
        name=el.get("name"),
        boundary_condition=_parse_bool(el.get("boundaryCondition"), False, f"species {sid}"),
        constant=_parse_bool(el.get("constant"), False, f"species {sid}"),
        has_only_substance_units=hosu,
        substance_units=el.get("substanceUnits"),
    )


def _parse_parameter(el: ET.Element) -> Parameter:
    pid = el.get("id")
    if not pid:
        raise SbmlParseError("parameter without id")
    raw = el.get("value")
    value = _parse_float(raw, f"parameter {pid}") if raw is not None else 0.0
    return Parameter(
        id=pid,
        value=value,
        constant=_parse_bool(el.get("constant"), True, f"parameter {pid}"),
        units=el.get("units"),
        name=el.get("name"),
    )


def _parse_compartment(el: ET.Element) -> Compartment:
    cid = el.get("id")
    if not cid:
        raise SbmlParseError("compartment without id")
    raw = el.get("size")
    dims_raw = el.get("spatialDimensions")
    return Compartment(
        id=cid,
        size=_parse_float(raw, f"compartment {cid}") if raw is not None else 1.0,
        spatial_dimensions=int(float(dims_raw)) if dims_raw is not None else 3,
        constant=_parse_bool(el.get("constant"), True, f"compartment {cid}"),
        units=el.get("units"),
        name=el.get("name"),
    )


def _parse_species_refs(container: ET.Element, rid: str) -> tuple[tuple[str, float], ...]:
    refs = []
    for child in container:
        if _local(child) != "speciesReference":
            raise SbmlParseError(f"unexpected {_local(child)!r} in reaction {rid!r}")
        sid = child.get("species")
        if not sid:
            raise SbmlParseError(f"speciesReference without species in reaction {rid!r}")
        stoich_raw = child.get("stoichiometry")
        stoich = _parse_float(stoich_raw, f"reaction {rid}") if stoich_raw is not None else 1.0
        refs.append((sid, stoich))
    return tuple(refs)


def _parse_reaction(el: ET.Element) -> Reaction:
    rid = el.get("id")
    if not rid:
        raise SbmlParseError("reaction without id")
    reactants: tuple[tuple[str, float], ...] = ()
    products: tuple[tuple[str, float], ...] = ()
    modifiers: list[str] = []
    locals_: list[Parameter] = []
    law: Expression | None = None

    for child in el:
        local = _local(child)
        if local == "listOfReactants":
            reactants = _parse_species_refs(child, rid)
        elif local == "listOfProducts":
            products = _parse_species_refs(child, rid)
        elif local == "listOfModifiers":
            for ref in child:
                if _local(ref) != "modifierSpeciesReference":
                    raise SbmlParseError(f"unexpected {_local(ref)!r} in modifiers of {rid!r}")
                sid = ref.get("species")
                if not sid:
                    raise SbmlParseError(f"modifier without species in reaction {rid!r}")
                modifiers.append(sid)
        elif local == "kineticLaw":
            math_el = None
            for kl_child in child:
                kl_local = _local(kl_child)
                if kl_local == "math":
                    math_el = kl_child
                elif kl_local in ("listOfLocalParameters", "listOfParameters"):
                    for p in kl_child:
                        if _local(p) not in ("localParameter", "parameter"):
                            raise SbmlParseError(f"unexpected {_local(p)!r} in local parameters of {rid!r}")
                        locals_.append(_parse_parameter(p))
                else:
                    raise SbmlParseError(f"unsupported kineticLaw child {kl_local!r} in {rid!r}")
            if math_el is None:
                raise SbmlParseError(f"kineticLaw of reaction {rid!r} has no math")
            law = parse_math(math_el)
        else:
            raise SbmlParseError(f"unsupported reaction child {local!r} in {rid!r}")

    if law is None:
        raise SbmlParseError(f"reaction {rid!r} has no kineticLaw")
    return Reaction(
        id=rid,
        reactants=reactants,
        products=products,
        kinetic_law=law,
        modifiers=tuple(modifiers),
        local_parameters=tuple(locals_),
        reversible=_parse_bool(el.get("reversible"), True, f"reaction {rid}"),
        name=el.get("name"),
    )


def parse_sbml(document: bytes | str) -> Model:
    """Parse a restricted-dialect document into a :class:`Model`.

    Raises :class:`SbmlParseError` for malformed XML, unsupported levels or
    MathML constructs, and dangling species/symbol references. Tags outside
    the dialect are preserved as passthrough fragments, not rejected here:
    eligibility checking and validation decide what to do with them.
    """
    if isinstance(document, str):
        document = document.encode("utf-8")
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise SbmlParseError(f"malformed XML: {exc}") from None

    ns, local = _split_tag(root.tag)
    if local != "sbml":
        raise SbmlParseError(f"root element is {local!r}, expected sbml")
    if ns not in _ACCEPTED_NS:
        raise SbmlParseError(f"unsupported SBML namespace {ns!r}")
    if ns != SBML_L3V2_NS:
        _retag(root, ns, SBML_L3V2_NS)

    model_els = [c for c in root if _local(c) == "model"]
    if len(model_els) != 1:
        raise SbmlParseError(f"document contains {len(model_els)} model elements")
    model_el = model_els[0]

    # First pass: compartments, so amounts can be normalized to concentrations.
    compartments: list[Compartment] = []
    for child in model_el:
        if _local(child) == "listOfCompartments":
            compartments.extend(_parse_compartment(c) for c in child)
    sizes = {c.id: c.size for c in compartments}

    species: list[Species] = []
    parameters: list[Parameter] = []
    reactions: list[Reaction] = []
    passthrough: list[PassthroughFragment] = []
    for child in model_el:
        local = _local(child)
        if local == "listOfCompartments":
            continue
        if local == "listOfSpecies":
            species.extend(_parse_species(s, sizes) for s in child)
        elif local == "listOfParameters":
            parameters.extend(_parse_parameter(p) for p in child)
        elif local == "listOfReactions":
            reactions.extend(_parse_reaction(r) for r in child)
        else:
            passthrough.append(PassthroughFragment(local, element_to_xml(child, SBML_L3V2_NS, 2)))

    attributes = tuple(
        (key, value) for key, value in model_el.attrib.items()
        if key in _MODEL_PASSTHROUGH_ATTRS
    )
    model = Model(
        species=tuple(species),
        parameters=tuple(parameters),
        compartments=tuple(compartments),
        reactions=tuple(reactions),
        passthrough=tuple(passthrough),
        id=model_el.get("id"),
        name=model_el.get("name"),
        attributes=attributes,
    )

    _check_references(model)
    return model


def _check_references(model: Model) -> None:
    species_ids = set(model.species_ids())
    symbol_scope = species_ids | {p.id for p in model.parameters} | {c.id for c in model.compartments}
    compartment_ids = {c.id for c in model.compartments}

    for s in model.species:
        if s.compartment not in compartment_ids:
            raise SbmlParseError(f"species {s.id!r} references unknown compartment {s.compartment!r}")
    for r in model.reactions:
        for sid, _ in (*r.reactants, *r.products):
            if sid not in species_ids:
                raise SbmlParseError(f"reaction {r.id!r} references missing species {sid!r}")
        for sid in r.modifiers:
            if sid not in species_ids:
                raise SbmlParseError(f"reaction {r.id!r} references missing species {sid!r}")
        scope = symbol_scope | {p.id for p in r.local_parameters}
        for name in sorted(ex.free_symbols(r.kinetic_law)):
            if name not in scope:
                raise SbmlParseError(
                    f"kinetic law of {r.id!r} references unresolved symbol {name!r}"
                )


# ---------------------------------------------------------------------------
# Serialization


def _fmt(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def _bool_attr(value: bool) -> str:
    return "true" if value else "false"


def _species_line(s: Species, pad: str) -> str:
    attrs = [f'id={quoteattr(s.id)}']
    if s.name is not None:
        attrs.append(f'name={quoteattr(s.name)}')
    attrs.append(f'compartment={quoteattr(s.compartment)}')
    if s.has_only_substance_units:
        attrs.append(f'initialAmount="{_fmt(s.initial_value)}"')
    else:
        attrs.append(f'initialConcentration="{_fmt(s.initial_value)}"')
    if s.substance_units is not None:
        attrs.append(f'substanceUnits={quoteattr(s.substance_units)}')
    attrs.append(f'hasOnlySubstanceUnits="{_bool_attr(s.has_only_substance_units)}"')
    attrs.append(f'boundaryCondition="{_bool_attr(s.boundary_condition)}"')
    attrs.append(f'constant="{_bool_attr(s.constant)}"')
    return f"{pad}<species {' '.join(attrs)} />"


def _parameter_line(p: Parameter, pad: str, tag: str = "parameter") -> str:
    attrs = [f'id={quoteattr(p.id)}']
    if p.name is not None:
        attrs.append(f'name={quoteattr(p.name)}')
    attrs.append(f'value="{_fmt(p.value)}"')
    if p.units is not None:
        attrs.append(f'units={quoteattr(p.units)}')
    if tag == "parameter":
        attrs.append(f'constant="{_bool_attr(p.constant)}"')
    return f"{pad}<{tag} {' '.join(attrs)} />"


def _compartment_line(c: Compartment, pad: str) -> str:
    attrs = [f'id={quoteattr(c.id)}']
    if c.name is not None:
        attrs.append(f'name={quoteattr(c.name)}')
    attrs.append(f'spatialDimensions="{c.spatial_dimensions}"')
    attrs.append(f'size="{_fmt(c.size)}"')
    if c.units is not None:
        attrs.append(f'units={quoteattr(c.units)}')
    attrs.append(f'constant="{_bool_attr(c.constant)}"')
    return f"{pad}<compartment {' '.join(attrs)} />"


def _reaction_lines(r: Reaction, indent: int) -> list[str]:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    ref_pad = "  " * (indent + 2)
    attrs = [f'id={quoteattr(r.id)}']
    if r.name is not None:
        attrs.append(f'name={quoteattr(r.name)}')
    attrs.append(f'reversible="{_bool_attr(r.reversible)}"')
    lines = [f"{pad}<reaction {' '.join(attrs)}>"]

    for tag, refs in (("listOfReactants", r.reactants), ("listOfProducts", r.products)):
        if refs:
            lines.append(f"{inner}<{tag}>")
            for sid, stoich in refs:
                lines.append(
                    f'{ref_pad}<speciesReference species={quoteattr(sid)} '
                    f'stoichiometry="{_fmt(stoich)}" constant="true" />'
                )
            lines.append(f"{inner}</{tag}>")
    if r.modifiers:
        lines.append(f"{inner}<listOfModifiers>")
        for sid in r.modifiers:
            lines.append(f"{ref_pad}<modifierSpeciesReference species={quoteattr(sid)} />")
        lines.append(f"{inner}</listOfModifiers>")

    lines.append(f"{inner}<kineticLaw>")
    lines.append(element_to_xml(math_to_element(r.kinetic_law), SBML_L3V2_NS, indent + 2))
    if r.local_parameters:
        lines.append(f"{ref_pad}<listOfLocalParameters>")
        for p in r.local_parameters:
            lines.append(_parameter_line(p, "  " * (indent + 3), tag="localParameter"))
        lines.append(f"{ref_pad}</listOfLocalParameters>")
    lines.append(f"{inner}</kineticLaw>")
    lines.append(f"{pad}</reaction>")
    return lines


def serialize_sbml(model: Model) -> bytes:
    """Emit the model as Level 3 Version 2 core XML.

    Numeric attributes use the shortest round-tripping decimal form, so
    output is stable across platforms; re-parsing yields a structurally
    equal model.
    """
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(f'<sbml xmlns="{SBML_L3V2_NS}" level="3" version="2">')

    model_attrs = []
    if model.id is not None:
        model_attrs.append(f'id={quoteattr(model.id)}')
    if model.name is not None:
        model_attrs.append(f'name={quoteattr(model.name)}')
    for key, value in model.attributes:
        model_attrs.append(f'{key}={quoteattr(value)}')
    lines.append("  <model" + (" " + " ".join(model_attrs) if model_attrs else "") + ">")

    by_tag: dict[str, list[PassthroughFragment]] = {}
    for frag in model.passthrough:
        by_tag.setdefault(frag.tag, []).append(frag)
    emitted: set[int] = set()

    def emit_fragments(tag: str) -> None:
        for frag in by_tag.get(tag, ()):
            lines.append(frag.xml)
            emitted.add(id(frag))

    for slot in _MODEL_CHILD_ORDER:
        if slot == "listOfCompartments":
            if model.compartments:
                lines.append("    <listOfCompartments>")
                lines.extend(_compartment_line(c, "      ") for c in model.compartments)
                lines.append("    </listOfCompartments>")
        elif slot == "listOfSpecies":
            if model.species:
                lines.append("    <listOfSpecies>")
                lines.extend(_species_line(s, "      ") for s in model.species)
                lines.append("    </listOfSpecies>")
        elif slot == "listOfParameters":
            if model.parameters:
                lines.append("    <listOfParameters>")
                lines.extend(_parameter_line(p, "      ") for p in model.parameters)
                lines.append("    </listOfParameters>")
        elif slot == "listOfReactions":
            if model.reactions:
                lines.append("    <listOfReactions>")
                for r in model.reactions:
                    lines.extend(_reaction_lines(r, 3))
                lines.append("    </listOfReactions>")
        else:
            emit_fragments(slot)

    for frag in model.passthrough:
        if id(frag) not in emitted:
            lines.append(frag.xml)

    lines.append("  </model>")
    lines.append("</sbml>")
    lines.append("")
    return "\n".join(lines).encode("utf-8")


# ---------------------------------------------------------------------------
# Eligibility

_EVENT_TAGS = frozenset({"listOfEvents", "event"})
_RULE_TAGS = frozenset({"listOfRules", "rule", "algebraicRule", "assignmentRule", "rateRule"})

REJECT_PARSE = "parse-failure"
REJECT_NO_SPECIES = "no-species"
REJECT_NO_REACTIONS = "no-reactions"
REJECT_HAS_EVENTS = "has-events"
REJECT_HAS_RULES = "has-rules"
REJECT_SIMULATION = "simulation-failure"


@dataclass(frozen=True)
class EligibilityReport:
    """Outcome of the benchmark intake checks for one raw document."""

    accepted: bool
    reasons: tuple[str, ...] = ()
    messages: tuple[str, ...] = ()

    def __post_init__(self):
        assert self.accepted == (not self.reasons)


def check_eligibility(document: bytes | str, sim_probe: bool = True) -> EligibilityReport:
    """Decide whether a raw document qualifies as a benchmark system.

    Checks run in a fixed order — parse, no-species, no-reactions,
    has-events, has-rules, then an optional integration smoke test — and
    every failed check is reported, not only the first. The smoke test runs
    only when the structural checks pass, since its outcome is meaningless
    on a model that is already rejected.
    """
    try:
        model = parse_sbml(document)
    except SbmlParseError as exc:
        return EligibilityReport(False, (REJECT_PARSE,), (str(exc),))

    reasons: list[str] = []
    messages: list[str] = []
    if not model.species:
        reasons.append(REJECT_NO_SPECIES)
    if not model.reactions:
        reasons.append(REJECT_NO_REACTIONS)
    fragment_tags = {frag.tag for frag in model.passthrough}
    if fragment_tags & _EVENT_TAGS:
        reasons.append(REJECT_HAS_EVENTS)
    if fragment_tags & _RULE_TAGS:
        reasons.append(REJECT_HAS_RULES)

    if sim_probe and not reasons:
        problem = _simulation_probe(model)
        if problem is not None:
            reasons.append(REJECT_SIMULATION)
            messages.append(problem)

    return EligibilityReport(not reasons, tuple(reasons), tuple(messages))


def _simulation_probe(model: Model) -> str | None:
    from .simulate import PROBE_RHS_BUDGET, SimulationError, assemble, simulate

    diagnostics = validate_model(model)
    if diagnostics:
        return "; ".join(str(d) for d in diagnostics)
    try:
        system = assemble(model)
        simulate(system, {}, duration=1.0, n_points=11, rhs_budget=PROBE_RHS_BUDGET)
    except (SimulationError, ex.ExpressionError) as exc:
        return str(exc)
    return None
