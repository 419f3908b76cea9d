"""Analysis pipeline and its JSON, DOT and Markdown renderings."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .bindings import (
    BRANCH, CAUSAL, COMMUNICATIVE, EVENT_SUBTYPE, SEQUENTIAL, AnalysisWarning, Binding, bindings_for,
    question_stems, value_chains,
)
from .compose import CompositionResult, compose
from .elements import Element, ElementTree, identify_elements, scale_name
from .errors import InvariantError
from .lang import parse, resolve_names
from .properties import EFFECT, ELEMENT_STEMS, EMPTY, KINDS, LISTS, PropertySet, assign_properties

SCHEMA_VERSION = "flare-v2.0"

# which element scales each view shows
VIEW_SCALES = {
    "all": (0, 1, 2),
    "statement": (0, 1),
    "segment": (1,),
    "system": (2,),
}


def v1_tier_label(item) -> str:
    if isinstance(item, Binding):
        return "Relationships"
    level = item.scale
    if level == 0:
        return "Blocks"
    if level == 1:
        return "Segments"
    return "Macro"


@dataclass
class Analysis:
    source: str
    tree: ElementTree
    bindings: list
    warnings: list
    chains: list
    system: CompositionResult | None

    @property
    def program(self):
        return self.tree.program

    @property
    def symbols(self):
        return self.tree.symbols

    def properties_of(self, el: Element) -> PropertySet:
        if el.scale == 2 and el.kind == "system":
            return self.system.retained if self.system else EMPTY
        return el.properties if el.properties is not None else EMPTY


def analyze_source(source: str, file: str, policy: str = "all") -> Analysis:
    """Parse, resolve, build elements, compute properties and bindings.

    The system element's properties come from composing every segment.
    """
    program = parse(source, file)
    symbols = resolve_names(program)
    tree = identify_elements(program, symbols, policy)
    assign_properties(tree)
    warnings: list[AnalysisWarning] = []
    bindings = bindings_for(tree, warnings)
    segs = [s.id for s in tree.segments()]
    system = compose(tree, segs, "system", bindings) if segs else None
    return Analysis(source, tree, bindings, warnings, value_chains(tree), system)


# -- document ----------------------------------------------------------------


@dataclass
class AnalysisDocument:
    file: str
    sha256: str
    scale: str
    elements: list
    bindings: list
    value_chains: list
    warnings: list
    compositions: list = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    def element_ids(self) -> set:
        return {e["id"] for e in self.elements}

    def check(self) -> None:
        ids = self.element_ids()
        for b in self.bindings:
            for end in (b["from"], b["to"]):
                if end not in ids:
                    raise InvariantError(f"binding {b['id']} references unknown element {end}")
            payload = b.get("payload") or {}
            for side in ("send", "receive"):
                ref = payload.get(side)
                if ref and ref["kind"] == EFFECT:
                    raise InvariantError(f"binding {b['id']} references an effect entry")
        for c in self.value_chains:
            for end in c.values():
                if end not in ids:
                    raise InvariantError(f"value chain references unknown element {end}")

    def as_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "source": {"file": self.file, "sha256": self.sha256},
            "scale": self.scale,
            "elements": self.elements,
            "bindings": self.bindings,
            "value_chains": self.value_chains,
            "warnings": self.warnings,
            "compositions": self.compositions,
        }


def _element_json(el: Element, props: PropertySet, visible: set) -> dict:
    return {
        "id": el.id,
        "name": el.name,
        "kind": el.kind,
        "scale": el.scale,
        "scale_name": scale_name(el.scale),
        "span": el.span.to_json(),
        "parent": el.parent if el.parent in visible else None,
        "constituents": [c for c in el.constituents if c in visible],
        "properties": props.to_json(),
        "v1_tier": v1_tier_label(el),
        "stems": list(ELEMENT_STEMS),
    }


def _binding_json(b: Binding, lifted_from: list | None = None) -> dict:
    out = b.to_json()
    out["evidence"] = b.evidence.to_json()
    out["condition"] = b.condition
    out["via"] = b.via
    out["v1_tier"] = v1_tier_label(b)
    if lifted_from is not None:
        out["lifted_from"] = lifted_from
    return out


def _lift(tree: ElementTree, eid: str, visible: set) -> str | None:
    if eid in visible:
        return eid
    for a in tree.ancestors(eid):
        if a.id in visible:
            return a.id
    return None


def _view_bindings(analysis: Analysis, visible: set, scale: str) -> list[dict]:
    if scale in ("all", "statement"):
        return [_binding_json(b) for b in analysis.bindings if b.source in visible and b.target in visible]
    # coarser views lift endpoints to their nearest visible container
    merged: dict = {}
    order = []
    for b in analysis.bindings:
        src, dst = _lift(analysis.tree, b.source, visible), _lift(analysis.tree, b.target, visible)
        if src is None or dst is None or src == dst:
            continue
        key = (src, dst, b.dimension, b.subtype, json.dumps(b.payload, sort_keys=True))
        if key not in merged:
            lifted = Binding(b.id, src, dst, b.dimension, b.subtype, b.evidence, b.payload,
                             b.condition_span, b.condition, b.via)
            merged[key] = (lifted, [])
            order.append(key)
        merged[key][1].append(b.id)
    return [_binding_json(merged[k][0], merged[k][1]) for k in order]


def build_document(analysis: Analysis, scale: str = "all",
                   compositions: list[CompositionResult] | None = None) -> AnalysisDocument:
    if scale not in VIEW_SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    shown = VIEW_SCALES[scale]
    els = [e for e in analysis.tree if e.scale in shown]
    visible = {e.id for e in els}
    elements = [_element_json(e, analysis.properties_of(e), visible) for e in els]
    comps = list(compositions or [])
    if scale in ("system", "all") and analysis.system is not None and not compositions:
        comps.append(analysis.system)
    doc = AnalysisDocument(
        file=analysis.program.file,
        sha256=hashlib.sha256(analysis.source.encode("utf-8")).hexdigest(),
        scale=scale,
        elements=elements,
        bindings=_view_bindings(analysis, visible, scale),
        value_chains=[c for c in analysis.chains if set(c.values()) <= visible],
        warnings=[w.to_json() for w in analysis.warnings],
        compositions=[c.to_json() for c in comps],
    )
    return doc


# -- renderings --------------------------------------------------------------


def to_json(doc: AnalysisDocument) -> str:
    doc.check()
    return json.dumps(doc.as_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _dot_label(s: str) -> str:
    return _dot_id(s)


def to_dot(doc: AnalysisDocument) -> str:
    """Elements as nodes, bindings as edges.

    Segments are drawn as clusters around their statements; a segment also
    gets a node of its own when some binding ends at it.
    """
    doc.check()
    by_id = {e["id"]: e for e in doc.elements}
    flagged = {w["element"] for w in doc.warnings}
    endpoints = {b["from"] for b in doc.bindings} | {b["to"] for b in doc.bindings}
    lines = ["digraph flare {", "  compound=true;", "  node [shape=box, fontname=\"Helvetica\"];"]

    def node(e: dict, indent: str) -> None:
        label = f"{e['name']}\n({e['scale_name']})"
        attrs = [f"label={_dot_label(label)}"]
        if e["id"] in flagged:
            attrs[0] = f"label={_dot_label('[!] ' + label)}"
            attrs += ["color=red", "fontcolor=red"]
        if e["scale"] >= 1:
            attrs.append("style=rounded")
        lines.append(f"{indent}{_dot_id(e['id'])} [{', '.join(attrs)}];")

    def statements_of(e: dict):
        for c in e["constituents"]:
            child = by_id[c]
            yield child
            yield from statements_of(child)

    clusters = 0
    for e in doc.elements:
        if e["scale"] == 0 and _segment_of(e, by_id) is not None:
            continue
        if e["scale"] == 1:
            stmts = list(statements_of(e))
            if stmts:
                clusters += 1
                lines.append(f"  subgraph cluster_{clusters} {{")
                lines.append(f"    label={_dot_label(e['name'])};")
                if e["id"] in endpoints:
                    node(e, "    ")
                for s in stmts:
                    node(s, "    ")
                lines.append("  }")
            elif e["id"] in endpoints or len(doc.elements) <= 2:
                node(e, "  ")
        elif e["scale"] == 0:
            node(e, "  ")
        elif e["id"] in endpoints or not any(x["scale"] < e["scale"] for x in doc.elements):
            node(e, "  ")
    for b in doc.bindings:
        attrs = []
        if b["dimension"] == CAUSAL:
            if b["subtype"] == EVENT_SUBTYPE:
                attrs.append("style=dashed")
                attrs.append(f"label={_dot_label(b['via'])}")
            elif b["subtype"] == BRANCH:
                attrs.append("style=solid")
                if b.get("condition"):
                    attrs.append(f"label={_dot_label(b['condition'])}")
                else:
                    attrs.append(f"label={_dot_label(b['via'])}")
            else:
                attrs.append("style=solid")
        else:
            attrs.append("style=dotted")
            attrs.append(f"label={_dot_label(_payload_label(b['payload']))}")
        lines.append(f"  {_dot_id(b['from'])} -> {_dot_id(b['to'])} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _payload_label(payload: dict) -> str:
    if "subject_kind" in payload:
        return f"{payload['subject']} ({payload['from_mode']}/{payload['to_mode']})"
    s, r = payload["send"], payload["receive"]
    return f"{s['subject_kind']} {s['subject']} -> {r['subject_kind']} {r['subject']}"


def _cell(entries: list) -> str:
    if not entries:
        return "None"
    parts = []
    for e in entries:
        mode = "" if e["mode"] == "n/a" else f" ({e['mode']})"
        parts.append(f"{e['subject_kind']} `{e['subject']}`{mode}")
    return "; ".join(parts)


HEADINGS = ("Receives", "Sends", "Effects", "Shares")


def _row(name: str, props: dict) -> str:
    return "| " + " | ".join([name] + [_cell(props[LISTS[k]]) for k in KINDS]) + " |"


def to_markdown(doc: AnalysisDocument) -> str:
    doc.check()
    by_id = {e["id"]: e for e in doc.elements}
    segs = [e for e in doc.elements if e["scale"] == 1]
    out = [f"# FLARE analysis: {doc.file}", ""]
    if not segs:
        out += ["_This program has no segments._", ""]
    else:
        out += ["## Segment properties", "", "| Segment | " + " | ".join(HEADINGS) + " |",
                "|---|---|---|---|---|"]
        out += [_row(s["name"], s["properties"]) for s in segs]
        out.append("")
    systems = [e for e in doc.elements if e["scale"] >= 2]
    for s in systems:
        out += [f"## System `{s['name']}`", "", "| Element | " + " | ".join(HEADINGS) + " |",
                "|---|---|---|---|---|", _row(s["name"], s["properties"]), ""]
    bindings_from: dict = {}
    for b in doc.bindings:
        src = by_id[b["from"]]
        seg = src["id"] if src["scale"] >= 1 else _segment_of(src, by_id)
        bindings_from.setdefault(seg, []).append(b)
    for s in segs:
        out += [f"## Segment `{s['name']}`", "", f"Span: lines {s['span']['line']}-{s['span']['end_line']}"
                f" (v1 tier: {s['v1_tier']})", ""]
        out += ["Questions:"] + [f"- {q}" for q in s["stems"]] + [""]
        for k, h in zip(KINDS, HEADINGS):
            out.append(f"- **{h}:** {_cell(s['properties'][LISTS[k]])}")
        out.append("")
        bs = bindings_from.get(s["id"], [])
        if bs:
            out += ["### Bindings", ""]
            for b in bs:
                out.append(f"#### {b['id']}: {_describe_binding(b, by_id)}")
                out.append("")
                out += [f"- {q}" for q in b["stems"]]
                out.append("")
    if doc.value_chains:
        out += ["## Value chains", ""]
        for c in doc.value_chains:
            out.append(f"- {by_id[c['from']]['name']} -> {by_id[c['via']]['name']} -> {by_id[c['to']]['name']}")
        out.append("")
    if doc.warnings:
        out += ["## Warnings", ""]
        out += [f"- line {w['span']['line']}: {w['message']}" for w in doc.warnings]
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def _segment_of(el: dict, by_id: dict) -> str | None:
    while el is not None and el["scale"] < 1:
        el = by_id.get(el["parent"]) if el["parent"] else None
    return el["id"] if el else None


def _describe_binding(b: dict, by_id: dict) -> str:
    a, z = by_id[b["from"]]["name"], by_id[b["to"]]["name"]
    if b["dimension"] == COMMUNICATIVE:
        return f"{a} -> {z} (communicative: {_payload_label(b['payload'])})"
    extra = f", when {b['condition']}" if b.get("condition") else ""
    return f"{a} -> {z} ({b['subtype']}{extra})"


def stems_text(analysis: Analysis) -> str:
    """Question-stem sheet: every segment, then every binding with its stems."""
    tree = analysis.tree
    out = []
    for s in tree.segments():
        out.append(f"{s.name} [{s.id}]")
        out += [f"  {q}" for q in question_stems(s)]
    for b in analysis.bindings:
        kind = b.subtype if b.dimension == CAUSAL else COMMUNICATIVE
        out.append(f"{b.id} {tree[b.source].name} -> {tree[b.target].name} [{kind}]")
        out += [f"  {q}" for q in question_stems(b)]
    return "\n".join(out) + ("\n" if out else "")


__all__ = [
    "Analysis", "AnalysisDocument", "SCHEMA_VERSION", "VIEW_SCALES", "analyze_source", "build_document",
    "stems_text", "to_dot", "to_json", "to_markdown", "v1_tier_label", "SEQUENTIAL",
]
