"""Interdependent multilayer network data model, validation, and file format.

A network consists of layers (one infrastructure system each), nodes and
intra-layer arcs carrying a single commodity per layer, directed node-to-node
interdependency links across layers, and geographical spaces with one-time
preparation costs.

All vectors elsewhere in the package use the canonical element order defined
here: nodes grouped by the declared layer order (stable within a layer),
followed by arcs grouped the same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class NetworkError(Exception):
    pass


class NetworkFormatError(NetworkError):
    """Malformed network file; carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class NetworkValidationError(NetworkError):
    """A parsed network violates structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "invalid network: " + "; ".join(self.violations[:5])
            + (" ..." if len(self.violations) > 5 else "")
        )


@dataclass(frozen=True, order=True)
class NodeRef:
    """Identifies a node as (layer, index-within-layer)."""

    layer: str
    index: int


@dataclass(frozen=True)
class NodeSpec:
    ref: NodeRef
    balance: float = 0.0  # commodity per step; >0 supply, <0 demand, 0 transshipment
    repair_cost: float = 0.0
    surplus_penalty: float = 0.0  # per unit of unshipped supply
    deficit_penalty: float = 0.0  # per unit of unmet demand
    space: str = "s0"
    demand_completion: bool = False
    position: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))


@dataclass(frozen=True)
class ArcSpec:
    tail: NodeRef
    head: NodeRef
    capacity: float = 0.0
    flow_cost: float = 0.0
    repair_cost: float = 0.0
    space: str = "s0"

    @property
    def key(self):
        return (self.tail, self.head)


@dataclass(frozen=True)
class InterdependencyLink:
    """Directed dependency: child is functional only if parent is."""

    parent: NodeRef
    child: NodeRef


@dataclass(frozen=True)
class SpaceSpec:
    id: str
    prep_cost: float = 0.0


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple = ()
    nodes: tuple = ()
    arcs: tuple = ()
    links: tuple = ()
    spaces: tuple = ()

    def __post_init__(self):
        for name in ("layers", "nodes", "arcs", "links", "spaces"):
            object.__setattr__(self, name, tuple(getattr(self, name)))


def _layer_rank(spec):
    return {layer: i for i, layer in enumerate(spec.layers)}


def canonical_nodes(spec):
    """Nodes grouped by declared layer order, stable within a layer."""
    rank = _layer_rank(spec)
    return sorted(spec.nodes, key=lambda nd: rank.get(nd.ref.layer, len(rank)))


def canonical_arcs(spec):
    rank = _layer_rank(spec)
    return sorted(spec.arcs, key=lambda a: rank.get(a.tail.layer, len(rank)))


def node_count(spec):
    return len(spec.nodes)


def arc_count(spec):
    return len(spec.arcs)


def element_count(spec):
    return len(spec.nodes) + len(spec.arcs)


def canonical_index(spec, element):
    """Canonical index of a node or arc: nodes occupy [0, n_nodes), arcs follow.

    Accepts a NodeRef, NodeSpec, ArcSpec, or a (tail, head) NodeRef pair.
    Raises KeyError for elements not in the spec.
    """
    if isinstance(element, NodeSpec):
        element = element.ref
    if isinstance(element, ArcSpec):
        element = element.key
    if isinstance(element, NodeRef):
        for i, nd in enumerate(canonical_nodes(spec)):
            if nd.ref == element:
                return i
        raise KeyError(f"unknown node {element}")
    if isinstance(element, tuple) and len(element) == 2:
        n = len(spec.nodes)
        for j, arc in enumerate(canonical_arcs(spec)):
            if arc.key == element:
                return n + j
        raise KeyError(f"unknown arc {element}")
    raise KeyError(f"not a network element: {element!r}")


def element_label(spec, index):
    """(kind, layer, id-token) for a canonical element index; used by plan CSVs."""
    n = len(spec.nodes)
    if index < n:
        nd = canonical_nodes(spec)[index]
        return ("node", nd.ref.layer, str(nd.ref.index))
    arc = canonical_arcs(spec)[index - n]
    return ("arc", arc.tail.layer, f"{arc.tail.index}>{arc.head.index}")


def validate(spec):
    """Check all structural invariants; returns a list of violation strings.

    An empty list means every downstream operation accepts the spec.
    """
    violations = []
    seen_layers = set()
    for layer in spec.layers:
        if layer in seen_layers:
            violations.append(f"layer {layer}: duplicate layer id")
        seen_layers.add(layer)

    space_ids = set()
    for sp in spec.spaces:
        if sp.id in space_ids:
            violations.append(f"space {sp.id}: duplicate space id")
        space_ids.add(sp.id)
        if sp.prep_cost < 0:
            violations.append(f"space {sp.id}: negative prep_cost")

    node_refs = set()
    for nd in spec.nodes:
        name = f"node {nd.ref.layer}:{nd.ref.index}"
        if nd.ref in node_refs:
            violations.append(f"{name}: duplicate node id")
        node_refs.add(nd.ref)
        if nd.ref.layer not in seen_layers:
            violations.append(f"{name}: undeclared layer {nd.ref.layer}")
        if nd.repair_cost < 0:
            violations.append(f"{name}: negative repair_cost")
        if nd.surplus_penalty < 0:
            violations.append(f"{name}: negative surplus_penalty")
        if nd.deficit_penalty < 0:
            violations.append(f"{name}: negative deficit_penalty")
        if nd.space not in space_ids:
            violations.append(f"{name}: undeclared space {nd.space}")

    arc_keys = set()
    for arc in spec.arcs:
        name = f"arc {arc.tail.layer}:{arc.tail.index}>{arc.head.index}"
        if arc.tail not in node_refs:
            violations.append(f"{name}: unknown tail node")
        if arc.head not in node_refs:
            violations.append(f"{name}: unknown head node")
        if arc.tail.layer != arc.head.layer:
            violations.append(f"{name}: cross-layer arc (head in {arc.head.layer})")
        if arc.key in arc_keys:
            violations.append(f"{name}: duplicate arc")
        arc_keys.add(arc.key)
        if arc.capacity < 0:
            violations.append(f"{name}: negative capacity")
        if arc.flow_cost < 0:
            violations.append(f"{name}: negative flow_cost")
        if arc.repair_cost < 0:
            violations.append(f"{name}: negative repair_cost")
        if arc.space not in space_ids:
            violations.append(f"{name}: undeclared space {arc.space}")

    link_keys = set()
    for link in spec.links:
        name = (
            f"link {link.parent.layer}:{link.parent.index}->"
            f"{link.child.layer}:{link.child.index}"
        )
        if link.parent not in node_refs:
            violations.append(f"{name}: unknown parent node")
        if link.child not in node_refs:
            violations.append(f"{name}: unknown child node")
        if link.parent.layer == link.child.layer:
            violations.append(f"{name}: intra-layer interdependency")
        key = (link.parent, link.child)
        if key in link_keys:
            violations.append(f"{name}: duplicate link")
        link_keys.add(key)

    return violations


# --- file format -----------------------------------------------------------
#
# Line-oriented text, sections [layers] [nodes] [arcs] [links] [spaces],
# one comma-separated record per line, `#` starts a comment.

FORMAT_VERSION = "network-v1"

_SECTIONS = ("layers", "nodes", "arcs", "links", "spaces")


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def save_network(spec, path):
    lines = [f"# restoro {FORMAT_VERSION}", "[layers]"]
    lines.extend(str(layer) for layer in spec.layers)
    lines.append("[nodes]")
    lines.append("# layer,index,balance,repair_cost,surplus_penalty,deficit_penalty,space,demand_completion,x,y")
    for nd in spec.nodes:
        lines.append(",".join([
            nd.ref.layer, str(nd.ref.index), _fmt(float(nd.balance)),
            _fmt(float(nd.repair_cost)), _fmt(float(nd.surplus_penalty)),
            _fmt(float(nd.deficit_penalty)), nd.space,
            _fmt(bool(nd.demand_completion)),
            _fmt(float(nd.position[0])), _fmt(float(nd.position[1])),
        ]))
    lines.append("[arcs]")
    lines.append("# tail_layer,tail_index,head_layer,head_index,capacity,flow_cost,repair_cost,space")
    for arc in spec.arcs:
        lines.append(",".join([
            arc.tail.layer, str(arc.tail.index), arc.head.layer, str(arc.head.index),
            _fmt(float(arc.capacity)), _fmt(float(arc.flow_cost)),
            _fmt(float(arc.repair_cost)), arc.space,
        ]))
    lines.append("[links]")
    lines.append("# parent_layer,parent_index,child_layer,child_index")
    for link in spec.links:
        lines.append(",".join([
            link.parent.layer, str(link.parent.index),
            link.child.layer, str(link.child.index),
        ]))
    lines.append("[spaces]")
    lines.append("# id,prep_cost")
    for sp in spec.spaces:
        lines.append(",".join([sp.id, _fmt(float(sp.prep_cost))]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _token(raw, line_no, what):
    tok = raw.strip()
    if not tok:
        raise NetworkFormatError(f"empty {what}", line_no)
    return tok


def _num(raw, line_no, what):
    try:
        return float(raw)
    except ValueError:
        raise NetworkFormatError(f"bad {what} {raw.strip()!r}", line_no) from None


def _int(raw, line_no, what):
    try:
        return int(raw)
    except ValueError:
        raise NetworkFormatError(f"bad {what} {raw.strip()!r}", line_no) from None


def load_network(path):
    """Parse and validate a network file.

    Raises NetworkFormatError (with line number) on malformed input and
    NetworkValidationError when the parsed network breaks an invariant.
    """
    layers, nodes, arcs, links, spaces = [], [], [], [], []
    seen_nodes = {}
    section = None
    with open(path) as fh:
        raw_lines = fh.readlines()
    for line_no, raw in enumerate(raw_lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise NetworkFormatError(f"unknown section [{section}]", line_no)
            continue
        if section is None:
            raise NetworkFormatError("record before any section header", line_no)
        fields = line.split(",")
        if section == "layers":
            if len(fields) != 1:
                raise NetworkFormatError("layer record takes a single id", line_no)
            layers.append(_token(fields[0], line_no, "layer id"))
        elif section == "nodes":
            if len(fields) != 10:
                raise NetworkFormatError(
                    f"node record needs 10 fields, got {len(fields)}", line_no)
            ref = NodeRef(_token(fields[0], line_no, "layer id"),
                          _int(fields[1], line_no, "node index"))
            if ref in seen_nodes:
                raise NetworkFormatError(
                    f"duplicate node id {ref.layer}:{ref.index}", line_no)
            seen_nodes[ref] = line_no
            dc = fields[7].strip()
            if dc not in ("0", "1"):
                raise NetworkFormatError(f"bad demand_completion flag {dc!r}", line_no)
            nodes.append(NodeSpec(
                ref=ref,
                balance=_num(fields[2], line_no, "balance"),
                repair_cost=_num(fields[3], line_no, "repair_cost"),
                surplus_penalty=_num(fields[4], line_no, "surplus_penalty"),
                deficit_penalty=_num(fields[5], line_no, "deficit_penalty"),
                space=_token(fields[6], line_no, "space id"),
                demand_completion=(dc == "1"),
                position=(_num(fields[8], line_no, "x"), _num(fields[9], line_no, "y")),
            ))
        elif section == "arcs":
            if len(fields) != 8:
                raise NetworkFormatError(
                    f"arc record needs 8 fields, got {len(fields)}", line_no)
            arcs.append(ArcSpec(
                tail=NodeRef(_token(fields[0], line_no, "layer id"),
                             _int(fields[1], line_no, "node index")),
                head=NodeRef(_token(fields[2], line_no, "layer id"),
                             _int(fields[3], line_no, "node index")),
                capacity=_num(fields[4], line_no, "capacity"),
                flow_cost=_num(fields[5], line_no, "flow_cost"),
                repair_cost=_num(fields[6], line_no, "repair_cost"),
                space=_token(fields[7], line_no, "space id"),
            ))
        elif section == "links":
            if len(fields) != 4:
                raise NetworkFormatError(
                    f"link record needs 4 fields, got {len(fields)}", line_no)
            links.append(InterdependencyLink(
                parent=NodeRef(_token(fields[0], line_no, "layer id"),
                               _int(fields[1], line_no, "node index")),
                child=NodeRef(_token(fields[2], line_no, "layer id"),
                              _int(fields[3], line_no, "node index")),
            ))
        elif section == "spaces":
            if len(fields) != 2:
                raise NetworkFormatError(
                    f"space record needs 2 fields, got {len(fields)}", line_no)
            spaces.append(SpaceSpec(
                id=_token(fields[0], line_no, "space id"),
                prep_cost=_num(fields[1], line_no, "prep_cost"),
            ))
    spec = NetworkSpec(layers=layers, nodes=nodes, arcs=arcs, links=links,
                       spaces=spaces)
    violations = validate(spec)
    if violations:
        raise NetworkValidationError(violations)
    return spec
