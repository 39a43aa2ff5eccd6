"""Schema trees and structural fingerprints.

Normalization strips exactly the surface layer off a syntax tree: user
identifiers become canonical positional names (``v0, v1, ...`` for
variables, ``f0, f1, ...`` for defined functions, assigned in depth-first
pre-order of first occurrence), literal values collapse to their kind
placeholder, and comments are already gone at the lexer. Builtin call
names on the whitelist survive because they carry algorithmic meaning.

A schema tree is fingerprinted as a multiset of local grams, one per node:

    (parent label, node label, labels of the first 4 children)

where a label is the node kind, parameterized by operator for
BinOp/UnaryOp/Compare, by value kind for Literal, and by name for
whitelisted builtins. The root's parent label is ``ROOT_MARK``. Structural
similarity between two programs is the multiset Jaccard of their gram
fingerprints.
"""

from __future__ import annotations

from collections import Counter

from .parser import Node, walk

# Names that survive normalization: they name reusable operations and are
# treated as part of the reasoning pattern rather than the surface.
BUILTIN_WHITELIST = frozenset({
    "print", "input", "range", "len", "int", "float", "str",
    "sum", "min", "max", "abs", "sorted", "append", "split", "join",
})

ROOT_MARK = "^"

# Truncation bound for the child-kind tuple inside a gram.
GRAM_CHILD_CAP = 4

GramMultiset = Counter


class EmptyFingerprint(ValueError):
    """Raised when a similarity is requested over an empty gram multiset."""


def normalize(tree: Node) -> Node:
    """Rewrite a syntax tree into its schema tree.

    Deterministic and idempotent: renaming is by first occurrence in
    pre-order, so an already-normalized tree maps to itself.
    """
    func_names = {n.children[0].text for n in walk(tree) if n.kind == "FuncDef"}
    renames: dict[str, str] = {}
    counters = {"v": 0, "f": 0}

    def canonical(name: str) -> str:
        if name in BUILTIN_WHITELIST:
            return name
        if name not in renames:
            prefix = "f" if name in func_names else "v"
            renames[name] = f"{prefix}{counters[prefix]}"
            counters[prefix] += 1
        return renames[name]

    def rebuild(node: Node) -> Node:
        if node.kind == "Name":
            return Node("Name", text=canonical(node.text or ""), line=node.line, col=node.col)
        if node.kind == "Literal":
            return Node("Literal", param=node.param, line=node.line, col=node.col)
        return Node(node.kind, tuple(rebuild(c) for c in node.children),
                    param=node.param, line=node.line, col=node.col)

    return rebuild(tree)


def gram_label(node: Node) -> str:
    """Label used for a node inside grams: kind, plus the structural parameter."""
    if node.kind == "Name":
        if node.text in BUILTIN_WHITELIST:
            return f"Name:{node.text}"
        return "Name"
    if node.param is not None:
        return f"{node.kind}:{node.param}"
    return node.kind


def structural_fingerprint(schema: Node) -> GramMultiset:
    """Multiset of grams, one per node of the schema tree."""
    grams: Counter = Counter()
    stack: list[tuple[Node, str]] = [(schema, ROOT_MARK)]
    while stack:
        node, parent_label = stack.pop()
        label = gram_label(node)
        child_labels = tuple(gram_label(c) for c in node.children[:GRAM_CHILD_CAP])
        grams[(parent_label, label, child_labels)] += 1
        for child in node.children:
            stack.append((child, label))
    return grams


def structural_similarity(a: GramMultiset, b: GramMultiset) -> float:
    """Multiset Jaccard: shared gram mass over combined gram mass, in [0, 1]."""
    if not a or not b:
        raise EmptyFingerprint("structural similarity needs non-empty fingerprints")
    inter = sum((a & b).values())
    union = sum((a | b).values())
    return inter / union
