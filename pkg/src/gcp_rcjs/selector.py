"""Priority expression trees used as variable-ordering tie-breakers.

Trees are immutable binary expressions over ten per-job terminals and six
binary operators. Evaluation is exact: integer terminals stay integers and
division produces :class:`fractions.Fraction`, so priority comparisons never
depend on floating point.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence, Union

import numpy as np

from .instance import Instance, format_rational

TERMINALS = ("ES", "PT", "W", "DD", "WL", "maxWL", "NPREC", "NSUC", "WLPREC", "WLSUC")
OPERATORS = ("+", "-", "*", "%", "max", "min")
GROW = "grow"
FULL = "full"
MAX_DEPTH = 7

_ALIASES = {"×": "*", "−": "-", "/": "%"}

Number = Union[int, Fraction]


class SelectorSyntaxError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"at position {position}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Node:
    """Expression node: a terminal when ``left`` is None, else a binary operator."""

    symbol: str
    left: Node | None = None
    right: Node | None = None

    def __post_init__(self):
        if self.left is None:
            if self.symbol not in TERMINALS or self.right is not None:
                raise ValueError(f"invalid terminal node {self.symbol!r}")
        elif self.symbol not in OPERATORS or self.right is None:
            raise ValueError(f"invalid operator node {self.symbol!r}")

    @property
    def is_terminal(self) -> bool:
        return self.left is None

    def __str__(self) -> str:
        return format_tree(self)


@dataclass(frozen=True)
class Selector:
    root: Node
    generation: int | None = None
    seed: int | None = None

    def __str__(self) -> str:
        return format_tree(self.root)


def terminal(name: str) -> Node:
    return Node(name)


def op(symbol: str, left: Node, right: Node) -> Node:
    return Node(_ALIASES.get(symbol, symbol), left, right)


def _root(tree: Selector | Node) -> Node:
    return tree.root if isinstance(tree, Selector) else tree


# ---------------------------------------------------------------------------
# structure helpers


def depth(tree: Selector | Node) -> int:
    node = _root(tree)
    if node.is_terminal:
        return 0
    return 1 + max(depth(node.left), depth(node.right))


def size(tree: Selector | Node) -> int:
    node = _root(tree)
    if node.is_terminal:
        return 1
    return 1 + size(node.left) + size(node.right)


def iter_nodes(tree: Selector | Node) -> Iterator[tuple[Node, int]]:
    """Preorder ``(node, depth)`` pairs."""
    stack = [(_root(tree), 0)]
    while stack:
        node, d = stack.pop()
        yield node, d
        if not node.is_terminal:
            stack.append((node.right, d + 1))
            stack.append((node.left, d + 1))


def subtree_at(tree: Selector | Node, index: int) -> tuple[Node, int]:
    """Subtree at preorder ``index`` together with its depth."""
    for k, (node, d) in enumerate(iter_nodes(tree)):
        if k == index:
            return node, d
    raise IndexError(index)


def replace_at(tree: Selector | Node, index: int, new: Node) -> Node:
    """Copy of ``tree`` with the preorder-``index`` subtree swapped for ``new``."""

    def rec(node: Node, idx: int) -> tuple[Node, int]:
        # returns rebuilt node and the number of nodes consumed
        if idx == index:
            return new, size(node)
        if node.is_terminal:
            return node, 1
        left, n_left = rec(node.left, idx + 1)
        right, n_right = rec(node.right, idx + 1 + n_left)
        if left is node.left and right is node.right:
            return node, 1 + n_left + n_right
        return Node(node.symbol, left, right), 1 + n_left + n_right

    root = _root(tree)
    if not 0 <= index < size(root):
        raise IndexError(index)
    return rec(root, 0)[0]


# ---------------------------------------------------------------------------
# features


@dataclass(frozen=True)
class FeatureVector:
    ES: Number
    PT: Number
    W: Number
    DD: Number
    WL: Number
    maxWL: Number
    NPREC: int
    NSUC: int
    WLPREC: Number
    WLSUC: Number

    def __getitem__(self, name: str) -> Number:
        return getattr(self, name)


def _exact(value: Fraction) -> Number:
    return value.numerator if value.denominator == 1 else value


@functools.lru_cache(maxsize=512)
def _features_cached(instance: Instance) -> tuple[FeatureVector, ...]:
    preds = instance.predecessors()
    succs = instance.successors()
    load = [0] * instance.machines
    for job in instance.jobs:
        load[job.machine] += job.processing
    max_load = max(load, default=0)
    p = [job.processing for job in instance.jobs]
    out = []
    for job in instance.jobs:
        out.append(
            FeatureVector(
                ES=job.release,
                PT=job.processing,
                W=_exact(job.weight),
                DD=job.due,
                WL=load[job.machine],
                maxWL=max_load,
                NPREC=len(preds[job.id]),
                NSUC=len(succs[job.id]),
                WLPREC=sum(p[i] for i in preds[job.id]),
                WLSUC=sum(p[k] for k in succs[job.id]),
            )
        )
    return tuple(out)


def extract_features(instance: Instance) -> list[FeatureVector]:
    """Per-job terminal values; precedence terms count direct neighbours only."""
    return list(_features_cached(instance))


# ---------------------------------------------------------------------------
# evaluation


def protected_div(a: Number, b: Number) -> Number:
    if b == 0:
        return 1
    if isinstance(a, int) and isinstance(b, int) and a % b == 0:
        return a // b
    return _exact(Fraction(a) / b)


_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "%": protected_div,
    "max": max,
    "min": min,
}


def evaluate(tree: Selector | Node, features: FeatureVector | Mapping[str, Number]) -> Number:
    node = _root(tree)
    if node.is_terminal:
        return features[node.symbol]
    return _BINARY[node.symbol](evaluate(node.left, features), evaluate(node.right, features))


def _evaluate_columns(node: Node, columns: Mapping[str, list]) -> list:
    if node.is_terminal:
        return columns[node.symbol]
    fn = _BINARY[node.symbol]
    left = _evaluate_columns(node.left, columns)
    right = _evaluate_columns(node.right, columns)
    return [fn(a, b) for a, b in zip(left, right)]


def priorities_for(tree: Selector | Node, instance: Instance) -> list[Number]:
    """Priority of every job; computed once per (selector, instance)."""
    feats = _features_cached(instance)
    columns = {name: [getattr(f, name) for f in feats] for name in TERMINALS}
    return list(_evaluate_columns(_root(tree), columns))


# ---------------------------------------------------------------------------
# text form

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def format_tree(tree: Selector | Node) -> str:
    node = _root(tree)
    if node.is_terminal:
        return node.symbol
    return f"({node.symbol} {format_tree(node.left)} {format_tree(node.right)})"


def format_selector(selector: Selector | Node) -> str:
    return format_tree(selector)


def parse_tree(text: str) -> Node:
    tokens: list[tuple[str, int]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise SelectorSyntaxError("unexpected character", pos)
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    if not tokens:
        raise SelectorSyntaxError("empty expression", 0)

    k = 0

    def parse() -> Node:
        nonlocal k
        if k >= len(tokens):
            raise SelectorSyntaxError("unexpected end of expression", len(text))
        tok, at = tokens[k]
        k += 1
        if tok == ")":
            raise SelectorSyntaxError("unexpected ')'", at)
        if tok != "(":
            if tok not in TERMINALS:
                raise SelectorSyntaxError(f"unknown terminal {tok!r}", at)
            return Node(tok)
        if k >= len(tokens):
            raise SelectorSyntaxError("unexpected end of expression", len(text))
        sym, sym_at = tokens[k]
        k += 1
        sym = _ALIASES.get(sym, sym)
        if sym not in OPERATORS:
            raise SelectorSyntaxError(f"unknown operator {sym!r}", sym_at)
        args = []
        while k < len(tokens) and tokens[k][0] != ")":
            args.append(parse())
        if k >= len(tokens):
            raise SelectorSyntaxError("missing ')'", len(text))
        close_at = tokens[k][1]
        k += 1
        if len(args) != 2:
            raise SelectorSyntaxError(
                f"operator {sym!r} is binary but got {len(args)} argument(s)", close_at
            )
        return Node(sym, args[0], args[1])

    node = parse()
    if k != len(tokens):
        raise SelectorSyntaxError("trailing tokens after expression", tokens[k][1])
    return node


def parse_selector(text: str) -> Selector:
    return Selector(parse_tree(text.strip()))


def write_selector_file(path, selector: Selector, fitness=None, generation=None, seed=None) -> None:
    fit = "" if fitness is None else format_rational(fitness)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# fitness={fit} gen={'' if generation is None else generation} "
                 f"seed={'' if seed is None else seed}\n")
        fh.write(format_selector(selector) + "\n")


def read_selectors(path) -> list[Selector]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append(parse_selector(line))
    return out


def read_selector_file(path) -> Selector:
    selectors = read_selectors(path)
    if not selectors:
        raise SelectorSyntaxError(f"{path}: no selector expression found")
    return selectors[0]


# ---------------------------------------------------------------------------
# random construction


def random_tree(max_depth: int, method: str, rng: np.random.Generator) -> Node:
    """GROW or FULL tree with depth at most ``max_depth`` (root depth 0)."""
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    if method not in (GROW, FULL):
        raise ValueError(f"unknown method {method!r}")

    def build(budget: int) -> Node:
        if budget == 0 or (method == GROW and rng.random() < 0.5):
            return Node(TERMINALS[int(rng.integers(len(TERMINALS)))])
        sym = OPERATORS[int(rng.integers(len(OPERATORS)))]
        left = build(budget - 1)
        right = build(budget - 1)
        return Node(sym, left, right)

    return build(max_depth)


def constant_selector() -> Selector:
    """``(- PT PT)``: zero priority for every job."""
    return Selector(Node("-", Node("PT"), Node("PT")))


def rank_key(priorities: Sequence[Number]) -> tuple[int, ...]:
    """Job order implied by priorities: descending priority, then ascending id."""
    return tuple(sorted(range(len(priorities)), key=lambda j: (-priorities[j], j)))
