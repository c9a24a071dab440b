"""Depth-truncated Galton-Watson trees and the branching measure on them.

Trees are stored in a flat breadth-first arena: per node its offspring count
and the index of its first child. Offspring counts for a whole generation are
drawn in one vectorized call, in breadth-first node order; the population-only
simulator issues the identical calls, so both paths consume the same random
stream and produce the same generation sizes under the same seed.

The truncated weight of node ``i`` in a depth-``n`` tree is

    W_i^(n) = #(descendants of i at depth n) / a^(n - |i|),

which satisfies the one-step conservation ``W_i = a^-1 sum_j W_(i*j)``
exactly, and hence exact mass conservation over arbitrary cutsets. The
branching-measure mass of the ball below ``i`` is ``a^-|i| W_i^(n)``; absent
nodes carry mass zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, MemoryBudgetExceeded, NoSuchNode, NotACutset
from .offspring import OffspringLaw

__all__ = [
    "SimTree",
    "simulate_tree",
    "simulate_population",
    "sample_w",
    "default_w_depth",
    "truncated_weight",
    "mu_ball",
    "BranchingMeasureMass",
    "cutset_conservation_check",
    "random_cutset",
    "tree_to_text",
    "z_counts_csv_rows",
]

DEFAULT_NODE_CAP = 100_000_000

NodeAddress = tuple  # tuple of child indices; () is the root


@dataclass
class BranchingMeasureMass:
    node: tuple
    mass: float


class SimTree:
    """A realized Galton-Watson tree truncated at ``depth``."""

    def __init__(self, law, depth, seed, offspring, level_start, child_start):
        self.law = law
        self.depth = int(depth)
        self.seed = seed
        self.offspring = offspring          # int64, per node, 0 for bottom level
        self.level_start = level_start      # int64, len depth+2
        self.child_start = child_start      # int64, per node
        self.z_counts = np.diff(level_start).astype(np.int64)
        self._desc = self._descendant_counts()

    def _descendant_counts(self):
        """Per-node count of descendants at the bottom depth."""
        d = np.zeros(self.level_start[-1], dtype=np.int64)
        lo, hi = self.level_start[self.depth], self.level_start[self.depth + 1]
        d[lo:hi] = 1
        for lev in range(self.depth - 1, -1, -1):
            a, b = self.level_start[lev], self.level_start[lev + 1]
            if b == a:
                continue
            kids = d[self.level_start[lev + 1] : self.level_start[lev + 2]]
            cs = np.concatenate(([0], np.cumsum(kids)))
            ends = np.cumsum(self.offspring[a:b])
            d[a:b] = cs[ends] - cs[ends - self.offspring[a:b]]
        return d

    @property
    def n_nodes(self) -> int:
        return int(self.level_start[-1])

    def node_index(self, path: Sequence[int]) -> int:
        if len(path) > self.depth:
            raise NoSuchNode(f"depth {len(path)} exceeds tree depth {self.depth}")
        idx = 0
        for j in path:
            if j < 0 or j >= self.offspring[idx]:
                raise NoSuchNode(f"no child {j} under node index {idx}")
            idx = int(self.child_start[idx]) + int(j)
        return idx

    def has_node(self, path: Sequence[int]) -> bool:
        try:
            self.node_index(path)
            return True
        except NoSuchNode:
            return False

    def descendants_at_bottom(self, path: Sequence[int]) -> int:
        return int(self._desc[self.node_index(path)])

    def children(self, path: Sequence[int]) -> list[tuple]:
        idx = self.node_index(path)
        return [tuple(path) + (j,) for j in range(int(self.offspring[idx]))]


def _draw_levels(law, depth, rng, node_cap, keep_arena):
    """Shared generation loop; one vectorized draw per level in BFS order."""
    z = 1
    z_counts = [1]
    levels = []
    total = 1
    for _lev in range(depth):
        counts = law.sample(rng, z)
        z_next = int(counts.sum())
        total += z_next
        if total > node_cap:
            raise MemoryBudgetExceeded(
                f"tree would hold more than {node_cap} nodes"
            )
        if keep_arena:
            levels.append(counts)
        z_counts.append(z_next)
        z = z_next
        if z == 0:
            break
    return z_counts, levels


def simulate_tree(law: OffspringLaw, depth: int, seed,
                  node_cap: int = DEFAULT_NODE_CAP) -> SimTree:
    """Realize a tree to ``depth``; extinct realizations are valid outputs."""
    if depth < 1:
        raise DomainError("depth must be >= 1")
    rng = np.random.default_rng(seed)
    z_counts, levels = _draw_levels(law, depth, rng, node_cap, keep_arena=True)
    while len(z_counts) < depth + 1:
        z_counts.append(0)

    n_nodes = int(sum(z_counts))
    offspring = np.zeros(n_nodes, dtype=np.int64)
    child_start = np.zeros(n_nodes, dtype=np.int64)
    level_start = np.zeros(depth + 2, dtype=np.int64)
    level_start[1:] = np.cumsum(z_counts)

    for lev, counts in enumerate(levels):
        a, b = level_start[lev], level_start[lev + 1]
        offspring[a:b] = counts
        child_start[a:b] = level_start[lev + 1] + np.concatenate(
            ([0], np.cumsum(counts[:-1]))
        )
    return SimTree(law, depth, seed, offspring, level_start, child_start)


def simulate_population(law: OffspringLaw, depth: int, seed,
                        node_cap: int = DEFAULT_NODE_CAP) -> np.ndarray:
    """Generation sizes ``Z_0..Z_depth`` without storing the tree.

    Consumes the identical draw sequence as :func:`simulate_tree`, so the two
    agree node-count for node-count under the same seed.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    rng = np.random.default_rng(seed)
    z_counts, _ = _draw_levels(law, depth, rng, node_cap, keep_arena=False)
    while len(z_counts) < depth + 1:
        z_counts.append(0)
    return np.asarray(z_counts, dtype=np.int64)


def default_w_depth(a: float) -> int:
    """Truncation depth for martingale-limit sampling: ``a^depth >~ 1e6``."""
    if a >= 2.0:
        return 20
    return int(np.ceil(40.0 / np.log2(a)))


def sample_w(law: OffspringLaw, n_samples: int, rng: np.random.Generator,
             depth: int | None = None) -> np.ndarray:
    """``n_samples`` draws of the truncated martingale limit ``Z_depth/a^depth``.

    Replica-vectorized: each generation advances all replicas with one
    grouped-sum draw, so the cost is ``O(depth)`` vector operations however
    large the populations grow.
    """
    if depth is None:
        depth = default_w_depth(law.mean_a)
    z = np.ones(int(n_samples), dtype=np.int64)
    guard = np.iinfo(np.int64).max // max(int(np.ceil(law.mean_a)) * 64, 64)
    for _ in range(depth):
        if z.max(initial=0) > guard:
            raise MemoryBudgetExceeded(
                "population counts approaching int64 overflow; lower the depth"
            )
        z = law.sum_offspring(rng, z)
    return z / law.mean_a**depth


# ----------------------------------------------------------------------
# weights, masses, cutsets
# ----------------------------------------------------------------------

def truncated_weight(tree: SimTree, node: Sequence[int]) -> float:
    """``W_i^(n)``: bottom-descendant count over ``a^(n-|i|)``."""
    d = tree.descendants_at_bottom(node)
    return d / tree.law.mean_a ** (tree.depth - len(node))


def mu_ball(tree: SimTree, node: Sequence[int]) -> BranchingMeasureMass:
    """Branching-measure mass ``a^-|i| W_i^(n)`` of the ball below ``node``.

    Nodes outside the realized tree get mass 0 rather than an error.
    """
    try:
        idx = tree.node_index(node)
    except NoSuchNode:
        return BranchingMeasureMass(tuple(node), 0.0)
    mass = tree._desc[idx] / tree.law.mean_a**tree.depth
    return BranchingMeasureMass(tuple(node), float(mass))


def _is_prefix(p: tuple, q: tuple) -> bool:
    return len(p) <= len(q) and q[: len(p)] == p


def cutset_conservation_check(tree: SimTree, root: Sequence[int],
                              cutset: Iterable[Sequence[int]]) -> dict:
    """Exact mass conservation ``a^-|i| W_i = sum_Gamma a^-|j| W_j``.

    The cutset must be an antichain of existing nodes below ``root`` whose
    bottom-descendant counts partition the root's; anything else raises
    :class:`NotACutset`. Returns both sides and their absolute error.
    """
    root = tuple(root)
    members = [tuple(m) for m in cutset]
    root_idx = tree.node_index(root)
    if not members:
        raise NotACutset("empty cutset")
    idxs = []
    for m in members:
        if not _is_prefix(root, m):
            raise NotACutset(f"{m} is not below the root {root}")
        if len(m) > tree.depth:
            raise NotACutset(f"{m} lies beyond the tree depth")
        try:
            idxs.append(tree.node_index(m))
        except NoSuchNode as exc:
            raise NotACutset(f"{m} is not a node of the tree") from exc
    # in lexicographic order every comparable pair shows up as an adjacent
    # prefix pair, so one sorted sweep replaces the quadratic scan
    ordered = sorted(members)
    for p, q in zip(ordered, ordered[1:]):
        if _is_prefix(p, q):
            raise NotACutset(f"members {p} and {q} are comparable")
        if p == q:
            raise NotACutset(f"member {p} appears twice")
    d_sum = int(tree._desc[idxs].sum())
    d_root = int(tree._desc[root_idx])
    if d_sum != d_root:
        raise NotACutset(
            f"coverage failure: members account for {d_sum} bottom "
            f"descendants, root has {d_root}"
        )
    a = tree.law.mean_a
    lhs = a ** -len(root) * truncated_weight(tree, root)
    rhs = float(
        sum(a ** -len(m) * truncated_weight(tree, m) for m in members)
    )
    return {"lhs": lhs, "rhs": rhs, "abs_err": abs(lhs - rhs)}


def random_cutset(tree: SimTree, rng: np.random.Generator,
                  root: Sequence[int] = (), stop_prob: float = 0.35) -> list[tuple]:
    """A random ragged cutset below ``root``.

    Walks down from the root, independently stopping at each node with
    ``stop_prob`` (always stopping at the bottom level); childless interior
    nodes are dropped, which keeps the bottom-descendant partition exact.
    """
    root = tuple(root)
    tree.node_index(root)
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        at_bottom = len(node) == tree.depth
        if at_bottom or rng.random() < stop_prob:
            out.append(node)
            continue
        kids = tree.children(node)
        if not kids:
            continue  # extinct branch: no bottom descendants to cover
        stack.extend(kids)
    return out


# ----------------------------------------------------------------------
# exports
# ----------------------------------------------------------------------

def tree_to_text(tree: SimTree) -> str:
    """Line-based export: one ``path<TAB>offspring_count`` line per node."""
    lines = []
    paths = {0: ()}
    for lev in range(tree.depth + 1):
        a, b = tree.level_start[lev], tree.level_start[lev + 1]
        for idx in range(a, b):
            p = paths[idx]
            lines.append(f"{'.'.join(map(str, p)) if p else '-'}\t{tree.offspring[idx]}")
            c0 = int(tree.child_start[idx])
            for j in range(int(tree.offspring[idx])):
                paths[c0 + j] = p + (j,)
    return "\n".join(lines) + "\n"


def z_counts_csv_rows(z_counts: np.ndarray) -> list[tuple]:
    return [(int(d), int(z)) for d, z in enumerate(z_counts)]
