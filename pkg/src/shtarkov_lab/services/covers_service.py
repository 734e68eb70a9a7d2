"""Sequential and global l-infinity covers, fat-shattering dimension and entropy bounds.

Everything here is for binary labels and non-sequential classes F subset of
[0,1]^X, with f(x) the probability of label 1. Classes are handled as a
(|F|, |X|) value table and subsets of F as bitmasks.

Exact cover sizes come from a node-by-node feasibility search. Each cover
element carries the set of functions it still covers along the current path;
at a node it picks one window [a, a + 2 alpha] of realised values (value
min(a + alpha, 1)), and a cover of size N exists iff the search can keep the
union of those sets equal to F down to every leaf. Windows starting at a
realised value are maximal, so nothing is lost by restricting to them.
"""

import itertools
import logging
import math
from collections.abc import Hashable, Sequence
from dataclasses import dataclass, field

import numpy as np

from shtarkov_lab.core.hypothesis import ExplicitFiniteClass, HypothesisClass
from shtarkov_lab.models.report_types import BoundReport, BoundRow
from shtarkov_lab.models.trees import ContextTree, RealTree, enumerate_trees
from shtarkov_lab.shared.constants import COVER_TOLERANCE, DEFAULT_COVER_BUDGET, DEFAULT_TREE_BUDGET
from shtarkov_lab.shared.exceptions import (
    EnumerationBudgetExceeded,
    UnsupportedClassError,
    ValidationError,
)
from shtarkov_lab.shared.utils.enumeration import check_budget, effective_budget, sequences

logger = logging.getLogger(__name__)

CHAINING_CONSTANT = (2.0 - math.log(2.0)) / (math.log(3.0) - math.log(2.0))
FAT_SCALE_OFFSET = 1e-9

# One (covered-set mask, window centre) pair per cover element
Assignment = tuple[tuple[int, float], ...]


def binary_value_table(F: HypothesisClass) -> np.ndarray:
    """(|F|, |X|) table of f(x); explicit, binary, non-sequential classes only."""
    if not isinstance(F, ExplicitFiniteClass):
        raise UnsupportedClassError(
            f"cover computations need an explicit class, {F.name!r} is oracle-backed"
        )
    if F.num_labels != 2:
        raise ValidationError(
            f"covers are defined for binary labels, the class has K={F.num_labels}"
        )
    return F.binary_table()


def _check_alpha(alpha: float) -> None:
    if alpha < 0:
        raise ValidationError(f"scale must be nonnegative, got {alpha}")


def _check_binary_tree(table: np.ndarray, tree: ContextTree) -> None:
    if tree.num_labels != 2:
        raise ValidationError("cover trees are binary")
    if tree.max_context() >= table.shape[1]:
        raise ValidationError(f"tree plays context {tree.max_context()} outside the class domain")


def _distinct_columns(table: np.ndarray) -> tuple[np.ndarray, list[int], list[int]]:
    """Merge contexts on which every function agrees.

    Returns the reduced table, the representative original context of each
    reduced context, and the reduced index of every original context.
    """
    representatives: list[int] = []
    canonical: list[int] = []
    seen: dict[tuple[float, ...], int] = {}
    for x in range(table.shape[1]):
        column = tuple(table[:, x].tolist())
        if column not in seen:
            seen[column] = len(representatives)
            representatives.append(x)
        canonical.append(seen[column])
    return table[:, representatives], representatives, canonical


# ============================================================================
# Certificates
# ============================================================================


@dataclass
class CoverCertificate:
    """A sequential cover of F o x and, per (function, path), the covering element."""

    alpha: float
    trees: tuple[RealTree, ...]
    witness: dict[tuple[int, tuple[int, ...]], int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.trees)


@dataclass
class GlobalCover:
    """History-indexed maps g(x_1..x_t), one dict per element."""

    alpha: float
    horizon: int
    num_contexts: int
    maps: tuple[dict[tuple[int, ...], float], ...]

    @property
    def size(self) -> int:
        return len(self.maps)

    def value(self, element: int, history: tuple[int, ...]) -> float:
        return self.maps[element][history]


def is_sequential_cover(
    V: Sequence[RealTree], F: HypothesisClass, tree: ContextTree, alpha: float
) -> tuple[bool, tuple[int, tuple[int, ...]] | None]:
    """Every (f, path) must be within alpha of some element along the whole path.

    Returns (True, None) or (False, (function index, path)) for the first failure.
    """
    table = binary_value_table(F)
    _check_binary_tree(table, tree)
    for v in V:
        if v.depth != tree.depth:
            raise ValidationError(
                f"cover tree of depth {v.depth} for a context tree of depth {tree.depth}"
            )
    return _first_uncovered(table, tree, V, alpha)


def _covering_index(
    row: np.ndarray, tree: ContextTree, V: Sequence[RealTree], path: tuple[int, ...], alpha: float
) -> int | None:
    values = np.array([row[x] for x in tree.contexts_along(path)])
    for i, v in enumerate(V):
        if np.all(np.abs(values - np.array(v.along(path))) <= alpha + COVER_TOLERANCE):
            return i
    return None


def _first_uncovered(
    table: np.ndarray, tree: ContextTree, V: Sequence[RealTree], alpha: float
) -> tuple[bool, tuple[int, tuple[int, ...]] | None]:
    for f in range(table.shape[0]):
        for path in sequences(2, tree.depth):
            if _covering_index(table[f], tree, V, path, alpha) is None:
                return False, (f, path)
    return True, None


def _certificate(
    table: np.ndarray, tree: ContextTree, trees: Sequence[RealTree], alpha: float
) -> CoverCertificate:
    witness = {}
    for f in range(table.shape[0]):
        for path in sequences(2, tree.depth):
            index = _covering_index(table[f], tree, trees, path, alpha)
            if index is None:
                raise RuntimeError(f"cover search produced a non-cover at f={f}, path={path}")
            witness[(f, path)] = index
    return CoverCertificate(alpha, tuple(trees), witness)


# ============================================================================
# Feasibility search
# ============================================================================


class _CoverSearch:
    """Feasibility of a size-N cover on a node tree.

    `values[node]` is the column of function values at the node (None for a
    virtual root that carries no value) and `children[node]` its child nodes.
    """

    def __init__(
        self,
        values: dict[Hashable, np.ndarray | None],
        children: dict[Hashable, tuple[Hashable, ...]],
        root: Hashable,
        num_functions: int,
        alpha: float,
        budget: int,
    ):
        self.values = values
        self.children = children
        self.root = root
        self.full = (1 << num_functions) - 1
        self.alpha = alpha
        self.budget = effective_budget(budget)
        self.visited = 0
        self._windows: dict[Hashable, list[tuple[int, float]]] = {}
        self._memo: dict[tuple[Hashable, tuple[int, ...]], Assignment | None] = {}

    def windows(self, node: Hashable) -> list[tuple[int, float]]:
        """Maximal (mask, centre) windows of realised values at a node."""
        if node not in self._windows:
            column = self.values[node]
            candidates: dict[int, float] = {}
            for a in sorted(set(column.tolist())):
                inside = (column >= a - COVER_TOLERANCE) & (
                    column <= a + 2 * self.alpha + COVER_TOLERANCE
                )
                mask = sum(1 << int(f) for f in np.flatnonzero(inside))
                candidates.setdefault(mask, min(a + self.alpha, 1.0))
            kept: list[tuple[int, float]] = []
            for mask, centre in sorted(candidates.items(), key=lambda kv: -kv[0].bit_count()):
                if not any(mask | other == other for other, _ in kept):
                    kept.append((mask, centre))
            self._windows[node] = kept
        return self._windows[node]

    def _options(self, node: Hashable, covered: int) -> list[tuple[int, float]]:
        options: dict[int, float] = {}
        for mask, centre in self.windows(node):
            options.setdefault(covered & mask, centre)
        kept: list[tuple[int, float]] = []
        for mask, centre in sorted(options.items(), key=lambda kv: -kv[0].bit_count()):
            if not any(mask | other == other for other, _ in kept):
                kept.append((mask, centre))
        return kept

    def _choices(self, node: Hashable, state: tuple[int, ...]):
        groups = [list(g) for _, g in itertools.groupby(range(len(state)), key=lambda i: state[i])]
        per_group = []
        for group in groups:
            options = self._options(node, state[group[0]])
            per_group.append(
                [
                    tuple(options[j] for j in combo)
                    for combo in itertools.combinations_with_replacement(
                        range(len(options)), len(group)
                    )
                ]
            )
        for parts in itertools.product(*per_group):
            yield tuple(choice for part in parts for choice in part)

    def feasible(self, node: Hashable, state: tuple[int, ...]) -> bool:
        key = (node, state)
        if key in self._memo:
            return self._memo[key] is not None
        self.visited += 1
        if self.visited > self.budget:
            logger.warning(f"Cover search exceeded {self.budget} states")
            raise EnumerationBudgetExceeded("cover search states", self.visited, self.budget)

        if self.values[node] is None:
            found = all(self.feasible(child, state) for child in self.children[node])
            self._memo[key] = () if found else None
            return found

        for choice in self._choices(node, state):
            union = 0
            for mask, _ in choice:
                union |= mask
            if union != self.full:
                continue
            next_state = tuple(sorted(mask for mask, _ in choice))
            if all(self.feasible(child, next_state) for child in self.children[node]):
                self._memo[key] = choice
                return True
        self._memo[key] = None
        return False

    def assign(self, size: int) -> list[dict[Hashable, float]]:
        """Per-element node values of a feasible size-N cover."""
        assigned: list[dict[Hashable, float]] = [{} for _ in range(size)]

        def walk(node: Hashable, covered: list[int]) -> None:
            order = sorted(range(size), key=lambda i: covered[i])
            state = tuple(covered[i] for i in order)
            choice = self._memo[(node, state)]
            next_covered = list(covered)
            if self.values[node] is not None:
                for position, element in enumerate(order):
                    mask, centre = choice[position]
                    assigned[element][node] = centre
                    next_covered[element] = mask
            for child in self.children[node]:
                walk(child, next_covered)

        walk(self.root, [self.full] * size)
        return assigned

    def minimum(self, upper: int) -> tuple[int, list[dict[Hashable, float]]]:
        for size in range(1, upper + 1):
            if self.feasible(self.root, (self.full,) * size):
                return size, self.assign(size)
        raise RuntimeError("a cover with one element per function always exists")


def _tree_search(table: np.ndarray, tree: ContextTree, alpha: float, budget: int) -> _CoverSearch:
    values: dict[Hashable, np.ndarray | None] = {}
    children: dict[Hashable, tuple[Hashable, ...]] = {}
    for t in range(tree.depth):
        for prefix in sequences(2, t):
            values[prefix] = table[:, tree.context_at(prefix)]
            children[prefix] = tuple(prefix + (y,) for y in range(2)) if t + 1 < tree.depth else ()
    return _CoverSearch(values, children, (), table.shape[0], alpha, budget)


def _min_cover_of_table(
    table: np.ndarray, tree: ContextTree, alpha: float, budget: int
) -> tuple[int, CoverCertificate]:
    if tree.depth == 0:
        witness = {(f, ()): 0 for f in range(table.shape[0])}
        return 1, CoverCertificate(alpha, (RealTree(0, ()),), witness)
    search = _tree_search(table, tree, alpha, budget)
    size, assigned = search.minimum(table.shape[0])
    trees = [RealTree.from_function(tree.depth, values.__getitem__) for values in assigned]
    return size, _certificate(table, tree, trees, alpha)


def min_sequential_cover(
    F: HypothesisClass, tree: ContextTree, alpha: float, budget: int = DEFAULT_COVER_BUDGET
) -> tuple[int, CoverCertificate]:
    """Size of the smallest sequential cover of F o x at scale alpha, with a certificate."""
    _check_alpha(alpha)
    table = binary_value_table(F)
    _check_binary_tree(table, tree)
    return _min_cover_of_table(table, tree, alpha, budget)


def greedy_cover_size(
    F: HypothesisClass, tree: ContextTree, alpha: float
) -> tuple[int, CoverCertificate]:
    """Upper bound: group functions whose values stay within 2 alpha on every node."""
    _check_alpha(alpha)
    table = binary_value_table(F)
    _check_binary_tree(table, tree)
    prefixes = [p for t in range(tree.depth) for p in sequences(2, t)]
    columns = np.array(
        [[table[f, tree.context_at(p)] for p in prefixes] for f in range(len(table))]
    )
    columns = columns.reshape(len(table), len(prefixes))

    groups: list[list[int]] = []
    for f in range(len(table)):
        for group in groups:
            members = columns[group + [f]]
            if np.all(members.max(axis=0) - members.min(axis=0) <= 2 * alpha + COVER_TOLERANCE):
                group.append(f)
                break
        else:
            groups.append([f])

    trees = []
    for group in groups:
        members = columns[group]
        centres = dict(zip(prefixes, ((members.max(axis=0) + members.min(axis=0)) / 2).tolist()))
        trees.append(RealTree.from_function(tree.depth, centres.__getitem__))
    return len(groups), _certificate(table, tree, trees, alpha)


# ============================================================================
# Entropies
# ============================================================================


def worst_case_cover(
    F: HypothesisClass,
    alpha: float,
    horizon: int,
    budget: int = DEFAULT_COVER_BUDGET,
    tree_budget: int = DEFAULT_TREE_BUDGET,
) -> tuple[int, ContextTree, CoverCertificate]:
    """Largest min cover over all context trees, its tree and its certificate."""
    _check_alpha(alpha)
    table = binary_value_table(F)
    reduced, representatives, _ = _distinct_columns(table)
    nodes = 2**horizon - 1
    check_budget("context trees", reduced.shape[1] ** nodes, tree_budget)
    logger.info(
        f"Sequential entropy at alpha={alpha}: "
        f"{reduced.shape[1]} distinct contexts, depth {horizon}"
    )

    best = None
    for tree in enumerate_trees(horizon, 2, reduced.shape[1]):
        size, certificate = _min_cover_of_table(reduced, tree, alpha, budget)
        if best is None or size > best[0]:
            best = (size, tree, certificate)
        if size == table.shape[0]:
            break
    size, tree, certificate = best
    original = ContextTree(tree.depth, 2, tuple(representatives[x] for x in tree.nodes))
    return size, original, certificate


def sequential_entropy(
    F: HypothesisClass,
    alpha: float,
    horizon: int,
    budget: int = DEFAULT_COVER_BUDGET,
    tree_budget: int = DEFAULT_TREE_BUDGET,
) -> float:
    """sup over context trees of log min sequential cover size."""
    return math.log(worst_case_cover(F, alpha, horizon, budget, tree_budget)[0])


def global_entropy(
    F: HypothesisClass, alpha: float, horizon: int, budget: int = DEFAULT_COVER_BUDGET
) -> tuple[float, GlobalCover]:
    """log of the smallest global sequential cover, searched on the tree of context histories."""
    _check_alpha(alpha)
    table = binary_value_table(F)
    num_contexts = table.shape[1]
    if horizon == 0:
        return 0.0, GlobalCover(alpha, 0, num_contexts, ({},))

    reduced, _, canonical = _distinct_columns(table)
    width = reduced.shape[1]
    check_budget("context histories", width**horizon, budget)

    values: dict[Hashable, np.ndarray | None] = {(): None}
    children: dict[Hashable, tuple[Hashable, ...]] = {(): tuple((x,) for x in range(width))}
    for t in range(1, horizon + 1):
        for history in sequences(width, t):
            values[history] = reduced[:, history[-1]]
            children[history] = tuple(history + (x,) for x in range(width)) if t < horizon else ()

    search = _CoverSearch(values, children, (), table.shape[0], alpha, budget)
    size, assigned = search.minimum(table.shape[0])
    maps = []
    for node_values in assigned:
        maps.append(
            {
                history: node_values[tuple(canonical[x] for x in history)]
                for t in range(1, horizon + 1)
                for history in sequences(num_contexts, t)
            }
        )
    return math.log(size), GlobalCover(alpha, horizon, num_contexts, tuple(maps))


def is_global_cover(G: GlobalCover, F: HypothesisClass) -> bool:
    table = binary_value_table(F)
    for f in range(table.shape[0]):
        for contexts in sequences(G.num_contexts, G.horizon):
            if not any(
                all(
                    abs(table[f, contexts[t]] - g[contexts[: t + 1]]) <= G.alpha + COVER_TOLERANCE
                    for t in range(G.horizon)
                )
                for g in G.maps
            ):
                return False
    return True


def induce_tree_cover(G: GlobalCover, tree: ContextTree) -> tuple[RealTree, ...]:
    """v^g_t(y) = g(x_1(y), ..., x_t(y)) for every element g."""
    if tree.depth > G.horizon:
        raise ValidationError(f"tree depth {tree.depth} exceeds the cover horizon {G.horizon}")

    def history(prefix: tuple[int, ...]) -> tuple[int, ...]:
        return tree.contexts_along(prefix) + (tree.context_at(prefix),)

    return tuple(
        RealTree.from_function(tree.depth, lambda prefix, g=g: g[history(prefix)]) for g in G.maps
    )


def smoothed_cover_ratios(
    certificate: CoverCertificate, F: HypothesisClass, tree: ContextTree
) -> tuple[float, float]:
    """max f / v~ and max (1 - f) / (1 - v~) with v~ = (v + alpha) / (1 + 2 alpha).

    Both stay below 1 + 2 alpha on any valid certificate.
    """
    table = binary_value_table(F)
    alpha = certificate.alpha
    upper, lower = 0.0, 0.0
    for (f, path), index in certificate.witness.items():
        v = certificate.trees[index].along(path)
        for t, x in enumerate(tree.contexts_along(path)):
            smoothed = (v[t] + alpha) / (1.0 + 2.0 * alpha)
            value = table[f, x]
            if smoothed > 0:
                upper = max(upper, value / smoothed)
            elif value > 0:
                upper = math.inf
            if smoothed < 1:
                lower = max(lower, (1.0 - value) / (1.0 - smoothed))
            elif value < 1:
                lower = math.inf
    return upper, lower


# ============================================================================
# Fat-shattering dimension
# ============================================================================


def _witness_candidates(column: np.ndarray, alpha: float) -> list[float]:
    realised = sorted(set(column.tolist()))
    candidates = {a + sign * alpha / 2 for a in realised for sign in (-1.0, 1.0)}
    candidates |= {(a + b) / 2 for a, b in zip(realised, realised[1:])}
    return sorted(min(1.0, max(0.0, s)) for s in candidates)


def fat_shattering_dim(
    F: HypothesisClass, alpha: float, max_depth: int, budget: int = DEFAULT_COVER_BUDGET
) -> int:
    """Largest d <= max_depth such that some depth-d context tree is alpha-shattered."""
    if alpha <= 0:
        raise ValidationError(f"shattering scale must be positive, got {alpha}")
    table = binary_value_table(F)
    reduced, _, _ = _distinct_columns(table)
    n, width = reduced.shape
    budget = effective_budget(budget)
    memo: dict[tuple[int, int], bool] = {}
    visited = [0]

    def members(mask: int) -> np.ndarray:
        return np.array([f for f in range(n) if mask >> f & 1], dtype=int)

    def shattered(depth: int, mask: int) -> bool:
        if mask == 0:
            return False
        if depth == 0:
            return True
        key = (depth, mask)
        if key in memo:
            return memo[key]
        visited[0] += 1
        if visited[0] > budget:
            raise EnumerationBudgetExceeded("shattering states", visited[0], budget)
        rows = members(mask)
        found = False
        for x in range(width):
            column = reduced[rows, x]
            for s in _witness_candidates(column, alpha):
                high = s + alpha / 2 - COVER_TOLERANCE
                low = s - alpha / 2 + COVER_TOLERANCE
                up = sum(1 << int(f) for f, v in zip(rows, column) if v >= high)
                down = sum(1 << int(f) for f, v in zip(rows, column) if v <= low)
                if up and down and shattered(depth - 1, up) and shattered(depth - 1, down):
                    found = True
                    break
            if found:
                break
        memo[key] = found
        return found

    full = (1 << n) - 1
    dimension = 0
    for depth in range(1, max_depth + 1):
        if not shattered(depth, full):
            break
        dimension = depth
    return dimension


# ============================================================================
# Bounds
# ============================================================================


def entropy_regret_bounds(
    F: HypothesisClass,
    horizon: int,
    alpha_grid: Sequence[float],
    exact_regret: float | None = None,
    budget: int = DEFAULT_COVER_BUDGET,
    tree_budget: int = DEFAULT_TREE_BUDGET,
) -> BoundReport:
    """Every cover-based regret bound on a grid of scales."""
    if not alpha_grid:
        raise ValidationError("the scale grid is empty")
    finite = math.log(len(F)) if isinstance(F, ExplicitFiniteClass) else None

    rows = []
    for alpha in alpha_grid:
        _check_alpha(alpha)
        h_seq = sequential_entropy(F, alpha, horizon, budget, tree_budget)
        h_global, _ = global_entropy(F, alpha, horizon, budget)
        smoothing = horizon * math.log1p(2 * alpha)
        fat = fat_shattering_dim(F, 2 * alpha + FAT_SCALE_OFFSET, horizon, budget)
        fat_lower = min(horizon, fat) * math.log(2.0)
        rows.append(
            BoundRow(
                alpha=alpha,
                sequential_entropy=h_seq,
                global_entropy=h_global,
                smoothed_cover_bound=smoothing + h_seq,
                chaining_bound=4 * horizon * alpha + CHAINING_CONSTANT * h_seq,
                global_cover_bound=smoothing + h_global,
                fat_dimension=fat,
                fat_lower_bound=fat_lower,
                fat_check=h_seq >= fat_lower - COVER_TOLERANCE,
            )
        )

    best_alpha, best_value = {}, {}
    for name in ("smoothed_cover_bound", "chaining_bound", "global_cover_bound"):
        row = min(rows, key=lambda r: getattr(r, name))
        best_alpha[name] = row.alpha
        best_value[name] = getattr(row, name)
    return BoundReport(
        horizon=horizon,
        c_constant=CHAINING_CONSTANT,
        finite_class_bound=finite,
        exact_regret=exact_regret,
        rows=rows,
        best_alpha=best_alpha,
        best_value=best_value,
    )
