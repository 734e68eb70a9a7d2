"""Build hypothesis classes, constraints, prefixes and trees from JSON documents."""

import json
import logging
from pathlib import Path
from typing import Any

import pydantic

from shtarkov_lab.core.experts import (
    ConstantExpert,
    LinearExpert,
    NonSequentialExpert,
    PointMassExpert,
    TableExpert,
)
from shtarkov_lab.core.hypothesis import ExplicitFiniteClass, HypothesisClass, bernoulli_full_class
from shtarkov_lab.models.alphabets import ContextAlphabet, Distribution, LabelAlphabet, Prefix
from shtarkov_lab.models.class_spec import (
    BernoulliFullClassSpec,
    BernoulliGridClassSpec,
    ClassSpecDocument,
    ConstantClassSpec,
    ConstraintDocument,
    ExplicitClassSpec,
    LinearClassSpec,
    NonSequentialClassSpec,
    PointMassClassSpec,
    PrefixDocument,
)
from shtarkov_lab.models.trees import ContextTree, TimeVaryingConstraint
from shtarkov_lab.services.linlab_service import ball_grid, linear_full_class, linear_grid_class
from shtarkov_lab.shared.exceptions import ValidationError
from shtarkov_lab.shared.utils.enumeration import tree_depth_for

logger = logging.getLogger(__name__)

Document = dict[str, Any] | list[Any] | str | Path


def _read(document: Document) -> Any:
    if isinstance(document, (str, Path)):
        path = Path(document)
        try:
            return json.loads(path.read_text())
        except FileNotFoundError:
            raise ValidationError(f"file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ValidationError(f"invalid JSON: {e}", str(path)) from None
    return document


def _validate(model: type[pydantic.BaseModel], data: Any, root: str) -> Any:
    try:
        return model.model_validate(data)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        loc = ".".join([root, *(str(part) for part in first["loc"])]) if first["loc"] else root
        raise ValidationError(first["msg"], loc) from None


def _distribution(probs: list[float], num_labels: int, path: str) -> Distribution:
    if len(probs) != num_labels:
        raise ValidationError(f"expected {num_labels} probabilities, got {len(probs)}", path)
    try:
        return Distribution.of(probs)
    except ValidationError as e:
        raise ValidationError(str(e), path) from None


def _parse_history(key: str, path: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if key.count("|") != 1:
        raise ValidationError(f"history key {key!r} needs exactly one '|'", path)
    left, right = key.split("|")
    try:
        contexts = tuple(int(v) for v in left.split(",") if v.strip())
        labels = tuple(int(v) for v in right.split(",") if v.strip())
    except ValueError:
        raise ValidationError(f"history key {key!r} has non-integer symbols", path) from None
    if len(labels) != len(contexts) - 1:
        raise ValidationError(
            f"history key {key!r} needs one label fewer than contexts", path
        )
    return contexts, labels


def _explicit(spec: ExplicitClassSpec, K: int, X: ContextAlphabet) -> list[TableExpert]:
    experts = []
    for i, entry in enumerate(spec.experts):
        table = {}
        for key, probs in entry.table.items():
            path = f'class.experts[{i}].table["{key}"]'
            contexts, labels = _parse_history(key, path)
            for x in contexts:
                X.check(x, path)
            for y in labels:
                if not 0 <= y < K:
                    raise ValidationError(f"label {y} outside 0..{K - 1}", path)
            table[(contexts, labels)] = _distribution(probs, K, path)
        expert = TableExpert(K, table, name=entry.name or f"expert[{i}]")
        try:
            expert.check_complete(X.size, spec.depth)
        except ValidationError as e:
            raise ValidationError(str(e), f"class.experts[{i}].table") from None
        experts.append(expert)
    return experts


def _nonsequential(
    spec: NonSequentialClassSpec, K: int, X: ContextAlphabet
) -> list[NonSequentialExpert]:
    experts = []
    for i, entry in enumerate(spec.experts):
        if len(entry.by_context) != X.size:
            raise ValidationError(
                f"expected {X.size} distributions, got {len(entry.by_context)}",
                f"class.experts[{i}].by_context",
            )
        dists = tuple(
            _distribution(p, K, f"class.experts[{i}].by_context[{x}]")
            for x, p in enumerate(entry.by_context)
        )
        experts.append(NonSequentialExpert(K, dists, name=entry.name or f"expert[{i}]"))
    return experts


def _linear(spec: LinearClassSpec, K: int, X: ContextAlphabet) -> HypothesisClass:
    if K != 2:
        raise ValidationError(f"linear classes are binary, got {K} labels", "labels")
    if len(spec.design) != X.size:
        raise ValidationError(
            f"design has {len(spec.design)} points for {X.size} contexts", "class.design"
        )
    dims = {len(row) for row in spec.design}
    if len(dims) != 1:
        raise ValidationError("design points have different dimensions", "class.design")
    absolute = spec.kind == "abs_linear"

    if spec.weights is not None:
        experts = []
        for i, w in enumerate(spec.weights):
            try:
                experts.append(
                    LinearExpert(tuple(w), tuple(map(tuple, spec.design)), absolute, name=f"w[{i}]")
                )
            except ValidationError as e:
                raise ValidationError(str(e), f"class.weights[{i}]") from None
        return ExplicitFiniteClass(experts, LabelAlphabet(2), X, name=spec.kind)

    if spec.ball_grid is not None:
        grid = ball_grid(dims.pop(), spec.ball_grid)
        F = linear_grid_class(spec.design, grid, absolute)
        return ExplicitFiniteClass(F.experts, F.labels, X, name=F.name)

    if absolute:
        raise ValidationError("abs_linear needs weights or ball_grid", "class")
    F = linear_full_class(spec.design)
    F.contexts = X
    return F


def build_class(document: ClassSpecDocument) -> HypothesisClass:
    """Materialize a validated class-spec document."""
    K = document.labels
    names = tuple(document.context_names) if document.context_names else None
    try:
        X = ContextAlphabet(document.contexts, names)
    except ValidationError as e:
        raise ValidationError(str(e), "context_names") from None
    labels = LabelAlphabet(K)
    spec = document.hypothesis_class

    if isinstance(spec, ExplicitClassSpec):
        return ExplicitFiniteClass(_explicit(spec, K, X), labels, X, name="explicit")
    if isinstance(spec, NonSequentialClassSpec):
        return ExplicitFiniteClass(_nonsequential(spec, K, X), labels, X, name="nonsequential")
    if isinstance(spec, ConstantClassSpec):
        experts = [
            ConstantExpert(_distribution(p, K, f"class.distributions[{i}]"), name=f"constant[{i}]")
            for i, p in enumerate(spec.distributions)
        ]
        return ExplicitFiniteClass(experts, labels, X, name="constant")
    if isinstance(spec, BernoulliFullClassSpec):
        if K != 2:
            raise ValidationError(f"bernoulli_full is binary, got {K} labels", "labels")
        F = bernoulli_full_class(X.size, spec.refined)
        F.contexts = X
        return F
    if isinstance(spec, BernoulliGridClassSpec):
        if K != 2:
            raise ValidationError(f"bernoulli_grid is binary, got {K} labels", "labels")
        experts = [ConstantExpert.bernoulli(i / (spec.points - 1)) for i in range(spec.points)]
        return ExplicitFiniteClass(experts, labels, X, name=f"bernoulli_grid({spec.points})")
    if isinstance(spec, PointMassClassSpec):
        experts = []
        for i, seq in enumerate(spec.sequences):
            for t, y in enumerate(seq):
                labels.check(y, f"class.sequences[{i}][{t}]")
            experts.append(PointMassExpert(K, tuple(seq), name=f"pointmass[{i}]"))
        return ExplicitFiniteClass(experts, labels, X, name="pointmass")
    if isinstance(spec, LinearClassSpec):
        return _linear(spec, K, X)
    raise ValidationError(f"unknown class kind {spec.kind!r}", "class.kind")


def parse_class_spec(document: Document) -> tuple[LabelAlphabet, ContextAlphabet, HypothesisClass]:
    """Read and validate a class spec, from a dict or a JSON file path."""
    parsed = _validate(ClassSpecDocument, _read(document), "spec")
    F = build_class(parsed)
    logger.info(f"Loaded class {F.name!r}: K={F.num_labels}, |X|={F.num_contexts}")
    return F.labels, F.contexts, F


def parse_constraint(document: Document, num_contexts: int) -> TimeVaryingConstraint:
    parsed = _validate(ConstraintDocument, _read(document), "constraint")
    for t, xs in enumerate(parsed.allowed):
        if not xs:
            raise ValidationError("empty context set", f"constraint.allowed[{t}]")
        for i, x in enumerate(xs):
            if not 0 <= x < num_contexts:
                raise ValidationError(
                    f"context {x} outside 0..{num_contexts - 1}", f"constraint.allowed[{t}][{i}]"
                )
    return TimeVaryingConstraint(parsed.allowed)


def parse_prefix(document: Document, F: HypothesisClass, horizon: int | None = None) -> Prefix:
    parsed = _validate(PrefixDocument, _read(document), "prefix")
    try:
        prefix = Prefix(tuple(parsed.contexts), tuple(parsed.labels))
    except ValidationError as e:
        raise ValidationError(str(e), "prefix") from None
    return prefix.validate(F.labels, F.contexts, horizon)


def parse_tree(document: Document, F: HypothesisClass) -> ContextTree:
    """A context tree as a JSON array of node contexts in level (mixed-radix) order.

    The depth is inferred from the node count; {"depth": T, "nodes": [...]} is
    accepted too.
    """
    data = _read(document)
    if isinstance(data, list):
        nodes, depth = data, tree_depth_for(F.num_labels, len(data))
        if depth is None:
            raise ValidationError(
                f"{len(data)} nodes form no complete {F.num_labels}-ary tree", "tree"
            )
    elif isinstance(data, dict) and "depth" in data and "nodes" in data:
        nodes, depth = data["nodes"], data["depth"]
    else:
        raise ValidationError("a tree is a list of contexts or has 'depth' and 'nodes'", "tree")
    try:
        tree = ContextTree(int(depth), F.num_labels, tuple(int(v) for v in nodes))
    except (TypeError, ValueError):
        raise ValidationError("tree depth and nodes must be integers", "tree") from None
    for i, x in enumerate(tree.nodes):
        F.contexts.check(x, f"tree.nodes[{i}]")
    return tree
