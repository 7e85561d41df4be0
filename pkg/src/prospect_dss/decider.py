"""The decider: normalize evidence, decide the eight criteria, compose the
document verdict with human-readable explanations.

Six criteria are decided directly from evidence values against configured
eligible sets; two are decided by configurable decision trees over evidence
presence plus document metadata. Everything here is a pure function of
(annotations, metadata, config).
"""

from __future__ import annotations

import datetime as _dt
import json
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Any, Optional, Sequence, Union

from .documents import Annotation, Criterion, Document, DocumentMetadata, TargetType

ELIGIBLE = "eligible"
INELIGIBLE = "ineligible"
REVIEW = "review"
OUTCOMES = (ELIGIBLE, INELIGIBLE, REVIEW)

# Gap below which decisive eligible-vs-ineligible evidence triggers review
# instead of silently trusting the higher-confidence value.
CONFLICT_GAP = 0.1

_MISSING = object()


class ParseError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# --- value normalization ------------------------------------------------------

_CURRENCY_ALIASES = {
    "euro": "EUR",
    "eur": "EUR",
    "€": "EUR",
    "us-dollar": "USD",
    "us dollar": "USD",
    "u.s. dollar": "USD",
    "dollar": "USD",
    "usd": "USD",
    "pfund sterling": "GBP",
    "pound sterling": "GBP",
    "britisches pfund": "GBP",
    "gbp": "GBP",
    "japanischer yen": "JPY",
    "yen": "JPY",
    "jpy": "JPY",
    "schweizer franken": "CHF",
    "swiss franc": "CHF",
    "chf": "CHF",
}


def normalize_currency(surface: str) -> Optional[str]:
    """Map a currency mention to an ISO-style code via the shipped alias
    table (case-insensitive). ISO-shaped three-letter codes pass through
    unchanged; anything else is unknown (None), which the decider maps to
    review."""
    key = " ".join(surface.split()).casefold()
    if key in _CURRENCY_ALIASES:
        return _CURRENCY_ALIASES[key]
    stripped = surface.strip()
    if re.fullmatch(r"[A-Z]{3}", stripped):
        return stripped
    return None


def parse_amount(surface: str, default_locale: str = "de") -> Decimal:
    """Parse German (1.000.000,00) and English (1,000,000.00) number formats.

    A single separator followed by exactly three digits is ambiguous and
    resolves per the default locale: under "de" a dot groups thousands and a
    comma marks decimals; under "en" the roles swap.
    """
    s = surface.strip()
    if not s or not re.fullmatch(r"\d[\d.,]*", s):
        raise ParseError(f"not an amount: {surface!r}")

    dots = s.count(".")
    commas = s.count(",")

    def _decimal(string: str, thousands: str, decimal_sep: str) -> Decimal:
        head, sep, tail = string.rpartition(decimal_sep)
        if not sep:
            head, tail = string, ""
        groups = head.split(thousands) if thousands in head else [head]
        if len(groups) > 1:
            if not (1 <= len(groups[0]) <= 3) or any(len(g) != 3 for g in groups[1:]):
                raise ParseError(f"bad digit grouping in {surface!r}")
        if any(not g.isdigit() for g in groups) or (tail and not tail.isdigit()):
            raise ParseError(f"not an amount: {surface!r}")
        try:
            return Decimal("".join(groups) + ("." + tail if tail else ""))
        except InvalidOperation as exc:
            raise ParseError(f"not an amount: {surface!r}") from exc

    if dots and commas:
        decimal_sep = "." if s.rfind(".") > s.rfind(",") else ","
        thousands = "," if decimal_sep == "." else "."
        return _decimal(s, thousands, decimal_sep)
    if not dots and not commas:
        return Decimal(s)

    sep = "." if dots else ","
    count = dots or commas
    _, _, tail = s.rpartition(sep)
    if count > 1:
        return _decimal(s, sep, decimal_sep="\x00")
    if len(tail) == 3:
        # ambiguous: "1.000" / "1,000"
        de_thousands = sep == "."
        grouping = de_thousands if default_locale == "de" else not de_thousands
        if grouping:
            return _decimal(s, sep, decimal_sep="\x00")
        return _decimal(s, thousands="\x00", decimal_sep=sep)
    return _decimal(s, thousands="\x00", decimal_sep=sep)


def normalize_text(surface: str) -> str:
    return " ".join(surface.split()).casefold()


# --- evidence grouping --------------------------------------------------------


@dataclass(frozen=True)
class EvidenceItem:
    annotation: Annotation
    value: Optional[Union[str, Decimal]]  # normalized; None when unreadable


@dataclass(frozen=True)
class ValueGroup:
    value: Optional[Union[str, Decimal]]
    confidence: float  # max over members
    first_offset: int
    items: tuple[EvidenceItem, ...]

    @property
    def fragments(self) -> tuple[tuple[int, int], ...]:
        frags: list[tuple[int, int]] = []
        for item in self.items:
            frags.extend(item.annotation.fragments)
        return tuple(sorted(frags))


def select_primary_value(
    evidence: Sequence[EvidenceItem],
) -> tuple[Optional[ValueGroup], list[ValueGroup]]:
    """Group evidence by normalized value and pick the primary group.

    Chosen: highest max confidence, ties broken by earliest first-fragment
    offset. All other groups come back as alternatives sorted by confidence
    descending.
    """
    if not evidence:
        return None, []
    groups: dict[object, list[EvidenceItem]] = {}
    for item in evidence:
        groups.setdefault(item.value, []).append(item)
    built = []
    for value, items in groups.items():
        items = sorted(items, key=lambda it: it.annotation.fragments)
        built.append(
            ValueGroup(
                value=value,
                confidence=max(it.annotation.confidence for it in items),
                first_offset=min(it.annotation.fragments[0][0] for it in items),
                items=tuple(items),
            )
        )
    built.sort(key=lambda g: (-g.confidence, g.first_offset, str(g.value)))
    return built[0], built[1:]


# --- decision data ------------------------------------------------------------


@dataclass(frozen=True)
class AlternativeValue:
    value: str
    confidence: float
    fragments: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class CriterionDecision:
    criterion: Criterion
    outcome: str
    chosen_value: Optional[str]
    confidence: float
    alternatives: tuple[AlternativeValue, ...]
    explanation: str
    supporting_fragments: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Verdict:
    overall: str
    decisions: tuple[CriterionDecision, ...]


def compose_verdict(decisions: Sequence[CriterionDecision]) -> Verdict:
    """Document-level conjunction: eligible iff all eight criteria are
    eligible, ineligible iff at least one is, review otherwise."""
    by_criterion = {d.criterion: d for d in decisions}
    if set(by_criterion) != set(Criterion) or len(decisions) != len(Criterion):
        raise ValueError("verdict needs exactly one decision per criterion")
    ordered = tuple(by_criterion[c] for c in Criterion)
    outcomes = [d.outcome for d in ordered]
    if any(o == INELIGIBLE for o in outcomes):
        overall = INELIGIBLE
    elif all(o == ELIGIBLE for o in outcomes):
        overall = ELIGIBLE
    else:
        overall = REVIEW
    return Verdict(overall=overall, decisions=ordered)


# --- decision trees -----------------------------------------------------------

_OPS = ("eq", "ne", "lt", "le", "in", "present")
_OP_SYMBOLS = {"eq": "=", "ne": "!=", "lt": "<", "le": "<=", "in": "in", "present": "present"}


@dataclass(frozen=True)
class TreeLeaf:
    outcome: str
    explanation: str


@dataclass(frozen=True)
class TreeNode:
    feature: str
    op: str
    value: Any
    if_true: Union["TreeNode", TreeLeaf]
    if_false: Union["TreeNode", TreeLeaf]


@dataclass(frozen=True)
class FeatureSpec:
    type: str  # bool | string | date | number
    domain: tuple[Any, ...] = ()


@dataclass(frozen=True)
class DecisionTree:
    criterion: Criterion
    feature_manifest: dict[str, FeatureSpec]
    root: Union[TreeNode, TreeLeaf]

    def __post_init__(self):
        for node in self._walk(self.root):
            if isinstance(node, TreeNode):
                if node.feature not in self.feature_manifest:
                    raise ConfigError(
                        f"tree for {self.criterion.value} references undeclared "
                        f"feature {node.feature!r}"
                    )
                if node.op not in _OPS:
                    raise ConfigError(f"unknown comparator {node.op!r}")
            elif node.outcome not in OUTCOMES:
                raise ConfigError(f"unknown leaf outcome {node.outcome!r}")

    @staticmethod
    def _walk(node):
        yield node
        if isinstance(node, TreeNode):
            yield from DecisionTree._walk(node.if_true)
            yield from DecisionTree._walk(node.if_false)


def _coerce_constant(raw: Any, spec: FeatureSpec) -> Any:
    if spec.type == "date":
        if isinstance(raw, list):
            return [_dt.date.fromisoformat(v) for v in raw]
        return _dt.date.fromisoformat(raw)
    return raw


def _parse_tree_node(raw: dict, manifest: dict[str, FeatureSpec]) -> Union[TreeNode, TreeLeaf]:
    if "outcome" in raw:
        return TreeLeaf(outcome=raw["outcome"], explanation=raw.get("explanation", ""))
    feature = raw["feature"]
    spec = manifest.get(feature)
    if spec is None:
        raise ConfigError(f"tree node references undeclared feature {feature!r}")
    op = raw["op"]
    if op in ("lt", "le") and spec.type not in ("date", "number"):
        raise ConfigError(f"{op} needs an ordered feature, {feature!r} is {spec.type}")
    value = _coerce_constant(raw.get("value"), spec) if op != "present" else None
    return TreeNode(
        feature=feature,
        op=op,
        value=value,
        if_true=_parse_tree_node(raw["true"], manifest),
        if_false=_parse_tree_node(raw["false"], manifest),
    )


def tree_from_dict(raw: dict) -> DecisionTree:
    manifest = {
        name: FeatureSpec(type=s["type"], domain=tuple(s.get("domain", ())))
        for name, s in raw["feature_manifest"].items()
    }
    return DecisionTree(
        criterion=Criterion(raw["criterion"]),
        feature_manifest=manifest,
        root=_parse_tree_node(raw["nodes"], manifest),
    )


def _walk_tree(
    tree: DecisionTree, features: dict[str, Any]
) -> tuple[str, list[str], str]:
    trace: list[str] = []
    node = tree.root
    while isinstance(node, TreeNode):
        value = features.get(node.feature, _MISSING)
        if node.op == "present":
            result = value is not _MISSING and value is not None
            trace.append(f"present({node.feature}) -> {result}")
        else:
            if value is _MISSING or value is None:
                trace.append(f"missing: {node.feature}")
                return REVIEW, trace, "required input missing; marked for human review"
            if node.op == "eq":
                result = value == node.value
            elif node.op == "ne":
                result = value != node.value
            elif node.op == "lt":
                result = value < node.value
            elif node.op == "le":
                result = value <= node.value
            else:  # in
                result = value in node.value
            shown = node.value.isoformat() if isinstance(node.value, _dt.date) else node.value
            trace.append(f"{node.feature} {_OP_SYMBOLS[node.op]} {shown!r} -> {result}")
        node = node.if_true if result else node.if_false
    trace.append(f"leaf: {node.outcome}")
    return node.outcome, trace, node.explanation


def evaluate_tree(tree: DecisionTree, features: dict[str, Any]) -> tuple[str, list[str]]:
    """Deterministic root-to-leaf walk.

    A missing feature value at any comparison predicate short-circuits to
    review (trace ends "missing: <feature>"); the present comparator itself
    never does, since its whole point is testing presence. The trace lists
    every predicate with its boolean result.
    """
    outcome, trace, _ = _walk_tree(tree, features)
    return outcome, trace


# --- configuration ------------------------------------------------------------

_COUPON_VARIABLE_TYPES = (
    TargetType.COUPON_VARIABLE_INDEX,
    TargetType.COUPON_VARIABLE_MARGIN,
    TargetType.COUPON_VARIABLE_OPERATOR,
    TargetType.COUPON_VARIABLE_TENOR,
)


@dataclass(frozen=True)
class CriterionConfig:
    criterion: Criterion
    types: tuple[TargetType, ...]
    kind: str  # currency | amount | text | tree
    eligible_values: frozenset[str] = frozenset()
    min_amount: Optional[Decimal] = None
    max_amount: Optional[Decimal] = None
    context_types: tuple[TargetType, ...] = ()


@dataclass(frozen=True)
class DeciderConfig:
    threshold: float
    criteria: dict[Criterion, CriterionConfig]
    trees: dict[Criterion, DecisionTree]
    default_locale: str = "de"
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must be in [0,1]")
        missing = set(Criterion) - set(self.criteria)
        if missing:
            raise ConfigError(f"mapping must cover all 8 criteria, missing {sorted(m.value for m in missing)}")
        for criterion, cfg in self.criteria.items():
            if cfg.kind == "tree" and criterion not in self.trees:
                raise ConfigError(f"criterion {criterion.value} is tree-bound but has no tree")

    @property
    def direct_criteria(self) -> list[Criterion]:
        return [c for c in Criterion if self.criteria[c].kind != "tree"]

    @property
    def tree_criteria(self) -> list[Criterion]:
        return [c for c in Criterion if self.criteria[c].kind == "tree"]


def config_from_dict(raw: dict) -> DeciderConfig:
    criteria: dict[Criterion, CriterionConfig] = {}
    for name, entry in raw["mapping"].items():
        criterion = Criterion(name)
        eligible = raw.get("eligible_values", {}).get(name, {})
        criteria[criterion] = CriterionConfig(
            criterion=criterion,
            types=tuple(TargetType(t) for t in entry["types"]),
            kind=entry["kind"],
            eligible_values=frozenset(eligible.get("values", ())),
            min_amount=Decimal(eligible["min"]) if "min" in eligible else None,
            max_amount=Decimal(eligible["max"]) if "max" in eligible else None,
            context_types=tuple(TargetType(t) for t in entry.get("context_types", ())),
        )
    trees = {}
    for raw_tree in raw.get("trees", ()):
        tree = tree_from_dict(raw_tree)
        trees[tree.criterion] = tree
    return DeciderConfig(
        threshold=float(raw["threshold"]),
        criteria=criteria,
        trees=trees,
        default_locale=raw.get("default_locale", "de"),
        raw=raw,
    )


def load_config(path: str) -> DeciderConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def default_config() -> DeciderConfig:
    """The documented default instance shipped with the package."""
    from importlib.resources import files

    raw = json.loads(files("prospect_dss.data").joinpath("default_config.json").read_text("utf-8"))
    return config_from_dict(raw)


# --- direct criteria ----------------------------------------------------------


def _normalize_item(ann: Annotation, text: str, kind: str, locale: str) -> EvidenceItem:
    surface = ann.covered_text(text)
    value: Optional[Union[str, Decimal]]
    if kind == "currency":
        value = normalize_currency(surface)
    elif kind == "amount":
        try:
            value = parse_amount(surface, default_locale=locale)
        except ParseError:
            value = None
    else:
        value = normalize_text(surface)
    return EvidenceItem(annotation=ann, value=value)


def _is_eligible_value(value: Union[str, Decimal], cfg: CriterionConfig) -> bool:
    if cfg.kind == "amount":
        assert isinstance(value, Decimal)
        if cfg.min_amount is not None and value < cfg.min_amount:
            return False
        if cfg.max_amount is not None and value > cfg.max_amount:
            return False
        return True
    return str(value) in cfg.eligible_values


def _offsets(fragments: Sequence[tuple[int, int]]) -> str:
    return ",".join(f"[{s},{e})" for s, e in fragments)


def _alternatives(groups: Sequence[ValueGroup]) -> tuple[AlternativeValue, ...]:
    return tuple(
        AlternativeValue(
            value=str(g.value) if g.value is not None else "?",
            confidence=g.confidence,
            fragments=g.fragments,
        )
        for g in groups
    )


def decide_direct_criterion(
    criterion: Criterion,
    annotations: Sequence[Annotation],
    config: DeciderConfig,
    text: str,
) -> CriterionDecision:
    """Decide one of the six direct criteria from its evidence annotations."""
    cfg = config.criteria[criterion]
    if cfg.kind == "tree":
        raise ValueError(f"{criterion.value} is tree-bound, not direct")
    evidence = [
        _normalize_item(a, text, cfg.kind, config.default_locale)
        for a in annotations
        if a.type in cfg.types
    ]
    chosen, others = select_primary_value(evidence)

    if chosen is None:
        return CriterionDecision(
            criterion=criterion, outcome=REVIEW, chosen_value=None, confidence=0.0,
            alternatives=(), supporting_fragments=(),
            explanation=f"no {criterion.value} evidence found; marked for human review",
        )

    alternatives = _alternatives(others)
    value_str = str(chosen.value) if chosen.value is not None else None

    if chosen.value is None:
        return CriterionDecision(
            criterion=criterion, outcome=REVIEW, chosen_value=None,
            confidence=chosen.confidence, alternatives=alternatives,
            supporting_fragments=chosen.fragments,
            explanation=(
                f"{criterion.value} evidence at {_offsets(chosen.fragments)} "
                f"could not be interpreted; marked for human review"
            ),
        )

    if chosen.confidence < config.threshold:
        return CriterionDecision(
            criterion=criterion, outcome=REVIEW, chosen_value=value_str,
            confidence=chosen.confidence, alternatives=alternatives,
            supporting_fragments=chosen.fragments,
            explanation=(
                f"{criterion.value} value {value_str!r} has confidence "
                f"{chosen.confidence:.2f} below threshold {config.threshold:.2f}"
            ),
        )

    eligible = _is_eligible_value(chosen.value, cfg)
    for other in others:
        if other.value is None or other.confidence < config.threshold:
            continue
        if chosen.confidence - other.confidence >= CONFLICT_GAP:
            continue
        if _is_eligible_value(other.value, cfg) != eligible:
            return CriterionDecision(
                criterion=criterion, outcome=REVIEW, chosen_value=value_str,
                confidence=chosen.confidence, alternatives=alternatives,
                supporting_fragments=chosen.fragments,
                explanation=(
                    f"conflicting decisive {criterion.value} evidence: "
                    f"{value_str!r} vs {str(other.value)!r} "
                    f"(confidences {chosen.confidence:.2f} / {other.confidence:.2f})"
                ),
            )

    if eligible:
        if cfg.kind == "amount":
            lo = "" if cfg.min_amount is None else str(cfg.min_amount)
            hi = "" if cfg.max_amount is None else str(cfg.max_amount)
            rule = f"within the configured range [{lo},{hi}]"
        else:
            rule = "in the eligible set"
        explanation = (
            f"{criterion.value} value {value_str!r} {rule} "
            f"(evidence at {_offsets(chosen.fragments)}, confidence {chosen.confidence:.2f})"
        )
        outcome = ELIGIBLE
    else:
        rule = "outside the configured amount range" if cfg.kind == "amount" else "not in the eligible set"
        explanation = (
            f"{criterion.value} value {value_str!r} is {rule} "
            f"(evidence at {_offsets(chosen.fragments)}, confidence {chosen.confidence:.2f})"
        )
        outcome = INELIGIBLE
    return CriterionDecision(
        criterion=criterion, outcome=outcome, chosen_value=value_str,
        confidence=chosen.confidence, alternatives=alternatives,
        supporting_fragments=chosen.fragments, explanation=explanation,
    )


# --- tree criteria -------------------------------------------------------------


def build_features(
    annotations: Sequence[Annotation], metadata: DocumentMetadata, threshold: float
) -> dict[str, Any]:
    """The feature space decision trees may reference.

    has_<type>/count_<type> for every target type (presence gated on the
    confidence threshold), two derived coupon features, and the document
    metadata fields. Missing metadata stays absent from the map.
    """
    features: dict[str, Any] = {}
    for type_ in TargetType:
        hits = [a for a in annotations if a.type is type_ and a.confidence >= threshold]
        features[f"has_{type_.value}"] = bool(hits)
        features[f"count_{type_.value}"] = len(hits)
    features["has_any_coupon_variable"] = any(
        features[f"has_{t.value}"] for t in _COUPON_VARIABLE_TYPES
    )
    features["coupon_variable_complete"] = all(
        features[f"has_{t.value}"] for t in _COUPON_VARIABLE_TYPES
    )
    if metadata.issue_date is not None:
        features["issue_date"] = metadata.issue_date
    if metadata.issuer_group is not None:
        features["issuer_group"] = metadata.issuer_group
    if metadata.asset_type is not None:
        features["asset_type"] = metadata.asset_type
    if metadata.isin is not None:
        features["isin"] = metadata.isin
    features.update(metadata.extra)
    return features


def decide_tree_criterion(
    criterion: Criterion,
    annotations: Sequence[Annotation],
    metadata: DocumentMetadata,
    config: DeciderConfig,
) -> CriterionDecision:
    cfg = config.criteria[criterion]
    tree = config.trees[criterion]
    features = build_features(annotations, metadata, config.threshold)
    outcome, trace, leaf_text = _walk_tree(tree, features)

    evidence = [
        a for a in annotations
        if a.type in cfg.types and a.confidence >= config.threshold
    ]
    present_types = sorted({a.type.value for a in evidence})
    chosen_value = "+".join(present_types) if present_types else None
    confidence = max((a.confidence for a in evidence), default=0.0)
    fragments = tuple(sorted(f for a in evidence for f in a.fragments))
    explanation = leaf_text or f"decision tree outcome: {outcome}"
    explanation = f"{explanation} [path: {'; '.join(trace)}]"
    return CriterionDecision(
        criterion=criterion, outcome=outcome, chosen_value=chosen_value,
        confidence=confidence, alternatives=(),
        supporting_fragments=fragments, explanation=explanation,
    )


# --- document-level decision ----------------------------------------------------


def decide_document(doc: Document, config: DeciderConfig) -> Verdict:
    """Run all eight criteria over the document's annotations and metadata."""
    decisions = []
    for criterion in Criterion:
        if config.criteria[criterion].kind == "tree":
            decisions.append(
                decide_tree_criterion(criterion, doc.annotations, doc.metadata, config)
            )
        else:
            decisions.append(
                decide_direct_criterion(criterion, doc.annotations, config, doc.text)
            )
    return compose_verdict(decisions)
