"""Conditional probability tables keyed by parent configuration.

A configuration is a tuple of parent state indices aligned with the node's
ordered parent list (first parent most significant). Rows are never silently
renormalized: a row that breaks the sum-to-one constraint is surfaced, not
patched.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .graph import Finding, RiskDag, ValidationReport

ROW_SUM_TOL = 1e-9

# Tuple of parent state indices, parent order = the node's ordered parent list.
ParentConfig = tuple[int, ...]


class CptError(Exception):
    pass


class RowSumError(CptError):
    """First K-1 probabilities add up beyond 1; the row must be revised."""

    def __init__(self, total: float):
        self.total = total
        super().__init__(f"probabilities sum to {total:.12g} > 1")


class RowStatus(str, Enum):
    UNELICITED = "unelicited"
    PARTIAL = "partial"
    COMPLETE = "complete"
    INVALID = "invalid"


@dataclass(frozen=True)
class CptRow:
    values: tuple[float, ...] | None
    status: RowStatus


def enumerate_rows(dag: RiskDag, node_id: str) -> list[ParentConfig]:
    """All parent configurations in lexicographic order; [()] for a root."""
    cards = [dag.node(p).k for p in dag.parents(node_id)]
    return [tuple(cfg) for cfg in itertools.product(*(range(k) for k in cards))]


def complete_last_state(partial: Sequence[float], k: int) -> tuple[float, ...]:
    """Fill state K-1 from the normalization constraint.

    Raises RowSumError when the first K-1 values already exceed 1, and
    ValueError on shape or range violations.
    """
    values = [float(v) for v in partial]
    if len(values) != k - 1:
        raise ValueError(f"expected {k - 1} probabilities for a {k}-state node, got {len(values)}")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"probability {v!r} outside [0, 1]")
    total = sum(values)
    if total > 1.0 + ROW_SUM_TOL:
        raise RowSumError(total)
    return tuple(values) + (min(1.0, max(0.0, 1.0 - total)),)


class Cpt:
    """One node's table. Snapshots the parent order at creation; structural
    edits are detected as staleness instead of being remapped under elicited
    rows."""

    __slots__ = ("node_id", "parent_ids", "parent_cards", "k", "_rows")

    def __init__(
        self,
        node_id: str,
        parent_ids: Sequence[str],
        parent_cards: Sequence[int],
        k: int,
        rows: Mapping[ParentConfig, CptRow] | None = None,
    ):
        if len(parent_ids) != len(parent_cards):
            raise CptError("parent ids and cardinalities differ in length")
        if k < 2:
            raise CptError("a CPT needs at least 2 node states")
        self.node_id = node_id
        self.parent_ids = tuple(parent_ids)
        self.parent_cards = tuple(int(c) for c in parent_cards)
        self.k = int(k)
        self._rows: dict[ParentConfig, CptRow] = dict(rows or {})

    @classmethod
    def for_node(cls, dag: RiskDag, node_id: str) -> "Cpt":
        node = dag.node(node_id)
        parents = dag.parents(node_id)
        return cls(node_id, parents, [dag.node(p).k for p in parents], node.k)

    # -- rows ---------------------------------------------------------------

    @property
    def rows(self) -> Mapping[ParentConfig, CptRow]:
        return dict(self._rows)

    def expected_configs(self) -> list[ParentConfig]:
        return [tuple(cfg) for cfg in itertools.product(*(range(c) for c in self.parent_cards))]

    def _check_config(self, config: ParentConfig) -> ParentConfig:
        config = tuple(int(i) for i in config)
        if len(config) != len(self.parent_cards):
            raise CptError(
                f"config {config} has {len(config)} entries, CPT of {self.node_id!r} expects {len(self.parent_cards)}"
            )
        for i, card in zip(config, self.parent_cards):
            if not 0 <= i < card:
                raise CptError(f"config {config} state index {i} out of range for cardinality {card}")
        return config

    def set_row(self, config: ParentConfig, values: Sequence[float]) -> None:
        """Store a full probability vector; enforces normalization."""
        config = self._check_config(config)
        vec = tuple(float(v) for v in values)
        if len(vec) != self.k:
            raise CptError(f"row needs {self.k} probabilities, got {len(vec)}")
        for v in vec:
            if not 0.0 <= v <= 1.0:
                raise CptError(f"probability {v!r} outside [0, 1]")
        total = sum(vec)
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise RowSumError(total)
        self._rows[config] = CptRow(vec, RowStatus.COMPLETE)

    def set_placeholder(self, config: ParentConfig) -> None:
        config = self._check_config(config)
        self._rows[config] = CptRow(tuple([1.0 / self.k] * self.k), RowStatus.UNELICITED)

    def fill_placeholders(self) -> None:
        for cfg in self.expected_configs():
            if cfg not in self._rows:
                self.set_placeholder(cfg)

    def mark_invalid(self, config: ParentConfig) -> None:
        config = self._check_config(config)
        old = self._rows.get(config)
        self._rows[config] = CptRow(old.values if old else None, RowStatus.INVALID)

    def mark_partial(self, config: ParentConfig) -> None:
        config = self._check_config(config)
        old = self._rows.get(config)
        self._rows[config] = CptRow(old.values if old else None, RowStatus.PARTIAL)

    def get_row(self, config: ParentConfig) -> CptRow:
        config = self._check_config(config)
        try:
            return self._rows[config]
        except KeyError:
            raise CptError(f"CPT of {self.node_id!r} has no row for config {config}") from None

    def restore_row(self, config: ParentConfig, row: CptRow) -> None:
        """Used by persistence; trusts the stored status flag."""
        self._rows[self._check_config(config)] = row

    # -- health --------------------------------------------------------------

    def is_stale(self, dag: RiskDag) -> bool:
        if self.node_id not in dag:
            return True
        node = dag.node(self.node_id)
        parents = dag.parents(self.node_id)
        return (
            self.parent_ids != parents
            or self.parent_cards != tuple(dag.node(p).k for p in parents)
            or self.k != node.k
        )

    def is_numerically_complete(self) -> bool:
        """Every expected row present with a normalized vector and not invalid."""
        for cfg in self.expected_configs():
            row = self._rows.get(cfg)
            if row is None or row.values is None or row.status is RowStatus.INVALID:
                return False
            if len(row.values) != self.k or abs(sum(row.values) - 1.0) > ROW_SUM_TOL:
                return False
        return True

    def copy(self) -> "Cpt":
        return Cpt(self.node_id, self.parent_ids, self.parent_cards, self.k, self._rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cpt):
            return NotImplemented
        return (
            self.node_id == other.node_id
            and self.parent_ids == other.parent_ids
            and self.parent_cards == other.parent_cards
            and self.k == other.k
            and self._rows == other._rows
        )


def config_pairs(cpt: Cpt, config: ParentConfig) -> list[tuple[str, int]]:
    """Expand a bare index tuple into (parent id, state index) pairs."""
    return list(zip(cpt.parent_ids, config))


def validate_cpts(dag: RiskDag, cpts: Mapping[str, Cpt]) -> ValidationReport:
    findings: list[Finding] = []
    for node_id in cpts:
        if node_id not in dag:
            findings.append(Finding("unknown-node", f"CPT for node {node_id!r} not in the graph", (node_id,)))
    for node_id in dag.nodes:
        cpt = cpts.get(node_id)
        if cpt is None:
            findings.append(Finding("missing-cpt", f"node {node_id!r} has no CPT", (node_id,)))
            continue
        if cpt.is_stale(dag):
            findings.append(
                Finding("stale-snapshot", f"CPT of {node_id!r} snapshots an outdated parent order", (node_id,))
            )
            continue
        rows = cpt.rows
        for cfg in cpt.expected_configs():
            row = rows.get(cfg)
            if row is None:
                findings.append(Finding("missing-row", f"node {node_id!r} row {cfg} missing", (node_id,)))
            elif row.status is RowStatus.INVALID:
                findings.append(Finding("invalid-row", f"node {node_id!r} row {cfg} marked invalid", (node_id,)))
            elif row.values is not None:
                total = sum(row.values)
                if abs(total - 1.0) > ROW_SUM_TOL:
                    findings.append(
                        Finding("row-sum", f"node {node_id!r} row {cfg} sums to {total:.12g}", (node_id,))
                    )
    return ValidationReport(tuple(findings), ())


def build_placeholder_cpts(dag: RiskDag, skip: Iterable[str] = ()) -> dict[str, Cpt]:
    """Uniform, unelicited CPTs for every node not in ``skip``."""
    skipped = set(skip)
    out: dict[str, Cpt] = {}
    for node_id in dag.nodes:
        if node_id in skipped:
            continue
        cpt = Cpt.for_node(dag, node_id)
        cpt.fill_placeholders()
        out[node_id] = cpt
    return out
