"""Log template mining.

Clusters raw log content into parameter-masked templates using a
fixed-depth prefix tree: records are bucketed by token count, routed
down a path of their leading tokens, and merged into the most similar
cluster in the leaf.  Tokens containing digits are masked to ``<*>``
before any comparison, and positions that disagree across cluster
members become ``<*>`` in the template.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import Corpus, Label

WILDCARD = "<*>"


@dataclass(frozen=True)
class MinerParams:
    tree_depth: int = 4
    similarity_threshold: float = 0.5
    max_children: int = 100

    def __post_init__(self) -> None:
        if self.tree_depth < 1:
            raise ValueError("tree_depth must be >= 1")
        if not 0.0 < self.similarity_threshold < 1.0:
            raise ValueError("similarity_threshold must be in (0, 1)")
        if self.max_children < 1:
            raise ValueError("max_children must be >= 1")


@dataclass(frozen=True)
class LogTemplate:
    template_id: int
    template_text: str
    label: Label
    member_count: int
    example_content: str

    def __post_init__(self) -> None:
        if not self.template_text:
            raise ValueError("template_text must be non-empty")
        if self.member_count < 1:
            raise ValueError("member_count must be >= 1")

    @property
    def tokens(self) -> list[str]:
        return self.template_text.split()


def mask_tokens(content: str) -> list[str]:
    """Split on whitespace and replace any digit-bearing token with <*>."""
    return [WILDCARD if any(ch.isdigit() for ch in tok) else tok for tok in content.split()]


def _similarity(a: list[str], b: list[str]) -> float:
    """Positional matches over the longer length; <*> on either side matches."""
    if not a or not b:
        return 0.0
    matches = sum(1 for x, y in zip(a, b) if x == y or x == WILDCARD or y == WILDCARD)
    return matches / max(len(a), len(b))


class _Cluster:
    __slots__ = ("cluster_id", "template", "member_seqs")

    def __init__(self, cluster_id: int, template: list[str]):
        self.cluster_id = cluster_id
        self.template = template
        self.member_seqs: list[int] = []

    def merge(self, tokens: list[str]) -> None:
        for i, tok in enumerate(tokens):
            if self.template[i] != tok:
                self.template[i] = WILDCARD


class _Node:
    __slots__ = ("children", "clusters")

    def __init__(self):
        self.children: dict[str, _Node] = {}
        self.clusters: list[_Cluster] = []


class _PrefixTree:
    """Token-count bucket -> leading-token path -> leaf of clusters."""

    def __init__(self, params: MinerParams):
        self.params = params
        self.roots: dict[int, _Node] = {}

    def leaf(self, tokens: list[str], create: bool) -> _Node | None:
        node = self.roots.get(len(tokens))
        if node is None:
            if not create:
                return None
            node = self.roots[len(tokens)] = _Node()
        depth = min(self.params.tree_depth, len(tokens))
        for level in range(depth):
            node = self._child(node, tokens[level], create)
            if node is None:
                return None
        return node

    def _child(self, node: _Node, key: str, create: bool) -> _Node | None:
        child = node.children.get(key)
        if child is not None:
            return child
        if not create:
            return node.children.get(WILDCARD)
        if key != WILDCARD:
            literal_count = len(node.children) - (1 if WILDCARD in node.children else 0)
            if literal_count < self.params.max_children:
                child = node.children[key] = _Node()
                return child
            key = WILDCARD
        child = node.children.get(key)
        if child is None:
            child = node.children[key] = _Node()
        return child

@dataclass(frozen=True)
class TemplateIndex:
    templates: tuple[LogTemplate, ...]
    assignment: dict[int, int]
    miner_params: MinerParams

    def template_by_id(self, template_id: int) -> LogTemplate:
        if 0 <= template_id < len(self.templates):
            template = self.templates[template_id]
            if template.template_id == template_id:
                return template
        for template in self.templates:
            if template.template_id == template_id:
                return template
        raise KeyError(template_id)


def mine_templates(corpus: Corpus, params: MinerParams = MinerParams()) -> TemplateIndex:
    """Cluster a corpus into templates; deterministic for fixed inputs.

    Mining runs two passes: the first grows the tree and merges records
    into clusters, the second re-matches every record against the
    finished cluster set with the same flat scan match_template uses, so
    assignment and matching agree exactly.  Clusters that win no record
    in the second pass are dropped before ids are issued.  A template
    starts out Anomalous if any member record is Anomalous.
    """
    if len(corpus) == 0:
        raise ValueError("corpus must be non-empty")
    tree = _PrefixTree(params)
    clusters: list[_Cluster] = []

    for record in corpus.records:
        tokens = mask_tokens(record.content)
        leaf = tree.leaf(tokens, create=True)
        best = None
        best_sim = 0.0
        for cluster in leaf.clusters:
            sim = _similarity(tokens, cluster.template)
            if sim > best_sim:
                best, best_sim = cluster, sim
        if best is None or best_sim < params.similarity_threshold:
            cluster = _Cluster(len(clusters), list(tokens))
            clusters.append(cluster)
            leaf.clusters.append(cluster)
        else:
            best.merge(tokens)

    # Second pass: cluster templates only gain wildcards during pass one,
    # so every record still clears the threshold against its own cluster.
    for record in corpus.records:
        best = _best_of(clusters, mask_tokens(record.content), params.similarity_threshold)
        assert best is not None, "record lost its cluster between passes"
        best.member_seqs.append(record.seq_index)

    next_id = 0
    for cluster in clusters:
        if cluster.member_seqs:
            cluster.cluster_id = next_id
            next_id += 1

    by_seq = {record.seq_index: record for record in corpus.records}
    templates: list[LogTemplate] = []
    assignment: dict[int, int] = {}
    for cluster in clusters:
        if not cluster.member_seqs:
            continue
        members = [by_seq[seq] for seq in cluster.member_seqs]
        label = Label.ANOMALOUS if any(r.label is Label.ANOMALOUS for r in members) else Label.NORMAL
        templates.append(LogTemplate(
            template_id=cluster.cluster_id,
            template_text=" ".join(cluster.template),
            label=label,
            member_count=len(members),
            example_content=members[0].content,
        ))
        for seq in cluster.member_seqs:
            assignment[seq] = cluster.cluster_id
    return TemplateIndex(
        templates=tuple(templates),
        assignment=assignment,
        miner_params=params,
    )


def _best_of(clusters: list[_Cluster], tokens: list[str], threshold: float) -> _Cluster | None:
    best: _Cluster | None = None
    best_sim = 0.0
    for cluster in clusters:
        sim = _similarity(tokens, cluster.template)
        if sim > best_sim:
            best, best_sim = cluster, sim
    if best is None or best_sim < threshold:
        return None
    return best


def match_template(index: TemplateIndex, content: str) -> int | None:
    """Route content to the most similar template, or None below threshold.

    Similarity is positional token matches over the longer length, with
    <*> matching anything; ties break toward the lowest template_id.
    """
    tokens = mask_tokens(content)
    best_id: int | None = None
    best_sim = 0.0
    for template in index.templates:
        sim = _similarity(tokens, template.tokens)
        if sim > best_sim:
            best_id, best_sim = template.template_id, sim
    if best_id is None or best_sim < index.miner_params.similarity_threshold:
        return None
    return best_id


def relabel_corpus(corpus: Corpus, index: TemplateIndex) -> Corpus:
    """Propagate (corrected) template labels back onto the member records."""
    records = []
    for record in corpus.records:
        template_id = index.assignment.get(record.seq_index)
        if template_id is None:
            records.append(record)
            continue
        records.append(replace(record, label=index.template_by_id(template_id).label))
    return Corpus(records=tuple(records), name=corpus.name, skipped=corpus.skipped)


def save_templates_jsonl(index: TemplateIndex, path: str | Path) -> None:
    """Write the template export JSONL (keys: id, template, label, count, example)."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for template in index.templates:
            handle.write(json.dumps({
                "id": template.template_id,
                "template": template.template_text,
                "label": template.label.value,
                "count": template.member_count,
                "example": template.example_content,
            }) + "\n")


def load_templates_jsonl(path: str | Path, params: MinerParams = MinerParams()) -> TemplateIndex:
    """Reload a template export; the result carries no assignment."""
    templates = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            templates.append(LogTemplate(
                template_id=row["id"],
                template_text=row["template"],
                label=Label.from_string(row["label"]),
                member_count=row["count"],
                example_content=row["example"],
            ))
    templates.sort(key=lambda t: t.template_id)
    return TemplateIndex(templates=tuple(templates), assignment={}, miner_params=params)


def save_assignments_json(index: TemplateIndex, path: str | Path) -> None:
    payload = {
        "params": {
            "tree_depth": index.miner_params.tree_depth,
            "similarity_threshold": index.miner_params.similarity_threshold,
            "max_children": index.miner_params.max_children,
        },
        "assignment": {str(seq): tid for seq, tid in sorted(index.assignment.items())},
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_assignments_json(path: str | Path) -> tuple[MinerParams, dict[int, int]]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    params = MinerParams(**payload["params"])
    assignment = {int(seq): tid for seq, tid in payload["assignment"].items()}
    return params, assignment
