"""Test-time sense induction: context vectors per instance, nearest-centroid labels.

Dataset instances arrive as TSV (canonical) or Senseval/SemEval-style
lexical-sample XML. Context words are selected by the three-filter rule
(length > 3, not the target, not in the stoplist), averaged over the global
word table, and each instance is labeled with the sense whose output vector
is most similar.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .corpus import normalize_token
from .vectors import ContextVector, SenseTable, WordTable, mean_rows32, sim32


class DatasetFormatError(ValueError):
    """An instance dataset failed to parse; message carries path:line."""


class UnknownTargetError(KeyError):
    """The instance's target word is absent from the sense table."""


@dataclass(frozen=True)
class Instance:
    instance_id: str
    lemma: str
    pos: str
    tokens: tuple[str, ...]
    target_position: int

    @property
    def target_key(self) -> str:
        return f"{self.lemma}.{self.pos}"

    @property
    def target_surface(self) -> str:
        return self.tokens[self.target_position]


class Stoplist:
    """Case-insensitive surface-form stoplist."""

    def __init__(self, words: Iterable[str]):
        self.words = frozenset(w.lower() for w in words)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def load(cls, path) -> "Stoplist":
        with open(path, encoding="utf-8") as f:
            return cls(w for line in f for w in line.split() if not line.startswith("#"))

    @classmethod
    def default(cls) -> "Stoplist":
        ref = resources.files("sensewsi").joinpath("data/stoplist.txt")
        return cls(
            w
            for line in ref.read_text(encoding="utf-8").splitlines()
            if not line.startswith("#")
            for w in line.split()
        )


def select_context_words(
    instance: Instance, stoplist: Stoplist, rule: str = "all"
) -> list[str]:
    """Context tokens passing the selection filters.

    "all" (default): length > 3 AND not the target AND not stoplisted.
    "any": the disjunctive reading (any single filter passing selects).
    """
    if rule not in ("all", "any"):
        raise ValueError(f"rule must be all|any, got {rule!r}")
    target_forms = {instance.target_surface.lower(), instance.lemma.lower()}
    out = []
    for i, tok in enumerate(instance.tokens):
        if i == instance.target_position:
            continue
        t = tok.lower()
        long_enough = len(t) > 3
        not_target = t not in target_forms
        not_stopped = t not in stoplist
        if rule == "all":
            keep = long_enough and not_target and not_stopped
        else:
            keep = long_enough or not_target or not_stopped
        if keep and t:
            out.append(t)
    return out


def context_vec_test(
    instance: Instance,
    word_table: WordTable,
    stoplist: Stoplist,
    rule: str = "all",
) -> tuple[ContextVector, int]:
    """Mean vector of selected in-vocabulary context words.

    Returns (context vector, count of selected-but-out-of-vocabulary words);
    empty support yields the zero vector.
    """
    selected = select_context_words(instance, stoplist, rule)
    ids, oov = [], 0
    for w in selected:
        wid = word_table.vocab.get(w)
        if wid >= 0:
            ids.append(wid)
        else:
            oov += 1
    vec = mean_rows32(word_table.matrix, np.array(ids, dtype=np.int64))
    return ContextVector(vec, support=len(ids)), oov


def resolve_target(instance: Instance, sense_table: SenseTable) -> int:
    """Sense-table word id for the instance's target.

    POS-suffixed lookup ("lemma.pos") first, bare lemma as fallback; raises
    UnknownTargetError when neither is present.
    """
    vocab = sense_table.vocab
    for key in (f"{instance.lemma}.{instance.pos}", instance.lemma):
        wid = vocab.get(key.lower())
        if wid >= 0:
            return wid
    raise UnknownTargetError(instance.target_key)


def label_instance(
    instance: Instance,
    sense_table: SenseTable,
    word_table: WordTable,
    stoplist: Stoplist,
    use: str = "embedding",
    similarity: str = "cosine",
    rule: str = "all",
) -> tuple[int, float, int, int]:
    """(0-based sense index, similarity, oov count, support) for one instance.

    A zero-support context falls back to sense 0 with similarity 0.
    """
    wid = resolve_target(instance, sense_table)
    cv, oov = context_vec_test(instance, word_table, stoplist, rule)
    if cv.support == 0:
        return 0, 0.0, oov, 0
    rows = sense_table.emb if use == "embedding" else sense_table.assign
    base = int(sense_table.offsets[wid])
    nk = int(sense_table.n_senses[wid])
    use_cos = similarity == "cosine"
    best_k, best = 0, sim32(rows[base], cv.values, use_cos)
    for k in range(1, nk):
        s = sim32(rows[base + k], cv.values, use_cos)
        if s > best:
            best, best_k = s, k
    return best_k, float(best), oov, cv.support


@dataclass
class LabelResult:
    instance_id: str
    target_key: str
    sense: int  # 1-based, as written to key files
    similarity: float
    flags: tuple[str, ...] = ()

    @property
    def label(self) -> str:
        return f"{self.target_key}.s{self.sense}"


@dataclass
class LabelingSummary:
    results: list[LabelResult] = field(default_factory=list)
    instances: int = 0
    oov_context_words: int = 0
    zero_context: int = 0
    unknown_targets: list[str] = field(default_factory=list)

    def senses_used(self) -> dict[str, int]:
        used: dict[str, set[int]] = {}
        for r in self.results:
            used.setdefault(r.target_key, set()).add(r.sense)
        return {t: len(s) for t, s in sorted(used.items())}


def label_dataset(
    instances: Sequence[Instance],
    sense_table: SenseTable,
    word_table: WordTable,
    stoplist: Stoplist,
    use: str = "embedding",
    similarity: str = "cosine",
    rule: str = "all",
) -> LabelingSummary:
    """Label every instance; unknown targets get sense 1 and a flag."""
    summary = LabelingSummary()
    for inst in instances:
        flags = []
        try:
            k, sim, oov, support = label_instance(
                inst, sense_table, word_table, stoplist, use, similarity, rule
            )
            summary.oov_context_words += oov
            if support == 0:
                summary.zero_context += 1
                flags.append("zero_context")
        except UnknownTargetError:
            k, sim = 0, 0.0
            summary.unknown_targets.append(inst.target_key)
            flags.append("unknown_target")
        summary.results.append(
            LabelResult(inst.instance_id, inst.target_key, k + 1, sim, tuple(flags))
        )
        summary.instances += 1
    return summary


# -- dataset and key-file formats --------------------------------------------


def _split_target(field: str, where: str) -> tuple[str, str]:
    if "." not in field:
        raise DatasetFormatError(f"{where}: target {field!r} is not 'lemma.pos'")
    lemma, pos = field.rsplit(".", 1)
    return lemma.lower(), pos.lower()


def read_instances_tsv(path) -> list[Instance]:
    """Canonical format: instance_id<TAB>lemma.pos<TAB>target_index<TAB>tokens."""
    instances = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DatasetFormatError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}"
                )
            iid, target, idx_str, text = parts
            if iid in seen:
                raise DatasetFormatError(f"{path}:{lineno}: duplicate instance id {iid!r}")
            seen.add(iid)
            lemma, pos = _split_target(target, f"{path}:{lineno}")
            tokens = tuple(normalize_token(t) for t in text.split())
            try:
                idx = int(idx_str)
            except ValueError:
                raise DatasetFormatError(
                    f"{path}:{lineno}: target index {idx_str!r} is not an integer"
                ) from None
            if not 0 <= idx < len(tokens):
                raise DatasetFormatError(
                    f"{path}:{lineno}: target index {idx} outside {len(tokens)} tokens"
                )
            instances.append(Instance(iid, lemma, pos, tokens, idx))
    return instances


def _xml_tokens(elem) -> tuple[list[str], int]:
    tokens: list[str] = []
    head_pos = -1

    def rec(e):
        nonlocal head_pos
        start = len(tokens)
        if e.text:
            tokens.extend(e.text.split())
        for child in e:
            rec(child)
            if child.tail:
                tokens.extend(child.tail.split())
        if e.tag.lower() == "head" and head_pos < 0 and len(tokens) > start:
            head_pos = start

    rec(elem)
    return tokens, head_pos


def read_instances_xml(path) -> list[Instance]:
    """Senseval/SemEval lexical-sample shape: <instance id> with a <head> target."""
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as e:
        raise DatasetFormatError(f"{path}: XML parse error: {e}") from None
    instances = []
    seen = set()
    lexelt_of = {}
    for lexelt in root.iter("lexelt"):
        item = lexelt.get("item", "")
        for inst in lexelt.iter("instance"):
            lexelt_of[id(inst)] = item
    for elem in root.iter("instance"):
        iid = elem.get("id")
        if not iid:
            raise DatasetFormatError(f"{path}: <instance> without id attribute")
        if iid in seen:
            raise DatasetFormatError(f"{path}: duplicate instance id {iid!r}")
        seen.add(iid)
        target = lexelt_of.get(id(elem)) or iid.rsplit(".", 1)[0]
        lemma, pos = _split_target(target, f"{path}:{iid}")
        raw, head = _xml_tokens(elem)
        tokens = tuple(normalize_token(t) for t in raw)
        if head < 0:
            lowered = [t.lower() for t in tokens]
            head = lowered.index(lemma) if lemma in lowered else -1
        if head < 0:
            raise DatasetFormatError(
                f"{path}: instance {iid!r} has no <head> and no token equal to {lemma!r}"
            )
        instances.append(Instance(iid, lemma, pos, tokens, head))
    return instances


def read_instances(path) -> list[Instance]:
    text_start = open(path, encoding="utf-8").read(256).lstrip()
    if str(path).endswith(".xml") or text_start.startswith("<"):
        return read_instances_xml(path)
    return read_instances_tsv(path)


def write_key_file(results: Sequence[LabelResult], path) -> None:
    """SemEval key format: "lemma.pos instance_id lemma.pos.sK" per instance."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in results:
            f.write(f"{r.target_key} {r.instance_id} {r.label}\n")


@dataclass
class KeyFile:
    ids: tuple[str, ...]
    labels: dict[str, str]
    targets: dict[str, str]


def read_key_file(path) -> KeyFile:
    ids, labels, targets = [], {}, {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise DatasetFormatError(
                    f"{path}:{lineno}: expected 'target instance label', got {line!r}"
                )
            target, iid, label = parts[0], parts[1], parts[2]
            if iid in labels:
                raise DatasetFormatError(f"{path}:{lineno}: duplicate instance {iid!r}")
            ids.append(iid)
            labels[iid] = label
            targets[iid] = target
    return KeyFile(tuple(ids), labels, targets)
