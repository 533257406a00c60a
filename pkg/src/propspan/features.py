"""Handcrafted per-token features: POS tags, NER tags, keyword counts.

The built-in annotators are deterministic rule taggers (closed-class
word lists, suffix rules and a configurable gazetteer), so feature
vectors are reproducible without any external NLP dependency. Users who
want library-quality tags can supply a sidecar annotation file instead;
its records must align one-to-one with the token stream.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import AlignmentError, DataFormatError
from .segment import Sentence, segment_article


class PosTag(enum.Enum):
    NOUN = "NOUN"
    PROPN = "PROPN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    PRON = "PRON"
    DET = "DET"
    ADP = "ADP"
    NUM = "NUM"
    PUNCT = "PUNCT"
    CONJ = "CONJ"
    PART = "PART"
    INTJ = "INTJ"
    SYM = "SYM"
    X = "X"


class NerTag(enum.Enum):
    PERSON = "PERSON"
    ORG = "ORG"
    GPE = "GPE"
    LOC = "LOC"
    DATE = "DATE"
    NUM = "NUM"
    OTHER = "OTHER"
    NONE = "NONE"


POS_DIM = len(PosTag)
NER_DIM = len(NerTag)
_POS_INDEX = {t: i for i, t in enumerate(PosTag)}
_NER_INDEX = {t: i for i, t in enumerate(NerTag)}

# Closed-class word lists for the fallback tagger. Open-class words fall
# through to the suffix rules and the NOUN default.
_CLOSED_CLASS: dict[str, PosTag] = {}


def _extend(tag: PosTag, words: str) -> None:
    for word in words.split():
        _CLOSED_CLASS.setdefault(word, tag)


_extend(PosTag.DET, "the a an this that these those each every either neither some any no all both such what which whose another")
_extend(PosTag.PRON, "i you he she it we they me him her us them myself yourself himself herself itself ourselves themselves who whom mine yours his hers ours theirs my your our its their one anyone everyone someone nobody anything everything something nothing")
_extend(PosTag.ADP, "of in on at by for with about against between into through during before after above below from up down under over near off across behind beyond toward towards upon within without along among around despite except inside outside since until via per")
_extend(PosTag.CONJ, "and or but nor so yet because although though while whereas if unless than whether when as")
_extend(PosTag.PART, "not to")
_extend(PosTag.INTJ, "oh ah wow hey ouch oops hmm huh hello hi yeah alas")
_extend(PosTag.VERB, "be is am are was were been being have has had having do does did doing will would shall should can could may might must")
_extend(PosTag.ADV, "very too also just only even still never always often sometimes again here there now then however quite rather almost")
_extend(PosTag.ADJ, "good bad new old great big small high low long short same other many few more most less least own")

_SYMBOL_CHARS = set("$€£¥%+=<>|~^&*#@§°")


def annotate_pos(sentence: Sentence) -> list[PosTag]:
    """Rule-based POS tags, one per token.

    Rule order: punctuation/symbol, digits, closed-class lexicon,
    capitalized non-initial token, -ly / -ing / -ed suffixes, NOUN.
    """
    tags = []
    for token in sentence.tokens:
        text = token.text
        folded = text.casefold()
        if not any(ch.isalnum() for ch in text):
            tags.append(PosTag.SYM if text in _SYMBOL_CHARS else PosTag.PUNCT)
        elif text.isdigit():
            tags.append(PosTag.NUM)
        elif folded in _CLOSED_CLASS:
            tags.append(_CLOSED_CLASS[folded])
        elif text[0].isupper() and token.token_index > 0:
            tags.append(PosTag.PROPN)
        elif len(text) > 3 and folded.endswith("ly"):
            tags.append(PosTag.ADV)
        elif len(text) > 3 and (folded.endswith("ing") or folded.endswith("ed")):
            tags.append(PosTag.VERB)
        else:
            tags.append(PosTag.NOUN)
    return tags


_GAZETTEER_ORDER = (NerTag.PERSON, NerTag.ORG, NerTag.GPE, NerTag.LOC, NerTag.DATE)


@dataclass
class Gazetteer:
    """Name lists per entity category; lookup is case-sensitive."""

    entries: dict[str, NerTag] = field(default_factory=dict)

    @classmethod
    def from_lists(cls, **categories: list[str] | set[str] | tuple[str, ...]) -> "Gazetteer":
        """Build from keyword lists, e.g. ``person=[...], gpe=[...]``."""
        gaz = cls()
        by_tag = {tag.value.lower(): tag for tag in _GAZETTEER_ORDER}
        for name, words in categories.items():
            tag = by_tag.get(name.lower())
            if tag is None:
                raise ValueError(f"unknown gazetteer category {name!r}")
            for word in words:
                gaz.entries.setdefault(word, tag)
        return gaz

    @classmethod
    def load_dir(cls, dir_path: str | Path) -> "Gazetteer":
        """Read ``person.txt``, ``org.txt``, ... (one name per line)."""
        directory = Path(dir_path)
        gaz = cls()
        for tag in _GAZETTEER_ORDER:
            path = directory / f"{tag.value.lower()}.txt"
            if not path.exists():
                continue
            for line in path.read_text(encoding="utf-8").splitlines():
                name = line.strip()
                if name:
                    gaz.entries.setdefault(name, tag)
        return gaz

    def lookup(self, text: str) -> NerTag | None:
        return self.entries.get(text)


def annotate_ner(sentence: Sentence, gazetteer: Gazetteer | None = None) -> list[NerTag]:
    """Gazetteer NER with a capitalization heuristic.

    Gazetteer hits apply at any position. Otherwise a capitalized token
    that is not sentence-initial is tagged OTHER (looks like a name we
    cannot categorize); digits are NUM; everything else NONE.
    """
    tags = []
    for token in sentence.tokens:
        hit = gazetteer.lookup(token.text) if gazetteer is not None else None
        if hit is not None:
            tags.append(hit)
        elif token.text.isdigit():
            tags.append(NerTag.NUM)
        elif token.text[0].isupper() and token.token_index > 0:
            tags.append(NerTag.OTHER)
        else:
            tags.append(NerTag.NONE)
    return tags


@dataclass
class KwTable:
    """Case-folded token -> number of single-token training spans."""

    counts: dict[str, int] = field(default_factory=dict)

    def count(self, token_text: str) -> int:
        return self.counts.get(token_text.casefold(), 0)

    def __len__(self) -> int:
        return len(self.counts)

    def save(self, path: str | Path) -> None:
        payload = json.dumps(self.counts, ensure_ascii=False, sort_keys=True, indent=0)
        Path(path).write_text(payload + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "KwTable":
        try:
            counts = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(counts={str(k): int(v) for k, v in counts.items()})
        except (json.JSONDecodeError, AttributeError, TypeError, ValueError) as exc:
            raise DataFormatError(f"bad keyword table {path}: {exc}") from exc


def build_kw_table(
    corpus: Corpus, sentences_by_article: dict[int, list[Sentence]] | None = None
) -> KwTable:
    """Count training spans that overlap exactly one token.

    A span counts toward the single token it overlaps, keyed by that
    token's case-folded text; spans touching zero or two-plus tokens
    contribute nothing.
    """
    if sentences_by_article is None:
        sentences_by_article = {
            aid: segment_article(article) for aid, article in corpus.articles.items()
        }
    table = KwTable()
    for span in corpus.spans:
        sentences = sentences_by_article.get(span.article_id, [])
        hits = [
            t
            for sentence in sentences
            for t in sentence.tokens
            if max(t.start, span.start) < min(t.end, span.end)
        ]
        if len(hits) == 1:
            key = hits[0].text.casefold()
            table.counts[key] = table.counts.get(key, 0) + 1
    return table


@dataclass(frozen=True)
class FeatureSet:
    """Which handcrafted feature blocks are active."""

    pos: bool = True
    ner: bool = True
    kw: bool = True

    def dim(self, with_upstream: bool = False) -> int:
        return (
            (POS_DIM if self.pos else 0)
            + (NER_DIM if self.ner else 0)
            + (1 if self.kw else 0)
            + (1 if with_upstream else 0)
        )

    @classmethod
    def parse(cls, spec: str) -> "FeatureSet":
        """Parse a comma list like ``pos,ner,kw`` (``none`` for empty)."""
        names = {n.strip() for n in spec.split(",") if n.strip()}
        names.discard("none")
        unknown = names - {"pos", "ner", "kw"}
        if unknown:
            raise ValueError(f"unknown feature names: {sorted(unknown)}")
        return cls(pos="pos" in names, ner="ner" in names, kw="kw" in names)

    def names(self) -> str:
        active = [n for n, on in (("pos", self.pos), ("ner", self.ner), ("kw", self.kw)) if on]
        return ",".join(active) if active else "none"


@dataclass
class TokenFeatures:
    """Feature blocks for one token; inactive blocks are None."""

    pos_onehot: np.ndarray | None = None
    ner_onehot: np.ndarray | None = None
    kw_count: float | None = None
    upstream_prob: float | None = None

    def vector(self) -> np.ndarray:
        parts = []
        if self.pos_onehot is not None:
            parts.append(self.pos_onehot)
        if self.ner_onehot is not None:
            parts.append(self.ner_onehot)
        if self.kw_count is not None:
            parts.append(np.array([self.kw_count], dtype=np.float64))
        if self.upstream_prob is not None:
            parts.append(np.array([self.upstream_prob], dtype=np.float64))
        if not parts:
            return np.zeros(0, dtype=np.float64)
        return np.concatenate(parts)

    def dim(self) -> int:
        return int(self.vector().shape[0])

    def with_upstream(self, prob: float) -> "TokenFeatures":
        return TokenFeatures(self.pos_onehot, self.ner_onehot, self.kw_count, float(prob))


def _onehot(index: int, dim: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=np.float64)
    vec[index] = 1.0
    return vec


def featurize(
    sentence: Sentence,
    kw_table: KwTable | None,
    pos_tags: list[PosTag] | None = None,
    ner_tags: list[NerTag] | None = None,
    gazetteer: Gazetteer | None = None,
    upstream_probs: list[float] | None = None,
    feature_set: FeatureSet = FeatureSet(),
) -> list[TokenFeatures]:
    """Build per-token feature vectors for one sentence.

    Annotator outputs may be passed in (e.g. from a sidecar); when
    omitted the built-in rule taggers run. Unseen tokens get kw_count 0.
    The upstream probability block exists only when probabilities are
    supplied, so the vector is one column shorter without it.
    """
    n = len(sentence.tokens)
    if feature_set.pos:
        pos_tags = pos_tags if pos_tags is not None else annotate_pos(sentence)
        if len(pos_tags) != n:
            raise AlignmentError(
                f"sentence {sentence.index}: {n} tokens but {len(pos_tags)} POS tags"
            )
    if feature_set.ner:
        ner_tags = ner_tags if ner_tags is not None else annotate_ner(sentence, gazetteer)
        if len(ner_tags) != n:
            raise AlignmentError(
                f"sentence {sentence.index}: {n} tokens but {len(ner_tags)} NER tags"
            )
    if feature_set.kw and kw_table is None:
        kw_table = KwTable()
    if upstream_probs is not None and len(upstream_probs) != n:
        raise AlignmentError(
            f"sentence {sentence.index}: {n} tokens but {len(upstream_probs)} "
            "upstream probabilities"
        )
    features = []
    for i, token in enumerate(sentence.tokens):
        features.append(
            TokenFeatures(
                pos_onehot=_onehot(_POS_INDEX[pos_tags[i]], POS_DIM) if feature_set.pos else None,
                ner_onehot=_onehot(_NER_INDEX[ner_tags[i]], NER_DIM) if feature_set.ner else None,
                kw_count=float(kw_table.count(token.text)) if feature_set.kw else None,
                upstream_prob=float(upstream_probs[i]) if upstream_probs is not None else None,
            )
        )
    return features


class SidecarAnnotations:
    """POS/NER annotations imported from a line-delimited sidecar file.

    Each record is a JSON object with article_id, sentence_index,
    token_index, pos and ner fields; records must align one-to-one with
    the token stream of the corpus they annotate.
    """

    def __init__(self, tags: dict[tuple[int, int], list[tuple[PosTag, NerTag]]]):
        self._tags = tags

    @classmethod
    def load(cls, path: str | Path) -> "SidecarAnnotations":
        rows: dict[tuple[int, int], list[tuple[int, PosTag, NerTag]]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    key = (int(obj["article_id"]), int(obj["sentence_index"]))
                    row = (int(obj["token_index"]), PosTag(obj["pos"]), NerTag(obj["ner"]))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise DataFormatError(f"{path}:{lineno}: bad sidecar record: {exc}") from exc
                rows.setdefault(key, []).append(row)
        tags = {}
        for key, entries in rows.items():
            entries.sort(key=lambda r: r[0])
            indexes = [r[0] for r in entries]
            if indexes != list(range(len(entries))):
                raise DataFormatError(
                    f"{path}: non-contiguous token indexes for article {key[0]} "
                    f"sentence {key[1]}"
                )
            tags[key] = [(pos, ner) for _, pos, ner in entries]
        return cls(tags)

    def _rows_for(self, article_id: int, sentence: Sentence) -> list[tuple[PosTag, NerTag]]:
        key = (article_id, sentence.index)
        if key not in self._tags:
            raise AlignmentError(
                f"no sidecar annotations for article {article_id} sentence {sentence.index}"
            )
        rows = self._tags[key]
        if len(rows) != len(sentence.tokens):
            raise AlignmentError(
                f"sidecar misalignment for article {article_id} sentence "
                f"{sentence.index}: {len(sentence.tokens)} tokens but {len(rows)} records"
            )
        return rows

    def pos_for(self, article_id: int, sentence: Sentence) -> list[PosTag]:
        return [pos for pos, _ in self._rows_for(article_id, sentence)]

    def ner_for(self, article_id: int, sentence: Sentence) -> list[NerTag]:
        return [ner for _, ner in self._rows_for(article_id, sentence)]
