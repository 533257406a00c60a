"""Silver training data for under-represented technique classes.

Given per-class counts, a plan allocates a budget of new samples to
every class except the two largest, proportionally to each class's
deficit below the third-largest class (classes whose rounded share would
be zero still get one sample, so all twelve participate). Samples are
generated by replacing nouns/verbs/adjectives with same-POS synonyms and
swapping gazetteer-listed proper nouns for other names of the same
category. Generated texts are detached from any article (no character
offsets), carry their source sample's label, are flagged ``silver`` and
must never enter evaluation sets.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus import Corpus, LabeledSpan, Technique
from .errors import DataFormatError
from .features import PosTag, annotate_pos
from .segment import Sentence, tokenize_line

log = logging.getLogger(__name__)

SILVER_MARKER = "SILVER"
_REPLACEABLE_POS = {PosTag.NOUN, PosTag.VERB, PosTag.ADJ}
_PROPER_CATEGORIES = ("PERSON", "ORG", "GPE")


@dataclass(frozen=True)
class TcSample:
    """One technique-classification sample.

    Gold samples keep the span they were cut from; silver samples are
    detached texts with a provenance index into the source sample list.
    The technique is None only for spans awaiting prediction.
    """

    text: str
    technique: Technique | None
    silver: bool = False
    source_index: int | None = None
    span: LabeledSpan | None = None


@dataclass
class Lexicon:
    synonyms: dict[str, list[str]] = field(default_factory=dict)
    proper_nouns: dict[str, list[str]] = field(default_factory=dict)

    def add_synonyms(self, word: str, alternatives: list[str]) -> None:
        folded = word.casefold()
        alts = [a for a in alternatives if a.casefold() != folded]
        if alts:
            self.synonyms[folded] = alts

    def proper_category(self, token_text: str) -> str | None:
        for category in _PROPER_CATEGORIES:
            if token_text in self.proper_nouns.get(category, ()):
                return category
        return None

    @classmethod
    def load(
        cls,
        synonyms_path: str | Path | None = None,
        person_path: str | Path | None = None,
        org_path: str | Path | None = None,
        gpe_path: str | Path | None = None,
    ) -> "Lexicon":
        """Load plain-text resources.

        Synonym lines are ``word<TAB>alt1,alt2,...``; gazetteer files
        hold one name per line. Entries mapping a word only to itself
        are dropped.
        """
        lex = cls()
        if synonyms_path is not None:
            for lineno, line in enumerate(
                Path(synonyms_path).read_text(encoding="utf-8").splitlines(), start=1
            ):
                if not line.strip():
                    continue
                cols = line.split("\t")
                if len(cols) != 2:
                    raise DataFormatError(
                        f"{synonyms_path}:{lineno}: expected 'word<TAB>alt1,alt2,...'"
                    )
                alternatives = [a.strip() for a in cols[1].split(",") if a.strip()]
                lex.add_synonyms(cols[0].strip(), alternatives)
        for category, path in (
            ("PERSON", person_path),
            ("ORG", org_path),
            ("GPE", gpe_path),
        ):
            if path is None:
                continue
            names = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
            lex.proper_nouns[category] = [n for n in names if n]
        return lex


@dataclass
class AugmentPlan:
    """Per-class target counts (always >= the current counts) and a seed."""

    targets: dict[Technique, int]
    seed: int = 0


@dataclass
class AugmentReport:
    generated: dict[Technique, int]
    shortfall: dict[Technique, int]

    @property
    def total_generated(self) -> int:
        return sum(self.generated.values())


def plan_targets(
    class_counts: dict[Technique, int], total_new: int = 3000, seed: int = 0
) -> AugmentPlan:
    """Allocate ``total_new`` samples to the 12 smallest classes.

    The two most frequent classes receive nothing. Deficits are measured
    against the third-largest class's count; shares are proportional to
    deficit and rounded, with a floor of one sample per eligible class so
    every minority class participates whenever total_new > 0.
    """
    if total_new < 0:
        raise ValueError(f"total_new must be non-negative, got {total_new}")
    counts = {t: int(class_counts.get(t, 0)) for t in Technique}
    ordered = sorted(Technique, key=lambda t: (-counts[t], t.index))
    minority = ordered[2:]
    targets = dict(counts)
    if total_new == 0 or not minority:
        return AugmentPlan(targets=targets, seed=seed)
    reference = counts[ordered[2]]
    deficits = {t: reference - counts[t] for t in minority}
    total_deficit = sum(deficits.values())
    for t in minority:
        if total_deficit > 0:
            share = round(total_new * deficits[t] / total_deficit)
        else:
            share = round(total_new / len(minority))
        targets[t] = counts[t] + max(1, share)
    return AugmentPlan(targets=targets, seed=seed)


def _class_seed(seed: int, technique: Technique) -> int:
    digest = hashlib.sha256(f"{seed}:{technique.value}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def augment_span(
    span_text: str,
    technique: Technique,
    lexicon: Lexicon,
    rng: random.Random,
    replace_prob: float = 0.3,
) -> TcSample | None:
    """One substitution pass over a span's tokens.

    Gazetteer-listed proper nouns are always swapped for a different
    name of the same category; NOUN/VERB/ADJ tokens are replaced by a
    uniformly drawn synonym with probability ``replace_prob``. Returns
    None when nothing changed (the sample is discarded).
    """
    tokens = tokenize_line(span_text)
    if not tokens:
        return None
    sentence = Sentence(index=0, start=0, end=len(span_text), tokens=tokens)
    pos_tags = annotate_pos(sentence)
    pieces = []
    cursor = 0
    changed = False
    for token, pos in zip(tokens, pos_tags):
        replacement = None
        category = lexicon.proper_category(token.text)
        if category is not None:
            others = [n for n in lexicon.proper_nouns[category] if n != token.text]
            if others:
                replacement = others[rng.randrange(len(others))]
        elif pos in _REPLACEABLE_POS:
            alternatives = lexicon.synonyms.get(token.text.casefold())
            if alternatives and rng.random() < replace_prob:
                replacement = alternatives[rng.randrange(len(alternatives))]
        pieces.append(span_text[cursor : token.start])
        if replacement is not None and replacement != token.text:
            pieces.append(replacement)
            changed = True
        else:
            pieces.append(token.text)
        cursor = token.end
    pieces.append(span_text[cursor:])
    if not changed:
        return None
    return TcSample(text="".join(pieces), technique=technique, silver=True)


def augment_corpus(
    tc_training_set: list[TcSample],
    lexicon: Lexicon,
    plan: AugmentPlan,
    replace_prob: float = 0.3,
    attempt_cap_factor: int = 10,
) -> tuple[list[TcSample], AugmentReport]:
    """Generate silver samples per plan; deterministic given the plan seed.

    Source samples are cycled round-robin per class; generation stops at
    the class target or after 10x as many attempts. Only non-silver
    inputs are used as sources. The returned list is the input followed
    by the generated samples.
    """
    counts: dict[Technique, int] = {t: 0 for t in Technique}
    sources: dict[Technique, list[int]] = {t: [] for t in Technique}
    for i, sample in enumerate(tc_training_set):
        counts[sample.technique] += 1
        if not sample.silver:
            sources[sample.technique].append(i)
    for technique, target in plan.targets.items():
        if target < counts[technique]:
            raise ValueError(
                f"target {target} for {technique.value} below current count "
                f"{counts[technique]}"
            )
    out = list(tc_training_set)
    generated: dict[Technique, int] = {}
    shortfall: dict[Technique, int] = {}
    for technique in Technique:
        needed = plan.targets.get(technique, counts[technique]) - counts[technique]
        if needed <= 0:
            continue
        class_sources = sources[technique]
        made = 0
        if class_sources:
            rng = random.Random(_class_seed(plan.seed, technique))
            cap = attempt_cap_factor * needed
            for attempt in range(cap):
                if made == needed:
                    break
                source_index = class_sources[attempt % len(class_sources)]
                sample = augment_span(
                    tc_training_set[source_index].text,
                    technique,
                    lexicon,
                    rng,
                    replace_prob=replace_prob,
                )
                if sample is not None:
                    out.append(replace(sample, source_index=source_index))
                    made += 1
        generated[technique] = made
        if made < needed:
            shortfall[technique] = needed - made
            log.warning(
                "augmentation shortfall for %s: wanted %d, generated %d",
                technique.value,
                needed,
                made,
            )
    return out, AugmentReport(generated=generated, shortfall=shortfall)


def samples_from_corpus(corpus: Corpus) -> list[TcSample]:
    """Cut gold TC samples (span text + technique) out of their articles."""
    samples = []
    for span in corpus.spans:
        if span.technique is None:
            raise DataFormatError(
                f"span {span.article_id}:[{span.start},{span.end}) has no technique label"
            )
        text = corpus.articles[span.article_id].text[span.start : span.end]
        samples.append(TcSample(text=text, technique=span.technique, span=span))
    return samples


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "t":
                out.append("\t")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def write_silver(samples: list[TcSample], path: str | Path) -> int:
    """Write silver samples as 5-column TSV.

    Columns: SILVER marker, technique, source sample index, running
    silver index, escaped text (tabs/newlines as \\t and \\n).
    """
    rows = []
    for sample in samples:
        if not sample.silver:
            continue
        source = sample.source_index if sample.source_index is not None else -1
        rows.append(
            f"{SILVER_MARKER}\t{sample.technique.value}\t{source}\t{len(rows)}\t"
            f"{_escape(sample.text)}\n"
        )
    Path(path).write_text("".join(rows), encoding="utf-8")
    return len(rows)


def load_silver(path: str | Path) -> list[TcSample]:
    samples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        cols = line.split("\t")
        if len(cols) != 5 or cols[0] != SILVER_MARKER:
            raise DataFormatError(f"{path}:{lineno}: expected 5 SILVER columns")
        technique = Technique.parse(cols[1])
        try:
            source = int(cols[2])
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: bad source index {cols[2]!r}") from None
        samples.append(
            TcSample(
                text=_unescape(cols[4]),
                technique=technique,
                silver=True,
                source_index=source if source >= 0 else None,
            )
        )
    return samples
