"""Corpus data model and I/O.

On-disk layout follows the shared-task conventions:

* articles: one UTF-8 text file per article named ``article<ID>.txt``,
  one sentence per line;
* span-identification labels: 3-column TSV ``article_id ⇥ start ⇥ end``;
* technique-classification labels: 4-column TSV
  ``article_id ⇥ technique ⇥ start ⇥ end``.

Offsets are character indexes into the article text (start inclusive,
end exclusive). Files produced by third-party tools that count UTF-16
code units instead can be loaded with ``index_convention="utf16"``.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DataFormatError

log = logging.getLogger(__name__)

_ARTICLE_FILE_RE = re.compile(r"^article(.+)\.txt$")


class Technique(enum.Enum):
    """The 14 technique labels, in descending training-frequency order.

    Enum values are the canonical strings used in label files. The
    human-readable names seen in prose are available via
    ``display_name`` and accepted by ``parse``.
    """

    LOADED_LANGUAGE = "Loaded_Language"
    NAME_CALLING_LABELING = "Name_Calling,Labeling"
    REPETITION = "Repetition"
    DOUBT = "Doubt"
    EXAGGERATION_MINIMISATION = "Exaggeration,Minimisation"
    APPEAL_TO_FEAR_PREJUDICE = "Appeal_to_fear-prejudice"
    FLAG_WAVING = "Flag-Waving"
    CAUSAL_OVERSIMPLIFICATION = "Causal_Oversimplification"
    APPEAL_TO_AUTHORITY = "Appeal_to_Authority"
    SLOGANS = "Slogans"
    WHATABOUTISM_STRAW_MEN_RED_HERRING = "Whataboutism,Straw_Men,Red_Herring"
    BLACK_AND_WHITE_FALLACY = "Black-and-White_Fallacy"
    THOUGHT_TERMINATING_CLICHES = "Thought-terminating_Cliches"
    BANDWAGON_REDUCTIO_AD_HITLERUM = "Bandwagon,Reductio_ad_hitlerum"

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @property
    def index(self) -> int:
        """Position in enumeration order (stable class index, 0..13)."""
        return _TECHNIQUE_ORDER[self]

    @classmethod
    def parse(cls, label: str) -> "Technique":
        """Parse a canonical label string or a display name."""
        try:
            return cls(label)
        except ValueError:
            pass
        folded = label.strip().casefold()
        for technique, display in _DISPLAY_NAMES.items():
            if display.casefold() == folded:
                return technique
        valid = ", ".join(t.value for t in cls)
        raise DataFormatError(f"unknown technique {label!r}; valid names: {valid}")


_DISPLAY_NAMES = {
    Technique.LOADED_LANGUAGE: "Loaded language",
    Technique.NAME_CALLING_LABELING: "Name calling, labeling",
    Technique.REPETITION: "Repetition",
    Technique.DOUBT: "Doubt",
    Technique.EXAGGERATION_MINIMISATION: "Exaggeration, minimisation",
    Technique.APPEAL_TO_FEAR_PREJUDICE: "Appeal to fear/prejudice",
    Technique.FLAG_WAVING: "Flag-waving",
    Technique.CAUSAL_OVERSIMPLIFICATION: "Causal oversimplification",
    Technique.APPEAL_TO_AUTHORITY: "Appeal to authority",
    Technique.SLOGANS: "Slogans",
    Technique.WHATABOUTISM_STRAW_MEN_RED_HERRING: "Whataboutism, straw man, red herring",
    Technique.BLACK_AND_WHITE_FALLACY: "Black-and-white fallacy",
    Technique.THOUGHT_TERMINATING_CLICHES: "Thought-terminating cliches",
    Technique.BANDWAGON_REDUCTIO_AD_HITLERUM: "Bandwagon, reductio ad hitlerum",
}

_TECHNIQUE_ORDER = {t: i for i, t in enumerate(Technique)}

NUM_TECHNIQUES = len(Technique)


@dataclass(frozen=True)
class Article:
    id: int
    text: str


@dataclass(frozen=True)
class LabeledSpan:
    """A character span, optionally carrying a technique label.

    ``start`` is inclusive, ``end`` exclusive; both index characters of
    the owning article's text.
    """

    article_id: int
    start: int
    end: int
    technique: Technique | None = None

    def sort_key(self) -> tuple[int, int, int]:
        return (self.article_id, self.start, self.end)

    def length(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "LabeledSpan") -> bool:
        return (
            self.article_id == other.article_id
            and max(self.start, other.start) < min(self.end, other.end)
        )


@dataclass(frozen=True)
class Corpus:
    articles: dict[int, Article]
    spans: list[LabeledSpan]

    @classmethod
    def build(cls, articles: list[Article], spans: list[LabeledSpan]) -> "Corpus":
        by_id = {a.id: a for a in articles}
        if len(by_id) != len(articles):
            raise DataFormatError("duplicate article ids in corpus")
        for span in spans:
            if span.article_id not in by_id:
                raise DataFormatError(f"span references unknown article {span.article_id}")
        return cls(articles=by_id, spans=list(spans))

    def spans_for(self, article_id: int) -> list[LabeledSpan]:
        return [s for s in self.spans if s.article_id == article_id]


def load_articles(dir_path: str | Path, strict: bool = True) -> list[Article]:
    """Load every ``article<ID>.txt`` in a directory, sorted by id.

    An empty directory yields an empty list; a non-empty directory with
    no article files is a format error in strict mode.
    """
    directory = Path(dir_path)
    if not directory.is_dir():
        raise DataFormatError(f"not a directory: {directory}")
    entries = sorted(p for p in directory.iterdir() if p.is_file())
    articles = []
    for path in entries:
        match = _ARTICLE_FILE_RE.match(path.name)
        if match is None:
            continue
        if not match.group(1).isdigit():
            if strict:
                raise DataFormatError(f"non-numeric article id in file name: {path}")
            log.warning("skipping article file with non-numeric id: %s", path)
            continue
        article_id = int(match.group(1))
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise DataFormatError(f"invalid UTF-8 in {path}: {exc}") from exc
        except OSError as exc:
            raise DataFormatError(f"unreadable article file {path}: {exc}") from exc
        if not text:
            raise DataFormatError(f"empty article file: {path}")
        articles.append(Article(id=article_id, text=text))
    if not articles and entries:
        if strict:
            raise DataFormatError(f"no article<ID>.txt files in {directory}")
        log.warning("no article files found in %s", directory)
    articles.sort(key=lambda a: a.id)
    return articles


def _utf16_index_map(text: str) -> dict[int, int]:
    """Map UTF-16 code-unit offsets to character offsets for ``text``."""
    mapping = {}
    units = 0
    for i, ch in enumerate(text):
        mapping[units] = i
        units += 2 if ord(ch) > 0xFFFF else 1
    mapping[units] = len(text)
    return mapping


def _parse_offset(value: str, path: Path, lineno: int, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataFormatError(f"{path}:{lineno}: non-integer {what} {value!r}") from None


def _check_span(
    articles: dict[int, Article],
    article_id: int,
    start: int,
    end: int,
    path: Path,
    lineno: int,
    index_convention: str,
    utf16_maps: dict[int, dict[int, int]],
) -> tuple[int, int]:
    if article_id not in articles:
        raise DataFormatError(f"{path}:{lineno}: unknown article id {article_id}")
    text = articles[article_id].text
    if index_convention == "utf16":
        mapping = utf16_maps.get(article_id)
        if mapping is None:
            mapping = utf16_maps[article_id] = _utf16_index_map(text)
        try:
            start, end = mapping[start], mapping[end]
        except KeyError:
            raise DataFormatError(
                f"{path}:{lineno}: UTF-16 offset not on a character boundary"
            ) from None
    elif index_convention != "scalar":
        raise ValueError(f"unknown index convention {index_convention!r}")
    if start < 0:
        raise DataFormatError(f"{path}:{lineno}: negative start {start}")
    if end <= start:
        raise DataFormatError(f"inverted span at line {lineno} of {path} ({start}, {end})")
    if end > len(text):
        raise DataFormatError(
            f"{path}:{lineno}: span end {end} beyond article {article_id} "
            f"length {len(text)}"
        )
    return start, end


def _load_labels(
    tsv_path: str | Path,
    articles: list[Article] | dict[int, Article],
    with_technique: bool,
    strict: bool,
    index_convention: str,
) -> list[LabeledSpan]:
    path = Path(tsv_path)
    by_id = articles if isinstance(articles, dict) else {a.id: a for a in articles}
    ncols = 4 if with_technique else 3
    utf16_maps: dict[int, dict[int, int]] = {}
    spans = []
    try:
        content = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"unreadable label file {path}: {exc}") from exc
    for lineno, line in enumerate(content.splitlines(), start=1):
        try:
            cols = line.split("\t")
            if len(cols) != ncols:
                raise DataFormatError(
                    f"{path}:{lineno}: expected {ncols} tab-separated columns, "
                    f"got {len(cols)}"
                )
            article_id = _parse_offset(cols[0], path, lineno, "article id")
            if with_technique:
                technique = Technique.parse(cols[1])
                start_raw, end_raw = cols[2], cols[3]
            else:
                technique = None
                start_raw, end_raw = cols[1], cols[2]
            start = _parse_offset(start_raw, path, lineno, "span start")
            end = _parse_offset(end_raw, path, lineno, "span end")
            start, end = _check_span(
                by_id, article_id, start, end, path, lineno, index_convention, utf16_maps
            )
        except DataFormatError as exc:
            if strict:
                raise
            log.warning("skipping malformed row: %s", exc)
            continue
        spans.append(LabeledSpan(article_id, start, end, technique))
    return spans


def load_si_labels(
    tsv_path: str | Path,
    articles: list[Article] | dict[int, Article],
    strict: bool = True,
    index_convention: str = "scalar",
) -> list[LabeledSpan]:
    """Load 3-column span-identification labels, validated against articles."""
    return _load_labels(tsv_path, articles, False, strict, index_convention)


def load_tc_labels(
    tsv_path: str | Path,
    articles: list[Article] | dict[int, Article],
    strict: bool = True,
    index_convention: str = "scalar",
) -> list[LabeledSpan]:
    """Load 4-column technique-classification labels."""
    return _load_labels(tsv_path, articles, True, strict, index_convention)


def write_predictions(
    spans: list[LabeledSpan], path: str | Path, with_technique: bool = False
) -> None:
    """Write spans as a label-file TSV, sorted by (article_id, start, end).

    Round-trips with the matching loader: SI spans become 3-column rows,
    TC spans 4-column rows using canonical technique strings.
    """
    rows = []
    for span in sorted(spans, key=LabeledSpan.sort_key):
        if with_technique:
            if span.technique is None:
                raise DataFormatError(
                    f"span {span.article_id}:[{span.start},{span.end}) has no "
                    "technique but a technique column was requested"
                )
            rows.append(f"{span.article_id}\t{span.technique.value}\t{span.start}\t{span.end}\n")
        else:
            rows.append(f"{span.article_id}\t{span.start}\t{span.end}\n")
    Path(path).write_text("".join(rows), encoding="utf-8")
