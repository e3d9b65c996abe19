"""Annotation corpus statistics: word counts, numeric digit lengths, vocabulary growth."""
import json
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import pandas as pd
import plotly.express as px

from config import HISTOGRAM_BINS, SEED, VOCAB_CHECKPOINT

logger = logging.getLogger(__name__)

# alphanumeric runs split on whitespace, punctuation and underscore; a decimal point
# between digits does not split
TOKEN_PATTERN = re.compile(r"[^\W_]*\d\.\d+[^\W_]*|[^\W_]+")
NUMBER_PATTERN = re.compile(r"[+-]?\d+(?:\.\d+)?")

TOKENIZER_DESCRIPTION = "lowercase; split on whitespace and punctuation; decimal numbers kept whole"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotationDoc:
    id: str
    text: str
    source: Optional[str] = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise CorpusError(f"document {self.id!r} has empty text")


@dataclass(frozen=True)
class DocStats:
    id: str
    word_count: int
    unique_words: int
    numeric_digit_lengths: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "word_count": self.word_count,
            "unique_words": self.unique_words,
            "numeric_digit_lengths": list(self.numeric_digit_lengths),
        }


@dataclass
class CorpusStats:
    per_doc: List[DocStats]
    vocab_growth: List[Tuple[int, int]]
    growth_by_source: Dict[str, List[Tuple[int, int]]] = field(default_factory=dict)

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        """Per-document stats of the union; growth is left empty since it needs a fresh pass."""
        return CorpusStats(self.per_doc + other.per_doc, [])

    def to_dict(self) -> dict:
        return {
            "tokenizer": TOKENIZER_DESCRIPTION,
            "doc_count": len(self.per_doc),
            "per_doc": [d.to_dict() for d in self.per_doc],
            "vocab_growth": [list(p) for p in self.vocab_growth],
            "growth_by_source": {k: [list(p) for p in v] for k, v in self.growth_by_source.items()},
        }


def tokenize(text: str) -> List[str]:
    return [t.lower() for t in TOKEN_PATTERN.findall(text)]


def numeric_digit_lengths(text: str) -> List[int]:
    """Digit count of every numeric expression; sign and decimal point are not digits."""
    return [sum(c.isdigit() for c in m) for m in NUMBER_PATTERN.findall(text)]


def doc_stats(doc: AnnotationDoc) -> DocStats:
    tokens = tokenize(doc.text)
    return DocStats(doc.id, len(tokens), len(set(tokens)), tuple(numeric_digit_lengths(doc.text)))


def vocabulary_growth(
    corpus: List[AnnotationDoc], seed: int = SEED, checkpoint: int = VOCAB_CHECKPOINT
) -> List[Tuple[int, int]]:
    """(tokens seen, distinct tokens) every `checkpoint` tokens plus the final point."""
    if not corpus:
        raise CorpusError("vocabulary growth needs at least one document")
    order = list(corpus)
    random.Random(seed).shuffle(order)

    seen = set()
    total = 0
    curve = []
    for doc in order:
        for token in tokenize(doc.text):
            seen.add(token)
            total += 1
            if total % checkpoint == 0:
                curve.append((total, len(seen)))
    if not curve or curve[-1][0] != total:
        curve.append((total, len(seen)))
    return curve


def corpus_summary(
    corpus: List[AnnotationDoc], seed: int = SEED, checkpoint: int = VOCAB_CHECKPOINT
) -> CorpusStats:
    if not corpus:
        raise CorpusError("corpus is empty")
    per_doc = [doc_stats(doc) for doc in corpus]
    growth = vocabulary_growth(corpus, seed, checkpoint)

    by_source = {}
    sources = sorted({doc.source for doc in corpus if doc.source})
    if len(sources) > 1:
        for source in sources:
            subset = [doc for doc in corpus if doc.source == source]
            by_source[source] = vocabulary_growth(subset, seed, checkpoint)
    logger.info(f"Corpus of {len(corpus)} documents, {growth[-1][0]} tokens, vocabulary {growth[-1][1]}")
    return CorpusStats(per_doc, growth, by_source)


def load_corpus(path) -> List[AnnotationDoc]:
    """JSON-lines, one {"id", "text"[, "source"]} object per line."""
    docs = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                docs.append(AnnotationDoc(str(record["id"]), record["text"], record.get("source")))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise CorpusError(f"{path}:{lineno}: bad record: {e}") from e
    return docs


def histogram(values: Iterable[int], bins: int = HISTOGRAM_BINS) -> pd.DataFrame:
    """Integer-aligned histogram table with columns bin_start, bin_end, count."""
    series = pd.Series(list(values), dtype="int64")
    if series.empty:
        return pd.DataFrame(columns=["bin_start", "bin_end", "count"])
    lo, hi = int(series.min()), int(series.max())
    width = max(1, -(-(hi - lo + 1) // bins))
    starts = list(range(lo, hi + 1, width))
    counts = [int(((series >= s) & (series < s + width)).sum()) for s in starts]
    return pd.DataFrame({"bin_start": starts, "bin_end": [s + width - 1 for s in starts], "count": counts})


def export_stats(stats: CorpusStats, out_dir, bins: int = HISTOGRAM_BINS) -> Dict[str, Path]:
    """Write stats JSON, histogram CSVs and the vocabulary-growth HTML figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"stats": out_dir / "corpus_stats.json"}
    with open(paths["stats"], "w") as f:
        json.dump(stats.to_dict(), f, indent=2)

    tables = {
        "word_count": [d.word_count for d in stats.per_doc],
        "unique_words": [d.unique_words for d in stats.per_doc],
        "digit_length": [n for d in stats.per_doc for n in d.numeric_digit_lengths],
    }
    for name, values in tables.items():
        paths[name] = out_dir / f"hist_{name}.csv"
        histogram(values, bins).to_csv(paths[name], index=False)

    growth = pd.DataFrame(stats.vocab_growth, columns=["tokens", "vocabulary"])
    growth["source"] = "all"
    for source, curve in stats.growth_by_source.items():
        part = pd.DataFrame(curve, columns=["tokens", "vocabulary"])
        part["source"] = source
        growth = pd.concat([growth, part], ignore_index=True)
    paths["growth_csv"] = out_dir / "vocab_growth.csv"
    growth.to_csv(paths["growth_csv"], index=False)

    fig = px.line(
        growth,
        x="tokens",
        y="vocabulary",
        color="source",
        title="Vocabulary growth",
        labels={"tokens": "Tokens", "vocabulary": "Vocabulary size"},
    )
    paths["growth_html"] = out_dir / "vocab_growth.html"
    fig.write_html(str(paths["growth_html"]), include_plotlyjs="cdn")
    logger.info(f"Wrote corpus statistics to {out_dir}")
    return paths
