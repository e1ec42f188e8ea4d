# distress_transfer/textprep.py
"""
Deterministic text normalisation: cleaning, tokenization, stopword removal
and Porter stemming.
"""
import re
from functools import lru_cache
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

from nltk.stem import PorterStemmer

from .config import Config

URL_RE = re.compile(r"(?:https?://|www\.)\S+")
MENTION_RE = re.compile(r"@\w+")
AMP_TOKEN = "amp"

# Original-algorithm mode keeps results identical to the published vectors
_stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def clean(text: str) -> str:
    """
    Normalise a raw post.

    Lowercases, strips URLs and @-mentions, keeps hashtag words without '#',
    drops every character that is not a letter or whitespace (digits and
    punctuation), drops the literal token "amp" and collapses whitespace.
    """
    if not text:
        return ""
    text = text.lower()
    text = URL_RE.sub(" ", text)
    text = MENTION_RE.sub(" ", text)
    text = "".join(ch for ch in text if ch.isalpha() or ch.isspace())
    return " ".join(token for token in text.split() if token != AMP_TOKEN)


def tokenize(text: str) -> List[str]:
    """Split cleaned text on single spaces, dropping empty tokens."""
    return [token for token in text.split(" ") if token]


def remove_stopwords(tokens: Sequence[str], stopwords: Iterable[str]) -> List[str]:
    stopwords = stopwords if isinstance(stopwords, (set, frozenset)) else frozenset(stopwords)
    return [token for token in tokens if token not in stopwords]


@lru_cache(maxsize=65536)
def _stem_one(token: str) -> str:
    return _stemmer.stem(token, to_lowercase=False)


def stem(tokens: Sequence[str]) -> List[str]:
    """Replace each token by its Porter stem."""
    return [_stem_one(token) for token in tokens]


def preprocess(cleaned_text: str, stopwords: Iterable[str]) -> List[str]:
    """tokenize -> remove_stopwords -> stem on already-cleaned text."""
    return stem(remove_stopwords(tokenize(cleaned_text), stopwords))


def load_stopwords(path: Optional[Path] = None) -> FrozenSet[str]:
    """
    Load a stopword list: UTF-8, one word per line.

    Args:
        path: stopword file; None uses the bundled English list

    Returns:
        frozenset of lowercase words (must be nonempty)
    """
    path = Path(path) if path else Config.DEFAULT_STOPWORDS_PATH
    with open(path, encoding="utf-8") as handle:
        words = frozenset(line.strip().lower() for line in handle if line.strip())
    if not words:
        raise ValueError(f"Stopword file is empty: {path}")
    return words


def load_porter_vectors(path: Optional[Path] = None) -> List[Tuple[str, str]]:
    """Load `word stem` pairs used to check the stemmer."""
    path = Path(path) if path else Config.PORTER_VECTORS_PATH
    pairs = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            parts = line.split()
            if len(parts) == 2:
                pairs.append((parts[0], parts[1]))
    return pairs
