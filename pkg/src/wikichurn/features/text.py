"""Profile-text cleaning, tokenization and part-of-speech frequencies."""

from __future__ import annotations

import html
import re
from collections import Counter
from functools import lru_cache
from importlib import resources
from typing import Iterable, Protocol, Sequence

# Penn Treebank word-level tagset (punctuation tags excluded).
TAGSET: tuple[str, ...] = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN",
    "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP",
    "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",
    "WP$", "WRB",
)

_COMMENT_RE = re.compile(r"<!--.*?-->", re.S)
_BLOCK_RE = re.compile(r"<(script|style)\b.*?</\1\s*>", re.S | re.I)
_TAG_RE = re.compile(r"<[^>]+>")
_TEMPLATE_RE = re.compile(r"\{\{[^{}]*\}\}")
_EXTLINK_RE = re.compile(r"\[(?:https?://|//)\S+(?:\s+([^\]]*))?\]")
_WIKILINK_RE = re.compile(r"\[\[(?:[^|\]]*\|)?([^\]]*)\]\]")
_URL_RE = re.compile(r"(?:https?://|ftp://|www\.)\S+", re.I)
_FORMAT_RE = re.compile(r"'{2,}|^=+|=+$|^[*#:;]+", re.M)
_SENTENCE_END_RE = re.compile(r"(?<=[.!?])\s+")
_TOKEN_RE = re.compile(r"[a-z]+(?:'[a-z]+)?")
_WORDCHAR_RE = re.compile(r"\w")


def clean_profile_text(raw: str) -> list[str]:
    """Strip markup and links, then split into lowercase sentences.

    >>> clean_profile_text("<p>I left.</p> See http://x.y")
    ['i left.', 'see']
    """
    if not raw:
        return []
    text = _COMMENT_RE.sub(" ", raw)
    text = _BLOCK_RE.sub(" ", text)
    text = _TAG_RE.sub(" ", text)
    for _ in range(5):  # nested templates unwrap from the inside out
        text, n = _TEMPLATE_RE.subn(" ", text)
        if not n:
            break
    text = _EXTLINK_RE.sub(lambda m: f" {m.group(1) or ''} ", text)
    text = _WIKILINK_RE.sub(lambda m: m.group(1), text)
    text = _URL_RE.sub(" ", text)
    text = html.unescape(text)
    text = _FORMAT_RE.sub(" ", text)
    sentences = []
    for block in text.splitlines():
        block = " ".join(block.split())
        for sent in _SENTENCE_END_RE.split(block):
            sent = sent.strip().lower()
            if sent and _WORDCHAR_RE.search(sent):
                sentences.append(sent)
    return sentences


def tokenize(sentence: str) -> list[str]:
    return _TOKEN_RE.findall(sentence.lower())


def _data_lines(name: str) -> list[str]:
    text = resources.files("wikichurn.features").joinpath("data", name).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


@lru_cache(maxsize=1)
def stop_words() -> frozenset[str]:
    return frozenset(_data_lines("stopwords.txt"))


@lru_cache(maxsize=1)
def _dictionary() -> frozenset[str]:
    from english_words import get_english_words_set

    return frozenset(get_english_words_set(["web2"], lower=True, alpha=True))


def _lemma_candidates(word: str) -> Iterable[str]:
    yield word
    if word.endswith("'s"):
        yield word[:-2]
    if word.endswith("ies") and len(word) > 4:
        yield word[:-3] + "y"
    if word.endswith("es") and len(word) > 3:
        yield word[:-2]
    if word.endswith("s") and len(word) > 2:
        yield word[:-1]
    for suffix in ("ing", "ed", "er", "est", "ly"):
        if word.endswith(suffix) and len(word) > len(suffix) + 2:
            stem = word[: -len(suffix)]
            yield stem
            yield stem + "e"
            if len(stem) > 2 and stem[-1] == stem[-2]:
                yield stem[:-1]
            if stem.endswith("i"):
                yield stem[:-1] + "y"


@lru_cache(maxsize=65536)
def is_english(word: str) -> bool:
    """Dictionary membership, allowing common inflectional suffixes."""
    words = _dictionary()
    return any(c in words for c in _lemma_candidates(word))


class Tagger(Protocol):
    def tag(self, tokens: Sequence[str]) -> list[str]: ...


class SuffixTagger:
    """Deterministic lexicon-plus-suffix tagger over :data:`TAGSET`.

    Closed-class words come from a fixed lexicon, open-class words are tagged by
    suffix, and anything else defaults to ``NN``. It is a baseline, not an
    accurate tagger.
    """

    _SUFFIXES: tuple[tuple[str, str], ...] = (
        ("ically", "RB"), ("ly", "RB"),
        ("iest", "JJS"), ("est", "JJS"),
        ("ing", "VBG"), ("ed", "VBD"),
        ("ness", "NN"), ("ment", "NN"), ("tion", "NN"), ("sion", "NN"), ("ity", "NN"),
        ("ship", "NN"), ("ism", "NN"), ("ist", "NN"), ("ance", "NN"), ("ence", "NN"),
        ("ous", "JJ"), ("ful", "JJ"), ("less", "JJ"), ("able", "JJ"), ("ible", "JJ"),
        ("ive", "JJ"), ("ical", "JJ"), ("ial", "JJ"), ("ic", "JJ"), ("ish", "JJ"),
        ("ary", "JJ"),
        ("ize", "VB"), ("ise", "VB"), ("ify", "VB"), ("ate", "VB"),
        ("ss", "NN"), ("us", "NN"), ("is", "NN"),
        ("s", "NNS"),
    )

    def __init__(self, lexicon: dict[str, str] | None = None):
        self.lexicon = dict(_default_lexicon() if lexicon is None else lexicon)

    def tag_word(self, word: str) -> str:
        if word in self.lexicon:
            return self.lexicon[word]
        if word.isdigit():
            return "CD"
        if word.endswith("'s"):
            return "POS"
        for suffix, tag in self._SUFFIXES:
            if word.endswith(suffix) and len(word) > len(suffix) + 1:
                return tag
        return "NN"

    def tag(self, tokens: Sequence[str]) -> list[str]:
        return [self.tag_word(t) for t in tokens]


@lru_cache(maxsize=1)
def _default_lexicon() -> dict[str, str]:
    lex = {}
    for line in _data_lines("tagger_lexicon.tsv"):
        word, tag = line.split("\t")
        lex[word] = tag
    return lex


def content_tokens(sentences: Sequence[str], use_dictionary: bool = True) -> list[list[str]]:
    """Per-sentence tokens with stop words (and non-dictionary words) removed."""
    stops = stop_words()
    out = []
    for sent in sentences:
        toks = [t for t in tokenize(sent) if t not in stops]
        if use_dictionary:
            toks = [t for t in toks if is_english(t)]
        out.append(toks)
    return out


def tagged_tokens(sentences: Sequence[str], tagger: Tagger, use_dictionary: bool = True) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    for toks in content_tokens(sentences, use_dictionary):
        if toks:
            pairs.extend(zip(toks, tagger.tag(toks)))
    return pairs


def pos_frequencies(pairs: Iterable[tuple[str, str]], common_words: frozenset[str] = frozenset()) -> dict[str, float]:
    """Relative frequency of each tagset tag, skipping ``common_words``."""
    counts = Counter(tag for tok, tag in pairs if tok not in common_words and tag in TAGSET)
    total = sum(counts.values())
    if total == 0:
        return {tag: 0.0 for tag in TAGSET}
    return {tag: counts.get(tag, 0) / total for tag in TAGSET}


def pos_features(
    sentences: Sequence[str],
    tagger: Tagger,
    common_words: frozenset[str] = frozenset(),
    use_dictionary: bool = True,
) -> dict[str, float]:
    # Removal happens before tagging; with a context-free tagger, tagging the
    # filtered stream and dropping common words afterwards is the same thing.
    stops = stop_words()
    pairs: list[tuple[str, str]] = []
    for sent in sentences:
        toks = [t for t in tokenize(sent) if t not in stops and t not in common_words]
        if use_dictionary:
            toks = [t for t in toks if is_english(t)]
        if toks:
            pairs.extend(zip(toks, tagger.tag(toks)))
    return pos_frequencies(pairs)


def common_vocabulary(token_sets_a: Iterable[Iterable[str]], token_sets_b: Iterable[Iterable[str]]) -> frozenset[str]:
    """Words used by at least one member of each group."""
    vocab_a: set[str] = set()
    for toks in token_sets_a:
        vocab_a.update(toks)
    vocab_b: set[str] = set()
    for toks in token_sets_b:
        vocab_b.update(toks)
    return frozenset(vocab_a & vocab_b)
