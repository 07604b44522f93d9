"""Lexical-category scores over profile sentences."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import LexiconMissing
from .text import tokenize

N_CATEGORIES = 21


@dataclass(frozen=True)
class LexiconPack:
    categories: tuple[str, ...]
    words: tuple[frozenset[str], ...]

    @classmethod
    def load(cls, directory: str | Path | None = None) -> LexiconPack:
        """Read a pack directory: ``manifest`` plus one ``<category>.txt`` per category.

        ``None`` loads the pack shipped with the package.
        """
        root = resources.files("wikichurn.features").joinpath("data", "lexicons") if directory is None else Path(directory)
        manifest = root.joinpath("manifest")
        if not manifest.is_file():
            raise LexiconMissing(f"no manifest in lexicon pack {root}")
        names = [
            ln.strip()
            for ln in manifest.read_text(encoding="utf-8").splitlines()
            if ln.strip() and not ln.startswith("#")
        ]
        if len(names) != N_CATEGORIES:
            raise LexiconMissing(f"manifest lists {len(names)} categories, expected {N_CATEGORIES}")
        sets = []
        for name in names:
            path = root.joinpath(f"{name}.txt")
            if not path.is_file():
                raise LexiconMissing(f"lexicon file for category {name!r} missing")
            words = {w.strip().lower() for w in path.read_text(encoding="utf-8").splitlines()}
            sets.append(frozenset(w for w in words if w))
        return cls(categories=tuple(names), words=tuple(sets))


def empath_features(sentences: Sequence[str], lexicons: LexiconPack) -> np.ndarray:
    """Mean over sentences of (category hits / sentence token count)."""
    out = np.zeros(len(lexicons.categories))
    scored = 0
    for sent in sentences:
        toks = tokenize(sent)
        if not toks:
            continue
        scored += 1
        for j, words in enumerate(lexicons.words):
            hits = sum(1 for t in toks if t in words)
            out[j] += hits / len(toks)
    if scored:
        out /= scored
    return out
