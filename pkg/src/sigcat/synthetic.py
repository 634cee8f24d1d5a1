"""Seeded synthetic corpora for demos, tests and benchmarks."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import (CONTEXT_SUFFIX, ClassLabel, CtxVariant, DescType, ManifestEntry,
                     Sample, combine_with_context, write_manifest)

_ALPHABET_WIDTH = 256 // len(ClassLabel)


def disjoint_alphabet_doc(label: ClassLabel, rng: np.random.Generator,
                          size: int) -> bytes:
    """Random bytes restricted to the 51-value band owned by ``label``."""
    low = int(label) * _ALPHABET_WIDTH
    return rng.integers(low, low + _ALPHABET_WIDTH, size=size, dtype=np.uint8).tobytes()


def separable_corpus(n_docs: int = 500, seed: int = 0, min_size: int = 200,
                     max_size: int = 1200, desc_type: DescType = DescType.TEXT) -> list[Sample]:
    """Classes cycle through the five labels; each uses its own byte band."""
    rng = np.random.default_rng(seed)
    labels = list(ClassLabel)
    out = []
    for i in range(n_docs):
        label = labels[i % len(labels)]
        size = int(rng.integers(min_size, max_size + 1))
        out.append(Sample(f"sep-{i:05d}", disjoint_alphabet_doc(label, rng, size),
                          desc_type, CtxVariant.PLAIN, label, ""))
    return out


# Shared words own the extreme bigrams (" a...", "zz") so per-class words,
# built from mid-range letters, never show up among a document's extremes.
_SHARED_WORDS = [
    "service", "operation", "request", "response", "message", "binding", "port",
    "type", "element", "string", "integer", "endpoint", "schema", "input", "output",
    "soap", "http", "address", "name", "value", "list", "get", "set", "id", "data",
    "zzz", "xyz", "aaa", "array", "fuzzy",
]
_CLASS_WORDS = {
    ClassLabel.WEATHER: ["rain", "storm", "mist", "frost", "heat", "cloud"],
    ClassLabel.SOCIAL: ["friend", "profile", "post", "comment", "group", "chat"],
    ClassLabel.TOURISM: ["hotel", "flight", "trip", "tour", "museum", "guide"],
    ClassLabel.ENTERTAINMENT: ["movie", "music", "film", "show", "ticket", "concert"],
    ClassLabel.FINANCIAL: ["stock", "quote", "credit", "loan", "fund", "market"],
}


def _words(rng, vocab, count):
    return " ".join(vocab[i] for i in rng.integers(0, len(vocab), size=count))


def _mixed_words(rng, label, count, rate):
    shared = rng.integers(0, len(_SHARED_WORDS), size=count)
    own = _CLASS_WORDS[label]
    swapped = rng.random(count) < rate
    picks = rng.integers(0, len(own), size=count)
    return " ".join(own[p] if sw else _SHARED_WORDS[w]
                    for w, sw, p in zip(shared, swapped, picks))


def context_pair(label: ClassLabel, rng: np.random.Generator, n_words: int = 500,
                 ctx_words: int = 3000, leak: float = 0.3, ctx_leak: float = 0.3):
    """A description and its context file.

    Both draw from a vocabulary shared by all classes, except that each word
    is swapped for a token unique to ``label`` with probability ``leak``
    (description) or ``ctx_leak`` (context).
    """
    desc = _mixed_words(rng, label, n_words, leak)
    ctx = _mixed_words(rng, label, ctx_words, ctx_leak)
    return desc.encode("ascii"), ctx.encode("ascii")


def context_corpus(n_per_class: int = 20, seed: int = 0, desc_type: DescType = DescType.WSDL,
                   n_words: int = 500, ctx_words: int = 3000, leak: float = 0.3,
                   ctx_leak: float = 0.3) -> dict:
    """Samples for every context variant, keyed by :class:`CtxVariant`.

    The i-th sample of each variant comes from the same description/context pair.
    """
    rng = np.random.default_rng(seed)
    variants = {v: [] for v in CtxVariant}
    for i in range(n_per_class):
        for label in ClassLabel:
            desc, ctx = context_pair(label, rng, n_words, ctx_words, leak, ctx_leak)
            sid = f"{label.spelling}-{i:04d}"
            variants[CtxVariant.PLAIN].append(
                Sample(sid, desc, desc_type, CtxVariant.PLAIN, label, ""))
            variants[CtxVariant.PLAIN_CTX].append(
                Sample(sid, combine_with_context(desc, ctx), desc_type,
                       CtxVariant.PLAIN_CTX, label, ""))
            variants[CtxVariant.CTX].append(
                Sample(sid, ctx, desc_type, CtxVariant.CTX, label, ""))
    return variants


def write_corpus(samples, directory, manifest_name: str = "manifest.tsv",
                 contexts: Optional[dict] = None) -> Path:
    """Write samples as files plus a manifest; returns the manifest path.

    ``contexts`` maps sample id to context bytes for ``plainctx`` samples; such
    a sample's file then holds only the description and the context goes to
    the sibling ``.ctx`` file.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for s in samples:
        name = f"{s.id}.{s.desc_type.value}"
        data = s.data
        if contexts and s.id in contexts:
            ctx = contexts[s.id]
            data = data[:len(data) - len(ctx) - 1]
            (directory / (name + CONTEXT_SUFFIX)).write_bytes(ctx)
        (directory / name).write_bytes(data)
        entries.append(ManifestEntry(name, s.desc_type, s.ctx_variant, s.gold))
    path = directory / manifest_name
    write_manifest(path, entries)
    return path
