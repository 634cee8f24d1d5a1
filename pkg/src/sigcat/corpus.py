"""Documents, labels, manifests and ingestion.

A document enters the pipeline as raw bytes. REST pages can be reduced to
their text with :func:`strip_html`, and a description can be joined with its
context file through :func:`combine_with_context`.

Manifest format (UTF-8, tab separated, ``#`` starts a comment line)::

    path <TAB> descType <TAB> ctxVariant [<TAB> class [<TAB> contextPath]]

Relative paths are resolved against the manifest's directory. ``plainctx``
entries take their context from ``contextPath`` when given, otherwise from
``path + ".ctx"``.
"""

from __future__ import annotations

import enum
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import (DuplicatePath, EmptyFile, EmptyInput, IngestError,
                     ParseError, UnknownLabel)

CONTEXT_SUFFIX = ".ctx"


class DescType(enum.Enum):
    WSDL = "wsdl"
    WADL = "wadl"
    HTML = "html"
    TEXT = "text"


class CtxVariant(enum.Enum):
    PLAIN = "plain"
    PLAIN_CTX = "plainctx"
    CTX = "ctx"


class ClassLabel(enum.IntEnum):
    """The five service categories. Integer value is the tie-break ordinal."""

    WEATHER = 0
    SOCIAL = 1
    TOURISM = 2
    ENTERTAINMENT = 3
    FINANCIAL = 4

    @property
    def spelling(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "ClassLabel":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise UnknownLabel(f"unknown class {text!r}") from None


def _parse_enum(kind, text, what, line=None):
    try:
        return kind(text.strip().lower())
    except ValueError:
        msg = f"unknown {what} {text!r}"
        if line is not None:
            msg = f"line {line}: {msg}"
        raise UnknownLabel(msg) from None


@dataclass(frozen=True)
class Sample:
    id: str
    data: bytes
    desc_type: DescType
    ctx_variant: CtxVariant
    gold: Optional[ClassLabel] = None
    source_path: str = ""

    def __post_init__(self):
        if not self.data:
            raise EmptyFile(f"sample {self.id!r} has no bytes")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    desc_type: DescType
    ctx_variant: CtxVariant
    gold: Optional[ClassLabel] = None
    context_path: Optional[str] = None


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    dataset_name: str = ""
    base_dir: str = "."

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            if entry.path in seen:
                raise DuplicatePath(f"duplicate path {entry.path!r}")
            seen.add(entry.path)

    def __len__(self):
        return len(self.entries)

    def select(self, desc_type=None, ctx_variant=None) -> "Manifest":
        entries = [e for e in self.entries
                   if (desc_type is None or e.desc_type == desc_type)
                   and (ctx_variant is None or e.ctx_variant == ctx_variant)]
        return Manifest(entries, self.dataset_name, self.base_dir)


# --------------------------------------------------------------------------
# HTML stripping

_COMMENT = re.compile(r"<!--.*?(?:-->|\Z)", re.S)
_RAW_TEXT = re.compile(r"<(script|style)\b.*?(?:</\1\s*>|\Z)", re.S | re.I)
_TAG = re.compile(r"<[A-Za-z/!?][^>]*>?")
_ENTITY = re.compile(r"&(#[0-9]+|#[xX][0-9a-fA-F]+|amp|lt|gt|quot|apos);")
_SPACE = re.compile(r"\s+")
_NAMED = {"amp": "&", "lt": "<", "gt": ">", "quot": '"', "apos": "'"}


def _decode_entity(match):
    name = match.group(1)
    if name in _NAMED:
        return _NAMED[name]
    try:
        code = int(name[2:], 16) if name[1] in "xX" else int(name[1:])
    except ValueError:
        return match.group(0)
    # Out of range, NUL and surrogates are left verbatim.
    if code <= 0 or code > 0x10FFFF or 0xD800 <= code <= 0xDFFF:
        return match.group(0)
    return chr(code)


def _strip_once(text: str) -> str:
    text = _COMMENT.sub("", text)
    text = _RAW_TEXT.sub("", text)
    text = _TAG.sub("", text)
    text = _ENTITY.sub(_decode_entity, text)
    return _SPACE.sub(" ", text).strip()


def strip_html(html: bytes) -> bytes:
    """Return the text content of an HTML-like document.

    Tags, comments and the bodies of ``script``/``style`` elements are dropped,
    the five XML entities and numeric references are decoded, and whitespace
    runs collapse to one space. Unterminated constructs run to end of input.

    A decoded ``&lt;b&gt;`` would itself look like a tag, so the pass is
    repeated until the text stops changing; that makes the function
    idempotent. Each pass either shortens the text or only normalizes
    whitespace, so the loop terminates.
    """
    text = bytes(html).decode("utf-8", errors="surrogateescape")
    while True:
        stripped = _strip_once(text)
        if stripped == text:
            break
        text = stripped
    return text.encode("utf-8", errors="surrogateescape")


def combine_with_context(description: bytes, context: bytes) -> bytes:
    if not description or not context:
        raise EmptyInput("description and context must both be non-empty")
    return bytes(description) + b"\n" + bytes(context)


# --------------------------------------------------------------------------
# Manifests

def parse_manifest(text: str, dataset_name="", base_dir=".") -> Manifest:
    entries = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if not 3 <= len(fields) <= 5:
            raise ParseError(f"expected 3 to 5 tab-separated fields, got {len(fields)}", lineno)
        path = fields[0].strip()
        if not path:
            raise ParseError("empty path", lineno)
        desc = _parse_enum(DescType, fields[1], "description type", lineno)
        variant = _parse_enum(CtxVariant, fields[2], "context variant", lineno)
        gold = None
        if len(fields) >= 4 and fields[3].strip():
            try:
                gold = ClassLabel.parse(fields[3])
            except UnknownLabel as exc:
                raise UnknownLabel(f"line {lineno}: {exc}") from None
        ctx_path = fields[4].strip() if len(fields) == 5 and fields[4].strip() else None
        if path in seen:
            raise DuplicatePath(f"line {lineno}: path {path!r} already listed on line {seen[path]}")
        seen[path] = lineno
        entries.append(ManifestEntry(path, desc, variant, gold, ctx_path))
    return Manifest(entries, dataset_name, base_dir)


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc})") from None
    except OSError as exc:
        raise IngestError([(str(path), exc.strerror or str(exc))]) from None
    return parse_manifest(text, dataset_name=path.stem, base_dir=str(path.parent))


def format_manifest(entries: Iterable[ManifestEntry]) -> str:
    lines = []
    for e in entries:
        fields = [e.path, e.desc_type.value, e.ctx_variant.value]
        if e.gold is not None or e.context_path:
            fields.append(e.gold.spelling if e.gold is not None else "")
        if e.context_path:
            fields.append(e.context_path)
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def write_manifest(path, entries: Iterable[ManifestEntry]) -> None:
    Path(path).write_text(format_manifest(entries), encoding="utf-8")


# --------------------------------------------------------------------------
# Ingestion

def _read(path):
    try:
        return Path(path).read_bytes(), None
    except OSError as exc:
        return None, exc.strerror or str(exc)


def _entry_files(manifest: Manifest, entry: ManifestEntry):
    main = os.path.join(manifest.base_dir, entry.path)
    if entry.ctx_variant is not CtxVariant.PLAIN_CTX:
        return main, None
    ctx = entry.context_path or entry.path + CONTEXT_SUFFIX
    return main, os.path.join(manifest.base_dir, ctx)


def ingest(manifest: Manifest, jobs: int = 4) -> list[Sample]:
    """Read every manifest entry into a :class:`Sample`, in manifest order.

    HTML is kept verbatim. All unreadable files are reported together in one
    :class:`IngestError`.
    """
    files = [_entry_files(manifest, e) for e in manifest.entries]
    flat = [p for pair in files for p in pair if p is not None]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        contents = dict(zip(flat, pool.map(_read, flat)))

    failures = [(p, err) for p, (_, err) in contents.items() if err is not None]
    if failures:
        raise IngestError(failures)

    samples = []
    for entry, (main, ctx) in zip(manifest.entries, files):
        data = contents[main][0]
        if not data:
            raise EmptyFile(f"{main}: file is empty")
        if ctx is not None:
            context = contents[ctx][0]
            if not context:
                raise EmptyFile(f"{ctx}: context file is empty")
            data = combine_with_context(data, context)
        samples.append(Sample(entry.path, data, entry.desc_type, entry.ctx_variant,
                              entry.gold, main))
    return samples


def load_dataset(path, jobs: int = 4) -> list[Sample]:
    return ingest(load_manifest(path), jobs=jobs)


def strip_sample(sample: Sample) -> Sample:
    """Tags-filtered copy of an HTML sample; raises EmptyFile if nothing is left."""
    text = strip_html(sample.data)
    if not text:
        raise EmptyFile(f"{sample.id}: no text left after stripping markup")
    return replace(sample, data=text, desc_type=DescType.TEXT)


def labeled(samples: Sequence[Sample]) -> list[Sample]:
    missing = [s.id for s in samples if s.gold is None]
    if missing:
        raise UnknownLabel(f"{len(missing)} sample(s) lack a class, e.g. {missing[0]!r}")
    return list(samples)
