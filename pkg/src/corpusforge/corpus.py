"""Document data model and streaming JSONL shard I/O.

Shard format: one JSON object per line, UTF-8, LF terminators, fields
id / text / source / lang / meta. Files are named <name>-NNNNN.jsonl with a
zero-padded 5-digit shard index.
"""

from __future__ import annotations

import glob as _glob
import json
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

from corpusforge.errors import InvalidUnicode, MalformedLine, MissingField, ShardError

SHARD_DIGITS = 5


@dataclass
class Document:
    id: str
    text: str
    source: str
    lang: str
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.source or not self.lang:
            raise ValueError(f"document {self.id!r}: source and lang must be non-empty")
        if "\x00" in self.text:
            raise ValueError(f"document {self.id!r}: text contains NUL bytes")


@dataclass
class Shard:
    path: str
    count: int
    bytes: int
    token_count: Optional[int] = None


@dataclass
class PipelineReport:
    stage_name: str
    docs_in: int = 0
    docs_out: int = 0
    docs_dropped_by_reason: dict = field(default_factory=dict)

    def drop(self, reason: str, n: int = 1) -> None:
        self.docs_dropped_by_reason[reason] = self.docs_dropped_by_reason.get(reason, 0) + n

    def check(self) -> None:
        dropped = sum(self.docs_dropped_by_reason.values())
        if self.docs_in != self.docs_out + dropped:
            raise ValueError(
                f"stage {self.stage_name!r} does not reconcile: "
                f"{self.docs_in} in != {self.docs_out} out + {dropped} dropped"
            )

    def to_dict(self) -> dict:
        return {
            "stage_name": self.stage_name,
            "docs_in": self.docs_in,
            "docs_out": self.docs_out,
            "docs_dropped_by_reason": dict(sorted(self.docs_dropped_by_reason.items())),
        }


def doc_to_json(doc: Document) -> str:
    # Fixed key order and separators so identical documents serialize to
    # identical bytes.
    return json.dumps(
        {"id": doc.id, "text": doc.text, "source": doc.source, "lang": doc.lang, "meta": doc.meta},
        ensure_ascii=False,
        separators=(",", ":"),
    )


def _parse_line(line_no: int, raw: bytes) -> Document:
    if b"\x00" in raw:
        raise InvalidUnicode(line_no, "NUL byte in record")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidUnicode(line_no, str(exc)) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedLine(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "record is not a JSON object")
    for name in ("id", "text", "source", "lang"):
        if not isinstance(obj.get(name), str):
            raise MissingField(line_no, name)
    meta = obj.get("meta", {})
    if not isinstance(meta, dict):
        raise MalformedLine(line_no, "meta is not an object")
    return Document(id=obj["id"], text=obj["text"], source=obj["source"], lang=obj["lang"], meta=meta)


def read_shard(path: str, on_error: Optional[Callable[[ShardError], None]] = None) -> Iterator[Document]:
    """Yield documents from one JSONL shard in file order.

    Malformed lines raise by default; pass on_error (e.g. a list's append) to
    record the per-line error and keep reading.
    """
    with open(path, "rb") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.rstrip(b"\r\n")
            if not raw:
                continue
            try:
                yield _parse_line(line_no, raw)
            except ShardError as exc:
                if on_error is None:
                    raise
                on_error(exc)


def write_shard(docs: Iterable[Document], path: str) -> Shard:
    """Write documents to a JSONL shard; returns exact count/byte accounting.

    Shard.bytes is the sum of UTF-8 byte lengths of the text fields, not the
    file size.
    """
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    count = 0
    text_bytes = 0
    with open(path, "wb") as fh:
        for doc in docs:
            doc.validate()
            fh.write(doc_to_json(doc).encode("utf-8"))
            fh.write(b"\n")
            count += 1
            text_bytes += len(doc.text.encode("utf-8"))
    return Shard(path=path, count=count, bytes=text_bytes)


def shard_path(out_dir: str, name: str, index: int) -> str:
    return os.path.join(out_dir, f"{name}-{index:0{SHARD_DIGITS}d}.jsonl")


def write_sharded(
    docs: Iterable[Document], out_dir: str, name: str, docs_per_shard: int = 50_000
) -> list[Shard]:
    """Split a document stream into fixed-size shards under out_dir."""
    shards: list[Shard] = []
    batch: list[Document] = []
    index = 0
    for doc in docs:
        batch.append(doc)
        if len(batch) >= docs_per_shard:
            shards.append(write_shard(batch, shard_path(out_dir, name, index)))
            batch = []
            index += 1
    if batch or not shards:
        shards.append(write_shard(batch, shard_path(out_dir, name, index)))
    return shards


def iter_paths(pattern: str) -> list[str]:
    paths = sorted(_glob.glob(pattern))
    if not paths and os.path.isfile(pattern):
        paths = [pattern]
    return paths


def read_many(
    patterns: Iterable[str], on_error: Optional[Callable[[ShardError], None]] = None
) -> Iterator[Document]:
    """Stream documents from every shard matching the given globs, in sorted
    path order."""
    for pattern in patterns:
        for path in iter_paths(pattern):
            yield from read_shard(path, on_error=on_error)
