"""Read sandbox behavior reports and pull out the root process's API calls.

Only a small subset of the report is consumed::

    {"behavior": {"processes": [
        {"pid": 4, "ppid": 2, "calls": [{"api": "NtOpenFile", "time": 1.5}, ...]},
        ...
    ]}}

``parent_id`` is accepted as a spelling of ``ppid``. Every other key is ignored.
"""

from __future__ import annotations

import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DirectoryUnreadable,
    EmptyProcessList,
    IoFailure,
    MalformedDocument,
    MissingBehaviorSection,
    SchemaMismatch,
)

log = logging.getLogger(__name__)

_ID_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]")


@dataclass(frozen=True)
class ApiCallRecord:
    api: str
    time: float | None = None

    def __post_init__(self):
        if not self.api.strip():
            raise ValueError("api name must be non-empty")


@dataclass(frozen=True)
class ProcessTrace:
    pid: int
    parent_pid: int | None
    calls: tuple[ApiCallRecord, ...] = ()


@dataclass(frozen=True)
class BehaviorTrace:
    source_id: str
    processes: tuple[ProcessTrace, ...]


@dataclass
class CallSequence:
    source_id: str
    tokens: list[str]
    label: int | None = None

    def __post_init__(self):
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass
class SkipEntry:
    file: str
    error: str
    message: str


@dataclass
class IngestResult:
    sequences: list[CallSequence] = field(default_factory=list)
    skipped: list[SkipEntry] = field(default_factory=list)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _parse_call(raw, where: str) -> ApiCallRecord:
    if not isinstance(raw, dict):
        raise MalformedDocument(f"{where}: call entry is not an object")
    api = raw.get("api")
    if not isinstance(api, str) or not api.strip():
        raise MalformedDocument(f"{where}: call without a usable 'api' name")
    t = raw.get("time")
    if t is not None and (isinstance(t, bool) or not isinstance(t, (int, float))):
        raise MalformedDocument(f"{where}: non-numeric call time {t!r}")
    return ApiCallRecord(api=api.strip(), time=None if t is None else float(t))


def _parse_process(raw, index: int) -> ProcessTrace:
    where = f"process[{index}]"
    if not isinstance(raw, dict):
        raise MalformedDocument(f"{where} is not an object")
    pid = raw.get("pid")
    if not _is_int(pid) or pid < 0:
        raise MalformedDocument(f"{where}: missing or invalid pid {pid!r}")
    parent = raw.get("ppid", raw.get("parent_id"))
    if parent is not None and not _is_int(parent):
        raise MalformedDocument(f"{where}: invalid parent pid {parent!r}")
    calls = raw.get("calls") or []
    if not isinstance(calls, list):
        raise MalformedDocument(f"{where}: 'calls' is not an array")
    return ProcessTrace(
        pid=pid,
        parent_pid=parent,
        calls=tuple(_parse_call(c, f"{where}.calls[{j}]") for j, c in enumerate(calls)),
    )


def parse_report(document_bytes: bytes, source_id: str = "report") -> BehaviorTrace:
    """Parse one report document into a :class:`BehaviorTrace`.

    Processes and their calls keep document order; timestamps are carried
    along but never used to reorder.
    """
    try:
        doc = json.loads(document_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"not a valid UTF-8 JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top-level value is not an object")

    behavior = doc.get("behavior")
    if not isinstance(behavior, dict):
        raise MissingBehaviorSection("report has no 'behavior' section")
    processes = behavior.get("processes")
    if processes is None or processes == []:
        raise EmptyProcessList("'behavior' section lists no processes")
    if not isinstance(processes, list):
        raise MalformedDocument("'behavior.processes' is not an array")

    return BehaviorTrace(
        source_id=source_id,
        processes=tuple(_parse_process(p, i) for i, p in enumerate(processes)),
    )


def find_root_process(trace: BehaviorTrace) -> ProcessTrace:
    """Root = process whose parent is not in the trace; ties go to the smallest pid."""
    pids = {p.pid for p in trace.processes}
    roots = [p for p in trace.processes if p.parent_pid is None or p.parent_pid not in pids]
    if not roots:
        # every parent is present: a pid cycle. Fall back to all processes.
        roots = list(trace.processes)
    return min(roots, key=lambda p: p.pid)


def extract_root_sequence(trace: BehaviorTrace, label: int | None = None) -> CallSequence:
    root = find_root_process(trace)
    return CallSequence(
        source_id=trace.source_id,
        tokens=[c.api for c in root.calls],
        label=label,
    )


def source_id_for(path: Path) -> str:
    return _ID_UNSAFE.sub("_", path.stem) or "report"


def candidate_files(directory: Path) -> list[Path]:
    try:
        entries = sorted(directory.iterdir(), key=lambda p: p.name)
    except OSError as exc:
        raise DirectoryUnreadable(f"cannot read directory {directory}: {exc}") from exc
    return [p for p in entries if p.suffix.lower() == ".json" and p.is_file()]


def _load_one(path: Path, label: int) -> CallSequence:
    data = path.read_bytes()
    return extract_root_sequence(parse_report(data, source_id_for(path)), label)


def ingest_directory(path, label: int, workers: int | None = None) -> IngestResult:
    """Parse every ``*.json`` report in ``path`` (non-recursive).

    Results come back in file-name order regardless of ``workers``. Files that
    fail to parse land in ``skipped`` instead of aborting the batch.
    """
    directory = Path(path)
    if not directory.is_dir():
        raise DirectoryUnreadable(f"not a directory: {directory}")
    files = candidate_files(directory)

    def attempt(p: Path):
        try:
            return _load_one(p, label)
        except (MalformedDocument, MissingBehaviorSection, EmptyProcessList) as exc:
            return SkipEntry(p.name, type(exc).__name__, str(exc))
        except OSError as exc:
            return SkipEntry(p.name, "IoFailure", str(exc))

    workers = workers or min(8, os.cpu_count() or 1)
    if workers > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(attempt, files))
    else:
        outcomes = [attempt(p) for p in files]

    result = IngestResult()
    for outcome in outcomes:
        if isinstance(outcome, SkipEntry):
            log.warning("skipping %s: %s", outcome.file, outcome.error)
            result.skipped.append(outcome)
        else:
            result.sequences.append(outcome)
    return result


# Fragment files hold raw (uncollapsed) sequences between ingest and build:
# header "id,label,tokens", tokens separated by single spaces.

def write_fragment(sequences, path) -> None:
    lines = ["id,label,tokens"]
    for seq in sequences:
        if any(("," in t or " " in t or "\n" in t) for t in seq.tokens):
            raise ValueError(f"{seq.source_id}: token contains a delimiter")
        label = "" if seq.label is None else str(seq.label)
        lines.append(f"{seq.source_id},{label},{' '.join(seq.tokens)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def read_fragment(path) -> list[CallSequence]:
    try:
        lines = Path(path).read_text(encoding="utf-8").split("\n")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != "id,label,tokens":
        raise SchemaMismatch(f"{path}: expected header 'id,label,tokens'")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise SchemaMismatch(f"{path}: line {lineno} does not have 3 columns")
        sid, label, tokens = parts
        out.append(CallSequence(sid, tokens.split(" ") if tokens else [], int(label) if label else None))
    return out
