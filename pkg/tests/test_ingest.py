import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malseq.errors import DirectoryUnreadable, EmptyProcessList, MalformedDocument, MissingBehaviorSection
from malseq.ingest import (
    ApiCallRecord,
    BehaviorTrace,
    CallSequence,
    ProcessTrace,
    extract_root_sequence,
    ingest_directory,
    parse_report,
    read_fragment,
    write_fragment,
)

from .conftest import report_bytes


def test_single_process_calls_in_order():
    trace = parse_report(report_bytes([(1, None, ["NtOpenFile", "NtReadFile"])]))
    assert len(trace.processes) == 1
    assert [c.api for c in trace.processes[0].calls] == ["NtOpenFile", "NtReadFile"]


def test_missing_behavior_section():
    with pytest.raises(MissingBehaviorSection):
        parse_report(json.dumps({"info": {}, "network": {}}).encode())


@pytest.mark.parametrize("behavior", [{}, {"processes": []}])
def test_empty_process_list(behavior):
    with pytest.raises(EmptyProcessList):
        parse_report(json.dumps({"behavior": behavior}).encode())


@pytest.mark.parametrize("raw", [b"{not json", b"\xff\xfe", b"[1, 2]", b'{"behavior": {"processes": [{"calls": []}]}}'])
def test_malformed(raw):
    with pytest.raises(MalformedDocument):
        parse_report(raw)


def test_three_process_tree_preserved():
    procs = [(4, 2, ["A", "B"]), (7, 4, ["C"]), (9, 7, ["D", "E", "F"])]
    trace = parse_report(report_bytes(procs))
    # manual walk of the fixture
    assert [(p.pid, p.parent_pid, [c.api for c in p.calls]) for p in trace.processes] == [
        (pid, ppid, calls) for pid, ppid, calls in procs
    ]


def test_parent_id_spelling_and_time():
    doc = {"behavior": {"processes": [{"pid": 5, "parent_id": 3, "calls": [{"api": " X ", "time": 2}]}]}}
    trace = parse_report(json.dumps(doc).encode())
    assert trace.processes[0].parent_pid == 3
    assert trace.processes[0].calls[0].api == "X"
    assert trace.processes[0].calls[0].time == 2.0


def test_timestamps_do_not_reorder():
    doc = {"behavior": {"processes": [{"pid": 1, "calls": [{"api": "B", "time": 9.0}, {"api": "A", "time": 1.0}]}]}}
    assert extract_root_sequence(parse_report(json.dumps(doc).encode())).tokens == ["B", "A"]


def _trace(*procs):
    return BehaviorTrace(
        "r", tuple(ProcessTrace(pid, ppid, tuple(ApiCallRecord(a) for a in calls)) for pid, ppid, calls in procs)
    )


def test_root_single_process():
    assert extract_root_sequence(_trace((3, None, ["A"]))).tokens == ["A"]


def test_root_parent_absent_from_trace():
    trace = _trace((4, 2, ["root"]), (7, 4, ["child"]))
    pids = {4, 7}
    expected = [p for p in trace.processes if p.parent_pid not in pids]
    assert len(expected) == 1
    assert extract_root_sequence(trace).tokens == ["root"]


def test_root_tie_breaks_on_smallest_pid():
    assert extract_root_sequence(_trace((9, 1, ["nine"]), (3, 1, ["three"]))).tokens == ["three"]


def test_root_with_no_calls_is_empty():
    assert extract_root_sequence(_trace((1, None, []), (2, 1, ["X"]))).tokens == []


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.one_of(st.none(), st.integers(0, 30)),
                          st.lists(st.sampled_from(["A", "B", "C"]), max_size=5)),
                min_size=1, max_size=6, unique_by=lambda t: t[0]))
def test_root_is_one_process_projection(procs):
    raw = report_bytes(procs)
    trace = parse_report(raw)
    assert parse_report(raw) == trace
    seq = extract_root_sequence(trace)
    assert any(seq.tokens == calls for _, _, calls in procs)


def test_ingest_directory_valid(tmp_path, write_report):
    write_report(tmp_path / "b.json", [(1, None, ["X"])])
    write_report(tmp_path / "a.JSON", [(1, None, ["Y", "Z"])])
    (tmp_path / "notes.txt").write_text("ignored")
    res = ingest_directory(tmp_path, 1)
    assert [s.source_id for s in res.sequences] == ["a", "b"]
    assert all(s.label == 1 for s in res.sequences)
    assert res.skipped == []


def test_ingest_directory_skips_bad_file(tmp_path, write_report):
    write_report(tmp_path / "good.json", [(1, None, ["X"])])
    (tmp_path / "trunc.json").write_text('{"behavior": {"proc')
    res = ingest_directory(tmp_path, 0)
    assert [s.source_id for s in res.sequences] == ["good"]
    assert [(s.file, s.error) for s in res.skipped] == [("trunc.json", "MalformedDocument")]
    assert len(res.sequences) + len(res.skipped) == 2


def test_ingest_directory_deterministic(tmp_path, write_report):
    for i in range(6):
        write_report(tmp_path / f"r{i}.json", [(1, None, [f"A{i}", "B"])])
    first = ingest_directory(tmp_path, 1, workers=4)
    second = ingest_directory(tmp_path, 1, workers=1)
    assert first == second


def test_ingest_missing_directory(tmp_path):
    with pytest.raises(DirectoryUnreadable):
        ingest_directory(tmp_path / "nope", 0)


def test_fragment_round_trip(tmp_path):
    seqs = [CallSequence("a", ["X", "Y"], 0), CallSequence("b", [], 1)]
    write_fragment(seqs, tmp_path / "f.csv")
    assert read_fragment(tmp_path / "f.csv") == seqs
