from __future__ import annotations

import json
import re
from dataclasses import replace

import pytest

from reborn.cli import main

from .conftest import FIXTURES, GENTSCH_PID, crate_for, make_article

GENTSCH_DIR = str(FIXTURES / "gentsch")
GENTSCH_FILE = str(FIXTURES / "gentsch" / "ro-crate-metadata.json")
BROKEN_DIR = str(FIXTURES / "broken")


@pytest.fixture()
def data_dir(tmp_path):
    return str(tmp_path / "data")


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_ingest_file(capsys, data_dir):
    code, out, err = run(capsys, "--data-dir", data_dir, "ingest", GENTSCH_FILE)
    assert code == 0
    assert out.strip() == f"deposited {GENTSCH_PID} (2 statement(s) indexed)"
    assert err == ""


def test_ingest_directory(capsys, data_dir):
    code, out, _ = run(capsys, "--data-dir", data_dir, "ingest", GENTSCH_DIR)
    assert code == 0
    assert GENTSCH_PID in out


def test_ingest_unknown_doi_fails(capsys, data_dir):
    code, out, err = run(capsys, "--data-dir", data_dir, "ingest", "10.5194/absent-doi")
    assert code == 1
    assert out == ""
    assert "SOURCE_UNREACHABLE" in err


def test_search_after_ingest(capsys, data_dir):
    run(capsys, "--data-dir", data_dir, "ingest", GENTSCH_FILE)
    code, out, _ = run(capsys, "--data-dir", data_dir, "search", "lme4", "-k", "5")
    assert code == 0
    first = out.splitlines()[0]
    assert re.match(rf"^ 1\. \d\.\d{{4}}  {re.escape(GENTSCH_PID)}\.s1  Cover crops", first)


def test_search_bad_weight(capsys, data_dir):
    run(capsys, "--data-dir", data_dir, "ingest", GENTSCH_FILE)
    code, _, err = run(
        capsys, "--data-dir", data_dir, "search", "soil", "--w-sparse", "2.0"
    )
    assert code == 1
    assert "BAD_WEIGHTS" in err


def test_validate_ok(capsys, data_dir):
    code, out, err = run(capsys, "--data-dir", data_dir, "validate", GENTSCH_DIR)
    assert code == 0
    assert out.strip() == "ok"
    assert err == ""


def test_validate_broken_crate(capsys, data_dir):
    code, out, err = run(capsys, "--data-dir", data_dir, "validate", BROKEN_DIR)
    assert code == 1
    assert "PROFILE_VIOLATION" in err


def test_validate_reports_schema_violations(capsys, data_dir, tmp_path):
    article = make_article()
    statement = article.statements[0]
    part = replace(statement.evidence.parts[0], procedure=None)
    bad = replace(
        article,
        statements=(replace(statement, evidence=replace(statement.evidence, parts=(part,))),),
    )
    crate_path = tmp_path / "bad-crate.json"
    crate_path.write_bytes(crate_for(bad))

    code, out, _ = run(capsys, "--data-dir", data_dir, "validate", str(crate_path))
    assert code == 1
    assert out.splitlines() == [
        "MISSING:procedure at statements[0].evidence.parts[0]: "
        "analysis part lacks required procedure"
    ]


def test_validate_json_error_output(capsys, data_dir):
    code, out, err = run(capsys, "--json", "--data-dir", data_dir, "validate", BROKEN_DIR)
    assert code == 1
    assert out == ""
    payload = json.loads(err)
    assert payload["error"]["code"] == "PROFILE_VIOLATION"


def test_list_types(capsys, data_dir):
    code, out, _ = run(capsys, "--data-dir", data_dir, "list-types")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 10
    assert all(len(line.split("\t")) == 3 for line in lines)
    assert any("Multilevel Analysis" in line for line in lines)


def test_list_types_json(capsys, data_dir):
    code, out, _ = run(capsys, "--json", "--data-dir", data_dir, "list-types")
    assert code == 0
    payload = json.loads(out)
    assert len(payload) == 10
    assert {entry["pid"] for entry in payload} >= {"21.T11969/c6b413ba96ba477b5dca"}


def test_reindex(capsys, data_dir):
    run(capsys, "--data-dir", data_dir, "ingest", GENTSCH_FILE)
    code, out, _ = run(capsys, "--data-dir", data_dir, "reindex")
    assert code == 0
    assert out.strip() == "reindexed 1 article(s): 2 sparse, 2 dense"


def test_ingest_json_output(capsys, data_dir):
    code, out, _ = run(capsys, "--json", "--data-dir", data_dir, "ingest", GENTSCH_FILE)
    assert code == 0
    assert json.loads(out) == {"article_pid": GENTSCH_PID, "statements_indexed": 2}


def test_unknown_command_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate"])
    assert excinfo.value.code == 2


def test_missing_command_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
