from __future__ import annotations

from pathlib import Path

import pytest

from reborn.config import ServiceConfig
from reborn.engine import KnowledgeService
from reborn.model import (
    AnalysisPart,
    Component,
    Concept,
    DataItem,
    Evidence,
    ExecutedProcedure,
    PersonRef,
    Pid,
    RebornArticle,
    Statement,
    TableSource,
)
from reborn.rocrate import serialize_rocrate

FIXTURES = Path(__file__).parent / "fixtures"

GENTSCH_PID = "10.48366/5eqe8313"

REGRESSION_TYPE = Pid("21.T11969/286991b26f02d58ee490")
MULTILEVEL_TYPE = Pid("21.T11969/c6b413ba96ba477b5dca")
GROUP_COMPARISON_TYPE = Pid("21.T11969/b9335ce2c99ed87735a6")
DESCRIPTIVE_TYPE = Pid("21.T11969/5b66cb584b974b186f37")


# -- in-code model builders --------------------------------------------------


def make_item(label: str = "measurements", n_rows: int = 2) -> DataItem:
    rows = tuple((f"row{i}", str(10 * i)) for i in range(1, n_rows + 1))
    return DataItem(
        label=label,
        source=TableSource(rows),
        matrix_rows=n_rows,
        matrix_cols=2,
        components=(
            Component(role="column", variable_name="name"),
            Component(role="column", variable_name="value"),
        ),
    )


def make_part(
    label: str = "model fit",
    package: str = "lme4",
    function: str = "lmer",
    target: str | None = "response",
) -> AnalysisPart:
    components = []
    if target is not None:
        components.append(Component(role="target_variable", variable_name=target))
    return AnalysisPart(
        label=label,
        procedure=ExecutedProcedure(language="r", package=package, function_name=function),
        inputs=(make_item("input rows"),),
        outputs=(make_item("output rows"),),
        components=tuple(components),
    )


def make_statement(
    article_pid: Pid,
    suffix: str,
    label: str,
    package: str = "lme4",
    function: str = "lmer",
    target: str | None = "response",
    data_type: Pid = REGRESSION_TYPE,
    concepts: tuple[Concept, ...] = (),
) -> Statement:
    return Statement(
        pid=Pid(f"{article_pid.value}.{suffix}"),
        label=label,
        evidence=Evidence(
            analysis_label=f"analysis of {label.lower()}",
            data_type_pid=data_type,
            parts=(make_part(package=package, function=function, target=target),),
        ),
        article_pid=article_pid,
        concepts=concepts,
    )


def make_article(
    pid_value: str = "10.48366/testart1",
    labels: tuple[str, ...] = ("Treatment raises the response variable",),
    title: str = "A small synthetic study",
    abstract: str = "We measured things and fitted models.",
) -> RebornArticle:
    pid = Pid(pid_value)
    return RebornArticle(
        pid=pid,
        original_doi=Pid(f"10.1234/orig-{pid.suffix}"),
        title=title,
        abstract_text=abstract,
        authors=(PersonRef(name="Alex Example"),),
        journal="Journal of Synthetic Results",
        publisher="Test Press",
        statements=tuple(
            make_statement(pid, f"s{i}", label) for i, label in enumerate(labels, start=1)
        ),
    )


def crate_for(article: RebornArticle) -> bytes:
    return serialize_rocrate(article)


# -- fixtures -----------------------------------------------------------------


@pytest.fixture(scope="session")
def gentsch_bytes() -> bytes:
    return (FIXTURES / "gentsch" / "ro-crate-metadata.json").read_bytes()


@pytest.fixture(scope="session")
def broken_bytes() -> bytes:
    return (FIXTURES / "broken" / "ro-crate-metadata.json").read_bytes()


@pytest.fixture
def service(tmp_path: Path) -> KnowledgeService:
    return KnowledgeService(ServiceConfig(data_dir=tmp_path / "data"))


@pytest.fixture
def client(service: KnowledgeService):
    from fastapi.testclient import TestClient

    from reborn.api import create_app

    with TestClient(create_app(service=service), raise_server_exceptions=False) as c:
        yield c


# -- acceptance summary -------------------------------------------------------


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one [PASS]/[FAIL] line per acceptance criterion after the run."""
    outcomes: dict[str, bool] = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            outcomes[name] = outcomes.get(name, True) and status == "passed"
    if not outcomes:
        return

    from .test_acceptance import CRITERIA, NOTES

    terminalreporter.write_sep("=", "acceptance criteria")
    for name, label in CRITERIA.items():
        if name in outcomes:
            verdict = "PASS" if outcomes[name] else "FAIL"
            terminalreporter.write_line(f"[{verdict}] {label}")
    for note in NOTES:
        terminalreporter.write_line(f"       {note}")
