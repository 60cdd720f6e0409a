from __future__ import annotations

import copy
import io
import json
import zipfile
from urllib.parse import quote

import httpx
import pytest

from reborn.errors import (
    MalformedJson,
    MissingGraph,
    MissingRoot,
    NotDeposited,
    ProfileViolation,
    SourceUnreachable,
)
from reborn.model import Pid, TableSource, UrlSource
from reborn.rocrate import (
    HttpRepositorySource,
    LocalDirectorySource,
    fetch_crate_bytes,
    harvest,
    parse_rocrate,
    serialize_rocrate,
    to_article,
)

from .conftest import make_article
from .fixtures.build_fixtures import (
    GENTSCH_DOI,
    GENTSCH_PID,
    MODEL_R,
    gentsch_crate_dict,
)


def crate_bytes(payload: dict) -> bytes:
    return json.dumps(payload).encode("utf-8")


# -- parse errors -------------------------------------------------------------


def test_parse_rejects_non_json():
    with pytest.raises(MalformedJson):
        parse_rocrate(b"this is not json")


def test_parse_rejects_non_utf8():
    with pytest.raises(MalformedJson):
        parse_rocrate(b"\xff\xfe{}")


def test_parse_rejects_non_object_top_level():
    with pytest.raises(MalformedJson):
        parse_rocrate(b"[1, 2, 3]")


def test_parse_rejects_foreign_context():
    payload = gentsch_crate_dict()
    payload["@context"] = "https://schema.org"
    with pytest.raises(MalformedJson):
        parse_rocrate(crate_bytes(payload))


def test_parse_accepts_list_context():
    payload = gentsch_crate_dict()
    payload["@context"] = ["https://w3id.org/ro/crate/1.1/context", {"x": "y"}]
    doc = parse_rocrate(crate_bytes(payload))
    assert doc.root.id == "./"


def test_parse_requires_graph():
    with pytest.raises(MissingGraph):
        parse_rocrate(b'{"@context": "https://w3id.org/ro/crate/1.1/context"}')
    with pytest.raises(MissingGraph):
        parse_rocrate(
            b'{"@context": "https://w3id.org/ro/crate/1.1/context", "@graph": {}}'
        )


def test_parse_requires_root_dataset():
    payload = gentsch_crate_dict()
    payload["@graph"] = [e for e in payload["@graph"] if e["@id"] != "./"]
    with pytest.raises(MissingRoot):
        parse_rocrate(crate_bytes(payload))


def test_parse_rejects_duplicate_ids():
    payload = gentsch_crate_dict()
    payload["@graph"].append(dict(payload["@graph"][-1]))
    with pytest.raises(ProfileViolation) as err:
        parse_rocrate(crate_bytes(payload))
    assert "duplicate" in str(err.value)


def test_parse_rejects_entity_without_type_or_id():
    payload = gentsch_crate_dict()
    payload["@graph"].append({"@id": "#untyped"})
    with pytest.raises(ProfileViolation):
        parse_rocrate(crate_bytes(payload))
    payload = gentsch_crate_dict()
    payload["@graph"].append({"@type": "Thing"})
    with pytest.raises(ProfileViolation):
        parse_rocrate(crate_bytes(payload))


def test_entity_lookup_rejects_dangling_reference():
    payload = gentsch_crate_dict()
    doc = parse_rocrate(crate_bytes(payload))
    with pytest.raises(ProfileViolation):
        doc.entity("#nope")


# -- gentsch fixture mapping ---------------------------------------------------


@pytest.fixture(scope="module")
def gentsch_article(gentsch_bytes):
    return to_article(parse_rocrate(gentsch_bytes))


def test_article_header_fields(gentsch_article):
    a = gentsch_article
    assert a.pid == Pid(GENTSCH_PID)
    assert a.original_doi == Pid(GENTSCH_DOI)
    assert a.title.startswith("Cover crops shape the soil microbial community")
    assert "long-term field trial" in a.abstract_text
    assert a.journal == "SOIL"
    assert a.publisher == "Copernicus Publications"
    assert [p.name for p in a.authors] == ["Norman Gentsch", "Jens Boy"]
    assert a.authors[0].identifier == Pid("21.11152/0000-0001-5144-5767")
    assert a.authors[1].identifier is None


def test_statement_pids_explicit_and_derived(gentsch_article):
    pids = [s.pid.value for s in gentsch_article.statements]
    assert pids == [f"{GENTSCH_PID}.s1", f"{GENTSCH_PID}.s2"]
    for s in gentsch_article.statements:
        assert s.article_pid == gentsch_article.pid


def test_first_statement_evidence(gentsch_article):
    s1 = gentsch_article.statements[0]
    assert s1.label == "Cover crops increase microbial biomass carbon in topsoil"
    assert [c.label for c in s1.concepts] == ["cover crops", "soil microbial biomass"]
    assert s1.concepts[0].id == "http://aims.fao.org/aos/agrovoc/c_16054"
    assert s1.concepts[0].description is not None
    assert s1.concepts[1].description is None

    ev = s1.evidence
    assert ev.data_type_pid == Pid("21.T11969/c6b413ba96ba477b5dca")
    assert ev.analysis_label == "Linear mixed-effects model of microbial biomass carbon"
    assert len(ev.parts) == 1

    part = ev.parts[0]
    assert part.procedure is not None
    assert (part.procedure.language, part.procedure.package, part.procedure.function_name) == (
        "r",
        "lme4",
        "lmer",
    )
    assert part.procedure.parameters == (
        ("formula", "mbc ~ treatment + (1 | block)"),
        ("REML", "true"),
    )
    assert [(c.role, c.variable_name) for c in part.components] == [
        ("target_variable", "microbial biomass carbon"),
        ("independent_variable", "cover crop treatment"),
        ("grouping_variable", "block"),
    ]
    assert part.components[0].unit == "µg C g⁻¹ soil"


def test_first_statement_data_items(gentsch_article):
    part = gentsch_article.statements[0].evidence.parts[0]
    (inp,) = part.inputs
    assert (inp.matrix_rows, inp.matrix_cols) == (6, 4)
    assert isinstance(inp.source, TableSource)
    assert inp.source.rows[0] == ("fallow", "1", "0-10", "412")
    assert [c.variable_name for c in inp.components] == ["treatment", "block", "depth", "mbc"]
    assert all(c.role == "column" for c in inp.components)

    (out,) = part.outputs
    assert out.figure is not None
    assert out.figure.file_name == "mbc-treatment-effects.png"
    assert out.figure.media_type == "image/png"
    assert out.figure.caption.startswith("Microbial biomass carbon")


def test_first_statement_code(gentsch_article):
    (code,) = gentsch_article.statements[0].evidence.source_code
    assert code.file_name == "model.R"
    assert code.language == "r"
    assert code.content == MODEL_R.encode("utf-8")


def test_second_statement_url_output_and_no_code(gentsch_article):
    s2 = gentsch_article.statements[1]
    assert s2.evidence.source_code == ()
    assert s2.evidence.data_type_pid == Pid("21.T11969/b9335ce2c99ed87735a6")
    part = s2.evidence.parts[0]
    assert part.procedure.package == "stats"
    assert part.procedure.function_name == "aov"
    (out,) = part.outputs
    assert out.source == UrlSource("https://doi.org/10.25835/weuhha72")
    assert (out.matrix_rows, out.matrix_cols) == (2, 5)


# -- mapping violations ----------------------------------------------------------


def test_broken_fixture_parses_but_does_not_map(broken_bytes):
    doc = parse_rocrate(broken_bytes)  # structurally a fine crate
    with pytest.raises(ProfileViolation) as err:
        to_article(doc)
    assert "label" in str(err.value)


def drop_property(payload: dict, entity_id: str, prop: str) -> dict:
    payload = copy.deepcopy(payload)
    for entity in payload["@graph"]:
        if entity["@id"] == entity_id:
            entity.pop(prop, None)
    return payload


@pytest.mark.parametrize(
    "entity_id,prop",
    [
        ("./", "identifier"),
        ("./", "originalPublication"),
        ("#stmt-mbc", "evidence"),
        ("#stmt-mbc-analysis", "dataType"),
        ("#stmt-mbc-input-1", "source"),
        ("#stmt-mbc-var-target", "variableName"),
        ("#stmt-mbc-output-figure", "fileName"),
    ],
)
def test_missing_required_property_is_a_profile_violation(entity_id, prop):
    payload = drop_property(gentsch_crate_dict(), entity_id, prop)
    with pytest.raises(ProfileViolation):
        to_article(parse_rocrate(crate_bytes(payload)))


def test_bad_base64_is_a_profile_violation():
    payload = gentsch_crate_dict()
    for entity in payload["@graph"]:
        if entity["@id"] == "#stmt-mbc-code-1":
            entity["contentBase64"] = "!!! not base64 !!!"
    with pytest.raises(ProfileViolation) as err:
        to_article(parse_rocrate(crate_bytes(payload)))
    assert "contentBase64" in str(err.value)


def test_malformed_article_pid_is_a_profile_violation():
    payload = gentsch_crate_dict()
    for entity in payload["@graph"]:
        if entity["@id"] == "./":
            entity["identifier"] = "no-solidus"
    with pytest.raises(ProfileViolation):
        to_article(parse_rocrate(crate_bytes(payload)))


def test_source_without_table_or_url_is_a_profile_violation():
    payload = gentsch_crate_dict()
    for entity in payload["@graph"]:
        if entity["@id"] == "#stmt-mbc-input-1":
            entity["source"] = {"blob": "x"}
    with pytest.raises(ProfileViolation):
        to_article(parse_rocrate(crate_bytes(payload)))


# -- serialization ----------------------------------------------------------------


def test_round_trip_identity_on_gentsch(gentsch_article):
    data = serialize_rocrate(gentsch_article)
    assert to_article(parse_rocrate(data)) == gentsch_article


def test_round_trip_identity_on_synthetic_article():
    article = make_article(labels=["First finding", "Second finding", "Third finding"])
    data = serialize_rocrate(article)
    assert to_article(parse_rocrate(data)) == article


def test_serialization_is_deterministic(gentsch_article):
    assert serialize_rocrate(gentsch_article) == serialize_rocrate(gentsch_article)


def test_serialized_graph_shape(gentsch_article):
    payload = json.loads(serialize_rocrate(gentsch_article))
    graph = payload["@graph"]
    ids = [e["@id"] for e in graph]
    assert len(ids) == len(set(ids))

    def types(entity) -> list[str]:
        raw = entity.get("@type")
        return raw if isinstance(raw, list) else [raw]

    statements = [e for e in graph if "Statement" in types(e)]
    assert len(statements) == len(gentsch_article.statements)
    root = next(e for e in graph if e["@id"] == "./")
    assert root["identifier"] == GENTSCH_PID


def test_fixture_bytes_round_trip_through_reserialization(gentsch_bytes):
    article = to_article(parse_rocrate(gentsch_bytes))
    again = to_article(parse_rocrate(serialize_rocrate(article)))
    assert again == article


# -- repository sources -------------------------------------------------------------


def deposit(root, doi: str, data: bytes) -> None:
    directory = root / quote(doi, safe="")
    directory.mkdir(parents=True)
    (directory / "ro-crate-metadata.json").write_bytes(data)


def test_local_directory_source(tmp_path, gentsch_bytes):
    deposit(tmp_path, GENTSCH_DOI, gentsch_bytes)
    source = LocalDirectorySource(tmp_path)
    assert source.fetch_by_doi(Pid(GENTSCH_DOI)) == gentsch_bytes
    with pytest.raises(NotDeposited):
        source.fetch_by_doi(Pid("10.5194/absent-doi"))


def test_harvest_is_idempotent(tmp_path, gentsch_bytes):
    deposit(tmp_path, GENTSCH_DOI, gentsch_bytes)
    source = LocalDirectorySource(tmp_path)
    first = harvest(Pid(GENTSCH_DOI), source)
    second = harvest(Pid(GENTSCH_DOI), source)
    assert first == second
    assert to_article(first).pid == Pid(GENTSCH_PID)


def http_source(handler) -> HttpRepositorySource:
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpRepositorySource("https://repo.example/crates", client=client)


def test_http_source_fetches_expected_url(gentsch_bytes):
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        return httpx.Response(200, content=gentsch_bytes)

    source = http_source(handler)
    assert source.fetch_by_doi(Pid(GENTSCH_DOI)) == gentsch_bytes
    assert seen["url"] == (
        "https://repo.example/crates/10.5194%2Fsoil-10-139-2024/ro-crate-metadata.json"
    )


def test_http_source_sends_bearer_token(gentsch_bytes):
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("Authorization")
        return httpx.Response(200, content=gentsch_bytes)

    client = httpx.Client(transport=httpx.MockTransport(handler))
    source = HttpRepositorySource(
        "https://repo.example", bearer_token="sesame", client=client
    )
    source.fetch_by_doi(Pid(GENTSCH_DOI))
    assert seen["auth"] == "Bearer sesame"


def test_http_source_maps_status_codes():
    with pytest.raises(NotDeposited):
        http_source(lambda r: httpx.Response(404)).fetch_by_doi(Pid("10.1/x"))
    with pytest.raises(SourceUnreachable):
        http_source(lambda r: httpx.Response(500)).fetch_by_doi(Pid("10.1/x"))


def test_http_source_maps_transport_errors():
    def handler(request):
        raise httpx.ConnectError("connection refused")

    with pytest.raises(SourceUnreachable):
        http_source(handler).fetch_by_doi(Pid("10.1/x"))


def test_fetch_crate_bytes_unwraps_zip(tmp_path, gentsch_bytes):
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        archive.writestr("crate/ro-crate-metadata.json", gentsch_bytes)

    class ZipSource:
        def fetch_by_doi(self, doi):
            return buffer.getvalue()

    assert fetch_crate_bytes(Pid(GENTSCH_DOI), ZipSource()) == gentsch_bytes
    assert to_article(harvest(Pid(GENTSCH_DOI), ZipSource())).pid == Pid(GENTSCH_PID)


def test_fetch_crate_bytes_rejects_zip_without_metadata():
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        archive.writestr("readme.txt", b"hello")

    class ZipSource:
        def fetch_by_doi(self, doi):
            return buffer.getvalue()

    with pytest.raises(MalformedJson):
        fetch_crate_bytes(Pid("10.1/x"), ZipSource())
