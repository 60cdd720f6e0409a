"""Data Type Registry: registration, resolution, and instance validation.

Evidence in a reborn article points at a registered data type (e.g.
"Regression Analysis") by PID.  The registry stores each type's schema —
which constituents an analysis of that type must carry — and checks concrete
evidence against it.  A built-in seed covers the ten standard analysis types.
"""
from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import DuplicatePid, NotFound
from .model import (
    ROLE_GROUPING_VARIABLE,
    ROLE_INDEPENDENT_VARIABLE,
    ROLE_TARGET_VARIABLE,
    Evidence,
    Pid,
    ValidationReport,
    Violation,
)

KIND_PROCEDURE = "procedure"
KIND_DATA_ITEM_IN = "data_item_in"
KIND_DATA_ITEM_OUT = "data_item_out"
KIND_COMPONENT = "component"
KIND_SCALAR = "scalar"

_KINDS = (KIND_PROCEDURE, KIND_DATA_ITEM_IN, KIND_DATA_ITEM_OUT, KIND_COMPONENT, KIND_SCALAR)

MULTIPLICITY_ONE = "one"
MULTIPLICITY_MANY = "many"

_SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class SchemaProperty:
    name: str
    kind: str
    required: bool = True
    multiplicity: str = MULTIPLICITY_MANY

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("schema property name must be non-empty")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown schema property kind {self.kind!r}")
        if self.multiplicity not in (MULTIPLICITY_ONE, MULTIPLICITY_MANY):
            raise ValueError(f"unknown multiplicity {self.multiplicity!r}")


@dataclass(frozen=True)
class DataTypeDefinition:
    pid: Pid
    name: str
    definition: str
    schema: tuple[SchemaProperty, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("data type name must be non-empty")
        object.__setattr__(self, "schema", tuple(self.schema))
        names = [p.name for p in self.schema]
        if len(names) != len(set(names)):
            raise ValueError(f"schema property names must be unique, got {names}")


# Schema seeds for the ten standard types.  Every analysis carries an executed
# procedure and at least one input and one output matrix; the four types whose
# result is a relationship between variables additionally name a target
# variable among their components.
_BASE_SCHEMA = (
    SchemaProperty("procedure", KIND_PROCEDURE, required=True, multiplicity=MULTIPLICITY_ONE),
    SchemaProperty("inputs", KIND_DATA_ITEM_IN, required=True, multiplicity=MULTIPLICITY_MANY),
    SchemaProperty("outputs", KIND_DATA_ITEM_OUT, required=True, multiplicity=MULTIPLICITY_MANY),
)
_TARGET_SCHEMA = _BASE_SCHEMA + (
    SchemaProperty(
        ROLE_TARGET_VARIABLE, KIND_COMPONENT, required=True, multiplicity=MULTIPLICITY_MANY
    ),
)
_TARGET_TYPES = frozenset(
    {"Regression Analysis", "Multilevel Analysis", "Group Comparison", "Correlation Analysis"}
)


class DataTypeRegistry:
    """In-memory registry with snapshot persistence.

    Reads are lock-free over immutable definitions; writes take a lock and
    replace the internal mapping so concurrent readers never see a partial
    registration.
    """

    def __init__(self) -> None:
        self._types: dict[str, DataTypeDefinition] = {}
        self._lock = threading.Lock()

    def register(self, definition: DataTypeDefinition) -> Pid:
        with self._lock:
            key = definition.pid.value
            if key in self._types:
                raise DuplicatePid(f"data type {key} already registered", pid=key)
            updated = dict(self._types)
            updated[key] = definition
            self._types = updated
        return definition.pid

    def resolve(self, pid: Pid) -> DataTypeDefinition:
        try:
            return self._types[pid.value]
        except KeyError:
            raise NotFound(f"data type {pid} is not registered", pid=pid.value) from None

    def contains(self, pid: Pid) -> bool:
        return pid.value in self._types

    def list_types(self) -> list[DataTypeDefinition]:
        return sorted(self._types.values(), key=lambda d: d.name)

    def __len__(self) -> int:
        return len(self._types)

    def validate_instance(self, evidence: Evidence, pid: Pid) -> ValidationReport:
        """Check ``evidence`` against the schema registered under ``pid``.

        Required properties are checked per analysis part: each part must
        satisfy every required PROCEDURE / DATA_ITEM_IN / DATA_ITEM_OUT /
        COMPONENT property.  Violation codes are ``MISSING:<property>`` (and
        ``EXCESS:<property>`` when a multiplicity-one property is repeated).
        """
        definition = self.resolve(pid)
        violations: list[Violation] = []
        for j, part in enumerate(evidence.parts):
            where = f"parts[{j}]"
            for prop in definition.schema:
                if prop.kind == KIND_SCALAR:
                    continue  # scalar properties carry no evidence binding
                count = _property_count(part, prop)
                if prop.required and count == 0:
                    violations.append(
                        Violation(
                            f"MISSING:{prop.name}",
                            where,
                            f"analysis part lacks required {prop.name}",
                        )
                    )
                elif prop.multiplicity == MULTIPLICITY_ONE and count > 1:
                    violations.append(
                        Violation(
                            f"EXCESS:{prop.name}",
                            where,
                            f"analysis part has {count} values for single-valued {prop.name}",
                        )
                    )
        return ValidationReport(tuple(violations))

    # -- persistence ----------------------------------------------------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        payload = {
            "version": _SNAPSHOT_VERSION,
            "types": [_definition_to_json(d) for d in self.list_types()],
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: str | Path) -> "DataTypeRegistry":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        registry = cls()
        for entry in payload["types"]:
            registry.register(_definition_from_json(entry))
        return registry


def _property_count(part, prop: SchemaProperty) -> int:
    if prop.kind == KIND_PROCEDURE:
        return 0 if part.procedure is None else 1
    if prop.kind == KIND_DATA_ITEM_IN:
        return len(part.inputs)
    if prop.kind == KIND_DATA_ITEM_OUT:
        return len(part.outputs)
    if prop.kind == KIND_COMPONENT:
        # A property named after a known role counts only components playing
        # that role; any other name counts all components.
        if prop.name in (ROLE_TARGET_VARIABLE, ROLE_INDEPENDENT_VARIABLE, ROLE_GROUPING_VARIABLE):
            return sum(1 for c in part.components if c.role == prop.name)
        return len(part.components)
    return 0


def _definition_to_json(definition: DataTypeDefinition) -> dict:
    return {
        "pid": definition.pid.value,
        "name": definition.name,
        "definition": definition.definition,
        "schema": [
            {
                "name": p.name,
                "kind": p.kind,
                "required": p.required,
                "multiplicity": p.multiplicity,
            }
            for p in definition.schema
        ],
    }


def _definition_from_json(entry: dict) -> DataTypeDefinition:
    return DataTypeDefinition(
        pid=Pid(entry["pid"]),
        name=entry["name"],
        definition=entry["definition"],
        schema=tuple(
            SchemaProperty(
                name=p["name"],
                kind=p["kind"],
                required=bool(p["required"]),
                multiplicity=p["multiplicity"],
            )
            for p in entry["schema"]
        ),
    )


def seed_registry() -> DataTypeRegistry:
    """Build a registry holding exactly the ten standard analysis types."""
    registry = DataTypeRegistry()
    seed = resources.files("reborn.data").joinpath("datatypes.tsv").read_text("utf-8")
    for line in seed.splitlines():
        if not line.strip():
            continue
        pid, name, definition = line.split("\t")
        schema = _TARGET_SCHEMA if name in _TARGET_TYPES else _BASE_SCHEMA
        registry.register(DataTypeDefinition(Pid(pid), name, definition, schema))
    return registry
