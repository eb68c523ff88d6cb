"""Line-delimited shadow-record files (one JSON object per line, append-safe)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .circuits import CircuitLayer, MeasurementEvent, ShadowRecord, SHADOW_FORMAT_VERSION
from .clifford import CliffordGate2
from .paulis import SignedPauli


class ShadowParseError(Exception):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def _layer_to_obj(layer: CircuitLayer) -> dict:
    if layer.kind == "measurement":
        return {
            "kind": "measurement",
            "events": [
                {"qubit": ev.qubit, "basis": ev.basis, "outcome": ev.outcome}
                for ev in layer.events
            ],
        }
    return {
        "kind": "unitary",
        "parity": layer.parity,
        "gates": [
            {"bond": a, "images": gate.image_labels()}
            for a, gate in sorted(layer.gates.items())
        ],
    }


def record_to_json(record: ShadowRecord) -> str:
    obj = {
        "version": SHADOW_FORMAT_VERSION,
        "n_qubits": record.n_qubits,
        "p": record.p,
        "master_seed": record.master_seed,
        "shot_index": record.shot_index,
        "initial_state_label": record.initial_state_label,
        "layers": [_layer_to_obj(layer) for layer in record.layers],
    }
    return json.dumps(obj, separators=(",", ":"))


def _layer_from_obj(obj: dict) -> CircuitLayer:
    kind = obj["kind"]
    if kind == "measurement":
        return CircuitLayer(
            kind="measurement",
            events=[
                MeasurementEvent(ev["qubit"], ev["basis"], ev["outcome"])
                for ev in obj["events"]
            ],
        )
    if kind == "unitary":
        gates = {
            g["bond"]: CliffordGate2(
                tuple(SignedPauli.from_label(lab) for lab in g["images"])
            )
            for g in obj["gates"]
        }
        return CircuitLayer(kind="unitary", parity=obj["parity"], gates=gates)
    raise ValueError(f"unknown layer kind {kind!r}")


def record_from_json(line: str, line_number: int = 0) -> ShadowRecord:
    try:
        obj = json.loads(line)
        version = obj["version"]
        if version != SHADOW_FORMAT_VERSION:
            raise ValueError(f"unsupported format version {version}")
        return ShadowRecord(
            n_qubits=obj["n_qubits"],
            p=obj["p"],
            master_seed=obj["master_seed"],
            shot_index=obj["shot_index"],
            initial_state_label=obj["initial_state_label"],
            layers=[_layer_from_obj(layer) for layer in obj["layers"]],
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ShadowParseError(str(exc), line_number) from exc


def write_shadows(path, records: Iterable[ShadowRecord], append: bool = False) -> int:
    """Write records one per line; returns the number written."""
    mode = "a" if append else "w"
    count = 0
    with open(path, mode, encoding="ascii") as fh:
        for record in records:
            fh.write(record_to_json(record))
            fh.write("\n")
            count += 1
    return count


def iter_shadows(path) -> Iterator[ShadowRecord]:
    """Yield records lazily; malformed lines raise ShadowParseError."""
    with open(path, "r", encoding="ascii") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            yield record_from_json(line, line_number)


def read_shadows(path) -> list[ShadowRecord]:
    return list(iter_shadows(Path(path)))
