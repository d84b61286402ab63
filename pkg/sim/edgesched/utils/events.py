from __future__ import annotations

import json
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

EventName = Literal["arrival", "scheduled", "replanned", "completion", "failed"]


def _link_label(key: tuple[int, int]) -> str:
    return f"{key[0]}-{key[1]}"


@dataclass(slots=True)
class EventLog:
    """Replayable record of engine transitions, one JSON object per line.

    ``nodes`` maps node id to the memory delta of the transition, ``links``
    maps ``"u-v"`` to the bandwidth delta.
    """

    precision: int = 6
    entries: list[dict[str, Any]] = field(default_factory=list)

    def record(
        self,
        t: float,
        event: EventName,
        job: str,
        nodes: Mapping[int, float] | None = None,
        links: Mapping[tuple[int, int], float] | None = None,
    ) -> None:
        self.entries.append(
            {
                "t": round(t, self.precision),
                "event": event,
                "job": job,
                "nodes": {
                    str(node): round(delta, self.precision)
                    for node, delta in sorted((nodes or {}).items())
                },
                "links": {
                    _link_label(key): round(delta, self.precision)
                    for key, delta in sorted((links or {}).items())
                },
            }
        )

    def __iter__(self) -> Iterator[dict[str, Any]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def of(self, event: EventName) -> list[dict[str, Any]]:
        return [entry for entry in self.entries if entry["event"] == event]

    def dumps(self) -> str:
        return "".join(
            json.dumps(entry, sort_keys=True) + "\n" for entry in self.entries
        )

    def write(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        return path
