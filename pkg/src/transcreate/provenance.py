"""Per-job provenance: every backend invocation is recorded as one call entry."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BackendCall:
    role: str
    input_digest: str
    output_digest: str  # empty string when the attempt produced no output
    wall_time: float
    attempt: int

    def __post_init__(self) -> None:
        if self.attempt < 1:
            raise ValueError(f"attempt must be >= 1, got {self.attempt}")
        if self.wall_time < 0:
            raise ValueError(f"wall_time must be >= 0, got {self.wall_time}")

    def to_json_dict(self) -> dict:
        return {
            "role": self.role,
            "input_digest": self.input_digest,
            "output_digest": self.output_digest,
            "wall_time": self.wall_time,
            "attempt": self.attempt,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "BackendCall":
        return cls(
            role=d["role"],
            input_digest=d["input_digest"],
            output_digest=d["output_digest"],
            wall_time=d["wall_time"],
            attempt=d["attempt"],
        )


class Trace:
    """Append-only call log for one pipeline job. Never shared across jobs."""

    def __init__(self) -> None:
        self._calls: list[BackendCall] = []

    def record(self, call: BackendCall) -> None:
        self._calls.append(call)

    @property
    def calls(self) -> tuple[BackendCall, ...]:
        return tuple(self._calls)

    def roles(self) -> list[str]:
        """Role sequence of successful calls (the stage sequence)."""
        return [c.role for c in self._calls if c.output_digest]

    def attempted_roles(self) -> list[str]:
        """Role sequence including failed attempts."""
        return [c.role for c in self._calls]

    def __len__(self) -> int:
        return len(self._calls)

    def to_json_list(self) -> list[dict]:
        return [c.to_json_dict() for c in self._calls]
