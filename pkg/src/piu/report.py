"""Run reports shared by the learners and the CLI."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field


@dataclass
class RunReport:
    algorithm: str
    params: dict = field(default_factory=dict)
    iterations: list = field(default_factory=list)
    break_reason: str | None = None
    error_estimate: float | None = None
    error_halfwidth: float | None = None
    self_check: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def note(self, msg: str) -> None:
        self.notes.append(msg)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {
            "algorithm": d["algorithm"],
            "params": d["params"],
            "iterations": d["iterations"],
            "breakReason": d["break_reason"],
            "errorEstimate": d["error_estimate"],
            "errorHalfWidth": d["error_halfwidth"],
            "selfCheck": d["self_check"],
            "notes": d["notes"],
        }

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), indent=2, sort_keys=False)


def _clean(obj):
    # JSON has no NaN/inf; write them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj
