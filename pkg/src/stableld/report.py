"""Large-deviation report records and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .tails import NormingPlan

__all__ = ["LdReport", "CSV_COLUMNS", "error_budget", "write_csv", "write_json", "report_stem", "g_of"]

CSV_COLUMNS = ("alpha", "n", "N", "a_n", "p_hat", "ci_lo", "ci_hi", "prediction", "ratio", "components")


def g_of(n: int, N: float) -> float:
    """Window length ``g = max(N^1.1, 10 n N)``."""
    return max(N**1.1, 10.0 * n * N)


def error_budget(plan: NormingPlan, n: int, N: float, C_D: float, slack: float,
                 delta: float = 0.1) -> tuple[float, dict[str, float]]:
    """Error budget W(N, n) and its parts.

    ``C_D * D(N) + slack * n * p * ell0(N) * N^-alpha`` for alpha < 2; for
    alpha = 2 the D term is replaced by ``C_D * n log(N) N^-2``.
    """
    m = plan.model
    o_term = n * m.p * float(plan.ell0(N)) * N**-m.alpha
    if m.alpha == 2.0:
        d = n * math.log(N) * N**-2.0
    else:
        d = plan.D(N, delta)
    return C_D * d + slack * o_term, {"D": d, "o_term": o_term, "C_D": C_D, "slack": slack}


@dataclass
class LdReport:
    """Tail estimate, prediction, ratio and error budget for one experiment."""

    system: str
    observable: str
    alpha: float
    n: int
    N: float
    N_over_an: float
    a_n: float
    g: float
    p_hat: float
    ci_lo: float
    ci_hi: float
    hits: int
    samples: int
    prediction: float
    ratio: float
    budget: float
    budget_ok: bool
    components: dict[str, float] = field(default_factory=dict)
    seed: int = 0
    shards: int = 1
    backend: str = ""
    runtime: float = 0.0

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_hi - self.ci_lo)

    @property
    def discrepancy(self) -> float:
        return abs(self.p_hat - self.prediction)

    def csv_row(self) -> dict[str, str]:
        row = {k: repr(getattr(self, k)) if isinstance(getattr(self, k), float) else str(getattr(self, k))
               for k in CSV_COLUMNS if k != "components"}
        row["components"] = json.dumps(self.components, sort_keys=True)
        return row

    def to_dict(self) -> dict:
        d = asdict(self)
        d["budget_ok"] = bool(d["budget_ok"])
        return {k: (float(v) if isinstance(v, np.floating) else v) for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "LdReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def without_runtime(self) -> dict:
        d = self.to_dict()
        d.pop("runtime")
        return d


def report_stem(system: str, alpha: float, n: int, N_mult: float, seed: int) -> str:
    """File stem ``{system}_{alpha}_{n}_{Nmult}_{seed}``."""
    return f"{system}_{alpha:g}_{n}_{N_mult:g}_{seed}"


def write_csv(path: Path | str, reports: Iterable[LdReport]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in reports:
            w.writerow(r.csv_row())
    return path


def write_json(path: Path | str, payload) -> Path:
    path = Path(path)
    if isinstance(payload, LdReport):
        payload = payload.to_dict()
    elif isinstance(payload, list):
        payload = [p.to_dict() if isinstance(p, LdReport) else p for p in payload]
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o)}")
