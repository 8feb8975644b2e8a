"""Expansion cache: JSON files holding the exact A, B, D coefficient maps
plus a proof-log summary.  A loaded cache is never trusted blindly: the
constraint-vanishing invariant is re-verified before use, so a tampered or
stale file fails loudly.
"""

from __future__ import annotations

import json
import os
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .exact import LogConstant
from .nfsopt import CandidateExpansion, ExpansionResult, ProofLog, constraint_residual
from .pseries import LOG_RING, TruncatedBiSeries

ENGINE_VERSION = "nfsasym-0.1.0"
CACHE_DIR_ENV = "NFSASY_CACHE_DIR"


class CacheError(ValueError):
    pass


class CacheVerificationError(CacheError):
    pass


def cache_dir() -> Path:
    override = os.environ.get(CACHE_DIR_ENV)
    if override:
        return Path(override)
    return Path.home() / ".cache" / "nfsasym"


def cache_path(degree: int, directory: Optional[Path] = None) -> Path:
    return (directory or cache_dir()) / f"expansion_deg{degree}.json"


def _series_to_json(series: TruncatedBiSeries) -> dict:
    return {
        "order2": series.order2,
        "terms": {f"{dx},{dy}": c.to_string() for (dx, dy), c in sorted(series.terms.items())},
    }


def _series_from_json(data: dict) -> TruncatedBiSeries:
    terms = {}
    for key, text in data["terms"].items():
        dx, dy = (int(part) for part in key.split(","))
        terms[(dx, dy)] = LogConstant.parse(text)
    return TruncatedBiSeries(LOG_RING, None, terms, _doubled_order=int(data["order2"]))


def _proof_summary(log: ProofLog) -> list[dict]:
    return [
        {
            "target": [str(s.target[0]), str(s.target[1])],
            "pattern": s.pattern,
            "kappa_b": s.kappa_b.to_string() if s.kappa_b is not None else None,
            "kappa_d": s.kappa_d.to_string() if s.kappa_d is not None else None,
            "kappa_a": s.kappa_a.to_string(),
            "pinned_by": s.pinned_by,
        }
        for s in log.steps
    ]


def save_expansion(result: ExpansionResult, path: Optional[Path] = None) -> Path:
    cand = result.candidate
    if path is None:
        path = cache_path(cand.degA)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "engine": ENGINE_VERSION,
        "degree": cand.degA,
        "deg_b": cand.degB,
        "deg_d": str(Fraction(cand.degD)),
        "status": cand.status,
        "A": _series_to_json(cand.A),
        "B": _series_to_json(cand.B),
        "D": _series_to_json(cand.D),
        "proof_log": _proof_summary(result.proof_log),
        "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    path.write_text(json.dumps(payload, indent=1))
    return path


def load_expansion(path: Path, verify: bool = True) -> CandidateExpansion:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CacheError(f"cannot read expansion cache {path}: {exc}") from exc
    if payload.get("engine") != ENGINE_VERSION:
        raise CacheError(
            f"cache {path} written by {payload.get('engine')!r}, expected {ENGINE_VERSION!r}"
        )
    cand = CandidateExpansion(
        A=_series_from_json(payload["A"]),
        B=_series_from_json(payload["B"]),
        D=_series_from_json(payload["D"]),
        degA=int(payload["degree"]),
        degB=int(payload["deg_b"]),
        degD=Fraction(payload["deg_d"]),
        status=str(payload["status"]),
    )
    if verify:
        verify_expansion(cand, source=str(path))
    return cand


def verify_expansion(cand: CandidateExpansion, source: str = "cache") -> None:
    """Re-derive the constraint and demand every coefficient through the
    cached degree vanishes; rejects any tampered coefficient."""
    residual = constraint_residual(cand, order=cand.degA)
    if not residual.is_zero():
        bad = residual.sorted_exponents()[0]
        raise CacheVerificationError(
            f"{source}: constraint residual is nonzero at X^{Fraction(bad[0], 2)}"
            f" Y^{Fraction(bad[1], 2)}: {residual.terms[bad]}"
        )
