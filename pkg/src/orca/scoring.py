"""Per-threat score aggregation: averaged BSM, severity bands, risk product."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import List, Optional

from orca.extraction import ExtractionRow

BAND_HIGH = "High"
BAND_MEDIUM = "Medium"
BAND_LOW = "Low"

# Band boundaries; the upper class owns its lower bound.
_HIGH_FLOOR = 6.67
_MEDIUM_FLOOR = 3.34

_RISK_LEVELS = {BAND_LOW: 1, BAND_MEDIUM: 2, BAND_HIGH: 3}


def round_half_up(value: float, digits: int = 2) -> float:
    """Decimal half-up rounding for reported scores."""
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(str(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def band(score: float) -> str:
    """Severity band of a score: High >= 6.67 > Medium >= 3.34 > Low."""
    if not 0.0 <= score <= 10.0:
        raise ValueError(f"score {score} outside [0, 10]")
    if score >= _HIGH_FLOOR:
        return BAND_HIGH
    if score >= _MEDIUM_FLOOR:
        return BAND_MEDIUM
    return BAND_LOW


@dataclass
class ThreatScore:
    """Averaged Base Score Metrics for one threat.

    Averages stay unrounded internally; rounded_* accessors apply the
    2-decimal half-up reporting convention. A threat with no rows is
    unscoreable and carries no averages at all.
    """

    threat_id: str
    cvss_version: str
    cve_count: int = 0
    avg_impact: Optional[float] = None
    avg_exploitability: Optional[float] = None
    avg_base: Optional[float] = None
    band_impact: Optional[str] = None
    band_exploitability: Optional[str] = None
    band_base: Optional[str] = None

    @property
    def scoreable(self) -> bool:
        return self.cve_count > 0

    def rounded(self, metric: str) -> Optional[float]:
        value = getattr(self, f"avg_{metric}")
        return None if value is None else round_half_up(value)

    def metric_band(self, metric: str) -> Optional[str]:
        return getattr(self, f"band_{metric}")


def score_threat(
    rows: List[ExtractionRow], version: str, threat_id: str = ""
) -> ThreatScore:
    """Arithmetic means over all extraction rows of one threat.

    Duplicate rows (omega=false) intentionally weight repeated CVEs more
    heavily. An empty row list yields an unscoreable score, not zeros;
    pass threat_id explicitly for that case.
    """
    if not rows:
        return ThreatScore(threat_id=threat_id, cvss_version=version)
    threat_ids = {row.threat_id for row in rows}
    if len(threat_ids) != 1:
        raise ValueError(f"rows span multiple threats: {sorted(threat_ids)}")

    count = len(rows)
    avg_impact = sum(row.impact for row in rows) / count
    avg_exploitability = sum(row.exploitability for row in rows) / count
    avg_base = sum(row.base for row in rows) / count
    return ThreatScore(
        threat_id=threat_ids.pop(),
        cvss_version=version,
        cve_count=count,
        avg_impact=avg_impact,
        avg_exploitability=avg_exploitability,
        avg_base=avg_base,
        band_impact=band(avg_impact),
        band_exploitability=band(avg_exploitability),
        band_base=band(avg_base),
    )


@dataclass(frozen=True)
class QualitativeRisk:
    """Severity x likelihood product under Low=1 / Medium=2 / High=3."""

    severity: str
    likelihood: str
    risk: int


def qualitative_risk(severity: str, likelihood: str) -> QualitativeRisk:
    """The manual-assessment comparator carried alongside averaged scores."""
    for level in (severity, likelihood):
        if level not in _RISK_LEVELS:
            raise ValueError(f"unknown qualitative level {level!r}")
    return QualitativeRisk(
        severity=severity,
        likelihood=likelihood,
        risk=_RISK_LEVELS[severity] * _RISK_LEVELS[likelihood],
    )
