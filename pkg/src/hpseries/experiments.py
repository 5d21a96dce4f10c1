"""Sweeps and certificates realizing the orthogonality limits numerically.

Weight sweeps hold the level fixed and grow a parallel weight; level sweeps
hold the weight fixed and grow the level norm; in both the extracted
coefficients at the series index nu and at a second index mu should drift
toward the Kronecker delta.  The limits come with no rates, so assertions
are endpoint improvement plus a configurable deviation threshold at the
largest parameter.

Certificates report that the extracted nu-th coefficient is larger than a
safety factor times the combined (heuristic) error estimate; this is
numerical evidence for non-vanishing of the series, not a rigorous proof.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .fourier import (
    CoefficientEstimate,
    PoincareEvaluand,
    SamplingDomain,
    extract_many,
)
from .hpoincare import (
    GammaInfConvention,
    PoincareSpec,
    TruncationLimitExceeded,
    TruncationPolicy,
    Weight,
)
from .qfield import DualIndex, IdealHNF, RealQuadraticField


class SweepAxis(enum.Enum):
    WEIGHT = "weight"
    LEVEL = "level"


class Verdict(enum.Enum):
    NONZERO_CERTIFIED = "NonzeroCertified"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class TrendThresholds:
    """Empirical finite-sample surrogates for the qualitative limits."""

    final_deviation: float = 0.05
    max_component_error: float = 1e-3


@dataclass(frozen=True)
class SweepRow:
    param: int
    p_nu: CoefficientEstimate | None
    p_mu: CoefficientEstimate | None
    failed: bool = False


@dataclass(frozen=True)
class SweepReport:
    axis: SweepAxis
    rows: tuple[SweepRow, ...]
    spec_snapshot: dict

    def ok_rows(self) -> list[SweepRow]:
        return [r for r in self.rows if not r.failed]

    def endpoint_improvement(self) -> tuple[bool, bool]:
        """(nu-column improved, mu-column improved) from first to last row."""
        rows = self.ok_rows()
        if len(rows) < 2:
            return (True, True)
        first, last = rows[0], rows[-1]
        return (abs(last.p_nu.value - 1) <= abs(first.p_nu.value - 1),
                abs(last.p_mu.value) <= abs(first.p_mu.value))

    def final_deviations(self) -> tuple[float, float]:
        last = self.ok_rows()[-1]
        return (abs(last.p_nu.value - 1), abs(last.p_mu.value))

    def monotone_report(self) -> tuple[bool, bool]:
        """Strict monotonicity across all rows (reported, not asserted)."""
        rows = self.ok_rows()
        nu_dev = [abs(r.p_nu.value - 1) for r in rows]
        mu_dev = [abs(r.p_mu.value) for r in rows]
        return (all(a > b for a, b in zip(nu_dev, nu_dev[1:])),
                all(a > b for a, b in zip(mu_dev, mu_dev[1:])))


@dataclass(frozen=True)
class Certificate:
    spec_snapshot: dict
    coefficient: CoefficientEstimate
    total_error: float
    verdict: Verdict
    safety_factor: float


def _extract_pair(spec: PoincareSpec, nu: DualIndex, mu: DualIndex,
                  domain: SamplingDomain, policy: TruncationPolicy):
    evaluand = PoincareEvaluand(spec, policy)
    return extract_many(evaluand, [nu, mu], domain)


def sweep_weight(field: RealQuadraticField, nu: DualIndex, mu: DualIndex,
                 level: IdealHNF, k_list: list[int], domain: SamplingDomain,
                 policy: TruncationPolicy,
                 convention: GammaInfConvention = GammaInfConvention.UNIT_EXTENDED
                 ) -> SweepReport:
    """One row per parallel weight k, ascending."""
    if sorted(k_list) != list(k_list):
        raise ValueError("k_list must be ascending")
    rows = []
    snapshot = None
    for k in k_list:
        spec = PoincareSpec(field=field, weight=Weight(k, k), nu=nu,
                            level=level, convention=convention)
        if snapshot is None:
            snapshot = {kk: v for kk, v in spec.snapshot().items()
                        if kk != "weight"}
        try:
            est_nu, est_mu = _extract_pair(spec, nu, mu, domain, policy)
            rows.append(SweepRow(param=k, p_nu=est_nu, p_mu=est_mu))
        except TruncationLimitExceeded:
            rows.append(SweepRow(param=k, p_nu=None, p_mu=None, failed=True))
    return SweepReport(axis=SweepAxis.WEIGHT, rows=tuple(rows),
                       spec_snapshot=snapshot or {})


def sweep_level(field: RealQuadraticField, nu: DualIndex, mu: DualIndex,
                weight: Weight, level_list: list[IdealHNF],
                domain: SamplingDomain, policy: TruncationPolicy,
                convention: GammaInfConvention = GammaInfConvention.UNIT_EXTENDED
                ) -> SweepReport:
    """One row per level ideal, ascending norm; param is N(I)."""
    levels = sorted(level_list, key=lambda ideal: ideal.norm)
    rows = []
    snapshot = None
    for level in levels:
        spec = PoincareSpec(field=field, weight=weight, nu=nu, level=level,
                            convention=convention)
        if snapshot is None:
            snapshot = {kk: v for kk, v in spec.snapshot().items()
                        if kk != "level_hnf" and kk != "level_norm"}
        try:
            est_nu, est_mu = _extract_pair(spec, nu, mu, domain, policy)
            rows.append(SweepRow(param=level.norm, p_nu=est_nu, p_mu=est_mu))
        except TruncationLimitExceeded:
            rows.append(SweepRow(param=level.norm, p_nu=None, p_mu=None,
                                 failed=True))
    return SweepReport(axis=SweepAxis.LEVEL, rows=tuple(rows),
                       spec_snapshot=snapshot or {})


def certify_nonvanishing(spec: PoincareSpec, domain: SamplingDomain,
                         policy: TruncationPolicy,
                         safety_factor: float = 10.0) -> Certificate:
    """Heuristic non-vanishing certificate from the nu-th coefficient.

    NonzeroCertified means |p(nu)| exceeds safety_factor times the summed
    quadrature and truncation estimates; the estimates are not rigorous
    bounds, so the verdict is labeled evidence, not proof.
    """
    evaluand = PoincareEvaluand(spec, policy)
    est = extract_many(evaluand, [spec.nu], domain)[0]
    total = est.quad_error + est.trunc_error
    verdict = (Verdict.NONZERO_CERTIFIED
               if abs(est.value) > safety_factor * total
               else Verdict.INCONCLUSIVE)
    return Certificate(spec_snapshot=spec.snapshot(), coefficient=est,
                       total_error=total, verdict=verdict,
                       safety_factor=safety_factor)


# -- serialization -----------------------------------------------------------

CSV_HEADER = "axis,param,re_p_nu,im_p_nu,err_p_nu,re_p_mu,im_p_mu,err_p_mu"


def sweep_to_csv(report: SweepReport, config_lines: list[str] | None = None) -> str:
    lines = [f"# {line}" for line in (config_lines or [])]
    lines.append(CSV_HEADER)
    for row in report.rows:
        if row.failed:
            lines.append(f"{report.axis.value},{row.param},"
                         "nan,nan,nan,nan,nan,nan")
            continue
        lines.append(
            f"{report.axis.value},{row.param},"
            f"{row.p_nu.value.real!r},{row.p_nu.value.imag!r},"
            f"{row.p_nu.total_error!r},"
            f"{row.p_mu.value.real!r},{row.p_mu.value.imag!r},"
            f"{row.p_mu.total_error!r}")
    return "\n".join(lines) + "\n"


def sweep_to_json(report: SweepReport, config: dict | None = None) -> str:
    doc = {
        "axis": report.axis.value,
        "spec": report.spec_snapshot,
        "config": config or {},
        "rows": [
            {
                "param": row.param,
                "failed": row.failed,
                "p_nu": None if row.failed else {
                    "re": row.p_nu.value.real, "im": row.p_nu.value.imag,
                    "quad_error": row.p_nu.quad_error,
                    "trunc_error": row.p_nu.trunc_error,
                },
                "p_mu": None if row.failed else {
                    "re": row.p_mu.value.real, "im": row.p_mu.value.imag,
                    "quad_error": row.p_mu.quad_error,
                    "trunc_error": row.p_mu.trunc_error,
                },
            }
            for row in report.rows
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def certificate_to_json(cert: Certificate, config: dict | None = None) -> str:
    doc = {
        "spec": cert.spec_snapshot,
        "config": config or {},
        "coefficient": {
            "re": cert.coefficient.value.real,
            "im": cert.coefficient.value.imag,
            "quad_error": cert.coefficient.quad_error,
            "trunc_error": cert.coefficient.trunc_error,
        },
        "total_error": cert.total_error,
        "safety_factor": cert.safety_factor,
        "verdict": cert.verdict.value,
        "note": "heuristic certificate: error components are estimates, "
                "not rigorous bounds",
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
