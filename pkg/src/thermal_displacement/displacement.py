"""Expected-vs-actual emissions displacement from paired regressions.

With ``ln CO2 = ln EI + ln G``, the emissions elasticity of a renewable
resource is ``beta_em = beta_ei + beta_gen``. If thermal generation fell 1:1
with no change in intensity, emissions would fall by ``beta_gen``; the
realised share of that reduction is ``beta_em / (beta_em - beta_ei)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConsistencyError, DomainError
from .fe import FitResult, check_pair

RESOURCES = {"Solar": "S", "Wind": "W"}

INDEPENDENCE_NOTE = (
    "interval from first-order error propagation assuming independent "
    "emissions and intensity estimates; both fits share rows, so this is approximate"
)


@dataclass
class DisplacementReport:
    region: str
    resource: str
    beta_emissions: float
    beta_intensity: float
    fraction: float
    implied_generation_response: float
    spec_id: str | None = None
    se_emissions: float | None = None
    se_intensity: float | None = None
    fraction_se: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    note: str | None = None

    @property
    def key(self) -> tuple:
        return (self.region, self.resource, self.spec_id)

    def to_dict(self) -> dict:
        return asdict(self)


def displacement_fraction(
    beta_emissions: float,
    beta_intensity: float,
    region: str = "",
    resource: str = "Solar",
) -> DisplacementReport:
    """Fraction of the 1:1 expected emissions reduction actually achieved.

    Parameters
    ----------
    beta_emissions : float
        Resource coefficient from the emissions regression.
    beta_intensity : float
        Resource coefficient from the intensity regression.

    Returns
    -------
    DisplacementReport
        ``fraction = be / (be - bi)`` and the implied thermal-generation
        elasticity ``be - bi``.

    Raises
    ------
    DomainError
        If the two coefficients are equal (zero denominator) or not finite.

    Examples
    --------
    >>> round(displacement_fraction(-0.20, 0.05).fraction, 12)
    0.8
    """
    be, bi = float(beta_emissions), float(beta_intensity)
    if not (math.isfinite(be) and math.isfinite(bi)):
        raise DomainError(f"coefficients must be finite, got {be}, {bi}")
    if resource not in RESOURCES:
        raise DomainError(f"resource must be one of {sorted(RESOURCES)}, got {resource!r}")
    denom = be - bi
    if denom == 0.0:
        raise DomainError(f"displacement fraction undefined: emissions and intensity coefficients are equal ({be})")
    return DisplacementReport(region, resource, be, bi, be / denom, denom)


def _se(fit: FitResult, reg: str) -> float | None:
    v = fit.std_errors.get(reg) if fit.std_errors else None
    return None if v is None or math.isnan(v) else float(v)


def displacement_report(
    emissions_fit: FitResult,
    intensity_fit: FitResult,
    resource: str,
    z: float = 1.959963984540054,
) -> DisplacementReport:
    """Displacement fraction for one resource from an emissions/intensity fit pair.

    The gradient of ``f = be / (be - bi)`` is ``(-bi, be) / (be - bi)**2``;
    the standard error combines the two coefficient SEs as if independent.

    Raises
    ------
    ConsistencyError
        If the fits differ in specification, region or row count, or have the
        wrong dependent variables.
    """
    if emissions_fit.dependent != "emissions":
        raise ConsistencyError(f"first fit must have dependent 'emissions', got {emissions_fit.dependent!r}")
    if intensity_fit.dependent != "intensity":
        raise ConsistencyError(f"second fit must have dependent 'intensity', got {intensity_fit.dependent!r}")
    check_pair(emissions_fit, intensity_fit)
    if resource not in RESOURCES:
        raise DomainError(f"resource must be one of {sorted(RESOURCES)}, got {resource!r}")
    reg = RESOURCES[resource]
    be = emissions_fit.coefficients.get(reg)
    bi = intensity_fit.coefficients.get(reg)
    if be is None or bi is None or math.isnan(be) or math.isnan(bi):
        raise ConsistencyError(f"fits lack a {resource} coefficient ({reg})")
    rep = displacement_fraction(be, bi, emissions_fit.region, resource)
    rep.spec_id = emissions_fit.spec_id
    se_e, se_i = _se(emissions_fit, reg), _se(intensity_fit, reg)
    rep.se_emissions, rep.se_intensity = se_e, se_i
    if se_e is not None and se_i is not None:
        d2 = (be - bi) ** 2
        rep.fraction_se = math.hypot(bi * se_e, be * se_i) / d2
        rep.ci_low = rep.fraction - z * rep.fraction_se
        rep.ci_high = rep.fraction + z * rep.fraction_se
        rep.note = INDEPENDENCE_NOTE
    return rep


def displacement_reports(emissions_fit: FitResult, intensity_fit: FitResult) -> list[DisplacementReport]:
    """Both resources, skipping any the specification does not carry."""
    out = []
    for resource, reg in RESOURCES.items():
        be = emissions_fit.coefficients.get(reg)
        if be is None or (isinstance(be, float) and math.isnan(be)):
            continue
        out.append(displacement_report(emissions_fit, intensity_fit, resource))
    if not out:
        check_pair(emissions_fit, intensity_fit)
    return out
