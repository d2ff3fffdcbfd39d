"""Coarsening-law and Arrhenius fitting plus the templated results narrative.

The coarsening fit is ordinary least squares of 1/N against t; its R^2 is
computed in the same 1/N regression space.  A series with no change in N
is reported as suppressed (rate constant zero, R^2 withheld) rather than
fitted.  The Arrhenius fit regresses ln(k) on 1/T and converts the slope
to an activation energy with the pinned Boltzmann constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .constants import BOLTZMANN_EV

ANOMALY_R2_THRESHOLD = 0.90


class FitError(ValueError):
    pass


def _ols(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope, intercept, and R^2 in the regression space."""
    n = len(x)
    sx = sum(x)
    sy = sum(y)
    sxx = sum(v * v for v in x)
    sxy = sum(a * b for a, b in zip(x, y))
    denom = n * sxx - sx * sx
    if denom == 0:
        raise FitError("degenerate abscissa: all x values identical")
    slope = (n * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / n
    mean_y = sy / n
    ss_tot = sum((v - mean_y) ** 2 for v in y)
    ss_res = sum((v - (slope * a + intercept)) ** 2 for a, v in zip(x, y))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return slope, intercept, r2


@dataclass(frozen=True)
class CoarseningFit:
    rate_constant: float          # slope of 1/N vs t
    initial_count: float          # N0 from the fit intercept
    r_squared: Optional[float]    # None when suppressed
    n_points: int
    suppressed: bool

    @property
    def anomaly(self) -> bool:
        return self.r_squared is not None and self.r_squared < ANOMALY_R2_THRESHOLD


@dataclass(frozen=True)
class ArrheniusFit:
    slope: float                  # K; equals -Q_fit / kB
    activation_energy: float      # Q_fit, eV
    prefactor: float              # k0
    r_squared: float


def fit_coarsening(times: Sequence[float], counts: Sequence[float]) -> CoarseningFit:
    """Fit 1/N(t) - 1/N0 = k t by least squares on the 1/N series."""
    if len(times) != len(counts):
        raise FitError("times and counts must have equal length")
    if len(times) < 3:
        raise FitError(f"need at least 3 points, got {len(times)}")
    if any(c <= 0 for c in counts):
        raise FitError("grain counts must be positive")
    if max(counts) - min(counts) == 0:
        return CoarseningFit(
            rate_constant=0.0,
            initial_count=counts[0],
            r_squared=None,
            n_points=len(times),
            suppressed=True,
        )
    slope, intercept, r2 = _ols(list(times), [1.0 / c for c in counts])
    return CoarseningFit(
        rate_constant=slope,
        initial_count=1.0 / intercept if intercept > 0 else float("nan"),
        r_squared=r2,
        n_points=len(times),
        suppressed=False,
    )


def fit_arrhenius(pairs: Sequence[tuple[float, float]]) -> ArrheniusFit:
    """Fit ln k = ln k0 - Q/(kB T) over (temperature, rate constant) pairs.

    Suppressed temperatures must be excluded by the caller; a nonpositive
    rate constant is a data error here, not a fit outcome.
    """
    if len(pairs) < 2:
        raise FitError(f"need at least 2 (T, k) pairs, got {len(pairs)}")
    for T, k in pairs:
        if k <= 0:
            raise FitError(f"rate constant must be > 0 for the log fit, got {k!r} at T={T!r}")
        if T <= 0:
            raise FitError(f"temperature must be > 0, got {T!r}")
    x = [1.0 / T for T, _ in pairs]
    y = [math.log(k) for _, k in pairs]
    slope, intercept, r2 = _ols(x, y)
    if len(pairs) == 2:
        r2 = 1.0
    return ArrheniusFit(
        slope=slope,
        activation_energy=-slope * BOLTZMANN_EV,
        prefactor=math.exp(intercept),
        r_squared=r2,
    )


def narrate(
    fit: CoarseningFit,
    temperature: Optional[float] = None,
    initial_count: Optional[float] = None,
    final_count: Optional[float] = None,
    duration: Optional[float] = None,
    arrhenius: Optional[ArrheniusFit] = None,
    input_activation_energy: Optional[float] = None,
) -> str:
    """Render the fixed interpretation template for one run or sweep.

    Covers adherence to the coarsening law, a physical reading of an
    anomalous fit, recovered-vs-specified activation energy when sweep
    context is present, and the comparison against parabolic coarsening
    theory.  Suppressed runs are attributed to Arrhenius suppression of
    boundary mobility rather than to numerics.
    """
    at_T = f" at {temperature:g} K" if temperature is not None else ""
    lines = []
    if fit.suppressed:
        lines.append(
            f"The grain count remained constant{at_T} over the simulated window."
        )
        lines.append(
            "The flat trajectory is attributable to Arrhenius suppression of grain "
            "boundary mobility at this temperature rather than a numerical artefact; "
            "no coarsening rate constant is reported."
        )
    else:
        if initial_count is not None and final_count is not None:
            drop = 100.0 * (initial_count - final_count) / initial_count
            window = f" over {duration:g} ns" if duration is not None else ""
            lines.append(
                f"The grain growth simulation{at_T} shows the grain count reducing "
                f"from {initial_count:g} to {final_count:g} ({drop:.1f}% reduction){window}."
            )
        r2 = fit.r_squared
        quality = (
            "an excellent fit" if r2 >= 0.99
            else "good adherence" if r2 >= ANOMALY_R2_THRESHOLD
            else "reasonable correlation"
        )
        lines.append(
            f"Linear regression of 1/N against time yields {quality} "
            f"(R^2 = {r2:.3f}) with a rate constant k = {fit.rate_constant:.4g} per ns, "
            "consistent with parabolic (Burke-Turnbull) coarsening kinetics in which "
            "the inverse grain count grows linearly in time."
        )
        if fit.anomaly:
            lines.append(
                f"The deviation from ideal linear behaviour (R^2 < {ANOMALY_R2_THRESHOLD:.2f}) "
                "likely reflects grain size distribution effects and topological "
                "constraints in a small-grain-count system, and is flagged as a "
                "kinetics anomaly."
            )
    if arrhenius is not None:
        lines.append(
            f"Across the temperature sweep the rate constants follow an Arrhenius law "
            f"with Q_fit = {arrhenius.activation_energy:.3f} eV "
            f"(R^2 = {arrhenius.r_squared:.3f})."
        )
        if input_activation_energy is not None:
            rel = abs(arrhenius.activation_energy - input_activation_energy) / input_activation_energy
            verdict = "consistent with" if rel <= 0.35 else "deviating from"
            lines.append(
                f"The recovered activation energy is {verdict} the specified input "
                f"Q = {input_activation_energy:g} eV "
                f"({100 * rel:.1f}% relative difference)."
            )
    return " ".join(lines)


def sweep_results_payload(
    per_case: dict[str, dict],
    arrhenius: Optional[ArrheniusFit],
    interpretation: str,
) -> dict:
    """Assemble the structured response shape for a sweep analysis."""
    return {
        "k_values": {label: case.get("k") for label, case in per_case.items()},
        "R2_values": {label: case.get("R2") for label, case in per_case.items()},
        "Q_fit": arrhenius.activation_energy if arrhenius else None,
        "k0_fit": arrhenius.prefactor if arrhenius else None,
        "R2_arrhenius": arrhenius.r_squared if arrhenius else None,
        "interpretation_text": interpretation,
        "kinetics_anomaly": any(
            case.get("R2") is not None and case["R2"] < ANOMALY_R2_THRESHOLD
            for case in per_case.values()
        ),
    }
