"""Closed-form normalization without relegation.

Each step solves a homological equation for the terms of the remainder at the current
target order, applies the Lie transform generated by the solution to the whole
Hamiltonian and restores the echelon form ``a1/r1^lambda`` of the new remainder. For
``nu = 1`` the second step leaves same-order terms behind, and an extra step II at
order two removes them before the loop resumes.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

from closed_r3bp.algebra import (
    DerivativeTable,
    check_regularity,
    lie_increment,
    substitute_phi1,
)
from closed_r3bp.config import DIVISOR_THRESHOLD_FACTOR, RESIDUE_TOLERANCE
from closed_r3bp.exceptions import ConfigurationError, NormalizationError, ResonanceError
from closed_r3bp.hamiltonian import PreparedHamiltonian
from closed_r3bp.models import DivisorRecord, StepDiagnostics, SystemParams
from closed_r3bp.series import (
    COS,
    PARITY_NAMES,
    SIN,
    SYMBOL_INDEX,
    PoissonSeries,
    RawTerm,
    add_all,
    canonicalize,
    dumps,
    filter_terms,
    loads,
)

logger = logging.getLogger(__name__)

_PHI = SYMBOL_INDEX["phi1"]
_R1 = SYMBOL_INDEX["r1"]


@dataclass(frozen=True)
class StepPlan:
    """One entry of the normalization schedule."""

    label: str
    order: int
    allow_residual: bool = False


@dataclass
class NormalizationResult:
    """Generating functions, normal-form parts and remainders of a normalization run.

    ``zparts[0]`` is ``Z0``; ``zparts[k]``, ``chis[k-1]`` and ``remainders[k]`` belong to
    the step labelled ``labels[k-1]``. ``remainders[0]`` is the prepared remainder.
    """

    params: SystemParams
    z0: PoissonSeries
    chis: list[PoissonSeries] = field(default_factory=list)
    zparts: list[PoissonSeries] = field(default_factory=list)
    remainders: list[PoissonSeries] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    divisors: list[DivisorRecord] = field(default_factory=list)
    diagnostics: list[StepDiagnostics] = field(default_factory=list)
    aborted: bool = False
    resonance: bool = False
    abort_reason: str = ""

    @property
    def remainder(self) -> PoissonSeries:
        return self.remainders[-1]

    @property
    def steps_completed(self) -> int:
        """Number of numbered steps done; step II is not counted."""
        return sum(1 for label in self.labels if label.isdigit())

    def labels_through(self, j: int) -> list[str]:
        """Step labels making up the normal form after ``j`` numbered steps."""
        if j < 0 or j > self.steps_completed:
            raise ConfigurationError(
                f"normal form of order {j} requested, {self.steps_completed} steps completed"
            )
        return [
            label
            for label in self.labels
            if (label == "II" and j >= 2) or (label.isdigit() and int(label) <= j)
        ]

    def remainder_after(self, j: int) -> PoissonSeries:
        """Remainder once ``j`` numbered steps (and step II when due) are done."""
        labels = self.labels_through(j)
        return self.remainders[len(labels)]


# ----------------------------------------------------------------------
# Homological equation
# ----------------------------------------------------------------------


def solve_homological(
    target: PoissonSeries,
    params: SystemParams,
    *,
    step: int = 0,
    threshold_factor: float = DIVISOR_THRESHOLD_FACTOR,
) -> tuple[PoissonSeries, PoissonSeries, list[DivisorRecord]]:
    """Generating function and normal-form part cancelling ``target`` against ``Z0``.

    A fast term ``c r1^-lambda cos(theta)`` gives ``chi = c r1^-(lambda-1) sin(theta) /
    (a1 D)`` with ``D = s1 n* + s4 n1``. A secular term ``c r1^-lambda cos(p1 g + p2 h)``
    contributes ``c / a1^lambda`` to the normal form and
    ``phi1 / n1 * sum_{psi=1..lambda} c / a1^psi r1^(psi-lambda)`` to ``chi``, the phi1
    part carrying an extra sigma^nu1.

    Returns:
        ``(chi, z, divisors)`` where ``divisors`` lists each distinct ``(s1, s4)`` met.

    Raises:
        ResonanceError: ``|D| < threshold_factor * n1`` for some harmonic.
        NormalizationError: A term is not in echelon form.
    """
    nbk = target.nbk
    threshold = threshold_factor * params.n1
    a1, n_star, n1 = params.a1, params.n_star, params.n1
    chi_raw: list[RawTerm] = []
    z_raw: list[RawTerm] = []
    divisors: dict[tuple[int, int], DivisorRecord] = {}

    for coeff, sigma, trig, parity, exps in target.raw():
        if exps[_PHI] != 0:
            raise NormalizationError(f"phi1 left in homological target at sigma^{sigma}")
        lam = -exps[_R1]
        if lam < 0:
            raise NormalizationError(f"positive power r1^{-lam} in homological target")
        s1, s4 = trig[0], trig[3]

        if s1 == 0 and s4 == 0:
            no_r1 = exps[:_R1] + (0,) + exps[_R1 + 1 :]
            z_raw.append((coeff / a1**lam, sigma, trig, parity, no_r1))
            if lam == 0 or params.circular:
                continue
            with_phi = no_r1[:_PHI] + (1,) + no_r1[_PHI + 1 :]
            for psi in range(1, lam + 1):
                phi_exps = with_phi[:_R1] + (psi - lam,) + with_phi[_R1 + 1 :]
                chi_raw.append(
                    (coeff / (n1 * a1**psi), sigma + params.nu1, trig, parity, phi_exps)
                )
            continue

        value = s1 * n_star + s4 * n1
        divisors.setdefault((s1, s4), DivisorRecord(step=step, s1=s1, s4=s4, value=value))
        if abs(value) < threshold:
            raise ResonanceError(s1, s4, value, threshold)
        if params.circular:
            amplitude, chi_exps = coeff / value, exps
        else:
            if lam == 0:
                raise NormalizationError(
                    f"fast term {PARITY_NAMES[parity]}{trig} at sigma^{sigma} lacks the "
                    "a1/r1 factor"
                )
            amplitude = coeff / (a1 * value)
            chi_exps = exps[:_R1] + (1 - lam,) + exps[_R1 + 1 :]
        if parity == COS:
            chi_raw.append((amplitude, sigma, trig, SIN, chi_exps))
        else:
            chi_raw.append((-amplitude, sigma, trig, COS, chi_exps))

    return (
        canonicalize(chi_raw, nbk),
        canonicalize(z_raw, nbk),
        sorted(divisors.values(), key=lambda d: (d.s1, d.s4)),
    )


# ----------------------------------------------------------------------
# One step
# ----------------------------------------------------------------------


def reechelon(series: PoissonSeries, table: DerivativeTable) -> PoissonSeries:
    """Substitute ``phi1 = e1 sin E1`` and restore the ``a1/r1`` factor on r1-free terms."""
    if table.circular:
        return series
    out = substitute_phi1(series, table.params.e1)
    for _ in range(out.nbk + 2):
        bare = filter_terms(out, lambda s, t, e: e[_R1] >= 0)
        if not bare:
            return out
        out = (out - bare) + table.times_t(bare)
    raise NormalizationError("could not restore the a1/r1 echelon form")


def _split_low(
    series: PoissonSeries, order: int
) -> tuple[PoissonSeries, PoissonSeries]:
    low = filter_terms(series, lambda s, t, e: s <= order)
    high = filter_terms(series, lambda s, t, e: s > order)
    return low, high


def normalize_step(
    z0: PoissonSeries,
    secular: PoissonSeries,
    remainder: PoissonSeries,
    plan: StepPlan,
    table: DerivativeTable,
    *,
    step: int,
    threshold_factor: float = DIVISOR_THRESHOLD_FACTOR,
) -> tuple[PoissonSeries, PoissonSeries, PoissonSeries, list[DivisorRecord]]:
    """Normalize the remainder terms at ``plan.order``.

    Args:
        z0: ``n* dL + n1 J1``.
        secular: Sum of the normal-form parts found so far.
        remainder: Current remainder, minimum order ``plan.order``.
        plan: Label, target order and whether same-order leftovers may stay.
        table: Book-kept derivative table.
        step: Index recorded on divisor records.
        threshold_factor: Small-divisor threshold in units of ``n1``.

    Returns:
        ``(new_remainder, chi, z, divisors)``.

    Raises:
        ResonanceError: A divisor of the target is too small.
        NormalizationError: Terms at or below the target order survive the step.
    """
    order = plan.order
    target = filter_terms(remainder, lambda s, t, e: s == order)
    chi, z, divisors = solve_homological(
        target, table.params, step=step, threshold_factor=threshold_factor
    )
    if not chi:
        return remainder - target, chi, z, divisors

    hamiltonian = add_all([z0, secular, remainder], remainder.nbk)
    transformed = remainder + lie_increment(hamiltonian, chi, table)
    low, high = _split_low(transformed, order)
    leftover = low - z

    scale = max(target.max_abs(), z.max_abs())
    floor = RESIDUE_TOLERANCE * scale
    significant = PoissonSeries(
        {k: c for k, c in leftover.items() if abs(c) > floor}, leftover.nbk
    )
    if significant:
        below = filter_terms(significant, lambda s, t, e: s < order)
        if below or not plan.allow_residual:
            worst = max(significant.items(), key=lambda item: abs(item[1]))
            raise NormalizationError(
                f"step {plan.label}: {len(significant)} terms at or below sigma^{order} "
                f"survive (largest {worst[1]:.3e} at sigma^{worst[0][0]})"
            )
        logger.info(
            "step %s: %d same-order terms kept for a follow-up step",
            plan.label,
            len(significant),
        )
        high = high + significant

    new_remainder = reechelon(high, table)
    return new_remainder, chi, z, divisors


# ----------------------------------------------------------------------
# Full normalization
# ----------------------------------------------------------------------


def schedule(params: SystemParams, j_max: int) -> list[StepPlan]:
    """Step labels and target orders for ``j_max`` numbered steps."""
    nu = params.nu
    plans: list[StepPlan] = []
    for j in range(1, j_max + 1):
        if nu == 1 and j == 2:
            plans.append(StepPlan("2", 2, allow_residual=True))
            plans.append(StepPlan("II", 2))
        else:
            plans.append(StepPlan(str(j), nu + j - 1))
    return plans


def max_steps(params: SystemParams) -> int:
    return params.nu * (params.k_mu - 1)


def normalize(
    prepared: PreparedHamiltonian,
    j_max: int | None = None,
    *,
    threshold_factor: float = DIVISOR_THRESHOLD_FACTOR,
    delta_l: float | None = None,
    on_step: Callable[[StepDiagnostics], None] | None = None,
    time_budget: float | None = None,
) -> NormalizationResult:
    """Run up to ``j_max`` normalization steps on a prepared Hamiltonian.

    A :class:`ResonanceError` stops the run; the result then holds every completed step
    and ``aborted`` is set with the reason.

    Args:
        prepared: Output of :func:`closed_r3bp.hamiltonian.build_prepared`.
        j_max: Numbered steps to run; defaults to ``nu (k_mu - 1)``, the most the
            truncation supports.
        threshold_factor: Small-divisor threshold in units of ``n1``.
        delta_l: Size of ``dL`` used for the per-step remainder bound.
        on_step: Called with each step's diagnostics as soon as it completes.
        time_budget: Seconds after which no further step is started; the result is then
            returned with ``aborted`` set.

    Raises:
        ConfigurationError: ``j_max`` exceeds ``nu (k_mu - 1)``.
        NormalizationError: A step post-condition fails.
    """
    from closed_r3bp.diagnostics import remainder_bound  # local to avoid circular

    params = prepared.params
    limit = max_steps(params)
    j_max = limit if j_max is None else j_max
    if j_max < 0 or j_max > limit:
        raise ConfigurationError(f"j_max must lie in [0, {limit}], got {j_max}")

    table = DerivativeTable(params)
    result = NormalizationResult(
        params=params,
        z0=prepared.z0,
        zparts=[prepared.z0],
        remainders=[prepared.remainder],
    )
    secular = PoissonSeries.zero(params.nbk)

    run_started = time.perf_counter()
    plans = schedule(params, j_max)
    for index, plan in enumerate(plans, start=1):
        started = time.perf_counter()
        try:
            remainder, chi, z, divisors = normalize_step(
                prepared.z0,
                secular,
                result.remainder,
                plan,
                table,
                step=index,
                threshold_factor=threshold_factor,
            )
        except ResonanceError as exc:
            logger.warning("normalization stopped at step %s: %s", plan.label, exc)
            result.aborted = True
            result.abort_reason = str(exc)
            result.resonance = True
            result.divisors.append(
                DivisorRecord(step=index, s1=exc.s1, s4=exc.s4, value=exc.value)
            )
            break

        for series, what in ((chi, "chi"), (z, "normal form"), (remainder, "remainder")):
            check_regularity(series, f"step {plan.label} {what}")
        if any(t.trig.s1 or t.trig.s4 for t in z.terms()):
            raise NormalizationError(f"step {plan.label}: normal form depends on a fast angle")
        low = remainder.min_order()
        if low is not None and low <= plan.order and not plan.allow_residual:
            raise NormalizationError(
                f"step {plan.label}: remainder starts at sigma^{low}, expected > {plan.order}"
            )

        secular = secular + z
        result.chis.append(chi)
        result.zparts.append(z)
        result.remainders.append(remainder)
        result.labels.append(plan.label)
        result.divisors.extend(divisors)
        elapsed = time.perf_counter() - started
        diag = StepDiagnostics(
            label=plan.label,
            target_order=plan.order,
            chi_terms=len(chi),
            z_terms=len(z),
            remainder_terms=len(remainder),
            remainder_min_order=low,
            remainder_bound=remainder_bound(remainder, params, delta_l=delta_l),
            seconds=elapsed,
        )
        result.diagnostics.append(diag)
        logger.info(
            "step %s (sigma^%d): chi %d terms, Z %d terms, remainder %d terms from "
            "sigma^%s, %.2fs",
            plan.label,
            plan.order,
            len(chi),
            len(z),
            len(remainder),
            low,
            elapsed,
        )
        if on_step is not None:
            on_step(diag)
        if (
            time_budget is not None
            and index < len(plans)
            and time.perf_counter() - run_started > time_budget
        ):
            logger.warning("normalization stopped after step %s: time budget exceeded", plan.label)
            result.aborted = True
            result.abort_reason = f"time budget of {time_budget:g} s exceeded"
            break
    return result


def _collapse_sigma(series: PoissonSeries) -> PoissonSeries:
    return canonicalize([(c, 0, t, p, e) for c, _, t, p, e in series.raw()], series.nbk)


def secular_hamiltonian(result: NormalizationResult, j: int) -> PoissonSeries:
    """``Z0`` plus every normal-form part through step ``j``, with sigma set to one.

    Raises:
        ConfigurationError: Fewer than ``j`` steps were completed.
    """
    wanted = set(result.labels_through(j))
    parts = [result.z0] + [
        z for label, z in zip(result.labels, result.zparts[1:]) if label in wanted
    ]
    return _collapse_sigma(add_all(parts, result.params.nbk))


# ----------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------


def result_to_files(result: NormalizationResult) -> dict[str, str]:
    """Text form of every series of a result, keyed by file name."""
    files = {"z0.txt": dumps(result.z0), "remainder_0.txt": dumps(result.remainders[0])}
    for label, chi, z, rem in zip(
        result.labels, result.chis, result.zparts[1:], result.remainders[1:]
    ):
        files[f"chi_{label}.txt"] = dumps(chi)
        files[f"z_{label}.txt"] = dumps(z)
        files[f"remainder_{label}.txt"] = dumps(rem)
    return files


def result_manifest(result: NormalizationResult) -> dict[str, Any]:
    """JSON-ready summary of a result; the series themselves live in separate files."""
    return {
        "params": result.params.model_dump(mode="json"),
        "labels": list(result.labels),
        "aborted": result.aborted,
        "resonance": result.resonance,
        "abort_reason": result.abort_reason,
        "divisors": [d.model_dump(mode="json") for d in result.divisors],
        "steps": [d.model_dump(mode="json") for d in result.diagnostics],
        "files": sorted(result_to_files(result)),
    }


def result_from_files(
    manifest: Mapping[str, Any], files: Mapping[str, str]
) -> NormalizationResult:
    """Inverse of :func:`result_to_files` plus :func:`result_manifest`."""
    try:
        params = SystemParams.model_validate(manifest["params"])
        labels = [str(label) for label in manifest["labels"]]
        result = NormalizationResult(
            params=params,
            z0=loads(files["z0.txt"]),
            remainders=[loads(files["remainder_0.txt"])],
            aborted=bool(manifest.get("aborted", False)),
            resonance=bool(manifest.get("resonance", False)),
            abort_reason=str(manifest.get("abort_reason", "")),
        )
        result.zparts.append(result.z0)
        for label in labels:
            result.labels.append(label)
            result.chis.append(loads(files[f"chi_{label}.txt"]))
            result.zparts.append(loads(files[f"z_{label}.txt"]))
            result.remainders.append(loads(files[f"remainder_{label}.txt"]))
        result.divisors = [
            DivisorRecord.model_validate(d) for d in manifest.get("divisors", [])
        ]
        result.diagnostics = [
            StepDiagnostics.model_validate(d) for d in manifest.get("steps", [])
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"incomplete normalization files: {exc}") from exc
    return result
