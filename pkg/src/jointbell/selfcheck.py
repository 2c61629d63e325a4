"""Self-contained invariant suites behind the ``validate`` CLI command.

Each check re-derives a structural property of the simulation from scratch
(positivity, completeness, normalization, degeneracies, the exactness of
the bit-flip decomposition, ...) and reports pass/fail with a short detail
string.  Everything is deterministic: random states use fixed seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CIRELSON_BOUND,
    MeasurementSetting,
    UncertaintyViolationError,
    VisibilityPair,
    bell_expectation,
    bell_operator,
    build_joint_povm,
    hermiticity_defect,
    min_eigenvalue,
    partial_trace,
    povm_elements,
    povm_from_visibilities,
    random_two_qubit_state,
    side_observables,
    singlet_state,
    werner_state,
)
from .sim import (
    ALL_OUTCOMES,
    Outcome,
    aggregate_b,
    b_value,
    format_count_table,
    joint_distribution,
    joint_visibilities,
    parse_count_table,
    probabilities_from_counts,
    quasi_distribution,
    sample_counts,
)
from .analysis import (
    MINIMAL_OUTCOMES,
    cirelson_floor,
    flip_convolve,
    pbflip_outcome,
    predicted_probability,
)

_THETA_SET = (0.0, 20.0, 40.0, 45.0, 50.0, 70.0, 90.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _vis(theta_deg: float) -> VisibilityPair:
    t = math.radians(theta_deg)
    return VisibilityPair(vx=abs(math.cos(t)), vy=abs(math.sin(t)))


def check_povm_positivity() -> CheckResult:
    worst = 0.0
    for side in ("A", "B"):
        for theta in np.arange(0.0, 90.0 + 1e-9, 0.5):
            povm = build_joint_povm(MeasurementSetting(float(theta), side))
            worst = min(worst, povm.min_element_eigenvalue())
    return CheckResult(
        "povm-positivity", worst >= -1e-12, f"min element eigenvalue {worst:.2e}"
    )


def check_povm_completeness() -> CheckResult:
    worst = 0.0
    for side in ("A", "B"):
        for theta in np.arange(0.0, 90.0 + 1e-9, 0.5):
            povm = build_joint_povm(MeasurementSetting(float(theta), side))
            worst = max(worst, povm.completeness_defect())
    return CheckResult(
        "povm-completeness", worst <= 1e-12, f"max |sum - I| = {worst:.2e}"
    )


def check_uncertainty_boundary() -> CheckResult:
    rng = np.random.default_rng(20230)
    obs_x, obs_y = side_observables("A")
    ok = True
    for _ in range(50):
        radius = math.sqrt(rng.uniform(1.0001, 1.9))
        angle = rng.uniform(0.05, math.pi / 2 - 0.05)
        vx, vy = radius * math.cos(angle), radius * math.sin(angle)
        if vx > 1 or vy > 1:
            continue
        low = min(min_eigenvalue(e) for e in povm_elements(obs_x, obs_y, vx, vy).values())
        ok = ok and low < 0
        try:
            povm_from_visibilities("A", VisibilityPair(vx, vy))
            ok = False
        except UncertaintyViolationError:
            pass
    return CheckResult(
        "uncertainty-boundary", ok, "vx^2+vy^2 > 1 always breaks positivity"
    )


def check_observable_algebra() -> CheckResult:
    defects = []
    for side in ("A", "B"):
        ox, oy = side_observables(side)
        anti = ox.matrix @ oy.matrix + oy.matrix @ ox.matrix
        defects.append(float(np.max(np.abs(anti))))
        for obs in (ox, oy):
            defects.append(hermiticity_defect(obs.matrix))
            defects.append(abs(float(np.trace(obs.matrix).real)))
            eig = np.linalg.eigvalsh(obs.matrix)
            defects.append(float(np.max(np.abs(eig - np.array([-1.0, 1.0])))))
    b = bell_operator()
    eigs = np.linalg.eigvalsh(b)
    defects.append(abs(eigs[0] + CIRELSON_BOUND))
    defects.append(abs(eigs[-1] - CIRELSON_BOUND))
    worst = max(defects)
    return CheckResult("observable-algebra", worst <= 1e-10, f"max defect {worst:.2e}")


def check_werner_linearity() -> CheckResult:
    worst = 0.0
    for v in np.linspace(0.0, 1.0, 21):
        got = bell_expectation(werner_state(float(v)))
        worst = max(worst, abs(got - float(v) * (-CIRELSON_BOUND)))
    return CheckResult("werner-linearity", worst <= 1e-12, f"max |error| {worst:.2e}")


def check_distribution_normalization() -> CheckResult:
    rng = np.random.default_rng(911)
    worst_sum = 0.0
    worst_neg = 0.0
    for _ in range(10):
        state = random_two_qubit_state(rng)
        for theta in _THETA_SET:
            dist = joint_distribution(state, theta, theta)
            worst_sum = max(worst_sum, abs(sum(dist.probs.values()) - 1.0))
            worst_neg = min(worst_neg, min(dist.probs.values()))
    ok = worst_sum <= 1e-10 and worst_neg >= -1e-12
    return CheckResult(
        "distribution-normalization",
        ok,
        f"|sum-1| <= {worst_sum:.2e}, min prob {worst_neg:.2e}",
    )


def check_marginal_consistency() -> CheckResult:
    rng = np.random.default_rng(517)
    worst = 0.0
    for _ in range(5):
        state = random_two_qubit_state(rng)
        rho_a = partial_trace(state.rho, keep="A")
        dist = joint_distribution(state, 30.0, 70.0)
        povm_a = build_joint_povm(MeasurementSetting(30.0, "A"))
        for (x, y), element in povm_a.elements.items():
            marginal = sum(
                p for m, p in dist.probs.items() if (m.x_a, m.y_a) == (x, y)
            )
            direct = float(np.real(np.trace(element @ rho_a)))
            worst = max(worst, abs(marginal - direct))
    return CheckResult("marginal-consistency", worst <= 1e-12, f"max |error| {worst:.2e}")


def check_theta45_degeneracy() -> CheckResult:
    dist = joint_distribution(singlet_state(), 45.0, 45.0)
    spread = 0.0
    for target in (2, -2):
        values = [p for m, p in dist.probs.items() if b_value(m) == target]
        spread = max(spread, max(values) - min(values))
    return CheckResult(
        "theta45-degeneracy", spread <= 1e-12, f"max in-group spread {spread:.2e}"
    )


def check_visibility_scaling() -> CheckResult:
    rng = np.random.default_rng(2718)
    xa, ya = side_observables("A")
    xb, yb = side_observables("B")
    pairs = {
        ("x_a", "x_b"): np.kron(xa.matrix, xb.matrix),
        ("x_a", "y_b"): np.kron(xa.matrix, yb.matrix),
        ("y_a", "x_b"): np.kron(ya.matrix, xb.matrix),
        ("y_a", "y_b"): np.kron(ya.matrix, yb.matrix),
    }
    worst = 0.0
    for _ in range(5):
        state = random_two_qubit_state(rng)
        for theta in (20.0, 45.0, 70.0):
            dist = joint_distribution(state, theta, theta)
            c, s = math.cos(math.radians(theta)), math.sin(math.radians(theta))
            scale = {"x_a": c, "y_a": s, "x_b": c, "y_b": s}
            for (sa, sb), op in pairs.items():
                measured = sum(
                    p * getattr(m, sa) * getattr(m, sb) for m, p in dist.probs.items()
                )
                sharp = float(np.real(np.trace(op @ state.rho)))
                worst = max(worst, abs(measured - scale[sa] * scale[sb] * sharp))
    # Equal visibilities: <b> is exactly half the Bell expectation.
    state = werner_state(0.9)
    half = aggregate_b(joint_distribution(state, 45.0, 45.0)).mean_b
    worst = max(worst, abs(half - 0.5 * bell_expectation(state)))
    return CheckResult("visibility-scaling", worst <= 1e-12, f"max |error| {worst:.2e}")


def check_flip_convolution() -> CheckResult:
    rng = np.random.default_rng(40)
    worst = 0.0
    for _ in range(10):
        state = random_two_qubit_state(rng)
        quasi = quasi_distribution(state)
        for theta in _THETA_SET:
            vis = _vis(theta)
            convolved = flip_convolve(quasi, vis, vis)
            direct = joint_distribution(state, theta, theta)
            for m in ALL_OUTCOMES:
                worst = max(worst, abs(convolved.probs[m] - direct.probs[m]))
    return CheckResult("flip-convolution", worst <= 1e-10, f"max |error| {worst:.2e}")


def check_line_consistency() -> CheckResult:
    state = singlet_state()
    worst = 0.0
    for theta in np.arange(0.0, 90.0 + 1e-9, 5.0):
        vis = _vis(float(theta))
        dist = joint_distribution(state, float(theta), float(theta))
        for m in MINIMAL_OUTCOMES:
            predicted = predicted_probability(CIRELSON_BOUND, pbflip_outcome(m, vis, vis))
            worst = max(worst, abs(dist.probs[m] - predicted))
    return CheckResult("line-consistency", worst <= 1e-10, f"max |error| {worst:.2e}")


def check_flip_floor() -> CheckResult:
    floor = cirelson_floor(CIRELSON_BOUND)
    low = math.inf
    for theta in np.arange(0.0, 90.0 + 1e-9, 0.5):
        vis = _vis(float(theta))
        for m in MINIMAL_OUTCOMES:
            low = min(low, pbflip_outcome(m, vis, vis))
    saturated = min(
        pbflip_outcome(MINIMAL_OUTCOMES[0], _vis(22.5), _vis(22.5)),
        pbflip_outcome(MINIMAL_OUTCOMES[2], _vis(67.5), _vis(67.5)),
    )
    ok = low >= floor - 1e-12 and abs(saturated - floor) <= 1e-12
    return CheckResult(
        "flip-floor", ok, f"min p_bflip {low:.6f} vs floor {floor:.6f}"
    )


def check_minimal_outcome_monotonicity() -> CheckResult:
    state = singlet_state()

    def prob(outcome: Outcome, theta: float) -> float:
        return joint_distribution(state, theta, theta).probs[outcome]

    grid = [float(t) for t in np.arange(0.0, 90.0 + 1e-9, 2.5)]
    first = [prob(Outcome(1, 1, 1, -1), t) for t in grid]
    second = [prob(Outcome(-1, 1, 1, 1), t) for t in grid]
    i_min_first = grid.index(22.5)
    i_min_second = grid.index(67.5)
    ok = all(first[i] > first[i + 1] for i in range(i_min_first))
    ok = ok and all(first[i] < first[i + 1] for i in range(i_min_first, len(grid) - 1))
    ok = ok and abs(first[i_min_first]) <= 1e-10
    ok = ok and all(second[i] > second[i + 1] for i in range(i_min_second))
    ok = ok and all(second[i] < second[i + 1] for i in range(i_min_second, len(grid) - 1))
    ok = ok and abs(second[i_min_second]) <= 1e-10
    return CheckResult(
        "minimal-outcome-monotonicity",
        ok,
        "minima at 22.5 and 67.5 degrees with monotone flanks",
    )


def check_visibility_circle() -> CheckResult:
    worst = 0.0
    state = werner_state(0.95)
    for side in ("A", "B"):
        for theta in np.arange(0.0, 90.0 + 1e-9, 10.0):
            est = joint_visibilities(state, float(theta), side)
            worst = max(worst, abs(est.radius - 1.0))
    return CheckResult("visibility-circle", worst <= 1e-10, f"max |radius - 1| {worst:.2e}")


def check_count_roundtrip() -> CheckResult:
    dist = joint_distribution(werner_state(0.9716), 20.0, 20.0)
    table = sample_counts(dist, 1e6, seed=77, duration_s=10.0)
    recovered, errors = probabilities_from_counts(table)
    worst_sigma = 0.0
    for m in ALL_OUTCOMES:
        err = errors[m] if errors[m] > 0 else 1.0 / table.total()
        worst_sigma = max(worst_sigma, abs(recovered.probs[m] - dist.probs[m]) / err)
    text = format_count_table(table)
    ok = worst_sigma < 5.0 and format_count_table(parse_count_table(text)) == text
    return CheckResult(
        "count-roundtrip", ok, f"max deviation {worst_sigma:.2f} sigma; text round-trips"
    )


ALL_CHECKS = (
    check_povm_positivity,
    check_povm_completeness,
    check_uncertainty_boundary,
    check_observable_algebra,
    check_werner_linearity,
    check_distribution_normalization,
    check_marginal_consistency,
    check_theta45_degeneracy,
    check_visibility_scaling,
    check_flip_convolution,
    check_line_consistency,
    check_flip_floor,
    check_minimal_outcome_monotonicity,
    check_visibility_circle,
    check_count_roundtrip,
)


def run_all_checks() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
