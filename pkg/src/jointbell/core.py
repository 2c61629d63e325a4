"""Operator algebra for polarization qubits.

Sharp polarization observables, uncertainty-limited joint POVMs, the CHSH
Bell operator and two-photon polarization states, all represented as plain
numpy complex matrices in the (|H>, |V>) basis with tensor order A (x) B.
Angles are degrees in real space throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Side = Literal["A", "B"]

#: Real-space orientation (degrees) of the +1 eigenstate of each observable.
#: Side B is rotated by 22.5 degrees against side A; this offset is what lets
#: the CHSH combination reach its quantum extremum.
OBSERVABLE_ANGLES: dict[str, dict[str, float]] = {
    "A": {"x": 0.0, "y": 45.0},
    "B": {"x": 22.5, "y": 67.5},
}

#: Quantum maximum of |<B>| (Cirel'son bound).
CIRELSON_BOUND = 2.0 * math.sqrt(2.0)

HERMITICITY_TOL = 1e-10
STATE_TOL = 1e-10
POVM_TOL = 1e-12

#: Outcome sign pairs (x, y) of a single four-outcome joint measurement.
OUTCOME_SIGNS: tuple[tuple[int, int], ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))


class UncertaintyViolationError(ValueError):
    """Visibility pair lies outside the unit circle vx**2 + vy**2 <= 1."""


class InvalidStateError(ValueError):
    """Density matrix fails hermiticity, trace or positivity requirements."""


def polarization_ket(angle_deg: float) -> np.ndarray:
    """Linear polarization state cos(a)|H> + sin(a)|V> as a length-2 vector."""
    a = math.radians(angle_deg)
    return np.array([math.cos(a), math.sin(a)], dtype=complex)


def projector(angle_deg: float) -> np.ndarray:
    """Rank-1 projector onto the linear polarization at ``angle_deg``."""
    k = polarization_ket(angle_deg)
    return np.outer(k, k.conj())


def hermiticity_defect(matrix: np.ndarray) -> float:
    """Largest entrywise deviation of ``matrix`` from its conjugate transpose."""
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def min_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(np.linalg.eigvalsh(matrix)[0])


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.flags.writeable = False
    return matrix


@dataclass(frozen=True)
class PolarizationObservable:
    """A +/-1 valued polarization observable.

    The +1 eigenstate is the linear polarization at ``plus_angle_deg``; the
    -1 eigenstate is orthogonal to it (rotated by 90 degrees in real space).
    The matrix is |a><a| - |a+90><a+90|: Hermitian, traceless, eigenvalues
    exactly +1 and -1.
    """

    plus_angle_deg: float
    matrix: np.ndarray

    @property
    def minus_angle_deg(self) -> float:
        return (self.plus_angle_deg + 90.0) % 180.0


def observable_from_angle(plus_angle_deg: float) -> PolarizationObservable:
    """Build the polarization observable whose +1 eigenstate sits at the
    given real-space angle (reduced mod 180 degrees)."""
    alpha = plus_angle_deg % 180.0
    matrix = projector(alpha) - projector(alpha + 90.0)
    return PolarizationObservable(plus_angle_deg=alpha, matrix=_frozen(matrix))


def side_observables(side: Side) -> tuple[PolarizationObservable, PolarizationObservable]:
    """The (X, Y) observable pair measured on one side."""
    if side not in OBSERVABLE_ANGLES:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    angles = OBSERVABLE_ANGLES[side]
    return observable_from_angle(angles["x"]), observable_from_angle(angles["y"])


@dataclass(frozen=True)
class VisibilityPair:
    """Measurement visibilities (V_X, V_Y) of one joint measurement.

    Physical joint measurements additionally satisfy vx**2 + vy**2 <= 1;
    that bound is checked by :meth:`require_uncertainty_bound` wherever a
    POVM or an error model is built from the pair, so that the unphysical
    region stays constructible for positivity probing.
    """

    vx: float
    vy: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.vx <= 1.0 and 0.0 <= self.vy <= 1.0):
            raise ValueError(
                f"visibilities must lie in [0, 1], got ({self.vx}, {self.vy})"
            )

    @property
    def radius(self) -> float:
        return math.hypot(self.vx, self.vy)

    def require_uncertainty_bound(self, tol: float = POVM_TOL) -> None:
        """Raise unless vx**2 + vy**2 <= 1 (within ``tol``)."""
        r2 = self.vx * self.vx + self.vy * self.vy
        if r2 > 1.0 + tol:
            raise UncertaintyViolationError(
                f"vx^2 + vy^2 = {r2:.6f} exceeds 1: no positive joint measurement"
            )


@dataclass(frozen=True)
class MeasurementSetting:
    """Uncertainty trade-off angle theta of a joint measurement on one side.

    theta = 0 is a sharp X measurement, theta = 90 a sharp Y measurement;
    the derived visibilities (cos theta, sin theta) always lie on the
    uncertainty-limit circle.
    """

    theta_deg: float
    side: Side

    def __post_init__(self) -> None:
        if self.side not in OBSERVABLE_ANGLES:
            raise ValueError(f"side must be 'A' or 'B', got {self.side!r}")

    @property
    def visibilities(self) -> tuple[float, float]:
        t = math.radians(self.theta_deg)
        return (math.cos(t), math.sin(t))


def povm_elements(
    obs_x: PolarizationObservable,
    obs_y: PolarizationObservable,
    vx: float,
    vy: float,
) -> dict[tuple[int, int], np.ndarray]:
    """Elements (I + x*vx*X + y*vy*Y)/4 keyed by outcome signs (x, y).

    No positivity guard: callers own the uncertainty-bound check, and the
    unphysical region is deliberately reachable so tests can confirm that
    vx**2 + vy**2 = 1 is exactly the positivity boundary.
    """
    eye = np.eye(2, dtype=complex)
    elements = {}
    for x, y in OUTCOME_SIGNS:
        m = 0.25 * (eye + (x * vx) * obs_x.matrix + (y * vy) * obs_y.matrix)
        elements[(x, y)] = _frozen(m)
    return elements


@dataclass(frozen=True)
class JointPovm:
    """Four-outcome joint measurement of the X and Y observables of one side."""

    elements: dict[tuple[int, int], np.ndarray]
    setting: MeasurementSetting
    visibilities: tuple[float, float]

    def min_element_eigenvalue(self) -> float:
        return min(min_eigenvalue(e) for e in self.elements.values())

    def completeness_defect(self) -> float:
        """Largest entrywise deviation of the element sum from the identity."""
        total = sum(self.elements.values())
        return float(np.max(np.abs(total - np.eye(2))))


def build_joint_povm(setting: MeasurementSetting) -> JointPovm:
    """POVM with visibilities (cos theta, sin theta) for the side's observables."""
    obs_x, obs_y = side_observables(setting.side)
    vx, vy = setting.visibilities
    return JointPovm(
        elements=povm_elements(obs_x, obs_y, vx, vy),
        setting=setting,
        visibilities=(vx, vy),
    )


def povm_from_visibilities(side: Side, vis: VisibilityPair) -> JointPovm:
    """POVM from an explicit visibility pair; rejects unphysical pairs.

    Interior pairs (vx**2 + vy**2 < 1) are allowed; the nominal trade-off
    angle is then atan2(vy, vx).
    """
    vis.require_uncertainty_bound()
    obs_x, obs_y = side_observables(side)
    theta = math.degrees(math.atan2(vis.vy, vis.vx))
    return JointPovm(
        elements=povm_elements(obs_x, obs_y, vis.vx, vis.vy),
        setting=MeasurementSetting(theta_deg=theta, side=side),
        visibilities=(vis.vx, vis.vy),
    )


@dataclass(frozen=True)
class TwoQubitState:
    """Two-photon polarization state as a validated 4x4 density matrix."""

    rho: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise InvalidStateError(f"density matrix must be 4x4, got {rho.shape}")
        defect = hermiticity_defect(rho)
        if defect > HERMITICITY_TOL:
            raise InvalidStateError(f"density matrix not Hermitian (defect {defect:.3e})")
        trace = complex(np.trace(rho)).real
        if abs(trace - 1.0) > STATE_TOL:
            raise InvalidStateError(f"density matrix trace {trace!r} != 1")
        lo = min_eigenvalue(rho)
        if lo < -STATE_TOL:
            raise InvalidStateError(f"density matrix not positive (min eigenvalue {lo:.3e})")
        object.__setattr__(self, "rho", _frozen(rho))

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


def singlet_state() -> TwoQubitState:
    """The pure state (|HV> - |VH>)/sqrt(2).

    Anti-correlated in every parallel polarization basis; its Bell
    expectation is the extremal -2*sqrt(2).
    """
    psi = np.zeros(4, dtype=complex)
    psi[1] = 1.0 / math.sqrt(2.0)
    psi[2] = -1.0 / math.sqrt(2.0)
    return TwoQubitState(rho=np.outer(psi, psi.conj()))


def maximally_mixed_state() -> TwoQubitState:
    return TwoQubitState(rho=np.eye(4, dtype=complex) / 4.0)


def werner_state(v: float) -> TwoQubitState:
    """Mixture v * singlet + (1 - v) * I/4 modelling source imperfection."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {v}")
    rho = v * singlet_state().rho + (1.0 - v) * np.eye(4, dtype=complex) / 4.0
    return TwoQubitState(rho=rho)


def random_two_qubit_state(rng: np.random.Generator) -> TwoQubitState:
    """Random full-rank density matrix G G^dag / tr(G G^dag)."""
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    rho = 0.5 * (rho + rho.conj().T)
    return TwoQubitState(rho=rho)


def bell_operator() -> np.ndarray:
    """CHSH operator X_A X_B - X_A Y_B + Y_A X_B + Y_A Y_B (4x4 Hermitian)."""
    xa, ya = side_observables("A")
    xb, yb = side_observables("B")
    b = (
        np.kron(xa.matrix, xb.matrix)
        - np.kron(xa.matrix, yb.matrix)
        + np.kron(ya.matrix, xb.matrix)
        + np.kron(ya.matrix, yb.matrix)
    )
    return _frozen(b)


def bell_expectation(state: TwoQubitState) -> float:
    """tr(rho B); bounded in magnitude by 2*sqrt(2)."""
    return float(np.real(np.trace(state.rho @ bell_operator())))


def partial_trace(rho4: np.ndarray, keep: Side) -> np.ndarray:
    """Reduced 2x2 state of side ``keep`` from a 4x4 two-qubit operator."""
    r = np.asarray(rho4).reshape(2, 2, 2, 2)
    if keep == "A":
        return np.einsum("ikjk->ij", r)
    if keep == "B":
        return np.einsum("kikj->ij", r)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def polarizer_angles(
    setting: MeasurementSetting, outcome: tuple[int, int]
) -> tuple[float, float]:
    """Filter angles realizing one outcome of a joint measurement.

    The detected polarization starts at the X eigenstate matching the x sign
    of the outcome and is rotated by theta/2 along the shorter arc toward
    the Y eigenstate matching the y sign.  Returns ``(polarizer_deg,
    hwp_offset_deg)`` where ``polarizer_deg`` is in [0, 180) and
    ``hwp_offset_deg`` is the signed theta/4 offset of the half-wave plate
    from its X-eigenstate orientation (a half-wave plate rotates
    polarization by twice its own angle).
    """
    x, y = outcome
    if x not in (1, -1) or y not in (1, -1):
        raise ValueError(f"outcome signs must be +1 or -1, got {outcome!r}")
    angles = OBSERVABLE_ANGLES[setting.side]
    x_angle = angles["x"] if x > 0 else angles["x"] + 90.0
    y_angle = angles["y"] if y > 0 else angles["y"] + 90.0
    # Signed shorter-arc distance between polarization axes (mod 180).
    d = (y_angle - x_angle + 90.0) % 180.0 - 90.0
    sign = 1.0 if d > 0 else -1.0
    polarizer = (x_angle + sign * setting.theta_deg / 2.0) % 180.0
    return polarizer, sign * setting.theta_deg / 4.0
