import logging
import math
from dataclasses import dataclass

import numpy as np
from django.db import models

from core.exceptions import DomainError

from .channels import PauliChannel1, PauliChannel2, ThermalParams

logger = logging.getLogger(__name__)

UNBOUNDED = math.inf
RATE_TOLERANCE = 1e-12


class OutcomeKind(models.IntegerChoices):
    SUCCESS = 0, "Success"
    FAILURE = 1, "Failure"
    ABORT = 2, "Abort"


def _check_probability(name, value):
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")


def _check_budget(k, n=1):
    if not (k == UNBOUNDED or (isinstance(k, (int, np.integer)) and k >= 1)):
        raise DomainError(f"Trial budget k must be a positive integer or UNBOUNDED, got {k!r}")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise DomainError(f"Photons per trial n must be a positive integer, got {n!r}")


@dataclass(frozen=True)
class RusParams:
    """Physical parameters of one (hybrid) repeat-until-success gate."""

    eta_a: float
    eta_b: float
    k: int = UNBOUNDED
    n: int = 1
    D: float = 0.0
    t_trial_over_T2: float = 0.0

    def __post_init__(self):
        _check_probability("eta_a", self.eta_a)
        _check_probability("eta_b", self.eta_b)
        _check_probability("D", self.D)
        _check_budget(self.k, self.n)
        if self.t_trial_over_T2 < 0:
            raise DomainError("t_trial_over_T2 must be nonnegative")


@dataclass(frozen=True)
class TrialRates:
    p_s: float
    p_r: float
    p_f: float

    def __post_init__(self):
        if abs(self.p_s + self.p_r + self.p_f - 1.0) > RATE_TOLERANCE:
            raise DomainError("Trial rates must sum to 1")


@dataclass(frozen=True)
class GateRates:
    """Total success, failure and abort probabilities of a gate."""

    P_s: float
    P_f: float
    P_a: float

    @property
    def p_fail(self):
        """Probability that the gate is heralded as failed or aborted."""
        return self.P_f + self.P_a


@dataclass(frozen=True)
class GateOutcome:
    kind: int
    trials_used: int


class RateService:
    """Service class for closed-form RUS and hybrid RUS outcome rates."""

    @staticmethod
    def trial_rates(eta_a, eta_b):
        """
        Per-trial rates of the RUS gate.

        Args:
            eta_a: Transmission of the photon from emitter a
            eta_b: Transmission of the photon from emitter b

        Returns:
            TrialRates: ``(eta_a eta_b / 2, eta_a eta_b / 2, 1 - eta_a eta_b)``
        """
        _check_probability("eta_a", eta_a)
        _check_probability("eta_b", eta_b)
        eta = eta_a * eta_b
        return TrialRates(p_s=eta / 2.0, p_r=eta / 2.0, p_f=1.0 - eta)

    @staticmethod
    def hrus_trial_rates(eta_a, eta_b, n):
        """Per-trial rates of a hybrid RUS gate with ``n`` photons per emitter."""
        _check_probability("eta_a", eta_a)
        _check_probability("eta_b", eta_b)
        _check_budget(1, n)
        detected = (eta_a * eta_b) ** n
        repeat = 0.5**n
        return TrialRates(p_s=(1.0 - repeat) * detected, p_r=repeat * detected, p_f=1.0 - detected)

    @staticmethod
    def totals(rates, k):
        """
        Sum the truncated geometric series of a trial process.

        Args:
            rates: TrialRates of one trial
            k: Trial budget, or UNBOUNDED for the analytic limit

        Returns:
            GateRates: Totals over at most ``k`` trials
        """
        _check_budget(k)
        if k == UNBOUNDED:
            if rates.p_r >= 1.0:
                return GateRates(0.0, 0.0, 1.0)
            scale = 1.0 / (1.0 - rates.p_r)
            return GateRates(rates.p_s * scale, rates.p_f * scale, 0.0)
        abort = rates.p_r**k
        if rates.p_r >= 1.0:
            return GateRates(0.0, 0.0, 1.0)
        scale = (1.0 - abort) / (1.0 - rates.p_r)
        return GateRates(rates.p_s * scale, rates.p_f * scale, abort)

    @staticmethod
    def rus_rates(eta_a, eta_b, k):
        return RateService.totals(RateService.trial_rates(eta_a, eta_b), k)

    @staticmethod
    def rus_success_prob(eta_a, eta_b, k):
        return RateService.rus_rates(eta_a, eta_b, k).P_s

    @staticmethod
    def rus_failure_prob(eta_a, eta_b, k):
        return RateService.rus_rates(eta_a, eta_b, k).P_f

    @staticmethod
    def rus_abort_prob(eta_a, eta_b, k):
        return RateService.rus_rates(eta_a, eta_b, k).P_a

    @staticmethod
    def hrus_rates(eta_a, eta_b, k, n):
        """
        Total rates of a hybrid RUS gate.

        With ``n = 1`` the result is identical to ``rus_rates``.

        Returns:
            GateRates: ``(P_s, P_f, P_a)``
        """
        return RateService.totals(RateService.hrus_trial_rates(eta_a, eta_b, n), k)

    @staticmethod
    def gate_rates(params):
        """Total rates for a RusParams, using the hybrid formulas when ``n > 1``."""
        return RateService.hrus_rates(params.eta_a, params.eta_b, params.k, params.n)


class OutcomeSampler:
    """Samplers for RUS gate outcomes from an explicit numpy Generator."""

    @staticmethod
    def sample_gate_outcome(params, rng):
        """
        Run the trial process of one gate.

        Args:
            params: RusParams of the gate
            rng: numpy Generator

        Returns:
            GateOutcome: Success, Failure or Abort with the trials used
        """
        rates = RateService.hrus_trial_rates(params.eta_a, params.eta_b, params.n)
        trial = 0
        while trial < params.k:
            trial += 1
            draw = rng.random()
            if draw < rates.p_s:
                return GateOutcome(OutcomeKind.SUCCESS, trial)
            if draw < rates.p_s + rates.p_f:
                return GateOutcome(OutcomeKind.FAILURE, trial)
        return GateOutcome(OutcomeKind.ABORT, int(params.k))

    @staticmethod
    def sample_gate_outcomes(params, rng, size):
        """
        Vectorized trial process for ``size`` independent gates.

        The number of trials until the first non-repeat outcome is geometric;
        gates exceeding the budget abort after exactly ``k`` trials.

        Returns:
            tuple: ``(kinds, trials_used)`` integer arrays of length ``size``
        """
        rates = RateService.hrus_trial_rates(params.eta_a, params.eta_b, params.n)
        trials = rng.geometric(1.0 - rates.p_r, size=size)
        terminal = rng.random(size)
        succeed = rates.p_s / (rates.p_s + rates.p_f)
        kinds = np.where(terminal < succeed, OutcomeKind.SUCCESS, OutcomeKind.FAILURE)
        aborted = trials > params.k
        kinds = np.where(aborted, OutcomeKind.ABORT, kinds).astype(np.int8)
        if params.k != UNBOUNDED:
            trials = np.minimum(trials, int(params.k))
        return kinds, trials


class ChannelService:
    """Service class for the Pauli channels of the circuit noise model."""

    @staticmethod
    def failure_channel():
        """Full dephasing of both spins after a failed or aborted gate."""
        return PauliChannel2({"II": 0.25, "ZI": 0.25, "IZ": 0.25, "ZZ": 0.25})

    @staticmethod
    def success_channel(D):
        """
        Post-CZ error channel of a successful gate with distinguishability D.

        Args:
            D: Photon distinguishability ``1 - M``

        Returns:
            PauliChannel2: ``(1 - D) id + D * full dephasing``
        """
        _check_probability("D", D)
        quarter = D / 4.0
        return PauliChannel2(
            {"II": 1.0 - 3.0 * quarter, "ZI": quarter, "IZ": quarter, "ZZ": quarter}
        )

    @staticmethod
    def decoherence_channel(t_over_T2, t_over_T1=0.0):
        """
        Pauli channel of a spin idling for time t.

        Relaxation at ``1/T1`` and coherence decay at ``1/T2`` give
        ``p_X = p_Y = (1 - exp(-t/T1)) / 4`` and
        ``p_Z = (1 - exp(-t/T2)) / 2 - p_X``.

        Args:
            t_over_T2: Duration over the coherence time
            t_over_T1: Duration over the relaxation time (0 for T1 = inf)

        Returns:
            PauliChannel1: The idle channel

        Raises:
            DomainError: On negative durations or when T2 > 2 T1
        """
        if t_over_T2 < 0 or t_over_T1 < 0:
            raise DomainError("Durations must be nonnegative")
        if t_over_T2 < t_over_T1 / 2.0 - RATE_TOLERANCE:
            raise DomainError("T2 cannot exceed 2 T1")
        if t_over_T1 > 0 and math.isclose(t_over_T2, t_over_T1 / 2.0):
            logger.warning("T2 = 2 T1: the idle channel has no pure dephasing")
        p_x = -math.expm1(-t_over_T1) / 4.0
        p_z = max(-math.expm1(-t_over_T2) / 2.0 - p_x, 0.0)
        return PauliChannel1(1.0 - 2.0 * p_x - p_z, p_x, p_x, p_z)

    @staticmethod
    def lindblad_generator(params):
        """
        Row-major vectorized Lindblad generator of the thermal spin model.

        Args:
            params: ThermalParams

        Returns:
            np.ndarray: 4x4 complex matrix ``L`` with ``d vec(rho)/dt = L vec(rho)``
        """
        lower = np.array([[0, 0], [1, 0]], dtype=complex)
        jumps = [
            math.sqrt(params.gamma_down) * lower,
            math.sqrt(params.gamma_up) * lower.conj().T,
            math.sqrt(params.gamma_star / 2.0) * np.diag([1.0, -1.0]).astype(complex),
        ]
        identity = np.eye(2, dtype=complex)
        generator = np.zeros((4, 4), dtype=complex)
        for jump in jumps:
            rate = jump.conj().T @ jump
            generator += np.kron(jump, jump.conj())
            generator -= 0.5 * (np.kron(rate, identity) + np.kron(identity, rate.T))
        return generator

    @staticmethod
    def thermal_channel(t, params):
        """
        Closed-form thermal evolution over time ``t``.

        Populations relax at ``gamma_up + gamma_down`` towards the steady
        state ``p_0 = gamma_up / (gamma_up + gamma_down)``; coherences decay at
        ``(gamma_up + gamma_down) / 2 + gamma_star``.

        Args:
            t: Nonnegative duration
            params: ThermalParams

        Returns:
            np.ndarray: 4x4 row-major superoperator on ``vec(rho)``
        """
        if t < 0:
            raise DomainError("Duration must be nonnegative")
        total = params.relaxation_rate
        decay = math.exp(-total * t)
        upper = params.gamma_up / total if total > 0 else 0.0
        coherence = math.exp(-params.coherence_rate * t)
        channel = np.zeros((4, 4), dtype=complex)
        channel[0, 0] = decay + upper * (1.0 - decay)
        channel[0, 3] = upper * (1.0 - decay)
        channel[3, 0] = (1.0 - upper) * (1.0 - decay)
        channel[3, 3] = decay + (1.0 - upper) * (1.0 - decay)
        channel[1, 1] = coherence
        channel[2, 2] = coherence
        return channel
