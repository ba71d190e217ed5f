"""Attacks on the veto protocol and the statistics used to score them.

Three attack families are simulated:

* intercept-resend: an eavesdropper on link ``position`` (0 = before the first
  voter) measures the flying qudit in a guessed basis and forwards the
  eigenstate she saw;
* voter-cancel: one dishonest voter applies ``V^(d - t_guess)`` hoping to
  cancel the honest vetoes;
* dishonest endpoints: a lying sender or receiver, caught by all-zero-trit runs.

Leakage is the plug-in mutual information (bits) between the adversary's
observable and a targeted secret, with a bootstrap standard error.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import RejectedInput
from .mub import StateId
from .protocol import (
    HonestReceiver,
    HonestSender,
    LyingReceiver,
    LyingSender,
    ProtocolConfig,
    VoterPlan,
    balanced_exponents,
    flying_state_id,
    outcome_distribution,
    tally_vetoes,
    untrusted_run,
    voter_actions,
)
from .qudit import SeededRng, sample_outcome

ATTACK_KINDS = ("intercept-resend", "voter-cancel", "sender-lie", "receiver-lie")
BOOTSTRAP_RESAMPLES = 200
MIN_LEAKAGE_TRIALS = 1000


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    position: int = 1
    basis_strategy: Union[int, str] = "uniform"
    t_guess: Union[int, str, None] = None
    dishonest_party: int = 0
    phase: str = "voting"
    discard_outcome: bool = False
    target_voter: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise RejectedInput(f"attack kind must be one of {ATTACK_KINDS}")
        if self.phase not in ("voting", "infrastructure"):
            raise RejectedInput("phase must be 'voting' or 'infrastructure'")
        if isinstance(self.basis_strategy, str) and self.basis_strategy != "uniform":
            raise RejectedInput("basis_strategy must be a basis index or 'uniform'")
        if isinstance(self.t_guess, str) and self.t_guess != "uniform":
            raise RejectedInput("t_guess must be an integer or 'uniform'")

    def validate(self, config: ProtocolConfig) -> None:
        if self.kind == "intercept-resend" and not 0 <= self.position <= config.n_voters:
            raise RejectedInput(f"link position {self.position} outside 0..{config.n_voters}")
        if isinstance(self.basis_strategy, int) and self.basis_strategy not in config.family.protocol_bases:
            raise RejectedInput(f"basis {self.basis_strategy} is not a protocol basis")
        if isinstance(self.t_guess, int) and not 0 <= self.t_guess < config.dim:
            raise RejectedInput(f"t_guess must lie in [0, {config.dim})")
        if not 0 <= self.dishonest_party < config.n_voters:
            raise RejectedInput("dishonest_party out of range")

    def target(self) -> int:
        if self.target_voter is not None:
            return self.target_voter
        return max(self.position - 1, 0)


def _stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else float("nan")


@dataclass
class AttackReport:
    trials: int
    detection_probability: Optional[float] = None
    detection_stderr: Optional[float] = None
    attack_success_probability: Optional[float] = None
    attack_success_stderr: Optional[float] = None
    leakage: Optional[float] = None
    leakage_stderr: Optional[float] = None
    spec: dict = field(default_factory=dict)
    master_seed: Optional[int] = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("spec", "extras")}
        out.update({f"spec_{k}": v for k, v in self.spec.items()})
        out.update(self.extras)
        return out


class LeakageEstimate(NamedTuple):
    bits: float
    stderr: float


# ---------------------------------------------------------------- information measures

def _encode(columns: Sequence[np.ndarray]) -> np.ndarray:
    """Map rows of small non-negative integers to single integer codes."""
    code = np.zeros(len(columns[0]), dtype=np.int64)
    for col in columns:
        col = np.asarray(col, dtype=np.int64)
        code = code * (int(col.max()) + 1 if col.size else 1) + col
    return code


def _mi_from_codes(x: np.ndarray, y: np.ndarray) -> float:
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    joint = np.zeros((xi.max() + 1, yi.max() + 1))
    np.add.at(joint, (xi, yi), 1)
    joint /= joint.sum()
    px, py = joint.sum(1, keepdims=True), joint.sum(0, keepdims=True)
    nz = joint > 0
    return float(max((joint[nz] * np.log2(joint[nz] / (px @ py)[nz])).sum(), 0.0))


def mutual_information(x: Sequence[int], y: Sequence[int]) -> float:
    """Plug-in mutual information in bits between two discrete samples."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape or x.size == 0:
        raise RejectedInput("need two non-empty samples of equal length")
    return _mi_from_codes(x, y)


def bootstrap_mutual_information(x, y, rng: SeededRng, resamples: int = BOOTSTRAP_RESAMPLES) -> LeakageEstimate:
    x, y = np.asarray(x), np.asarray(y)
    point = mutual_information(x, y)
    n = x.size
    boots = [_mi_from_codes(x[idx], y[idx]) for idx in (rng.integers(n, size=n) for _ in range(resamples))]
    return LeakageEstimate(point, float(np.std(boots, ddof=1)))


# ---------------------------------------------------------------- intercept-resend

class _InterceptSample(NamedTuple):
    passed: np.ndarray
    true_basis: np.ndarray
    guess: np.ndarray
    outcome: np.ndarray
    target_veto: np.ndarray


def _intercept_trials(config: ProtocolConfig, spec: AttackSpec, trials: int, rng: SeededRng) -> _InterceptSample:
    bases = config.family.protocol_bases
    d, k = config.dim, spec.position
    target = spec.target()
    cols = np.zeros((5, trials), dtype=np.int64)
    for i in range(trials):
        exps = balanced_exponents(config, rng)
        if spec.phase == "voting":
            vetoes = [bool(rng.integers(2)) for _ in range(config.n_voters)]
            sent = StateId(rng.integers(2), 0)
        else:
            vetoes = [False] * config.n_voters
            sent = StateId(rng.choice(bases), rng.integers(d))
        actions = voter_actions(exps, vetoes)
        before, after = actions[:k], actions[k:]
        true_basis = flying_state_id(d, sent, before).basis
        guess = spec.basis_strategy if isinstance(spec.basis_strategy, int) else rng.choice(bases)
        seen = sample_outcome(outcome_distribution(d, sent, before, guess, config.visibility), rng)
        # only the sifted run is checked, so the receiver measures in the sender's basis
        final = sample_outcome(
            outcome_distribution(d, StateId(guess, seen), after, sent.basis, config.visibility), rng
        )
        ideal = flying_state_id(d, sent, actions)
        cols[:, i] = (final == ideal.vector, true_basis, guess, 0 if spec.discard_outcome else seen,
                      vetoes[target])
    return _InterceptSample(cols[0].astype(bool), *cols[1:])


def simulate_intercept_resend(config: ProtocolConfig, spec: AttackSpec, trials: int, rng: SeededRng,
                              with_leakage: bool = True) -> AttackReport:
    if spec.kind != "intercept-resend":
        raise RejectedInput("spec.kind must be 'intercept-resend'")
    spec.validate(config)
    s = _intercept_trials(config, spec, trials, rng)
    pass_p = float(s.passed.mean())
    n_bases = len(config.family.protocol_bases)
    extras = {
        "pass_probability": pass_p,
        "intercepted_basis_frequencies": (np.bincount(s.true_basis, minlength=n_bases) / trials).tolist(),
    }
    report = AttackReport(
        trials,
        detection_probability=1 - pass_p,
        detection_stderr=_stderr(pass_p, trials),
        attack_success_probability=pass_p,
        attack_success_stderr=_stderr(pass_p, trials),
        spec=asdict(spec),
        master_seed=rng.seed,
        extras=extras,
    )
    if with_leakage and spec.phase == "voting":
        est = bootstrap_mutual_information(_encode([s.guess, s.outcome]), s.target_veto, rng.derive(1))
        report.leakage, report.leakage_stderr = est
    return report


def estimate_vote_leakage(config: ProtocolConfig, spec: AttackSpec, trials: int, rng: SeededRng) -> LeakageEstimate:
    """Information (bits) the eavesdropper's (basis guess, outcome) carries about one voter's veto."""
    if spec.kind != "intercept-resend" or spec.phase != "voting":
        raise RejectedInput("leakage is defined for voting-phase intercept-resend attacks")
    if trials < MIN_LEAKAGE_TRIALS:
        raise RejectedInput(f"need at least {MIN_LEAKAGE_TRIALS} trials, got {trials}")
    spec.validate(config)
    s = _intercept_trials(config, spec, trials, rng)
    return bootstrap_mutual_information(_encode([s.guess, s.outcome]), s.target_veto, rng.derive(1))


# ---------------------------------------------------------------- voter cancellation

def simulate_voter_cancellation(config: ProtocolConfig, honest_vetoes, spec: AttackSpec, trials: int,
                                rng: SeededRng) -> AttackReport:
    """Dishonest voter applies ``V^(d - t_guess)``.

    ``honest_vetoes`` is either a fixed pattern for the honest voters or
    ``"uniform-count"`` (honest veto count drawn uniformly from ``0..d-1``).
    Success is the fraction of trials with at least one honest veto that
    still tally to zero.
    """
    if spec.kind != "voter-cancel":
        raise RejectedInput("spec.kind must be 'voter-cancel'")
    spec.validate(config)
    d, n_honest = config.dim, config.n_voters - 1
    if spec.t_guess is None:
        raise RejectedInput("voter-cancel needs t_guess")
    if config.single_veto_limit:
        powers = range(d) if spec.t_guess == "uniform" else [(d - spec.t_guess) % d]
        if any(p not in (0, 1) for p in powers):
            raise RejectedInput("single-veto hardware limits voters to V^0 or V^1; cancellation unavailable")
    if honest_vetoes == "uniform-count":
        if n_honest < d - 1:
            raise RejectedInput(f"uniform honest counts on 0..{d - 1} need at least {d - 1} honest voters")
    elif len(honest_vetoes) != n_honest:
        raise RejectedInput(f"expected {n_honest} honest veto flags")
    cheat_cfg = ProtocolConfig(dim=d, n_voters=config.n_voters, mode="trusted", disclosure="veto-count",
                               visibility=config.visibility)

    with_veto = cancelled = 0
    for _ in range(trials):
        if honest_vetoes == "uniform-count":
            t = rng.integers(d)
            honest = [i < t for i in range(n_honest)]
        else:
            honest = list(honest_vetoes)
        guess = rng.integers(d) if spec.t_guess == "uniform" else spec.t_guess
        exps = balanced_exponents(config, rng)
        it = iter(honest)
        actions = [
            (x, (d - guess) % d) if i == spec.dishonest_party else (x, int(next(it)))
            for i, x in enumerate(exps)
        ]
        sent = StateId(rng.integers(2), 0)
        measured = sample_outcome(outcome_distribution(d, sent, actions, sent.basis, config.visibility), rng)
        outcome = tally_vetoes(sent, (sent.basis, measured), cheat_cfg)
        if any(honest):
            with_veto += 1
            cancelled += outcome.veto_count == 0
    p = cancelled / with_veto if with_veto else float("nan")
    return AttackReport(
        trials,
        attack_success_probability=p,
        attack_success_stderr=_stderr(p, with_veto),
        spec=asdict(spec),
        master_seed=rng.seed,
        extras={"trials_with_honest_veto": with_veto},
    )


# ---------------------------------------------------------------- dishonest endpoints

def _endpoints(behavior):
    if isinstance(behavior, tuple):
        return behavior
    return {
        "honest": (HonestSender(), HonestReceiver()),
        "sender-lie": (LyingSender(), HonestReceiver()),
        "receiver-lie": (HonestSender(), LyingReceiver()),
    }[behavior]


def simulate_dishonest_endpoints(config: ProtocolConfig, behavior, trials: int, rng: SeededRng,
                                 honesty_runs: int = 1) -> AttackReport:
    """Detection rate of lying endpoints from ``honesty_runs`` sifted all-zero-trit runs.

    ``behavior`` is ``"honest"``, ``"sender-lie"``, ``"receiver-lie"`` or a
    ``(sender, receiver)`` pair of behaviour objects.
    """
    if honesty_runs < 1:
        raise RejectedInput("honesty_runs must be positive")
    sender, receiver = _endpoints(behavior)
    plans = [VoterPlan(0) for _ in range(config.n_voters)]
    zeros = [0] * config.n_voters
    detected = 0
    for _ in range(trials):
        caught = False
        for _ in range(honesty_runs):
            # conditioning on a sifted run == receiver measuring in the announced basis
            rec = untrusted_run(config, plans, zeros, rng, sender, receiver, receiver_basis="match")
            caught |= not rec.matched
        detected += caught
    p = detected / trials
    name = behavior if isinstance(behavior, str) else type(receiver).__name__
    return AttackReport(
        trials,
        detection_probability=p,
        detection_stderr=_stderr(p, trials),
        attack_success_probability=1 - p,
        attack_success_stderr=_stderr(p, trials),
        spec={"kind": name, "honesty_runs": honesty_runs},
        master_seed=rng.seed,
    )
