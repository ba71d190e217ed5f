"""Flying-qudit anonymous veto protocol.

A sender prepares one state, the voters act on it in turn with ``U^x`` (a
privacy-hiding basis change) and optionally ``V`` (a veto, one cyclic shift
within the basis), and a receiver measures.  Every voter action is a power of
the two diagonal generators, so an action is stored as a ``(u_power,
v_power)`` pair and a whole flight reduces to the summed powers.

Runs are recorded as :class:`RunRecord` values inside an append-only
:class:`Transcript`, which serialises to JSON lines.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from .errors import (
    Inconclusive,
    InsufficientData,
    NotSifted,
    ProtocolAbort,
    RejectedInput,
    ReportWriteError,
)
from .mub import (
    ODD_PRIMES,
    FAMILY_DIMS,
    MubFamily,
    StateId,
    build_mub_family,
    generator_orders,
    identify_state,
    u_generator,
    v_generator,
)
from .physical import VisibilityModel, apply_visibility
from .qudit import (
    OutcomeDistribution,
    QuditState,
    SeededRng,
    apply_diagonal,
    born_probabilities,
    power_of_diagonal,
    sample_outcome,
)

MODES = ("trusted", "untrusted", "qubit-simple")
DISCLOSURES = ("veto-boolean", "veto-count")
PHASES = ("infrastructure", "voting", "honesty-test", "mixed")
ACTION_LABELS = ("1", "U", "V", "UV", "Ux", "UxV")
IDEAL = VisibilityModel()


@dataclass(frozen=True)
class ProtocolConfig:
    dim: int = 4
    n_voters: int = 3
    mode: str = "trusted"
    infra_runs: int = 10
    disclosure: str = "veto-boolean"
    visibility: VisibilityModel = IDEAL
    match_threshold: Optional[float] = None
    max_attempts: int = 1000
    single_veto_limit: bool = False

    def __post_init__(self):
        if self.dim not in FAMILY_DIMS:
            raise RejectedInput(f"unsupported dimension {self.dim}; supported: {FAMILY_DIMS}")
        if self.mode not in MODES:
            raise RejectedInput(f"mode must be one of {MODES}")
        if self.disclosure not in DISCLOSURES:
            raise RejectedInput(f"disclosure must be one of {DISCLOSURES}")
        if self.n_voters < 1 or self.infra_runs < 1 or self.max_attempts < 1:
            raise RejectedInput("n_voters, infra_runs and max_attempts must be positive")
        if self.mode == "qubit-simple" and (self.dim != 2 or self.n_voters <= 2):
            raise RejectedInput("qubit mode needs dim 2 and more than two voters")
        if self.dim in ODD_PRIMES and self.dim <= self.n_voters:
            raise RejectedInput(f"collision-free counting needs dim > n_voters ({self.dim} <= {self.n_voters})")
        if self.match_threshold is not None and not 0.0 <= self.match_threshold <= 1.0:
            raise RejectedInput("match_threshold must lie in [0, 1]")

    @property
    def family(self) -> MubFamily:
        return build_mub_family(self.dim)

    @property
    def exponent_modulus(self) -> int:
        """Order of U: 4 for d=2, 2 for d=4, d for odd primes."""
        return generator_orders(self.dim)[0]

    @property
    def veto_modulus(self) -> int:
        return generator_orders(self.dim)[1]

    def threshold(self) -> float:
        """Minimum fraction of sifted runs that must match to accept.

        Ideal channel: every run.  Noisy channel: the expected match rate
        ``v + (1-v)/d`` less three binomial standard errors over ``infra_runs``.
        """
        if self.match_threshold is not None:
            return self.match_threshold
        if self.visibility.is_ideal:
            return 1.0
        p = apply_visibility(OutcomeDistribution([1.0] + [0.0] * (self.dim - 1)), self.visibility)[0]
        return p - 3 * math.sqrt(p * (1 - p) / self.infra_runs)


@dataclass(frozen=True)
class VoterPlan:
    exponent: int
    veto: bool = False
    trits: Optional[tuple] = None

    def __post_init__(self):
        if self.exponent < 0:
            raise RejectedInput("exponent must be non-negative")
        if self.trits is not None:
            object.__setattr__(self, "trits", tuple(int(t) for t in self.trits))
            if any(t not in (0, 1, 2) for t in self.trits):
                raise RejectedInput("trits must be 0, 1 or 2")


def action_label(u_power: int, v_power: int) -> str:
    u = {0: "", 1: "U"}.get(u_power, "Ux")
    v = "V" if v_power else ""
    return (u + v) or "1"


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    phase: str
    sent: StateId
    receiver_basis: int
    measured: StateId
    actions: tuple
    trits: Optional[tuple] = None

    @property
    def sifted(self) -> bool:
        return self.sent.basis == self.receiver_basis

    @property
    def matched(self) -> bool:
        return self.measured == self.sent

    @property
    def announcements(self) -> tuple:
        items = [
            ("sender_basis", self.sent.basis),
            ("sender_state", self.sent.vector),
            ("receiver_basis", self.receiver_basis),
        ]
        if self.trits is not None:
            items.append(("trits", self.trits))
        return tuple(items)

    def to_dict(self) -> dict:
        # field order is part of the transcript format
        return {
            "run_index": self.run_index,
            "phase": self.phase,
            "sent": {"basis": self.sent.basis, "vector": self.sent.vector},
            "receiver_basis": self.receiver_basis,
            "measured": {"basis": self.measured.basis, "vector": self.measured.vector},
            "actions": list(self.actions),
            "trits": None if self.trits is None else list(self.trits),
            "sifted": self.sifted,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RunRecord":
        rec = cls(
            run_index=int(obj["run_index"]),
            phase=obj["phase"],
            sent=StateId(obj["sent"]["basis"], obj["sent"]["vector"]),
            receiver_basis=int(obj["receiver_basis"]),
            measured=StateId(obj["measured"]["basis"], obj["measured"]["vector"]),
            actions=tuple(obj["actions"]),
            trits=None if obj["trits"] is None else tuple(obj["trits"]),
        )
        if rec.sifted != obj["sifted"]:
            raise RejectedInput(f"run {rec.run_index}: 'sifted' flag disagrees with the bases")
        return rec


@dataclass
class Transcript:
    config: ProtocolConfig
    runs: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)  # not serialised

    def append(self, run: RunRecord) -> None:
        if self.runs and run.run_index <= self.runs[-1].run_index:
            raise RejectedInput("run indices must be strictly increasing")
        if run.phase not in PHASES:
            raise RejectedInput(f"unknown phase {run.phase!r}")
        self.runs.append(run)

    def extend(self, runs: Iterable[RunRecord]) -> None:
        for r in runs:
            self.append(r)

    @property
    def next_index(self) -> int:
        return self.runs[-1].run_index + 1 if self.runs else 0

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.runs)

    def write(self, path) -> None:
        try:
            Path(path).write_text(self.to_jsonl())
        except OSError as exc:
            raise ReportWriteError(f"cannot write transcript to {path}: {exc}") from exc

    @classmethod
    def from_jsonl(cls, text: str, config: ProtocolConfig) -> "Transcript":
        t = cls(config)
        t.extend(RunRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip())
        return t

    def __len__(self):
        return len(self.runs)

    def __iter__(self):
        return iter(self.runs)


@dataclass(frozen=True)
class VotingOutcome:
    veto_present: bool
    veto_count: Optional[int]
    matched_run: Optional[int] = None


# ---------------------------------------------------------------- pipeline

def propagate(dim: int, sent, actions: Sequence[tuple]) -> QuditState:
    """Apply each voter's ``U^a V^b`` to the family state ``sent`` in order."""
    u, v = u_generator(dim), v_generator(dim)
    state = build_mub_family(dim).state(sent)
    for a, b in actions:
        if a:
            state = apply_diagonal(state, power_of_diagonal(u, a))
        if b:
            state = apply_diagonal(state, power_of_diagonal(v, b))
    return state


@lru_cache(maxsize=4096)
def _distribution(dim: int, sent: StateId, u_power: int, v_power: int, basis: int,
                  visibility: VisibilityModel) -> OutcomeDistribution:
    state = propagate(dim, sent, [(u_power, v_power)])
    dist = born_probabilities(state, build_mub_family(dim).bases[basis])
    return dist if visibility.is_ideal else apply_visibility(dist, visibility)


@lru_cache(maxsize=4096)
def _flying_id(dim: int, sent: StateId, u_power: int, v_power: int) -> Optional[StateId]:
    return identify_state(propagate(dim, sent, [(u_power, v_power)]), build_mub_family(dim))


def _reduce(dim: int, actions: Sequence[tuple]) -> tuple:
    u_mod, v_mod = generator_orders(dim)
    return sum(a for a, _ in actions) % u_mod, sum(b for _, b in actions) % v_mod


def outcome_distribution(dim: int, sent, actions: Sequence[tuple], basis: int,
                         visibility: VisibilityModel = IDEAL) -> OutcomeDistribution:
    """Receiver's outcome distribution in ``basis`` after the given voter actions.

    Diagonal gates commute, so only the summed powers matter; results are
    cached on them.
    """
    upow, vpow = _reduce(dim, actions)
    return _distribution(dim, StateId(*sent), upow, vpow, basis, visibility)


def flying_state_id(dim: int, sent, actions: Sequence[tuple]) -> Optional[StateId]:
    """Family label of the state after ``actions`` (``None`` if it left the family)."""
    upow, vpow = _reduce(dim, actions)
    return _flying_id(dim, StateId(*sent), upow, vpow)


def transmit(config: ProtocolConfig, sent, actions: Sequence[tuple], basis: int, rng: SeededRng) -> int:
    return sample_outcome(outcome_distribution(config.dim, sent, actions, basis, config.visibility), rng)


# ---------------------------------------------------------------- infrastructure

def draw_secret_exponents(config: ProtocolConfig, rng: SeededRng) -> list:
    return [rng.integers(config.exponent_modulus) for _ in range(config.n_voters)]


def balanced_exponents(config: ProtocolConfig, rng: SeededRng) -> list:
    """Uniform draw conditioned on the exponents summing to 0 mod the order of U."""
    mod = config.exponent_modulus
    xs = [rng.integers(mod) for _ in range(config.n_voters - 1)]
    return xs + [(-sum(xs)) % mod]


def voter_actions(exponents: Sequence[int], vetoes: Optional[Sequence[bool]] = None) -> list:
    vetoes = vetoes if vetoes is not None else [False] * len(exponents)
    if len(vetoes) != len(exponents):
        raise RejectedInput("one veto flag per voter required")
    return [(int(x), 1 if v else 0) for x, v in zip(exponents, vetoes)]


def infrastructure_round(config: ProtocolConfig, exponents: Sequence[int], rng: SeededRng,
                         run_index: int = 0, sent=None, receiver_basis: Optional[int] = None) -> RunRecord:
    """One setup run: random family state, voters apply ``U^x``, random receiver basis.

    ``sent`` / ``receiver_basis`` pin the random choices (used to replay table rows).
    """
    bases = config.family.protocol_bases
    if sent is None:
        sent = StateId(rng.choice(bases), rng.integers(config.dim))
    if receiver_basis is None:
        receiver_basis = rng.choice(bases)
    actions = voter_actions(exponents)
    outcome = transmit(config, sent, actions, receiver_basis, rng)
    return RunRecord(
        run_index, "infrastructure", StateId(*sent), receiver_basis, StateId(receiver_basis, outcome),
        tuple(action_label(a, b) for a, b in actions),
    )


def _meets_threshold(matches: int, total: int, config: ProtocolConfig) -> bool:
    return total > 0 and matches / total >= config.threshold() - 1e-12


def accept_infrastructure(records: Sequence[RunRecord], config: ProtocolConfig) -> bool:
    if any(not r.sifted for r in records):
        raise RejectedInput("accept_infrastructure expects sifted runs only")
    if len(records) < config.infra_runs:
        raise InsufficientData(f"{len(records)} sifted runs, {config.infra_runs} required")
    return _meets_threshold(sum(r.matched for r in records), len(records), config)


class InfrastructureAttempt(NamedTuple):
    exponents: list
    runs: list
    accepted: bool


class Infrastructure(NamedTuple):
    exponents: list
    runs: list
    attempts: int


def attempt_infrastructure(config: ProtocolConfig, rng: SeededRng, start_index: int = 0) -> InfrastructureAttempt:
    """Draw fresh exponents and run setup rounds until ``infra_runs`` of them are sifted."""
    exponents = draw_secret_exponents(config, rng)
    runs, sifted = [], []
    idx = start_index
    while len(sifted) < config.infra_runs:
        rec = infrastructure_round(config, exponents, rng, idx)
        runs.append(rec)
        if rec.sifted:
            sifted.append(rec)
        idx += 1
    return InfrastructureAttempt(exponents, runs, accept_infrastructure(sifted, config))


def establish_infrastructure(config: ProtocolConfig, rng: SeededRng, start_index: int = 0) -> Infrastructure:
    runs = []
    for attempt in range(1, config.max_attempts + 1):
        got = attempt_infrastructure(config, rng, start_index + len(runs))
        runs.extend(got.runs)
        if got.accepted:
            return Infrastructure(got.exponents, runs, attempt)
    raise ProtocolAbort(f"infrastructure not accepted after {config.max_attempts} attempts")


# ---------------------------------------------------------------- voting

def voting_round(config: ProtocolConfig, exponents: Sequence[int], vetoes: Sequence[bool],
                 rng: SeededRng, start_index: int = 0) -> tuple:
    """Send ``|0,0>`` and ``|1,0>`` in random order; receiver keeps one basis for both."""
    states = [StateId(0, 0), StateId(1, 0)]
    if rng.integers(2):
        states.reverse()
    receiver_basis = rng.integers(2)
    actions = voter_actions(exponents, vetoes)
    labels = tuple(action_label(a, b) for a, b in actions)
    runs = []
    for i, sent in enumerate(states):
        outcome = transmit(config, sent, actions, receiver_basis, rng)
        runs.append(RunRecord(start_index + i, "voting", sent, receiver_basis,
                              StateId(receiver_basis, outcome), labels))
    return tuple(runs)


def tally_vetoes(sent, measured, config: ProtocolConfig, matched_run: Optional[int] = None) -> VotingOutcome:
    if sent[0] != measured[0]:
        raise NotSifted(f"sent basis {sent[0]} differs from measured basis {measured[0]}")
    t = (measured[1] - sent[1]) % config.dim
    count = t if config.disclosure == "veto-count" else None
    return VotingOutcome(t != 0, count, matched_run)


def sift(transcript) -> list:
    return [r for r in transcript if r.sifted]


def run_trusted_protocol(config: ProtocolConfig, vetoes: Sequence[bool], rng: SeededRng) -> tuple:
    if config.mode not in ("trusted", "qubit-simple"):
        raise RejectedInput(f"trusted run requested with mode {config.mode!r}")
    if len(vetoes) != config.n_voters:
        raise RejectedInput("one veto flag per voter required")
    transcript = Transcript(config)
    infra = establish_infrastructure(config, rng)
    transcript.extend(infra.runs)
    transcript.meta["infrastructure_attempts"] = infra.attempts
    runs = voting_round(config, infra.exponents, vetoes, rng, transcript.next_index)
    transcript.extend(runs)
    (matched,) = [r for r in runs if r.sifted]
    return tally_vetoes(matched.sent, matched.measured, config, matched.run_index), transcript


def run_qubit_protocol(n_voters: int, vetoes: Sequence[bool], rng: SeededRng, **config_kw) -> VotingOutcome:
    """Single-qubit variant: a veto flips the state, so an even number of vetoes collides."""
    config = ProtocolConfig(dim=2, n_voters=n_voters, mode="qubit-simple", **config_kw)
    outcome, _ = run_trusted_protocol(config, vetoes, rng)
    return outcome


# ---------------------------------------------------------------- untrusted endpoints

class HonestSender:
    def prepare(self, announced: StateId, config: ProtocolConfig, rng: SeededRng) -> StateId:
        return announced


@dataclass(frozen=True)
class LyingSender:
    """Physically prepares ``mapping(announced)`` instead of the announced state.

    Default mapping: the next vector of the same basis.
    """

    mapping: Optional[Callable] = None

    def prepare(self, announced: StateId, config: ProtocolConfig, rng: SeededRng) -> StateId:
        if self.mapping is not None:
            return StateId(*self.mapping(announced))
        return StateId(announced.basis, (announced.vector + 1) % config.dim)


class HonestReceiver:
    def announce(self, outcome: int, basis: int, config: ProtocolConfig, rng: SeededRng) -> int:
        return outcome


@dataclass(frozen=True)
class LyingReceiver:
    """Ignores the detector and announces a draw from ``probs`` (uniform by default)."""

    probs: Optional[tuple] = None

    def announce(self, outcome: int, basis: int, config: ProtocolConfig, rng: SeededRng) -> int:
        dist = OutcomeDistribution(self.probs if self.probs is not None else [1 / config.dim] * config.dim)
        return sample_outcome(dist, rng)


def trit_action(plan: VoterPlan, trit: int) -> tuple:
    if trit == 0:
        return (0, 0)
    if trit == 1:
        return (plan.exponent, 0)
    return (plan.exponent, 1 if plan.veto else 0)


def _phase_for(trits: tuple) -> str:
    if len(set(trits)) != 1:
        return "mixed"
    return ("honesty-test", "infrastructure", "voting")[trits[0]]


def untrusted_run(config: ProtocolConfig, plans: Sequence[VoterPlan], trits: Sequence[int],
                  rng: SeededRng, sender=None, receiver=None, run_index: int = 0,
                  receiver_basis=None) -> RunRecord:
    """One trit-controlled run.  ``receiver_basis="match"`` forces a sifted run."""
    sender = sender or HonestSender()
    receiver = receiver or HonestReceiver()
    bases = config.family.protocol_bases
    announced = StateId(rng.choice(bases), rng.integers(config.dim))
    prepared = sender.prepare(announced, config, rng)
    if receiver_basis == "match":
        receiver_basis = announced.basis
    elif receiver_basis is None:
        receiver_basis = rng.choice(bases)
    trits = tuple(int(t) for t in trits)
    actions = [trit_action(p, t) for p, t in zip(plans, trits)]
    outcome = transmit(config, prepared, actions, receiver_basis, rng)
    outcome = receiver.announce(outcome, receiver_basis, config, rng)
    return RunRecord(run_index, _phase_for(trits), announced, receiver_basis,
                     StateId(receiver_basis, outcome),
                     tuple(action_label(a, b) for a, b in actions), trits)


def draw_voter_plans(config: ProtocolConfig, vetoes: Sequence[bool], n_runs: int, rng: SeededRng,
                     exponents: Optional[Sequence[int]] = None) -> list:
    if exponents is None:
        exponents = balanced_exponents(config, rng)
    return [
        VoterPlan(int(x), bool(v), tuple(int(t) for t in rng.integers(3, size=n_runs)))
        for x, v in zip(exponents, vetoes)
    ]


@dataclass(frozen=True)
class HonestyReport:
    verdict: str  # "honest" | "dishonest"
    honesty_runs: int
    honesty_mismatches: int
    infrastructure_runs: int
    infrastructure_mismatches: int
    infrastructure_ok: bool
    voting_runs: int

    @property
    def redo(self) -> bool:
        return not self.infrastructure_ok


def run_untrusted_protocol(config: ProtocolConfig, voter_plans: Sequence[VoterPlan], sender_behavior,
                           receiver_behavior, n_runs: int, rng: SeededRng) -> tuple:
    """Trit-randomised protocol for an untrusted sender/receiver pair.

    Returns ``(report, outcome, transcript)``; ``outcome`` is ``None`` when the
    endpoints are caught lying or the infrastructure check fails.
    """
    if config.mode != "untrusted":
        raise RejectedInput(f"untrusted run requested with mode {config.mode!r}")
    if len(voter_plans) != config.n_voters:
        raise RejectedInput("one plan per voter required")
    if any(p.trits is None or len(p.trits) < n_runs for p in voter_plans):
        raise RejectedInput(f"every plan needs {n_runs} trits")

    transcript = Transcript(config)
    for m in range(n_runs):
        trits = [p.trits[m] for p in voter_plans]
        transcript.append(untrusted_run(config, voter_plans, trits, rng, sender_behavior,
                                        receiver_behavior, run_index=m))

    usable = [r for r in sift(transcript) if len(set(r.trits)) == 1]
    by_trit = {k: [r for r in usable if r.trits[0] == k] for k in (0, 1, 2)}
    if not by_trit[0]:
        raise Inconclusive("no sifted all-zero-trit run to test the sender and receiver")
    if not by_trit[1]:
        raise Inconclusive("no sifted all-one-trit run to test the infrastructure")

    def mismatches(runs):
        return sum(not r.matched for r in runs)

    zero_bad, one_bad = mismatches(by_trit[0]), mismatches(by_trit[1])
    honest = _meets_threshold(len(by_trit[0]) - zero_bad, len(by_trit[0]), config)
    infra_ok = _meets_threshold(len(by_trit[1]) - one_bad, len(by_trit[1]), config)
    report = HonestyReport(
        "honest" if honest else "dishonest",
        len(by_trit[0]), zero_bad, len(by_trit[1]), one_bad, infra_ok, len(by_trit[2]),
    )
    if not honest or not infra_ok:
        return report, None, transcript
    if not by_trit[2]:
        raise Inconclusive("no sifted all-two-trit run to decide the vote")
    decisive = by_trit[2][0]
    return report, tally_vetoes(decisive.sent, decisive.measured, config, decisive.run_index), transcript
