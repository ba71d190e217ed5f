"""Experiment drivers: table reproduction, protocol and attack runs, reports.

Table rows live in ``data/table_rows.json`` (one object per row: sender,
voter actions, receiver basis, table number, and the published detector
frequencies for comparison).  Every row is simulated with its own
``SeededRng(master_seed).derive(table, row)`` stream, so a report depends only
on the ExperimentSpec, never on execution order.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import adversary
from .adversary import AttackReport, AttackSpec
from .errors import RejectedInput, ReportWriteError
from .mub import (
    build_mub_family,
    identify_state,
    parse_basis_label,
    parse_state_label,
    u_generator,
    v_generator,
)
from .physical import (
    VOTER_SETTINGS,
    PreparationSettings,
    VisibilityModel,
    calibrate_visibility,
    preparation_to_state,
    settings_to_unitary,
)
from .protocol import (
    HonestReceiver,
    HonestSender,
    LyingReceiver,
    LyingSender,
    ProtocolConfig,
    draw_voter_plans,
    outcome_distribution,
    run_trusted_protocol,
    run_untrusted_protocol,
)
from .qudit import (
    OutcomeDistribution,
    SeededRng,
    apply_diagonal,
    compose_diagonals,
    equal_up_to_global_phase,
    power_of_diagonal,
    sample_outcomes,
)

KINDS = ("table-1", "table-2", "table-3", "protocol", "attack")
FORMATS = ("csv", "json")
DEFAULT_VISIBILITY = 0.94
DEFAULT_TRIALS = 100_000
CSV_COLUMNS = ("sender", "voter1", "voter2", "voter3", "basis",
               "D1", "D1_err", "D2", "D2_err", "D3", "D3_err", "D4", "D4_err")

# vector index (0-based column of B1/B2) -> detector index (0-based D1..D4)
DETECTOR_MAP = {0: (0, 3, 1, 2), 1: (0, 3, 1, 2)}

ACTION_POWERS = {"1": (0, 0), "I": (0, 0), "U": (1, 0), "V": (0, 1), "UV": (1, 1)}


def sig4(x: float) -> float:
    return float(f"{x:.4g}")


def _round_floats(obj):
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else sig4(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


@dataclass
class ExperimentSpec:
    kind: str
    dim: int = 4
    n_voters: int = 3
    visibility: float = DEFAULT_VISIBILITY
    background: float = 0.0
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    format: str = "csv"
    out: Optional[str] = None
    per_row_calibration: bool = False
    # protocol runs
    mode: str = "trusted"
    votes: Sequence[int] = ()
    disclosure: str = "veto-boolean"
    transcript: Optional[str] = None
    n_runs: int = 600
    sender: str = "honest"
    receiver: str = "honest"
    # attack runs
    attack: Optional[dict] = None
    honest_vetoes: object = "uniform-count"
    honesty_runs: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RejectedInput(f"kind must be one of {KINDS}")
        if self.format not in FORMATS:
            raise RejectedInput(f"format must be one of {FORMATS}")
        if self.trials < 1:
            raise RejectedInput("trials must be at least 1")
        if self.kind.startswith("table") and self.dim != 4:
            raise RejectedInput("the experiment tables are ququart (dim 4) only")
        if self.kind == "protocol" and self.votes and len(self.votes) != self.n_voters:
            raise RejectedInput(f"{len(self.votes)} votes given for {self.n_voters} voters")
        if self.kind == "attack" and not self.attack:
            raise RejectedInput("attack experiments need an 'attack' block")

    @property
    def table(self) -> int:
        return int(self.kind.split("-")[1])

    @property
    def visibility_model(self) -> VisibilityModel:
        return VisibilityModel(self.visibility, self.background)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise RejectedInput(f"unknown spec fields: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise RejectedInput(f"cannot read spec {path}: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["votes"] = list(d["votes"])
        return d


@dataclass(frozen=True)
class TableRow:
    table: int
    sender: str
    actions: tuple
    basis: str
    probs: tuple
    errs: tuple
    expected: tuple
    published: Optional[tuple] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("actions", "probs", "errs", "expected", "published"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "TableRow":
        tup = lambda v: None if v is None else tuple(v)
        return cls(obj["table"], obj["sender"], tup(obj["actions"]), obj["basis"],
                   tup(obj["probs"]), tup(obj["errs"]), tup(obj["expected"]), tup(obj.get("published")))


@dataclass
class TableReport:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"metadata": dict(self.metadata), "rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, obj: dict) -> "TableReport":
        return cls([TableRow.from_dict(r) for r in obj["rows"]], dict(obj["metadata"]))

    def __eq__(self, other):
        return isinstance(other, TableReport) and self.to_dict() == other.to_dict()


# ---------------------------------------------------------------- tables

def load_manifest(path=None) -> list:
    if path is None:
        text = resources.files("qveto").joinpath("data/table_rows.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def parse_actions(labels: Sequence[str]) -> list:
    try:
        return [ACTION_POWERS[a] for a in labels]
    except KeyError as exc:
        raise RejectedInput(f"unknown voter action {exc.args[0]!r}; expected one of {sorted(ACTION_POWERS)}") from None


def row_distribution(row: dict, model: VisibilityModel) -> OutcomeDistribution:
    """Outcome distribution over the receiver basis's vector indices for a manifest row."""
    sent = parse_state_label(row["sender"])
    basis = parse_basis_label(row["basis"])
    if sent.basis not in (0, 1) or basis not in (0, 1):
        raise RejectedInput(f"row {row} references a basis outside B1/B2")
    return outcome_distribution(4, sent, parse_actions(row["actions"]), basis, model)


def to_detectors(probs, basis: int) -> np.ndarray:
    out = np.zeros(4)
    for l, det in enumerate(DETECTOR_MAP[basis]):
        out[det] = probs[l]
    return out


def reproduce_table(spec: ExperimentSpec, manifest: Optional[list] = None) -> TableReport:
    if not spec.kind.startswith("table"):
        raise RejectedInput("reproduce_table needs a table-N spec")
    manifest = load_manifest() if manifest is None else manifest
    rows = [r for r in manifest if r["table"] == spec.table]
    master = SeededRng(spec.master_seed)
    report = TableReport(metadata={
        "table": spec.table, "visibility": spec.visibility, "background": spec.background,
        "trials": spec.trials, "seed": spec.master_seed, "per_row_calibration": spec.per_row_calibration,
    })
    for i, row in enumerate(rows):
        model = spec.visibility_model
        ideal = row_distribution(row, VisibilityModel())
        if spec.per_row_calibration and row.get("published") and ideal.probs.max() > 0.999:
            model = VisibilityModel(calibrate_visibility(max(row["published"]), 4), spec.background)
        dist = row_distribution(row, model)
        basis = parse_basis_label(row["basis"])
        outcomes = sample_outcomes(dist, master.derive(spec.table, i), spec.trials)
        freq = to_detectors(np.bincount(outcomes, minlength=4) / spec.trials, basis)
        errs = np.sqrt(freq * (1 - freq) / spec.trials)
        report.rows.append(TableRow(
            spec.table, row["sender"], tuple(row["actions"]), row["basis"],
            tuple(sig4(x) for x in freq), tuple(sig4(x) for x in errs),
            tuple(sig4(x) for x in to_detectors(dist.probs, basis)),
            tuple(row["published"]) if row.get("published") else None,
        ))
    return report


def table_row_within(row: TableRow, trials: int, n_sigma: float = 4.0) -> bool:
    """Empirical frequencies within ``n_sigma`` binomial errors of the model expectation."""
    for p, e in zip(row.probs, row.expected):
        sigma = math.sqrt(max(e * (1 - e), 1e-12) / trials)
        # 4-significant-digit rounding adds up to 5e-5 of slack
        if abs(p - e) > n_sigma * sigma + 5e-5:
            return False
    return True


# ---------------------------------------------------------------- protocol / attack

_SENDERS = {"honest": HonestSender, "lie": LyingSender}
_RECEIVERS = {"honest": HonestReceiver, "lie": LyingReceiver}


def protocol_config(spec: ExperimentSpec) -> ProtocolConfig:
    return ProtocolConfig(dim=spec.dim, n_voters=spec.n_voters, mode=spec.mode,
                          disclosure=spec.disclosure, visibility=spec.visibility_model)


def run_protocol_experiment(spec: ExperimentSpec, votes: Sequence[int], rng: SeededRng) -> tuple:
    """Run one protocol instance; returns ``(outcome, transcript, summary)``."""
    if spec.kind != "protocol":
        raise RejectedInput("run_protocol_experiment needs a protocol spec")
    config = protocol_config(spec)
    vetoes = [bool(v) for v in votes]
    if len(vetoes) != config.n_voters:
        raise RejectedInput(f"{len(vetoes)} votes given for {config.n_voters} voters")
    summary = {"mode": config.mode, "dim": config.dim, "n_voters": config.n_voters,
               "disclosure": config.disclosure, "visibility": spec.visibility, "seed": spec.master_seed}
    if config.mode == "untrusted":
        try:
            sender, receiver = _SENDERS[spec.sender](), _RECEIVERS[spec.receiver]()
        except KeyError:
            raise RejectedInput("sender/receiver must be 'honest' or 'lie'") from None
        plans = draw_voter_plans(config, vetoes, spec.n_runs, rng)
        honesty, outcome, transcript = run_untrusted_protocol(config, plans, sender, receiver, spec.n_runs, rng)
        summary.update(asdict(honesty))
        summary["aborted"] = outcome is None
    else:
        outcome, transcript = run_trusted_protocol(config, vetoes, rng)
        infra = [r for r in transcript if r.phase == "infrastructure"]
        summary["infrastructure_runs"] = len(infra)
        summary["infrastructure_attempts"] = transcript.meta.get("infrastructure_attempts")
        summary["voting_runs"] = sum(r.phase == "voting" for r in transcript)
    summary["runs"] = len(transcript)
    if outcome is not None:
        summary.update(veto_present=outcome.veto_present, veto_count=outcome.veto_count,
                       matched_run=outcome.matched_run)
    if spec.transcript:
        transcript.write(spec.transcript)
    return outcome, transcript, summary


def run_attack_experiment(spec: ExperimentSpec, attack: AttackSpec, rng: SeededRng) -> AttackReport:
    if spec.kind != "attack":
        raise RejectedInput("run_attack_experiment needs an attack spec")
    config = ProtocolConfig(dim=spec.dim, n_voters=spec.n_voters, mode="untrusted"
                            if attack.kind in ("sender-lie", "receiver-lie") else "trusted",
                            visibility=spec.visibility_model)
    if attack.kind == "intercept-resend":
        return adversary.simulate_intercept_resend(config, attack, spec.trials, rng)
    if attack.kind == "voter-cancel":
        honest = spec.honest_vetoes
        if not isinstance(honest, str):
            honest = [bool(v) for v in honest]
        return adversary.simulate_voter_cancellation(config, honest, attack, spec.trials, rng)
    return adversary.simulate_dishonest_endpoints(config, attack.kind, spec.trials, rng, spec.honesty_runs)


# ---------------------------------------------------------------- verification

def verify_mub(d: int) -> dict:
    """Unbiasedness and generator-cycling checks for one family dimension."""
    fam = build_mub_family(d)
    u, v = u_generator(d), v_generator(d)
    err = fam.max_cross_overlap_error()
    v_ok = u_ok = True
    for j in fam.protocol_bases:
        for l in range(d):
            s = fam.state((j, l))
            vs, us = apply_diagonal(s, v), apply_diagonal(s, u)
            if d == 4:
                v_ok &= equal_up_to_global_phase(vs, fam.state((j, (l + 1) % d)), 1e-12)
                u_ok &= equal_up_to_global_phase(us, fam.state((1 - j, l)), 1e-12)
            elif d == 2:
                v_ok &= identify_state(vs, fam) == (j, 1 - l)
                u_ok &= identify_state(us, fam) is not None and identify_state(us, fam).basis == 1 - j
            else:
                v_ok &= vs.allclose(fam.state((j, (l + 1) % d)), 1e-12)
                u_ok &= us.allclose(fam.state(((j + 1) % d, l)), 1e-12)
    if d == 2:
        u_ok &= compose_diagonals(u, u).allclose(v, 1e-12)
    if d == 4:
        u_ok &= compose_diagonals(u, u).allclose(power_of_diagonal(u, 0), 1e-12)
    return {
        "dim": d, "bases": len(fam), "includes_computational": fam.includes_computational,
        "max_overlap_error": err, "unbiased": err < 1e-10, "v_cycles": bool(v_ok), "u_cycles": bool(u_ok),
        "ok": bool(err < 1e-10 and v_ok and u_ok),
    }


def family_dict(d: int) -> dict:
    fam = build_mub_family(d)
    return {
        "dim": d,
        "bases": [
            [[[float(z.real), float(z.imag)] for z in s.amplitudes] for s in basis.states]
            for basis in fam.bases
        ],
    }


APPARATUS_PREPARATIONS = {
    "S_1_1": PreparationSettings(math.radians(22.5), math.radians(22.5)),
    "S_1_3": PreparationSettings(math.radians(-22.5), math.radians(-22.5)),
    "S_2_1": PreparationSettings(math.radians(22.5), math.radians(-22.5)),
}


def verify_apparatus() -> dict:
    u, v = u_generator(4), v_generator(4)
    targets = {"U": u, "V": v, "UV": compose_diagonals(u, v)}
    fam = build_mub_family(4)
    settings = {
        name: {
            "settings": [s.theta1, s.theta2, s.phi2],
            "ok": settings_to_unitary(s).allclose(targets[name], 1e-12),
        }
        for name, s in VOTER_SETTINGS.items()
    }
    preps = {
        name: {"ok": equal_up_to_global_phase(preparation_to_state(p), fam.state(parse_state_label(name)), 1e-12)}
        for name, p in APPARATUS_PREPARATIONS.items()
    }
    ok = all(x["ok"] for x in settings.values()) and all(x["ok"] for x in preps.values())
    return {"voter_settings": settings, "preparations": preps, "ok": ok}


# ---------------------------------------------------------------- reports

def _fmt(x) -> str:
    return format(x, ".4g")


def render_report(report, fmt: str) -> str:
    if fmt not in FORMATS:
        raise RejectedInput(f"format must be one of {FORMATS}")
    if isinstance(report, TableReport):
        if fmt == "json":
            return json.dumps(_round_floats(report.to_dict()), indent=2) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.rows:
            cells = [r.sender, *(list(r.actions) + ["", "", ""])[:3], r.basis]
            for p, e in zip(r.probs, r.errs):
                cells += [_fmt(p), _fmt(e)]
            w.writerow(cells)
        return buf.getvalue()
    obj = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    obj = _round_floats(obj)
    if fmt == "json":
        return json.dumps(obj, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(obj.keys())
    w.writerow(json.dumps(v) if isinstance(v, (list, dict)) else ("" if v is None else v) for v in obj.values())
    return buf.getvalue()


def emit_report(report, fmt: str, path) -> str:
    text = render_report(report, fmt)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ReportWriteError(f"cannot write report to {path}: {exc}") from exc
    return text


def parse_report(text: str) -> TableReport:
    return TableReport.from_dict(json.loads(text))
