"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected in ``RESULTS`` and echoed in the terminal summary by
``conftest.py`` so they show up without ``-s``.
"""
import itertools
import time

import numpy as np

from oracles import all_patterns, pipeline_probs
from qveto.adversary import AttackSpec, simulate_dishonest_endpoints, simulate_intercept_resend, \
    simulate_voter_cancellation
from qveto.harness import ExperimentSpec, render_report, reproduce_table, verify_apparatus
from qveto.cli import main
from qveto.mub import build_mub_family, identify_state, u_generator, v_generator
from qveto.protocol import (
    ProtocolConfig,
    StateId,
    attempt_infrastructure,
    flying_state_id,
    infrastructure_round,
    outcome_distribution,
    run_qubit_protocol,
    run_trusted_protocol,
)
from qveto.qudit import (
    DiagonalUnitary,
    SeededRng,
    apply_diagonal,
    equal_up_to_global_phase,
    power_of_diagonal,
)

RESULTS = {}


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def within_sigma(x, p, n, k=4):
    return abs(x - p) <= k * np.sqrt(p * (1 - p) / n)


def test_1_mub_algebra():
    t0 = time.perf_counter()
    checks = []
    for d in (2, 3, 5, 7, 11, 13, 4):
        fam = build_mub_family(d)
        mats = [b.matrix() for b in fam.bases]
        for i, k in itertools.combinations(range(len(mats)), 2):
            checks.append(np.max(np.abs(np.abs(mats[i].conj().T @ mats[k]) ** 2 - 1 / d)) < 1e-10)
        u, v = u_generator(d), v_generator(d)
        for j in fam.protocol_bases:
            for l in range(d):
                s = fam.state((j, l))
                if d == 2:
                    checks.append(equal_up_to_global_phase(apply_diagonal(s, v), fam.state((j, 1 - l))))
                    # U_2 only swaps the bases; U_2^2 = V_2 means the vector may flip too
                    moved = identify_state(apply_diagonal(s, u), fam)
                    checks.append(moved is not None and moved.basis == 1 - j)
                elif d == 4:
                    checks.append(equal_up_to_global_phase(apply_diagonal(s, v), fam.state((j, (l + 1) % 4))))
                    checks.append(equal_up_to_global_phase(apply_diagonal(s, u), fam.state((1 - j, l))))
                else:
                    checks.append(apply_diagonal(s, v).allclose(fam.state((j, (l + 1) % d)), tol=1e-12))
                    checks.append(apply_diagonal(s, u).allclose(fam.state(((j + 1) % d, l)), tol=1e-12))
        if fam.includes_computational:
            for k in range(d):
                e = fam.state((d, k))
                checks.append(equal_up_to_global_phase(apply_diagonal(e, u), e))
                checks.append(equal_up_to_global_phase(apply_diagonal(e, v), e))
    checks.append(power_of_diagonal(u_generator(2), 2).allclose(v_generator(2), tol=1e-12))
    checks.append(power_of_diagonal(u_generator(2), 4).allclose(DiagonalUnitary.identity(2), tol=1e-12))
    checks.append(power_of_diagonal(u_generator(4), 2).allclose(DiagonalUnitary.identity(4), tol=1e-12))
    dt = time.perf_counter() - t0
    ok = all(checks) and dt < 1.0
    assert record(1, ok, f"{sum(checks)}/{len(checks)} algebra checks, {dt:.2f}s (limit 1s)")


def test_2_exhaustive_tally_oracle():
    t0 = time.perf_counter()
    ops = [(0, 0), (1, 0), (0, 1), (1, 1)]  # 1, U, V, UV
    good = total = 0
    for acts in itertools.product(ops, repeat=3):
        n_u, n_v = sum(a for a, _ in acts), sum(b for _, b in acts)
        for sent in (StateId(0, 0), StateId(1, 0)):
            end_basis = (sent.basis + n_u) % 2
            predicted = (sent.vector + n_v) % 4
            for basis in (0, 1):
                probs = outcome_distribution(4, sent, acts, basis).probs
                if basis == end_basis:
                    want = np.eye(4)[predicted]
                else:
                    want = np.full(4, 0.25)
                oracle = pipeline_probs(4, sent, acts, basis)
                total += 1
                good += bool(np.array_equal(probs, want) and np.allclose(oracle, want, atol=1e-12))
    dt = time.perf_counter() - t0
    ok = good == total == 256 and dt < 1.0
    assert record(2, ok, f"{good}/{total} exact matches (64 actions x 2 states x 2 bases), {dt:.2f}s")


def test_3_table_reproduction():
    t0 = time.perf_counter()
    v = 0.94
    worst = {"peak": 0.0, "uniform": 0.0, "suppressed": 0.0}
    bad = []
    for table in (1, 2, 3):
        rep = reproduce_table(ExperimentSpec(f"table-{table}", visibility=v, trials=100_000, master_seed=0))
        for row in rep.rows:
            ideal_peaked = max(row.expected) > 0.5
            for sim, pub, exp in zip(row.probs, row.published, row.expected):
                if ideal_peaked and exp > 0.5:
                    kind, err, lim = "peak", abs(sim - pub), 0.03
                elif ideal_peaked:
                    kind, err, lim = "suppressed", abs(sim - (1 - v) / 4), 0.02
                else:
                    kind, err, lim = "uniform", abs(sim - 0.25), 0.02
                worst[kind] = max(worst[kind], err)
                if err > lim:
                    bad.append((table, row.sender, row.actions, row.basis, kind, sim, pub))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 30
    detail = ", ".join(f"worst {k} dev {e:.4f}" for k, e in worst.items())
    assert record(3, ok, f"{detail}; {len(bad)} out of tolerance, {dt:.1f}s"), bad


def test_4_protocol_end_to_end():
    t0 = time.perf_counter()
    wrong = runs = 0
    for d in (4, 5, 7):
        for n in range(1, d):
            cfg = ProtocolConfig(dim=d, n_voters=n, disclosure="veto-count")
            for i, pattern in enumerate(all_patterns(n)):
                out, _ = run_trusted_protocol(cfg, list(pattern), SeededRng(1000 * d + 10 * n).derive(i))
                runs += 1
                wrong += out.veto_count != sum(pattern) % d
    for n in (3, 4):
        for i, pattern in enumerate(all_patterns(n)):
            out = run_qubit_protocol(n, list(pattern), SeededRng(n).derive(i))
            runs += 1
            wrong += out.veto_present != bool(sum(pattern) % 2)
    dt = time.perf_counter() - t0
    ok = wrong == 0 and dt < 5
    assert record(4, ok, f"{runs - wrong}/{runs} runs report the true tally, {dt:.2f}s")


def test_5_infrastructure_statistics():
    n = 10_000
    rates = {}
    for d, p in ((4, 0.5), (2, 0.25)):
        cfg = ProtocolConfig(dim=d, n_voters=3)
        rng = SeededRng(5).derive(d)
        rates[d] = sum(attempt_infrastructure(cfg, rng).accepted for _ in range(n)) / n
    cfg = ProtocolConfig()
    rng = SeededRng(5).derive(99)
    sifted = matched = 0
    while sifted < n:
        r = infrastructure_round(cfg, [1, 0, 0], rng, sifted)
        if r.sifted:
            sifted += 1
            matched += r.matched
    match = matched / sifted
    ok = within_sigma(rates[4], 0.5, n) and within_sigma(rates[2], 0.25, n) and within_sigma(match, 0.25, n)
    assert record(5, ok, f"accept d=4 {rates[4]:.4f} (1/2), d=2 {rates[2]:.4f} (1/4), "
                         f"unbalanced match {match:.4f} (1/4), 4 sigma over {n}")


def test_6_adversary_suite():
    t0 = time.perf_counter()
    cfg = ProtocolConfig()
    parts = []
    rep = simulate_intercept_resend(cfg, AttackSpec("intercept-resend", position=1), 100_000, SeededRng(61))
    pass_p = rep.extras["pass_probability"]
    parts.append(("intercept pass", pass_p, 0.625, abs(pass_p - 0.625) <= 0.005))
    parts.append(("leakage after voter 1", rep.leakage, 0.5, abs(rep.leakage - 0.5) <= 0.02))
    before = simulate_intercept_resend(cfg, AttackSpec("intercept-resend", position=0, target_voter=0), 20_000,
                                       SeededRng(62))
    parts.append(("leakage before voter 1", before.leakage, 0.0, abs(before.leakage) <= 0.01))
    cancel = simulate_voter_cancellation(ProtocolConfig(n_voters=4), "uniform-count",
                                         AttackSpec("voter-cancel", t_guess="uniform"), 100_000, SeededRng(63))
    p = cancel.attack_success_probability
    parts.append(("uniform cancel", p, 0.25, abs(p - 0.25) <= 0.005))
    ucfg = ProtocolConfig(mode="untrusted")
    for k in (1, 2, 3):
        det = simulate_dishonest_endpoints(ucfg, "receiver-lie", 20_000, SeededRng(64).derive(k), honesty_runs=k)
        target = 1 - 0.25 ** k
        parts.append((f"lying receiver k={k}", det.detection_probability, target,
                      abs(det.detection_probability - target) <= 0.01))
    dt = time.perf_counter() - t0
    ok = all(p[-1] for p in parts) and dt < 60
    detail = "; ".join(f"{name} {got:.4f} vs {want:.4f} {'ok' if good else 'FAIL'}"
                       for name, got, want, good in parts)
    assert record(6, ok, f"{detail}; {dt:.1f}s"), detail


def test_7_apparatus_algebra():
    res = verify_apparatus()
    names = [k for k, v in {**res["voter_settings"], **res["preparations"]}.items() if v["ok"]]
    assert record(7, res["ok"], f"exact at 1e-12: {', '.join(names)}")


def test_8_determinism(tmp_path):
    commands = [
        ["mub"],
        ["tables", "1", "--trials", "20000"],
        ["tables", "2", "--trials", "20000", "--format", "json"],
        ["tables", "3", "--trials", "20000"],
        ["run", "--votes", "1,0,1", "--disclosure", "veto-count"],
        ["run", "--mode", "untrusted", "--votes", "0,1,0"],
        ["attack", "--kind", "intercept-resend", "--trials", "5000"],
        ["attack", "--kind", "voter-cancel", "--t-guess", "uniform", "--voters", "4", "--trials", "5000"],
        ["attack", "--kind", "receiver-lie", "--trials", "2000", "--format", "csv"],
        ["apparatus"],
    ]
    same = 0
    for i, argv in enumerate(commands):
        outs = []
        for rep in range(2):
            path = tmp_path / f"{i}_{rep}.out"
            extra = ["--transcript", str(tmp_path / f"{i}_{rep}.jsonl")] if argv[0] == "run" else []
            assert main(argv + extra + ["--seed", "17", "--out", str(path)]) == 0
            data = path.read_bytes()
            if extra:
                data += (tmp_path / f"{i}_{rep}.jsonl").read_bytes()
            outs.append(data)
        same += outs[0] == outs[1]
    assert record(8, same == len(commands), f"{same}/{len(commands)} subcommand invocations byte-identical")
