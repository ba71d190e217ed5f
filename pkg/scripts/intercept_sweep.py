"""Eavesdropper evasion probability versus the number of checked runs.

Each sifted run the eavesdropper touches passes with probability p (about
5/8 at d=4), so she survives r checked runs with probability p**r.
"""
import argparse

from qveto.adversary import AttackSpec, simulate_intercept_resend
from qveto.protocol import ProtocolConfig
from qveto.qudit import SeededRng


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-runs", type=int, default=20)
    args = ap.parse_args()

    cfg = ProtocolConfig()
    print("position  pass_prob  stderr")
    passes = {}
    for pos in range(cfg.n_voters + 1):
        rep = simulate_intercept_resend(cfg, AttackSpec("intercept-resend", position=pos), args.trials,
                                        SeededRng(args.seed).derive(pos), with_leakage=False)
        passes[pos] = rep.extras["pass_probability"]
        print(f"{pos:8d}  {passes[pos]:.4f}     {rep.detection_stderr:.4f}")
    p = passes[1]
    print("\nruns  evasion (position 1)")
    for r in (1, 2, 5, 10, args.max_runs):
        print(f"{r:4d}  {p ** r:.3e}")


if __name__ == "__main__":
    main()
