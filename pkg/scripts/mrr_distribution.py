"""Distribution of maximum robustness radii over random inputs of one network.

Uses the packaged example network by default or any quantized model JSON.
Each radius is certified by brute force when ``--check`` is given.
"""

import argparse
import random
from dataclasses import dataclass

from qnnilp.cli import mrr_histogram
from qnnilp.quant import load_qnn
from qnnilp.synth import random_input, running_example_qnn
from qnnilp.verify import brute_force_verify, compute_mrr


@dataclass
class Config:
    model: str | None = None
    samples: int = 20
    norm: str = "inf"
    start_r: int = 10
    step: int = 10
    seed: int = 0
    check: bool = False


def main(cfg: Config) -> None:
    qnn = load_qnn(cfg.model) if cfg.model else running_example_qnn()
    rng = random.Random(cfg.seed)
    radii = []
    for k in range(cfg.samples):
        u = random_input(rng, qnn)
        res = compute_mrr(qnn, u, cfg.norm, cfg.start_r, cfg.step)
        radii.append(res.radius)
        note = ""
        if cfg.check:
            below = res.radius == 0 or brute_force_verify(qnn, u, res.radius, cfg.norm).robust
            above = res.saturated or not brute_force_verify(qnn, u, res.radius + 1, cfg.norm).robust
            note = "  certified" if below and above else "  CHECK FAILED"
        print(f"{k:3d} {u}: mrr {res.radius}{' (whole grid)' if res.saturated else ''}, {len(res.probes)} probes{note}")
    print(f"mean mrr {sum(radii) / len(radii):.1f}")
    for bucket, count in mrr_histogram(radii, cfg.step).items():
        print(f"  {bucket:>7}: {'#' * count}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--model")
    p.add_argument("--samples", type=int, default=Config.samples)
    p.add_argument("--norm", default=Config.norm)
    p.add_argument("--start-r", type=int, default=Config.start_r)
    p.add_argument("--step", type=int, default=Config.step)
    p.add_argument("--seed", type=int, default=Config.seed)
    p.add_argument("--check", action="store_true")
    a = p.parse_args()
    main(Config(a.model, a.samples, a.norm, a.start_r, a.step, a.seed, a.check))
