"""Boolean-variable reduction from interval analysis as the radius grows, on random small networks.

Prints one CSV row per (norm, radius): mean reduction rate, the share of
instances with a strict reduction, and verdict agreement with and without IA.
"""

import argparse
import csv
import random
import sys
from dataclasses import dataclass

from qnnilp.encoder import booleans_without_ia, build_verification_model
from qnnilp.region import InputRegionSpec
from qnnilp.synth import random_input, random_qnn
from qnnilp.verify import property_for, verify_robustness


@dataclass
class Config:
    seed: int = 0
    networks: int = 40
    max_radius: int = 6
    norms: tuple = ("0", "1", "2", "inf")
    kind: str = "class"
    solve: bool = False  # also compare verdicts (slower)


def main(cfg: Config) -> None:
    rng = random.Random(cfg.seed)
    cases = []
    for _ in range(cfg.networks):
        qnn = random_qnn(rng, hidden=(rng.randint(2, 4),))
        cases.append((qnn, random_input(rng, qnn)))
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["norm", "radius", "mean_reduction", "strict_share", "verdicts_agree"])
    for norm in cfg.norms:
        for r in range(1, cfg.max_radius + 1):
            rates, strict, agree = [], 0, 0
            for qnn, u in cases:
                spec = InputRegionSpec(u, r, norm)
                enc = build_verification_model(qnn, spec, property_for(qnn, u, cfg.kind), use_ia=True)
                full = booleans_without_ia(qnn)
                rates.append(1 - enc.booleans / full)
                strict += enc.booleans < full
                if cfg.solve:
                    a = verify_robustness(qnn, u, r, norm, cfg.kind, use_ia=True).status
                    b = verify_robustness(qnn, u, r, norm, cfg.kind, use_ia=False).status
                    agree += a is b
            n = len(cases)
            out.writerow(
                [norm, r, f"{sum(rates) / n:.3f}", f"{strict / n:.3f}", f"{agree}/{n}" if cfg.solve else ""]
            )


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=Config.seed)
    p.add_argument("--networks", type=int, default=Config.networks)
    p.add_argument("--max-radius", type=int, default=Config.max_radius)
    p.add_argument("--norms", nargs="+", default=list(Config.norms))
    p.add_argument("--kind", choices=("class", "output"), default=Config.kind)
    p.add_argument("--solve", action="store_true")
    a = p.parse_args()
    main(Config(a.seed, a.networks, a.max_radius, tuple(a.norms), a.kind, a.solve))
