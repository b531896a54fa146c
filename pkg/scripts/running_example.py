"""Walk through the 2-2-2 example network: inference, intervals, encoding sizes, verdicts."""

import argparse
from dataclasses import dataclass

from qnnilp.encoder import build_verification_model
from qnnilp.interval import region_bounds
from qnnilp.quant import classify, qnn_trace, real_forward
from qnnilp.region import InputRegionSpec, PropertySpec
from qnnilp.synth import running_example_dnn, running_example_qnn
from qnnilp.verify import compute_mrr, verify_robustness


@dataclass
class Config:
    center: tuple = (10, 2)
    radius: int = 4
    norm: str = "inf"


def main(cfg: Config) -> None:
    dnn, qnn = running_example_dnn(), running_example_qnn()
    print("real output at (0.616, 0.114):", [float(v) for v in real_forward(dnn, ["0.616", "0.114"])])
    trace = qnn_trace(qnn, list(cfg.center))
    print(f"quantized trace at {cfg.center}: hidden {trace[1]}, output {trace[2]}, class {classify(trace[2])}")

    spec = InputRegionSpec(cfg.center, cfg.radius, cfg.norm)
    bounds = region_bounds(qnn, spec)
    for i, layer in enumerate(bounds.layers, start=1):
        print(f"layer {i} intervals: {list(layer)}")

    prop = PropertySpec.misclassification(classify(trace[2]), qnn.n_outputs)
    for ia in (True, False):
        enc = build_verification_model(qnn, spec, prop, use_ia=ia)
        sizes = {f"y{i}_{j + 1}": len(v) for (i, j), v in sorted(enc.staircases.items())}
        verdict = verify_robustness(qnn, cfg.center, cfg.radius, cfg.norm, use_ia=ia)
        print(
            f"IA {'on ' if ia else 'off'}: {enc.booleans} staircase booleans {sizes}, "
            f"{len(enc.model.constraints)} rows -> {verdict.status.value} {verdict.counterexample or ''}"
        )
    print("maximum robustness radius:", compute_mrr(qnn, cfg.center, cfg.norm).radius)


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--center", type=int, nargs=2, default=Config.center)
    p.add_argument("--radius", type=int, default=Config.radius)
    p.add_argument("--norm", default=Config.norm)
    a = p.parse_args()
    main(Config(tuple(a.center), a.radius, a.norm))
