"""Random desk-scale quantized networks for property tests and experiment scripts."""

from __future__ import annotations

import random
from importlib import resources

from .quant import QuantConfig, QuantizedNetwork, load_qnn, load_real


def random_qnn(
    rng: random.Random,
    n_inputs: int | None = None,
    hidden: tuple | None = None,
    n_outputs: int | None = None,
    bits: int | None = None,
) -> QuantizedNetwork:
    """A small random network; unspecified sizes are drawn from desk-scale ranges.

    Fractional bit-widths are chosen so pre-activations land on a few dozen
    grid steps, which keeps the networks neither constant nor saturated.
    """
    n_inputs = n_inputs or rng.randint(1, 3)
    hidden = hidden if hidden is not None else (rng.randint(1, 4),)
    n_outputs = n_outputs or rng.randint(2, 3)
    q = bits or rng.choice((3, 4))
    arch = (n_inputs, *hidden, n_outputs)
    cfg_in = QuantConfig(False, q, rng.randint(q - 1, q))
    cfg_w = QuantConfig(True, q, rng.randint(q - 2, q - 1))
    cfg_b = QuantConfig(True, q, rng.randint(max(q - 3, 0), q - 1))
    f_out = rng.randint(max(q - 3, 0), q - 1)
    cfg_out = QuantConfig(False, q, f_out)
    cfg_last = QuantConfig(rng.random() < 0.5, q, f_out)
    weights, biases = [], []
    for n_prev, n_next in zip(arch, arch[1:]):
        weights.append(
            tuple(
                tuple(rng.randint(cfg_w.lb(), cfg_w.ub()) for _ in range(n_prev))
                for _ in range(n_next)
            )
        )
        biases.append(tuple(rng.randint(cfg_b.lb(), cfg_b.ub()) for _ in range(n_next)))
    return QuantizedNetwork(arch, tuple(weights), tuple(biases), cfg_in, cfg_w, cfg_b, cfg_out, cfg_last)


def random_input(rng: random.Random, qnn: QuantizedNetwork) -> tuple:
    lo, hi = qnn.cfg_in.lb(), qnn.cfg_in.ub()
    return tuple(rng.randint(lo, hi) for _ in range(qnn.n_inputs))


def _data(name: str):
    return resources.files("qnnilp") / "data" / name


def running_example_qnn() -> QuantizedNetwork:
    """The 2-2-2 example network quantized with weights <±,6,4>, inputs/outputs <+,6,4>."""
    with resources.as_file(_data("running_example.json")) as path:
        return load_qnn(path)


def running_example_dnn():
    with resources.as_file(_data("running_example_real.json")) as path:
        return load_real(path)
