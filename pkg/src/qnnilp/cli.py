"""Command-line front end: verify, mrr, encode, quantize, eval and bench.

Exit codes: 0 when every task finished, 2 when any task timed out, 1 on a
usage error (bad flags, unreadable or inconsistent files).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .encoder import booleans_without_ia, build_verification_model
from .ilp import export_lp
from .quant import (
    QuantConfig,
    QuantizationError,
    classify,
    dumps_model,
    load_qnn,
    load_real,
    qnn_forward,
    qnn_to_json,
    quantize_network,
    quantize_value,
)
from .region import InputRegionSpec, Norm
from .verify import VerdictStatus, compute_mrr, property_for, verify_robustness

EXIT_OK, EXIT_USAGE, EXIT_TIMEOUT = 0, 1, 2
DEFAULT_TIMEOUT = 7200.0
THREADS_ENV = "QNNILP_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunReport:
    task_id: str
    model: str
    input_id: int
    radius: int
    norm: str
    property: str
    ia: bool
    verdict: str
    counterexample: list | None
    encode_time: float
    solve_time: float
    booleans: int | None
    ia_reduction: float | None


REPORT_FIELDS = list(RunReport.__dataclass_fields__)


# ---- inputs ---------------------------------------------------------------


def parse_cfg(text: str) -> QuantConfig:
    """``"+,6,4"`` / ``"+-,6,4"`` / ``"±,6,4"`` -> QuantConfig."""
    try:
        sign, q, f = (t.strip() for t in text.split(","))
        if sign not in ("+", "+-", "±"):
            raise ValueError
        return QuantConfig(sign != "+", int(q), int(f))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad config {text!r}; expected SIGN,Q,F with SIGN + or +-")


def read_dataset(path, cfg_in: QuantConfig, raw: bool = False) -> list:
    """Rows of ``label, v_1, ..., v_n`` as ``(label, sample)`` pairs."""
    samples = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            try:
                label = int(row[0])
                if raw:
                    values = tuple(quantize_value(v.strip(), cfg_in) for v in row[1:])
                else:
                    values = tuple(int(v) for v in row[1:])
            except ValueError:
                raise UsageError(f"{path}:{lineno}: malformed sample {row!r}")
            if not values:
                raise UsageError(f"{path}:{lineno}: sample has no values")
            samples.append((label, values))
    return samples


def _load_model(path):
    try:
        return load_qnn(path)
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read model {path}: {exc}")


def _samples_for(args, qnn) -> list:
    samples = read_dataset(args.input, qnn.cfg_in, args.raw)
    if not samples:
        raise UsageError(f"{args.input}: no samples")
    for k, (_, x) in enumerate(samples):
        if len(x) != qnn.n_inputs:
            raise UsageError(f"sample {k} has {len(x)} values, network expects {qnn.n_inputs}")
        if not all(qnn.cfg_in.contains(v) for v in x):
            raise UsageError(f"sample {k} lies outside the input grid {qnn.cfg_in}")
    return samples


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


# ---- tasks ----------------------------------------------------------------


def run_task(task_id, qnn, model_path, input_id, x, radius, norm, kind, use_ia, timeout):
    verdict = verify_robustness(qnn, x, radius, norm, kind, use_ia=use_ia, timeout=timeout)
    full = booleans_without_ia(qnn)
    st = verdict.stats
    if radius == 0:
        # answered without encoding; IA would collapse every neuron
        booleans = 0 if use_ia else full
    elif verdict.status is VerdictStatus.TIMEOUT and st.encode_time == 0:
        booleans = None  # deadline hit before the model was built
    else:
        booleans = st.booleans
    return RunReport(
        task_id=str(task_id),
        model=str(model_path),
        input_id=input_id,
        radius=radius,
        norm=Norm.parse(norm).value,
        property=kind,
        ia=use_ia,
        verdict=verdict.status.value,
        counterexample=list(verdict.counterexample) if verdict.counterexample else None,
        encode_time=round(st.encode_time, 6),
        solve_time=round(st.solve_time, 6),
        booleans=booleans,
        ia_reduction=None if booleans is None else round(1 - booleans / full, 6) if full else 0.0,
    )


def cmd_verify(args) -> int:
    qnn = _load_model(args.model)
    reports = []
    for k, (_, x) in enumerate(_samples_for(args, qnn)):
        rep = run_task(
            f"{k}", qnn, args.model, k, x, args.radius, args.norm, args.property,
            not args.no_ia, args.timeout,
        )
        reports.append(rep)
        print(f"sample {k}: {rep.verdict}")
    if args.report:
        _write_json(args.report, {"command": "verify", "tasks": [asdict(r) for r in reports]})
    return EXIT_TIMEOUT if any(r.verdict == VerdictStatus.TIMEOUT.value for r in reports) else EXIT_OK


def mrr_histogram(radii, width: int = 10) -> dict:
    """Counts per bucket ``"0"``, ``"1-10"``, ``"11-20"``, ... (for ``width`` 10)."""
    hist = {}
    for r in sorted(radii):
        if r == 0:
            key = "0"
        else:
            lo = (r - 1) // width * width + 1
            key = f"{lo}-{lo + width - 1}"
        hist[key] = hist.get(key, 0) + 1
    return hist


def cmd_mrr(args) -> int:
    qnn = _load_model(args.model)
    rows, radii, timed_out = [], [], False
    for k, (_, x) in enumerate(_samples_for(args, qnn)):
        res = compute_mrr(
            qnn, x, args.norm, args.start_r, args.step, args.property,
            use_ia=not args.no_ia, timeout=args.timeout,
        )
        if res.timed_out:
            timed_out = True
            print(f"sample {k}: timeout")
        else:
            radii.append(res.radius)
            note = " (whole grid)" if res.saturated else ""
            print(f"sample {k}: mrr {res.radius}{note}")
        rows.append(
            {
                "input_id": k,
                "mrr": None if res.timed_out else res.radius,
                "saturated": res.saturated,
                "probes": [[r, s.value] for r, s in res.probes],
            }
        )
    mean = round(sum(radii) / len(radii), 1) if radii else None
    hist = mrr_histogram(radii, args.step)
    print(f"mean mrr: {mean:.1f}" if mean is not None else "mean mrr: n/a")
    for key, count in hist.items():
        print(f"  {key}: {count}")
    if args.report:
        _write_json(
            args.report,
            {"command": "mrr", "samples": rows, "summary": {"mean": mean, "histogram": hist}},
        )
    return EXIT_TIMEOUT if timed_out else EXIT_OK


def cmd_encode(args) -> int:
    qnn = _load_model(args.model)
    samples = _samples_for(args, qnn)
    if not 0 <= args.sample < len(samples):
        raise UsageError(f"--sample {args.sample} out of range (dataset has {len(samples)})")
    x = samples[args.sample][1]
    region = InputRegionSpec(x, args.radius, Norm.parse(args.norm))
    prop = property_for(qnn, x, args.property)
    enc = build_verification_model(qnn, region, prop, use_ia=not args.no_ia)
    text = export_lp(enc.model)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


PRESET_BITS = (4, 6, 8, 10)


def preset_configs(q: int) -> dict:
    """The benchmark scheme: 8-bit inputs, Q-bit weights, biases and outputs."""
    return {
        "cfg_in": QuantConfig(False, 8, 8),
        "cfg_w": QuantConfig(True, q, q - 1),
        "cfg_b": QuantConfig(True, q, q - 2),
        "cfg_out_hidden": QuantConfig(False, q, q - 2),
        "cfg_out_last": QuantConfig(True, q, q - 2),
    }


def cmd_quantize(args) -> int:
    cfgs = preset_configs(args.preset) if args.preset else {}
    for key in ("cfg_in", "cfg_w", "cfg_b", "cfg_out_hidden", "cfg_out_last"):
        if getattr(args, key) is not None:
            cfgs[key] = getattr(args, key)
    missing = [k for k in ("cfg_in", "cfg_w", "cfg_b", "cfg_out_hidden") if k not in cfgs]
    if missing:
        raise UsageError(f"missing configs {', '.join(missing)}; give --preset or the --cfg-* flags")
    try:
        dnn = load_real(args.model)
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read real-valued model {args.model}: {exc}")
    qnn = quantize_network(dnn, strict=args.strict, **cfgs)
    text = dumps_model(qnn_to_json(qnn))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    qnn = _load_model(args.model)
    samples = _samples_for(args, qnn)
    correct = sum(
        classify(qnn_forward(qnn, list(x))) - 1 + args.label_base == label for label, x in samples
    )
    print(f"accuracy: {correct}/{len(samples)} = {100 * correct / len(samples):.2f}%")
    return EXIT_OK


# ---- bench ----------------------------------------------------------------

TASK_COLUMNS = ("model", "input", "sample", "radius", "norm")


def read_tasks(path) -> list:
    """Task list CSV with a header; optional columns ``property`` and ``timeout``."""
    base = Path(path).parent
    tasks = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(TASK_COLUMNS) <= set(reader.fieldnames):
            raise UsageError(f"{path}: header must contain {', '.join(TASK_COLUMNS)}")
        for lineno, row in enumerate(reader, 2):
            try:
                task = {
                    "model": str(base / row["model"].strip()),
                    "input": str(base / row["input"].strip()),
                    "sample": int(row["sample"]),
                    "radius": int(row["radius"]),
                    "norm": Norm.parse(row["norm"]).value,
                    "property": (row.get("property") or "class").strip(),
                    "timeout": float(row["timeout"]) if (row.get("timeout") or "").strip() else None,
                }
            except (ValueError, TypeError, AttributeError):
                raise UsageError(f"{path}:{lineno}: malformed task {row!r}")
            if task["property"] not in ("class", "output") or task["radius"] < 0:
                raise UsageError(f"{path}:{lineno}: malformed task {row!r}")
            tasks.append(task)
    return tasks


def _bench_one(job):
    task_id, task, use_ia, raw, default_timeout = job
    qnn = _load_model(task["model"])
    samples = read_dataset(task["input"], qnn.cfg_in, raw)
    if not 0 <= task["sample"] < len(samples):
        raise UsageError(f"task {task_id}: sample {task['sample']} out of range")
    timeout = task["timeout"] if task["timeout"] is not None else default_timeout
    return run_task(
        task_id, qnn, task["model"], task["sample"], samples[task["sample"]][1],
        task["radius"], task["norm"], task["property"], use_ia, timeout,
    )


def bench_summary(reports) -> dict:
    solved = [r for r in reports if r.verdict != VerdictStatus.TIMEOUT.value]
    rate = 100 * len(solved) / len(reports) if reports else 0.0
    row = {k: "" for k in REPORT_FIELDS}
    row.update(
        task_id="summary",
        verdict=f"SR={rate:.1f}% ({len(solved)}/{len(reports)})",
        solve_time=round(sum(r.solve_time for r in solved), 6),
    )
    return row


def cmd_bench(args) -> int:
    tasks = read_tasks(args.tasks)
    jobs = [(str(k), t, not args.no_ia, args.raw, args.timeout) for k, t in enumerate(tasks)]
    threads = args.threads or int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(_bench_one, jobs))
    else:
        reports = [_bench_one(j) for j in jobs]
    out = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=REPORT_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in reports:
            row = asdict(r)
            row["counterexample"] = " ".join(map(str, r.counterexample)) if r.counterexample else ""
            writer.writerow(row)
        summary = bench_summary(reports)
        writer.writerow(summary)
    finally:
        if out is not sys.stdout:
            out.close()
    print(summary["verdict"], file=sys.stderr)
    return EXIT_TIMEOUT if any(r.verdict == VerdictStatus.TIMEOUT.value for r in reports) else EXIT_OK


# ---- parser ---------------------------------------------------------------


def _radius(text):
    r = int(text)
    if r < 0:
        raise argparse.ArgumentTypeError("radius must be non-negative")
    return r


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _norm(text):
    try:
        return Norm.parse(text).value
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _preset(text):
    q = int(text.split("=")[-1])
    if q not in PRESET_BITS:
        raise argparse.ArgumentTypeError(f"preset must be one of {PRESET_BITS}")
    return q


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qnnilp", description="Exact robustness verification of quantized ReLU networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, radius=True):
        p.add_argument("--model", required=True, help="quantized model JSON")
        p.add_argument("--input", required=True, help="CSV dataset: label, v_1, ..., v_n")
        p.add_argument("--raw", action="store_true", help="dataset values are reals to quantize")
        if radius:
            p.add_argument("--radius", type=_radius, required=True)
        p.add_argument("--norm", type=_norm, default="inf", help="0, 1, 2 or inf")
        p.add_argument("--property", choices=("class", "output"), default="class")
        p.add_argument("--no-ia", action="store_true", help="disable interval analysis")

    p = sub.add_parser("verify", help="decide robustness of every sample")
    common(p)
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds per task")
    p.add_argument("--report", help="write a JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mrr", help="maximum robustness radius per sample")
    common(p, radius=False)
    p.add_argument("--start-r", type=_positive, default=10)
    p.add_argument("--step", type=_positive, default=10)
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds per sample")
    p.add_argument("--report", help="write a JSON report here")
    p.set_defaults(func=cmd_mrr)

    p = sub.add_parser("encode", help="export one verification ILP in LP format")
    common(p)
    p.add_argument("--sample", type=int, default=0, help="row of the dataset to encode")
    p.add_argument("--output", "-o", help="LP file (default stdout)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("quantize", help="quantize a real-valued model")
    p.add_argument("--model", required=True, help="real-valued model JSON (layers_real)")
    p.add_argument("--preset", type=_preset, help="Q in 4, 6, 8, 10 (Q=6 also accepted)")
    for flag in ("in", "w", "b", "out", "last"):
        dest = {"out": "cfg_out_hidden", "last": "cfg_out_last"}.get(flag, f"cfg_{flag}")
        p.add_argument(f"--cfg-{flag}", dest=dest, type=parse_cfg, metavar="SIGN,Q,F")
    p.add_argument("--strict", action="store_true", help="fail instead of clamping saturated entries")
    p.add_argument("--output", "-o", help="quantized model JSON (default stdout)")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("eval", help="classification accuracy on a labelled dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--raw", action="store_true")
    p.add_argument("--label-base", type=int, choices=(0, 1), default=0, help="index of the first class label")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a task list and emit a CSV report")
    p.add_argument("--tasks", required=True, help="CSV with model,input,sample,radius,norm[,property,timeout]")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--no-ia", action="store_true")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    p.add_argument("--threads", type=_positive, help=f"worker processes (default ${THREADS_ENV} or 1)")
    p.add_argument("--output", "-o", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help and parse errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, QuantizationError, ValueError, OSError) as exc:
        print(f"qnnilp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
