"""Command-line entry point: ``neonpim <subcommand> [options]``.

Exit status is 0 when every stage ran (flagged results such as unconverged
NEON-Nets or infeasible lookup tables included) and 2 on hard errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .cost import (ComponentCatalog, LatencyModel, compare_configs, comparison_csv, evaluate,
                   operator_scaling_sweep, suite_summary)
from .cost.evaluate import CostReport
from .cost.scaling import DEFAULT_COUNTS
from .fixtures import BENCHMARKS, BUILDERS, fixture_path
from .graph.ir import ExecutionGraph, GraphError, OpKind, load_graph, save_graph
from .mapping.hardware import HardwareConfig
from .nn.serialize import save_net
from .nn.train import TrainConfig
from .transform.datasets import load_dataset, synthetic_dataset
from .transform.gridsearch import CANDIDATES, activation_grid_search
from .transform.pipeline import DEFAULT_CAPTURE_ROWS, graph_samples, transform_graph

log = logging.getLogger("neonpim")

EXIT_OK = 0
EXIT_ERROR = 2


class CliError(Exception):
    pass


# -- configuration -----------------------------------------------------------------

def _read_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None


def resolve_config(args) -> dict:
    """Config file values overridden by flags; fully explicit for the manifest."""
    raw = _read_config(args.config)
    profile = raw.get("profile", "desk")
    train = dict(raw.get("train", {}))
    if args.seed is not None:
        train["seed"] = args.seed
    if getattr(args, "epsilon", None) is not None:
        train["epsilon"] = args.epsilon
    if getattr(args, "xbar_size", None) is not None:
        train["xbar_size"] = args.xbar_size
    if getattr(args, "max_layers", None) is not None:
        train["max_layers"] = args.max_layers
    if getattr(args, "epochs", None) is not None:
        train["num_epochs"] = args.epochs
    tc = TrainConfig.desk(**train) if profile == "desk" else TrainConfig(**train)
    hw = HardwareConfig.from_dict(raw.get("hardware", {}))
    cat = ComponentCatalog.from_dict(raw.get("catalog", {}))
    lat = LatencyModel.from_dict(raw.get("latency", {}))
    cap = {"rows": DEFAULT_CAPTURE_ROWS, "repeat": 1, "input_scale": 1.0,
           **raw.get("capture", {})}
    if getattr(args, "rows", None) is not None:
        cap["rows"] = args.rows
    return {"profile": profile, "train": asdict(tc), "hardware": hw.to_dict(),
            "catalog": cat.to_dict(), "latency": lat.to_dict(), "capture": cap,
            "units": raw.get("units", {})}


def _objects(conf: dict):
    return (TrainConfig(**conf["train"]), HardwareConfig.from_dict(conf["hardware"]),
            ComponentCatalog.from_dict(conf["catalog"]), LatencyModel.from_dict(conf["latency"]))


def _graph_ref(ref: str) -> Path:
    p = Path(ref)
    if p.exists() or ref not in BUILDERS:
        return p
    return fixture_path(ref)


def _load(ref: str) -> ExecutionGraph:
    path = _graph_ref(ref)
    if not path.exists():
        raise CliError(f"graph not found: {ref}")
    return load_graph(path)


def _sha(path: Path) -> str | None:
    if not path.exists():
        return None
    h = hashlib.sha256(path.read_bytes())
    side = path.with_suffix(".bin")
    if side.exists():
        h.update(side.read_bytes())
    return h.hexdigest()


def make_manifest(command: str, args, conf: dict, graphs: list[str]) -> dict:
    return {
        "tool": "neonpim", "version": __version__, "command": command,
        "inputs": {"graphs": [{"ref": r, "sha256": _sha(_graph_ref(r))} for r in graphs],
                   "config": args.config,
                   "config_sha256": _sha(Path(args.config)) if args.config else None},
        "seed": conf["train"]["seed"], "config": conf,
    }


def manifest_hash(manifest: dict) -> str:
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and o != o:
        return None
    raise TypeError(f"not serializable: {type(o)}")


def _write_json(path: Path, payload: dict, manifest: dict) -> Path:
    payload = {"manifest_hash": manifest_hash(manifest), "manifest": manifest, **payload}
    path.write_text(_dump(payload))
    return path


def _write_csv(path: Path, body: str, manifest: dict) -> Path:
    path.write_text(f"# manifest {manifest_hash(manifest)}\n" + body)
    return path


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -----------------------------------------------------------------------

def _transform(g: ExecutionGraph, conf: dict, jobs: int):
    tc, hw, _, _ = _objects(conf)
    cap = conf["capture"]
    samples = graph_samples(g, int(cap["rows"]), tc.seed, float(cap["input_scale"]))
    return transform_graph(g, tc, samples, hw=hw, jobs=jobs, repeat=int(cap["repeat"]))


def cmd_transform(args) -> int:
    conf = resolve_config(args)
    manifest = make_manifest("transform", args, conf, [args.graph])
    g = _load(args.graph)
    out = _out(args)
    res = _transform(g, conf, args.jobs)
    save_graph(res.graph, out / "transformed.json")
    nets = out / "neon"
    nets.mkdir(exist_ok=True)
    for nid, neon in res.neons.items():
        safe = nid.replace("/", "_")
        save_net(neon.net, nets / f"{safe}.json",
                 {"node": nid, "op": neon.replaced_op.to_dict(),
                  "bounds": neon.bounds.to_dict(), "report": neon.report.to_dict()})
    report = res.report()
    _write_json(out / "transform_report.json", report, manifest)
    # wall-clock time varies between runs, so it lives outside the report
    (out / "timing.json").write_text(_dump(res.timing()))
    for row in report["candidates"]:
        flag = "" if row["converged"] else "  NOT CONVERGED"
        print(f"{row['node']:<16} {row['op']['op']:<18} hidden={row['hidden_layers']:<3} "
              f"mse={row['mse_validation']:.3g}{flag}")
    if not report["candidates"]:
        print("no transform candidates; graph copied unchanged")
    return EXIT_OK


def _report_row(rep: CostReport) -> str:
    return (f"{rep.config:<5} cycles={rep.latency_cycles:<9} area_um2={rep.area_um2:<12.1f} "
            f"peak_mw={rep.peak_power_mw:<9.2f} energy_uj={rep.energy_uj:.4g}")


SIM_COLUMNS = ("config", "latency_cycles", "latency_s", "area_um2", "peak_power_mw",
               "avg_power_mw", "provisioned_power_mw", "energy_uj", "edp_js", "subarrays",
               "init_energy_uj")


def cmd_simulate(args) -> int:
    conf = resolve_config(args)
    refs = [args.graph] + ([args.baseline] if args.baseline else [])
    manifest = make_manifest("simulate", args, conf, refs)
    _, hw, cat, lat = _objects(conf)
    g = _load(args.graph)
    base = _load(args.baseline) if args.baseline else g
    out = _out(args)
    archs = [args.arch] if args.arch else ["dlc", "lut", "neon"]
    rows = [",".join(SIM_COLUMNS)]
    for arch in archs:
        target = g if arch == "neon" else base
        rep = evaluate(target, hw, cat, lat, arch, conf["units"] or None)
        _write_json(out / f"cost_{arch}.json", rep.to_dict(), manifest)
        _write_csv(out / f"cost_{arch}_nodes.csv", rep.node_csv(), manifest)
        rows.append(",".join(repr(getattr(rep, c)) if not isinstance(getattr(rep, c), str)
                             else getattr(rep, c) for c in SIM_COLUMNS))
        print(_report_row(rep))
    _write_csv(out / "simulate.csv", "\n".join(rows) + "\n", manifest)
    return EXIT_OK


def cmd_compare(args) -> int:
    conf = resolve_config(args)
    refs = args.graph or list(BENCHMARKS)
    manifest = make_manifest("compare", args, conf, refs)
    _, hw, cat, lat = _objects(conf)
    out = _out(args)
    results, transforms = {}, {}
    for ref in refs:
        g = _load(ref)
        res = _transform(g, conf, args.jobs)
        transforms[ref] = res.report()
        results[ref] = compare_configs(g, res.graph, hw, cat, lat, conf["units"] or None)
    summary = suite_summary(results)
    payload = {
        "benchmarks": {r: {"ratios": v["ratios"],
                           "reports": {c: rep.to_dict() for c, rep in v["reports"].items()},
                           "transform": transforms[r]} for r, v in results.items()},
        "geomean": summary,
    }
    _write_json(out / "compare.json", payload, manifest)
    _write_csv(out / "compare.csv", comparison_csv(results), manifest)
    print(f"{'config':<6} {'speedup':>9} {'area':>9} {'peak_pwr':>9} {'energy':>9} {'edp':>9}")
    for cfg, s in summary.items():
        print(f"{cfg:<6} {s['speedup']:>9.3f} {s['area_um2']:>9.3f} {s['peak_power_mw']:>9.3f} "
              f"{s['energy_uj']:>9.3f} {s['edp_js']:>9.3f}")
    return EXIT_OK


def _counts(text: str | None) -> list[int]:
    if not text:
        return list(DEFAULT_COUNTS)
    try:
        return [int(c) for c in text.split(",") if c.strip()]
    except ValueError:
        raise CliError(f"--counts must be comma-separated integers, got {text!r}") from None


def cmd_scaling(args) -> int:
    conf = resolve_config(args)
    manifest = make_manifest("scaling", args, conf, [])
    _, hw, cat, lat = _objects(conf)
    out = _out(args)
    curve = operator_scaling_sweep(hw, cat, lat, _counts(args.counts))
    _write_csv(out / "scaling.csv", curve.to_csv(), manifest)
    _write_json(out / "scaling.json", curve.to_dict(), manifest)
    for cfg, b in curve.breaks.items():
        infeasible = [p.count for p in curve.points[cfg] if not p.feasible]
        extra = f" infeasible={infeasible}" if infeasible else ""
        print(f"{cfg:<5} slope breaks at {b}{extra}")
    return EXIT_OK


def _parse_op(text: str) -> OpKind:
    tag, _, arg = text.partition(":")
    attrs = {}
    if tag == "softmax":
        attrs["d"] = int(arg or 64)
    elif tag == "squash":
        attrs["width"] = int(arg or 8)
    elif tag == "leaky_relu":
        attrs["alpha"] = float(arg or 0.1)
    return OpKind(tag, attrs)


def cmd_gridsearch(args) -> int:
    conf = resolve_config(args)
    manifest = make_manifest("gridsearch", args, conf, [])
    tc, _, _, _ = _objects(conf)
    if args.dataset:
        ds = load_dataset(args.dataset)
    else:
        ds = synthetic_dataset(_parse_op(args.op), int(conf["capture"]["rows"]), tc.seed)
    acts = args.activations.split(",") if args.activations else list(CANDIDATES)
    ranking = activation_grid_search(ds, tc, acts)
    out = _out(args)
    _write_json(out / "gridsearch.json",
                {"ranking": [{"activation": a, "mse": m} for a, m in ranking]}, manifest)
    print(f"{'rank':<5} {'activation':<10} {'mse':>12}")
    for k, (a, m) in enumerate(ranking, 1):
        print(f"{k:<5} {a:<10} {m:>12.4g}")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="neonpim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, graph=True):
        if graph:
            sp.add_argument("--graph", required=True,
                            help="graph JSON path or a fixture name")
        sp.add_argument("--config", help="JSON config file (flags win)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--jobs", type=int, default=1, help="concurrent NEON-Net trainings")
        sp.add_argument("--epsilon", type=float, help="validation MSE target")
        sp.add_argument("--xbar-size", type=int, help="hidden-layer width")
        sp.add_argument("--max-layers", type=int, help="hidden-layer cap for growth")
        sp.add_argument("--epochs", type=int, help="epochs per growth step")
        sp.add_argument("--rows", type=int, help="capture rows per candidate")

    sp = sub.add_parser("transform", help="replace unsupported ops with NEON-Nets")
    common(sp)
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("simulate", help="cost one graph under dlc/lut/neon")
    common(sp)
    sp.add_argument("--arch", choices=("dlc", "lut", "neon"),
                    help="single configuration (default: all three)")
    sp.add_argument("--baseline", help="untransformed graph for the dlc/lut rows")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="transform and compare all configurations")
    common(sp, graph=False)
    sp.add_argument("--graph", action="append",
                    help="graph path or fixture name (repeatable; default: benchmarks)")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("scaling", help="EDP versus operator input count")
    common(sp, graph=False)
    sp.add_argument("--counts", help="comma-separated ascending input counts")
    sp.set_defaults(func=cmd_scaling)

    sp = sub.add_parser("gridsearch", help="rank hidden activations on one dataset")
    common(sp, graph=False)
    sp.add_argument("--dataset", help="capture dataset manifest (JSON)")
    sp.add_argument("--op", default="softmax:64",
                    help="synthetic dataset op when --dataset is absent, e.g. squash:8")
    sp.add_argument("--activations", help="comma-separated subset of tanh,relu,sigmoid")
    sp.set_defaults(func=cmd_gridsearch)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, GraphError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
