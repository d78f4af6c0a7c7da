"""Command-line frontend: synthesize datasets, fit dictionaries, build
models, classify touch files, and run evaluation sweeps.

Exit codes: 0 success, 1 pipeline error, 2 usage error, 3 missing input.
Every command writes outputs atomically plus a manifest recording the
configuration and the content hashes of its inputs.
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .codebook import kmeans_fit, load_codebook, save_codebook
from .data import Dataset, atomic_write_text, parse_exploration
from .descriptors import (DescriptorConfig, DescriptorKind,
                          describe_exploration, zernike_order_for_length)
from .recognition import (CodebookParams, Method, build_model, classify_bow,
                          classify_icp3, classify_iclap, evaluate_touch_sweep,
                          parse_models, serialize_curve, serialize_models)
from .registration import IcpParams, RigidTransform
from .synth import standard_benchmark

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_USAGE = 2
EXIT_MISSING = 3


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash_tree(path: Path) -> dict:
    if path.is_file():
        return {path.name: _sha256(path)}
    return {str(p.relative_to(path)): _sha256(p)
            for p in sorted(path.rglob("*")) if p.is_file()}


def _write_manifest(out_path: Path, command: str, config: dict,
                    inputs: dict, outputs) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(k): _hash_tree(Path(k)) for k in inputs},
        "outputs": sorted(str(o) for o in outputs),
    }
    if out_path.is_dir():
        target = out_path / "manifest.json"
    else:
        target = out_path.with_name(out_path.name + ".manifest.json")
    atomic_write_text(target, json.dumps(manifest, indent=2, sort_keys=True)
                      + "\n")


def _parse_m_range(spec: str):
    values = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            values.extend(range(int(lo), int(hi) + 1))
        elif part:
            values.append(int(part))
    if not values:
        raise ValueError(f"empty m range: {spec!r}")
    return values


def _descriptor_config(args) -> DescriptorConfig:
    return DescriptorConfig(kind=DescriptorKind(args.kind),
                            zernike_max_order=args.order,
                            normalize=args.normalize)


def _icp_params(args, method: Method) -> IcpParams:
    init = None
    if args.init == "identity":
        init = RigidTransform.identity(3 if method == Method.ICP3 else 4)
    return IcpParams(max_iters=args.max_iters, abs_tolerance=args.abs_tol,
                     rel_change_threshold=args.rel_change, init=init)


def _add_descriptor_flags(p):
    p.add_argument("--kind", choices=[k.value for k in DescriptorKind],
                   default="zernike", help="descriptor family")
    p.add_argument("--order", type=int, default=4,
                   help="maximum Zernike order")
    p.add_argument("--normalize", action="store_true",
                   help="divide each frame by its peak pressure")


def _add_icp_flags(p):
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--abs-tol", type=float, default=1e-6)
    p.add_argument("--rel-change", type=float, default=1e-4)
    p.add_argument("--init", choices=["centroid", "identity"],
                   default="centroid",
                   help="initial transform: centroid alignment or identity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iclap",
        description="Object recognition from labeled tactile point clouds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic benchmark")
    p.add_argument("--out", required=True, help="dataset directory to create")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--objects", type=int, choices=[10, 20], default=10)
    p.add_argument("--explorations", type=int, default=5)
    p.add_argument("--touches", type=int, default=60)

    p = sub.add_parser("dictionary", help="fit a k-means codebook")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="codebook file to write")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmeans-iters", type=int, default=100)
    p.add_argument("--standardize", action="store_true")
    _add_descriptor_flags(p)

    p = sub.add_parser("models", help="build reference models")
    p.add_argument("--data", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True, help="models file to write")
    p.add_argument("--w-scale", type=float, default=1.0)
    p.add_argument("--normalize", action="store_true")

    p = sub.add_parser("classify", help="classify one touch file")
    p.add_argument("--models", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--touches", required=True, help="touch file to classify")
    p.add_argument("--method", choices=[m.value for m in Method],
                   default="iclap")
    p.add_argument("--w-scale", type=float, default=1.0)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", help="optional report file")
    _add_icp_flags(p)

    p = sub.add_parser("evaluate", help="recognition rate vs touches sweep")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="curve table to write")
    p.add_argument("--method", choices=[m.value for m in Method],
                   required=True)
    p.add_argument("--m", required=True,
                   help="touch counts, e.g. 1..12 or 1,2,4,8,12")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--w-scale", type=float, default=1.0)
    p.add_argument("--draw", choices=["random", "prefix"], default="random")
    p.add_argument("--standardize", action="store_true")
    _add_descriptor_flags(p)
    _add_icp_flags(p)
    return parser


def _require(paths):
    for p in paths:
        if not Path(p).exists():
            raise FileNotFoundError(f"missing input: {p}")


def _cmd_synth(args) -> int:
    out = Path(args.out)
    dataset = standard_benchmark(seed=args.seed, n_objects=args.objects,
                                 explorations_per_object=args.explorations,
                                 touches_per_exploration=args.touches)
    dataset.save(out)
    _write_manifest(out, "synth", {
        "seed": args.seed, "objects": args.objects,
        "explorations": args.explorations, "touches": args.touches,
    }, inputs={}, outputs=[p.relative_to(out)
                           for p in sorted(out.rglob("*.touches"))]
        + ["objects.txt"])
    return EXIT_OK


def _cmd_dictionary(args) -> int:
    _require([args.data])
    dataset = Dataset.load(args.data)
    cfg = _descriptor_config(args)
    pool = []
    for oid in dataset.object_ids:
        for e in dataset.explorations[oid]:
            entries, _ = describe_exploration(e, cfg)
            pool.extend(d.values for d, _ in entries)
    cb = kmeans_fit(pool, args.k, seed=args.seed, max_iters=args.kmeans_iters,
                    kind=cfg.kind, standardize=args.standardize)
    out = Path(args.out)
    save_codebook(cb, out)
    _write_manifest(out, "dictionary", {
        "k": args.k, "seed": args.seed, "kind": args.kind,
        "order": args.order, "normalize": args.normalize,
        "standardize": args.standardize, "kmeans_iters": args.kmeans_iters,
    }, inputs={args.data: None}, outputs=[out.name])
    return EXIT_OK


def _cfg_for_codebook(cb, normalize: bool) -> DescriptorConfig:
    order = 4
    if cb.kind == DescriptorKind.ZERNIKE_MOMENTS:
        order = zernike_order_for_length(cb.dim)
    return DescriptorConfig(kind=cb.kind, zernike_max_order=order,
                            normalize=normalize)


def _cmd_models(args) -> int:
    _require([args.data, args.codebook])
    dataset = Dataset.load(args.data)
    cb = load_codebook(args.codebook)
    cfg = _cfg_for_codebook(cb, args.normalize)
    models = [build_model(dataset.explorations[oid], cb, cfg, args.w_scale)
              for oid in dataset.object_ids]
    out = Path(args.out)
    atomic_write_text(out, serialize_models(models))
    _write_manifest(out, "models", {
        "w_scale": args.w_scale, "normalize": args.normalize,
    }, inputs={args.data: None, args.codebook: None}, outputs=[out.name])
    return EXIT_OK


def _cmd_classify(args) -> int:
    _require([args.models, args.codebook, args.touches])
    cb = load_codebook(args.codebook)
    cfg = _cfg_for_codebook(cb, args.normalize)
    models = parse_models(Path(args.models).read_text(encoding="utf-8"))
    exploration = parse_exploration(
        Path(args.touches).read_text(encoding="utf-8"))
    method = Method(args.method)
    params = _icp_params(args, method)
    if method == Method.ICLAP:
        report = classify_iclap(exploration.samples, models, cb, cfg,
                                args.w_scale, params)
    elif method == Method.ICP3:
        report = classify_icp3(exploration.samples, models, params)
    else:
        report = classify_bow(exploration.samples, models, cb, cfg)
    lines = [f"winner {report.winner}"]
    for entry in report.ranked:
        lines.append(f"{entry.object_id} {entry.raw_error!r} "
                     f"{entry.normalized_score!r}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        atomic_write_text(out, text)
        _write_manifest(out, "classify", {
            "method": args.method, "w_scale": args.w_scale,
            "max_iters": args.max_iters, "abs_tol": args.abs_tol,
            "rel_change": args.rel_change, "init": args.init,
        }, inputs={args.models: None, args.codebook: None,
                   args.touches: None}, outputs=[out.name])
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    _require([args.data])
    dataset = Dataset.load(args.data)
    cfg = _descriptor_config(args)
    m_values = _parse_m_range(args.m)
    method = Method(args.method)
    params = _icp_params(args, method)
    curve = evaluate_touch_sweep(
        dataset, method, m_values, trials=args.trials,
        seed=args.seed, cb_params=CodebookParams(k=args.k,
                                                 standardize=args.standardize),
        cfg=cfg, w_scale=args.w_scale, icp_params=params,
        draw_mode=args.draw)
    out = Path(args.out)
    atomic_write_text(out, serialize_curve(curve))
    _write_manifest(out, "evaluate", {
        "method": args.method, "m": m_values, "trials": args.trials,
        "seed": args.seed, "k": args.k, "kind": args.kind,
        "order": args.order, "w_scale": args.w_scale, "draw": args.draw,
        "normalize": args.normalize, "standardize": args.standardize,
        "max_iters": args.max_iters, "abs_tol": args.abs_tol,
        "rel_change": args.rel_change, "init": args.init,
    }, inputs={args.data: None}, outputs=[out.name])
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "dictionary": _cmd_dictionary,
    "models": _cmd_models,
    "classify": _cmd_classify,
    "evaluate": _cmd_evaluate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
