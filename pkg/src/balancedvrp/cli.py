"""balancedvrp command line: gen, solve-exact, solve-heur, analyze, report."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path

from . import analysis as an
from .errors import BalancedVRPError, UsageError
from .instance import derive_small_instances, random_base_instance, read_instance, save_instance
from .model import RESOURCES
from .pareto import ALL_SPECS, ObjectiveSpec, front_csv, parse_specs, read_front_csv, Regime
from .solver_exact import front_filename, solve_exact, write_fronts
from .solver_heuristic import HeuristicConfig, solve_heuristic

OUT_ENV = "BALANCEDVRP_OUT"
ANALYSES = ("cardinality", "tradeoff", "overlap", "agreement", "similarity")


@dataclass
class RunManifest:
    command: str
    argv: list
    instances: list = field(default_factory=list)
    specs: list = field(default_factory=list)
    regime: str | None = None
    seeds: list = field(default_factory=list)
    output_dir: str = ""
    timings: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    status: str = "ok"

    def write(self, outdir: Path) -> Path:
        p = outdir / "run_manifest.json"
        self.files = sorted(set(self.files))
        p.write_text(json.dumps(asdict(self), indent=2) + "\n")
        return p


def run_dir(args, command: str) -> Path:
    base = Path(args.out or os.environ.get(OUT_ENV) or "runs")
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    d = base / f"{stamp}-{command}"
    n = 1
    while d.exists():
        n += 1
        d = base / f"{stamp}-{command}-{n}"
    d.mkdir(parents=True)
    return d


def _rel(paths, outdir):
    return [str(Path(p).relative_to(outdir)) for p in paths]


def _need_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input file not found: {p}")
    return p


def _pool(jobs, fn, tasks):
    jobs = jobs or os.cpu_count() or 1
    if jobs == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
        return list(ex.map(fn, *zip(*tasks)))


# -- gen --------------------------------------------------------------------------------


def cmd_gen(args, man: RunManifest, outdir: Path):
    t0 = time.perf_counter()
    if args.base:
        base = read_instance(_need_file(args.base))
        man.instances.append(str(args.base))
    else:
        lo, hi = (int(v) for v in args.demand.split(","))
        base = random_base_instance(args.random_base, (lo, hi), seed=args.seed, vehicles=args.k)
        man.seeds.append(args.seed)
        man.files.append(str(save_instance(base, outdir / f"{base.name}.vrp").relative_to(outdir)))
    derived = derive_small_instances(base, block_size=args.block, vehicles=args.k)
    for inst in derived:
        man.files.append(str(save_instance(inst, outdir / f"{inst.name}.vrp").relative_to(outdir)))
    man.timings["gen"] = time.perf_counter() - t0
    print(f"{len(derived)} instances written")


# -- solvers ----------------------------------------------------------------------------


def _exact_task(path, spec_labels, outdir, method):
    inst = read_instance(path)
    specs = [ObjectiveSpec.parse(s) for s in spec_labels]
    stats = {}
    archives = solve_exact(inst, specs, method=method, stats=stats)
    paths = write_fronts(inst, archives, outdir, runtime_s=stats["runtime_s"])
    paths.append(save_instance(inst, Path(outdir) / f"{inst.name}.vrp"))
    return inst.name, stats["runtime_s"], [str(p) for p in paths]


def cmd_solve_exact(args, man: RunManifest, outdir: Path):
    specs = parse_specs(args.specs)
    paths = [str(_need_file(p)) for p in args.instance]
    man.instances += paths
    man.specs = [s.label for s in specs]
    man.regime = Regime.EXACT.value
    tasks = [(p, man.specs, str(outdir), args.method) for p in paths]
    for name, rt, files in _pool(args.jobs, _exact_task, tasks):
        man.timings[name] = rt
        man.files += _rel(files, outdir)
        print(f"{name}: {len(specs)} fronts in {rt:.1f}s")


def _heur_task(path, label, outdir, cfg_kwargs):
    inst = read_instance(path)
    cfg = HeuristicConfig(ObjectiveSpec.parse(label), **cfg_kwargs)
    t0 = time.perf_counter()
    per_run = []
    merged = solve_heuristic(inst, cfg, per_run=per_run)
    rt = time.perf_counter() - t0
    outdir = Path(outdir)
    files = []
    stem = front_filename(inst.name, cfg.spec)[:-4]
    for i, a in enumerate(per_run):
        p = outdir / f"{stem}__run{i + 1}.csv"
        p.write_text(front_csv(a))
        files.append(str(p))
    p = outdir / f"{stem}.csv"
    p.write_text(front_csv(merged))
    files.append(str(p))
    return inst.name, label, len(merged), rt, files


def cmd_solve_heur(args, man: RunManifest, outdir: Path):
    base = {"runs": args.runs, "seed": args.seed, "directions": args.directions,
            "iterations": args.iterations, "perturbation": args.perturbation}
    if args.config:
        cfg = HeuristicConfig.from_file(_need_file(args.config), **{k: v for k, v in base.items()})
        specs = [cfg.spec] if args.specs is None else parse_specs(args.specs)
        base = {k: getattr(cfg, k) for k in base}
    else:
        specs = parse_specs(args.specs or "all")
        HeuristicConfig(specs[0], **{k: v for k, v in base.items() if v is not None})  # validates
        base = {k: v for k, v in base.items() if v is not None}
    paths = [str(_need_file(p)) for p in args.instance]
    man.instances += paths
    man.specs = [s.label for s in specs]
    man.regime = Regime.HEURISTIC.value
    man.seeds = [base.get("seed", 0)]
    tasks = [(p, s.label, str(outdir), base) for p in paths for s in specs]
    rows = []
    for name, label, size, rt, files in _pool(args.jobs, _heur_task, tasks):
        man.timings[f"{name} {label}"] = rt
        man.files += _rel(files, outdir)
        rows.append({"instance": name, "spec": label, "cardinality": size, "runtime_s": rt})
        print(f"{name} {label}: {size} points in {rt:.1f}s")
    for p in paths:
        inst = read_instance(p)
        man.files.append(str(save_instance(inst, outdir / f"{inst.name}.vrp").relative_to(outdir)))
        mp = outdir / f"{inst.name}__manifest.json"
        mp.write_text(json.dumps({"instance": inst.name, "regime": "heuristic", "config": base,
                                  "fronts": [r for r in rows if r["instance"] == inst.name]}, indent=2))
        man.files.append(mp.name)


# -- analysis ---------------------------------------------------------------------------


def load_fronts(front_dirs, instance_paths=()) -> dict:
    """instance name -> (Instance, {spec: archive}) from merged front CSVs in the directories."""
    known = {}
    for p in instance_paths:
        inst = read_instance(_need_file(p))
        known[inst.name] = inst
    out = {}
    for d in front_dirs:
        d = Path(d)
        if not d.is_dir():
            raise FileNotFoundError(f"fronts directory not found: {d}")
        for csv_path in sorted(d.glob("*__*.csv")):
            parts = csv_path.stem.split("__")
            if len(parts) != 2:
                continue  # per-run files
            name, label = parts
            try:
                spec = ObjectiveSpec.parse(label.replace("-", ":", 1))
            except ValueError:
                continue
            if name not in known:
                vrp = d / f"{name}.vrp"
                if not vrp.is_file():
                    raise FileNotFoundError(f"no instance file for {name}: expected {vrp} or --instance")
                known[name] = read_instance(vrp)
            inst = known[name]
            entry = out.setdefault(name, (inst, {}))
            entry[1][spec] = read_front_csv(csv_path.read_text(), inst, spec)
    if not out:
        raise UsageError("no front CSV files found")
    return out


def _write(outdir, name, text, files):
    p = outdir / name
    p.write_text(text)
    files.append(name)


def run_analysis(kind, fronts: dict, outdir: Path, files: list):
    maps = [m for _, (_, m) in sorted(fronts.items())]
    if kind == "cardinality":
        _write(outdir, "cardinality.csv", an.cardinality_csv(an.cardinality_table(maps)), files)
    elif kind == "tradeoff":
        rows = []
        for name, (_, m) in sorted(fronts.items()):
            opt = min(a.entries[0].cost for a in m.values() if a.entries)
            for s in ALL_SPECS:
                if s in m and m[s].entries:
                    rows += [(name, s.label, x, y) for x, y in an.tradeoff_normalize(m[s], opt)]
        _write(outdir, "tradeoff.csv", an.tradeoff_csv(rows), files)
        for s in ALL_SPECS:
            pts = [(x, y) for _, lab, x, y in rows if lab == s.label]
            if pts:
                _write(outdir, f"tradeoff_{s.resource.tag}-{s.function.tag}.svg",
                       an.svg_scatter(pts, s.label), files)
    elif kind == "overlap":
        reports, pooled = [], {}
        for name, (_, m) in sorted(fronts.items()):
            for r in RESOURCES:
                fr = {s.function: m[s] for s in ALL_SPECS if s.resource is r and s in m}
                if len(fr) < 2:
                    continue
                rep = an.overlap_categories(fr, r)
                reports.append(rep)
                agg = pooled.setdefault(r, an.OverlapReport(r, 0, {f: dict.fromkeys("ABCD", 0) for f in fr}))
                agg.union_size += rep.union_size
                for f, c in rep.counts.items():
                    for k, v in c.items():
                        agg.counts[f][k] += v
        _write(outdir, "overlap.csv", an.overlap_csv(reports), files)
        for r, rep in pooled.items():
            _write(outdir, f"overlap_{r.tag}.svg", an.svg_stacked_bars(rep, f"overlap, {r.tag}"), files)
    elif kind == "agreement":
        common = set.intersection(*(set(m) for m in maps))
        mat = an.cross_agreement([{s: m[s] for s in common} for m in maps])
        _write(outdir, "agreement.csv", mat.to_csv(), files)
        print(f"agreement: intra-resource mean {mat.intra_mean():.2f}, inter-resource mean "
              f"{mat.inter_mean():.2f}, undefined cells {mat.undefined}, clipped {mat.clipped}")
    elif kind == "similarity":
        pooled = an.SimilarityReport()
        lines = ["instance,spec,size,all_median,consecutive_median"]
        for name, (_, m) in sorted(fronts.items()):
            for s in ALL_SPECS:
                if s not in m:
                    continue
                rep = an.similarity_distributions(m[s])
                if rep.empty:
                    continue
                pooled.all_pairs += rep.all_pairs
                pooled.consecutive += rep.consecutive
                lines.append(f"{name},{s.label},{len(m[s])},{rep.all_median:.4f},{rep.consecutive_median:.4f}")
        _write(outdir, "similarity_medians.csv", "\n".join(lines) + "\n", files)
        if pooled.all_pairs:
            _write(outdir, "similarity.csv", an.similarity_csv(pooled), files)
            _write(outdir, "similarity.svg", an.svg_histograms(pooled, "edge similarity"), files)
    else:
        raise UsageError(f"unknown analysis {kind!r}")


def cmd_analyze(args, man: RunManifest, outdir: Path):
    t0 = time.perf_counter()
    fronts = load_fronts(args.fronts, args.instance or ())
    man.instances = sorted(fronts)
    run_analysis(args.kind, fronts, outdir, man.files)
    man.timings[args.kind] = time.perf_counter() - t0


def cmd_report(args, man: RunManifest, outdir: Path):
    fronts = load_fronts(args.fronts, args.instance or ())
    man.instances = sorted(fronts)
    for kind in ANALYSES:
        t0 = time.perf_counter()
        run_analysis(kind, fronts, outdir, man.files)
        man.timings[kind] = time.perf_counter() - t0


# -- entry ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="balancedvrp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help=f"base output directory (default ${OUT_ENV} or ./runs)")
        sp.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")

    g = sub.add_parser("gen", help="derive small instances from a base instance")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--base", help="base instance file (CVRPLIB format)")
    src.add_argument("--random-base", type=int, metavar="N", help="generate a random base with N customers")
    g.add_argument("--demand", default="1,100", help="demand range lo,hi for --random-base")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--block", type=int, default=21, help="nodes per derived block, depot included")
    g.add_argument("--k", type=int, default=5, help="vehicles per derived instance")
    common(g)

    e = sub.add_parser("solve-exact", help="exact fronts for small instances")
    e.add_argument("--instance", nargs="+", required=True)
    e.add_argument("--specs", default="all")
    e.add_argument("--method", choices=("search", "enumerate", "reference"), default="search")
    common(e)

    h = sub.add_parser("solve-heur", help="heuristic fronts")
    h.add_argument("--instance", nargs="+", required=True)
    h.add_argument("--specs", default=None, help="spec list or 'all' (default: all, or the config's spec)")
    h.add_argument("--config", help="key=value config file")
    h.add_argument("--runs", type=int)
    h.add_argument("--seed", type=int)
    h.add_argument("--directions", type=int)
    h.add_argument("--iterations", type=int)
    h.add_argument("--perturbation", type=int)
    common(h)

    a = sub.add_parser("analyze", help="one analysis over front directories")
    a.add_argument("kind", choices=ANALYSES)
    a.add_argument("--fronts", nargs="+", required=True)
    a.add_argument("--instance", nargs="*")
    common(a)

    r = sub.add_parser("report", help="all analyses, CSV and SVG")
    r.add_argument("--fronts", nargs="+", required=True)
    r.add_argument("--instance", nargs="*")
    common(r)
    return p


COMMANDS = {"gen": cmd_gen, "solve-exact": cmd_solve_exact, "solve-heur": cmd_solve_heur,
            "analyze": cmd_analyze, "report": cmd_report}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    outdir = run_dir(args, args.command)
    man = RunManifest(args.command, argv, output_dir=str(outdir))
    try:
        COMMANDS[args.command](args, man, outdir)
    except (BalancedVRPError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        man.status = f"error: {e}"
        man.write(outdir)
        return 1
    man.write(outdir)
    print(outdir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
