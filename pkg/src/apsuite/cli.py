"""Command-line entry point: ``python3 -m apsuite <command> ...``.

Exit codes: 0 success, 1 replay mismatch, 2 protocol error, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import constants as C
from .agents import make_agent
from .assets import (mnist3d_label, mnist3d_mesh, shape_mesh, split_mnist3d, starstruck_scene,
                     starstruck_split, synthetic_digit, wrench_mesh)
from .core import InvalidArgument
from .harness import EpisodeLog, aggregate, replay, run_many
from .maps import write_bitmap_pbm
from .mesh import write_obj
from .metrics import AVERAGE, FINAL
from .protocol import ProtocolError
from .registry import ENV_IDS, make
from .tactile import mnist3d_obj_name

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_PROTOCOL = 2
EXIT_CONFIG = 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for protocol errors
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _env_config(args):
    cfg = {"split": args.split}
    if args.corpus:
        cfg["corpus_path"] = args.corpus
    if args.asset_dir:
        cfg["asset_dir"] = args.asset_dir
    if args.max_objects is not None:
        cfg["max_objects"] = args.max_objects
    if args.no_perturbation:
        if args.env not in _TACTILE:
            raise ConfigError("--no-perturbation only applies to tactile environments")
        cfg["perturbation"] = False
    return cfg


_TACTILE = ("TactileMNIST-v0", "TactileMNISTVolume-v0", "Toolbox-v0", "Starstruck-v0")


def _make_env(env_id, cfg):
    kwargs = {k: v for k, v in cfg.items() if k in ("asset_dir", "max_objects", "perturbation")}
    return make(env_id, split=cfg.get("split", "train"), corpus_path=cfg.get("corpus_path"),
                **kwargs)


def cmd_run(args):
    if args.episodes < 1:
        raise ConfigError("--episodes must be >= 1")
    cfg = _env_config(args)
    _make_env(args.env, cfg)  # fail fast on bad configuration
    make_agent(args.agent)
    seeds = [args.seed + i for i in range(args.episodes)]
    logs = run_many(lambda: _make_env(args.env, cfg), lambda: make_agent(args.agent), seeds,
                    lanes=args.lanes, agent_name=args.agent, config=cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, log in enumerate(logs):
        log.write(out / f"episode_{i:05d}.jsonl")
    good = [log for log in logs if log.status == "ok" and log.steps]
    summary = {"env_id": args.env, "agent": args.agent, "episodes": len(logs),
               "failed": len(logs) - len(good)}
    if good:
        summary.update({mode: dict(aggregate(good, mode)) for mode in (AVERAGE, FINAL)})
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    if len(good) != len(logs):
        for log in logs:
            if log.status != "ok":
                print(f"episode seed={log.seed}: {log.error}", file=sys.stderr)
        return EXIT_PROTOCOL
    return EXIT_OK


def _gen_mnist3d(out, count, seed):
    splits = split_mnist3d(seed=seed)
    owner = {int(i): name for name, ids in splits.items() for i in ids}
    count = 20 if count is None else count
    lines = []
    for object_id in range(min(count, C.MNIST3D_TOTAL)):
        label = mnist3d_label(object_id)
        bits = synthetic_digit(label, (seed << 20) + object_id)
        write_bitmap_pbm(out / f"mnist3d_{object_id:05d}.pbm", bits)
        write_obj(out / mnist3d_obj_name(object_id), mnist3d_mesh(object_id, seed))
        lines.append(f"{object_id} {label} {owner[object_id]}")
    (out / "splits.txt").write_text("# object_id label split\n" + "\n".join(lines) + "\n")
    return len(lines)


def _gen_starstruck(out, count, seed):
    count = C.STARSTRUCK_TOTAL if count is None else min(count, C.STARSTRUCK_TOTAL)
    for shape in ("star", "circle", "square"):
        write_obj(out / f"{shape}.obj", shape_mesh(shape))
    test = set(starstruck_split("test").tolist())
    index_lines = []
    for index in range(count):
        layout = starstruck_scene(index, seed)
        rows = [f"# star_count={layout.star_count}", "# shape x_mm y_mm theta_rad"]
        rows += [f"{shape} {x!r} {y!r} {th!r}" for shape, (x, y, th) in layout.items]
        (out / f"scene_{index:04d}.txt").write_text("\n".join(rows) + "\n")
        index_lines.append(f"{index} {layout.star_count} {'test' if index in test else 'train'}")
    (out / "splits.txt").write_text("# index star_count split\n" + "\n".join(index_lines) + "\n")
    return count


def _gen_toolbox(out, count, seed):
    count = C.TOOLBOX_VARIANTS if count is None else min(count, C.TOOLBOX_VARIANTS)
    for v in range(count):
        write_obj(out / f"wrench_{v}.obj", wrench_mesh(v))
    return count


def cmd_gen_assets(args):
    if args.count is not None and args.count < 0:
        raise ConfigError("--count must be >= 0")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gen = {"mnist3d": _gen_mnist3d, "starstruck": _gen_starstruck, "toolbox": _gen_toolbox}
    n = gen[args.kind](out, args.count, args.seed)
    print(f"wrote {n} {args.kind} assets to {out}")
    return EXIT_OK


def _read_logs(directory):
    paths = sorted(Path(directory).glob("*.jsonl"))
    if not paths:
        raise ConfigError(f"no episode logs in {directory}")
    return [EpisodeLog.read(p) for p in paths]


def cmd_report(args):
    logs = _read_logs(args.logs)
    by_env = {}
    for log in logs:
        by_env.setdefault(log.env_id, []).append(log)
    report = {}
    for env_id in sorted(by_env):
        good = [log for log in by_env[env_id] if log.status == "ok" and log.steps]
        entry = {"episodes": len(by_env[env_id]), "failed": len(by_env[env_id]) - len(good)}
        if good:
            entry["metrics"] = dict(aggregate(good, args.mode))
        report[env_id] = entry
    print(json.dumps({"mode": args.mode, "environments": report}, indent=2))
    return EXIT_OK


def cmd_replay(args):
    log = EpisodeLog.read(args.log)
    cfg = dict(log.config)
    if args.corpus:
        cfg["corpus_path"] = args.corpus
    result = replay(log, _make_env(log.env_id, cfg))
    print(json.dumps({"env_id": log.env_id, "seed": log.seed, "identical": result.identical,
                      "steps": result.steps_checked, "mismatches": result.mismatches[:20],
                      "max_reward_diff": result.max_reward_diff,
                      "max_loss_diff": result.max_loss_diff}, indent=2))
    return EXIT_OK if result.identical else EXIT_MISMATCH


def build_parser():
    p = _Parser(prog="apsuite", description="Active perception benchmark environments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run episodes with an agent and write logs")
    r.add_argument("--env", required=True, choices=ENV_IDS)
    r.add_argument("--agent", required=True, help="built-in agent name or exec:COMMAND")
    r.add_argument("--episodes", type=int, default=10)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--split", default="train")
    r.add_argument("--out", required=True)
    r.add_argument("--corpus", help="dataset directory or manifest file for image tasks")
    r.add_argument("--asset-dir", help="directory of pre-generated MNIST 3D OBJ files")
    r.add_argument("--max-objects", type=int, help="limit the MNIST 3D object pool")
    r.add_argument("--lanes", type=int, default=1)
    r.add_argument("--no-perturbation", action="store_true",
                   help="disable contact perturbation in tactile environments")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gen-assets", help="export meshes, bitmaps, layouts and splits")
    g.add_argument("--kind", required=True, choices=("mnist3d", "starstruck", "toolbox"))
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen_assets)

    rep = sub.add_parser("report", help="aggregate a directory of episode logs")
    rep.add_argument("--logs", required=True)
    rep.add_argument("--mode", choices=(AVERAGE, FINAL), default=AVERAGE)
    rep.set_defaults(func=cmd_report)

    rp = sub.add_parser("replay", help="re-run a logged episode and compare")
    rp.add_argument("--log", required=True)
    rp.add_argument("--corpus", help="override the corpus path stored in the log")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (ConfigError, InvalidArgument, FileNotFoundError, NotADirectoryError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolError as e:
        print(f"protocol error: {e}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
