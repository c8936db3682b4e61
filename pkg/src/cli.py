"""Command-line entry point: train, eval, sweep, gradcheck and history."""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

from src.autograd.checkpoint import load_checkpoint
from src.config import settings
from src.database.engine import DatabaseManager
from src.gnn import BACKBONES
from src.runconfig import RESOLVED_CONFIG_NAME, RunConfig, load_run_config, load_scenario_config
from src.services.evaluator import BASELINES, PolicySpec, dump_trajectory, evaluate
from src.services.gradcheck_suite import SCOPES, run_gradcheck
from src.services.registry import RunRegistry
from src.services.sweep import sweep_granularity, train_backbones, write_sweep
from src.services.trainer import Trainer
from src.utils.exceptions import AmodError, ConfigError, NumericError
from src.utils.formatters import (
    RESULTS_HEADER,
    format_gradcheck_report,
    format_history,
    render_sweep_svg,
    results_row,
    write_csv,
)
from src.utils.logger import setup_logging
from src.utils.validators import parse_overrides, validate_k_list, validate_seed

logger = setup_logging(__name__)

RESULTS_CSV_NAME = "results.csv"
RESULTS_SVG_NAME = "results.svg"
TRAJECTORY_CSV_NAME = "trajectory.csv"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amod",
        description="Train and evaluate graph-backbone A2C rebalancing policies on grid cities.",
        epilog="Any config field can be overridden with --section.key value, e.g. --train.lr 0.01",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def run_options(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="run config JSON")
        p.add_argument("--episodes", type=int, help="episodes to train or evaluate per seed")
        p.add_argument("--seed", type=int, action="append", help="root seed (repeatable)")
        p.add_argument("--backbone", choices=BACKBONES)
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, default=1, help="evaluation worker processes")

    train = sub.add_parser("train", help="train a policy", allow_abbrev=False)
    run_options(train)
    train.add_argument("--no-resume", action="store_true", help="ignore an existing checkpoint")

    ev = sub.add_parser("eval", help="evaluate a checkpoint or a baseline", allow_abbrev=False)
    run_options(ev)
    ev.add_argument("--checkpoint", help="trained checkpoint")
    ev.add_argument("--baseline", choices=BASELINES, help="evaluate a reference policy instead")
    ev.add_argument("--scenario", help="scenario JSON replacing the config's scenario")
    ev.add_argument("--oracle", action="store_true", help="add the deviation from the optimum")
    ev.add_argument("--stochastic", action="store_true", help="sample actions instead of the mean")
    ev.add_argument("--svg", action="store_true", help="also render the results chart")
    ev.add_argument("--trajectory", action="store_true", help="dump one episode per seed")

    sw = sub.add_parser("sweep", help="zero-shot evaluation across grid sizes", allow_abbrev=False)
    run_options(sw)
    sw.add_argument("--checkpoint", action="append", default=[], help="checkpoint (repeatable)")
    sw.add_argument("--k", type=int, nargs="+", required=True, help="grid sizes")
    sw.add_argument("--train-backbones", nargs="+", choices=BACKBONES, default=[])
    sw.add_argument("--baselines", nargs="+", choices=BASELINES, default=[])

    gc = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    gc.add_argument("scope", choices=SCOPES)
    gc.add_argument("--seed", type=int, default=0)

    sub.add_parser("history", help="list recent runs")
    return parser


def resolve_run_config(args: argparse.Namespace, extra: Sequence[str]) -> RunConfig:
    """Config file, then --section.key overrides, then the shortcut flags."""
    overrides = parse_overrides(extra)
    if args.episodes is not None:
        section = "train" if args.command == "train" else "evaluation"
        overrides[f"{section}.episodes"] = args.episodes
    if args.seed:
        overrides["seeds"] = [validate_seed(s) for s in args.seed]
    if args.backbone:
        overrides["model.backbone"] = args.backbone
    return load_run_config(args.config, overrides)


def checkpoint_spec(
    path: str | Path,
    run_cfg: RunConfig,
    stochastic: bool = False,
    requested_backbone: str | None = None,
) -> PolicySpec:
    """
    Policy spec for a trained checkpoint.

    The backbone comes from the checkpoint itself; other model settings come from
    the run config, or from the resolved config saved next to the checkpoint when
    no config file was given.

    Raises:
        ConfigError: requested_backbone names a different backbone than the checkpoint
    """
    path = Path(path)
    arrays = load_checkpoint(path)
    model = run_cfg.model
    sibling = path.parent / RESOLVED_CONFIG_NAME
    if sibling.is_file() and run_cfg.model == RunConfig().model:
        model = load_run_config(sibling).model
    if "meta.backbone" in arrays:
        backbone = BACKBONES[int(arrays["meta.backbone"].reshape(-1)[0])]
        if requested_backbone is not None and requested_backbone != backbone:
            raise ConfigError(
                f"checkpoint {path} holds a {backbone} policy, --backbone asked for {requested_backbone}"
            )
        model = model.model_copy(update={"backbone": backbone})
    weights = {k: v for k, v in arrays.items() if not k.startswith(("adam.", "meta.episode"))}
    return PolicySpec(
        kind="model",
        model=model,
        arrays=weights,
        init_seed=run_cfg.seeds[0],
        stochastic=stochastic,
    )


def cmd_train(args: argparse.Namespace, extra: Sequence[str], registry: RunRegistry) -> int:
    run_cfg = resolve_run_config(args, extra)
    out_dir = run_cfg.resolved_output_dir(args.out)
    run_cfg.echo(out_dir)
    logger.info(f"Training backbone={run_cfg.model.backbone} seeds={run_cfg.seeds} into {out_dir}")

    for seed in run_cfg.seeds:
        seed_dir = out_dir if len(run_cfg.seeds) == 1 else out_dir / f"seed{seed}"
        run_id = registry.start(
            "train", str(seed_dir), seed, run_cfg.model.backbone, run_cfg.model_dump_json()
        )
        try:
            trainer = Trainer(run_cfg.scenario, run_cfg.model, run_cfg.train, seed, seed_dir)
            result = trainer.train(resume=not args.no_resume)
        except AmodError as e:
            registry.finish(run_id, ok=False, message=str(e))
            raise
        registry.finish(run_id, ok=True)
        print(f"checkpoint: {result.checkpoint}")
        print(f"training log: {result.log_path}")
    return 0


def cmd_eval(args: argparse.Namespace, extra: Sequence[str], registry: RunRegistry) -> int:
    run_cfg = resolve_run_config(args, extra)
    if args.scenario:
        run_cfg = run_cfg.model_copy(update={"scenario": load_scenario_config(args.scenario)})
    if bool(args.checkpoint) == bool(args.baseline):
        raise ConfigError("eval needs exactly one of --checkpoint or --baseline")

    if args.baseline:
        spec = PolicySpec(kind=args.baseline)
    else:
        spec = checkpoint_spec(
            args.checkpoint, run_cfg, stochastic=args.stochastic, requested_backbone=args.backbone
        )

    out_dir = run_cfg.resolved_output_dir(args.out)
    run_cfg.echo(out_dir)
    run_id = registry.start(
        "eval", str(out_dir), run_cfg.seeds[0], spec.backbone, run_cfg.model_dump_json()
    )
    try:
        summaries = evaluate(
            spec,
            run_cfg.scenario,
            run_cfg.evaluation.episodes,
            run_cfg.seeds,
            oracle=args.oracle,
            workers=args.workers,
        )
    except AmodError as e:
        registry.finish(run_id, ok=False, message=str(e))
        raise

    rows = [results_row(s) for s in summaries]
    csv_path = write_csv(out_dir / RESULTS_CSV_NAME, RESULTS_HEADER, rows)
    print(f"results: {csv_path}")
    if args.svg:
        chart_rows = [
            [str(s.k), f"{s.model}-{s.backbone}", str(s.reward_mean), str(s.served_mean), str(s.cost_mean)]
            for s in summaries
        ]
        print(f"chart: {render_sweep_svg(chart_rows, out_dir / RESULTS_SVG_NAME, title='evaluation')}")
    if args.trajectory:
        for seed in run_cfg.seeds:
            name = TRAJECTORY_CSV_NAME if len(run_cfg.seeds) == 1 else f"trajectory-seed{seed}.csv"
            print(f"trajectory: {dump_trajectory(spec, run_cfg.scenario, seed, out_dir / name)}")

    registry.record_evaluations(run_id, summaries)
    registry.finish(run_id, ok=True)
    return 0


def cmd_sweep(args: argparse.Namespace, extra: Sequence[str], registry: RunRegistry) -> int:
    k_list = validate_k_list(args.k)
    run_cfg = resolve_run_config(args, extra)
    out_dir = run_cfg.resolved_output_dir(args.out)
    run_cfg.echo(out_dir)

    specs = [PolicySpec(kind=kind) for kind in args.baselines]
    checkpoints = [checkpoint_spec(p, run_cfg, requested_backbone=args.backbone) for p in args.checkpoint]
    if args.train_backbones:
        trained = train_backbones(run_cfg, args.train_backbones, out_dir)
        checkpoints += [checkpoint_spec(ckpt, run_cfg) for _, ckpt in trained]
    specs = checkpoints + specs
    if not specs:
        raise ConfigError("sweep needs --checkpoint, --train-backbones or --baselines")

    run_id = registry.start("sweep", str(out_dir), run_cfg.seeds[0], None, run_cfg.model_dump_json())
    try:
        rows = sweep_granularity(
            specs,
            run_cfg.scenario,
            k_list,
            run_cfg.seeds,
            run_cfg.evaluation.episodes,
            workers=args.workers,
        )
    except AmodError as e:
        registry.finish(run_id, ok=False, message=str(e))
        raise
    csv_path, svg_path = write_sweep(rows, out_dir)
    registry.finish(run_id, ok=True)
    print(f"sweep: {csv_path}")
    print(f"chart: {svg_path}")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    results = run_gradcheck(args.scope, seed=args.seed)
    print(format_gradcheck_report(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return 1
    worst = max(r.max_rel_error for r in results)
    print(f"all {len(results)} components passed (worst relative error {worst:.3e})")
    return 0


def cmd_history(registry: RunRegistry) -> int:
    print(format_history(registry.recent(settings.HISTORY_LIMIT)))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run one subcommand.

    Returns:
        Process exit code: 0 ok, 2 configuration error, 3 numeric abort
    """
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if args.command in ("gradcheck", "history") and extra:
        parser.error(f"unrecognized arguments: {' '.join(extra)}")

    db = DatabaseManager()
    registry = RunRegistry(db)
    try:
        if args.command == "train":
            return cmd_train(args, extra, registry)
        if args.command == "eval":
            return cmd_eval(args, extra, registry)
        if args.command == "sweep":
            return cmd_sweep(args, extra, registry)
        if args.command == "gradcheck":
            return cmd_gradcheck(args)
        return cmd_history(registry)
    except NumericError as e:
        logger.error(f"Numeric abort: {e}")
        print(f"error: {e}", file=sys.stderr)
        if e.dump_path:
            print(f"diagnostic dump: {e.dump_path}", file=sys.stderr)
        return e.exit_code
    except AmodError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    finally:
        db.close()


if __name__ == "__main__":
    sys.exit(main())
