"""
Command-line interface: generate, train, evaluate, predict and gradcheck.

Exit codes: 0 on success, 1 on invalid input, configuration or usage, 2 on
numerical failures (divergence, failed gradient check).
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from ..core.errors import ConfigurationError, ForecastError, NumericalError, TrainingDiverged
from ..data import (
    SCENARIO_KINDS,
    downsample,
    generate_synthetic,
    ingest_csv,
    save_geometry,
    split,
    window_scenes,
    write_csv,
)
from ..mixture import LossPhase
from ..scenes import SceneSequence, collate
from ..training import (
    TINY_CONFIG,
    Checkpoint,
    ModelPredictor,
    Predictor,
    as_predictor,
    baseline,
    evaluate,
    run_gradcheck,
    train,
)
from ..training.trainer import chunk_scenes
from .config import VERBOSITY_LEVELS, CliConfig, load_config

logger = logging.getLogger(__name__)

FORECAST_SCHEMA = "traffic-forecast"
FORECAST_SCHEMA_VERSION = 1
PARTS = ('train', 'val', 'test', 'all')


class ForecastCLI:
    """Runs one subcommand from parsed arguments."""

    def __init__(self, args: argparse.Namespace):
        self.args = args

    def config(self) -> CliConfig:
        overrides = {key: getattr(self.args, key, None) for key in OVERRIDE_KEYS}
        config = load_config(getattr(self.args, "config", None), overrides)
        if not (self.args.verbose or self.args.quiet):
            logging.getLogger().setLevel(VERBOSITY_LEVELS[config.verbosity])
        return config

    def run(self) -> int:
        return getattr(self, f"cmd_{self.args.command}")()

    # data

    def load_scenes(self, config: CliConfig) -> List[SceneSequence]:
        config.require('data', 'geometry')
        train_config = config.train_config()
        table = ingest_csv(config.data, config.geometry)
        factor = config.downsample or max(1, int(round(train_config.sample_time * table.rate_hz)))
        table = downsample(table, factor)
        if abs(table.sample_time - train_config.sample_time) > 1e-9:
            raise ConfigurationError(
                f"Downsampling {config.data} by {factor} gives T_s={table.sample_time:g}s, "
                f"but sample_time is {train_config.sample_time:g}s"
            )
        scenes = window_scenes(table, train_config.history, train_config.horizon, config.stride,
                               config.center, train_config.seed)
        if not scenes:
            raise ForecastError(f"{config.data} yields no scene windows")
        return scenes

    def parts(self, config: CliConfig, scenes: Sequence[SceneSequence]):
        return split(scenes, config.split_spec, config.train_config().seed)

    def select(self, config: CliConfig, scenes: Sequence[SceneSequence], part: str) -> List[SceneSequence]:
        if part == 'all':
            return list(scenes)
        return dict(zip(('train', 'val', 'test'), self.parts(config, scenes)))[part]

    def predictor(self, config: CliConfig) -> Predictor:
        if config.baseline:
            return baseline(config.baseline)
        config.require('checkpoint')
        return ModelPredictor(Checkpoint.load(config.checkpoint).build())

    # subcommands

    def cmd_generate(self) -> int:
        out = Path(self.args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        table = generate_synthetic(self.args.kind, self.args.n, self.args.seed)
        write_csv(table, out)
        geometry_path = out.with_suffix('.yaml')
        save_geometry(table.geometry, geometry_path)
        print(f"Wrote {table.summary()}")
        print(f"  data:     {out}")
        print(f"  geometry: {geometry_path}")
        return 0

    def cmd_train(self) -> int:
        config = self.config()
        config.require('checkpoint')
        train_config = config.train_config()
        train_scenes, val_scenes, test_scenes = self.parts(config, self.load_scenes(config))
        output_dir = Path(config.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        try:
            result = train(train_config, train_scenes, val_scenes, output_dir / "train_log.jsonl")
        except TrainingDiverged as exc:
            if exc.checkpoint is not None:
                exc.checkpoint.save(config.checkpoint)
                logger.error("saved the last good checkpoint (epoch %d)", exc.checkpoint.epoch)
            raise
        result.checkpoint.save(config.checkpoint)
        print(f"Trained {train_config.get_summary()}")
        print(f"  scenes: {len(train_scenes)} train, {len(val_scenes)} val, {len(test_scenes)} test")
        print(f"  final training loss: {result.losses[-1]:.4f}")
        print(f"  checkpoint: {config.checkpoint}")
        return 0

    def cmd_evaluate(self) -> int:
        config = self.config()
        scenes = self.select(config, self.load_scenes(config), self.args.part)
        report = evaluate(self.predictor(config), scenes, config.evaluation_scope, config.train_config().batch_size)
        paths = report.write(config.output_dir, f"metrics_{report.predictor}_{self.args.part}")
        print(report.get_summary())
        print(f"  report: {paths['yaml']}")
        return 0

    def cmd_predict(self) -> int:
        config = self.config()
        scenes = self.select(config, self.load_scenes(config), self.args.part)
        predictor = self.predictor(config)
        out = Path(self.args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        records = write_forecasts(out, predictor, scenes, config.train_config().batch_size)
        print(f"Wrote {records} forecast record(s) for {len(scenes)} scene(s) to {out}")
        return 0

    def cmd_gradcheck(self) -> int:
        per_parameter = None if self.args.per_parameter == 0 else self.args.per_parameter
        train_config = self.config().train_config() if self.args.config else TINY_CONFIG
        phases = list(LossPhase) if self.args.phase == 'all' else [LossPhase(self.args.phase)]
        failed = False
        for phase in phases:
            report = run_gradcheck(train_config, per_parameter, self.args.seed,
                                   corrupt=self.args.corrupt_gradient, phase=phase)
            print(f"[{phase}] {report.get_summary()}")
            if not report.passed:
                failed = True
                for name in report.failures():
                    print(f"  {name}: {report.per_parameter[name]:.3e}")
        return 2 if failed else 0


def write_forecasts(path: Path, predictor: Predictor, scenes: Sequence[SceneSequence], batch_size: int) -> int:
    """
    Line-delimited JSON: a schema header, then one record per agent and
    horizon step with the mixture weights, mean positions and covariances
    in absolute coordinates.
    """
    count = 0
    with open(path, 'w') as handle:
        header = {'schema': FORECAST_SCHEMA, 'version': FORECAST_SCHEMA_VERSION, 'scenes': len(scenes)}
        handle.write(json.dumps(header) + "\n")
        predictor, dtype = as_predictor(predictor)
        for chunk in chunk_scenes(scenes, batch_size):
            batch = collate(chunk, dtype)
            forecast = predictor.predict(batch)
            positions = forecast.positions.double().numpy()
            weights = forecast.weights.double().numpy()
            covariances = None if forecast.covariances is None else forecast.covariances.double().numpy()
            scene_index = batch.scene_index.numpy()
            local = np.concatenate([np.arange(s.num_agents) for s in chunk])
            for row in range(forecast.num_agents):
                scene = chunk[scene_index[row]]
                agent = int(scene.agent_ids[local[row]])
                for step in range(forecast.horizon):
                    record = {
                        'scene': scene.name,
                        'agent_id': agent,
                        'step': step + 1,
                        'time': round((step + 1) * scene.sample_time, 9),
                        'weights': weights[row].tolist(),
                        'means': (positions[row, step] + scene.origin).tolist(),
                        'covariances': None if covariances is None else covariances[row, step].tolist(),
                    }
                    handle.write(json.dumps(record) + "\n")
                    count += 1
    logger.info("wrote %d forecast records to %s", count, path)
    return count


OVERRIDE_KEYS = (
    'data', 'geometry', 'checkpoint', 'output_dir', 'baseline', 'scope', 'split', 'downsample', 'stride',
    'center', 'verbosity', 'epochs', 'batch_size', 'learning_rate', 'hidden', 'gnn_kind', 'gnn_heads',
    'components', 'motion_order', 'seed', 'use_encoder_gnn', 'use_decoder_gnn', 'use_ekf', 'use_ode',
    'use_static', 'precision', 'progress',
)


def _flag(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {value!r}")


def _add_pipeline_options(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help="YAML configuration file")
    parser.add_argument('--data', help="trajectory CSV")
    parser.add_argument('--geometry', help="geometry YAML sidecar")
    parser.add_argument('--checkpoint', help="checkpoint file")
    parser.add_argument('--output-dir', dest='output_dir', help="directory for reports and logs")
    parser.add_argument('--split', help="train/val/test fractions, e.g. 80/10/10")
    parser.add_argument('--downsample', type=int, help="frame downsampling factor (default: from sample_time)")
    parser.add_argument('--stride', type=int, help="steps between windows")
    parser.add_argument('--center', choices=['first', 'random', 'all'], help="graph-centre agent policy")
    parser.add_argument('--epochs', type=int)
    parser.add_argument('--batch-size', dest='batch_size', type=int)
    parser.add_argument('--learning-rate', dest='learning_rate', type=float)
    parser.add_argument('--hidden', type=int, help="hidden width d_h")
    parser.add_argument('--gnn-kind', dest='gnn_kind', choices=['graphconv', 'gcn', 'gat', 'gatplus'])
    parser.add_argument('--gnn-heads', dest='gnn_heads', type=int)
    parser.add_argument('--components', type=int, help="mixture components M")
    parser.add_argument('--motion-order', dest='motion_order', type=int, choices=[1, 2])
    parser.add_argument('--seed', type=int)
    for name in ('use_encoder_gnn', 'use_decoder_gnn', 'use_ekf', 'use_ode', 'use_static', 'progress'):
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=_flag, metavar='BOOL')
    parser.add_argument('--precision', choices=['float64', 'float32'])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='forecast', description="Multi-agent traffic trajectory forecaster")
    parser.add_argument('-v', '--verbose', action='store_true', help="debug logging")
    parser.add_argument('-q', '--quiet', action='store_true', help="warnings only")
    commands = parser.add_subparsers(dest='command', required=True)

    generate = commands.add_parser('generate', help="write synthetic scenes as CSV plus geometry YAML")
    generate.add_argument('kind', choices=SCENARIO_KINDS)
    generate.add_argument('n', type=int, help="number of scenes")
    generate.add_argument('--seed', type=int, default=0)
    generate.add_argument('--out', required=True, help="CSV path; the geometry goes next to it as .yaml")

    train_cmd = commands.add_parser('train', help="train a forecaster and save a checkpoint")
    _add_pipeline_options(train_cmd)

    evaluate_cmd = commands.add_parser('evaluate', help="metrics of a checkpoint or baseline")
    _add_pipeline_options(evaluate_cmd)
    evaluate_cmd.add_argument('--baseline', choices=['cv', 'ca'], help="evaluate a kinematic baseline")
    evaluate_cmd.add_argument('--scope', choices=['all', 'center'])
    evaluate_cmd.add_argument('--part', choices=PARTS, default='test', help="which split part to score")

    predict = commands.add_parser('predict', help="write mixture forecasts as line-delimited JSON")
    _add_pipeline_options(predict)
    predict.add_argument('--baseline', choices=['cv', 'ca'])
    predict.add_argument('--part', choices=PARTS, default='test')
    predict.add_argument('--out', required=True, help="output JSONL file")

    gradcheck = commands.add_parser('gradcheck', help="check gradients against finite differences")
    gradcheck.add_argument('--config', help="YAML configuration file (default: a tiny float64 model)")
    gradcheck.add_argument('--phase', choices=[str(phase) for phase in LossPhase] + ['all'], default='all',
                           help="loss schedule phase to check")
    gradcheck.add_argument('--seed', type=int, default=0)
    gradcheck.add_argument('--per-parameter', dest='per_parameter', type=int, default=8,
                           help="coordinates checked per tensor (0 = all)")
    gradcheck.add_argument('--corrupt-gradient', dest='corrupt_gradient', action='store_true',
                           help=argparse.SUPPRESS)
    return parser


def configure_logging(args: argparse.Namespace):
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    else:
        level = logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are invalid input
        return 0 if exc.code in (0, None) else 1
    configure_logging(args)
    try:
        return ForecastCLI(args).run()
    except NumericalError as exc:
        logger.error("%s", exc)
        return 2
    except (ForecastError, ValueError, OSError) as exc:
        logger.error("%s", exc)
        return 1
    except KeyboardInterrupt:
        print("\nInterrupted.")
        return 1


if __name__ == "__main__":
    sys.exit(main())
