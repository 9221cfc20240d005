#!/usr/bin/env python3
# Severity Curriculum - Arabic medical QA generation

"""
Multi-seed ordering experiment
Runs baseline, standard fine-tuning and the severity curriculum on a
synthetic corpus for several seeds and checks the score ordering
"""

import argparse
import sys
import time
from pathlib import Path

# Add the parent directory to the Python path so we can import our modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from app import configure_logging
from config import BASE_DIR, Config, resolve_config
from models.database import reset_db
from services.evaluator import compare_report, write_comparison
from services.experiment import ordering_verdict, run_pipeline
from utils.helpers import atomic_write_json

EXPERIMENT_CONFIG = BASE_DIR / 'data' / 'experiment.json'


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description='Curriculum ordering experiment over several seeds')
    parser.add_argument('--seeds', type=int, nargs='+', default=[0, 1, 2, 3, 4])
    parser.add_argument('--n-per-tier', type=int, default=200)
    parser.add_argument('--config', default=str(EXPERIMENT_CONFIG), help='JSON config file')
    parser.add_argument('--out', default='experiment_out')
    return parser.parse_args(argv)


def run_experiment(argv=None):
    """Run every seed, write per-seed comparisons and the overall verdict"""
    args = parse_args(argv)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    ledger = str(out_dir / Config.LEDGER)
    reset_db(ledger)
    started = time.perf_counter()
    print(f"Running experiment over {len(args.seeds)} seeds...")

    outcomes = []
    try:
        for seed in args.seeds:
            config = resolve_config(args.config, flags={'seed': seed})
            configure_logging(config.log_level)
            outcome = run_pipeline(config, args.n_per_tier, ledger=ledger)
            outcomes.append(outcome)

            comparison = compare_report([outcome.reports[mode] for mode in Config.MODES])
            write_comparison(comparison, out_dir / f'seed_{seed}')
            scores = '  '.join(f'{mode} {outcome.score(mode) * 100:.2f}%' for mode in Config.MODES)
            print(f"✓ Seed {seed}: {scores}  (order violations: {outcome.order_violations})")
    except Exception as e:
        print(f"❌ Experiment failed: {str(e)}")
        sys.exit(1)

    verdict = ordering_verdict(outcomes)
    atomic_write_json(out_dir / 'verdict.json', verdict)

    print("\n" + "=" * 50)
    print("EXPERIMENT RESULT")
    print("=" * 50)
    for mode in Config.MODES:
        print(f"- {Config.MODE_DISPLAY[mode]}: median token-F1 {verdict['medians'][mode] * 100:.2f}%")
    print(f"- Curriculum > Baseline in {verdict['curriculum_wins_over_baseline']}/{len(outcomes)} seeds")
    print(f"- Elapsed: {time.perf_counter() - started:.0f}s")
    print("=" * 50)
    if verdict['holds']:
        print("✓ Ordering curriculum ≥ standard ≥ baseline holds")
        return 0
    print("❌ Expected ordering does not hold")
    return 1


if __name__ == "__main__":
    sys.exit(run_experiment())
