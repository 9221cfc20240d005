# Severity Curriculum - Arabic medical QA generation

from pathlib import Path

from config import Config, config_from_dict
from models.checkpoint import load_any
from models.record import load_jsonl
from services.evaluator import EvalReport, compare_report, evaluate, write_comparison
from utils.helpers import read_json


def register(subparsers, parents):
    parser = subparsers.add_parser('eval', parents=parents, help='score a trained model on an evaluation set')
    parser.add_argument('--model', required=True, help='run directory or checkpoint file')
    parser.add_argument('--data', required=True, help='evaluation JSONL')
    parser.add_argument('--out', dest='output', required=True, help='report JSON')
    parser.add_argument('--label', help='row label in comparison tables')
    parser.add_argument('--as-mode', dest='as_mode', choices=Config.MODES,
                        help='column for a bare checkpoint (default: from the manifest or checkpoint)')
    parser.add_argument('--max-new-tokens', dest='decode__max_new_tokens', type=int)
    parser.add_argument('--decode', dest='decode__mode', choices=['greedy', 'top_k'])
    parser.set_defaults(handler=eval_command)

    parser = subparsers.add_parser('report', parents=parents, help='compare evaluation reports')
    parser.add_argument('--runs', nargs='+', required=True, help='report JSON files')
    parser.add_argument('--out', dest='output', required=True, help='output directory')
    parser.set_defaults(handler=report_command)


def default_label(run_config):
    return f'tiny-lm d{run_config.model.embed_dim} L{run_config.model.n_layers} seed {run_config.seed}'


def eval_command(args, config):
    path = Path(args.model)
    manifest = None
    if path.is_dir():
        manifest = read_json(path / Config.MANIFEST)
        path = path / manifest['artifacts']['model']

    model, vocab, header = load_any(path)
    run_config = config_from_dict(manifest['config']) if manifest else config
    mode = args.as_mode or (manifest['mode'] if manifest else header.get('provenance', {}).get('mode', 'baseline'))

    provenance = {'checkpoint': str(path), 'seed': run_config.seed, 'decode': config.to_dict()['decode']}
    if manifest:
        provenance.update({
            'run_config': manifest['config'],
            'total_presentations': manifest.get('total_presentations', 0),
            'records_hash': manifest.get('records_hash'),
        })

    records = load_jsonl(args.data)
    report = evaluate(model, vocab, records, config.decode, mode=mode,
                      label=args.label or default_label(run_config), provenance=provenance)
    report.save(args.output)
    print(report.summary_line())
    return 0


def report_command(args, config):
    reports = [EvalReport.load(path) for path in args.runs]
    comparison = compare_report(reports)
    write_comparison(comparison, args.output)
    print(comparison.table, end='')
    return 0
