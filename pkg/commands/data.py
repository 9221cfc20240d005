# Severity Curriculum - Arabic medical QA generation

import json
import logging
from pathlib import Path

from commands.text import open_text
from models.lexicon import load_lexicon
from models.record import load_jsonl, renumber, write_jsonl
from services.annotator import annotate_dataset, classify_with_matches
from services.dataset import STAGES, stage_records, stage_split, stats, synth_generate, train_eval_split
from utils.helpers import atomic_write_json

logger = logging.getLogger(__name__)


def register(subparsers, parents):
    parser = subparsers.add_parser('annotate', parents=parents, help='label questions by severity')
    parser.add_argument('--in', dest='input', required=True, help='input JSONL')
    parser.add_argument('--out', dest='output', required=True, help='annotated JSONL')
    parser.add_argument('--lexicon', dest='lexicon_path', help='lexicon JSON (default: shipped lexicon)')
    parser.add_argument('--keep-existing', action='store_true', help='keep labels already present')
    parser.add_argument('--explain', help='also write matched phrases per record to this JSONL file')
    parser.set_defaults(handler=annotate_command)

    parser = subparsers.add_parser('stage', parents=parents, help='write curriculum stage files')
    parser.add_argument('--in', dest='input', required=True, help='annotated JSONL')
    parser.add_argument('--out-dir', required=True)
    parser.add_argument('--split', action='store_true',
                        help='first split into train.jsonl / eval.jsonl and stage the train part')
    parser.add_argument('--train-fraction', dest='train_fraction', type=float)
    parser.set_defaults(handler=stage_command)

    parser = subparsers.add_parser('synth', parents=parents, help='generate a synthetic Arabic QA corpus')
    parser.add_argument('--n-per-tier', type=int, default=100)
    parser.add_argument('--out', dest='output', required=True)
    parser.add_argument('--lexicon', dest='lexicon_path')
    parser.set_defaults(handler=synth_command)

    parser = subparsers.add_parser('stats', parents=parents, help='count records per severity tier')
    parser.add_argument('--in', dest='input', required=True)
    parser.set_defaults(handler=stats_command)


def annotate_command(args, config):
    records = load_jsonl(args.input)
    lexicon = load_lexicon(Path(config.lexicon_path))
    annotated, counts = annotate_dataset(records, lexicon, keep_existing=args.keep_existing)
    write_jsonl(annotated, args.output)

    if args.explain:
        with open_text(args.explain, 'w') as target:
            for record in records:
                result = classify_with_matches(record.question, lexicon)
                entry = {
                    'id': record.id,
                    'severity': result.resolved.key,
                    'matches': [
                        {'phrase': phrase, 'tier': label.key, 'offset': offset}
                        for phrase, label, offset in result.matches
                    ],
                }
                target.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + '\n')

    print(counts.format_line())
    return 0


def _write_stages(records, out_dir):
    partition = stage_split(records)
    for k in STAGES:
        write_jsonl(stage_records(records, partition, k), out_dir / f'stage{k}.jsonl')
    atomic_write_json(out_dir / 'stages.json', dict(partition.to_dict(), sizes=list(partition.sizes())))
    return partition


def stage_command(args, config):
    out_dir = Path(args.out_dir)
    records = load_jsonl(args.input)

    if args.split:
        train, evaluation = train_eval_split(records, config.train_fraction, config.seed)
        # Ids are renumbered so they match what reloading each file assigns
        train, evaluation = renumber(train), renumber(evaluation)
        write_jsonl(train, out_dir / 'train.jsonl')
        write_jsonl(evaluation, out_dir / 'eval.jsonl')
        print(f'train {len(train)}  eval {len(evaluation)}')
        records = train

    partition = _write_stages(records, out_dir)
    print('  '.join(f'd{k} {size}' for k, size in zip(STAGES, partition.sizes())))
    return 0


def synth_command(args, config):
    lexicon = load_lexicon(Path(config.lexicon_path))
    records = synth_generate(args.n_per_tier, config.seed, lexicon)
    write_jsonl(records, args.output)
    print(f'{len(records)} records  {stats(records).format_line()}')
    return 0


def stats_command(args, config):
    print(stats(load_jsonl(args.input)).format_line())
    return 0
