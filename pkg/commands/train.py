# Severity Curriculum - Arabic medical QA generation

import logging
import os
from dataclasses import replace
from pathlib import Path

from config import Config
from models.audit import create_run, log_action, log_presentations
from models.checkpoint import load_model, save_adapters, save_model
from models.database import init_db, reset_db
from models.record import load_jsonl, records_digest
from models.tiny_lm import build_vocab
from services.dataset import stage_split
from services.trainer import finetune_curriculum, finetune_standard, pretrain, pretrain_corpus, run_manifest
from utils.helpers import atomic_write_json, sha256_file, utc_timestamp

logger = logging.getLogger(__name__)


def register(subparsers, parents):
    parser = subparsers.add_parser('train', parents=parents, help='run one training regime end to end')
    parser.add_argument('--mode', dest='train__mode', choices=Config.MODES)
    parser.add_argument('--data', required=True, help='annotated training JSONL')
    parser.add_argument('--out-dir', required=True, help='run directory')
    parser.add_argument('--base', help='existing base checkpoint; pretrains a new one when omitted')
    parser.add_argument('--resume', help='run-state checkpoint to continue from')
    parser.add_argument('--checkpoint-every-epoch', action='store_true')

    # Frequently tuned options; everything else comes from --config or SEVCUR_* variables
    parser.add_argument('--base-lr', dest='train__base_lr', type=float)
    parser.add_argument('--stage-decay', dest='train__stage_decay', type=float)
    parser.add_argument('--epochs-per-stage', dest='train__epochs_per_stage', type=int)
    parser.add_argument('--batch-size', dest='train__batch_size', type=int)
    parser.add_argument('--pretrain-epochs', dest='train__pretrain_epochs', type=int)
    parser.add_argument('--skip-empty-stages', dest='train__skip_empty_stages', action='store_const', const=True)
    parser.add_argument('--embed-dim', dest='model__embed_dim', type=int)
    parser.add_argument('--n-layers', dest='model__n_layers', type=int)
    parser.add_argument('--context-len', dest='model__context_len', type=int)
    parser.add_argument('--lora-rank', dest='lora__rank', type=int)
    parser.add_argument('--lora-targets', dest='lora__targets', help='comma-separated, e.g. q,v')
    parser.set_defaults(handler=train_command)


def _artifact(path, out_dir):
    return os.path.relpath(Path(path).resolve(), out_dir.resolve())


def train_command(args, config):
    mode = config.train.mode
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = load_jsonl(args.data)
    # Labels are checked before any training starts
    partition = stage_split(records) if mode == 'curriculum' else None

    ledger = str(out_dir / Config.LEDGER)
    reset_db(ledger)
    init_db(ledger)
    dataset_hash = sha256_file(args.data)
    run_id = create_run(ledger, mode, config.seed, config.to_dict(), dataset_hash)
    log_action(ledger, run_id, 'run_started', f'{mode} on {len(records)} records')

    pretrain_state = None
    if args.base:
        base_path = Path(args.base)
        base, vocab, _ = load_model(base_path)
        log_action(ledger, run_id, 'base_loaded', str(base_path))
    else:
        vocab = build_vocab(records)
        model_config = replace(config.model, vocab_size=vocab.size)
        texts = pretrain_corpus(records, config.train.pretrain_corpus)
        base, pretrain_state = pretrain(model_config, config.train, texts, vocab)
        base_path = out_dir / Config.BASE_CHECKPOINT
        save_model(base, vocab, base_path, provenance={'mode': 'baseline', 'seed': config.seed,
                                                       'pretrain_epochs': config.train.pretrain_epochs})
        log_action(ledger, run_id, 'pretrain_finished', f'{len(texts)} texts, {len(pretrain_state.losses)} epochs')

    artifacts = {'base': _artifact(base_path, out_dir), 'model': _artifact(base_path, out_dir)}
    options = {
        'resume_from': args.resume,
        'checkpoint_dir': out_dir / 'checkpoints',
        'checkpoint_every_epoch': args.checkpoint_every_epoch,
    }

    state = None
    if mode == 'standard':
        adapted, state = finetune_standard(base, records, config.train, config.lora, vocab, **options)
    elif mode == 'curriculum':
        adapted, state = finetune_curriculum(base, partition, records, config.train, config.lora, vocab, **options)

    if state is not None:
        adapter_path = out_dir / Config.ADAPTER_CHECKPOINT
        save_adapters(adapted, vocab, adapter_path, base_path, provenance={
            'mode': mode, 'seed': config.seed, 'stage_reached': state.stage,
        })
        artifacts['adapter'] = _artifact(adapter_path, out_dir)
        artifacts['model'] = artifacts['adapter']
        log_presentations(ledger, run_id, state.presentations)
        for stage, lr in state.stage_lrs.items():
            log_action(ledger, run_id, 'stage_finished',
                       f'stage {stage} lr={lr!r} end={state.stage_digests[stage].get("end", "")}')

    manifest = run_manifest(config, state, artifacts, dataset_hash, records_digest(records),
                            partition=partition, pretrain_state=pretrain_state)
    manifest['run_id'] = run_id
    manifest['created_at'] = utc_timestamp()
    atomic_write_json(out_dir / Config.MANIFEST, manifest)
    log_action(ledger, run_id, 'run_finished', str(out_dir / Config.MANIFEST))

    print(f'{mode} run written to {out_dir}')
    return 0
