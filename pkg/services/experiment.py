# Severity Curriculum - Arabic medical QA generation

import logging
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict

from config import Config
from models.audit import count_order_violations, create_run, log_presentations
from models.database import init_db
from models.lexicon import load_lexicon
from models.record import renumber
from models.tiny_lm import build_vocab
from services.annotator import annotate_dataset
from services.dataset import stage_split, synth_generate, train_eval_split
from services.evaluator import EvalReport, evaluate
from services.trainer import finetune_curriculum, finetune_standard, pretrain, pretrain_corpus

logger = logging.getLogger(__name__)

# Curriculum must beat the baseline on at least this share of seeds
MIN_WIN_SHARE = 0.8


@dataclass
class SeedOutcome:
    seed: int
    reports: Dict[str, EvalReport]
    presentations: Dict[str, int] = field(default_factory=dict)
    order_violations: int = 0

    def score(self, mode):
        return self.reports[mode].token_f1


def run_pipeline(config, n_per_tier, ledger=':memory:') -> SeedOutcome:
    """synth -> annotate -> split -> pretrain -> three regimes -> evaluate, for config.seed"""
    lexicon = load_lexicon(Path(config.lexicon_path))
    corpus = synth_generate(n_per_tier, config.seed, lexicon)
    annotated, _ = annotate_dataset([record.with_severity(None) for record in corpus], lexicon)
    train, evaluation = train_eval_split(annotated, config.train_fraction, config.seed)
    train, evaluation = renumber(train), renumber(evaluation)

    vocab = build_vocab(train)
    model_config = replace(config.model, vocab_size=vocab.size)
    base, _ = pretrain(model_config, config.train, pretrain_corpus(train, config.train.pretrain_corpus), vocab)

    label = f'seed {config.seed}'
    reports = {
        'baseline': evaluate(base, vocab, evaluation, config.decode, mode='baseline', label=label,
                             provenance={'seed': config.seed, 'total_presentations': 0}),
    }

    standard, standard_state = finetune_standard(base, train, config.train, config.lora, vocab)
    reports['standard'] = evaluate(standard, vocab, evaluation, config.decode, mode='standard', label=label,
                                   provenance={'seed': config.seed,
                                               'total_presentations': standard_state.total_presentations})

    curriculum, curriculum_state = finetune_curriculum(base, stage_split(train), train, config.train,
                                                       config.lora, vocab)
    reports['curriculum'] = evaluate(curriculum, vocab, evaluation, config.decode, mode='curriculum', label=label,
                                     provenance={'seed': config.seed,
                                                 'total_presentations': curriculum_state.total_presentations})

    init_db(ledger)
    run_id = create_run(ledger, 'curriculum', config.seed, config.to_dict())
    log_presentations(ledger, run_id, curriculum_state.presentations)

    return SeedOutcome(
        seed=config.seed,
        reports=reports,
        presentations={
            'standard': standard_state.total_presentations,
            'curriculum': curriculum_state.total_presentations,
        },
        order_violations=count_order_violations(ledger, run_id),
    )


def ordering_verdict(outcomes):
    """Median token-F1 ordering across seeds and the curriculum win count"""
    medians = {mode: statistics.median(o.score(mode) for o in outcomes) for mode in Config.MODES}
    wins = sum(1 for o in outcomes if o.score('curriculum') > o.score('baseline'))
    holds = (
        medians['curriculum'] >= medians['standard'] >= medians['baseline']
        and wins >= MIN_WIN_SHARE * len(outcomes)
        and all(o.order_violations == 0 for o in outcomes)
    )
    return {
        'medians': medians,
        'curriculum_wins_over_baseline': wins,
        'seeds': [o.seed for o in outcomes],
        'holds': holds,
    }
