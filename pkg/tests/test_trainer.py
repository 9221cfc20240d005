# Severity Curriculum - Arabic medical QA generation

from dataclasses import replace

import pytest

from models.record import QaRecord
from models.severity import SeverityLabel
from models.tiny_lm import build_vocab
from services.dataset import stage_split
from services.trainer import (
    TrainRunState, finetune_curriculum, finetune_standard, load_checkpoint, pretrain, pretrain_corpus,
    run_manifest, stage_lr,
)
from utils.errors import EmptyCorpus, EmptyStage, MissingBase, VersionMismatch


@pytest.fixture
def vocab(short_records):
    return build_vocab(short_records)


@pytest.fixture
def base(tiny_config, short_records, vocab):
    model_config = replace(tiny_config.model, vocab_size=vocab.size)
    model, _ = pretrain(model_config, tiny_config.train, pretrain_corpus(short_records), vocab)
    return model


def curriculum(base, records, config, vocab, **options):
    return finetune_curriculum(base, stage_split(records), records, config.train, config.lora, vocab, **options)


def test_stage_lr_schedule():
    assert stage_lr(3e-4, 0.5, 1) == pytest.approx(3e-4)
    assert stage_lr(3e-4, 0.5, 2) == pytest.approx(1.5e-4)
    assert stage_lr(3e-4, 0.5, 3) == pytest.approx(7.5e-5)
    assert stage_lr(1e-3, 1.0, 3) == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        stage_lr(3e-4, 0.5, 4)


def test_pretrain_corpus_variants(short_records):
    assert len(pretrain_corpus(short_records)) == 6
    assert len(pretrain_corpus(short_records, 'questions_and_answers')) == 12


def test_pretrain_records_losses(tiny_config, short_records, vocab):
    model_config = replace(tiny_config.model, vocab_size=vocab.size)
    model, state = pretrain(model_config, tiny_config.train, pretrain_corpus(short_records), vocab)
    assert state.finished
    assert len(state.losses) == tiny_config.train.pretrain_epochs
    assert state.total_presentations == 0
    with pytest.raises(EmptyCorpus):
        pretrain(model_config, tiny_config.train, [], vocab)


def test_curriculum_presentation_order(base, short_records, tiny_config, vocab):
    adapted, state = curriculum(base, short_records, tiny_config, vocab)
    epochs = tiny_config.train.epochs_per_stage

    stages = [stage for stage, _, _, _ in state.presentations]
    assert stages == sorted(stages)
    counts = state.presentation_counts()
    assert counts['1'] == {'mild': 2 * epochs}
    assert counts['2'] == {'mild': 2 * epochs, 'moderate': 2 * epochs}
    assert counts['3'] == {'mild': 2 * epochs, 'moderate': 2 * epochs, 'critical': 2 * epochs}
    assert state.total_presentations == (2 + 4 + 6) * epochs
    assert state.stage_lrs == {
        str(k): pytest.approx(stage_lr(tiny_config.train.base_lr, tiny_config.train.stage_decay, k))
        for k in (1, 2, 3)
    }


def test_curriculum_stage_digests_chain(base, short_records, tiny_config, vocab):
    adapted, state = curriculum(base, short_records, tiny_config, vocab)
    digests = state.stage_digests
    assert digests['2']['start'] == digests['1']['end']
    assert digests['3']['start'] == digests['2']['end']
    assert digests['3']['end'] == adapted.digest()
    assert digests['1']['start'] != digests['1']['end']


def test_each_epoch_visits_stage_once(base, short_records, tiny_config, vocab):
    _, state = curriculum(base, short_records, tiny_config, vocab)
    for stage in (1, 2, 3):
        for epoch in range(1, tiny_config.train.epochs_per_stage + 1):
            seen = [rid for s, e, rid, _ in state.presentations if s == stage and e == epoch]
            assert sorted(seen) == sorted(set(seen))


def test_training_is_deterministic(base, short_records, tiny_config, vocab):
    first, first_state = curriculum(base, short_records, tiny_config, vocab)
    second, second_state = curriculum(base, short_records, tiny_config, vocab)
    assert first.digest() == second.digest()
    assert first_state.presentations == second_state.presentations
    assert first_state.losses == second_state.losses


def test_standard_single_phase(base, short_records, tiny_config, vocab):
    adapted, state = finetune_standard(base, short_records, tiny_config.train, tiny_config.lora, vocab)
    epochs = 3 * tiny_config.train.epochs_per_stage
    assert {stage for stage, _, _, _ in state.presentations} == {1}
    assert state.total_presentations == 6 * epochs
    assert len(state.losses) == epochs
    assert state.stage_lrs == {'1': tiny_config.train.base_lr}


def test_base_model_is_not_modified(base, short_records, tiny_config, vocab):
    before = base.digest()
    curriculum(base, short_records, tiny_config, vocab)
    assert base.digest() == before


def test_resume_mid_stage_is_bit_exact(base, short_records, tiny_config, vocab, tmp_path):
    full, full_state = curriculum(base, short_records, tiny_config, vocab,
                                  checkpoint_dir=tmp_path / 'full', checkpoint_every_epoch=True)
    midpoint = tmp_path / 'full' / 'stage2-epoch1.ckpt'
    assert midpoint.is_file()
    assert (tmp_path / 'full' / 'stage3.ckpt').is_file()

    resumed, resumed_state = curriculum(base, short_records, tiny_config, vocab,
                                        resume_from=midpoint, checkpoint_dir=tmp_path / 'resumed')
    assert resumed.digest() == full.digest()
    assert resumed_state.losses == full_state.losses
    assert resumed_state.presentations == full_state.presentations


def test_checkpoint_restores_state(base, short_records, tiny_config, vocab, tmp_path):
    curriculum(base, short_records, tiny_config, vocab, checkpoint_dir=tmp_path)
    state, adapted, adam, _ = load_checkpoint(tmp_path / 'stage1.ckpt', base)
    assert isinstance(state, TrainRunState)
    assert state.phase_index == 1
    assert state.epoch == 0
    assert adapted.digest() == state.stage_digests['1']['end']
    assert adam.step > 0
    with pytest.raises(MissingBase):
        load_checkpoint(tmp_path / 'stage1.ckpt')


def test_resume_rejects_other_mode(base, short_records, tiny_config, vocab, tmp_path):
    curriculum(base, short_records, tiny_config, vocab, checkpoint_dir=tmp_path)
    with pytest.raises(VersionMismatch):
        finetune_standard(base, short_records, tiny_config.train, tiny_config.lora, vocab,
                          resume_from=tmp_path / 'stage1.ckpt')


def test_empty_stage(base, tiny_config, vocab):
    records = [QaRecord(id=i, question='اغماء', answer='اسعاف', severity=SeverityLabel.CRITICAL)
               for i in range(3)]
    with pytest.raises(EmptyStage) as error:
        curriculum(base, records, tiny_config, vocab)
    assert error.value.stage == 1

    skipping = replace(tiny_config, train=replace(tiny_config.train, skip_empty_stages=True))
    _, state = curriculum(base, records, skipping, vocab)
    assert set(state.stage_lrs) == {'3'}
    assert state.total_presentations == 3 * tiny_config.train.epochs_per_stage


def test_run_manifest_fields(base, short_records, tiny_config, vocab):
    _, state = curriculum(base, short_records, tiny_config, vocab)
    partition = stage_split(short_records)
    manifest = run_manifest(tiny_config, state, {'adapter': 'adapter.ckpt'}, 'abc', 'def', partition=partition)
    assert manifest['stage_sizes'] == {'d1': 2, 'd2': 4, 'd3': 6}
    assert manifest['total_presentations'] == state.total_presentations
    assert manifest['seed'] == tiny_config.seed


def test_standard_finetune_memorizes_a_single_record(tiny_config):
    record = QaRecord(id=0, question='حمي', answer='طبيب', severity=SeverityLabel.MODERATE)
    vocab = build_vocab([record])
    train = replace(tiny_config.train, pretrain_epochs=200, pretrain_lr=1e-2, epochs_per_stage=100, base_lr=1e-2)
    lora = replace(tiny_config.lora, rank=4, alpha=8.0, targets=('q', 'v', 'o', 'mlp_out'))
    model_config = replace(tiny_config.model, vocab_size=vocab.size)
    base, _ = pretrain(model_config, train, pretrain_corpus([record], 'questions_and_answers'), vocab)

    _, state = finetune_standard(base, [record], train, lora, vocab)
    assert len(state.losses) == 300
    assert state.losses[-1]['loss'] < 0.1
    assert state.losses[-1]['loss'] < state.losses[0]['loss'] / 10
