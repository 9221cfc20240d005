# Severity Curriculum - Arabic medical QA generation

"""
Training regimes: unconditional pretraining of the base model, standard
LoRA fine-tuning and the three-stage severity curriculum.

Every regime is a list of phases (stage, record ids, epochs, learning rate)
run by the same loop, so presentation logging, stage digests, checkpoints and
resumption behave identically across modes.
"""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from engine.autodiff import backward
from engine.optim import AdamState, adam_step
from models.checkpoint import (
    adapters_from_arrays, check_base, lora_config_from, read_container, write_container,
)
from models.lora import AdaptedModel, attach, trainable_parameters
from models.tiny_lm import Model, collate, encode_pairs, encode_text, loss, parameter_digest
from services.dataset import STAGES
from utils.errors import EmptyCorpus, EmptyStage, VersionMismatch
from utils.helpers import derive_seed

logger = logging.getLogger(__name__)


def stage_lr(base_lr, gamma, k):
    """Learning rate of curriculum stage k: base_lr * gamma^(k-1)"""
    if k not in STAGES:
        raise ValueError(f'stage must be one of {STAGES}, got {k}')
    return base_lr * gamma ** (k - 1)


@dataclass(frozen=True)
class Phase:
    stage: int
    record_ids: Tuple[int, ...]
    epochs: int
    lr: float


@dataclass
class TrainRunState:
    """Progress of one run; enough to resume it bit-exactly"""

    mode: str
    phase_index: int = 0
    epoch: int = 0
    stage: int = 1
    losses: List[dict] = field(default_factory=list)
    stage_lrs: Dict[str, float] = field(default_factory=dict)
    presentations: List[list] = field(default_factory=list)
    stage_digests: Dict[str, dict] = field(default_factory=dict)
    checkpoints: List[str] = field(default_factory=list)
    rng_state: Optional[dict] = None
    finished: bool = False

    @property
    def total_presentations(self):
        return len(self.presentations)

    def presentation_counts(self):
        """{stage: {severity key or 'unlabeled': count}}"""
        counts = {}
        for stage, _epoch, _record_id, severity in self.presentations:
            tier = counts.setdefault(str(stage), {})
            key = severity or 'unlabeled'
            tier[key] = tier.get(key, 0) + 1
        return counts

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def pretrain_corpus(records, corpus='questions'):
    """Plain text lines for unconditional pretraining"""
    texts = [record.question for record in records]
    if corpus == 'questions_and_answers':
        texts.extend(record.answer for record in records)
    return texts


def _build_phase(stage, record_ids, epochs, lr, pairs, skip_empty):
    usable = tuple(sorted(rid for rid in record_ids if rid in pairs))
    if not usable:
        if skip_empty:
            logger.warning('Stage %d has no trainable records; skipping it', stage)
            return None
        raise EmptyStage(stage)
    return Phase(stage=stage, record_ids=usable, epochs=epochs, lr=lr)


def _run_epoch(model, trainable, phase, pairs, labels, config, state, rng, adam):
    epoch_number = state.epoch + 1
    order = rng.permutation(len(phase.record_ids))
    batch_losses = []
    for start in range(0, len(order), config.batch_size):
        batch_ids = [phase.record_ids[i] for i in order[start:start + config.batch_size]]
        batch = collate([pairs[rid] for rid in batch_ids])

        for tensor in trainable.values():
            tensor.zero_grad()
        value = loss(model, batch)
        backward(value)
        adam_step(trainable, adam, phase.lr, clip_norm=config.clip_norm)

        batch_losses.append(value.item())
        if labels is not None:
            for rid in batch_ids:
                severity = labels.get(rid)
                state.presentations.append([phase.stage, epoch_number, rid, severity.key if severity else None])
    return float(np.mean(batch_losses))


def run_phases(model, trainable, phases, pairs, labels, config, state, rng, adam, on_checkpoint=None):
    """
    Train phase by phase from wherever ``state`` says the run stopped.

    Adam moments restart with each phase. ``on_checkpoint(state, adam, rng,
    event)`` fires after every completed epoch ("epoch") and after every
    completed phase ("stage").
    """
    while state.phase_index < len(phases):
        phase = phases[state.phase_index]
        key = str(phase.stage)
        state.stage = phase.stage
        if state.epoch == 0:
            adam = AdamState()
            state.stage_lrs[key] = phase.lr
            state.stage_digests[key] = {'start': parameter_digest(trainable)}
            logger.info('Stage %d: %d records, %d epochs, lr=%.6g',
                        phase.stage, len(phase.record_ids), phase.epochs, phase.lr)

        while state.epoch < phase.epochs:
            epoch_loss = _run_epoch(model, trainable, phase, pairs, labels, config, state, rng, adam)
            state.epoch += 1
            state.losses.append({'stage': phase.stage, 'epoch': state.epoch, 'loss': epoch_loss, 'lr': phase.lr})
            logger.info('Stage %d epoch %d/%d: loss=%.4f', phase.stage, state.epoch, phase.epochs, epoch_loss)
            if on_checkpoint and state.epoch < phase.epochs:
                state.rng_state = rng.bit_generator.state
                on_checkpoint(state, adam, rng, 'epoch')

        state.stage_digests[key]['end'] = parameter_digest(trainable)
        state.phase_index += 1
        state.epoch = 0
        state.finished = state.phase_index == len(phases)
        if on_checkpoint:
            state.rng_state = rng.bit_generator.state
            on_checkpoint(state, adam, rng, 'stage')

    state.finished = True
    state.rng_state = rng.bit_generator.state
    return adam


def pretrain(model_config, train_config, texts, vocab):
    """Full-parameter unconditional LM training; returns (Model, TrainRunState)"""
    if not texts:
        raise EmptyCorpus('pretraining corpus is empty')

    model = Model.initialize(model_config)
    state = TrainRunState(mode='pretrain')
    pairs = {
        index: encode_text(text, vocab, model_config.context_len, record_id=index)
        for index, text in enumerate(texts)
    }
    phases = []
    if train_config.pretrain_epochs > 0:
        phases.append(Phase(stage=1, record_ids=tuple(pairs), epochs=train_config.pretrain_epochs,
                            lr=train_config.pretrain_lr))

    rng = np.random.default_rng(derive_seed(train_config.seed, 'pretrain'))
    run_phases(model, model.params, phases, pairs, None, train_config, state, rng, AdamState())
    return model, state


def _labels(records):
    return {record.id: record.severity for record in records}


def _finetune(base, records, phases_for, train_config, lora_config, vocab,
              mode, resume_from=None, checkpoint_dir=None, checkpoint_every_epoch=False):
    pairs = encode_pairs(records, vocab, base.config.context_len)
    phases = phases_for(pairs)

    if resume_from is not None:
        state, adapted, adam, rng = load_checkpoint(resume_from, base)
        if state.mode != mode:
            raise VersionMismatch(f'{resume_from} belongs to a {state.mode} run, not {mode}')
        logger.info('Resuming %s run at stage %d epoch %d', mode, state.stage, state.epoch)
    else:
        adapted = attach(base, lora_config)
        state = TrainRunState(mode=mode)
        adam = AdamState()
        rng = np.random.default_rng(train_config.seed)

    on_checkpoint = None
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)

        def on_checkpoint(run_state, adam_state, generator, event):
            if event == 'epoch' and not checkpoint_every_epoch:
                return
            finished_stage = phases[run_state.phase_index - 1].stage if event == 'stage' else run_state.stage
            name = f'stage{finished_stage}.ckpt' if event == 'stage' else \
                f'stage{run_state.stage}-epoch{run_state.epoch}.ckpt'
            path = checkpoint_dir / name
            run_state.checkpoints.append(str(path))
            save_checkpoint(path, run_state, adapted, adam_state)

    run_phases(adapted, trainable_parameters(adapted), phases, pairs, _labels(records),
               train_config, state, rng, adam, on_checkpoint)
    return adapted, state


def finetune_standard(base, records, train_config, lora_config, vocab, **options):
    """LoRA fine-tuning on every record for 3 * epochs_per_stage epochs at base_lr"""
    def phases_for(pairs):
        phase = _build_phase(1, [record.id for record in records], 3 * train_config.epochs_per_stage,
                             train_config.base_lr, pairs, skip_empty=False)
        return [phase]

    return _finetune(base, records, phases_for, train_config, lora_config, vocab, 'standard', **options)


def finetune_curriculum(base, partition, records, train_config, lora_config, vocab, **options):
    """Stage k trains on D_k for epochs_per_stage epochs at stage_lr(base_lr, decay, k)"""
    def phases_for(pairs):
        phases = []
        for k in STAGES:
            lr = stage_lr(train_config.base_lr, train_config.stage_decay, k)
            phase = _build_phase(k, partition.stage(k), train_config.epochs_per_stage, lr, pairs,
                                 skip_empty=train_config.skip_empty_stages)
            if phase is not None:
                phases.append(phase)
        return phases

    return _finetune(base, records, phases_for, train_config, lora_config, vocab, 'curriculum', **options)


def save_checkpoint(path, state, adapted, adam):
    """Adapters, Adam moments, RNG state and run progress in one container"""
    header = {
        'kind': 'run_state',
        'model_config': asdict(adapted.config),
        'lora_config': dict(asdict(adapted.lora_config), targets=list(adapted.lora_config.targets)),
        'targets': list(adapted.adapters),
        'base_digest': adapted.base.digest(),
        'adam_step': adam.step,
        'state': state.to_dict(),
    }
    tensors = [(name, tensor.data) for name, tensor in trainable_parameters(adapted).items()]
    tensors += [(f'adam.m/{name}', moment) for name, moment in adam.m.items()]
    tensors += [(f'adam.v/{name}', moment) for name, moment in adam.v.items()]
    write_container(path, header, tensors)
    logger.info('Saved run checkpoint %s', path)


def load_checkpoint(path, base=None):
    """Returns (TrainRunState, AdaptedModel, AdamState, numpy Generator)"""
    header, arrays = read_container(path)
    if header.get('kind') != 'run_state':
        raise VersionMismatch(f'{path}: expected a run_state checkpoint, found {header.get("kind")}')
    check_base(base, header, path)

    lora_config = lora_config_from(header)
    adapted = AdaptedModel(base.copy(trainable=False), lora_config,
                           adapters_from_arrays(lora_config, arrays, header['targets']))

    adam = AdamState(step=header['adam_step'])
    for name, array in arrays.items():
        if name.startswith('adam.m/'):
            adam.m[name[len('adam.m/'):]] = array
        elif name.startswith('adam.v/'):
            adam.v[name[len('adam.v/'):]] = array

    state = TrainRunState.from_dict(header['state'])
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = state.rng_state
    return state, adapted, adam, rng


def run_manifest(config, state, artifacts, dataset_hash, records_hash, partition=None, pretrain_state=None):
    """JSON-ready description of a finished run"""
    manifest = {
        'mode': config.train.mode,
        'config': config.to_dict(),
        'seed': config.seed,
        'dataset_hash': dataset_hash,
        'records_hash': records_hash,
        'artifacts': artifacts,
        'pretrain_losses': pretrain_state.losses if pretrain_state else [],
    }
    if state is not None:
        manifest.update({
            'losses': state.losses,
            'stage_lrs': state.stage_lrs,
            'stage_digests': state.stage_digests,
            'checkpoints': state.checkpoints,
            'presentation_counts': state.presentation_counts(),
            'total_presentations': state.total_presentations,
        })
    if partition is not None:
        manifest['stage_sizes'] = {f'd{k}': size for k, size in zip(STAGES, partition.sizes())}
    return manifest
