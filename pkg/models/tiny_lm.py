# Severity Curriculum - Arabic medical QA generation

"""
Codepoint tokenizer and a small pre-LN decoder-only transformer.

Parameters live in an ordered dict of Tensors; the insertion order is the
canonical order used by checkpoints:

    tok_emb, pos_emb,
    layers.{i}.ln1.gain, layers.{i}.ln1.bias,
    layers.{i}.attn.q, .k, .v, .o            (stored d_in x d_out)
    layers.{i}.ln2.gain, layers.{i}.ln2.bias,
    layers.{i}.mlp.w_in, .b_in, .w_out, .b_out
    ln_f.gain, ln_f.bias, head
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from engine.autodiff import (
    Tensor, add, causal_mask, concat_last, cross_entropy_masked, embedding_gather, gelu,
    layer_norm_rows, matmul, no_grad, reshape, scale, slice_last, softmax_rows, transpose_last,
)
from utils.arabic_text import normalize
from utils.errors import ContextOverflow, EmptyCorpus, ShapeMismatch

logger = logging.getLogger(__name__)

PAD, BOS, SEP, EOS, UNK = range(5)
SPECIAL_TOKENS = ('<pad>', '<bos>', '<sep>', '<eos>', '<unk>')
INIT_STD = 0.02


class Vocab:
    """Codepoint <-> id map; ids 0..4 are reserved for the special tokens"""

    def __init__(self, codepoints):
        self.codepoints = list(codepoints)
        offset = len(SPECIAL_TOKENS)
        self._ids = {char: offset + index for index, char in enumerate(self.codepoints)}

    @property
    def size(self):
        return len(SPECIAL_TOKENS) + len(self.codepoints)

    def __len__(self):
        return self.size

    def encode(self, text):
        return [self._ids.get(char, UNK) for char in text]

    def decode(self, ids):
        """Text for the ids, dropping every reserved token"""
        offset = len(SPECIAL_TOKENS)
        return ''.join(self.codepoints[i - offset] for i in ids if offset <= i < self.size)

    def to_dict(self):
        return {'codepoints': ''.join(self.codepoints)}

    @classmethod
    def from_dict(cls, data):
        return cls(list(data['codepoints']))

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.codepoints == other.codepoints


def build_vocab(records) -> Vocab:
    """Every codepoint of the normalized questions and answers, sorted"""
    if not records:
        raise EmptyCorpus('cannot build a vocabulary from an empty corpus')
    chars = set()
    for record in records:
        chars.update(normalize(record.question))
        chars.update(normalize(record.answer))
    return Vocab(sorted(chars))


def parameter_shapes(config):
    """Canonical parameter order and shapes for a config"""
    d = config.embed_dim
    hidden = d * config.mlp_ratio
    shapes = {'tok_emb': (config.vocab_size, d), 'pos_emb': (config.context_len, d)}
    for i in range(config.n_layers):
        prefix = f'layers.{i}'
        shapes[f'{prefix}.ln1.gain'] = (d,)
        shapes[f'{prefix}.ln1.bias'] = (d,)
        for projection in ('q', 'k', 'v', 'o'):
            shapes[f'{prefix}.attn.{projection}'] = (d, d)
        shapes[f'{prefix}.ln2.gain'] = (d,)
        shapes[f'{prefix}.ln2.bias'] = (d,)
        shapes[f'{prefix}.mlp.w_in'] = (d, hidden)
        shapes[f'{prefix}.mlp.b_in'] = (hidden,)
        shapes[f'{prefix}.mlp.w_out'] = (hidden, d)
        shapes[f'{prefix}.mlp.b_out'] = (d,)
    shapes['ln_f.gain'] = (d,)
    shapes['ln_f.bias'] = (d,)
    shapes['head'] = (d, config.vocab_size)
    return shapes


class Model:
    def __init__(self, config, params):
        self.config = config
        self.params = params

    @classmethod
    def initialize(cls, config):
        """Fresh weights ~ N(0, 0.02^2), zero biases, unit LayerNorm gains"""
        if config.vocab_size <= len(SPECIAL_TOKENS):
            raise ValueError('vocab_size must exceed the number of reserved tokens')

        rng = np.random.default_rng(config.seed)
        params = {}
        for name, shape in parameter_shapes(config).items():
            if name.endswith('.gain'):
                data = np.ones(shape)
            elif name.endswith('.bias') or '.b_' in name:
                data = np.zeros(shape)
            else:
                data = rng.normal(0.0, INIT_STD, size=shape)
            params[name] = Tensor(data, requires_grad=True, name=name)
        return cls(config, params)

    def copy(self, trainable=True):
        params = {
            name: Tensor(tensor.data.copy(), requires_grad=trainable, name=name)
            for name, tensor in self.params.items()
        }
        return Model(replace(self.config), params)

    def num_parameters(self):
        return sum(tensor.data.size for tensor in self.params.values())

    def digest(self):
        return parameter_digest(self.params)

    def forward(self, ids, adapters=None):
        """Logits (B, T, V) for an integer id array (B, T)"""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim != 2:
            raise ShapeMismatch('forward', ids.shape, (0, 0))
        batch_size, length = ids.shape
        if length > self.config.context_len:
            raise ContextOverflow(f'sequence length {length} exceeds context_len {self.config.context_len}')
        if ids.size and (ids.min() < 0 or ids.max() >= self.config.vocab_size):
            raise ValueError(f'token id out of range [0, {self.config.vocab_size})')

        p = self.params
        x = add(embedding_gather(p['tok_emb'], ids), embedding_gather(p['pos_emb'], np.arange(length)))
        for i in range(self.config.n_layers):
            x = self._block(x, i, adapters)
        x = layer_norm_rows(x, p['ln_f.gain'], p['ln_f.bias'])
        return matmul(x, p['head'])

    def _project(self, x, name, adapters):
        out = matmul(x, self.params[name])
        if adapters and name in adapters:
            out = add(out, adapters[name].delta(x))
        return out

    def _block(self, x, i, adapters):
        p = self.params
        prefix = f'layers.{i}'
        head_dim = self.config.head_dim

        h = layer_norm_rows(x, p[f'{prefix}.ln1.gain'], p[f'{prefix}.ln1.bias'])
        q = self._project(h, f'{prefix}.attn.q', adapters)
        k = self._project(h, f'{prefix}.attn.k', adapters)
        v = self._project(h, f'{prefix}.attn.v', adapters)

        heads = []
        for head in range(self.config.n_heads):
            lo, hi = head * head_dim, (head + 1) * head_dim
            scores = scale(matmul(slice_last(q, lo, hi), transpose_last(slice_last(k, lo, hi))),
                           1.0 / math.sqrt(head_dim))
            weights = softmax_rows(causal_mask(scores))
            heads.append(matmul(weights, slice_last(v, lo, hi)))
        attended = concat_last(heads) if len(heads) > 1 else heads[0]
        x = add(x, self._project(attended, f'{prefix}.attn.o', adapters))

        h = layer_norm_rows(x, p[f'{prefix}.ln2.gain'], p[f'{prefix}.ln2.bias'])
        h = gelu(add(matmul(h, p[f'{prefix}.mlp.w_in']), p[f'{prefix}.mlp.b_in']))
        return add(x, add(matmul(h, p[f'{prefix}.mlp.w_out']), p[f'{prefix}.mlp.b_out']))


def parameter_digest(params):
    """sha256 over parameter bytes in insertion order"""
    digest = hashlib.sha256()
    for name, tensor in params.items():
        digest.update(name.encode('utf-8'))
        digest.update(np.ascontiguousarray(tensor.data, dtype='<f8').tobytes())
    return digest.hexdigest()


@dataclass
class EncodedPair:
    """ids plus a mask over input positions; position t predicts ids[t + 1]"""

    ids: np.ndarray
    loss_mask: np.ndarray
    record_id: int = -1


@dataclass
class Batch:
    ids: np.ndarray
    targets: np.ndarray
    mask: np.ndarray
    record_ids: List[int] = field(default_factory=list)


def encode_pair(record, vocab, context_len) -> Optional[EncodedPair]:
    """<bos> q <sep> a <eos>; drops question codepoints from the left when too long"""
    question = vocab.encode(normalize(record.question))
    answer = vocab.encode(normalize(record.answer))
    if len(answer) + 3 > context_len:
        logger.warning('Skipping record %s: answer of %d tokens does not fit context_len %d',
                       record.id, len(answer), context_len)
        return None

    room = context_len - 3 - len(answer)
    if len(question) > room:
        question = question[len(question) - room:]

    ids = [BOS] + question + [SEP] + answer + [EOS]
    mask = np.zeros(len(ids))
    mask[len(question) + 1:len(ids) - 1] = 1.0
    return EncodedPair(ids=np.array(ids, dtype=np.int64), loss_mask=mask, record_id=record.id)


def encode_pairs(records, vocab, context_len) -> Dict[int, EncodedPair]:
    pairs = {}
    for record in records:
        pair = encode_pair(record, vocab, context_len)
        if pair is not None:
            pairs[record.id] = pair
    return pairs


def encode_text(text, vocab, context_len, record_id=-1) -> EncodedPair:
    """Unconditional sequence <bos> text <eos> with every position in the loss"""
    body = vocab.encode(normalize(text))[:context_len - 2]
    ids = [BOS] + body + [EOS]
    mask = np.ones(len(ids))
    mask[-1] = 0.0
    return EncodedPair(ids=np.array(ids, dtype=np.int64), loss_mask=mask, record_id=record_id)


def collate(pairs) -> Batch:
    """Right-pad with <pad>; targets are the ids shifted one step left"""
    if not pairs:
        raise ValueError('cannot collate an empty batch')
    length = max(len(pair.ids) for pair in pairs)
    ids = np.full((len(pairs), length), PAD, dtype=np.int64)
    targets = np.full((len(pairs), length), PAD, dtype=np.int64)
    mask = np.zeros((len(pairs), length))
    for row, pair in enumerate(pairs):
        size = len(pair.ids)
        ids[row, :size] = pair.ids
        targets[row, :size - 1] = pair.ids[1:]
        mask[row, :size] = pair.loss_mask
    return Batch(ids=ids, targets=targets, mask=mask, record_ids=[pair.record_id for pair in pairs])


def _as_batch(batch):
    return batch if isinstance(batch, Batch) else collate(list(batch))


def forward(model, batch):
    """Logits for a Batch or a list of EncodedPair"""
    return model.forward(_as_batch(batch).ids)


def loss(model, batch):
    batch = _as_batch(batch)
    logits = model.forward(batch.ids)
    batch_size, length, vocab_size = logits.shape
    flat = reshape(logits, (batch_size * length, vocab_size))
    return cross_entropy_masked(flat, batch.targets.reshape(-1), batch.mask.reshape(-1))


def _pick(row, decode_config, rng):
    if decode_config.mode == 'greedy':
        return int(np.argmax(row))
    k = min(decode_config.top_k, row.shape[0])
    candidates = np.argsort(-row, kind='stable')[:k]
    scaled = row[candidates] / decode_config.temperature
    probs = np.exp(scaled - scaled.max())
    probs /= probs.sum()
    return int(candidates[rng.choice(k, p=probs)])


def generate(model, question, vocab, decode_config) -> str:
    """Answer text for one question; stops at <eos>, max_new_tokens or a full context"""
    return generate_batch(model, [question], vocab, decode_config)[0]


def generate_batch(model, questions, vocab, decode_config, batch_size=64) -> List[str]:
    """
    Decode many questions together, each exactly as ``generate`` would.

    Rows are right-padded with <pad>; causal attention keeps the padding out
    of every logit that is read. Finished rows leave the batch. Each row
    samples from its own generator seeded with decode_config.seed.
    """
    context_len = model.config.context_len
    sequences = []
    for question in questions:
        prompt = vocab.encode(normalize(question))
        if len(prompt) > context_len - 2:
            raise ContextOverflow(f'question of {len(prompt)} tokens exceeds context_len - 2 = {context_len - 2}')
        sequences.append([BOS] + prompt + [SEP])

    answers = [[] for _ in sequences]
    rngs = [np.random.default_rng(decode_config.seed) for _ in sequences]
    with no_grad():
        for start in range(0, len(sequences), batch_size):
            active = list(range(start, min(start + batch_size, len(sequences))))
            for _ in range(decode_config.max_new_tokens):
                active = [i for i in active if len(sequences[i]) < context_len]
                if not active:
                    break
                ids = np.full((len(active), max(len(sequences[i]) for i in active)), PAD, dtype=np.int64)
                for row, i in enumerate(active):
                    ids[row, :len(sequences[i])] = sequences[i]
                logits = model.forward(ids).data

                still_running = []
                for row, i in enumerate(active):
                    next_id = _pick(logits[row, len(sequences[i]) - 1], decode_config, rngs[i])
                    if next_id == EOS:
                        continue
                    answers[i].append(next_id)
                    sequences[i].append(next_id)
                    still_running.append(i)
                active = still_running
    return [vocab.decode(answer) for answer in answers]
