# Severity Curriculum - Arabic medical QA generation

import csv
import itertools
import math
import random
from collections import Counter

import numpy as np
import pytest

from config import DecodeConfig, ModelConfig
from engine.autodiff import Tensor
from models.tiny_lm import EOS, Model, build_vocab
from services.evaluator import (
    EvalReport, compare_report, evaluate, lcs_f1, lcs_length, perplexity, token_f1, write_comparison,
)
from utils.errors import EmptyEvalSet, EvalSetMismatch
from utils.helpers import format_delta


def brute_lcs(xs, ys):
    for size in range(min(len(xs), len(ys)), 0, -1):
        for picks in itertools.combinations(range(len(xs)), size):
            candidate = [xs[i] for i in picks]
            it = iter(ys)
            if all(token in it for token in candidate):
                return size
    return 0


def harmonic(overlap, candidate, reference):
    if overlap == 0:
        return 0.0
    precision, recall = overlap / candidate, overlap / reference
    return 2 * precision * recall / (precision + recall)


def test_token_f1_examples():
    assert token_f1(['a', 'b', 'c'], ['a', 'c', 'd', 'e']) == pytest.approx(4 / 7)
    assert token_f1(['a', 'b'], ['a', 'b']) == 1.0
    assert token_f1(['a'], ['b']) == 0.0
    assert token_f1([], []) == 1.0
    assert token_f1([], ['a']) == 0.0
    # clipping: one shared "a" only
    assert token_f1(['a', 'a'], ['a', 'b']) == pytest.approx(0.5)


def test_lcs_f1_examples():
    assert lcs_f1(['a', 'c', 'd'], ['a', 'b', 'c', 'd']) == pytest.approx(6 / 7)
    assert lcs_f1(['c', 'b', 'a'], ['a', 'b', 'c']) == pytest.approx(1 / 3)
    assert lcs_f1([], []) == 1.0
    assert lcs_f1(['a'], []) == 0.0


def test_metrics_against_oracles_on_random_lists():
    rng = random.Random(17)
    for _ in range(1000):
        xs = [rng.choice('abcd') for _ in range(rng.randint(1, 6))]
        ys = [rng.choice('abcd') for _ in range(rng.randint(1, 6))]
        overlap = sum(min(count, ys.count(token)) for token, count in Counter(xs).items())
        assert token_f1(xs, ys) == pytest.approx(harmonic(overlap, len(xs), len(ys)))
        assert lcs_length(xs, ys) == brute_lcs(xs, ys)
        assert 0.0 <= lcs_f1(xs, ys) <= 1.0


def test_delta_formatting():
    assert format_delta(63.21, 54.04) == '+9.17'
    assert format_delta(50.0, 52.5) == '-2.50'


@pytest.fixture
def vocab(short_records):
    return build_vocab(short_records)


@pytest.fixture
def model(vocab):
    return Model.initialize(ModelConfig(vocab_size=vocab.size, embed_dim=16, n_layers=1, n_heads=2,
                                        context_len=32, seed=4))


def test_uniform_model_perplexity_is_vocab_size(model, vocab, short_records):
    model.params['head'].data[:] = 0.0
    assert perplexity(model, short_records, vocab) == pytest.approx(vocab.size)


class NextTokenOracle:
    """Puts a +1000 logit on the token that actually follows each position"""

    def __init__(self, config):
        self.config = config

    def forward(self, ids):
        logits = np.zeros(ids.shape + (self.config.vocab_size,))
        np.put_along_axis(logits[:, :-1], ids[:, 1:, None], 1000.0, axis=-1)
        return Tensor(logits)


def test_perplexity_of_target_oracle_is_one(model, vocab, short_records):
    assert perplexity(NextTokenOracle(model.config), short_records, vocab, batch_size=4) == 1.0


def test_perplexity_at_least_one(model, vocab, short_records):
    assert perplexity(model, short_records, vocab, batch_size=4) >= 1.0
    with pytest.raises(EmptyEvalSet):
        perplexity(model, [], vocab)


def test_evaluate_report(model, vocab, short_records):
    report = evaluate(model, vocab, short_records, DecodeConfig(max_new_tokens=4), mode='baseline', label='tiny')
    assert len(report.records) == len(short_records)
    assert report.token_f1 == pytest.approx(np.mean([r['token_f1'] for r in report.records]))
    assert report.lcs_f1 == pytest.approx(np.mean([r['lcs_f1'] for r in report.records]))
    assert all(0.0 <= r['token_f1'] <= 1.0 for r in report.records)
    assert {tier: entry['count'] for tier, entry in report.per_tier.items()} == {
        'mild': 2, 'moderate': 2, 'critical': 2,
    }
    assert report.perplexity >= 1.0
    with pytest.raises(EmptyEvalSet):
        evaluate(model, vocab, [], DecodeConfig())


def test_evaluate_empty_generation_scores_zero(model, vocab, short_records):
    model.params['ln_f.gain'].data[:] = 0.0
    model.params['ln_f.bias'].data[:] = 1.0
    model.params['head'].data[:] = 0.0
    model.params['head'].data[:, EOS] = 1.0
    report = evaluate(model, vocab, short_records, DecodeConfig(), mode='baseline')
    assert report.token_f1 == 0.0
    assert all(r['generated'] == '' for r in report.records)


def test_report_save_and_load(tmp_path, model, vocab, short_records):
    report = evaluate(model, vocab, short_records[:2], DecodeConfig(max_new_tokens=2), mode='standard')
    report.save(tmp_path / 'report.json')
    assert EvalReport.load(tmp_path / 'report.json') == report


def fake_report(mode, token, label='tiny-lm', eval_hash='h1'):
    return EvalReport(
        mode=mode, label=label, records=[], token_f1=token, lcs_f1=token / 2, perplexity=12.0,
        eval_set_hash=eval_hash, per_tier={'critical': {'count': 3, 'token_f1': token, 'lcs_f1': token}},
        provenance={'total_presentations': 10},
    )


def test_compare_report_table_and_summary():
    reports = [fake_report('baseline', 0.5404), fake_report('standard', 0.58), fake_report('curriculum', 0.6321)]
    comparison = compare_report(reports)
    assert 'Baseline' in comparison.table
    assert 'Standard Fine-Tuning' in comparison.table
    assert 'Curriculum Learning' in comparison.table
    assert '63.21%' in comparison.table
    assert '+9.17' in comparison.table
    assert 'حرج' in comparison.table
    row = comparison.summary['rows'][0]
    assert row['deltas']['vs_baseline'] == pytest.approx(9.17)
    assert row['deltas']['vs_standard'] == pytest.approx(5.21)
    assert comparison.summary['metric'] == 'token_f1'


def test_compare_report_mean_row_over_runs():
    reports = [
        fake_report('baseline', 0.5, label='a'), fake_report('curriculum', 0.6, label='a'),
        fake_report('baseline', 0.4, label='b'), fake_report('curriculum', 0.6, label='b'),
    ]
    comparison = compare_report(reports)
    assert 'Mean' in comparison.table
    assert comparison.summary['mean_deltas']['vs_baseline'] == pytest.approx(15.0)


def test_compare_report_rejects_mixed_inputs():
    with pytest.raises(EvalSetMismatch):
        compare_report([fake_report('baseline', 0.5), fake_report('curriculum', 0.6, eval_hash='h2')])
    with pytest.raises(ValueError):
        compare_report([fake_report('baseline', 0.5), fake_report('baseline', 0.6)])
    with pytest.raises(ValueError):
        compare_report([fake_report('baseline', 0.5)])


def test_write_comparison(tmp_path):
    comparison = compare_report([fake_report('baseline', 0.5), fake_report('curriculum', 0.6)])
    paths = write_comparison(comparison, tmp_path / 'out')
    assert len(paths) == 3
    with open(tmp_path / 'out' / 'plot.csv', encoding='utf-8', newline='') as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['mode', 'metric', 'value', 'tier', 'run']
    assert len(rows) == 1 + 2 * (3 + 2)
    assert math.isclose(float(rows[1][2]), 0.5)
