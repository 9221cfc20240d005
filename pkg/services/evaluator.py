# Severity Curriculum - Arabic medical QA generation

import csv
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np

from config import Config
from engine.autodiff import no_grad, reshape, cross_entropy_masked
from models.record import records_digest
from models.severity import SeverityLabel
from models.tiny_lm import collate, encode_pairs, generate_batch
from utils.arabic_text import normalize, tokenize_whitespace
from utils.errors import EmptyEvalSet, EvalSetMismatch
from utils.helpers import atomic_write_json, format_delta, read_json

logger = logging.getLogger(__name__)

PRIMARY_METRIC = 'token_f1'
METRIC_DESCRIPTION = 'token-F1: unigram overlap F1 on normalized, whitespace-tokenized Arabic'
METRIC_TITLES = {
    'token_f1': 'Token-F1 (%)',
    'lcs_f1': 'LCS-F1 (%)',
    'perplexity': 'Answer perplexity',
}


def _f1(overlap, candidate_total, reference_total):
    precision = overlap / candidate_total if candidate_total > 0 else 0.0
    recall = overlap / reference_total if reference_total > 0 else 0.0
    return (2 * precision * recall) / (precision + recall) if (precision + recall) > 0 else 0.0


def token_f1(candidate, reference):
    """Unigram F1 with multiset clipping"""
    if not candidate and not reference:
        return 1.0
    overlap = sum((Counter(candidate) & Counter(reference)).values())
    return _f1(overlap, len(candidate), len(reference))


def lcs_length(xs, ys):
    # dynamic programming LCS length
    m, n = len(xs), len(ys)
    dp = [0] * (n + 1)
    for i in range(1, m + 1):
        prev = 0
        for j in range(1, n + 1):
            tmp = dp[j]
            if xs[i - 1] == ys[j - 1]:
                dp[j] = prev + 1
            else:
                dp[j] = max(dp[j], dp[j - 1])
            prev = tmp
    return dp[n]


def lcs_f1(candidate, reference):
    if not candidate and not reference:
        return 1.0
    return _f1(lcs_length(candidate, reference), len(candidate), len(reference))


def perplexity(model, records, vocab, batch_size=16):
    """exp of the mean masked NLL over every answer token of the records"""
    if not records:
        raise EmptyEvalSet('perplexity needs at least one record')
    pairs = list(encode_pairs(records, vocab, model.config.context_len).values())
    if not pairs:
        raise EmptyEvalSet('no evaluation record fits the model context')

    total_nll = 0.0
    total_tokens = 0.0
    with no_grad():
        for start in range(0, len(pairs), batch_size):
            batch = collate(pairs[start:start + batch_size])
            logits = model.forward(batch.ids)
            rows, length, width = logits.shape
            active = float(batch.mask.sum())
            value = cross_entropy_masked(reshape(logits, (rows * length, width)),
                                         batch.targets.reshape(-1), batch.mask.reshape(-1))
            total_nll += value.item() * active
            total_tokens += active
    return math.exp(total_nll / total_tokens)


@dataclass
class EvalReport:
    mode: str
    label: str
    records: List[dict]
    token_f1: float
    lcs_f1: float
    perplexity: float
    eval_set_hash: str
    per_tier: Dict[str, dict] = field(default_factory=dict)
    provenance: Dict[str, object] = field(default_factory=dict)
    metric: str = PRIMARY_METRIC

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def save(self, path):
        atomic_write_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        return cls.from_dict(read_json(path))

    def summary_line(self):
        return (f'{self.mode}: token-F1 {self.token_f1 * 100:.2f}%  LCS-F1 {self.lcs_f1 * 100:.2f}%  '
                f'perplexity {self.perplexity:.3f}  ({len(self.records)} records)')


def _question_for(record, context_len, decode_config):
    # Keep the question tail so some room is left for the answer
    limit = context_len - 2 - max(1, min(decode_config.max_new_tokens, context_len // 4))
    question = normalize(record.question)
    return question[-limit:] if len(question) > limit else question


def _tier_breakdown(results):
    per_tier = {}
    for label in (*SeverityLabel, None):
        key = label.key if label is not None else 'unlabeled'
        members = [result for result in results if result['severity'] == (label.key if label else None)]
        if not members:
            continue
        per_tier[key] = {
            'count': len(members),
            'token_f1': float(np.mean([m['token_f1'] for m in members])),
            'lcs_f1': float(np.mean([m['lcs_f1'] for m in members])),
        }
    return per_tier


def evaluate(model, vocab, records, decode_config, mode='unknown', label='', provenance=None) -> EvalReport:
    """Generate an answer per record and score it against the reference"""
    if not records:
        raise EmptyEvalSet('evaluation set is empty')

    questions = [_question_for(record, model.config.context_len, decode_config) for record in records]
    results = []
    for record, generated in zip(records, generate_batch(model, questions, vocab, decode_config)):
        candidate = tokenize_whitespace(normalize(generated))
        reference = tokenize_whitespace(normalize(record.answer))
        results.append({
            'id': record.id,
            'severity': record.severity.key if record.severity is not None else None,
            'generated': generated,
            'token_f1': token_f1(candidate, reference),
            'lcs_f1': lcs_f1(candidate, reference),
        })

    report = EvalReport(
        mode=mode,
        label=label,
        records=results,
        token_f1=float(np.mean([r['token_f1'] for r in results])),
        lcs_f1=float(np.mean([r['lcs_f1'] for r in results])),
        perplexity=perplexity(model, records, vocab),
        eval_set_hash=records_digest(records),
        per_tier=_tier_breakdown(results),
        provenance=dict(provenance or {}),
    )
    logger.info('Evaluated %s', report.summary_line())
    return report


@dataclass
class Comparison:
    table: str
    summary: dict
    plot_rows: List[list]


def _percent(value):
    return value * 100.0


def _render(headers, rows):
    widths = [max(len(str(cell)) for cell in column) for column in zip(headers, *rows)]
    lines = [' | '.join(str(cell).ljust(width) for cell, width in zip(headers, widths))]
    lines.append('-+-'.join('-' * width for width in widths))
    for row in rows:
        lines.append(' | '.join(str(cell).ljust(width) for cell, width in zip(row, widths)))
    return '\n'.join(lines)


def _group(reports):
    groups = {}
    for report in reports:
        modes = groups.setdefault(report.label, {})
        if report.mode in modes:
            raise ValueError(f'two "{report.mode}" reports share the label "{report.label}"')
        modes[report.mode] = report
    return groups


def _deltas(modes, metric):
    deltas = {}
    curriculum = modes.get('curriculum')
    if curriculum is None:
        return deltas
    value = _percent(getattr(curriculum, metric))
    for other in ('baseline', 'standard'):
        if other in modes:
            deltas[f'vs_{other}'] = value - _percent(getattr(modes[other], metric))
    return deltas


def _metric_table(groups, metric):
    percent = metric != 'perplexity'
    headers = ['Model'] + [Config.MODE_DISPLAY[mode] for mode in Config.MODES]
    if percent:
        headers += ['Δ vs Baseline', 'Δ vs Standard']

    rows = []
    delta_columns = {'vs_baseline': [], 'vs_standard': []}
    for label, modes in groups.items():
        row = [label or '(unlabeled run)']
        for mode in Config.MODES:
            report = modes.get(mode)
            if report is None:
                row.append('-')
            elif percent:
                row.append(f'{_percent(getattr(report, metric)):.2f}%')
            else:
                row.append(f'{report.perplexity:.3f}')
        if percent:
            curriculum = modes.get('curriculum')
            for other, key in (('baseline', 'vs_baseline'), ('standard', 'vs_standard')):
                if curriculum is None or other not in modes:
                    row.append('-')
                    continue
                new, old = _percent(getattr(curriculum, metric)), _percent(getattr(modes[other], metric))
                delta_columns[key].append(new - old)
                row.append(format_delta(new, old))
        rows.append(row)

    if percent and len(groups) > 1:
        mean_row = ['Mean'] + [''] * len(Config.MODES)
        for key in ('vs_baseline', 'vs_standard'):
            values = delta_columns[key]
            mean_row.append(format_delta(float(np.mean(values)), 0.0) if values else '-')
        rows.append(mean_row)
    return f'{METRIC_TITLES[metric]}\n' + _render(headers, rows)


def _tier_table(groups):
    tiers = [label.key for label in SeverityLabel]
    headers = ['Model', 'Mode'] + [f'{SeverityLabel.parse(tier).get_display()} ({tier})' for tier in tiers]
    rows = []
    for label, modes in groups.items():
        for mode in Config.MODES:
            report = modes.get(mode)
            if report is None:
                continue
            row = [label or '(unlabeled run)', Config.MODE_DISPLAY[mode]]
            for tier in tiers:
                entry = report.per_tier.get(tier)
                row.append(f'{_percent(entry["token_f1"]):.2f}% (n={entry["count"]})' if entry else '-')
            rows.append(row)
    return 'Token-F1 by severity tier\n' + _render(headers, rows)


def compare_report(reports) -> Comparison:
    """Three-column comparison of runs scored on the same evaluation set"""
    if len(reports) < 2:
        raise ValueError('compare_report needs at least two reports')
    hashes = {report.eval_set_hash for report in reports}
    if len(hashes) != 1:
        raise EvalSetMismatch(f'reports were scored on {len(hashes)} different evaluation sets')

    groups = _group(reports)
    sections = [f'Metric: {METRIC_DESCRIPTION}']
    sections += [_metric_table(groups, metric) for metric in ('token_f1', 'lcs_f1', 'perplexity')]
    sections.append(_tier_table(groups))
    table = '\n\n'.join(sections) + '\n'

    summary_rows = []
    mean_inputs = {'vs_baseline': [], 'vs_standard': []}
    for label, modes in groups.items():
        deltas = _deltas(modes, PRIMARY_METRIC)
        for key, value in deltas.items():
            mean_inputs[key].append(value)
        summary_rows.append({
            'label': label,
            'modes': {
                mode: {
                    'token_f1': report.token_f1,
                    'lcs_f1': report.lcs_f1,
                    'perplexity': report.perplexity,
                    'per_tier': report.per_tier,
                    'total_presentations': report.provenance.get('total_presentations'),
                }
                for mode, report in modes.items()
            },
            'deltas': deltas,
        })

    summary = {
        'metric': PRIMARY_METRIC,
        'metric_description': METRIC_DESCRIPTION,
        'eval_set_hash': hashes.pop(),
        'columns': [Config.MODE_DISPLAY[mode] for mode in Config.MODES],
        'rows': summary_rows,
        'mean_deltas': {key: float(np.mean(values)) for key, values in mean_inputs.items() if values},
    }

    plot_rows = []
    for report in reports:
        for metric in ('token_f1', 'lcs_f1', 'perplexity'):
            plot_rows.append([report.mode, metric, getattr(report, metric), 'all', report.label])
        for tier, entry in report.per_tier.items():
            for metric in ('token_f1', 'lcs_f1'):
                plot_rows.append([report.mode, metric, entry[metric], tier, report.label])

    return Comparison(table=table, summary=summary, plot_rows=plot_rows)


def write_comparison(comparison, out_dir):
    """table.txt, summary.json and plot.csv under out_dir"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / 'table.txt').write_text(comparison.table, encoding='utf-8')
    atomic_write_json(out_dir / 'summary.json', comparison.summary)

    with open(out_dir / 'plot.csv', 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['mode', 'metric', 'value', 'tier', 'run'])
        for row in comparison.plot_rows:
            writer.writerow(row)
    return [str(out_dir / name) for name in ('table.txt', 'summary.json', 'plot.csv')]
