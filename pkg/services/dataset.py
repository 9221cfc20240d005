# Severity Curriculum - Arabic medical QA generation

import logging
import math
import random
from dataclasses import dataclass
from typing import FrozenSet, List

from models.lexicon import default_lexicon
from models.record import QaRecord, renumber
from models.severity import SeverityLabel, SeverityStats
from services.annotator import classify
from utils.errors import MissingLabel
from utils.helpers import derive_seed

logger = logging.getLogger(__name__)

STAGES = (1, 2, 3)


@dataclass(frozen=True)
class StagePartition:
    """Nested curriculum subsets D1 ⊆ D2 ⊆ D3 as record-id sets"""

    d1: FrozenSet[int]
    d2: FrozenSet[int]
    d3: FrozenSet[int]

    def stage(self, k):
        if k not in STAGES:
            raise ValueError(f'stage must be one of {STAGES}, got {k}')
        return (self.d1, self.d2, self.d3)[k - 1]

    def sizes(self):
        return tuple(len(self.stage(k)) for k in STAGES)

    def to_dict(self):
        return {f'd{k}': sorted(self.stage(k)) for k in STAGES}


def stage_split(records) -> StagePartition:
    """Cumulative severity stages: mild, then + moderate, then + critical"""
    by_label = {label: set() for label in SeverityLabel}
    for record in records:
        if record.severity is None:
            raise MissingLabel(record.id)
        by_label[record.severity].add(record.id)

    d1 = frozenset(by_label[SeverityLabel.MILD])
    d2 = d1 | by_label[SeverityLabel.MODERATE]
    d3 = d2 | by_label[SeverityLabel.CRITICAL]
    return StagePartition(d1=d1, d2=frozenset(d2), d3=frozenset(d3))


def stage_records(records, partition, k) -> List[QaRecord]:
    """Records of stage k in id order"""
    members = partition.stage(k)
    return sorted((record for record in records if record.id in members), key=lambda r: r.id)


def train_eval_split(records, train_fraction, seed):
    """Stratified per severity tier; both halves come back in id order"""
    if not 0 < train_fraction < 1:
        raise ValueError('train_fraction must be in (0, 1)')

    rng = random.Random(derive_seed(seed, 'split'))
    strata = {label: [] for label in (*SeverityLabel, None)}
    for record in records:
        strata[record.severity].append(record)

    train, evaluation = [], []
    for label, members in strata.items():
        if not members:
            continue
        if len(members) < 2:
            name = label.key if label is not None else 'unlabeled'
            logger.warning('Tier "%s" has %d record(s); keeping all in the training split', name, len(members))
            train.extend(members)
            continue
        members = sorted(members, key=lambda r: r.id)
        rng.shuffle(members)
        cut = math.floor(len(members) * train_fraction)
        train.extend(members[:cut])
        evaluation.extend(members[cut:])

    train.sort(key=lambda r: r.id)
    evaluation.sort(key=lambda r: r.id)
    return train, evaluation


def stats(records) -> SeverityStats:
    return SeverityStats.from_labels(record.severity for record in records)


# Neutral frames; none of their words occur in the lexicon
QUESTION_TEMPLATES = [
    'عندي {symptom} منذ يومين ما العلاج المناسب',
    'اعاني من {symptom} هل يستدعي زياره الطبيب',
    'ابني يشكو من {symptom} ماذا افعل',
    '{symptom} منذ الصباح كيف اتعامل معه',
    'والدتي عندها {symptom} فهل هذا خطير',
    'زوجي لديه {symptom} منذ اسبوع ما السبب',
]

ANSWER_TEMPLATES = {
    SeverityLabel.MILD: [
        'هذه حاله بسيطه غالبا ننصح بالراحه وشرب السوائل',
        'لا داعي للقلق يكفي الراحه ومسكن بسيط عند الحاجه',
        'بالنسبه الي {symptom} استشر الصيدلي واستخدم علاجا بسيطا مع الراحه',
    ],
    SeverityLabel.MODERATE: [
        'يجب مراجعه الطبيب خلال يومين لاجراء الفحوصات اللازمه',
        'ننصح بزياره الطبيب وعمل تحاليل للدم لمعرفه السبب',
        'بالنسبه الي {symptom} راجع الطبيب المختص اذا استمرت الاعراض اكثر من يومين',
    ],
    SeverityLabel.CRITICAL: [
        'توجه فورا الي قسم الطوارئ في اقرب مستشفي',
        'هذه حاله طارئه اتصل بالاسعاف فورا',
        'بالنسبه الي {symptom} لا تتاخر واذهب الي الطوارئ حالا للفحص العاجل',
    ],
}

EXTRA_SYMPTOM_RATE = 0.3
MAX_ATTEMPTS = 20


def _compose(rng, label, phrases):
    symptom = rng.choice(phrases[label])
    if rng.random() < EXTRA_SYMPTOM_RATE:
        # A second symptom from the same or a lower tier keeps the label
        extra_label = rng.choice([tier for tier in SeverityLabel if tier <= label])
        extra = rng.choice(phrases[extra_label])
        if extra != symptom:
            symptom = f'{symptom} مع {extra}'
    question = rng.choice(QUESTION_TEMPLATES).format(symptom=symptom)
    answer = rng.choice(ANSWER_TEMPLATES[label]).format(symptom=symptom)
    return question, answer


def synth_generate(n_per_tier, seed, lexicon=None) -> List[QaRecord]:
    """Templated Arabic QA pairs, n per tier, each re-classifying to its tier"""
    if n_per_tier < 1:
        raise ValueError('n_per_tier must be >= 1')

    lexicon = lexicon or default_lexicon()
    phrases = {label: lexicon.phrases(label) for label in SeverityLabel}
    for label, tier in phrases.items():
        if not tier:
            raise ValueError(f'cannot synthesize: lexicon tier "{label.key}" is empty')

    rng = random.Random(derive_seed(seed, 'synth'))
    records = []
    for _ in range(n_per_tier):
        for label in SeverityLabel:
            for _attempt in range(MAX_ATTEMPTS):
                question, answer = _compose(rng, label, phrases)
                if classify(question, lexicon) == label:
                    break
            else:
                raise ValueError(f'lexicon cannot produce a self-consistent "{label.key}" question')
            records.append(QaRecord(id=len(records), question=question, answer=answer, severity=label))

    return renumber(records)
