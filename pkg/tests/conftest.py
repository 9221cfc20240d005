# Severity Curriculum - Arabic medical QA generation

import pytest

from config import resolve_config
from models.lexicon import default_lexicon
from models.record import QaRecord
from models.severity import SeverityLabel

SAMPLE_QUESTIONS = [
    (
        'ورم في ارقبه كيف اتعامل معه هل يستدعي جراحه',
        'علي حسب مكانه ونوعه روح لطبيب اورام',
        SeverityLabel.CRITICAL,
    ),
    (
        'اعاني من انتفاخ الخد نتيجه التورم اللثه بسبب تسوس الاسنان الماميه',
        'يحتاج الامر لعلاج بمضاد حيوي وعمل علاج عصب',
        SeverityLabel.MILD,
    ),
    (
        'دايما احس بالم في الصدر من الجهه اليسار فوق الثدي',
        'امرض القلب لاتعاطي الم مستمر ودائم احتمال يكون عندك شد عضلي اي تقلص في عضلات الصدر راجعي اي طبيب للفحص عليك',
        SeverityLabel.MODERATE,
    ),
]

# Short pairs that fit a 32-token context
SHORT_PAIRS = [
    ('صداع خفيف', 'راحه', SeverityLabel.MILD),
    ('زكام', 'سوائل', SeverityLabel.MILD),
    ('حمي', 'طبيب', SeverityLabel.MODERATE),
    ('قيء', 'فحص', SeverityLabel.MODERATE),
    ('نزيف شديد', 'طوارئ', SeverityLabel.CRITICAL),
    ('اغماء', 'اسعاف', SeverityLabel.CRITICAL),
]


@pytest.fixture
def sample_records():
    """Three real-world questions, one per tier, unlabeled"""
    return [QaRecord(id=i, question=q, answer=a) for i, (q, a, _) in enumerate(SAMPLE_QUESTIONS)]


@pytest.fixture
def sample_labels():
    return [label for _, _, label in SAMPLE_QUESTIONS]


@pytest.fixture
def lexicon():
    return default_lexicon()


@pytest.fixture
def short_records():
    return [QaRecord(id=i, question=q, answer=a, severity=s) for i, (q, a, s) in enumerate(SHORT_PAIRS)]


@pytest.fixture
def tiny_config():
    """Small model and short schedules so training tests stay fast"""
    return resolve_config(environ={}, flags={
        'seed': 7,
        'model': {'embed_dim': 16, 'n_layers': 1, 'n_heads': 2, 'context_len': 32},
        'lora': {'rank': 2, 'alpha': 4.0},
        'train': {'epochs_per_stage': 2, 'batch_size': 4, 'pretrain_epochs': 1, 'base_lr': 1e-2},
        'decode': {'max_new_tokens': 8},
    })
