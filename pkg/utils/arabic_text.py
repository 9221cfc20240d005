# Severity Curriculum - Arabic medical QA generation

"""
Deterministic Arabic normalization shared by the severity annotator and the
codepoint tokenizer. Every function is total over Unicode input.
"""

import unicodedata
from functools import lru_cache
from typing import List, NewType

NormalizedText = NewType('NormalizedText', str)

# Harakat, tanween, shadda, sukun, hamza/madda marks, superscript alef, tatweel
_DIACRITICS = {cp: None for cp in range(0x064B, 0x0660)}
_DIACRITICS[0x0670] = None
_DIACRITICS[0x0640] = None

LETTER_FOLDING = {
    'آ': 'ا',  # alef with madda
    'أ': 'ا',  # alef with hamza above
    'إ': 'ا',  # alef with hamza below
    'ٱ': 'ا',  # alef wasla
    'ى': 'ي',  # alef maqsura -> ya
    'ة': 'ه',  # ta marbuta -> ha
    'ؤ': 'و',  # waw with hamza
    'ئ': 'ي',  # ya with hamza
}
_FOLDING = str.maketrans(LETTER_FOLDING)

ARABIC_PUNCTUATION = frozenset('،؛؟')  # ، ؛ ؟


@lru_cache(maxsize=4096)
def _is_punctuation(char):
    return char in ARABIC_PUNCTUATION or unicodedata.category(char).startswith('P')


def strip_diacritics(text: str) -> str:
    """Remove Arabic combining marks and tatweel, keeping everything else in order"""
    return text.translate(_DIACRITICS)


def normalize_letters(text: str) -> str:
    """Fold alef variants, alef maqsura, ta marbuta and hamza carriers"""
    return text.translate(_FOLDING)


def strip_punctuation(text: str) -> str:
    """Replace every punctuation codepoint with a single space"""
    return ''.join(' ' if _is_punctuation(char) else char for char in text)


def normalize(text: str) -> NormalizedText:
    """Full normalization pipeline used for matching, tokenization and scoring"""
    if not text:
        return NormalizedText('')

    text = unicodedata.normalize('NFC', text)
    text = strip_diacritics(text)
    text = normalize_letters(text)
    text = strip_punctuation(text)
    text = ' '.join(text.split())

    # Removing marks can unblock a canonical composition; recompose so the
    # result is a fixed point of this function.
    return NormalizedText(unicodedata.normalize('NFC', text))


def tokenize_whitespace(text: NormalizedText) -> List[str]:
    if not text:
        return []
    return text.split(' ')


def is_normalized(text: str) -> bool:
    """Check the NormalizedText invariants without rebuilding the string"""
    if text != text.strip() or '  ' in text:
        return False
    for char in text:
        if ord(char) in _DIACRITICS or _is_punctuation(char):
            return False
    return True
