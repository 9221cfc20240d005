# Severity Curriculum - Arabic medical QA generation

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Tuple

from config import Config
from models.severity import SeverityLabel
from utils.arabic_text import normalize, tokenize_whitespace
from utils.errors import DuplicateAcrossTiers, ParseError

logger = logging.getLogger(__name__)

MAX_PHRASE_TOKENS = 5

Phrase = Tuple[str, ...]


@dataclass(frozen=True)
class Lexicon:
    """Three tiers of pre-folded keyword phrases"""

    critical: FrozenSet[Phrase] = frozenset()
    moderate: FrozenSet[Phrase] = frozenset()
    mild: FrozenSet[Phrase] = frozenset()
    _index: Dict[str, List[Tuple[Phrase, SeverityLabel]]] = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        # Phrases grouped by first token for the matcher
        index = {}
        for label in (SeverityLabel.CRITICAL, SeverityLabel.MODERATE, SeverityLabel.MILD):
            for phrase in sorted(self.tier(label)):
                index.setdefault(phrase[0], []).append((phrase, label))
        object.__setattr__(self, '_index', index)

    def tier(self, label):
        return {
            SeverityLabel.CRITICAL: self.critical,
            SeverityLabel.MODERATE: self.moderate,
            SeverityLabel.MILD: self.mild,
        }[label]

    def candidates(self, token):
        return self._index.get(token, ())

    def phrases(self, label):
        """Phrases of one tier as normalized strings, sorted"""
        return sorted(' '.join(phrase) for phrase in self.tier(label))

    def size(self):
        return len(self.critical) + len(self.moderate) + len(self.mild)


@dataclass(frozen=True)
class MatchResult:
    matches: Tuple[Tuple[str, SeverityLabel, int], ...]
    resolved: SeverityLabel

    def matched_phrases(self):
        return [phrase for phrase, _, _ in self.matches]


def _phrase_from(raw, tier_name, path):
    if not isinstance(raw, str):
        raise ParseError(f'tier "{tier_name}" contains a non-string entry', path=path)
    tokens = tuple(tokenize_whitespace(normalize(raw)))
    if not tokens:
        raise ParseError(f'tier "{tier_name}" contains an empty phrase', path=path)
    if len(tokens) > MAX_PHRASE_TOKENS:
        raise ParseError(f'phrase "{raw}" has more than {MAX_PHRASE_TOKENS} tokens', path=path)
    return tokens


def load_lexicon(source) -> Lexicon:
    """Load a lexicon from a path, a JSON string or an already-parsed mapping"""
    path = None
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith('{')):
        path = source
        try:
            with open(source, 'r', encoding='utf-8') as handle:
                document = json.load(handle)
        except json.JSONDecodeError as e:
            raise ParseError(f'invalid JSON: {e.msg}', path=path, line=e.lineno)
    elif isinstance(source, str):
        try:
            document = json.loads(source)
        except json.JSONDecodeError as e:
            raise ParseError(f'invalid JSON: {e.msg}', line=e.lineno)
    else:
        document = source

    if not isinstance(document, dict):
        raise ParseError('lexicon must be a JSON object', path=path)

    tiers = {}
    owner = {}
    for label in (SeverityLabel.CRITICAL, SeverityLabel.MODERATE, SeverityLabel.MILD):
        entries = document.get(label.key)
        if not isinstance(entries, list):
            raise ParseError(f'lexicon needs an array under "{label.key}"', path=path)
        phrases = set()
        for raw in entries:
            phrase = _phrase_from(raw, label.key, path)
            previous = owner.get(phrase)
            if previous is not None and previous != label:
                raise DuplicateAcrossTiers(' '.join(phrase), [previous.key, label.key])
            owner[phrase] = label
            phrases.add(phrase)
        if not phrases:
            logger.warning('Lexicon tier "%s" is empty', label.key)
        tiers[label.key] = frozenset(phrases)

    return Lexicon(**tiers)


def default_lexicon() -> Lexicon:
    """The shipped reconstruction lexicon, or the one named by SEVCUR_LEXICON_PATH"""
    return load_lexicon(Path(Config.LEXICON_PATH))
