# Severity Curriculum - Arabic medical QA generation

"""
Rule-based severity annotation: normalized keyword matching with the
priority order Critical > Moderate > Mild and a Mild default.
"""

import logging

from models.lexicon import MatchResult
from models.severity import SeverityLabel, SeverityStats
from utils.arabic_text import normalize, tokenize_whitespace

logger = logging.getLogger(__name__)


def match_keywords(tokens, lexicon) -> MatchResult:
    """Collect every contiguous phrase occurrence across all tiers"""
    matches = []
    for offset, token in enumerate(tokens):
        for phrase, label in lexicon.candidates(token):
            end = offset + len(phrase)
            if end <= len(tokens) and tuple(tokens[offset:end]) == phrase:
                matches.append((' '.join(phrase), label, offset))

    resolved = max((label for _, label, _ in matches), default=SeverityLabel.MILD)
    return MatchResult(matches=tuple(matches), resolved=resolved)


def classify_with_matches(question, lexicon) -> MatchResult:
    return match_keywords(tokenize_whitespace(normalize(question)), lexicon)


def classify(question, lexicon) -> SeverityLabel:
    """Severity of one question under the given lexicon"""
    return classify_with_matches(question, lexicon).resolved


def annotate_dataset(records, lexicon, keep_existing=False):
    """Label every record's question; returns (records, SeverityStats)"""
    annotated = []
    for record in records:
        if keep_existing and record.severity is not None:
            annotated.append(record)
        else:
            annotated.append(record.with_severity(classify(record.question, lexicon)))

    stats = SeverityStats.from_labels(record.severity for record in annotated)
    logger.info('Annotated %d records: %s', len(annotated), stats.format_line())
    return annotated, stats
