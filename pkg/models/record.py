# Severity Curriculum - Arabic medical QA generation

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional

from models.severity import SeverityLabel
from utils.arabic_text import normalize
from utils.errors import ParseError
from utils.helpers import sha256_bytes


@dataclass(frozen=True)
class QaRecord:
    """One medical question, its reference answer and an optional severity"""

    id: int
    question: str
    answer: str
    severity: Optional[SeverityLabel] = None

    @classmethod
    def from_dict(cls, data, record_id, path=None, line=None):
        """Build a record from a {question, answer, severity?} JSON object"""
        if not isinstance(data, dict):
            raise ParseError('expected a JSON object', path=path, line=line)

        question = data.get('question')
        answer = data.get('answer')
        if not isinstance(question, str) or not isinstance(answer, str):
            raise ParseError('"question" and "answer" must be strings', path=path, line=line)
        if not normalize(question) or not normalize(answer):
            raise ParseError('question and answer must be non-empty after normalization', path=path, line=line)

        severity = data.get('severity')
        if severity is not None:
            try:
                severity = SeverityLabel.parse(severity)
            except ValueError as e:
                raise ParseError(str(e), path=path, line=line)

        return cls(id=record_id, question=question, answer=answer, severity=severity)

    def to_dict(self):
        data = {'question': self.question, 'answer': self.answer}
        if self.severity is not None:
            data['severity'] = self.severity.key
        return data

    def with_severity(self, severity):
        return replace(self, severity=severity)

    def with_id(self, record_id):
        return replace(self, id=record_id)


def load_jsonl(path) -> List[QaRecord]:
    """Load records in file order, assigning ids 0..N-1"""
    records = []
    with open(path, 'r', encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f'invalid JSON: {e.msg}', path=path, line=line_number)
            records.append(QaRecord.from_dict(data, len(records), path=path, line=line_number))
    return records


def write_jsonl(records, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True))
            handle.write('\n')


def renumber(records):
    """Reassign ids 0..N-1 in list order, matching what a reload would assign"""
    return [record.with_id(index) for index, record in enumerate(records)]


def records_digest(records):
    """Content hash of a record list; ids and order are part of the hash"""
    canonical = [dict(record.to_dict(), id=record.id) for record in records]
    payload = json.dumps(canonical, ensure_ascii=False, sort_keys=True).encode('utf-8')
    return sha256_bytes(payload)
