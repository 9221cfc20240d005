# Severity Curriculum - Arabic medical QA generation

from dataclasses import dataclass
from enum import IntEnum


class SeverityLabel(IntEnum):
    """Medical urgency of a question; integer order is the priority order"""

    MILD = 1
    MODERATE = 2
    CRITICAL = 3

    @property
    def key(self):
        """Lowercase ASCII form used on disk"""
        return self.name.lower()

    def get_display(self):
        """Arabic display name, as found in annotated source files"""
        return SEVERITY_DISPLAY[self]

    @classmethod
    def parse(cls, value):
        """Parse the on-disk value; accepts the Arabic display names too"""
        if isinstance(value, cls):
            return value
        if not isinstance(value, str):
            raise ValueError(f'unknown severity {value!r}')
        text = value.strip()
        lowered = text.lower()
        for label in cls:
            if lowered == label.key or text == SEVERITY_DISPLAY[label]:
                return label
        raise ValueError(f'unknown severity "{value}"')


SEVERITY_DISPLAY = {
    SeverityLabel.MILD: 'غير حرج',
    SeverityLabel.MODERATE: 'متوسط',
    SeverityLabel.CRITICAL: 'حرج',
}


@dataclass(frozen=True)
class SeverityStats:
    mild: int = 0
    moderate: int = 0
    critical: int = 0
    unlabeled: int = 0

    @property
    def total(self):
        return self.mild + self.moderate + self.critical

    @classmethod
    def from_labels(cls, labels):
        counts = {label: 0 for label in SeverityLabel}
        unlabeled = 0
        for label in labels:
            if label is None:
                unlabeled += 1
            else:
                counts[label] += 1
        return cls(
            mild=counts[SeverityLabel.MILD],
            moderate=counts[SeverityLabel.MODERATE],
            critical=counts[SeverityLabel.CRITICAL],
            unlabeled=unlabeled,
        )

    def as_tuple(self):
        return (self.mild, self.moderate, self.critical)

    def to_dict(self):
        return {
            'mild': self.mild,
            'moderate': self.moderate,
            'critical': self.critical,
            'unlabeled': self.unlabeled,
            'total': self.total,
        }

    def format_line(self):
        line = f'mild={self.mild} moderate={self.moderate} critical={self.critical} total={self.total}'
        if self.unlabeled:
            line += f' unlabeled={self.unlabeled}'
        return line
