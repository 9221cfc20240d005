# Severity Curriculum - Arabic medical QA generation

class PipelineError(ValueError):
    """Base class for every validation error raised by the toolkit"""


class ParseError(PipelineError):
    """Malformed input document, optionally located by path and line"""

    def __init__(self, message, path=None, line=None):
        self.path = str(path) if path is not None else None
        self.line = line
        location = ''
        if self.path and line is not None:
            location = f'{self.path}:{line}: '
        elif self.path:
            location = f'{self.path}: '
        super().__init__(f'{location}{message}')


class DuplicateAcrossTiers(PipelineError):
    def __init__(self, phrase, tiers):
        self.phrase = phrase
        self.tiers = tuple(tiers)
        super().__init__(f'phrase "{phrase}" appears in tiers {", ".join(self.tiers)}')


class MissingLabel(PipelineError):
    def __init__(self, record_id):
        self.record_id = record_id
        super().__init__(f'record {record_id} has no severity label')


class ShapeMismatch(PipelineError):
    def __init__(self, op, left, right):
        self.left = tuple(left)
        self.right = tuple(right)
        super().__init__(f'{op}: incompatible shapes {self.left} and {self.right}')


class AllMasked(PipelineError):
    pass


class AlreadyConsumed(PipelineError):
    pass


class NonScalarLoss(PipelineError):
    pass


class NonFiniteGradient(PipelineError):
    def __init__(self, name):
        self.name = name
        super().__init__(f'non-finite gradient in tensor "{name}"')


class EmptyCorpus(PipelineError):
    pass


class ContextOverflow(PipelineError):
    pass


class UnknownTarget(PipelineError):
    def __init__(self, target):
        self.target = target
        super().__init__(f'unknown adapter target "{target}"')


class EmptyStage(PipelineError):
    def __init__(self, stage):
        self.stage = stage
        super().__init__(f'stage {stage} has no training records')


class VersionMismatch(PipelineError):
    pass


class CorruptFile(PipelineError):
    pass


class MissingBase(PipelineError):
    pass


class EmptyEvalSet(PipelineError):
    pass


class EvalSetMismatch(PipelineError):
    pass
