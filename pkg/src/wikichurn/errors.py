"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class WikichurnError(Exception):
    """Base class for all pipeline errors."""


# ingest
class SourceError(WikichurnError):
    """Base class for data-source failures."""


class UnknownEditor(SourceError):
    def __init__(self, editor: str):
        super().__init__(f"unknown editor: {editor!r}")
        self.editor = editor


class UnknownPage(SourceError):
    def __init__(self, title: str, namespace: int):
        super().__init__(f"unknown page: {title!r} (ns {namespace})")
        self.title = title
        self.namespace = namespace


class SourceUnavailable(SourceError):
    """Network or HTTP failure that survived every retry."""


class SchemaMismatch(SourceError):
    """A fixture bundle or snapshot declares an unsupported schema version."""


class ParseError(SourceError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")
        self.line = line
        self.path = path


# cohort
class EmptyResult(WikichurnError):
    """No editor survived a cohort filter."""


class HarvestEmpty(WikichurnError):
    """Harvesting produced no active candidates at all."""


# features
class EmptyWindow(WikichurnError):
    """Activity features requested for an editor without any edits."""


class LexiconMissing(WikichurnError):
    pass


class EmbeddingMissing(WikichurnError):
    pass


class GroupUnavailable(WikichurnError):
    pass


# stats
class ConstantInput(WikichurnError):
    """Correlation is undefined because an input vector is constant."""


# model
class TooSmall(WikichurnError):
    pass


class SingleClass(WikichurnError):
    pass


class LayoutMismatch(WikichurnError):
    pass


# explain
class NoSplits(WikichurnError):
    pass


class DegenerateBackground(WikichurnError):
    pass


class RankDeficient(WikichurnError):
    pass


# cli
class ConfigError(WikichurnError):
    """Invalid configuration or usage; maps to exit code 2."""


class MissingArtifact(WikichurnError):
    def __init__(self, path: str, producer: str):
        super().__init__(f"missing artifact {path} (run `wikichurn {producer}` first)")
        self.path = path
        self.producer = producer
