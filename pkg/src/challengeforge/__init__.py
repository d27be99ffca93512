"""challengeforge: build, deduplicate, index and search a corpus of 30-day challenges."""

__version__ = "0.1.0"

from .model import Challenge, CorpusStats, PageDocument, SearchResultRecord  # noqa: F401
