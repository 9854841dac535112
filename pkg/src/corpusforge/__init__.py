"""corpusforge: corpus curation and scheduling toolkit for LLM pretraining data."""

__version__ = "0.1.0"

from corpusforge._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
from corpusforge.corpus import Document, PipelineReport, Shard  # noqa: F401
