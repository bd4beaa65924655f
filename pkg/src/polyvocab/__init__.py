"""Large multilingual subword vocabularies from clustered, capacity-allocated unigram models."""

__version__ = "0.1.0"
