"""splocal: localize semantic-parsing datasets across languages.

Translate annotated utterances with entity-span preservation (cross-attention
alignment or placeholder round-tripping), substitute localized ontology
entities into utterance and logical form together, and score parser outputs
with exact-match/structure-match and BLEU/TER.
"""

__version__ = "0.1.0"

from .core import (
    Dataset,
    EntitySpan,
    Example,
    LogicalForm,
    Provenance,
    Split,
    parse_logical_form,
    read_dataset,
    validate_example,
    write_dataset,
)

__all__ = [
    "Dataset",
    "EntitySpan",
    "Example",
    "LogicalForm",
    "Provenance",
    "Split",
    "parse_logical_form",
    "read_dataset",
    "validate_example",
    "write_dataset",
    "__version__",
]
