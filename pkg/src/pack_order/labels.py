"""Class label normalization and catalog/alias resolution.

Labels are plain strings once normalized: lowercase, trimmed, inner
whitespace collapsed. Commas are forbidden because they are the wire
separator between items in model responses.
"""

from __future__ import annotations

import re

from .errors import SchemaError

_WS = re.compile(r"\s+")


def normalize_label(raw: str) -> str:
    """Canonicalize a free-form label. Raises SchemaError if empty or contains a comma."""
    if "," in raw:
        raise SchemaError(f"label contains a comma: {raw!r}")
    label = _WS.sub(" ", raw.strip().lower())
    if not label:
        raise SchemaError(f"label is empty after normalization: {raw!r}")
    return label


def resolve_label(raw: str, aliases: dict[str, str] | None = None) -> str:
    """Normalize a label and map it through the alias table if present."""
    label = normalize_label(raw)
    if aliases:
        return aliases.get(label, label)
    return label


def strip_plural(label: str) -> str:
    """Naive singular form: drop a trailing 's'."""
    if label.endswith("s") and len(label) > 1:
        return label[:-1]
    return label


def plural_variants(label: str) -> frozenset[str]:
    """The label plus its naive singular forms (trailing 's' and 'es' dropped).

    Two labels are considered the same class when their variant sets intersect,
    so 'apple'/'apples' and 'box'/'boxes' both match."""
    variants = {label}
    if label.endswith("s") and len(label) > 1:
        variants.add(label[:-1])
    if label.endswith("es") and len(label) > 2:
        variants.add(label[:-2])
    return frozenset(variants)
