"""Export of enumerated forests to DOT, JSON or CSV."""

import csv
import json
import logging
from io import StringIO
from typing import Any, Dict, List

from .enumeration import ForestSet
from .errors import ConfigurationError
from .model import Configuration, Forest, Label

logger = logging.getLogger(__name__)

EXPORT_FORMATS = ("dot", "json", "csv")


def _check_label_text(config: Configuration) -> None:
    """Every exported format writes labels as text; 1 and "1" would collide."""
    seen: Dict[str, Label] = {}
    for label in config.labels:
        other = seen.setdefault(str(label), label)
        if other != label:
            raise ConfigurationError(
                f"Labels {other!r} and {label!r} have the same text and cannot be exported"
            )


def _quote(label: Label) -> str:
    text = str(label).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{text}"'


def render_forest_dot(forest: Forest, config: Configuration, index: int) -> str:
    """
    One digraph named forest_<index>.

    Roots are double circles; edges point from child to parent, so every
    non-root node has out-degree one.
    """
    lines = [f"digraph forest_{index} {{"]
    for point in config.roots:
        lines.append(f"  {_quote(point.label)} [shape=doublecircle];")
    for point in config.vertices:
        lines.append(f"  {_quote(point.label)} [shape=circle];")
    for child in config.vertex_labels:
        lines.append(f"  {_quote(child)} -> {_quote(forest.parent[child])};")
    lines.append("}")
    return "\n".join(lines)


def forest_to_dict(forest: Forest, config: Configuration) -> Dict[str, Any]:
    """Parent map with string keys, in vertex order."""
    return {str(child): forest.parent[child] for child in config.vertex_labels}


def _export_csv(forests: ForestSet) -> str:
    output = StringIO()
    writer = csv.DictWriter(output, fieldnames=["forest", "child", "parent"], lineterminator="\n")
    writer.writeheader()
    for index, forest in enumerate(forests):
        for child in forests.configuration.vertex_labels:
            writer.writerow({"forest": index, "child": child, "parent": forest.parent[child]})
    return output.getvalue()


def export_forests(forests: ForestSet, format: str = "dot") -> str:
    """
    Export a forest set.

    Args:
        forests: Enumerated forests
        format: 'dot' (one graph per forest), 'json' (list of parent maps)
            or 'csv' (one row per edge)

    Returns:
        Exported data as string

    Raises:
        ConfigurationError: two labels render to the same text
        ValueError: unknown format
    """
    config = forests.configuration
    fmt = format.lower()
    _check_label_text(config)
    if fmt == "dot":
        graphs: List[str] = [render_forest_dot(f, config, i) for i, f in enumerate(forests)]
        text = "\n".join(graphs) + ("\n" if graphs else "")
    elif fmt == "json":
        text = json.dumps([forest_to_dict(f, config) for f in forests], indent=2) + "\n"
    elif fmt == "csv":
        text = _export_csv(forests)
    else:
        raise ValueError(f"Unsupported export format: {format}")

    logger.info(f"Exported {len(forests)} forests as {fmt}")
    return text
