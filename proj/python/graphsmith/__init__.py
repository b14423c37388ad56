"""Python access to the graphsmith generator, metrics and reference executor.

Graphs cross the boundary as their canonical JSON text.
"""

import json

from ._core import (
    PROTOCOL_VERSION,
    ConfigError,
    EmptyCorpus,
    GraphsmithError,
    PreconditionError,
    SchemaError,
    UnsupportedOp,
    check,
    execute,
    graph_metrics,
    infer_outputs,
    synth_inputs,
    validate_graph,
)
from . import _core

__all__ = [
    "PROTOCOL_VERSION",
    "ConfigError",
    "EmptyCorpus",
    "GraphsmithError",
    "PreconditionError",
    "SchemaError",
    "UnsupportedOp",
    "check",
    "corpus_metrics",
    "execute",
    "generate",
    "graph_metrics",
    "handle_request",
    "infer_outputs",
    "manifest",
    "synth_inputs",
    "validate_graph",
]


def manifest():
    return json.loads(_core.manifest())


def generate(num, **config):
    """Returns (graphs as JSON strings, generation report dict)."""
    graphs, report = _core.generate(num, **config)
    return graphs, json.loads(report)


def corpus_metrics(graphs):
    return json.loads(_core.corpus_metrics(list(graphs)))


def handle_request(request):
    return json.loads(_core.handle_request(json.dumps(request)))
