"""msclod: classification-scheme master source to SKOS linked open dataset.

Pipeline: parse the line-oriented master file, build the non-redundant
SKOS graph, expand it with forward-chaining rules, validate it, serialize
it (N-Triples, Turtle, RDF/XML, per-class slices), query it with the
supported SPARQL subset, and publish it over HTTP.
"""

__version__ = "0.1.0"

from .rdf import BlankNode, Graph, Iri, Literal, Triple

__all__ = ["BlankNode", "Graph", "Iri", "Literal", "Triple", "__version__"]
