"""geobench: benchmark workbench for geospatial RDF stores."""

__version__ = "0.1.0"
