"""statlink: heterogeneous statistical time series as linked data cubes.

Ingests open statistical sources (Eurostat bulk TSV, wide CSV tables,
SPARQL tabular results, canonical cube documents) into one sparse cube
model, catalogs them, slices them into aligned series, and coordinates
hover highlighting across the visualizations of a dashboard.
"""

__version__ = "0.1.0"
