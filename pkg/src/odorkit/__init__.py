"""Odor prediction toolkit: molecules in, odor descriptor predictions out.

Subpackages cover SMILES parsing (molgraph), fingerprints, a small
autodiff tensor core (tensor), graph neural network models (gnn),
random forest and KNN baselines (baselines), multi-label splitting
(datasplit), evaluation metrics, dataset ingestion (dataset), and
embedding-space analysis (analysis). The command line lives in cli.
"""

__version__ = "0.1.0"
