"""
Permutation-equivariant resource allocation toolkit.

Reference iterative solvers for four wireless allocation problems, their
re-expression as recursions of one-set permutation-equivariant templates,
and GNNs assembled from the same templates by set descriptors.

Submodules are imported on demand; ``import pe_alloc`` stays cheap.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
