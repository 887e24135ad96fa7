"""Multi-finger binary search trees: finger models, bounds and BST simulation."""
from .errors import EmptyContainer, InvalidArgument, KeyNotFound, ResourceLimit
from .seq import AccessSequence, MonotonePartition
from .tree import StaticTree

__version__ = "0.1.0"

__all__ = ["AccessSequence", "MonotonePartition", "StaticTree",
           "InvalidArgument", "KeyNotFound", "ResourceLimit", "EmptyContainer"]
