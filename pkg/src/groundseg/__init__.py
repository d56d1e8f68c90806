"""Ground segmentation of rotating-LiDAR point clouds.

Pipeline: load a cloud, derive rings, encode it into a dense polar frame,
classify every cell with a shallow fully-convolutional network, and project
cell probabilities back onto the points. Annotation (seed flooding), a
heuristic pretraining labeler, and PR/AP evaluation round out the toolkit.
"""

from . import autolabel, cloud, encoder, evaluate, flood, labels, nn, synthetic

__all__ = [
    "autolabel", "cloud", "encoder", "evaluate", "flood", "labels", "nn",
    "synthetic",
]

__version__ = "0.1.0"
