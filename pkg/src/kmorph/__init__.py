"""k-MS clustering by iterated, mask-restricted label dilation."""

import numba

# Prefer OpenMP/workqueue; some distro TBB builds are too old and only warn.
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .errors import InvalidInputError  # noqa: E402
from .grid import (  # noqa: E402
    BACKGROUND,
    BinaryGrid,
    GridSpec,
    LabelGrid,
    Point2,
    PointSet,
    cell_to_point,
    discretize,
    grid_from_image,
    seed_labels,
)
from .morphology import (  # noqa: E402
    B1,
    B2,
    BoundaryMode,
    StructuringElement,
    binary_dilate,
    gray_dilate,
    masked_label_dilate_pass,
    reconstruct,
    scale_se,
)
from .kms import (  # noqa: E402
    BoundedLabelSet,
    Engine,
    KmsConfig,
    KmsResult,
    intrinsic_max_clusters,
    kms_cluster,
    offer_label,
)
from .postprocess import (  # noqa: E402
    ClusterCensus,
    census,
    compact_relabel,
    remove_small_clusters,
    render_colormap,
)
from .baseline import KMeansConfig, KMeansResult, clustering_error, lloyd_kmeans  # noqa: E402

__version__ = "0.1.0"
