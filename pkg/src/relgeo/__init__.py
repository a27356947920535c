"""Relative geodesic representations for latent space communication.

Describe each latent code by the pullback-metric lengths (or energies) of
decoded straight segments to a fixed anchor set. Because those quantities
are intrinsic to the decoded manifold, the resulting coordinates are
invariant to reparametrizations of latent space and isometries of output
space, which makes retrieval and stitching across independently trained
models possible without training any adapter.
"""

__version__ = "0.1.0"

from .alignment import (AlignmentMap, Correspondence, crossspace_similarity,
                        extract_correspondence, fit_linear, fit_orthogonal,
                        stitch)
from .evaluation import MrrResult, mrr, reconstruction_mse, spearman
from .geometry import (CurveSpec, DiscreteCurve, EuclideanMetric,
                       FisherRaoMetric, SphericalMetric, check_bounds,
                       geodesic_oracle, metric_from_name,
                       segment_output_distance, straight_line_quantity)
from .models import (AffineMap, ComposedDecoder, Decoder, Layer, LinearDecoder,
                     MlpDecoder, MlpModel, OutputIsometry, SphereChartDecoder,
                     SwissRollDecoder, TanhResidualMap, compose)
from .numerics import RngStream, lstsq, matmul, random_orthogonal, thin_svd
from .relrep import (AnchorSet, RelRepMatrix, relrep_cosine, relrep_geodesic,
                     select_anchors)
from .synthbench import ManifoldPair, SyntheticDataset, make_dataset, make_manifold_pair
from .training import (DietHead, TrainConfig, backprop_step, train_autoencoder,
                       train_diet)
