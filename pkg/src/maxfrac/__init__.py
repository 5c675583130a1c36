"""Attractors and invariant measures of phi-max-contraction systems with probabilities."""

from .comparison import ComparisonFn, Linear, Rational, Tabulated, check_comparison
from .errors import (CapExceededError, ConvergenceError, DimensionError, EmptyInputError,
                     MassMismatchError, MaxfracError)
from .functions import Constant, Coordinate, LipschitzGrid, Polynomial, TestFunction
from .ifs import (AffineMap, IfsSystem, PiecewiseLinearMap, absorbing_hull, attractor,
                  fractal_iterate, fractal_step, verify_phi_max)
from .measure import (DiscreteMeasure, PrunePolicy, chaos_game, contraction_profile,
                      dual_apply, dual_iterate, invariant_measure, markov_iterate, markov_step,
                      oscillation)
from .metric import PointCloud, diameter, distance, hausdorff
from .symbolic import (compose, concat, enumerate_prefix_words, enumerate_words,
                       word_probability)
from .transport import embed, hutchinson_on, mcshane_extend, wasserstein1, wasserstein1_1d

__version__ = "0.1.0"
