"""Permutation symmetry of feed-forward network weights."""
from .network import (
    Activation,
    Dataset,
    InvalidInputError,
    LayerWeights,
    LossKind,
    Network,
    ValidationReport,
    forward,
    loss,
    predict,
    validate,
)
from .symmetry import (
    EquivalenceVerdict,
    LayerPermutation,
    NetworkPermutation,
    OrbitCount,
    apply_permutation,
    canonicalize,
    compose,
    equivalent,
    inverse,
    neuron_switch,
    orbit_size,
    random_permutation,
    random_sibling,
)
from .training import (
    EquivarianceReport,
    GradientSet,
    TrainConfig,
    TrainingDivergedError,
    backprop,
    equivariance_experiment,
    finite_diff,
    sgd_train,
)

__version__ = "0.1.0"
