"""consfield: one-hidden-layer auto-encoders treated as vector fields.

Train auto-encoders, test whether their reconstruction dynamics are
conservative, evaluate their energy functions, and learn the conservative
component of arbitrary vector fields.
"""
from .analysis import (
    ConservativityReport,
    conservativity_report,
    curl2d,
    curl_grid,
    energy_by_line_integral,
    line_integral,
    sufficient_condition_construct,
    symmetricity,
)
from .autoencoder import (
    Activation,
    AeParams,
    TrainConfig,
    TrainHistory,
    energy,
    init_params,
    jacobian,
    loss_and_grad,
    reconstruct,
    train,
    weight_length_project,
)
from .fields import (
    ae_dynamics_field,
    ae_reconstruction_field,
    analytic_spiral_sink,
    beta_sweep,
    discrimination_fraction,
    extract_conservative,
    interpolate_params,
    sample_field,
)
from .numerics import Rng, finite_diff_grad, finite_diff_jacobian, matmul
from .vectorfield import VectorField

__version__ = "0.1.0"
