from app.dynamics.fields import (
    FtrlField,
    GdaField,
    ReplicatorField,
    VectorField,
    ZField,
    ftrl_field,
    gda_field,
    make_field,
    payoffs_from_strategies,
    payoff_vector,
    reduced_choice_map,
    replicator_field,
    z_field,
    z_from_strategies,
    z_reduce,
)
from app.dynamics.regularizers import Regularizer, choice_map, conjugate, regularizer_range, regularizer_value
