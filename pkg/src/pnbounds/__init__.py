"""Bounds and confidence intervals for the probability of necessity in randomized experiments."""
from ._kernels import BACKEND
from .bounds import (
    BoundEstimate,
    CrossFitResult,
    DiscreteLaw,
    PtBounds,
    crossfit_bounds,
    exact_bounds,
    psi_L,
    psi_U,
    psi_values,
    pt_bounds,
    pt_bounds_from_data,
)
from .data import (
    Dataset,
    DataError,
    FoldPlan,
    Record,
    licorice_path,
    load_csv,
    make_folds,
    make_stratified_folds,
    write_csv,
)
from .intervals import (
    IntervalResult,
    ci0,
    ci1,
    ci2,
    ci3,
    ci4,
    im_critical_value,
    normal_cdf,
    normal_quantile,
    one_sided,
)
from .nuisance import NuisanceFit, OutcomeModel, fit_marginals, fit_nuisance, fit_outcome_model, plug_in_deltas

__version__ = "0.1.0"
