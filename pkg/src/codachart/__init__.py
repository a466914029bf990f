"""VSI MEWMA control charts for compositional data."""

__version__ = "0.1.0"

from .chart import (ChartDesign, ChartState, Region, StepReport, estimate_parameters,
                    init_chart, run_chart, update)
from .designer import (DesignProblem, DesignSolution, FsiSolution, calibrate_H,
                       near_optimal_vsi, noncentrality, optimize_fsi, optimize_vsi, solve_hL)
from .errors import (ChartStateError, CodaChartError, DesignError, DomainError,
                     InfeasibleError, NumericalError)
from .kernels import BACKEND as KERNEL_BACKEND
from .markov import (AtsReport, MarkovSpec, TransitionModel, ats_incontrol, ats_outofcontrol,
                     build_incontrol_chain, build_outofcontrol_chain, evaluate)
from .montecarlo import SimConfig, SimEstimate, simulate_ats
from .simplex import (Composition, IlrBasis, balances, closure, clr, clr_inv, ilr, ilr_inv,
                      neutral, perturb, power, sbp_basis)
from .special import noncentral_chi2_cdf, std_normal_cdf
