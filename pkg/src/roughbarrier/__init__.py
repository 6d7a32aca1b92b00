"""Monte Carlo pricing of up-and-in barrier calls under rough volatility and
checks of their short-maturity decay against explicit tail bounds."""

__version__ = "0.1.0"

from .errors import InsufficientData, InvalidArgument, NumericalFailure
from .kernel import TimeGrid, build_grid, cholesky_factor, sample_joint, volterra_cov
from .vol import (
    ConstantVolParams, RoughBergomiParams, VolBounds, const_vol, phi_n, rbergomi_vol, truncated_rbergomi_vol,
)
from .paths import PathBatch, PathStatistics, path_stats, simulate_batch
from .pricing import (
    BarrierContract, MCEstimate, bridge_crossing_prob, bs_oracles, hit_probability, price_european,
    price_up_and_in,
)
from .bounds import (
    DensityBoundParams, GrrParams, cdf_bound, combined_bound, concentration_bound, density_bound,
    grr_radius, y_functional,
)
from .decay import (
    DecayReport, decay_scan, fit_gaussian_rate, fit_polynomial_rate, verify_dominance,
)
