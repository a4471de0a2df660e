"""Valeriepieris circles and related population statistics on lat/lon rasters."""

__version__ = "0.1.0"

from .centers import (CentreResult, bachi_standard_distance, centre_3d,
                      centre_of_population, geometric_median)
from .discmodel import (DiscModelParams, analytic_vp_radius,
                        asymptotic_vp_radius, cumulative_population, density,
                        synth_grid, total_population)
from .errors import (DegenerateProfileError, InfeasibleError, InputError,
                     VpError)
from .grid import (GridSpec, PopulationGrid, RegionMask, apply_mask,
                   bbox_mask, coarsen, load_csv, load_esri_ascii,
                   load_geojson_mask, rasterize_polygon, save_esri_ascii)
from .profile import (DEFAULT_FS, CentralisationResult, PowerLawFit,
                      ProfileSample, SegmentedFit, VpProfile, centralisation,
                      compute_profile, fit_power_law, fit_segmented)
from .vpsearch import (SearchConfig, SearchStats, VpCircle, min_radius_at,
                       population_within, vp_bruteforce, vp_fast)

__all__ = [name for name in dir() if not name.startswith("_")]
