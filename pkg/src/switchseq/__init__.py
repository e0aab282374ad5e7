"""switchseq: switching-sequence design and evaluation for switched-array
channel sounders.

Builds antenna array models, represents switching sequences (sequential,
random, hybrid), evaluates the spatio-temporal ambiguity function and its
integral objective, computes closed-form and numeric Cramer-Rao bounds, and
optimizes sequences by simulated annealing.
"""

__version__ = "0.1.0"

from .ambiguity import (AmbiguitySurface, DegenerateDirectionError,
                        ObjectiveConfig, ObjectiveEvaluator, Region,
                        ambiguity_surface, ambiguity_value, objective)
from .analysis import (AliasPeak, ComparisonReport, GridTooNarrowError,
                       WidthReport, alias_scan, compare_schemes,
                       effective_factor, half_power_width, peak_sidelobe)
from .anneal import (AnnealConfig, AnnealError, AnnealRecord, AnnealTrace,
                     anneal, temperature_schedule)
from .arrays import (ArrayModel, Direction, OmniPattern, PatchPattern,
                     Polarization, TabulatedPattern, effective_elements,
                     make_octagonal, make_ula, steering_matrix,
                     steering_vector)
from .config import ConfigError, ExperimentConfig
from .crlb import (CRLBResult, EndfireSingularityError, ParamVector,
                   SingularFIMError, UnobservableDopplerError, crlb_aoa,
                   crlb_doppler, fim_matrix, fim_numeric)
from .signal import (PathGain, StructuralParams, basis, basis_from_eta,
                     doppler_vector, synthesize)
from .switching import (SwitchingSequence, eta_subset, hybrid_init,
                        random_init, sequential, swap_hybrid, swap_random)
