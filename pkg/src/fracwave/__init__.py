"""Fractional damped wave equations on compact Lie groups."""
from .harmonics import (SO3, TORUS, Dual, GridField, GroupSpec, QuadratureGrid, RepIndex, SpectralField, analyze,
                        apply_fractional_laplacian, build_grid, character, fractional_multiplier, get_dual,
                        lq_norm, parse_group, plancherel_norm, random_band_limited, sobolev_norm, synthesize,
                        torus_mode)
from .propagator import (EvolutionState, Region, WaveParams, classify_region, damped_phi_pair, decay_envelope,
                         evolve_mode, linear_evolve, phi_pair, weight_envelope)
from .evolution import (BlowupOverflow, ConvergenceError, NormTrace, SchemeConfig, duhamel_step, picard_solve,
                        simulate, x_norm)
from .blowup import LifespanRecord, comparison_lifespan, detect_blowup, lifespan_scan

__version__ = "0.1.0"
