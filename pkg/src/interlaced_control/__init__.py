"""Interlaced multirate controller implementation toolkit.

Turns a fast single-rate LTI controller into a computation-saving interlaced
implementation (slow poles updated round-robin over N fast instants), builds
the exact lifted LTI model of the resulting periodic system, and validates
the approach on a lane-keeping simulation.
"""

from .interlace import (CostReport, Explicit, InterlacePlan, NyquistFraction,
                        PolePartition, RelativeSeparation, ResampledSlowBlock,
                        UnsupportedBlockError, block_frequency,
                        classify_poles, cost_interlaced, cost_model,
                        cost_single_rate_fast, cost_single_rate_slow,
                        make_plan, resample_slow_block, savings_ratio,
                        w_polynomial)
from .lifting import (AlgebraicLoopError, LiftedQuadruple, SwitchedExecutor,
                      equivalence_report,
                      lift_fast_part, lift_interlaced_controller,
                      lift_slow_block, lifted_closed_loop, switched_execute)
from .ltisys import (FirstOrderBlock, ImproperError, ParallelForm,
                     RepeatedPoleError, SecondOrderBlock,
                     StateSpace, TransferFunction, balanced_truncate,
                     discretize, discretize_mpz, discretize_zoh, extract_pole,
                     freq_response, is_stable, mpz_mapped_roots,
                     partial_fraction,
                     reduce_controller, remove_fast_pole, ss_to_tf, stability,
                     tf_to_ss)
from .pathsim import (ComparisonReport, FixturePlant, FormulaPlant,
                      NumericalBlowupError, Path, PathLostError, Scenario,
                      SimResult, build_uturn_path, compare,
                      feasibility_pretest, lift_slow_controller,
                      pure_pursuit_ref, simulate)
from .vehicle import (LINCOLN_2017, URBAN_SPEEDS, LateralState, SpeedRange,
                      VehicleParams, integrate_pose, lateral_ss, lateral_tf,
                      sideslip, tire_force)

__version__ = "0.1.0"
