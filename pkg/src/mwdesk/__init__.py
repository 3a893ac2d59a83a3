"""mwdesk: desk-scale planar microwave circuit design.

Analytic S-parameter surrogates for stepped lines, coupled-resonator filters
and patch antennas; differential-response action clustering; and an advantage
actor-critic agent that designs circuits by choosing cluster actions.
"""

__version__ = "0.1.0"

from .a3c import TrainConfig, TrainResult, n_step_returns, train
from .clustering import (ActionClusterModel, ActionKMeans, assign,
                         fit_action_clusters, prune_negligible)
from .coupling import CoupledResonatorParams, filter_sweep
from .env import (CircuitEnv, DesignTask, RewardWeights, measure_band, reward,
                  task_success)
from .extract import (FilterCouplingMap, Substrate, extract_filter_params,
                      extract_line_segments, extract_patch_params, make_surrogate)
from .mesh import (MeshModel, Polygon, RejectedActionError, VertexAction,
                   apply_action, load_mesh, rasterize, save_mesh, validate,
                   vertex_action_space)
from .microstrip import MicrostripSegment, microstrip_params, tl_sweep
from .net import NetConfig, forward, init_params, load_checkpoint, save_checkpoint
from .patch import PatchParams, patch_resonance, patch_sweep
from .perturb import PerturbationSample, gen_perturbation_dataset
from .sparams import SParamSweep, TwoPortABCD, abcd_cascade, abcd_to_s, db_mag
from .touchstone import read_touchstone, write_touchstone
