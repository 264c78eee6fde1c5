"""Interpolative construction of quantized tensor trains (QTTs) from black-box functions."""

from .bounds import (Analytic, Bandlimited, Differentiable, interp_error_bound, measure_interp_error,
                     rank_bound, rank_bound_multiorder, uniform_rank_bound)
from .cheb import (ChebSystem, LocalInterpSystem, cardinal_eval, lebesgue_constant, lobatto_nodes,
                   local_cardinal_eval)
from .construct import (BuildReport, TruncationPolicy, construct_basic, construct_decay,
                        construct_multires, construct_multivariate, construct_rank_revealing)
from .cores import DangerTree, DecaySchedule
from .invert import GridSamples, recover_grid, stage1_recover, stage2_coarsen
from .oracle import FunctionOracle
from .tt import (DenseQuantizedTensor, TensorTrain, tensor_norm, tt_eval, tt_eval_batch, tt_read,
                 tt_round, tt_to_dense, tt_write, unfolding_eps_rank)

__all__ = [
    "Analytic", "Bandlimited", "BuildReport", "ChebSystem", "DangerTree", "DecaySchedule",
    "DenseQuantizedTensor", "Differentiable", "FunctionOracle", "GridSamples", "LocalInterpSystem",
    "TensorTrain", "TruncationPolicy", "cardinal_eval", "construct_basic", "construct_decay",
    "construct_multires", "construct_multivariate", "construct_rank_revealing", "interp_error_bound",
    "lebesgue_constant", "lobatto_nodes", "local_cardinal_eval", "measure_interp_error", "rank_bound",
    "rank_bound_multiorder", "recover_grid", "stage1_recover", "stage2_coarsen", "tensor_norm",
    "tt_eval", "tt_eval_batch", "tt_read", "tt_round", "tt_to_dense", "tt_write",
    "uniform_rank_bound", "unfolding_eps_rank",
]
