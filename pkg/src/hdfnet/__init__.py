"""Dynamic dilated filtering, hybrid enhanced loss and saliency metrics in numpy."""
from .dynfilter import adaptive_conv, adaptive_conv_backward, ddpm_forward, init_ddpm, kgu_forward, ktu_split
from .errors import ContractViolation, PgmParseError
from .losses import bce_loss, edge_mask, eel_loss, hel_loss, rel_loss
from .metrics import MetricReport, ave_metric, e_measure, f_measures, mae, pr_curve, s_measure, weighted_fmeasure
from .net import hdfnet_forward, init_hdfnet
from .tensor import ConvParams, avg_pool, conv2d, upsample2x

__version__ = "0.1.0"
