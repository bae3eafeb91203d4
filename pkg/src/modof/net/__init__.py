from .decoder import DecodeResult, DecodeTrace, TemplateCache, sample_decode
from .encoder import Embedding, LatentDiff, diff_embed, embed, latent, prior_latent
from .features import atom_type, graph_index, tree_index
from .loss import HEADS, TERMS, Accuracy, PreparedPair, pair_loss, pair_terms, prepare, trace_loss
from .params import HyperParams, beta_at, init_params, param_shapes
from .train import LOG_COLUMNS, Model, NumericError, batches_per_epoch, evaluate, train
