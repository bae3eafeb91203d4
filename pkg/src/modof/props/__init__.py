from .crippen import AtomTypeError, crippen_logp
from .fingerprint import Fingerprint, atom_environments, fnv1a64, morgan_fp, tanimoto
from .plogp import (PlogpConfig, PropertyScorer, calibrate, cycle_score, get_scorer, plogp,
                    plogp_components)
from .sascore import SAScorer, sa_score
