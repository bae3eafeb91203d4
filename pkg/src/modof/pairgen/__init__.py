from .ged import EditPath, GEDBudgetExceeded, GEDError, brute_force_ged, optimal_edit_paths, tree_edit_distance
from .pairs import (AttachOp, ExtractStats, PairError, ReplayStep, StopOp, TrainingPair, build_pair, canonical,
                    disconnection_histogram, disconnection_sites, extract_pairs, pair_vocabulary, read_pair_rows,
                    read_pairs, replay, write_pairs)
from .stats import FragmentReport, fragment_stats
