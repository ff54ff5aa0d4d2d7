"""Junction-tree message passing for boolean factored distributions.

Four architectures share one rooted schedule: Shafer-Shenoy, Hugin, ARCH-1
(simultaneous marginals by a search over straddle trees) and ARCH-2
(simultaneous marginals through multiplicative and additive subset duals).
"""

from .counters import Instrument, OpCounters
from .duals import (m_dual_oracle, operation2_via_duals, p_dual_oracle, transform1, transform2,
                    transform3)
from .errors import (ConstructionError, DomainError, FormatError, InconsistentModelError,
                     InternalConsistencyError, JTError, SearchContextError)
from .generate import chain, random_model, star
from .io import format_marginals, parse_jt, parse_model, write_jt, write_model
from .junction import Factorisation, JunctionTree, construct, prepare, root_tree, validate
from .oracle import brute_force_marginals
from .potential import (MZC, MZCArray, Potential, divide, marginalize, multiply, mzc_to_real,
                        unit_potential)
from .propagation import (ENGINES, MarginalResult, arch1, arch2, compute_marginals, hugin,
                          propagate, run, shafer_shenoy)
from .search import (InfoTree, SearchContext, StraddleTree, full_search, ghost_search,
                     straddle_tree, synchronized_search)
from .simultaneous import operation1_stream, operation2_simultaneous

__version__ = "0.1.0"
