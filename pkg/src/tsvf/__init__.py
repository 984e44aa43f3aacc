"""Pre- and post-selected ensembles: weak values, ABL certainty, correlation hierarchies."""

from .algebra import (
    Ket,
    LinearOp,
    LocalProduct,
    LocalSpace,
    ProductSpace,
    apply,
    embed_local,
    fock_annihilation,
    fock_creation,
    inner,
    tensor_ket,
)
from .hierarchy import (
    CorrelationQuery,
    CorrelationTable,
    HierarchyReport,
    ProjectorFamily,
    bottom_up_witness,
    detect_hierarchy,
    enumerate_correlations,
    marginalize,
    restrict_sites,
)
from .scenarios import Scenario, build, fock_chain, hydrogen, n_body, photon_polarization, two_box
from .twostate import (
    InadmissibleTwoStateError,
    SpectralDecomposition,
    TwoState,
    abl_probabilities,
    dichotomic_certainty,
    weak_value,
)

__version__ = "0.1.0"
