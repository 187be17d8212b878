"""Fisher information of weak-value-amplified metrology with coherent-state meters."""

from .ensemble import (
    EnsembleMoments,
    MeterEnsemble,
    aav_fi_approx,
    delta_for_nbar,
    ensemble_moments,
    fi_mixed_photon,
    mixed_pn_distribution,
    mixed_success_probability,
    three_component,
)
from .errors import (
    DivergentWeakValue,
    EmptyRecord,
    ExpansionInvalid,
    InsufficientPoints,
    IntegrationNotConverged,
    InvalidInput,
    NoFeasiblePoint,
    PostSelectionImpossible,
    TruncationOverflow,
    WindowTooNarrow,
    WVAError,
)
from .fisher import (
    FisherReport,
    QuadratureDistribution,
    Scheme,
    conventional_photon_fi,
    conventional_qfi,
    conventional_quadrature_fi,
    fi_photon,
    fi_quadrature,
    optimize_phase,
    pn_distribution,
    qfi_postselected,
    wva_quadrature_distribution,
)
from .postselect import PostSelectedMeter, QubitState, meter_fock_state, postselect_meter, weak_value
from .qstate import FockVector, coherent_wavefunction, fock_expand

__version__ = "0.1.0"
