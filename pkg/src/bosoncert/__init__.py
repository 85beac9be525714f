"""Boson sampling simulation and coarse-grained certification."""

from .fock import ProblemShape, all_states, hilbert_dim, l1_distance, rank, unrank
from .permanent import permanent_naive, permanent_ryser
from .interferometer import (
    Interferometer,
    IonChain,
    equilibrium_positions,
    evolve,
    haar_unitary,
    hermitian_log,
    hopping_matrix,
    ion_chain,
    ion_length_scale,
    load_interferometer,
    perturb_hamiltonian,
    perturb_timing,
    random_phase_unitary,
    save_interferometer,
)
from .distributions import (
    OutcomeDistribution,
    boson_distribution,
    distinguishable_distribution,
    fidelity,
    load_distribution,
    save_distribution,
    uniform_distribution,
)
from .sampling import (
    SampleSet,
    draw_distinguishable_direct,
    draw_from_table,
    draw_uniform,
    load_sample,
    save_sample,
)
from .seeds import stream
from .coarsegrain import (
    BubblePartition,
    CoarseDistribution,
    assign_state,
    build_bubbles,
    coarse_grain,
    load_partition,
    save_partition,
)
from .stats import (
    TestReport,
    campaign_summary,
    certify,
    chi2_cdf,
    chi2_cutoff,
    chi2_pdf,
    chi2_sf,
    chi2_two_sample,
    load_report,
    save_report,
)
from .harness import CampaignConfig, CampaignResult, emit_figure_data, run_campaign

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
