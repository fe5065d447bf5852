from .campaign import (
    CommandProvider,
    HTTPProvider,
    ProviderError,
    run_masking_campaign,
    score_by_category,
    stimulus_records,
)
from .contributions import (
    ContributionMap,
    contribution_map,
    export_contributions,
    read_cluster_table,
    read_voxel_values,
)
from .ledger import (
    LedgerError,
    MaskTrial,
    TrialLedger,
    assemble_design,
    mask_from_str,
    mask_to_str,
    sample_mask,
)
from .ridge import ContributionRegressor, SingularSystemError, ridge_fit, select_lambda

__all__ = [
    "CommandProvider",
    "ContributionMap",
    "ContributionRegressor",
    "HTTPProvider",
    "LedgerError",
    "MaskTrial",
    "ProviderError",
    "SingularSystemError",
    "TrialLedger",
    "assemble_design",
    "contribution_map",
    "export_contributions",
    "mask_from_str",
    "mask_to_str",
    "read_cluster_table",
    "read_voxel_values",
    "ridge_fit",
    "run_masking_campaign",
    "sample_mask",
    "score_by_category",
    "select_lambda",
    "stimulus_records",
]
