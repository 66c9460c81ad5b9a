"""Evidential belief mapping, fusion, curriculum and losses for voxel evidence."""

__version__ = "0.1.0"

from .belief import (
    BeliefAssignment,
    DirichletParams,
    EvidenceVector,
    Gpma,
    belief_field,
    belief_to_gpma,
    dirichlet_field,
    evidence_to_belief,
    evidence_to_dirichlet,
)
from .curriculum import (
    CurriculumConfig,
    CurriculumWeights,
    RankOrder,
    omega,
    rank_voxels,
    weights_for_epoch,
)
from .fusion import (
    CONTENTIOUS,
    FusedLabelMap,
    FusedVoxel,
    FusionConfig,
    FusionRule,
    blend_uncertainty,
    caef_fuse_voxel,
    ef_fuse_voxel,
    fuse_mass_arrays,
    fuse_volumes,
    reliability,
    reliability_field,
)
from .losses import (
    IedlConfig,
    LossBreakdown,
    WarmupConfig,
    aggregate_unlabeled_iedl,
    aggregate_weighted_labeled,
    cross_entropy_loss,
    dice_loss,
    fisher_det,
    fisher_log_det,
    gaussian_warmup,
    iedl_voxel_grad,
    iedl_voxel_loss,
    total_objective,
)
from .metrics import (
    BinaryMask,
    EmptyMaskError,
    MetricReport,
    asd,
    dice,
    hd95,
    jaccard,
    report,
    surface_distances,
)
from .synth import BiasMode, PhantomSpec, generate_intensity, generate_labels, generate_phantom
from .volume_io import (
    CorruptHeaderError,
    CsvSerializationError,
    IoFailureError,
    SizeMismatchError,
    Volume,
    VolumeIoError,
    VolumeKind,
    evidence_volume,
    export_csv,
    label_volume,
    read_volume,
    scalar_volume,
    write_volume,
)

__all__ = [name for name in dir() if not name.startswith("_")]
