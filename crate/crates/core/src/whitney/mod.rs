//! Whitney decomposition of the truncated complement, reflected cubes,
//! partition of unity and the extension operator built from them.

mod decompose;
mod extend;
mod partition;
mod reflect;

pub use decompose::{box_grid, truncation_box, whitney_decompose, WhitneyAudit, WhitneyCube, WhitneyDecomposition};
pub use extend::{grid_ahlfors, ExtensionConfig, ExtensionOperator, ExtensionSummary};
pub use partition::{cutoff, LipschitzReport, PartitionOfUnity};
pub use reflect::{
    reflect, ReflectMode, ReflectedCube, ReflectionStats, DEFAULT_REFLECT_SCALE, MAX_ENLARGEMENTS,
};
