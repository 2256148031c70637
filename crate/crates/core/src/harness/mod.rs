//! Test-function families and the inequality checks run over them.

mod checks;
mod family;
mod report;

pub use checks::{
    check_embedding, check_extension, check_geometric, check_holder, check_nontriviality, check_partition,
    check_poincare, check_testfn_bound, check_whitney, holder_chain_constant, max_drift, smooth_bump, sphere_measure,
    testfn_constant, HOLDER_MAX_CELLS,
};
pub use family::{make_cutoff, members, CutoffSpec, FamilySpec, Member};
pub use report::{CaseRow, InequalityReport};
