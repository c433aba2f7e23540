//! The Petersen family Q^t and the mating family B^t, with parameter solvers.

mod models;
mod product;
mod solve;

pub use models::{
    build_b, critical_structure_check, mating_unchecked, petersen_structure_check, solve_ab, BlaschkeCubic,
    CriticalResiduals, PetersenModel,
};
pub use product::BlaschkeProduct;
pub use solve::{solve_t, Family, Refinement, ScanRow, SolveConfig, SolveReport};

#[allow(unused_imports)]
pub(crate) use product::e;
