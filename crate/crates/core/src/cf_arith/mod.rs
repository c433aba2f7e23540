//! Exact arithmetic on rotation numbers and binary angles.

mod angle;
mod cf;
mod omega;

pub use angle::{dyadic_preimages, AngleJson, BigAngle};
pub use cf::{cf_expand, CfOrigin, ContinuedFraction, RealInterval, ThetaLike};
pub use omega::{
    check_relation, omega_of_theta, staircase_rho, sturmian_point, RelationReport, RelationRow, RelationVerdict,
    GUARD_BITS,
};
