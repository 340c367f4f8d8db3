//! Algebraic machinery and numerical checks for weakly hyperbolic Cauchy
//! problems with time dependent coefficients.

pub mod analysis;
pub mod cauchy;
pub mod error;
pub mod linalg;
pub mod modesolver;
pub mod operator;
pub mod partition;
pub mod poly;
pub mod report;
pub mod symmetriser;

pub use analysis::{
    analyze, check_gr1m, check_levi, classify_hyperbolicity, m2_equivalences, AnalysisReport, GridConfig,
    Hyperbolicity, LeviMode,
};
pub use cauchy::{solve_cauchy, sobolev_loss, transform_data, CauchyData, CauchySolution, SobolevLoss};
pub use error::{Error, Result};
pub use modesolver::{
    energy_trace, growth_scan, integrate_mode, traced_mode, GrowthFit, GrowthVerdict, IntegratorOptions, ModeTrace, V0Policy,
};
pub use operator::{
    build_frame, eval_lower_row, eval_principal_row, japanese_bracket, ModeSymbol, OperatorSpec,
    SymbolFrame, TimeCoefficient,
};
pub use partition::{build_partition, estimate_pq, find_zeros, Partition, PqEstimate};
pub use poly::{ComplexPoly, RealPoly};
pub use symmetriser::{build_symmetriser, hamilton_cayley, Symmetriser};
