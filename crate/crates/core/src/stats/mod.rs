pub mod data;
pub mod describe;
pub mod design;
pub mod models;
pub mod ols;
pub mod robustness;
pub mod smooth;
pub mod table;

pub use data::{Column, DataTable};
pub use design::{build_design, Block, Design, DesignSpec};
pub use models::builtin;
pub use ols::{fit, ols_fit, stars, FitResult};
pub use robustness::{robustness_scores, RobustnessScores};
pub use smooth::{kernel_smooth, SmoothCurve};
