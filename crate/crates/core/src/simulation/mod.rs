//! The reference model, its samplers and analytic truths, and the
//! covariance experiment.

pub mod model;
pub mod sampler;
pub mod slice;
pub mod table3;

pub use model::{analytic_f_v, true_covariance, true_nu2, true_nu2_f_side};
pub use sampler::{replicate_rng, sample_2d_direct, sample_3d, SimulationMode, SimulationSpec};
pub use slice::{slice_oracle, SliceWorld};
pub use table3::{run_table3, Table3Report, Table3Row, Table3Spec};
