//! Projections onto elementary convex sets, projection-based update
//! operators (Kaczmarz, DROP) and the generic fixed-point driver.

mod drop;
mod fixed_point;
mod projections;

pub use self::drop::{drop_step, DropOperator, ROW_NORM_TOLERANCE};
pub(crate) use self::drop::DropWorkspace;
pub use fixed_point::{fixed_point_iterate, FixedPointReport};
pub(crate) use projections::project_ball_in_place;
pub use projections::{clamp_unit, kaczmarz_sweep, project_ball, project_box, project_hyperplane};

