//! Parallel-beam forward operator, random-ellipse phantoms and noisy
//! measurement simulation.

mod measure;
mod phantom;
mod radon;

pub use measure::{
    normalize_rows, simulate_measurements, simulate_measurements_with, NoiseModel, RowScaling,
};
pub use phantom::{
    generate_ellipse_phantom, generate_phantom_with, pixel_center, rasterize_ellipses,
    sample_ellipses, EllipseSpec, PhantomConfig,
};
pub use radon::{build_radon_matrix, trace_ray, ScanGeometry};
