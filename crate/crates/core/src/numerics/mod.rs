//! Linear-algebra primitives, seeded randomness and binary I/O.

mod image;
pub mod io;
mod rng;
mod sparse;

pub use image::{Image, Sinogram};
pub use io::{read_image, write_image};
pub use rng::Prng;
pub use sparse::SparseMatrix;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
