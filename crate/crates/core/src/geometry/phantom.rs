use crate::error::{Error, Result};
use crate::numerics::{Image, Prng};

/// Ellipse in normalized image coordinates, where the image is `[-1, 1]²`
/// with `y` pointing up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseSpec {
    pub center: (f64, f64),
    pub semi_axes: (f64, f64),
    /// Counter-clockwise rotation in radians.
    pub rotation: f64,
    pub intensity: f64,
}

impl EllipseSpec {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let (s, c) = self.rotation.sin_cos();
        let xr = dx * c + dy * s;
        let yr = -dx * s + dy * c;
        (xr / self.semi_axes.0).powi(2) + (yr / self.semi_axes.1).powi(2) <= 1.0
    }
}

/// Sampling ranges for random ellipses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomConfig {
    pub ellipse_count: (usize, usize),
    /// Centers are uniform in `[-c, c]²`.
    pub center_extent: f64,
    pub semi_axis_range: (f64, f64),
    pub intensity_range: (f64, f64),
}

impl Default for PhantomConfig {
    fn default() -> Self {
        PhantomConfig {
            ellipse_count: (3, 8),
            center_extent: 0.6,
            semi_axis_range: (0.08, 0.45),
            intensity_range: (0.1, 1.0),
        }
    }
}

/// Pixel-center normalized coordinates of pixel `(i, j)` in a `side` image.
pub fn pixel_center(side: usize, i: usize, j: usize) -> (f64, f64) {
    let half = side as f64 / 2.0;
    (
        (j as f64 + 0.5 - half) / half,
        (half - i as f64 - 0.5) / half,
    )
}

/// Sums ellipse intensities at pixel centers and clips to `[0, 1]`.
pub fn rasterize_ellipses(ellipses: &[EllipseSpec], side: usize) -> Image {
    let mut data = vec![0.0; side * side];
    for i in 0..side {
        for j in 0..side {
            let (x, y) = pixel_center(side, i, j);
            let v: f64 = ellipses
                .iter()
                .filter(|e| e.contains(x, y))
                .map(|e| e.intensity)
                .sum();
            data[i * side + j] = v.clamp(0.0, 1.0);
        }
    }
    Image::new(side, side, data).expect("finite by construction")
}

pub fn sample_ellipses(rng: &mut Prng, config: &PhantomConfig) -> Vec<EllipseSpec> {
    let (lo, hi) = config.ellipse_count;
    let n = rng.int_inclusive(lo, hi.max(lo));
    (0..n)
        .map(|_| {
            let c = config.center_extent;
            let (amin, amax) = config.semi_axis_range;
            let (imin, imax) = config.intensity_range;
            EllipseSpec {
                center: (rng.uniform_range(-c, c), rng.uniform_range(-c, c)),
                semi_axes: (rng.uniform_range(amin, amax), rng.uniform_range(amin, amax)),
                rotation: rng.uniform_range(0.0, std::f64::consts::PI),
                intensity: rng.uniform_range(imin, imax),
            }
        })
        .collect()
}

/// Random-ellipse phantom with the default sampling ranges and the given
/// ellipse count range.
pub fn generate_ellipse_phantom(
    rng: &mut Prng,
    n_ellipses_range: (usize, usize),
    side: usize,
) -> Result<Image> {
    let config = PhantomConfig {
        ellipse_count: n_ellipses_range,
        ..PhantomConfig::default()
    };
    generate_phantom_with(rng, &config, side)
}

pub fn generate_phantom_with(rng: &mut Prng, config: &PhantomConfig, side: usize) -> Result<Image> {
    if side < 8 {
        return Err(Error::invalid(format!("phantom side {side} < 8")));
    }
    if config.ellipse_count.0 > config.ellipse_count.1 {
        return Err(Error::invalid("ellipse count range is inverted"));
    }
    let ellipses = sample_ellipses(rng, config);
    Ok(rasterize_ellipses(&ellipses, side))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_ellipses_give_zero_image() {
        let mut rng = Prng::new(1);
        let img = generate_ellipse_phantom(&mut rng, (0, 0), 16).unwrap();
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_disk_membership() {
        let side = 20;
        let e = EllipseSpec {
            center: (0.0, 0.0),
            semi_axes: (1.0, 1.0),
            rotation: 0.3,
            intensity: 1.0,
        };
        let img = rasterize_ellipses(&[e], side);
        for i in 0..side {
            for j in 0..side {
                let (x, y) = pixel_center(side, i, j);
                let inside = x * x + y * y <= 1.0;
                assert_eq!(img.get(i, j), if inside { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_ellipse_phantom(&mut Prng::new(77), (3, 8), 32).unwrap();
        let b = generate_ellipse_phantom(&mut Prng::new(77), (3, 8), 32).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn values_in_unit_interval() {
        let mut rng = Prng::new(5);
        for _ in 0..20 {
            let img = generate_ellipse_phantom(&mut rng, (3, 8), 16).unwrap();
            assert!(img.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn small_side_rejected() {
        assert!(generate_ellipse_phantom(&mut Prng::new(0), (1, 2), 7).is_err());
    }

    #[test]
    fn rotated_ellipse_orientation() {
        let e = EllipseSpec {
            center: (0.0, 0.0),
            semi_axes: (0.8, 0.1),
            rotation: std::f64::consts::FRAC_PI_2,
            intensity: 1.0,
        };
        assert!(e.contains(0.0, 0.7));
        assert!(!e.contains(0.7, 0.0));
    }
}
