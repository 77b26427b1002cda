use crate::error::{Error, Result};
use crate::numerics::SparseMatrix;

/// Parallel-beam scan over a square image.
///
/// Coordinates are in pixel units: the image occupies
/// `[-side/2, side/2]²` and each pixel is a unit square. Pixel `(i, j)` (row
/// `i` from the top, column `j` from the left) covers
/// `x ∈ [-side/2 + j, -side/2 + j + 1]`, `y ∈ [side/2 - i - 1, side/2 - i]`.
///
/// Ray `(a, b)` travels along direction `(cos θ_a, sin θ_a)` with
/// `θ_a = a·π/n_angles`, displaced by offset `s_b` along the normal
/// `(-sin θ_a, cos θ_a)`. Offsets are equally spaced and centred across
/// `detector_span`: `s_b = -span/2 + (b + ½)·span/n_beams`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGeometry {
    pub n_angles: usize,
    pub n_beams: usize,
    pub image_side: usize,
    pub detector_span: f64,
}

impl ScanGeometry {
    /// Geometry whose detector spans the image diagonal, so every angle
    /// covers the whole square.
    pub fn new(n_angles: usize, n_beams: usize, image_side: usize) -> Result<Self> {
        Self::with_span(
            n_angles,
            n_beams,
            image_side,
            image_side as f64 * std::f64::consts::SQRT_2,
        )
    }

    pub fn with_span(
        n_angles: usize,
        n_beams: usize,
        image_side: usize,
        detector_span: f64,
    ) -> Result<Self> {
        let g = ScanGeometry {
            n_angles,
            n_beams,
            image_side,
            detector_span,
        };
        g.validate()?;
        Ok(g)
    }

    /// Desk-scale default: 32×32 image, 15 angles, 45 beams.
    pub fn desk() -> Self {
        Self::new(15, 45, 32).expect("valid default geometry")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_angles == 0 || self.n_beams == 0 {
            return Err(Error::invalid("geometry has no rays"));
        }
        if self.image_side == 0 {
            return Err(Error::invalid("image side must be positive"));
        }
        if !(self.detector_span > 0.0 && self.detector_span.is_finite()) {
            return Err(Error::invalid("detector span must be positive"));
        }
        Ok(())
    }

    pub fn n_rays(&self) -> usize {
        self.n_angles * self.n_beams
    }

    pub fn n_pixels(&self) -> usize {
        self.image_side * self.image_side
    }

    pub fn angle(&self, a: usize) -> f64 {
        a as f64 * std::f64::consts::PI / self.n_angles as f64
    }

    pub fn offset(&self, b: usize) -> f64 {
        let spacing = self.detector_span / self.n_beams as f64;
        -0.5 * self.detector_span + (b as f64 + 0.5) * spacing
    }
}

const PARALLEL_EPS: f64 = 1e-12;

/// Chord lengths of one ray through the pixels of a `side × side` image,
/// as `(pixel index, length)` pairs sorted by pixel index.
///
/// Siddon-style: the ray is clipped to the image square, split at every grid
/// line it crosses, and each segment is assigned to the pixel containing its
/// midpoint.
pub fn trace_ray(side: usize, angle: f64, offset: f64) -> Vec<(usize, f64)> {
    let half = side as f64 / 2.0;
    let (dx, dy) = (angle.cos(), angle.sin());
    let (px, py) = (-offset * dy, offset * dx);

    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() < PARALLEL_EPS {
            if p < -half || p > half {
                return Vec::new();
            }
        } else {
            let t1 = (-half - p) / d;
            let t2 = (half - p) / d;
            t_lo = t_lo.max(t1.min(t2));
            t_hi = t_hi.min(t1.max(t2));
        }
    }
    if !(t_hi - t_lo > PARALLEL_EPS) {
        return Vec::new();
    }

    let mut ts = vec![t_lo, t_hi];
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() < PARALLEL_EPS {
            continue;
        }
        for k in 0..=side {
            let t = (-half + k as f64 - p) / d;
            if t > t_lo && t < t_hi {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);

    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * side);
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= PARALLEL_EPS {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let x = px + tm * dx;
        let y = py + tm * dy;
        let j = ((x + half).floor() as isize).clamp(0, side as isize - 1) as usize;
        let i = ((half - y).floor() as isize).clamp(0, side as isize - 1) as usize;
        entries.push((i * side + j, len));
    }
    entries.sort_by_key(|&(p, _)| p);
    entries.dedup_by(|next, prev| {
        if next.0 == prev.0 {
            prev.1 += next.1;
            true
        } else {
            false
        }
    });
    entries
}

/// Discrete Radon operator: `n_angles·n_beams` rows (angle-major), one column
/// per pixel, entries are exact chord lengths.
pub fn build_radon_matrix(geom: &ScanGeometry) -> Result<SparseMatrix> {
    geom.validate()?;
    let mut rows = Vec::with_capacity(geom.n_rays());
    for a in 0..geom.n_angles {
        let theta = geom.angle(a);
        for b in 0..geom.n_beams {
            rows.push(trace_ray(geom.image_side, theta, geom.offset(b)));
        }
    }
    SparseMatrix::from_rows(geom.n_pixels(), rows)
}
