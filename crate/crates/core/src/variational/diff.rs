use crate::error::{check_len, Error, Result};

/// Forward differences of an `height × width` row-major image.
///
/// The output stacks the differences along rows (`u[i][j+1] − u[i][j]`)
/// followed by the differences along columns (`u[i+1][j] − u[i][j]`), each
/// block `height·width` long. The last difference along each axis is zero
/// (replicate boundary), so constant images have zero gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffOperator {
    pub height: usize,
    pub width: usize,
}

impl DiffOperator {
    pub fn new(height: usize, width: usize) -> Self {
        DiffOperator { height, width }
    }

    pub fn n_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn output_len(&self) -> usize {
        2 * self.n_pixels()
    }

    pub fn forward(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("forward difference input", self.n_pixels(), u.len())?;
        let mut out = vec![0.0; self.output_len()];
        self.forward_into(u, &mut out);
        Ok(out)
    }

    pub(crate) fn forward_into(&self, u: &[f64], out: &mut [f64]) {
        let (h, w) = (self.height, self.width);
        let (horiz, vert) = out.split_at_mut(h * w);
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                horiz[k] = if j + 1 < w { u[k + 1] - u[k] } else { 0.0 };
                vert[k] = if i + 1 < h { u[k + w] - u[k] } else { 0.0 };
            }
        }
    }

    /// Exact adjoint of [`forward`](Self::forward).
    pub fn transpose(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_len("difference adjoint input", self.output_len(), p.len())?;
        let mut out = vec![0.0; self.n_pixels()];
        self.transpose_into(p, &mut out);
        Ok(out)
    }

    pub(crate) fn transpose_into(&self, p: &[f64], out: &mut [f64]) {
        let (h, w) = (self.height, self.width);
        let (horiz, vert) = p.split_at(h * w);
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                let mut v = 0.0;
                if j + 1 < w {
                    v -= horiz[k];
                }
                if j >= 1 {
                    v += horiz[k - 1];
                }
                if i + 1 < h {
                    v -= vert[k];
                }
                if i >= 1 {
                    v += vert[k - w];
                }
                out[k] = v;
            }
        }
    }
}

/// Anisotropic total variation `‖D₊u‖₁`.
pub fn tv_value(op: &DiffOperator, u: &[f64]) -> Result<f64> {
    Ok(op.forward(u)?.iter().map(|v| v.abs()).sum())
}

/// Proximal operator of `λ‖·‖₁`: `sign(x)·max(|x| − λ, 0)` per entry.
pub fn soft_threshold(u: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("threshold {lambda} must be >= 0")));
    }
    Ok(u.iter().map(|&x| shrink(x, lambda)).collect())
}

#[inline]
pub(crate) fn shrink(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}
