use crate::error::{check_len, Error, Result};
use crate::numerics::{Prng, SparseMatrix};

/// How the measurement noise standard deviation is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// Each ray gets noise proportional to its own clean value.
    #[default]
    PerRay,
    /// All rays share one standard deviation: `noise_frac` times the mean
    /// absolute clean value.
    Global,
}

impl std::str::FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-ray" => Ok(NoiseModel::PerRay),
            "global" => Ok(NoiseModel::Global),
            _ => Err(Error::invalid(format!("unknown noise model {s:?}"))),
        }
    }
}

impl std::fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseModel::PerRay => "per-ray",
            NoiseModel::Global => "global",
        })
    }
}

/// `d_i = (Au)_i + noise_frac·|(Au)_i|·g_i` with `g_i` i.i.d. standard normal
/// (per-ray model).
pub fn simulate_measurements(
    a: &SparseMatrix,
    u: &[f64],
    noise_frac: f64,
    rng: &mut Prng,
) -> Result<Vec<f64>> {
    simulate_measurements_with(a, u, noise_frac, NoiseModel::PerRay, rng)
}

pub fn simulate_measurements_with(
    a: &SparseMatrix,
    u: &[f64],
    noise_frac: f64,
    model: NoiseModel,
    rng: &mut Prng,
) -> Result<Vec<f64>> {
    if !(noise_frac >= 0.0 && noise_frac.is_finite()) {
        return Err(Error::invalid(format!("noise fraction {noise_frac} must be >= 0")));
    }
    let clean = a.spmv(u)?;
    if noise_frac == 0.0 {
        return Ok(clean);
    }
    let global_std = match model {
        NoiseModel::PerRay => 0.0,
        NoiseModel::Global => {
            noise_frac * clean.iter().map(|v| v.abs()).sum::<f64>() / clean.len().max(1) as f64
        }
    };
    Ok(clean
        .into_iter()
        .map(|y| {
            let g = rng.gaussian();
            let std = match model {
                NoiseModel::PerRay => noise_frac * y.abs(),
                NoiseModel::Global => global_std,
            };
            y + std * g
        })
        .collect())
}

/// Row scaling that maps a system to unit-norm rows with zero rows removed.
#[derive(Debug, Clone, PartialEq)]
pub struct RowScaling {
    rows: usize,
    /// Kept row index and its factor `1/‖a_r‖`.
    kept: Vec<(usize, f64)>,
}

impl RowScaling {
    pub fn for_matrix(a: &SparseMatrix) -> Self {
        let kept = (0..a.rows())
            .filter_map(|r| {
                let n = a.row_norm(r);
                (n > 0.0).then(|| (r, 1.0 / n))
            })
            .collect();
        RowScaling {
            rows: a.rows(),
            kept,
        }
    }

    pub fn kept_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.kept.iter().map(|&(r, _)| r)
    }

    pub fn n_kept(&self) -> usize {
        self.kept.len()
    }

    pub fn apply_matrix(&self, a: &SparseMatrix) -> Result<SparseMatrix> {
        check_len("row scaling", self.rows, a.rows())?;
        Ok(a.select_scaled_rows(&self.kept))
    }

    pub fn apply_data(&self, d: &[f64]) -> Result<Vec<f64>> {
        check_len("row scaling data", self.rows, d.len())?;
        Ok(self.kept.iter().map(|&(r, s)| d[r] * s).collect())
    }
}

/// Scales each nonzero row of `A` to unit norm, scales `d` to match, and drops
/// zero rows together with their measurements.
pub fn normalize_rows(a: &SparseMatrix, d: &[f64]) -> Result<(SparseMatrix, Vec<f64>)> {
    let scaling = RowScaling::for_matrix(a);
    Ok((scaling.apply_matrix(a)?, scaling.apply_data(d)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_exact() {
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 2.0, 0.0, 3.0]).unwrap();
        let d = simulate_measurements(&a, &[1.0, 1.0], 0.0, &mut Prng::new(1)).unwrap();
        assert_eq!(d, vec![3.0, 3.0]);
    }

    #[test]
    fn zero_signal_has_zero_noise() {
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 2.0, 0.0, 3.0]).unwrap();
        let d = simulate_measurements(&a, &[0.0, 0.0], 0.5, &mut Prng::new(1)).unwrap();
        assert_eq!(d, vec![0.0, 0.0]);
    }

    #[test]
    fn per_ray_noise_level() {
        let n = 10_000;
        let a = SparseMatrix::identity(n);
        let u = vec![1.0; n];
        let d = simulate_measurements(&a, &u, 0.015, &mut Prng::new(3)).unwrap();
        let diffs: Vec<f64> = d.iter().map(|v| v - 1.0).collect();
        let mean = diffs.iter().sum::<f64>() / n as f64;
        let std = (diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(std > 0.0145 && std < 0.0155, "std {std}");
    }

    #[test]
    fn global_noise_uses_mean_magnitude() {
        let n = 20_000;
        let a = SparseMatrix::identity(n);
        let u: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 2.0 } else { 0.0 }).collect();
        let d =
            simulate_measurements_with(&a, &u, 0.1, NoiseModel::Global, &mut Prng::new(3)).unwrap();
        // zero rays also receive noise under the global model
        let zeros: Vec<f64> = d.iter().skip(1).step_by(2).copied().collect();
        let std = (zeros.iter().map(|x| x * x).sum::<f64>() / zeros.len() as f64).sqrt();
        assert!((std - 0.1).abs() < 0.004, "std {std}");
    }

    #[test]
    fn negative_noise_rejected() {
        let a = SparseMatrix::identity(1);
        assert!(simulate_measurements(&a, &[1.0], -0.1, &mut Prng::new(0)).is_err());
    }

    #[test]
    fn normalizes_three_four_row() {
        let a = SparseMatrix::from_dense(1, 2, &[3.0, 4.0]).unwrap();
        let (an, dn) = normalize_rows(&a, &[10.0]).unwrap();
        assert!((an.values()[0] - 0.6).abs() < 1e-15);
        assert!((an.values()[1] - 0.8).abs() < 1e-15);
        assert!((dn[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unit_rows_unchanged() {
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let (an, dn) = normalize_rows(&a, &[0.5, 2.0]).unwrap();
        assert_eq!(an, a);
        assert_eq!(dn, vec![0.5, 2.0]);
    }

    #[test]
    fn zero_row_removed_and_residual_preserved() {
        let mut rng = Prng::new(9);
        let dense: Vec<f64> = (0..4 * 5)
            .map(|k| if k / 5 == 2 { 0.0 } else { rng.gaussian() })
            .collect();
        let a = SparseMatrix::from_dense(4, 5, &dense).unwrap();
        let u_true: Vec<f64> = (0..5).map(|_| rng.gaussian()).collect();
        let d = a.spmv(&u_true).unwrap();
        let (an, dn) = normalize_rows(&a, &d).unwrap();
        assert_eq!(an.rows(), 3);
        let resid: Vec<f64> = an
            .spmv(&u_true)
            .unwrap()
            .iter()
            .zip(&dn)
            .map(|(x, y)| x - y)
            .collect();
        assert!(resid.iter().all(|r| r.abs() < 1e-12));
        for r in 0..an.rows() {
            assert!((an.row_norm(r) - 1.0).abs() < 1e-12);
        }
    }
}
