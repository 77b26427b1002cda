//! PSNR and SSIM, plus the CSV tables that report them.

use crate::error::{check_len, Error, Result};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// `10·log₁₀(max_val²/mse)`; `+∞` for identical inputs.
pub fn psnr(u: &[f64], reference: &[f64], max_val: f64) -> Result<f64> {
    check_len("PSNR input", reference.len(), u.len())?;
    if !(max_val > 0.0) {
        return Err(Error::invalid(format!("max_val {max_val} must be positive")));
    }
    if u.is_empty() {
        return Err(Error::invalid("PSNR of empty images"));
    }
    let mse = u
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / u.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_val * max_val / mse).log10())
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (k, t) in taps.iter_mut().enumerate() {
        let x = k as f64 - c;
        *t = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Separable Gaussian filtering restricted to fully covered windows.
fn filter_valid(x: &[f64], h: usize, w: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h + 1 - SSIM_WINDOW, w + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            rows[i * ow + j] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * x[i * w + j + k])
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * rows[(i + k) * ow + j])
                .sum();
        }
    }
    out
}

/// Mean structural similarity over all 11×11 Gaussian windows (σ = 1.5)
/// that fit inside the image, with `K₁ = 0.01`, `K₂ = 0.03` and dynamic
/// range 1.
pub fn ssim(u: &[f64], reference: &[f64], shape: (usize, usize)) -> Result<f64> {
    let (h, w) = shape;
    check_len("SSIM input", h * w, u.len())?;
    check_len("SSIM reference", h * w, reference.len())?;
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )));
    }
    let taps = gaussian_taps();
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>();
    let mu_x = filter_valid(u, h, w, &taps);
    let mu_y = filter_valid(reference, h, w, &taps);
    let xx = filter_valid(&prod(u, u), h, w, &taps);
    let yy = filter_valid(&prod(reference, reference), h, w, &taps);
    let xy = filter_valid(&prod(u, reference), h, w, &taps);
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let mut total = 0.0;
    for k in 0..mu_x.len() {
        let (mx, my) = (mu_x[k], mu_y[k]);
        let sxx = xx[k] - mx * mx;
        let syy = yy[k] - my * my;
        let sxy = xy[k] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2))
            / ((mx * mx + my * my + c1) * (sxx + syy + c2));
    }
    Ok(total / mu_x.len() as f64)
}

/// Per-image PSNR/SSIM with their means.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub names: Vec<String>,
    pub psnr_db: Vec<f64>,
    pub ssim: Vec<f64>,
}

impl MetricReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Scores `u` against `reference` (dynamic range 1) and records it.
    pub fn push(&mut self, name: impl Into<String>, u: &[f64], reference: &[f64], shape: (usize, usize)) -> Result<()> {
        let p = psnr(u, reference, 1.0)?;
        let s = ssim(u, reference, shape)?;
        self.names.push(name.into());
        self.psnr_db.push(p);
        self.ssim.push(s);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn mean_psnr(&self) -> f64 {
        mean(&self.psnr_db)
    }

    pub fn mean_ssim(&self) -> f64 {
        mean(&self.ssim)
    }

    /// `file,psnr_db,ssim` per image and a closing `MEAN` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("file,psnr_db,ssim\n");
        for ((n, p), s) in self.names.iter().zip(&self.psnr_db).zip(&self.ssim) {
            out.push_str(&format!("{n},{},{}\n", fmt_metric(*p), fmt_metric(*s)));
        }
        out.push_str(&format!(
            "MEAN,{},{}\n",
            fmt_metric(self.mean_psnr()),
            fmt_metric(self.mean_ssim())
        ));
        out
    }

    /// One row `method,mean_psnr,mean_ssim,n_images`.
    pub fn summary_row(&self, method: &str) -> String {
        format!(
            "{method},{},{},{}\n",
            fmt_metric(self.mean_psnr()),
            fmt_metric(self.mean_ssim()),
            self.len()
        )
    }
}

pub const SUMMARY_HEADER: &str = "method,mean_psnr,mean_ssim,n_images\n";

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn fmt_metric(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}
