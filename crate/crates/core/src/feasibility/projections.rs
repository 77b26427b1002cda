use crate::error::{check_len, Error, Result};
use crate::numerics::{distance, dot, SparseMatrix};

/// Projection onto `{v : ⟨a, v⟩ = b}`.
pub fn project_hyperplane(a: &[f64], b: f64, u: &[f64]) -> Result<Vec<f64>> {
    check_len("hyperplane normal", u.len(), a.len())?;
    let nrm2 = dot(a, a);
    if !(nrm2 > 0.0) {
        return Err(Error::invalid("hyperplane normal vector is zero"));
    }
    let step = (b - dot(a, u)) / nrm2;
    Ok(u.iter().zip(a).map(|(x, ai)| x + step * ai).collect())
}

/// Componentwise clamp to `[lo, hi]`.
pub fn project_box(lo: &[f64], hi: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    check_len("box lower bound", u.len(), lo.len())?;
    check_len("box upper bound", u.len(), hi.len())?;
    if let Some(i) = lo.iter().zip(hi).position(|(l, h)| !(l <= h)) {
        return Err(Error::invalid(format!("box bounds inverted at index {i}")));
    }
    Ok(u.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| x.clamp(l, h))
        .collect())
}

/// In-place clamp of every entry to `[0, 1]`.
pub fn clamp_unit(u: &mut [f64]) {
    for x in u {
        *x = x.clamp(0.0, 1.0);
    }
}

/// Projection onto the closed Euclidean ball `B(center, radius)`.
pub fn project_ball(center: &[f64], radius: f64, w: &[f64]) -> Result<Vec<f64>> {
    check_len("ball center", w.len(), center.len())?;
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("ball radius {radius} must be positive")));
    }
    let mut out = w.to_vec();
    project_ball_in_place(center, radius, &mut out);
    Ok(out)
}

pub(crate) fn project_ball_in_place(center: &[f64], radius: f64, w: &mut [f64]) {
    let dist = distance(w, center);
    if dist > radius {
        let s = radius / dist;
        for (x, c) in w.iter_mut().zip(center) {
            *x = c + s * (*x - c);
        }
    }
}

/// One cyclic pass of hyperplane projections over the rows of `A`, in order.
pub fn kaczmarz_sweep(a: &SparseMatrix, d: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    check_len("kaczmarz data", a.rows(), d.len())?;
    check_len("kaczmarz iterate", a.cols(), u.len())?;
    let norms2: Vec<f64> = (0..a.rows()).map(|r| a.row_norm(r).powi(2)).collect();
    if let Some(r) = norms2.iter().position(|&n| n == 0.0) {
        return Err(Error::invalid(format!("row {r} of the system is zero")));
    }
    let mut out = u.to_vec();
    for r in 0..a.rows() {
        let step = (d[r] - a.row_dot(r, &out)) / norms2[r];
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            out[c] += step * v;
        }
    }
    Ok(out)
}
