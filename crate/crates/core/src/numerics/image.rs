use crate::error::{check_len, Error, Result};

fn first_non_finite(data: &[f64]) -> Option<usize> {
    data.iter().position(|v| !v.is_finite())
}

/// Row-major single-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_len("image data", height * width, data.len())?;
        if let Some(index) = first_non_finite(&data) {
            return Err(Error::NonFinite { index });
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Image {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

/// Stacked ray measurements, one row per projection angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    n_angles: usize,
    n_beams: usize,
    data: Vec<f64>,
}

impl Sinogram {
    pub fn new(n_angles: usize, n_beams: usize, data: Vec<f64>) -> Result<Self> {
        check_len("sinogram data", n_angles * n_beams, data.len())?;
        if let Some(index) = first_non_finite(&data) {
            return Err(Error::NonFinite { index });
        }
        Ok(Sinogram {
            n_angles,
            n_beams,
            data,
        })
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_beams(&self) -> usize {
        self.n_beams
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// CSV text with one line per angle. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 24);
        for row in self.data.chunks(self.n_beams.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut data = Vec::new();
        let mut n_beams = None;
        let mut n_angles = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        Error::Malformed(format!("line {}: bad number {t:?}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            match n_beams {
                None => n_beams = Some(row.len()),
                Some(n) if n != row.len() => {
                    return Err(Error::Malformed(format!(
                        "line {}: expected {n} values, found {}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            data.extend(row);
            n_angles += 1;
        }
        Sinogram::new(n_angles, n_beams.unwrap_or(0), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_bad_length_and_nan() {
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(matches!(
            Image::new(1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn sinogram_csv_round_trip() {
        let s = Sinogram::new(2, 3, vec![0.1, -2.5e-17, 3.0, 1.0 / 3.0, 0.0, 7.25]).unwrap();
        let back = Sinogram::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn sinogram_csv_ragged_rejected() {
        assert!(Sinogram::from_csv("1,2\n3\n").is_err());
    }
}
