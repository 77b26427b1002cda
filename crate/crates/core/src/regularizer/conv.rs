use crate::error::{check_len, Error, Result};

/// One convolution: kernel laid out `(out_ch, in_ch, kh, kw)` row-major and
/// one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub out_ch: usize,
    pub in_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn new(
        out_ch: usize,
        in_ch: usize,
        kh: usize,
        kw: usize,
        kernel: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if out_ch == 0 || in_ch == 0 {
            return Err(Error::invalid("convolution needs at least one channel"));
        }
        if kh.is_multiple_of(2) || kw.is_multiple_of(2) {
            return Err(Error::invalid(format!("kernel {kh}x{kw} must have odd sides")));
        }
        check_len("kernel length", out_ch * in_ch * kh * kw, kernel.len())?;
        check_len("bias length", out_ch, bias.len())?;
        if let Some(index) = kernel.iter().chain(&bias).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ConvLayer {
            out_ch,
            in_ch,
            kh,
            kw,
            kernel,
            bias,
        })
    }

    pub fn zeros(out_ch: usize, in_ch: usize, kh: usize, kw: usize) -> Self {
        ConvLayer {
            out_ch,
            in_ch,
            kh,
            kw,
            kernel: vec![0.0; out_ch * in_ch * kh * kw],
            bias: vec![0.0; out_ch],
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }

    #[inline]
    fn tap(&self, o: usize, c: usize, ki: usize, kj: usize) -> f64 {
        self.kernel[((o * self.in_ch + c) * self.kh + ki) * self.kw + kj]
    }
}

/// Row range `i` and column range `j` for which `(i + di, j + dj)` stays
/// inside an `h × w` grid.
#[inline]
fn valid_span(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d.max(0)).max(lo as isize) as usize;
    (lo, hi.min(n))
}

/// Same-size cross-correlation with zero padding and stride 1. `x` holds
/// `in_ch` planes of `h × w` pixels, the result `out_ch` planes.
pub fn conv2d(layer: &ConvLayer, x: &[f64], h: usize, w: usize) -> Result<Vec<f64>> {
    check_len("convolution input", layer.in_ch * h * w, x.len())?;
    let mut out = vec![0.0; layer.out_ch * h * w];
    conv2d_into(layer, x, h, w, &mut out);
    Ok(out)
}

pub(crate) fn conv2d_into(layer: &ConvLayer, x: &[f64], h: usize, w: usize, out: &mut [f64]) {
    let plane = h * w;
    let (ch, cw) = ((layer.kh / 2) as isize, (layer.kw / 2) as isize);
    for o in 0..layer.out_ch {
        let dst = &mut out[o * plane..(o + 1) * plane];
        dst.fill(layer.bias[o]);
        for c in 0..layer.in_ch {
            let src = &x[c * plane..(c + 1) * plane];
            for ki in 0..layer.kh {
                let di = ki as isize - ch;
                let (i0, i1) = valid_span(h, di);
                for kj in 0..layer.kw {
                    let wt = layer.tap(o, c, ki, kj);
                    if wt == 0.0 {
                        continue;
                    }
                    let dj = kj as isize - cw;
                    let (j0, j1) = valid_span(w, dj);
                    let sj0 = (j0 as isize + dj) as usize;
                    for i in i0..i1 {
                        let si = (i as isize + di) as usize;
                        let d = &mut dst[i * w + j0..i * w + j1];
                        let s = &src[si * w + sj0..si * w + sj0 + (j1 - j0)];
                        for (a, b) in d.iter_mut().zip(s) {
                            *a += wt * b;
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of the linear part of [`conv2d`]: maps output cotangents `g`
/// (`out_ch` planes) to input cotangents (`in_ch` planes).
pub(crate) fn conv2d_transpose_into(
    layer: &ConvLayer,
    g: &[f64],
    h: usize,
    w: usize,
    out: &mut [f64],
) {
    let plane = h * w;
    let (ch, cw) = ((layer.kh / 2) as isize, (layer.kw / 2) as isize);
    out.fill(0.0);
    for c in 0..layer.in_ch {
        let dst = &mut out[c * plane..(c + 1) * plane];
        for o in 0..layer.out_ch {
            let src = &g[o * plane..(o + 1) * plane];
            for ki in 0..layer.kh {
                let di = ki as isize - ch;
                let (i0, i1) = valid_span(h, di);
                for kj in 0..layer.kw {
                    let wt = layer.tap(o, c, ki, kj);
                    if wt == 0.0 {
                        continue;
                    }
                    let dj = kj as isize - cw;
                    let (j0, j1) = valid_span(w, dj);
                    let sj0 = (j0 as isize + dj) as usize;
                    for i in i0..i1 {
                        let si = (i as isize + di) as usize;
                        let s = &src[i * w + j0..i * w + j1];
                        let d = &mut dst[si * w + sj0..si * w + sj0 + (j1 - j0)];
                        for (a, b) in d.iter_mut().zip(s) {
                            *a += wt * b;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates kernel and bias cotangents of one convolution given its input
/// `x` and output cotangent `g`.
pub(crate) fn conv2d_weight_grad(
    layer: &ConvLayer,
    x: &[f64],
    g: &[f64],
    h: usize,
    w: usize,
    dkernel: &mut [f64],
    dbias: &mut [f64],
) {
    let plane = h * w;
    let (ch, cw) = ((layer.kh / 2) as isize, (layer.kw / 2) as isize);
    for o in 0..layer.out_ch {
        let go = &g[o * plane..(o + 1) * plane];
        dbias[o] += go.iter().sum::<f64>();
        for c in 0..layer.in_ch {
            let src = &x[c * plane..(c + 1) * plane];
            for ki in 0..layer.kh {
                let di = ki as isize - ch;
                let (i0, i1) = valid_span(h, di);
                for kj in 0..layer.kw {
                    let dj = kj as isize - cw;
                    let (j0, j1) = valid_span(w, dj);
                    let sj0 = (j0 as isize + dj) as usize;
                    let mut acc = 0.0;
                    for i in i0..i1 {
                        let si = (i as isize + di) as usize;
                        let a = &go[i * w + j0..i * w + j1];
                        let b = &src[si * w + sj0..si * w + sj0 + (j1 - j0)];
                        acc += a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
                    }
                    dkernel[((o * layer.in_ch + c) * layer.kh + ki) * layer.kw + kj] += acc;
                }
            }
        }
    }
}

/// `φ_a(x) = x` for `x ≥ 0` and `a·x` otherwise.
#[inline]
pub fn leaky_relu(a: f64, x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        a * x
    }
}

/// Derivative used in backpropagation; exactly-zero inputs take slope `a`.
#[inline]
pub(crate) fn leaky_relu_slope(a: f64, x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, Prng};

    fn naive(layer: &ConvLayer, x: &[f64], h: usize, w: usize) -> Vec<f64> {
        let mut out = vec![0.0; layer.out_ch * h * w];
        let (ch, cw) = ((layer.kh / 2) as isize, (layer.kw / 2) as isize);
        for o in 0..layer.out_ch {
            for i in 0..h as isize {
                for j in 0..w as isize {
                    let mut s = layer.bias[o];
                    for c in 0..layer.in_ch {
                        for ki in 0..layer.kh as isize {
                            for kj in 0..layer.kw as isize {
                                let (si, sj) = (i + ki - ch, j + kj - cw);
                                if si < 0 || sj < 0 || si >= h as isize || sj >= w as isize {
                                    continue;
                                }
                                s += layer.tap(o, c, ki as usize, kj as usize)
                                    * x[c * h * w + si as usize * w + sj as usize];
                            }
                        }
                    }
                    out[o * h * w + i as usize * w + j as usize] = s;
                }
            }
        }
        out
    }

    fn random_layer(rng: &mut Prng, out_ch: usize, in_ch: usize, k: usize) -> ConvLayer {
        let kernel = (0..out_ch * in_ch * k * k).map(|_| rng.gaussian()).collect();
        let bias = (0..out_ch).map(|_| rng.gaussian()).collect();
        ConvLayer::new(out_ch, in_ch, k, k, kernel, bias).unwrap()
    }

    #[test]
    fn unit_one_by_one_kernel_is_identity() {
        let layer = ConvLayer::new(1, 1, 1, 1, vec![1.0], vec![0.0]).unwrap();
        let x: Vec<f64> = (0..12).map(|v| v as f64 * 0.3).collect();
        assert_eq!(conv2d(&layer, &x, 3, 4).unwrap(), x);
    }

    #[test]
    fn zero_kernel_gives_bias() {
        let mut layer = ConvLayer::zeros(1, 1, 3, 3);
        layer.bias[0] = 0.25;
        assert_eq!(conv2d(&layer, &[7.0; 9], 3, 3).unwrap(), vec![0.25; 9]);
    }

    #[test]
    fn matches_naive_loop() {
        let mut rng = Prng::new(5);
        let layer = random_layer(&mut rng, 1, 1, 3);
        let x: Vec<f64> = (0..25).map(|_| rng.gaussian()).collect();
        let fast = conv2d(&layer, &x, 5, 5).unwrap();
        for (a, b) in fast.iter().zip(naive(&layer, &x, 5, 5)) {
            assert!((a - b).abs() < 1e-12);
        }
        let layer = random_layer(&mut rng, 3, 2, 5);
        let x: Vec<f64> = (0..2 * 4 * 6).map(|_| rng.gaussian()).collect();
        let fast = conv2d(&layer, &x, 4, 6).unwrap();
        for (a, b) in fast.iter().zip(naive(&layer, &x, 4, 6)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let mut rng = Prng::new(6);
        let (h, w) = (5, 3);
        let mut layer = random_layer(&mut rng, 3, 2, 3);
        layer.bias.fill(0.0);
        let x: Vec<f64> = (0..2 * h * w).map(|_| rng.gaussian()).collect();
        let g: Vec<f64> = (0..3 * h * w).map(|_| rng.gaussian()).collect();
        let mut back = vec![0.0; x.len()];
        conv2d_transpose_into(&layer, &g, h, w, &mut back);
        let lhs = dot(&conv2d(&layer, &x, h, w).unwrap(), &g);
        assert!((lhs - dot(&x, &back)).abs() < 1e-12);
    }

    #[test]
    fn weight_grad_is_linear_functional() {
        // ⟨conv(x; K, b), g⟩ is linear in (K, b), so its gradient reproduces
        // the value exactly.
        let mut rng = Prng::new(7);
        let (h, w) = (4, 4);
        let layer = random_layer(&mut rng, 2, 3, 3);
        let x: Vec<f64> = (0..3 * h * w).map(|_| rng.gaussian()).collect();
        let g: Vec<f64> = (0..2 * h * w).map(|_| rng.gaussian()).collect();
        let mut dk = vec![0.0; layer.kernel.len()];
        let mut db = vec![0.0; 2];
        conv2d_weight_grad(&layer, &x, &g, h, w, &mut dk, &mut db);
        let value = dot(&conv2d(&layer, &x, h, w).unwrap(), &g);
        let reproduced = dot(&dk, &layer.kernel) + dot(&db, &layer.bias);
        assert!((value - reproduced).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ConvLayer::new(1, 1, 2, 3, vec![0.0; 6], vec![0.0]).is_err());
        assert!(ConvLayer::new(1, 1, 3, 3, vec![0.0; 8], vec![0.0]).is_err());
        assert!(ConvLayer::new(2, 1, 1, 1, vec![0.0; 2], vec![0.0]).is_err());
        let layer = ConvLayer::zeros(1, 2, 3, 3);
        assert!(conv2d(&layer, &[0.0; 9], 3, 3).is_err());
    }

    #[test]
    fn leaky_relu_examples() {
        assert_eq!(leaky_relu(0.1, 2.0), 2.0);
        assert!((leaky_relu(0.1, -2.0) + 0.2).abs() < 1e-15);
        assert_eq!(leaky_relu(0.1, 0.0), 0.0);
        assert_eq!(leaky_relu_slope(0.1, 0.0), 0.1);
    }
}
