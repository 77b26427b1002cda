use std::fmt;
use std::str::FromStr;

use super::conv::{
    conv2d_into, conv2d_transpose_into, conv2d_weight_grad, leaky_relu, leaky_relu_slope,
    ConvLayer,
};
use crate::error::{check_len, Error, Result};
use crate::numerics::Prng;

/// Where the leaky ReLU sits relative to the convolutions of the residual
/// branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivationPlacement {
    /// `conv_L ∘ φ ∘ … ∘ φ ∘ conv_1`: an activation before every convolution
    /// except the first.
    #[default]
    Interior,
    /// An activation before every convolution, the first included.
    EveryConv,
}

impl FromStr for ActivationPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(ActivationPlacement::Interior),
            "every-conv" => Ok(ActivationPlacement::EveryConv),
            other => Err(Error::invalid(format!(
                "unknown activation placement '{other}' (expected interior or every-conv)"
            ))),
        }
    }
}

impl fmt::Display for ActivationPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivationPlacement::Interior => "interior",
            ActivationPlacement::EveryConv => "every-conv",
        })
    }
}

/// Parameters Θ of the residual regularizer `R_Θ(u) = u + branch(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    layers: Vec<ConvLayer>,
    slope: f64,
    placement: ActivationPlacement,
}

/// Cotangents with the same layout as [`NetworkWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGradient {
    pub kernels: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Intermediate values of one forward pass, enough to run both VJPs.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of each convolution (after the preceding activation).
    inputs: Vec<Vec<f64>>,
    /// Raw input image.
    image: Vec<f64>,
    /// Output of each convolution before any activation.
    preacts: Vec<Vec<f64>>,
}

pub const DESK_WIDTH: usize = 16;
pub const DESK_SLOPE: f64 = 0.01;
pub const INIT_SCALE: f64 = 0.1;

impl NetworkWeights {
    pub fn new(layers: Vec<ConvLayer>, slope: f64, placement: ActivationPlacement) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        if !(slope > 0.0 && slope < 1.0) {
            return Err(Error::invalid(format!("leaky slope {slope} outside (0, 1)")));
        }
        if layers[0].in_ch != 1 || layers[layers.len() - 1].out_ch != 1 {
            return Err(Error::invalid("network must map one channel to one channel"));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_ch != pair[1].in_ch {
                return Err(Error::invalid(format!(
                    "layer {k} emits {} channels but layer {} takes {}",
                    pair[0].out_ch,
                    k + 1,
                    pair[1].in_ch
                )));
            }
        }
        Ok(NetworkWeights {
            layers,
            slope,
            placement,
        })
    }

    /// All-zero kernels and biases for the channel chain `1 → width → … → 1`
    /// with `n_convs` convolutions.
    pub fn zeros(width: usize, n_convs: usize, kernel: usize, slope: f64) -> Result<Self> {
        if kernel.is_multiple_of(2) {
            return Err(Error::invalid(format!("kernel side {kernel} must be odd")));
        }
        let chain = channel_chain(width, n_convs)?;
        let layers = chain
            .windows(2)
            .map(|p| ConvLayer::zeros(p[1], p[0], kernel, kernel))
            .collect();
        NetworkWeights::new(layers, slope, ActivationPlacement::Interior)
    }

    /// Kernels uniform in `±1/√fan_in` times [`INIT_SCALE`], zero biases.
    pub fn init(
        width: usize,
        n_convs: usize,
        kernel: usize,
        slope: f64,
        rng: &mut Prng,
    ) -> Result<Self> {
        let mut net = NetworkWeights::zeros(width, n_convs, kernel, slope)?;
        for layer in &mut net.layers {
            let bound = 1.0 / ((layer.in_ch * layer.kh * layer.kw) as f64).sqrt();
            for k in &mut layer.kernel {
                *k = INIT_SCALE * rng.uniform_range(-bound, bound);
            }
        }
        Ok(net)
    }

    /// Four 3×3 convolutions of width [`DESK_WIDTH`], slope [`DESK_SLOPE`].
    pub fn desk_default(rng: &mut Prng) -> Self {
        NetworkWeights::init(DESK_WIDTH, 4, 3, DESK_SLOPE, rng).expect("valid desk architecture")
    }

    pub fn with_placement(mut self, placement: ActivationPlacement) -> Self {
        self.placement = placement;
        self
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn placement(&self) -> ActivationPlacement {
        self.placement
    }

    /// Number ℓ of convolutions in the residual branch.
    pub fn n_res_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(ConvLayer::parameter_count).sum()
    }

    /// Flat views of every kernel and bias, in layer order.
    pub fn param_slices_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.kernel, &mut l.bias])
    }

    pub fn param_slices(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.layers.iter().flat_map(|l| [&l.kernel, &l.bias])
    }

    /// Multiplies each kernel and bias by `c^{1/ℓ}`. With zero biases (or a
    /// single layer) this scales the branch output by exactly `c`, since the
    /// leaky ReLU is positively homogeneous.
    pub fn scale_branch(&self, c: f64) -> NetworkWeights {
        let per_layer = c.powf(1.0 / self.n_res_layers() as f64);
        let mut out = self.clone();
        for p in out.param_slices_mut() {
            p.iter_mut().for_each(|v| *v *= per_layer);
        }
        out
    }

    fn activation_before(&self, layer: usize) -> bool {
        layer > 0 || self.placement == ActivationPlacement::EveryConv
    }

    fn check_image(&self, u: &[f64], h: usize, w: usize) -> Result<()> {
        if h == 0 || w == 0 {
            return Err(Error::invalid("image must be nonempty"));
        }
        check_len("regularizer input", h * w, u.len())
    }

    /// `R_Θ(u) = u + branch(u)` on an `h × w` image.
    pub fn forward(&self, u: &[f64], h: usize, w: usize) -> Result<Vec<f64>> {
        Ok(self.forward_cached(u, h, w)?.0)
    }

    pub fn forward_cached(&self, u: &[f64], h: usize, w: usize) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_image(u, h, w)?;
        let plane = h * w;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let src = if k == 0 { u } else { &preacts[k - 1] };
            let input: Vec<f64> = if self.activation_before(k) {
                src.iter().map(|&x| leaky_relu(self.slope, x)).collect()
            } else {
                src.to_vec()
            };
            let mut z = vec![0.0; layer.out_ch * plane];
            conv2d_into(layer, &input, h, w, &mut z);
            inputs.push(input);
            preacts.push(z);
        }
        let out = u
            .iter()
            .zip(preacts.last().expect("nonempty"))
            .map(|(a, b)| a + b)
            .collect();
        Ok((
            out,
            ForwardCache {
                inputs,
                image: u.to_vec(),
                preacts,
            },
        ))
    }

    /// Shared backward sweep. Returns the input cotangent and, when
    /// requested, the weight cotangents.
    fn backward(
        &self,
        cache: &ForwardCache,
        v: &[f64],
        h: usize,
        w: usize,
        want_weights: bool,
    ) -> (Vec<f64>, Option<WeightGradient>) {
        let plane = h * w;
        let mut grad = want_weights.then(|| self.zero_gradient());
        let mut g = v.to_vec();
        let mut upstream = Vec::new();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            if let Some(grad) = grad.as_mut() {
                conv2d_weight_grad(
                    layer,
                    &cache.inputs[k],
                    &g,
                    h,
                    w,
                    &mut grad.kernels[k],
                    &mut grad.biases[k],
                );
            }
            upstream.resize(layer.in_ch * plane, 0.0);
            conv2d_transpose_into(layer, &g, h, w, &mut upstream);
            if self.activation_before(k) {
                let pre = if k == 0 { &cache.image } else { &cache.preacts[k - 1] };
                for (x, &z) in upstream.iter_mut().zip(pre) {
                    *x *= leaky_relu_slope(self.slope, z);
                }
            }
            std::mem::swap(&mut g, &mut upstream);
        }
        for (a, b) in g.iter_mut().zip(v) {
            *a += b;
        }
        (g, grad)
    }

    /// `(∂R_Θ/∂u)ᵀ v` at `u`.
    pub fn vjp_input(&self, u: &[f64], v: &[f64], h: usize, w: usize) -> Result<Vec<f64>> {
        let (_, cache) = self.forward_cached(u, h, w)?;
        self.vjp_input_cached(&cache, v, h, w)
    }

    pub fn vjp_input_cached(&self, cache: &ForwardCache, v: &[f64], h: usize, w: usize) -> Result<Vec<f64>> {
        check_len("input cotangent", h * w, v.len())?;
        check_len("cached image", h * w, cache.image.len())?;
        Ok(self.backward(cache, v, h, w, false).0)
    }

    /// `(∂R_Θ(u)/∂Θ)ᵀ v`.
    pub fn vjp_weights(&self, u: &[f64], v: &[f64], h: usize, w: usize) -> Result<WeightGradient> {
        let (_, cache) = self.forward_cached(u, h, w)?;
        self.vjp_weights_cached(&cache, v, h, w)
    }

    pub fn vjp_weights_cached(
        &self,
        cache: &ForwardCache,
        v: &[f64],
        h: usize,
        w: usize,
    ) -> Result<WeightGradient> {
        check_len("weight cotangent", h * w, v.len())?;
        check_len("cached image", h * w, cache.image.len())?;
        Ok(self.backward(cache, v, h, w, true).1.expect("requested"))
    }

    pub fn zero_gradient(&self) -> WeightGradient {
        WeightGradient {
            kernels: self.layers.iter().map(|l| vec![0.0; l.kernel.len()]).collect(),
            biases: self.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }
}

impl WeightGradient {
    pub fn slices(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.kernels
            .iter()
            .zip(&self.biases)
            .flat_map(|(k, b)| [k, b])
    }

    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.kernels
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(k, b)| [k, b])
    }

    /// Same number of layers and the same length in every slot.
    pub fn matches(&self, weights: &NetworkWeights) -> bool {
        self.kernels.len() == weights.layers.len()
            && self.biases.len() == weights.layers.len()
            && self.slices().zip(weights.param_slices()).all(|(a, b)| a.len() == b.len())
    }

    pub fn add_scaled(&mut self, other: &WeightGradient, c: f64) {
        for (a, b) in self.slices_mut().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += c * y;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().flat_map(|s| s.iter().copied()).collect()
    }

    pub fn dot(&self, other: &WeightGradient) -> f64 {
        self.slices()
            .zip(other.slices())
            .map(|(a, b)| crate::numerics::dot(a, b))
            .sum()
    }
}

/// Channel chain `[1, width, …, width, 1]` of `n_convs` convolutions.
pub fn channel_chain(width: usize, n_convs: usize) -> Result<Vec<usize>> {
    if n_convs == 0 {
        return Err(Error::invalid("need at least one convolution"));
    }
    if width == 0 && n_convs > 1 {
        return Err(Error::invalid("hidden width must be positive"));
    }
    let mut chain = vec![1];
    chain.extend(std::iter::repeat_n(width, n_convs - 1));
    chain.push(1);
    Ok(chain)
}

/// Kernel plus bias parameters of the chain `1 → width → … → 1` with
/// `n_convs` square `kernel × kernel` convolutions.
pub fn architecture_parameter_count(width: usize, n_convs: usize, kernel: usize) -> Result<usize> {
    let chain = channel_chain(width, n_convs)?;
    Ok(chain
        .windows(2)
        .map(|p| p[0] * p[1] * kernel * kernel + p[1])
        .sum())
}

/// Parameter count of the regularizer architecture (four 3×3 convolutions)
/// at the given hidden width.
pub fn regularizer_parameter_count(width: usize) -> usize {
    architecture_parameter_count(width, 4, 3).expect("four convolutions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dot;

    fn random_net(rng: &mut Prng, width: usize, n_convs: usize, placement: ActivationPlacement) -> NetworkWeights {
        let mut net = NetworkWeights::zeros(width, n_convs, 3, 0.1).unwrap().with_placement(placement);
        for p in net.param_slices_mut() {
            p.iter_mut().for_each(|v| *v = 0.5 * rng.gaussian());
        }
        net
    }

    #[test]
    fn zero_weights_are_identity() {
        let net = NetworkWeights::zeros(4, 4, 3, 0.01).unwrap();
        let u: Vec<f64> = (0..20).map(|k| (k as f64).sin()).collect();
        assert_eq!(net.forward(&u, 4, 5).unwrap(), u);
        let v: Vec<f64> = (0..20).map(|k| (k as f64).cos()).collect();
        assert_eq!(net.vjp_input(&u, &v, 4, 5).unwrap(), v);
        let g = net.vjp_weights(&u, &[0.0; 20], 4, 5).unwrap();
        assert!(g.flatten().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn last_bias_gradient_is_spatial_sum() {
        let mut rng = Prng::new(12);
        let net = random_net(&mut rng, 3, 3, ActivationPlacement::Interior);
        let u: Vec<f64> = (0..16).map(|_| rng.gaussian()).collect();
        let v: Vec<f64> = (0..16).map(|_| rng.gaussian()).collect();
        let g = net.vjp_weights(&u, &v, 4, 4).unwrap();
        let total: f64 = v.iter().sum();
        assert!((g.biases[2][0] - total).abs() < 1e-12);
    }

    #[test]
    fn vjp_input_is_linear_in_cotangent() {
        let mut rng = Prng::new(13);
        let net = random_net(&mut rng, 3, 4, ActivationPlacement::Interior);
        let u: Vec<f64> = (0..25).map(|_| rng.gaussian()).collect();
        let v1: Vec<f64> = (0..25).map(|_| rng.gaussian()).collect();
        let v2: Vec<f64> = (0..25).map(|_| rng.gaussian()).collect();
        let sum: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
        let lhs = net.vjp_input(&u, &sum, 5, 5).unwrap();
        let a = net.vjp_input(&u, &v1, 5, 5).unwrap();
        let b = net.vjp_input(&u, &v2, 5, 5).unwrap();
        for k in 0..25 {
            assert!((lhs[k] - a[k] - b[k]).abs() < 1e-12);
        }
    }

    fn check_input_fd(placement: ActivationPlacement, seed: u64) {
        let mut rng = Prng::new(seed);
        let net = random_net(&mut rng, 3, 4, placement);
        let (h, w) = (4, 5);
        for _ in 0..5 {
            let u: Vec<f64> = (0..h * w).map(|_| rng.gaussian()).collect();
            let v: Vec<f64> = (0..h * w).map(|_| rng.gaussian()).collect();
            let dir: Vec<f64> = (0..h * w).map(|_| rng.gaussian()).collect();
            let step = 1e-5;
            let plus: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let minus: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - step * b).collect();
            let fd = (dot(&net.forward(&plus, h, w).unwrap(), &v)
                - dot(&net.forward(&minus, h, w).unwrap(), &v))
                / (2.0 * step);
            let exact = dot(&net.vjp_input(&u, &v, h, w).unwrap(), &dir);
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
        }
    }

    #[test]
    fn vjp_input_matches_finite_differences() {
        check_input_fd(ActivationPlacement::Interior, 21);
        check_input_fd(ActivationPlacement::EveryConv, 22);
    }

    #[test]
    fn vjp_weights_matches_finite_differences() {
        let mut rng = Prng::new(31);
        let net = random_net(&mut rng, 2, 2, ActivationPlacement::Interior);
        let (h, w) = (4, 4);
        let u: Vec<f64> = (0..16).map(|_| rng.gaussian()).collect();
        let v: Vec<f64> = (0..16).map(|_| rng.gaussian()).collect();
        let grad = net.vjp_weights(&u, &v, h, w).unwrap().flatten();
        let n_params = net.parameter_count();
        assert_eq!(grad.len(), n_params);
        let mut idx = 0;
        for slot in 0..2 * net.n_res_layers() {
            let len = net.param_slices().nth(slot).unwrap().len();
            for k in 0..len {
                let eval = |delta: f64| {
                    let mut p = net.clone();
                    p.param_slices_mut().nth(slot).unwrap()[k] += delta;
                    dot(&p.forward(&u, h, w).unwrap(), &v)
                };
                let fd = (eval(1e-5) - eval(-1e-5)) / 2e-5;
                assert!(
                    (fd - grad[idx]).abs() <= 1e-6 * grad[idx].abs().max(1.0),
                    "param {idx}: {fd} vs {}",
                    grad[idx]
                );
                idx += 1;
            }
        }
    }

    #[test]
    fn scale_branch_scales_residual() {
        let mut rng = Prng::new(41);
        let mut net = random_net(&mut rng, 3, 4, ActivationPlacement::Interior);
        net.layers.iter_mut().for_each(|l| l.bias.fill(0.0));
        let u: Vec<f64> = (0..16).map(|_| rng.gaussian()).collect();
        let base = net.forward(&u, 4, 4).unwrap();
        let scaled = net.scale_branch(0.3).forward(&u, 4, 4).unwrap();
        for k in 0..16 {
            let expect = u[k] + 0.3 * (base[k] - u[k]);
            assert!((scaled[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_inconsistent_chain() {
        let layers = vec![ConvLayer::zeros(2, 1, 3, 3), ConvLayer::zeros(1, 3, 3, 3)];
        assert!(NetworkWeights::new(layers, 0.01, ActivationPlacement::Interior).is_err());
        assert!(NetworkWeights::zeros(4, 2, 3, 1.5).is_err());
        assert!(NetworkWeights::zeros(4, 2, 2, 0.1).is_err());
        let net = NetworkWeights::zeros(2, 2, 3, 0.1).unwrap();
        assert!(net.forward(&[0.0; 5], 2, 3).is_err());
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(regularizer_parameter_count(16), 160 + 2320 * 2 + 145);
        assert_eq!(NetworkWeights::desk_default(&mut Prng::new(1)).parameter_count(), 4945);
        assert_eq!(regularizer_parameter_count(44), 35_773);
        assert_eq!(architecture_parameter_count(42, 8, 3).unwrap(), 96_307);
    }

    #[test]
    fn init_is_small_and_seeded() {
        let a = NetworkWeights::desk_default(&mut Prng::new(9));
        let b = NetworkWeights::desk_default(&mut Prng::new(9));
        assert_eq!(a, b);
        for l in a.layers() {
            let bound = INIT_SCALE / ((l.in_ch * 9) as f64).sqrt();
            assert!(l.kernel.iter().all(|v| v.abs() <= bound));
            assert!(l.bias.iter().all(|&v| v == 0.0));
        }
    }
}
