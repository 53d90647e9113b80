#![allow(dead_code)]

pub mod cli;
pub mod fed;
pub mod reference;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use wser::models::{AcBlock, AcBlockCfg, JointLossCfg, Network, NetworkCfg, WseNet, WseNetCfg, WsrNet, WsrNetCfg};
use wser::nncore::{AvgPool1d, BatchNorm1d, Conv1d, DepthwiseConv1d, GlobalAvgPool, Linear, Module, Param, Relu, Tensor};
use wser::rng::{rng_from_seed, Rng};
use wser::signal::{generate_dataset, ChannelConfig, Dataset, DatasetSpec, ModScheme};

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor of the relative error. Central differences at this
/// step carry round-off near 1e-9 in absolute terms, which matters for
/// entries whose true gradient is zero (biases feeding batch norm).
pub const REL_FLOOR: f64 = 1e-4;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

pub fn randn(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn random_tensor(rng: &mut Rng, c: usize, n: usize, l: usize) -> Tensor<f64> {
    Tensor::from_vec(c, n, l, randn(rng, c * n * l)).unwrap()
}

/// Uniform view over layers for gradient checking.
pub trait GradLayer {
    fn fwd(&mut self, x: &Tensor<f64>) -> Tensor<f64>;
    fn bwd(&mut self, dy: &Tensor<f64>) -> Tensor<f64>;
    fn params(&mut self) -> Vec<&mut Param<f64>>;
}

macro_rules! grad_layer_with_params {
    ($ty:ty, $($params:tt)+) => {
        impl GradLayer for $ty {
            fn fwd(&mut self, x: &Tensor<f64>) -> Tensor<f64> {
                self.forward(x).unwrap()
            }
            fn bwd(&mut self, dy: &Tensor<f64>) -> Tensor<f64> {
                self.backward(dy).unwrap()
            }
            fn params(&mut self) -> Vec<&mut Param<f64>> {
                $($params)+(self)
            }
        }
    };
}

grad_layer_with_params!(Conv1d<f64>, Conv1d::<f64>::params_mut);
grad_layer_with_params!(DepthwiseConv1d<f64>, DepthwiseConv1d::<f64>::params_mut);
grad_layer_with_params!(BatchNorm1d<f64>, BatchNorm1d::<f64>::params_mut);
grad_layer_with_params!(Linear<f64>, Linear::<f64>::params_mut);
grad_layer_with_params!(AcBlock<f64>, AcBlock::<f64>::params_mut);
grad_layer_with_params!(WseNet<f64>, <WseNet<f64> as Module<f64>>::params_mut);
grad_layer_with_params!(WsrNet<f64>, <WsrNet<f64> as Module<f64>>::params_mut);
grad_layer_with_params!(AvgPool1d, no_params);
grad_layer_with_params!(GlobalAvgPool, no_params);

fn no_params<L>(_: &mut L) -> Vec<&mut Param<f64>> {
    Vec::new()
}

impl GradLayer for Relu {
    fn fwd(&mut self, x: &Tensor<f64>) -> Tensor<f64> {
        self.forward(x)
    }
    fn bwd(&mut self, dy: &Tensor<f64>) -> Tensor<f64> {
        self.backward(dy).unwrap()
    }
    fn params(&mut self) -> Vec<&mut Param<f64>> {
        Vec::new()
    }
}

fn weighted_sum(y: &Tensor<f64>, r: &Tensor<f64>) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Max relative error between analytic gradients of `sum(r * layer(x))`
/// (random `r`) and central differences, over inputs and every trainable
/// parameter entry.
pub fn check_layer(layer: &mut impl GradLayer, x: &Tensor<f64>, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let y = layer.fwd(x);
    let (c, n, l) = y.shape();
    let r = random_tensor(&mut rng, c, n, l);
    for p in layer.params() {
        p.zero_grad();
    }
    let dx = layer.bwd(&r);
    let analytic: Vec<Vec<f64>> = layer.params().iter().map(|p| p.grad.clone()).collect();

    let mut worst: f64 = 0.0;
    let mut xp = x.clone();
    for i in 0..x.data().len() {
        let orig = xp.data()[i];
        xp.data_mut()[i] = orig + FD_STEP;
        let up = weighted_sum(&layer.fwd(&xp), &r);
        xp.data_mut()[i] = orig - FD_STEP;
        let down = weighted_sum(&layer.fwd(&xp), &r);
        xp.data_mut()[i] = orig;
        worst = worst.max(rel_err(dx.data()[i], (up - down) / (2.0 * FD_STEP)));
    }
    let counts: Vec<(bool, usize)> = layer.params().iter().map(|p| (p.kind.is_trainable(), p.value.len())).collect();
    for (pi, (trainable, len)) in counts.into_iter().enumerate() {
        if !trainable {
            continue;
        }
        for j in 0..len {
            let orig = layer.params()[pi].value[j];
            layer.params()[pi].value[j] = orig + FD_STEP;
            let up = weighted_sum(&layer.fwd(x), &r);
            layer.params()[pi].value[j] = orig - FD_STEP;
            let down = weighted_sum(&layer.fwd(x), &r);
            layer.params()[pi].value[j] = orig;
            worst = worst.max(rel_err(analytic[pi][j], (up - down) / (2.0 * FD_STEP)));
        }
    }
    worst
}

/// Gives every bias and batch-norm affine parameter a random value so the
/// check does not run at the special point gamma = 1, beta = 0, b = 0.
pub fn randomize_params(params: Vec<&mut Param<f64>>, rng: &mut Rng) {
    for p in params {
        if p.kind.is_trainable() {
            for v in p.value.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *v = match p.kind {
                    wser::nncore::ParamKind::BnGamma => 1.0 + 0.3 * z,
                    wser::nncore::ParamKind::Weight => *v,
                    _ => 0.3 * z,
                };
            }
        }
    }
}

/// Max relative error of the joint-loss gradient of a network against
/// central differences, over every trainable entry.
pub fn check_network(net: &mut Network<f64>, x: &Tensor<f64>, s: &Tensor<f64>, labels: &[usize], loss: &JointLossCfg) -> f64 {
    net.set_training(true);
    net.forward_backward(x, s, labels, loss).unwrap();
    let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();
    let mut worst: f64 = 0.0;
    let meta: Vec<(bool, usize)> = net.params().iter().map(|p| (p.kind.is_trainable(), p.value.len())).collect();
    for (pi, (trainable, len)) in meta.into_iter().enumerate() {
        if !trainable {
            continue;
        }
        for j in 0..len {
            let orig = net.params()[pi].value[j];
            net.params_mut()[pi].value[j] = orig + FD_STEP;
            let up = net.loss(x, s, labels, loss).unwrap().total;
            net.params_mut()[pi].value[j] = orig - FD_STEP;
            let down = net.loss(x, s, labels, loss).unwrap().total;
            net.params_mut()[pi].value[j] = orig;
            worst = worst.max(rel_err(analytic[pi][j], (up - down) / (2.0 * FD_STEP)));
        }
    }
    worst
}

/// Small joint network used by the full-model checks.
pub fn small_joint_cfg(frame_len: usize, num_classes: usize) -> NetworkCfg {
    NetworkCfg {
        enhancer: Some(WseNetCfg { width: 4, depth_blocks: 2, frame_len, residual_output: true }),
        recognizer: WsrNetCfg { channels: vec![4, 6], strides: vec![1, 2], num_classes, fc_bias: false, frame_len },
    }
}

/// Gives a freshly built joint network a nonzero tail so the enhancer is
/// not the identity.
pub fn perturb_tail(net: &mut Network<f64>, rng: &mut Rng) {
    if let Network::Joint(j) = net {
        for v in j.enhancer.tail.weight.value.iter_mut() {
            *v = 0.2 * rng.random_range(-1.0..1.0);
        }
    }
}

pub fn small_dataset(schemes: &[ModScheme], snrs: &[f64], frames: usize, len: usize, seed: u64) -> Dataset {
    generate_dataset(&DatasetSpec {
        schemes: schemes.to_vec(),
        snr_grid_db: snrs.to_vec(),
        frames_per_scheme_per_snr: frames,
        frame_len: len,
        channel: ChannelConfig::default(),
        seed,
    })
    .unwrap()
}

/// One gradient check: name, max relative error, its own tolerance.
pub struct GradCase {
    pub name: &'static str,
    pub err: f64,
    pub tol: f64,
}

fn loss_grad_check(
    logits: &Tensor<f64>,
    f: impl Fn(&Tensor<f64>) -> (f64, Tensor<f64>),
) -> f64 {
    let (_, g) = f(logits);
    let mut worst: f64 = 0.0;
    let mut z = logits.clone();
    for i in 0..z.data().len() {
        let orig = z.data()[i];
        z.data_mut()[i] = orig + FD_STEP;
        let up = f(&z).0;
        z.data_mut()[i] = orig - FD_STEP;
        let down = f(&z).0;
        z.data_mut()[i] = orig;
        worst = worst.max(rel_err(g.data()[i], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

/// Finite-difference checks of every layer type, the block, both
/// sub-networks and the joint loss of the composed network.
pub fn gradient_suite() -> Vec<GradCase> {
    use wser::models::AcBlockCfg;
    use wser::nncore::{mse_loss, softmax_cross_entropy};
    let mut rng = rng_from_seed(2024);
    let mut cases = Vec::new();
    let mut push = |name, err, tol| cases.push(GradCase { name, err, tol });

    let x = random_tensor(&mut rng, 3, 2, 10);
    let mut conv = Conv1d::<f64>::new("c", 3, 4, 3, 1, true, &mut rng).unwrap();
    randomize_params(conv.params_mut(), &mut rng);
    push("conv1d k3 s1", check_layer(&mut conv, &x, 1), 1e-6);
    let mut conv = Conv1d::<f64>::new("c", 3, 2, 5, 2, true, &mut rng).unwrap();
    randomize_params(conv.params_mut(), &mut rng);
    push("conv1d k5 s2", check_layer(&mut conv, &x, 2), 1e-6);
    let mut pw = Conv1d::<f64>::pointwise("p", 3, 5, true, &mut rng).unwrap();
    randomize_params(pw.params_mut(), &mut rng);
    push("pointwise", check_layer(&mut pw, &x, 3), 1e-6);
    let mut dw = DepthwiseConv1d::<f64>::new("d", 3, 3, 1, true, &mut rng).unwrap();
    randomize_params(dw.params_mut(), &mut rng);
    push("depthwise s1", check_layer(&mut dw, &x, 4), 1e-6);
    let mut dw = DepthwiseConv1d::<f64>::new("d", 3, 3, 2, true, &mut rng).unwrap();
    randomize_params(dw.params_mut(), &mut rng);
    push("depthwise s2", check_layer(&mut dw, &x, 5), 1e-6);

    let xb = random_tensor(&mut rng, 4, 8, 16);
    let mut bn = BatchNorm1d::<f64>::new("bn", 4);
    randomize_params(bn.params_mut(), &mut rng);
    push("batchnorm train", check_layer(&mut bn, &xb, 6), 1e-5);
    bn.running_mean.value = randn(&mut rng, 4);
    bn.running_var.value = vec![0.5, 1.5, 2.0, 0.8];
    bn.training = false;
    push("batchnorm eval", check_layer(&mut bn, &xb, 7), 1e-6);

    let xf = random_tensor(&mut rng, 6, 3, 1);
    let mut lin = Linear::<f64>::new("fc", 6, 4, true, &mut rng);
    randomize_params(lin.params_mut(), &mut rng);
    push("linear", check_layer(&mut lin, &xf, 8), 1e-6);
    push("relu", check_layer(&mut Relu::default(), &x, 9), 1e-6);
    push("avgpool", check_layer(&mut AvgPool1d::new(2, 2).unwrap(), &x, 10), 1e-6);
    push("global avgpool", check_layer(&mut GlobalAvgPool::default(), &x, 11), 1e-6);

    let logits = random_tensor(&mut rng, 4, 3, 1);
    push("softmax cross-entropy", loss_grad_check(&logits, |z| softmax_cross_entropy(z, &[0, 3, 2]).unwrap()), 1e-6);
    let target = random_tensor(&mut rng, 2, 3, 5);
    let pred = random_tensor(&mut rng, 2, 3, 5);
    push("mse", loss_grad_check(&pred, |z| mse_loss(z, &target).unwrap()), 1e-8);

    let xa = random_tensor(&mut rng, 4, 3, 12);
    for (name, stride) in [("acblock s1", 1), ("acblock s2", 2)] {
        let mut block = AcBlock::<f64>::new("b", AcBlockCfg::new(4, 6, stride), &mut rng).unwrap();
        randomize_params(block.params_mut(), &mut rng);
        push(name, check_layer(&mut block, &xa, 12 + stride as u64), 1e-5);
    }

    let xi = random_tensor(&mut rng, 2, 2, 16);
    let mut wse = WseNet::<f64>::new(WseNetCfg { width: 4, depth_blocks: 2, frame_len: 16, residual_output: true }, &mut rng).unwrap();
    randomize_params(Module::params_mut(&mut wse), &mut rng);
    push("enhancer", check_layer(&mut wse, &xi, 20), 1e-5);
    let mut wsr = WsrNet::<f64>::new(
        WsrNetCfg { channels: vec![4, 6], strides: vec![1, 2], num_classes: 3, fc_bias: false, frame_len: 16 },
        &mut rng,
    )
    .unwrap();
    randomize_params(Module::params_mut(&mut wsr), &mut rng);
    push("recognizer", check_layer(&mut wsr, &xi, 21), 1e-5);

    let mut net = small_joint_cfg(16, 3).build::<f64>(5).unwrap();
    perturb_tail(&mut net, &mut rng);
    randomize_params(net.params_mut(), &mut rng);
    let s = random_tensor(&mut rng, 2, 2, 16);
    push("joint loss (lambda 0.3)", check_network(&mut net, &xi, &s, &[2, 0], &JointLossCfg { lambda: 0.3 }), 1e-4);
    cases
}

/// Largest deviation between `AcBlock::forward` and the hand-composed
/// reference over `cases` random configurations (random affine BN
/// parameters, strides 1 and 2, even lengths).
pub fn acblock_oracle(cases: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let c_in = rng.random_range(1..=6);
        let c_out = rng.random_range(1..=6);
        let stride = rng.random_range(1..=2);
        let kernel = [1, 3, 5][rng.random_range(0..3)];
        let batch = rng.random_range(2..=4);
        let len = 2 * rng.random_range(2..=10);
        let cfg = AcBlockCfg { c_in, c_out, kernel, stride };
        let mut block = AcBlock::<f64>::new(&format!("b{case}"), cfg, &mut rng).unwrap();
        randomize_params(block.params_mut(), &mut rng);
        let x = random_tensor(&mut rng, c_in, batch, len);
        let got = reference::to_nd(&block.forward(&x).unwrap());
        let want = reference::ac_block(&block, &reference::to_nd(&x));
        worst = worst.max(reference::max_abs_diff(&got, &want));
    }
    worst
}

/// Worst deviation of the RRC self-convolution from a unit impulse at the
/// symbol instants, computed by direct convolution.
pub fn rrc_zero_isi_error(rolloff: f64, span: usize, sps: usize) -> f64 {
    let h = wser::signal::rrc_taps(rolloff, span, sps).unwrap();
    let n = h.len();
    let g: Vec<f64> = (0..2 * n - 1)
        .map(|i| (0..n).filter(|&j| i >= j && i - j < n).map(|j| h[j] * h[i - j]).sum())
        .collect();
    let mid = n - 1;
    let mut worst = (g[mid] - 1.0).abs();
    let mut k = 1;
    while k * sps <= mid {
        worst = worst.max(g[mid + k * sps].abs()).max(g[mid - k * sps].abs());
        k += 1;
    }
    worst
}

/// Measured SNR of every (label, snr) cell from `x - s_star`, returned as
/// `(label, target dB, measured dB)`.
pub fn cell_snrs(ds: &Dataset) -> Vec<(usize, f64, f64)> {
    let mut acc: std::collections::BTreeMap<(usize, i64), (f64, f64, f64)> = Default::default();
    for s in &ds.samples {
        let e = acc.entry((s.label, wser::signal::snr_key(s.snr_db))).or_insert((s.snr_db as f64, 0.0, 0.0));
        for (x, c) in s.x.as_slice().iter().zip(s.s_star.as_slice()) {
            let (x, c) = (*x as f64, *c as f64);
            e.1 += c * c;
            e.2 += (x - c) * (x - c);
        }
    }
    acc.into_iter().map(|((label, _), (target, sig, noise))| (label, target, 10.0 * (sig / noise).log10())).collect()
}

/// Writes, reads back and rewrites a dataset; true when the reread value
/// equals the original and both encodings are byte-identical.
pub fn dataset_round_trips(ds: &Dataset) -> bool {
    let mut first = Vec::new();
    wser::signal::write_dataset(&mut first, ds).unwrap();
    let back = wser::signal::read_dataset(first.as_slice()).unwrap();
    let mut second = Vec::new();
    wser::signal::write_dataset(&mut second, &back).unwrap();
    back == *ds && first == second
}

/// Adjacent-bucket accuracy drops larger than two points along an
/// ascending-SNR accuracy curve.
pub fn snr_inversions(curve: &[f64]) -> usize {
    curve.windows(2).filter(|w| w[0] - w[1] > 0.02).count()
}
