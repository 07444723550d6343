//! Central-difference gradient check against an independent forward pass in
//! double-double arithmetic.
//!
//! In plain f64 the difference quotient carries rounding noise of about
//! 1e-11, which is the size of the smallest gradients worth checking. The
//! reference forward pass here keeps roughly 32 significant digits so the
//! quotient is limited only by the step, not by rounding.

use std::ops::{Add, Mul, Neg, Sub};
use std::time::Instant;

use aivsched::neural::{Architecture, CommBundle};
use aivsched::LbccNet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_MIN_GRAD: f64 = 1e-8;
pub const FD_CONFIGS: usize = 100;

/// `1/n` for n = 1..=9, each rounded to double-double.
const INV_N: [Dd; 9] = [
    Dd { hi: 1.0, lo: 0.0 },
    Dd { hi: 0.5, lo: 0.0 },
    Dd { hi: 0.333_333_333_333_333_3, lo: 1.850_371_707_708_594e-17 },
    Dd { hi: 0.25, lo: 0.0 },
    Dd { hi: 0.2, lo: -1.110_223_024_625_156_6e-17 },
    Dd { hi: 0.166_666_666_666_666_66, lo: 9.251_858_538_542_97e-18 },
    Dd { hi: 0.142_857_142_857_142_85, lo: 7.930_164_461_608_261e-18 },
    Dd { hi: 0.125, lo: 0.0 },
    Dd { hi: 0.111_111_111_111_111_11, lo: 6.167_905_692_361_98e-18 },
];

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

    pub fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact multiplication by a power of two.
    fn scale2(self, e: i32) -> Dd {
        let f = 2f64.powi(e);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    pub fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from(q2);
        let q3 = r.hi / b.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e } + Dd::from(q3)
    }

    pub fn exp(self) -> Dd {
        const SQUARINGS: i32 = 10;
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = (self - Dd::LN2 * Dd::from(k)).scale2(-SQUARINGS);
        // Horner form of the Taylor series; |r| < 4e-4 so nine terms reach
        // below 1e-36
        let mut p = Dd::ONE;
        for inv in INV_N.iter().rev() {
            p = Dd::ONE + r * p * *inv;
        }
        for _ in 0..SQUARINGS {
            p = p * p;
        }
        p.scale2(k as i32)
    }

    pub fn tanh(self) -> Dd {
        if self.hi > 40.0 {
            return Dd::ONE;
        }
        if self.hi < -40.0 {
            return -Dd::ONE;
        }
        let e = self.scale2(1).exp();
        (e - Dd::ONE).div(e + Dd::ONE)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let p = self.hi * b.hi;
        let e = self.hi.mul_add(b.hi, -p) + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// Network parameters and one input in double-double, with the cached
/// activations of the unperturbed forward pass.
struct DdNet {
    rows: Vec<usize>,
    cols: Vec<usize>,
    own: Vec<usize>,
    w: Vec<Vec<Dd>>,
    b: Vec<Vec<Dd>>,
    /// Full input of each layer (own signal then peer block).
    inputs: Vec<Vec<Dd>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<Dd>>,
    /// Bias plus peer-block contribution of each layer, fixed under
    /// perturbation of earlier layers.
    fixed: Vec<Vec<Dd>>,
    upstream: Vec<Dd>,
}

impl DdNet {
    fn new(net: &LbccNet, x: &[f64], comm: &CommBundle<f64>, upstream: &[f64]) -> Self {
        let layers = net.layers();
        let mut d = DdNet {
            rows: layers.iter().map(|l| l.rows).collect(),
            cols: layers.iter().map(|l| l.cols).collect(),
            own: layers.iter().map(|l| l.own).collect(),
            w: layers.iter().map(|l| l.w.iter().map(|&v| Dd::from(v)).collect()).collect(),
            b: layers.iter().map(|l| l.b.iter().map(|&v| Dd::from(v)).collect()).collect(),
            inputs: Vec::new(),
            pre: Vec::new(),
            fixed: Vec::new(),
            upstream: upstream.iter().map(|&v| Dd::from(v)).collect(),
        };
        let mut h: Vec<Dd> = x.iter().map(|&v| Dd::from(v)).collect();
        for l in 0..layers.len() {
            let mut input = h;
            if l < comm.layers.len() {
                input.extend(comm.layers[l].iter().map(|&v| Dd::from(v)));
            }
            let z = d.affine(l, &input);
            let cols = d.cols[l];
            let own = d.own[l];
            let fixed = (0..d.rows[l])
                .map(|r| {
                    let row = &d.w[l][r * cols + own..(r + 1) * cols];
                    row.iter().zip(&input[own..]).fold(d.b[l][r], |acc, (&w, &v)| acc + w * v)
                })
                .collect();
            d.fixed.push(fixed);
            h = if l + 1 < layers.len() { z.iter().map(|v| v.tanh()).collect() } else { z.clone() };
            d.inputs.push(input);
            d.pre.push(z);
        }
        d
    }

    fn affine(&self, l: usize, input: &[Dd]) -> Vec<Dd> {
        let cols = self.cols[l];
        (0..self.rows[l])
            .map(|r| {
                let row = &self.w[l][r * cols..(r + 1) * cols];
                row.iter().zip(input).fold(self.b[l][r], |acc, (&w, &v)| acc + w * v)
            })
            .collect()
    }

    fn weighted(&self, out: &[Dd]) -> Dd {
        out.iter().zip(&self.upstream).fold(Dd::ZERO, |acc, (&o, &c)| acc + o * c)
    }

    /// Weighted output with parameter `(layer, index)` shifted by `dp`;
    /// indices run over the weights then the biases of the layer.
    fn perturbed(&self, layer: usize, index: usize, dp: Dd) -> Dd {
        let n = self.rows.len();
        let n_w = self.w[layer].len();
        let (row, dz) = if index < n_w {
            let (r, c) = (index / self.cols[layer], index % self.cols[layer]);
            (r, dp * self.inputs[layer][c])
        } else {
            (index - n_w, dp)
        };
        let mut z = self.pre[layer].clone();
        z[row] = z[row] + dz;
        if layer + 1 == n {
            return self.weighted(&z);
        }
        // only unit `row` changed: update the next layer by its column
        let next = layer + 1;
        let dh = z[row].tanh() - self.inputs[next][row];
        let cols = self.cols[next];
        let mut z: Vec<Dd> =
            self.pre[next].iter().enumerate().map(|(r, &v)| v + self.w[next][r * cols + row] * dh).collect();
        for l in next + 1..n {
            let h: Vec<Dd> = z.iter().map(|v| v.tanh()).collect();
            let cols = self.cols[l];
            z = (0..self.rows[l])
                .map(|r| {
                    let row = &self.w[l][r * cols..r * cols + self.own[l]];
                    row.iter().zip(&h).fold(self.fixed[l][r], |acc, (&w, &v)| acc + w * v)
                })
                .collect();
        }
        self.weighted(&z)
    }

    /// Central difference for one parameter, or exactly zero when it
    /// multiplies an input that is exactly zero.
    fn central_difference(&self, layer: usize, index: usize) -> f64 {
        let n_w = self.w[layer].len();
        if index < n_w && self.inputs[layer][index % self.cols[layer]] == Dd::ZERO {
            return 0.0;
        }
        let h = Dd::from(FD_STEP);
        let up = self.perturbed(layer, index, h);
        let down = self.perturbed(layer, index, -h);
        (up - down).div(h.scale2(1)).to_f64()
    }
}

pub fn shapes() -> Vec<Architecture> {
    use aivsched::madqn::{aiv_obs_width, ws_obs_width};
    vec![
        Architecture::standard(ws_obs_width(5), 5),
        Architecture::standard(aiv_obs_width(2), 2),
        Architecture { input: 3, hidden: vec![4, 6], outputs: 2, comm_slots: 1 },
    ]
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Peer activations for a random number of occupied slots, zero elsewhere.
pub fn random_comm(rng: &mut ChaCha8Rng, arch: &Architecture) -> CommBundle<f64> {
    let peers = rng.random_range(0..=arch.comm_slots);
    let acts: Vec<Vec<Vec<f64>>> =
        (0..peers).map(|_| arch.hidden.iter().map(|&w| random_vec(rng, w, -1.0, 1.0)).collect()).collect();
    CommBundle::from_peers(arch, acts.iter().map(Vec::as_slice)).unwrap()
}

/// Fresh weights plus non-zero biases so every term is exercised.
pub fn random_net(rng: &mut ChaCha8Rng, arch: &Architecture) -> LbccNet {
    let mut net = LbccNet::new(arch.clone(), rng).unwrap();
    for l in net.layers_mut() {
        for b in &mut l.b {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    net
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub configs: usize,
    pub checked: usize,
    pub worst_rel: f64,
    pub failed: usize,
    pub failures: Vec<String>,
    pub seconds: f64,
}

/// Random network, input, peer block and output weighting per
/// configuration; every parameter's analytic derivative of the weighted
/// output is compared with its central difference.
pub fn gradient_check(archs: &[Architecture], configs: usize, seed: u64) -> GradCheckReport {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport::default();
    for arch in archs {
        for config in 0..configs {
            let net = random_net(&mut rng, arch);
            let x = random_vec(&mut rng, arch.input, 0.0, 1.0);
            let comm = random_comm(&mut rng, arch);
            let c = random_vec(&mut rng, arch.outputs, -1.0, 1.0);
            let (_, trace) = net.forward(&x, &comm).unwrap();
            let grads = net.backward(&trace, &c).unwrap();
            let reference = DdNet::new(&net, &x, &comm, &c);
            for layer in 0..grads.w.len() {
                let analytic = grads.w[layer].iter().chain(&grads.b[layer]);
                for (index, &a) in analytic.enumerate() {
                    let numeric = reference.central_difference(layer, index);
                    let scale = a.abs().max(numeric.abs());
                    if scale <= FD_MIN_GRAD {
                        continue;
                    }
                    let rel = (a - numeric).abs() / scale;
                    report.checked += 1;
                    report.worst_rel = report.worst_rel.max(rel);
                    if rel > FD_REL_TOL {
                        report.failed += 1;
                    }
                    if rel > FD_REL_TOL && report.failures.len() < 5 {
                        report.failures.push(format!(
                            "input {} config {config} layer {layer} param {index}: analytic {a:e} numeric {numeric:e}",
                            arch.input
                        ));
                    }
                }
            }
            report.configs += 1;
        }
    }
    report.seconds = t0.elapsed().as_secs_f64();
    report
}
