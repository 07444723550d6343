use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub outputs: usize,
    /// Peer slots per hidden layer.
    pub comm_slots: usize,
}

impl Architecture {
    /// Five Tanh layers of ten units with eight peer slots each.
    pub fn standard(input: usize, outputs: usize) -> Self {
        Self { input, hidden: vec![10; 5], outputs, comm_slots: 8 }
    }

    /// Width of the peer block read by hidden layer `l`.
    pub fn comm_width(&self, l: usize) -> usize {
        self.comm_slots * self.hidden[l]
    }

    fn own_width(&self, l: usize) -> usize {
        if l == 0 {
            self.input
        } else {
            self.hidden[l - 1]
        }
    }

    fn validate(&self) -> Result<(), NeuralError> {
        if self.input == 0 || self.outputs == 0 || self.hidden.contains(&0) {
            return Err(NeuralError::Shape(format!("degenerate architecture {self:?}")));
        }
        Ok(())
    }
}

/// Dense layer, weights row-major `rows x cols`. The first `own` columns
/// read the agent's own signal; the rest read the peer block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<T> {
    pub rows: usize,
    pub cols: usize,
    pub own: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    fn zeros(rows: usize, own: usize, comm: usize) -> Self {
        let cols = own + comm;
        Self { rows, cols, own, w: vec![T::zero(); rows * cols], b: vec![T::zero(); rows] }
    }

    fn affine(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|r| {
                let row = &self.w[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(x).fold(self.b[r], |acc, (&w, &v)| acc + w * v)
            })
            .collect()
    }

    #[inline]
    pub fn weight(&self, r: usize, c: usize) -> T {
        self.w[r * self.cols + c]
    }
}

/// Peer activations for every hidden layer, `comm_slots` zero-padded slots
/// each, flattened slot after slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CommBundle<T> {
    pub layers: Vec<Vec<T>>,
}

impl<T: Scalar> CommBundle<T> {
    pub fn zeros(arch: &Architecture) -> Self {
        Self { layers: (0..arch.hidden.len()).map(|l| vec![T::zero(); arch.comm_width(l)]).collect() }
    }

    /// Fills slots in the given order from each peer's per-layer hidden
    /// activations; peers beyond the slot count are dropped.
    pub fn from_peers<'p, I>(arch: &Architecture, peers: I) -> Result<Self, NeuralError>
    where
        I: IntoIterator<Item = &'p [Vec<T>]>,
    {
        let mut out = Self::zeros(arch);
        for (slot, peer) in peers.into_iter().take(arch.comm_slots).enumerate() {
            if peer.len() != arch.hidden.len() {
                return Err(NeuralError::Shape(format!(
                    "peer has {} layers, expected {}",
                    peer.len(),
                    arch.hidden.len()
                )));
            }
            for (l, act) in peer.iter().enumerate() {
                let width = arch.hidden[l];
                if act.len() != width {
                    return Err(NeuralError::Shape(format!("peer layer {l} width {} != {width}", act.len())));
                }
                out.layers[l][slot * width..(slot + 1) * width].copy_from_slice(act);
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().flatten().all(|v| v.is_zero())
    }
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<T> {
    /// Full input of each layer (own signal then peer block), output layer last.
    pub inputs: Vec<Vec<T>>,
    /// Pre-activations of each layer, output layer last.
    pub pre: Vec<Vec<T>>,
    /// Tanh outputs of the hidden layers.
    pub hidden: Vec<Vec<T>>,
    pub output: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub w: Vec<Vec<T>>,
    pub b: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &LbccNetwork<T>) -> Self {
        Self {
            w: net.layers.iter().map(|l| vec![T::zero(); l.w.len()]).collect(),
            b: net.layers.iter().map(|l| vec![T::zero(); l.b.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.w.iter_mut().flatten().zip(other.w.iter().flatten()) {
            *a += *b;
        }
        for (a, b) in self.b.iter_mut().flatten().zip(other.b.iter().flatten()) {
            *a += *b;
        }
    }

    pub fn scale(&mut self, k: T) {
        for v in self.w.iter_mut().flatten().chain(self.b.iter_mut().flatten()) {
            *v *= k;
        }
    }

    /// Weights then biases, layer by layer.
    pub fn flat(&self) -> Vec<T> {
        let mut out = Vec::new();
        for (w, b) in self.w.iter().zip(&self.b) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.w.iter().flatten().chain(self.b.iter().flatten()).all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.w
            .iter()
            .flatten()
            .chain(self.b.iter().flatten())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbccNetwork<T> {
    arch: Architecture,
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> LbccNetwork<T> {
    pub fn zeros(arch: Architecture) -> Result<Self, NeuralError> {
        arch.validate()?;
        let mut layers: Vec<Layer<T>> = (0..arch.hidden.len())
            .map(|l| Layer::zeros(arch.hidden[l], arch.own_width(l), arch.comm_width(l)))
            .collect();
        let last = arch.hidden.last().copied().unwrap_or(arch.input);
        layers.push(Layer::zeros(arch.outputs, last, 0));
        Ok(Self { arch, layers })
    }

    /// Weights uniform in `±1/sqrt(fan_in)` (fan-in counts the peer block),
    /// biases zero.
    pub fn new<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self, NeuralError> {
        let mut net = Self::zeros(arch)?;
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.cols as f64).sqrt();
            for w in &mut layer.w {
                *w = T::of(rng.random_range(-bound..bound));
            }
        }
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Parameters in the same order as [`Gradients::flat`].
    pub fn params_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_param(&mut self, mut index: usize, value: T) {
        for l in &mut self.layers {
            if index < l.w.len() {
                l.w[index] = value;
                return;
            }
            index -= l.w.len();
            if index < l.b.len() {
                l.b[index] = value;
                return;
            }
            index -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    fn check_shapes(&self, input: &[T], comm: &CommBundle<T>) -> Result<(), NeuralError> {
        if input.len() != self.arch.input {
            return Err(NeuralError::Shape(format!("input width {} != {}", input.len(), self.arch.input)));
        }
        if comm.layers.len() != self.arch.hidden.len() {
            return Err(NeuralError::Shape(format!(
                "comm has {} layers, expected {}",
                comm.layers.len(),
                self.arch.hidden.len()
            )));
        }
        for (l, c) in comm.layers.iter().enumerate() {
            if c.len() != self.arch.comm_width(l) {
                return Err(NeuralError::Shape(format!(
                    "comm layer {l} width {} != {}",
                    c.len(),
                    self.arch.comm_width(l)
                )));
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &[T], comm: &CommBundle<T>) -> Result<(Vec<T>, ForwardTrace<T>), NeuralError> {
        self.check_shapes(input, comm)?;
        let n_hidden = self.arch.hidden.len();
        let mut trace = ForwardTrace {
            inputs: Vec::with_capacity(n_hidden + 1),
            pre: Vec::with_capacity(n_hidden + 1),
            hidden: Vec::with_capacity(n_hidden),
            output: Vec::new(),
        };
        let mut h = input.to_vec();
        for (l, layer) in self.layers[..n_hidden].iter().enumerate() {
            let mut x = h;
            x.extend_from_slice(&comm.layers[l]);
            let z = layer.affine(&x);
            h = z.iter().map(|v| v.tanh()).collect();
            trace.inputs.push(x);
            trace.pre.push(z);
            trace.hidden.push(h.clone());
        }
        let out = self.layers[n_hidden].affine(&h);
        trace.inputs.push(h);
        trace.pre.push(out.clone());
        trace.output = out.clone();
        Ok((out, trace))
    }

    pub fn predict(&self, input: &[T], comm: &CommBundle<T>) -> Result<Vec<T>, NeuralError> {
        Ok(self.forward(input, comm)?.0)
    }

    /// Parameter gradients given `d loss / d output`. Peer inputs are
    /// constants, so nothing flows back into them.
    pub fn backward(&self, trace: &ForwardTrace<T>, d_out: &[T]) -> Result<Gradients<T>, NeuralError> {
        let n_layers = self.layers.len();
        if d_out.len() != self.arch.outputs || trace.inputs.len() != n_layers {
            return Err(NeuralError::Shape("trace or upstream gradient does not match network".into()));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut delta = d_out.to_vec();
        for li in (0..n_layers).rev() {
            let layer = &self.layers[li];
            if li + 1 < n_layers {
                // through tanh: 1 - h^2
                for (d, h) in delta.iter_mut().zip(&trace.hidden[li]) {
                    *d *= T::one() - *h * *h;
                }
            }
            let x = &trace.inputs[li];
            let gw = &mut grads.w[li];
            for r in 0..layer.rows {
                let dr = delta[r];
                if dr.is_zero() {
                    continue;
                }
                for c in 0..layer.cols {
                    gw[r * layer.cols + c] = dr * x[c];
                }
            }
            grads.b[li].copy_from_slice(&delta);
            if li > 0 {
                let mut next = vec![T::zero(); layer.own];
                for r in 0..layer.rows {
                    let dr = delta[r];
                    for (c, n) in next.iter_mut().enumerate() {
                        *n += layer.weight(r, c) * dr;
                    }
                }
                delta = next;
            }
        }
        Ok(grads)
    }

    /// `p -= lr * g`. Refuses non-finite gradients without touching the
    /// parameters.
    pub fn sgd_step(&mut self, grads: &Gradients<T>, lr: T) -> Result<(), NeuralError> {
        if grads.w.len() != self.layers.len()
            || grads.w.iter().zip(&self.layers).any(|(g, l)| g.len() != l.w.len())
            || grads.b.iter().zip(&self.layers).any(|(g, l)| g.len() != l.b.len())
        {
            return Err(NeuralError::Shape("gradient shapes do not match the network".into()));
        }
        if !grads.all_finite() {
            let bad = grads.flat().iter().filter(|v| !v.is_finite()).count();
            return Err(NeuralError::Divergence(format!("{bad} non-finite gradient entries")));
        }
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(grads.w.iter().zip(&grads.b)) {
            for (p, g) in layer.w.iter_mut().zip(gw) {
                *p -= lr * *g;
            }
            for (p, g) in layer.b.iter_mut().zip(gb) {
                *p -= lr * *g;
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }

    /// Same parameters in another precision.
    pub fn cast<U: Scalar>(&self) -> LbccNetwork<U> {
        LbccNetwork {
            arch: self.arch.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    rows: l.rows,
                    cols: l.cols,
                    own: l.own,
                    w: l.w.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
                    b: l.b.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
                })
                .collect(),
        }
    }

    /// Rejects deserialised networks whose stored shapes disagree with their
    /// architecture.
    pub fn validate(&self) -> Result<(), NeuralError> {
        let fresh = Self::zeros(self.arch.clone())?;
        if fresh.layers.len() != self.layers.len() {
            return Err(NeuralError::Shape("layer count does not match architecture".into()));
        }
        for (i, (a, b)) in fresh.layers.iter().zip(&self.layers).enumerate() {
            if a.rows != b.rows || a.cols != b.cols || a.own != b.own || b.w.len() != a.w.len() || b.b.len() != a.b.len() {
                return Err(NeuralError::Shape(format!("layer {i} shape does not match architecture")));
            }
        }
        Ok(())
    }
}
