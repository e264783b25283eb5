//! A small feed-forward network IR (affine layers with relu / negated-relu /
//! identity neurons), exact network algebra, and the analytic networks that
//! fold and evaluate the `A_n` boundary.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folding::FoldedBoundary;
use crate::geometry::{norm, Hyperplane, Mat};
use crate::lattice::Lattice;

/// Largest dimension the decoder constructors accept.
pub const DECODER_GUARD: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// `max(0, −a)`
    NegRelu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Relu => a.max(0.0),
            Activation::NegRelu => (-a).max(0.0),
            Activation::Identity => a,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayer")]
pub struct Layer {
    #[serde(rename = "w")]
    pub weights: Mat,
    #[serde(rename = "b")]
    pub biases: Vec<f64>,
    #[serde(rename = "act")]
    pub activations: Vec<Activation>,
}

#[derive(Deserialize)]
struct RawLayer {
    w: Mat,
    b: Vec<f64>,
    act: Vec<Activation>,
}

impl TryFrom<RawLayer> for Layer {
    type Error = Error;

    fn try_from(r: RawLayer) -> Result<Self> {
        Layer::new(r.w, r.b, r.act)
    }
}

impl Layer {
    pub fn new(weights: Mat, biases: Vec<f64>, activations: Vec<Activation>) -> Result<Self> {
        for len in [biases.len(), activations.len()] {
            if len != weights.rows() {
                return Err(Error::DimensionMismatch { expected: weights.rows(), found: len });
            }
        }
        Ok(Layer { weights, biases, activations })
    }

    /// Affine layer with identity neurons.
    pub fn affine(weights: Mat, biases: Vec<f64>) -> Result<Self> {
        let acts = vec![Activation::Identity; weights.rows()];
        Layer::new(weights, biases, acts)
    }

    pub fn identity(dim: usize) -> Self {
        Layer { weights: Mat::identity(dim), biases: vec![0.0; dim], activations: vec![Activation::Identity; dim] }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    fn is_affine(&self) -> bool {
        self.activations.iter().all(|&a| a == Activation::Identity)
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.output_dim())
            .map(|i| {
                let row = self.weights.row(i);
                let mut s = self.biases[i];
                for (w, xi) in row.iter().zip(x) {
                    if *w != 0.0 {
                        s += w * xi;
                    }
                }
                self.activations[i].apply(s)
            })
            .collect()
    }

    fn parameter_count(&self) -> usize {
        self.weights.nonzeros() + self.biases.iter().filter(|&&b| b != 0.0).count()
    }
}

/// Layers applied in order; every layer but the last is hidden.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct Network {
    layers: Vec<Layer>,
}

#[derive(Deserialize)]
struct RawNetwork {
    layers: Vec<Layer>,
}

impl TryFrom<RawNetwork> for Network {
    type Error = Error;

    fn try_from(r: RawNetwork) -> Result<Self> {
        Network::new(r.layers)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NetStats {
    /// hidden-layer count
    pub depth: usize,
    pub max_width: usize,
    /// nonzero weights plus nonzero biases
    pub parameter_count: usize,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidDimension { n: 0, reason: "a network needs at least one layer" });
        }
        for w in layers.windows(2) {
            if w[0].output_dim() != w[1].input_dim() {
                return Err(Error::DimensionMismatch { expected: w[0].output_dim(), found: w[1].input_dim() });
            }
        }
        Ok(Network { layers })
    }

    pub fn affine(weights: Mat, biases: Vec<f64>) -> Result<Self> {
        Network::new(vec![Layer::affine(weights, biases)?])
    }

    /// `hidden` identity hidden layers followed by an identity output layer.
    pub fn identity(dim: usize, hidden: usize) -> Self {
        Network { layers: vec![Layer::identity(dim); hidden + 1] }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.len() });
        }
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.forward(&h);
        }
        Ok(h)
    }

    pub fn stats(&self) -> NetStats {
        NetStats {
            depth: self.depth(),
            max_width: self.layers[..self.depth()].iter().map(Layer::output_dim).max().unwrap_or(0),
            parameter_count: self.layers.iter().map(Layer::parameter_count).sum(),
        }
    }

    /// `other ∘ self`. A trailing all-identity layer of `self` is multiplied
    /// into the first layer of `other`, so composing never adds a layer that
    /// only relays an affine map.
    pub fn compose(mut self, other: Network) -> Result<Network> {
        if self.output_dim() != other.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), found: other.input_dim() });
        }
        let mut rest = other.layers.into_iter();
        let first = rest.next().expect("networks are non-empty");
        if self.layers.last().is_some_and(Layer::is_affine) {
            let last = self.layers.pop().unwrap();
            let weights = first.weights.matmul(&last.weights)?;
            let shifted = first.weights.mul_vec(&last.biases)?;
            let biases = shifted.iter().zip(&first.biases).map(|(a, b)| a + b).collect();
            self.layers.push(Layer { weights, biases, activations: first.activations });
        } else {
            self.layers.push(first);
        }
        self.layers.extend(rest);
        Ok(self)
    }

    /// Block-diagonal stack: inputs and outputs are concatenated in order.
    /// Shorter networks are padded with trailing identity layers.
    pub fn parallel(nets: &[Network]) -> Network {
        assert!(!nets.is_empty(), "parallel of no networks");
        let len = nets.iter().map(|n| n.layers.len()).max().unwrap();
        let layers = (0..len)
            .map(|l| {
                let parts: Vec<Layer> = nets
                    .iter()
                    .map(|n| n.layers.get(l).cloned().unwrap_or_else(|| Layer::identity(n.output_dim())))
                    .collect();
                let rows: usize = parts.iter().map(Layer::output_dim).sum();
                let cols: usize = parts.iter().map(Layer::input_dim).sum();
                let mut weights = Mat::zeros(rows, cols);
                let (mut biases, mut acts) = (Vec::with_capacity(rows), Vec::with_capacity(rows));
                let (mut r0, mut c0) = (0, 0);
                for p in &parts {
                    for i in 0..p.output_dim() {
                        for j in 0..p.input_dim() {
                            weights[(r0 + i, c0 + j)] = p.weights[(i, j)];
                        }
                    }
                    biases.extend_from_slice(&p.biases);
                    acts.extend_from_slice(&p.activations);
                    r0 += p.output_dim();
                    c0 += p.input_dim();
                }
                Layer { weights, biases, activations: acts }
            })
            .collect();
        Network { layers }
    }
}

/// Conditional reflection across `h` on `R^dim`: the identity on the side
/// `x·v̂ ≥ p̂` and the mirror image on the other.
///
/// The hidden layer holds `t = x·v̂ − p̂` twice (relu and negated relu) and
/// every coordinate except the one where `v̂` is largest; the output layer
/// rebuilds that coordinate from `t` and adds `2·relu(−t)·v̂`. Hidden width
/// is `dim + 1` and the weight count is linear in `dim`.
pub fn reflection_block(h: &Hyperplane, dim: usize) -> Result<Network> {
    if h.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: h.dim() });
    }
    let (v, p) = h.normalized();
    let pivot = (0..dim).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
    let others: Vec<usize> = (0..dim).filter(|&i| i != pivot).collect();

    let mut w1 = Mat::zeros(dim + 1, dim);
    let mut b1 = vec![0.0; dim + 1];
    for r in 0..2 {
        w1.row_mut(r).copy_from_slice(&v);
    }
    b1[..2].fill(-p);
    for (r, &i) in others.iter().enumerate() {
        w1[(r + 2, i)] = 1.0;
    }
    let mut acts = vec![Activation::Relu, Activation::NegRelu];
    acts.resize(dim + 1, Activation::Identity);

    let mut w2 = Mat::zeros(dim, dim + 1);
    let mut b2 = vec![0.0; dim];
    for (r, &i) in others.iter().enumerate() {
        w2[(i, r + 2)] = 1.0;
        w2[(i, 1)] = 2.0 * v[i];
    }
    // x_pivot = (t + p̂ − Σ v̂_k x_k) / v̂_pivot
    let vp = v[pivot];
    w2[(pivot, 0)] = 1.0 / vp;
    w2[(pivot, 1)] = -1.0 / vp + 2.0 * vp;
    for (r, &i) in others.iter().enumerate() {
        w2[(pivot, r + 2)] = -v[i] / vp;
    }
    b2[pivot] = p / vp;

    Network::new(vec![Layer::new(w1, b1, acts)?, Layer::affine(w2, b2)?])
}

/// The same conditional reflection staged through a dense orthogonal
/// (Householder) change of frame that sends `v̂` to the first coordinate.
/// Kept as an independent reference for `reflection_block`.
pub fn reflection_block_householder(h: &Hyperplane, dim: usize) -> Result<Network> {
    if h.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: h.dim() });
    }
    let (v, p) = h.normalized();
    // H = I − 2uuᵀ with H v̂ = e_1
    let mut u = v.clone();
    u[0] -= 1.0;
    let un = norm(&u);
    let hh = if un < 1e-12 {
        Mat::identity(dim)
    } else {
        u.iter_mut().for_each(|x| *x /= un);
        Mat::from_fn(dim, dim, |i, j| f64::from(u8::from(i == j)) - 2.0 * u[i] * u[j])
    };
    // hidden: relu(t), negrelu(t), (Hx)_2..dim ; t = (Hx)_1 − p̂
    let mut w1 = Mat::zeros(dim + 1, dim);
    let mut b1 = vec![0.0; dim + 1];
    for r in 0..2 {
        w1.row_mut(r).copy_from_slice(hh.row(0));
    }
    b1[..2].fill(-p);
    for k in 1..dim {
        w1.row_mut(k + 1).copy_from_slice(hh.row(k));
    }
    let mut acts = vec![Activation::Relu, Activation::NegRelu];
    acts.resize(dim + 1, Activation::Identity);
    // out = Hᵀ (|t| + p̂, rest)
    let mut w2 = Mat::zeros(dim, dim + 1);
    let mut b2 = vec![0.0; dim];
    for i in 0..dim {
        w2[(i, 0)] = hh[(0, i)];
        w2[(i, 1)] = hh[(0, i)];
        b2[i] = hh[(0, i)] * p;
        for k in 1..dim {
            w2[(i, k + 1)] = hh[(k, i)];
        }
    }
    Network::new(vec![Layer::new(w1, b1, acts)?, Layer::affine(w2, b2)?])
}

/// `max(a, b) = b + relu(a − b)`
pub fn max_gadget() -> Network {
    let w1 = Mat::from_rows(&[[1.0, -1.0], [0.0, 1.0]]).unwrap();
    let l1 = Layer::new(w1, vec![0.0; 2], vec![Activation::Relu, Activation::Identity]).unwrap();
    let l2 = Layer::affine(Mat::from_rows(&[[1.0, 1.0]]).unwrap(), vec![0.0]).unwrap();
    Network { layers: vec![l1, l2] }
}

/// `min(a, b) = −max(−a, −b) = b − relu(b − a)`
pub fn min_gadget() -> Network {
    let w1 = Mat::from_rows(&[[-1.0, 1.0], [0.0, 1.0]]).unwrap();
    let l1 = Layer::new(w1, vec![0.0; 2], vec![Activation::Relu, Activation::Identity]).unwrap();
    let l2 = Layer::affine(Mat::from_rows(&[[-1.0, 1.0]]).unwrap(), vec![0.0]).unwrap();
    Network { layers: vec![l1, l2] }
}

fn tree(k: usize, gadget: fn() -> Network) -> Network {
    assert!(k > 0, "reduction over no inputs");
    let mut net = Network::identity(k, 0);
    let mut width = k;
    while width > 1 {
        let mut parts = vec![gadget(); width / 2];
        if width % 2 == 1 {
            parts.push(Network::identity(1, 1));
        }
        net = net.compose(Network::parallel(&parts)).unwrap();
        width = width.div_ceil(2);
    }
    net
}

/// Pairwise max over `k` inputs, `⌈log₂ k⌉` hidden layers.
pub fn max_tree(k: usize) -> Network {
    tree(k, max_gadget)
}

pub fn min_tree(k: usize) -> Network {
    tree(k, min_gadget)
}

/// `y ↦ y₁ − f_{D′}(F(ỹ))` for one axis, evaluated directly rather than by
/// a network. The sign decides the bit.
#[derive(Clone, Debug)]
pub struct FoldedDiscriminant {
    pub axis: usize,
    /// `y_frame = y·rotation`
    pub rotation: Mat,
    pub folded: FoldedBoundary,
}

impl FoldedDiscriminant {
    pub fn build(lattice: &Lattice, axis: usize) -> Result<Self> {
        let (view, rotation) = lattice.axis_view(axis)?;
        Ok(FoldedDiscriminant { axis, rotation, folded: FoldedBoundary::build(&view)? })
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let u = self.rotation.vec_mul(y).expect("point has dimension n");
        u[0] - self.folded.evaluate(&u[1..])
    }
}

fn check_decoder_input(lattice: &Lattice) -> Result<()> {
    if !lattice.is_an() {
        return Err(Error::NotAn);
    }
    if lattice.n() > DECODER_GUARD {
        return Err(Error::GuardExceeded { what: "decoder", n: lattice.n(), limit: DECODER_GUARD });
    }
    Ok(())
}

/// Network for one coordinate: input `y ∈ Rⁿ` in the lattice frame, output
/// `s = y₁ − f_{D′}(F(ỹ))` in the axis frame. The bit is `[s > 0]`.
///
/// Inside the network `ỹ` is carried as `β_m = ỹ·b_m` (`m = 2..n`). In those
/// coordinates the mirror between `b_j` and `b_k` is the plane `β_j = β_k`,
/// so every reflection block has a two-term normal.
pub fn build_decoder_bit(lattice: &Lattice, axis: usize) -> Result<Network> {
    check_decoder_input(lattice)?;
    let n = lattice.n();
    let d = n - 1;
    let disc = FoldedDiscriminant::build(lattice, axis)?;
    let view = disc.folded.boundary.view();

    // β = ũ·M, columns of M are the tails of b_2..b_n
    let m = Mat::from_fn(d, d, |i, c| view.basis(c + 1)[i + 1]);
    let m_inv = m.inverse()?;
    let mut frame = Mat::zeros(n, n);
    frame[(0, 0)] = 1.0;
    for i in 0..d {
        for c in 0..d {
            frame[(i + 1, c + 1)] = m[(i, c)];
        }
    }
    let input = disc.rotation.matmul(&frame)?;
    let mut net = Network::affine(input.transpose(), vec![0.0; n])?;

    for f in &disc.folded.fold.reflections {
        let mut normal = vec![0.0; d];
        normal[f.j - 1] = 1.0;
        normal[f.k - 1] = -1.0;
        let block = reflection_block(&Hyperplane::new(normal, 0.0)?, d)?;
        net = net.compose(Network::parallel(&[Network::identity(1, 1), block]))?;
    }

    // heights of every piece, grouped, with u₁ carried in front
    let groups = &disc.folded.boundary.groups;
    let rows = 1 + disc.folded.piece_count();
    let mut w = Mat::zeros(rows, n);
    let mut b = vec![0.0; rows];
    w[(0, 0)] = 1.0;
    for (r, piece) in groups.iter().flatten().enumerate() {
        // ṽ·ũ = (M⁻¹ṽ)·β
        let coef = m_inv.mul_vec(&piece.v[1..])?;
        for k in 0..d {
            w[(r + 1, k + 1)] = -coef[k] / piece.v[0];
        }
        b[r + 1] = piece.p / piece.v[0];
    }
    net = net.compose(Network::affine(w, b)?)?;

    let mut maxes = vec![Network::identity(1, 1)];
    maxes.extend(groups.iter().map(|g| max_tree(g.len())));
    net = net.compose(Network::parallel(&maxes))?;
    net = net.compose(Network::parallel(&[Network::identity(1, 1), min_tree(groups.len())]))?;
    net.compose(Network::affine(Mat::from_rows(&[[1.0, -1.0]])?, vec![0.0])?)
}

/// One bit network per coordinate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Decoder {
    pub nets: Vec<Network>,
}

impl Decoder {
    pub fn n(&self) -> usize {
        self.nets.len()
    }

    /// Bits of a point already in `P(B)`.
    pub fn bits(&self, y: &[f64]) -> Result<Vec<u8>> {
        self.nets.iter().map(|net| Ok(u8::from(net.forward(y)?[0] > 0.0))).collect()
    }

    /// `ẑ = k + bits(y − k·G)` where `k` reduces `y` into `P(B)`.
    pub fn decode(&self, lattice: &Lattice, y: &[f64]) -> Result<Vec<i64>> {
        if lattice.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: lattice.n() });
        }
        let (reduced, k) = lattice.reduce_to_parallelotope(y)?;
        let bits = self.bits(&reduced)?;
        Ok(k.iter().zip(bits).map(|(k, b)| k + i64::from(b)).collect())
    }

    /// The nets side by side: depth is the deepest, width and parameters add.
    pub fn stats(&self) -> NetStats {
        let all: Vec<NetStats> = self.nets.iter().map(Network::stats).collect();
        NetStats {
            depth: all.iter().map(|s| s.depth).max().unwrap_or(0),
            max_width: all.iter().map(|s| s.max_width).sum(),
            parameter_count: all.iter().map(|s| s.parameter_count).sum(),
        }
    }
}

pub fn build_full_decoder(lattice: &Lattice) -> Result<Decoder> {
    check_decoder_input(lattice)?;
    let nets = (0..lattice.n()).map(|a| build_decoder_bit(lattice, a)).collect::<Result<_>>()?;
    Ok(Decoder { nets })
}

pub fn decode(lattice: &Lattice, decoder: &Decoder, y: &[f64]) -> Result<Vec<i64>> {
    decoder.decode(lattice, y)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub depth: usize,
    pub width: usize,
    pub params: usize,
    pub params_over_n4: f64,
    pub depth_over_n2: f64,
    pub width_over_n2: f64,
    pub reflections_per_bit: usize,
    pub build_seconds: f64,
}

pub fn scaling_row(n: usize) -> Result<ScalingRow> {
    let start = Instant::now();
    let decoder = build_full_decoder(&Lattice::an(n)?)?;
    let build_seconds = start.elapsed().as_secs_f64();
    let s = decoder.stats();
    let (n2, n4) = ((n * n) as f64, (n * n * n * n) as f64);
    Ok(ScalingRow {
        n,
        depth: s.depth,
        width: s.max_width,
        params: s.parameter_count,
        params_over_n4: s.parameter_count as f64 / n4,
        depth_over_n2: s.depth as f64 / n2,
        width_over_n2: s.max_width as f64 / n2,
        reflections_per_bit: (n - 1) * (n - 2) / 2,
        build_seconds,
    })
}

pub fn scaling_table(ns: &[usize]) -> Result<Vec<ScalingRow>> {
    ns.iter().map(|&n| scaling_row(n)).collect()
}
