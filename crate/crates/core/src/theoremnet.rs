//! A ReLU network that computes one of two given functions depending on the
//! sign of a perturbation to a single designated weight.
//!
//! Wiring (every layer is dense, unmentioned weights are zero):
//!
//! ```text
//! hidden 1  G-hidden = ReLU(W_g x + b_g), H-hidden = ReLU(W_h x + b_h), K = ReLU(B)
//! hidden 2  G+ = ReLU(G), G- = ReLU(-G), H+, H-,  K' = ReLU(w_k K + C)      w_k = 0
//! hidden 3  carries, r1 = ReLU(u), r2 = ReLU(u - 1), r3 = ReLU(-u), r4 = ReLU(-u - 1)
//!           where u = (K' - C) / a
//! hidden 4  carries, s1 = ReLU(r1 - r2), s2 = ReLU(r3 - r4)
//! hidden 5  G^+- = ReLU(+-(G+ - G-) + M s1 - M),  H^+- = ReLU(+-(H+ - H-) + M s2 - M)
//! output    G^+ - G^- + H^+ - H^-
//! ```
//!
//! With `w_k` perturbed to `d`, `u = d B / a`. Choosing `a = delta1 B / s`
//! with ramp sharpness `s >= 1` saturates `s1` at 1 for every `d` in
//! `(delta1, delta2)` and `s2` for the mirrored interval, so the output is
//! exactly `G` or `H`. `M` exceeds twice the magnitude of either branch, which
//! closes the inactive branch.
//!
//! Perturbations of every other weight are handled by a worst-case deviation
//! bound, propagated layer by layer: a node's pre-activation moves by at most
//! `sum |w| D_in + p sum |A_in|`, where `D_in` are the input deviations, `A_in`
//! bounds on the perturbed input activations, and `p` the perturbation scale.
//! Reference activations are bounded by interval arithmetic over the input box
//! and the designated weight's interval. The build fails when the resulting
//! output bound exceeds `epsilon`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::seeding::{mix, offspring_seed, rng_from_seed, SALT_FLIP};

/// One hidden ReLU layer and a linear readout: `w2 . ReLU(W1 x + b1) + b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShallowNet {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl ShallowNet {
    pub fn new(w1: Vec<Vec<f64>>, b1: Vec<f64>, w2: Vec<f64>, b2: f64) -> Result<Self> {
        let hidden = w1.len();
        if hidden == 0 {
            return Err(Error::InvalidValue("shallow net needs a hidden unit".into()));
        }
        check_dim("shallow net biases", hidden, b1.len())?;
        check_dim("shallow net readout", hidden, w2.len())?;
        let n = w1[0].len();
        if n == 0 || w1.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidValue("shallow net rows must share a nonzero width".into()));
        }
        let finite = w1.iter().flatten().chain(&b1).chain(&w2).all(|v| v.is_finite());
        if !finite || !b2.is_finite() {
            return Err(Error::InvalidValue("shallow net weights must be finite".into()));
        }
        Ok(ShallowNet { w1, b1, w2, b2 })
    }

    /// `x -> x_0` on the nonnegative orthant.
    pub fn identity(input_dim: usize) -> Self {
        let mut row = vec![0.0; input_dim];
        row[0] = 1.0;
        ShallowNet {
            w1: vec![row],
            b1: vec![0.0],
            w2: vec![1.0],
            b2: 0.0,
        }
    }

    /// `x -> -x_0` on the nonnegative orthant.
    pub fn negated_identity(input_dim: usize) -> Self {
        ShallowNet {
            w2: vec![-1.0],
            ..Self::identity(input_dim)
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1[0].len()
    }

    pub fn hidden(&self) -> usize {
        self.w1.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.w1
            .iter()
            .zip(&self.b1)
            .zip(&self.w2)
            .map(|((row, b), w)| w * relu(dot(row, x) + b))
            .sum::<f64>()
            + self.b2
    }
}

#[inline]
fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense layer, weights row-major `rows x cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    fn zeros(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            w: vec![0.0; rows * cols],
            b: vec![0.0; rows],
        }
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        self.w[r * self.cols + c] = v;
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.w[r * self.cols + c]
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>, activate: bool) {
        out.clear();
        out.extend((0..self.rows).map(|r| {
            let z = dot(&self.w[r * self.cols..(r + 1) * self.cols], x) + self.b[r];
            if activate {
                relu(z)
            } else {
                z
            }
        }));
    }
}

/// Position of one weight: layer, row, column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightIndex {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
}

pub const HIDDEN_LAYERS: usize = 5;
const LAYER_NAMES: [&str; HIDDEN_LAYERS + 1] = [
    "branch hidden units and gate input",
    "branch outputs and gate",
    "ramps",
    "switch",
    "gated branches",
    "output",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipParams {
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: f64,
    /// Ramp sharpness `s`; the ramp width is `delta1 B / s`.
    pub sharpness: f64,
    /// Upper end of the input box `[0, input_bound]^n`.
    pub input_bound: f64,
}

impl FlipParams {
    pub fn new(delta1: f64, delta2: f64, epsilon: f64) -> Self {
        FlipParams {
            delta1,
            delta2,
            epsilon,
            sharpness: DEFAULT_SHARPNESS,
            input_bound: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.delta1) && ok(self.delta2) && self.delta1 < self.delta2) {
            return Err(Error::InvalidValue(format!(
                "need 0 < delta1 < delta2, got {} and {}",
                self.delta1, self.delta2
            )));
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("sharpness", self.sharpness),
            ("input_bound", self.input_bound),
        ] {
            if !ok(v) {
                return Err(Error::InvalidValue(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

pub const DEFAULT_SHARPNESS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipNet {
    /// Five ReLU layers followed by the linear output layer.
    pub layers: Vec<Dense>,
    pub designated: WeightIndex,
    pub params: FlipParams,
    pub input_dim: usize,
    /// Gate bias `B`.
    pub gate_bias: f64,
    /// Ramp width `a`.
    pub ramp_width: f64,
    /// Branch gating constant `M`.
    pub gate_margin: f64,
    /// Worst-case output deviation under perturbations up to `delta2`.
    pub deviation_bound: f64,
    pub g: ShallowNet,
    pub h: ShallowNet,
}

impl FlipNet {
    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_layers(&self.layers, x)
    }

    pub fn designated_weight(&self) -> f64 {
        let d = self.designated;
        self.layers[d.layer].get(d.row, d.col)
    }

    /// Copy with the designated weight set to `value`.
    pub fn with_designated(&self, value: f64) -> FlipNet {
        let mut net = self.clone();
        let d = net.designated;
        net.layers[d.layer].set(d.row, d.col, value);
        net
    }

    /// Input grid with `points` values per axis over `[0, input_bound]`.
    pub fn grid(&self, points: usize) -> Vec<Vec<f64>> {
        grid(self.input_dim, points, self.params.input_bound)
    }
}

fn eval_layers(layers: &[Dense], x: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut next = Vec::new();
    for (l, layer) in layers.iter().enumerate() {
        layer.forward(&a, &mut next, l < HIDDEN_LAYERS);
        std::mem::swap(&mut a, &mut next);
    }
    a[0]
}

fn grid(dim: usize, points: usize, bound: f64) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..points)
        .map(|i| bound * i as f64 / (points - 1) as f64)
        .collect();
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Interval bound on a shallow net's output over `[0, bound]^n`.
fn shallow_bound(net: &ShallowNet, bound: f64) -> f64 {
    let mut lo = net.b2;
    let mut hi = net.b2;
    for ((row, b), w) in net.w1.iter().zip(&net.b1).zip(&net.w2) {
        let zl: f64 = b + row.iter().map(|v| (v * bound).min(0.0)).sum::<f64>();
        let zh: f64 = b + row.iter().map(|v| (v * bound).max(0.0)).sum::<f64>();
        let (al, ah) = (relu(zl), relu(zh));
        lo += (w * al).min(w * ah);
        hi += (w * al).max(w * ah);
    }
    lo.abs().max(hi.abs())
}

/// Wires the network for a given gate bias without checking the tolerance.
pub fn assemble_flip_network(
    g: &ShallowNet,
    h: &ShallowNet,
    params: FlipParams,
    gate_bias: f64,
) -> Result<FlipNet> {
    params.validate()?;
    check_dim("flip network branch inputs", g.input_dim(), h.input_dim())?;
    if !(gate_bias > 0.0 && gate_bias.is_finite()) {
        return Err(Error::InvalidValue(format!("gate bias must be > 0, got {gate_bias}")));
    }
    let n = g.input_dim();
    let (mg, mh) = (g.hidden(), h.hidden());
    let big_m = 2.0 * shallow_bound(g, params.input_bound).max(shallow_bound(h, params.input_bound)) + 1.0;
    let offset = 2.0 * params.delta2 * gate_bias;
    let a = params.delta1 * gate_bias / params.sharpness;

    // Hidden 1: G-hidden, H-hidden, K.
    let k1 = mg + mh;
    let mut l1 = Dense::zeros(k1 + 1, n);
    for (j, (row, b)) in g.w1.iter().zip(&g.b1).enumerate() {
        for (c, v) in row.iter().enumerate() {
            l1.set(j, c, *v);
        }
        l1.b[j] = *b;
    }
    for (j, (row, b)) in h.w1.iter().zip(&h.b1).enumerate() {
        for (c, v) in row.iter().enumerate() {
            l1.set(mg + j, c, *v);
        }
        l1.b[mg + j] = *b;
    }
    l1.b[k1] = gate_bias;

    // Hidden 2: G+, G-, H+, H-, K'.
    let mut l2 = Dense::zeros(5, k1 + 1);
    for (j, w) in g.w2.iter().enumerate() {
        l2.set(0, j, *w);
        l2.set(1, j, -w);
    }
    for (j, w) in h.w2.iter().enumerate() {
        l2.set(2, mg + j, *w);
        l2.set(3, mg + j, -w);
    }
    l2.b[0] = g.b2;
    l2.b[1] = -g.b2;
    l2.b[2] = h.b2;
    l2.b[3] = -h.b2;
    l2.b[4] = offset;
    let designated = WeightIndex {
        layer: 1,
        row: 4,
        col: k1,
    };

    // Hidden 3: four carries and four ramps of u = (K' - C) / a.
    let mut l3 = Dense::zeros(8, 5);
    for c in 0..4 {
        l3.set(c, c, 1.0);
    }
    for (r, sign, shift) in [(4, 1.0, 0.0), (5, 1.0, -1.0), (6, -1.0, 0.0), (7, -1.0, -1.0)] {
        l3.set(r, 4, sign / a);
        l3.b[r] = -sign * offset / a + shift;
    }

    // Hidden 4: carries and the two switch outputs.
    let mut l4 = Dense::zeros(6, 8);
    for c in 0..4 {
        l4.set(c, c, 1.0);
    }
    l4.set(4, 4, 1.0);
    l4.set(4, 5, -1.0);
    l4.set(5, 6, 1.0);
    l4.set(5, 7, -1.0);

    // Hidden 5: gated branches.
    let mut l5 = Dense::zeros(4, 6);
    for (r, pos, neg, switch) in [(0, 0, 1, 4), (1, 1, 0, 4), (2, 2, 3, 5), (3, 3, 2, 5)] {
        l5.set(r, pos, 1.0);
        l5.set(r, neg, -1.0);
        l5.set(r, switch, big_m);
        l5.b[r] = -big_m;
    }

    let mut out = Dense::zeros(1, 4);
    for (c, v) in [1.0, -1.0, 1.0, -1.0].into_iter().enumerate() {
        out.set(0, c, v);
    }

    let layers = vec![l1, l2, l3, l4, l5, out];
    let (bound, _) = deviation_bound(&layers, designated, &params);
    Ok(FlipNet {
        layers,
        designated,
        params,
        input_dim: n,
        gate_bias,
        ramp_width: a,
        gate_margin: big_m,
        deviation_bound: bound,
        g: g.clone(),
        h: h.clone(),
    })
}

/// Worst-case output deviation when every non-designated weight moves by at
/// most `delta2`, maximized over both signs of the designated weight. Also
/// returns the layer injecting the most perturbation noise.
fn deviation_bound(layers: &[Dense], designated: WeightIndex, params: &FlipParams) -> (f64, usize) {
    let (pos, lp) = side_bound(layers, designated, params, (params.delta1, params.delta2));
    let (neg, ln) = side_bound(layers, designated, params, (-params.delta2, -params.delta1));
    if pos >= neg {
        (pos, lp)
    } else {
        (neg, ln)
    }
}

/// Deviation of a node from its reference value, as an affine form over
/// shared noise symbols in `[-1, 1]`.
#[derive(Clone, Default)]
struct Deviation(Vec<f64>);

impl Deviation {
    fn radius(&self) -> f64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    fn add_scaled(&mut self, other: &Deviation, k: f64) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0.0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += k * b;
        }
    }

    fn fresh(symbols: &mut usize, radius: f64) -> Deviation {
        let mut v = vec![0.0; *symbols + 1];
        v[*symbols] = radius;
        *symbols += 1;
        Deviation(v)
    }
}

/// Bound for one side: the designated weight ranges over `range`, the
/// reference network is the one with only that weight set.
///
/// Each node's own perturbation noise `sum_i eta_ji a_i` becomes a new symbol,
/// so deviations that reach two nodes through unperturbed paths stay
/// correlated and can cancel. A ReLU keeps the affine form when its input is
/// provably on one side of zero; otherwise the form collapses to a fresh
/// symbol of the same radius.
fn side_bound(
    layers: &[Dense],
    designated: WeightIndex,
    params: &FlipParams,
    range: (f64, f64),
) -> (f64, usize) {
    let p = params.delta2;
    let cols = layers[0].cols;
    let mut lo = vec![0.0; cols];
    let mut hi = vec![params.input_bound; cols];
    let mut dev = vec![Deviation::default(); cols];
    let mut symbols = 0usize;
    let mut worst_noise = (0.0, 0);
    for (l, layer) in layers.iter().enumerate() {
        let activate = l < HIDDEN_LAYERS;
        let mut nlo = Vec::with_capacity(layer.rows);
        let mut nhi = Vec::with_capacity(layer.rows);
        let mut ndev = Vec::with_capacity(layer.rows);
        for r in 0..layer.rows {
            let (mut zl, mut zh) = (layer.b[r], layer.b[r]);
            let mut d = Deviation::default();
            let mut noise = 0.0;
            let mut designated_radius = 0.0;
            for c in 0..layer.cols {
                let is_designated = designated == WeightIndex { layer: l, row: r, col: c };
                let (wl, wh) = if is_designated {
                    range
                } else {
                    let w = layer.get(r, c);
                    (w, w)
                };
                let prods = [wl * lo[c], wl * hi[c], wh * lo[c], wh * hi[c]];
                zl += prods.iter().cloned().fold(f64::INFINITY, f64::min);
                zh += prods.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if is_designated {
                    // The designated weight varies, so its contribution to the
                    // deviation is bounded by magnitude only.
                    designated_radius += wl.abs().max(wh.abs()) * dev[c].radius();
                } else {
                    d.add_scaled(&dev[c], wl);
                    noise += p * (lo[c].abs().max(hi[c].abs()) + dev[c].radius());
                }
            }
            if noise > worst_noise.0 {
                worst_noise = (noise, l);
            }
            d.add_scaled(&Deviation::fresh(&mut symbols, noise + designated_radius), 1.0);
            if activate {
                let rad = d.radius();
                if zl - rad >= 0.0 {
                    // Always active: deviation passes through unchanged.
                } else if zh + rad <= 0.0 {
                    d = Deviation::default();
                } else {
                    d = Deviation::fresh(&mut symbols, rad);
                }
                nlo.push(relu(zl));
                nhi.push(relu(zh));
            } else {
                nlo.push(zl);
                nhi.push(zh);
            }
            ndev.push(d);
        }
        lo = nlo;
        hi = nhi;
        dev = ndev;
    }
    (dev[0].radius(), worst_noise.1)
}

/// Builds a flip network, choosing the gate bias that minimizes the
/// worst-case deviation bound, and fails if that bound exceeds `epsilon`.
pub fn build_flip_network(g: &ShallowNet, h: &ShallowNet, params: FlipParams) -> Result<FlipNet> {
    params.validate()?;
    if params.sharpness < 1.0 {
        return Err(Error::InfeasibleTolerance {
            constraint: "ramp sharpness (switch cannot saturate below 1)".into(),
            bound: 1.0,
            budget: params.sharpness,
        });
    }
    let mut best: Option<FlipNet> = None;
    for i in 0..=160 {
        let b = 10f64.powf(-4.0 + 0.05 * i as f64);
        let net = assemble_flip_network(g, h, params, b)?;
        if best.as_ref().is_none_or(|n| net.deviation_bound < n.deviation_bound) {
            best = Some(net);
        }
    }
    let net = best.expect("grid is nonempty");
    debug_assert_eq!(net.designated_weight(), 0.0);
    if net.deviation_bound >= params.epsilon {
        let (_, binding) = deviation_bound(&net.layers, net.designated, &params);
        return Err(Error::InfeasibleTolerance {
            constraint: format!(
                "perturbation noise through the {} layer",
                LAYER_NAMES[binding]
            ),
            bound: net.deviation_bound,
            budget: params.epsilon,
        });
    }
    Ok(net)
}

/// Largest `delta2` (with `delta1 = delta2 / 10`) for which
/// [`build_flip_network`] succeeds, found by bisection in log space.
pub fn feasible_delta2(g: &ShallowNet, h: &ShallowNet, epsilon: f64, sharpness: f64) -> Result<f64> {
    let ok = |d2: f64| {
        let params = FlipParams {
            sharpness,
            ..FlipParams::new(d2 / 10.0, d2, epsilon)
        };
        build_flip_network(g, h, params).is_ok()
    };
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    if !ok(lo) {
        return Err(Error::InfeasibleTolerance {
            constraint: "no perturbation scale meets the tolerance".into(),
            bound: lo,
            budget: epsilon,
        });
    }
    if ok(hi) {
        return Ok(hi);
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest `|F(x) - target(x)|` over the grid.
pub fn sup_error(net: &FlipNet, grid: &[Vec<f64>], target: &ShallowNet) -> f64 {
    grid.iter()
        .map(|x| (net.eval(x) - target.eval(x)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VerifyMode {
    /// Perturb only the designated weight, by `+-(delta1 + delta2) / 2`.
    DesignatedOnly,
    /// Perturb every weight i.i.d. uniform in `[-scale, scale]`.
    FullIid { scale: f64, trials: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipReport {
    pub sup_error_pos: f64,
    pub sup_error_neg: f64,
    /// Fraction of all trials with a positive designated draw and output
    /// within `epsilon` of `g`.
    pub flip_rate_pos: Option<f64>,
    pub flip_rate_neg: Option<f64>,
    /// Uniform-CDF probability of a draw in `(delta1, delta2)`.
    pub theorem_bound: Option<f64>,
    pub trials: Option<usize>,
    pub epsilon: f64,
}

impl FlipReport {
    pub fn designated_pass(&self) -> bool {
        self.sup_error_pos < self.epsilon && self.sup_error_neg < self.epsilon
    }

    /// Binomial standard error of a flip rate at the theorem bound.
    pub fn binomial_se(&self) -> Option<f64> {
        let (b, n) = (self.theorem_bound?, self.trials?);
        Some((b * (1.0 - b) / n as f64).sqrt())
    }
}

/// `F(delta2) - F(delta1)` for the uniform distribution on `[-scale, scale]`.
pub fn uniform_flip_bound(delta1: f64, delta2: f64, scale: f64) -> f64 {
    let cdf = |t: f64| ((t + scale) / (2.0 * scale)).clamp(0.0, 1.0);
    cdf(delta2) - cdf(delta1)
}

pub fn verify_flip(net: &FlipNet, grid_points: usize, mode: VerifyMode) -> Result<FlipReport> {
    if grid_points < 2 {
        return Err(Error::InvalidValue(format!("grid needs >= 2 points, got {grid_points}")));
    }
    let grid = net.grid(grid_points);
    let p = net.params;
    let mid = 0.5 * (p.delta1 + p.delta2);
    let mut report = FlipReport {
        sup_error_pos: sup_error(&net.with_designated(mid), &grid, &net.g),
        sup_error_neg: sup_error(&net.with_designated(-mid), &grid, &net.h),
        flip_rate_pos: None,
        flip_rate_neg: None,
        theorem_bound: None,
        trials: None,
        epsilon: p.epsilon,
    };
    if let VerifyMode::FullIid { scale, trials, seed } = mode {
        if !(scale > 0.0 && scale <= p.delta2) {
            return Err(Error::InvalidValue(format!(
                "perturbation scale must lie in (0, delta2 = {}], got {scale}",
                p.delta2
            )));
        }
        if trials == 0 {
            return Err(Error::InvalidValue("need at least one trial".into()));
        }
        let base = mix(seed, SALT_FLIP);
        let (mut pos, mut neg) = (0usize, 0usize);
        for t in 0..trials {
            let mut rng = rng_from_seed(offspring_seed(base, t as u64));
            let mut perturbed = net.clone();
            for layer in &mut perturbed.layers {
                for w in &mut layer.w {
                    *w += rng.random_range(-scale..=scale);
                }
            }
            let target = if perturbed.designated_weight() > 0.0 {
                &net.g
            } else {
                &net.h
            };
            if sup_error(&perturbed, &grid, target) < p.epsilon {
                if perturbed.designated_weight() > 0.0 {
                    pos += 1;
                } else {
                    neg += 1;
                }
            }
        }
        report.flip_rate_pos = Some(pos as f64 / trials as f64);
        report.flip_rate_neg = Some(neg as f64 / trials as f64);
        report.theorem_bound = Some(uniform_flip_bound(p.delta1, p.delta2, scale));
        report.trials = Some(trials);
    }
    Ok(report)
}

/// Safety factor applied to the feasible `delta2` by [`flip_demo`].
pub const DEMO_DELTA2_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipDemo {
    pub params: FlipParams,
    pub gate_bias: f64,
    pub deviation_bound: f64,
    pub designated: FlipReport,
    pub full_iid: FlipReport,
}

impl FlipDemo {
    /// Designated flips within tolerance and the i.i.d. flip rate at or
    /// above the theorem bound within three binomial standard errors.
    pub fn passed(&self) -> bool {
        let iid_ok = match (self.full_iid.flip_rate_pos, self.full_iid.theorem_bound, self.full_iid.binomial_se()) {
            (Some(rate), Some(bound), Some(se)) => rate >= bound - 3.0 * se,
            _ => false,
        };
        self.designated.designated_pass() && iid_ok
    }
}

/// `g(x) = x`, `h(x) = -x` on `[0, 1]` at a safe fraction of the largest
/// feasible `delta2`, checked in both verification modes.
pub fn flip_demo(epsilon: f64, grid_points: usize, trials: usize, seed: u64) -> Result<FlipDemo> {
    let g = ShallowNet::identity(1);
    let h = ShallowNet::negated_identity(1);
    let d2 = DEMO_DELTA2_FRACTION * feasible_delta2(&g, &h, epsilon, DEFAULT_SHARPNESS)?;
    let net = build_flip_network(&g, &h, FlipParams::new(d2 / 10.0, d2, epsilon))?;
    Ok(FlipDemo {
        params: net.params,
        gate_bias: net.gate_bias,
        deviation_bound: net.deviation_bound,
        designated: verify_flip(&net, grid_points, VerifyMode::DesignatedOnly)?,
        full_iid: verify_flip(
            &net,
            grid_points,
            VerifyMode::FullIid {
                scale: d2,
                trials,
                seed,
            },
        )?,
    })
}
