//! Exact t-SNE: perplexity-calibrated Gaussian affinities, the Student-t
//! KL gradient and a momentum/gain gradient-descent optimizer.
//!
//! The concept count is small (tens to a few hundred), so every step is the
//! dense `O(m²)` formulation; no Barnes-Hut approximation is used.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Maximum bisection steps per row when calibrating bandwidths.
pub const MAX_BISECTION_STEPS: usize = 64;
/// Entropy tolerance (bits) the bisection aims for.
const ENTROPY_TOL: f64 = 1e-5;
/// Largest entropy error accepted when the step budget runs out.
const ENTROPY_ACCEPT: f64 = 1e-3;
/// Floor for the per-parameter adaptive gain.
const MIN_GAIN: f64 = 0.01;
/// Standard deviation of the random initial layout.
const INIT_STD: f64 = 1e-4;
/// Relative magnitude of the noise separating identical input points.
const DUPLICATE_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Momentum before `momentum_switch_iter`.
    pub momentum: f64,
    /// Momentum from `momentum_switch_iter` on.
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    pub early_exaggeration_factor: f64,
    pub early_exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            early_exaggeration_factor: 12.0,
            early_exaggeration_iters: 250,
            seed: 0,
        }
    }
}

impl TsneParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if !(self.perplexity.is_finite() && self.perplexity > 0.0) {
            return bad("perplexity must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) || !(0.0..1.0).contains(&self.final_momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.early_exaggeration_factor.is_finite() && self.early_exaggeration_factor >= 1.0) {
            return bad("early exaggeration factor must be >= 1");
        }
        if self.iterations < self.early_exaggeration_iters {
            return bad("iterations must be >= early exaggeration iterations");
        }
        Ok(())
    }

    /// Perplexity actually used for `m` points: capped at `(m - 1) / 3`.
    pub fn effective_perplexity(&self, m: usize) -> f64 {
        let cap = (m.saturating_sub(1)) as f64 / 3.0;
        self.perplexity.min(cap)
    }
}

/// Input-space affinities of `m` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinities {
    m: usize,
    /// Row-stochastic conditionals `p(j|i)`, row-major, zero diagonal.
    conditional: Vec<f64>,
    /// Symmetrized joint distribution `(p(j|i) + p(i|j)) / 2m`.
    joint: Vec<f64>,
    /// Calibrated precision `1 / 2σ²` per row.
    betas: Vec<f64>,
}

impl Affinities {
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn conditional(&self) -> &[f64] {
        &self.conditional
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Wraps an externally built joint matrix after checking it is a valid
    /// affinity matrix (square, symmetric, non-negative, zero diagonal,
    /// summing to one).
    pub fn from_joint(m: usize, joint: Vec<f64>) -> Result<Self> {
        check_joint(m, &joint)?;
        Ok(Self { m, conditional: Vec::new(), joint, betas: Vec::new() })
    }
}

fn check_joint(m: usize, p: &[f64]) -> Result<()> {
    if p.len() != m * m {
        return Err(Error::DimensionMismatch { expected: m * m, actual: p.len() });
    }
    let mut total = 0.0;
    for i in 0..m {
        if p[i * m + i] != 0.0 {
            return Err(Error::InvalidParameter(format!("P[{i},{i}] must be zero")));
        }
        for j in 0..m {
            let v = p[i * m + j];
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("P[{i},{j}] = {v} is not a probability")));
            }
            if (v - p[j * m + i]).abs() > 1e-12 {
                return Err(Error::InvalidParameter("P must be symmetric".into()));
            }
            total += v;
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("P sums to {total}, expected 1")));
    }
    Ok(())
}

fn squared_distances(points: &[f64], width: usize) -> Vec<f64> {
    let m = points.len() / width;
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        let a = &points[i * width..(i + 1) * width];
        for j in (i + 1)..m {
            let b = &points[j * width..(j + 1) * width];
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            dist[i * m + j] = d;
            dist[j * m + i] = d;
        }
    }
    dist
}

/// Fills `out` with `p(j|i)` for precision `beta` over the shifted squared
/// distances `shifted` (self entry excluded by the caller via `skip`) and
/// returns the entropy in bits.
fn conditional_row(shifted: &[f64], skip: usize, beta: f64, out: &mut [f64]) -> f64 {
    let mut z = 0.0;
    for (j, (&d, o)) in shifted.iter().zip(out.iter_mut()).enumerate() {
        *o = if j == skip { 0.0 } else { libm::exp(-beta * d) };
        z += *o;
    }
    let mut weighted = 0.0;
    for (j, (&d, o)) in shifted.iter().zip(out.iter_mut()).enumerate() {
        if j != skip {
            *o /= z;
            weighted += *o * d;
        }
    }
    (libm::log(z) + beta * weighted) / core::f64::consts::LN_2
}

/// Gaussian affinities whose per-row conditional entropy equals
/// `log2(perplexity)`, found by bisection on the precision.
///
/// `points` is a row-major `m × width` matrix. Fails with
/// [`Error::BisectionFailed`] when a row cannot reach the target entropy,
/// which happens when all of its neighbours are equidistant (e.g. every
/// point identical) and the target differs from `log2(m - 1)`.
pub fn compute_affinities(points: &[f64], width: usize, perplexity: f64) -> Result<Affinities> {
    if width == 0 || !points.len().is_multiple_of(width) {
        return Err(Error::DimensionMismatch { expected: width, actual: points.len() });
    }
    let m = points.len() / width;
    if m < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 points, got {m}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("points must be finite".into()));
    }
    if !(perplexity >= 1.0 && perplexity <= (m - 1) as f64) {
        return Err(Error::InvalidParameter(format!("perplexity {perplexity} outside [1, {}]", m - 1)));
    }
    let target = libm::log2(perplexity);
    let dist = squared_distances(points, width);
    let mut conditional = vec![0.0; m * m];
    let mut betas = vec![0.0; m];
    let mut shifted = vec![0.0; m];

    for i in 0..m {
        let row = &dist[i * m..(i + 1) * m];
        let min = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).fold(f64::INFINITY, f64::min);
        for (j, s) in shifted.iter_mut().enumerate() {
            *s = if j == i { 0.0 } else { row[j] - min };
        }
        // Start from the row's own distance scale.
        let mean = row.iter().sum::<f64>() / (m - 1) as f64;

        let out = &mut conditional[i * m..(i + 1) * m];
        let mut beta = if mean > 0.0 { 1.0 / mean } else { 1.0 };
        let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
        let mut entropy = conditional_row(&shifted, i, beta, out);
        for _ in 1..MAX_BISECTION_STEPS {
            let diff = entropy - target;
            if diff.abs() < ENTROPY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_infinite() { beta * 2.0 } else { 0.5 * (lo + hi) };
            } else {
                hi = beta;
                beta = 0.5 * (lo + hi);
            }
            entropy = conditional_row(&shifted, i, beta, out);
        }
        if (entropy - target).is_nan() || (entropy - target).abs() >= ENTROPY_ACCEPT {
            return Err(Error::BisectionFailed { row: i });
        }
        betas[i] = beta;
    }

    let mut joint = vec![0.0; m * m];
    let norm = 2.0 * m as f64;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                joint[i * m + j] = (conditional[i * m + j] + conditional[j * m + i]) / norm;
            }
        }
    }
    Ok(Affinities { m, conditional, joint, betas })
}

fn check_layout(p: &[f64], y: &[f64], m: usize, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
    }
    if p.len() != m * m {
        return Err(Error::DimensionMismatch { expected: m * m, actual: p.len() });
    }
    if y.len() != m * d {
        return Err(Error::DimensionMismatch { expected: m * d, actual: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("embedding must be finite".into()));
    }
    Ok(())
}

/// Student-t kernel weights `1 / (1 + |y_i - y_j|²)` (zero diagonal) and
/// their total.
fn student_weights(y: &[f64], m: usize, d: usize, w: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..m {
        w[i * m + i] = 0.0;
        let yi = &y[i * d..(i + 1) * d];
        for j in (i + 1)..m {
            let yj = &y[j * d..(j + 1) * d];
            let sq: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
            let k = 1.0 / (1.0 + sq);
            w[i * m + j] = k;
            w[j * m + i] = k;
            total += 2.0 * k;
        }
    }
    total
}

fn gradient_into(p: &[f64], scale: f64, y: &[f64], m: usize, d: usize, w: &mut [f64], grad: &mut [f64]) {
    let z = student_weights(y, m, d, w);
    grad.iter_mut().for_each(|g| *g = 0.0);
    for i in 0..m {
        let yi = &y[i * d..(i + 1) * d];
        let gi = &mut grad[i * d..(i + 1) * d];
        for j in 0..m {
            if i == j {
                continue;
            }
            let k = w[i * m + j];
            let coeff = 4.0 * (scale * p[i * m + j] - k / z) * k;
            let yj = &y[j * d..(j + 1) * d];
            for ((g, a), b) in gi.iter_mut().zip(yi).zip(yj) {
                *g += coeff * (a - b);
            }
        }
    }
}

/// Gradient of `KL(P ‖ Q)` with respect to the embedding `y` (row-major
/// `m × d`), where `Q` uses the Student-t kernel.
pub fn gradient(p: &[f64], y: &[f64], m: usize, d: usize) -> Result<Vec<f64>> {
    check_layout(p, y, m, d)?;
    let mut w = vec![0.0; m * m];
    let mut grad = vec![0.0; m * d];
    gradient_into(p, 1.0, y, m, d, &mut w, &mut grad);
    Ok(grad)
}

/// `KL(P ‖ Q)` in nats for embedding `y`.
pub fn kl_divergence(p: &[f64], y: &[f64], m: usize, d: usize) -> Result<f64> {
    check_layout(p, y, m, d)?;
    let mut w = vec![0.0; m * m];
    let z = student_weights(y, m, d, &mut w);
    let mut kl = 0.0;
    for (pij, wij) in p.iter().zip(&w) {
        if *pij > 0.0 {
            kl += pij * libm::log(pij * z / wij);
        }
    }
    Ok(kl)
}

/// Seeded Gaussian initial layout used by [`optimize`].
pub fn initial_layout(m: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed);
    (0..m * d).map(|_| INIT_STD * rng.gaussian()).collect()
}

/// Minimizes `KL(P ‖ Q)` by gradient descent with momentum, per-parameter
/// adaptive gains and early exaggeration. Deterministic in `(P, d, params)`.
pub fn optimize(affinities: &Affinities, d: usize, params: &TsneParams) -> Result<Vec<f64>> {
    params.validate()?;
    if !(2..=3).contains(&d) {
        return Err(Error::InvalidParameter(format!("embedding dimension {d} not in {{2, 3}}")));
    }
    let m = affinities.len();
    let p = affinities.joint();
    let mut y = initial_layout(m, d, params.seed);
    check_layout(p, &y, m, d)?;

    let mut update = vec![0.0; m * d];
    let mut gains = vec![1.0; m * d];
    let mut grad = vec![0.0; m * d];
    let mut w = vec![0.0; m * m];

    for iter in 0..params.iterations {
        let exaggeration = if iter < params.early_exaggeration_iters { params.early_exaggeration_factor } else { 1.0 };
        let momentum = if iter < params.momentum_switch_iter { params.momentum } else { params.final_momentum };
        gradient_into(p, exaggeration, &y, m, d, &mut w, &mut grad);

        for ((g, u), gain) in grad.iter().zip(update.iter_mut()).zip(gains.iter_mut()) {
            *gain = if (*g > 0.0) != (*u > 0.0) { *gain + 0.2 } else { *gain * 0.8 };
            if *gain < MIN_GAIN {
                *gain = MIN_GAIN;
            }
            *u = momentum * *u - params.learning_rate * *gain * g;
        }
        for (yi, u) in y.iter_mut().zip(&update) {
            *yi += u;
        }
        for k in 0..d {
            let mean = (0..m).map(|i| y[i * d + k]).sum::<f64>() / m as f64;
            (0..m).for_each(|i| y[i * d + k] -= mean);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: iter });
        }
    }
    Ok(y)
}

/// Perturbs every row that exactly repeats an earlier row by seeded noise of
/// relative magnitude 1e-8, so bandwidth calibration never sees two
/// coincident points. Returns the number of rows perturbed.
pub fn separate_duplicates(points: &mut [f64], width: usize, seed: u64) -> usize {
    let m = points.len() / width;
    let mut rng = SeededRng::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut perturbed = 0;
    for i in 1..m {
        let duplicate = (0..i).any(|j| points[j * width..(j + 1) * width] == points[i * width..(i + 1) * width]);
        if duplicate {
            let row = &mut points[i * width..(i + 1) * width];
            let magnitude = row.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0) * DUPLICATE_JITTER;
            row.iter_mut().for_each(|v| *v += magnitude * rng.gaussian());
            perturbed += 1;
        }
    }
    perturbed
}

/// Result of the full high-dimensional → `d` reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// Row-major `m × d` coordinates (unnormalized).
    pub coords: Vec<f64>,
    pub d: usize,
    pub perplexity: f64,
    pub initial_kl: f64,
    pub final_kl: f64,
    pub duplicates_perturbed: usize,
}

/// Separates duplicates, calibrates affinities at the capped perplexity and
/// runs the optimizer.
pub fn embed(points: &[f64], width: usize, d: usize, params: &TsneParams) -> Result<Embedding> {
    params.validate()?;
    if width == 0 || !points.len().is_multiple_of(width) {
        return Err(Error::DimensionMismatch { expected: width, actual: points.len() });
    }
    let m = points.len() / width;
    let mut points = points.to_vec();
    let duplicates_perturbed = separate_duplicates(&mut points, width, params.seed);
    let perplexity = params.effective_perplexity(m).max(1.0);
    let affinities = compute_affinities(&points, width, perplexity)?;
    let initial = initial_layout(m, d, params.seed);
    let initial_kl = kl_divergence(affinities.joint(), &initial, m, d)?;
    let coords = optimize(&affinities, d, params)?;
    let final_kl = kl_divergence(affinities.joint(), &coords, m, d)?;
    Ok(Embedding { coords, d, perplexity, initial_kl, final_kl, duplicates_perturbed })
}
