//! Seeded random patterned matrices with shared entries.
//!
//! The value attached to a label is a pure function of `(seed, label)`: a
//! ChaCha8 stream is keyed by both and the entry distribution is sampled
//! from it. Values therefore do not depend on fill order, on `n`, or on
//! which matrix of a coupled pair is being built.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use libm::erf;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::pattern::{Label, PatternMap};
use crate::quad;

/// Dense storage ceiling for [`build_matrix`].
pub const MAX_DIM: u64 = 4000;

/// Mean-zero, variance-one entry distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EntryDistribution {
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
    /// Density proportional to `x^{-(3 + eps0)} (log x)^{-2}` on `[e, inf)`,
    /// shifted and scaled to mean 0 and variance 1. Only moments of order
    /// below `2 + eps0` exist.
    HeavyTail { eps0: f64 },
    /// `(X 1{|X| <= u} + m(u)) / sigma(u)` for `X` drawn from `base`.
    Truncated { u: f64, base: Box<EntryDistribution> },
}

impl EntryDistribution {
    pub fn name(&self) -> String {
        match self {
            EntryDistribution::Gaussian => "gaussian".into(),
            EntryDistribution::Rademacher => "rademacher".into(),
            EntryDistribution::Uniform => "uniform".into(),
            EntryDistribution::HeavyTail { eps0 } => format!("heavytail({eps0})"),
            EntryDistribution::Truncated { u, base } => format!("truncated({}, u={u})", base.name()),
        }
    }

    pub fn truncated(self, u: f64) -> Self {
        EntryDistribution::Truncated {
            u,
            base: Box::new(self),
        }
    }

    /// Checks that the distribution is well defined with variance one.
    pub fn validate(&self) -> Result<()> {
        LabelSampler::new(self).map(|_| ())
    }

    /// Moments available in closed form or by quadrature:
    /// `(mean, variance, highest finite absolute moment order or None if all)`.
    pub fn moment_metadata(&self) -> MomentMetadata {
        let finite_moments_below = match self {
            EntryDistribution::HeavyTail { eps0 } => Some(2.0 + eps0),
            _ => None,
        };
        MomentMetadata {
            mean: 0.0,
            variance: 1.0,
            finite_moments_below,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentMetadata {
    pub mean: f64,
    pub variance: f64,
    /// `E|X|^p` is finite exactly for `p` below this order; `None` when all
    /// moments exist.
    pub finite_moments_below: Option<f64>,
}

/// Normalizing constant, mean and standard deviation of the raw heavy-tailed
/// variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailStandardization {
    pub eps0: f64,
    /// `Z = int_e^inf x^{-(3 + eps0)} (log x)^{-2} dx`.
    pub normalizer: f64,
    pub mean: f64,
    pub sd: f64,
}

const QUAD_TOL: f64 = 1e-14;

/// `int_a^b x^p x^{-(3 + eps0)} (log x)^{-2} dx` for `e <= a <= b <= inf`.
///
/// With `x = exp(1/s)` the integrand becomes `exp(-(2 + eps0 - p) / s)` on
/// `s in [1/log b, 1/log a]`, which is bounded whenever `p <= 2 + eps0`.
fn heavy_partial(eps0: f64, p: f64, a: f64, b: f64) -> Result<f64> {
    let a = a.max(std::f64::consts::E);
    if b <= a {
        return Ok(0.0);
    }
    let s_hi = 1.0 / a.ln();
    let s_lo = if b.is_infinite() { 0.0 } else { 1.0 / b.ln() };
    let beta = 2.0 + eps0 - p;
    if s_lo == 0.0 && beta < 0.0 {
        return Err(Error::Quadrature(format!(
            "moment of order {p} diverges for eps0 = {eps0}"
        )));
    }
    quad::integrate(
        |s| if s <= 0.0 { if beta > 0.0 { 0.0 } else { 1.0 } } else { (-beta / s).exp() },
        s_lo,
        s_hi,
        QUAD_TOL,
    )
}

pub fn heavy_tail_standardization(eps0: f64) -> Result<HeavyTailStandardization> {
    if !(eps0.is_finite() && eps0 >= 0.0) {
        return Err(Error::invalid(format!("eps0 must be finite and nonnegative, got {eps0}")));
    }
    let inf = f64::INFINITY;
    let e = std::f64::consts::E;
    let normalizer = heavy_partial(eps0, 0.0, e, inf)?;
    let mean = heavy_partial(eps0, 1.0, e, inf)? / normalizer;
    let second = heavy_partial(eps0, 2.0, e, inf)? / normalizer;
    let var = second - mean * mean;
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::Quadrature(format!("non-positive variance {var} for eps0 = {eps0}")));
    }
    Ok(HeavyTailStandardization {
        eps0,
        normalizer,
        mean,
        sd: var.sqrt(),
    })
}

/// `E[|X|^p 1{X <= exp(log_upper)}]` for the raw heavy-tailed variable, used
/// to watch moments of order `p >= 2 + eps0` diverge as the cutoff grows.
pub fn heavy_tail_truncated_moment(eps0: f64, p: f64, log_upper: f64) -> Result<f64> {
    if !(log_upper > 1.0) {
        return Ok(0.0);
    }
    let st = heavy_tail_standardization(eps0)?;
    let beta = 2.0 + eps0 - p;
    let v = quad::integrate(|s| (-beta / s).exp(), 1.0 / log_upper, 1.0, QUAD_TOL)?;
    Ok(v / st.normalizer)
}

/// CDF of the raw (unstandardized) heavy-tailed variable.
pub fn heavy_tail_raw_cdf(st: &HeavyTailStandardization, x: f64) -> Result<f64> {
    if x <= std::f64::consts::E {
        return Ok(0.0);
    }
    Ok((heavy_partial(st.eps0, 0.0, std::f64::consts::E, x)? / st.normalizer).min(1.0))
}

/// `m(u) = E[X 1{|X| > u}]` and `sigma^2(u) = E[X^2 1{|X| <= u}] - m(u)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub u: f64,
    pub m_u: f64,
    pub sigma2_u: f64,
}

impl TruncationParams {
    pub fn sigma(&self) -> f64 {
        self.sigma2_u.max(0.0).sqrt()
    }

    /// `E[X~^2] = 1 - sigma^2(u) - 2 m(u)^2` for `X~ = X 1{|X| > u} - m(u)`.
    pub fn tilde_second_moment(&self) -> f64 {
        1.0 - self.sigma2_u - 2.0 * self.m_u * self.m_u
    }

    /// Bound on `|X^|` for the truncated-standardized variable.
    pub fn hat_bound(&self) -> f64 {
        (self.u + self.m_u.abs()) / self.sigma()
    }
}

pub fn truncation_params(dist: &EntryDistribution, u: f64) -> Result<TruncationParams> {
    if !(u > 0.0) {
        return Err(Error::invalid(format!("truncation level must be positive, got {u}")));
    }
    let (m_u, second) = match dist {
        EntryDistribution::Gaussian => {
            let z = u / std::f64::consts::SQRT_2;
            let phi = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
            (0.0, erf(z) - 2.0 * u * phi)
        }
        EntryDistribution::Rademacher => (0.0, if u >= 1.0 { 1.0 } else { 0.0 }),
        EntryDistribution::Uniform => {
            let r3 = 3f64.sqrt();
            (0.0, if u >= r3 { 1.0 } else { u * u * u / (3.0 * r3) })
        }
        EntryDistribution::HeavyTail { eps0 } => {
            let st = heavy_tail_standardization(*eps0)?;
            let (mu, sd, z) = (st.mean, st.sd, st.normalizer);
            let a = (mu - u * sd).max(std::f64::consts::E);
            let b = mu + u * sd;
            let i0 = heavy_partial(*eps0, 0.0, a, b)? / z;
            let i1 = heavy_partial(*eps0, 1.0, a, b)? / z;
            let i2 = heavy_partial(*eps0, 2.0, a, b)? / z;
            // Y = (X - mu) / sd; E[Y 1{|Y| > u}] = -E[Y 1{|Y| <= u}].
            let inner_first = (i1 - mu * i0) / sd;
            let inner_second = (i2 - 2.0 * mu * i1 + mu * mu * i0) / (sd * sd);
            (-inner_first, inner_second)
        }
        EntryDistribution::Truncated { .. } => {
            return Err(Error::invalid("truncation parameters of an already truncated distribution"))
        }
    };
    let sigma2_u = (second - m_u * m_u).min(1.0);
    Ok(TruncationParams { u, m_u, sigma2_u })
}

#[derive(Clone, Debug)]
enum Prepared {
    Gaussian,
    Rademacher,
    Uniform,
    HeavyTail { eps0: f64, mean: f64, sd: f64 },
    Truncated { params: TruncationParams, base: Box<Prepared> },
}

/// A distribution with its constants computed once, ready to sample label
/// values.
#[derive(Clone, Debug)]
pub struct LabelSampler {
    prepared: Prepared,
}

impl LabelSampler {
    pub fn new(dist: &EntryDistribution) -> Result<Self> {
        Ok(LabelSampler {
            prepared: prepare(dist)?,
        })
    }

    /// The value of `label` under `seed`.
    pub fn value(&self, seed: u64, label: Label) -> f64 {
        let mut rng = label_rng(seed, label);
        draw(&self.prepared, &mut rng)
    }

    /// For a truncated distribution, the base value and its transform from the
    /// same stream. For any other distribution both coincide.
    pub fn coupled_values(&self, seed: u64, label: Label) -> (f64, f64) {
        let mut rng = label_rng(seed, label);
        match &self.prepared {
            Prepared::Truncated { params, base } => {
                let x = draw(base, &mut rng);
                (x, truncate(params, x))
            }
            other => {
                let x = draw(other, &mut rng);
                (x, x)
            }
        }
    }

    pub fn truncation(&self) -> Option<TruncationParams> {
        match &self.prepared {
            Prepared::Truncated { params, .. } => Some(*params),
            _ => None,
        }
    }
}

fn prepare(dist: &EntryDistribution) -> Result<Prepared> {
    Ok(match dist {
        EntryDistribution::Gaussian => Prepared::Gaussian,
        EntryDistribution::Rademacher => Prepared::Rademacher,
        EntryDistribution::Uniform => Prepared::Uniform,
        EntryDistribution::HeavyTail { eps0 } => {
            let st = heavy_tail_standardization(*eps0)?;
            Prepared::HeavyTail {
                eps0: *eps0,
                mean: st.mean,
                sd: st.sd,
            }
        }
        EntryDistribution::Truncated { u, base } => {
            let params = truncation_params(base, *u)?;
            if !(params.sigma2_u > 0.0) {
                return Err(Error::DegenerateTruncation(*u));
            }
            Prepared::Truncated {
                params,
                base: Box::new(prepare(base)?),
            }
        }
    })
}

fn truncate(params: &TruncationParams, x: f64) -> f64 {
    let kept = if x.abs() <= params.u { x } else { 0.0 };
    (kept + params.m_u) / params.sigma()
}

fn draw(p: &Prepared, rng: &mut ChaCha8Rng) -> f64 {
    match p {
        Prepared::Gaussian => rng.sample(StandardNormal),
        Prepared::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        Prepared::Uniform => {
            let r3 = 3f64.sqrt();
            rng.random_range(-r3..r3)
        }
        Prepared::HeavyTail { eps0, mean, sd } => (sample_heavy_raw(*eps0, rng) - mean) / sd,
        Prepared::Truncated { params, base } => truncate(params, draw(base, rng)),
    }
}

/// Exact sampler for the raw heavy-tailed variable. In `t = log x` the
/// density is proportional to `exp(-(2 + eps0) t) / t^2` on `t >= 1`; propose
/// `t = 1 + Exp(2 + eps0)` and accept with probability `1 / t^2`.
fn sample_heavy_raw(eps0: f64, rng: &mut ChaCha8Rng) -> f64 {
    let rate = 2.0 + eps0;
    loop {
        let e: f64 = rng.sample(rand_distr::Exp1);
        let t = 1.0 + e / rate;
        if rng.random::<f64>() * t * t <= 1.0 {
            return t.exp();
        }
    }
}

fn label_rng(seed: u64, label: Label) -> ChaCha8Rng {
    let (tag, a, b) = match label {
        Label::Int(v) => (0u64, v, 0u64),
        Label::Pair(x, y) => (1u64, x, y),
    };
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// `X_label` under `seed`. Prepares the distribution on every call; use
/// [`LabelSampler`] in loops.
pub fn sample_label_value(dist: &EntryDistribution, seed: u64, label: Label) -> Result<f64> {
    Ok(LabelSampler::new(dist)?.value(seed, label))
}

/// Seed of replicate `index` derived from `master` (SplitMix64 finalizer over
/// both words).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct MatrixRealization {
    pub n: u64,
    pub map: PatternMap,
    pub dist: EntryDistribution,
    pub seed: u64,
    pub matrix: Array2<f64>,
}

impl MatrixRealization {
    /// Entry `(i, j)`, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[[i - 1, j - 1]]
    }
}

fn check_dim(map: &PatternMap, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    Error::check_budget("dense matrix dimension", n as u128, MAX_DIM as u128)?;
    if let Some(limit) = map.domain_limit() {
        if n > limit {
            return Err(Error::invalid(format!("n = {n} exceeds the map domain {limit}")));
        }
    }
    Ok(())
}

/// Upper-triangle rows `(i, i..n)`: each cell's label and sampled pair.
fn fill_rows(
    map: &PatternMap,
    n: u64,
    sampler: &LabelSampler,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<(f64, f64)>>> {
    par::try_map_range(exec, n as usize, |i| {
        let x = i as u64 + 1;
        (x..=n)
            .map(|y| Ok(sampler.coupled_values(seed, map.evaluate(x, y)?)))
            .collect::<Result<Vec<_>>>()
    })
}

fn assemble(n: usize, rows: &[Vec<(f64, f64)>], pick: impl Fn(&(f64, f64)) -> f64) -> Array2<f64> {
    let mut m = Array2::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        for (off, cell) in row.iter().enumerate() {
            let j = i + off;
            let v = pick(cell);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    m
}

pub fn build_matrix(map: &PatternMap, n: u64, dist: &EntryDistribution, seed: u64) -> Result<MatrixRealization> {
    build_matrix_with(map, n, dist, seed, Execution::default())
}

pub fn build_matrix_with(
    map: &PatternMap,
    n: u64,
    dist: &EntryDistribution,
    seed: u64,
    exec: Execution,
) -> Result<MatrixRealization> {
    check_dim(map, n)?;
    let sampler = LabelSampler::new(dist)?;
    let rows = fill_rows(map, n, &sampler, seed, exec)?;
    Ok(MatrixRealization {
        n,
        map: map.clone(),
        dist: dist.clone(),
        seed,
        matrix: assemble(n as usize, &rows, |c| c.1),
    })
}

/// The coupled pair `(H, H^)`: `H` carries `X_label` and `H^` carries
/// `(X_label 1{|X_label| <= u} + m(u)) / sigma(u)` for the same draws.
pub fn build_truncated_pair(
    map: &PatternMap,
    n: u64,
    dist: &EntryDistribution,
    u: f64,
    seed: u64,
) -> Result<(MatrixRealization, MatrixRealization)> {
    check_dim(map, n)?;
    let hat_dist = dist.clone().truncated(u);
    let sampler = LabelSampler::new(&hat_dist)?;
    let rows = fill_rows(map, n, &sampler, seed, Execution::default())?;
    let h = MatrixRealization {
        n,
        map: map.clone(),
        dist: dist.clone(),
        seed,
        matrix: assemble(n as usize, &rows, |c| c.0),
    };
    let h_hat = MatrixRealization {
        n,
        map: map.clone(),
        dist: hat_dist,
        seed,
        matrix: assemble(n as usize, &rows, |c| c.1),
    };
    Ok((h, h_hat))
}
