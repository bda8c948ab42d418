//! Eigenvalues, empirical spectral distributions and the semicircle law.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, EigValsh, UPLO};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::pattern::PatternMap;
use crate::sampler::{self, EntryDistribution, MAX_DIM};
use crate::words::catalan_count;

/// Relative threshold for the numeric rank.
pub const RANK_TOL: f64 = 1e-8;

fn solver_error(e: impl std::fmt::Display) -> Error {
    Error::Eigen(e.to_string())
}

fn check_square(a: &Array2<f64>) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::DimensionMismatch(r, c));
    }
    if r == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    Error::check_budget("eigensolve dimension", r as u128, MAX_DIM as u128)?;
    Ok(r)
}

/// Full spectrum of a symmetric matrix, ascending.
pub fn eigenvalues(a: &Array2<f64>) -> Result<Vec<f64>> {
    check_square(a)?;
    let v = a.eigvalsh(UPLO::Upper).map_err(solver_error)?;
    let mut v = v.to_vec();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Eigenvalues with orthonormal eigenvectors in the columns.
pub fn eigenpairs(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    check_square(a)?;
    a.eigh(UPLO::Upper).map_err(solver_error)
}

/// `max ||A v - lambda v|| / ||A||_F` over the eigenpairs at `columns`.
pub fn max_residual(a: &Array2<f64>, values: &Array1<f64>, vectors: &Array2<f64>, columns: &[usize]) -> f64 {
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    columns
        .iter()
        .map(|&j| {
            let v = vectors.column(j);
            let r = a.dot(&v) - &(&v * values[j]);
            r.iter().map(|x| x * x).sum::<f64>().sqrt() / scale
        })
        .fold(0.0, f64::max)
}

/// Empirical spectral distribution of `A / sqrt(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Esd {
    n: usize,
    values: Vec<f64>,
}

impl Esd {
    pub fn from_matrix(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        let scale = (n as f64).sqrt();
        let values = eigenvalues(a)?.into_iter().map(|x| x / scale).collect();
        Ok(Esd { n, values })
    }

    /// Uses `values` as the atoms unchanged.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("ESD needs finite values"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Esd { n: values.len(), values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `#{j : lambda_j <= x} / n`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.n as f64
    }

    /// Left limit `#{j : lambda_j < x} / n`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v < x) as f64 / self.n as f64
    }

    /// `(1/n) sum_j lambda_j^k`.
    pub fn moment(&self, k: u32) -> f64 {
        let p: Vec<f64> = self.values.iter().map(|x| x.powi(k as i32)).collect();
        par::pairwise_sum(&p) / self.n as f64
    }
}

/// The semicircle law on `[-2, 2]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SemicircleRef;

impl SemicircleRef {
    pub fn density(&self, x: f64) -> f64 {
        if x.abs() >= 2.0 {
            0.0
        } else {
            (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= -2.0 {
            return 0.0;
        }
        if x >= 2.0 {
            return 1.0;
        }
        let pi = std::f64::consts::PI;
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * pi) + (x / 2.0).asin() / pi
    }

    /// Inverse CDF by bisection on `[-2, 2]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (-2.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// `m_k`: zero for odd `k`, the Catalan number `C_{k/2}` for even `k`.
    pub fn moment(&self, k: u32) -> Result<Ratio<u64>> {
        if k % 2 == 1 {
            return Ok(Ratio::from_integer(0));
        }
        Ok(Ratio::from_integer(catalan_count(k as u64 / 2)?))
    }
}

/// `sup_x |F_e(x) - F(x)|`, checked on both sides of every atom.
pub fn ks_distance(e: &Esd, reference: &SemicircleRef) -> f64 {
    let n = e.n as f64;
    let mut d: f64 = 0.0;
    let vals = &e.values;
    let mut i = 0;
    while i < vals.len() {
        let x = vals[i];
        let mut j = i;
        while j < vals.len() && vals[j] == x {
            j += 1;
        }
        let f = reference.cdf(x);
        d = d.max((f - i as f64 / n).abs()).max((f - j as f64 / n).abs());
        i = j;
    }
    d.min(1.0)
}

/// Sup distance between two ESD step functions.
pub fn ks_distance_between(a: &Esd, b: &Esd) -> f64 {
    let mut d: f64 = 0.0;
    for &x in a.values.iter().chain(b.values.iter()) {
        d = d.max((a.cdf(x) - b.cdf(x)).abs());
    }
    d
}

fn same_dims(a: &Array2<f64>, b: &Array2<f64>) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.nrows(), b.nrows()));
    }
    check_square(a)
}

/// `sqrt(Tr((B - A)^2) / n)`, which bounds the bounded-Lipschitz distance
/// between the spectral measures of `A` and `B`.
pub fn dbl_upper_bound(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    let n = same_dims(a, b)?;
    let sq: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| (y - x) * (y - x)).collect();
    Ok((par::pairwise_sum(&sq) / n as f64).sqrt())
}

/// `(1/n) sum_j |lambda_j(A) - lambda_j(B)|` with both spectra sorted.
pub fn eigenvalue_l1_gap(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    Ok(par::pairwise_sum(&d) / a.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankBoundCheck {
    pub sup_gap: f64,
    pub rank: usize,
    pub holds: bool,
}

/// Compares `||F^A - F^B||_inf` with `rank(A - B) / n`.
pub fn rank_bound_check(a: &Array2<f64>, b: &Array2<f64>) -> Result<RankBoundCheck> {
    let n = same_dims(a, b)?;
    let ea = Esd::from_values(eigenvalues(a)?)?;
    let eb = Esd::from_values(eigenvalues(b)?)?;
    let sup_gap = ks_distance_between(&ea, &eb);
    let diff = a - b;
    // Singular values of a symmetric matrix are the absolute eigenvalues.
    let sv: Vec<f64> = eigenvalues(&diff)?.into_iter().map(f64::abs).collect();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let rank = if top == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > RANK_TOL * top).count()
    };
    Ok(RankBoundCheck {
        sup_gap,
        rank,
        holds: sup_gap <= rank as f64 / n as f64 + 1e-10,
    })
}

/// ESDs of independent realizations; replicate `i` uses
/// `derive_seed(seed, i)`.
pub fn ensemble(
    map: &PatternMap,
    n: u64,
    dist: &EntryDistribution,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Esd>> {
    dist.validate()?;
    par::try_map_range(exec, reps, |i| {
        let m = sampler::build_matrix_with(map, n, dist, sampler::derive_seed(seed, i as u64), Execution::Sequential)?;
        Esd::from_matrix(&m.matrix)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub r: u32,
    pub mean: f64,
    pub stderr: f64,
}

/// Mean and standard error over `esds` of `m_r = Tr(H^r) / n^{r/2 + 1}`.
pub fn moment_estimate(esds: &[Esd], r: u32) -> MomentEstimate {
    let xs: Vec<f64> = esds.iter().map(|e| e.moment(r)).collect();
    let (mean, stderr) = par::mean_stderr(&xs);
    MomentEstimate { r, mean, stderr }
}

pub fn trace_moment_mc(
    map: &PatternMap,
    n: u64,
    dist: &EntryDistribution,
    r: u32,
    reps: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    trace_moment_mc_with(map, n, dist, r, reps, seed, Execution::default())
}

pub fn trace_moment_mc_with(
    map: &PatternMap,
    n: u64,
    dist: &EntryDistribution,
    r: u32,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<MomentEstimate> {
    if reps < 2 {
        return Err(Error::invalid("trace_moment_mc needs reps >= 2"));
    }
    let esds = ensemble(map, n, dist, reps, seed, exec)?;
    Ok(moment_estimate(&esds, r))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub n: u64,
    pub variance: f64,
}

/// Sample variance of `Tr((H / sqrt n)^r) / n` across replicates, per `n`.
pub fn variance_decay(
    map: &PatternMap,
    ns: &[u64],
    dist: &EntryDistribution,
    r: u32,
    reps: usize,
    seed: u64,
) -> Result<Vec<VariancePoint>> {
    if reps < 8 {
        return Err(Error::invalid("variance_decay needs reps >= 8"));
    }
    dist.validate()?;
    ns.iter()
        .map(|&n| {
            let esds = ensemble(map, n, dist, reps, seed, Execution::default())?;
            let xs: Vec<f64> = esds.iter().map(|e| e.moment(r)).collect();
            Ok(VariancePoint {
                n,
                variance: par::sample_variance(&xs),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// `counts / (n * width)` with `n` the total number of atoms.
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }
}

/// Bins `[lo + i w, lo + (i + 1) w)`, the last one closed on the right.
pub fn histogram(e: &Esd, bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::invalid("bins must be positive"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("need finite lo < hi, got [{lo}, {hi}]")));
    }
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in &e.values {
        if x < lo || x > hi {
            continue;
        }
        let i = (((x - lo) / w).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    let scale = e.n as f64 * w;
    let density = counts.iter().map(|&c| c as f64 / scale).collect();
    Ok(Histogram { lo, hi, counts, density })
}
