//! Pattern maps `S: N x N -> I` and computational checks of the C-condition
//! (symmetry, coordinatewise injectivity, small dimension) on `[n]^2`.

use std::collections::HashMap;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Largest `n` accepted by the exact `O(n^2)` level-set routines.
pub const EXACT_MODE_MAX_N: u64 = 30_000;

/// The coefficient of `xy` in `S_alpha(x, y) = x^2 + y^2 + alpha * x * y`.
///
/// Rational values give a single scaled integer label
/// `den * (x^2 + y^2) + num * x * y`. An irrational value gives the pair
/// `(x^2 + y^2, xy)`: two such labels agree exactly when both components do.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha {
    Rational { num: u64, den: u64 },
    Irrational(f64),
}

impl Alpha {
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("alpha denominator must be positive"));
        }
        let g = num.gcd(&den);
        Ok(Alpha::Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(value: u64) -> Self {
        Alpha::Rational { num: value, den: 1 }
    }

    /// An irrational coefficient, known only through its approximate value.
    pub fn irrational(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::invalid(format!(
                "alpha must be finite and nonnegative, got {value}"
            )));
        }
        Ok(Alpha::Irrational(value))
    }

    /// Parses a nonnegative decimal such as `2`, `0.5` or `1.25` into an exact
    /// rational.
    pub fn parse_decimal(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("alpha must be a nonnegative decimal, got {s:?}"));
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || frac_part.len() > 12
        {
            return Err(bad());
        }
        let den = 10u64.pow(frac_part.len() as u32);
        let int: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Alpha::rational(num, den)
    }

    pub fn value(&self) -> f64 {
        match *self {
            Alpha::Rational { num, den } => num as f64 / den as f64,
            Alpha::Irrational(v) => v,
        }
    }

    /// `alpha = 2` is the one coefficient for which the quadruple count is
    /// of order `n^3`.
    pub fn is_two(&self) -> bool {
        matches!(*self, Alpha::Rational { num: 2, den: 1 })
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Alpha::Rational { num, den: 1 } => write!(f, "{num}"),
            Alpha::Rational { num, den } => write!(f, "{num}/{den}"),
            Alpha::Irrational(v) => write!(f, "{v}(irrational)"),
        }
    }
}

/// An exact label value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Int(u64),
    Pair(u64, u64),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Label::Int(v) => write!(f, "{v}"),
            Label::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternMap {
    /// `S(x, y) = xy`, the Helson pattern.
    Mul,
    /// `S(x, y) = x^2 + y^2 + alpha * x * y`.
    SAlpha(Alpha),
    /// `S(x, y) = x + y`, the Hankel pattern.
    Additive,
    /// Explicit row-major table on `[n_max]^2`, for constructing
    /// counterexamples.
    CustomTable { n_max: u64, table: Vec<u64> },
}

impl PatternMap {
    pub fn custom(n_max: u64, table: Vec<u64>) -> Result<Self> {
        if n_max == 0 || (table.len() as u64) != n_max * n_max {
            return Err(Error::invalid(format!(
                "custom table must have {n_max}^2 entries, got {}",
                table.len()
            )));
        }
        Ok(PatternMap::CustomTable { n_max, table })
    }

    pub fn name(&self) -> String {
        match self {
            PatternMap::Mul => "mul".into(),
            PatternMap::SAlpha(a) => format!("salpha({a})"),
            PatternMap::Additive => "additive".into(),
            PatternMap::CustomTable { n_max, .. } => format!("custom({n_max})"),
        }
    }

    /// Upper bound on coordinates, if the map has one.
    pub fn domain_limit(&self) -> Option<u64> {
        match self {
            PatternMap::CustomTable { n_max, .. } => Some(*n_max),
            _ => None,
        }
    }

    fn overflow(&self, x: u64, y: u64) -> Error {
        Error::LabelOverflow {
            map: self.name(),
            x,
            y,
        }
    }

    /// The label `S(x, y)` for `x, y >= 1`.
    pub fn evaluate(&self, x: u64, y: u64) -> Result<Label> {
        if x == 0 || y == 0 {
            return Err(Error::invalid(format!(
                "coordinates are 1-based, got ({x}, {y})"
            )));
        }
        match self {
            PatternMap::Mul => x
                .checked_mul(y)
                .map(Label::Int)
                .ok_or_else(|| self.overflow(x, y)),
            PatternMap::Additive => x
                .checked_add(y)
                .map(Label::Int)
                .ok_or_else(|| self.overflow(x, y)),
            PatternMap::SAlpha(alpha) => {
                let sq = x
                    .checked_mul(x)
                    .and_then(|xx| y.checked_mul(y).and_then(|yy| xx.checked_add(yy)));
                let xy = x.checked_mul(y);
                let (sq, xy) = match (sq, xy) {
                    (Some(s), Some(p)) => (s, p),
                    _ => return Err(self.overflow(x, y)),
                };
                match *alpha {
                    Alpha::Rational { num, den } => den
                        .checked_mul(sq)
                        .and_then(|a| num.checked_mul(xy).and_then(|b| a.checked_add(b)))
                        .map(Label::Int)
                        .ok_or_else(|| self.overflow(x, y)),
                    Alpha::Irrational(_) => Ok(Label::Pair(sq, xy)),
                }
            }
            PatternMap::CustomTable { n_max, table } => {
                if x > *n_max || y > *n_max {
                    return Err(Error::invalid(format!(
                        "({x}, {y}) outside the custom table domain [{n_max}]^2"
                    )));
                }
                Ok(Label::Int(table[((x - 1) * n_max + (y - 1)) as usize]))
            }
        }
    }

    fn check_domain(&self, n: u64) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if let Some(limit) = self.domain_limit() {
            if n > limit {
                return Err(Error::invalid(format!(
                    "n = {n} exceeds the custom table size {limit}"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of [`check_symmetry`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SymmetryCheck {
    Pass,
    Violation { x: u64, y: u64 },
}

/// Outcome of [`check_coordinatewise_injectivity`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum InjectivityCheck {
    Pass,
    /// `S(x, y) = S(x2, y)` with `x < x2`.
    Violation { x: u64, x2: u64, y: u64 },
}

/// Exhaustive scan of `[n]^2` for `S(x, y) != S(y, x)`. Reports the first
/// violating pair `(x, y)`, `x < y`, in lexicographic order.
pub fn check_symmetry(map: &PatternMap, n: u64) -> Result<SymmetryCheck> {
    map.check_domain(n)?;
    for x in 1..=n {
        for y in (x + 1)..=n {
            if map.evaluate(x, y)? != map.evaluate(y, x)? {
                return Ok(SymmetryCheck::Violation { x, y });
            }
        }
    }
    Ok(SymmetryCheck::Pass)
}

/// For every `y` in `[n]`, checks that `x -> S(x, y)` is injective on `[n]`.
pub fn check_coordinatewise_injectivity(map: &PatternMap, n: u64) -> Result<InjectivityCheck> {
    map.check_domain(n)?;
    let mut seen: HashMap<Label, u64> = HashMap::with_capacity(n as usize);
    for y in 1..=n {
        seen.clear();
        for x in 1..=n {
            if let Some(prev) = seen.insert(map.evaluate(x, y)?, x) {
                return Ok(InjectivityCheck::Violation { x: prev, x2: x, y });
            }
        }
    }
    Ok(InjectivityCheck::Pass)
}

/// Level-set sizes `|S_i^(n)|` and the quadruple count
/// `sum_i |S_i^(n)|^2 = #{(x, y, z, w) in [n]^4 : S(x, y) = S(z, w)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSummary {
    pub n: u64,
    /// Level-set sizes in ascending order.
    pub sizes: Vec<u64>,
    pub quadruple_count: u128,
    /// `quadruple_count / n^3` in lowest terms.
    pub ratio: Ratio<u128>,
}

impl LevelSetSummary {
    pub fn ratio_f64(&self) -> f64 {
        *self.ratio.numer() as f64 / *self.ratio.denom() as f64
    }

    pub fn num_labels(&self) -> usize {
        self.sizes.len()
    }
}

pub fn level_set_summary(map: &PatternMap, n: u64) -> Result<LevelSetSummary> {
    level_set_summary_with(map, n, Execution::default())
}

/// [`level_set_summary`] with an explicit execution mode. Rows are grouped
/// into bands counted independently and merged; the result does not depend
/// on the mode.
pub fn level_set_summary_with(map: &PatternMap, n: u64, exec: Execution) -> Result<LevelSetSummary> {
    map.check_domain(n)?;
    Error::check_budget(
        "level_set_summary n",
        n as u128,
        EXACT_MODE_MAX_N as u128,
    )?;
    let bands = band_count(n);
    let band_len = n.div_ceil(bands as u64);
    let partial = par::try_map_range(exec, bands, |b| -> Result<HashMap<Label, u64>> {
        let lo = 1 + b as u64 * band_len;
        let hi = ((b as u64 + 1) * band_len).min(n);
        let mut counts = HashMap::new();
        for x in lo..=hi {
            for y in 1..=n {
                *counts.entry(map.evaluate(x, y)?).or_insert(0u64) += 1;
            }
        }
        Ok(counts)
    })?;
    let mut merged: HashMap<Label, u64> = HashMap::new();
    for counts in partial {
        for (label, c) in counts {
            *merged.entry(label).or_insert(0) += c;
        }
    }
    let mut sizes: Vec<u64> = merged.into_values().collect();
    sizes.sort_unstable();
    let quadruple_count: u128 = sizes.iter().map(|&s| (s as u128) * (s as u128)).sum();
    let n3 = (n as u128).pow(3);
    Ok(LevelSetSummary {
        n,
        sizes,
        quadruple_count,
        ratio: Ratio::new(quadruple_count, n3),
    })
}

fn band_count(n: u64) -> usize {
    (n as usize).clamp(1, 64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: u64,
    pub quadruple_count: u128,
    pub ratio: Ratio<u128>,
    pub ratio_f64: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallDimensionTrend {
    pub points: Vec<TrendPoint>,
    pub strictly_decreasing: bool,
    /// Least-squares slope of `log ratio` against `log n`.
    pub log_log_slope: f64,
}

/// Slope below which a decreasing trend is read as consistent with a
/// quadruple count of order `o(n^3)`. Maps with `ratio ~ log n / n` sit near
/// `-0.8` on desk grids, while the additive map sits at `0`.
pub const C3_SLOPE_THRESHOLD: f64 = -0.25;

impl SmallDimensionTrend {
    /// Empirical verdict on the small-dimension condition over the tested grid.
    pub fn consistent_with_small_dimension(&self) -> bool {
        self.strictly_decreasing && self.log_log_slope <= C3_SLOPE_THRESHOLD
    }
}

pub fn small_dimension_trend(map: &PatternMap, ns: &[u64]) -> Result<SmallDimensionTrend> {
    if ns.is_empty() {
        return Err(Error::invalid("n grid must be nonempty"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n grid must be strictly ascending"));
    }
    if ns[0] < 2 {
        return Err(Error::invalid("n grid values must be at least 2"));
    }
    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let s = level_set_summary(map, n)?;
        points.push(TrendPoint {
            n,
            quadruple_count: s.quadruple_count,
            ratio: s.ratio,
            ratio_f64: s.ratio_f64(),
        });
    }
    let strictly_decreasing = points.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let log_log_slope = if points.len() < 2 {
        0.0
    } else {
        let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.ratio_f64.ln()).collect();
        let k = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    };
    Ok(SmallDimensionTrend {
        points,
        strictly_decreasing,
        log_log_slope,
    })
}

/// Labels of `[n]^2` compressed to dense ids `0..num_labels`, ordered by
/// label value. Combinatorial enumerations work with ids instead of labels.
#[derive(Clone, Debug)]
pub struct LabelTable {
    n: usize,
    ids: Vec<u32>,
    labels: Vec<Label>,
}

/// Cell budget for a dense [`LabelTable`].
pub const LABEL_TABLE_MAX_CELLS: u128 = 1 << 26;

impl LabelTable {
    pub fn new(map: &PatternMap, n: u64) -> Result<Self> {
        map.check_domain(n)?;
        Error::check_budget(
            "label table cells",
            (n as u128) * (n as u128),
            LABEL_TABLE_MAX_CELLS,
        )?;
        let rows = par::try_map_range(Execution::default(), n as usize, |i| {
            (1..=n)
                .map(|y| map.evaluate(i as u64 + 1, y))
                .collect::<Result<Vec<_>>>()
        })?;
        let cells: Vec<Label> = rows.into_iter().flatten().collect();
        let mut labels = cells.clone();
        labels.sort_unstable();
        labels.dedup();
        let ids = cells
            .iter()
            .map(|l| labels.binary_search(l).expect("label present") as u32)
            .collect();
        Ok(LabelTable {
            n: n as usize,
            ids,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Id of `S(x, y)`, 1-based coordinates.
    #[inline]
    pub fn id(&self, x: usize, y: usize) -> u32 {
        self.ids[(x - 1) * self.n + (y - 1)]
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, id: u32) -> Label {
        self.labels[id as usize]
    }

    pub fn id_of(&self, label: &Label) -> Option<u32> {
        self.labels.binary_search(label).ok().map(|i| i as u32)
    }
}

/// The inverse of the coordinatewise-injective map: `(S(x, y), y) -> x` on
/// `[n]^2`.
#[derive(Clone, Debug)]
pub struct InverseIndex {
    table: LabelTable,
    inverse: HashMap<(u32, u32), u32>,
}

impl InverseIndex {
    pub fn n(&self) -> usize {
        self.table.n
    }

    pub fn table(&self) -> &LabelTable {
        &self.table
    }

    /// The unique `x` in `[n]` with `S(x, y) = label`, if any.
    pub fn lookup(&self, label: &Label, y: u64) -> Option<u64> {
        let id = self.table.id_of(label)?;
        if y == 0 || y as usize > self.table.n {
            return None;
        }
        self.lookup_id(id, y as usize).map(|x| x as u64)
    }

    #[inline]
    pub fn lookup_id(&self, id: u32, y: usize) -> Option<usize> {
        self.inverse.get(&(id, y as u32)).map(|&x| x as usize)
    }
}

pub fn build_inverse_index(map: &PatternMap, n: u64) -> Result<InverseIndex> {
    let table = LabelTable::new(map, n)?;
    let n = table.n;
    let mut inverse = HashMap::with_capacity(n * n);
    for y in 1..=n {
        for x in 1..=n {
            if let Some(prev) = inverse.insert((table.id(x, y), y as u32), x as u32) {
                return Err(Error::InjectivityViolation {
                    x: prev as u64,
                    x2: x as u64,
                    y: y as u64,
                });
            }
        }
    }
    Ok(InverseIndex { table, inverse })
}
