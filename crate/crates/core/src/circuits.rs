//! Circuits, S-matching and the equation system attached to a partition word.
//!
//! A circuit of length `r` in `[n]` is a map `pi: {0, ..., r} -> [n]` with
//! `pi(0) = pi(r)`; its `i`-th edge carries the label
//! `S(pi(i - 1), pi(i))`. All enumerations here are exact and guarded by
//! hard budgets.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{pow_saturating, Error, Result};
use crate::par::{self, Execution};
use crate::pattern::{build_inverse_index, InverseIndex, Label, LabelTable, PatternMap};
use crate::words::{is_partition_word, Word};

/// Budget on the number of enumerated objects (circuits, tuples, quadruples).
pub const ENUMERATION_BUDGET: u128 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    values: Vec<u64>,
}

impl Circuit {
    /// `values` lists `pi(0), ..., pi(r)`.
    pub fn new(values: Vec<u64>, n: u64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a circuit needs at least one edge"));
        }
        if values.first() != values.last() {
            return Err(Error::invalid("a circuit must satisfy pi(0) = pi(r)"));
        }
        if let Some(v) = values.iter().find(|&&v| v == 0 || v > n) {
            return Err(Error::invalid(format!("circuit value {v} outside [{n}]")));
        }
        Ok(Circuit { values })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchProfile {
    pub labels: Vec<Label>,
    /// Multiplicity of each distinct label, in order of first occurrence.
    pub multiplicities: Vec<usize>,
    pub s_matched: bool,
    pub pair_matched: bool,
    pub has_order3: bool,
    /// The matching pattern, when every label occurs exactly twice.
    pub word: Option<Word>,
}

pub fn match_profile(c: &Circuit, map: &PatternMap) -> Result<MatchProfile> {
    let labels = c
        .values
        .windows(2)
        .map(|e| map.evaluate(e[0], e[1]))
        .collect::<Result<Vec<_>>>()?;
    let word = Word::canonicalize(&labels);
    let mut multiplicities = vec![0usize; word.alphabet_size()];
    for &l in word.letters() {
        multiplicities[l as usize - 1] += 1;
    }
    let s_matched = multiplicities.iter().all(|&m| m >= 2);
    let pair_matched = multiplicities.iter().all(|&m| m == 2);
    let has_order3 = multiplicities.iter().any(|&m| m >= 3);
    Ok(MatchProfile {
        labels,
        multiplicities,
        s_matched,
        pair_matched,
        has_order3,
        word: pair_matched.then_some(word),
    })
}

/// Minimum multiplicity, maximum multiplicity and whether all
/// multiplicities are even, for a short slice of label ids.
fn multiplicity_summary(ids: &[u32], scratch: &mut Vec<u32>) -> (usize, usize, bool) {
    scratch.clear();
    scratch.extend_from_slice(ids);
    scratch.sort_unstable();
    let (mut min, mut max, mut even) = (usize::MAX, 0, true);
    let mut i = 0;
    while i < scratch.len() {
        let mut j = i + 1;
        while j < scratch.len() && scratch[j] == scratch[i] {
            j += 1;
        }
        let m = j - i;
        min = min.min(m);
        max = max.max(m);
        even &= m % 2 == 0;
        i = j;
    }
    (min, max, even)
}

/// Visits the edge-id vector of every circuit of length `r` in `[n]`.
///
/// Work is split into units by the first one or two circuit values. Each
/// unit folds into its own accumulator; accumulators come back in unit
/// order.
fn fold_circuits<A, I, F>(table: &LabelTable, r: usize, exec: Execution, init: I, visit: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &[u32]) + Sync + Send,
{
    let n = table.n();
    let prefix = r.min(2);
    let units = n.pow(prefix as u32);
    par::map_range(exec, units, |unit| {
        let mut acc = init();
        let mut vals = vec![1usize; r];
        let mut u = unit;
        for slot in (0..prefix).rev() {
            vals[slot] = u % n + 1;
            u /= n;
        }
        let mut edges = vec![0u32; r];
        loop {
            for i in 1..r {
                edges[i - 1] = table.id(vals[i - 1], vals[i]);
            }
            edges[r - 1] = table.id(vals[r - 1], vals[0]);
            visit(&mut acc, &edges);
            // Odometer over the free tail.
            let mut slot = r;
            loop {
                if slot == prefix {
                    return acc;
                }
                slot -= 1;
                if vals[slot] < n {
                    vals[slot] += 1;
                    break;
                }
                vals[slot] = 1;
            }
        }
    })
}

fn circuit_table(map: &PatternMap, r: usize, n: u64, what: &'static str) -> Result<LabelTable> {
    if r == 0 {
        return Err(Error::invalid("circuit length must be positive"));
    }
    Error::check_budget(what, pow_saturating(n, r as u32), ENUMERATION_BUDGET)?;
    LabelTable::new(map, n)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairMatchedCounts {
    pub k: usize,
    pub n: u64,
    /// `#Pi^S(k, n)`: circuits of length `2k` whose labels form `k` distinct pairs.
    pub total: u64,
    pub by_word: BTreeMap<Word, u64>,
}

impl PairMatchedCounts {
    /// `total / n^{k+1}`.
    pub fn normalized(&self) -> f64 {
        self.total as f64 / (self.n as f64).powi(self.k as i32 + 1)
    }
}

pub fn count_pair_matched(map: &PatternMap, k: usize, n: u64) -> Result<PairMatchedCounts> {
    count_pair_matched_with(map, k, n, Execution::default())
}

pub fn count_pair_matched_with(
    map: &PatternMap,
    k: usize,
    n: u64,
    exec: Execution,
) -> Result<PairMatchedCounts> {
    let table = circuit_table(map, 2 * k, n, "pair-matched circuits")?;
    let parts = fold_circuits(
        &table,
        2 * k,
        exec,
        || (BTreeMap::<Word, u64>::new(), Vec::new()),
        |(acc, scratch), edges| {
            let (min, max, _) = multiplicity_summary(edges, scratch);
            if min == 2 && max == 2 {
                *acc.entry(Word::canonicalize(edges)).or_insert(0) += 1;
            }
        },
    );
    let mut by_word = BTreeMap::new();
    for (part, _) in parts {
        for (w, c) in part {
            *by_word.entry(w).or_insert(0) += c;
        }
    }
    Ok(PairMatchedCounts {
        k,
        n,
        total: by_word.values().sum(),
        by_word,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Order3Count {
    pub r: usize,
    pub n: u64,
    /// S-matched circuits of length `r` with at least one label of
    /// multiplicity three or more.
    pub count: u64,
    /// `count / n^{1 + r/2}`.
    pub normalized: f64,
}

pub fn count_order3_matched(map: &PatternMap, r: usize, n: u64) -> Result<Order3Count> {
    count_order3_matched_with(map, r, n, Execution::default())
}

pub fn count_order3_matched_with(
    map: &PatternMap,
    r: usize,
    n: u64,
    exec: Execution,
) -> Result<Order3Count> {
    let table = circuit_table(map, r, n, "order-3 circuits")?;
    let count = fold_circuits(
        &table,
        r,
        exec,
        || (0u64, Vec::new()),
        |(acc, scratch), edges| {
            let (min, max, _) = multiplicity_summary(edges, scratch);
            if min >= 2 && max >= 3 {
                *acc += 1;
            }
        },
    )
    .into_iter()
    .map(|(c, _)| c)
    .sum();
    Ok(Order3Count {
        r,
        n,
        count,
        normalized: count as f64 / (n as f64).powf(1.0 + r as f64 / 2.0),
    })
}

/// Number of quadruples of circuits of length `r` in which every label
/// occurs at least twice across the quadruple and every circuit shares at
/// least one label with another circuit of the quadruple.
pub fn count_matched_quadruples(map: &PatternMap, r: usize, n: u64) -> Result<u64> {
    if r == 0 {
        return Err(Error::invalid("circuit length must be positive"));
    }
    Error::check_budget(
        "matched quadruples",
        pow_saturating(n, 4 * r as u32),
        ENUMERATION_BUDGET,
    )?;
    let table = LabelTable::new(map, n)?;
    let circuits: Vec<Vec<u32>> = fold_circuits(&table, r, Execution::Sequential, Vec::new, |acc, e| {
        acc.push(e.to_vec())
    })
    .into_iter()
    .flatten()
    .collect();
    let m = circuits.len();
    let counts = par::map_range(Execution::default(), m, |a| {
        let mut count = 0u64;
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let quad = [&circuits[a], &circuits[b], &circuits[c], &circuits[d]];
                    if quadruple_is_matched(&quad) {
                        count += 1;
                    }
                }
            }
        }
        count
    });
    Ok(counts.into_iter().sum())
}

fn quadruple_is_matched(quad: &[&Vec<u32>; 4]) -> bool {
    for (j, circuit) in quad.iter().enumerate() {
        let mut crossed = false;
        for (e, label) in circuit.iter().enumerate() {
            let self_matched = circuit.iter().enumerate().any(|(f, l)| f != e && l == label);
            let cross = quad
                .iter()
                .enumerate()
                .any(|(i, other)| i != j && other.contains(label));
            if !self_matched && !cross {
                return false;
            }
            crossed |= cross;
        }
        if !crossed {
            return false;
        }
    }
    true
}

/// `E[Tr((H_n^S)^r)]` for Rademacher entries: the number of circuits of
/// length `r` in which every label occurs an even number of times.
pub fn expected_trace_rademacher(map: &PatternMap, n: u64, r: usize) -> Result<u64> {
    expected_trace_rademacher_with(map, n, r, Execution::default())
}

pub fn expected_trace_rademacher_with(
    map: &PatternMap,
    n: u64,
    r: usize,
    exec: Execution,
) -> Result<u64> {
    let table = circuit_table(map, r, n, "Rademacher trace circuits")?;
    Ok(fold_circuits(
        &table,
        r,
        exec,
        || (0u64, Vec::new()),
        |(acc, scratch), edges| {
            if multiplicity_summary(edges, scratch).2 {
                *acc += 1;
            }
        },
    )
    .into_iter()
    .map(|(c, _)| c)
    .sum())
}

/// Kind of a variable `x_i` of an equation system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableRole {
    /// Precedes the first occurrence of a letter; solved for.
    Dependent,
    /// Precedes a second occurrence, or is `x_{2k}`; free.
    Undetermined,
}

/// One step of the right-to-left solver: `x_var` is the unique `x` with
/// `S(x, x_{var + 1}) = S(x_{rhs.0}, x_{rhs.1})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub var: usize,
    pub rhs: (usize, usize),
}

/// The system `S(x_{i-1}, x_i) = S(x_{j-1}, x_j)` for each letter occurring at
/// positions `i < j`, together with `x_0 = x_{2k}`.
#[derive(Clone, Debug)]
pub struct EquationSystem {
    word: Word,
    n: u64,
    /// `(i, j)`: 1-based first and second occurrence of each letter,
    /// ordered by `i`.
    pairs: Vec<(usize, usize)>,
    roles: Vec<VariableRole>,
    plan: Vec<Resolution>,
    index: InverseIndex,
}

impl EquationSystem {
    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of letters.
    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn roles(&self) -> &[VariableRole] {
        &self.roles
    }

    pub fn dependent(&self) -> Vec<usize> {
        self.vars_with(VariableRole::Dependent)
    }

    pub fn undetermined(&self) -> Vec<usize> {
        self.vars_with(VariableRole::Undetermined)
    }

    fn vars_with(&self, role: VariableRole) -> Vec<usize> {
        (0..self.roles.len()).filter(|&v| self.roles[v] == role).collect()
    }

    /// Resolution order, right to left.
    pub fn plan(&self) -> &[Resolution] {
        &self.plan
    }

    /// Human-readable equations, e.g. `S(x0,x1) = S(x3,x4)`.
    pub fn equations(&self) -> Vec<String> {
        let mut eqs: Vec<String> = self
            .pairs
            .iter()
            .map(|&(i, j)| format!("S(x{},x{}) = S(x{},x{})", i - 1, i, j - 1, j))
            .collect();
        eqs.push(format!("x0 = x{}", 2 * self.k()));
        eqs
    }

    /// Resolves the dependent variables in place, given the undetermined
    /// ones. Returns `false` when some dependent variable has no solution in
    /// `[n]` or the result violates `x_0 = x_{2k}`.
    fn solve(&self, vals: &mut [usize]) -> bool {
        let table = self.index.table();
        for step in &self.plan {
            let id = table.id(vals[step.rhs.0], vals[step.rhs.1]);
            match self.index.lookup_id(id, vals[step.var + 1]) {
                Some(x) => vals[step.var] = x,
                None => return false,
            }
        }
        vals[0] == vals[vals.len() - 1]
    }

    fn satisfied_by(&self, vals: &[usize]) -> bool {
        let table = self.index.table();
        vals[0] == vals[vals.len() - 1]
            && self
                .pairs
                .iter()
                .all(|&(i, j)| table.id(vals[i - 1], vals[i]) == table.id(vals[j - 1], vals[j]))
    }
}

pub fn build_equation_system(w: &Word, map: &PatternMap, n: u64) -> Result<EquationSystem> {
    if !is_partition_word(w) {
        return Err(Error::invalid(format!("{w} is not a partition word")));
    }
    let letters = w.letters();
    let len = letters.len();
    let k = len / 2;
    let mut first = vec![0usize; k + 1];
    let mut pairs = Vec::with_capacity(k);
    for (p, &l) in letters.iter().enumerate() {
        let pos = p + 1;
        if first[l as usize] == 0 {
            first[l as usize] = pos;
        } else {
            pairs.push((first[l as usize], pos));
        }
    }
    pairs.sort_unstable();
    let mut roles = vec![VariableRole::Undetermined; len + 1];
    for &(i, _) in &pairs {
        roles[i - 1] = VariableRole::Dependent;
    }
    let mut plan: Vec<Resolution> = pairs
        .iter()
        .map(|&(i, j)| Resolution {
            var: i - 1,
            rhs: (j - 1, j),
        })
        .collect();
    plan.sort_unstable_by(|a, b| b.var.cmp(&a.var));
    let index = build_inverse_index(map, n)?;
    Ok(EquationSystem {
        word: w.clone(),
        n,
        pairs,
        roles,
        plan,
        index,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// Iterate the `k + 1` undetermined variables and solve for the rest.
    #[default]
    Solver,
    /// Enumerate all of `[n]^{2k+1}`.
    Brute,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionCount {
    pub word: Word,
    pub n: u64,
    pub count: u128,
    /// `count / n^{k+1}`.
    pub p: Ratio<u128>,
}

impl SolutionCount {
    pub fn p_f64(&self) -> f64 {
        *self.p.numer() as f64 / *self.p.denom() as f64
    }
}

pub fn solution_count(w: &Word, map: &PatternMap, n: u64, mode: SolveMode) -> Result<SolutionCount> {
    solution_count_with(w, map, n, mode, Execution::default())
}

pub fn solution_count_with(
    w: &Word,
    map: &PatternMap,
    n: u64,
    mode: SolveMode,
    exec: Execution,
) -> Result<SolutionCount> {
    if !is_partition_word(w) {
        return Err(Error::invalid(format!("{w} is not a partition word")));
    }
    let k = w.len() / 2;
    let free = match mode {
        SolveMode::Solver => k + 1,
        SolveMode::Brute => 2 * k + 1,
    };
    Error::check_budget(
        match mode {
            SolveMode::Solver => "solver tuples",
            SolveMode::Brute => "brute-force tuples",
        },
        pow_saturating(n, free as u32),
        ENUMERATION_BUDGET,
    )?;
    let system = build_equation_system(w, map, n)?;
    let vars: Vec<usize> = match mode {
        SolveMode::Solver => system.undetermined(),
        SolveMode::Brute => (0..=2 * k).collect(),
    };
    let nn = n as usize;
    let prefix = vars.len().min(2);
    let units = nn.pow(prefix as u32);
    let counts = par::map_range(exec, units, |unit| {
        let mut vals = vec![1usize; 2 * k + 1];
        let mut u = unit;
        for slot in (0..prefix).rev() {
            vals[vars[slot]] = u % nn + 1;
            u /= nn;
        }
        let mut count = 0u128;
        loop {
            let ok = match mode {
                SolveMode::Solver => system.solve(&mut vals),
                SolveMode::Brute => system.satisfied_by(&vals),
            };
            count += ok as u128;
            let mut slot = vars.len();
            loop {
                if slot == prefix {
                    return count;
                }
                slot -= 1;
                let v = vars[slot];
                if vals[v] < nn {
                    vals[v] += 1;
                    break;
                }
                vals[v] = 1;
            }
        }
    });
    let count: u128 = counts.into_iter().sum();
    Ok(SolutionCount {
        word: w.clone(),
        n,
        count,
        p: Ratio::new(count, (n as u128).pow(k as u32 + 1)),
    })
}
