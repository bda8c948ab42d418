use std::collections::BTreeMap;

use anyhow::Result;
use helson::circuits::{self, SolveMode};
use helson::numtheory::{self, FORD_C};
use helson::pattern::{self, InjectivityCheck, SymmetryCheck};
use helson::reduction;
use helson::spectra::{self, Esd, MomentEstimate};
use helson::words::{self, ReducedForm};
use helson::{EntryDistribution, Execution, PatternMap, SemicircleRef, Word};
use serde::Serialize;

use crate::config::{self, CircuitsArgs, Moments, NumtheoryArgs, PatternCheck, Simulate, Truncation, WordsArgs};
use crate::output::{float, histogram_svg, Csv, Outputs};
use crate::ConfigError;

fn limit_moment(r: u32) -> f64 {
    if r % 2 == 1 {
        0.0
    } else {
        words::catalan_count(r as u64 / 2).map(|c| c as f64).unwrap_or(f64::NAN)
    }
}

fn eigen_csv(esds: &[Esd]) -> String {
    let n = esds.first().map_or(0, |e| e.n());
    let header: Vec<String> = (1..=n).map(|j| format!("lambda_{j}")).collect();
    let mut csv = Csv::new(&header);
    for e in esds {
        let row: Vec<String> = e.values().iter().map(|&x| float(x)).collect();
        csv.row(&row);
    }
    csv.finish()
}

fn pooled(esds: &[Esd]) -> Result<Esd> {
    Ok(Esd::from_values(esds.iter().flat_map(|e| e.values().iter().copied()).collect())?)
}

#[derive(Serialize)]
struct MomentRow {
    r: u32,
    mean: f64,
    stderr: f64,
    limit: f64,
}

#[derive(Serialize)]
struct HistogramSummary {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    density: Vec<f64>,
}

#[derive(Serialize)]
struct SimulateSummary {
    map: String,
    dist: String,
    n: u64,
    reps: usize,
    seed: u64,
    moments: Vec<MomentRow>,
    ks_per_rep: Vec<f64>,
    ks_mean: f64,
    histogram: HistogramSummary,
}

pub fn simulate(cfg: &Simulate, exec: Execution, out: &mut Outputs) -> Result<String> {
    let esds = spectra::ensemble(&cfg.map, cfg.n, &cfg.dist, cfg.reps, cfg.seed, exec)?;
    let moments: Vec<MomentRow> = (1..=8)
        .map(|r| {
            let m = spectra::moment_estimate(&esds, r);
            MomentRow {
                r,
                mean: m.mean,
                stderr: m.stderr,
                limit: limit_moment(r),
            }
        })
        .collect();
    let ks: Vec<f64> = esds.iter().map(|e| spectra::ks_distance(e, &SemicircleRef)).collect();
    let ks_mean = helson::par::pairwise_sum(&ks) / ks.len() as f64;
    let h = spectra::histogram(&pooled(&esds)?, cfg.bins, cfg.lo, cfg.hi)?;
    if cfg.formats.csv {
        out.add("eigenvalues.csv", eigen_csv(&esds));
    }
    if cfg.formats.svg {
        let title = format!("{} {} n={} reps={}", cfg.map.name(), cfg.dist.name(), cfg.n, cfg.reps);
        out.add("histogram.svg", histogram_svg(&h, &title));
    }
    let summary = SimulateSummary {
        map: cfg.map.name(),
        dist: cfg.dist.name(),
        n: cfg.n,
        reps: cfg.reps,
        seed: cfg.seed,
        moments,
        ks_per_rep: ks,
        ks_mean,
        histogram: HistogramSummary {
            lo: h.lo,
            hi: h.hi,
            counts: h.counts.clone(),
            density: h.density.clone(),
        },
    };
    if cfg.formats.json {
        out.add_json("summary.json", &summary);
    }
    Ok(format!(
        "m2 = {:.4}, m4 = {:.4}, mean KS = {:.4}",
        summary.moments[1].mean, summary.moments[3].mean, ks_mean
    ))
}

#[derive(Serialize)]
struct MomentsRow {
    n: u64,
    r: u32,
    mean: f64,
    stderr: f64,
    /// Sample variance of `Tr((H / sqrt n)^r) / n` across replicates.
    variance: f64,
    limit: f64,
    /// Exact `E Tr(H^r) / n^{r/2+1}` for Rademacher entries, when enumerable.
    oracle: Option<f64>,
    oracle_z: Option<f64>,
}

#[derive(Serialize)]
struct MomentsSummary {
    map: String,
    dist: String,
    reps: usize,
    seed: u64,
    rows: Vec<MomentsRow>,
    ks_mean: BTreeMap<u64, f64>,
}

fn rademacher_oracle(map: &PatternMap, n: u64, r: u32) -> Result<Option<f64>> {
    match circuits::expected_trace_rademacher(map, n, r as usize) {
        Ok(v) => Ok(Some(v as f64 / (n as f64).powf(r as f64 / 2.0 + 1.0))),
        Err(e) if e.is_budget() => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn moments(cfg: &Moments, exec: Execution, out: &mut Outputs) -> Result<String> {
    let mut rows = Vec::new();
    let mut ks_mean = BTreeMap::new();
    let mut last: Vec<Esd> = Vec::new();
    for &n in &cfg.n_grid {
        let esds = spectra::ensemble(&cfg.map, n, &cfg.dist, cfg.reps, cfg.seed, exec)?;
        for &r in &cfg.r {
            let MomentEstimate { mean, stderr, .. } = spectra::moment_estimate(&esds, r);
            let xs: Vec<f64> = esds.iter().map(|e| e.moment(r)).collect();
            let oracle = if cfg.dist == EntryDistribution::Rademacher {
                rademacher_oracle(&cfg.map, n, r)?
            } else {
                None
            };
            rows.push(MomentsRow {
                n,
                r,
                mean,
                stderr,
                variance: helson::par::sample_variance(&xs),
                limit: limit_moment(r),
                oracle,
                oracle_z: oracle.map(|o| (mean - o) / stderr.max(1e-9)),
            });
        }
        let ks: Vec<f64> = esds.iter().map(|e| spectra::ks_distance(e, &SemicircleRef)).collect();
        ks_mean.insert(n, helson::par::pairwise_sum(&ks) / ks.len() as f64);
        last = esds;
    }
    if cfg.formats.csv {
        let mut csv = Csv::new(&["n", "r", "mean", "stderr", "variance", "limit", "oracle", "oracle_z"]);
        for row in &rows {
            csv.row(&[
                row.n.to_string(),
                row.r.to_string(),
                float(row.mean),
                float(row.stderr),
                float(row.variance),
                float(row.limit),
                row.oracle.map(float).unwrap_or_default(),
                row.oracle_z.map(float).unwrap_or_default(),
            ]);
        }
        out.add("moments.csv", csv.finish());
        out.add("eigenvalues.csv", eigen_csv(&last));
    }
    if cfg.formats.svg {
        let n = *cfg.n_grid.last().expect("nonempty grid");
        let h = spectra::histogram(&pooled(&last)?, cfg.bins, -2.5, 2.5)?;
        let title = format!("{} {} n={n} reps={}", cfg.map.name(), cfg.dist.name(), cfg.reps);
        out.add("histogram.svg", histogram_svg(&h, &title));
    }
    let note = format!("{} (n, r) rows", rows.len());
    if cfg.formats.json {
        out.add_json(
            "summary.json",
            &MomentsSummary {
                map: cfg.map.name(),
                dist: cfg.dist.name(),
                reps: cfg.reps,
                seed: cfg.seed,
                rows,
                ks_mean,
            },
        );
    }
    Ok(note)
}

#[derive(Serialize)]
struct PatternPoint {
    n: u64,
    quadruple_count: String,
    ratio: f64,
}

#[derive(Serialize)]
struct PatternReport {
    map: String,
    symmetry: String,
    coordinatewise_injectivity: String,
    checked_up_to: u64,
    points: Vec<PatternPoint>,
    strictly_decreasing: bool,
    log_log_slope: f64,
    slope_threshold: f64,
    c3: &'static str,
    c_condition: &'static str,
}

pub fn pattern_check(cfg: &PatternCheck, out: &mut Outputs) -> Result<String> {
    let n_max = *cfg.n_grid.iter().max().expect("nonempty grid");
    let sym = pattern::check_symmetry(&cfg.map, n_max)?;
    let inj = pattern::check_coordinatewise_injectivity(&cfg.map, n_max)?;
    let trend = pattern::small_dimension_trend(&cfg.map, &cfg.n_grid)?;
    let c3_ok = trend.consistent_with_small_dimension();
    let sym_ok = sym == SymmetryCheck::Pass;
    let inj_ok = inj == InjectivityCheck::Pass;
    let report = PatternReport {
        map: cfg.map.name(),
        symmetry: match sym {
            SymmetryCheck::Pass => "PASS".into(),
            SymmetryCheck::Violation { x, y } => format!("FAIL at ({x}, {y})"),
        },
        coordinatewise_injectivity: match inj {
            InjectivityCheck::Pass => "PASS".into(),
            InjectivityCheck::Violation { x, x2, y } => format!("FAIL: S({x}, {y}) = S({x2}, {y})"),
        },
        checked_up_to: n_max,
        points: trend
            .points
            .iter()
            .map(|p| PatternPoint {
                n: p.n,
                quadruple_count: p.quadruple_count.to_string(),
                ratio: p.ratio_f64,
            })
            .collect(),
        strictly_decreasing: trend.strictly_decreasing,
        log_log_slope: trend.log_log_slope,
        slope_threshold: pattern::C3_SLOPE_THRESHOLD,
        c3: if c3_ok { "PASS" } else { "FAIL" },
        c_condition: if sym_ok && inj_ok && c3_ok { "PASS" } else { "FAIL" },
    };
    if cfg.formats.csv {
        let mut csv = Csv::new(&["n", "quadruple_count", "ratio"]);
        for p in &report.points {
            csv.row(&[p.n.to_string(), p.quadruple_count.clone(), float(p.ratio)]);
        }
        out.add("pattern_check.csv", csv.finish());
    }
    let last = report.points.last().map_or(f64::NAN, |p| p.ratio);
    let line = format!(
        "C1 {} | C2 {} | C3 {} (ratio {:.4} at n={}, slope {:.3})",
        report.symmetry, report.coordinatewise_injectivity, report.c3, last, n_max, report.log_log_slope
    );
    if cfg.formats.json {
        out.add_json("pattern_check.json", &report);
    }
    Ok(line)
}

fn form_name(f: &ReducedForm) -> &'static str {
    match f {
        ReducedForm::Empty => "empty",
        ReducedForm::Tail { .. } => "tail",
        ReducedForm::Inner { .. } => "inner",
    }
}

#[derive(Serialize)]
struct WordRow {
    word: String,
    partition: bool,
    catalan: bool,
    reduced: String,
    form: String,
}

#[derive(Serialize)]
struct WordsSummary {
    k: Option<usize>,
    total: usize,
    catalan: usize,
    catalan_number: Option<u64>,
    words: Vec<WordRow>,
}

pub fn words(args: &WordsArgs, out: &mut Outputs) -> Result<String> {
    let formats = config::formats_of(&args.formats)?;
    let list: Vec<Word> = match &args.word {
        Some(ws) => ws
            .iter()
            .map(|s| s.parse::<Word>().map_err(|e| ConfigError(format!("bad --word {s:?}: {e}"))))
            .collect::<std::result::Result<_, _>>()?,
        None => words::enumerate_partition_words(config::required(&args.k, "k")?)?,
    };
    let mut rows = Vec::new();
    for w in &list {
        let partition = words::is_partition_word(w);
        let reduced = words::reduce(w).final_word;
        let (catalan, form) = if partition {
            (
                words::is_catalan(w)?.counts_as_catalan(),
                form_name(&words::classify_reduced(&reduced)?).to_string(),
            )
        } else {
            (false, String::new())
        };
        rows.push(WordRow {
            word: w.to_string(),
            partition,
            catalan,
            reduced: reduced.to_string(),
            form,
        });
    }
    let catalan = rows.iter().filter(|r| r.catalan).count();
    let k = if args.word.is_none() { args.k } else { None };
    let summary = WordsSummary {
        k,
        total: rows.len(),
        catalan,
        catalan_number: k.map(|k| words::catalan_count(k as u64)).transpose()?,
        words: rows,
    };
    if formats.csv {
        let mut csv = Csv::new(&["word", "partition", "catalan", "reduced", "form"]);
        for r in &summary.words {
            csv.row(&[
                r.word.clone(),
                r.partition.to_string(),
                r.catalan.to_string(),
                r.reduced.clone(),
                r.form.clone(),
            ]);
        }
        out.add("words.csv", csv.finish());
    }
    let line = format!("{} words, {} Catalan", summary.total, summary.catalan);
    if formats.json {
        out.add_json("words.json", &summary);
    }
    Ok(line)
}

#[derive(Serialize)]
struct CircuitRow {
    n: u64,
    count: String,
    p: f64,
}

#[derive(Serialize)]
struct CircuitsSummary {
    word: String,
    map: String,
    mode: String,
    catalan: bool,
    rows: Vec<CircuitRow>,
}

pub fn circuits(args: &CircuitsArgs, exec: Execution, out: &mut Outputs) -> Result<String> {
    let formats = config::formats_of(&args.formats)?;
    let raw = config::required(&args.word, "word")?;
    let word: Word = raw
        .parse()
        .map_err(|e| ConfigError(format!("bad --word {raw:?}: {e}")))?;
    if !words::is_partition_word(&word) {
        return Err(ConfigError(format!("--word {raw:?} is not a partition word")).into());
    }
    let map = config::parse_map(
        &config::required(&args.map, "map")?,
        args.alpha.as_deref(),
        args.alpha_irrational == Some(true),
    )?;
    let mode = match config::required(&args.mode, "mode")?.as_str() {
        "solver" => SolveMode::Solver,
        "brute" => SolveMode::Brute,
        other => return Err(ConfigError(format!("unknown --mode {other:?}; expected solver or brute")).into()),
    };
    let n_grid = config::required(&args.n_grid, "n-grid")?;
    if n_grid.is_empty() {
        return Err(ConfigError("--n-grid must not be empty".into()).into());
    }
    let mut rows = Vec::new();
    for &n in &n_grid {
        let s = circuits::solution_count_with(&word, &map, n, mode, exec)?;
        rows.push(CircuitRow {
            n,
            count: s.count.to_string(),
            p: s.p_f64(),
        });
    }
    let summary = CircuitsSummary {
        word: word.to_string(),
        map: map.name(),
        mode: format!("{mode:?}").to_lowercase(),
        catalan: words::is_catalan(&word)?.counts_as_catalan(),
        rows,
    };
    if formats.csv {
        let mut csv = Csv::new(&["n", "count", "p"]);
        for r in &summary.rows {
            csv.row(&[r.n.to_string(), r.count.clone(), float(r.p)]);
        }
        out.add("circuits.csv", csv.finish());
    }
    let ps: Vec<String> = summary.rows.iter().map(|r| format!("{:.4}", r.p)).collect();
    let line = format!("p_n({}) = {}", summary.word, ps.join(", "));
    if formats.json {
        out.add_json("circuits.json", &summary);
    }
    Ok(line)
}

#[derive(Serialize)]
struct NumtheoryRow {
    n: u64,
    d_max: u64,
    distinct_products: u64,
    ford_ratio: f64,
    lem0_ratio: f64,
    prop_multi_ratio: f64,
    teicher_ratio: f64,
}

#[derive(Serialize)]
struct NumtheorySummary {
    ford_c: f64,
    eps: f64,
    rows: Vec<NumtheoryRow>,
}

pub fn numtheory(args: &NumtheoryArgs, out: &mut Outputs) -> Result<String> {
    let formats = config::formats_of(&args.formats)?;
    let eps = config::required(&args.eps, "eps")?;
    let n_grid = config::required(&args.n_grid, "n-grid")?;
    if n_grid.is_empty() {
        return Err(ConfigError("--n-grid must not be empty".into()).into());
    }
    let mut rows = Vec::new();
    for &n in &n_grid {
        let r = numtheory::number_theory_row(n, eps)?;
        rows.push(NumtheoryRow {
            n,
            d_max: r.d_max,
            distinct_products: r.distinct_products,
            ford_ratio: r.ford_ratio,
            lem0_ratio: r.lem0_ratio,
            prop_multi_ratio: r.prop_multi_ratio,
            teicher_ratio: reduction::teicher_ratio(n, eps)?,
        });
    }
    if formats.csv {
        let mut csv = Csv::new(&[
            "n",
            "d_max",
            "distinct_products",
            "ford_ratio",
            "lem0_ratio",
            "prop_multi_ratio",
            "teicher_ratio",
        ]);
        for r in &rows {
            csv.row(&[
                r.n.to_string(),
                r.d_max.to_string(),
                r.distinct_products.to_string(),
                float(r.ford_ratio),
                float(r.lem0_ratio),
                float(r.prop_multi_ratio),
                float(r.teicher_ratio),
            ]);
        }
        out.add("numtheory.csv", csv.finish());
    }
    let line = format!("{} rows, ford c = {FORD_C}", rows.len());
    if formats.json {
        out.add_json("numtheory.json", &NumtheorySummary { ford_c: FORD_C, eps, rows });
    }
    Ok(line)
}

#[derive(Serialize)]
struct GapSummary {
    u: f64,
    n: u64,
    mean_gap: f64,
    stderr_gap: f64,
    target: f64,
    all_dominated: bool,
}

#[derive(Serialize)]
struct TruncationSummary {
    map: String,
    dist: String,
    reps: usize,
    seed: u64,
    cells: Vec<GapSummary>,
}

pub fn truncation(cfg: &Truncation, exec: Execution, out: &mut Outputs) -> Result<String> {
    let report = reduction::truncation_report(&cfg.map, &cfg.dist, &cfg.u_grid, &cfg.n_grid, cfg.reps, cfg.seed, exec)?;
    if cfg.formats.csv {
        let mut csv = Csv::new(&[
            "dist",
            "u",
            "n",
            "seed",
            "m_u",
            "sigma_u",
            "lidskii_gap",
            "target",
            "dbl_rhs",
            "eig_l1_gap",
            "dominated",
        ]);
        for r in &report.rows {
            csv.row(&[
                r.dist.clone(),
                float(r.u),
                r.n.to_string(),
                r.seed.to_string(),
                float(r.m_u),
                float(r.sigma_u),
                float(r.lidskii_gap),
                float(r.target),
                float(r.dbl_rhs),
                float(r.eig_l1_gap),
                r.dominated.to_string(),
            ]);
        }
        out.add("truncation.csv", csv.finish());
    }
    let mut cells = Vec::new();
    for &n in &cfg.n_grid {
        for &u in &cfg.u_grid {
            let (mean_gap, stderr_gap) = report.mean_gap(u, n);
            let mut rows = report.rows_at(u, n);
            let first = rows.next().expect("at least one replicate");
            cells.push(GapSummary {
                u,
                n,
                mean_gap,
                stderr_gap,
                target: first.target,
                all_dominated: first.dominated && rows.all(|r| r.dominated),
            });
        }
    }
    let dominated = cells.iter().all(|c| c.all_dominated);
    let line = format!("{} rows, RHS dominates everywhere: {dominated}", report.rows.len());
    if cfg.formats.json {
        out.add_json(
            "truncation.json",
            &TruncationSummary {
                map: cfg.map.name(),
                dist: cfg.dist.name(),
                reps: cfg.reps,
                seed: cfg.seed,
                cells,
            },
        );
    }
    Ok(line)
}
