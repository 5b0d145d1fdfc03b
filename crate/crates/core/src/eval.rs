//! Monte-Carlo studies: confusion rates per (n, σ², method), selection
//! frequency against effect size, per-call timing, and the padded-model
//! validation matrix.
//!
//! Every (cell, replicate) draws from its own substream, so all methods in
//! a cell see the same datasets and results do not depend on the thread
//! count.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::lasso_coordinate_descent;
use crate::baselines::lambda_max;
use crate::error::{Error, Result};
use crate::ols::{standardize, StandardizedDataset};
use crate::rng::StreamKey;
use crate::selector::{run_selector, BaselineConfigs, Method, SelectorModel};
use crate::synthgen::{draw_coefficients, draw_mask, simulate_dataset, Corpus, InclusionMask};

/// Predictors per simulated study dataset.
pub const STUDY_P: usize = 10;

/// True coefficients used by the power study, one per predictor.
pub const BETA_LADDER: [f64; STUDY_P] = [1.0, 0.5, 0.25, 0.2, 0.15, 0.1, 0.05, 0.025, 0.01, 0.0];

const STUDY_CONFUSION: u64 = 0;
const STUDY_POWER: u64 = 1;
const STUDY_TIMING: u64 = 2;
const MAX_ATTEMPTS: u64 = 1000;

/// Raw counts behind a set of confusion rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fneg: u64,
    pub tn: u64,
    pub fp: u64,
}

impl ConfusionCounts {
    pub fn add(&mut self, truth: &InclusionMask, predicted: &InclusionMask) {
        for (&t, &p) in truth.bits().iter().zip(predicted.bits()) {
            match (t, p) {
                (true, true) => self.tp += 1,
                (true, false) => self.fneg += 1,
                (false, false) => self.tn += 1,
                (false, true) => self.fp += 1,
            }
        }
    }

    pub fn rates(&self) -> ConfusionRates {
        let pos = self.tp + self.fneg;
        let neg = self.tn + self.fp;
        let frac = |a: u64, b: u64| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
        ConfusionRates {
            cp: frac(self.tp, pos),
            cn: frac(self.tn, neg),
            fp: frac(self.fp, neg),
            fneg: frac(self.fneg, pos),
            positives: pos,
            negatives: neg,
        }
    }
}

/// CP and FN are fractions of the true positives, CN and FP of the true
/// negatives. A rate whose class is empty is NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionRates {
    pub cp: f64,
    pub cn: f64,
    pub fp: f64,
    pub fneg: f64,
    pub positives: u64,
    pub negatives: u64,
}

impl ConfusionRates {
    /// Rows are the actual class (negative, positive), columns the
    /// predicted class.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.cn, self.fp], [self.fneg, self.cp]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    /// Counts summed over every coordinate of every replicate.
    #[default]
    Micro,
    /// Per-replicate rates averaged over the replicates where defined.
    Macro,
}

fn check_lengths(truth: &[InclusionMask], predicted: &[InclusionMask]) -> Result<()> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch(format!(
            "{} truth masks vs {} predicted",
            truth.len(),
            predicted.len()
        )));
    }
    for (i, (t, p)) in truth.iter().zip(predicted).enumerate() {
        if t.len() != p.len() {
            return Err(Error::LengthMismatch(format!(
                "mask {i}: truth has {} entries, prediction {}",
                t.len(),
                p.len()
            )));
        }
    }
    Ok(())
}

/// Pooled (micro-averaged) confusion rates.
pub fn confusion_from_masks(
    truth: &[InclusionMask],
    predicted: &[InclusionMask],
) -> Result<ConfusionRates> {
    confusion_with(truth, predicted, Pooling::Micro)
}

pub fn confusion_with(
    truth: &[InclusionMask],
    predicted: &[InclusionMask],
    pooling: Pooling,
) -> Result<ConfusionRates> {
    check_lengths(truth, predicted)?;
    let mut total = ConfusionCounts::default();
    for (t, p) in truth.iter().zip(predicted) {
        total.add(t, p);
    }
    let mut rates = total.rates();
    if pooling == Pooling::Macro {
        let (mut pos_sum, mut pos_n, mut neg_sum, mut neg_n) = (0.0, 0usize, 0.0, 0usize);
        for (t, p) in truth.iter().zip(predicted) {
            let mut c = ConfusionCounts::default();
            c.add(t, p);
            let r = c.rates();
            if r.positives > 0 {
                pos_sum += r.cp;
                pos_n += 1;
            }
            if r.negatives > 0 {
                neg_sum += r.cn;
                neg_n += 1;
            }
        }
        let avg = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
        rates.cp = avg(pos_sum, pos_n);
        rates.fneg = 1.0 - rates.cp;
        rates.cn = avg(neg_sum, neg_n);
        rates.fp = 1.0 - rates.cn;
    }
    Ok(rates)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyGrid {
    pub n_levels: Vec<usize>,
    pub sigma2_levels: Vec<f64>,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub pooling: Pooling,
    pub baselines: BaselineConfigs,
}

impl Default for StudyGrid {
    fn default() -> Self {
        Self {
            n_levels: vec![50, 250, 1000],
            sigma2_levels: vec![0.01, 0.1, 0.5],
            reps: 200,
            methods: Method::ALL.to_vec(),
            seed: 0,
            pooling: Pooling::Micro,
            baselines: BaselineConfigs::default(),
        }
    }
}

impl StudyGrid {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::ConfigInvalid("reps must be at least 1".into()));
        }
        if self.n_levels.is_empty() || self.sigma2_levels.is_empty() || self.methods.is_empty() {
            return Err(Error::ConfigInvalid(
                "sample sizes, variances and methods must be non-empty".into(),
            ));
        }
        if let Some(&n) = self.n_levels.iter().find(|&&n| n <= STUDY_P + 1) {
            return Err(Error::ConfigInvalid(format!(
                "n = {n} leaves no residual degrees of freedom"
            )));
        }
        if self.sigma2_levels.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::ConfigInvalid("variances must be positive".into()));
        }
        Ok(())
    }

    /// (n, σ²) pairs in row-major order: n outer, σ² inner.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.n_levels
            .iter()
            .flat_map(|&n| self.sigma2_levels.iter().map(move |&s| (n, s)))
            .collect()
    }
}

/// One simulated dataset of a study together with its ground truth.
#[derive(Debug, Clone)]
pub struct StudyDataset {
    pub data: StandardizedDataset,
    pub truth: InclusionMask,
    pub beta: Vec<f64>,
    /// Seed for any randomness inside the selectors (LASSO folds).
    pub fold_seed: u64,
}

fn study_dataset(
    key: StreamKey,
    n: usize,
    sigma2: f64,
    fixed_beta: Option<&[f64]>,
) -> Result<StudyDataset> {
    for attempt in 0..MAX_ATTEMPTS {
        let sub = key.child(attempt);
        let mut rng = sub.child(0).rng();
        let (truth, beta) = match fixed_beta {
            Some(b) => (
                InclusionMask::new(b.iter().map(|v| *v != 0.0).collect()),
                b.to_vec(),
            ),
            None => {
                let mask = draw_mask(STUDY_P, &mut rng);
                let beta = draw_coefficients(&mask, &mut rng);
                (mask, beta)
            }
        };
        let raw = simulate_dataset(&beta, n, sigma2, &mut rng)?;
        match standardize(&raw) {
            Ok(data) => {
                return Ok(StudyDataset {
                    data,
                    truth,
                    beta,
                    fold_seed: sub.child(1).value(),
                })
            }
            Err(Error::ConstantColumn(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ConfigInvalid(format!(
        "no usable dataset after {MAX_ATTEMPTS} draws"
    )))
}

/// Dataset `rep` of cell `cell` in the confusion study.
pub fn confusion_dataset(seed: u64, cell: usize, rep: usize, n: usize, sigma2: f64) -> Result<StudyDataset> {
    let key = StreamKey::root(seed).path(&[STUDY_CONFUSION, cell as u64, rep as u64]);
    study_dataset(key, n, sigma2, None)
}

/// Dataset `rep` of cell `cell` in the power study (β fixed to the ladder).
pub fn power_dataset(seed: u64, cell: usize, rep: usize, n: usize, sigma2: f64) -> Result<StudyDataset> {
    let key = StreamKey::root(seed).path(&[STUDY_POWER, cell as u64, rep as u64]);
    study_dataset(key, n, sigma2, Some(&BETA_LADDER))
}

fn run_methods(
    ds: &StudyDataset,
    methods: &[Method],
    model: Option<&SelectorModel>,
    baselines: &BaselineConfigs,
) -> Result<Vec<InclusionMask>> {
    let mut cfgs = baselines.clone();
    cfgs.lasso.seed = ds.fold_seed;
    methods
        .iter()
        .map(|&m| run_selector(m, &ds.data, model, &cfgs).map(|r| r.mask))
        .collect()
}

/// Masks for every (cell, rep), in cell-major order, along with the truth.
fn simulate_all(
    grid: &StudyGrid,
    model: Option<&SelectorModel>,
    make: fn(u64, usize, usize, usize, f64) -> Result<StudyDataset>,
) -> Result<Vec<Vec<(InclusionMask, Vec<InclusionMask>)>>> {
    grid.validate()?;
    let cells = grid.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..grid.reps).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<(InclusionMask, Vec<InclusionMask>)>> = jobs
        .into_par_iter()
        .map(|(c, r)| {
            let (n, s2) = cells[c];
            let ds = make(grid.seed, c, r, n, s2)?;
            let masks = run_methods(&ds, &grid.methods, model, &grid.baselines)?;
            Ok((ds.truth, masks))
        })
        .collect();
    let mut out: Vec<Vec<_>> = (0..cells.len()).map(|_| Vec::with_capacity(grid.reps)).collect();
    for (i, r) in results.into_iter().enumerate() {
        out[i / grid.reps].push(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionRow {
    pub n: usize,
    pub sigma2: f64,
    pub method: Method,
    pub rates: ConfusionRates,
}

/// Pooled confusion rates for each (n, σ², method).
pub fn run_confusion_study(grid: &StudyGrid, model: Option<&SelectorModel>) -> Result<Vec<ConfusionRow>> {
    let per_cell = simulate_all(grid, model, confusion_dataset)?;
    let mut rows = Vec::new();
    for ((n, sigma2), reps) in grid.cells().into_iter().zip(per_cell) {
        let truth: Vec<InclusionMask> = reps.iter().map(|(t, _)| t.clone()).collect();
        for (mi, &method) in grid.methods.iter().enumerate() {
            let pred: Vec<InclusionMask> = reps.iter().map(|(_, m)| m[mi].clone()).collect();
            rows.push(ConfusionRow {
                n,
                sigma2,
                method,
                rates: confusion_with(&truth, &pred, grid.pooling)?,
            });
        }
    }
    Ok(rows)
}

/// Selection frequency of each ladder coefficient in one (n, σ²) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub n: usize,
    pub sigma2: f64,
    pub beta_ladder: Vec<f64>,
    pub methods: Vec<Method>,
    /// `select_rate[method][coefficient]`.
    pub select_rate: Vec<Vec<f64>>,
}

impl PowerCurve {
    pub fn rate(&self, method: Method, coefficient: usize) -> Option<f64> {
        let mi = self.methods.iter().position(|&m| m == method)?;
        self.select_rate[mi].get(coefficient).copied()
    }
}

pub fn run_power_study(grid: &StudyGrid, model: Option<&SelectorModel>) -> Result<Vec<PowerCurve>> {
    let per_cell = simulate_all(grid, model, power_dataset)?;
    let mut curves = Vec::new();
    for ((n, sigma2), reps) in grid.cells().into_iter().zip(per_cell) {
        let select_rate = (0..grid.methods.len())
            .map(|mi| {
                (0..STUDY_P)
                    .map(|j| {
                        let hits = reps.iter().filter(|(_, m)| m[mi].get(j)).count();
                        hits as f64 / reps.len() as f64
                    })
                    .collect()
            })
            .collect();
        curves.push(PowerCurve {
            n,
            sigma2,
            beta_ladder: BETA_LADDER.to_vec(),
            methods: grid.methods.clone(),
            select_rate,
        });
    }
    Ok(curves)
}

/// Something whose per-call time is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timed {
    Method(Method),
    /// One coordinate-descent solve at λ = λ_max / 10, no cross-validation.
    LassoSingleFit,
}

impl Timed {
    pub fn label(self) -> &'static str {
        match self {
            Timed::Method(m) => m.name(),
            Timed::LassoSingleFit => "lasso_single",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingTable {
    pub subjects: Vec<Timed>,
    pub n_levels: Vec<usize>,
    /// `mean_seconds[subject][n_level]`.
    pub mean_seconds: Vec<Vec<f64>>,
    /// Timed calls per entry.
    pub reps: usize,
}

impl TimingTable {
    pub fn mean(&self, subject: Timed, n: usize) -> Option<f64> {
        let si = self.subjects.iter().position(|&s| s == subject)?;
        let ni = self.n_levels.iter().position(|&m| m == n)?;
        Some(self.mean_seconds[si][ni])
    }
}

fn time_call(
    subject: Timed,
    ds: &StudyDataset,
    model: Option<&SelectorModel>,
    cfgs: &BaselineConfigs,
) -> Result<f64> {
    let start = Instant::now();
    match subject {
        Timed::Method(m) => {
            let mut cfgs = cfgs.clone();
            cfgs.lasso.seed = ds.fold_seed;
            run_selector(m, &ds.data, model, &cfgs)?;
        }
        Timed::LassoSingleFit => {
            let lambda = lambda_max(&ds.data) / 10.0;
            lasso_coordinate_descent(&ds.data, lambda, None)?;
        }
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Mean wall-clock seconds per call, per subject and sample size, averaged
/// over every σ² level and replicate. Runs on one thread; the first call
/// of each (subject, n) is a discarded warm-up.
pub fn run_timing_bench(grid: &StudyGrid, model: Option<&SelectorModel>) -> Result<TimingTable> {
    grid.validate()?;
    let mut subjects: Vec<Timed> = grid.methods.iter().map(|&m| Timed::Method(m)).collect();
    subjects.push(Timed::LassoSingleFit);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    pool.install(|| {
        let mut mean_seconds = vec![vec![0.0; grid.n_levels.len()]; subjects.len()];
        for (ni, &n) in grid.n_levels.iter().enumerate() {
            let mut datasets = Vec::with_capacity(grid.sigma2_levels.len() * grid.reps);
            for (si, &s2) in grid.sigma2_levels.iter().enumerate() {
                for r in 0..grid.reps {
                    let key = StreamKey::root(grid.seed).path(&[STUDY_TIMING, ni as u64, si as u64, r as u64]);
                    datasets.push(study_dataset(key, n, s2, None)?);
                }
            }
            for (ti, &subject) in subjects.iter().enumerate() {
                time_call(subject, &datasets[0], model, &grid.baselines)?;
                let mut total = 0.0;
                for ds in &datasets {
                    total += time_call(subject, ds, model, &grid.baselines)?;
                }
                mean_seconds[ti][ni] = total / datasets.len() as f64;
            }
        }
        Ok(TimingTable {
            subjects,
            n_levels: grid.n_levels.clone(),
            mean_seconds,
            reps: grid.sigma2_levels.len() * grid.reps,
        })
    })
}

/// Confusion rates of the model on a validation corpus, counting only the
/// first `p_actual` coordinates of each record.
pub fn padded_validation(corpus: &Corpus, model: &SelectorModel) -> Result<ConfusionRates> {
    if corpus.p_max() > model.p_max {
        return Err(Error::LengthMismatch(format!(
            "corpus width {} exceeds model width {}",
            corpus.p_max(),
            model.p_max
        )));
    }
    let counts: Vec<Result<ConfusionCounts>> = corpus
        .records
        .par_iter()
        .map(|rec| {
            let p = rec.p_actual;
            let scores = model.scores(&rec.t_padded[..p])?;
            let mut c = ConfusionCounts::default();
            c.add(&rec.gamma_padded.truncated(p), &model.classify(&scores));
            Ok(c)
        })
        .collect();
    let mut total = ConfusionCounts::default();
    for c in counts {
        let c = c?;
        total.tp += c.tp;
        total.fneg += c.fneg;
        total.tn += c.tn;
        total.fp += c.fp;
    }
    Ok(total.rates())
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_confusion_table<W: Write>(rows: &[ConfusionRow], mut w: W) -> Result<()> {
    writeln!(w, "n,sigma2,method,cp,cn,fp,fn,positives,negatives")?;
    for r in rows {
        let q = &r.rates;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            f6(r.sigma2),
            r.method,
            f6(q.cp),
            f6(q.cn),
            f6(q.fp),
            f6(q.fneg),
            q.positives,
            q.negatives
        )?;
    }
    Ok(())
}

/// All curves in one long table.
pub fn write_power_table<W: Write>(curves: &[PowerCurve], mut w: W) -> Result<()> {
    writeln!(w, "n,sigma2,method,beta,rate")?;
    for c in curves {
        for (mi, m) in c.methods.iter().enumerate() {
            for (b, rate) in c.beta_ladder.iter().zip(&c.select_rate[mi]) {
                writeln!(w, "{},{},{},{},{}", c.n, f6(c.sigma2), m, f6(*b), f6(*rate))?;
            }
        }
    }
    Ok(())
}

/// Plot data for one panel.
pub fn write_power_panel<W: Write>(curve: &PowerCurve, mut w: W) -> Result<()> {
    writeln!(w, "absBeta,method,rate")?;
    for (mi, m) in curve.methods.iter().enumerate() {
        for (b, rate) in curve.beta_ladder.iter().zip(&curve.select_rate[mi]) {
            writeln!(w, "{},{},{}", f6(b.abs()), m, f6(*rate))?;
        }
    }
    Ok(())
}

pub fn write_timing_table<W: Write>(table: &TimingTable, mut w: W) -> Result<()> {
    write!(w, "method")?;
    for n in &table.n_levels {
        write!(w, ",n{n}")?;
    }
    writeln!(w)?;
    for (s, row) in table.subjects.iter().zip(&table.mean_seconds) {
        write!(w, "{}", s.label())?;
        for v in row {
            write!(w, ",{}", f6(*v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// The 2×2 matrix normalized by actual class.
pub fn write_confusion_matrix<W: Write>(rates: &ConfusionRates, mut w: W) -> Result<()> {
    let m = rates.matrix();
    writeln!(w, "actual,predicted_negative,predicted_positive")?;
    writeln!(w, "negative,{},{}", f6(m[0][0]), f6(m[0][1]))?;
    writeln!(w, "positive,{},{}", f6(m[1][0]), f6(m[1][1]))?;
    Ok(())
}
