//! Synthetic regression datasets and training corpora of (t-vector, mask)
//! pairs.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use log::debug;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ols::{fit_ols_no_intercept, standardize, RawDataset};
use crate::rng::{StreamKey, StreamRng};

/// Largest model width supported by corpus generation.
pub const MAX_P: usize = 100;

/// Extra residual degrees of freedom enforced when drawing n.
pub const MIN_RESID_DF: usize = 5;

/// Draws after which a record is declared impossible to generate.
const MAX_ATTEMPTS: u64 = 1000;

/// Binary vector marking active predictors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InclusionMask(Vec<bool>);

impl InclusionMask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![false; p])
    }

    pub fn ones(p: usize) -> Self {
        Self(vec![true; p])
    }

    /// Mask with ones at the given indices.
    pub fn from_indices(p: usize, active: &[usize]) -> Self {
        let mut bits = vec![false; p];
        for &j in active {
            bits[j] = true;
        }
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&j| self.0[j]).collect()
    }

    /// Extends with zeros to `width`.
    pub fn padded(&self, width: usize) -> Self {
        let mut bits = self.0.clone();
        bits.resize(width.max(bits.len()), false);
        Self(bits)
    }

    /// Keeps the first `p` bits.
    pub fn truncated(&self, p: usize) -> Self {
        Self(self.0[..p.min(self.0.len())].to_vec())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// How the noise variance is drawn for each dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma2Law {
    Fixed(f64),
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
}

impl Default for Sigma2Law {
    fn default() -> Self {
        Sigma2Law::LogUniform { lo: 0.01, hi: 0.5 }
    }
}

impl Sigma2Law {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Sigma2Law::Fixed(v) => v,
            Sigma2Law::Uniform { lo, hi } => lo + rng.random::<f64>() * (hi - lo),
            Sigma2Law::LogUniform { lo, hi } => {
                (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Sigma2Law::Fixed(v) => v > 0.0 && v.is_finite(),
            Sigma2Law::Uniform { lo, hi } | Sigma2Law::LogUniform { lo, hi } => {
                lo > 0.0 && hi >= lo && hi.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!("bad sigma^2 law {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub p_max: usize,
    /// Inclusive range of sample sizes.
    pub n_range: (usize, usize),
    /// Magnitude range of active coefficients.
    pub beta_mag_range: (f64, f64),
    pub sigma2_law: Sigma2Law,
    pub count: usize,
    pub master_seed: u64,
}

impl GenConfig {
    pub fn new(p_max: usize, count: usize, master_seed: u64) -> Self {
        Self {
            p_max,
            n_range: (20, 2000),
            beta_mag_range: (0.01, 5.0),
            sigma2_law: Sigma2Law::default(),
            count,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_P).contains(&self.p_max) {
            return Err(Error::ConfigInvalid(format!(
                "p_max must be in [1, {MAX_P}], got {}",
                self.p_max
            )));
        }
        if self.count == 0 {
            return Err(Error::ConfigInvalid("count must be at least 1".into()));
        }
        let (lo, hi) = self.n_range;
        if lo > hi || hi < self.p_max + MIN_RESID_DF {
            return Err(Error::ConfigInvalid(format!(
                "n range [{lo}, {hi}] cannot provide n >= p_max + {MIN_RESID_DF}"
            )));
        }
        let (blo, bhi) = self.beta_mag_range;
        if !(blo >= 0.0 && bhi > blo && bhi.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "bad coefficient magnitude range ({blo}, {bhi})"
            )));
        }
        self.sigma2_law.validate()
    }

    /// Sample size uniform on the configured range truncated to n ≥ p + 5.
    pub fn draw_n<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> usize {
        let lo = self.n_range.0.max(p + MIN_RESID_DF);
        rng.random_range(lo..=self.n_range.1)
    }
}

/// Independent Bernoulli(1/2) bits.
pub fn draw_mask<R: Rng + ?Sized>(p: usize, rng: &mut R) -> InclusionMask {
    InclusionMask((0..p).map(|_| rng.random_bool(0.5)).collect())
}

/// Zero where the mask is off; elsewhere a magnitude uniform on `range`
/// with an equiprobable sign.
pub fn draw_coefficients_in<R: Rng + ?Sized>(
    mask: &InclusionMask,
    range: (f64, f64),
    rng: &mut R,
) -> Vec<f64> {
    mask.bits()
        .iter()
        .map(|&on| {
            if !on {
                return 0.0;
            }
            let mag = range.0 + rng.random::<f64>() * (range.1 - range.0);
            if rng.random_bool(0.5) {
                -mag
            } else {
                mag
            }
        })
        .collect()
}

/// Coefficients with magnitudes on (0.01, 5).
pub fn draw_coefficients<R: Rng + ?Sized>(mask: &InclusionMask, rng: &mut R) -> Vec<f64> {
    draw_coefficients_in(mask, (0.01, 5.0), rng)
}

/// `y = Xβ + ε` with iid standard-normal X and N(0, σ²) noise.
pub fn simulate_dataset<R: Rng + ?Sized>(
    beta: &[f64],
    n: usize,
    sigma2: f64,
    rng: &mut R,
) -> Result<RawDataset> {
    let p = beta.len();
    let data: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    let x = Matrix::from_vec(n, p, data);
    let sigma = sigma2.sqrt();
    let y = x
        .mul_vec(beta)
        .into_iter()
        .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    RawDataset::unnamed(x, y)
}

/// A generated dataset together with its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub raw: RawDataset,
    pub mask: InclusionMask,
    pub beta: Vec<f64>,
    pub n: usize,
    pub sigma2: f64,
}

/// One dataset with `p` predictors: mask, n, X, β, σ², then y.
pub fn generate_dataset<R: Rng + ?Sized>(
    p: usize,
    config: &GenConfig,
    rng: &mut R,
) -> Result<GeneratedDataset> {
    if p == 0 || p > config.p_max {
        return Err(Error::ConfigInvalid(format!(
            "p = {p} outside [1, {}]",
            config.p_max
        )));
    }
    let mask = draw_mask(p, rng);
    let n = config.draw_n(p, rng);
    let beta = draw_coefficients_in(&mask, config.beta_mag_range, rng);
    let sigma2 = config.sigma2_law.sample(rng);
    let raw = simulate_dataset(&beta, n, sigma2, rng)?;
    Ok(GeneratedDataset {
        raw,
        mask,
        beta,
        n,
        sigma2,
    })
}

/// Standardizes, fits OLS without intercept and returns the t-values.
pub fn t_values(raw: &RawDataset) -> Result<Vec<f64>> {
    Ok(fit_ols_no_intercept(&standardize(raw)?)?.t_values)
}

/// One training or validation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    pub t_padded: Vec<f64>,
    pub gamma_padded: InclusionMask,
    pub p_actual: usize,
    pub n_actual: usize,
    pub sigma2_actual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusRole {
    Training,
    Validation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub records: Vec<CorpusRecord>,
    pub config: GenConfig,
    pub role: CorpusRole,
    /// Draws discarded because the fit was degenerate.
    pub redraws: u64,
}

impl Corpus {
    pub fn p_max(&self) -> usize {
        self.config.p_max
    }
}

fn make_record(
    key: StreamKey,
    config: &GenConfig,
    fixed_p: Option<usize>,
) -> Result<(CorpusRecord, u64)> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng: StreamRng = key.child(attempt).rng();
        let p = match fixed_p {
            Some(p) => p,
            None => rng.random_range(1..=config.p_max),
        };
        let ds = generate_dataset(p, config, &mut rng)?;
        match t_values(&ds.raw) {
            Ok(t) => {
                let mut t_padded = t;
                t_padded.resize(config.p_max, 0.0);
                let record = CorpusRecord {
                    t_padded,
                    gamma_padded: ds.mask.padded(config.p_max),
                    p_actual: p,
                    n_actual: ds.n,
                    sigma2_actual: ds.sigma2,
                };
                return Ok((record, attempt));
            }
            Err(
                e @ (Error::PerfectFit | Error::RankDeficient { .. } | Error::ConstantColumn(_)),
            ) => {
                debug!("redrawing degenerate record: {e}");
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::ConfigInvalid(format!(
        "no usable dataset after {MAX_ATTEMPTS} draws"
    )))
}

/// Generates `config.count` records. With `fixed_p` every record has that
/// many predictors; otherwise p is uniform on 1..=p_max per record.
///
/// Record k draws from the substream (master_seed, k, attempt), so the
/// output is identical for any thread count.
pub fn build_corpus(config: &GenConfig, fixed_p: Option<usize>, role: CorpusRole) -> Result<Corpus> {
    config.validate()?;
    if let Some(p) = fixed_p {
        if p == 0 || p > config.p_max {
            return Err(Error::ConfigInvalid(format!(
                "fixed p = {p} outside [1, {}]",
                config.p_max
            )));
        }
    }
    let root = StreamKey::root(config.master_seed);
    let results: Vec<Result<(CorpusRecord, u64)>> = (0..config.count)
        .into_par_iter()
        .map(|k| make_record(root.child(k as u64), config, fixed_p))
        .collect();
    let mut records = Vec::with_capacity(config.count);
    let mut redraws = 0;
    for r in results {
        let (rec, extra) = r?;
        redraws += extra;
        records.push(rec);
    }
    if redraws > 0 {
        debug!("{redraws} degenerate draws replaced");
    }
    Ok(Corpus {
        records,
        config: config.clone(),
        role,
        redraws,
    })
}

/// Writes the line-oriented corpus format.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut w: W) -> Result<()> {
    let cfg = &corpus.config;
    writeln!(
        w,
        "CORPUS v1 pMax={} count={} seed={}",
        cfg.p_max,
        corpus.records.len(),
        cfg.master_seed
    )?;
    let mut line = String::new();
    for r in &corpus.records {
        line.clear();
        write!(
            line,
            "p={} n={} s2={} t=",
            r.p_actual, r.n_actual, r.sigma2_actual
        )
        .unwrap();
        for (j, t) in r.t_padded.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{t}").unwrap();
        }
        line.push_str(" g=");
        for (j, &b) in r.gamma_padded.bits().iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push(if b { '1' } else { '0' });
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn format_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        line,
        msg: msg.into(),
    }
}

fn header_field<T: std::str::FromStr>(tok: Option<&str>, key: &str) -> Result<T> {
    tok.and_then(|t| t.strip_prefix(key))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format_err(1, format!("expected {key}<int> in header")))
}

fn parse_record(line: &str, lineno: usize, p_max: usize) -> Result<CorpusRecord> {
    let mut it = line.split(' ');
    let mut field = |key: &str| -> Result<&str> {
        it.next()
            .and_then(|t| t.strip_prefix(key))
            .ok_or_else(|| format_err(lineno, format!("expected field {key}")))
    };
    let p: usize = field("p=")?
        .parse()
        .map_err(|_| format_err(lineno, "bad p"))?;
    let n: usize = field("n=")?
        .parse()
        .map_err(|_| format_err(lineno, "bad n"))?;
    let s2: f64 = field("s2=")?
        .parse()
        .map_err(|_| format_err(lineno, "bad s2"))?;
    let t = field("t=")?
        .split(',')
        .map(|v| v.parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| format_err(lineno, "bad t value"))?;
    let g = field("g=")?
        .split(',')
        .map(|v| match v {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(format_err(lineno, format!("bad mask bit '{v}'"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if it.next().is_some() {
        return Err(format_err(lineno, "trailing fields"));
    }
    if t.len() != p_max || g.len() != p_max {
        return Err(format_err(
            lineno,
            format!("expected {p_max} values, got t={} g={}", t.len(), g.len()),
        ));
    }
    if p == 0 || p > p_max {
        return Err(format_err(lineno, format!("p = {p} outside [1, {p_max}]")));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(format_err(lineno, "non-finite t value"));
    }
    if t[p..].iter().any(|&v| v != 0.0) || g[p..].iter().any(|&b| b) {
        return Err(format_err(lineno, "non-zero padding"));
    }
    Ok(CorpusRecord {
        t_padded: t,
        gamma_padded: InclusionMask::new(g),
        p_actual: p,
        n_actual: n,
        sigma2_actual: s2,
    })
}

/// Reads a corpus. Fields not stored in the file take their defaults.
pub fn read_corpus<R: BufRead>(r: R, role: CorpusRole) -> Result<Corpus> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| format_err(1, "empty file"))??;
    let mut toks = header.split(' ');
    if toks.next() != Some("CORPUS") || toks.next() != Some("v1") {
        return Err(format_err(1, "expected 'CORPUS v1' header"));
    }
    let p_max: usize = header_field(toks.next(), "pMax=")?;
    let count: usize = header_field(toks.next(), "count=")?;
    let seed: u64 = header_field(toks.next(), "seed=")?;
    if !(1..=MAX_P).contains(&p_max) {
        return Err(format_err(1, format!("pMax {p_max} out of range")));
    }
    let mut records = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if records.len() == count {
            if line.is_empty() {
                continue;
            }
            return Err(format_err(lineno, "more records than declared"));
        }
        records.push(parse_record(&line, lineno, p_max)?);
    }
    if records.len() != count {
        return Err(format_err(
            records.len() + 2,
            format!("declared {count} records, found {}", records.len()),
        ));
    }
    Ok(Corpus {
        records,
        config: GenConfig::new(p_max, count, seed),
        role,
        redraws: 0,
    })
}
