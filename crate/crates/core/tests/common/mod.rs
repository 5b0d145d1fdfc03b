//! Reference implementations used by the integration and acceptance
//! tests. Each one takes a different numerical route from the library.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use varsel::linalg::Matrix;
use varsel::nn::{bce_loss, MlpParams};
use varsel::ols::{standardize, StandardizedDataset};
use varsel::rng::substream;
use varsel::synthgen::simulate_dataset;

use rand::Rng;

/// Standardized instance with iid normal design and random coefficients.
pub fn random_instance(seed: u64, n: usize, p: usize) -> StandardizedDataset {
    let mut rng = substream(seed, &[7]);
    let beta: Vec<f64> = (0..p)
        .map(|_| if rng.random_bool(0.5) { rng.random_range(-3.0..3.0) } else { 0.0 })
        .collect();
    let s2 = rng.random_range(0.05..1.0);
    let raw = simulate_dataset(&beta, n, s2, &mut rng).unwrap();
    standardize(&raw).unwrap()
}

/// Mantissa and exponent with v = m · 2^e exactly.
fn decode(v: f64) -> (i64, i32) {
    if v == 0.0 {
        return (0, 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mant = if exp == 0 {
        (bits & 0xf_ffff_ffff_ffff) << 1
    } else {
        (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
    };
    (sign * mant as i64, exp - 1075)
}

/// Every value times a common power of two, as exact integers.
fn to_scaled_integers(values: &[f64]) -> Vec<BigInt> {
    let decoded: Vec<(i64, i32)> = values.iter().map(|&v| decode(v)).collect();
    let emin = decoded
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| e)
        .min()
        .unwrap_or(0);
    decoded
        .iter()
        .map(|&(m, e)| BigInt::from(m) << ((e - emin) as usize))
        .collect()
}

pub struct OracleFit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub rss: f64,
}

/// OLS through exact normal equations on the given f64 data.
///
/// X and y are scaled by one power of two into integers (β and t are
/// unchanged by this), XᵀX and Xᵀy are accumulated exactly, and the
/// augmented system [XᵀX | Xᵀy | I] is reduced in rationals.
pub fn ols_oracle(x: &Matrix, y: &[f64]) -> OracleFit {
    let (n, p) = (x.rows(), x.cols());
    let mut all = x.as_slice().to_vec();
    all.extend_from_slice(y);
    let ints = to_scaled_integers(&all);
    let xi = |i: usize, j: usize| &ints[i * p + j];
    let yi = |i: usize| &ints[n * p + i];

    let one = BigRational::from_integer(BigInt::from(1));
    let width = 2 * p + 1;
    let mut aug = vec![vec![BigRational::zero(); width]; p];
    for a in 0..p {
        for b in a..p {
            let mut s = BigInt::zero();
            for i in 0..n {
                s += xi(i, a) * xi(i, b);
            }
            aug[a][b] = BigRational::from_integer(s.clone());
            aug[b][a] = BigRational::from_integer(s);
        }
        let mut s = BigInt::zero();
        for i in 0..n {
            s += xi(i, a) * yi(i);
        }
        aug[a][p] = BigRational::from_integer(s);
        aug[a][p + 1 + a] = one.clone();
    }
    for col in 0..p {
        let piv = (col..p).find(|&r| !aug[r][col].is_zero()).expect("nonsingular");
        aug.swap(col, piv);
        let inv = &one / &aug[col][col];
        for k in col..width {
            aug[col][k] = &aug[col][k] * &inv;
        }
        for r in 0..p {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                for k in col..width {
                    let v = &f * &aug[col][k];
                    aug[r][k] -= v;
                }
            }
        }
    }
    let beta: Vec<BigRational> = (0..p).map(|j| aug[j][p].clone()).collect();
    // common denominator so the residuals stay in integers
    let mut d = BigInt::from(1);
    for b in &beta {
        d = num_integer::Integer::lcm(&d, b.denom());
    }
    let num: Vec<BigInt> = beta.iter().map(|b| b.numer() * (&d / b.denom())).collect();
    let mut rss_scaled = BigInt::zero();
    for i in 0..n {
        let mut r = yi(i) * &d;
        for j in 0..p {
            r -= xi(i, j) * &num[j];
        }
        rss_scaled += &r * &r;
    }
    // s² · (XᵀX)⁻¹ is invariant under the common scaling
    let rss = BigRational::new(rss_scaled, &d * &d);
    let s2 = &rss / BigRational::from_integer(BigInt::from(n - p));
    let se: Vec<f64> = (0..p)
        .map(|j| (&s2 * &aug[j][p + 1 + j]).to_f64().unwrap().sqrt())
        .collect();
    let beta: Vec<f64> = beta.iter().map(|b| b.to_f64().unwrap()).collect();
    let t = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
    let scale = {
        let e = all
            .iter()
            .filter(|v| **v != 0.0)
            .map(|&v| decode(v).1)
            .min()
            .unwrap_or(0);
        2f64.powi(e)
    };
    OracleFit {
        beta,
        se,
        t,
        rss: rss.abs().to_f64().unwrap() * scale * scale,
    }
}

/// Residual sum of squares of `y` on columns `cols` via the normal
/// equations and Gauss-Jordan with partial pivoting in f64.
pub fn rss_normal_equations(x: &Matrix, cols: &[usize], y: &[f64]) -> f64 {
    let k = cols.len();
    let n = x.rows();
    if k == 0 {
        return y.iter().map(|v| v * v).sum();
    }
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..n {
        let row = x.row(i);
        for (r, &cr) in cols.iter().enumerate() {
            for (s, &cs) in cols.iter().enumerate() {
                a[r][s] += row[cr] * row[cs];
            }
            a[r][k] += row[cr] * y[i];
        }
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col];
                for s in 0..=k {
                    a[r][s] -= f * a[col][s];
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            let row = x.row(i);
            let fit: f64 = cols.iter().enumerate().map(|(r, &c)| row[c] * a[r][k]).sum();
            (y[i] - fit).powi(2)
        })
        .sum()
}

/// Best subset under n·ln(RSS/n) + penalty·k by recursive enumeration;
/// ties go to fewer predictors, then the smaller index list.
pub fn ic_oracle(data: &StandardizedDataset, bic: bool) -> Vec<usize> {
    let (n, p) = (data.n(), data.p());
    let pen = if bic { (n as f64).ln() } else { 2.0 };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut stack = vec![Vec::<usize>::new()];
    while let Some(sub) = stack.pop() {
        let rss = rss_normal_equations(&data.zx, &sub, &data.zy);
        let score = n as f64 * (rss / n as f64).ln() + pen * sub.len() as f64;
        let better = match &best {
            None => true,
            Some((s, b)) => {
                score < *s || (score == *s && (sub.len(), &sub) < (b.len(), b))
            }
        };
        if better {
            best = Some((score, sub.clone()));
        }
        let start = sub.last().map_or(0, |&l| l + 1);
        for j in start..p {
            let mut next = sub.clone();
            next.push(j);
            stack.push(next);
        }
    }
    best.unwrap().1
}

fn loss_at(params: &MlpParams, x: &[f64], t: &[f64]) -> f64 {
    bce_loss(&params.predict(x).unwrap(), t)
}

/// Central finite differences of the loss in every weight and bias, laid
/// out as (weights per layer, biases per layer).
pub fn finite_difference_gradient(
    params: &MlpParams,
    x: &[f64],
    t: &[f64],
    h: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut p = params.clone();
    let mut gw = Vec::new();
    let mut gb = Vec::new();
    for l in 0..p.num_layers() {
        let mut layer = Vec::new();
        for k in 0..p.weights[l].len() {
            let orig = p.weights[l][k];
            p.weights[l][k] = orig + h;
            let up = loss_at(&p, x, t);
            p.weights[l][k] = orig - h;
            let down = loss_at(&p, x, t);
            p.weights[l][k] = orig;
            layer.push((up - down) / (2.0 * h));
        }
        gw.push(layer);
        let mut layer = Vec::new();
        for k in 0..p.biases[l].len() {
            let orig = p.biases[l][k];
            p.biases[l][k] = orig + h;
            let up = loss_at(&p, x, t);
            p.biases[l][k] = orig - h;
            let down = loss_at(&p, x, t);
            p.biases[l][k] = orig;
            layer.push((up - down) / (2.0 * h));
        }
        gb.push(layer);
    }
    (gw, gb)
}

/// |a − b| / max(|a|, |b|, floor).
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
