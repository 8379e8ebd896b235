//! Test-only oracles and data generators. Nothing in here calls the code path
//! it is used to check.

#![allow(dead_code)]

use crimefis::dataset::{ProcessedRecord, DIMENSION_NAMES};
use crimefis::fuzzy::{Consequent, GaussianMf, Rule, SugenoFis, Variant};
use rand::Rng;

/// Weighted average of rule outputs, written out term by term from the raw
/// parameters (no use of `SugenoFis::evaluate` or `firing_strength`).
pub fn sugeno_oracle(fis: &SugenoFis, x: &[f64]) -> f64 {
    let banks = fis.mf_banks();
    let mut num = 0.0;
    let mut den = 0.0;
    for rule in fis.rules() {
        let mut w = 1.0;
        for d in 0..x.len() {
            let mf = &banks[d][rule.antecedent[d]];
            let c = mf.center();
            let s = mf.sigma();
            w *= (-((x[d] - c) * (x[d] - c)) / (2.0 * s * s)).exp();
        }
        let z = match &rule.consequent {
            Consequent::Constant(v) => *v,
            Consequent::Linear { coefficients, bias } => {
                let mut acc = *bias;
                for d in 0..x.len() {
                    acc += coefficients[d] * x[d];
                }
                acc
            }
        };
        num += w * z;
        den += w;
    }
    num / den
}

pub fn names(dims: usize) -> Vec<String> {
    (0..dims).map(|d| format!("x{d}")).collect()
}

/// Random model with `dims` inputs in roughly [0, 1], `mfs_per_dim` Gaussians
/// per input, and `rules` rules with random antecedents.
pub fn random_fis<R: Rng>(rng: &mut R, dims: usize, mfs_per_dim: usize, rules: usize, linear: bool) -> SugenoFis {
    let banks: Vec<Vec<GaussianMf>> = (0..dims)
        .map(|_| {
            (0..mfs_per_dim)
                .map(|_| GaussianMf::new(rng.random_range(0.0..1.0), rng.random_range(0.15..0.6)).unwrap())
                .collect()
        })
        .collect();
    let rules = (0..rules)
        .map(|_| Rule {
            antecedent: (0..dims).map(|_| rng.random_range(0..mfs_per_dim)).collect(),
            consequent: if linear {
                Consequent::Linear {
                    coefficients: (0..dims).map(|_| rng.random_range(-20.0..20.0)).collect(),
                    bias: rng.random_range(-10.0..60.0),
                }
            } else {
                Consequent::Constant(rng.random_range(0.0..100.0))
            },
        })
        .collect();
    SugenoFis::new(
        names(dims),
        banks,
        rules,
        if linear { Variant::Anfis } else { Variant::Fis },
    )
    .unwrap()
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, dims: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dims).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect()
}

/// Row `[wbar_i * x, wbar_i]...` built from the oracle's own firing strengths.
pub fn oracle_design_matrix(fis: &SugenoFis, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let banks = fis.mf_banks();
    points
        .iter()
        .map(|x| {
            let w: Vec<f64> = fis
                .rules()
                .iter()
                .map(|r| {
                    (0..x.len())
                        .map(|d| {
                            let mf = &banks[d][r.antecedent[d]];
                            (-(x[d] - mf.center()).powi(2) / (2.0 * mf.sigma().powi(2))).exp()
                        })
                        .product()
                })
                .collect();
            let total: f64 = w.iter().sum();
            let mut row = Vec::new();
            for wi in w {
                for xd in x {
                    row.push(wi / total * xd);
                }
                row.push(wi / total);
            }
            row
        })
        .collect()
}

/// Inverse of a small square matrix by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                if f != 0.0 {
                    for k in 0..2 * n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = a[0].len();
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|r| (0..cols).map(|j| (0..inner).map(|k| r[k] * b[k][j]).sum()).collect())
        .collect()
}

fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// Minimum-norm least-squares solution via the pseudoinverse, for matrices of
/// full row or full column rank: `(A^T A)^-1 A^T t` when tall, `A^T (A A^T)^-1 t` when wide.
pub fn pseudoinverse_solve(a: &[Vec<f64>], t: &[f64]) -> Vec<f64> {
    let at = transpose(a);
    if a.len() >= a[0].len() {
        let inv = gauss_jordan_inverse(&matmul(&at, a)).expect("full column rank");
        matvec(&inv, &matvec(&at, t))
    } else {
        let inv = gauss_jordan_inverse(&matmul(a, &at)).expect("full row rank");
        matvec(&at, &matvec(&inv, t))
    }
}

pub fn sse(fis: &SugenoFis, points: &[Vec<f64>], targets: &[f64]) -> f64 {
    points
        .iter()
        .zip(targets)
        .map(|(x, t)| (sugeno_oracle(fis, x) - t).powi(2))
        .sum()
}

/// Rebuilds `fis` with one premise parameter replaced.
pub fn with_premise(fis: &SugenoFis, dim: usize, mf: usize, center: f64, sigma: f64) -> SugenoFis {
    let mut banks = fis.mf_banks().to_vec();
    banks[dim][mf] = GaussianMf::new(center, sigma).unwrap();
    SugenoFis::new(fis.dimension_names().to_vec(), banks, fis.rules().to_vec(), fis.variant()).unwrap()
}

/// Central finite-difference partials of the summed squared error for one MF.
pub fn finite_difference(fis: &SugenoFis, points: &[Vec<f64>], targets: &[f64], dim: usize, mf: usize) -> (f64, f64) {
    let g = fis.mf_banks()[dim][mf];
    let (c, s) = (g.center(), g.sigma());
    let hc = 1e-6 * c.abs().max(1.0);
    let hs = 1e-6 * s.abs().max(1.0);
    let dc = (sse(&with_premise(fis, dim, mf, c + hc, s), points, targets)
        - sse(&with_premise(fis, dim, mf, c - hc, s), points, targets))
        / (2.0 * hc);
    let ds = (sse(&with_premise(fis, dim, mf, c, s + hs), points, targets)
        - sse(&with_premise(fis, dim, mf, c, s - hs), points, targets))
        / (2.0 * hs);
    (dc, ds)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Region shared by the synthetic labels.
pub const LAT_RANGE: (f64, f64) = (23.70, 23.90);
pub const LON_RANGE: (f64, f64) = (90.35, 90.55);

/// A record from label `which`'s cluster: label 0 lives in the south-west
/// quarter of the region, label 1 in the north-east quarter.
pub fn cluster_record<R: Rng>(rng: &mut R, which: usize) -> ProcessedRecord {
    let (lat_lo, lat_hi) = LAT_RANGE;
    let (lon_lo, lon_hi) = LON_RANGE;
    let lat_w = (lat_hi - lat_lo) / 4.0;
    let lon_w = (lon_hi - lon_lo) / 4.0;
    let (lat, lon) = if which == 0 {
        (
            rng.random_range(lat_lo + 0.1 * lat_w..lat_lo + 1.9 * lat_w),
            rng.random_range(lon_lo + 0.1 * lon_w..lon_lo + 1.9 * lon_w),
        )
    } else {
        (
            rng.random_range(lat_hi - 1.9 * lat_w..lat_hi - 0.1 * lat_w),
            rng.random_range(lon_hi - 1.9 * lon_w..lon_hi - 0.1 * lon_w),
        )
    };
    let label = ["kidnapping", "murder"][which];
    ProcessedRecord::new(label, lat, lon, rng.random_range(1..=31), rng.random_range(0..=45)).unwrap()
}

/// Records at the region's corners (day/holiday extremes too), so both labels'
/// grids span the same region.
pub fn anchor_records(which: usize) -> Vec<ProcessedRecord> {
    let label = ["kidnapping", "murder"][which];
    let (lat_lo, lat_hi) = LAT_RANGE;
    let (lon_lo, lon_hi) = LON_RANGE;
    vec![
        ProcessedRecord::new(label, lat_lo, lon_lo, 1, 0).unwrap(),
        ProcessedRecord::new(label, lat_lo, lon_hi, 31, 45).unwrap(),
        ProcessedRecord::new(label, lat_hi, lon_lo, 31, 0).unwrap(),
        ProcessedRecord::new(label, lat_hi, lon_hi, 1, 45).unwrap(),
    ]
}

/// `train_n` training records (cluster points plus corner anchors, labels
/// interleaved at random) and `test_n` cluster-only test records.
pub fn separable_dataset<R: Rng>(rng: &mut R, train_n: usize, test_n: usize) -> (Vec<ProcessedRecord>, Vec<ProcessedRecord>) {
    let mut train: Vec<ProcessedRecord> = anchor_records(0).into_iter().chain(anchor_records(1)).collect();
    while train.len() < train_n {
        let which = rng.random_range(0..2);
        train.push(cluster_record(rng, which));
    }
    let test = (0..test_n).map(|i| cluster_record(rng, i % 2)).collect();
    (train, test)
}

/// Label whose own records most often share the query's lat/lon cell on a
/// coarse 4x4 grid over the region (first label wins ties).
pub fn nearest_cell_label(train: &[ProcessedRecord], query: &ProcessedRecord) -> String {
    let cell = |r: &ProcessedRecord| {
        let f = |v: f64, (lo, hi): (f64, f64)| (((v - lo) / (hi - lo) * 4.0).floor() as i64).clamp(0, 3);
        (f(r.latitude, LAT_RANGE), f(r.longitude, LON_RANGE))
    };
    let q = cell(query);
    let mut best = (String::new(), 0usize);
    for label in ["kidnapping", "murder"] {
        let n = train.iter().filter(|r| r.label == label && cell(r) == q).count();
        if best.0.is_empty() || n > best.1 {
            best = (label.to_string(), n);
        }
    }
    best.0
}

pub const DIMS: [&str; 4] = DIMENSION_NAMES;

/// Full-grid model on [0, 1]^dims: `mfs` Gaussians per input spread evenly,
/// one rule per MF combination, random linear consequents.
pub fn grid_fis<R: Rng>(rng: &mut R, dims: usize, mfs: usize) -> SugenoFis {
    let banks: Vec<Vec<GaussianMf>> = (0..dims)
        .map(|_| {
            (0..mfs)
                .map(|k| {
                    let c = (k as f64 + 0.5) / mfs as f64 + rng.random_range(-0.05..0.05);
                    GaussianMf::new(c, rng.random_range(0.6..0.9) / mfs as f64).unwrap()
                })
                .collect()
        })
        .collect();
    let mut antecedents = vec![vec![]];
    for _ in 0..dims {
        antecedents = antecedents
            .into_iter()
            .flat_map(|a: Vec<usize>| {
                (0..mfs).map(move |k| {
                    let mut a = a.clone();
                    a.push(k);
                    a
                })
            })
            .collect();
    }
    let rules = antecedents
        .into_iter()
        .map(|antecedent| Rule {
            antecedent,
            consequent: Consequent::Linear {
                coefficients: (0..dims).map(|_| rng.random_range(-20.0..20.0)).collect(),
                bias: rng.random_range(-10.0..60.0),
            },
        })
        .collect();
    SugenoFis::new(names(dims), banks, rules, Variant::Anfis).unwrap()
}

/// Same structure as `fis`, premises nudged (centers +-0.05, sigmas x0.85..1.2)
/// and all consequents zeroed: a fresh model to train.
pub fn perturbed_fresh<R: Rng>(rng: &mut R, fis: &SugenoFis) -> SugenoFis {
    let banks = fis
        .mf_banks()
        .iter()
        .map(|b| {
            b.iter()
                .map(|m| {
                    GaussianMf::new(
                        m.center() + rng.random_range(-0.05..0.05),
                        m.sigma() * rng.random_range(0.85..1.2),
                    )
                    .unwrap()
                })
                .collect()
        })
        .collect();
    let rules = fis
        .rules()
        .iter()
        .map(|r| Rule {
            antecedent: r.antecedent.clone(),
            consequent: Consequent::zero_linear(fis.dims()),
        })
        .collect();
    SugenoFis::new(fis.dimension_names().to_vec(), banks, rules, Variant::Anfis).unwrap()
}

/// A random subset of `k` rules of a full-grid model (distinct antecedents).
pub fn rule_subset<R: Rng>(rng: &mut R, fis: &SugenoFis, k: usize) -> SugenoFis {
    use rand::seq::SliceRandom;
    let mut rules = fis.rules().to_vec();
    rules.shuffle(rng);
    rules.truncate(k);
    SugenoFis::new(fis.dimension_names().to_vec(), fis.mf_banks().to_vec(), rules, fis.variant()).unwrap()
}

pub fn theta(consequents: &[Consequent]) -> Vec<f64> {
    consequents
        .iter()
        .flat_map(|c| match c {
            Consequent::Linear { coefficients, bias } => {
                let mut v = coefficients.clone();
                v.push(*bias);
                v
            }
            Consequent::Constant(v) => vec![*v],
        })
        .collect()
}

pub fn from_theta(theta: &[f64], dims: usize) -> Vec<Consequent> {
    theta
        .chunks(dims + 1)
        .map(|c| Consequent::Linear { coefficients: c[..dims].to_vec(), bias: c[dims] })
        .collect()
}

pub fn with_consequents(fis: &SugenoFis, consequents: Vec<Consequent>) -> SugenoFis {
    let rules = fis
        .rules()
        .iter()
        .zip(consequents)
        .map(|(r, consequent)| Rule { antecedent: r.antecedent.clone(), consequent })
        .collect();
    SugenoFis::new(fis.dimension_names().to_vec(), fis.mf_banks().to_vec(), rules, fis.variant()).unwrap()
}

pub fn oracle_rmse(fis: &SugenoFis, points: &[Vec<f64>], targets: &[f64]) -> f64 {
    (sse(fis, points, targets) / points.len() as f64).sqrt()
}

/// Record `i` of a lookup set: latitude `i`, everything else fixed.
pub fn lookup_record(label: &str, i: usize) -> ProcessedRecord {
    ProcessedRecord::new(label, i as f64, 0.0, 1, 0).unwrap()
}

/// Expert whose output at lookup record `i` is `scores[i]` (to rounding):
/// one narrow Gaussian per record on latitude, other inputs irrelevant.
pub fn lookup_expert(scores: &[f64], variant: Variant) -> SugenoFis {
    let lat_bank = (0..scores.len()).map(|i| GaussianMf::new(i as f64, 0.05).unwrap()).collect();
    let banks = vec![
        lat_bank,
        vec![GaussianMf::new(0.0, 1.0).unwrap()],
        vec![GaussianMf::new(1.0, 1.0).unwrap()],
        vec![GaussianMf::new(0.0, 1.0).unwrap()],
    ];
    let rules = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| Rule {
            antecedent: vec![i, 0, 0, 0],
            consequent: match variant {
                Variant::Fis => Consequent::Constant(s),
                Variant::Anfis => Consequent::Linear { coefficients: vec![0.0; 4], bias: s },
            },
        })
        .collect();
    SugenoFis::new(DIMENSION_NAMES.iter().map(|s| s.to_string()).collect(), banks, rules, variant).unwrap()
}
