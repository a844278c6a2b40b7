//! Test-only oracles and generators shared by the integration suites.
//!
//! The entropy oracle works in 256-bit binary floating point and takes a
//! different algebraic route from the library (`ln n - ln c` terms over exact
//! counts instead of `-p log2 p` over rounded probabilities).

#![allow(dead_code)]

use std::collections::HashMap;

use astro_float::{BigFloat, Consts, RoundingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use variety_core::{Epoch, WeightMatrix, WeightRun};

const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    cc: Consts,
    ln2: BigFloat,
    ln_int: HashMap<u64, BigFloat>,
}

fn to_f64(x: &BigFloat) -> f64 {
    let s = x.to_string();
    s.parse::<f64>()
        .or_else(|_| s.replace(".e", ".0e").parse::<f64>())
        .unwrap_or_else(|_| panic!("cannot parse oracle value {s}"))
}

impl Oracle {
    pub fn new() -> Self {
        let mut cc = Consts::new().expect("astro-float constants");
        let ln2 = cc.ln_2(PREC, RM);
        Oracle {
            cc,
            ln2,
            ln_int: HashMap::new(),
        }
    }

    fn big(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, PREC)
    }

    fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(PREC, RM, &mut self.cc)
    }

    fn ln_u64(&mut self, n: u64) -> BigFloat {
        if let Some(v) = self.ln_int.get(&n) {
            return v.clone();
        }
        let v = BigFloat::from_u64(n, PREC).ln(PREC, RM, &mut self.cc);
        self.ln_int.insert(n, v.clone());
        v
    }

    /// `-sum p ln p / ln 2` with each f64 probability taken exactly.
    pub fn entropy_of_probabilities(&mut self, ps: &[f64]) -> f64 {
        let mut acc = BigFloat::from_u64(0, PREC);
        for &p in ps.iter().filter(|&&p| p > 0.0) {
            let bp = self.big(p);
            let term = bp.mul(&self.ln(&bp), PREC, RM);
            acc = acc.sub(&term, PREC, RM);
        }
        to_f64(&acc.div(&self.ln2, PREC, RM))
    }

    /// `sum (c / n) log2(n / c)` over exact integer counts.
    pub fn entropy_of_counts(&mut self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let bn = BigFloat::from_u64(n, PREC);
        let mut acc = BigFloat::from_u64(0, PREC);
        for &c in counts.iter().filter(|&&c| c > 0) {
            let bc = BigFloat::from_u64(c, PREC);
            let log_ratio = self.ln_u64(n).sub(&self.ln_u64(c), PREC, RM);
            let term = bc.div(&bn, PREC, RM).mul(&log_ratio, PREC, RM);
            acc = acc.add(&term, PREC, RM);
        }
        to_f64(&acc.div(&self.ln2, PREC, RM))
    }

    /// `H(column | row) = sum_{r,c} (n_rc / n) log2(n_r / n_rc)`.
    pub fn conditional_given_rows(&mut self, counts: &[Vec<u64>]) -> f64 {
        let n: u64 = counts.iter().flatten().sum();
        let bn = BigFloat::from_u64(n, PREC);
        let mut acc = BigFloat::from_u64(0, PREC);
        for row in counts {
            let nr: u64 = row.iter().sum();
            for &c in row.iter().filter(|&&c| c > 0) {
                let bc = BigFloat::from_u64(c, PREC);
                let log_ratio = self.ln_u64(nr).sub(&self.ln_u64(c), PREC, RM);
                let term = bc.div(&bn, PREC, RM).mul(&log_ratio, PREC, RM);
                acc = acc.add(&term, PREC, RM);
            }
        }
        to_f64(&acc.div(&self.ln2, PREC, RM))
    }
}

pub fn transpose(counts: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let cols = counts[0].len();
    (0..cols)
        .map(|c| counts.iter().map(|r| r[c]).collect())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random non-empty count table. Roughly a third of the tables are sparse
/// enough to create strong dependence between the axes.
pub fn random_counts(rng: &mut impl Rng, max_side: usize) -> Vec<Vec<u64>> {
    loop {
        let rows = rng.random_range(1..=max_side);
        let cols = rng.random_range(1..=max_side);
        let sparse = rng.random_bool(0.35);
        let counts: Vec<Vec<u64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        if sparse && rng.random_bool(0.7) {
                            0
                        } else {
                            rng.random_range(0..=20)
                        }
                    })
                    .collect()
            })
            .collect();
        if counts.iter().flatten().any(|&c| c > 0) {
            return counts;
        }
    }
}

pub fn random_matrix(rng: &mut impl Rng, name: &str, rows: usize, cols: usize) -> WeightMatrix {
    let values = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    WeightMatrix::new(name, rows, cols, values).unwrap()
}

/// Random valid run with awkward layer names and value patterns.
pub fn random_run(rng: &mut impl Rng, run_id: &str) -> WeightRun {
    const NAMES: [&str; 6] = ["fc1", "layer4.0/conv 1", ".hidden", "Ω-out", "fc/1", "fc 1"];
    let layer_count = rng.random_range(1..=4);
    let mut names: Vec<&str> = Vec::new();
    while names.len() < layer_count {
        let n = NAMES[rng.random_range(0..NAMES.len())];
        if !names.contains(&n) {
            names.push(n);
        }
    }
    let shapes: Vec<(usize, usize)> = names
        .iter()
        .map(|_| (rng.random_range(1..=7), rng.random_range(1..=7)))
        .collect();
    let epoch_count = rng.random_range(1..=4);
    let mut index = rng.random_range(0..3);
    let epochs = (0..epoch_count)
        .map(|_| {
            let layers = names
                .iter()
                .zip(&shapes)
                .map(|(n, &(r, c))| {
                    let values = (0..r * c)
                        .map(|_| match rng.random_range(0..10) {
                            0 => -0.0,
                            1 => f64::MIN_POSITIVE / 3.0,
                            2 => f64::MAX,
                            _ => f64::from_bits(rng.random::<u64>() & 0x3fff_ffff_ffff_ffff),
                        })
                        .collect();
                    WeightMatrix::new(*n, r, c, values).unwrap()
                })
                .collect();
            let e = Epoch { index, layers };
            index += rng.random_range(1..4);
            e
        })
        .collect();
    WeightRun {
        run_id: run_id.to_owned(),
        epochs,
        baseline: None,
    }
}

pub fn bits_of(run: &WeightRun) -> Vec<Vec<Vec<u64>>> {
    run.epochs
        .iter()
        .map(|e| {
            e.layers
                .iter()
                .map(|m| m.values().iter().map(|v| v.to_bits()).collect())
                .collect()
        })
        .collect()
}

/// Random orthogonal matrix from the QR factorization of a Gaussian-ish matrix.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> nalgebra::DMatrix<f64> {
    let a = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

pub fn to_dmatrix(m: &WeightMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.values())
}

pub fn from_dmatrix(name: &str, d: &nalgebra::DMatrix<f64>) -> WeightMatrix {
    let mut values = Vec::with_capacity(d.nrows() * d.ncols());
    for r in 0..d.nrows() {
        for c in 0..d.ncols() {
            values.push(d[(r, c)]);
        }
    }
    WeightMatrix::new(name, d.nrows(), d.ncols(), values).unwrap()
}

/// Relative errors between analytic and central-difference gradients at 10
/// random coordinates of a seeded 2-3-2 network.
pub fn gradient_errors(seed: u64) -> Vec<f64> {
    use variety_core::trainer::{make_blobs, Mlp, MlpConfig};

    let config = MlpConfig {
        layer_sizes: vec![2, 3, 2],
        learning_rate: 0.1,
        epochs: 1,
        batch_size: 8,
        seed,
        init_scale: 1.0,
    };
    let mut r = rng(seed);
    let net = Mlp::init(&config, &mut r);
    let data = make_blobs(2, 2, 4, 0.5, seed).unwrap();
    let batch: Vec<(&[f64], usize)> = data
        .points
        .iter()
        .map(|(x, y)| (x.as_slice(), *y))
        .collect();
    let (_, grads) = net.loss_and_gradient(&batch);

    let base = net.to_matrices();
    let sizes: Vec<usize> = base.iter().map(|m| m.values().len()).collect();
    let total: usize = sizes.iter().sum();
    let h = 1e-5;
    let loss_at = |layer: usize, k: usize, shift: f64| {
        let mut ms = base.clone();
        let m = &ms[layer];
        let mut v = m.values().to_vec();
        v[k] += shift;
        ms[layer] = WeightMatrix::new(m.layer_name(), m.rows(), m.cols(), v).unwrap();
        Mlp::from_matrices(&ms).unwrap().loss(&batch)
    };
    (0..10)
        .map(|_| {
            let mut flat = r.random_range(0..total);
            let mut layer = 0;
            while flat >= sizes[layer] {
                flat -= sizes[layer];
                layer += 1;
            }
            let numeric = (loss_at(layer, flat, h) - loss_at(layer, flat, -h)) / (2.0 * h);
            let analytic = grads[layer][flat];
            (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
        })
        .collect()
}

pub struct Fixture {
    pub name: &'static str,
    pub manifest: std::path::PathBuf,
    pub expected: variety_core::ErrorClass,
}

fn edit_file(path: &std::path::Path, f: impl FnOnce(&mut Vec<u8>)) {
    let mut bytes = std::fs::read(path).unwrap();
    f(&mut bytes);
    std::fs::write(path, bytes).unwrap();
}

fn edit_manifest(path: &std::path::Path, f: impl FnOnce(&mut serde_json::Value)) {
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
}

/// Six damaged copies of a small valid run, each under its own directory.
pub fn corruption_fixtures(dir: &std::path::Path) -> Vec<Fixture> {
    use variety_core::io::{write_run, WriteOptions};
    use variety_core::ErrorClass;

    let mut r = rng(99);
    let run = WeightRun {
        run_id: "damaged".into(),
        epochs: (0..2)
            .map(|index| Epoch {
                index,
                layers: vec![random_matrix(&mut r, "fc1", 2, 3)],
            })
            .collect(),
        baseline: None,
    };
    let make = |name: &'static str, expected: ErrorClass| {
        let sub = dir.join(name);
        write_run(&run, &sub, &WriteOptions::default()).unwrap();
        let manifest = sub.join("damaged").join("manifest.json");
        Fixture {
            name,
            manifest,
            expected,
        }
    };
    let varm = |f: &Fixture| {
        f.manifest
            .parent()
            .unwrap()
            .join("epoch_1")
            .join("fc1.varm")
    };

    let mut out = Vec::new();

    let f = make("wrong magic", ErrorClass::Corruption);
    edit_file(&varm(&f), |b| b[..4].copy_from_slice(b"VARN"));
    out.push(f);

    let f = make("truncated payload", ErrorClass::Corruption);
    edit_file(&varm(&f), |b| b.truncate(b.len() - 8));
    out.push(f);

    let f = make("shape lie", ErrorClass::Corruption);
    edit_manifest(&f.manifest, |v| v["layers"][0]["rows"] = 3.into());
    out.push(f);

    let f = make("trailing bytes", ErrorClass::Corruption);
    edit_file(&varm(&f), |b| b.extend_from_slice(&[0u8; 8]));
    out.push(f);

    let f = make("unknown dtype", ErrorClass::Version);
    edit_file(&varm(&f), |b| {
        b[24..28].copy_from_slice(&7u32.to_le_bytes())
    });
    out.push(f);

    let f = make("unknown format_version", ErrorClass::Version);
    edit_manifest(&f.manifest, |v| v["format_version"] = 2.into());
    out.push(f);

    out
}
