//! Built-in models, label sampling, image rendering and export.

mod builtins;
mod render;

use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use builtins::{builtin, builtin_names, BuiltinModel};
pub use render::{label, render, DigitLabels, ImageGrid, Nuisance, BLUE, GREEN, HEIGHT, RED, WIDTH};

use crate::model::Scm;
use crate::scalar::{lcm_denominators, Rational, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("unknown built-in model `{0}`")]
    UnknownModel(String),
    #[error("built-in model failed to load: {0}")]
    Model(String),
    #[error("invalid labels: {0}")]
    Labels(String),
    #[error("invalid nuisance setting: {0}")]
    Nuisance(String),
    #[error("unlabelable image: {0}")]
    Unlabelable(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// SplitMix64 finalizer; decorrelates consecutive seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of record `index` in a stream started from `seed`.
pub fn record_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed.wrapping_add(index as u64))
}

/// Sampler for a finite distribution given by rational masses. Masses with a
/// common denominator that fits in `u64` are sampled exactly by drawing an
/// integer below the denominator.
pub(crate) enum Categorical {
    Exact { denom: u64, cum: Vec<u64> },
    Float { cum: Vec<f64> },
}

impl Categorical {
    pub fn new(pmf: &[Rational]) -> Self {
        Categorical::exact(pmf).unwrap_or_else(|| Categorical::float(pmf))
    }

    fn float(pmf: &[Rational]) -> Self {
        let cum = pmf
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p.to_f64_lossy();
                Some(*acc)
            })
            .collect();
        Categorical::Float { cum }
    }

    fn exact(pmf: &[Rational]) -> Option<Self> {
        let l: BigInt = lcm_denominators(pmf);
        let denom = l.to_u64()?;
        let mut acc = 0u64;
        let mut cum = Vec::with_capacity(pmf.len());
        for p in pmf {
            let k = (p * Rational::from_integer(l.clone())).to_integer().to_u64()?;
            acc += k;
            cum.push(acc);
        }
        Some(Categorical::Exact { denom, cum })
    }

    /// Index of the drawn outcome.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Categorical::Exact { denom, cum } => {
                let u = rng.random_range(0..*denom);
                cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
            }
            Categorical::Float { cum } => {
                let u: f64 = rng.random();
                cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
            }
        }
    }
}

/// One sampled label row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub id: usize,
    pub seed: u64,
    /// Values in the model's variable order.
    pub values: Vec<i64>,
}

/// Draws `n` i.i.d. rows of `P(V)`: each record samples the exogenous atom
/// from its own seed stream and solves the model.
pub fn sample_labels(scm: &Scm<Rational>, n: usize, seed: u64) -> Vec<LabelRow> {
    let samplers: Vec<Categorical> = scm.exogenous().iter().map(|f| Categorical::new(&f.pmf)).collect();
    (0..n)
        .map(|id| {
            let s = record_seed(seed, id);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let atom: Vec<i64> =
                scm.exogenous().iter().zip(&samplers).map(|(f, smp)| f.support.values()[smp.draw(&mut rng)]).collect();
            LabelRow { id, seed: s, values: scm.solve(&atom) }
        })
        .collect()
}

/// Nuisance setting of a record, from a stream independent of its labels.
pub fn sample_nuisance(record_seed: u64) -> Nuisance {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(record_seed ^ 0x6E75_6973_616E_6365));
    Nuisance {
        x_offset: rng.random_range(-2..=2),
        y_offset: rng.random_range(-2..=2),
        thickness: rng.random_range(1..=2),
    }
}

/// Digit, colour and bar values of a rendered model's row.
fn digit_labels(scm: &Scm<Rational>, row: &LabelRow) -> Result<(i64, i64, i64), DatasetError> {
    let get = |name: &str| {
        scm.var_index(name)
            .map(|i| row.values[i])
            .ok_or_else(|| DatasetError::Labels(format!("model `{}` has no variable `{name}`", scm.name())))
    };
    Ok((get("D")?, get("C")?, get("B")?))
}

/// Writes `manifest.csv` (and one PPM per row when the model renders) into
/// `dir`. Returns the manifest path.
pub fn export(model: &BuiltinModel, rows: &[LabelRow], dir: &Path) -> Result<PathBuf, DatasetError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let manifest = dir.join("manifest.csv");
    let mut w =
        csv::Writer::from_path(&manifest).map_err(|source| DatasetError::Csv { path: manifest.clone(), source })?;
    let csv_err = |source| DatasetError::Csv { path: manifest.clone(), source };
    let mut header: Vec<String> = vec!["id".into(), "model".into(), "seed".into()];
    header.extend(model.scm.variable_names());
    header.extend(["x_offset", "y_offset", "thickness", "image_path"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut rec: Vec<String> = vec![row.id.to_string(), model.name.to_string(), row.seed.to_string()];
        rec.extend(row.values.iter().map(i64::to_string));
        if model.renders {
            let (d, c, b) = digit_labels(&model.scm, row)?;
            let nu = sample_nuisance(row.seed);
            let file = format!("{:06}.ppm", row.id);
            let path = dir.join(&file);
            fs::write(&path, render(d, c, b, nu)?.to_ppm()).map_err(io(&path))?;
            rec.extend([nu.x_offset.to_string(), nu.y_offset.to_string(), nu.thickness.to_string(), file]);
        } else {
            rec.extend([String::new(), String::new(), String::new(), String::new()]);
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io(&manifest))?;
    Ok(manifest)
}

/// Label-only CSV (`id, model, seed, variables…`) for `sample`.
pub fn write_labels_csv(model: &Scm<Rational>, rows: &[LabelRow], path: &Path) -> Result<(), DatasetError> {
    let csv_err = |source| DatasetError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<String> = vec!["id".into(), "model".into(), "seed".into()];
    header.extend(model.variable_names());
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut rec: Vec<String> = vec![row.id.to_string(), model.name().to_string(), row.seed.to_string()];
        rec.extend(row.values.iter().map(i64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}
