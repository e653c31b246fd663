//! Shared fixtures for the CLI test targets.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::Array2;
use nrn_core::preprocess::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Label of the synthetic rule task.
pub fn rule(r: &[f64]) -> u8 {
    u8::from((r[0] > 0.5 && r[1] < 0.3) || r[4] > 0.8)
}

/// `n` rows of six uniform features labeled by [`rule`].
pub fn synthetic(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_simple_fn((n, 6), || rng.gen_range(0.0..1.0));
    let y = x.outer_iter().map(|r| rule(r.as_slice().unwrap())).collect();
    Dataset::new((0..6).map(|i| format!("x{i}")).collect(), x, y).unwrap()
}

/// Writes `data` as CSV with the label column `y` placed last.
pub fn write_csv(path: &Path, data: &Dataset) {
    let mut s = data.feature_names.join(",") + ",y\n";
    for (row, y) in data.features.outer_iter().zip(&data.labels) {
        for v in row {
            write!(s, "{v},").unwrap();
        }
        writeln!(s, "{y}").unwrap();
    }
    std::fs::write(path, s).unwrap();
}

pub fn nrn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrn")).args(args).output().expect("nrn binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Trains through the CLI into `out` and returns the model path.
pub fn cli_train(data: &Path, out: &Path, seed: u64, extra: &[&str]) -> PathBuf {
    let seed = seed.to_string();
    let mut args = vec!["train", "--data", path_str(data), "--label", "y", "--seed", &seed, "--out", path_str(out)];
    args.extend_from_slice(extra);
    let o = nrn(&args);
    assert!(o.status.success(), "train failed: {}", String::from_utf8_lossy(&o.stderr));
    out.join("model.json")
}
