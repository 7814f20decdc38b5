//! Synthetic data for the application harnesses and CSV ingestion.
//!
//! * [`radio`]: log-distance path-loss RSS fingerprint maps and k-NN
//!   fingerprint localization.
//! * [`labeled`]: two-class LoS/NLoS and sleeping-cell KPI sets, plus
//!   equal-prior Gaussian mixtures with closed-form Bayes risk.
//! * [`csv_io`]: reading and writing datasets as CSV.
//!
//! Every generator takes an explicit seed and draws from a ChaCha8 stream, so
//! output is bit-identical across runs and platforms.

pub mod csv_io;
pub mod labeled;
pub mod radio;

pub use csv_io::{load_csv, read_csv, write_csv, CsvSchema, LoadedCsv};
pub use labeled::{
    gaussian_q, gen_gaussian_mixture, gen_los_nlos, gen_sleeping_cell, GaussianMixture, KpiRecord,
    LosNlosParams, SleepingCellParams,
};
pub use radio::{
    gen_fingerprints, localize, FingerprintMap, Grid, LocalizationRun, Localizer, PathLossParams,
    Scenario,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of `seed`. Independent streams let parallel
/// workers reproduce exactly what a sequential run draws.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
