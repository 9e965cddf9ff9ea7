//! Per-cell seed derivation.
//!
//! Every (date, hour) cell of a backtest draws from its own RNG stream so
//! results never depend on thread scheduling. The mixing function is:
//!
//! ```text
//! splitmix64(z):
//!     z = z + 0x9E3779B97F4A7C15            (wrapping)
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!     return z ^ (z >> 31)
//!
//! cell_seed(master, date, hour) =
//!     splitmix64(splitmix64(master) ^ ((days_from_ce(date) << 5) | hour))
//! ```
//!
//! where `days_from_ce` is chrono's `num_days_from_ce` (0001-01-01 = day 1)
//! and `hour` is 1..=24. The resulting `u64` seeds a ChaCha8 generator via
//! `SeedableRng::seed_from_u64`.

use chrono::{Datelike, NaiveDate};

pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn cell_seed(master: u64, date: NaiveDate, hour: u8) -> u64 {
    let ordinal = date.num_days_from_ce() as i64 as u64;
    splitmix64(splitmix64(master) ^ ((ordinal << 5) | hour as u64))
}
