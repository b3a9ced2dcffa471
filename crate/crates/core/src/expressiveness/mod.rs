//! Number of distinct behaviors each description scheme can separate.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact integers are produced up to this many decimal digits.
pub const DIGIT_CAP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// A behavior is observed, not described: a single state.
    Observation,
    /// `n` dimensions with `k` values each: `k^n`.
    Representation,
    /// Pairwise connectivity over `n` attributes with `k` states: `k^(n(n−1))`.
    Structure,
}

pub const ALL_MODES: [Mode; 3] = [Mode::Observation, Mode::Representation, Mode::Structure];

impl Mode {
    fn exponent(self, n: u64) -> u64 {
        match self {
            Mode::Observation => 0,
            Mode::Representation => n,
            Mode::Structure => n * n.saturating_sub(1),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Observation => "observation",
            Mode::Representation => "representation",
            Mode::Structure => "structure",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "observation" => Ok(Mode::Observation),
            "representation" => Ok(Mode::Representation),
            "structure" => Ok(Mode::Structure),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Power {
    pub exponent: u64,
    pub log2: f64,
    /// `None` when the count exceeds the digit cap.
    pub exact: Option<BigUint>,
}

impl Power {
    pub fn log_only(&self) -> bool {
        self.exact.is_none()
    }
}

pub fn power(mode: Mode, n: u64, k: u64) -> Result<Power> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!("need n ≥ 1 and k ≥ 1, got n={n}, k={k}")));
    }
    let exponent = mode.exponent(n);
    let log2 = exponent as f64 * (k as f64).log2();
    let digits = exponent as f64 * (k as f64).log10();
    let exact = match u32::try_from(exponent) {
        Ok(e) if digits <= DIGIT_CAP => Some(BigUint::from(k).pow(e)),
        _ => None,
    };
    Ok(Power { exponent, log2, exact })
}

/// Smallest `n` at which structures separate at least as many behaviors as
/// representations, i.e. the least `n` with `k_struct^(n−1) ≥ k_rep`.
/// `None` when `k_struct < 2`, where the structure count never grows.
pub fn crossover(k_rep: u64, k_struct: u64) -> Option<u64> {
    if k_struct < 2 || k_rep == 0 {
        return None;
    }
    let target = BigUint::from(k_rep);
    let base = BigUint::from(k_struct);
    let mut acc = BigUint::one();
    let mut m = 0;
    while acc < target {
        acc *= &base;
        m += 1;
    }
    Some(m + 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: u64,
    pub mode: Mode,
    pub log2: f64,
}

/// Log-scale counts for every `n` in `n_min..=n_max` and every mode; `k`
/// is the per-mode base.
pub fn curve(n_min: u64, n_max: u64, modes: &[Mode], k_rep: u64, k_struct: u64) -> Result<Vec<CurveRow>> {
    if n_min == 0 || n_min > n_max || modes.is_empty() {
        return Err(Error::InvalidArgument(format!("empty curve range {n_min}..={n_max}")));
    }
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        for &mode in modes {
            let k = if mode == Mode::Structure { k_struct } else { k_rep };
            rows.push(CurveRow {
                n,
                mode,
                log2: power(mode, n, k)?.log2,
            });
        }
    }
    Ok(rows)
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("n,mode,log2_count\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.n, r.mode, r.log2));
    }
    out
}

/// `log2` recomputed from the exact integer, for cross-checks.
pub fn exact_log2(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map_or(f64::INFINITY, f64::log2);
    }
    let shift = bits - 64;
    (x >> shift).to_f64().map_or(f64::INFINITY, f64::log2) + shift as f64
}
