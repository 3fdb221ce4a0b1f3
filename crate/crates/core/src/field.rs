//! Single-site laws `mu(h)` on `{0, ..., k}` and the counter-based random
//! field that realizes the i.i.d. variables behind every model.
//!
//! # Mixing construction
//!
//! `keyed_uniform(seed, key)` is computed as
//!
//! ```text
//! s = seed ^ 0x7065_7263_6c61_6231
//! for w in [x, y, time, replica] (as two's-complement u64):
//!     s = mix(s ^ mix(w + 0x9e37_79b9_7f4a_7c15))
//! m = mix(s)
//! u = ((m >> 11) + 0.5) / 2^53
//! ```
//!
//! where `mix` is the SplitMix64 finalizer (`z ^= z >> 30; z *= 0xbf58476d1ce4e5b9;
//! z ^= z >> 27; z *= 0x94d049bb133111eb; z ^= z >> 31`). The result lies
//! strictly inside `(0, 1)`. Everything is counter based, so re-reading a
//! key (as coupling from the past does when it extends backwards) always
//! yields the same value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Vertex;

const FIELD_TAG: u64 = 0x7065_7263_6c61_6231;
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl FromStr for Seed {
    type Err = Error;

    /// Accepts decimal or `0x`-prefixed hexadecimal.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(hex, 16),
            None => s.parse(),
        };
        parsed
            .map(Seed)
            .map_err(|_| Error::param("seed", format!("`{s}` is neither decimal nor 0x-hex")))
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of one underlying i.i.d. variable.
///
/// Spatial models use `time = 0`; the Ising update variables `Y_v(t)` live
/// at negative times. `replica` is the Monte Carlo trial index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldKey {
    pub vertex: Vertex,
    pub time: i64,
    pub replica: u64,
}

impl FieldKey {
    pub const fn new(vertex: Vertex, time: i64, replica: u64) -> Self {
        FieldKey {
            vertex,
            time,
            replica,
        }
    }

    pub const fn site(vertex: Vertex, replica: u64) -> Self {
        FieldKey::new(vertex, 0, replica)
    }
}

#[inline(always)]
fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn keyed_bits(seed: Seed, key: &FieldKey) -> u64 {
    let mut s = seed.0 ^ FIELD_TAG;
    for w in [
        key.vertex.x as u64,
        key.vertex.y as u64,
        key.time as u64,
        key.replica,
    ] {
        s = mix(s ^ mix(w.wrapping_add(GOLDEN)));
    }
    mix(s)
}

/// Deterministic uniform in the open interval `(0, 1)`.
#[inline]
pub fn keyed_uniform(seed: Seed, key: &FieldKey) -> f64 {
    // 52 bits keep (k + 0.5) exactly representable, so 1.0 is never produced
    const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
    ((keyed_bits(seed, key) >> 12) as f64 + 0.5) * SCALE
}

/// Numerically stable logistic function `1 / (1 + exp(-x))`.
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() {
        Ok(())
    } else {
        Err(Error::param("h", format!("must be finite, got {h}")))
    }
}

/// `mu(h)(1) = e^h / (e^h + e^-h)`, the Bernoulli parameter `p` at field `h`.
pub fn bernoulli_family(h: f64) -> Result<f64> {
    check_h(h)?;
    Ok(logistic(2.0 * h))
}

/// Inverse of [`bernoulli_family`].
pub fn h_for_p(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("must lie in (0, 1), got {p}")));
    }
    Ok(0.5 * (p / (1.0 - p)).ln())
}

/// The law `mu(h)` of a single underlying variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MuFamily {
    /// `k = 1`, `P(X = 1) = bernoulli_family(h)`.
    Bernoulli,
    /// `k = 5`: the heat-bath variable `Y + 1` with `Y` in `{-1, ..., 4}`.
    IsingY { beta: f64 },
}

impl MuFamily {
    pub fn ising_y(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", format!("must be finite and >= 0, got {beta}")));
        }
        Ok(MuFamily::IsingY { beta })
    }

    pub fn k(&self) -> u8 {
        match self {
            MuFamily::Bernoulli => 1,
            MuFamily::IsingY { .. } => 5,
        }
    }

    /// `mu(h)({j, ..., k})` for `0 <= j <= k` (1 at `j = 0`, 0 above `k`).
    pub fn tail(&self, h: f64, j: u8) -> f64 {
        if j == 0 {
            return 1.0;
        }
        if j > self.k() {
            return 0.0;
        }
        match *self {
            MuFamily::Bernoulli => logistic(2.0 * h),
            // P(Y >= j - 1) = q^(5 - j)(+1; beta, h)
            MuFamily::IsingY { beta } => heat_bath_plus(beta, h, 5 - j as i32),
        }
    }

    pub fn tails(&self, h: f64) -> Result<Tails> {
        check_h(h)?;
        let mut tail = [0.0; 6];
        for (j, t) in tail.iter_mut().enumerate().take(self.k() as usize + 1) {
            *t = self.tail(h, j as u8);
        }
        Ok(Tails { k: self.k(), tail })
    }
}

/// `q^(m)(+1; beta, h)`: probability of a plus spin given `m` plus neighbours.
pub(crate) fn heat_bath_plus(beta: f64, h: f64, m: i32) -> f64 {
    logistic(2.0 * beta * (h + (2 * m - 4) as f64))
}

pub fn ising_y_family(beta: f64, h: f64) -> Result<Tails> {
    MuFamily::ising_y(beta)?.tails(h)
}

/// Precomputed tail table of `mu(h)` for fast inverse-CDF sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tails {
    k: u8,
    tail: [f64; 6],
}

impl Tails {
    /// A degenerate law (used for limits and tests): all mass on `value`.
    pub fn point_mass(k: u8, value: u8) -> Self {
        assert!(k <= 5 && value <= k);
        let mut tail = [0.0; 6];
        for t in tail.iter_mut().take(value as usize + 1) {
            *t = 1.0;
        }
        Tails { k, tail }
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn tail(&self, j: u8) -> f64 {
        self.tail.get(j as usize).copied().unwrap_or(0.0)
    }

    /// `mu(h)({j})`.
    pub fn mass(&self, j: u8) -> f64 {
        self.tail(j) - self.tail(j + 1)
    }

    /// Inverse CDF: `max { j : u < tail(j) }` with `tail(0) = 1`.
    #[inline]
    pub fn quantile(&self, u: f64) -> u8 {
        let mut v = 0;
        for j in 1..=self.k {
            if u < self.tail[j as usize] {
                v = j;
            } else {
                break;
            }
        }
        v
    }
}

/// Inverse-CDF realization of `mu(h)` driven by `keyed_uniform(seed, key)`.
///
/// For a fixed `(seed, key)` the output is nondecreasing in `h`.
pub fn sample_value(seed: Seed, key: &FieldKey, family: &MuFamily, h: f64) -> Result<u8> {
    Ok(family.tails(h)?.quantile(keyed_uniform(seed, key)))
}
