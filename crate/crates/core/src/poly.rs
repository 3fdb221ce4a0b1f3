//! Exact single-variable integer polynomials in `p`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// `sum_i coeffs[i] * p^i` with exact integer coefficients (trailing zeros trimmed).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolynomialInP {
    coeffs: Vec<i128>,
}

fn binomial_row(n: usize) -> Vec<i128> {
    let mut row = vec![1i128];
    for k in 0..n {
        let next = row[k] * (n - k) as i128 / (k + 1) as i128;
        row.push(next);
    }
    row
}

impl PolynomialInP {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        PolynomialInP { coeffs }
    }

    pub fn zero() -> Self {
        PolynomialInP::default()
    }

    pub fn p() -> Self {
        PolynomialInP::new(vec![0, 1])
    }

    /// `sum_k counts[k] p^k (1 - p)^(n - k)` where `counts[k]` is the number of
    /// configurations with `k` open sites out of `n`.
    pub fn from_open_counts(counts: &[u64], n: usize) -> Self {
        assert!(counts.len() <= n + 1);
        let mut coeffs = vec![0i128; n + 1];
        for (k, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let row = binomial_row(n - k);
            for (i, &b) in row.iter().enumerate() {
                let term = c as i128 * b;
                if i % 2 == 0 {
                    coeffs[k + i] += term;
                } else {
                    coeffs[k + i] -= term;
                }
            }
        }
        PolynomialInP::new(coeffs)
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    /// Coefficients padded with zeros to length `len`.
    pub fn padded(&self, len: usize) -> Vec<i128> {
        let mut c = self.coeffs.clone();
        c.resize(len.max(c.len()), 0);
        c
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn derivative(&self) -> Self {
        PolynomialInP::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as i128)
                .collect(),
        )
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * p + c as f64)
    }

    pub fn eval_exact(&self, p: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, &c| acc * p + BigRational::from_integer(BigInt::from(c)))
    }

    /// `sup` over `[a, b]`: a grid of step `1e-3` plus every root of the
    /// derivative located by sign changes and refined by bisection.
    pub fn max_on(&self, a: f64, b: f64) -> (f64, f64) {
        let d = self.derivative();
        let steps = (((b - a) / 1e-3).ceil() as usize).max(1);
        let grid: Vec<f64> = (0..=steps).map(|i| a + (b - a) * i as f64 / steps as f64).collect();
        let mut best = (a, self.eval(a));
        let mut consider = |x: f64| {
            let v = self.eval(x);
            if v > best.1 {
                best = (x, v);
            }
        };
        for w in grid.windows(2) {
            consider(w[1]);
            let (mut lo, mut hi) = (w[0], w[1]);
            let (dlo, dhi) = (d.eval(lo), d.eval(hi));
            if dlo > 0.0 && dhi < 0.0 {
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if d.eval(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                consider(0.5 * (lo + hi));
            }
        }
        best
    }
}

impl Add for &PolynomialInP {
    type Output = PolynomialInP;

    fn add(self, rhs: &PolynomialInP) -> PolynomialInP {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let (a, b) = (self.padded(n), rhs.padded(n));
        PolynomialInP::new(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }
}

impl Sub for &PolynomialInP {
    type Output = PolynomialInP;

    fn sub(self, rhs: &PolynomialInP) -> PolynomialInP {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let (a, b) = (self.padded(n), rhs.padded(n));
        PolynomialInP::new(a.iter().zip(&b).map(|(x, y)| x - y).collect())
    }
}

impl Mul for &PolynomialInP {
    type Output = PolynomialInP;

    fn mul(self, rhs: &PolynomialInP) -> PolynomialInP {
        if self.is_zero() || rhs.is_zero() {
            return PolynomialInP::zero();
        }
        let mut out = vec![0i128; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolynomialInP::new(out)
    }
}

impl std::iter::Sum for PolynomialInP {
    fn sum<I: Iterator<Item = PolynomialInP>>(iter: I) -> Self {
        iter.fold(PolynomialInP::zero(), |acc, p| &acc + &p)
    }
}

impl fmt::Display for PolynomialInP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Exact rational value of an `f64` (every finite float is a dyadic rational).
pub fn exact_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite probability")
}

pub fn one() -> BigRational {
    BigRational::one()
}
