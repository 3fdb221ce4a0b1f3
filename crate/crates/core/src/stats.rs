//! Binomial estimates with Wilson score intervals, and exponential tail fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const DEFAULT_LEVEL: f64 = 0.95;

/// Two-sided standard normal quantile for a confidence level.
pub fn z_for_level(level: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - (1.0 - level) / 2.0)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, level: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z = z_for_level(level);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let mut lo = (center - half).max(0.0);
    let mut hi = (center + half).min(1.0);
    if successes == 0 {
        lo = 0.0;
    }
    if successes == trials {
        hi = 1.0;
    }
    (lo.min(phat), hi.max(phat))
}

/// A Monte Carlo event-probability estimate plus the descriptors of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub model: String,
    pub beta: Option<f64>,
    pub h: f64,
    pub event: String,
    pub n_or_box: String,
    pub trials: u64,
    pub successes: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub seed: u64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::param("trials", "must be >= 1"));
        }
        if successes > trials {
            return Err(Error::param("successes", "exceeds trials"));
        }
        let (ci_low, ci_high) = wilson_interval(successes, trials, DEFAULT_LEVEL);
        Ok(Estimate {
            model: String::new(),
            beta: None,
            h: 0.0,
            event: String::new(),
            n_or_box: String::new(),
            trials,
            successes,
            point: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            level: DEFAULT_LEVEL,
            seed: 0,
        })
    }

    /// Binomial standard error of the point estimate.
    pub fn std_error(&self) -> f64 {
        (self.point * (1.0 - self.point) / self.trials as f64).sqrt()
    }

    pub fn straddles(&self, level: f64) -> bool {
        self.ci_low <= level && level <= self.ci_high
    }

    pub fn csv_row(&self) -> CsvRow {
        CsvRow {
            model: self.model.clone(),
            beta: self.beta,
            h: self.h,
            event: self.event.clone(),
            n_or_box: self.n_or_box.clone(),
            trials: self.trials,
            successes: self.successes,
            point: self.point,
            ci_low: self.ci_low,
            ci_high: self.ci_high,
            seed: self.seed,
        }
    }
}

/// One CSV line of the estimate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub model: String,
    pub beta: Option<f64>,
    pub h: f64,
    pub event: String,
    pub n_or_box: String,
    pub trials: u64,
    pub successes: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "model", "beta", "h", "event", "n_or_box", "trials", "successes", "point", "ci_low", "ci_high", "seed",
];

pub fn write_csv<W: std::io::Write>(out: W, estimates: &[Estimate]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if estimates.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for e in estimates {
        w.serialize(e.csv_row())?;
    }
    w.flush()
}

/// Minimum survival count for a bin to enter the fit.
pub const MIN_BIN_COUNT: u64 = 30;

/// Empirical survival function of nonnegative integer observations with a
/// least-squares fit of `log P(X >= n) = a + slope * n`.
///
/// Bins where the survival count equals the total (the flat head) are left
/// out of the fit together with bins below [`MIN_BIN_COUNT`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub total: u64,
    pub censored: u64,
    pub support: Vec<u64>,
    /// `survival[i]` = number of observations `>= support[i]`.
    pub survival: Vec<u64>,
    pub log_slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Standard error of the slope.
    pub slope_se: Option<f64>,
    pub fit_range: Option<(u64, u64)>,
    pub residual_rms: Option<f64>,
}

impl TailFit {
    pub fn fit(observations: &[u64], censored: u64) -> TailFit {
        let total = observations.len() as u64;
        let max = observations.iter().copied().max().unwrap_or(0);
        let mut hist = vec![0u64; max as usize + 2];
        for &x in observations {
            hist[x as usize] += 1;
        }
        let mut survival = vec![0u64; max as usize + 2];
        for n in (0..=max as usize).rev() {
            survival[n] = survival[n + 1] + hist[n];
        }
        survival.pop();
        let support: Vec<u64> = (0..=max).collect();

        let pts: Vec<(f64, f64)> = support
            .iter()
            .zip(&survival)
            .filter(|(_, &s)| s >= MIN_BIN_COUNT && s < total)
            .map(|(&n, &s)| (n as f64, (s as f64 / total as f64).ln()))
            .collect();
        let mut fit = TailFit {
            total,
            censored,
            support,
            survival,
            log_slope: None,
            intercept: None,
            slope_se: None,
            fit_range: None,
            residual_rms: None,
        };
        if pts.len() >= 2 {
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let slope = sxy / sxx;
            let a = my - slope * mx;
            let rss: f64 = pts.iter().map(|p| (p.1 - a - slope * p.0).powi(2)).sum();
            fit.log_slope = Some(slope);
            fit.intercept = Some(a);
            fit.residual_rms = Some((rss / k).sqrt());
            fit.slope_se = (pts.len() > 2).then(|| (rss / (k - 2.0) / sxx).sqrt());
            fit.fit_range = Some((pts[0].0 as u64, pts[pts.len() - 1].0 as u64));
        }
        fit
    }

    /// Decay rate `-slope`.
    pub fn rate(&self) -> Option<f64> {
        self.log_slope.map(|s| -s)
    }

    /// Survival count at `n` (observations `>= n`).
    pub fn survival_at(&self, n: u64) -> u64 {
        self.survival.get(n as usize).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand_free::Lcg;

    use super::*;

    // tiny deterministic generator for synthetic data
    mod rand_free {
        pub struct Lcg(pub u64);
        impl Lcg {
            pub fn next_f64(&mut self) -> f64 {
                self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((self.0 >> 11) as f64 + 0.5) / (1u64 << 53) as f64
            }
        }
    }

    #[test]
    fn z_value() {
        assert!((z_for_level(0.95) - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn extremes() {
        let e = Estimate::from_counts(10, 10).unwrap();
        assert_eq!((e.point, e.ci_high), (1.0, 1.0));
        let e = Estimate::from_counts(0, 10).unwrap();
        assert_eq!((e.point, e.ci_low), (0.0, 0.0));
        assert!(e.ci_high > 0.0);
        assert!(Estimate::from_counts(0, 0).is_err());
    }

    #[test]
    fn wilson_reference_value() {
        // 7 of 20 at 95%: (0.1812, 0.5671)
        let (lo, hi) = wilson_interval(7, 20, 0.95);
        assert!((lo - 0.1812).abs() < 1e-4 && (hi - 0.5671).abs() < 1e-4, "{lo} {hi}");
    }

    #[test]
    fn wilson_coverage() {
        let mut rng = Lcg(99);
        for &p in &[0.05, 0.3, 0.5, 0.9] {
            let mut covered = 0;
            for _ in 0..1000 {
                let n = 200;
                let s = (0..n).filter(|_| rng.next_f64() < p).count() as u64;
                let (lo, hi) = wilson_interval(s, n, 0.95);
                if lo <= p && p <= hi {
                    covered += 1;
                }
            }
            assert!(covered >= 930, "p={p}: coverage {covered}/1000");
        }
    }

    #[test]
    fn geometric_tail_fit() {
        let mut rng = Lcg(5);
        let q: f64 = 0.6;
        let obs: Vec<u64> = (0..200_000)
            .map(|_| (rng.next_f64().ln() / q.ln()).floor() as u64)
            .collect();
        let fit = TailFit::fit(&obs, 0);
        assert!((fit.rate().unwrap() + q.ln()).abs() < 0.02, "{:?}", fit.rate());
        assert!(fit.survival.windows(2).all(|w| w[0] >= w[1]));
        let (_, hi) = fit.fit_range.unwrap();
        assert!(fit.survival_at(hi) >= MIN_BIN_COUNT);
    }

    #[test]
    fn csv_header_and_row() {
        let mut e = Estimate::from_counts(3, 4).unwrap();
        e.model = "bernoulli".into();
        e.event = "H:1x1".into();
        e.n_or_box = "1x1".into();
        let mut buf = Vec::new();
        write_csv(&mut buf, &[e]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert!(lines.next().unwrap().starts_with("bernoulli,,0.0,H:1x1,1x1,4,3,0.75,"));
    }

    proptest! {
        #[test]
        fn interval_contains_point(trials in 1u64..5000, frac in 0.0f64..=1.0) {
            let s = (trials as f64 * frac).floor() as u64;
            let e = Estimate::from_counts(s, trials).unwrap();
            prop_assert!(0.0 <= e.ci_low && e.ci_low <= e.point);
            prop_assert!(e.point <= e.ci_high && e.ci_high <= 1.0);
        }
    }
}
