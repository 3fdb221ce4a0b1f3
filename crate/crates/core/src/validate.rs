//! The invariant suite: duality, oracle agreement, coupling monotonicity,
//! Gibbs conditionals and the exact polynomial checks.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{self, run_trials};
use crate::exact::{self, EventSpec};
use crate::field::{h_for_p, Seed};
use crate::grid::Rect;
use crate::models::{self, ModelSpec, SampleOptions, SpinWindow};
use crate::percolation::crossing_complement_check;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateConfig {
    pub seed: Seed,
    pub oracle_trials: u64,
    pub duality_samples: u64,
    pub monotone_windows: u64,
    pub gibbs_windows: u64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            seed: Seed(1),
            oracle_trials: 20_000,
            duality_samples: 1_000,
            monotone_windows: 200,
            gibbs_windows: 2_000,
        }
    }
}

/// Every `+` horizontal crossing / `-*` vertical crossing pair on all
/// configurations of the 3x3, 3x4 and 4x3 boxes.
pub fn duality_exhaustive() -> Check {
    let mut total = 0u64;
    let mut bad = 0u64;
    for rect in [Rect::crossing_box(2, 2), Rect::crossing_box(2, 3), Rect::crossing_box(3, 2)] {
        let n = rect.len();
        for bits in 0..1u32 << n {
            let mut i = 0;
            let w = SpinWindow::from_fn(rect, |_| {
                let b = bits >> i & 1 == 1;
                i += 1;
                b
            });
            total += 1;
            bad += !crossing_complement_check(&w) as u64;
        }
    }
    Check::new("duality exhaustive", bad == 0, format!("{bad} failures over {total} windows"))
}

/// The same on sampled `side x side` Bernoulli windows at `p` in {0.3, 0.5, 0.6, 0.7}.
pub fn duality_sampled(samples: u64, side: u32, seed: Seed) -> Result<Check> {
    let rect = Rect::crossing_box(side - 1, side - 1);
    let hs: Vec<f64> = [0.3, 0.5, 0.6, 0.7].iter().map(|&p| h_for_p(p)).collect::<Result<_>>()?;
    let ok = run_trials(samples, |r| {
        let w = models::sample_window(&ModelSpec::bernoulli(), hs[r as usize % hs.len()], &rect, seed, r)?;
        Ok(crossing_complement_check(&w))
    })?;
    let bad = ok.iter().filter(|&&b| !b).count();
    Ok(Check::new(
        format!("duality sampled {side}x{side}"),
        bad == 0,
        format!("{bad} failures over {samples} windows"),
    ))
}

/// Monte Carlo estimates of the built-in enumerable events against their
/// exact polynomials at `p` in {0.3, 0.5, 0.7}, within 3 binomial sigma.
pub fn oracle_agreement(trials: u64, seed: Seed) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for event in exact::builtin_events() {
        let poly = exact::exact_probability(&EventSpec::new(&event)?);
        for p in [0.3, 0.5, 0.7] {
            let est = estimators::estimate_event(&ModelSpec::bernoulli(), h_for_p(p)?, &event, trials, seed)?;
            let exact = poly.eval(p);
            let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
            let dev = (est.point - exact).abs();
            out.push(Check::new(
                format!("oracle {event} p={p}"),
                dev <= 3.0 * sigma,
                format!("mc {:.5} exact {:.5} ({:.2} sigma)", est.point, exact, dev / sigma.max(1e-300)),
            ));
        }
    }
    Ok(out)
}

/// Shared-seed windows on an 11-point `h` grid are coordinatewise ordered,
/// for all three models.
pub fn coupling_monotonicity(windows: u64, seed: Seed) -> Result<Vec<Check>> {
    let grid: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
    let rect = Rect::crossing_box(7, 7);
    let specs = [
        ModelSpec::bernoulli(),
        ModelSpec::majority_box(models::DEFAULT_MAJORITY_THRESHOLD)?,
        ModelSpec::ising(0.3)?,
    ];
    let mut out = Vec::new();
    for spec in specs {
        let bad = run_trials(windows, |r| {
            let ws: Vec<SpinWindow> = grid
                .iter()
                .map(|&h| models::sample_window_with(&spec, h, &rect, seed, r, &SampleOptions::spins_only()))
                .collect::<Result<_>>()?;
            Ok(ws.windows(2).any(|p| !p[0].dominated_by(&p[1])))
        })?
        .iter()
        .filter(|&&b| b)
        .count();
        out.push(Check::new(
            format!("coupling {}", spec.name()),
            bad == 0,
            format!("{bad} non-dominated of {windows} replicas x 11 h"),
        ));
    }
    Ok(out)
}

/// Empirical `P(sigma_v = +1 | m)` against the heat-bath law, within 3 sigma.
pub fn gibbs_check(beta: f64, hs: &[f64], windows: u64, seed: Seed) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &h in hs {
        let rows = estimators::gibbs_conditional(beta, h, 5, windows, seed)?;
        let worst = rows.iter().map(|r| r.z).fold(0.0, f64::max);
        let detail = rows
            .iter()
            .map(|r| format!("m={}: {}/{} vs {:.4}", r.m, r.plus, r.total, r.expected))
            .collect::<Vec<_>>()
            .join("; ");
        out.push(Check::new(
            format!("gibbs beta={beta} h={h} (max {worst:.2} sigma)"),
            rows.iter().all(|r| r.z <= 3.0),
            detail,
        ));
    }
    Ok(out)
}

pub fn russo_all() -> Result<Check> {
    let mut failed = Vec::new();
    let events = exact::builtin_events();
    for e in &events {
        if !exact::russo_identity_check(&EventSpec::new(e)?).holds {
            failed.push(e.to_string());
        }
    }
    Ok(Check::new(
        "russo identity",
        failed.is_empty(),
        format!("{} events, failures: {failed:?}", events.len()),
    ))
}

/// All event pairs sharing a box, plus the one-sided connection quadruple,
/// at `p` in {0.3, 0.5, 0.7}.
pub fn fkg_all() -> Result<Check> {
    let specs: Vec<EventSpec> = exact::builtin_events().iter().map(EventSpec::new).collect::<Result<_>>()?;
    let quad: Vec<EventSpec> = exact::one_sided_connections().iter().map(EventSpec::new).collect::<Result<_>>()?;
    let mut checked = 0;
    let mut failed = Vec::new();
    for p in [0.3, 0.5, 0.7] {
        for (i, a) in specs.iter().enumerate() {
            for b in &specs[i..] {
                if a.rect() != b.rect() {
                    continue;
                }
                let r = exact::fkg_and_sqrt_trick_check(&[a, b], p)?;
                checked += r.pairs.len();
                if !r.all_hold {
                    failed.push(format!("{} & {} p={p}", a.name(), b.name()));
                }
            }
        }
        let refs: Vec<&EventSpec> = quad.iter().collect();
        let r = exact::fkg_and_sqrt_trick_check(&refs, p)?;
        checked += r.pairs.len() + 1;
        if !r.all_hold {
            failed.push(format!("quadruple p={p}"));
        }
    }
    Ok(Check::new(
        "fkg and square-root trick",
        failed.is_empty(),
        format!("{checked} inequalities, failures: {failed:?}"),
    ))
}

pub fn run_suite(cfg: &ValidateConfig) -> Result<Vec<Check>> {
    let mut out = vec![duality_exhaustive(), duality_sampled(cfg.duality_samples, 20, cfg.seed)?];
    out.extend(oracle_agreement(cfg.oracle_trials, cfg.seed)?);
    out.extend(coupling_monotonicity(cfg.monotone_windows, cfg.seed)?);
    out.extend(gibbs_check(0.3, &[-0.5, 0.0, 0.5], cfg.gibbs_windows, cfg.seed)?);
    out.push(russo_all()?);
    out.push(fkg_all()?);
    Ok(out)
}

/// Fixed-width pass/fail table.
pub fn format_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!("{mark}  {:<width$}  {}\n", c.name, c.detail));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    s.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    s
}
