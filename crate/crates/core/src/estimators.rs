//! Monte Carlo harness.
//!
//! Trial `r` always samples replica `r` of the field, so every output is a
//! deterministic function of the inputs and the seed, whatever the number of
//! rayon workers. Runs at different `h` with one seed are coupled: windows
//! are coordinatewise ordered in `h`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Event;
use crate::field::{FieldKey, Seed};
use crate::grid::{Adjacency, Rect, Vertex};
use crate::models::{self, ModelKind, ModelSpec, SampleOptions, SpinWindow};
use crate::percolation;
use crate::stats::{z_for_level, Estimate, TailFit, DEFAULT_LEVEL};

/// Runs `f` on replicas `0..trials` in parallel; the first failing trial (by
/// index) is reported.
pub fn run_trials<T, F>(trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    run_range(0, trials, f)
}

fn run_range<T, F>(start: u64, end: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let out: Vec<Result<T>> = (start..end).into_par_iter().map(&f).collect();
    out.into_iter()
        .zip(start..)
        .map(|(r, i)| {
            r.map_err(|e| Error::Trial {
                trial: i,
                source: Box::new(e),
            })
        })
        .collect()
}

fn sample(spec: &ModelSpec, h: f64, rect: &Rect, seed: Seed, replica: u64) -> Result<SpinWindow> {
    models::sample_window_with(spec, h, rect, seed, replica, &SampleOptions::spins_only())
}

fn describe(mut e: Estimate, spec: &ModelSpec, h: f64, event: &Event, seed: Seed) -> Estimate {
    e.model = spec.name().to_string();
    e.beta = spec.beta;
    e.h = h;
    e.event = event.to_string();
    e.n_or_box = event.size_label();
    e.seed = seed.0;
    e
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::param("trials", "must be >= 1"));
    }
    Ok(())
}

/// Per-trial indicators of `event` on replicas `0..trials`.
pub fn event_indicators(spec: &ModelSpec, h: f64, event: &Event, trials: u64, seed: Seed) -> Result<Vec<bool>> {
    spec.validate()?;
    run_trials(trials, |r| event.occurs_exact(&sample(spec, h, &event.rect, seed, r)?))
}

pub fn estimate_event(spec: &ModelSpec, h: f64, event: &Event, trials: u64, seed: Seed) -> Result<Estimate> {
    check_trials(trials)?;
    let hits = event_indicators(spec, h, event, trials, seed)?.iter().filter(|&&b| b).count() as u64;
    Ok(describe(Estimate::from_counts(hits, trials)?, spec, h, event, seed))
}

fn check_grid(h_grid: &[f64]) -> Result<()> {
    if h_grid.is_empty() {
        return Err(Error::param("h_grid", "empty"));
    }
    if h_grid.iter().any(|h| !h.is_finite()) || h_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("h_grid", "must be finite and sorted"));
    }
    Ok(())
}

pub fn sweep(spec: &ModelSpec, event: &Event, h_grid: &[f64], trials: u64, seed: Seed) -> Result<Vec<Estimate>> {
    check_grid(h_grid)?;
    h_grid
        .iter()
        .map(|&h| estimate_event(spec, h, event, trials, seed))
        .collect()
}

/// Indices `j` where the estimate at `h_grid[j]` lies more than `3 sigma`
/// below an estimate at a smaller `h`.
pub fn monotonicity_violations(estimates: &[Estimate]) -> Vec<usize> {
    let mut out = Vec::new();
    for j in 1..estimates.len() {
        let b = &estimates[j];
        let bad = estimates[..j].iter().any(|a| {
            let sd = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
            a.point - b.point > 3.0 * sd.max(1e-12)
        });
        if bad {
            out.push(j);
        }
    }
    out
}

/// Linearly interpolated first `h` at which the point estimates reach `level`.
pub fn level_crossing(estimates: &[Estimate], level: f64) -> Option<f64> {
    if estimates.first()?.point >= level {
        return Some(estimates[0].h);
    }
    estimates.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        (a.point < level && b.point >= level).then(|| a.h + (b.h - a.h) * (level - a.point) / (b.point - a.point))
    })
}

/// Width in `h` of the band where the sweep climbs from `lo` to `hi`.
pub fn band_width(estimates: &[Estimate], lo: f64, hi: f64) -> Option<f64> {
    Some(level_crossing(estimates, hi)? - level_crossing(estimates, lo)?)
}

/// Per-trial coupled monotonicity: the indicator of an increasing event on
/// replica `r` never drops as `h` grows. Returns the number of violations.
pub fn coupled_monotonicity_violations(
    spec: &ModelSpec,
    event: &Event,
    h_grid: &[f64],
    trials: u64,
    seed: Seed,
) -> Result<u64> {
    check_grid(h_grid)?;
    let rows: Vec<Vec<bool>> = h_grid
        .iter()
        .map(|&h| event_indicators(spec, h, event, trials, seed))
        .collect::<Result<_>>()?;
    let mut bad = 0;
    for r in 0..trials as usize {
        let up = rows.windows(2).any(|w| w[0][r] && !w[1][r]);
        let down = rows.windows(2).any(|w| !w[0][r] && w[1][r]);
        if (event.is_increasing() && up) || (!event.is_increasing() && down) {
            bad += 1;
        }
    }
    Ok(bad)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub h: f64,
    pub trials: u64,
    pub successes: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcResult {
    pub model: String,
    pub beta: Option<f64>,
    pub event: String,
    pub seed: u64,
    pub h_hat: f64,
    pub bracket: (f64, f64),
    /// `bernoulli_family(h_hat)` for the Bernoulli model.
    pub p_hat: Option<f64>,
    pub probes: Vec<Probe>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcOptions {
    pub trials_per_probe: u64,
    pub tol: f64,
    pub bracket: (f64, f64),
    /// Escalation cap as a multiple of `trials_per_probe`.
    pub max_escalation: u64,
}

impl Default for HcOptions {
    fn default() -> Self {
        HcOptions {
            trials_per_probe: 1000,
            tol: 0.002,
            bracket: (-3.0, 3.0),
            max_escalation: 16,
        }
    }
}

/// Bisection for the level `P(event) = 1/2`. Probes whose interval straddles
/// 1/2 are repeated with 4x the trials, up to the escalation cap. All probes
/// share the seed, so the probe sequence is coupled.
pub fn estimate_hc(spec: &ModelSpec, event: &Event, opts: &HcOptions, seed: Seed) -> Result<HcResult> {
    check_trials(opts.trials_per_probe)?;
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be > 0"));
    }
    let (mut lo, mut hi) = opts.bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::param("bracket", "need finite lo < hi"));
    }
    let cap = opts.trials_per_probe * opts.max_escalation.max(1);
    let mut probes: Vec<Probe> = Vec::new();
    let probe = |h: f64, probes: &mut Vec<Probe>| -> Result<Probe> {
        let count = |a: u64, b: u64| -> Result<u64> {
            let hits = run_range(a, b, |r| event.occurs_exact(&sample(spec, h, &event.rect, seed, r)?))?;
            Ok(hits.iter().filter(|&&x| x).count() as u64)
        };
        let mut t = opts.trials_per_probe;
        let mut hits = count(0, t)?;
        let mut est = Estimate::from_counts(hits, t)?;
        while est.straddles(0.5) && t < cap {
            let next = (t * 4).min(cap);
            hits += count(t, next)?;
            t = next;
            est = Estimate::from_counts(hits, t)?;
        }
        let p = Probe {
            h,
            trials: t,
            successes: est.successes,
            point: est.point,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
        };
        probes.push(p.clone());
        Ok(p)
    };
    let at_lo = probe(lo, &mut probes)?;
    let at_hi = probe(hi, &mut probes)?;
    let increasing = at_hi.point >= at_lo.point;
    let (below, above) = if increasing { (&at_lo, &at_hi) } else { (&at_hi, &at_lo) };
    if below.point > 0.5 || above.point < 0.5 {
        return Err(Error::param(
            "bracket",
            format!(
                "P(event) does not straddle 1/2 on [{lo}, {hi}] ({} .. {})",
                at_lo.point, at_hi.point
            ),
        ));
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        let p = probe(mid, &mut probes)?;
        check_monotone(&probes, increasing)?;
        if (p.point >= 0.5) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let h_hat = 0.5 * (lo + hi);
    Ok(HcResult {
        model: spec.name().to_string(),
        beta: spec.beta,
        event: event.to_string(),
        seed: seed.0,
        h_hat,
        bracket: (lo, hi),
        p_hat: if spec.kind == ModelKind::Bernoulli { crate::field::bernoulli_family(h_hat).ok() } else { None },
        probes,
    })
}

fn check_monotone(probes: &[Probe], increasing: bool) -> Result<()> {
    for a in probes {
        for b in probes {
            if a.h < b.h {
                let broken = if increasing {
                    a.ci_low > b.ci_high
                } else {
                    a.ci_high < b.ci_low
                };
                if broken {
                    return Err(Error::NonMonotone { h_low: a.h, h_high: b.h });
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterTailReport {
    pub model: String,
    pub beta: Option<f64>,
    pub h: f64,
    pub observation_box: Rect,
    pub trials: u64,
    pub seed: u64,
    /// `P(sigma_0 = +1)`.
    pub site_plus: Estimate,
    /// Origin `+` cluster sizes (ordinary adjacency).
    pub plus: TailFit,
    /// Origin `-*` cluster sizes (star adjacency).
    pub minus_star: TailFit,
    pub plus_censored_fraction: f64,
    pub minus_star_censored_fraction: f64,
}

/// Origin cluster sizes inside `B(half)`; clusters reaching the border are
/// censored and excluded from the fits.
pub fn cluster_tail(spec: &ModelSpec, h: f64, half: u32, trials: u64, seed: Seed) -> Result<ClusterTailReport> {
    check_trials(trials)?;
    spec.validate()?;
    let rect = Rect::centered(half);
    let obs = run_trials(trials, |r| {
        let w = sample(spec, h, &rect, seed, r)?;
        Ok((
            w.spin(Vertex::ORIGIN) == Some(1),
            percolation::cluster_of(&w, Vertex::ORIGIN, 1, Adjacency::Ordinary),
            percolation::cluster_of(&w, Vertex::ORIGIN, -1, Adjacency::Star),
        ))
    })?;
    let split = |pick: &dyn Fn(&(bool, (usize, bool), (usize, bool))) -> (usize, bool)| {
        let mut sizes = Vec::new();
        let mut censored = 0u64;
        for o in &obs {
            let (size, border) = pick(o);
            if border {
                censored += 1;
            } else {
                sizes.push(size as u64);
            }
        }
        (TailFit::fit(&sizes, censored), censored as f64 / trials as f64)
    };
    let (plus, pc) = split(&|o| o.1);
    let (minus_star, mc) = split(&|o| o.2);
    let plus_sites = obs.iter().filter(|o| o.0).count() as u64;
    let site_event = Event::site(Vertex::ORIGIN, 1);
    Ok(ClusterTailReport {
        model: spec.name().to_string(),
        beta: spec.beta,
        h,
        observation_box: rect,
        trials,
        seed: seed.0,
        site_plus: describe(Estimate::from_counts(plus_sites, trials)?, spec, h, &site_event, seed),
        plus,
        minus_star,
        plus_censored_fraction: pc,
        minus_star_censored_fraction: mc,
    })
}

/// Whether the field key can influence any spin of `rect`.
pub fn key_influences(spec: &ModelSpec, key: &FieldKey, rect: &Rect) -> bool {
    match spec.kind {
        ModelKind::Bernoulli => key.time == 0 && rect.contains(key.vertex),
        ModelKind::MajorityBox => key.time == 0,
        ModelKind::Ising => {
            key.time < 0
                && rect.l1_distance(key.vertex) < key.time.unsigned_abs()
                && key.vertex.parity() as i64 == key.time.rem_euclid(2)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotalRow {
    /// Key with the replica field left at 0; trial `r` uses replica `r`.
    pub key: FieldKey,
    pub estimate: Estimate,
    pub vacuous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotalReport {
    pub rows: Vec<PivotalRow>,
    /// Largest point estimate over the `(j, h)` grid: a lower proxy for `eps_n`.
    pub sup: f64,
    pub sup_index: Option<usize>,
}

/// Probability that `event` holds but fails once key `j` is forced to its
/// minimal value, for every `(j, h)` pair.
pub fn pivotal_epsilon(
    spec: &ModelSpec,
    h_grid: &[f64],
    event: &Event,
    keys: &[FieldKey],
    trials: u64,
    seed: Seed,
) -> Result<PivotalReport> {
    check_trials(trials)?;
    check_grid(h_grid)?;
    if keys.is_empty() {
        return Err(Error::param("keys", "need at least one field key"));
    }
    spec.validate()?;
    let mut rows = Vec::new();
    for key in keys {
        let vacuous = !key_influences(spec, key, &event.rect);
        for &h in h_grid {
            let hits = if vacuous {
                0
            } else {
                run_trials(trials, |r| {
                    let w = sample(spec, h, &event.rect, seed, r)?;
                    if !event.occurs_exact(&w)? {
                        return Ok(false);
                    }
                    let opts = SampleOptions {
                        forced_minimal: Some(FieldKey::new(key.vertex, key.time, r)),
                        ..SampleOptions::spins_only()
                    };
                    let forced = models::sample_window_with(spec, h, &event.rect, seed, r, &opts)?;
                    Ok(!event.occurs_exact(&forced)?)
                })?
                .iter()
                .filter(|&&b| b)
                .count() as u64
            };
            let mut est = describe(Estimate::from_counts(hits, trials)?, spec, h, event, seed);
            est.event = format!("{event}|pivotal({},{},{})", key.vertex.x, key.vertex.y, key.time);
            rows.push(PivotalRow {
                key: FieldKey::new(key.vertex, key.time, 0),
                estimate: est,
                vacuous,
            });
        }
    }
    let sup_index = (0..rows.len()).max_by(|&a, &b| {
        rows[a]
            .estimate
            .point
            .total_cmp(&rows[b].estimate.point)
            .then(b.cmp(&a))
    });
    Ok(PivotalReport {
        sup: sup_index.map_or(0.0, |i| rows[i].estimate.point),
        sup_index,
        rows,
    })
}

/// Centre vertex of the box of `H(3n, n)`.
pub fn box_center(rect: &Rect) -> Vertex {
    Vertex::new((rect.x0() + rect.x1()).div_euclid(2), (rect.y0() + rect.y1()).div_euclid(2))
}

/// Default pivotal keys: the centre site for the static models, and the
/// centre's first few space-time keys for Ising.
pub fn default_pivotal_keys(spec: &ModelSpec, rect: &Rect) -> Vec<FieldKey> {
    let c = box_center(rect);
    match spec.kind {
        ModelKind::Ising => {
            let t0 = if c.parity() == 1 { -1 } else { -2 };
            vec![FieldKey::new(c, t0, 0), FieldKey::new(c.offset(1, 0), t0 + 1, 0)]
        }
        _ => vec![FieldKey::site(c, 0)],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceReport {
    pub beta: f64,
    pub h: f64,
    pub trials: u64,
    pub seed: u64,
    pub cap_hits: u64,
    pub fit: TailFit,
}

/// Coalescence depth of the origin in single-vertex windows.
pub fn coalescence_tail(beta: f64, h: f64, trials: u64, seed: Seed) -> Result<CoalescenceReport> {
    check_trials(trials)?;
    let spec = ModelSpec::ising(beta)?;
    let rect = Rect::single(Vertex::ORIGIN);
    let outcomes: Vec<Option<u32>> = run_trials(trials, |r| {
        match models::sample_window_with(&spec, h, &rect, seed, r, &SampleOptions::default()) {
            Ok(w) => Ok(Some(w.meta()[0])),
            Err(Error::NoCoalescence { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let depths: Vec<u64> = outcomes.iter().flatten().map(|&d| d as u64).collect();
    let cap_hits = outcomes.iter().filter(|o| o.is_none()).count() as u64;
    Ok(CoalescenceReport {
        beta,
        h,
        trials,
        seed: seed.0,
        cap_hits,
        fit: TailFit::fit(&depths, cap_hits),
    })
}

/// Whether two fitted rates agree within `z` combined standard errors.
pub fn rates_agree(a: &TailFit, b: &TailFit, z: f64) -> Option<bool> {
    let (ra, rb) = (a.rate()?, b.rate()?);
    let se = (a.slope_se?.powi(2) + b.slope_se?.powi(2)).sqrt();
    Some((ra - rb).abs() <= z * se)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C0Report {
    pub model: String,
    pub h: f64,
    pub trials: u64,
    pub declared_c0: f64,
    /// `max_m P(v not determined by its first m keys) * m^(2 + gamma)`.
    pub measured_c0: f64,
}

/// Empirical determinedness constant at the origin.
pub fn measured_c0(spec: &ModelSpec, h: f64, trials: u64, seed: Seed) -> Result<C0Report> {
    check_trials(trials)?;
    spec.validate()?;
    let rect = Rect::single(Vertex::ORIGIN);
    let metas = run_trials(trials, |r| {
        Ok(models::sample_window_with(spec, h, &rect, seed, r, &SampleOptions::default())?.meta()[0])
    })?;
    let max = metas.iter().copied().max().unwrap_or(1);
    let mut c0: f64 = 0.0;
    for d in 1..max {
        let tail = metas.iter().filter(|&&m| m > d).count() as f64 / trials as f64;
        let keys = match spec.kind {
            ModelKind::Bernoulli => 1.0,
            ModelKind::MajorityBox => 4.0 * (d as f64).powi(2),
            ModelKind::Ising => models::ising_prefix_len(d) as f64,
        };
        c0 = c0.max(tail * keys.powf(2.0 + spec.gamma));
    }
    Ok(C0Report {
        model: spec.name().to_string(),
        h,
        trials,
        declared_c0: spec.c0,
        measured_c0: c0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub model: String,
    pub beta: Option<f64>,
    pub h: f64,
    pub box_u: Rect,
    pub box_v: Rect,
    pub separation: u64,
    pub trials: u64,
    pub seed: u64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    /// `P(A and B) - P(A) P(B)`.
    pub signed_gap: f64,
    pub gap: f64,
    /// Delta-method half-width at 95%.
    pub ci_half: f64,
    pub bound_declared: f64,
    pub bound_measured: Option<f64>,
    pub bound_violated: bool,
}

/// `2 (|U| + |V|) C0 / floor(alpha k)^(2 + gamma)`.
pub fn mixing_bound(spec: &ModelSpec, u: &Rect, v: &Rect, k: u64, c0: f64) -> f64 {
    let ak = (spec.alpha * k as f64).floor();
    if ak < 1.0 {
        return f64::INFINITY;
    }
    2.0 * (u.len() + v.len()) as f64 * c0 / ak.powf(2.0 + spec.gamma)
}

#[allow(clippy::too_many_arguments)]
pub fn mixing_gap(
    spec: &ModelSpec,
    h: f64,
    ea: &Event,
    eb: &Event,
    trials: u64,
    seed: Seed,
    measured_c0: Option<f64>,
) -> Result<MixingReport> {
    check_trials(trials)?;
    spec.validate()?;
    let (u, v) = (ea.rect, eb.rect);
    if u.intersects(&v) {
        return Err(Error::Geometry(format!("boxes {u} and {v} overlap")));
    }
    let hull = u.hull(&v);
    let pairs = run_trials(trials, |r| {
        let w = sample(spec, h, &hull, seed, r)?;
        Ok((ea.occurs(&w)?, eb.occurs(&w)?))
    })?;
    let n = trials as f64;
    let pa = pairs.iter().filter(|p| p.0).count() as f64 / n;
    let pb = pairs.iter().filter(|p| p.1).count() as f64 / n;
    let pab = pairs.iter().filter(|p| p.0 && p.1).count() as f64 / n;
    let g = pab - pa * pb;
    // influence function of g: ab - pb a - pa b
    let psi: Vec<f64> = pairs
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (a as u8 as f64, b as u8 as f64);
            a * b - pb * a - pa * b
        })
        .collect();
    let mean = psi.iter().sum::<f64>() / n;
    let var = psi.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let ci_half = z_for_level(DEFAULT_LEVEL) * (var / n).sqrt();
    let k = u.distance_to(&v);
    let bound_declared = mixing_bound(spec, &u, &v, k, spec.c0);
    let bound_measured = measured_c0.map(|c| mixing_bound(spec, &u, &v, k, c));
    let excess = g.abs() - ci_half;
    Ok(MixingReport {
        model: spec.name().to_string(),
        beta: spec.beta,
        h,
        box_u: u,
        box_v: v,
        separation: k,
        trials,
        seed: seed.0,
        p_a: pa,
        p_b: pb,
        p_ab: pab,
        signed_gap: g,
        gap: g.abs(),
        ci_half,
        bound_declared,
        bound_measured,
        bound_violated: excess > bound_declared || bound_measured.is_some_and(|b| excess > b),
    })
}

/// Single-spin events at the centres of two `side x side` boxes at
/// separation `k` (distance between the boxes), side by side horizontally.
pub fn separated_site_events(side: u32, k: u32) -> (Event, Event) {
    let s = side as i64 - 1;
    let u = Rect::new(0, s, 0, s).expect("valid box");
    let v = u.translate(s + k as i64, 0);
    let site = |r: &Rect| {
        let c = box_center(r);
        Event {
            rect: *r,
            kind: crate::event::EventKind::Site { vertex: c, spin: 1 },
        }
    };
    (site(&u), site(&v))
}

pub fn mixing_sweep(
    spec: &ModelSpec,
    h: f64,
    side: u32,
    separations: &[u32],
    trials: u64,
    seed: Seed,
    measured_c0: Option<f64>,
) -> Result<Vec<MixingReport>> {
    separations
        .iter()
        .map(|&k| {
            let (a, b) = separated_site_events(side, k);
            mixing_gap(spec, h, &a, &b, trials, seed, measured_c0)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Undecided,
}

impl Verdict {
    /// `P < eps` judged from the interval.
    pub fn below(est: &Estimate, eps: f64) -> Verdict {
        if est.ci_high < eps {
            Verdict::Holds
        } else if est.ci_low >= eps {
            Verdict::Fails
        } else {
            Verdict::Undecided
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeReport {
    pub model: String,
    pub beta: Option<f64>,
    pub h: f64,
    pub n: u32,
    pub eps_hat: f64,
    pub vertical_plus: Estimate,
    pub vertical_minus_star: Estimate,
    /// `P(V(3N, N)) < eps`: exponential tail of `+` clusters.
    pub plus_verdict: Verdict,
    /// `P(V-*(3N, N)) < eps`: exponential tail of `-*` clusters.
    pub minus_star_verdict: Verdict,
}

pub fn finite_size_report(
    spec: &ModelSpec,
    h: f64,
    n: u32,
    eps_hat: f64,
    trials: u64,
    seed: Seed,
) -> Result<FiniteSizeReport> {
    if !(eps_hat > 0.0 && eps_hat < 1.0) {
        return Err(Error::param("eps_hat", "must lie in (0, 1)"));
    }
    let v = estimate_event(spec, h, &Event::vertical(3 * n, n), trials, seed)?;
    let vs = estimate_event(spec, h, &Event::vertical_minus_star(3 * n, n), trials, seed)?;
    Ok(FiniteSizeReport {
        model: spec.name().to_string(),
        beta: spec.beta,
        h,
        n,
        eps_hat,
        plus_verdict: Verdict::below(&v, eps_hat),
        minus_star_verdict: Verdict::below(&vs, eps_hat),
        vertical_plus: v,
        vertical_minus_star: vs,
    })
}

/// Empirical `P(sigma_v = +1 | m plus neighbours)` over the even interior
/// vertices of sampled windows. Given the odd sublattice these spins are
/// independent, so each count is exactly binomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRow {
    pub m: u8,
    pub total: u64,
    pub plus: u64,
    pub expected: f64,
    /// `|empirical - expected| / binomial sigma`.
    pub z: f64,
}

pub fn gibbs_conditional(beta: f64, h: f64, side: u32, windows: u64, seed: Seed) -> Result<Vec<ConditionalRow>> {
    check_trials(windows)?;
    let spec = ModelSpec::ising(beta)?;
    if side < 3 {
        return Err(Error::param("side", "need at least 3"));
    }
    let rect = Rect::new(0, side as i64 - 1, 0, side as i64 - 1)?;
    let counts = run_trials(windows, |r| {
        let w = sample(&spec, h, &rect, seed, r)?;
        let mut c = [[0u64; 2]; 5];
        for v in rect.vertices() {
            if v.parity() != 0 || rect.on_border(v) {
                continue;
            }
            let m = v
                .neighbors(Adjacency::Ordinary)
                .filter(|&u| w.spin(u) == Some(1))
                .count();
            c[m][0] += 1;
            c[m][1] += (w.spin(v) == Some(1)) as u64;
        }
        Ok(c)
    })?;
    let mut rows = Vec::new();
    for m in 0..5u8 {
        let total: u64 = counts.iter().map(|c| c[m as usize][0]).sum();
        let plus: u64 = counts.iter().map(|c| c[m as usize][1]).sum();
        let expected = models::q_conditional(beta, h, m, 1)?;
        let sd = (expected * (1.0 - expected) / total.max(1) as f64).sqrt();
        let emp = if total == 0 { expected } else { plus as f64 / total as f64 };
        rows.push(ConditionalRow {
            m,
            total,
            plus,
            expected,
            z: if sd > 0.0 { (emp - expected).abs() / sd } else { 0.0 },
        });
    }
    Ok(rows)
}
