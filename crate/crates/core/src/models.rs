//! The three finitary models: Bernoulli site percolation, the majority-in-box
//! model, and the Ising model sampled by monotone coupling from the past.
//!
//! Every model maps the counter-based field of [`crate::field`] to spins
//! through a coordinatewise nondecreasing function, so windows sampled with
//! the same `(seed, replica)` at `h1 < h2` are ordered coordinatewise.
//!
//! Ising dynamics: even vertices are updated at even times and odd vertices
//! at odd times. The update at time `t` reads `Y_v(t)` in `{-1, ..., 4}` and
//! sets `sigma_v(t + 1) = +1` iff the number of minus neighbours is at most
//! `Y_v(t)`. With `P(Y >= m) = q^(4 - m)(+1)` this is the heat-bath update.
//! The variable `Y_v(t)` is read from field key `(v, t, replica)` with `t < 0`
//! and is stored shifted by one (`0..=5`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, keyed_uniform, FieldKey, MuFamily, Seed, Tails};
use crate::grid::{Rect, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Bernoulli,
    MajorityBox,
    Ising,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bernoulli => "bernoulli",
            ModelKind::MajorityBox => "majority_box",
            ModelKind::Ising => "ising",
        }
    }
}

/// Model choice plus fixed parameters.
///
/// `alpha`, `gamma` and `c0` are the declared locality and determinedness
/// constants; they are only used to evaluate reported bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    pub majority_threshold: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub c0: f64,
}

pub const DEFAULT_MAJORITY_THRESHOLD: u32 = 5;

impl ModelSpec {
    pub fn bernoulli() -> Self {
        ModelSpec {
            kind: ModelKind::Bernoulli,
            beta: None,
            majority_threshold: DEFAULT_MAJORITY_THRESHOLD,
            alpha: 1.0,
            gamma: 1.0,
            c0: 1.0,
        }
    }

    pub fn majority_box(threshold: u32) -> Result<Self> {
        let spec = ModelSpec {
            kind: ModelKind::MajorityBox,
            beta: None,
            majority_threshold: threshold,
            alpha: 0.25,
            gamma: 1.0,
            c0: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ising(beta: f64) -> Result<Self> {
        let spec = ModelSpec {
            kind: ModelKind::Ising,
            beta: Some(beta),
            majority_threshold: DEFAULT_MAJORITY_THRESHOLD,
            alpha: 0.5,
            gamma: 1.0,
            c0: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ModelKind::Ising => match self.beta {
                None => return Err(Error::param("beta", "required for the ising model")),
                Some(b) if !(b >= 0.0 && b.is_finite()) => {
                    return Err(Error::param("beta", format!("must be finite and >= 0, got {b}")))
                }
                _ => {}
            },
            ModelKind::MajorityBox if self.majority_threshold == 0 => {
                return Err(Error::param("majority_threshold", "must be >= 1"));
            }
            _ => {}
        }
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma), ("c0", self.c0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// The law of one underlying variable.
    pub fn family(&self) -> MuFamily {
        match self.kind {
            ModelKind::Ising => MuFamily::IsingY {
                beta: self.beta.unwrap_or(0.0),
            },
            _ => MuFamily::Bernoulli,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// First coupling-from-the-past depth.
    pub initial_depth: u32,
    /// Depth at which coupling from the past gives up.
    pub max_depth: u32,
    /// Compute the exact coalescence depth of every vertex. When false, the
    /// Ising `meta` holds the certified (power-of-two) depth of the whole window.
    pub exact_depths: bool,
    /// Largest block half-size scanned by the majority model.
    pub majority_cap: u32,
    /// Field key forced to its minimal value 0 (pivotality experiments).
    pub forced_minimal: Option<FieldKey>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            initial_depth: 2,
            max_depth: 1 << 14,
            exact_depths: true,
            majority_cap: 1 << 12,
            forced_minimal: None,
        }
    }
}

impl SampleOptions {
    /// Options for estimators that only read spins.
    pub fn spins_only() -> Self {
        SampleOptions {
            exact_depths: false,
            ..SampleOptions::default()
        }
    }
}

/// A finite box of `+1/-1` spins with per-vertex determinedness depths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinWindow {
    rect: Rect,
    spins: Vec<i8>,
    meta: Vec<u32>,
}

impl SpinWindow {
    pub fn new(rect: Rect, spins: Vec<i8>, meta: Vec<u32>) -> Result<Self> {
        if spins.len() != rect.len() || meta.len() != rect.len() {
            return Err(Error::Geometry(format!(
                "window {rect} needs {} entries, got {} spins / {} meta",
                rect.len(),
                spins.len(),
                meta.len()
            )));
        }
        if let Some(s) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::param("spins", format!("spin values must be +-1, got {s}")));
        }
        if meta.contains(&0) {
            return Err(Error::param("meta", "depths must be >= 1"));
        }
        Ok(SpinWindow { rect, spins, meta })
    }

    /// Spins with `meta = 1`.
    pub fn from_spins(rect: Rect, spins: Vec<i8>) -> Result<Self> {
        let meta = vec![1; rect.len()];
        SpinWindow::new(rect, spins, meta)
    }

    pub fn uniform(rect: Rect, spin: i8) -> Self {
        assert!(spin == 1 || spin == -1);
        SpinWindow {
            rect,
            spins: vec![spin; rect.len()],
            meta: vec![1; rect.len()],
        }
    }

    /// Builds a window from a predicate on vertices (`true` = `+1`).
    pub fn from_fn(rect: Rect, mut plus: impl FnMut(Vertex) -> bool) -> Self {
        let spins = rect.vertices().map(|v| if plus(v) { 1 } else { -1 }).collect();
        SpinWindow {
            rect,
            spins,
            meta: vec![1; rect.len()],
        }
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn meta(&self) -> &[u32] {
        &self.meta
    }

    pub fn spin(&self, v: Vertex) -> Option<i8> {
        self.rect.index(v).map(|i| self.spins[i])
    }

    pub fn depth(&self, v: Vertex) -> Option<u32> {
        self.rect.index(v).map(|i| self.meta[i])
    }

    pub fn set_spin(&mut self, v: Vertex, spin: i8) {
        assert!(spin == 1 || spin == -1);
        let i = self.rect.index(v).expect("vertex outside window");
        self.spins[i] = spin;
    }

    pub fn count(&self, spin: i8) -> usize {
        self.spins.iter().filter(|&&s| s == spin).count()
    }

    /// The sub-window on `sub`.
    pub fn restrict(&self, sub: &Rect) -> Result<SpinWindow> {
        if !self.rect.contains_rect(sub) {
            return Err(Error::Geometry(format!("{sub} is not inside window {}", self.rect)));
        }
        let mut spins = Vec::with_capacity(sub.len());
        let mut meta = Vec::with_capacity(sub.len());
        for v in sub.vertices() {
            let i = self.rect.index(v).unwrap();
            spins.push(self.spins[i]);
            meta.push(self.meta[i]);
        }
        Ok(SpinWindow {
            rect: *sub,
            spins,
            meta,
        })
    }

    /// Coordinatewise `self <= other` (same box required).
    pub fn dominated_by(&self, other: &SpinWindow) -> bool {
        self.rect == other.rect && self.spins.iter().zip(&other.spins).all(|(a, b)| a <= b)
    }

    pub fn to_record(&self, spec: &ModelSpec, h: f64, seed: Seed, replica: u64) -> WindowRecord {
        WindowRecord {
            model: spec.kind,
            beta: spec.beta,
            h,
            seed: seed.0,
            replica,
            r#box: self.rect,
            spins: self.spins.clone(),
            meta: self.meta.clone(),
        }
    }
}

/// JSON form of a sampled window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    pub h: f64,
    pub seed: u64,
    pub replica: u64,
    #[serde(rename = "box")]
    pub r#box: Rect,
    pub spins: Vec<i8>,
    pub meta: Vec<u32>,
}

impl WindowRecord {
    pub fn into_window(self) -> Result<SpinWindow> {
        SpinWindow::new(self.r#box, self.spins, self.meta)
    }
}

/// `q^(m)(eta; beta, h)`: heat-bath probability of spin `eta` given `m` plus neighbours.
pub fn q_conditional(beta: f64, h: f64, m: u8, eta: i8) -> Result<f64> {
    if m > 4 {
        return Err(Error::param("m", format!("plus-neighbour count must be in 0..=4, got {m}")));
    }
    if eta != 1 && eta != -1 {
        return Err(Error::param("eta", format!("must be +-1, got {eta}")));
    }
    let field = h + (2 * m as i32 - 4) as f64;
    Ok(field::logistic(2.0 * beta * eta as f64 * field))
}

/// Applies the heat-bath rule at time `t` to every vertex of `active` with
/// the parity of `t`, reading `Y_v(t)` through `y_of` (values in `-1..=4`).
pub fn parallel_step_with(
    region: &mut SpinWindow,
    active: &Rect,
    t: i64,
    mut y_of: impl FnMut(Vertex) -> i8,
) -> Result<()> {
    let rect = region.rect;
    if !rect.contains_rect(&active.expand(1)) {
        return Err(Error::InsufficientMargin {
            region: rect,
            active: *active,
        });
    }
    let parity = t.rem_euclid(2) as u8;
    for v in active.vertices().filter(|v| v.parity() == parity) {
        let minus = v
            .neighbors(crate::grid::Adjacency::Ordinary)
            .filter(|&w| region.spins[rect.index(w).unwrap()] == -1)
            .count() as i8;
        let i = rect.index(v).unwrap();
        region.spins[i] = if minus <= y_of(v) { 1 } else { -1 };
    }
    Ok(())
}

/// One parallel update at time `t` with `Y_v(t)` drawn from the field.
pub fn parallel_step(
    region: &mut SpinWindow,
    active: &Rect,
    t: i64,
    seed: Seed,
    replica: u64,
    tails: &Tails,
) -> Result<()> {
    parallel_step_with(region, active, t, |v| {
        tails.quantile(keyed_uniform(seed, &FieldKey::new(v, t, replica))) as i8 - 1
    })
}

pub fn sample_window(spec: &ModelSpec, h: f64, rect: &Rect, seed: Seed, replica: u64) -> Result<SpinWindow> {
    sample_window_with(spec, h, rect, seed, replica, &SampleOptions::default())
}

pub fn sample_window_with(
    spec: &ModelSpec,
    h: f64,
    rect: &Rect,
    seed: Seed,
    replica: u64,
    opts: &SampleOptions,
) -> Result<SpinWindow> {
    spec.validate()?;
    match spec.kind {
        ModelKind::Bernoulli => bernoulli_sample_window(h, rect, seed, replica, opts),
        ModelKind::MajorityBox => {
            majority_sample_window(spec.majority_threshold, h, rect, seed, replica, opts)
        }
        ModelKind::Ising => ising_sample_window(spec.beta.unwrap(), h, rect, seed, replica, opts),
    }
}

#[inline]
fn site_value(seed: Seed, tails: &Tails, key: &FieldKey, forced: Option<&FieldKey>) -> u8 {
    if forced == Some(key) {
        0
    } else {
        tails.quantile(keyed_uniform(seed, key))
    }
}

pub fn bernoulli_sample_window(
    h: f64,
    rect: &Rect,
    seed: Seed,
    replica: u64,
    opts: &SampleOptions,
) -> Result<SpinWindow> {
    let tails = MuFamily::Bernoulli.tails(h)?;
    let forced = opts.forced_minimal.as_ref();
    let spins = rect
        .vertices()
        .map(|v| {
            let x = site_value(seed, &tails, &FieldKey::site(v, replica), forced);
            2 * x as i8 - 1
        })
        .collect();
    Ok(SpinWindow {
        rect: *rect,
        spins,
        meta: vec![1; rect.len()],
    })
}

/// Cached 0/1 field over a box, falling back to direct evaluation outside.
struct SiteField<'a> {
    rect: Rect,
    values: Vec<u8>,
    seed: Seed,
    tails: Tails,
    replica: u64,
    forced: Option<&'a FieldKey>,
}

impl SiteField<'_> {
    #[inline]
    fn get(&self, v: Vertex) -> u8 {
        match self.rect.index(v) {
            Some(i) => self.values[i],
            None => site_value(self.seed, &self.tails, &FieldKey::site(v, self.replica), self.forced),
        }
    }
}

/// Cells added when the majority block grows from half-size `n - 1` to `n`:
/// the block is `{v + (i, j) : -n + 1 <= i, j <= n}`. Lexicographic in `(i, j)`.
fn majority_ring(n: i64) -> impl Iterator<Item = (i64, i64)> {
    (-n + 1..=n).flat_map(move |i| {
        let edge = i == -n + 1 || i == n;
        let js: Vec<i64> = if edge {
            (-n + 1..=n).collect()
        } else {
            vec![-n + 1, n]
        };
        js.into_iter().map(move |j| (i, j))
    })
}

pub fn majority_sample_window(
    threshold: u32,
    h: f64,
    rect: &Rect,
    seed: Seed,
    replica: u64,
    opts: &SampleOptions,
) -> Result<SpinWindow> {
    if threshold == 0 {
        return Err(Error::param("majority_threshold", "must be >= 1"));
    }
    let tails = MuFamily::Bernoulli.tails(h)?;
    let forced = opts.forced_minimal.as_ref();
    let cache = rect.expand(8);
    let values = cache
        .vertices()
        .map(|v| site_value(seed, &tails, &FieldKey::site(v, replica), forced))
        .collect();
    let field = SiteField {
        rect: cache,
        values,
        seed,
        tails,
        replica,
        forced,
    };
    let mut spins = Vec::with_capacity(rect.len());
    let mut meta = Vec::with_capacity(rect.len());
    for v in rect.vertices() {
        let mut ones = 0i64;
        let mut decided = None;
        for n in 1..=opts.majority_cap as i64 {
            for (i, j) in majority_ring(n) {
                ones += field.get(v.offset(i, j)) as i64;
            }
            let diff = 2 * ones - 4 * n * n;
            if diff.unsigned_abs() > threshold as u64 {
                decided = Some((diff.signum() as i8, n as u32));
                break;
            }
        }
        let (s, n) = decided.ok_or(Error::MajorityCap {
            cap: opts.majority_cap,
            x: v.x,
            y: v.y,
        })?;
        spins.push(s);
        meta.push(n);
    }
    Ok(SpinWindow {
        rect: *rect,
        spins,
        meta,
    })
}

struct IsingCtx<'a> {
    tails: Tails,
    seed: Seed,
    replica: u64,
    forced: Option<&'a FieldKey>,
}

/// Upper and lower chains started at time `-depth` from all-plus and
/// all-minus, evaluated at time 0 on `target`.
///
/// At update time `s` only vertices with L1 distance `< |s|` from `target` are
/// updated; nothing farther can influence `target` by time 0.
fn sandwich(target: &Rect, depth: u32, ctx: &IsingCtx) -> (Vec<i8>, Vec<i8>) {
    let region = target.expand(depth);
    let w = region.width() as i64;
    let mut upper = vec![1i8; region.len()];
    let mut lower = vec![-1i8; region.len()];
    let (rx0, ry0) = (region.x0(), region.y0());
    for s in -(depth as i64)..=-1 {
        let reach = -s - 1;
        let parity = s.rem_euclid(2);
        for y in target.y0() - reach..=target.y1() + reach {
            let dy = (target.y0() - y).max(y - target.y1()).max(0);
            let rem = reach - dy;
            if rem < 0 {
                continue;
            }
            let (mut x, x_end) = (target.x0() - rem, target.x1() + rem);
            if (x + y).rem_euclid(2) != parity {
                x += 1;
            }
            let row = (y - ry0) * w;
            while x <= x_end {
                let i = (row + x - rx0) as usize;
                let wu = w as usize;
                let key = FieldKey::new(Vertex::new(x, y), s, ctx.replica);
                // shifted Y: plus iff minus-count < value
                let yv = site_value(ctx.seed, &ctx.tails, &key, ctx.forced) as i8;
                let mu = (upper[i - 1] + upper[i + 1] + upper[i - wu] + upper[i + wu]) as i8;
                let ml = (lower[i - 1] + lower[i + 1] + lower[i - wu] + lower[i + wu]) as i8;
                // minus count = (4 - sum) / 2
                upper[i] = if (4 - mu) / 2 < yv { 1 } else { -1 };
                lower[i] = if (4 - ml) / 2 < yv { 1 } else { -1 };
                x += 2;
            }
        }
    }
    let mut up = Vec::with_capacity(target.len());
    let mut lo = Vec::with_capacity(target.len());
    for v in target.vertices() {
        let i = region.index(v).unwrap();
        up.push(upper[i]);
        lo.push(lower[i]);
    }
    (up, lo)
}

/// Exact sample of the infinite-volume Ising measure restricted to `rect`,
/// by sandwich coupling from the past with doubling depths.
pub fn ising_sample_window(
    beta: f64,
    h: f64,
    rect: &Rect,
    seed: Seed,
    replica: u64,
    opts: &SampleOptions,
) -> Result<SpinWindow> {
    let ctx = IsingCtx {
        tails: MuFamily::ising_y(beta)?.tails(h)?,
        seed,
        replica,
        forced: opts.forced_minimal.as_ref(),
    };
    if opts.initial_depth == 0 {
        return Err(Error::param("initial_depth", "must be >= 1"));
    }
    // first doubling round at which each vertex agreed
    let mut first_round: Vec<Option<usize>> = vec![None; rect.len()];
    let mut depths = Vec::new();
    let mut depth = opts.initial_depth;
    let spins = loop {
        if depth > opts.max_depth {
            return Err(Error::NoCoalescence { cap: opts.max_depth });
        }
        let (up, lo) = sandwich(rect, depth, &ctx);
        let round = depths.len();
        depths.push(depth);
        let mut all = true;
        for (i, slot) in first_round.iter_mut().enumerate() {
            if up[i] == lo[i] {
                slot.get_or_insert(round);
            } else {
                all = false;
            }
        }
        if all {
            break up;
        }
        depth = depth.saturating_mul(2);
    };

    let mut meta = vec![depth; rect.len()];
    if opts.exact_depths {
        for round in 0..depths.len() {
            let lo = if round == 0 { 0 } else { depths[round - 1] };
            let group: Vec<Vertex> = first_round
                .iter()
                .enumerate()
                .filter(|(_, r)| **r == Some(round))
                .map(|(i, _)| rect.vertex(i))
                .collect();
            refine_depths(rect, &mut meta, lo, depths[round], group, &ctx);
        }
    }
    Ok(SpinWindow {
        rect: *rect,
        spins,
        meta,
    })
}

/// Bisection on the start depth: every vertex in `group` is unresolved at
/// depth `lo` and coalesced at `hi`. Coalescence is monotone in depth.
fn refine_depths(rect: &Rect, meta: &mut [u32], lo: u32, hi: u32, group: Vec<Vertex>, ctx: &IsingCtx) {
    if group.is_empty() {
        return;
    }
    if hi - lo <= 1 {
        for v in group {
            meta[rect.index(v).unwrap()] = hi;
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    let bbox = Rect::bounding(group.iter().copied()).unwrap();
    let (up, low) = sandwich(&bbox, mid, ctx);
    let (done, open): (Vec<Vertex>, Vec<Vertex>) = group.into_iter().partition(|&v| {
        let i = bbox.index(v).unwrap();
        up[i] == low[i]
    });
    refine_depths(rect, meta, lo, mid, done, ctx);
    refine_depths(rect, meta, mid, hi, open, ctx);
}

/// The first `m` keys `i_1(v), ..., i_m(v)` of the determinedness enumeration.
///
/// - bernoulli: the single key `(v, 0)`.
/// - majority_box: growing blocks around `v`, each new ring in lexicographic order.
/// - ising: `(v, -1)`, then `{(w, -t) : |w - v| < t}` for `t = 2, 3, ...`,
///   each shell in lexicographic order of `w`.
pub fn determinedness_schedule(spec: &ModelSpec, v: Vertex, m: usize) -> Vec<FieldKey> {
    match spec.kind {
        ModelKind::Bernoulli => vec![FieldKey::site(v, 0)].into_iter().take(m).collect(),
        ModelKind::MajorityBox => (1i64..)
            .flat_map(|n| majority_ring(n).map(move |(i, j)| FieldKey::site(v.offset(i, j), 0)))
            .take(m)
            .collect(),
        ModelKind::Ising => (1i64..)
            .flat_map(|t| {
                let r = t - 1;
                (-r..=r).flat_map(move |dx| {
                    let rem = r - dx.abs();
                    (-rem..=rem).map(move |dy| FieldKey::new(v.offset(dx, dy), -t, 0))
                })
            })
            .take(m)
            .collect(),
    }
}

/// Number of keys in the Ising enumeration up to and including shell `t`.
pub fn ising_prefix_len(t: u32) -> u64 {
    (1..=t as u64).map(|s| 2 * s * s - 2 * s + 1).sum()
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;

    use super::*;

    fn r(s: &str) -> Rect {
        s.parse().unwrap()
    }

    #[test]
    fn q_conditional_values() {
        for beta in [0.0, 0.3, 2.0] {
            assert!((q_conditional(beta, 0.0, 2, 1).unwrap() - 0.5).abs() < 1e-15);
        }
        let direct = 1.0 / (1.0 + (-1.32f64).exp());
        let got = q_conditional(0.3, 0.2, 3, 1).unwrap();
        assert!((got - direct).abs() < 1e-15);
        assert!((got - 0.7892).abs() < 1e-4);
        assert!(q_conditional(0.3, 0.0, 5, 1).is_err());
        for m in 0..=4u8 {
            for h in [-1.0, 0.0, 0.3] {
                let a = q_conditional(0.4, h, m, 1).unwrap();
                let b = q_conditional(0.4, -h, 4 - m, -1).unwrap();
                assert!((a - b).abs() < 1e-15);
                let sum = a + q_conditional(0.4, h, m, -1).unwrap();
                assert!((sum - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn heat_bath_tails_match_q() {
        // P(Y >= 4 - m) == q^(m)(+1)
        let fam = MuFamily::ising_y(0.37).unwrap();
        let t = fam.tails(-0.2).unwrap();
        for m in 0..=4u8 {
            let y_at_least = 4 - m as i8; // original alphabet
            let tail = t.tail((y_at_least + 1) as u8);
            assert!((tail - q_conditional(0.37, -0.2, m, 1).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn parallel_step_examples() {
        let region = r("0:4,0:4");
        let active = r("1:3,1:3");
        let mut w = SpinWindow::uniform(region, 1);
        let target = Vertex::new(2, 2);
        parallel_step_with(&mut w, &active, 0, |v| if v == target { -1 } else { 4 }).unwrap();
        assert_eq!(w.spin(target), Some(-1));
        assert_eq!(w.count(-1), 1);

        let mut w = SpinWindow::uniform(region, -1);
        parallel_step_with(&mut w, &active, 1, |_| 4).unwrap();
        for v in active.vertices() {
            let expect = if v.parity() == 1 { 1 } else { -1 };
            assert_eq!(w.spin(v), Some(expect));
        }

        let mut w = SpinWindow::uniform(region, 1);
        let err = parallel_step_with(&mut w, &r("0:3,1:3"), 0, |_| 4);
        assert!(matches!(err, Err(Error::InsufficientMargin { .. })));
    }

    #[test]
    fn parallel_step_ignores_neighbours_at_zero_beta() {
        let tails = MuFamily::ising_y(0.0).unwrap().tails(0.3).unwrap();
        let region = r("0:9,0:9");
        let active = r("1:8,1:8");
        let seed = Seed(5);
        let mut plus = SpinWindow::uniform(region, 1);
        let mut minus = SpinWindow::uniform(region, -1);
        parallel_step(&mut plus, &active, -2, seed, 0, &tails).unwrap();
        parallel_step(&mut minus, &active, -2, seed, 0, &tails).unwrap();
        for v in active.vertices().filter(|v| v.parity() == 0) {
            let y = tails.quantile(keyed_uniform(seed, &FieldKey::new(v, -2, 0))) as i8 - 1;
            let expect = if y == 4 { 1 } else { -1 };
            assert_eq!(plus.spin(v), Some(expect));
            assert_eq!(minus.spin(v), Some(expect));
        }
    }

    #[test]
    fn ising_zero_beta_parity_depths() {
        let spec = ModelSpec::ising(0.0).unwrap();
        let rect = r("-3:4,-2:5");
        let w = sample_window(&spec, 0.4, &rect, Seed(11), 3).unwrap();
        for v in rect.vertices() {
            let expect = if v.parity() == 1 { 1 } else { 2 };
            assert_eq!(w.depth(v), Some(expect), "{v}");
        }
    }

    #[test]
    fn ising_strong_field_is_all_plus() {
        let spec = ModelSpec::ising(0.3).unwrap();
        let rect = r("0:15,0:15");
        let w = sample_window(&spec, 50.0, &rect, Seed(1), 0).unwrap();
        assert_eq!(w.count(1), rect.len());
        let w = sample_window(&spec, -50.0, &rect, Seed(1), 0).unwrap();
        assert_eq!(w.count(-1), rect.len());
    }

    #[test]
    fn ising_restart_invariance() {
        let spec = ModelSpec::ising(0.3).unwrap();
        let rect = r("0:9,0:7");
        for replica in 0..20 {
            let a = sample_window(&spec, 0.1, &rect, Seed(77), replica).unwrap();
            let deep = SampleOptions {
                initial_depth: 32,
                ..SampleOptions::default()
            };
            let b = sample_window_with(&spec, 0.1, &rect, Seed(77), replica, &deep).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ising_exact_depths_are_minimal_coalescence_depths() {
        let spec = ModelSpec::ising(0.3).unwrap();
        let rect = r("0:3,0:3");
        let ctx = IsingCtx {
            tails: spec.family().tails(0.0).unwrap(),
            seed: Seed(3),
            replica: 9,
            forced: None,
        };
        for replica in 0..10 {
            let ctx = IsingCtx { replica, ..ctx };
            let w = ising_sample_window(0.3, 0.0, &rect, Seed(3), replica, &SampleOptions::default()).unwrap();
            // linear scan oracle
            for (i, v) in rect.vertices().enumerate() {
                let single = Rect::single(v);
                let d = (1..).find(|&d| {
                    let (u, l) = sandwich(&single, d, &ctx);
                    u[0] == l[0]
                });
                assert_eq!(Some(w.meta()[i]), d);
                let (u, _) = sandwich(&single, d.unwrap(), &ctx);
                assert_eq!(u[0], w.spins()[i]);
            }
        }
    }

    #[test]
    fn ising_cap_reports_no_coalescence() {
        let spec = ModelSpec::ising(2.0).unwrap();
        let opts = SampleOptions {
            max_depth: 16,
            ..SampleOptions::default()
        };
        let res = sample_window_with(&spec, 0.0, &r("0:15,0:15"), Seed(1), 0, &opts);
        assert!(matches!(res, Err(Error::NoCoalescence { cap: 16 })));
    }

    #[test]
    fn bernoulli_examples() {
        let spec = ModelSpec::bernoulli();
        let rect = r("0:63,0:63");
        let w = sample_window(&spec, -50.0, &rect, Seed(0), 0).unwrap();
        assert_eq!(w.count(-1), rect.len());
        let w = sample_window(&spec, 0.0, &rect, Seed(8), 0).unwrap();
        let frac = w.count(1) as f64 / rect.len() as f64;
        assert!((frac - 0.5).abs() < 0.0235, "{frac}");
        assert!(w.meta().iter().all(|&m| m == 1));
    }

    #[test]
    fn majority_extremes() {
        let spec = ModelSpec::majority_box(5).unwrap();
        let rect = r("0:5,0:5");
        let w = sample_window(&spec, 50.0, &rect, Seed(0), 0).unwrap();
        assert!(w.spins().iter().all(|&s| s == 1));
        assert!(w.meta().iter().all(|&m| m == 2));
        let w = sample_window(&spec, -50.0, &rect, Seed(0), 0).unwrap();
        assert!(w.spins().iter().all(|&s| s == -1));
        assert!(w.meta().iter().all(|&m| m == 2));
    }

    #[test]
    fn majority_brute_force_matches() {
        // independent evaluation: recount full blocks from scratch
        let seed = Seed(21);
        let rect = r("-2:2,-2:2");
        let w = majority_sample_window(5, 0.0, &rect, seed, 4, &SampleOptions::default()).unwrap();
        let x = |v: Vertex| (keyed_uniform(seed, &FieldKey::site(v, 4)) < 0.5) as i64;
        for (idx, v) in rect.vertices().enumerate() {
            let mut n = 1i64;
            let (s, depth) = loop {
                let mut d = 0;
                for i in -n + 1..=n {
                    for j in -n + 1..=n {
                        d += 2 * x(v.offset(i, j)) - 1;
                    }
                }
                if d.abs() > 5 {
                    break (d.signum() as i8, n as u32);
                }
                n += 1;
            };
            assert_eq!(w.spins()[idx], s);
            assert_eq!(w.meta()[idx], depth);
        }
    }

    #[test]
    fn majority_ring_partitions_blocks() {
        let mut seen = HashSet::new();
        for n in 1..=6i64 {
            for c in majority_ring(n) {
                assert!(seen.insert(c));
            }
            assert_eq!(seen.len() as i64, 4 * n * n);
        }
    }

    #[test]
    fn majority_half_at_zero_field() {
        let spec = ModelSpec::majority_box(5).unwrap();
        let n = 10_000u64;
        let plus = (0..n)
            .filter(|&rep| {
                sample_window(&spec, 0.0, &Rect::single(Vertex::ORIGIN), Seed(4), rep)
                    .unwrap()
                    .spins()[0]
                    == 1
            })
            .count() as f64;
        assert!((plus / n as f64 - 0.5).abs() < 3.0 * 0.005);
    }

    #[test]
    fn schedule_examples() {
        let spec = ModelSpec::ising(0.3).unwrap();
        let v = Vertex::new(2, -1);
        assert_eq!(determinedness_schedule(&spec, v, 1), vec![FieldKey::new(v, -1, 0)]);
        let two = determinedness_schedule(&spec, v, 2);
        assert_eq!(two[1], FieldKey::new(Vertex::new(1, -1), -2, 0));
        let six = determinedness_schedule(&spec, v, 6);
        let shell: Vec<_> = six[1..].iter().map(|k| k.vertex).collect();
        assert_eq!(
            shell,
            vec![Vertex::new(1, -1), Vertex::new(2, -2), Vertex::new(2, -1), Vertex::new(2, 0), Vertex::new(3, -1)]
        );
        assert_eq!(determinedness_schedule(&spec, v, 200).len(), 200);
        assert_eq!(ising_prefix_len(3), 1 + 5 + 13);
        assert_eq!(
            determinedness_schedule(&ModelSpec::bernoulli(), v, 5),
            vec![FieldKey::site(v, 0)]
        );
        let maj = determinedness_schedule(&ModelSpec::majority_box(5).unwrap(), v, 4);
        assert_eq!(maj.len(), 4);
    }

    #[test]
    fn schedule_locality_disjointness() {
        let mut state = 12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 41) as i64 - 20
        };
        for spec in [ModelSpec::ising(0.3).unwrap(), ModelSpec::majority_box(5).unwrap(), ModelSpec::bernoulli()] {
            for _ in 0..100 {
                let v = Vertex::new(next(), next());
                let w = Vertex::new(next(), next());
                if v == w {
                    continue;
                }
                let m = (spec.alpha * v.l1_distance(w) as f64).ceil() as usize - 1;
                if m == 0 {
                    continue;
                }
                let a: HashSet<_> = determinedness_schedule(&spec, v, m).into_iter().collect();
                let b: HashSet<_> = determinedness_schedule(&spec, w, m).into_iter().collect();
                assert!(a.is_disjoint(&b), "{:?} {v} {w} m={m}", spec.kind);
            }
        }
    }

    #[test]
    fn window_record_roundtrip() {
        let spec = ModelSpec::ising(0.2).unwrap();
        let rect = r("0:2,0:1");
        let w = sample_window(&spec, 0.1, &rect, Seed(3), 2).unwrap();
        let rec = w.to_record(&spec, 0.1, Seed(3), 2);
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"box\""));
        let back: WindowRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_window().unwrap(), w);
        assert!(SpinWindow::new(rect, vec![1; 5], vec![1; 6]).is_err());
        assert!(SpinWindow::new(rect, vec![0; 6], vec![1; 6]).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::ising(-1.0).is_err());
        assert!(ModelSpec::majority_box(0).is_err());
        let mut s = ModelSpec::ising(0.3).unwrap();
        s.beta = None;
        assert!(s.validate().is_err());
        let mut s = ModelSpec::bernoulli();
        s.gamma = 0.0;
        assert!(s.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_in_h_for_all_models(seed in any::<u64>(), replica in 0u64..1000, h in -1.0f64..1.0, dh in 0.0f64..0.5) {
            let rect = r("0:5,0:4");
            for spec in [ModelSpec::bernoulli(), ModelSpec::majority_box(5).unwrap(), ModelSpec::ising(0.3).unwrap()] {
                let opts = SampleOptions::spins_only();
                let lo = sample_window_with(&spec, h, &rect, Seed(seed), replica, &opts).unwrap();
                let hi = sample_window_with(&spec, h + dh, &rect, Seed(seed), replica, &opts).unwrap();
                prop_assert!(lo.dominated_by(&hi));
            }
        }
    }
}
