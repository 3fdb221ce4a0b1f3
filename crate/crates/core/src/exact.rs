//! Exact enumeration oracles for Bernoulli product measure on small boxes.
//!
//! Configurations are bitmasks over the row-major vertices of the event box
//! (bit set = `+1` = open). Every probability is an exact integer-coefficient
//! polynomial in `p`.

use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Event;
use crate::grid::{Rect, Vertex};
use crate::models::SpinWindow;
use crate::poly::{exact_rational, PolynomialInP};

/// Largest enumerable box (about 4 million configurations).
pub const ENUMERATION_LIMIT: usize = 22;

/// An increasing event on an enumerable box, with its indicator table.
#[derive(Clone, Debug)]
pub struct EventSpec {
    name: String,
    rect: Rect,
    table: Vec<bool>,
}

fn check_size(rect: &Rect) -> Result<usize> {
    let n = rect.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            vertices: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(n)
}

fn window_of(rect: Rect, bits: u32) -> SpinWindow {
    SpinWindow::from_fn(rect, {
        let mut i = 0;
        move |_| {
            let open = bits >> i & 1 == 1;
            i += 1;
            open
        }
    })
}

impl EventSpec {
    pub fn new(event: &Event) -> Result<Self> {
        let n = check_size(&event.rect)?;
        let rect = event.rect;
        let table = (0..1u32 << n)
            .into_par_iter()
            .map(|bits| event.occurs_exact(&window_of(rect, bits)))
            .collect::<Result<Vec<bool>>>()?;
        EventSpec::from_table(event.to_string(), rect, table)
    }

    /// A custom event given by its indicator over all `2^n` configurations.
    pub fn from_table(name: impl Into<String>, rect: Rect, table: Vec<bool>) -> Result<Self> {
        let n = check_size(&rect)?;
        if table.len() != 1 << n {
            return Err(Error::param("table", format!("need {} entries, got {}", 1u64 << n, table.len())));
        }
        for (bits, &inside) in table.iter().enumerate() {
            if !inside {
                continue;
            }
            for i in 0..n {
                if bits >> i & 1 == 0 && !table[bits | 1 << i] {
                    return Err(Error::NotIncreasing { site: i });
                }
            }
        }
        Ok(EventSpec {
            name: name.into(),
            rect,
            table,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn vertices(&self) -> usize {
        self.rect.len()
    }

    pub fn contains(&self, bits: u32) -> bool {
        self.table[bits as usize]
    }

    fn poly_where(&self, mut keep: impl FnMut(u32) -> bool) -> PolynomialInP {
        let n = self.vertices();
        let mut counts = vec![0u64; n + 1];
        for bits in 0..1u32 << n {
            if keep(bits) {
                counts[bits.count_ones() as usize] += 1;
            }
        }
        PolynomialInP::from_open_counts(&counts, n)
    }
}

/// `P_p(A)` as an exact polynomial.
pub fn exact_probability(e: &EventSpec) -> PolynomialInP {
    e.poly_where(|b| e.contains(b))
}

/// `P_p(A_i)` where `A_i = {w in A, w with site i closed not in A}`.
pub fn exact_pivotal_probability(e: &EventSpec, site: Vertex) -> PolynomialInP {
    match e.rect.index(site) {
        None => PolynomialInP::zero(),
        Some(i) => {
            let bit = 1u32 << i;
            e.poly_where(|b| e.contains(b) && !e.contains(b & !bit))
        }
    }
}

/// Pivotal polynomials of every vertex of the box, row-major.
pub fn pivotal_polynomials(e: &EventSpec) -> Vec<PolynomialInP> {
    e.rect
        .vertices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| exact_pivotal_probability(e, v))
        .collect()
}

/// Probability of the intersection of several events on the same box.
pub fn exact_intersection(events: &[&EventSpec]) -> Result<PolynomialInP> {
    let first = events.first().ok_or_else(|| Error::param("events", "empty"))?;
    same_box(events)?;
    Ok(first.poly_where(|b| events.iter().all(|e| e.contains(b))))
}

pub fn exact_union(events: &[&EventSpec]) -> Result<PolynomialInP> {
    let first = events.first().ok_or_else(|| Error::param("events", "empty"))?;
    same_box(events)?;
    Ok(first.poly_where(|b| events.iter().any(|e| e.contains(b))))
}

fn same_box(events: &[&EventSpec]) -> Result<()> {
    if events.windows(2).any(|w| w[0].rect != w[1].rect) {
        return Err(Error::Geometry("events must share one box".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RussoReport {
    pub event: String,
    /// `p * dP/dp`.
    pub lhs: PolynomialInP,
    /// `sum_i P(A_i)`.
    pub rhs: PolynomialInP,
    pub holds: bool,
}

/// Checks `p * dP/dp = sum_i P_p(A_i)` as an identity of integer polynomials.
pub fn russo_identity_check(e: &EventSpec) -> RussoReport {
    let prob = exact_probability(e);
    let lhs = &PolynomialInP::p() * &prob.derivative();
    let rhs: PolynomialInP = pivotal_polynomials(e).into_iter().sum();
    RussoReport {
        event: e.name.clone(),
        holds: lhs == rhs,
        lhs,
        rhs,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub p: f64,
    pub prob: f64,
    pub dprob: f64,
    /// `max_i P_p(A_i)`.
    pub eps: f64,
    /// `log(1/eps) P (1 - P) / (dP/dp)`; absent when `P` is 0 or 1.
    pub k: Option<f64>,
    /// `dP/dp = 0` although `0 < P < 1`.
    pub anomaly: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDiagnostic {
    pub event: String,
    pub rows: Vec<ThresholdRow>,
    pub sup_k: Option<f64>,
}

/// The constant implied by the sharp-threshold inequality
/// `dP/dp >= log(1/eps) P (1 - P) / K` on each grid point.
pub fn sharp_threshold_diagnostic(e: &EventSpec, p_grid: &[f64]) -> Result<ThresholdDiagnostic> {
    if let Some(p) = p_grid.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::param("p", format!("grid values must lie in (0, 1), got {p}")));
    }
    let prob = exact_probability(e);
    let dprob = prob.derivative();
    let pivots = pivotal_polynomials(e);
    let rows: Vec<ThresholdRow> = p_grid
        .iter()
        .map(|&p| {
            let pr = prob.eval(p);
            let d = dprob.eval(p);
            let eps = pivots.iter().map(|q| q.eval(p)).fold(0.0, f64::max);
            let interior = pr > 0.0 && pr < 1.0;
            let anomaly = interior && d <= 0.0;
            let k = (interior && d > 0.0 && eps > 0.0).then(|| (1.0 / eps).ln() * pr * (1.0 - pr) / d);
            ThresholdRow {
                p,
                prob: pr,
                dprob: d,
                eps,
                k,
                anomaly,
            }
        })
        .collect();
    let sup_k = rows.iter().filter_map(|r| r.k).reduce(f64::max);
    Ok(ThresholdDiagnostic {
        event: e.name.clone(),
        rows,
        sup_k,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratedThresholdReport {
    pub event: String,
    pub p1: f64,
    pub p2: f64,
    /// `P_{p1}(A) (1 - P_{p2}(A))`.
    pub lhs: f64,
    /// `sup_{p1 <= p <= p2} max_i P_p(A_i)`.
    pub eps_prime: f64,
    pub k1_candidate: f64,
    /// `eps_prime^((p2 - p1) / k1_candidate)`.
    pub rhs: f64,
    pub holds: bool,
    /// Smallest `K1` for which the inequality holds on this instance.
    pub min_k1: f64,
}

/// Integrated form: `P_{p1}(A)(1 - P_{p2}(A)) <= eps'^((p2 - p1)/K1)`.
pub fn integrated_threshold_check(e: &EventSpec, p1: f64, p2: f64, k1_candidate: f64) -> Result<IntegratedThresholdReport> {
    if !(0.0 < p1 && p1 < p2 && p2 < 1.0) {
        return Err(Error::param("p1, p2", format!("need 0 < p1 < p2 < 1, got {p1}, {p2}")));
    }
    if !(k1_candidate > 0.0) {
        return Err(Error::param("k1", "must be positive"));
    }
    let prob = exact_probability(e);
    let lhs = prob.eval(p1) * (1.0 - prob.eval(p2));
    let eps_prime = pivotal_polynomials(e)
        .iter()
        .map(|q| q.max_on(p1, p2).1)
        .fold(0.0, f64::max);
    let width = p2 - p1;
    let rhs = eps_prime.powf(width / k1_candidate);
    let min_k1 = if lhs <= 0.0 {
        0.0
    } else if eps_prime <= 0.0 {
        f64::INFINITY
    } else {
        width * (1.0 / eps_prime).ln() / (1.0 / lhs).ln()
    };
    Ok(IntegratedThresholdReport {
        event: e.name.clone(),
        p1,
        p2,
        lhs,
        eps_prime,
        k1_candidate,
        rhs,
        holds: lhs <= rhs,
        min_k1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub a: String,
    pub b: String,
    pub p_ab: f64,
    pub p_a_times_p_b: f64,
    /// `P(A and B) >= P(A) P(B)` decided in exact rational arithmetic.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtTrickCheck {
    /// `1 - P(A_1 or ... or A_4)`.
    pub delta: f64,
    pub max_single: f64,
    /// `1 - delta^(1/4)`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkgReport {
    pub p: f64,
    pub pairs: Vec<PairCheck>,
    pub sqrt_trick: Option<SqrtTrickCheck>,
    pub all_hold: bool,
}

/// Positive association on every pair, and for four events the square-root
/// trick `max_i P(A_i) >= 1 - (1 - P(union))^(1/4)`. Both decided exactly
/// at the rational value of `p`.
pub fn fkg_and_sqrt_trick_check(events: &[&EventSpec], p: f64) -> Result<FkgReport> {
    if events.is_empty() || events.len() > 4 {
        return Err(Error::param("events", "need between 1 and 4 events"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("must lie in (0, 1), got {p}")));
    }
    same_box(events)?;
    let pr = exact_rational(p);
    let probs: Vec<BigRational> = events.iter().map(|e| exact_probability(e).eval_exact(&pr)).collect();
    let to_f64 = |x: &BigRational| -> f64 {
        use num_traits::ToPrimitive;
        x.to_f64().unwrap_or(f64::NAN)
    };
    let mut pairs = Vec::new();
    for i in 0..events.len() {
        for j in i..events.len() {
            let p_ab = exact_intersection(&[events[i], events[j]])?.eval_exact(&pr);
            let prod = &probs[i] * &probs[j];
            pairs.push(PairCheck {
                a: events[i].name.clone(),
                b: events[j].name.clone(),
                p_ab: to_f64(&p_ab),
                p_a_times_p_b: to_f64(&prod),
                holds: p_ab >= prod,
            });
        }
    }
    let sqrt_trick = if events.len() == 4 {
        let union = exact_union(events)?.eval_exact(&pr);
        let delta = BigRational::one() - union;
        let max_single = probs.iter().max().unwrap().clone();
        let gap = BigRational::one() - &max_single;
        // (1 - max)^4 <= delta  <=>  max >= 1 - delta^(1/4)
        let holds = &gap * &gap * &gap * &gap <= delta;
        let d = to_f64(&delta);
        Some(SqrtTrickCheck {
            delta: d,
            max_single: to_f64(&max_single),
            bound: 1.0 - d.max(0.0).powf(0.25),
            holds,
        })
    } else {
        None
    };
    let all_hold = pairs.iter().all(|c| c.holds) && sqrt_trick.as_ref().is_none_or(|s| s.holds);
    Ok(FkgReport {
        p,
        pairs,
        sqrt_trick,
        all_hold,
    })
}

/// The built-in enumerable events: crossings on boxes from 2x2 to 3x4
/// vertices, star crossings, a connection, and a circuit.
pub fn builtin_events() -> Vec<Event> {
    use crate::event::Direction::*;
    use crate::grid::Adjacency::*;
    let mut out = Vec::new();
    for (n, m) in [(1, 1), (2, 1), (1, 2), (2, 2), (2, 3), (3, 2)] {
        out.push(Event::horizontal(n, m));
        out.push(Event::vertical(n, m));
    }
    out.push(Event::crossing(Rect::crossing_box(2, 2), Horizontal, 1, Star));
    out.push(Event::crossing(Rect::crossing_box(3, 2), Vertical, 1, Star));
    out.push(Event::origin_to_border(1));
    out.push(Event::connects(
        Rect::crossing_box(3, 3),
        vec![Vertex::new(1, 1)],
        vec![Vertex::new(3, 3)],
    ));
    let inner = Rect::single(Vertex::new(1, 1));
    out.push(Event {
        rect: Rect::crossing_box(3, 3),
        kind: crate::event::EventKind::Circuit {
            inner,
            spin: 1,
            adjacency: Ordinary,
        },
    });
    out.push(Event::site(Vertex::ORIGIN, 1));
    out
}

/// Centre of a 3x3 box joined to each of its four sides.
pub fn one_sided_connections() -> Vec<Event> {
    let rect = Rect::crossing_box(2, 2);
    let s = rect.sides();
    [s.left, s.right, s.top, s.bottom]
        .into_iter()
        .map(|side| Event::connects(rect, vec![Vertex::new(1, 1)], side))
        .collect()
}
