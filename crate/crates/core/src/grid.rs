//! Square-lattice geometry.
//!
//! Boxes are closed integer rectangles: `[0, n] x [0, m]` has `(n + 1)(m + 1)`
//! vertices. Vertices inside a box are indexed in row-major order with rows
//! running from `y0` (bottom) to `y1` (top).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i64,
    pub y: i64,
}

impl Vertex {
    pub const ORIGIN: Vertex = Vertex { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Vertex { x, y }
    }

    /// `|x| + |y|`.
    pub fn l1_norm(self) -> u64 {
        self.x.unsigned_abs() + self.y.unsigned_abs()
    }

    pub fn l1_distance(self, other: Vertex) -> u64 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// 0 for even vertices (`x + y` even), 1 for odd ones.
    pub fn parity(self) -> u8 {
        (self.x + self.y).rem_euclid(2) as u8
    }

    pub fn offset(self, dx: i64, dy: i64) -> Vertex {
        Vertex::new(self.x + dx, self.y + dy)
    }

    /// The 4 (ordinary) or 8 (star) lattice neighbours.
    pub fn neighbors(self, adjacency: Adjacency) -> impl Iterator<Item = Vertex> {
        adjacency.offsets().iter().map(move |&(dx, dy)| self.offset(dx, dy))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

pub fn l1_norm(v: Vertex) -> u64 {
    v.l1_norm()
}

pub fn neighbors(v: Vertex, adjacency: Adjacency) -> Vec<Vertex> {
    v.neighbors(adjacency).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    Ordinary,
    Star,
}

const ORDINARY: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const STAR: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

impl Adjacency {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Adjacency::Ordinary => &ORDINARY,
            Adjacency::Star => &STAR,
        }
    }

    /// The matching adjacency: star for ordinary and vice versa.
    pub fn dual(self) -> Adjacency {
        match self {
            Adjacency::Ordinary => Adjacency::Star,
            Adjacency::Star => Adjacency::Ordinary,
        }
    }
}

/// A closed box `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRect")]
pub struct Rect {
    x0: i64,
    x1: i64,
    y0: i64,
    y1: i64,
}

#[derive(Deserialize)]
struct RawRect {
    x0: i64,
    x1: i64,
    y0: i64,
    y1: i64,
}

impl TryFrom<RawRect> for Rect {
    type Error = Error;

    fn try_from(r: RawRect) -> Result<Self> {
        Rect::new(r.x0, r.x1, r.y0, r.y1)
    }
}

/// The four extreme rows/columns of a box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sides {
    pub left: Vec<Vertex>,
    pub right: Vec<Vertex>,
    pub top: Vec<Vertex>,
    pub bottom: Vec<Vertex>,
}

impl Rect {
    pub fn new(x0: i64, x1: i64, y0: i64, y1: i64) -> Result<Self> {
        if x0 > x1 || y0 > y1 {
            return Err(Error::MalformedBox(format!("{x0}:{x1},{y0}:{y1}")));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    /// `B(n) = [-n, n]^2`.
    pub fn centered(n: u32) -> Self {
        let n = n as i64;
        Rect {
            x0: -n,
            x1: n,
            y0: -n,
            y1: n,
        }
    }

    /// `B(v; n) = v + [-n, n]^2`.
    pub fn around(v: Vertex, n: u32) -> Self {
        Rect::centered(n).translate(v.x, v.y)
    }

    /// The box `[0, n] x [0, m]` carrying the crossing events `H(n, m)`, `V(n, m)`.
    pub fn crossing_box(n: u32, m: u32) -> Self {
        Rect {
            x0: 0,
            x1: n as i64,
            y0: 0,
            y1: m as i64,
        }
    }

    pub fn single(v: Vertex) -> Self {
        Rect {
            x0: v.x,
            x1: v.x,
            y0: v.y,
            y1: v.y,
        }
    }

    pub fn x0(&self) -> i64 {
        self.x0
    }
    pub fn x1(&self) -> i64 {
        self.x1
    }
    pub fn y0(&self) -> i64 {
        self.y0
    }
    pub fn y1(&self) -> i64 {
        self.y1
    }

    pub fn width(&self) -> usize {
        (self.x1 - self.x0 + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y1 - self.y0 + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.x >= self.x0 && v.x <= self.x1 && v.y >= self.y0 && v.y <= self.y1
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }

    /// Row-major index of `v`; `None` outside the box.
    pub fn index(&self, v: Vertex) -> Option<usize> {
        self.contains(v)
            .then(|| (v.y - self.y0) as usize * self.width() + (v.x - self.x0) as usize)
    }

    pub fn vertex(&self, index: usize) -> Vertex {
        let w = self.width();
        Vertex::new(self.x0 + (index % w) as i64, self.y0 + (index / w) as i64)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Vertex::new(x, y)))
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Rect {
        Rect {
            x0: self.x0 + dx,
            x1: self.x1 + dx,
            y0: self.y0 + dy,
            y1: self.y1 + dy,
        }
    }

    /// Chebyshev expansion by `r` on every side.
    pub fn expand(&self, r: u32) -> Rect {
        let r = r as i64;
        Rect {
            x0: self.x0 - r,
            x1: self.x1 + r,
            y0: self.y0 - r,
            y1: self.y1 + r,
        }
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &Rect) -> Rect {
        Rect {
            x0: self.x0.min(other.x0),
            x1: self.x1.max(other.x1),
            y0: self.y0.min(other.y0),
            y1: self.y1.max(other.y1),
        }
    }

    pub fn bounding(vertices: impl IntoIterator<Item = Vertex>) -> Option<Rect> {
        vertices
            .into_iter()
            .map(Rect::single)
            .reduce(|a, b| a.hull(&b))
    }

    /// L1 distance from `v` to the nearest vertex of the box (0 inside).
    pub fn l1_distance(&self, v: Vertex) -> u64 {
        let dx = (self.x0 - v.x).max(v.x - self.x1).max(0) as u64;
        let dy = (self.y0 - v.y).max(v.y - self.y1).max(0) as u64;
        dx + dy
    }

    /// Minimal L1 distance between a vertex of `self` and a vertex of `other`.
    pub fn distance_to(&self, other: &Rect) -> u64 {
        let dx = (other.x0 - self.x1).max(self.x0 - other.x1).max(0) as u64;
        let dy = (other.y0 - self.y1).max(self.y0 - other.y1).max(0) as u64;
        dx + dy
    }

    /// Vertices outside the box with an ordinary neighbour inside it.
    pub fn boundary(&self) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(2 * (self.width() + self.height()));
        for x in self.x0..=self.x1 {
            out.push(Vertex::new(x, self.y0 - 1));
            out.push(Vertex::new(x, self.y1 + 1));
        }
        for y in self.y0..=self.y1 {
            out.push(Vertex::new(self.x0 - 1, y));
            out.push(Vertex::new(self.x1 + 1, y));
        }
        out
    }

    /// Extreme columns (left, right) and rows (top = `y1`, bottom = `y0`).
    pub fn sides(&self) -> Sides {
        Sides {
            left: (self.y0..=self.y1).map(|y| Vertex::new(self.x0, y)).collect(),
            right: (self.y0..=self.y1).map(|y| Vertex::new(self.x1, y)).collect(),
            top: (self.x0..=self.x1).map(|x| Vertex::new(x, self.y1)).collect(),
            bottom: (self.x0..=self.x1).map(|x| Vertex::new(x, self.y0)).collect(),
        }
    }

    /// Whether `v` lies on the outermost layer of the box.
    pub fn on_border(&self, v: Vertex) -> bool {
        self.contains(v) && (v.x == self.x0 || v.x == self.x1 || v.y == self.y0 || v.y == self.y1)
    }
}

pub fn box_boundary(b: &Rect) -> Vec<Vertex> {
    b.boundary()
}

pub fn box_sides(b: &Rect) -> Sides {
    b.sides()
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{},{}:{}", self.x0, self.x1, self.y0, self.y1)
    }
}

impl FromStr for Rect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedBox(s.to_string());
        let (xs, ys) = s.trim().split_once(',').ok_or_else(bad)?;
        let range = |part: &str| -> Result<(i64, i64)> {
            let (a, b) = part.trim().split_once(':').ok_or_else(bad)?;
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            Ok((a, b))
        };
        let (x0, x1) = range(xs)?;
        let (y0, y1) = range(ys)?;
        Rect::new(x0, x1, y0, y1).map_err(|_| bad())
    }
}

/// `A(n, m)`: vertices of `outer` not in `inner`, kept as a box pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annulus {
    pub inner: Rect,
    pub outer: Rect,
}

impl Annulus {
    /// Requires one full layer of `outer` around `inner`.
    pub fn new(inner: Rect, outer: Rect) -> Result<Self> {
        if !outer.contains_rect(&inner.expand(1)) {
            return Err(Error::Geometry(format!(
                "inner box {inner} is not strictly inside outer box {outer}"
            )));
        }
        Ok(Annulus { inner, outer })
    }

    /// `A(n, m)` between `B(n)` and `B(m)`.
    pub fn centered(n: u32, m: u32) -> Result<Self> {
        Annulus::new(Rect::centered(n), Rect::centered(m))
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.outer.contains(v) && !self.inner.contains(v)
    }

    pub fn len(&self) -> usize {
        self.outer.len() - self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;

    use super::*;

    fn set(vs: impl IntoIterator<Item = Vertex>) -> HashSet<Vertex> {
        vs.into_iter().collect()
    }

    #[test]
    fn l1_norm_examples() {
        assert_eq!(l1_norm(Vertex::new(0, 0)), 0);
        assert_eq!(l1_norm(Vertex::new(3, -2)), 5);
        assert_eq!(l1_norm(Vertex::new(-7, 0)), 7);
    }

    #[test]
    fn neighbor_examples() {
        let o = Vertex::ORIGIN;
        assert_eq!(
            set(neighbors(o, Adjacency::Ordinary)),
            set([(1, 0), (-1, 0), (0, 1), (0, -1)].map(|(x, y)| Vertex::new(x, y)))
        );
        let star = set(neighbors(o, Adjacency::Star));
        let expected = set(Rect::centered(1).vertices().filter(|v| *v != o));
        assert_eq!(star, expected);
        assert_eq!(
            set(neighbors(Vertex::new(5, 5), Adjacency::Ordinary)),
            set([(6, 5), (4, 5), (5, 6), (5, 4)].map(|(x, y)| Vertex::new(x, y)))
        );
    }

    #[test]
    fn boundary_sizes_match_enumeration() {
        // brute force: vertices within a padded box that are outside b but have a neighbour inside
        for n in 0..=100u32 {
            let b = Rect::centered(n);
            let got = set(b.boundary());
            assert_eq!(got.len(), 4 * (2 * n as usize + 1));
            if n <= 3 {
                let brute = set(b.expand(2).vertices().filter(|v| {
                    !b.contains(*v) && v.neighbors(Adjacency::Ordinary).any(|w| b.contains(w))
                }));
                assert_eq!(got, brute);
            }
        }
        assert_eq!(Rect::centered(1).boundary().len(), 12);
        assert_eq!(Rect::centered(2).boundary().len(), 20);
        assert_eq!(
            set(Rect::centered(0).boundary()),
            set(neighbors(Vertex::ORIGIN, Adjacency::Ordinary))
        );
    }

    #[test]
    fn side_examples() {
        let s = Rect::new(0, 1, 0, 1).unwrap().sides();
        assert_eq!(s.left, vec![Vertex::new(0, 0), Vertex::new(0, 1)]);
        assert_eq!(s.right, vec![Vertex::new(1, 0), Vertex::new(1, 1)]);
        let s = Rect::new(0, 3, 0, 1).unwrap().sides();
        assert_eq!((s.left.len(), s.right.len(), s.top.len(), s.bottom.len()), (2, 2, 4, 4));
        let n = 4;
        let s = Rect::centered(n).sides();
        assert_eq!(s.right, (-4..=4).map(|y| Vertex::new(4, y)).collect::<Vec<_>>());
    }

    #[test]
    fn box_syntax() {
        let r: Rect = "0:63,0:63".parse().unwrap();
        assert_eq!(r.len(), 64 * 64);
        assert_eq!(r.to_string(), "0:63,0:63");
        assert!("3:1,0:0".parse::<Rect>().is_err());
        assert!("0:1".parse::<Rect>().is_err());
        assert!("a:b,0:1".parse::<Rect>().is_err());
        let r: Rect = "-2:2, -1:1".parse().unwrap();
        assert_eq!((r.width(), r.height()), (5, 3));
    }

    #[test]
    fn annulus_membership() {
        let a = Annulus::centered(1, 3).unwrap();
        assert!(!a.contains(Vertex::ORIGIN));
        assert!(a.contains(Vertex::new(2, 0)));
        assert!(!a.contains(Vertex::new(4, 0)));
        assert_eq!(a.len(), 49 - 9);
        assert!(Annulus::centered(2, 2).is_err());
        assert!(Annulus::new(Rect::centered(1), Rect::new(-1, 3, -3, 3).unwrap()).is_err());
    }

    #[test]
    fn index_roundtrip_and_distances() {
        let r = Rect::new(-3, 4, 2, 6).unwrap();
        for (i, v) in r.vertices().enumerate() {
            assert_eq!(r.index(v), Some(i));
            assert_eq!(r.vertex(i), v);
            assert_eq!(r.l1_distance(v), 0);
        }
        assert_eq!(r.index(Vertex::new(5, 2)), None);
        assert_eq!(r.l1_distance(Vertex::new(6, 0)), 4);
        let other = Rect::new(7, 8, 8, 9).unwrap();
        assert_eq!(r.distance_to(&other), 3 + 2);
    }

    fn vertex() -> impl Strategy<Value = Vertex> {
        (-1_000_000i64..1_000_000, -1_000_000i64..1_000_000).prop_map(|(x, y)| Vertex::new(x, y))
    }

    proptest! {
        #[test]
        fn ordinary_is_subset_of_star_and_symmetric(v in vertex()) {
            let star = set(neighbors(v, Adjacency::Star));
            prop_assert_eq!(star.len(), 8);
            for w in neighbors(v, Adjacency::Ordinary) {
                prop_assert!(star.contains(&w));
            }
            for adj in [Adjacency::Ordinary, Adjacency::Star] {
                for w in v.neighbors(adj) {
                    prop_assert!(w.neighbors(adj).any(|u| u == v));
                }
            }
        }

        #[test]
        fn triangle_inequality(a in vertex(), b in vertex(), c in vertex()) {
            prop_assert!(a.l1_distance(c) <= a.l1_distance(b) + b.l1_distance(c));
        }
    }
}
