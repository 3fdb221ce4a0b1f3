//! Connectivity on spin windows: `+` clusters on the ordinary lattice, `-*`
//! clusters on the star lattice, crossings, connections and circuits.
//!
//! Paths never leave the window. A box has a horizontal `+` crossing exactly
//! when it has no vertical `-*` crossing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Direction;
use crate::grid::{Adjacency, Rect, Vertex};
use crate::models::SpinWindow;
use crate::union_find::UnionFind;

/// Connected components of one spin value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub rect: Rect,
    pub spin: i8,
    pub adjacency: Adjacency,
    /// Row-major index of the cluster's first vertex, `None` for the other spin.
    pub labels: Vec<Option<usize>>,
    pub sizes: BTreeMap<usize, usize>,
}

impl ClusterLabeling {
    pub fn label(&self, v: Vertex) -> Option<usize> {
        self.rect.index(v).and_then(|i| self.labels[i])
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> usize {
        self.sizes.values().copied().max().unwrap_or(0)
    }
}

/// Offsets to already-visited neighbours in a row-major scan.
fn backward_offsets(adjacency: Adjacency) -> &'static [(i64, i64)] {
    match adjacency {
        Adjacency::Ordinary => &[(-1, 0), (0, -1)],
        Adjacency::Star => &[(-1, 0), (0, -1), (-1, -1), (1, -1)],
    }
}

pub fn label_clusters(w: &SpinWindow, spin: i8, adjacency: Adjacency) -> ClusterLabeling {
    let rect = w.rect();
    let spins = w.spins();
    let mut uf = UnionFind::new(rect.len());
    for (i, v) in rect.vertices().enumerate() {
        if spins[i] != spin {
            continue;
        }
        for &(dx, dy) in backward_offsets(adjacency) {
            if let Some(j) = rect.index(v.offset(dx, dy)) {
                if spins[j] == spin {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut first_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut labels = vec![None; rect.len()];
    let mut sizes = BTreeMap::new();
    for (i, label) in labels.iter_mut().enumerate() {
        if spins[i] != spin {
            continue;
        }
        let root = uf.find(i);
        let first = *first_of_root.entry(root).or_insert(i);
        *label = Some(first);
        *sizes.entry(first).or_insert(0) += 1;
    }
    ClusterLabeling {
        rect,
        spin,
        adjacency,
        labels,
        sizes,
    }
}

/// Breadth-first reach within `open` from `seeds` (only open seeds count).
fn reach(rect: &Rect, open: &[bool], adjacency: Adjacency, seeds: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut seen = vec![false; rect.len()];
    let mut stack: Vec<usize> = Vec::new();
    for s in seeds {
        if open[s] && !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    let (w, h) = (rect.width() as i64, rect.height() as i64);
    while let Some(i) = stack.pop() {
        let (x, y) = ((i as i64) % w, (i as i64) / w);
        for &(dx, dy) in adjacency.offsets() {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let j = (ny * w + nx) as usize;
            if open[j] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

fn spin_mask(w: &SpinWindow, spin: i8) -> Vec<bool> {
    w.spins().iter().map(|&s| s == spin).collect()
}

/// Whether a `spin` cluster joins the opposite sides of the window.
pub fn has_crossing(w: &SpinWindow, direction: Direction, spin: i8, adjacency: Adjacency) -> bool {
    let rect = w.rect();
    let open = spin_mask(w, spin);
    let sides = rect.sides();
    let (from, to) = match direction {
        Direction::Horizontal => (sides.left, sides.right),
        Direction::Vertical => (sides.bottom, sides.top),
    };
    let seen = reach(&rect, &open, adjacency, from.iter().map(|v| rect.index(*v).unwrap()));
    to.iter().any(|v| seen[rect.index(*v).unwrap()])
}

/// Exactly one of {horizontal `+` crossing, vertical `-*` crossing} holds.
pub fn crossing_complement_check(w: &SpinWindow) -> bool {
    has_crossing(w, Direction::Horizontal, 1, Adjacency::Ordinary)
        != has_crossing(w, Direction::Vertical, -1, Adjacency::Star)
}

/// Whether a single `spin` cluster meets both vertex sets.
pub fn connects(w: &SpinWindow, from: &[Vertex], to: &[Vertex], spin: i8, adjacency: Adjacency) -> Result<bool> {
    let rect = w.rect();
    let inside = |set: &[Vertex]| -> Vec<usize> { set.iter().filter_map(|v| rect.index(*v)).collect() };
    let (from, to) = (inside(from), inside(to));
    if from.is_empty() || to.is_empty() {
        return Err(Error::Geometry(format!(
            "connection endpoints do not intersect window {rect}"
        )));
    }
    let open = spin_mask(w, spin);
    let seen = reach(&rect, &open, adjacency, from);
    Ok(to.iter().any(|&i| seen[i]))
}

/// Size of the `spin` cluster of `v` and whether it touches the window border.
pub fn cluster_of(w: &SpinWindow, v: Vertex, spin: i8, adjacency: Adjacency) -> (usize, bool) {
    let rect = w.rect();
    let Some(i) = rect.index(v) else {
        return (0, false);
    };
    let open = spin_mask(w, spin);
    let seen = reach(&rect, &open, adjacency, [i]);
    let mut size = 0;
    let mut border = false;
    for (j, &s) in seen.iter().enumerate() {
        if s {
            size += 1;
            border |= rect.on_border(rect.vertex(j));
        }
    }
    (size, border)
}

/// Whether the annulus `outer \ inner` holds a `spin` circuit (under
/// `adjacency`) surrounding `inner`.
///
/// Decided by the dual criterion: no opposite-spin path under the dual
/// adjacency runs through the annulus from next to `inner` to the outer
/// border.
pub fn has_circuit(w: &SpinWindow, inner: &Rect, outer: &Rect, spin: i8, adjacency: Adjacency) -> Result<bool> {
    let annulus = crate::grid::Annulus::new(*inner, *outer)?;
    if !w.rect().contains_rect(outer) {
        return Err(Error::Geometry(format!("outer box {outer} is not inside window {}", w.rect())));
    }
    let dual = adjacency.dual();
    let rect = *outer;
    let spins: Vec<i8> = rect.vertices().map(|v| w.spin(v).unwrap()).collect();
    let open: Vec<bool> = rect
        .vertices()
        .zip(&spins)
        .map(|(v, &s)| s != spin && annulus.contains(v))
        .collect();
    let touches_inner = |v: Vertex| v.neighbors(dual).any(|u| inner.contains(u));
    let seeds = rect
        .vertices()
        .enumerate()
        .filter(|&(_, v)| annulus.contains(v) && touches_inner(v))
        .map(|(i, _)| i);
    let seen = reach(&rect, &open, dual, seeds);
    let blocked = rect
        .vertices()
        .enumerate()
        .any(|(i, v)| seen[i] && rect.on_border(v));
    Ok(!blocked)
}
