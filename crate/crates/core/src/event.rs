//! Events on a box, their text syntax, and evaluation on spin windows.
//!
//! Syntax (sizes are `n x m` for the box `[0, n] x [0, m]`):
//!
//! | text            | event                                                     |
//! |-----------------|-----------------------------------------------------------|
//! | `H:48x16`       | horizontal `+` crossing of `[0,48] x [0,16]`              |
//! | `V:48x16`       | vertical `+` crossing                                     |
//! | `Hstar:48x16`   | horizontal `-*` crossing                                  |
//! | `Vstar:48x16`   | vertical `-*` crossing                                    |
//! | `Hplus*:48x16`  | horizontal `+*` crossing (`Vplus*` likewise)              |
//! | `conn:8`        | origin joined by `+` to the outer layer of `B(8)`         |
//! | `circuit:2:8`   | `+` circuit in `A(2, 8)` surrounding `B(2)`               |
//! | `site`          | the origin is `+`                                         |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Adjacency, Rect, Vertex};
use crate::models::SpinWindow;
use crate::percolation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Horizontal,
    Vertical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Crossing {
        direction: Direction,
        spin: i8,
        adjacency: Adjacency,
    },
    Connects {
        from: Vec<Vertex>,
        to: Vec<Vertex>,
        spin: i8,
        adjacency: Adjacency,
    },
    /// Circuit in the annulus between `inner` and the event box.
    Circuit {
        inner: Rect,
        spin: i8,
        adjacency: Adjacency,
    },
    Site {
        vertex: Vertex,
        spin: i8,
    },
    Always,
}

/// An event determined by the spins inside `rect`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub rect: Rect,
    pub kind: EventKind,
}

impl Event {
    pub fn crossing(rect: Rect, direction: Direction, spin: i8, adjacency: Adjacency) -> Self {
        Event {
            rect,
            kind: EventKind::Crossing {
                direction,
                spin,
                adjacency,
            },
        }
    }

    /// `H(n, m)`.
    pub fn horizontal(n: u32, m: u32) -> Self {
        Event::crossing(Rect::crossing_box(n, m), Direction::Horizontal, 1, Adjacency::Ordinary)
    }

    /// `V(n, m)`.
    pub fn vertical(n: u32, m: u32) -> Self {
        Event::crossing(Rect::crossing_box(n, m), Direction::Vertical, 1, Adjacency::Ordinary)
    }

    /// `H^{-*}(n, m)`.
    pub fn horizontal_minus_star(n: u32, m: u32) -> Self {
        Event::crossing(Rect::crossing_box(n, m), Direction::Horizontal, -1, Adjacency::Star)
    }

    /// `V^{-*}(n, m)`.
    pub fn vertical_minus_star(n: u32, m: u32) -> Self {
        Event::crossing(Rect::crossing_box(n, m), Direction::Vertical, -1, Adjacency::Star)
    }

    /// Horizontal `+*` crossing.
    pub fn horizontal_plus_star(n: u32, m: u32) -> Self {
        Event::crossing(Rect::crossing_box(n, m), Direction::Horizontal, 1, Adjacency::Star)
    }

    pub fn connects(rect: Rect, from: Vec<Vertex>, to: Vec<Vertex>) -> Self {
        Event {
            rect,
            kind: EventKind::Connects {
                from,
                to,
                spin: 1,
                adjacency: Adjacency::Ordinary,
            },
        }
    }

    /// Origin joined to the outer layer of `B(n)` by a `+` path inside `B(n)`.
    pub fn origin_to_border(n: u32) -> Self {
        let rect = Rect::centered(n);
        let s = rect.sides();
        let mut to: Vec<Vertex> = [s.left, s.right, s.top, s.bottom].concat();
        to.sort();
        to.dedup();
        Event::connects(rect, vec![Vertex::ORIGIN], to)
    }

    /// `+` circuit in `A(k, n)` surrounding `B(k)`.
    pub fn circuit(k: u32, n: u32) -> Result<Self> {
        crate::grid::Annulus::centered(k, n)?;
        Ok(Event {
            rect: Rect::centered(n),
            kind: EventKind::Circuit {
                inner: Rect::centered(k),
                spin: 1,
                adjacency: Adjacency::Ordinary,
            },
        })
    }

    pub fn site(vertex: Vertex, spin: i8) -> Self {
        Event {
            rect: Rect::single(vertex),
            kind: EventKind::Site { vertex, spin },
        }
    }

    pub fn always(rect: Rect) -> Self {
        Event {
            rect,
            kind: EventKind::Always,
        }
    }

    /// Increasing in the spins (structural: every `+` event is).
    pub fn is_increasing(&self) -> bool {
        match &self.kind {
            EventKind::Crossing { spin, .. }
            | EventKind::Connects { spin, .. }
            | EventKind::Circuit { spin, .. }
            | EventKind::Site { spin, .. } => *spin == 1,
            EventKind::Always => true,
        }
    }

    /// Evaluates on a window whose box is exactly the event box.
    pub fn occurs_exact(&self, w: &SpinWindow) -> Result<bool> {
        debug_assert_eq!(w.rect(), self.rect);
        Ok(match &self.kind {
            EventKind::Crossing {
                direction,
                spin,
                adjacency,
            } => percolation::has_crossing(w, *direction, *spin, *adjacency),
            EventKind::Connects {
                from,
                to,
                spin,
                adjacency,
            } => percolation::connects(w, from, to, *spin, *adjacency)?,
            EventKind::Circuit {
                inner,
                spin,
                adjacency,
            } => percolation::has_circuit(w, inner, &self.rect, *spin, *adjacency)?,
            EventKind::Site { vertex, spin } => w.spin(*vertex) == Some(*spin),
            EventKind::Always => true,
        })
    }

    /// Evaluates on any window containing the event box.
    pub fn occurs(&self, w: &SpinWindow) -> Result<bool> {
        if w.rect() == self.rect {
            self.occurs_exact(w)
        } else {
            self.occurs_exact(&w.restrict(&self.rect)?)
        }
    }

    /// `n` or box descriptor used in CSV output.
    pub fn size_label(&self) -> String {
        match &self.kind {
            EventKind::Crossing { .. } => format!("{}x{}", self.rect.width() - 1, self.rect.height() - 1),
            _ => self.rect.to_string(),
        }
    }

    /// The same event shape rescaled so that the box height is `n`
    /// (crossings only; other events are returned unchanged).
    pub fn scaled_to(&self, n: u32) -> Event {
        match &self.kind {
            EventKind::Crossing { .. } => {
                let (w, h) = (self.rect.width() as u64 - 1, self.rect.height() as u64 - 1);
                let width = if h == 0 { w } else { (w * n as u64 + h / 2) / h };
                Event {
                    rect: Rect::crossing_box(width as u32, n),
                    kind: self.kind.clone(),
                }
            }
            _ => self.clone(),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EventKind::Crossing {
                direction,
                spin,
                adjacency,
            } => {
                let d = match direction {
                    Direction::Horizontal => "H",
                    Direction::Vertical => "V",
                };
                let suffix = match (spin, adjacency) {
                    (1, Adjacency::Ordinary) => "",
                    (-1, Adjacency::Star) => "star",
                    (1, Adjacency::Star) => "plus*",
                    (_, Adjacency::Ordinary) => "minus",
                    _ => "?",
                };
                write!(f, "{d}{suffix}:{}", self.size_label())
            }
            EventKind::Connects { .. } => {
                let n = (self.rect.width() / 2) as u32;
                if *self == Event::origin_to_border(n) {
                    write!(f, "conn:{n}")
                } else {
                    write!(f, "conn:{}", self.rect)
                }
            }
            EventKind::Circuit { inner, .. } => {
                let (k, n) = ((inner.width() / 2) as u32, (self.rect.width() / 2) as u32);
                if Event::circuit(k, n).is_ok_and(|c| c == *self) {
                    write!(f, "circuit:{k}:{n}")
                } else {
                    write!(f, "circuit:{}:{}", inner, self.rect)
                }
            }
            EventKind::Site { vertex, spin } => write!(f, "site:{}:{}:{spin}", vertex.x, vertex.y),
            EventKind::Always => write!(f, "always:{}", self.rect),
        }
    }
}

impl FromStr for Event {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedEvent(s.to_string());
        let s = s.trim();
        if s == "site" {
            return Ok(Event::site(Vertex::ORIGIN, 1));
        }
        let (head, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
        let size = |t: &str| -> Result<(u32, u32)> {
            let (a, b) = t.split_once(['x', 'X']).ok_or_else(bad)?;
            Ok((num(a)?, num(b)?))
        };
        let crossing = |direction, spin, adjacency| -> Result<Event> {
            let (n, m) = size(rest)?;
            Ok(Event::crossing(Rect::crossing_box(n, m), direction, spin, adjacency))
        };
        use Adjacency::*;
        use Direction::*;
        match head {
            "H" => crossing(Horizontal, 1, Ordinary),
            "V" => crossing(Vertical, 1, Ordinary),
            "Hstar" => crossing(Horizontal, -1, Star),
            "Vstar" => crossing(Vertical, -1, Star),
            "Hplus*" => crossing(Horizontal, 1, Star),
            "Vplus*" => crossing(Vertical, 1, Star),
            "conn" => Ok(Event::origin_to_border(num(rest)?)),
            "circuit" => {
                let (k, n) = rest.split_once(':').ok_or_else(bad)?;
                Event::circuit(num(k)?, num(n)?).map_err(|_| bad())
            }
            _ => Err(bad()),
        }
    }
}
