//! Plain-text surface format.
//!
//! ```text
//! nurbs-surface
//! degrees 2 2
//! knots-u 0 0 0 1 1 1
//! knots-v 0 0 0 1 1 1
//! grid 3 3
//! x y z w        <- one line per control point, u index fastest
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Numbers are written with
//! Rust's shortest round-trip formatting, so a write/read cycle is lossless.

use std::fmt::Write as _;

use super::knots::KnotVector;
use super::surface::{Direction, NurbsSurface};
use crate::error::{Result, ShellError};

const MAGIC: &str = "nurbs-surface";

impl NurbsSurface {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (pu, pv) = self.degrees();
        let (nu, nv) = self.grid();
        let join = |k: &[f64]| k.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "degrees {pu} {pv}").unwrap();
        writeln!(s, "knots-u {}", join(self.knots(Direction::U).knots())).unwrap();
        writeln!(s, "knots-v {}", join(self.knots(Direction::V).knots())).unwrap();
        writeln!(s, "grid {nu} {nv}").unwrap();
        for c in self.control_points() {
            writeln!(s, "{:?} {:?} {:?} {:?}", c[0], c[1], c[2], c[3]).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let mut next = |what: &str| {
            lines.next().ok_or_else(|| ShellError::Parse {
                line: 0,
                msg: format!("unexpected end of input, expected {what}"),
            })
        };

        let (line, head) = next("header")?;
        if head != MAGIC {
            return Err(ShellError::Parse {
                line,
                msg: format!("expected '{MAGIC}'"),
            });
        }
        let (line, deg) = next("degrees")?;
        let degs: Vec<usize> = keyed(line, deg, "degrees")?;
        let (line, ku) = next("knots-u")?;
        let ku: Vec<f64> = keyed(line, ku, "knots-u")?;
        let (line, kv) = next("knots-v")?;
        let kv: Vec<f64> = keyed(line, kv, "knots-v")?;
        let (gline, grid) = next("grid")?;
        let grid: Vec<usize> = keyed(gline, grid, "grid")?;
        if degs.len() != 2 || grid.len() != 2 {
            return Err(ShellError::Parse {
                line: gline,
                msg: "degrees and grid take two integers each".into(),
            });
        }
        let ku = KnotVector::new(ku, degs[0])?;
        let kv = KnotVector::new(kv, degs[1])?;
        if (ku.num_basis(), kv.num_basis()) != (grid[0], grid[1]) {
            return Err(ShellError::Parse {
                line: gline,
                msg: format!(
                    "grid {}x{} does not match knot vectors ({}x{})",
                    grid[0],
                    grid[1],
                    ku.num_basis(),
                    kv.num_basis()
                ),
            });
        }
        let mut control = Vec::with_capacity(grid[0] * grid[1]);
        for _ in 0..grid[0] * grid[1] {
            let (line, row) = next("control point")?;
            let v = numbers::<f64>(line, row)?;
            if v.len() != 4 {
                return Err(ShellError::Parse {
                    line,
                    msg: format!("expected 'x y z w', found {} values", v.len()),
                });
            }
            control.push([v[0], v[1], v[2], v[3]]);
        }
        if let Some((line, _)) = lines.next() {
            return Err(ShellError::Parse {
                line,
                msg: "trailing content after control grid".into(),
            });
        }
        NurbsSurface::new(ku, kv, control)
    }
}

fn keyed<T: std::str::FromStr>(line: usize, text: &str, key: &str) -> Result<Vec<T>> {
    let rest = text.strip_prefix(key).ok_or_else(|| ShellError::Parse {
        line,
        msg: format!("expected '{key}'"),
    })?;
    numbers(line, rest)
}

fn numbers<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| ShellError::Parse {
                line,
                msg: format!("cannot parse '{tok}'"),
            })
        })
        .collect()
}
