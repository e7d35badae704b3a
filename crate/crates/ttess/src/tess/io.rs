//! Plain-text state format.
//!
//! ```text
//! ttess-state v1
//! domain <n>
//! <x> <y>          (n lines, counter-clockwise)
//! segments <k>
//! <theta> <p> <ax> <ay> <bx> <by> <m> [<jx> <jy>]...
//! end
//! ```
//!
//! One line per internal segment: supporting line in (theta, p) coordinates,
//! the two extremities tail-to-head, then the `m` interior junction points
//! where other segments abut. Junction points are informative; reload
//! rederives the subdivision from the segment geometry.
//!
//! Chain snapshot files concatenate such blocks, each preceded by a line
//! `state <iteration>`.

use super::build::{BuildError, SegmentSpec};
use super::TTessellation;
use crate::geom::{Line, Point, Polygon};
use crate::real::Real;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("state could not be assembled: {0}")]
    Build(#[from] BuildError),
}

pub fn serialize_tessellation<S: Real>(t: &TTessellation<S>) -> String {
    let mut out = String::new();
    out.push_str("ttess-state v1\n");
    let vs = t.domain.vertices();
    writeln!(out, "domain {}", vs.len()).unwrap();
    for v in vs {
        writeln!(out, "{} {}", v.x, v.y).unwrap();
    }
    let mut seg_ids = t.internal_segment_ids();
    seg_ids.sort();
    writeln!(out, "segments {}", seg_ids.len()).unwrap();
    for s in seg_ids {
        let seg = t.segment(s);
        let (a, b) = t.segment_extremities(s);
        write!(
            out,
            "{} {} {} {} {} {}",
            seg.line.theta, seg.line.p, a.x, a.y, b.x, b.y
        )
        .unwrap();
        let inner: Vec<Point<S>> = seg.edges[..seg.edges.len() - 1]
            .iter()
            .map(|e| t.vertex(t.edge(*e).ends[1]).position)
            .collect();
        write!(out, " {}", inner.len()).unwrap();
        for p in inner {
            write!(out, " {} {}", p.x, p.y).unwrap();
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

struct Cursor<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            lines: text.lines().enumerate().peekable(),
        }
    }

    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.lines.by_ref() {
            let s = raw.trim();
            if !s.is_empty() && !s.starts_with('#') {
                return Some((i + 1, s));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), IoError> {
        self.next_content().ok_or_else(|| IoError::Parse {
            line: 0,
            msg: format!("unexpected end of input, expected {what}"),
        })
    }
}

fn parse_scalar<S: Real>(tok: &str, line: usize) -> Result<S, IoError> {
    S::parse(tok).ok_or_else(|| IoError::Parse {
        line,
        msg: format!("bad number `{tok}`"),
    })
}

fn parse_count(tok: &str, line: usize) -> Result<usize, IoError> {
    tok.parse().map_err(|_| IoError::Parse {
        line,
        msg: format!("bad count `{tok}`"),
    })
}

fn parse_block<S: Real>(cur: &mut Cursor) -> Result<TTessellation<S>, IoError> {
    let (ln, header) = cur.expect("header")?;
    if header != "ttess-state v1" {
        return Err(IoError::Parse {
            line: ln,
            msg: format!("unknown header `{header}`"),
        });
    }
    let (ln, dom) = cur.expect("domain")?;
    let n = match dom.strip_prefix("domain ") {
        Some(rest) => parse_count(rest.trim(), ln)?,
        None => {
            return Err(IoError::Parse {
                line: ln,
                msg: "expected `domain <n>`".into(),
            })
        }
    };
    let mut vs = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, row) = cur.expect("domain vertex")?;
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(IoError::Parse {
                line: ln,
                msg: "expected `<x> <y>`".into(),
            });
        }
        vs.push(Point::new(
            parse_scalar(toks[0], ln)?,
            parse_scalar(toks[1], ln)?,
        ));
    }
    let domain = Polygon::convex_domain(vs).map_err(|e| IoError::Parse {
        line: ln,
        msg: format!("bad domain: {e}"),
    })?;
    let (ln, seg_header) = cur.expect("segments")?;
    let k = match seg_header.strip_prefix("segments ") {
        Some(rest) => parse_count(rest.trim(), ln)?,
        None => {
            return Err(IoError::Parse {
                line: ln,
                msg: "expected `segments <k>`".into(),
            })
        }
    };
    let mut specs = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, row) = cur.expect("segment")?;
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() < 7 {
            return Err(IoError::Parse {
                line: ln,
                msg: "segment row needs at least 7 fields".into(),
            });
        }
        let theta: S = parse_scalar(toks[0], ln)?;
        let p: S = parse_scalar(toks[1], ln)?;
        let a = Point::new(parse_scalar(toks[2], ln)?, parse_scalar(toks[3], ln)?);
        let b = Point::new(parse_scalar(toks[4], ln)?, parse_scalar(toks[5], ln)?);
        let m = parse_count(toks[6], ln)?;
        if toks.len() != 7 + 2 * m {
            return Err(IoError::Parse {
                line: ln,
                msg: format!(
                    "expected {} junction coordinates, got {}",
                    2 * m,
                    toks.len() - 7
                ),
            });
        }
        specs.push(SegmentSpec {
            line: Line::new(theta, p),
            a,
            b,
        });
    }
    let (ln, end) = cur.expect("end")?;
    if end != "end" {
        return Err(IoError::Parse {
            line: ln,
            msg: format!("expected `end`, got `{end}`"),
        });
    }
    Ok(TTessellation::from_internal_segments(domain, &specs)?)
}

pub fn parse_tessellation<S: Real>(text: &str) -> Result<TTessellation<S>, IoError> {
    parse_block(&mut Cursor::new(text))
}

/// Parse a snapshot stream: repeated `state <iteration>` blocks.
pub fn parse_snapshots<S: Real>(text: &str) -> Result<Vec<(u64, TTessellation<S>)>, IoError> {
    let mut cur = Cursor::new(text);
    let mut out = Vec::new();
    while let Some((ln, row)) = cur.next_content() {
        let iter = match row.strip_prefix("state ") {
            Some(rest) => rest.trim().parse::<u64>().map_err(|_| IoError::Parse {
                line: ln,
                msg: format!("bad iteration `{rest}`"),
            })?,
            None => {
                return Err(IoError::Parse {
                    line: ln,
                    msg: format!("expected `state <iteration>`, got `{row}`"),
                })
            }
        };
        out.push((iter, parse_block(&mut cur)?));
    }
    Ok(out)
}

/// Serialize one snapshot block of a chain stream.
pub fn snapshot_block<S: Real>(iteration: u64, t: &TTessellation<S>) -> String {
    format!("state {}\n{}", iteration, serialize_tessellation(t))
}

impl<S: Real> TTessellation<S> {
    /// Geometric equality: same domain, same internal segments (matched by
    /// supporting line) with extremities within `eps`.
    pub fn geometry_eq(&self, other: &TTessellation<S>, eps: S) -> bool {
        let a = self.segment_signature();
        let b = other.segment_signature();
        if a.len() != b.len() {
            return false;
        }
        let mut used = vec![false; b.len()];
        'outer: for sa in &a {
            for (i, sb) in b.iter().enumerate() {
                if used[i] {
                    continue;
                }
                if sa.0.approx_eq(sb.0, &self.tol)
                    && sa.1.dist(sb.1) <= eps
                    && sa.2.dist(sb.2) <= eps
                {
                    used[i] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }

    pub(crate) fn segment_signature(&self) -> Vec<(Line<S>, Point<S>, Point<S>)> {
        self.internal_segment_ids()
            .into_iter()
            .map(|s| {
                let (a, b) = self.segment_extremities(s);
                (self.segment(s).line, a, b)
            })
            .collect()
    }
}
