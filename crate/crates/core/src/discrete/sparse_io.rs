//! Plain-text sparse format for complexes and chains.
//!
//! ```text
//! %%systole-sparse 1
//! %%meta <key> <value>
//! %%sparse <name> <rows> <cols> <nnz>
//! <row> <col> <value>        (nnz lines, zero-based)
//! %%chain <name> <len> <nnz>
//! <index> <value>            (nnz lines, zero-based)
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Values are written
//! with round-trip precision.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::complex::{Chain2, CubicalComplex};
use crate::error::{Result, SystoleError};

const MAGIC: &str = "%%systole-sparse 1";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub len: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn from_dense(v: &[f64]) -> Self {
        SparseVector { len: v.len(), entries: v.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect() }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseDocument {
    pub meta: BTreeMap<String, String>,
    pub matrices: BTreeMap<String, SparseMatrix>,
    pub chains: BTreeMap<String, SparseVector>,
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(SystoleError::InvalidArgument(format!("bad section name {name:?}")));
    }
    Ok(())
}

impl SparseDocument {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        for (k, v) in &self.meta {
            check_name(k)?;
            writeln!(w, "%%meta {k} {v}")?;
        }
        for (name, m) in &self.matrices {
            check_name(name)?;
            writeln!(w, "%%sparse {name} {} {} {}", m.rows, m.cols, m.triplets.len())?;
            for (r, c, v) in &m.triplets {
                writeln!(w, "{r} {c} {v:?}")?;
            }
        }
        for (name, ch) in &self.chains {
            check_name(name)?;
            writeln!(w, "%%chain {name} {} {}", ch.len, ch.entries.len())?;
            for (i, v) in &ch.entries {
                writeln!(w, "{i} {v:?}")?;
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(n, l)| l.map(|l| (n + 1, l)))
            .filter(|l| !matches!(l, Ok((_, s)) if s.trim().is_empty() || s.starts_with('#')));
        let bad = |n: usize, msg: &str| SystoleError::Io(format!("line {n}: {msg}"));
        match lines.next() {
            Some(Ok((_, l))) if l.trim() == MAGIC => {}
            Some(Ok((n, _))) => return Err(bad(n, "missing header")),
            Some(Err(e)) => return Err(e.into()),
            None => return Err(bad(0, "empty input")),
        }
        let mut doc = SparseDocument::default();
        fn num<T: std::str::FromStr>(tok: Option<&str>, n: usize) -> Result<T> {
            tok.and_then(|t| t.parse().ok()).ok_or_else(|| SystoleError::Io(format!("line {n}: expected a number")))
        }
        while let Some(line) = lines.next() {
            let (n, line) = line?;
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("%%meta") => {
                    let key = tok.next().ok_or_else(|| bad(n, "meta key missing"))?;
                    let value: Vec<&str> = tok.collect();
                    doc.meta.insert(key.to_string(), value.join(" "));
                }
                Some("%%sparse") => {
                    let name = tok.next().ok_or_else(|| bad(n, "name missing"))?.to_string();
                    let rows: usize = num(tok.next(), n)?;
                    let cols: usize = num(tok.next(), n)?;
                    let nnz: usize = num(tok.next(), n)?;
                    let mut triplets = Vec::with_capacity(nnz);
                    for _ in 0..nnz {
                        let (n, l) = lines.next().ok_or_else(|| bad(n, "truncated matrix"))??;
                        let mut t = l.split_whitespace();
                        let (i, j, v): (usize, usize, f64) = (num(t.next(), n)?, num(t.next(), n)?, num(t.next(), n)?);
                        if i >= rows || j >= cols {
                            return Err(bad(n, "index out of range"));
                        }
                        triplets.push((i, j, v));
                    }
                    doc.matrices.insert(name, SparseMatrix { rows, cols, triplets });
                }
                Some("%%chain") => {
                    let name = tok.next().ok_or_else(|| bad(n, "name missing"))?.to_string();
                    let len: usize = num(tok.next(), n)?;
                    let nnz: usize = num(tok.next(), n)?;
                    let mut entries = Vec::with_capacity(nnz);
                    for _ in 0..nnz {
                        let (n, l) = lines.next().ok_or_else(|| bad(n, "truncated chain"))??;
                        let mut t = l.split_whitespace();
                        let (i, v): (usize, f64) = (num(t.next(), n)?, num(t.next(), n)?);
                        if i >= len {
                            return Err(bad(n, "index out of range"));
                        }
                        entries.push((i, v));
                    }
                    doc.chains.insert(name, SparseVector { len, entries });
                }
                _ => return Err(bad(n, "unexpected line")),
            }
        }
        Ok(doc)
    }
}

/// Boundary matrices, face weights and cube volumes of a complex.
pub fn complex_document(c: &CubicalComplex) -> SparseDocument {
    let r = c.resolution;
    let mut doc = SparseDocument::default();
    doc.meta.insert("resolution".into(), format!("{} {} {}", r.nx, r.ny, r.nz));
    doc.meta.insert("x_length".into(), format!("{:?}", c.x_length));
    for (name, m) in [("boundary2", &c.boundary2), ("boundary3", &c.boundary3)] {
        doc.matrices.insert(
            name.into(),
            SparseMatrix {
                rows: m.rows,
                cols: m.cols(),
                triplets: m.triplets().map(|(i, j, v)| (i, j, v as f64)).collect(),
            },
        );
    }
    doc.chains.insert("face_weights".into(), SparseVector::from_dense(&c.face_weights));
    doc.chains.insert("cube_volumes".into(), SparseVector::from_dense(&c.cube_volumes));
    doc
}

pub fn chain_vector(c: &CubicalComplex, chain: &Chain2) -> SparseVector {
    SparseVector { len: c.num_faces(), entries: chain.coefficients.iter().map(|(&i, &v)| (i, v)).collect() }
}
