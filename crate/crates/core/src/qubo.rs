//! Sparse quadratic models over named binary variables.
//!
//! A [`QuboBuilder`] accumulates terms against a [`VariableRegistry`]; once
//! finished it yields an immutable [`QuadraticModel`] with upper-triangular
//! pair storage and per-variable adjacency for fast single-flip updates.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structured variable name: kind tag plus index tuple.
///
/// Edge indices refer to positions in [`crate::graph::PowerGraph::edges`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    /// Free-standing variable, used by callers outside the partition models.
    Bit(usize),
    /// Slack bit `bit` of an anonymous penalty group.
    Slack { group: usize, bit: usize },
    /// Vertex `vertex` is in partition `part`.
    V { vertex: usize, part: usize },
    /// Balancing slack bit `bit` of partition `part`.
    X { bit: usize, part: usize },
    /// Flow direction bit of `edge` for partition `part`.
    F { edge: usize, part: usize },
    /// `v(n, p) * v(m, q)` for edge `{n, m}`.
    A { edge: usize, p: usize, q: usize },
    /// `f(e, p) * a(e, p, q)`.
    Y { edge: usize, p: usize, q: usize },
    /// `f(e, p) * a(e, q, p)`.
    Z { edge: usize, p: usize, q: usize },
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::Bit(i) => write!(f, "b({i})"),
            Var::Slack { group, bit } => write!(f, "s({group},{bit})"),
            Var::V { vertex, part } => write!(f, "v({vertex},{part})"),
            Var::X { bit, part } => write!(f, "x({bit},{part})"),
            Var::F { edge, part } => write!(f, "f({edge},{part})"),
            Var::A { edge, p, q } => write!(f, "a({edge},{p},{q})"),
            Var::Y { edge, p, q } => write!(f, "y({edge},{p},{q})"),
            Var::Z { edge, p, q } => write!(f, "z({edge},{p},{q})"),
        }
    }
}

/// Bijection between variable names and dense indices, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariableRegistry {
    vars: IndexSet<Var>,
}

impl VariableRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `var` if needed and returns its index.
    pub fn register(&mut self, var: Var) -> usize {
        self.vars.insert_full(var).0
    }

    pub fn index(&self, var: &Var) -> Option<usize> {
        self.vars.get_index_of(var)
    }

    pub fn require(&self, var: &Var) -> Result<usize> {
        self.index(var)
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))
    }

    pub fn var(&self, index: usize) -> Option<Var> {
        self.vars.get_index(index).copied()
    }

    pub fn contains(&self, var: &Var) -> bool {
        self.vars.contains(var)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Var)> + '_ {
        self.vars.iter().copied().enumerate()
    }
}

/// Affine expression `constant + Σ coef · x_i` over variable indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn push(&mut self, index: usize, coef: f64) -> &mut Self {
        self.terms.push((index, coef));
        self
    }

    pub fn add_constant(&mut self, value: f64) -> &mut Self {
        self.constant += value;
        self
    }

    pub fn scale(&mut self, factor: f64) -> &mut Self {
        for (_, c) in &mut self.terms {
            *c *= factor;
        }
        self.constant *= factor;
        self
    }

    /// Merges repeated indices and drops zero coefficients, sorted by index.
    pub fn merged(&self) -> LinearExpr {
        let mut acc: Vec<(usize, f64)> = self.terms.clone();
        acc.sort_by_key(|&(i, _)| i);
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(acc.len());
        for (i, c) in acc {
            match terms.last_mut() {
                Some((j, d)) if *j == i => *d += c,
                _ => terms.push((i, c)),
            }
        }
        terms.retain(|&(_, c)| c != 0.0);
        LinearExpr {
            terms,
            constant: self.constant,
        }
    }

    pub fn evaluate(&self, x: &[bool]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .filter(|&&(i, _)| x[i])
                .map(|&(_, c)| c)
                .sum::<f64>()
    }
}

/// Mutable accumulator of QUBO terms.
#[derive(Debug, Clone, Default)]
pub struct QuboBuilder {
    registry: VariableRegistry,
    linear: Vec<f64>,
    quadratic: HashMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn registry(&self) -> &VariableRegistry {
        &self.registry
    }

    pub fn add_variable(&mut self, var: Var) -> usize {
        let idx = self.registry.register(var);
        if idx == self.linear.len() {
            self.linear.push(0.0);
        }
        idx
    }

    pub fn index(&self, var: &Var) -> Result<usize> {
        self.registry.require(var)
    }

    pub fn num_variables(&self) -> usize {
        self.registry.len()
    }

    /// Adds `coef · Π variables` for 0, 1 or 2 registered variables.
    pub fn add_term(&mut self, variables: &[Var], coef: f64) -> Result<()> {
        if !coef.is_finite() {
            return Err(Error::Parameter(format!("non-finite coefficient {coef}")));
        }
        match variables {
            [] => {
                self.offset += coef;
                Ok(())
            }
            [a] => {
                let i = self.index(a)?;
                self.add_linear(i, coef);
                Ok(())
            }
            [a, b] => {
                let i = self.index(a)?;
                let j = self.index(b)?;
                self.add_quadratic(i, j, coef);
                Ok(())
            }
            more => Err(Error::Degree(more.len())),
        }
    }

    pub fn add_offset(&mut self, value: f64) {
        self.offset += value;
    }

    pub fn add_linear(&mut self, i: usize, coef: f64) {
        self.linear[i] += coef;
    }

    /// Adds `coef · x_i · x_j`; `i == j` folds into the linear term.
    pub fn add_quadratic(&mut self, i: usize, j: usize, coef: f64) {
        if i == j {
            self.linear[i] += coef;
            return;
        }
        let key = if i < j { (i, j) } else { (j, i) };
        *self.quadratic.entry(key).or_insert(0.0) += coef;
    }

    /// Adds `weight · expr²`, using `x² = x` on the diagonal.
    pub fn add_squared(&mut self, expr: &LinearExpr, weight: f64) {
        let e = expr.merged();
        let c = e.constant;
        self.offset += weight * c * c;
        for (k, &(i, a)) in e.terms.iter().enumerate() {
            self.linear[i] += weight * (a * a + 2.0 * a * c);
            for &(j, b) in &e.terms[k + 1..] {
                self.add_quadratic(i, j, 2.0 * weight * a * b);
            }
        }
    }

    /// Adds `weight · expr`.
    pub fn add_linear_expr(&mut self, expr: &LinearExpr, weight: f64) {
        self.offset += weight * expr.constant;
        for &(i, a) in &expr.terms {
            self.linear[i] += weight * a;
        }
    }

    /// Freezes the model, pruning zero coefficients.
    pub fn finish(self) -> (QuadraticModel, VariableRegistry) {
        let mut quadratic: Vec<(usize, usize, f64)> = self
            .quadratic
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|((i, j), c)| (i, j, c))
            .collect();
        quadratic.sort_by_key(|&(i, j, _)| (i, j));
        let model = QuadraticModel::from_parts(self.linear, quadratic, self.offset)
            .expect("builder keeps indices in range");
        (model, self.registry)
    }
}

/// Finalized QUBO: `offset + Σ linear_i x_i + Σ_{i<j} q_ij x_i x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    linear: Vec<f64>,
    quadratic: Vec<(usize, usize, f64)>,
    offset: f64,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl QuadraticModel {
    /// Builds a model from raw parts. Pairs are normalized to `i < j`,
    /// repeated pairs are summed, diagonal pairs fold into the linear part and
    /// zero coefficients are dropped.
    pub fn from_parts(
        mut linear: Vec<f64>,
        pairs: Vec<(usize, usize, f64)>,
        offset: f64,
    ) -> Result<Self> {
        let n = linear.len();
        let mut acc: HashMap<(usize, usize), f64> = HashMap::with_capacity(pairs.len());
        for (i, j, c) in pairs {
            if i >= n || j >= n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: i.max(j) + 1,
                });
            }
            if i == j {
                linear[i] += c;
            } else {
                *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
            }
        }
        let mut quadratic: Vec<(usize, usize, f64)> = acc
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|((i, j), c)| (i, j, c))
            .collect();
        quadratic.sort_by_key(|&(i, j, _)| (i, j));
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j, c) in &quadratic {
            neighbors[i].push((j, c));
            neighbors[j].push((i, c));
        }
        Ok(Self {
            linear,
            quadratic,
            offset,
            neighbors,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.linear.len()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn evaluate(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.linear.len() {
            return Err(Error::Dimension {
                expected: self.linear.len(),
                actual: x.len(),
            });
        }
        Ok(self.energy(x))
    }

    /// Evaluation without the length check.
    pub fn energy(&self, x: &[bool]) -> f64 {
        let mut e = self.offset;
        for (i, &c) in self.linear.iter().enumerate() {
            if x[i] {
                e += c;
            }
        }
        for &(i, j, c) in &self.quadratic {
            if x[i] && x[j] {
                e += c;
            }
        }
        e
    }

    /// `field_i = linear_i + Σ_j q_ij x_j`; flipping `i` changes the energy
    /// by `(1 − 2 x_i) · field_i`.
    pub fn local_fields(&self, x: &[bool]) -> Vec<f64> {
        (0..self.linear.len())
            .map(|i| {
                self.linear[i]
                    + self.neighbors[i]
                        .iter()
                        .filter(|&&(j, _)| x[j])
                        .map(|&(_, c)| c)
                        .sum::<f64>()
            })
            .collect()
    }

    #[inline]
    pub fn flip_delta(&self, x: &[bool], fields: &[f64], i: usize) -> f64 {
        if x[i] {
            -fields[i]
        } else {
            fields[i]
        }
    }

    /// Flips bit `i`, updating neighbor fields; returns the energy change.
    #[inline]
    pub fn apply_flip(&self, x: &mut [bool], fields: &mut [f64], i: usize) -> f64 {
        let delta = self.flip_delta(x, fields, i);
        x[i] = !x[i];
        let sign = if x[i] { 1.0 } else { -1.0 };
        for &(j, c) in &self.neighbors[i] {
            fields[j] += sign * c;
        }
        delta
    }

    /// Mean and smallest significant absolute coefficient over all linear
    /// and quadratic terms. Magnitudes below `1e-9 · max` are ignored.
    pub fn coefficient_scales(&self) -> Option<(f64, f64)> {
        let mags: Vec<f64> = self
            .linear
            .iter()
            .copied()
            .chain(self.quadratic.iter().map(|&(_, _, c)| c))
            .map(f64::abs)
            .filter(|&c| c > 0.0)
            .collect();
        let max = mags.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return None;
        }
        let significant: Vec<f64> = mags.into_iter().filter(|&c| c >= 1e-9 * max).collect();
        let mean = significant.iter().sum::<f64>() / significant.len() as f64;
        let min = significant.iter().copied().fold(f64::INFINITY, f64::min);
        Some((mean, min))
    }

    /// Writes the line-oriented text form:
    ///
    /// ```text
    /// # vars <V>
    /// c <offset>
    /// l <i> <coef>
    /// q <i> <j> <coef>
    /// ```
    ///
    /// Zero linear coefficients are omitted. Lines starting with `#` are
    /// comments.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# vars {}", self.linear.len())?;
        writeln!(out, "c {}", self.offset)?;
        for (i, &c) in self.linear.iter().enumerate() {
            if c != 0.0 {
                writeln!(out, "l {i} {c}")?;
            }
        }
        for &(i, j, c) in &self.quadratic {
            writeln!(out, "q {i} {j} {c}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut offset = 0.0;
        let mut linear: Vec<(usize, f64)> = Vec::new();
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        let bad = |row: usize, message: String| Error::Parse {
            source_name: "qubo".to_string(),
            row,
            message,
        };
        for (lineno, line) in input.lines().enumerate() {
            let row = lineno + 1;
            let line = line.map_err(|e| Error::io("qubo", e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                if parts.next() == Some("vars") {
                    let n = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad(row, "malformed vars comment".into()))?;
                    declared = Some(n);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| bad(row, format!("bad number {s:?}")))
            };
            let idx = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .map_err(|_| bad(row, format!("bad index {s:?}")))
            };
            match fields.as_slice() {
                ["c", v] => offset += num(v)?,
                ["l", i, v] => linear.push((idx(i)?, num(v)?)),
                ["q", i, j, v] => pairs.push((idx(i)?, idx(j)?, num(v)?)),
                _ => return Err(bad(row, format!("unrecognized line {line:?}"))),
            }
        }
        let inferred = linear
            .iter()
            .map(|&(i, _)| i + 1)
            .chain(pairs.iter().map(|&(i, j, _)| i.max(j) + 1))
            .max()
            .unwrap_or(0);
        let n = declared.unwrap_or(inferred);
        if inferred > n {
            return Err(Error::Dimension {
                expected: n,
                actual: inferred,
            });
        }
        let mut lin = vec![0.0; n];
        for (i, c) in linear {
            lin[i] += c;
        }
        Self::from_parts(lin, pairs, offset)
    }
}
