//! The power-grid partitioning problem: constrained evaluation, QUBO
//! compilation with and without electricity sharing, and solution decoding.
//!
//! Partition variables are laid out vertex-major: `v(n, p)` sits at index
//! `n·P + p` both in partition bit vectors and in compiled registries.
//! Flow variables `f(e, p)` follow the same pattern with edge `e`.

mod compile;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use compile::{compile_qubo_plain, compile_qubo_sharing, CompiledQubo, Formulation, SlackBlock};

use crate::error::{Error, Result};
use crate::graph::PowerGraph;
use crate::qubo::{Var, VariableRegistry};

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionModel {
    graph: PowerGraph,
    parts: usize,
    alpha: f64,
    beta: f64,
    threshold: f64,
}

impl PartitionModel {
    pub fn new(graph: PowerGraph, parts: usize, alpha: f64, beta: f64, threshold: f64) -> Result<Self> {
        if parts == 0 {
            return Err(Error::Parameter("partition count must be at least 1".into()));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) || !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Parameter(format!(
                "cost coefficients must be finite and non-negative (alpha={alpha}, beta={beta})"
            )));
        }
        if !threshold.is_finite() {
            return Err(Error::Parameter("threshold must be finite".into()));
        }
        Ok(Self {
            graph,
            parts,
            alpha,
            beta,
            threshold,
        })
    }

    pub fn graph(&self) -> &PowerGraph {
        &self.graph
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_parts(&self, parts: usize) -> Result<Self> {
        Self::new(self.graph.clone(), parts, self.alpha, self.beta, self.threshold)
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Length of a partition bit vector, `P·N`.
    pub fn num_partition_bits(&self) -> usize {
        self.parts * self.graph.vertex_count()
    }

    pub fn v_index(&self, vertex: usize, part: usize) -> usize {
        vertex * self.parts + part
    }

    /// `w_n − k` for every vertex.
    pub fn excess(&self) -> Vec<f64> {
        self.graph
            .vertices()
            .iter()
            .map(|v| v.surplus - self.threshold)
            .collect()
    }

    /// Partition bits for a vertex → partition map.
    pub fn bits_from_labels(&self, labels: &[usize]) -> Result<Vec<bool>> {
        if labels.len() != self.num_vertices() {
            return Err(Error::Dimension {
                expected: self.num_vertices(),
                actual: labels.len(),
            });
        }
        let mut v = vec![false; self.num_partition_bits()];
        for (n, &p) in labels.iter().enumerate() {
            if p >= self.parts {
                return Err(Error::Parameter(format!("partition {p} out of range")));
            }
            v[self.v_index(n, p)] = true;
        }
        Ok(v)
    }
}

/// Compilation hyperparameters: Lagrange multipliers and slack bit count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub one_hot: f64,
    pub balancing: f64,
    /// Only used by the sharing formulation.
    #[serde(default)]
    pub aux: f64,
    pub slack_bits: u32,
}

impl PenaltyWeights {
    pub fn new(one_hot: f64, balancing: f64, slack_bits: u32) -> Self {
        Self {
            one_hot,
            balancing,
            aux: 0.0,
            slack_bits,
        }
    }

    pub fn with_aux(mut self, aux: f64) -> Self {
        self.aux = aux;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_oh", self.one_hot),
            ("lambda_bc", self.balancing),
            ("lambda_aux", self.aux),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} = {v} must be non-negative")));
            }
        }
        if self.slack_bits == 0 || self.slack_bits > crate::penalty::MAX_SLACK_BITS {
            return Err(Error::Parameter(format!(
                "slack bit count {} outside 1..={}",
                self.slack_bits,
                crate::penalty::MAX_SLACK_BITS
            )));
        }
        Ok(())
    }
}

/// Objective value and constraint status of a partition assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqmEvaluation {
    pub objective: f64,
    pub one_hot_violations: usize,
    pub balancing_violations: usize,
    /// `Σ_n v_np (w_n − k)` per partition.
    pub loads: Vec<f64>,
}

impl CqmEvaluation {
    pub fn violations(&self) -> usize {
        self.one_hot_violations + self.balancing_violations
    }

    pub fn is_feasible(&self) -> bool {
        self.violations() == 0
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension { expected, actual });
    }
    Ok(())
}

/// Partition cost
/// `Σ_p [ α (Σ_n v_np)² + β (|E| − Σ_{n,m} v_np v_mp) ]`.
///
/// The edge constant is counted once per partition, so this exceeds the
/// cut-edge reading `α Σ_p s_p² + β · cut` by `(P − 1) β |E|`.
pub fn objective(model: &PartitionModel, v: &[bool]) -> Result<f64> {
    check_len(model.num_partition_bits(), v.len())?;
    let parts = model.parts;
    let n = model.num_vertices();
    let edges = model.graph.edge_count() as f64;
    let mut total = 0.0;
    for p in 0..parts {
        let size = (0..n).filter(|&i| v[i * parts + p]).count() as f64;
        let internal = model
            .graph
            .edges()
            .iter()
            .filter(|e| v[e.u * parts + p] && v[e.v * parts + p])
            .count() as f64;
        total += model.alpha * size * size + model.beta * (edges - internal);
    }
    Ok(total)
}

/// The same cost with the edge constant counted once.
pub fn cut_objective(model: &PartitionModel, v: &[bool]) -> Result<f64> {
    let literal = objective(model, v)?;
    Ok(literal - (model.parts as f64 - 1.0) * model.beta * model.graph.edge_count() as f64)
}

pub fn evaluate_cqm(model: &PartitionModel, v: &[bool]) -> Result<CqmEvaluation> {
    let objective = objective(model, v)?;
    let parts = model.parts;
    let one_hot_violations = (0..model.num_vertices())
        .filter(|&n| (0..parts).filter(|&p| v[n * parts + p]).count() != 1)
        .count();
    let loads = partition_loads(model, v);
    let balancing_violations = loads.iter().filter(|&&l| l > 0.0).count();
    Ok(CqmEvaluation {
        objective,
        one_hot_violations,
        balancing_violations,
        loads,
    })
}

fn partition_loads(model: &PartitionModel, v: &[bool]) -> Vec<f64> {
    let parts = model.parts;
    let excess = model.excess();
    (0..parts)
        .map(|p| {
            excess
                .iter()
                .enumerate()
                .filter(|&(n, _)| v[n * parts + p])
                .map(|(_, &x)| x)
                .sum()
        })
        .collect()
}

/// Surplus moved from partition `p` to `q`:
/// `Σ_{n,m} w_nm (f_np − f_nq)(v_np v_mq + v_mp v_nq)` with `f` indexed
/// edge-major like `v`. `F(p, q) = −F(q, p)`.
pub fn flow_value(graph: &PowerGraph, v: &[bool], f: &[bool], p: usize, q: usize) -> f64 {
    let n = graph.vertex_count().max(1);
    let parts = v.len() / n;
    let bit = |b: bool| b as u8 as f64;
    graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let (a, b) = (edge.u, edge.v);
            let dir = bit(f[e * parts + p]) - bit(f[e * parts + q]);
            let cross = bit(v[a * parts + p] && v[b * parts + q])
                + bit(v[b * parts + p] && v[a * parts + q]);
            edge.weight * dir * cross
        })
        .sum()
}

/// Balancing status with electricity sharing: partition `p`'s load plus the
/// net inflow `Σ_{q≠p} F(q, p)` must not exceed zero. The sign follows the
/// compiled sharing penalty.
pub fn evaluate_sharing(model: &PartitionModel, v: &[bool], f: &[bool]) -> Result<CqmEvaluation> {
    let mut eval = evaluate_cqm(model, v)?;
    check_len(model.parts * model.graph.edge_count(), f.len())?;
    let parts = model.parts;
    for p in 0..parts {
        let inflow: f64 = (0..parts)
            .filter(|&q| q != p)
            .map(|q| flow_value(&model.graph, v, f, q, p))
            .sum();
        eval.loads[p] += inflow;
    }
    eval.balancing_violations = eval.loads.iter().filter(|&&l| l > 0.0).count();
    Ok(eval)
}

/// Where a vertex ended up after decoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Assigned(usize),
    Unassigned,
    Multiple(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAssignment {
    pub placements: Vec<Placement>,
    /// Partition bits in `n·P + p` layout.
    pub v_bits: Vec<bool>,
    /// Integer value of each partition's balancing slack register.
    pub slack_values: Vec<u64>,
    /// Flow bits in `e·P + p` layout (empty without sharing).
    pub flow_bits: Vec<bool>,
}

impl DecodedAssignment {
    /// Vertex → partition map when every vertex is placed exactly once.
    pub fn labels(&self) -> Option<Vec<usize>> {
        self.placements
            .iter()
            .map(|p| match p {
                Placement::Assigned(p) => Some(*p),
                _ => None,
            })
            .collect()
    }
}

/// Splits a full assignment back into partition, slack and flow parts.
///
/// Vertices without exactly one partition bit are reported as
/// [`Placement::Unassigned`] or [`Placement::Multiple`].
pub fn decode_assignment(registry: &VariableRegistry, assignment: &[bool]) -> Result<DecodedAssignment> {
    check_len(registry.len(), assignment.len())?;
    let (mut vertices, mut parts, mut edges) = (0usize, 0usize, 0usize);
    for (_, var) in registry.iter() {
        match var {
            Var::V { vertex, part } => {
                vertices = vertices.max(vertex + 1);
                parts = parts.max(part + 1);
            }
            Var::X { part, .. } => parts = parts.max(part + 1),
            Var::F { edge, part } => {
                edges = edges.max(edge + 1);
                parts = parts.max(part + 1);
            }
            _ => {}
        }
    }
    let mut v_bits = vec![false; vertices * parts];
    let mut slack_values = vec![0u64; parts];
    let mut flow_bits = vec![false; edges * parts];
    for (i, var) in registry.iter() {
        if !assignment[i] {
            continue;
        }
        match var {
            Var::V { vertex, part } => v_bits[vertex * parts + part] = true,
            Var::X { bit, part } => slack_values[part] |= 1 << bit,
            Var::F { edge, part } => flow_bits[edge * parts + part] = true,
            _ => {}
        }
    }
    let placements = (0..vertices)
        .map(|n| {
            let set: Vec<usize> = (0..parts).filter(|&p| v_bits[n * parts + p]).collect();
            match set.as_slice() {
                [] => Placement::Unassigned,
                [p] => Placement::Assigned(*p),
                _ => Placement::Multiple(set),
            }
        })
        .collect();
    Ok(DecodedAssignment {
        placements,
        v_bits,
        slack_values,
        flow_bits,
    })
}

/// Outcome of one solver run on a partition model. The objective and
/// violation counts are always recomputed from the decoded partition bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub assignment: Vec<bool>,
    pub placements: Vec<Placement>,
    pub objective: f64,
    pub one_hot_violations: usize,
    pub balancing_violations: usize,
    pub loads: Vec<f64>,
    /// QUBO energy of `assignment`, when solved in QUBO form.
    pub energy: Option<f64>,
    pub wall_time_s: f64,
    /// The run stopped at its time limit.
    pub truncated: bool,
}

impl SolveReport {
    pub fn violations(&self) -> usize {
        self.one_hot_violations + self.balancing_violations
    }

    pub fn is_feasible(&self) -> bool {
        self.violations() == 0
    }

    /// Report for a run that produced partition bits directly.
    pub fn from_partition_bits(
        model: &PartitionModel,
        v: &[bool],
        solver: impl Into<String>,
        wall_time_s: f64,
    ) -> Result<Self> {
        let eval = evaluate_cqm(model, v)?;
        let parts = model.parts;
        let placements = (0..model.num_vertices())
            .map(|n| {
                let set: Vec<usize> = (0..parts).filter(|&p| v[n * parts + p]).collect();
                match set.as_slice() {
                    [] => Placement::Unassigned,
                    [p] => Placement::Assigned(*p),
                    _ => Placement::Multiple(set),
                }
            })
            .collect();
        Ok(Self {
            solver: solver.into(),
            assignment: v.to_vec(),
            placements,
            objective: eval.objective,
            one_hot_violations: eval.one_hot_violations,
            balancing_violations: eval.balancing_violations,
            loads: eval.loads,
            energy: None,
            wall_time_s,
            truncated: false,
        })
    }

    /// Writes the JSON solution export.
    pub fn write_json<W: Write>(&self, graph: &PowerGraph, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.export(graph))?;
        Ok(())
    }

    pub fn export(&self, graph: &PowerGraph) -> SolutionExport {
        let mut partition = BTreeMap::new();
        let mut unassigned = Vec::new();
        for (vertex, placement) in graph.vertices().iter().zip(&self.placements) {
            match placement {
                Placement::Assigned(p) => {
                    partition.insert(vertex.id.clone(), *p);
                }
                _ => unassigned.push(vertex.id.clone()),
            }
        }
        SolutionExport {
            solver: self.solver.clone(),
            partition,
            unassigned,
            objective: self.objective,
            violations: ViolationCounts {
                one_hot: self.one_hot_violations,
                balancing: self.balancing_violations,
            },
            loads: self.loads.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationCounts {
    pub one_hot: usize,
    pub balancing: usize,
}

/// JSON shape of an exported solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionExport {
    pub solver: String,
    /// Vertex id → partition index.
    pub partition: BTreeMap<String, usize>,
    /// Vertices with zero or several partitions.
    pub unassigned: Vec<String>,
    pub objective: f64,
    pub violations: ViolationCounts,
    pub loads: Vec<f64>,
}
