use std::time::Instant;

use super::{FlipState, QuboSolution};
use crate::error::{Error, Result};
use crate::partition::{CompiledQubo, PartitionModel, SlackBlock, SolveReport};
use crate::qubo::QuadraticModel;

/// Largest search space either oracle will enumerate.
pub const ENUMERATION_BOUND: u64 = 10_000_000;

const REFRESH_INTERVAL: u64 = 1 << 16;

/// Enumerates every one-hot partition assignment and returns the feasible
/// one with the lowest objective (first in enumeration order on ties).
pub fn solve_exhaustive_cqm(model: &PartitionModel) -> Result<SolveReport> {
    let start = Instant::now();
    let n = model.num_vertices();
    let parts = model.parts();
    let size = (parts as f64).powi(n as i32);
    if size > ENUMERATION_BOUND as f64 {
        return Err(Error::SizeGuard {
            size,
            bound: ENUMERATION_BOUND,
        });
    }

    let excess = model.excess();
    // Neighbors with a smaller index, so each edge is counted when its later
    // endpoint is placed.
    let mut earlier = vec![Vec::new(); n];
    for e in model.graph().edges() {
        earlier[e.v].push(e.u);
    }

    let mut search = CqmSearch {
        model,
        excess: &excess,
        earlier: &earlier,
        labels: vec![0; n],
        sizes: vec![0; parts],
        internal: vec![0; parts],
        loads: vec![vec![0.0; parts]; n + 1],
        best: None,
    };
    search.descend(0);

    let (_, labels) = search.best.ok_or(Error::Infeasible)?;
    let v = model.bits_from_labels(&labels)?;
    SolveReport::from_partition_bits(model, &v, "exhaustive-cqm", start.elapsed().as_secs_f64())
}

struct CqmSearch<'a> {
    model: &'a PartitionModel,
    excess: &'a [f64],
    earlier: &'a [Vec<usize>],
    labels: Vec<usize>,
    sizes: Vec<usize>,
    internal: Vec<usize>,
    /// `loads[d]` holds partition loads after placing vertices `0..d`.
    loads: Vec<Vec<f64>>,
    best: Option<(f64, Vec<usize>)>,
}

impl CqmSearch<'_> {
    fn descend(&mut self, depth: usize) {
        let parts = self.model.parts();
        if depth == self.labels.len() {
            self.leaf();
            return;
        }
        for p in 0..parts {
            let gained = self.earlier[depth]
                .iter()
                .filter(|&&m| self.labels[m] == p)
                .count();
            self.labels[depth] = p;
            self.sizes[p] += 1;
            self.internal[p] += gained;
            for q in 0..parts {
                let base = self.loads[depth][q];
                self.loads[depth + 1][q] = if q == p { base + self.excess[depth] } else { base };
            }
            self.descend(depth + 1);
            self.sizes[p] -= 1;
            self.internal[p] -= gained;
        }
    }

    fn leaf(&mut self) {
        let loads = &self.loads[self.labels.len()];
        if loads.iter().any(|&l| l > 0.0) {
            return;
        }
        let edges = self.model.graph().edge_count() as f64;
        let objective: f64 = (0..self.model.parts())
            .map(|p| {
                let s = self.sizes[p] as f64;
                self.model.alpha() * s * s + self.model.beta() * (edges - self.internal[p] as f64)
            })
            .sum();
        if self.best.as_ref().map_or(true, |(b, _)| objective < *b) {
            self.best = Some((objective, self.labels.clone()));
        }
    }
}

/// Global minimum of a QUBO by Gray-code enumeration.
///
/// Slack registers listed in `blocks` are not enumerated: for every setting
/// of the remaining variables each register takes its closed-form optimum,
/// which is exact because a register only appears in its own squared
/// residual.
pub fn exhaustive_minimum(qubo: &QuadraticModel, blocks: &[SlackBlock]) -> Result<QuboSolution> {
    let n = qubo.num_variables();
    let mut is_slack = vec![false; n];
    for b in blocks {
        for &s in &b.slack {
            is_slack[s] = true;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_slack[i]).collect();
    let size = 2f64.powi(free.len() as i32);
    if size > ENUMERATION_BOUND as f64 {
        return Err(Error::SizeGuard {
            size,
            bound: ENUMERATION_BOUND,
        });
    }

    // Contribution of each free variable to each block residual.
    let mut touches: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (b, block) in blocks.iter().enumerate() {
        for &(i, c) in &block.residual.merged().terms {
            touches[i].push((b, c));
        }
    }

    let mut state = FlipState::new(qubo, vec![false; n]);
    let mut residuals: Vec<f64> = blocks.iter().map(|b| b.residual.evaluate(&state.x)).collect();
    let slack_correction = |residuals: &[f64]| -> f64 {
        blocks
            .iter()
            .zip(residuals)
            .map(|(b, &r)| {
                let (_, gap) = crate::penalty::min_slack_scaled(b.slack.len() as u32, r);
                b.weight * (gap - r * r)
            })
            .sum()
    };

    let mut best_energy = state.energy + slack_correction(&residuals);
    let mut best_code: u64 = 0;
    let mut trace = vec![best_energy];
    let total = 1u64 << free.len();
    let mut code: u64 = 0;
    for k in 1..total {
        let bit = k.trailing_zeros() as usize;
        let i = free[bit];
        let sign = if state.x[i] { -1.0 } else { 1.0 };
        state.flip(qubo, i);
        code ^= 1 << bit;
        for &(b, c) in &touches[i] {
            residuals[b] += sign * c;
        }
        if k % REFRESH_INTERVAL == 0 {
            state.refresh(qubo);
            for (r, b) in residuals.iter_mut().zip(blocks) {
                *r = b.residual.evaluate(&state.x);
            }
        }
        let e = state.energy + slack_correction(&residuals);
        if e < best_energy {
            best_energy = e;
            best_code = code;
            trace.push(e);
        }
    }

    let mut bits = vec![false; n];
    for (j, &i) in free.iter().enumerate() {
        bits[i] = best_code >> j & 1 == 1;
    }
    for b in blocks {
        let (z, _) = b.best(&bits);
        b.write_slack(&mut bits, z);
    }
    let energy = qubo.energy(&bits);
    Ok(QuboSolution {
        bits,
        energy,
        truncated: false,
        trace,
    })
}

/// Exhaustive QUBO minimum of a compiled partition model, decoded and
/// evaluated against the constrained model.
pub fn solve_exhaustive_qubo(
    model: &PartitionModel,
    compiled: &CompiledQubo,
    slack_closed_form: bool,
) -> Result<SolveReport> {
    let start = Instant::now();
    let blocks: &[SlackBlock] = if slack_closed_form {
        &compiled.slack_blocks
    } else {
        &[]
    };
    let solution = exhaustive_minimum(&compiled.qubo, blocks)?;
    compiled.report(
        model,
        &solution.bits,
        "exhaustive-qubo",
        start.elapsed().as_secs_f64(),
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{PowerGraph, Vertex};
    use crate::partition::{compile_qubo_plain, PenaltyWeights};

    fn cycle(weights: &[f64]) -> PowerGraph {
        let n = weights.len();
        let vertices = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| Vertex {
                id: format!("n{i}"),
                surplus: w,
                position: None,
            })
            .collect();
        PowerGraph::new(vertices, (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect()).unwrap()
    }

    #[test]
    fn single_vertex_symmetric_choice() {
        let g = PowerGraph::new(
            vec![Vertex {
                id: "a".into(),
                surplus: 0.4,
                position: None,
            }],
            vec![],
        )
        .unwrap();
        let m = PartitionModel::new(g, 2, 1.0, 10.0, 0.5).unwrap();
        let r = solve_exhaustive_cqm(&m).unwrap();
        assert_eq!(r.objective, 1.0);
        assert!(r.is_feasible());
    }

    #[test]
    fn overloaded_graph_is_infeasible() {
        for parts in 1..=3 {
            let m = PartitionModel::new(cycle(&[1.0; 4]), parts, 1.0, 10.0, 0.5).unwrap();
            assert!(matches!(solve_exhaustive_cqm(&m), Err(Error::Infeasible)));
        }
    }

    #[test]
    fn guard_refuses_large_spaces() {
        let g = crate::graph::generate_geometric_network(30, 2, 1).unwrap();
        let m = PartitionModel::new(g, 2, 1.0, 10.0, 0.5).unwrap();
        assert!(matches!(solve_exhaustive_cqm(&m), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn all_zero_qubo_minimum_is_zero() {
        let q = QuadraticModel::from_parts(vec![0.0; 5], vec![], 0.0).unwrap();
        let s = exhaustive_minimum(&q, &[]).unwrap();
        assert_eq!(s.energy, 0.0);
    }

    #[test]
    fn closed_form_matches_full_enumeration() {
        let m = PartitionModel::new(cycle(&[0.1, 0.9, 0.3]), 2, 1.0, 10.0, 0.5).unwrap();
        let c = compile_qubo_plain(&m, &PenaltyWeights::new(20.0, 0.5, 3)).unwrap();
        assert_eq!(c.num_variables(), 12);
        let closed = exhaustive_minimum(&c.qubo, &c.slack_blocks).unwrap();
        let full = exhaustive_minimum(&c.qubo, &[]).unwrap();
        assert!((closed.energy - full.energy).abs() < 1e-9);
    }
}
