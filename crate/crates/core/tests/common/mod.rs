//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the code paths it is used to check.
#![allow(dead_code)]

use gridpart::graph::{PowerGraph, Vertex};
use gridpart::partition::PartitionModel;
use gridpart::qubo::{QuadraticModel, Var, VariableRegistry};

pub fn graph(weights: &[f64], edges: &[(usize, usize)]) -> PowerGraph {
    let vertices = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Vertex {
            id: format!("n{i}"),
            surplus: w,
            position: None,
        })
        .collect();
    PowerGraph::new(vertices, edges.iter().map(|&(u, v)| (u, v, 1.0)).collect()).unwrap()
}

pub fn four_cycle(weights: [f64; 4]) -> PowerGraph {
    graph(&weights, &[(0, 1), (1, 2), (2, 3), (0, 3)])
}

pub fn bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// `x⊤Qx + c` with an explicit dense upper-triangular matrix.
pub fn dense_energy(q: &QuadraticModel, x: &[bool]) -> f64 {
    let n = q.num_variables();
    let mut m = vec![vec![0.0; n]; n];
    for (i, &h) in q.linear().iter().enumerate() {
        m[i][i] += h;
    }
    for &(i, j, c) in q.quadratic() {
        m[i.min(j)][i.max(j)] += c;
    }
    let mut e = q.offset();
    for i in 0..n {
        for j in i..n {
            if x[i] && x[j] {
                e += m[i][j];
            }
        }
    }
    e
}

/// Slack value minimizing `(scaled − z)²` over `0..2^bits`, scanning every
/// candidate; exact ties go to the even value.
pub fn brute_min_slack(bits: u32, scaled: f64) -> (u64, f64) {
    let mut best = (0u64, scaled * scaled);
    for z in 1..(1u64 << bits) {
        let g = (scaled - z as f64).powi(2);
        if g < best.1 || (g == best.1 && z % 2 == 0) {
            best = (z, g);
        }
    }
    best
}

/// Partition cost read directly from labels: for each partition `α·size²`
/// plus `β·(|E| − edges inside)`.
pub fn cost_from_labels(model: &PartitionModel, labels: &[usize]) -> f64 {
    let g = model.graph();
    (0..model.parts())
        .map(|p| {
            let size = labels.iter().filter(|&&l| l == p).count() as f64;
            let inside = g
                .edges()
                .iter()
                .filter(|e| labels[e.u] == p && labels[e.v] == p)
                .count() as f64;
            model.alpha() * size * size + model.beta() * (g.edge_count() as f64 - inside)
        })
        .sum()
}

pub fn balanced(model: &PartitionModel, labels: &[usize]) -> bool {
    let g = model.graph();
    (0..model.parts()).all(|p| {
        let load: f64 = (0..g.vertex_count())
            .filter(|&n| labels[n] == p)
            .map(|n| g.surplus(n) - model.threshold())
            .sum();
        load <= 0.0
    })
}

pub fn all_labelings(n: usize, parts: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (parts as u64).pow(n as u32);
    (0..total).map(move |mut code| {
        (0..n)
            .map(|_| {
                let l = (code % parts as u64) as usize;
                code /= parts as u64;
                l
            })
            .collect()
    })
}

/// Optimal constrained cost and every optimal labeling, by enumeration.
pub fn brute_cqm(model: &PartitionModel) -> Option<(f64, Vec<Vec<usize>>)> {
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    for labels in all_labelings(model.num_vertices(), model.parts()) {
        if !balanced(model, &labels) {
            continue;
        }
        let c = cost_from_labels(model, &labels);
        match &mut best {
            Some((b, set)) if c == *b => set.push(labels),
            Some((b, _)) if c > *b => {}
            _ => best = Some((c, vec![labels])),
        }
    }
    best
}

pub fn labels_to_bits(labels: &[usize], parts: usize) -> Vec<bool> {
    let mut v = vec![false; labels.len() * parts];
    for (n, &p) in labels.iter().enumerate() {
        v[n * parts + p] = true;
    }
    v
}

fn value(reg: &VariableRegistry, x: &[bool], var: Var) -> f64 {
    x[reg.index(&var).unwrap()] as u8 as f64
}

/// Partition cost for arbitrary (possibly non-one-hot) bits.
pub fn cost_from_bits(model: &PartitionModel, reg: &VariableRegistry, x: &[bool]) -> f64 {
    let g = model.graph();
    let mut h = 0.0;
    for p in 0..model.parts() {
        let size: f64 = (0..g.vertex_count())
            .map(|n| value(reg, x, Var::V { vertex: n, part: p }))
            .sum();
        let inside: f64 = g
            .edges()
            .iter()
            .map(|e| value(reg, x, Var::V { vertex: e.u, part: p }) * value(reg, x, Var::V { vertex: e.v, part: p }))
            .sum();
        h += model.alpha() * size * size + model.beta() * (g.edge_count() as f64 - inside);
    }
    h
}

pub fn one_hot_penalty(model: &PartitionModel, reg: &VariableRegistry, x: &[bool]) -> f64 {
    (0..model.num_vertices())
        .map(|n| {
            let s: f64 = (0..model.parts())
                .map(|p| value(reg, x, Var::V { vertex: n, part: p }))
                .sum();
            (s - 1.0).powi(2)
        })
        .sum()
}

fn slack_value(reg: &VariableRegistry, x: &[bool], part: usize, bits: u32) -> f64 {
    (0..bits as usize)
        .map(|a| 2f64.powi(a as i32) * value(reg, x, Var::X { bit: a, part }))
        .sum()
}

fn load(model: &PartitionModel, reg: &VariableRegistry, x: &[bool], p: usize) -> f64 {
    let g = model.graph();
    (0..g.vertex_count())
        .map(|n| value(reg, x, Var::V { vertex: n, part: p }) * (g.surplus(n) - model.threshold()))
        .sum()
}

/// Balancing penalty without sharing, from its textbook definition.
pub fn plain_balancing_penalty(model: &PartitionModel, reg: &VariableRegistry, x: &[bool], bits: u32) -> f64 {
    let g = model.graph();
    let c: f64 = (0..g.vertex_count())
        .map(|n| (g.surplus(n) - model.threshold()).min(0.0))
        .sum();
    let alpha = (2f64.powi(bits as i32) - 0.5) / (-c);
    (0..model.parts())
        .map(|p| (alpha * (-c + load(model, reg, x, p)) - slack_value(reg, x, p, bits)).powi(2))
        .sum()
}

/// `G(p, q)` read from the product variables.
pub fn g_value(model: &PartitionModel, reg: &VariableRegistry, x: &[bool], p: usize, q: usize) -> f64 {
    model
        .graph()
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            edge.weight
                * (value(reg, x, Var::Y { edge: e, p, q }) + value(reg, x, Var::Z { edge: e, p, q })
                    - value(reg, x, Var::Y { edge: e, p: q, q: p })
                    - value(reg, x, Var::Z { edge: e, p: q, q: p }))
        })
        .sum()
}

/// Flow from `p` to `q` computed from partition and flow bits.
pub fn flow_direct(model: &PartitionModel, reg: &VariableRegistry, x: &[bool], p: usize, q: usize) -> f64 {
    model
        .graph()
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let v = |n, part| value(reg, x, Var::V { vertex: n, part });
            let f = |part| value(reg, x, Var::F { edge: e, part });
            edge.weight * (f(p) - f(q)) * (v(edge.u, p) * v(edge.v, q) + v(edge.v, p) * v(edge.u, q))
        })
        .sum()
}

pub fn sharing_balancing_penalty(model: &PartitionModel, reg: &VariableRegistry, x: &[bool], bits: u32) -> f64 {
    let g = model.graph();
    let c: f64 = 0.5
        * (0..g.vertex_count())
            .map(|n| {
                let d = g.surplus(n) - model.threshold();
                d.abs() - d
            })
            .sum::<f64>()
        + g.edges().iter().map(|e| e.weight).sum::<f64>();
    let alpha = (2f64.powi(bits as i32) - 0.5) / c;
    (0..model.parts())
        .map(|p| {
            let inflow: f64 = (0..model.parts())
                .filter(|&q| q != p)
                .map(|q| g_value(model, reg, x, q, p))
                .sum();
            (alpha * (c + load(model, reg, x, p)) + inflow - slack_value(reg, x, p, bits)).powi(2)
        })
        .sum()
}

fn gadget(xi: f64, xj: f64, z: f64) -> f64 {
    xi * xj - 2.0 * z * (xi + xj) + 3.0 * z
}

pub fn aux_penalty(model: &PartitionModel, reg: &VariableRegistry, x: &[bool]) -> f64 {
    let mut total = 0.0;
    let parts = model.parts();
    for (e, edge) in model.graph().edges().iter().enumerate() {
        for p in 0..parts {
            for q in (0..parts).filter(|&q| q != p) {
                let val = |var| value(reg, x, var);
                total += gadget(
                    val(Var::V { vertex: edge.u, part: p }),
                    val(Var::V { vertex: edge.v, part: q }),
                    val(Var::A { edge: e, p, q }),
                );
                total += gadget(
                    val(Var::F { edge: e, part: p }),
                    val(Var::A { edge: e, p, q }),
                    val(Var::Y { edge: e, p, q }),
                );
                total += gadget(
                    val(Var::F { edge: e, part: p }),
                    val(Var::A { edge: e, p: q, q: p }),
                    val(Var::Z { edge: e, p, q }),
                );
            }
        }
    }
    total
}

/// A real-valued constraint `a·x ≤ b` with its slack resolution.
#[derive(Debug, Clone)]
pub struct SlackCase {
    pub a: Vec<f64>,
    pub b: f64,
    pub bits: u32,
}

impl SlackCase {
    pub fn random(rng: &mut impl rand::Rng) -> Self {
        let n = rng.gen_range(1..=6);
        let bits = rng.gen_range(1..=4);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: f64 = a.iter().filter(|&&v| v < 0.0).sum();
        let top: f64 = a.iter().map(|v| v.abs()).sum();
        let b = rng.gen_range(c..top);
        Self { a, b, bits }
    }

    pub fn lower(&self) -> f64 {
        self.a.iter().filter(|&&v| v < 0.0).sum()
    }

    pub fn alpha(&self) -> f64 {
        (2f64.powi(self.bits as i32) - 0.5) / (self.b - self.lower())
    }

    pub fn lhs(&self, mask: u64) -> f64 {
        self.a
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, v)| v)
            .sum()
    }

    /// For every `x`, `(mask, a·x, min over slack bits of the compiled
    /// penalty)`, with the slack minimized by enumerating the QUBO.
    pub fn compiled_minima(&self) -> Vec<(u64, f64, f64)> {
        use gridpart::penalty::{inequality_penalty, LinearConstraint};
        use gridpart::qubo::QuboBuilder;
        let n = self.a.len();
        let mut builder = QuboBuilder::new();
        for i in 0..n {
            builder.add_variable(Var::Bit(i));
        }
        let constraint =
            LinearConstraint::at_most(self.a.iter().enumerate().map(|(i, &v)| (Var::Bit(i), v)).collect(), self.b)
                .unwrap();
        inequality_penalty(&constraint, self.bits, |bit| Var::Slack { group: 0, bit }, &mut builder, 1.0).unwrap();
        let (q, _) = builder.finish();
        let k = self.bits as usize;
        (0..1u64 << n)
            .map(|mask| {
                let min = (0..1u64 << k)
                    .map(|z| q.energy(&bits(mask | z << n, n + k)))
                    .fold(f64::INFINITY, f64::min);
                (mask, self.lhs(mask), min)
            })
            .collect()
    }
}
