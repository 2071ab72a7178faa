use serde::{Deserialize, Serialize};

use super::{decode_assignment, evaluate_cqm, evaluate_sharing, PartitionModel, PenaltyWeights, SolveReport};
use crate::error::{Error, Result};
use crate::penalty::{degree_reduction, equality_penalty, lower_bound, min_slack_scaled, slack_residual, LinearConstraint};
use crate::qubo::{LinearExpr, QuadraticModel, QuboBuilder, Var, VariableRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Plain,
    Sharing,
}

/// One slack register of a balancing penalty: the penalty equals
/// `weight · (residual − Σ 2^i s_i)²`, where `residual` does not involve the
/// slack bits `s`. Each register is independent of every other, so its best
/// setting has a closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackBlock {
    pub residual: LinearExpr,
    pub slack: Vec<usize>,
    pub weight: f64,
}

impl SlackBlock {
    /// Best slack value and resulting penalty for the current assignment.
    pub fn best(&self, x: &[bool]) -> (u64, f64) {
        let (z, gap) = min_slack_scaled(self.slack.len() as u32, self.residual.evaluate(x));
        (z, self.weight * gap)
    }

    pub fn write_slack(&self, x: &mut [bool], value: u64) {
        for (i, &s) in self.slack.iter().enumerate() {
            x[s] = value >> i & 1 == 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledQubo {
    pub formulation: Formulation,
    pub qubo: QuadraticModel,
    pub registry: VariableRegistry,
    pub weights: PenaltyWeights,
    pub slack_blocks: Vec<SlackBlock>,
    /// Lower bound `c` used by the balancing penalty: non-positive for the
    /// plain model, non-negative for the sharing model.
    pub balancing_bound: f64,
}

impl CompiledQubo {
    pub fn num_variables(&self) -> usize {
        self.registry.len()
    }

    /// Sets every slack register to its closed-form optimum.
    pub fn optimize_slack(&self, x: &mut [bool]) {
        for block in &self.slack_blocks {
            let (z, _) = block.best(x);
            block.write_slack(x, z);
        }
    }

    pub fn is_slack(&self, index: usize) -> bool {
        matches!(self.registry.var(index), Some(Var::X { .. }))
    }

    /// Decodes `assignment` and evaluates it against the constrained model.
    pub fn report(
        &self,
        model: &PartitionModel,
        assignment: &[bool],
        solver: impl Into<String>,
        wall_time_s: f64,
        truncated: bool,
    ) -> Result<SolveReport> {
        let decoded = decode_assignment(&self.registry, assignment)?;
        let eval = match self.formulation {
            Formulation::Plain => evaluate_cqm(model, &decoded.v_bits)?,
            Formulation::Sharing => evaluate_sharing(model, &decoded.v_bits, &decoded.flow_bits)?,
        };
        Ok(SolveReport {
            solver: solver.into(),
            assignment: assignment.to_vec(),
            placements: decoded.placements,
            objective: eval.objective,
            one_hot_violations: eval.one_hot_violations,
            balancing_violations: eval.balancing_violations,
            loads: eval.loads,
            energy: Some(self.qubo.energy(assignment)),
            wall_time_s,
            truncated,
        })
    }

    /// Number of auxiliary product variables whose value disagrees with the
    /// product they stand for (always zero for the plain model).
    pub fn aux_inconsistencies(&self, model: &PartitionModel, x: &[bool]) -> usize {
        if self.formulation != Formulation::Sharing {
            return 0;
        }
        let parts = model.parts();
        let get = |var: Var| x[self.registry.index(&var).expect("registered")];
        let mut bad = 0;
        for (e, edge) in model.graph().edges().iter().enumerate() {
            for p in 0..parts {
                for q in (0..parts).filter(|&q| q != p) {
                    let a_pq = get(Var::A { edge: e, p, q });
                    let a_qp = get(Var::A { edge: e, p: q, q: p });
                    let f_p = get(Var::F { edge: e, part: p });
                    let expect_a = get(Var::V { vertex: edge.u, part: p })
                        && get(Var::V { vertex: edge.v, part: q });
                    bad += (a_pq != expect_a) as usize;
                    bad += (get(Var::Y { edge: e, p, q }) != (f_p && a_pq)) as usize;
                    bad += (get(Var::Z { edge: e, p, q }) != (f_p && a_qp)) as usize;
                }
            }
        }
        bad
    }
}

fn register_partition_vars(builder: &mut QuboBuilder, model: &PartitionModel) {
    for n in 0..model.num_vertices() {
        for p in 0..model.parts() {
            builder.add_variable(Var::V { vertex: n, part: p });
        }
    }
}

fn register_slack_vars(builder: &mut QuboBuilder, parts: usize, bits: u32) -> Vec<Vec<usize>> {
    (0..parts)
        .map(|p| {
            (0..bits as usize)
                .map(|a| builder.add_variable(Var::X { bit: a, part: p }))
                .collect()
        })
        .collect()
}

/// Adds the partition cost `H(v)`.
fn add_objective(builder: &mut QuboBuilder, model: &PartitionModel) -> Result<()> {
    let parts = model.parts();
    let edges = model.graph().edge_count() as f64;
    for p in 0..parts {
        let mut size = LinearExpr::new();
        for n in 0..model.num_vertices() {
            size.push(builder.index(&Var::V { vertex: n, part: p })?, 1.0);
        }
        builder.add_squared(&size, model.alpha());
        builder.add_offset(model.beta() * edges);
        for e in model.graph().edges() {
            builder.add_term(
                &[Var::V { vertex: e.u, part: p }, Var::V { vertex: e.v, part: p }],
                -model.beta(),
            )?;
        }
    }
    Ok(())
}

/// Adds `λ_oh Σ_n (Σ_p v_np − 1)²`.
fn add_one_hot(builder: &mut QuboBuilder, model: &PartitionModel, weight: f64) -> Result<()> {
    for n in 0..model.num_vertices() {
        let terms = (0..model.parts())
            .map(|p| (Var::V { vertex: n, part: p }, 1.0))
            .collect();
        let constraint = LinearConstraint::equality(terms, 1.0)?;
        equality_penalty(&constraint, builder, weight)?;
    }
    Ok(())
}

fn load_expr(builder: &QuboBuilder, model: &PartitionModel, p: usize) -> Result<LinearExpr> {
    let mut load = LinearExpr::new();
    for (n, x) in model.excess().into_iter().enumerate() {
        load.push(builder.index(&Var::V { vertex: n, part: p })?, x);
    }
    Ok(load)
}

/// Compiles the model without electricity sharing into
/// `H(v) + λ_oh P_oh(v) + λ_bc P_bc(v, x; K)` over `P(N + K)` variables.
///
/// The balancing penalty for partition `p` is
/// `(α (−c + Σ_n v_np (w_n − k)) − Σ_a 2^a x_ap)²` with
/// `α = (2^K − ½)/(−c)` and `c = Σ_n min(0, w_n − k)`.
pub fn compile_qubo_plain(model: &PartitionModel, weights: &PenaltyWeights) -> Result<CompiledQubo> {
    weights.validate()?;
    let lower = lower_bound(&model.excess());
    if !(lower < 0.0) {
        return Err(Error::DegenerateBalancing(format!(
            "every vertex has surplus at or above the threshold {}, so only empty partitions balance",
            model.threshold()
        )));
    }
    let bits = weights.slack_bits;
    let mut builder = QuboBuilder::new();
    register_partition_vars(&mut builder, model);
    let slack = register_slack_vars(&mut builder, model.parts(), bits);

    add_objective(&mut builder, model)?;
    add_one_hot(&mut builder, model, weights.one_hot)?;

    let scale = ((1u64 << bits) as f64 - 0.5) / (-lower);
    let mut blocks = Vec::with_capacity(model.parts());
    for (p, slack_p) in slack.iter().enumerate() {
        let load = load_expr(&builder, model, p)?;
        let full = slack_residual(&load, -lower, scale, None, slack_p);
        builder.add_squared(&full, weights.balancing);
        blocks.push(SlackBlock {
            residual: slack_residual(&load, -lower, scale, None, &[]),
            slack: slack_p.clone(),
            weight: weights.balancing,
        });
    }

    let (qubo, registry) = builder.finish();
    Ok(CompiledQubo {
        formulation: Formulation::Plain,
        qubo,
        registry,
        weights: *weights,
        slack_blocks: blocks,
        balancing_bound: lower,
    })
}

/// `G(y, z; p, q) = Σ_e w_e (y_epq + z_epq − y_eqp − z_eqp)`.
fn sharing_flow_expr(builder: &QuboBuilder, model: &PartitionModel, p: usize, q: usize) -> Result<LinearExpr> {
    let mut g = LinearExpr::new();
    for (e, edge) in model.graph().edges().iter().enumerate() {
        let w = edge.weight;
        g.push(builder.index(&Var::Y { edge: e, p, q })?, w);
        g.push(builder.index(&Var::Z { edge: e, p, q })?, w);
        g.push(builder.index(&Var::Y { edge: e, p: q, q: p })?, -w);
        g.push(builder.index(&Var::Z { edge: e, p: q, q: p })?, -w);
    }
    Ok(g)
}

/// Compiles the model with electricity sharing into
/// `H + λ_oh P_oh + λ_bc P_bc(v, x, y, z; K) + λ_aux P_aux`.
///
/// Flow bits `f(e, p)` and, for every edge and ordered pair `p ≠ q`, the
/// products `a = v_np v_mq`, `y = f_ep a_epq`, `z = f_ep a_eqp` are added,
/// giving `P(N + K + |E|) + 3|E|·P(P − 1)` variables. The balancing residual of
/// partition `p` is `α (c + Σ_n v_np (w_n − k)) + Σ_{q≠p} G(q, p) − Σ_a 2^a x_ap`
/// with `c = ½ Σ_n (|w_n − k| − w_n + k) + Σ_e w_e` and `α = (2^K − ½)/c`.
pub fn compile_qubo_sharing(model: &PartitionModel, weights: &PenaltyWeights) -> Result<CompiledQubo> {
    weights.validate()?;
    if !(weights.aux > 0.0) {
        return Err(Error::Parameter(
            "lambda_aux must be positive for the sharing formulation".into(),
        ));
    }
    let bound = 0.5
        * model
            .excess()
            .iter()
            .map(|&x| x.abs() - x)
            .sum::<f64>()
        + model.graph().edges().iter().map(|e| e.weight).sum::<f64>();
    if !(bound > 0.0) {
        return Err(Error::DegenerateBalancing(
            "sharing lower bound is zero: no vertex below threshold and no transfer capacity".into(),
        ));
    }

    let parts = model.parts();
    let bits = weights.slack_bits;
    let mut builder = QuboBuilder::new();
    register_partition_vars(&mut builder, model);
    let slack = register_slack_vars(&mut builder, parts, bits);
    let edges = model.graph().edges().to_vec();
    for e in 0..edges.len() {
        for p in 0..parts {
            builder.add_variable(Var::F { edge: e, part: p });
        }
    }

    let pairs: Vec<(usize, usize)> = (0..parts)
        .flat_map(|p| (0..parts).filter(move |&q| q != p).map(move |q| (p, q)))
        .collect();
    let lambda_aux = weights.aux;
    for (e, edge) in edges.iter().enumerate() {
        for &(p, q) in &pairs {
            degree_reduction(
                Var::V { vertex: edge.u, part: p },
                Var::V { vertex: edge.v, part: q },
                Var::A { edge: e, p, q },
                &mut builder,
                lambda_aux,
            )?;
        }
    }
    for e in 0..edges.len() {
        for &(p, q) in &pairs {
            degree_reduction(
                Var::F { edge: e, part: p },
                Var::A { edge: e, p, q },
                Var::Y { edge: e, p, q },
                &mut builder,
                lambda_aux,
            )?;
            degree_reduction(
                Var::F { edge: e, part: p },
                Var::A { edge: e, p: q, q: p },
                Var::Z { edge: e, p, q },
                &mut builder,
                lambda_aux,
            )?;
        }
    }

    add_objective(&mut builder, model)?;
    add_one_hot(&mut builder, model, weights.one_hot)?;

    let scale = ((1u64 << bits) as f64 - 0.5) / bound;
    let mut blocks = Vec::with_capacity(parts);
    for (p, slack_p) in slack.iter().enumerate() {
        let load = load_expr(&builder, model, p)?;
        let mut inflow = LinearExpr::new();
        for q in (0..parts).filter(|&q| q != p) {
            inflow.terms.extend(sharing_flow_expr(&builder, model, q, p)?.terms);
        }
        let full = slack_residual(&load, bound, scale, Some(&inflow), slack_p);
        builder.add_squared(&full, weights.balancing);
        blocks.push(SlackBlock {
            residual: slack_residual(&load, bound, scale, Some(&inflow), &[]),
            slack: slack_p.clone(),
            weight: weights.balancing,
        });
    }

    let (qubo, registry) = builder.finish();
    Ok(CompiledQubo {
        formulation: Formulation::Sharing,
        qubo,
        registry,
        weights: *weights,
        slack_blocks: blocks,
        balancing_bound: bound,
    })
}
