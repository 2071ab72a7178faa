mod common;

use common::*;
use gridpart::graph::generate_random_graph;
use gridpart::partition::{
    compile_qubo_plain, compile_qubo_sharing, cut_objective, evaluate_cqm, flow_value, objective, PartitionModel,
    PenaltyWeights,
};
use gridpart::qubo::Var;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(rng: &mut ChaCha8Rng, n: usize, parts: usize) -> PartitionModel {
    let g = generate_random_graph(n, 0.5, rng.gen()).unwrap();
    PartitionModel::new(g, parts, 1.0, 10.0, 0.5).unwrap()
}

#[test]
fn plain_qubo_decomposes_into_cost_and_penalties() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    while checked < 1000 {
        let (n, parts) = (rng.gen_range(2..=5), rng.gen_range(1..=3));
        let m = random_model(&mut rng, n, parts);
        let w = PenaltyWeights::new(rng.gen_range(0.0..50.0), rng.gen_range(0.0..2.0), rng.gen_range(1..=6));
        let Ok(c) = compile_qubo_plain(&m, &w) else { continue };
        for _ in 0..50 {
            let x: Vec<bool> = (0..c.num_variables()).map(|_| rng.gen()).collect();
            let expected = cost_from_bits(&m, &c.registry, &x)
                + w.one_hot * one_hot_penalty(&m, &c.registry, &x)
                + w.balancing * plain_balancing_penalty(&m, &c.registry, &x, w.slack_bits);
            let e = c.qubo.evaluate(&x).unwrap();
            assert!((e - expected).abs() < 1e-9 * expected.abs().max(1.0), "{e} vs {expected}");
            checked += 1;
        }
    }
}

#[test]
fn sharing_qubo_decomposes_into_cost_and_penalties() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 1000 {
        let (n, parts) = (rng.gen_range(2..=4), rng.gen_range(1..=3));
        let m = random_model(&mut rng, n, parts);
        let w = PenaltyWeights::new(rng.gen_range(0.0..50.0), rng.gen_range(0.0..2.0), rng.gen_range(1..=5))
            .with_aux(rng.gen_range(0.1..20.0));
        let c = compile_qubo_sharing(&m, &w).unwrap();
        for _ in 0..50 {
            let x: Vec<bool> = (0..c.num_variables()).map(|_| rng.gen()).collect();
            let expected = cost_from_bits(&m, &c.registry, &x)
                + w.one_hot * one_hot_penalty(&m, &c.registry, &x)
                + w.balancing * sharing_balancing_penalty(&m, &c.registry, &x, w.slack_bits)
                + w.aux * aux_penalty(&m, &c.registry, &x);
            let e = c.qubo.evaluate(&x).unwrap();
            assert!((e - expected).abs() < 1e-9 * expected.abs().max(1.0), "{e} vs {expected}");
            checked += 1;
        }
    }
}

/// Per partition, the best slack setting leaves at most ¼ when the
/// partition is balanced and exactly ¼ + αε + (αε)² when its load exceeds
/// the bound by ε; the compiled QUBO minimized over all slack bits adds
/// those per-partition minima to the cost.
#[test]
fn feasibility_gap_per_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let n = rng.gen_range(2..=4);
        let parts = rng.gen_range(1..=2);
        let m = random_model(&mut rng, n, parts);
        let bits_k = rng.gen_range(1..=3u32);
        let lambda_bc = rng.gen_range(0.5..3.0);
        let Ok(c) = compile_qubo_plain(&m, &PenaltyWeights::new(0.0, lambda_bc, bits_k)) else { continue };
        let excess: Vec<f64> = m.graph().surpluses().iter().map(|w| w - m.threshold()).collect();
        let lower: f64 = excess.iter().map(|&d| d.min(0.0)).sum();
        let alpha = (2f64.powi(bits_k as i32) - 0.5) / (-lower);
        let slack_bits = parts * bits_k as usize;
        let v_count = n * parts;

        for labels in all_labelings(n, parts) {
            let v = labels_to_bits(&labels, parts);
            let mut penalty_sum = 0.0;
            for p in 0..parts {
                let load: f64 = (0..n).filter(|&i| labels[i] == p).map(|i| excess[i]).sum();
                let (_, gap) = brute_min_slack(bits_k, alpha * (load - lower));
                if load <= 0.0 {
                    assert!(gap <= 0.25 + 1e-12);
                } else {
                    let ae = alpha * load;
                    assert!((gap - (0.25 + ae + ae * ae)).abs() < 1e-9);
                }
                penalty_sum += gap;
            }
            let min_qubo = (0..1u64 << slack_bits)
                .map(|z| {
                    let mut x = v.clone();
                    x.extend(bits(z, slack_bits));
                    c.qubo.energy(&x)
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(v_count + slack_bits, c.num_variables());
            let expected = cost_from_labels(&m, &labels) + lambda_bc * penalty_sum;
            assert!((min_qubo - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
    }
}

#[test]
fn optimal_partitions_do_not_depend_on_edge_constant_convention() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 2..=5 {
        for parts in 1..=3 {
            for _ in 0..5 {
                let m = random_model(&mut rng, n, parts);
                let mut literal: Vec<(f64, Vec<usize>)> = Vec::new();
                let mut cut: Vec<(f64, Vec<usize>)> = Vec::new();
                for labels in all_labelings(n, parts) {
                    let v = labels_to_bits(&labels, parts);
                    if !evaluate_cqm(&m, &v).unwrap().is_feasible() {
                        continue;
                    }
                    literal.push((objective(&m, &v).unwrap(), labels.clone()));
                    cut.push((cut_objective(&m, &v).unwrap(), labels));
                }
                let argmin = |list: &[(f64, Vec<usize>)]| -> Vec<Vec<usize>> {
                    let best = list.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
                    list.iter().filter(|e| e.0 == best).map(|e| e.1.clone()).collect()
                };
                assert_eq!(argmin(&literal), argmin(&cut));
                if let Some((best, set)) = brute_cqm(&m) {
                    assert_eq!(argmin(&literal), set);
                    assert_eq!(literal.iter().map(|e| e.0).fold(f64::INFINITY, f64::min), best);
                }
            }
        }
    }
}

#[test]
fn consistent_products_reproduce_flows() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..30 {
        let parts = rng.gen_range(2..=3);
        let n = rng.gen_range(2..=5);
        let m = random_model(&mut rng, n, parts);
        let w = PenaltyWeights::new(1.0, 1.0, 3).with_aux(1.0);
        let c = compile_qubo_sharing(&m, &w).unwrap();
        let reg = &c.registry;
        let edges = m.graph().edges().to_vec();
        for _ in 0..20 {
            let mut x = vec![false; c.num_variables()];
            let set = |var: Var, val: bool, x: &mut Vec<bool>| x[reg.index(&var).unwrap()] = val;
            let v: Vec<bool> = (0..m.num_vertices() * parts).map(|_| rng.gen()).collect();
            let f: Vec<bool> = (0..edges.len() * parts).map(|_| rng.gen()).collect();
            for n in 0..m.num_vertices() {
                for p in 0..parts {
                    set(Var::V { vertex: n, part: p }, v[n * parts + p], &mut x);
                }
            }
            for (e, edge) in edges.iter().enumerate() {
                for p in 0..parts {
                    set(Var::F { edge: e, part: p }, f[e * parts + p], &mut x);
                }
                for p in 0..parts {
                    for q in (0..parts).filter(|&q| q != p) {
                        let a_pq = v[edge.u * parts + p] && v[edge.v * parts + q];
                        let a_qp = v[edge.u * parts + q] && v[edge.v * parts + p];
                        set(Var::A { edge: e, p, q }, a_pq, &mut x);
                        set(Var::Y { edge: e, p, q }, f[e * parts + p] && a_pq, &mut x);
                        set(Var::Z { edge: e, p, q }, f[e * parts + p] && a_qp, &mut x);
                    }
                }
            }
            assert_eq!(aux_penalty(&m, reg, &x), 0.0);
            assert_eq!(c.aux_inconsistencies(&m, &x), 0);
            for p in 0..parts {
                for q in (0..parts).filter(|&q| q != p) {
                    let g = g_value(&m, reg, &x, p, q);
                    assert_eq!(g, flow_direct(&m, reg, &x, p, q));
                    assert_eq!(g, flow_value(m.graph(), &v, &f, p, q));
                }
            }
        }
    }
}

#[test]
fn four_cycle_without_surplus_prefers_one_partition() {
    // Brute force: everything in one partition costs 4² + β·|E| for the
    // empty partition, which beats any split.
    let m = PartitionModel::new(four_cycle([0.0; 4]), 2, 1.0, 10.0, 0.5).unwrap();
    let (best, set) = brute_cqm(&m).unwrap();
    assert_eq!(best, 56.0);
    assert_eq!(set, vec![vec![0, 0, 0, 0], vec![1, 1, 1, 1]]);
    let split = labels_to_bits(&[0, 0, 1, 1], 2);
    assert_eq!(objective(&m, &split).unwrap(), 68.0);
}
