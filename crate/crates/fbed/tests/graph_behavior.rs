//! Cross-validation of the reachability-based d-separation against path
//! enumeration, plus the conditional-independence axioms it must satisfy.

mod common;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fbed::criteria::{backward_decision, forward_decision};
use fbed::graphs::{oracle_criterion, random_dag, Dag};
use fbed::Dataset;

#[test]
fn reachability_matches_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut checked = 0usize;
    for trial in 0..400 {
        let n = rng.random_range(3..9usize);
        let g = random_dag(n, rng.random_range(0.15..0.6), 0, 10_000 + trial).unwrap();
        let x = rng.random_range(0..n);
        let y = loop {
            let y = rng.random_range(0..n);
            if y != x {
                break y;
            }
        };
        let mut z: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
        for i in (0..z.len()).rev() {
            if rng.random::<f64>() < 0.5 {
                z.remove(i);
            }
        }
        let fast = g.d_separated(x, y, &z).unwrap();
        let slow = common::d_separated_by_enumeration(&g, x, y, &z);
        assert_eq!(fast, slow, "trial {trial}: x={x} y={y} z={z:?}\n{}", g.to_text());
        checked += 1;
    }
    assert_eq!(checked, 400);
}

/// Draws mutually disjoint node sets (X, Y, Z, W) from a fresh random DAG.
fn sample_sets(rng: &mut ChaCha8Rng, trial: u64) -> (Dag, Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>) {
    let n = rng.random_range(7..11usize);
    let g = random_dag(n, rng.random_range(0.15..0.45), 0, 777_000 + trial).unwrap();
    let mut nodes: Vec<usize> = (0..n).collect();
    for i in (1..nodes.len()).rev() {
        let j = rng.random_range(0..=i);
        nodes.swap(i, j);
    }
    let take = |count: usize, nodes: &mut Vec<usize>| -> Vec<usize> {
        let mut out: Vec<usize> = nodes.drain(..count.min(nodes.len())).collect();
        out.sort_unstable();
        out
    };
    let x = take(rng.random_range(1..=2usize), &mut nodes);
    let y = take(rng.random_range(1..=2usize), &mut nodes);
    let w = take(rng.random_range(1..=2usize), &mut nodes);
    let z = take(rng.random_range(0..=2usize), &mut nodes);
    (g, x, y, z, w)
}

#[test]
fn semi_graphoid_axioms_hold_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut applicable = [0usize; 4];
    for trial in 0..1000 {
        let (g, x, y, z, w) = sample_sets(&mut rng, trial);
        let yw: Vec<usize> = {
            let mut v = y.clone();
            v.extend_from_slice(&w);
            v.sort_unstable();
            v
        };
        let zw: Vec<usize> = {
            let mut v = z.clone();
            v.extend_from_slice(&w);
            v.sort_unstable();
            v
        };
        let yz: Vec<usize> = {
            let mut v = y.clone();
            v.extend_from_slice(&z);
            v.sort_unstable();
            v
        };

        // Symmetry: I(X,Y|Z) => I(Y,X|Z)
        if g.set_d_separated(&x, &y, &z).unwrap() {
            applicable[0] += 1;
            assert!(g.set_d_separated(&y, &x, &z).unwrap(), "symmetry, trial {trial}");
        }
        // Decomposition: I(X, Y u W | Z) => I(X,Y|Z) and I(X,W|Z)
        if g.set_d_separated(&x, &yw, &z).unwrap() {
            applicable[1] += 1;
            assert!(g.set_d_separated(&x, &y, &z).unwrap(), "decomposition, trial {trial}");
            assert!(g.set_d_separated(&x, &w, &z).unwrap(), "decomposition, trial {trial}");
        }
        // Weak union: I(X, Y u W | Z) => I(X, Y | Z u W)
        if g.set_d_separated(&x, &yw, &z).unwrap() {
            applicable[2] += 1;
            assert!(g.set_d_separated(&x, &y, &zw).unwrap(), "weak union, trial {trial}");
        }
        // Contraction: I(X,Y|Z) and I(X,W|Y u Z) => I(X, Y u W | Z)
        if g.set_d_separated(&x, &y, &z).unwrap() && g.set_d_separated(&x, &w, &yz).unwrap() {
            applicable[3] += 1;
            assert!(g.set_d_separated(&x, &yw, &z).unwrap(), "contraction, trial {trial}");
        }
    }
    // The sampling must actually exercise each implication.
    for (i, count) in applicable.iter().enumerate() {
        assert!(*count >= 50, "axiom {i} applicable only {count} times");
    }
}

#[test]
fn independence_transfer_property_holds_on_samples() {
    // I(T, A | B u C) and I(T, B | C) imply I(T, A | C): the chain of
    // contraction and decomposition used by the backward-phase argument.
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut applicable = 0usize;
    for trial in 0..2000 {
        let n = rng.random_range(6..10usize);
        let g = random_dag(n, rng.random_range(0.15..0.45), 0, 555_000 + trial).unwrap();
        let t = 0usize;
        let mut rest: Vec<usize> = (1..n).collect();
        for i in (1..rest.len()).rev() {
            let j = rng.random_range(0..=i);
            rest.swap(i, j);
        }
        let a = rest[0];
        let b_len = rng.random_range(1..=2usize);
        let c_len = rng.random_range(0..=2usize);
        let b: Vec<usize> = rest[1..1 + b_len].to_vec();
        let c: Vec<usize> = rest[1 + b_len..(1 + b_len + c_len).min(rest.len())].to_vec();
        let bc: Vec<usize> = {
            let mut v = b.clone();
            v.extend_from_slice(&c);
            v.sort_unstable();
            v
        };
        if g.set_d_separated(&[t], &[a], &bc).unwrap() && g.set_d_separated(&[t], &b, &c).unwrap() {
            applicable += 1;
            assert!(
                g.set_d_separated(&[t], &[a], &c).unwrap(),
                "transfer property violated at trial {trial}"
            );
        }
    }
    assert!(applicable >= 100, "only {applicable} applicable samples");
}

#[test]
fn oracle_decisions_follow_graph_structure() {
    // Chain T -> A: A is adjacent, never separated, always admitted.
    let dag = Arc::new(Dag::new(2, &[(0, 1)], &[]).unwrap());
    let c = oracle_criterion(Arc::clone(&dag), 0).unwrap();
    let d = Dataset::placeholder(1);
    let dec = forward_decision(&c, &d, &[], 0).unwrap();
    assert!(dec.act);
    assert_eq!(dec.score, 0.0);

    // Collider T -> C <- X with S = {C, X}: X stays because conditioning on
    // C d-connects it.
    let dag = Arc::new(Dag::new(3, &[(0, 1), (2, 1)], &[]).unwrap());
    let c = oracle_criterion(Arc::clone(&dag), 0).unwrap();
    let d = Dataset::placeholder(2);
    let dec = backward_decision(&c, &d, &[0, 1], 1).unwrap();
    assert!(!dec.act);

    // Chain T -> A -> B with S = {A, B}: B is removable given A.
    let dag = Arc::new(Dag::new(3, &[(0, 1), (1, 2)], &[]).unwrap());
    let c = oracle_criterion(Arc::clone(&dag), 0).unwrap();
    let dec = backward_decision(&c, &d, &[0, 1], 1).unwrap();
    assert!(dec.act);

    // A non-blanket node is removable given the blanket.
    for seed in 0..10 {
        let dag = Arc::new(random_dag(8, 0.35, 0, 42_000 + seed).unwrap());
        let mb = dag.markov_blanket(0).unwrap();
        let vars = dag.observed_non_target(0);
        let c = oracle_criterion(Arc::clone(&dag), 0).unwrap();
        let d = Dataset::placeholder(vars.len());
        let to_var = |node: usize| vars.iter().position(|&v| v == node).unwrap();
        if let Some(&outside) = vars.iter().find(|v| !mb.contains(v)) {
            let mut s: Vec<usize> = mb.iter().map(|&v| to_var(v)).collect();
            s.push(to_var(outside));
            let dec = backward_decision(&c, &d, &s, to_var(outside)).unwrap();
            assert!(dec.act, "seed {seed}: non-blanket node not removable");
        }
    }
}

#[test]
fn forward_decision_oracle_consistency_with_backward() {
    // For the oracle: admit(S, v) iff not remove(S + v, v), since both ask
    // the same separation question.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..60 {
        let g = Arc::new(random_dag(8, 0.35, 0, 31_000 + trial).unwrap());
        let c = oracle_criterion(Arc::clone(&g), 0).unwrap();
        let p = g.observed_non_target(0).len();
        let d = Dataset::placeholder(p);
        let v = rng.random_range(0..p);
        let mut s: Vec<usize> = (0..p).filter(|&u| u != v && rng.random::<f64>() < 0.3).collect();
        let admit = forward_decision(&c, &d, &s, v).unwrap().act;
        s.push(v);
        let remove = backward_decision(&c, &d, &s, v).unwrap().act;
        assert_eq!(admit, !remove, "trial {trial}");
    }
}
