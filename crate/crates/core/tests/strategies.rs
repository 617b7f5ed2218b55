mod common;

use common::random_connected_graph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use zxpqc::evaluator::evaluate_maxcut;
use zxpqc::oracle::{brute_force_maxcut, statevector_zz};
use zxpqc::{evaluate_edge, AnsatzSpec, Binding, ExpandPolicy, ProblemGraph, Strategy};

const TOL: f64 = 1e-9;

fn strategies() -> Vec<(&'static str, Strategy)> {
    vec![
        ("auto", Strategy::default()),
        ("all", Strategy { expand: ExpandPolicy::All, ..Strategy::default() }),
        ("checked", Strategy { debug_check: true, ..Strategy::default() }),
    ]
}

/// The flag marks fixtures small enough to expand every parameter at once.
fn fixtures() -> Vec<(&'static str, ProblemGraph, AnsatzSpec, bool)> {
    let tri = ProblemGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let fig3 = ProblemGraph::new(4, &[(0, 1), (1, 2), (2, 3), (1, 3)]).unwrap();
    let path = ProblemGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
    vec![
        ("qaoa k2", ProblemGraph::new(2, &[(0, 1)]).unwrap(), AnsatzSpec::qaoa(1), true),
        ("qaoa fig3", fig3.clone(), AnsatzSpec::qaoa(1), true),
        ("qaoa2 path", path, AnsatzSpec::qaoa(2), false),
        ("ry fig3", fig3, AnsatzSpec::ry(4), true),
        ("hweff triangle", tri, AnsatzSpec::hweff(), false),
    ]
}

#[test]
fn result_does_not_depend_on_strategy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, g, a, small) in fixtures() {
        let binds: Vec<Binding> = (0..8).map(|_| Binding::random(&a.parameters(), &mut rng)).collect();
        for &edge in g.edges() {
            for (sname, s) in strategies() {
                if sname == "all" && !small {
                    continue;
                }
                let v = evaluate_edge(&g, &a, edge, false, &s).unwrap().value;
                for b in &binds {
                    let want = statevector_zz(&g, &a, b, edge).unwrap();
                    let got = v.eval_at(b).unwrap();
                    assert!(got.im.abs() <= TOL, "{name} {edge:?} {sname}: imaginary part {}", got.im);
                    assert!((got.re - want).abs() <= TOL, "{name} {edge:?} {sname}: {} vs {want}", got.re);
                }
            }
        }
    }
}

#[test]
fn ry_optimum_is_the_max_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = AnsatzSpec::ry(5);
    for _ in 0..4 {
        let g = random_connected_graph(&mut rng, 5, 0.5);
        let (cost, _) = evaluate_maxcut(&g, &a, false, &Strategy::default()).unwrap();
        let best = brute_force_maxcut(&g).unwrap() as f64;
        let mut seen = f64::NEG_INFINITY;
        // the basis states, then random points, which cannot beat them
        let corners = (0..32u32).map(|m| {
            (0..5).fold(Binding::new(), |b, i| b.with(&format!("alpha_{i}"), PI * ((m >> i) & 1) as f64))
        });
        let random: Vec<Binding> = (0..64).map(|_| Binding::random(&a.parameters(), &mut rng)).collect();
        for b in corners.chain(random) {
            let v = cost.eval_at(&b).unwrap().re;
            assert!(v <= best + TOL, "{v} exceeds max cut {best}");
            seen = seen.max(v);
        }
        assert!((seen - best).abs() <= TOL, "best sampled {seen}, max cut {best}");
    }
}
