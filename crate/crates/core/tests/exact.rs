mod common;

use common::{clifford_phase, quarter};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zxpqc::scalar_expr::Gauss;
use zxpqc::{exact_contract, Color, Diagram, ScalarExpr, VertexId};

/// Random closed multigraph of spiders with phases in multiples of pi/2.
fn random_closed(rng: &mut ChaCha8Rng) -> Diagram {
    let mut d = Diagram::new();
    let n = rng.gen_range(1..=8);
    let vs: Vec<VertexId> = (0..n)
        .map(|_| {
            let c = if rng.gen_bool(0.5) { Color::Z } else { Color::X };
            d.add_spider(c, clifford_phase(rng))
        })
        .collect();
    for _ in 0..rng.gen_range(0..=12) {
        let a = vs[rng.gen_range(0..n)];
        let b = vs[rng.gen_range(0..n)];
        d.add_edge(a, b);
    }
    if rng.gen_bool(0.3) {
        d.mul_phase(&quarter(rng.gen_range(1..4)));
    }
    d
}

fn i_pow(k: u8) -> (i128, i128) {
    [(1, 0), (0, 1), (-1, 0), (0, -1)][(k % 4) as usize]
}

fn mul(a: (i128, i128), b: (i128, i128)) -> (i128, i128) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// Sum over every assignment of a bit to each edge, in Gaussian integers.
fn enumerate(d: &Diagram) -> ScalarExpr {
    let edges = d.edges();
    let spiders: Vec<(Color, u8, Vec<usize>)> = d
        .spiders()
        .map(|v| {
            let legs = edges
                .iter()
                .enumerate()
                .flat_map(|(i, &(a, b))| {
                    let ends = (a == v) as usize + (b == v) as usize;
                    std::iter::repeat_n(i, ends)
                })
                .collect();
            (d.color(v).unwrap(), d.phase(v).unwrap().quarter_turns().unwrap(), legs)
        })
        .collect();
    // every X spider carries 2^{-deg/2}
    let halves: usize = spiders.iter().filter(|s| s.0 == Color::X).map(|s| s.2.len()).sum();
    let mut total = (0i128, 0i128);
    for bits in 0u32..1 << edges.len() {
        let bit = |i: usize| (bits >> i) & 1;
        let mut term = (1i128, 0i128);
        for (color, k, legs) in &spiders {
            let factor = match color {
                Color::Z => {
                    let first = legs.first().map(|&l| bit(l));
                    if legs.iter().any(|&l| Some(bit(l)) != first) {
                        (0, 0)
                    } else if first == Some(1) {
                        i_pow(*k)
                    } else if first.is_none() {
                        let w = i_pow(*k);
                        (1 + w.0, w.1)
                    } else {
                        (1, 0)
                    }
                }
                Color::X => {
                    let parity = legs.iter().map(|&l| bit(l)).sum::<u32>() % 2;
                    let w = i_pow(*k + 2 * parity as u8);
                    (1 + w.0, w.1)
                }
            };
            term = mul(term, factor);
            if term == (0, 0) {
                break;
            }
        }
        total = (total.0 + term.0, total.1 + term.1);
    }
    let big = |x: i128| BigRational::from_integer(BigInt::from(x));
    let value = ScalarExpr::constant(Gauss::new(big(total.0), big(total.1))).mul_sqrt2_pow(-(halves as i32));
    &value * &d.scalar()
}

#[test]
fn exact_contraction_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe4ac7);
    let mut nonzero = 0;
    for case in 0..500 {
        let d = random_closed(&mut rng);
        let want = enumerate(&d);
        let got = exact_contract(&d).unwrap();
        assert!((&got - &want).simplify().is_zero(), "case {case}: {got} vs {want}\n{}", d.to_json());
        if !want.is_zero() {
            nonzero += 1;
        }
    }
    assert!(nonzero > 100, "only {nonzero} nonzero cases");
}

#[test]
fn enumeration_of_known_scalars() {
    // a lone Z spider is 1 + e^{i phase}
    let mut d = Diagram::new();
    d.add_spider(Color::Z, quarter(1));
    assert_eq!(enumerate(&d), ScalarExpr::constant(Gauss::new(big(1), big(1))));
    // Z(0) joined to X(0) by one edge: 1 * (1/sqrt2)(1 + 1) + 1 * (1/sqrt2)(1 - 1) = sqrt2
    let mut d = Diagram::new();
    let a = d.add_spider(Color::Z, quarter(0));
    let b = d.add_spider(Color::X, quarter(0));
    d.add_edge(a, b);
    assert_eq!(enumerate(&d), ScalarExpr::sqrt2_pow(1));
    assert_eq!(exact_contract(&d).unwrap(), ScalarExpr::sqrt2_pow(1));
}

fn big(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}
