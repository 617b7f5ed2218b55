#![allow(dead_code)]

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::Rng;
use zxpqc::{Circuit, Color, Diagram, LinearPhase, ProblemGraph};

pub fn quarter(k: i64) -> LinearPhase {
    LinearPhase::pi_times(Rational64::new(k, 2))
}

/// Multiples of pi/2, so that exact contraction applies.
pub fn clifford_phase<R: Rng>(rng: &mut R) -> LinearPhase {
    quarter(rng.gen_range(0..4))
}

/// Parameters mixed with constants; `exact` keeps constants at multiples of pi/2.
pub fn any_phase<R: Rng>(rng: &mut R, exact: bool) -> LinearPhase {
    match rng.gen_range(0..8) {
        0 => LinearPhase::zero(),
        1 => LinearPhase::pi(),
        2 if exact => clifford_phase(rng),
        2 => LinearPhase::pi_times(Rational64::new(rng.gen_range(1..8), 4)),
        3 => LinearPhase::param("a"),
        4 => -LinearPhase::param("b"),
        5 => &LinearPhase::param("a") + &LinearPhase::pi_times(Rational64::new(1, 2)),
        6 => LinearPhase::param("b").scale(Rational64::new(2, 1)),
        _ => clifford_phase(rng),
    }
}

fn color<R: Rng>(rng: &mut R) -> Color {
    if rng.gen_bool(0.5) {
        Color::Z
    } else {
        Color::X
    }
}

#[derive(Clone, Copy)]
pub struct Gen {
    pub parameters: bool,
    pub open_inputs: bool,
    /// Constant phases restricted to multiples of pi/2.
    pub exact: bool,
}

impl Gen {
    fn phase<R: Rng>(&self, rng: &mut R) -> LinearPhase {
        if self.parameters {
            any_phase(rng, self.exact)
        } else {
            clifford_phase(rng)
        }
    }

    /// Circuit-shaped diagram mixing single spiders, CNOTs and CNOT pairs,
    /// phase gadgets, pi-conjugated gadgets and basis states.
    pub fn circuit<R: Rng>(&self, rng: &mut R, n: usize, depth: usize) -> Diagram {
        let mut c = if self.open_inputs {
            Circuit::new(n)
        } else {
            let states: Vec<(Color, LinearPhase)> = (0..n)
                .map(|_| (color(rng), if rng.gen_bool(0.5) { LinearPhase::zero() } else { LinearPhase::pi() }))
                .collect();
            Circuit::from_states(&states)
        };
        for _ in 0..depth {
            let q = rng.gen_range(0..n);
            let r = (q + rng.gen_range(1..n.max(2))) % n;
            match rng.gen_range(0..9) {
                0 | 1 => {
                    let col = color(rng);
                    c.spider(q, col, self.phase(rng));
                }
                2 => {
                    c.x(q, LinearPhase::pi());
                    c.z(q, self.phase(rng));
                }
                3 if n > 1 => c.cnot(q, r),
                4 if n > 1 => {
                    c.cnot(q, r);
                    c.cnot(r, q);
                }
                5 if n > 1 => {
                    c.cnot(q, r);
                    c.cnot(q, r);
                }
                6 | 7 => {
                    let mut qs: Vec<usize> = (0..n).collect();
                    qs.shuffle(rng);
                    qs.truncate(rng.gen_range(1..=n));
                    qs.sort_unstable();
                    for q in &qs {
                        if rng.gen_bool(0.4) {
                            c.x(*q, LinearPhase::pi());
                        }
                    }
                    let ph = self.phase(rng);
                    c.gadget(&qs, ph.clone());
                    if rng.gen_bool(0.3) {
                        c.gadget(&qs, -&ph);
                    }
                }
                _ => {
                    let col = color(rng);
                    c.spider(q, col, LinearPhase::zero());
                }
            }
        }
        c.finish()
    }
}

/// Closes `d` with the adjoint of another random state on its outputs.
pub fn close<R: Rng>(rng: &mut R, d: &Diagram, g: &Gen) -> Diagram {
    let n = d.outputs().len();
    let gen = Gen { open_inputs: false, ..*g };
    let effect = gen.circuit(rng, n, 3).adjoint();
    Diagram::compose(d, &effect).unwrap()
}

pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> ProblemGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    ProblemGraph::new(n, &edges).unwrap()
}

/// Random spanning tree plus extra edges.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> ProblemGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (u, v) = (order[i].min(order[j]), order[i].max(order[j]));
        edges.push((u, v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    ProblemGraph::new(n, &edges).unwrap()
}
