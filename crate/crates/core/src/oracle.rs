//! Numeric ground truth. Nothing here uses the rewrite engine.
//!
//! Diagrams are contracted as dense tensor networks; circuits are simulated
//! gate by gate on a statevector. Qubit 0 is the most significant bit of a
//! basis index, matching the row/column order of diagram matrices.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagram::{Diagram, VertexKind};
use crate::error::{Error, Result};
use crate::lincomb::LinComb;
pub use crate::scalar_expr::Binding;
use crate::scalar_expr::{Parameter, DEFAULT_SEED};
use crate::pqc::{AnsatzSpec, ProblemGraph};

/// Largest intermediate tensor rank the contractor will build.
pub const MAX_RANK: usize = 24;
/// Largest register the statevector simulator accepts.
pub const MAX_QUBITS: usize = 12;

type C = Complex64;

struct Tensor {
    idx: Vec<usize>,
    // bit k of a position is the value of idx[k]
    data: Vec<C>,
}

fn spider_tensor(kind: &VertexKind, legs: Vec<usize>, b: &Binding) -> Result<Tensor> {
    let k = legs.len();
    if k > MAX_RANK {
        return Err(Error::TooLarge(format!("spider with {k} legs")));
    }
    let phi = kind.phase().expect("spider").eval(b)?;
    let e = C::from_polar(1.0, phi);
    let mut data = vec![C::new(0.0, 0.0); 1 << k];
    match kind {
        VertexKind::Z(_) => {
            data[0] += 1.0;
            data[(1 << k) - 1] += e;
        }
        _ => {
            let norm = 0.5f64.powf(k as f64 / 2.0);
            for (pos, x) in data.iter_mut().enumerate() {
                let sign = if pos.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                *x = (C::new(1.0, 0.0) + e * sign) * norm;
            }
        }
    }
    Ok(Tensor { idx: legs, data })
}

fn contract_pair(a: &Tensor, b: &Tensor) -> Tensor {
    let shared: Vec<usize> = a.idx.iter().filter(|i| b.idx.contains(i)).copied().collect();
    let res: Vec<usize> = a
        .idx
        .iter()
        .filter(|i| !shared.contains(i))
        .chain(b.idx.iter().filter(|i| !shared.contains(i)))
        .copied()
        .collect();
    let place = |t: &Tensor, list: &[usize]| -> Vec<usize> {
        list.iter()
            .map(|i| t.idx.iter().position(|x| x == i).map_or(0, |p| 1 << p))
            .collect()
    };
    let offsets = |weights: &[usize]| -> Vec<usize> {
        let mut out = vec![0usize; 1 << weights.len()];
        for v in 1..out.len() {
            out[v] = out[v & (v - 1)] + weights[v.trailing_zeros() as usize];
        }
        out
    };
    let (ar, br) = (offsets(&place(a, &res)), offsets(&place(b, &res)));
    let (as_, bs) = (offsets(&place(a, &shared)), offsets(&place(b, &shared)));
    let mut data = vec![C::new(0.0, 0.0); 1 << res.len()];
    for (r, out) in data.iter_mut().enumerate() {
        let (pa, pb) = (ar[r], br[r]);
        let mut acc = C::new(0.0, 0.0);
        for s in 0..as_.len() {
            acc += a.data[pa + as_[s]] * b.data[pb + bs[s]];
        }
        *out = acc;
    }
    Tensor { idx: res, data }
}

/// Dense matrix of a diagram: `2^outputs` rows by `2^inputs` columns.
/// Closed diagrams give a 1x1 matrix.
pub fn contract_numeric(d: &Diagram, b: &Binding) -> Result<DMatrix<C>> {
    let edges = d.edges();
    let mut legs: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for (e, (u, v)) in edges.iter().enumerate() {
        // self-loops leave both spider kinds unchanged
        if u != v {
            legs.entry(*u).or_default().push(e);
            legs.entry(*v).or_default().push(e);
        }
    }
    let mut tensors = Vec::new();
    for (v, kind) in d.vertices() {
        if !kind.is_boundary() {
            tensors.push(spider_tensor(kind, legs.remove(&v).unwrap_or_default(), b)?);
        }
    }
    let open_edge = |v: usize| legs.get(&v).and_then(|l| l.first()).copied();
    let outs: Vec<usize> = d.outputs().iter().map(|v| open_edge(*v).expect("boundary edge")).collect();
    let ins: Vec<usize> = d.inputs().iter().map(|v| open_edge(*v).expect("boundary edge")).collect();
    if outs.len() + ins.len() > MAX_RANK {
        return Err(Error::TooLarge(format!("{} open legs", outs.len() + ins.len())));
    }

    while tensors.len() > 1 {
        let mut best: Option<(i128, usize, usize)> = None;
        for i in 0..tensors.len() {
            for j in i + 1..tensors.len() {
                let (a, bt) = (&tensors[i], &tensors[j]);
                let shared = a.idx.iter().filter(|x| bt.idx.contains(x)).count();
                let rank = a.idx.len() + bt.idx.len() - 2 * shared;
                let cost = if shared == 0 {
                    // outer products only once nothing else is left
                    i128::MAX / 2 + rank as i128
                } else {
                    (1i128 << rank) - (1i128 << a.idx.len()) - (1i128 << bt.idx.len())
                };
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, i, j));
                }
            }
        }
        let (_, i, j) = best.unwrap();
        let tb = tensors.swap_remove(j);
        let ta = tensors.swap_remove(i);
        let rank = ta.idx.iter().chain(&tb.idx).filter(|x| !(ta.idx.contains(x) && tb.idx.contains(x))).count();
        if rank > MAX_RANK {
            return Err(Error::TooLarge(format!("intermediate tensor of rank {rank}")));
        }
        tensors.push(contract_pair(&ta, &tb));
    }
    let t = tensors.pop().unwrap_or(Tensor { idx: vec![], data: vec![C::new(1.0, 0.0)] });

    let scalar = d.scalar().eval_at(b)?;
    let (nr, nc) = (1usize << outs.len(), 1usize << ins.len());
    let pos_of = |e: usize| 1usize << t.idx.iter().position(|x| *x == e).expect("open leg survives");
    let row_w: Vec<usize> = outs.iter().map(|e| pos_of(*e)).collect();
    let col_w: Vec<usize> = ins.iter().map(|e| pos_of(*e)).collect();
    let offset = |bits: usize, w: &[usize]| -> usize {
        let n = w.len();
        (0..n).filter(|k| bits >> (n - 1 - k) & 1 == 1).map(|k| w[k]).sum()
    };
    Ok(DMatrix::from_fn(nr, nc, |r, c| t.data[offset(r, &row_w) + offset(c, &col_w)] * scalar))
}

/// The single entry of a closed diagram.
pub fn contract_scalar(d: &Diagram, b: &Binding) -> Result<C> {
    if !d.is_closed() {
        return Err(Error::NotClosed);
    }
    Ok(contract_numeric(d, b)?[(0, 0)])
}

pub fn matrices_close(a: &DMatrix<C>, b: &DMatrix<C>, tol: f64) -> bool {
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
}

/// Anything with a numeric matrix semantics.
pub trait Semantics {
    fn arity(&self) -> (usize, usize);
    fn parameters(&self) -> BTreeSet<Parameter>;
    fn numeric(&self, b: &Binding) -> Result<DMatrix<C>>;
}

impl Semantics for Diagram {
    fn arity(&self) -> (usize, usize) {
        Diagram::arity(self)
    }
    fn parameters(&self) -> BTreeSet<Parameter> {
        Diagram::parameters(self)
    }
    fn numeric(&self, b: &Binding) -> Result<DMatrix<C>> {
        contract_numeric(self, b)
    }
}

impl Semantics for LinComb {
    fn arity(&self) -> (usize, usize) {
        LinComb::arity(self)
    }
    fn parameters(&self) -> BTreeSet<Parameter> {
        LinComb::parameters(self)
    }
    fn numeric(&self, b: &Binding) -> Result<DMatrix<C>> {
        let (m, n) = self.arity();
        let mut acc = DMatrix::zeros(1 << n, 1 << m);
        for (c, d) in self.terms() {
            acc += contract_numeric(d, b)? * c.eval_at(b)?;
        }
        Ok(acc)
    }
}

/// True iff both sides agree at `trials` seeded random bindings.
pub fn soundness_check<A: Semantics + ?Sized, B: Semantics + ?Sized>(before: &A, after: &B, trials: usize, tol: f64) -> bool {
    soundness_check_seeded(before, after, trials, tol, DEFAULT_SEED)
}

pub fn soundness_check_seeded<A: Semantics + ?Sized, B: Semantics + ?Sized>(
    before: &A,
    after: &B,
    trials: usize,
    tol: f64,
    seed: u64,
) -> bool {
    if before.arity() != after.arity() {
        return false;
    }
    let mut params = before.parameters();
    params.extend(after.parameters());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials.max(1)).all(|_| {
        let b = Binding::random(&params, &mut rng);
        match (before.numeric(&b), after.numeric(&b)) {
            (Ok(x), Ok(y)) => matrices_close(&x, &y, tol),
            _ => false,
        }
    })
}

// ---------------------------------------------------------------------------
// Statevector simulation

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amp: Vec<C>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<StateVector> {
        if n > MAX_QUBITS {
            return Err(Error::TooLarge(format!("{n} qubits")));
        }
        let mut amp = vec![C::new(0.0, 0.0); 1 << n];
        amp[0] = C::new(1.0, 0.0);
        Ok(StateVector { n, amp })
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amp
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    pub fn apply_1q(&mut self, q: usize, m: [[C; 2]; 2]) {
        let bit = self.mask(q);
        for i in 0..self.amp.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amp[i], self.amp[i | bit]);
                self.amp[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amp[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (self.mask(control), self.mask(target));
        for i in 0..self.amp.len() {
            if i & c != 0 && i & t == 0 {
                self.amp.swap(i, i | t);
            }
        }
    }

    pub fn h(&mut self, q: usize) {
        let s = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_1q(q, [[s, s], [s, -s]]);
    }

    /// `exp(-i theta X / 2)`.
    pub fn rx(&mut self, q: usize, theta: f64) {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        self.apply_1q(q, [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]]);
    }

    /// `exp(-i theta Y / 2)`.
    pub fn ry(&mut self, q: usize, theta: f64) {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        self.apply_1q(q, [[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]]);
    }

    /// `exp(-i theta Z / 2)`.
    pub fn rz(&mut self, q: usize, theta: f64) {
        let z = C::new(0.0, 0.0);
        self.apply_1q(q, [[C::from_polar(1.0, -theta / 2.0), z], [z, C::from_polar(1.0, theta / 2.0)]]);
    }

    pub fn apply_diagonal(&mut self, f: impl Fn(usize) -> C) {
        for (i, a) in self.amp.iter_mut().enumerate() {
            *a *= f(i);
        }
    }

    /// `<Z_{q1} ... Z_{qk}>`.
    pub fn z_expectation(&self, qs: &[usize]) -> f64 {
        let mask: usize = qs.iter().map(|q| self.mask(*q)).fold(0, |a, b| a ^ b);
        self.amp
            .iter()
            .enumerate()
            .map(|(i, a)| if (i & mask).count_ones().is_multiple_of(2) { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }
}

fn value(b: &Binding, p: &Parameter) -> Result<f64> {
    b.get(p).ok_or_else(|| Error::MissingBinding(p.name().to_string()))
}

fn cut_value(g: &ProblemGraph, x: usize) -> usize {
    let n = g.n();
    g.edges()
        .iter()
        .filter(|(u, v)| ((x >> (n - 1 - u)) ^ (x >> (n - 1 - v))) & 1 == 1)
        .count()
}

/// Simulates the reference circuit. QAOA phase layers are compiled to
/// CNOT-RZ-CNOT per edge.
pub fn statevector(g: &ProblemGraph, a: &AnsatzSpec, b: &Binding) -> Result<StateVector> {
    simulate(g, a, b, false)
}

/// As [`statevector`], but QAOA phase layers are applied as one diagonal.
pub fn statevector_fast(g: &ProblemGraph, a: &AnsatzSpec, b: &Binding) -> Result<StateVector> {
    simulate(g, a, b, true)
}

fn simulate(g: &ProblemGraph, a: &AnsatzSpec, b: &Binding, diagonal: bool) -> Result<StateVector> {
    a.check_fits(g)?;
    let n = g.n();
    let mut s = StateVector::zero(n)?;
    match a {
        AnsatzSpec::RyProduct { alphas } => {
            for (q, p) in alphas.iter().enumerate() {
                s.ry(q, value(b, p)?);
            }
        }
        AnsatzSpec::Qaoa { gammas, betas } => {
            for q in 0..n {
                s.h(q);
            }
            for (gp, bp) in gammas.iter().zip(betas) {
                let (gamma, beta) = (value(b, gp)?, value(b, bp)?);
                if diagonal {
                    s.apply_diagonal(|x| C::from_polar(1.0, -gamma * cut_value(g, x) as f64));
                } else {
                    for (u, v) in g.edges() {
                        s.cnot(*u, *v);
                        s.rz(*v, -gamma);
                        s.cnot(*u, *v);
                    }
                    // the compiled form drops a global phase per edge
                    s.apply_diagonal(|_| C::from_polar(1.0, -gamma * g.edges().len() as f64 / 2.0));
                }
                // exp(-i beta~ X) with beta~ = -beta/2
                for q in 0..n {
                    s.rx(q, -beta);
                }
            }
        }
        AnsatzSpec::HwEffSU2 { gammas, betas } => {
            for q in 0..3 {
                s.ry(q, value(b, &betas[q][0])?);
                s.rz(q, value(b, &gammas[q][0])?);
            }
            s.cnot(0, 1);
            s.cnot(0, 2);
            s.cnot(1, 2);
            for q in 0..3 {
                s.ry(q, value(b, &betas[q][1])?);
                s.rz(q, value(b, &gammas[q][1])?);
            }
        }
    }
    Ok(s)
}

/// `<Z_u Z_v>` of the ansatz state.
pub fn statevector_zz(g: &ProblemGraph, a: &AnsatzSpec, b: &Binding, edge: (usize, usize)) -> Result<f64> {
    Ok(statevector(g, a, b)?.z_expectation(&[edge.0, edge.1]))
}

/// MaxCut expectation `<C> = |E|/2 - 1/2 sum <Z_u Z_v>`.
pub fn statevector_expectation(g: &ProblemGraph, a: &AnsatzSpec, b: &Binding) -> Result<f64> {
    let s = statevector(g, a, b)?;
    Ok(g.edges()
        .iter()
        .map(|(u, v)| 0.5 * (1.0 - s.z_expectation(&[*u, *v])))
        .sum())
}

/// Exact maximum cut by enumeration, with the last vertex pinned.
pub fn brute_force_maxcut(g: &ProblemGraph) -> Result<usize> {
    let n = g.n();
    if n > 24 {
        return Err(Error::TooLarge(format!("{n} vertices")));
    }
    if n == 0 {
        return Ok(0);
    }
    let edges: Vec<(usize, usize)> = g.edges().to_vec();
    Ok((0usize..1 << (n - 1))
        .map(|x| edges.iter().filter(|(u, v)| ((x >> u) ^ (x >> v)) & 1 == 1).count())
        .max()
        .unwrap_or(0))
}
