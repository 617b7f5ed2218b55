//! Ansatz builders, MaxCut observables, lightcone reduction and the
//! closed-form reference expressions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::diagram::{Circuit, Color, Diagram};
use crate::error::{Error, Result};
use crate::scalar_expr::{r64, LinearPhase, Parameter, ScalarExpr};

/// Undirected simple graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl ProblemGraph {
    /// Edges are stored as `(min, max)` in the given order.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<ProblemGraph> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) references a vertex >= {n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u},{v})")));
            }
            out.push(e);
        }
        Ok(ProblemGraph { n, edges: out })
    }

    pub fn ring(n: usize) -> ProblemGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        ProblemGraph::new(n, &edges).expect("rings with n >= 3 are simple")
    }

    /// Parses `n m` followed by `m` lines `u v`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<ProblemGraph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let nums = |(no, l): (usize, &str)| -> Result<(usize, usize)> {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 2 {
                return Err(Error::Parse(format!("line {no}: expected two integers")));
            }
            let p = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("line {no}: bad integer `{s}`")));
            Ok((p(f[0])?, p(f[1])?))
        };
        let (n, m) = nums(lines.next().ok_or_else(|| Error::Parse("empty graph file".into()))?)?;
        let edges = lines.map(nums).collect::<Result<Vec<_>>>()?;
        if edges.len() != m {
            return Err(Error::Parse(format!("header announces {m} edges, found {}", edges.len())));
        }
        ProblemGraph::new(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .collect()
    }

    fn require_edge(&self, (u, v): (usize, usize)) -> Result<()> {
        if self.has_edge(u, v) {
            Ok(())
        } else {
            Err(Error::EdgeNotInGraph(u, v))
        }
    }

    /// Graph distance from the set `{u, v}`; unreachable vertices are absent.
    pub fn distances_from(&self, sources: &[usize]) -> BTreeMap<usize, usize> {
        let mut dist = BTreeMap::new();
        let mut queue = VecDeque::new();
        for s in sources {
            dist.insert(*s, 0);
            queue.push_back(*s);
        }
        while let Some(x) = queue.pop_front() {
            for y in self.neighbors(x) {
                if !dist.contains_key(&y) {
                    dist.insert(y, dist[&x] + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }
}

impl fmt::Display for ProblemGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.n, self.edges.len())?;
        for (u, v) in &self.edges {
            writeln!(f, "{u} {v}")?;
        }
        Ok(())
    }
}

/// The parameterized circuit family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnsatzSpec {
    /// `R_Y(alpha_i)` on each qubit of `|0...0>`.
    RyProduct { alphas: Vec<Parameter> },
    /// `p` alternating phase and mixing layers on `|+...+>`. `gammas[k]`
    /// drives `exp(-i gamma C)`; `betas[k]` is the mixer angle with
    /// `exp(-i beta~ X)` and `beta = -2 beta~`.
    Qaoa { gammas: Vec<Parameter>, betas: Vec<Parameter> },
    /// Three qubits: `RZ(gammas[q][0]) RY(betas[q][0])`, then CX(0,1), CX(0,2),
    /// CX(1,2), then `RZ(gammas[q][1]) RY(betas[q][1])`.
    HwEffSU2 { gammas: [[Parameter; 2]; 3], betas: [[Parameter; 2]; 3] },
}

impl AnsatzSpec {
    pub fn ry(n: usize) -> AnsatzSpec {
        AnsatzSpec::RyProduct { alphas: (0..n).map(|i| Parameter::new(&format!("alpha_{i}"))).collect() }
    }

    /// Names are `gamma`, `beta` for one layer and `gamma_k`, `beta_k` otherwise.
    pub fn qaoa(p: usize) -> AnsatzSpec {
        assert!(p >= 1, "QAOA needs at least one layer");
        let name = |s: &str, k: usize| if p == 1 { s.to_string() } else { format!("{s}_{k}") };
        AnsatzSpec::Qaoa {
            gammas: (1..=p).map(|k| Parameter::new(&name("gamma", k))).collect(),
            betas: (1..=p).map(|k| Parameter::new(&name("beta", k))).collect(),
        }
    }

    /// Names `gamma_ij`, `beta_ij` with qubit `i` and layer `j`, both from 1.
    pub fn hweff() -> AnsatzSpec {
        let grid = |s: &str| -> [[Parameter; 2]; 3] {
            std::array::from_fn(|i| std::array::from_fn(|j| Parameter::new(&format!("{s}_{}{}", i + 1, j + 1))))
        };
        AnsatzSpec::HwEffSU2 { gammas: grid("gamma"), betas: grid("beta") }
    }

    pub fn parameters(&self) -> Vec<Parameter> {
        match self {
            AnsatzSpec::RyProduct { alphas } => alphas.clone(),
            AnsatzSpec::Qaoa { gammas, betas } => gammas.iter().chain(betas).cloned().collect(),
            AnsatzSpec::HwEffSU2 { gammas, betas } => gammas.iter().chain(betas).flatten().cloned().collect(),
        }
    }

    pub fn check_fits(&self, g: &ProblemGraph) -> Result<()> {
        match self {
            AnsatzSpec::RyProduct { alphas } if alphas.len() != g.n() => Err(Error::SpecMismatch(format!(
                "{} rotation angles for {} qubits",
                alphas.len(),
                g.n()
            ))),
            AnsatzSpec::Qaoa { gammas, betas } if gammas.is_empty() || gammas.len() != betas.len() => {
                Err(Error::SpecMismatch("QAOA needs p >= 1 matching gamma/beta lists".into()))
            }
            AnsatzSpec::HwEffSU2 { .. } if g.n() != 3 => {
                Err(Error::SpecMismatch(format!("the hardware-efficient ansatz acts on 3 qubits, graph has {}", g.n())))
            }
            _ => Ok(()),
        }
    }
}

/// A weighted product of Z operators.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableTerm {
    pub weight: ScalarExpr,
    pub support: Vec<usize>,
}

/// `C = |E|/2 - 1/2 sum_{uv} Z_u Z_v`.
pub fn maxcut_hamiltonian(g: &ProblemGraph) -> (ScalarExpr, Vec<ObservableTerm>) {
    let terms = g
        .edges()
        .iter()
        .map(|(u, v)| ObservableTerm { weight: ScalarExpr::ratio(-1, 2), support: vec![*u, *v] })
        .collect();
    (ScalarExpr::ratio(g.edges().len() as i64, 2), terms)
}

fn half_pi() -> LinearPhase {
    LinearPhase::pi_times(r64(1, 2))
}

/// `R_Y(theta) = e^{-i theta/2} Z(pi/2) X(theta) Z(-pi/2)`.
fn ry_gate(c: &mut Circuit, q: usize, theta: &Parameter) {
    c.z(q, -half_pi());
    c.x(q, LinearPhase::param(theta.name()));
    c.z(q, half_pi());
    c.phase(&LinearPhase::param_scaled(theta.name(), r64(-1, 2)));
}

/// `R_Z(phi) = e^{-i phi/2} Z(phi)`.
fn rz_gate(c: &mut Circuit, q: usize, phi: &Parameter) {
    c.z(q, LinearPhase::param(phi.name()));
    c.phase(&LinearPhase::param_scaled(phi.name(), r64(-1, 2)));
}

/// State diagram (0 inputs, n outputs) of the ansatz, scalar-exact.
pub fn build_state(g: &ProblemGraph, a: &AnsatzSpec) -> Result<Diagram> {
    a.check_fits(g)?;
    let n = g.n();
    let d = match a {
        AnsatzSpec::RyProduct { alphas } => {
            let mut c = Circuit::from_states(&vec![(Color::X, LinearPhase::zero()); n]);
            c.scalar(&ScalarExpr::sqrt2_pow(-(n as i32)));
            for (q, p) in alphas.iter().enumerate() {
                ry_gate(&mut c, q, p);
            }
            c.finish()
        }
        AnsatzSpec::Qaoa { gammas, betas } => {
            let mut c = Circuit::from_states(&vec![(Color::Z, LinearPhase::zero()); n]);
            c.scalar(&ScalarExpr::sqrt2_pow(-(n as i32)));
            for (gp, bp) in gammas.iter().zip(betas) {
                for (u, v) in g.edges() {
                    c.gadget(&[*u, *v], -LinearPhase::param(gp.name()));
                }
                c.scalar(&ScalarExpr::sqrt2_pow(g.edges().len() as i32));
                for q in 0..n {
                    c.x(q, -LinearPhase::param(bp.name()));
                }
                let mix = LinearPhase::param_scaled(bp.name(), r64(n as i64, 2));
                c.phase(&mix);
            }
            c.finish()
        }
        AnsatzSpec::HwEffSU2 { gammas, betas } => {
            let mut c = Circuit::from_states(&vec![(Color::X, LinearPhase::zero()); 3]);
            c.scalar(&ScalarExpr::sqrt2_pow(-3));
            for q in 0..3 {
                ry_gate(&mut c, q, &betas[q][0]);
                rz_gate(&mut c, q, &gammas[q][0]);
            }
            c.cnot(0, 1);
            c.cnot(0, 2);
            c.cnot(1, 2);
            for q in 0..3 {
                ry_gate(&mut c, q, &betas[q][1]);
                rz_gate(&mut c, q, &gammas[q][1]);
            }
            c.finish()
        }
    };
    Ok(d)
}

/// Closed diagram `<psi| Z...Z |psi>` without the term weight.
pub fn expectation_diagram(state: &Diagram, term: &ObservableTerm) -> Result<Diagram> {
    let n = state.outputs().len();
    let mut seen = BTreeSet::new();
    for q in &term.support {
        if *q >= n || !seen.insert(*q) {
            return Err(Error::SupportOutOfRange(*q));
        }
    }
    let mut obs = Circuit::new(n);
    for q in &term.support {
        obs.z(*q, LinearPhase::pi());
    }
    let with_obs = Diagram::compose(state, &obs.finish())?;
    Diagram::compose(&with_obs, &state.adjoint())
}

/// `Z_u Z_v` with unit weight.
pub fn zz_term(u: usize, v: usize) -> ObservableTerm {
    ObservableTerm { weight: ScalarExpr::one(), support: vec![u, v] }
}

/// Reduced problem for one edge observable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LightCone {
    pub graph: ProblemGraph,
    /// `vertices[i]` is the original vertex behind reduced qubit `i`.
    pub vertices: Vec<usize>,
    /// The observable edge in reduced labels.
    pub edge: (usize, usize),
}

impl LightCone {
    pub fn reduced_index(&self, original: usize) -> Option<usize> {
        self.vertices.iter().position(|v| *v == original)
    }
}

/// Keeps vertices within distance `p` of the edge and the edges that can
/// reach the observable within `p` layers (an endpoint within `p - 1`).
pub fn lightcone_reduce(g: &ProblemGraph, edge: (usize, usize), p: usize) -> Result<LightCone> {
    g.require_edge(edge)?;
    let dist = g.distances_from(&[edge.0, edge.1]);
    let vertices: Vec<usize> = dist.iter().filter(|(_, d)| **d <= p).map(|(v, _)| *v).collect();
    let index: BTreeMap<usize, usize> = vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let (eu, ev) = (edge.0.min(edge.1), edge.0.max(edge.1));
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|(u, v)| {
            (*u, *v) == (eu, ev)
                || (p >= 1 && dist.get(u).min(dist.get(v)).is_some_and(|d| *d < p)
                    && index.contains_key(u)
                    && index.contains_key(v))
        })
        .map(|(u, v)| (index[u], index[v]))
        .collect();
    Ok(LightCone {
        graph: ProblemGraph::new(vertices.len(), &edges)?,
        edge: (index[&edge.0], index[&edge.1]),
        vertices,
    })
}

/// Sizes `(n_u, n_v, n_uv)` of the exclusive and common neighborhoods.
pub fn neighborhood_sizes(g: &ProblemGraph, (u, v): (usize, usize)) -> Result<(usize, usize, usize)> {
    g.require_edge((u, v))?;
    let (nu, nv) = (g.neighbors(u), g.neighbors(v));
    let common = nu.intersection(&nv).count();
    Ok((nu.len() - 1 - common, nv.len() - 1 - common, common))
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i as i64 + 1))
}

fn power(e: &ScalarExpr, k: usize) -> ScalarExpr {
    (0..k).map(|_| e.clone()).product()
}

/// Depth-one QAOA `<Z_u Z_v>` in the parameters `gamma`, `beta`:
/// `c_b s_b s_g (c_g^{n_u+n_uv} + c_g^{n_v+n_uv})
///  + c_g^{n_u+n_v} s_b^2 sum_{i odd} C(n_uv, i) s_g^{2i} c_g^{2(n_uv-i)}`.
pub fn qaoa1_closed_form(g: &ProblemGraph, edge: (usize, usize)) -> Result<ScalarExpr> {
    let (nu, nv, nuv) = neighborhood_sizes(g, edge)?;
    let (gm, bt) = (LinearPhase::param("gamma"), LinearPhase::param("beta"));
    let (cg, sg) = (ScalarExpr::cos(&gm), ScalarExpr::sin(&gm));
    let (cb, sb) = (ScalarExpr::cos(&bt), ScalarExpr::sin(&bt));
    let first = &(&(&cb * &sb) * &sg) * &(power(&cg, nu + nuv) + power(&cg, nv + nuv));
    let mut tail = ScalarExpr::zero();
    for i in (1..=nuv).step_by(2) {
        tail = tail + &ScalarExpr::int(binomial(nuv, i)) * &(&power(&sg, 2 * i) * &power(&cg, 2 * (nuv - i)));
    }
    let second = &(&power(&cg, nu + nv) * &(&sb * &sb)) * &tail;
    Ok(first + second)
}

/// Index tuple `l1 l2 l3 m2 m3 r1 r2 r3` of the hardware-efficient identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HwIndex {
    pub l: [bool; 3],
    pub m: [bool; 2],
    pub r: [bool; 3],
}

impl HwIndex {
    /// Bits in the order `l1 l2 l3 m2 m3 r1 r2 r3`, most significant first.
    pub fn from_bits(x: u8) -> HwIndex {
        let bit = |k: u8| x >> (7 - k) & 1 == 1;
        HwIndex { l: [bit(0), bit(1), bit(2)], m: [bit(3), bit(4)], r: [bit(5), bit(6), bit(7)] }
    }

    pub fn all() -> impl Iterator<Item = HwIndex> {
        (0..=255u8).map(HwIndex::from_bits)
    }
}

/// `<l| W^dag (XZ)_2^{m2} (XZ)_3^{m3} W |r>` for the entangler
/// `W = CX(2,3) CX(1,3) CX(1,2)`: zero when `l1+r1`, `l2+m2+r2` or
/// `l3+m2+m3+r3` is odd, else `(-1)^{m2 r1 + (m2+m3) r2 + m3 r3}`.
pub fn hweff_parity_identity(ix: HwIndex) -> ScalarExpr {
    let b = |x: bool| x as u8;
    let [l1, l2, l3] = ix.l.map(b);
    let [m2, m3] = ix.m.map(b);
    let [r1, r2, r3] = ix.r.map(b);
    if (l1 + r1) % 2 == 1 || (l2 + m2 + r2) % 2 == 1 || (l3 + m2 + m3 + r3) % 2 == 1 {
        return ScalarExpr::zero();
    }
    let f = m2 * r1 + ((m2 + m3) % 2) * r2 + m3 * r3;
    ScalarExpr::int(if f % 2 == 0 { 1 } else { -1 })
}

/// Parameter-free diagram whose exact value is the left side of
/// [`hweff_parity_identity`].
pub fn hweff_identity_diagram(ix: HwIndex) -> Diagram {
    let pi_if = |x: bool| if x { LinearPhase::pi() } else { LinearPhase::zero() };
    let states: Vec<_> = ix.r.iter().map(|r| (Color::X, pi_if(*r))).collect();
    let mut c = Circuit::from_states(&states);
    c.cnot(0, 1);
    c.cnot(0, 2);
    c.cnot(1, 2);
    for (q, m) in [(1, ix.m[0]), (2, ix.m[1])] {
        c.z(q, pi_if(m));
        c.x(q, pi_if(m));
    }
    c.cnot(1, 2);
    c.cnot(0, 2);
    c.cnot(0, 1);
    for (q, l) in ix.l.iter().enumerate() {
        c.x(q, pi_if(*l));
    }
    // basis states and effects are X(a pi)/sqrt(2)
    c.scalar(&ScalarExpr::sqrt2_pow(-6));
    // the last spider on each wire is the effect
    c.into_diagram()
}

/// `<Z_2 Z_3>` of the hardware-efficient ansatz (qubits 1 and 2 counted
/// from 0), collected from the rotation expansions weighted by
/// [`hweff_parity_identity`].
pub fn hweff_zz_expectation(a: &AnsatzSpec) -> Result<ScalarExpr> {
    let AnsatzSpec::HwEffSU2 { gammas, betas } = a else {
        return Err(Error::SpecMismatch("expected the hardware-efficient ansatz".into()));
    };
    let half = |p: &Parameter| LinearPhase::param_scaled(p.name(), r64(1, 2));
    let full = |p: &Parameter| LinearPhase::param(p.name());
    // a_q(0) = e^{-i g/2} cos(b/2), a_q(1) = e^{i g/2} sin(b/2); only the
    // amplitude magnitudes are kept here, the phases are summed below
    let amp = |q: usize, x: bool| {
        if x {
            ScalarExpr::sin(&half(&betas[q][0]))
        } else {
            ScalarExpr::cos(&half(&betas[q][0]))
        }
    };
    let mu = |q: usize, m: bool| {
        if m {
            ScalarExpr::sin(&full(&betas[q][1]))
        } else {
            ScalarExpr::cos(&full(&betas[q][1]))
        }
    };
    let mut total = ScalarExpr::zero();
    for ix in HwIndex::all() {
        let f = hweff_parity_identity(ix);
        if f.is_zero() {
            continue;
        }
        let mut phase = LinearPhase::zero();
        let mut t = f;
        for (q, gq) in gammas.iter().enumerate() {
            let sign = ix.r[q] as i64 - ix.l[q] as i64;
            phase = &phase + &LinearPhase::param_scaled(gq[0].name(), r64(sign, 1));
            t = &t * &(&amp(q, ix.l[q]) * &amp(q, ix.r[q]));
        }
        if ix.l[0] ^ ix.l[2] {
            t = -t;
        }
        t = &t * &(&mu(1, ix.m[0]) * &mu(2, ix.m[1]));
        total = total + &t * &ScalarExpr::exp_i_phase(&phase);
    }
    Ok(total.simplify())
}
