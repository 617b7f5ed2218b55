//! Closed diagram to ScalarExpr: simplify, expand parameterized spiders into
//! Clifford sums, simplify each term, contract exactly, sum.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagram::{Color, Diagram, VertexId, VertexKind};
use crate::error::{Error, Result};
use crate::lincomb::{decompose_phase_gadget, decompose_spider, LinComb, DEFAULT_TERM_LIMIT};
use crate::oracle::{contract_scalar, Binding};
use crate::pqc::{
    build_state, expectation_diagram, lightcone_reduce, maxcut_hamiltonian, zz_term, AnsatzSpec, ProblemGraph,
};
use crate::rewrite::{absorb_isolated_spiders, gadgets, parameterized_spiders, simplify_fixpoint, RuleId};
use crate::scalar_expr::{Gauss, LinearPhase, ScalarExpr, DEFAULT_SEED};

/// Largest factor (in variables) the exact contractor will build.
pub const MAX_FACTOR_VARS: usize = 26;

type G = (i128, i128);

fn gmul(a: G, b: G) -> Option<G> {
    let re = a.0.checked_mul(b.0)?.checked_sub(a.1.checked_mul(b.1)?)?;
    let im = a.0.checked_mul(b.1)?.checked_add(a.1.checked_mul(b.0)?)?;
    Some((re, im))
}

fn gadd(a: G, b: G) -> Option<G> {
    Some((a.0.checked_add(b.0)?, a.1.checked_add(b.1)?))
}

fn ipow(q: u8) -> G {
    [(1, 0), (0, 1), (-1, 0), (0, -1)][(q % 4) as usize]
}

/// A table over a sorted variable list; bit `j` of the index is `vars[j]`.
struct Factor {
    vars: Vec<usize>,
    table: Vec<G>,
}

fn overflow() -> Error {
    Error::TooLarge("exact contraction overflowed 128-bit arithmetic".into())
}

/// Multiplies `fs` and sums out `var`.
fn eliminate(fs: Vec<Factor>, var: usize) -> Result<Factor> {
    let mut all: BTreeSet<usize> = BTreeSet::new();
    for f in &fs {
        all.extend(&f.vars);
    }
    all.remove(&var);
    let vars: Vec<usize> = all.into_iter().collect();
    if vars.len() > MAX_FACTOR_VARS {
        return Err(Error::TooLarge(format!("exact contraction needs a {}-variable factor", vars.len())));
    }
    // position of each factor variable in (vars ++ [var])
    let pos: Vec<Vec<usize>> = fs
        .iter()
        .map(|f| {
            f.vars
                .iter()
                .map(|v| if *v == var { vars.len() } else { vars.binary_search(v).unwrap() })
                .collect()
        })
        .collect();
    let mut table = vec![(0, 0); 1 << vars.len()];
    for (idx, slot) in table.iter_mut().enumerate() {
        for x in 0..2usize {
            let full = idx | (x << vars.len());
            let mut acc: G = (1, 0);
            for (f, p) in fs.iter().zip(&pos) {
                let mut fi = 0;
                for (j, pj) in p.iter().enumerate() {
                    fi |= ((full >> pj) & 1) << j;
                }
                acc = gmul(acc, f.table[fi]).ok_or_else(overflow)?;
                if acc == (0, 0) {
                    break;
                }
            }
            *slot = gadd(*slot, acc).ok_or_else(overflow)?;
        }
    }
    Ok(Factor { vars, table })
}

/// Exact value of a closed diagram whose phases are all multiples of pi/2.
///
/// Edges meeting at a Z spider share one bit; the sum over those bits is
/// done by variable elimination over Gaussian integers, and the X spider
/// normalizations are collected as a power of sqrt(2).
pub fn exact_contract(d: &Diagram) -> Result<ScalarExpr> {
    if !d.is_closed() {
        return Err(Error::NotClosed);
    }
    let mut quarter = BTreeMap::new();
    for v in d.spiders() {
        let q = d.phase(v).and_then(|p| p.quarter_turns()).ok_or(Error::UnsupportedPhase(v))?;
        quarter.insert(v, q);
    }
    // union-find over edge ends; one class per Z spider and per X-X edge
    let edges = d.edges();
    let mut parent: Vec<usize> = (0..edges.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut z_first: BTreeMap<VertexId, usize> = BTreeMap::new();
    for (i, (a, b)) in edges.iter().enumerate() {
        for v in [a, b] {
            if d.color(*v) == Some(Color::Z) {
                match z_first.get(v) {
                    Some(&j) => {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        parent[ri] = rj;
                    }
                    None => {
                        z_first.insert(*v, i);
                    }
                }
            }
        }
    }
    let mut class_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut edge_class = Vec::with_capacity(edges.len());
    for i in 0..edges.len() {
        let r = find(&mut parent, i);
        let n = class_of_root.len();
        edge_class.push(*class_of_root.entry(r).or_insert(n));
    }
    let mut nvars = class_of_root.len();

    let mut factors: Vec<Factor> = Vec::new();
    let mut sqrt2_exp: i32 = 0;
    for v in d.spiders() {
        let q = quarter[&v];
        match d.kind(v) {
            Some(VertexKind::Z(_)) => {
                let var = match z_first.get(&v) {
                    Some(&e) => edge_class[e],
                    None => {
                        nvars += 1;
                        nvars - 1
                    }
                };
                factors.push(Factor { vars: vec![var], table: vec![(1, 0), ipow(q)] });
            }
            Some(VertexKind::X(_)) => {
                sqrt2_exp -= d.degree(v) as i32;
                let mut odd: BTreeSet<usize> = BTreeSet::new();
                for (i, (a, b)) in edges.iter().enumerate() {
                    for end in [a, b] {
                        if *end == v && !odd.remove(&edge_class[i]) {
                            odd.insert(edge_class[i]);
                        }
                    }
                }
                let vars: Vec<usize> = odd.into_iter().collect();
                let w = ipow(q);
                let table = (0..1usize << vars.len())
                    .map(|idx| {
                        if idx.count_ones() % 2 == 0 {
                            (1 + w.0, w.1)
                        } else {
                            (1 - w.0, -w.1)
                        }
                    })
                    .collect();
                factors.push(Factor { vars, table });
            }
            _ => unreachable!(),
        }
    }

    let mut value: G = (1, 0);
    let live_vars: BTreeSet<usize> = factors.iter().flat_map(|f| f.vars.iter().copied()).collect();
    // variables touching no factor contribute a factor of 2
    for _ in live_vars.len()..nvars {
        value = gmul(value, (2, 0)).ok_or_else(overflow)?;
    }
    let mut live = live_vars;
    while let Some(var) = cheapest(&factors, &live) {
        live.remove(&var);
        let (with, without): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = without;
        factors.push(eliminate(with, var)?);
    }
    for f in factors {
        value = gmul(value, f.table[0]).ok_or_else(overflow)?;
    }
    let g = Gauss::new(
        BigRational::from_integer(BigInt::from(value.0)),
        BigRational::from_integer(BigInt::from(value.1)),
    );
    Ok(&ScalarExpr::constant(g).mul_sqrt2_pow(sqrt2_exp) * &d.scalar())
}

/// Variable whose elimination builds the smallest factor.
fn cheapest(factors: &[Factor], live: &BTreeSet<usize>) -> Option<usize> {
    live.iter()
        .map(|&v| {
            let mut s: BTreeSet<usize> = BTreeSet::new();
            for f in factors.iter().filter(|f| f.vars.contains(&v)) {
                s.extend(&f.vars);
            }
            (s.len(), v)
        })
        .min()
        .map(|(_, v)| v)
}

// ---------------------------------------------------------------------------
// Strategy

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpandPolicy {
    /// Per term, expand one class of spiders per round: parameterized X
    /// spiders first, then gadgets, then Z spiders next to X spiders, then
    /// anything left.
    Auto,
    /// Expand every parameterized spider in one round.
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    pub rules: Vec<RuleId>,
    pub expand: ExpandPolicy,
    pub budget: usize,
    pub max_steps: usize,
    /// Checks the running sum against the input at 4 random bindings after
    /// every round.
    pub debug_check: bool,
}

impl Default for Strategy {
    fn default() -> Strategy {
        Strategy {
            rules: RuleId::DEFAULT_ORDER.to_vec(),
            expand: ExpandPolicy::Auto,
            budget: DEFAULT_TERM_LIMIT,
            max_steps: 200_000,
            debug_check: false,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StrategyJson {
    #[serde(default)]
    rules: Option<Vec<String>>,
    #[serde(default)]
    expand: Option<String>,
    #[serde(default)]
    budget: Option<usize>,
}

impl Strategy {
    pub fn from_json(s: &str) -> Result<Strategy> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let w: StrategyJson = serde_path_to_error::deserialize(de).map_err(|e| Error::SchemaViolation {
            path: e.path().to_string(),
            msg: e.inner().to_string(),
        })?;
        let mut out = Strategy::default();
        if let Some(rules) = w.rules {
            out.rules = rules
                .iter()
                .map(|r| r.parse())
                .collect::<Result<_>>()
                .map_err(|e| Error::SchemaViolation { path: "rules".into(), msg: e.to_string() })?;
        }
        if let Some(x) = w.expand {
            out.expand = match x.as_str() {
                "auto" => ExpandPolicy::Auto,
                "all" => ExpandPolicy::All,
                _ => return Err(Error::SchemaViolation { path: "expand".into(), msg: format!("unknown policy `{x}`") }),
            };
        }
        if let Some(b) = w.budget {
            if b == 0 {
                return Err(Error::SchemaViolation { path: "budget".into(), msg: "budget must be at least 1".into() });
            }
            out.budget = b;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let w = StrategyJson {
            rules: Some(self.rules.iter().map(|r| r.name().to_string()).collect()),
            expand: Some(match self.expand {
                ExpandPolicy::Auto => "auto".into(),
                ExpandPolicy::All => "all".into(),
            }),
            budget: Some(self.budget),
        };
        serde_json::to_string(&w).expect("strategy serialization cannot fail")
    }
}

/// Result of [`evaluate`] with some bookkeeping.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: ScalarExpr,
    /// Term count after each expansion round, before merging.
    pub rounds: Vec<usize>,
    /// Parameter-free terms that were contracted at the end.
    pub final_terms: usize,
    /// A fixpoint ran out of steps somewhere.
    pub exhausted: bool,
}

fn expansion_sites(d: &Diagram, policy: ExpandPolicy) -> (Vec<VertexId>, Vec<(VertexId, VertexId)>) {
    let params = parameterized_spiders(d);
    let hubs: BTreeMap<VertexId, VertexId> = gadgets(d, false)
        .into_iter()
        .filter(|g| params.contains(&g.phase_hub))
        .map(|g| (g.phase_hub, g.hub))
        .collect();
    let spiders_where = |f: &dyn Fn(VertexId) -> bool| -> Vec<VertexId> {
        params.iter().copied().filter(|v| !hubs.contains_key(v) && f(*v)).collect()
    };
    if policy == ExpandPolicy::All {
        return (spiders_where(&|_| true), hubs.iter().map(|(p, h)| (*h, *p)).collect());
    }
    let xs = spiders_where(&|v| d.color(v) == Some(Color::X));
    if !xs.is_empty() {
        return (xs, Vec::new());
    }
    if !hubs.is_empty() {
        return (Vec::new(), hubs.iter().map(|(p, h)| (*h, *p)).collect());
    }
    let zx = spiders_where(&|v| d.neighbors(v).any(|(w, _)| d.color(w) == Some(Color::X)));
    if !zx.is_empty() {
        return (zx, Vec::new());
    }
    (spiders_where(&|_| true), Vec::new())
}

/// All terms of expanding the given sites of one diagram.
fn expand_term(
    coeff: &ScalarExpr,
    d: &Diagram,
    (spiders, hubs): (Vec<VertexId>, Vec<(VertexId, VertexId)>),
) -> Result<Vec<(ScalarExpr, Diagram)>> {
    let mut acc = vec![(coeff.clone(), d.clone())];
    for v in spiders {
        let mut next = Vec::with_capacity(acc.len() * 2);
        for (c, t) in &acc {
            for (c2, t2) in decompose_spider(t, v)?.into_terms() {
                next.push((c * &c2, t2));
            }
        }
        acc = next;
    }
    for (h, phase_hub) in hubs {
        let mut next = Vec::with_capacity(acc.len() * 2);
        for (c, t) in &acc {
            // an earlier spider expansion can break the gadget shape
            let lc = match decompose_phase_gadget(t, h) {
                Err(Error::NotAGadget(_)) if t.phase(phase_hub).is_some_and(|p| !p.is_parameter_free()) => {
                    decompose_spider(t, phase_hub)?
                }
                Err(Error::NotAGadget(_)) => LinComb::single(t.clone()),
                r => r?,
            };
            for (c2, t2) in lc.into_terms() {
                next.push((c * &c2, t2));
            }
        }
        acc = next;
    }
    Ok(acc)
}

fn running_sum_matches(original: &Diagram, terms: &[(ScalarExpr, Diagram)]) -> bool {
    let params = original.parameters();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    (0..4).all(|_| {
        let b = Binding::random(&params, &mut rng);
        let Ok(want) = contract_scalar(original, &b) else { return true };
        let mut got = num_complex::Complex64::new(0.0, 0.0);
        for (c, d) in terms {
            match (c.eval_at(&b), contract_scalar(d, &b)) {
                (Ok(x), Ok(y)) => got += x * y,
                _ => return true,
            }
        }
        (got - want).norm() <= 1e-9 * (1.0 + want.norm())
    })
}

/// Like `lincomb::canonicalize`, but the global phase stays in the
/// diagram and is part of the merge key.
fn merge_terms(terms: Vec<(ScalarExpr, Diagram)>) -> Vec<(ScalarExpr, Diagram)> {
    let mut order = Vec::new();
    let mut merged: BTreeMap<_, (ScalarExpr, Diagram)> = BTreeMap::new();
    for (c, mut d) in terms {
        absorb_isolated_spiders(&mut d);
        let coeff = &c * d.scalar_factor();
        if coeff.is_zero() {
            continue;
        }
        let phase = d.global_phase().clone();
        d.set_scalar(ScalarExpr::one());
        d.mul_phase(&phase);
        let key = (d.structure_key(), phase);
        match merged.get_mut(&key) {
            Some((acc, _)) => *acc = &*acc + &coeff,
            None => {
                order.push(key.clone());
                merged.insert(key, (coeff, d));
            }
        }
    }
    order
        .into_iter()
        .filter_map(|k| merged.remove(&k))
        .filter(|(c, _)| !c.is_zero())
        .collect()
}

/// Reduces a closed diagram to a ScalarExpr.
pub fn evaluate(d: &Diagram, s: &Strategy) -> Result<Evaluation> {
    if !d.is_closed() {
        return Err(Error::NotClosed);
    }
    let mut pending = vec![(ScalarExpr::one(), d.clone())];
    let mut done: Vec<(ScalarExpr, Diagram)> = Vec::new();
    let mut rounds = Vec::new();
    let mut exhausted = false;
    loop {
        let mut simplified = Vec::with_capacity(pending.len());
        for (c, t) in pending {
            let r = simplify_fixpoint(&t, &s.rules, s.max_steps);
            exhausted |= r.exhausted;
            simplified.push((c, r.diagram));
        }
        let mut todo = Vec::new();
        for (c, t) in merge_terms(simplified) {
            if t.has_parameterized_phase() {
                todo.push((c, t));
            } else {
                done.push((c, t));
            }
        }
        if s.debug_check {
            let all: Vec<_> = done.iter().chain(&todo).cloned().collect();
            assert!(running_sum_matches(d, &all), "evaluation drifted from the input diagram");
        }
        if todo.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for (c, t) in &todo {
            let sites = expansion_sites(t, s.expand);
            // each site doubles the term, so check before building anything
            let k = (sites.0.len() + sites.1.len()) as u32;
            let projected = 1usize.checked_shl(k).map(|m| m + next.len() + done.len());
            match projected {
                Some(total) if total <= s.budget => next.extend(expand_term(c, t, sites)?),
                Some(total) => return Err(Error::TermBudgetExceeded(total)),
                None => return Err(Error::TermBudgetExceeded(usize::MAX)),
            }
        }
        rounds.push(next.len() + done.len());
        pending = next;
    }
    // one sum per distinct global phase; the phases are expanded last
    let mut by_phase: BTreeMap<LinearPhase, ScalarExpr> = BTreeMap::new();
    for (c, t) in &done {
        let mut bare = t.clone();
        bare.set_scalar(ScalarExpr::one());
        let v = c * &exact_contract(&bare)?;
        let acc = by_phase.entry(t.global_phase().clone()).or_insert_with(ScalarExpr::zero);
        *acc = &*acc + &v;
    }
    let mut value = ScalarExpr::zero();
    for (phase, sum) in by_phase {
        value = value + &sum.expand_angles().simplify() * &ScalarExpr::exp_i_phase(&phase);
    }
    Ok(Evaluation { value: value.expand_angles().simplify(), rounds, final_terms: done.len(), exhausted })
}

pub fn evaluate_expectation(d: &Diagram, s: &Strategy) -> Result<ScalarExpr> {
    evaluate(d, s).map(|e| e.value)
}

/// `<Z_u Z_v>` for one edge, optionally on the lightcone-reduced graph.
/// The lightcone only applies to QAOA.
pub fn evaluate_edge(
    g: &ProblemGraph,
    a: &AnsatzSpec,
    edge: (usize, usize),
    lightcone: bool,
    s: &Strategy,
) -> Result<Evaluation> {
    a.check_fits(g)?;
    if !g.has_edge(edge.0, edge.1) {
        return Err(Error::EdgeNotInGraph(edge.0, edge.1));
    }
    let (graph, e) = match a {
        AnsatzSpec::Qaoa { gammas, .. } if lightcone => {
            let lc = lightcone_reduce(g, edge, gammas.len())?;
            (lc.graph, lc.edge)
        }
        _ => (g.clone(), edge),
    };
    let state = build_state(&graph, a)?;
    evaluate(&expectation_diagram(&state, &zz_term(e.0, e.1))?, s)
}

/// `<Z_u Z_v>` keyed by edge, in graph edge order.
pub type EdgeValues = Vec<((usize, usize), ScalarExpr)>;

/// `<C>` for MaxCut together with the per-edge `<Z_u Z_v>`.
pub fn evaluate_maxcut(
    g: &ProblemGraph,
    a: &AnsatzSpec,
    lightcone: bool,
    s: &Strategy,
) -> Result<(ScalarExpr, EdgeValues)> {
    let (constant, terms) = maxcut_hamiltonian(g);
    let mut total = constant;
    let mut per_edge = Vec::new();
    for t in terms {
        let edge = (t.support[0], t.support[1]);
        let zz = evaluate_edge(g, a, edge, lightcone, s)?.value;
        total = &total + &(&t.weight * &zz);
        per_edge.push((edge, zz));
    }
    Ok((total.simplify(), per_edge))
}
