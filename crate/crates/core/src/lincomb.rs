//! Formal linear combinations of diagrams with a common arity.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::diagram::{Color, Diagram, DiagramJson, StructureKey, VertexId};
use crate::error::{Error, Result};
use crate::evaluator::exact_contract;
use crate::rewrite::{absorb_isolated_spiders, recognize_gadget};
use crate::scalar_expr::{LinearPhase, Parameter, ScalarExpr, ScalarJson};

pub const DEFAULT_TERM_LIMIT: usize = 4096;

/// `sum_i coeff_i * diagram_i`. Arity is `(inputs, outputs)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinComb {
    arity: (usize, usize),
    terms: Vec<(ScalarExpr, Diagram)>,
}

impl LinComb {
    /// The empty sum, i.e. the zero map.
    pub fn new(arity: (usize, usize)) -> LinComb {
        LinComb { arity, terms: Vec::new() }
    }

    pub fn single(d: Diagram) -> LinComb {
        LinComb { arity: d.arity(), terms: vec![(ScalarExpr::one(), d)] }
    }

    pub fn from_terms(arity: (usize, usize), terms: Vec<(ScalarExpr, Diagram)>) -> Result<LinComb> {
        let mut lc = LinComb::new(arity);
        for (c, d) in terms {
            lc.push(c, d)?;
        }
        Ok(lc)
    }

    pub fn push(&mut self, coeff: ScalarExpr, d: Diagram) -> Result<()> {
        let (m, n) = d.arity();
        if m != self.arity.0 {
            return Err(Error::ArityMismatch { expected: self.arity.0, found: m });
        }
        if n != self.arity.1 {
            return Err(Error::ArityMismatch { expected: self.arity.1, found: n });
        }
        self.terms.push((coeff, d));
        Ok(())
    }

    pub fn arity(&self) -> (usize, usize) {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ScalarExpr, &Diagram)> {
        self.terms.iter().map(|(c, d)| (c, d))
    }

    pub fn into_terms(self) -> Vec<(ScalarExpr, Diagram)> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn parameters(&self) -> BTreeSet<Parameter> {
        let mut out = BTreeSet::new();
        for (c, d) in &self.terms {
            out.extend(c.parameters());
            out.extend(d.parameters());
        }
        out
    }

    pub fn scale(&self, s: &ScalarExpr) -> LinComb {
        LinComb {
            arity: self.arity,
            terms: self.terms.iter().map(|(c, d)| (s * c, d.clone())).collect(),
        }
    }

    /// Formal sum of two combinations with equal arity.
    pub fn add(&self, other: &LinComb) -> Result<LinComb> {
        let mut out = self.clone();
        for (c, d) in &other.terms {
            out.push(c.clone(), d.clone())?;
        }
        Ok(out)
    }

    pub fn to_wire(&self) -> LinCombJson {
        LinCombJson {
            arity: [self.arity.0, self.arity.1],
            terms: self
                .terms
                .iter()
                .map(|(c, d)| TermJson { coeff: c.to_wire(), diagram: d.to_wire() })
                .collect(),
        }
    }

    pub fn from_wire(w: &LinCombJson) -> Result<LinComb> {
        let mut lc = LinComb::new((w.arity[0], w.arity[1]));
        for t in &w.terms {
            lc.push(ScalarExpr::from_wire(&t.coeff)?, Diagram::from_wire(&t.diagram)?)?;
        }
        Ok(lc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("lincomb serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<LinComb> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let w: LinCombJson = serde_path_to_error::deserialize(de).map_err(|e| Error::SchemaViolation {
            path: e.path().to_string(),
            msg: e.inner().to_string(),
        })?;
        LinComb::from_wire(&w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: ScalarJson,
    pub diagram: DiagramJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinCombJson {
    pub arity: [usize; 2],
    pub terms: Vec<TermJson>,
}

// ---------------------------------------------------------------------------
// Decompositions

/// Splits a phase into its parameter part and its constant part.
fn split_phase(d: &Diagram, v: VertexId) -> Result<(LinearPhase, LinearPhase)> {
    let theta = d.phase(v).ok_or(Error::NotDecomposable(v))?;
    let phi = theta.without_pi();
    if phi.is_zero() {
        return Err(Error::NotDecomposable(v));
    }
    Ok((phi, LinearPhase::pi_times(theta.pi_part())))
}

/// `e^{i phi x} = e^{i phi/2} (cos(phi/2) - i sin(phi/2) (-1)^x)`: the two
/// coefficients and the common phase `phi/2`, which goes into the diagrams.
fn rotation_coeffs(phi: &LinearPhase) -> (ScalarExpr, ScalarExpr, LinearPhase) {
    let half = phi.scale(Rational64::new(1, 2));
    let c = ScalarExpr::cos(&half);
    let s = -(&ScalarExpr::i() * &ScalarExpr::sin(&half));
    (c, s, half)
}

/// Any spider with a parameterized phase `phi + k pi` as a two-term sum of
/// the same spider with phases `k pi` and `k pi + pi`.
pub fn decompose_spider(host: &Diagram, v: VertexId) -> Result<LinComb> {
    let (phi, kappa) = split_phase(host, v)?;
    let (c0, c1, half) = rotation_coeffs(&phi);
    let mut a = host.clone();
    a.mul_phase(&half);
    a.set_phase(v, kappa.clone());
    let mut b = a.clone();
    b.set_phase(v, &kappa + &LinearPhase::pi());
    LinComb::from_terms(host.arity(), vec![(c0, a), (c1, b)])
}

fn decompose_colored(host: &Diagram, v: VertexId, color: Color) -> Result<LinComb> {
    if host.color(v) != Some(color) || host.degree(v) != 2 || host.self_loops(v) > 0 {
        return Err(Error::NotDecomposable(v));
    }
    decompose_spider(host, v)
}

/// A parameterized Z spider on a wire.
pub fn decompose_z_rotation(host: &Diagram, v: VertexId) -> Result<LinComb> {
    decompose_colored(host, v, Color::Z)
}

/// A parameterized X spider on a wire.
pub fn decompose_x_rotation(host: &Diagram, v: VertexId) -> Result<LinComb> {
    decompose_colored(host, v, Color::X)
}

/// A gadget with a parameterized phase. When the phase has no constant
/// part the gadget disappears from both terms: the first keeps plain legs
/// and the second puts a pi on every leg.
pub fn decompose_phase_gadget(host: &Diagram, hub: VertexId) -> Result<LinComb> {
    let g = recognize_gadget(host, hub, false).ok_or(Error::NotAGadget(hub))?;
    let (phi, kappa) = split_phase(host, g.phase_hub)?;
    if !kappa.is_zero() {
        return decompose_spider(host, g.phase_hub);
    }
    let (c0, c1, half) = rotation_coeffs(&phi);
    let k = g.legs.len() as i32;
    let mut a = host.clone();
    a.mul_phase(&half);
    a.remove_vertex(g.hub);
    a.remove_vertex(g.phase_hub);
    a.mul_sqrt2_pow(1 - k);
    let mut b = a.clone();
    for leg in &g.legs {
        let p = b.phase(*leg).unwrap() + &LinearPhase::pi();
        b.set_phase(*leg, p);
    }
    LinComb::from_terms(host.arity(), vec![(c0, a), (c1, b)])
}

// ---------------------------------------------------------------------------
// Substitution, product, canonical form

/// A subdiagram cut out along the listed edges. Each crossing edge is given
/// as `(inside, outside)`; `inputs` and `outputs` line up with the
/// replacement's boundaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub vertices: BTreeSet<VertexId>,
    pub inputs: Vec<(VertexId, VertexId)>,
    pub outputs: Vec<(VertexId, VertexId)>,
}

impl Region {
    /// The region `vertices` whose crossing edges all sit on the wires of
    /// `inputs` and `outputs`, given as outside vertices.
    pub fn around(d: &Diagram, vertices: impl IntoIterator<Item = VertexId>, inputs: &[VertexId], outputs: &[VertexId]) -> Result<Region> {
        let vertices: BTreeSet<VertexId> = vertices.into_iter().collect();
        let find = |o: &VertexId| -> Result<(VertexId, VertexId)> {
            vertices
                .iter()
                .find(|v| d.edge_count(**v, *o) > 0)
                .map(|v| (*v, *o))
                .ok_or_else(|| Error::InvalidDiagram(format!("vertex {o} does not touch the region")))
        };
        Ok(Region {
            inputs: inputs.iter().map(find).collect::<Result<_>>()?,
            outputs: outputs.iter().map(find).collect::<Result<_>>()?,
            vertices,
        })
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.inputs.len(), self.outputs.len())
    }

    fn check(&self, host: &Diagram) -> Result<()> {
        let mut crossing = Vec::new();
        for v in &self.vertices {
            if !host.contains(*v) || host.kind(*v).is_some_and(|k| k.is_boundary()) {
                return Err(Error::InvalidDiagram(format!("region vertex {v} is not a spider of the host")));
            }
            for (w, c) in host.neighbors(*v) {
                if !self.vertices.contains(&w) {
                    crossing.extend(std::iter::repeat_n((*v, w), c));
                }
            }
        }
        let mut listed: Vec<_> = self.inputs.iter().chain(&self.outputs).copied().collect();
        crossing.sort();
        listed.sort();
        if crossing != listed {
            return Err(Error::InvalidDiagram("region crossing edges do not match its boundary".into()));
        }
        Ok(())
    }
}

/// Replaces `region` of `host` by each term of `replacement`.
pub fn substitute(host: &Diagram, region: &Region, replacement: &LinComb) -> Result<LinComb> {
    if region.arity() != replacement.arity() {
        return Err(Error::RegionArityMismatch { region: region.arity(), replacement: replacement.arity() });
    }
    region.check(host)?;
    let mut cut = host.clone();
    for v in &region.vertices {
        cut.remove_vertex(*v);
    }
    let outside: Vec<VertexId> = region.inputs.iter().chain(&region.outputs).map(|(_, o)| *o).collect();
    let mut out = LinComb::new(host.arity());
    for (c, r) in replacement.terms() {
        let mut d = cut.clone();
        let (ins, outs) = d.embed(r);
        let bounds: Vec<VertexId> = ins.into_iter().chain(outs).collect();
        let attach: BTreeMap<VertexId, VertexId> = bounds.iter().copied().zip(outside.iter().copied()).collect();
        let mut done = BTreeSet::new();
        for &b in &bounds {
            if done.contains(&b) {
                continue;
            }
            let n = d.neighbor_list(b)[0];
            match attach.get(&n) {
                // a bare wire through the replacement
                Some(&o2) => {
                    d.add_edge(attach[&b], o2);
                    done.insert(n);
                }
                None => d.add_edge(attach[&b], n),
            }
            done.insert(b);
        }
        for b in bounds {
            d.remove_vertex(b);
        }
        out.push(c.clone(), d)?;
    }
    Ok(out)
}

/// Sequential product: terms of `a` then terms of `b`, `a`-major.
pub fn product(a: &LinComb, b: &LinComb) -> Result<LinComb> {
    product_with_limit(a, b, DEFAULT_TERM_LIMIT)
}

pub fn product_with_limit(a: &LinComb, b: &LinComb, limit: usize) -> Result<LinComb> {
    if a.arity.1 != b.arity.0 {
        return Err(Error::ArityMismatch { expected: a.arity.1, found: b.arity.0 });
    }
    let count = a.len() * b.len();
    if count > limit {
        return Err(Error::TermBudgetExceeded(count));
    }
    let mut out = LinComb::new((a.arity.0, b.arity.1));
    for (c, d) in &a.terms {
        for (e, f) in &b.terms {
            out.terms.push((c * e, Diagram::compose(d, f)?));
        }
    }
    Ok(out)
}

/// Absorbs isolated spiders, hoists diagram scalars into coefficients,
/// merges equal diagrams and drops zero terms.
pub fn canonicalize(lc: &LinComb) -> LinComb {
    let mut order: Vec<StructureKey> = Vec::new();
    let mut merged: BTreeMap<StructureKey, (ScalarExpr, Diagram)> = BTreeMap::new();
    for (c, d) in &lc.terms {
        let mut d = d.clone();
        absorb_isolated_spiders(&mut d);
        let coeff = c * &d.scalar();
        if coeff.is_zero() {
            continue;
        }
        d.set_scalar(ScalarExpr::one());
        let key = d.structure_key();
        match merged.get_mut(&key) {
            Some((acc, _)) => *acc = &*acc + &coeff,
            None => {
                order.push(key.clone());
                merged.insert(key, (coeff, d));
            }
        }
    }
    let terms = order
        .into_iter()
        .filter_map(|k| merged.remove(&k))
        .filter(|(c, _)| !c.is_zero())
        .collect();
    LinComb { arity: lc.arity, terms }
}

/// `sum_i coeff_i * exact_contract(d_i)` for a closed combination.
pub fn collapse_closed(lc: &LinComb) -> Result<ScalarExpr> {
    if lc.arity != (0, 0) {
        return Err(Error::NotClosed);
    }
    let mut acc = ScalarExpr::zero();
    for (c, d) in &lc.terms {
        acc = &acc + &(c * &exact_contract(d)?);
    }
    Ok(acc)
}
