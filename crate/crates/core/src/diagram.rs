//! Open ZX multigraphs with an explicit global scalar.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar_expr::{LinearPhase, Parameter, PhaseJson, ScalarExpr, ScalarJson};

pub type VertexId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Color {
    Z,
    X,
}

impl Color {
    pub fn other(self) -> Color {
        match self {
            Color::Z => Color::X,
            Color::X => Color::Z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKind {
    Z(LinearPhase),
    X(LinearPhase),
    BoundaryIn,
    BoundaryOut,
}

impl VertexKind {
    pub fn spider(color: Color, phase: LinearPhase) -> VertexKind {
        match color {
            Color::Z => VertexKind::Z(phase),
            Color::X => VertexKind::X(phase),
        }
    }

    pub fn color(&self) -> Option<Color> {
        match self {
            VertexKind::Z(_) => Some(Color::Z),
            VertexKind::X(_) => Some(Color::X),
            _ => None,
        }
    }

    pub fn phase(&self) -> Option<&LinearPhase> {
        match self {
            VertexKind::Z(p) | VertexKind::X(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, VertexKind::BoundaryIn | VertexKind::BoundaryOut)
    }
}

/// Open ZX diagram. Parallel edges and self-loops are allowed; boundary
/// vertices have degree exactly one.
#[derive(Clone, Default)]
pub struct Diagram {
    kinds: BTreeMap<VertexId, VertexKind>,
    // symmetric; a self-loop on v is stored once under adj[v][v]
    adj: BTreeMap<VertexId, BTreeMap<VertexId, usize>>,
    inputs: Vec<VertexId>,
    outputs: Vec<VertexId>,
    scalar: ScalarExpr,
    // global phase kept apart so that e^{i a} factors do not expand
    phase: LinearPhase,
    next_id: VertexId,
}

impl PartialEq for Diagram {
    fn eq(&self, other: &Diagram) -> bool {
        self.kinds == other.kinds
            && self.adj == other.adj
            && self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.scalar == other.scalar
            && self.phase == other.phase
    }
}

impl fmt::Debug for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Diagram(scalar = {} * e^(i*({})))", self.scalar, self.phase)?;
        for (v, k) in &self.kinds {
            let nbrs: Vec<String> = self.adj[v]
                .iter()
                .map(|(w, c)| if *c == 1 { w.to_string() } else { format!("{w}x{c}") })
                .collect();
            writeln!(f, "  {v}: {k:?} -- [{}]", nbrs.join(", "))?;
        }
        write!(f, "  in {:?} out {:?}", self.inputs, self.outputs)
    }
}

impl Diagram {
    pub fn new() -> Diagram {
        Diagram { scalar: ScalarExpr::one(), ..Default::default() }
    }

    pub fn add_vertex(&mut self, kind: VertexKind) -> VertexId {
        let v = self.next_id;
        self.next_id += 1;
        self.kinds.insert(v, kind);
        self.adj.insert(v, BTreeMap::new());
        v
    }

    pub fn add_spider(&mut self, color: Color, phase: LinearPhase) -> VertexId {
        self.add_vertex(VertexKind::spider(color, phase))
    }

    pub fn add_input(&mut self) -> VertexId {
        let v = self.add_vertex(VertexKind::BoundaryIn);
        self.inputs.push(v);
        v
    }

    pub fn add_output(&mut self) -> VertexId {
        let v = self.add_vertex(VertexKind::BoundaryOut);
        self.outputs.push(v);
        v
    }

    /// Adds one edge. Panics if an endpoint does not exist.
    pub fn add_edge(&mut self, a: VertexId, b: VertexId) {
        assert!(self.kinds.contains_key(&a) && self.kinds.contains_key(&b), "edge {a}-{b} has a missing endpoint");
        *self.adj.get_mut(&a).unwrap().entry(b).or_insert(0) += 1;
        if a != b {
            *self.adj.get_mut(&b).unwrap().entry(a).or_insert(0) += 1;
        }
    }

    /// Removes one copy of edge a-b; returns false if there was none.
    pub fn remove_edge(&mut self, a: VertexId, b: VertexId) -> bool {
        let Some(c) = self.adj.get_mut(&a).and_then(|m| m.get_mut(&b)) else {
            return false;
        };
        *c -= 1;
        if *c == 0 {
            self.adj.get_mut(&a).unwrap().remove(&b);
        }
        if a != b {
            let c = self.adj.get_mut(&b).unwrap().get_mut(&a).unwrap();
            *c -= 1;
            if *c == 0 {
                self.adj.get_mut(&b).unwrap().remove(&a);
            }
        }
        true
    }

    pub fn remove_vertex(&mut self, v: VertexId) {
        if let Some(nbrs) = self.adj.remove(&v) {
            for w in nbrs.keys() {
                if *w != v {
                    self.adj.get_mut(w).unwrap().remove(&v);
                }
            }
        }
        self.kinds.remove(&v);
        self.inputs.retain(|x| *x != v);
        self.outputs.retain(|x| *x != v);
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.kinds.contains_key(&v)
    }

    pub fn kind(&self, v: VertexId) -> Option<&VertexKind> {
        self.kinds.get(&v)
    }

    pub fn color(&self, v: VertexId) -> Option<Color> {
        self.kinds.get(&v).and_then(|k| k.color())
    }

    pub fn phase(&self, v: VertexId) -> Option<&LinearPhase> {
        self.kinds.get(&v).and_then(|k| k.phase())
    }

    /// Replaces the phase of a spider. Panics on boundaries.
    pub fn set_phase(&mut self, v: VertexId, phase: LinearPhase) {
        let k = self.kinds.get_mut(&v).expect("no such vertex");
        *k = VertexKind::spider(k.color().expect("boundaries carry no phase"), phase);
    }

    pub fn set_kind(&mut self, v: VertexId, kind: VertexKind) {
        *self.kinds.get_mut(&v).expect("no such vertex") = kind;
    }

    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &VertexKind)> {
        self.kinds.iter().map(|(v, k)| (*v, k))
    }

    pub fn vertex_ids(&self) -> Vec<VertexId> {
        self.kinds.keys().copied().collect()
    }

    pub fn num_vertices(&self) -> usize {
        self.kinds.len()
    }

    pub fn spiders(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.kinds.iter().filter(|(_, k)| !k.is_boundary()).map(|(v, _)| *v)
    }

    /// Neighbors with edge multiplicities; a self-loop appears as `(v, loops)`.
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, usize)> + '_ {
        self.adj.get(&v).into_iter().flat_map(|m| m.iter().map(|(w, c)| (*w, *c)))
    }

    /// Neighbor list with one entry per edge end, self-loops excluded.
    pub fn neighbor_list(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = Vec::new();
        for (w, c) in self.neighbors(v) {
            if w != v {
                out.extend(std::iter::repeat_n(w, c));
            }
        }
        out
    }

    pub fn edge_count(&self, a: VertexId, b: VertexId) -> usize {
        self.adj.get(&a).and_then(|m| m.get(&b)).copied().unwrap_or(0)
    }

    pub fn self_loops(&self, v: VertexId) -> usize {
        self.edge_count(v, v)
    }

    /// Number of edge ends at `v`; a self-loop counts twice.
    pub fn degree(&self, v: VertexId) -> usize {
        self.neighbors(v).map(|(w, c)| if w == v { 2 * c } else { c }).sum()
    }

    /// All edges with multiplicity, each as `(min, max)`, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (a, m) in &self.adj {
            for (b, c) in m {
                if a <= b {
                    out.extend(std::iter::repeat_n((*a, *b), *c));
                }
            }
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.adj
            .iter()
            .flat_map(|(a, m)| m.iter().filter(move |(b, _)| *a <= **b).map(|(_, c)| *c))
            .sum()
    }

    pub fn inputs(&self) -> &[VertexId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[VertexId] {
        &self.outputs
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.inputs.len(), self.outputs.len())
    }

    pub fn is_closed(&self) -> bool {
        self.inputs.is_empty() && self.outputs.is_empty()
    }

    /// The global factor, including the global phase.
    pub fn scalar(&self) -> ScalarExpr {
        if self.phase.is_zero() {
            self.scalar.clone()
        } else {
            &self.scalar * &ScalarExpr::exp_i_phase(&self.phase)
        }
    }

    /// The global factor without its phase part.
    pub fn scalar_factor(&self) -> &ScalarExpr {
        &self.scalar
    }

    pub fn global_phase(&self) -> &LinearPhase {
        &self.phase
    }

    /// Replaces the whole global factor, phase included.
    pub fn set_scalar(&mut self, s: ScalarExpr) {
        self.scalar = s;
        self.phase = LinearPhase::zero();
    }

    /// Multiplies by `e^{i a}`.
    pub fn mul_phase(&mut self, a: &LinearPhase) {
        self.phase = &self.phase + a;
    }

    pub fn mul_scalar(&mut self, s: &ScalarExpr) {
        self.scalar = &self.scalar * s;
    }

    pub fn mul_sqrt2_pow(&mut self, k: i32) {
        self.scalar = self.scalar.mul_sqrt2_pow(k);
    }

    /// Parameters occurring in spider phases or in the scalar.
    pub fn parameters(&self) -> BTreeSet<Parameter> {
        let mut out = self.scalar.parameters();
        out.extend(self.phase.parameters().cloned());
        for k in self.kinds.values() {
            if let Some(p) = k.phase() {
                out.extend(p.parameters().cloned());
            }
        }
        out
    }

    pub fn has_parameterized_phase(&self) -> bool {
        self.kinds.values().any(|k| k.phase().is_some_and(|p| !p.is_parameter_free()))
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (list, want) in [(&self.inputs, VertexKind::BoundaryIn), (&self.outputs, VertexKind::BoundaryOut)] {
            for v in list.iter() {
                match self.kinds.get(v) {
                    Some(k) if *k == want => {}
                    _ => return Err(Error::InvalidDiagram(format!("boundary list entry {v} is not a {want:?} vertex"))),
                }
                if !seen.insert(*v) {
                    return Err(Error::InvalidDiagram(format!("boundary {v} listed twice")));
                }
            }
        }
        for (v, k) in &self.kinds {
            if k.is_boundary() {
                if !seen.contains(v) {
                    return Err(Error::InvalidDiagram(format!("boundary {v} missing from inputs/outputs")));
                }
                if self.degree(*v) != 1 || self.self_loops(*v) > 0 {
                    return Err(Error::BoundaryDegreeViolation(*v));
                }
            }
        }
        for (a, m) in &self.adj {
            for (b, c) in m {
                if !self.kinds.contains_key(b) {
                    return Err(Error::DanglingWire(*b));
                }
                if self.edge_count(*b, *a) != *c || *c == 0 {
                    return Err(Error::InvalidDiagram(format!("asymmetric adjacency at {a}-{b}")));
                }
            }
        }
        if self.kinds.keys().any(|v| *v >= self.next_id) {
            return Err(Error::InvalidDiagram("vertex id beyond counter".into()));
        }
        Ok(())
    }

    /// Replaces every boundary-boundary edge by a boundary-Z(0)-boundary path.
    fn normalize_bare_wires(&mut self) {
        for (a, b) in self.edges() {
            let both = self.kinds[&a].is_boundary() && self.kinds[&b].is_boundary();
            if both && a != b {
                self.remove_edge(a, b);
                let z = self.add_spider(Color::Z, LinearPhase::zero());
                self.add_edge(a, z);
                self.add_edge(z, b);
            }
        }
    }

    /// Sequential composition: `a` then `b`. The oracle matrix is `M(b) * M(a)`.
    pub fn compose(a: &Diagram, b: &Diagram) -> Result<Diagram> {
        if a.outputs.len() != b.inputs.len() {
            return Err(Error::ArityMismatch { expected: a.outputs.len(), found: b.inputs.len() });
        }
        let mut d = a.clone();
        let off = d.append(b);
        for (ao, bi) in a.outputs.iter().zip(&b.inputs) {
            let bi = bi + off;
            let x = d.neighbor_list(*ao)[0];
            let y = d.neighbor_list(bi)[0];
            d.remove_vertex(*ao);
            d.remove_vertex(bi);
            d.add_edge(x, y);
        }
        d.inputs = a.inputs.clone();
        d.outputs = b.outputs.iter().map(|v| v + off).collect();
        d.scalar = &a.scalar * &b.scalar;
        d.phase = &a.phase + &b.phase;
        d.normalize_bare_wires();
        Ok(d)
    }

    /// Parallel composition; inputs and outputs of `a` come first.
    pub fn tensor(a: &Diagram, b: &Diagram) -> Diagram {
        let mut d = a.clone();
        let off = d.append(b);
        d.inputs.extend(b.inputs.iter().map(|v| v + off));
        d.outputs.extend(b.outputs.iter().map(|v| v + off));
        d.scalar = &a.scalar * &b.scalar;
        d.phase = &a.phase + &b.phase;
        d
    }

    /// Copies `b` in as a disjoint piece, leaving the boundary lists alone.
    /// Returns the new ids of `b`'s inputs and outputs; the scalar is multiplied in.
    pub fn embed(&mut self, b: &Diagram) -> (Vec<VertexId>, Vec<VertexId>) {
        let off = self.append(b);
        self.scalar = &self.scalar * &b.scalar;
        self.phase = &self.phase + &b.phase;
        (
            b.inputs.iter().map(|v| v + off).collect(),
            b.outputs.iter().map(|v| v + off).collect(),
        )
    }

    /// Copies the vertices and edges of `b` with ids shifted; returns the shift.
    fn append(&mut self, b: &Diagram) -> VertexId {
        let off = self.next_id;
        for (v, k) in &b.kinds {
            self.kinds.insert(v + off, k.clone());
            self.adj.insert(v + off, b.adj[v].iter().map(|(w, c)| (w + off, *c)).collect());
        }
        self.next_id = off + b.next_id;
        off
    }

    /// Conjugate transpose: boundaries swapped, phases negated, scalar conjugated.
    pub fn adjoint(&self) -> Diagram {
        let mut d = self.clone();
        for k in d.kinds.values_mut() {
            *k = match k {
                VertexKind::Z(p) => VertexKind::Z(-&*p),
                VertexKind::X(p) => VertexKind::X(-&*p),
                VertexKind::BoundaryIn => VertexKind::BoundaryOut,
                VertexKind::BoundaryOut => VertexKind::BoundaryIn,
            };
        }
        std::mem::swap(&mut d.inputs, &mut d.outputs);
        d.scalar = self.scalar.conj();
        d.phase = -&self.phase;
        d
    }

    /// A relabeling-invariant key for merging terms that come from a
    /// common host: vertices are renumbered densely in id order.
    pub fn structure_key(&self) -> StructureKey {
        let index: BTreeMap<VertexId, usize> = self.kinds.keys().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut edges = Vec::new();
        for (a, m) in &self.adj {
            for (b, c) in m {
                if a <= b {
                    edges.push((index[a], index[b], *c));
                }
            }
        }
        StructureKey {
            kinds: self.kinds.values().cloned().collect(),
            edges,
            inputs: self.inputs.iter().map(|v| index[v]).collect(),
            outputs: self.outputs.iter().map(|v| index[v]).collect(),
        }
    }

    pub fn to_wire(&self) -> DiagramJson {
        let vertices = self
            .kinds
            .iter()
            .map(|(v, k)| {
                let (kind, phase) = match k {
                    VertexKind::Z(p) => ("Z", Some(p.to_wire())),
                    VertexKind::X(p) => ("X", Some(p.to_wire())),
                    VertexKind::BoundaryIn => ("in", None),
                    VertexKind::BoundaryOut => ("out", None),
                };
                VertexJson { id: *v, kind: kind.to_string(), phase }
            })
            .collect();
        DiagramJson {
            vertices,
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            scalar: self.scalar.to_wire(),
            global_phase: (!self.phase.is_zero()).then(|| self.phase.to_wire()),
            params: self.parameters().iter().map(|p| p.name().to_string()).collect(),
        }
    }

    pub fn from_wire(w: &DiagramJson) -> Result<Diagram> {
        let schema = |path: String, msg: String| Error::SchemaViolation { path, msg };
        let mut d = Diagram::new();
        for (i, v) in w.vertices.iter().enumerate() {
            let phase = |v: &VertexJson| -> Result<LinearPhase> {
                match &v.phase {
                    None => Ok(LinearPhase::zero()),
                    Some(p) => LinearPhase::from_wire(p)
                        .map_err(|e| schema(format!("vertices[{i}].phase"), e.to_string())),
                }
            };
            let kind = match v.kind.as_str() {
                "Z" => VertexKind::Z(phase(v)?),
                "X" => VertexKind::X(phase(v)?),
                "in" | "out" if v.phase.is_some() => {
                    return Err(schema(format!("vertices[{i}].phase"), "boundaries carry no phase".into()))
                }
                "in" => VertexKind::BoundaryIn,
                "out" => VertexKind::BoundaryOut,
                other => return Err(schema(format!("vertices[{i}].kind"), format!("unknown kind `{other}`"))),
            };
            if d.kinds.insert(v.id, kind).is_some() {
                return Err(schema(format!("vertices[{i}].id"), format!("duplicate id {}", v.id)));
            }
            d.adj.insert(v.id, BTreeMap::new());
            d.next_id = d.next_id.max(v.id + 1);
        }
        for [a, b] in &w.edges {
            for x in [a, b] {
                if !d.kinds.contains_key(x) {
                    return Err(Error::DanglingWire(*x));
                }
            }
            d.add_edge(*a, *b);
        }
        d.inputs = w.inputs.clone();
        d.outputs = w.outputs.clone();
        d.scalar = ScalarExpr::from_wire(&w.scalar).map_err(|e| schema("scalar".into(), e.to_string()))?;
        if let Some(p) = &w.global_phase {
            d.phase = LinearPhase::from_wire(p).map_err(|e| schema("global_phase".into(), e.to_string()))?;
        }
        d.normalize_bare_wires();
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("diagram serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Diagram> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let w: DiagramJson = serde_path_to_error::deserialize(de).map_err(|e| Error::SchemaViolation {
            path: e.path().to_string(),
            msg: e.inner().to_string(),
        })?;
        Diagram::from_wire(&w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StructureKey {
    kinds: Vec<VertexKind>,
    edges: Vec<(usize, usize, usize)>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexJson {
    pub id: VertexId,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramJson {
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<[VertexId; 2]>,
    pub inputs: Vec<VertexId>,
    pub outputs: Vec<VertexId>,
    pub scalar: ScalarJson,
    /// Extra factor `e^{i global_phase}` multiplying `scalar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_phase: Option<PhaseJson>,
    #[serde(default)]
    pub params: Vec<String>,
}

/// Declarative construction with validation at the end.
#[derive(Clone, Debug, Default)]
pub struct DiagramBuilder {
    d: Diagram,
    wires: Vec<(VertexId, VertexId)>,
}

impl DiagramBuilder {
    pub fn new() -> DiagramBuilder {
        DiagramBuilder { d: Diagram::new(), wires: Vec::new() }
    }

    pub fn z(&mut self, phase: LinearPhase) -> VertexId {
        self.d.add_spider(Color::Z, phase)
    }

    pub fn x(&mut self, phase: LinearPhase) -> VertexId {
        self.d.add_spider(Color::X, phase)
    }

    pub fn input(&mut self) -> VertexId {
        self.d.add_input()
    }

    pub fn output(&mut self) -> VertexId {
        self.d.add_output()
    }

    pub fn wire(&mut self, a: VertexId, b: VertexId) -> &mut Self {
        self.wires.push((a, b));
        self
    }

    pub fn scalar(&mut self, s: ScalarExpr) -> &mut Self {
        self.d.mul_scalar(&s);
        self
    }

    pub fn build(&self) -> Result<Diagram> {
        let mut d = self.d.clone();
        for (a, b) in &self.wires {
            for x in [a, b] {
                if !d.contains(*x) {
                    return Err(Error::DanglingWire(*x));
                }
            }
            d.add_edge(*a, *b);
        }
        for v in d.inputs.iter().chain(&d.outputs) {
            if d.degree(*v) != 1 {
                return Err(Error::BoundaryDegreeViolation(*v));
            }
        }
        d.normalize_bare_wires();
        d.validate()?;
        Ok(d)
    }
}

/// Wire-by-wire construction of circuit-shaped diagrams.
#[derive(Clone, Debug)]
pub struct Circuit {
    d: Diagram,
    front: Vec<VertexId>,
}

impl Circuit {
    /// `n` open input wires.
    pub fn new(n: usize) -> Circuit {
        let mut d = Diagram::new();
        let front = (0..n).map(|_| d.add_input()).collect();
        Circuit { d, front }
    }

    /// One single-leg spider per wire as the initial state.
    pub fn from_states(states: &[(Color, LinearPhase)]) -> Circuit {
        let mut d = Diagram::new();
        let front = states.iter().map(|(c, p)| d.add_spider(*c, p.clone())).collect();
        Circuit { d, front }
    }

    pub fn qubits(&self) -> usize {
        self.front.len()
    }

    pub fn spider(&mut self, q: usize, color: Color, phase: LinearPhase) -> VertexId {
        let v = self.d.add_spider(color, phase);
        self.d.add_edge(self.front[q], v);
        self.front[q] = v;
        v
    }

    pub fn z(&mut self, q: usize, phase: LinearPhase) -> VertexId {
        self.spider(q, Color::Z, phase)
    }

    pub fn x(&mut self, q: usize, phase: LinearPhase) -> VertexId {
        self.spider(q, Color::X, phase)
    }

    /// CNOT as Z control joined to X target, scalar sqrt(2).
    pub fn cnot(&mut self, control: usize, target: usize) {
        let c = self.z(control, LinearPhase::zero());
        let t = self.x(target, LinearPhase::zero());
        self.d.add_edge(c, t);
        self.d.mul_sqrt2_pow(1);
    }

    /// Phase gadget with phase hub `phase` on the listed wires; returns the X hub.
    /// Its matrix is `2^{(1-k)/2} exp(i phase * parity)` on the computational basis.
    pub fn gadget(&mut self, qs: &[usize], phase: LinearPhase) -> VertexId {
        let hub = self.d.add_spider(Color::X, LinearPhase::zero());
        let ph = self.d.add_spider(Color::Z, phase);
        self.d.add_edge(hub, ph);
        for q in qs {
            let leg = self.z(*q, LinearPhase::zero());
            self.d.add_edge(leg, hub);
        }
        hub
    }

    pub fn scalar(&mut self, s: &ScalarExpr) {
        self.d.mul_scalar(s);
    }

    /// Multiplies the global factor by `e^{i a}`.
    pub fn phase(&mut self, a: &LinearPhase) {
        self.d.mul_phase(a);
    }

    pub fn diagram_mut(&mut self) -> &mut Diagram {
        &mut self.d
    }

    /// The diagram as built, without output boundaries.
    pub fn into_diagram(self) -> Diagram {
        self.d
    }

    pub fn finish(mut self) -> Diagram {
        for q in 0..self.front.len() {
            if self.d.kind(self.front[q]).is_some_and(|k| k.is_boundary()) {
                self.z(q, LinearPhase::zero());
            }
            let o = self.d.add_output();
            self.d.add_edge(self.front[q], o);
        }
        self.d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{contract_numeric, matrices_close};
    use crate::scalar_expr::{r64, Binding};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn wire(color: Color, phase: LinearPhase) -> Diagram {
        let mut c = Circuit::new(1);
        c.spider(0, color, phase);
        c.finish()
    }

    fn m(d: &Diagram) -> DMatrix<Complex64> {
        contract_numeric(d, &Binding::new()).unwrap()
    }

    #[test]
    fn identity_wire_and_empty() {
        let mut b = DiagramBuilder::new();
        let i = b.input();
        let z = b.z(LinearPhase::zero());
        let o = b.output();
        b.wire(i, z).wire(z, o);
        let d = b.build().unwrap();
        assert!(d.scalar().is_one());
        assert!(matrices_close(&m(&d), &DMatrix::identity(2, 2), 1e-12));

        let e = Diagram::new();
        assert_eq!(m(&e)[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(
            e.to_json(),
            r#"{"vertices":[],"edges":[],"inputs":[],"outputs":[],"scalar":{"monomials":[{"re":"1/1","im":"0/1","sqrt2":0,"atoms":[]}]},"params":[]}"#
        );
    }

    #[test]
    fn builder_errors() {
        let mut b = DiagramBuilder::new();
        let i = b.input();
        b.wire(i, 42);
        assert_eq!(b.build(), Err(Error::DanglingWire(42)));

        let mut b = DiagramBuilder::new();
        let i = b.input();
        let z = b.z(LinearPhase::zero());
        b.wire(i, z).wire(i, z);
        assert_eq!(b.build(), Err(Error::BoundaryDegreeViolation(i)));
    }

    #[test]
    fn bare_wires_are_normalized() {
        let mut b = DiagramBuilder::new();
        let i = b.input();
        let o = b.output();
        b.wire(i, o);
        let d = b.build().unwrap();
        assert_eq!(d.num_vertices(), 3);
        assert!(matrices_close(&m(&d), &DMatrix::identity(2, 2), 1e-12));
    }

    #[test]
    fn compose_examples() {
        let s = wire(Color::Z, LinearPhase::pi_times(r64(1, 2)));
        let zz = Diagram::compose(&s, &s).unwrap();
        assert!(matrices_close(&m(&zz), &m(&wire(Color::Z, LinearPhase::pi())), 1e-12));

        let x = wire(Color::X, LinearPhase::pi());
        let xx = Diagram::compose(&x, &x).unwrap();
        assert!(matrices_close(&m(&xx), &DMatrix::identity(2, 2), 1e-12));

        let id = wire(Color::Z, LinearPhase::zero());
        let d = Diagram::compose(&id, &s).unwrap();
        assert!(matrices_close(&m(&d), &m(&s), 1e-12));

        let two = Circuit::new(2).finish();
        assert_eq!(
            Diagram::compose(&s, &two),
            Err(Error::ArityMismatch { expected: 1, found: 2 })
        );
    }

    #[test]
    fn tensor_examples() {
        let s = wire(Color::Z, LinearPhase::pi_times(r64(1, 2)));
        assert_eq!(Diagram::tensor(&Diagram::new(), &s).to_json(), s.to_json());
        let id2 = Diagram::tensor(&wire(Color::Z, LinearPhase::zero()), &wire(Color::X, LinearPhase::zero()));
        assert!(matrices_close(&m(&id2), &DMatrix::identity(4, 4), 1e-12));

        let mut z = Diagram::new();
        z.add_spider(Color::Z, LinearPhase::pi_times(r64(1, 2)));
        let mut x = Diagram::new();
        x.add_spider(Color::X, LinearPhase::zero());
        let both = Diagram::tensor(&z, &x);
        let expect = m(&z)[(0, 0)] * m(&x)[(0, 0)];
        assert!((m(&both)[(0, 0)] - expect).norm() < 1e-12);
    }

    #[test]
    fn adjoint_examples() {
        let g = LinearPhase::param("gamma");
        let d = wire(Color::Z, g.clone());
        let a = d.adjoint();
        let z = a.spiders().next().unwrap();
        assert_eq!(a.phase(z), Some(&-g));
        assert_eq!(a.adjoint(), d);
    }

    #[test]
    fn json_round_trip_and_schema_errors() {
        let mut c = Circuit::from_states(&vec![(Color::Z, LinearPhase::zero()); 2]);
        c.gadget(&[0, 1], LinearPhase::param_scaled("gamma", r64(-2, 1)));
        c.scalar(&ScalarExpr::sqrt2_pow(1));
        let mut d = c.finish();
        let hub = d.spiders().find(|v| d.color(*v) == Some(Color::X)).unwrap();
        let z = d.spiders().next().unwrap();
        d.add_edge(hub, z);
        d.add_edge(z, z);
        let back = Diagram::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        assert!(back.to_json().contains(r#""params":["gamma"]"#));

        let bad = d.to_json().replacen(r#""kind":"Z""#, r#""kind":"H""#, 1);
        match Diagram::from_json(&bad) {
            Err(Error::SchemaViolation { path, .. }) => assert!(path.starts_with("vertices[")),
            other => panic!("expected schema violation, got {other:?}"),
        }
        match Diagram::from_json(r#"{"vertices":[],"edges":[]}"#) {
            Err(Error::SchemaViolation { .. }) => {}
            other => panic!("expected schema violation, got {other:?}"),
        }
    }
}
