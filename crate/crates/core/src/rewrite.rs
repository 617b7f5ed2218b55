//! Scalar-exact local rewrites.
//!
//! Every rule is color-symmetric: an X spider is a Z spider conjugated by
//! Hadamards on all legs, with the same normalization, so each rule holds
//! with the colors swapped and the same scalar.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::diagram::{Color, Diagram, VertexId};
use crate::error::{Error, Result};
use crate::scalar_expr::{LinearPhase, ScalarExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    Fuse,
    Identity,
    Pi,
    Copy,
    Bialgebra,
    Hopf,
    GadgetFuse,
    GadgetPi,
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::Fuse,
        RuleId::Identity,
        RuleId::Pi,
        RuleId::Copy,
        RuleId::Bialgebra,
        RuleId::Hopf,
        RuleId::GadgetFuse,
        RuleId::GadgetPi,
    ];

    pub const DEFAULT_ORDER: [RuleId; 8] = [
        RuleId::Identity,
        RuleId::Fuse,
        RuleId::Pi,
        RuleId::Copy,
        RuleId::Hopf,
        RuleId::Bialgebra,
        RuleId::GadgetFuse,
        RuleId::GadgetPi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::Fuse => "f",
            RuleId::Identity => "id",
            RuleId::Pi => "pi",
            RuleId::Copy => "c",
            RuleId::Bialgebra => "b",
            RuleId::Hopf => "h",
            RuleId::GadgetFuse => "gf",
            RuleId::GadgetPi => "gpi",
        }
    }

    /// Parses a comma-separated list such as `f,id,pi`.
    pub fn parse_list(s: &str) -> Result<Vec<RuleId>> {
        s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = Error;
    fn from_str(s: &str) -> Result<RuleId> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown rule `{s}`")))
    }
}

/// A rule instance. Site layouts:
/// - `Fuse`: `[a, b]` adjacent same-color spiders (`[a, a]` drops self-loops)
/// - `Identity`: `[v]`
/// - `Pi`: `[p, s]` with `p` the pi spider pushed through `s`
/// - `Copy`: `[state, s]`
/// - `Bialgebra`: `[z1, z2, x1, x2]`
/// - `Hopf`: `[z, x]`
/// - `GadgetFuse`: `[hub1, phase_hub1, hub2, phase_hub2]`
/// - `GadgetPi`: `[hub, phase_hub, carrier...]`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub rule: RuleId,
    pub site: Vec<VertexId>,
}

/// A recognized phase gadget: an X hub joined by single edges to one
/// degree-1 Z phase hub and to `k >= 1` Z legs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gadget {
    pub hub: VertexId,
    pub phase_hub: VertexId,
    pub legs: Vec<VertexId>,
}

fn is_spider_of(d: &Diagram, v: VertexId, c: Color) -> bool {
    d.color(v) == Some(c)
}

fn phase_is_zero(d: &Diagram, v: VertexId) -> bool {
    d.phase(v).is_some_and(|p| p.is_zero())
}

fn phase_is_pi(d: &Diagram, v: VertexId) -> bool {
    d.phase(v).is_some_and(|p| p.is_pi())
}

/// Recognizes a gadget whose X hub is `hub`. The hub phase must be 0, or
/// 0 or pi when `allow_pi` is set.
pub fn recognize_gadget(d: &Diagram, hub: VertexId, allow_pi: bool) -> Option<Gadget> {
    if !is_spider_of(d, hub, Color::X) || d.self_loops(hub) > 0 {
        return None;
    }
    if !(phase_is_zero(d, hub) || (allow_pi && phase_is_pi(d, hub))) {
        return None;
    }
    let mut phase_hub = None;
    let mut legs = Vec::new();
    for (w, c) in d.neighbors(hub) {
        if c != 1 || !is_spider_of(d, w, Color::Z) || d.self_loops(w) > 0 {
            return None;
        }
        if d.degree(w) == 1 {
            if phase_hub.replace(w).is_some() {
                return None;
            }
        } else {
            legs.push(w);
        }
    }
    if legs.is_empty() {
        return None;
    }
    Some(Gadget { hub, phase_hub: phase_hub?, legs })
}

pub fn gadgets(d: &Diagram, allow_pi: bool) -> Vec<Gadget> {
    d.spiders().filter_map(|h| recognize_gadget(d, h, allow_pi)).collect()
}

// ---------------------------------------------------------------------------
// Pattern checks shared by find_matches and apply

fn check_fuse(d: &Diagram, a: VertexId, b: VertexId) -> bool {
    let Some(c) = d.color(a) else { return false };
    if a == b {
        return d.self_loops(a) > 0;
    }
    d.color(b) == Some(c) && d.edge_count(a, b) > 0
}

fn check_identity(d: &Diagram, v: VertexId) -> Option<(VertexId, VertexId)> {
    if !phase_is_zero(d, v) || d.self_loops(v) > 0 || d.degree(v) != 2 {
        return None;
    }
    let n = d.neighbor_list(v);
    let boundary = |w: VertexId| d.kind(w).is_some_and(|k| k.is_boundary());
    if boundary(n[0]) && boundary(n[1]) {
        return None;
    }
    Some((n[0], n[1]))
}

/// Returns the other neighbor of `p` when `[p, s]` is a PI site.
fn check_pi(d: &Diagram, p: VertexId, s: VertexId) -> Option<VertexId> {
    let pc = d.color(p)?;
    if p == s || !phase_is_pi(d, p) || d.degree(p) != 2 || d.self_loops(p) > 0 {
        return None;
    }
    if d.color(s) != Some(pc.other()) || d.edge_count(p, s) != 1 || d.self_loops(s) > 0 {
        return None;
    }
    d.neighbor_list(p).into_iter().find(|w| *w != s)
}

fn pi_is_productive(d: &Diagram, p: VertexId, s: VertexId, o: VertexId) -> bool {
    let pc = d.color(p).unwrap();
    if d.color(o) != Some(pc.other()) {
        return false;
    }
    let mut others = d.neighbor_list(s);
    let i = others.iter().position(|w| *w == p).unwrap();
    others.swap_remove(i);
    others.iter().all(|w| d.color(*w) == Some(pc))
}

fn check_copy(d: &Diagram, st: VertexId, s: VertexId) -> bool {
    let Some(c) = d.color(st) else { return false };
    let basis = d.phase(st).is_some_and(|p| p.is_zero() || p.is_pi());
    basis
        && d.degree(st) == 1
        && d.self_loops(st) == 0
        && d.edge_count(st, s) == 1
        && d.color(s) == Some(c.other())
        && d.self_loops(s) == 0
}

fn check_hopf(d: &Diagram, z: VertexId, x: VertexId) -> bool {
    is_spider_of(d, z, Color::Z) && is_spider_of(d, x, Color::X) && d.edge_count(z, x) >= 2
}

/// External neighbors `(ez1, ez2, ex1, ex2)` of a K2,2 core.
fn check_bialgebra(d: &Diagram, site: &[VertexId]) -> Option<[VertexId; 4]> {
    let &[z1, z2, x1, x2] = site else { return None };
    let core = [z1, z2, x1, x2];
    if z1 == z2 || x1 == x2 {
        return None;
    }
    for (v, c) in [(z1, Color::Z), (z2, Color::Z), (x1, Color::X), (x2, Color::X)] {
        if !is_spider_of(d, v, c) || !phase_is_zero(d, v) || d.degree(v) != 3 || d.self_loops(v) > 0 {
            return None;
        }
    }
    for z in [z1, z2] {
        for x in [x1, x2] {
            if d.edge_count(z, x) != 1 {
                return None;
            }
        }
    }
    let ext = |v: VertexId| -> Option<VertexId> {
        let e: Vec<_> = d.neighbor_list(v).into_iter().filter(|w| !core.contains(w)).collect();
        (e.len() == 1).then(|| e[0])
    };
    Some([ext(z1)?, ext(z2)?, ext(x1)?, ext(x2)?])
}

fn check_gadget_fuse(d: &Diagram, site: &[VertexId]) -> Option<(Gadget, Gadget)> {
    let &[h1, p1, h2, p2] = site else { return None };
    let g1 = recognize_gadget(d, h1, false)?;
    let g2 = recognize_gadget(d, h2, false)?;
    if h1 == h2 || g1.phase_hub != p1 || g2.phase_hub != p2 || g1.legs != g2.legs {
        return None;
    }
    Some((g1, g2))
}

/// X(pi) degree-2 spider sitting on a non-hub edge of `leg`.
fn pi_carrier(d: &Diagram, leg: VertexId, hub: VertexId, c: VertexId) -> bool {
    c != hub
        && is_spider_of(d, c, Color::X)
        && phase_is_pi(d, c)
        && d.degree(c) == 2
        && d.self_loops(c) == 0
        && d.edge_count(c, leg) == 1
}

fn gadget_pi_carriers(d: &Diagram, g: &Gadget) -> Vec<VertexId> {
    g.legs
        .iter()
        .filter_map(|leg| {
            d.neighbors(*leg)
                .map(|(w, _)| w)
                .find(|w| pi_carrier(d, *leg, g.hub, *w))
        })
        .collect()
}

/// `(gadget, leg of each carrier)` for a GADGET_PI site.
fn check_gadget_pi(d: &Diagram, site: &[VertexId]) -> Result<(Gadget, Vec<VertexId>)> {
    let (&h, rest) = site.split_first().ok_or(Error::StaleMatch(RuleId::GadgetPi))?;
    let g = recognize_gadget(d, h, true).ok_or(Error::NotAGadget(h))?;
    let (&p, carriers) = rest.split_first().ok_or(Error::StaleMatch(RuleId::GadgetPi))?;
    if p != g.phase_hub {
        return Err(Error::StaleMatch(RuleId::GadgetPi));
    }
    let mut legs = Vec::new();
    for c in carriers {
        let leg = g
            .legs
            .iter()
            .copied()
            .find(|l| pi_carrier(d, *l, h, *c) && !legs.contains(l))
            .ok_or(Error::StaleMatch(RuleId::GadgetPi))?;
        legs.push(leg);
    }
    if legs.is_empty() && !phase_is_pi(d, h) {
        return Err(Error::StaleMatch(RuleId::GadgetPi));
    }
    Ok((g, legs))
}

// ---------------------------------------------------------------------------
// Matching

/// All structural matches of `rule`, sorted by site.
pub fn find_matches(d: &Diagram, rule: RuleId) -> Vec<Match> {
    let mut out: Vec<Vec<VertexId>> = Vec::new();
    let spiders: Vec<VertexId> = d.spiders().collect();
    match rule {
        RuleId::Fuse => {
            for &a in &spiders {
                if d.self_loops(a) > 0 {
                    out.push(vec![a, a]);
                }
                for (b, _) in d.neighbors(a) {
                    if b > a && check_fuse(d, a, b) {
                        out.push(vec![a, b]);
                    }
                }
            }
        }
        RuleId::Identity => out.extend(spiders.iter().filter(|v| check_identity(d, **v).is_some()).map(|v| vec![*v])),
        RuleId::Pi => {
            for &p in &spiders {
                for (s, _) in d.neighbors(p) {
                    if check_pi(d, p, s).is_some() {
                        out.push(vec![p, s]);
                    }
                }
            }
        }
        RuleId::Copy => {
            for &st in &spiders {
                for (s, _) in d.neighbors(st) {
                    if check_copy(d, st, s) {
                        out.push(vec![st, s]);
                    }
                }
            }
        }
        RuleId::Hopf => {
            for &z in &spiders {
                for (x, _) in d.neighbors(z) {
                    if check_hopf(d, z, x) {
                        out.push(vec![z, x]);
                    }
                }
            }
        }
        RuleId::Bialgebra => {
            for &z1 in &spiders {
                if !is_spider_of(d, z1, Color::Z) {
                    continue;
                }
                let xs: Vec<VertexId> = d.neighbors(z1).map(|(w, _)| w).filter(|w| is_spider_of(d, *w, Color::X)).collect();
                for (i, &x1) in xs.iter().enumerate() {
                    for &x2 in &xs[i + 1..] {
                        for (z2, _) in d.neighbors(x1) {
                            let site = vec![z1, z2, x1, x2];
                            if z2 > z1 && check_bialgebra(d, &site).is_some() {
                                out.push(site);
                            }
                        }
                    }
                }
            }
        }
        RuleId::GadgetFuse => {
            let gs = gadgets(d, false);
            for (i, g1) in gs.iter().enumerate() {
                for g2 in &gs[i + 1..] {
                    if g1.legs == g2.legs {
                        out.push(vec![g1.hub, g1.phase_hub, g2.hub, g2.phase_hub]);
                    }
                }
            }
        }
        RuleId::GadgetPi => {
            for g in gadgets(d, true) {
                let carriers = gadget_pi_carriers(d, &g);
                if !carriers.is_empty() || phase_is_pi(d, g.hub) {
                    let mut site = vec![g.hub, g.phase_hub];
                    site.extend(carriers);
                    out.push(site);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out.into_iter().map(|site| Match { rule, site }).collect()
}

/// First match that the fixpoint loop may apply. PI only fires when the
/// pushed spider and every copy it creates fuse right away, and GADGET_PI
/// only clears a pi on the hub; both restrictions prevent pi spiders from
/// bouncing back and forth.
fn first_productive(d: &Diagram, rule: RuleId) -> Option<Match> {
    match rule {
        RuleId::Pi => {
            for p in d.spiders() {
                for (s, _) in d.neighbors(p) {
                    if let Some(o) = check_pi(d, p, s) {
                        if pi_is_productive(d, p, s, o) {
                            return Some(Match { rule, site: vec![p, s] });
                        }
                    }
                }
            }
            None
        }
        RuleId::GadgetPi => d.spiders().find_map(|h| {
            let g = recognize_gadget(d, h, true)?;
            phase_is_pi(d, h).then(|| Match { rule, site: vec![g.hub, g.phase_hub] })
        }),
        RuleId::Fuse => d.spiders().find_map(|a| {
            if d.self_loops(a) > 0 {
                return Some(Match { rule, site: vec![a, a] });
            }
            d.neighbors(a)
                .map(|(b, _)| b)
                .find(|b| *b != a && check_fuse(d, a, *b))
                .map(|b| Match { rule, site: vec![a.min(b), a.max(b)] })
        }),
        RuleId::Identity => d
            .spiders()
            .find(|v| check_identity(d, *v).is_some())
            .map(|v| Match { rule, site: vec![v] }),
        _ => find_matches(d, rule).into_iter().next(),
    }
}

// ---------------------------------------------------------------------------
// Application

/// Applies a match after revalidating it.
pub fn apply(d: &Diagram, m: &Match) -> Result<Diagram> {
    let stale = Error::StaleMatch(m.rule);
    let mut d = d.clone();
    match m.rule {
        RuleId::Fuse => {
            let &[a, b] = m.site.as_slice() else { return Err(stale) };
            if !check_fuse(&d, a, b) {
                return Err(stale);
            }
            if a != b {
                let phase = d.phase(a).unwrap() + d.phase(b).unwrap();
                d.set_phase(a, phase);
                for (w, c) in d.neighbors(b).collect::<Vec<_>>() {
                    let target = if w == b { a } else { w };
                    for _ in 0..c {
                        d.add_edge(a, target);
                    }
                }
                d.remove_vertex(b);
            }
            // self-loops are identities for both colors
            while d.remove_edge(a, a) {}
        }
        RuleId::Identity => {
            let &[v] = m.site.as_slice() else { return Err(stale) };
            let (n1, n2) = check_identity(&d, v).ok_or(stale)?;
            d.remove_vertex(v);
            d.add_edge(n1, n2);
        }
        RuleId::Pi => {
            let &[p, s] = m.site.as_slice() else { return Err(stale) };
            let o = check_pi(&d, p, s).ok_or(stale)?;
            let pc = d.color(p).unwrap();
            let alpha = d.phase(s).unwrap().clone();
            let mut others = d.neighbor_list(s);
            let i = others.iter().position(|w| *w == p).unwrap();
            others.swap_remove(i);
            others.sort();
            d.remove_vertex(p);
            for w in others {
                d.remove_edge(s, w);
                let q = d.add_spider(pc, LinearPhase::pi());
                d.add_edge(s, q);
                d.add_edge(q, w);
            }
            d.add_edge(o, s);
            d.set_phase(s, -&alpha);
            d.mul_phase(&alpha);
        }
        RuleId::Copy => {
            let &[st, s] = m.site.as_slice() else { return Err(stale) };
            if !check_copy(&d, st, s) {
                return Err(stale);
            }
            let kind = d.kind(st).unwrap().clone();
            let a_pi = d.phase(st).unwrap().clone();
            let alpha = d.phase(s).unwrap().clone();
            let deg = d.degree(s) as i32;
            let others: Vec<VertexId> = d.neighbor_list(s).into_iter().filter(|w| *w != st).collect();
            d.remove_vertex(st);
            d.remove_vertex(s);
            for w in others {
                let c = d.add_vertex(kind.clone());
                d.add_edge(c, w);
            }
            d.mul_sqrt2_pow(2 - deg);
            if a_pi.is_pi() {
                d.mul_phase(&alpha);
            }
        }
        RuleId::Hopf => {
            let &[z, x] = m.site.as_slice() else { return Err(stale) };
            if !check_hopf(&d, z, x) {
                return Err(stale);
            }
            d.remove_edge(z, x);
            d.remove_edge(z, x);
            d.mul_sqrt2_pow(-2);
        }
        RuleId::Bialgebra => {
            let [ez1, ez2, ex1, ex2] = check_bialgebra(&d, &m.site).ok_or(stale)?;
            for v in &m.site {
                d.remove_vertex(*v);
            }
            let x = d.add_spider(Color::X, LinearPhase::zero());
            let z = d.add_spider(Color::Z, LinearPhase::zero());
            d.add_edge(x, ez1);
            d.add_edge(x, ez2);
            d.add_edge(z, ex1);
            d.add_edge(z, ex2);
            d.add_edge(x, z);
            d.mul_sqrt2_pow(-1);
        }
        RuleId::GadgetFuse => {
            if m.site.len() == 4 && recognize_gadget(&d, m.site[0], false).is_none() {
                return Err(Error::NotAGadget(m.site[0]));
            }
            let (g1, g2) = check_gadget_fuse(&d, &m.site).ok_or(stale)?;
            let k = g1.legs.len() as i32;
            let phase = d.phase(g1.phase_hub).unwrap() + d.phase(g2.phase_hub).unwrap();
            d.remove_vertex(g2.hub);
            d.remove_vertex(g2.phase_hub);
            d.mul_sqrt2_pow(1 - k);
            if phase.is_zero() {
                d.remove_vertex(g1.hub);
                d.remove_vertex(g1.phase_hub);
                d.mul_sqrt2_pow(1 - k);
            } else {
                d.set_phase(g1.phase_hub, phase);
            }
        }
        RuleId::GadgetPi => {
            let (g, legs) = check_gadget_pi(&d, &m.site)?;
            let carriers = &m.site[2..];
            let mut flips = usize::from(phase_is_pi(&d, g.hub));
            for (&c, &leg) in carriers.iter().zip(&legs) {
                let o = d.neighbor_list(c).into_iter().find(|w| *w != leg).unwrap();
                let mut others = d.neighbor_list(leg);
                for drop in [c, g.hub] {
                    let i = others.iter().position(|w| *w == drop).unwrap();
                    others.swap_remove(i);
                }
                others.sort();
                d.remove_vertex(c);
                for w in others {
                    d.remove_edge(leg, w);
                    let q = d.add_spider(Color::X, LinearPhase::pi());
                    d.add_edge(leg, q);
                    d.add_edge(q, w);
                }
                d.add_edge(o, leg);
                let alpha = d.phase(leg).unwrap().clone();
                d.set_phase(leg, -&alpha);
                d.mul_phase(&alpha);
                flips += 1;
            }
            d.set_phase(g.hub, LinearPhase::zero());
            if flips % 2 == 1 {
                let theta = d.phase(g.phase_hub).unwrap().clone();
                d.set_phase(g.phase_hub, -&theta);
                d.mul_phase(&theta);
            }
        }
    }
    Ok(d)
}

/// Outcome of [`simplify_fixpoint`].
#[derive(Clone, Debug)]
pub struct Fixpoint {
    pub diagram: Diagram,
    pub steps: usize,
    /// The step budget ran out while a match was still available.
    pub exhausted: bool,
}

/// Repeatedly applies the first available match in rule-list order.
pub fn simplify_fixpoint(d: &Diagram, rules: &[RuleId], max_steps: usize) -> Fixpoint {
    let mut cur = d.clone();
    let mut steps = 0;
    loop {
        let next = rules.iter().find_map(|r| first_productive(&cur, *r));
        match next {
            None => return Fixpoint { diagram: cur, steps, exhausted: false },
            Some(_) if steps >= max_steps => return Fixpoint { diagram: cur, steps, exhausted: true },
            Some(m) => {
                cur = apply(&cur, &m).expect("fresh matches apply");
                steps += 1;
            }
        }
    }
}

/// Spiders with no legs, as scalars `1 + e^{i phi}`.
pub fn absorb_isolated_spiders(d: &mut Diagram) {
    let isolated: Vec<VertexId> = d.spiders().filter(|v| d.degree(*v) == 0).collect();
    for v in isolated {
        // the same value for both colors
        let (s, phase) = isolated_value(d.phase(v).unwrap());
        d.remove_vertex(v);
        d.mul_scalar(&s);
        d.mul_phase(&phase);
    }
}

/// `1 + e^{i phi}` as a factor and a phase: `2 cos(phi/2)` and `phi/2`
/// when `phi` has parameters.
pub fn isolated_value(phi: &LinearPhase) -> (ScalarExpr, LinearPhase) {
    if phi.is_parameter_free() {
        (ScalarExpr::one() + ScalarExpr::exp_i_phase(phi), LinearPhase::zero())
    } else {
        let half = phi.scale(num_rational::Rational64::new(1, 2));
        (&ScalarExpr::int(2) * &ScalarExpr::cos(&half), half)
    }
}

/// Ids of all spiders carrying a parameterized phase.
pub fn parameterized_spiders(d: &Diagram) -> BTreeSet<VertexId> {
    d.spiders().filter(|v| d.phase(*v).is_some_and(|p| !p.is_parameter_free())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::Circuit;
    use crate::oracle::soundness_check;
    use crate::scalar_expr::r64;

    fn sound(before: &Diagram, after: &Diagram) -> bool {
        soundness_check(before, after, 16, 1e-9)
    }

    #[test]
    fn fuse_adds_phases() {
        let mut c = Circuit::new(1);
        c.z(0, LinearPhase::pi_times(r64(1, 2)));
        c.z(0, LinearPhase::pi_times(r64(1, 2)));
        let d = c.finish();
        let ms = find_matches(&d, RuleId::Fuse);
        assert_eq!(ms.len(), 1);
        let e = apply(&d, &ms[0]).unwrap();
        let z = e.spiders().next().unwrap();
        assert_eq!(e.phase(z), Some(&LinearPhase::pi()));
        assert!(e.scalar().is_one());
        assert!(sound(&d, &e));
    }

    #[test]
    fn pi_anticommutes() {
        let mut c = Circuit::new(1);
        let p = c.x(0, LinearPhase::pi());
        let s = c.z(0, LinearPhase::pi());
        let d = c.finish();
        let e = apply(&d, &Match { rule: RuleId::Pi, site: vec![p, s] }).unwrap();
        assert_eq!(e.scalar(), ScalarExpr::int(-1));
        // Z now comes first on the wire, X after it
        let first = e.neighbor_list(e.inputs()[0])[0];
        assert_eq!(e.color(first), Some(Color::Z));
        assert!(sound(&d, &e));
    }

    #[test]
    fn hopf_scalar() {
        let mut d = Diagram::new();
        let z = d.add_spider(Color::Z, LinearPhase::param("a"));
        let x = d.add_spider(Color::X, LinearPhase::param("b"));
        d.add_edge(z, x);
        d.add_edge(z, x);
        for v in [z, x] {
            let o = d.add_output();
            d.add_edge(v, o);
        }
        let e = apply(&d, &find_matches(&d, RuleId::Hopf)[0]).unwrap();
        assert_eq!(e.scalar(), ScalarExpr::ratio(1, 2));
        assert!(sound(&d, &e));
    }

    #[test]
    fn bialgebra_scalar() {
        let mut d = Diagram::new();
        let zs = [d.add_spider(Color::Z, LinearPhase::zero()), d.add_spider(Color::Z, LinearPhase::zero())];
        let xs = [d.add_spider(Color::X, LinearPhase::zero()), d.add_spider(Color::X, LinearPhase::zero())];
        for z in zs {
            let i = d.add_input();
            d.add_edge(i, z);
            for x in xs {
                d.add_edge(z, x);
            }
        }
        for x in xs {
            let o = d.add_output();
            d.add_edge(x, o);
        }
        let ms = find_matches(&d, RuleId::Bialgebra);
        assert_eq!(ms.len(), 1);
        let e = apply(&d, &ms[0]).unwrap();
        assert_eq!(e.scalar(), ScalarExpr::sqrt2_pow(-1));
        assert!(sound(&d, &e));
        let no_x = Circuit::new(2).finish();
        assert!(find_matches(&no_x, RuleId::Bialgebra).is_empty());
    }

    #[test]
    fn copy_through_spider() {
        for (color, a) in [(Color::X, LinearPhase::zero()), (Color::X, LinearPhase::pi()), (Color::Z, LinearPhase::pi())] {
            let mut d = Diagram::new();
            let st = d.add_spider(color, a.clone());
            let s = d.add_spider(color.other(), LinearPhase::param("t"));
            d.add_edge(st, s);
            for _ in 0..3 {
                let o = d.add_output();
                d.add_edge(s, o);
            }
            let e = apply(&d, &Match { rule: RuleId::Copy, site: vec![st, s] }).unwrap();
            assert_eq!(e.num_vertices(), 6);
            assert!(sound(&d, &e), "{color:?} {a:?}");
        }
    }

    fn gadget_circuit(k: usize, phase: LinearPhase) -> (Circuit, VertexId) {
        let mut c = Circuit::new(k);
        let qs: Vec<usize> = (0..k).collect();
        let h = c.gadget(&qs, phase);
        (c, h)
    }

    #[test]
    fn gadgets_cancel() {
        let g = LinearPhase::param("gamma");
        let (mut c, _) = gadget_circuit(2, g.scale(r64(-2, 1)));
        c.gadget(&[0, 1], g.scale(r64(2, 1)));
        let d = c.finish();
        let ms = find_matches(&d, RuleId::GadgetFuse);
        assert_eq!(ms.len(), 0, "legs differ until the wires are fused");
        let fused = simplify_fixpoint(&d, &[RuleId::Fuse], 100).diagram;
        let ms = find_matches(&fused, RuleId::GadgetFuse);
        assert_eq!(ms.len(), 1);
        let e = apply(&fused, &ms[0]).unwrap();
        assert!(gadgets(&e, true).is_empty());
        assert_eq!(e.scalar(), ScalarExpr::ratio(1, 2));
        assert!(sound(&d, &e));
    }

    #[test]
    fn gadget_pi_on_one_and_two_legs() {
        for legs in [vec![0], vec![0, 1]] {
            let mut c = Circuit::new(2);
            for q in &legs {
                c.x(*q, LinearPhase::pi());
            }
            c.gadget(&[0, 1], LinearPhase::param("gamma"));
            let d = c.finish();
            let ms = find_matches(&d, RuleId::GadgetPi);
            assert_eq!(ms.len(), 1);
            assert_eq!(ms[0].site.len(), 2 + legs.len());
            let e = apply(&d, &ms[0]).unwrap();
            let g = gadgets(&e, false);
            let ph = e.phase(g[0].phase_hub).unwrap();
            let want = if legs.len() == 1 { -LinearPhase::param("gamma") } else { LinearPhase::param("gamma") };
            assert_eq!(ph, &want);
            assert!(sound(&d, &e));
        }
    }

    #[test]
    fn stale_matches_are_rejected() {
        let d = Circuit::new(1).finish();
        let z = d.spiders().next().unwrap();
        assert_eq!(
            apply(&d, &Match { rule: RuleId::Fuse, site: vec![z, z] }),
            Err(Error::StaleMatch(RuleId::Fuse))
        );
        assert_eq!(
            apply(&d, &Match { rule: RuleId::GadgetPi, site: vec![z] }),
            Err(Error::NotAGadget(z))
        );
    }

    #[test]
    fn fixpoint_examples() {
        let mut c = Circuit::new(1);
        for _ in 0..5 {
            c.z(0, LinearPhase::zero());
        }
        let d = c.finish();
        let r = simplify_fixpoint(&d, &RuleId::DEFAULT_ORDER, 1000);
        assert_eq!(r.diagram.num_vertices(), 3);
        assert!(!r.exhausted);
        let r0 = simplify_fixpoint(&d, &RuleId::DEFAULT_ORDER, 0);
        assert_eq!(r0.diagram, d);
        assert!(r0.exhausted);
    }

    #[test]
    fn disjoint_fusions_commute() {
        let mut c = Circuit::new(2);
        c.z(0, LinearPhase::param("a"));
        c.z(0, LinearPhase::param("b"));
        c.x(1, LinearPhase::param("c"));
        c.x(1, LinearPhase::param("d"));
        let d = c.finish();
        let ms = find_matches(&d, RuleId::Fuse);
        assert_eq!(ms.len(), 2);
        let ab = apply(&apply(&d, &ms[0]).unwrap(), &ms[1]).unwrap();
        let ba = apply(&apply(&d, &ms[1]).unwrap(), &ms[0]).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn rule_names_round_trip() {
        for r in RuleId::ALL {
            assert_eq!(r.name().parse::<RuleId>().unwrap(), r);
        }
        assert!(RuleId::parse_list("f,zz").is_err());
        assert_eq!(RuleId::parse_list("f,id").unwrap(), vec![RuleId::Fuse, RuleId::Identity]);
    }
}
