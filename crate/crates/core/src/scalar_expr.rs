//! Exact symbolic complex scalars.
//!
//! A [`ScalarExpr`] is a sum of monomials `coeff * sqrt(2)^e * atoms` where
//! `coeff` is a Gaussian rational, `e` is 0 or 1 once folded, and the atoms
//! are `cos`/`sin` of [`LinearPhase`]s.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed used by every reproducible random check unless overridden.
pub const DEFAULT_SEED: u64 = 0x5eed_2c0d;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Parameter(Arc<str>);

impl Parameter {
    pub fn new(name: &str) -> Parameter {
        assert!(!name.is_empty(), "parameter names must be nonempty");
        Parameter(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Parameter {
    fn from(s: &str) -> Self {
        Parameter::new(s)
    }
}

/// Numeric values for parameters, in radians.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Binding(BTreeMap<Parameter, f64>);

impl Binding {
    pub fn new() -> Binding {
        Binding::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Binding {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        assert!(value.is_finite(), "binding for {name} is not finite");
        self.0.insert(Parameter::new(name), value);
    }

    pub fn get(&self, p: &Parameter) -> Option<f64> {
        self.0.get(p).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Parameter, f64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    /// Uniform values in [0, 2pi) for every listed parameter.
    pub fn random<'a, R: Rng>(params: impl IntoIterator<Item = &'a Parameter>, rng: &mut R) -> Binding {
        let mut b = Binding::new();
        for p in params {
            b.0.insert(p.clone(), rng.gen_range(0.0..std::f64::consts::TAU));
        }
        b
    }
}

impl FromIterator<(Parameter, f64)> for Binding {
    fn from_iter<I: IntoIterator<Item = (Parameter, f64)>>(iter: I) -> Self {
        Binding(iter.into_iter().collect())
    }
}

pub(crate) fn r64(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

pub fn format_rational<T: fmt::Display>(numer: T, denom: T) -> String {
    format!("{numer}/{denom}")
}

fn split_rational(s: &str) -> Result<(BigInt, BigInt)> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    let d: BigInt = d.parse().map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok((n, d))
}

pub fn parse_big_rational(s: &str) -> Result<BigRational> {
    let (n, d) = split_rational(s)?;
    Ok(BigRational::new(n, d))
}

pub fn parse_rational64(s: &str) -> Result<Rational64> {
    let (n, d) = split_rational(s)?;
    match (n.to_i64(), d.to_i64()) {
        (Some(n), Some(d)) => Ok(Rational64::new(n, d)),
        _ => Err(Error::Parse(format!("rational `{s}` out of range"))),
    }
}

// ---------------------------------------------------------------------------
// LinearPhase

/// `pi * pi_part + sum_k c_k * param_k`, with `pi_part` kept in [0, 2).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinearPhase {
    terms: BTreeMap<Parameter, Rational64>,
    pi: Rational64,
}

fn mod2(r: Rational64) -> Rational64 {
    let two = Rational64::from_integer(2);
    let q = (r / two).floor();
    r - q * two
}

impl LinearPhase {
    pub fn zero() -> LinearPhase {
        LinearPhase::default()
    }

    /// `r * pi`.
    pub fn pi_times(r: Rational64) -> LinearPhase {
        LinearPhase { terms: BTreeMap::new(), pi: mod2(r) }
    }

    pub fn pi() -> LinearPhase {
        LinearPhase::pi_times(Rational64::one())
    }

    pub fn param(name: &str) -> LinearPhase {
        LinearPhase::param_scaled(name, Rational64::one())
    }

    pub fn param_scaled(name: &str, c: Rational64) -> LinearPhase {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Parameter::new(name), c);
        }
        LinearPhase { terms, pi: Rational64::zero() }
    }

    pub fn from_parts(pi: Rational64, terms: impl IntoIterator<Item = (Parameter, Rational64)>) -> LinearPhase {
        let mut out = LinearPhase::pi_times(pi);
        for (p, c) in terms {
            out.add_term(p, c);
        }
        out
    }

    fn add_term(&mut self, p: Parameter, c: Rational64) {
        let entry = self.terms.entry(p).or_insert_with(Rational64::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn pi_part(&self) -> Rational64 {
        self.pi
    }

    pub fn terms(&self) -> &BTreeMap<Parameter, Rational64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.pi.is_zero()
    }

    pub fn is_parameter_free(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_pi(&self) -> bool {
        self.terms.is_empty() && self.pi == Rational64::one()
    }

    /// `Some(k)` when the phase is exactly `k * pi/2`.
    pub fn quarter_turns(&self) -> Option<u8> {
        if !self.terms.is_empty() {
            return None;
        }
        let twice = self.pi * Rational64::from_integer(2);
        if twice.is_integer() {
            Some(twice.to_integer() as u8)
        } else {
            None
        }
    }

    pub fn scale(&self, c: Rational64) -> LinearPhase {
        if c.is_zero() {
            return LinearPhase::zero();
        }
        LinearPhase {
            terms: self.terms.iter().map(|(p, v)| (p.clone(), *v * c)).collect(),
            pi: mod2(self.pi * c),
        }
    }

    pub fn without_pi(&self) -> LinearPhase {
        LinearPhase { terms: self.terms.clone(), pi: Rational64::zero() }
    }

    pub fn parameters(&self) -> impl Iterator<Item = &Parameter> {
        self.terms.keys()
    }

    pub fn eval(&self, b: &Binding) -> Result<f64> {
        let mut x = self.pi.to_f64().unwrap_or(0.0) * std::f64::consts::PI;
        for (p, c) in &self.terms {
            let v = b.get(p).ok_or_else(|| Error::MissingBinding(p.name().to_string()))?;
            x += c.to_f64().unwrap_or(0.0) * v;
        }
        Ok(x)
    }

    /// Replace `p` by `value`.
    pub fn substitute(&self, p: &Parameter, value: &LinearPhase) -> LinearPhase {
        match self.terms.get(p) {
            None => self.clone(),
            Some(c) => {
                let mut rest = self.clone();
                rest.terms.remove(p);
                &rest + &value.scale(*c)
            }
        }
    }
}

impl Add for &LinearPhase {
    type Output = LinearPhase;
    fn add(self, rhs: &LinearPhase) -> LinearPhase {
        let mut out = self.clone();
        out.pi = mod2(out.pi + rhs.pi);
        for (p, c) in &rhs.terms {
            out.add_term(p.clone(), *c);
        }
        out
    }
}

impl Add for LinearPhase {
    type Output = LinearPhase;
    fn add(self, rhs: LinearPhase) -> LinearPhase {
        &self + &rhs
    }
}

impl Neg for &LinearPhase {
    type Output = LinearPhase;
    fn neg(self) -> LinearPhase {
        self.scale(-Rational64::one())
    }
}

impl Neg for LinearPhase {
    type Output = LinearPhase;
    fn neg(self) -> LinearPhase {
        -&self
    }
}

impl Sub for &LinearPhase {
    type Output = LinearPhase;
    fn sub(self, rhs: &LinearPhase) -> LinearPhase {
        self + &(-rhs)
    }
}

impl Sub for LinearPhase {
    type Output = LinearPhase;
    fn sub(self, rhs: LinearPhase) -> LinearPhase {
        &self - &rhs
    }
}

fn fmt_coeff_times(c: Rational64, what: &str) -> String {
    let a = c.abs();
    if a.is_one() {
        what.to_string()
    } else if a.is_integer() {
        format!("{}*{what}", a.numer())
    } else if *a.numer() == 1 {
        format!("{what}/{}", a.denom())
    } else {
        format!("{}*{what}/{}", a.numer(), a.denom())
    }
}

impl fmt::Display for LinearPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(bool, String)> = Vec::new();
        for (p, c) in &self.terms {
            parts.push((c.is_negative(), fmt_coeff_times(*c, p.name())));
        }
        if !self.pi.is_zero() {
            // shown in (-1, 1] for readability
            let r = if self.pi > Rational64::one() { self.pi - Rational64::from_integer(2) } else { self.pi };
            parts.push((r.is_negative(), fmt_coeff_times(r, "pi")));
        }
        if parts.is_empty() {
            return f.write_str("0");
        }
        for (i, (neg, s)) in parts.iter().enumerate() {
            match (i, neg) {
                (0, true) => write!(f, "-{s}")?,
                (0, false) => write!(f, "{s}")?,
                (_, true) => write!(f, " - {s}")?,
                (_, false) => write!(f, " + {s}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LinearPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseJson {
    pub pi: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl LinearPhase {
    pub fn to_wire(&self) -> PhaseJson {
        PhaseJson {
            pi: format_rational(self.pi.numer(), self.pi.denom()),
            params: self
                .terms
                .iter()
                .map(|(p, c)| (p.name().to_string(), format_rational(c.numer(), c.denom())))
                .collect(),
        }
    }

    pub fn from_wire(w: &PhaseJson) -> Result<LinearPhase> {
        let mut terms = Vec::new();
        for (k, v) in &w.params {
            if k.is_empty() {
                return Err(Error::Parse("empty parameter name".into()));
            }
            terms.push((Parameter::new(k), parse_rational64(v)?));
        }
        Ok(LinearPhase::from_parts(parse_rational64(&w.pi)?, terms))
    }
}

// ---------------------------------------------------------------------------
// Gaussian rationals

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Gauss {
    pub re: BigRational,
    pub im: BigRational,
}

impl Gauss {
    pub fn new(re: BigRational, im: BigRational) -> Gauss {
        Gauss { re, im }
    }

    pub fn zero() -> Gauss {
        Gauss::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Gauss {
        Gauss::from_int(1)
    }

    pub fn i() -> Gauss {
        Gauss::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(n: i64) -> Gauss {
        Gauss::new(BigRational::from_integer(n.into()), BigRational::zero())
    }

    pub fn from_ratio(n: i64, d: i64) -> Gauss {
        Gauss::new(BigRational::new(n.into(), d.into()), BigRational::zero())
    }

    /// `i^k`.
    pub fn i_pow(k: u8) -> Gauss {
        match k % 4 {
            0 => Gauss::from_int(1),
            1 => Gauss::i(),
            2 => Gauss::from_int(-1),
            _ => -Gauss::i(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Gauss {
        Gauss::new(self.re.clone(), -self.im.clone())
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }

    pub fn scale(&self, r: &BigRational) -> Gauss {
        Gauss::new(&self.re * r, &self.im * r)
    }
}

impl Add for &Gauss {
    type Output = Gauss;
    fn add(self, rhs: &Gauss) -> Gauss {
        Gauss::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Mul for &Gauss {
    type Output = Gauss;
    fn mul(self, rhs: &Gauss) -> Gauss {
        Gauss::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for Gauss {
    type Output = Gauss;
    fn neg(self) -> Gauss {
        Gauss::new(-self.re, -self.im)
    }
}

// ---------------------------------------------------------------------------
// Atoms and monomials

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Trig {
    Cos,
    Sin,
}

impl Trig {
    pub fn name(self) -> &'static str {
        match self {
            Trig::Cos => "cos",
            Trig::Sin => "sin",
        }
    }
}

/// `cos(arg)` or `sin(arg)` with a canonical argument: leading parameter
/// coefficient positive and pi part in [0, 1/2).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub arg: LinearPhase,
    pub func: Trig,
}

impl Atom {
    pub fn eval(&self, b: &Binding) -> Result<f64> {
        let x = self.arg.eval(b)?;
        Ok(match self.func {
            Trig::Cos => x.cos(),
            Trig::Sin => x.sin(),
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.func.name(), self.arg)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
struct Mono {
    sqrt2: bool,
    atoms: Vec<Atom>,
}

impl Mono {
    fn mul(&self, other: &Mono) -> (Mono, bool) {
        let mut atoms = Vec::with_capacity(self.atoms.len() + other.atoms.len());
        atoms.extend_from_slice(&self.atoms);
        atoms.extend_from_slice(&other.atoms);
        atoms.sort();
        let both = self.sqrt2 && other.sqrt2;
        (Mono { sqrt2: self.sqrt2 ^ other.sqrt2, atoms }, both)
    }
}

/// A borrowed view of one monomial.
#[derive(Clone, Copy, Debug)]
pub struct Monomial<'a> {
    pub coeff: &'a Gauss,
    pub sqrt2_exp: i32,
    pub atoms: &'a [Atom],
}

// ---------------------------------------------------------------------------
// ScalarExpr

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ScalarExpr {
    terms: BTreeMap<Mono, Gauss>,
}

fn two_pow(k: i32) -> BigRational {
    let p = BigRational::from_integer(BigInt::from(2)).pow(k.abs());
    if k >= 0 {
        p
    } else {
        p.recip()
    }
}

impl ScalarExpr {
    pub fn zero() -> ScalarExpr {
        ScalarExpr::default()
    }

    pub fn one() -> ScalarExpr {
        ScalarExpr::constant(Gauss::one())
    }

    pub fn i() -> ScalarExpr {
        ScalarExpr::constant(Gauss::i())
    }

    pub fn int(n: i64) -> ScalarExpr {
        ScalarExpr::constant(Gauss::from_int(n))
    }

    pub fn ratio(n: i64, d: i64) -> ScalarExpr {
        ScalarExpr::constant(Gauss::from_ratio(n, d))
    }

    pub fn constant(c: Gauss) -> ScalarExpr {
        let mut e = ScalarExpr::zero();
        e.push(Mono::default(), c);
        e
    }

    /// `sqrt(2)^k`.
    pub fn sqrt2_pow(k: i32) -> ScalarExpr {
        ScalarExpr::one().mul_sqrt2_pow(k)
    }

    fn push(&mut self, m: Mono, c: Gauss) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn cos(arg: &LinearPhase) -> ScalarExpr {
        trig(Trig::Cos, arg.clone())
    }

    pub fn sin(arg: &LinearPhase) -> ScalarExpr {
        trig(Trig::Sin, arg.clone())
    }

    /// `e^{i L}` written as `cos(L) + i sin(L)`.
    pub fn exp_i_phase(arg: &LinearPhase) -> ScalarExpr {
        ScalarExpr::cos(arg) + ScalarExpr::i() * ScalarExpr::sin(arg)
    }

    pub fn mul_sqrt2_pow(&self, k: i32) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for (m, c) in &self.terms {
            let e = k + m.sqrt2 as i32;
            let fold = e.div_euclid(2);
            let mut m2 = m.clone();
            m2.sqrt2 = e.rem_euclid(2) == 1;
            out.push(m2, c.scale(&two_pow(fold)));
        }
        out
    }

    pub fn scale(&self, c: &Gauss) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for (m, v) in &self.terms {
            out.push(m.clone(), v * c);
        }
        out
    }

    pub fn conj(&self) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for (m, v) in &self.terms {
            out.push(m.clone(), v.conj());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        *self == ScalarExpr::one()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn monomials(&self) -> impl Iterator<Item = Monomial<'_>> {
        self.terms.iter().map(|(m, c)| Monomial {
            coeff: c,
            sqrt2_exp: m.sqrt2 as i32,
            atoms: &m.atoms,
        })
    }

    /// True when no trig atoms remain.
    pub fn is_atom_free(&self) -> bool {
        self.terms.keys().all(|m| m.atoms.is_empty())
    }

    pub fn parameters(&self) -> BTreeSet<Parameter> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for a in &m.atoms {
                out.extend(a.arg.parameters().cloned());
            }
        }
        out
    }

    pub fn eval_at(&self, b: &Binding) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = 1.0;
            for a in &m.atoms {
                v *= a.eval(b)?;
            }
            if m.sqrt2 {
                v *= std::f64::consts::SQRT_2;
            }
            acc += c.to_complex() * v;
        }
        Ok(acc)
    }

    /// Float value of an atom-free expression.
    pub fn to_complex(&self) -> Option<Complex64> {
        if self.is_atom_free() {
            self.eval_at(&Binding::new()).ok()
        } else {
            None
        }
    }

    /// Substitutes a phase for a parameter and recanonicalizes the atoms.
    pub fn substitute(&self, p: &Parameter, value: &LinearPhase) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for (m, c) in &self.terms {
            let mut t = ScalarExpr::constant(c.clone()).mul_sqrt2_pow(m.sqrt2 as i32);
            for a in &m.atoms {
                t = &t * &trig(a.func, a.arg.substitute(p, value));
            }
            out = out + t;
        }
        out
    }

    /// Shrinks the expression using `sin(L)^2 + cos(L)^2 = 1`: for each
    /// argument, squares of sin (or of cos) are rewritten away when that
    /// gives fewer monomials, then matching `K sin^2 + K cos^2` pairs merge.
    pub fn simplify(&self) -> ScalarExpr {
        let mut e = self.merge_pythagorean_pairs();
        let args: BTreeSet<LinearPhase> = e.terms.keys().flat_map(|m| m.atoms.iter().map(|a| a.arg.clone())).collect();
        for arg in args {
            let a = e.eliminate_squares(&arg, Trig::Sin);
            let b = e.eliminate_squares(&arg, Trig::Cos);
            if a.len() < e.len() && a.len() <= b.len() {
                e = a;
            } else if b.len() < e.len() {
                e = b;
            }
        }
        e.merge_pythagorean_pairs()
    }

    /// Replaces every `f(arg)^2` by `1 - g(arg)^2`, `g` the other function.
    fn eliminate_squares(&self, arg: &LinearPhase, f: Trig) -> ScalarExpr {
        let g = match f {
            Trig::Sin => Trig::Cos,
            Trig::Cos => Trig::Sin,
        };
        let other = atom_expr(g, arg.clone());
        let one_minus = &ScalarExpr::one() - &(&other * &other);
        let mut out = ScalarExpr::zero();
        for (m, c) in &self.terms {
            let k = m.atoms.iter().filter(|a| a.func == f && a.arg == *arg).count();
            if k < 2 {
                out.push(m.clone(), c.clone());
                continue;
            }
            let mut kept = Vec::with_capacity(m.atoms.len());
            let mut dropped = 0;
            for a in &m.atoms {
                if a.func == f && a.arg == *arg && dropped < k / 2 * 2 {
                    dropped += 1;
                } else {
                    kept.push(a.clone());
                }
            }
            let mut t = ScalarExpr::zero();
            t.push(Mono { sqrt2: m.sqrt2, atoms: kept }, c.clone());
            for _ in 0..k / 2 {
                t = &t * &one_minus;
            }
            out = out + t;
        }
        out
    }

    fn merge_pythagorean_pairs(&self) -> ScalarExpr {
        let mut e = self.clone();
        loop {
            let mut hit = None;
            'outer: for (m, c) in &e.terms {
                for (i, a) in m.atoms.iter().enumerate() {
                    if a.func != Trig::Sin || i + 1 >= m.atoms.len() || m.atoms[i + 1] != *a {
                        continue;
                    }
                    let mut rest = m.atoms.clone();
                    rest.drain(i..i + 2);
                    let cos = Atom { arg: a.arg.clone(), func: Trig::Cos };
                    let mut partner = rest.clone();
                    partner.push(cos.clone());
                    partner.push(cos);
                    partner.sort();
                    let partner = Mono { sqrt2: m.sqrt2, atoms: partner };
                    if e.terms.get(&partner) == Some(c) {
                        hit = Some((m.clone(), partner, Mono { sqrt2: m.sqrt2, atoms: rest }, c.clone()));
                        break 'outer;
                    }
                }
            }
            match hit {
                None => return e,
                Some((m, partner, rest, c)) => {
                    e.terms.remove(&m);
                    e.terms.remove(&partner);
                    e.push(rest, c);
                }
            }
        }
    }

    /// Rewrites atoms with compound arguments (several parameters, integer
    /// multiples, exact pi offsets) through the angle-addition formulas.
    pub fn expand_angles(&self) -> ScalarExpr {
        let mut cache: BTreeMap<Atom, ScalarExpr> = BTreeMap::new();
        let mut out = ScalarExpr::zero();
        for (m, c) in &self.terms {
            let mut t = ScalarExpr::constant(c.clone()).mul_sqrt2_pow(m.sqrt2 as i32);
            for a in &m.atoms {
                let x = cache
                    .entry(a.clone())
                    .or_insert_with(|| expand_trig(a.func, &a.arg))
                    .clone();
                t = &t * &x;
            }
            out = out + t;
        }
        out
    }

    pub fn to_wire(&self) -> ScalarJson {
        ScalarJson {
            monomials: self
                .terms
                .iter()
                .map(|(m, c)| MonoJson {
                    re: format_rational(c.re.numer(), c.re.denom()),
                    im: format_rational(c.im.numer(), c.im.denom()),
                    sqrt2: m.sqrt2 as i32,
                    atoms: m
                        .atoms
                        .iter()
                        .map(|a| AtomJson { func: a.func.name().to_string(), arg: a.arg.to_wire() })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_wire(w: &ScalarJson) -> Result<ScalarExpr> {
        let mut out = ScalarExpr::zero();
        for m in &w.monomials {
            let c = Gauss::new(parse_big_rational(&m.re)?, parse_big_rational(&m.im)?);
            let mut t = ScalarExpr::constant(c).mul_sqrt2_pow(m.sqrt2);
            for a in &m.atoms {
                let func = match a.func.as_str() {
                    "cos" => Trig::Cos,
                    "sin" => Trig::Sin,
                    other => return Err(Error::Parse(format!("unknown atom function `{other}`"))),
                };
                t = &t * &trig(func, LinearPhase::from_wire(&a.arg)?);
            }
            out = out + t;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("scalar serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<ScalarExpr> {
        let w: ScalarJson = serde_json::from_str(s).map_err(|e| Error::SchemaViolation {
            path: "$".into(),
            msg: e.to_string(),
        })?;
        ScalarExpr::from_wire(&w)
    }
}

/// Probabilistic equality: `trials` uniform bindings over [0, 2pi).
pub fn equiv_numeric(a: &ScalarExpr, b: &ScalarExpr, trials: usize, tol: f64) -> bool {
    equiv_numeric_seeded(a, b, trials, tol, DEFAULT_SEED)
}

pub fn equiv_numeric_seeded(a: &ScalarExpr, b: &ScalarExpr, trials: usize, tol: f64, seed: u64) -> bool {
    let mut params = a.parameters();
    params.extend(b.parameters());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials.max(1)).all(|_| {
        let bind = Binding::random(&params, &mut rng);
        match (a.eval_at(&bind), b.eval_at(&bind)) {
            (Ok(x), Ok(y)) => (x - y).norm() <= tol,
            _ => false,
        }
    })
}

fn exact_cos(r: Rational64) -> Option<ScalarExpr> {
    // r in [0, 1/2)
    if r.is_zero() {
        Some(ScalarExpr::one())
    } else if r == r64(1, 4) {
        Some(ScalarExpr::sqrt2_pow(-1))
    } else if r == r64(1, 3) {
        Some(ScalarExpr::ratio(1, 2))
    } else {
        None
    }
}

fn exact_sin(r: Rational64) -> Option<ScalarExpr> {
    if r.is_zero() {
        Some(ScalarExpr::zero())
    } else if r == r64(1, 4) {
        Some(ScalarExpr::sqrt2_pow(-1))
    } else if r == r64(1, 6) {
        Some(ScalarExpr::ratio(1, 2))
    } else {
        None
    }
}

/// Canonical `cos`/`sin` of an arbitrary linear phase.
fn trig(func: Trig, mut arg: LinearPhase) -> ScalarExpr {
    let mut func = func;
    let mut negate = false;
    if let Some(c) = arg.terms.values().next() {
        if c.is_negative() {
            arg = -arg;
            if func == Trig::Sin {
                negate = !negate;
            }
        }
    }
    let mut r = arg.pi;
    if r >= Rational64::one() {
        r -= Rational64::one();
        negate = !negate;
    }
    if r >= r64(1, 2) {
        r -= r64(1, 2);
        func = match func {
            Trig::Cos => {
                negate = !negate;
                Trig::Sin
            }
            Trig::Sin => Trig::Cos,
        };
    }
    arg.pi = r;
    let e = if arg.terms.is_empty() {
        let exact = match func {
            Trig::Cos => exact_cos(r),
            Trig::Sin => exact_sin(r),
        };
        exact.unwrap_or_else(|| atom_expr(func, arg))
    } else {
        atom_expr(func, arg)
    };
    if negate {
        -e
    } else {
        e
    }
}

fn atom_expr(func: Trig, arg: LinearPhase) -> ScalarExpr {
    let mut e = ScalarExpr::zero();
    e.push(Mono { sqrt2: false, atoms: vec![Atom { arg, func }] }, Gauss::one());
    e
}

fn expand_trig(func: Trig, arg: &LinearPhase) -> ScalarExpr {
    let mut pieces: Vec<LinearPhase> = Vec::new();
    for (p, c) in arg.terms() {
        if c.is_integer() && c.to_integer().abs() <= 64 {
            let unit = LinearPhase::param_scaled(p.name(), r64(c.to_integer().signum(), 1));
            for _ in 0..c.to_integer().abs() {
                pieces.push(unit.clone());
            }
        } else {
            pieces.push(LinearPhase::param_scaled(p.name(), *c));
        }
    }
    let pi = arg.pi_part();
    if !pi.is_zero() {
        if (pi * Rational64::from_integer(4)).is_integer() || pieces.is_empty() {
            pieces.push(LinearPhase::pi_times(pi));
        } else {
            pieces[0] = &pieces[0] + &LinearPhase::pi_times(pi);
        }
    }
    expand_pieces(func, &pieces)
}

fn expand_pieces(func: Trig, pieces: &[LinearPhase]) -> ScalarExpr {
    match pieces {
        [] => trig(func, LinearPhase::zero()),
        [one] => trig(func, one.clone()),
        [a, rest @ ..] => {
            let (ca, sa) = (trig(Trig::Cos, a.clone()), trig(Trig::Sin, a.clone()));
            let (cb, sb) = (expand_pieces(Trig::Cos, rest), expand_pieces(Trig::Sin, rest));
            match func {
                Trig::Cos => &ca * &cb - &sa * &sb,
                Trig::Sin => &sa * &cb + &ca * &sb,
            }
        }
    }
}

impl Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(mut self, rhs: ScalarExpr) -> ScalarExpr {
        for (m, c) in rhs.terms {
            self.push(m, c);
        }
        self
    }
}

impl Add for &ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: &ScalarExpr) -> ScalarExpr {
        self.clone() + rhs.clone()
    }
}

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        -self.clone()
    }
}

impl Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        self + (-rhs)
    }
}

impl Sub for &ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: &ScalarExpr) -> ScalarExpr {
        self.clone() - rhs.clone()
    }
}

impl Mul for &ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: &ScalarExpr) -> ScalarExpr {
        let two = BigRational::from_integer(BigInt::from(2));
        let mut out = ScalarExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let (m, fold) = ma.mul(mb);
                let c = ca * cb;
                out.push(m, if fold { c.scale(&two) } else { c });
            }
        }
        out
    }
}

impl Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        &self * &rhs
    }
}

impl std::iter::Sum for ScalarExpr {
    fn sum<I: Iterator<Item = ScalarExpr>>(iter: I) -> ScalarExpr {
        iter.fold(ScalarExpr::zero(), |a, b| a + b)
    }
}

impl std::iter::Product for ScalarExpr {
    fn product<I: Iterator<Item = ScalarExpr>>(iter: I) -> ScalarExpr {
        iter.fold(ScalarExpr::one(), |a, b| a * b)
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mut factors: Vec<String> = Vec::new();
            let negative;
            if c.im.is_zero() || c.re.is_zero() {
                let (v, imag) = if c.im.is_zero() { (&c.re, false) } else { (&c.im, true) };
                negative = v.is_negative();
                let a = v.abs();
                if !a.is_one() {
                    factors.push(fmt_rational(&a));
                }
                if imag {
                    factors.push("i".into());
                }
            } else {
                negative = false;
                let sign = if c.im.is_negative() { "-" } else { "+" };
                factors.push(format!("({} {sign} {}*i)", fmt_rational(&c.re), fmt_rational(&c.im.abs())));
            }
            if m.sqrt2 {
                factors.push("sqrt(2)".into());
            }
            let mut j = 0;
            while j < m.atoms.len() {
                let mut k = j;
                while k < m.atoms.len() && m.atoms[k] == m.atoms[j] {
                    k += 1;
                }
                if k - j == 1 {
                    factors.push(m.atoms[j].to_string());
                } else {
                    factors.push(format!("{}^{}", m.atoms[j], k - j));
                }
                j = k;
            }
            if factors.is_empty() {
                factors.push("1".into());
            }
            let body = factors.join("*");
            match (i, negative) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomJson {
    #[serde(rename = "fn")]
    pub func: String,
    pub arg: PhaseJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoJson {
    pub re: String,
    pub im: String,
    pub sqrt2: i32,
    pub atoms: Vec<AtomJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarJson {
    pub monomials: Vec<MonoJson>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g() -> LinearPhase {
        LinearPhase::param("gamma")
    }
    fn b() -> LinearPhase {
        LinearPhase::param("beta")
    }

    fn at(e: &ScalarExpr, bind: &Binding) -> Complex64 {
        e.eval_at(bind).unwrap()
    }

    #[test]
    fn exp_i_phase_constants() {
        assert_eq!(ScalarExpr::exp_i_phase(&LinearPhase::zero()), ScalarExpr::one());
        assert_eq!(ScalarExpr::exp_i_phase(&LinearPhase::pi()), ScalarExpr::int(-1));
        let e = ScalarExpr::exp_i_phase(&g());
        let v = at(&e, &Binding::new().with("gamma", PI / 2.0));
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let q = ScalarExpr::exp_i_phase(&LinearPhase::pi_times(r64(1, 4)));
        assert!(q.is_atom_free());
        assert!((q.to_complex().unwrap() - Complex64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
    }

    #[test]
    fn arith_examples() {
        let c = ScalarExpr::cos(&g());
        let c2 = &c * &c;
        assert_eq!(c2.len(), 1);
        assert_eq!(c2.monomials().next().unwrap().atoms.len(), 2);
        assert!((at(&c2, &Binding::new().with("gamma", PI / 3.0)).re - 0.25).abs() < 1e-15);

        let two = ScalarExpr::sqrt2_pow(2);
        assert_eq!(two, ScalarExpr::int(2));
        assert_eq!(two.monomials().next().unwrap().sqrt2_exp, 0);

        let cs = &ScalarExpr::cos(&g()) * &ScalarExpr::sin(&g());
        let s = &cs + &cs;
        assert_eq!(s.len(), 1);
        assert!((at(&s, &Binding::new().with("gamma", PI / 4.0)).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_examples() {
        let e = ScalarExpr::int(2)
            * ScalarExpr::cos(&b())
            * ScalarExpr::sin(&b())
            * ScalarExpr::sin(&g())
            * ScalarExpr::cos(&g());
        let bind = Binding::new().with("beta", PI / 4.0).with("gamma", PI / 4.0);
        assert!((at(&e, &bind).re - 0.5).abs() < 1e-15);

        let a = LinearPhase::param_scaled("alpha", r64(-2, 1));
        let v = at(&ScalarExpr::cos(&a), &Binding::new().with("alpha", 0.0));
        assert_eq!(v, Complex64::new(1.0, 0.0));

        let v = at(&ScalarExpr::exp_i_phase(&g()), &Binding::new().with("gamma", PI));
        assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-15);

        assert_eq!(
            ScalarExpr::cos(&g()).eval_at(&Binding::new()),
            Err(Error::MissingBinding("gamma".into()))
        );
    }

    #[test]
    fn equiv_examples() {
        let s = ScalarExpr::sin(&g());
        let c = ScalarExpr::cos(&g());
        let pyth = &s * &s + &c * &c;
        assert!(equiv_numeric(&pyth, &ScalarExpr::one(), 32, 1e-9));
        assert!(!equiv_numeric(&c, &s, 32, 1e-9));
    }

    #[test]
    fn simplify_examples() {
        let sg = ScalarExpr::sin(&g());
        let cg = ScalarExpr::cos(&g());
        let cb = ScalarExpr::cos(&b());
        let e = &(&sg * &sg) * &cb + &(&cg * &cg) * &cb;
        assert_eq!(e.simplify(), cb);
        assert_eq!(cb.simplify(), cb);
    }

    #[test]
    fn atom_canonical_forms() {
        // cos(-x) = cos x, sin(-x) = -sin x
        assert_eq!(ScalarExpr::cos(&-g()), ScalarExpr::cos(&g()));
        assert_eq!(ScalarExpr::sin(&-g()), -ScalarExpr::sin(&g()));
        // shifts by pi/2 and pi
        let half = LinearPhase::pi_times(r64(1, 2));
        assert_eq!(ScalarExpr::cos(&(&g() + &half)), -ScalarExpr::sin(&g()));
        assert_eq!(ScalarExpr::sin(&(&g() + &half)), ScalarExpr::cos(&g()));
        assert_eq!(ScalarExpr::cos(&(&g() + &LinearPhase::pi())), -ScalarExpr::cos(&g()));
        assert_eq!(ScalarExpr::cos(&LinearPhase::pi_times(r64(1, 3))), ScalarExpr::ratio(1, 2));
        assert_eq!(ScalarExpr::sin(&LinearPhase::pi_times(r64(7, 6))), ScalarExpr::ratio(-1, 2));
    }

    #[test]
    fn simplify_removes_pythagorean_powers() {
        let (cb, sb) = (ScalarExpr::cos(&b()), ScalarExpr::sin(&b()));
        let (cg, sg) = (ScalarExpr::cos(&g()), ScalarExpr::sin(&g()));
        let unit = &cb * &cb + &sb * &sb;
        let core = ScalarExpr::int(2) * cb.clone() * sb.clone() * cg.clone() * sg.clone();
        let bloated = core.clone() * unit.clone() * unit.clone() * unit;
        assert_eq!(bloated.simplify(), core);
        let tri = core.clone() + &(&(&sb * &sb) * &sg) * &sg;
        assert_eq!(tri.simplify(), tri);
    }

    #[test]
    fn expand_angles_matches_numerically() {
        let arg = &g().scale(r64(3, 1)) - &b().scale(r64(2, 1));
        let arg = &arg + &LinearPhase::pi_times(r64(1, 4));
        for e in [ScalarExpr::cos(&arg), ScalarExpr::sin(&arg)] {
            let x = e.expand_angles();
            assert!(x.monomials().all(|m| m.atoms.iter().all(|a| a.arg.terms().len() == 1)));
            assert!(equiv_numeric(&e, &x, 32, 1e-12));
        }
        let double = ScalarExpr::cos(&g().scale(r64(2, 1))).expand_angles().simplify();
        let cg = ScalarExpr::cos(&g());
        let sg = ScalarExpr::sin(&g());
        assert_eq!(double, &cg * &cg - &sg * &sg);
    }

    #[test]
    fn substitution_is_exact() {
        let e = ScalarExpr::cos(&LinearPhase::param("alpha_0")) * ScalarExpr::cos(&LinearPhase::param("alpha_1"));
        let e = e.substitute(&Parameter::new("alpha_0"), &LinearPhase::pi());
        let e = e.substitute(&Parameter::new("alpha_1"), &LinearPhase::zero());
        assert_eq!(e, ScalarExpr::int(-1));
    }

    #[test]
    fn json_round_trip() {
        let e = ScalarExpr::ratio(-3, 7).mul_sqrt2_pow(-3) * ScalarExpr::exp_i_phase(&(&g() - &b().scale(r64(1, 2))))
            + ScalarExpr::i();
        let s = e.to_json();
        assert_eq!(ScalarExpr::from_json(&s).unwrap(), e);
        assert_eq!(ScalarExpr::from_json(&s).unwrap().to_json(), s);
        assert!(ScalarExpr::from_json(r#"{"monomials":[{"re":"1/0","im":"0/1","sqrt2":0,"atoms":[]}]}"#).is_err());
    }

    #[test]
    fn display_is_readable() {
        let e = ScalarExpr::int(2)
            * ScalarExpr::cos(&b())
            * ScalarExpr::sin(&b())
            * ScalarExpr::sin(&g())
            * ScalarExpr::cos(&g());
        assert_eq!(e.to_string(), "2*cos(beta)*sin(beta)*cos(gamma)*sin(gamma)");
        assert_eq!((-ScalarExpr::sqrt2_pow(-1)).to_string(), "-1/2*sqrt(2)");
        assert_eq!(ScalarExpr::zero().to_string(), "0");
    }
}
