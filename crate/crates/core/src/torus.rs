//! The rank-one torus model: sequences on `ℤ`, the two-term complex
//! `S ⊗ S → S ⊗ S → S` with
//! `∂₁(f ⊗ f') = f ⊗ f' − ωf ⊗ ω⁻¹f'` and `∂₀(f ⊗ f') = f · f'`
//! (convolution), the non-exactness witness `s ⊗ e − e ⊗ s`, and its
//! repair by the line contraction.
//!
//! The unit-group factor is taken to be trivial, so the tensor product
//! over its Hecke algebra is the plain tensor product of sequences on a
//! window `[-R, R]`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};
#[allow(unused_imports)]
use num_traits::Float;

use crate::complex::Complex;
use crate::contraction::{build_contraction, Contraction};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg::{q, Matrix, Q};
use crate::norms::{NormConstants, NormedChain, WeightedIndex};

/// Shipped coefficient profiles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Profile {
    /// `2^{-|n|}`.
    Dyadic,
    /// `(1 + |n|)^{-k}`.
    Power(u32),
    /// `1` for `|n| ≤ r`, else `0`.
    Indicator(i64),
    /// `e_K`: the delta at `0`.
    Delta,
    /// User values with a declared decay certificate `|v(n)| ≤ C (1+|n|)^{-m}`.
    Custom { values: BTreeMap<i64, Q>, c: Q, m: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayClass {
    FinitelySupported,
    SchwartzSampled,
}

impl Profile {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "dyadic" => return Ok(Profile::Dyadic),
            "delta" => return Ok(Profile::Delta),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("power") {
            let k: u32 = k.trim_start_matches([':', '-']).parse().map_err(|_| bad_profile(s))?;
            if !(2..=4).contains(&k) {
                return Err(Error::InvalidParameter(format!("power profile exponent {k} not in 2..=4")));
            }
            return Ok(Profile::Power(k));
        }
        if let Some(r) = s.strip_prefix("indicator") {
            let r: i64 = r.trim_start_matches([':', '-']).parse().map_err(|_| bad_profile(s))?;
            if r < 0 {
                return Err(bad_profile(s));
            }
            return Ok(Profile::Indicator(r));
        }
        Err(bad_profile(s))
    }

    pub fn name(&self) -> String {
        match self {
            Profile::Dyadic => String::from("dyadic"),
            Profile::Power(k) => format!("power{k}"),
            Profile::Indicator(r) => format!("indicator{r}"),
            Profile::Delta => String::from("delta"),
            Profile::Custom { .. } => String::from("custom"),
        }
    }

    pub fn value(&self, n: i64) -> Q {
        let a = n.unsigned_abs() as i128;
        match self {
            Profile::Dyadic => {
                if a > 120 {
                    Q::zero()
                } else {
                    Q::new(1, 1i128 << a)
                }
            }
            Profile::Power(k) => Q::new(1, (1 + a).pow(*k)),
            Profile::Indicator(r) => {
                if n.abs() <= *r {
                    Q::one()
                } else {
                    Q::zero()
                }
            }
            Profile::Delta => {
                if n == 0 {
                    Q::one()
                } else {
                    Q::zero()
                }
            }
            Profile::Custom { values, .. } => values.get(&n).copied().unwrap_or_else(Q::zero),
        }
    }

    pub fn class(&self) -> DecayClass {
        match self {
            Profile::Indicator(_) | Profile::Delta => DecayClass::FinitelySupported,
            _ => DecayClass::SchwartzSampled,
        }
    }

    /// `(C, m)` with `|v(n)| ≤ C (1+|n|)^{-m}`.
    pub fn certificate(&self) -> (Q, u32) {
        match self {
            // max_n (1+n)^4 2^{-n} = 81/2 at n = 5
            Profile::Dyadic => (q(41), 4),
            Profile::Power(k) => (Q::one(), *k),
            Profile::Indicator(_) | Profile::Delta => (Q::one(), 0),
            Profile::Custom { c, m, .. } => (*c, *m),
        }
    }
}

fn bad_profile(s: &str) -> Error {
    Error::InvalidParameter(format!("unknown profile '{s}' (dyadic, delta, power2..4, indicatorR)"))
}

/// A sequence restricted to the window `[-R, R]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqElement {
    pub radius: i64,
    pub class: DecayClass,
    values: BTreeMap<i64, Q>,
}

impl SeqElement {
    pub fn sample(profile: &Profile, radius: i64) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidParameter(format!("window radius {radius} must be at least 1")));
        }
        let mut values = BTreeMap::new();
        for n in -radius..=radius {
            let v = profile.value(n);
            if !v.is_zero() {
                values.insert(n, v);
            }
        }
        let s = SeqElement { radius, class: profile.class(), values };
        let (c, m) = profile.certificate();
        if !s.satisfies_decay(c, m) {
            return Err(Error::InvalidParameter(format!("profile violates its decay certificate ({c}, {m})")));
        }
        Ok(s)
    }

    pub fn delta(n: i64, radius: i64) -> Result<Self> {
        if n.abs() > radius {
            return Err(Error::WindowOverflow { index: n, radius });
        }
        Ok(SeqElement { radius, class: DecayClass::FinitelySupported, values: BTreeMap::from([(n, Q::one())]) })
    }

    pub fn from_values(values: BTreeMap<i64, Q>, radius: i64) -> Result<Self> {
        if let Some((&n, _)) = values.iter().find(|(n, _)| n.abs() > radius) {
            return Err(Error::WindowOverflow { index: n, radius });
        }
        let values = values.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(SeqElement { radius, class: DecayClass::FinitelySupported, values })
    }

    pub fn get(&self, n: i64) -> Q {
        self.values.get(&n).copied().unwrap_or_else(Q::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (i64, Q)> + '_ {
        self.values.iter().map(|(&n, &v)| (n, v))
    }

    pub fn satisfies_decay(&self, c: Q, m: u32) -> bool {
        self.support().all(|(n, v)| v.abs() * q((1 + n.unsigned_abs() as i128).pow(m)) <= c)
    }
}

/// Element of `S ⊗ S` on the window: coefficients of `δ_a ⊗ δ_b`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TorusChain {
    terms: BTreeMap<(i64, i64), Q>,
}

impl TorusChain {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add(&mut self, a: i64, b: i64, v: Q) {
        if v.is_zero() {
            return;
        }
        let e = self.terms.entry((a, b)).or_insert_with(Q::zero);
        *e += v;
        if e.is_zero() {
            self.terms.remove(&(a, b));
        }
    }

    pub fn tensor(f: &SeqElement, g: &SeqElement) -> Self {
        let mut out = Self::zero();
        for (a, x) in f.support() {
            for (b, y) in g.support() {
                out.add(a, b, x * y);
            }
        }
        out
    }

    pub fn get(&self, a: i64, b: i64) -> Q {
        self.terms.get(&(a, b)).copied().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i64, i64), Q)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sub(&self, other: &TorusChain) -> TorusChain {
        let mut out = self.clone();
        for (k, v) in other.terms() {
            out.add(k.0, k.1, -v);
        }
        out
    }

    /// `max(|a|, |b|)` over the support.
    pub fn support_radius(&self) -> i64 {
        self.terms.keys().map(|&(a, b)| a.abs().max(b.abs())).max().unwrap_or(0)
    }
}

/// `∂₁` on the window; a shifted term leaving the window is an error.
pub fn d1(x: &TorusChain, radius: i64) -> Result<TorusChain> {
    let mut out = TorusChain::zero();
    for ((a, b), v) in x.terms() {
        for idx in [a, b, a + 1, b - 1] {
            if idx.abs() > radius {
                return Err(Error::WindowOverflow { index: idx, radius });
            }
        }
        out.add(a, b, v);
        out.add(a + 1, b - 1, -v);
    }
    Ok(out)
}

pub fn d1_pair(f: &SeqElement, g: &SeqElement) -> Result<TorusChain> {
    d1(&TorusChain::tensor(f, g), f.radius.min(g.radius))
}

/// `∂₀`: convolution `δ_a ⊗ δ_b ↦ δ_{a+b}`.
pub fn d0(x: &TorusChain) -> BTreeMap<i64, Q> {
    let mut out: BTreeMap<i64, Q> = BTreeMap::new();
    for ((a, b), v) in x.terms() {
        let e = out.entry(a + b).or_insert_with(Q::zero);
        *e += v;
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// `s ⊗ e − e ⊗ s`.
pub fn witness_chain(s: &SeqElement) -> TorusChain {
    let e = SeqElement { radius: s.radius, class: DecayClass::FinitelySupported, values: BTreeMap::from([(0, Q::one())]) };
    TorusChain::tensor(s, &e).sub(&TorusChain::tensor(&e, s))
}

/// Result of solving `∂₁ y = x` on a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowSolution {
    pub solution: TorusChain,
    /// `∂₁` restricted to the window is injective.
    pub kernel_trivial: bool,
}

/// Exact solve of `∂₁ y = x` over unknowns `y(a, b)` with both `(a, b)`
/// and `(a+1, b-1)` in the window. The system splits along anti-diagonals
/// `a + b = n`; each block is solved densely with leftmost pivots.
pub fn solve_window(x: &TorusChain, radius: i64) -> Result<Option<WindowSolution>> {
    if let Some(((a, b), _)) = x.terms().find(|((a, b), _)| a.abs() > radius || b.abs() > radius) {
        let idx = if a.abs() > radius { a } else { b };
        return Err(Error::WindowOverflow { index: idx, radius });
    }
    let mut solution = TorusChain::zero();
    let mut kernel_trivial = true;
    for n in -2 * radius..=2 * radius {
        // rows: positions a with (a, n-a) in the window
        let rows: Vec<i64> = (-radius..=radius).filter(|a| (n - a).abs() <= radius).collect();
        let cols: Vec<i64> = rows.iter().copied().filter(|a| rows.contains(&(a + 1))).collect();
        let rhs: Vec<Q> = rows.iter().map(|&a| x.get(a, n - a)).collect();
        if cols.is_empty() {
            if rhs.iter().any(|v| !v.is_zero()) {
                return Ok(None);
            }
            continue;
        }
        let mut m = Matrix::zeros(rows.len(), cols.len());
        for (j, &a) in cols.iter().enumerate() {
            let i = rows.iter().position(|&r| r == a).unwrap();
            m[(i, j)] = Q::one();
            m[(i + 1, j)] = -Q::one();
        }
        if m.rank() < cols.len() {
            kernel_trivial = false;
        }
        if rhs.iter().all(Zero::is_zero) {
            continue;
        }
        match m.solve(&rhs) {
            Some(y) => {
                for (j, &a) in cols.iter().enumerate() {
                    solution.add(a, n - a, y[j]);
                }
            }
            None => return Ok(None),
        }
    }
    Ok(Some(WindowSolution { solution, kernel_trivial }))
}

/// Largest `|y|` on each anti-diagonal `a + b = n`, indexed by `|n|`.
pub fn antidiagonal_profile(y: &TorusChain, radius: i64) -> Vec<Q> {
    let mut out = vec![Q::zero(); radius as usize + 1];
    for ((a, b), v) in y.terms() {
        let k = (a + b).unsigned_abs() as usize;
        if k < out.len() && v.abs() > out[k] {
            out[k] = v.abs();
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessReport {
    pub profile: String,
    pub radius: i64,
    /// `∂₀(s ⊗ e − e ⊗ s) = 0`.
    pub kernel_check: bool,
    pub witness_is_zero: bool,
    pub solved: bool,
    pub kernel_trivial: bool,
    /// Largest coefficient on anti-diagonal distance `k`, for `k = 0..=R`.
    pub antidiagonal_max: Vec<Q>,
    pub max_coefficient: Q,
    /// Largest coefficient at anti-diagonal distance `R`.
    pub coefficient_at_radius: Q,
    /// Minimum over `1 ≤ k ≤ R` of the anti-diagonal maxima.
    pub min_over_k: Q,
    /// Threshold `s(0)` for the non-decay certificate.
    pub threshold: Q,
    /// `coefficient_at_radius ≥ threshold` and `min_over_k ≥ threshold`.
    pub non_decay: bool,
    pub support_radius: i64,
    /// Largest `|n|` with `s(n) ≠ 0`.
    pub input_radius: i64,
    pub solution: TorusChain,
}

pub fn counterexample_witness(profile: &Profile, radius: i64) -> Result<WitnessReport> {
    let s = SeqElement::sample(profile, radius)?;
    let x = witness_chain(&s);
    let kernel_check = d0(&x).is_empty();
    if !kernel_check {
        return Err(Error::Inconsistent(String::from("witness is not a cycle")));
    }
    let sol = solve_window(&x, radius)?
        .ok_or_else(|| Error::Inconsistent(String::from("window system has no solution")))?;
    let y = sol.solution;
    if d1(&y, radius)? != x {
        return Err(Error::Internal(String::from("window solution does not reproduce the witness")));
    }
    let profile_max = antidiagonal_profile(&y, radius);
    let max_coefficient = profile_max.iter().copied().max().unwrap_or_else(Q::zero);
    let coefficient_at_radius = profile_max[radius as usize];
    let min_over_k = profile_max[1..].iter().copied().min().unwrap_or_else(Q::zero);
    let threshold = s.get(0);
    let non_decay = threshold > Q::zero() && coefficient_at_radius >= threshold && min_over_k >= threshold;
    Ok(WitnessReport {
        profile: profile.name(),
        radius,
        kernel_check,
        witness_is_zero: x.is_zero(),
        solved: true,
        kernel_trivial: sol.kernel_trivial,
        antidiagonal_max: profile_max,
        max_coefficient,
        coefficient_at_radius,
        min_over_k,
        threshold,
        non_decay,
        support_radius: y.support_radius(),
        input_radius: s.support().map(|(n, _)| n.abs()).max().unwrap_or(0),
        solution: y,
    })
}

/// The line (tree with `q = 1`) used for the completed solution, with
/// positions `-R..=R`.
pub struct LineModel {
    pub radius: i64,
    pub complex: Complex,
    pub gamma: Contraction,
    pub index: WeightedIndex,
    vertex_of: BTreeMap<i64, usize>,
    position_of: BTreeMap<usize, i64>,
}

impl LineModel {
    pub fn new(radius: i64, budget: usize) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidParameter(format!("window radius {radius} must be at least 1")));
        }
        let complex = Complex::tree(1, radius as usize, budget)?;
        let gamma = build_contraction(&complex)?;
        let tree = complex.tree_data().unwrap().clone();
        let mut vertex_of = BTreeMap::new();
        let mut position_of = BTreeMap::new();
        for v in complex.cells_of_dim(0) {
            let tv = complex.factors()[0].simplices[complex.cell(v).0[0] as usize][0] as usize;
            let w = &tree.words[tv];
            let len = w.len() as i64;
            let p = if w.first() == Some(&1) { -len } else { len };
            vertex_of.insert(p, v);
            position_of.insert(v, p);
        }
        Ok(LineModel { radius, complex, gamma, index: WeightedIndex::window(radius), vertex_of, position_of })
    }

    pub fn vertex(&self, p: i64) -> Result<usize> {
        self.vertex_of.get(&p).copied().ok_or(Error::WindowOverflow { index: p, radius: self.radius })
    }

    fn slot(&self, n: i64) -> Result<usize> {
        self.index.position(n).ok_or(Error::WindowOverflow { index: n, radius: self.radius })
    }

    /// `δ_a ⊗ δ_b ↦ (vertex a) ⊗ δ_{a+b}` on degree-0 elements.
    pub fn to_vertex_chain(&self, x: &TorusChain) -> Result<NormedChain> {
        let mut out = NormedChain::zero(0);
        for ((a, b), v) in x.terms() {
            out.add(self.vertex(a)?, self.slot(a + b)?, v);
        }
        Ok(out)
    }

    /// Inverse of `δ_a ⊗ δ_b ↦ −[a, a+1] ⊗ δ_{a+b}` on degree-1 elements.
    pub fn from_edge_chain(&self, y: &NormedChain) -> Result<TorusChain> {
        let mut out = TorusChain::zero();
        for (e, i, v) in y.terms() {
            let ends = self.complex.vertices(e);
            // Edges are oriented from the vertex nearer the root.
            let (u, w) = (self.position_of[&ends[0]], self.position_of[&ends[1]]);
            let n = self.index.label(i);
            if w == u + 1 {
                out.add(u, n - u, -v);
            } else if w == u - 1 {
                out.add(w, n - w, v);
            } else {
                return Err(Error::Internal(String::from("line edge with non-adjacent ends")));
            }
        }
        Ok(out)
    }

    /// `y = γ₀(x)` transported back to sequences.
    pub fn contract(&self, x: &TorusChain) -> Result<(NormedChain, NormedChain, TorusChain)> {
        let xv = self.to_vertex_chain(x)?;
        let yv = xv.contract(&self.gamma)?;
        let y = self.from_edge_chain(&yv)?;
        Ok((xv, yv, y))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormLine {
    pub m: u32,
    /// `q_m(y)`.
    pub q_solution: Interval,
    /// `q_{m+N/2}(x)`.
    pub q_input: Interval,
    /// `M_γ c^m √b_N`.
    pub bound: Interval,
    /// `q_m(y) / q_{m+N/2}(x)`, for reporting.
    pub ratio: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletedReport {
    pub profile: String,
    pub radius: i64,
    /// `∂₁ y = x` exactly.
    pub solves: bool,
    /// Agreement with the exact window solver.
    pub agrees_with_solver: bool,
    pub n_exp: u32,
    pub norms: Vec<NormLine>,
    pub solution: TorusChain,
}

impl CompletedReport {
    pub fn passed(&self) -> bool {
        self.solves && self.agrees_with_solver && self.norms.iter().all(|l| l.holds)
    }
}

/// Completed solution of the witness via the line contraction, with its
/// norm estimates. `counting` is the line used to certify `b_N`.
pub fn completed_solution(
    profile: &Profile,
    radius: i64,
    m_list: &[u32],
    counting: &Complex,
    budget: usize,
) -> Result<CompletedReport> {
    let s = SeqElement::sample(profile, radius)?;
    let x = witness_chain(&s);
    let line = LineModel::new(radius, budget)?;
    let (xv, yv, y) = line.contract(&x)?;
    let solves = d1(&y, radius)? == x;
    let agrees = match solve_window(&x, radius)? {
        Some(sol) => sol.kernel_trivial && sol.solution == y,
        None => false,
    };
    let constants = NormConstants::certify(&line.complex, &line.gamma, counting)?;
    let mut norms = Vec::new();
    for &m in m_list {
        let lhs2 = crate::norms::q_norm2(&line.complex, &line.index, &yv, m);
        let rhs_n2 = crate::norms::q_norm2(&line.complex, &line.index, &xv, m + constants.n_exp / 2);
        let bound = constants.bound(0, m);
        let holds = lhs2.certainly_le(&(bound.pow(2) * rhs_n2.clone()));
        let ratio = if rhs_n2.mid_f64() > 0.0 { (lhs2.mid_f64() / rhs_n2.mid_f64()).sqrt() } else { 0.0 };
        norms.push(NormLine { m, q_solution: lhs2.sqrt(), q_input: rhs_n2.sqrt(), bound, ratio, holds });
    }
    Ok(CompletedReport {
        profile: profile.name(),
        radius,
        solves,
        agrees_with_solver: agrees,
        n_exp: constants.n_exp,
        norms,
        solution: y,
    })
}

/// Relative change `|q_m(y_{R2}) − q_m(y_{R1})| / q_m(y_{R2})` as an upper
/// bound, per `m`.
pub fn cauchy_gaps(small: &CompletedReport, large: &CompletedReport) -> Vec<(u32, f64)> {
    small
        .norms
        .iter()
        .zip(&large.norms)
        .map(|(a, b)| {
            let diff = (b.q_solution.hi_f64() - a.q_solution.lo_f64()).abs().max((a.q_solution.hi_f64() - b.q_solution.lo_f64()).abs());
            (a.m, diff / b.q_solution.lo_f64())
        })
        .collect()
}
