//! Weighted `q_m` norms on chains with coefficients in a finite index set,
//! the orbit-sum constant `b_N`, the constant `c`, and the seeded
//! continuity check `q_m(γx) ≤ M_γ c^m √b_N q_{m+N/2}(x)`.
//!
//! Distances to the base vertex are square roots of exact rationals; they
//! enter through [`Interval`] enclosures so every comparison is rigorous.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
// Float methods come from libm here; with std linked the inherent ones win.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{Chain, Complex, ComplexKind};
use crate::contraction::Contraction;
use crate::error::{Error, Result};
use crate::interval::{big, Interval};
use crate::linalg::{q, Q};

/// Fractional bits kept when rounding interval endpoints outward.
const ROUND_BITS: u32 = 64;

/// Relative tolerance for the `b_N` tail.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Finite index set with lengths `ℓ(i) ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedIndex {
    labels: Vec<i64>,
    lengths: Vec<Q>,
}

impl WeightedIndex {
    pub fn new(labels: Vec<i64>, lengths: Vec<Q>) -> Result<Self> {
        if labels.len() != lengths.len() || labels.is_empty() {
            return Err(Error::InvalidParameter(String::from("index labels and lengths must match and be nonempty")));
        }
        if let Some(l) = lengths.iter().find(|l| **l < Q::one()) {
            return Err(Error::InvalidParameter(format!("length {l} is below 1")));
        }
        Ok(WeightedIndex { labels, lengths })
    }

    /// A single direction of length 1.
    pub fn point() -> Self {
        WeightedIndex { labels: vec![0], lengths: vec![Q::one()] }
    }

    /// Integers `-r..=r` with `ℓ(i) = |i| + 1`.
    pub fn window(r: i64) -> Self {
        let labels: Vec<i64> = (-r..=r).collect();
        let lengths = labels.iter().map(|&i| q(i.unsigned_abs() as i128 + 1)).collect();
        WeightedIndex { labels, lengths }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> i64 {
        self.labels[i]
    }

    pub fn position(&self, label: i64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn length(&self, i: usize) -> Q {
        self.lengths[i]
    }
}

/// Chain whose coefficient at each cell is a finitely supported function
/// on a [`WeightedIndex`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormedChain {
    pub degree: i32,
    terms: BTreeMap<usize, BTreeMap<usize, Q>>,
}

impl NormedChain {
    pub fn zero(degree: i32) -> Self {
        NormedChain { degree, terms: BTreeMap::new() }
    }

    pub fn add(&mut self, cell: usize, index: usize, v: Q) {
        if v.is_zero() {
            return;
        }
        let f = self.terms.entry(cell).or_default();
        let e = f.entry(index).or_insert_with(Q::zero);
        *e += v;
        if e.is_zero() {
            f.remove(&index);
            if f.is_empty() {
                self.terms.remove(&cell);
            }
        }
    }

    /// Inserts `(sign σ) ⊗ f` using `f_{-σ} = -f_σ`.
    pub fn insert_oriented(&mut self, cell: usize, sign: i32, index: usize, v: Q) {
        self.add(cell, index, if sign < 0 { -v } else { v });
    }

    pub fn coefficient(&self, cell: usize, index: usize) -> Q {
        self.terms.get(&cell).and_then(|f| f.get(&index)).copied().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, Q)> + '_ {
        self.terms.iter().flat_map(|(&c, f)| f.iter().map(move |(&i, &v)| (c, i, v)))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, k: Q) -> Self {
        let mut out = NormedChain::zero(self.degree);
        for (c, i, v) in self.terms() {
            out.add(c, i, v * k);
        }
        out
    }

    pub fn add_chain(&mut self, other: &NormedChain) {
        for (c, i, v) in other.terms() {
            self.add(c, i, v);
        }
    }

    /// Coefficient-wise image under a contraction: `γ(σ ⊗ f) = γ(σ) ⊗ f`.
    pub fn contract(&self, gamma: &Contraction) -> Result<NormedChain> {
        let mut out = NormedChain::zero(self.degree + 1);
        for (c, i, v) in self.terms() {
            let img = gamma.apply(&Chain::unit(self.degree, c))?;
            for (t, w) in img.terms() {
                out.add(t, i, v * w);
            }
        }
        Ok(out)
    }

    /// The plain chain at one index.
    pub fn component(&self, index: usize) -> Chain {
        let mut c = Chain::zero(self.degree);
        for (cell, i, v) in self.terms() {
            if i == index {
                c.add(cell, v);
            }
        }
        c
    }
}

fn round_out(x: Interval) -> Interval {
    let s = BigInt::one() << ROUND_BITS as usize;
    let lo = (&x.lo * BigRational::from_integer(s.clone())).floor() / BigRational::from_integer(s.clone());
    let hi = (&x.hi * BigRational::from_integer(s.clone())).ceil() / BigRational::from_integer(s);
    Interval { lo, hi }
}

/// Enclosure of `d(σ, x₀)`.
pub fn cell_distance(complex: &Complex, cell: usize) -> Interval {
    Interval::sqrt_q(&complex.dist2(cell))
}

/// Squared distance from the base vertex to `δ`; trees use one edge.
pub fn delta_dist2(complex: &Complex) -> Q {
    match complex.datum() {
        Some(d) => d.delta_dist2(),
        None => Q::one(),
    }
}

/// `c = (7 + 2 d(x₀, δ)) / 2`.
pub fn constant_c(complex: &Complex) -> Interval {
    let d = Interval::sqrt_q(&delta_dist2(complex));
    let two = Interval::from_int(2);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    (Interval::from_int(7) + &two * &d).scale(&half)
}

/// `q_m(x)²` as an enclosure.
pub fn q_norm2(complex: &Complex, wi: &WeightedIndex, x: &NormedChain, m: u32) -> Interval {
    let mut total = Interval::zero();
    let mut dist: BTreeMap<usize, Interval> = BTreeMap::new();
    for (c, i, v) in x.terms() {
        let d = dist.entry(c).or_insert_with(|| cell_distance(complex, c)).clone();
        let w = (Interval::one() + d + Interval::from_q(&wi.length(i))).pow(2 * m);
        let v2 = big(&(v * v));
        total = total + round_out(w.scale(&v2));
    }
    total
}

pub fn q_norm(complex: &Complex, wi: &WeightedIndex, x: &NormedChain, m: u32) -> Interval {
    q_norm2(complex, wi, x, m).sqrt()
}

/// Polynomial-growth fit of orbit counts per unit distance shell.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit {
    pub shells: Vec<usize>,
    /// Least-squares slope of `log(cumulative count)` against `log(1+k)`.
    pub slope: f64,
    /// Integer degree used by the tail model.
    pub degree: u32,
    /// Constant `C` with `count_k ≤ C (1+k)^degree` on the fitted shells.
    pub coefficient: f64,
    pub loglog_residual: f64,
    pub loglinear_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BConstant {
    /// Dimension of the cells summed over.
    pub cell_dim: usize,
    pub n_exp: u32,
    pub fit: GrowthFit,
    /// Exact partial sum over the complete shells.
    pub partial: Interval,
    /// Model sum over shells past the counting radius up to the cutoff.
    pub extrapolated: f64,
    pub cutoff: u64,
    /// Integral bound on the remaining tail.
    pub tail_bound: f64,
    pub value: f64,
}

impl BConstant {
    /// Rigorous lower bound: the exact partial sum.
    pub fn lower(&self) -> &BigRational {
        &self.partial.lo
    }
}

fn floor_sqrt(x: &Q) -> u64 {
    let mut k: u64 = 0;
    while q((k as i128 + 1) * (k as i128 + 1)) <= *x {
        k += 1;
    }
    k
}

/// Orbit representatives of cells of one dimension, with their shells.
/// Orbits are Weyl orbits on apartments and single cells on trees; only
/// shells lying entirely inside the complex (with room for their hulls)
/// are kept.
pub fn shell_orbits(counting: &Complex, cell_dim: usize) -> Vec<Vec<usize>> {
    let reps: Vec<usize> = match counting.kind() {
        ComplexKind::Apartment => {
            let syms = counting.symmetries();
            counting
                .cells_of_dim(cell_dim)
                .filter(|&c| syms.iter().all(|a| a[c].0 >= c))
                .collect()
        }
        ComplexKind::Tree => counting.cells_of_dim(cell_dim).collect(),
    };
    let excess2 = match counting.kind() {
        ComplexKind::Apartment => delta_dist2(counting),
        ComplexKind::Tree => Q::zero(),
    };
    let r = counting.radius();
    let mut shells: Vec<Vec<usize>> = Vec::new();
    let mut k: u64 = 0;
    loop {
        let room = r - q(k as i128 + 1);
        if room < Q::zero() || room * room < excess2 {
            break;
        }
        shells.push(Vec::new());
        k += 1;
    }
    for c in reps {
        let k = floor_sqrt(&counting.dist2(c)) as usize;
        if k < shells.len() {
            shells[k].push(c);
        }
    }
    shells
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let sse = xs.iter().zip(ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    (slope, icpt, sse)
}

/// Fits cumulative orbit counts, which grow like `(1+k)^(degree+1)` and
/// are far less noisy than single shells.
pub fn fit_growth(counts: &[usize]) -> Result<GrowthFit> {
    let mut total = 0usize;
    let cumulative: Vec<usize> = counts
        .iter()
        .map(|&c| {
            total += c;
            total
        })
        .collect();
    let pts: Vec<(f64, f64)> = cumulative
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (k as f64, c as f64))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidParameter(String::from(
            "counting complex has fewer than four complete shells",
        )));
    }
    let ks: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let logk: Vec<f64> = pts.iter().map(|p| (1.0 + p.0).ln()).collect();
    let logc: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, _, loglog) = least_squares(&logk, &logc);
    let (lin_slope, _, loglin) = least_squares(&ks, &logc);
    if lin_slope > 0.05 && loglin * 1.1 < loglog {
        return Err(Error::Divergent(format!(
            "orbit counts grow exponentially (rate {:.3} per shell)",
            lin_slope.exp()
        )));
    }
    let degree = (slope - 1.0).round().max(0.0) as u32;
    let coefficient = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 / (1.0 + k as f64).powi(degree as i32))
        .fold(0.0, f64::max);
    Ok(GrowthFit {
        shells: counts.to_vec(),
        slope,
        degree,
        coefficient,
        loglog_residual: loglog,
        loglinear_residual: loglin,
    })
}

/// `b_N = Σ (1 + d(τ, x₀))^{-N}` over orbits of cells of dimension
/// `cell_dim`: exact over complete shells, extrapolated beyond.
pub fn b_constant(counting: &Complex, cell_dim: usize, n_exp: u32) -> Result<BConstant> {
    if n_exp == 0 || n_exp % 2 != 0 {
        return Err(Error::InvalidParameter(format!("N = {n_exp} must be a positive even integer")));
    }
    let shells = shell_orbits(counting, cell_dim);
    let counts: Vec<usize> = shells.iter().map(Vec::len).collect();
    let fit = fit_growth(&counts)?;
    if n_exp <= fit.degree + 1 {
        return Err(Error::Divergent(format!(
            "N = {n_exp} does not exceed growth degree {} plus one",
            fit.degree
        )));
    }
    let mut partial = Interval::zero();
    for shell in &shells {
        for &c in shell {
            let w = (Interval::one() + cell_distance(counting, c)).pow(n_exp).recip();
            partial = partial + round_out(w);
        }
    }
    let k0 = shells.len() as u64;
    let expo = fit.degree as f64 - n_exp as f64;
    let term = |k: u64| fit.coefficient * (1.0 + k as f64).powf(expo);
    let tail_from = |k: u64| fit.coefficient * (1.0 + k as f64).powf(expo + 1.0) / (-(expo + 1.0));
    let target = TAIL_TOLERANCE * partial.lo_f64();
    let mut cutoff = k0.max(1);
    while tail_from(cutoff) >= target {
        cutoff = cutoff.saturating_mul(2);
        if cutoff > 1 << 40 {
            return Err(Error::Divergent(format!("tail of b_{n_exp} does not fall below tolerance")));
        }
    }
    let extrapolated: f64 = (k0..cutoff).map(term).sum();
    let tail_bound = tail_from(cutoff);
    let value = partial.hi_f64() + extrapolated + tail_bound;
    Ok(BConstant { cell_dim, n_exp, fit, partial, extrapolated, cutoff, tail_bound, value })
}

/// Smallest even `N` with a convergent `b_N`.
pub fn minimal_b_constant(counting: &Complex, cell_dim: usize) -> Result<BConstant> {
    let mut last = None;
    for n in (2..=32).step_by(2) {
        match b_constant(counting, cell_dim, n) {
            Ok(b) => return Ok(b),
            Err(Error::Divergent(msg)) if msg.starts_with("N =") => last = Some(msg),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Divergent(last.unwrap_or_default()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormConstants {
    pub m_gamma: Q,
    pub c: Interval,
    pub n_exp: u32,
    /// `b_N` for chains of degree `n`, summing over `(n+1)`-cells.
    pub b: Vec<BConstant>,
}

impl NormConstants {
    /// One `N` for every degree: the largest of the per-degree minima.
    pub fn certify(complex: &Complex, gamma: &Contraction, counting: &Complex) -> Result<Self> {
        let top = complex.top_dim();
        let mut n_exp = 2;
        for n in 0..top {
            n_exp = n_exp.max(minimal_b_constant(counting, n + 1)?.n_exp);
        }
        let b = (0..top).map(|n| b_constant(counting, n + 1, n_exp)).collect::<Result<Vec<_>>>()?;
        Ok(NormConstants { m_gamma: gamma.m_gamma(), c: constant_c(complex), n_exp, b })
    }

    /// Enclosure of `M_γ c^m √b_N` for chains of degree `n`.
    pub fn bound(&self, n: usize, m: u32) -> Interval {
        let b = Interval { lo: self.b[n].lower().clone(), hi: self.b[n].lower().clone() };
        (self.c.pow(m) * b.sqrt()).scale(&big(&self.m_gamma))
    }
}

/// Compares `q_m(γx)` with `M_γ c^m √b_N q_{m+N/2}(x)` on squares; returns
/// (holds, ratio, bound) with floats for reporting.
pub fn compare_bound(
    complex: &Complex,
    gamma: &Contraction,
    wi: &WeightedIndex,
    constants: &NormConstants,
    x: &NormedChain,
    m: u32,
) -> Result<(bool, f64, f64)> {
    let n = x.degree as usize;
    let gx = x.contract(gamma)?;
    let lhs2 = q_norm2(complex, wi, &gx, m);
    let rhs_norm2 = q_norm2(complex, wi, x, m + constants.n_exp / 2);
    let bound = constants.bound(n, m);
    let rhs2 = bound.pow(2) * rhs_norm2.clone();
    let holds = lhs2.certainly_le(&rhs2);
    let ratio = if rhs_norm2.mid_f64() > 0.0 { (lhs2.mid_f64() / rhs_norm2.mid_f64()).sqrt() } else { 0.0 };
    Ok((holds, ratio, bound.mid_f64()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    pub m: u32,
    pub n_exp: u32,
    pub seed: u64,
    pub trials: usize,
    pub max_ratio: f64,
    /// Bound at the degree where the maximum ratio occurred.
    pub bound: f64,
    /// Smallest `bound / ratio` over all trials.
    pub min_slack_factor: f64,
    pub worst_trial_seed: u64,
    /// Seeds of trials where the bound failed.
    pub failures: Vec<u64>,
}

impl ContinuityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Seed of trial `t` derived from the master seed.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(t as u64);
    rng.next_u64()
}

/// Random sparse chain of the given degree with 1 to 4 cells and small
/// rational coefficients.
pub fn random_chain(complex: &Complex, wi: &WeightedIndex, degree: usize, seed: u64) -> NormedChain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = complex.cells_of_dim(degree);
    let mut x = NormedChain::zero(degree as i32);
    while x.is_zero() {
        for _ in 0..rng.gen_range(1..=4) {
            let c = rng.gen_range(cells.clone());
            for _ in 0..rng.gen_range(1..=3) {
                let i = rng.gen_range(0..wi.len());
                let mut num: i128 = rng.gen_range(-9..=9);
                if num == 0 {
                    num = 1;
                }
                let den: i128 = rng.gen_range(1..=5);
                x.add(c, i, Q::new(num, den));
            }
        }
    }
    x
}

/// Seeded trials cycling through the chain degrees below the top.
pub fn continuity_check(
    complex: &Complex,
    gamma: &Contraction,
    wi: &WeightedIndex,
    constants: &NormConstants,
    m: u32,
    trials: usize,
    seed: u64,
) -> Result<ContinuityReport> {
    let top = complex.top_dim();
    if top == 0 {
        return Err(Error::InvalidParameter(String::from("complex has no cells above dimension 0")));
    }
    let mut report = ContinuityReport {
        m,
        n_exp: constants.n_exp,
        seed,
        trials,
        max_ratio: 0.0,
        bound: constants.bound(0, m).mid_f64(),
        min_slack_factor: f64::INFINITY,
        worst_trial_seed: trial_seed(seed, 0),
        failures: Vec::new(),
    };
    for t in 0..trials {
        let ts = trial_seed(seed, t);
        let degree = t % top;
        let x = random_chain(complex, wi, degree, ts);
        let (holds, ratio, bound) = compare_bound(complex, gamma, wi, constants, &x, m)?;
        if !holds {
            report.failures.push(ts);
        }
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.bound = bound;
            report.worst_trial_seed = ts;
        }
        if ratio > 0.0 && bound / ratio < report.min_slack_factor {
            report.min_slack_factor = bound / ratio;
        }
    }
    Ok(report)
}

/// Pairs `(σ, τ)` with `γ_{στ} ≠ 0` violating
/// `1 + d(τ,x₀) + ℓ ≤ c (1 + d(σ,x₀) + ℓ)` at `ℓ = 1`, where the ratio is
/// largest.
pub fn length_estimate_violations(complex: &Complex, gamma: &Contraction) -> Vec<(usize, usize)> {
    let c = constant_c(complex);
    let mut out = Vec::new();
    for s in 0..complex.len() {
        let ds = cell_distance(complex, s);
        let rhs = &c * &(Interval::from_int(2) + ds);
        for t in gamma.image(s).map(|g| g.support().collect::<Vec<_>>()).unwrap_or_default() {
            let lhs = Interval::from_int(2) + cell_distance(complex, t);
            if !lhs.certainly_le(&rhs) {
                out.push((s, t));
            }
        }
    }
    out
}

/// Float value of an exact rational, for reports.
pub fn big_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
