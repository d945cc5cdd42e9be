//! Reduced crystallographic root systems, their finite Weyl groups, the
//! half-sum of positive coroots, and the normalized Weyl-invariant metric.
//!
//! Points of the apartment are written in "simple root coordinates": the
//! coordinate `i` of a point `x` is the value `α_i(x)` of the `i`-th simple
//! root. A root `α = Σ n_i α_i` then evaluates as `Σ n_i x_i`, and a coroot
//! `β∨` is the point with coordinates `α_i(β∨) = ⟨α_i, β∨⟩`.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{q, Q};

pub type Point = Vec<Q>;

const MAX_RANK: usize = 4;

/// Integer square matrix acting on factor-local simple root coordinates.
pub type IntMatrix = Vec<Vec<i64>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Root {
    /// Which irreducible factor the root belongs to.
    pub factor: usize,
    /// Coefficients in the simple roots of its factor.
    pub coeffs: Vec<i64>,
    /// The coroot in factor-local coordinates.
    pub coroot: Vec<i64>,
}

impl Root {
    pub fn is_positive(&self) -> bool {
        self.coeffs.iter().all(|&c| c >= 0)
    }

    pub fn height(&self) -> i64 {
        self.coeffs.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub series: char,
    pub rank: usize,
    /// Offset of this factor's coordinates inside a global point.
    pub offset: usize,
    /// `cartan[i][j] = ⟨α_i, α_j∨⟩`.
    pub cartan: IntMatrix,
    /// Indices into [`RootDatum::roots`].
    pub roots: Vec<usize>,
    pub weyl: Vec<IntMatrix>,
    /// Coefficients of the highest root.
    pub marks: Vec<i64>,
}

impl Factor {
    pub fn name(&self) -> String {
        format!("{}{}", self.series, self.rank)
    }

    /// Vertices of the fundamental alcove, in factor-local coordinates.
    pub fn alcove_vertices(&self) -> Vec<Point> {
        let mut verts = vec![vec![Q::zero(); self.rank]];
        for i in 0..self.rank {
            let mut v = vec![Q::zero(); self.rank];
            v[i] = Q::new(1, self.marks[i] as i128);
            verts.push(v);
        }
        verts
    }
}

/// One element of the product Weyl group: an index into each factor's
/// element list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WeylElement(pub Vec<usize>);

#[derive(Clone, Debug)]
pub struct RootDatum {
    pub spec: String,
    pub rank: usize,
    pub factors: Vec<Factor>,
    pub roots: Vec<Root>,
    /// Common weight `c_α` of every root in the metric.
    pub metric_weight: Q,
    /// Gram matrix of the metric in global simple root coordinates.
    gram: Vec<Vec<Q>>,
}

impl RootDatum {
    /// Parses strings such as `A2`, `A1^3`, `A2xA1^1`, `B2`, `G2`.
    pub fn parse(spec: &str) -> Result<Self> {
        let trimmed = spec.trim();
        if trimmed.is_empty() {
            return Err(Error::BadSystemSpec(spec.to_string()));
        }
        let mut components = Vec::new();
        for token in trimmed.split(['x', 'X', '×']) {
            let token = token.trim();
            let (base, power) = match token.split_once('^') {
                Some((b, p)) => {
                    let p: usize = p.parse().map_err(|_| Error::BadSystemSpec(spec.to_string()))?;
                    (b, p)
                }
                None => (token, 1),
            };
            let mut chars = base.chars();
            let series = chars.next().ok_or_else(|| Error::BadSystemSpec(spec.to_string()))?;
            let rank: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::BadSystemSpec(spec.to_string()))?;
            for _ in 0..power {
                components.push((series.to_ascii_uppercase(), rank));
            }
        }
        Self::build(trimmed, &components)
    }

    pub fn build(spec: &str, components: &[(char, usize)]) -> Result<Self> {
        let total: usize = components.iter().map(|c| c.1).sum();
        if total == 0 {
            return Err(Error::RankZero);
        }
        if total > MAX_RANK {
            return Err(Error::RankTooLarge(total));
        }
        let mut factors = Vec::new();
        let mut roots = Vec::new();
        let mut offset = 0;
        for (fi, &(series, rank)) in components.iter().enumerate() {
            if rank == 0 {
                return Err(Error::RankZero);
            }
            let cartan = cartan_matrix(series, rank)?;
            let (factor_roots, weyl) = close_roots_and_weyl(&cartan);
            let mut marks = vec![0; rank];
            let mut ids = Vec::new();
            for (coeffs, coroot) in factor_roots {
                if coeffs.iter().sum::<i64>() > marks.iter().sum::<i64>()
                    && coeffs.iter().all(|&c| c >= 0)
                {
                    marks = coeffs.clone();
                }
                ids.push(roots.len());
                roots.push(Root { factor: fi, coeffs, coroot });
            }
            factors.push(Factor { series, rank, offset, cartan, roots: ids, weyl, marks });
            offset += rank;
        }
        let mut rd = RootDatum {
            spec: spec.to_string(),
            rank: total,
            factors,
            roots,
            metric_weight: q(1),
            gram: Vec::new(),
        };
        rd.normalize_metric();
        Ok(rd)
    }

    fn normalize_metric(&mut self) {
        self.metric_weight = q(1);
        self.gram = self.gram_with_weight(q(1));
        let mut diam2 = Q::zero();
        for f in &self.factors {
            let verts = f.alcove_vertices();
            let mut best = Q::zero();
            for a in &verts {
                for b in &verts {
                    let d = self.factor_dist2(f, a, b);
                    if d > best {
                        best = d;
                    }
                }
            }
            diam2 += best;
        }
        self.metric_weight = diam2.recip();
        self.gram = self.gram_with_weight(self.metric_weight);
    }

    fn gram_with_weight(&self, c: Q) -> Vec<Vec<Q>> {
        let mut g = vec![vec![Q::zero(); self.rank]; self.rank];
        for r in &self.roots {
            let off = self.factors[r.factor].offset;
            for (i, &ni) in r.coeffs.iter().enumerate() {
                for (j, &nj) in r.coeffs.iter().enumerate() {
                    g[off + i][off + j] += c * q((ni * nj) as i128);
                }
            }
        }
        g
    }

    pub fn positive_roots(&self) -> impl Iterator<Item = (usize, &Root)> {
        self.roots.iter().enumerate().filter(|(_, r)| r.is_positive())
    }

    pub fn simple_roots(&self) -> Vec<usize> {
        self.positive_roots().filter(|(_, r)| r.height() == 1).map(|(i, _)| i).collect()
    }

    pub fn highest_root_height(&self) -> i64 {
        self.roots.iter().map(Root::height).max().unwrap_or(0)
    }

    pub fn weyl_order(&self) -> usize {
        self.factors.iter().map(|f| f.weyl.len()).product()
    }

    /// All Weyl elements in lexicographic order of their factor indices;
    /// the identity comes first.
    pub fn weyl_elements(&self) -> Vec<WeylElement> {
        let mut out = vec![WeylElement(Vec::new())];
        for f in &self.factors {
            let mut next = Vec::with_capacity(out.len() * f.weyl.len());
            for e in &out {
                for k in 0..f.weyl.len() {
                    let mut parts = e.0.clone();
                    parts.push(k);
                    next.push(WeylElement(parts));
                }
            }
            out = next;
        }
        out
    }

    /// Value of a root at a global point.
    pub fn root_value(&self, root: &Root, x: &[Q]) -> Q {
        let off = self.factors[root.factor].offset;
        root.coeffs
            .iter()
            .enumerate()
            .fold(Q::zero(), |acc, (i, &n)| acc + q(n as i128) * x[off + i])
    }

    /// Value of a root on a point of its own factor.
    pub fn root_value_local(root: &Root, x: &[Q]) -> Q {
        root.coeffs.iter().zip(x).fold(Q::zero(), |acc, (&n, v)| acc + q(n as i128) * v)
    }

    pub fn coroot_point(&self, root: &Root) -> Point {
        let mut p = vec![Q::zero(); self.rank];
        let off = self.factors[root.factor].offset;
        for (i, &c) in root.coroot.iter().enumerate() {
            p[off + i] = q(c as i128);
        }
        p
    }

    /// The half-sum of the positive coroots.
    pub fn delta_point(&self) -> Point {
        let mut d = vec![Q::zero(); self.rank];
        for (_, r) in self.positive_roots() {
            let c = self.coroot_point(r);
            for (di, ci) in d.iter_mut().zip(c) {
                *di += ci / q(2);
            }
        }
        d
    }

    pub fn dist2(&self, x: &[Q], y: &[Q]) -> Q {
        let diff: Vec<Q> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.norm2(&diff)
    }

    pub fn norm2(&self, v: &[Q]) -> Q {
        let mut s = Q::zero();
        for i in 0..self.rank {
            if v[i].is_zero() {
                continue;
            }
            for j in 0..self.rank {
                if !self.gram[i][j].is_zero() {
                    s += v[i] * self.gram[i][j] * v[j];
                }
            }
        }
        s
    }

    /// Inner product restricted to one factor, on factor-local coordinates.
    pub fn factor_inner(&self, f: &Factor, x: &[Q], y: &[Q]) -> Q {
        let off = f.offset;
        let mut s = Q::zero();
        for i in 0..f.rank {
            for j in 0..f.rank {
                let g = self.gram[off + i][off + j];
                if !g.is_zero() {
                    s += x[i] * g * y[j];
                }
            }
        }
        s
    }

    pub fn factor_dist2(&self, f: &Factor, x: &[Q], y: &[Q]) -> Q {
        let diff: Vec<Q> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.factor_inner(f, &diff, &diff)
    }

    /// Squared distance between the base point and `δ`.
    pub fn delta_dist2(&self) -> Q {
        self.norm2(&self.delta_point())
    }

    pub fn apply_weyl(&self, w: &WeylElement, x: &[Q]) -> Point {
        let mut out = vec![Q::zero(); self.rank];
        for (f, &k) in self.factors.iter().zip(&w.0) {
            let local = apply_int(&f.weyl[k], &x[f.offset..f.offset + f.rank]);
            out[f.offset..f.offset + f.rank].clone_from_slice(&local);
        }
        out
    }

    /// Global reflection in the hyperplane of the given root.
    pub fn reflect(&self, root: &Root, x: &[Q]) -> Point {
        let v = self.root_value(root, x);
        let c = self.coroot_point(root);
        x.iter().zip(c).map(|(a, b)| a - v * b).collect()
    }

    /// Whether `x` lies in the closed chamber `w·C⁺`.
    pub fn in_closed_chamber(&self, w: &WeylElement, x: &[Q]) -> bool {
        let inv = self.inverse(w);
        let y = self.apply_weyl(&inv, x);
        y.iter().all(|v| *v >= Q::zero())
    }

    pub fn inverse(&self, w: &WeylElement) -> WeylElement {
        let parts = self
            .factors
            .iter()
            .zip(&w.0)
            .map(|(f, &k)| {
                let m = &f.weyl[k];
                f.weyl
                    .iter()
                    .position(|n| int_mul(m, n) == identity(f.rank))
                    .expect("Weyl group closed under inverses")
            })
            .collect();
        WeylElement(parts)
    }

    /// Lowest-index Weyl element whose closed chamber contains `x`.
    pub fn chamber_of(&self, x: &[Q]) -> WeylElement {
        self.weyl_elements()
            .into_iter()
            .find(|w| self.in_closed_chamber(w, x))
            .expect("every point lies in some closed chamber")
    }

    pub fn describe(&self) -> String {
        self.factors.iter().map(Factor::name).collect::<Vec<_>>().join("x")
    }
}

fn cartan_matrix(series: char, rank: usize) -> Result<IntMatrix> {
    let mut a = vec![vec![0i64; rank]; rank];
    for i in 0..rank {
        a[i][i] = 2;
    }
    match (series, rank) {
        ('A', 1..=4) => {
            for i in 0..rank - 1 {
                a[i][i + 1] = -1;
                a[i + 1][i] = -1;
            }
        }
        ('B', 2..=4) => {
            for i in 0..rank - 1 {
                a[i][i + 1] = -1;
                a[i + 1][i] = -1;
            }
            // α_{n-1} long, α_n short.
            a[rank - 2][rank - 1] = -2;
        }
        ('G', 2) => {
            // α_1 short, α_2 long.
            a[0][1] = -1;
            a[1][0] = -3;
        }
        _ => return Err(Error::UnsupportedSeries(format!("{series}{rank}"))),
    }
    Ok(a)
}

fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

fn int_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn apply_int(m: &IntMatrix, x: &[Q]) -> Point {
    m.iter()
        .map(|row| row.iter().zip(x).fold(Q::zero(), |acc, (&c, v)| acc + q(c as i128) * v))
        .collect()
}

/// Simple reflection `s_j` on factor-local point coordinates:
/// `x ↦ x − α_j(x) α_j∨`, where `α_k(α_j∨) = cartan[k][j]`.
fn simple_reflection_matrix(cartan: &IntMatrix, j: usize) -> IntMatrix {
    let n = cartan.len();
    let mut m = identity(n);
    for k in 0..n {
        m[k][j] -= cartan[k][j];
    }
    m
}

type RootPairs = Vec<(Vec<i64>, Vec<i64>)>;

/// Closes the simple roots (with their coroots) under simple reflections
/// and the simple reflections under composition.
fn close_roots_and_weyl(cartan: &IntMatrix) -> (RootPairs, Vec<IntMatrix>) {
    let n = cartan.len();
    let reflect_root = |coeffs: &[i64], j: usize| -> Vec<i64> {
        // s_j(α) = α − ⟨α, α_j∨⟩ α_j
        let pairing: i64 = coeffs.iter().enumerate().map(|(i, &c)| c * cartan[i][j]).sum();
        let mut out = coeffs.to_vec();
        out[j] -= pairing;
        out
    };
    let reflect_coroot = |co: &[i64], j: usize| -> Vec<i64> {
        // s_j(β∨) = β∨ − α_j(β∨) α_j∨
        let v = co[j];
        (0..n).map(|k| co[k] - v * cartan[k][j]).collect()
    };
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut roots: BTreeMap<Vec<i64>, Vec<i64>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for j in 0..n {
        let mut coeffs = vec![0; n];
        coeffs[j] = 1;
        let coroot: Vec<i64> = (0..n).map(|k| cartan[k][j]).collect();
        queue.push_back((coeffs, coroot));
    }
    while let Some((c, co)) = queue.pop_front() {
        if !seen.insert(c.clone()) {
            continue;
        }
        for j in 0..n {
            queue.push_back((reflect_root(&c, j), reflect_coroot(&co, j)));
        }
        roots.insert(c, co);
    }

    let gens: Vec<IntMatrix> = (0..n).map(|j| simple_reflection_matrix(cartan, j)).collect();
    let mut elements = vec![identity(n)];
    let mut known: BTreeSet<IntMatrix> = BTreeSet::new();
    known.insert(identity(n));
    let mut frontier = 0;
    while frontier < elements.len() {
        let e = elements[frontier].clone();
        for g in &gens {
            let p = int_mul(g, &e);
            if known.insert(p.clone()) {
                elements.push(p);
            }
        }
        frontier += 1;
    }
    // Deterministic order: identity first, then by matrix entries.
    let id = identity(n);
    let mut rest: Vec<IntMatrix> = elements.into_iter().filter(|m| *m != id).collect();
    rest.sort();
    let mut weyl = vec![id];
    weyl.extend(rest);
    (roots.into_iter().collect(), weyl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qf;

    fn orbit_size(rd: &RootDatum) -> usize {
        rd.weyl_elements().len()
    }

    #[test]
    fn weyl_orders() {
        for (s, n, order) in [
            ("A1", 2, 2),
            ("A1^2", 4, 4),
            ("A2", 6, 6),
            ("B2", 8, 8),
            ("G2", 12, 12),
            ("A2xA1", 8, 12),
            ("A1^3", 6, 8),
            ("A3", 12, 24),
        ] {
            let rd = RootDatum::parse(s).unwrap();
            assert_eq!(rd.roots.len(), n, "{s}");
            assert_eq!(rd.weyl_order(), order, "{s}");
            assert_eq!(orbit_size(&rd), order);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(RootDatum::parse("F4").unwrap_err(), Error::UnsupportedSeries("F4".into()));
        assert_eq!(RootDatum::parse("A0").unwrap_err(), Error::RankZero);
        assert_eq!(RootDatum::parse("A2xA2xA1").unwrap_err(), Error::RankTooLarge(5));
        assert!(matches!(RootDatum::parse("Q"), Err(Error::BadSystemSpec(_))));
    }

    #[test]
    fn roots_symmetric_and_crystallographic() {
        for s in ["A2", "B2", "G2", "A2xA1", "A1^3"] {
            let rd = RootDatum::parse(s).unwrap();
            for r in &rd.roots {
                let neg: Vec<i64> = r.coeffs.iter().map(|c| -c).collect();
                assert!(rd.roots.iter().any(|o| o.factor == r.factor && o.coeffs == neg));
                for o in rd.roots.iter().filter(|o| o.factor == r.factor) {
                    let v = RootDatum::root_value_local(o, &r.coroot.iter().map(|&c| q(c as i128)).collect::<Vec<_>>());
                    assert!(v.is_integer());
                }
                // ⟨α, α∨⟩ = 2
                let co: Vec<Q> = r.coroot.iter().map(|&c| q(c as i128)).collect();
                assert_eq!(RootDatum::root_value_local(r, &co), q(2));
            }
        }
    }

    #[test]
    fn highest_root_heights() {
        assert_eq!(RootDatum::parse("A2").unwrap().highest_root_height(), 2);
        assert_eq!(RootDatum::parse("B2").unwrap().highest_root_height(), 3);
        assert_eq!(RootDatum::parse("G2").unwrap().highest_root_height(), 5);
    }

    #[test]
    fn delta_evaluates_to_height() {
        for s in ["A1", "A1^3", "A2", "B2", "G2", "A2xA1"] {
            let rd = RootDatum::parse(s).unwrap();
            let d = rd.delta_point();
            for (_, r) in rd.positive_roots() {
                assert_eq!(rd.root_value(r, &d), q(r.height() as i128), "{s}");
            }
        }
        let a1 = RootDatum::parse("A1").unwrap();
        assert_eq!(a1.delta_point(), vec![q(1)]);
    }

    #[test]
    fn alcove_diameter_is_one() {
        for s in ["A1", "A2", "B2", "G2", "A1^2", "A2xA1"] {
            let rd = RootDatum::parse(s).unwrap();
            let mut diam2 = Q::zero();
            for f in &rd.factors {
                let verts = f.alcove_vertices();
                let mut best = Q::zero();
                for a in &verts {
                    for b in &verts {
                        best = best.max(rd.factor_dist2(f, a, b));
                    }
                }
                diam2 += best;
            }
            assert_eq!(diam2, q(1), "{s}");
        }
        let a1 = RootDatum::parse("A1").unwrap();
        assert_eq!(a1.dist2(&[q(0)], &[q(1)]), q(1));
        assert_eq!(a1.dist2(&[q(3)], &[q(3)]), Q::zero());
    }

    #[test]
    fn weyl_preserves_metric_and_roots() {
        for s in ["A2", "B2", "G2", "A2xA1"] {
            let rd = RootDatum::parse(s).unwrap();
            let x = vec![qf(1, 3), qf(-2, 5), qf(7, 2)][..rd.rank].to_vec();
            let y = vec![qf(2, 1), qf(1, 7), qf(-1, 2)][..rd.rank].to_vec();
            for w in rd.weyl_elements() {
                let (wx, wy) = (rd.apply_weyl(&w, &x), rd.apply_weyl(&w, &y));
                assert_eq!(rd.dist2(&wx, &wy), rd.dist2(&x, &y));
                // w permutes roots: the multiset of root values at wx equals that at x.
                let mut a: Vec<Q> = rd.roots.iter().map(|r| rd.root_value(r, &x)).collect();
                let mut b: Vec<Q> = rd.roots.iter().map(|r| rd.root_value(r, &wx)).collect();
                a.sort();
                b.sort();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn reflection_fixes_wall_and_negates_coroot() {
        let rd = RootDatum::parse("B2").unwrap();
        for (_, r) in rd.positive_roots() {
            let co = rd.coroot_point(r);
            let neg: Vec<Q> = co.iter().map(|v| -v).collect();
            assert_eq!(rd.reflect(r, &co), neg);
            // a point on the wall
            let p = rd.reflect(r, &vec![qf(1, 2), qf(1, 3)]);
            let mid: Vec<Q> = p.iter().zip([qf(1, 2), qf(1, 3)]).map(|(a, b)| (a + b) / q(2)).collect();
            assert_eq!(rd.root_value(r, &mid), Q::zero());
            assert_eq!(rd.reflect(r, &mid), mid);
        }
    }
}
