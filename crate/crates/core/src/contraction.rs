//! Synthesized contraction `γ` of the augmented chain complex of a ball.
//!
//! Cells are handled degree by degree. For each orbit representative `σ`
//! (barycenter in the closed dominant chamber) the defect
//! `z = σ − γ(∂σ)` is a cycle supported on the hull of `σ ∪ {x₀}`; since
//! the hull is acyclic, `∂y = z` is solvable there. The solution with free
//! variables set to zero is averaged over the stabilizer of `σ` and moved
//! to the rest of the orbit with orientation signs.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::complex::{Chain, Complex, ComplexKind};
use crate::error::{Error, Result};
use crate::linalg::{q, sparse_solve, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contraction {
    base: usize,
    /// `γ(σ)` for every cell, a chain of degree `dim σ + 1`.
    table: Vec<Chain>,
    m_gamma: Q,
    orbit_representatives: usize,
}

pub fn build_contraction(complex: &Complex) -> Result<Contraction> {
    let n = complex.len();
    let syms: Vec<Vec<(usize, i32)>> = match complex.kind() {
        ComplexKind::Apartment => complex.symmetries(),
        ComplexKind::Tree => vec![(0..n).map(|i| (i, 1)).collect()],
    };
    let datum = complex.datum();
    let identity = datum.map(|d| d.weyl_elements().swap_remove(0));
    let dominant = |c: usize| match (datum, &identity) {
        (Some(d), Some(e)) => d.in_closed_chamber(e, &complex.barycenter(c)),
        _ => true,
    };

    let mut table: Vec<Option<Chain>> = vec![None; n];
    let mut reps = 0usize;
    for d in 0..=complex.top_dim() {
        let mut order: Vec<usize> = complex.cells_of_dim(d).collect();
        order.sort_by(|&a, &b| (complex.dist2(a), a).cmp(&(complex.dist2(b), b)));
        for c in order {
            if table[c].is_some() {
                continue;
            }
            let orbit: BTreeSet<usize> = syms.iter().map(|a| a[c].0).collect();
            let rep = orbit.iter().copied().find(|&o| dominant(o)).ok_or_else(|| {
                Error::Internal(format!("orbit of cell {c} has no dominant member"))
            })?;
            reps += 1;
            let y = solve_representative(complex, &table, rep)?;
            let stab: Vec<&Vec<(usize, i32)>> = syms.iter().filter(|a| a[rep].0 == rep).collect();
            let mut avg = Chain::zero(y.degree);
            for a in &stab {
                avg.add_chain(&y.permuted(a), q(a[rep].1 as i128));
            }
            let avg = avg.scaled(Q::new(1, stab.len() as i128));
            if stab.len() > 1 {
                let z = defect(complex, &table, rep)?;
                let b = boundary_or_zero(complex, &avg)?;
                if b != z {
                    return Err(Error::Internal(format!("averaging broke the solution at cell {rep}")));
                }
            }
            for a in &syms {
                let (img, sign) = a[rep];
                if table[img].is_none() {
                    table[img] = Some(avg.permuted(a).scaled(q(sign as i128)));
                }
            }
        }
    }
    let table: Vec<Chain> = table.into_iter().map(|c| c.expect("every orbit is visited")).collect();
    Contraction::from_table(complex, table, reps)
}

fn defect(complex: &Complex, table: &[Option<Chain>], sigma: usize) -> Result<Chain> {
    let d = complex.dim(sigma) as i32;
    let mut z = Chain::unit(d, sigma);
    if d == 0 {
        z.add(complex.base(), -Q::one());
    } else {
        for &(f, s) in complex.faces(sigma) {
            let g = table[f].as_ref().ok_or_else(|| Error::Internal(String::from("face processed out of order")))?;
            z.add_chain(g, -q(s as i128));
        }
    }
    Ok(z)
}

fn boundary_or_zero(complex: &Complex, c: &Chain) -> Result<Chain> {
    if c.is_zero() {
        return Ok(Chain::zero(c.degree - 1));
    }
    complex.boundary_chain(c)
}

fn solve_representative(complex: &Complex, table: &[Option<Chain>], sigma: usize) -> Result<Chain> {
    let d = complex.dim(sigma);
    let z = defect(complex, table, sigma)?;
    if z.is_zero() {
        return Ok(Chain::zero(d as i32 + 1));
    }
    let hull = complex.hull_with_base(sigma)?;
    let rows: Vec<usize> = hull.iter().copied().filter(|&c| complex.dim(c) == d).collect();
    let cols: Vec<usize> = hull.iter().copied().filter(|&c| complex.dim(c) == d + 1).collect();
    let mut system: Vec<Vec<(usize, Q)>> = vec![Vec::new(); rows.len()];
    for (j, &col) in cols.iter().enumerate() {
        for &(f, s) in complex.faces(col) {
            let i = rows
                .binary_search(&f)
                .map_err(|_| Error::Internal(String::from("hull is not face-closed")))?;
            system[i].push((j, q(s as i128)));
        }
    }
    let mut rhs = vec![Q::zero(); rows.len()];
    for (c, v) in z.terms() {
        let i = rows
            .binary_search(&c)
            .map_err(|_| Error::Internal(format!("defect of cell {sigma} leaves its hull")))?;
        rhs[i] = v;
    }
    let y = sparse_solve(cols.len(), system, rhs)
        .ok_or_else(|| Error::Internal(format!("no filling for cell {sigma} inside its hull")))?;
    let mut out = Chain::zero(d as i32 + 1);
    for (j, v) in y.into_iter().enumerate() {
        out.add(cols[j], v);
    }
    Ok(out)
}

impl Contraction {
    /// Assembles a contraction from per-cell images, checking degrees.
    pub fn from_table(complex: &Complex, table: Vec<Chain>, orbit_representatives: usize) -> Result<Self> {
        if table.len() != complex.len() {
            return Err(Error::Inconsistent(format!(
                "table has {} entries for {} cells",
                table.len(),
                complex.len()
            )));
        }
        let mut m_gamma = Q::one();
        for (i, c) in table.iter().enumerate() {
            let expected = complex.dim(i) as i32 + 1;
            if c.degree != expected {
                return Err(Error::DegreeMismatch { expected, found: c.degree });
            }
            for (cell, v) in c.terms() {
                if cell >= complex.len() || complex.dim(cell) as i32 != expected {
                    return Err(Error::CellNotInComplex);
                }
                if v.abs() > m_gamma {
                    m_gamma = v.abs();
                }
            }
        }
        Ok(Contraction { base: complex.base(), table, m_gamma, orbit_representatives })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// `γ(σ)`.
    pub fn image(&self, sigma: usize) -> Option<&Chain> {
        self.table.get(sigma)
    }

    /// Largest absolute coefficient, including `γ₋₁(1) = x₀`.
    pub fn m_gamma(&self) -> Q {
        self.m_gamma
    }

    pub fn orbit_representatives(&self) -> usize {
        self.orbit_representatives
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Linear extension of the table; degree `-1` chains map to multiples
    /// of the base vertex.
    pub fn apply(&self, c: &Chain) -> Result<Chain> {
        if c.degree < 0 {
            let mut out = Chain::zero(0);
            out.add(self.base, c.get(0));
            return Ok(out);
        }
        let mut out = Chain::zero(c.degree + 1);
        for (cell, v) in c.terms() {
            let g = self.table.get(cell).ok_or(Error::CellNotInComplex)?;
            if g.degree != c.degree + 1 {
                return Err(Error::DegreeMismatch { expected: g.degree - 1, found: c.degree });
            }
            out.add_chain(g, v);
        }
        Ok(out)
    }

    /// `∂γ(c) + γ(∂c)`.
    pub fn homotopy(&self, complex: &Complex, c: &Chain) -> Result<Chain> {
        let g = self.apply(c)?;
        let mut lhs = boundary_or_zero(complex, &g)?;
        if c.degree >= 0 {
            let b = complex.boundary_chain(c)?;
            lhs.add_chain(&self.apply(&b)?, Q::one());
        }
        Ok(lhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyReport {
    pub cells_checked: usize,
    /// Cells where `∂γ + γ∂ ≠ id`; `None` stands for the augmentation unit.
    pub homotopy_failures: Vec<Option<usize>>,
    /// (symmetry index, cell) pairs with `γ(gσ) ≠ g·γ(σ)`.
    pub equivariance_failures: Vec<(usize, usize)>,
    pub symmetries_checked: usize,
    /// Cells whose image leaves the hull of the cell and the base vertex.
    pub support_failures: Vec<usize>,
    /// Cells whose image meets some orbit more than once.
    pub orbit_failures: Vec<usize>,
    pub m_gamma: Q,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.homotopy_failures.is_empty()
            && self.equivariance_failures.is_empty()
            && self.support_failures.is_empty()
            && self.orbit_failures.is_empty()
    }
}

/// Exhaustive check of the homotopy identity, equivariance, hull support
/// and the one-cell-per-orbit property.
pub fn verify_properties(complex: &Complex, gamma: &Contraction) -> Result<PropertyReport> {
    let n = complex.len();
    let mut report = PropertyReport {
        cells_checked: n,
        homotopy_failures: Vec::new(),
        equivariance_failures: Vec::new(),
        symmetries_checked: 0,
        support_failures: Vec::new(),
        orbit_failures: Vec::new(),
        m_gamma: gamma.m_gamma(),
    };
    let unit = Chain::scalar(Q::one());
    if gamma.homotopy(complex, &unit)? != unit {
        report.homotopy_failures.push(None);
    }
    for s in 0..n {
        let c = complex.cell_chain(s);
        if gamma.homotopy(complex, &c)? != c {
            report.homotopy_failures.push(Some(s));
        }
    }

    let syms = complex.symmetries();
    report.symmetries_checked = syms.len();
    for (k, act) in syms.iter().enumerate() {
        for s in 0..n {
            let (img, sign) = act[s];
            let lhs = gamma.table[img].scaled(q(sign as i128));
            if lhs != gamma.table[s].permuted(act) {
                report.equivariance_failures.push((k, s));
            }
        }
    }

    let datum = complex.datum();
    let weyl = datum.map(|d| d.weyl_elements()).unwrap_or_default();
    for s in 0..n {
        let g = &gamma.table[s];
        let hull = complex.hull_with_base(s)?;
        if g.support().any(|c| hull.binary_search(&c).is_err()) {
            report.support_failures.push(s);
        }
        let ok = match (complex.kind(), datum) {
            (ComplexKind::Apartment, Some(d)) => {
                let bary: Vec<_> = g.support().map(|c| complex.barycenter(c)).collect();
                weyl.iter().any(|w| bary.iter().all(|b| d.in_closed_chamber(w, b)))
            }
            _ => {
                let tree = complex.tree_data().unwrap();
                let mut depths = BTreeSet::new();
                g.support().all(|c| {
                    let far = complex
                        .vertices(c)
                        .iter()
                        .map(|&v| tree.level[complex.factors()[0].simplices[complex.cell(v).0[0] as usize][0] as usize])
                        .max()
                        .unwrap();
                    depths.insert(far)
                })
            }
        };
        if !ok {
            report.orbit_failures.push(s);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::RootDatum;
    use crate::DEFAULT_CELL_BUDGET;

    fn apt(s: &str, r: i128) -> Complex {
        Complex::apartment(&RootDatum::parse(s).unwrap(), q(r), DEFAULT_CELL_BUDGET).unwrap()
    }

    #[test]
    fn tree_contraction_is_geodesic() {
        let t = Complex::tree(2, 3, 10_000).unwrap();
        let g = build_contraction(&t).unwrap();
        let tree = t.tree_data().unwrap();
        for v in t.cells_of_dim(0) {
            let path = g.image(v).unwrap();
            assert_eq!(path.len(), tree.level[v]);
            assert!(path.terms().all(|(_, c)| c == Q::one()));
            // ∂γ(v) = v − x₀
            let mut expect = Chain::unit(0, v);
            expect.add(t.base(), -Q::one());
            assert_eq!(t.boundary_chain(path).unwrap(), expect);
        }
        for e in t.cells_of_dim(1) {
            assert!(g.image(e).unwrap().is_zero());
        }
        assert!(verify_properties(&t, &g).unwrap().passed());
    }

    #[test]
    fn a1_contraction() {
        let c = apt("A1", 4);
        let g = build_contraction(&c).unwrap();
        assert_eq!(g.m_gamma(), Q::one());
        assert!(g.image(c.base()).unwrap().is_zero());
        let r = verify_properties(&c, &g).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.symmetries_checked, 2);
    }

    #[test]
    fn rank_two_contractions() {
        for (s, r) in [("A1^2", 3), ("A2", 3), ("B2", 3), ("G2", 3)] {
            let c = apt(s, r);
            let g = build_contraction(&c).unwrap();
            let rep = verify_properties(&c, &g).unwrap();
            assert!(rep.passed(), "{s}: {rep:?}");
        }
    }

    #[test]
    fn deterministic() {
        let c = apt("A2", 2);
        assert_eq!(build_contraction(&c).unwrap(), build_contraction(&c).unwrap());
    }

    #[test]
    fn linearity_and_degree_errors() {
        let c = apt("A1^2", 2);
        let g = build_contraction(&c).unwrap();
        let (a, b) = (c.cells_of_dim(1).start, c.cells_of_dim(1).start + 3);
        let mut x = Chain::zero(1);
        x.add(a, q(2));
        x.add(b, q(-3));
        let mut expect = g.image(a).unwrap().scaled(q(2));
        expect.add_chain(g.image(b).unwrap(), q(-3));
        assert_eq!(g.apply(&x).unwrap(), expect);
        let mut bad = Chain::zero(0);
        bad.add(a, Q::one());
        assert!(g.apply(&bad).is_err());
    }

    #[test]
    fn m_gamma_stable_for_a1_squared() {
        let ms: Vec<Q> = (2..=4).map(|r| build_contraction(&apt("A1^2", r)).unwrap().m_gamma()).collect();
        assert_eq!(ms[0], ms[1]);
        assert_eq!(ms[1], ms[2]);
    }
}
