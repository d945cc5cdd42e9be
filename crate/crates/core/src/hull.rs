//! Hulls of a cell together with the base vertex, and the diameter bound
//! `diam hull(σ ∪ {x₀}) ≤ d(x₀,σ) + d(x₀,δ)`.
//!
//! On an apartment the hull is cut out by root inequalities
//! `lo_α ≤ α(x) ≤ hi_α`, where the bounds are the integer walls just
//! enclosing `σ ∪ {x₀}`. It is a product of factor regions, which on an
//! `A1` factor is the smallest integer segment; on `A1^d` this is the
//! smallest integer box. On a tree the hull is the geodesic.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::complex::{Complex, ComplexKind};
use crate::error::Result;
use crate::linalg::{q, to_f64, Q};
use crate::rootsys::WeylElement;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HullRegion {
    /// (root index, lower bound, upper bound) for each positive root.
    pub inequalities: Vec<(usize, Q, Q)>,
    /// Cells of the complex inside the region, in cell order.
    pub cells: Vec<usize>,
    /// Chamber containing the cell's barycenter (lowest index on walls).
    pub chamber: Option<WeylElement>,
}

pub fn hull(complex: &Complex, sigma: usize) -> Result<HullRegion> {
    let cells = complex.hull_with_base(sigma)?;
    let chamber = complex.datum().map(|d| d.chamber_of(&complex.barycenter(sigma)));
    Ok(HullRegion { inequalities: complex.hull_inequalities(sigma), cells, chamber })
}

/// Squared diameter of a set of cells containing the base vertex, taken
/// over vertices. Product sets have diameter² equal to the sum over
/// factors.
pub fn diameter2(complex: &Complex, cells: &[usize]) -> Q {
    let verts: Vec<usize> = cells.iter().copied().filter(|&c| complex.dim(c) == 0).collect();
    match complex.kind() {
        ComplexKind::Tree => {
            // Geodesic sets only: the diameter is the number of edges.
            let n = verts.len() as i128 - 1;
            q(n * n)
        }
        ComplexKind::Apartment => {
            let datum = complex.datum().unwrap();
            let mut total = Q::zero();
            for (f, table) in complex.factors().iter().enumerate() {
                let mut ids: Vec<u32> = verts
                    .iter()
                    .map(|&v| table.simplices[complex.cell(v).0[f] as usize][0])
                    .collect();
                ids.sort_unstable();
                ids.dedup();
                let factor = &datum.factors[f];
                let mut best = Q::zero();
                for (i, &a) in ids.iter().enumerate() {
                    for &b in &ids[i + 1..] {
                        let d = datum.factor_dist2(factor, &table.vertices[a as usize], &table.vertices[b as usize]);
                        if d > best {
                            best = d;
                        }
                    }
                }
                total += best;
            }
            total
        }
    }
}

/// Whether `√d2 ≤ √a2 + √b2`, decided exactly.
pub fn sqrt_sum_bound(d2: Q, a2: Q, b2: Q) -> bool {
    let t = d2 - a2 - b2;
    t <= Q::zero() || t * t <= q(4) * a2 * b2
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiameterReport {
    pub cells_checked: usize,
    /// Squared `d(x₀,δ)`; for trees the added term is one edge.
    pub delta_dist2: Q,
    pub max_hull_diameter2: Q,
    pub min_slack: f64,
    pub max_slack: f64,
    pub tightest_cell: usize,
    pub violations: Vec<usize>,
}

impl DiameterReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn diameter_bound_report(complex: &Complex) -> Result<DiameterReport> {
    let delta2 = match complex.datum() {
        Some(d) => d.delta_dist2(),
        None => q(1),
    };
    let mut report = DiameterReport {
        cells_checked: 0,
        delta_dist2: delta2,
        max_hull_diameter2: Q::zero(),
        min_slack: f64::INFINITY,
        max_slack: f64::NEG_INFINITY,
        tightest_cell: complex.base(),
        violations: Vec::new(),
    };
    let sqrt = |x: Q| num_traits::Float::sqrt(to_f64(&x));
    let mut cache: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    for sigma in 0..complex.len() {
        let h = complex.hull_with_base(sigma)?;
        let d2 = *cache.entry(h.clone()).or_insert_with(|| diameter2(complex, &h));
        let a2 = complex.dist2(sigma);
        report.cells_checked += 1;
        if d2 > report.max_hull_diameter2 {
            report.max_hull_diameter2 = d2;
        }
        if !sqrt_sum_bound(d2, a2, delta2) {
            report.violations.push(sigma);
        }
        let slack = sqrt(a2) + sqrt(delta2) - sqrt(d2);
        if slack < report.min_slack {
            report.min_slack = slack;
            report.tightest_cell = sigma;
        }
        if slack > report.max_slack {
            report.max_slack = slack;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::RootDatum;
    use crate::DEFAULT_CELL_BUDGET;
    use alloc::vec;

    fn apt(s: &str, r: i128) -> Complex {
        Complex::apartment(&RootDatum::parse(s).unwrap(), q(r), DEFAULT_CELL_BUDGET).unwrap()
    }

    fn vertex_at(c: &Complex, p: &[i128]) -> usize {
        c.cells_of_dim(0).find(|&v| c.vertex_point(v) == p.iter().map(|&x| q(x)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn base_hull_is_base() {
        let c = apt("A2", 2);
        assert_eq!(hull(&c, c.base()).unwrap().cells, vec![c.base()]);
    }

    #[test]
    fn a1_squared_box() {
        let c = apt("A1^2", 4);
        let v = vertex_at(&c, &[2, 1]);
        let h = hull(&c, v).unwrap();
        // 3x2 vertices, 3 + 4 edges, 2 squares
        assert_eq!(h.cells.len(), 6 + 7 + 2);
        for &cell in &h.cells {
            for u in c.vertices(cell) {
                let p = c.vertex_point(u);
                assert!(p[0] >= q(0) && p[0] <= q(2) && p[1] >= q(0) && p[1] <= q(1));
            }
        }
        let simple = c.datum().unwrap().simple_roots();
        assert!(h.inequalities.contains(&(simple[0], q(0), q(2))));
        assert!(h.inequalities.contains(&(simple[1], q(0), q(1))));
    }

    #[test]
    fn tree_geodesic() {
        let t = Complex::tree(2, 4, 10_000).unwrap();
        let v = t.cells_of_dim(0).find(|&v| t.tree_data().unwrap().level[v] == 3).unwrap();
        let h = hull(&t, v).unwrap();
        assert_eq!(h.cells.iter().filter(|&&c| t.dim(c) == 1).count(), 3);
        assert_eq!(h.cells.iter().filter(|&&c| t.dim(c) == 0).count(), 4);
    }

    #[test]
    fn a1_segment_diameter() {
        let c = apt("A1", 3);
        let v = vertex_at(&c, &[-3]);
        let h = hull(&c, v).unwrap();
        assert_eq!(diameter2(&c, &h.cells), c.dist2(v));
    }

    #[test]
    fn exact_sqrt_comparison() {
        // 3 ≤ 1 + 2, 3.01 > 1 + 2
        assert!(sqrt_sum_bound(q(9), q(1), q(4)));
        assert!(!sqrt_sum_bound(Q::new(90601, 10000), q(1), q(4)));
        // √2 ≤ 1 + 1
        assert!(sqrt_sum_bound(q(2), q(1), q(1)));
    }

    #[test]
    fn diameter_bound_holds() {
        for c in [apt("A2", 4), apt("B2", 3), apt("G2", 3), apt("A1^2", 3)] {
            let r = diameter_bound_report(&c).unwrap();
            assert!(r.passed(), "{:?}", r.violations);
            assert_eq!(r.cells_checked, c.len());
        }
        let t = Complex::tree(2, 3, 10_000).unwrap();
        assert!(diameter_bound_report(&t).unwrap().passed());
    }

    #[test]
    fn hull_invariants() {
        let c = apt("A2", 3);
        let weyl = c.symmetries();
        for s in 0..c.len() {
            let h = hull(&c, s).unwrap().cells;
            assert!(h.contains(&s) && h.contains(&c.base()));
            assert!(c.is_convex(&h).unwrap());
            assert_eq!(c.hull_of_cells(&h).unwrap(), h);
            for &(f, _) in c.faces(s) {
                let hf = hull(&c, f).unwrap().cells;
                assert!(hf.iter().all(|x| h.binary_search(x).is_ok()));
            }
            for act in &weyl {
                let mut img: Vec<usize> = h.iter().map(|&x| act[x].0).collect();
                img.sort_unstable();
                assert_eq!(img, hull(&c, act[s].0).unwrap().cells);
            }
        }
    }
}
