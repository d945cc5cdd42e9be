use std::sync::OnceLock;

use num_traits::{Signed, Zero};
use polychain_core::coeff::{chain_complex, homology, tree_filtration_model, CoefficientSystem};
use polychain_core::contraction::build_contraction;
use polychain_core::interval::big;
use polychain_core::linalg::{q, Q};
use polychain_core::norms::{q_norm, NormedChain, WeightedIndex};
use polychain_core::torus::{d0, d1, solve_window, TorusChain};
use polychain_core::*;
use proptest::prelude::*;

struct Fixture {
    complex: Complex,
    gamma: Contraction,
}

fn a2() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let complex = Complex::apartment(&RootDatum::parse("A2").unwrap(), q(3), DEFAULT_CELL_BUDGET).unwrap();
        let gamma = build_contraction(&complex).unwrap();
        Fixture { complex, gamma }
    })
}

fn tree() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let complex = Complex::tree(2, 3, DEFAULT_CELL_BUDGET).unwrap();
        let gamma = build_contraction(&complex).unwrap();
        Fixture { complex, gamma }
    })
}

fn coef() -> impl Strategy<Value = Q> {
    (-20i128..=20, 1i128..=6).prop_map(|(n, d)| Q::new(n, d))
}

/// Chain of degree `d` from raw (cell seed, coefficient) pairs.
fn chain_of(c: &Complex, d: usize, raw: &[(usize, Q)]) -> Chain {
    let cells = c.cells_of_dim(d);
    let mut x = Chain::zero(d as i32);
    for &(s, k) in raw {
        x.add(cells.start + s % cells.len(), k);
    }
    x
}

fn raw_chain() -> impl Strategy<Value = Vec<(usize, Q)>> {
    prop::collection::vec((any::<usize>(), coef()), 0..8)
}

fn normed(c: &Complex, d: usize, wi: &WeightedIndex, raw: &[(usize, usize, Q)]) -> NormedChain {
    let cells = c.cells_of_dim(d);
    let mut x = NormedChain::zero(d as i32);
    for &(s, i, k) in raw {
        x.add(cells.start + s % cells.len(), i % wi.len(), k);
    }
    x
}

fn raw_normed() -> impl Strategy<Value = Vec<(usize, usize, Q)>> {
    prop::collection::vec((any::<usize>(), any::<usize>(), coef()), 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_squares_to_zero(d in 1usize..=2, raw in raw_chain()) {
        let c = &a2().complex;
        let x = chain_of(c, d, &raw);
        let bb = c.boundary_chain(&c.boundary_chain(&x).unwrap()).unwrap();
        prop_assert!(bb.is_zero());
    }

    #[test]
    fn tree_boundary_to_scalar(raw in raw_chain()) {
        let c = &tree().complex;
        let x = chain_of(c, 1, &raw);
        let bb = c.boundary_chain(&c.boundary_chain(&x).unwrap()).unwrap();
        prop_assert!(bb.is_zero());
    }

    #[test]
    fn hull_is_idempotent_and_monotone(a in prop::collection::vec(any::<usize>(), 1..3), b in prop::collection::vec(any::<usize>(), 0..2)) {
        let c = &a2().complex;
        let near: Vec<usize> = (0..c.len()).filter(|&i| c.dist2(i) <= q(2)).collect();
        let sa: Vec<usize> = a.iter().map(|i| near[i % near.len()]).collect();
        let mut sb = sa.clone();
        sb.extend(b.iter().map(|i| near[i % near.len()]));
        let ha = c.hull_of_cells(&sa).unwrap();
        prop_assert_eq!(c.hull_of_cells(&ha).unwrap(), ha.clone());
        let hb = c.hull_of_cells(&sb).unwrap();
        prop_assert!(ha.iter().all(|x| hb.contains(x)));
        prop_assert!(c.is_convex(&ha).unwrap());
    }

    #[test]
    fn contraction_is_linear(d in 0usize..=1, x in raw_chain(), y in raw_chain(), a in coef(), b in coef()) {
        let f = a2();
        let cx = chain_of(&f.complex, d, &x);
        let cy = chain_of(&f.complex, d, &y);
        let mut sum = cx.scaled(a);
        sum.add_chain(&cy, b);
        let mut rhs = f.gamma.apply(&cx).unwrap().scaled(a);
        rhs.add_chain(&f.gamma.apply(&cy).unwrap(), b);
        prop_assert_eq!(f.gamma.apply(&sum).unwrap(), rhs);
    }

    #[test]
    fn homotopy_identity_on_random_chains(d in 0usize..=2, raw in raw_chain()) {
        let f = a2();
        let x = chain_of(&f.complex, d, &raw);
        prop_assert_eq!(f.gamma.homotopy(&f.complex, &x).unwrap(), x);
    }

    #[test]
    fn norm_is_homogeneous(raw in raw_normed(), k in coef(), m in 0u32..=2) {
        let c = &a2().complex;
        let wi = WeightedIndex::window(3);
        let x = normed(c, 1, &wi, &raw);
        let lhs = q_norm(c, &wi, &x.scaled(k), m);
        let base = q_norm(c, &wi, &x, m);
        let kk = big(&k.abs());
        // the exact value |k|·q(x) lies in both enclosures
        prop_assert!(lhs.lo <= &base.hi * &kk && &base.lo * &kk <= lhs.hi);
    }

    #[test]
    fn norm_triangle_inequality(x in raw_normed(), y in raw_normed(), m in 0u32..=2) {
        let c = &a2().complex;
        let wi = WeightedIndex::window(3);
        let cx = normed(c, 2, &wi, &x);
        let cy = normed(c, 2, &wi, &y);
        let mut s = cx.clone();
        s.add_chain(&cy);
        let lhs = q_norm(c, &wi, &s, m);
        let rhs = q_norm(c, &wi, &cx, m) + q_norm(c, &wi, &cy, m);
        prop_assert!(lhs.lo <= rhs.hi);
    }

    #[test]
    fn norms_increase_with_m(raw in raw_normed()) {
        let c = &a2().complex;
        let wi = WeightedIndex::window(3);
        let x = normed(c, 0, &wi, &raw);
        prop_assert!(q_norm(c, &wi, &x, 0).lo <= q_norm(c, &wi, &x, 1).hi);
    }

    #[test]
    fn convolution_kills_boundaries(terms in prop::collection::vec((-4i64..=4, -4i64..=4, coef()), 0..10)) {
        let mut y = TorusChain::zero();
        for (a, b, v) in terms {
            y.add(a, b, v);
        }
        let x = d1(&y, 6).unwrap();
        prop_assert!(d0(&x).is_empty());
    }

    #[test]
    fn finitely_supported_cycles_are_boundaries(terms in prop::collection::vec((-4i64..=4, -4i64..=4, coef()), 1..10)) {
        let mut y = TorusChain::zero();
        for (a, b, v) in terms {
            y.add(a, b, v);
        }
        let x = d1(&y, 6).unwrap();
        let sol = solve_window(&x, 6).unwrap().expect("cycle must be a boundary");
        prop_assert!(sol.kernel_trivial);
        prop_assert_eq!(d1(&sol.solution, 6).unwrap(), x.clone());
        // trivial kernel: the preimage is the original chain
        prop_assert_eq!(sol.solution.clone(), y);
        prop_assert!(sol.solution.support_radius() <= x.support_radius().max(0) + 1);
    }

    #[test]
    fn non_cycles_have_no_preimage(a in -3i64..=3, b in -3i64..=3, v in coef()) {
        prop_assume!(!v.is_zero());
        let mut x = TorusChain::zero();
        x.add(a, b, v);
        prop_assert!(solve_window(&x, 5).unwrap().is_none());
    }

    #[test]
    fn hulls_with_trivial_coefficients_are_acyclic(a in prop::collection::vec(any::<usize>(), 1..3)) {
        let c = &a2().complex;
        let near: Vec<usize> = (0..c.len()).filter(|&i| c.dist2(i) <= q(3)).collect();
        let cells: Vec<usize> = a.iter().map(|i| near[i % near.len()]).collect();
        let h = c.hull_of_cells(&cells).unwrap();
        let rep = homology(c, &h, &CoefficientSystem::trivial(&h)).unwrap();
        prop_assert_eq!(rep.asserted_ok(), Some(true));
        prop_assert_eq!(rep.betti[0], 1);
    }

    #[test]
    fn boundary_squares_to_zero_with_coefficients(branching in 1usize..=2, depth in 1usize..=3) {
        let (c, m) = tree_filtration_model(branching, depth, DEFAULT_CELL_BUDGET).unwrap();
        let sys = m.coefficient_system(&c).unwrap();
        let all: Vec<usize> = (0..c.len()).collect();
        let cm = chain_complex(&c, &all, &sys).unwrap();
        prop_assert!(cm.augmentation.mul(&cm.boundary[1]).is_zero());
        let rep = homology(&c, &all, &sys).unwrap();
        prop_assert_eq!(rep.asserted_ok(), Some(true));
    }
}
