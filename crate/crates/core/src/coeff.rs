//! Coefficient systems `σ ↦ e_σV` inside a fixed rational vector space
//! `V`, the chain complex `C_*(Σ; V)`, exact homology, and finite models:
//! a finite group acting on a complex and on `V`, with a subgroup `U_σ`
//! per cell whose invariants give the coefficient system.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::complex::{Complex, ComplexKind};
use crate::contraction::Contraction;
use crate::error::{Error, Result};
use crate::linalg::{coordinates, q, span_basis, Matrix, Q};
use crate::rootsys::RootDatum;

/// Subspace of `Q^n`, stored as a reduced row echelon basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vec<Q>>,
}

impl Subspace {
    pub fn full(n: usize) -> Self {
        Self::span(&Matrix::identity(n).rows_vec(), n)
    }

    pub fn zero(n: usize) -> Self {
        Subspace { ambient: n, basis: Vec::new() }
    }

    pub fn span(vectors: &[Vec<Q>], n: usize) -> Self {
        let nonzero: Vec<Vec<Q>> = vectors.iter().filter(|v| v.iter().any(|x| !x.is_zero())).cloned().collect();
        Subspace { ambient: n, basis: span_basis(&nonzero, n) }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[Vec<Q>] {
        &self.basis
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        coordinates(&self.basis, v).is_some()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|v| other.contains(v))
    }

    pub fn sum<'a>(spaces: impl IntoIterator<Item = &'a Subspace>, n: usize) -> Subspace {
        let mut all = Vec::new();
        for s in spaces {
            all.extend(s.basis.iter().cloned());
        }
        Self::span(&all, n)
    }
}

impl Matrix {
    fn rows_vec(&self) -> Vec<Vec<Q>> {
        (0..self.rows()).map(|i| self.row(i).to_vec()).collect()
    }
}

/// `σ ↦ e_σV ⊆ V`; inclusions are the coordinate maps between bases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientSystem {
    ambient: usize,
    spaces: BTreeMap<usize, Subspace>,
}

impl CoefficientSystem {
    pub fn new(ambient: usize, spaces: BTreeMap<usize, Subspace>) -> Result<Self> {
        if let Some(s) = spaces.values().find(|s| s.ambient != ambient) {
            return Err(Error::InvalidParameter(format!(
                "subspace of Q^{} in a system over Q^{ambient}",
                s.ambient
            )));
        }
        Ok(CoefficientSystem { ambient, spaces })
    }

    /// `V = Q` on every cell.
    pub fn trivial(cells: &[usize]) -> Self {
        CoefficientSystem { ambient: 1, spaces: cells.iter().map(|&c| (c, Subspace::full(1))).collect() }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn space(&self, cell: usize) -> Option<&Subspace> {
        self.spaces.get(&cell)
    }

    pub fn spaces(&self) -> &BTreeMap<usize, Subspace> {
        &self.spaces
    }

    /// Matrix of `e_σV → e_τV` in the stored bases (columns: σ-basis).
    pub fn inclusion(&self, sigma: usize, tau: usize) -> Result<Matrix> {
        let (s, t) = match (self.spaces.get(&sigma), self.spaces.get(&tau)) {
            (Some(s), Some(t)) => (s, t),
            _ => return Err(Error::MissingInclusion { from: sigma, to: tau }),
        };
        let mut m = Matrix::zeros(t.dim(), s.dim());
        for (j, v) in s.basis.iter().enumerate() {
            let c = coordinates(&t.basis, v).ok_or(Error::MissingInclusion { from: sigma, to: tau })?;
            for (i, x) in c.into_iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        Ok(m)
    }

    /// Every face inclusion exists and inclusions compose along chains of
    /// faces of length two.
    pub fn check_functorial(&self, complex: &Complex, cells: &[usize]) -> Result<()> {
        for &s in cells {
            for &(t, _) in complex.faces(s) {
                let st = self.inclusion(s, t)?;
                for &(r, _) in complex.faces(t) {
                    let tr = self.inclusion(t, r)?;
                    let sr = self.inclusion(s, r)?;
                    if tr.mul(&st) != sr {
                        return Err(Error::Inconsistent(format!("inclusions {s}→{t}→{r} do not compose")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Boundary matrices of `C_*(Σ; V)`; `boundary[n]` maps degree `n` to
/// degree `n-1` for `n ≥ 1`, `augmentation` maps `C_0` into `V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainMatrices {
    pub cells: Vec<Vec<usize>>,
    pub dims: Vec<usize>,
    pub boundary: Vec<Matrix>,
    pub augmentation: Matrix,
    offsets: Vec<BTreeMap<usize, usize>>,
}

impl ChainMatrices {
    /// Position of the first basis vector of `e_σV` inside `C_n`.
    pub fn offset(&self, n: usize, cell: usize) -> Option<usize> {
        self.offsets.get(n)?.get(&cell).copied()
    }
}

fn sorted_cells(cells: &[usize]) -> Vec<usize> {
    let mut s = cells.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

pub fn chain_complex(complex: &Complex, cells: &[usize], system: &CoefficientSystem) -> Result<ChainMatrices> {
    let cells = sorted_cells(cells);
    if !complex.is_face_closed(&cells) {
        return Err(Error::NotFaceClosed);
    }
    let top = cells.iter().map(|&c| complex.dim(c)).max().unwrap_or(0);
    let mut by_dim: Vec<Vec<usize>> = vec![Vec::new(); top + 1];
    for &c in &cells {
        by_dim[complex.dim(c)].push(c);
    }
    let mut offsets = Vec::new();
    let mut dims = Vec::new();
    for list in &by_dim {
        let mut off = BTreeMap::new();
        let mut total = 0;
        for &c in list {
            off.insert(c, total);
            total += system.space(c).ok_or(Error::MissingInclusion { from: c, to: c })?.dim();
        }
        offsets.push(off);
        dims.push(total);
    }
    let mut boundary = vec![Matrix::zeros(0, dims[0])];
    for n in 1..=top {
        let mut m = Matrix::zeros(dims[n - 1], dims[n]);
        for &s in &by_dim[n] {
            let cs = offsets[n][&s];
            for &(t, sign) in complex.faces(s) {
                let rt = offsets[n - 1][&t];
                let inc = system.inclusion(s, t)?;
                for i in 0..inc.rows() {
                    for j in 0..inc.cols() {
                        m[(rt + i, cs + j)] = inc[(i, j)] * q(sign as i128);
                    }
                }
            }
        }
        boundary.push(m);
    }
    let mut aug = Matrix::zeros(system.ambient(), dims[0]);
    for &x in &by_dim[0] {
        let off = offsets[0][&x];
        for (j, v) in system.space(x).unwrap().basis().iter().enumerate() {
            for (i, &val) in v.iter().enumerate() {
                aug[(i, off + j)] = val;
            }
        }
    }
    Ok(ChainMatrices { cells: by_dim, dims, boundary, augmentation: aug, offsets })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyReport {
    /// Betti numbers of `C_*(Σ; V)` without augmentation.
    pub betti: Vec<usize>,
    /// Betti numbers of the complex augmented by `∂₀ : C_0 → Σ_x e_xV`.
    pub augmented_betti: Vec<usize>,
    /// Basis of `∂₀(C_0)` inside `V`.
    pub h0_image: Vec<Vec<Q>>,
    /// `dim Σ_x e_xV`.
    pub vertex_sum_dim: usize,
    pub boundary_squares_zero: bool,
    pub convex: bool,
    /// Augmented complex exact in every degree.
    pub acyclic: bool,
    /// `∂₀` induces a bijection from `H_0` onto `Σ_x e_xV`.
    pub h0_bijective: bool,
}

impl HomologyReport {
    /// The acyclicity assertion, which only applies to convex `Σ`.
    pub fn asserted_ok(&self) -> Option<bool> {
        self.convex.then_some(self.acyclic && self.h0_bijective && self.boundary_squares_zero)
    }
}

pub fn homology(complex: &Complex, cells: &[usize], system: &CoefficientSystem) -> Result<HomologyReport> {
    let cm = chain_complex(complex, cells, system)?;
    let top = cm.dims.len() - 1;
    let ranks: Vec<usize> = (0..=top).map(|n| if n == 0 { 0 } else { cm.boundary[n].rank() }).collect();
    let aug_rank = cm.augmentation.rank();
    let mut squares_zero = true;
    for n in 2..=top {
        if !cm.boundary[n - 1].mul(&cm.boundary[n]).is_zero() {
            squares_zero = false;
        }
    }
    if top >= 1 && !cm.augmentation.mul(&cm.boundary[1]).is_zero() {
        squares_zero = false;
    }
    let rank_in = |n: usize| if n < top { ranks[n + 1] } else { 0 };
    let betti: Vec<usize> = (0..=top).map(|n| cm.dims[n] - ranks[n] - rank_in(n)).collect();
    let augmented_betti: Vec<usize> = (0..=top)
        .map(|n| {
            let out = if n == 0 { aug_rank } else { ranks[n] };
            cm.dims[n] - out - rank_in(n)
        })
        .collect();
    let cols: Vec<Vec<Q>> = cm.augmentation.transpose().rows_vec();
    let image = Subspace::span(&cols, system.ambient());
    let vertex_sum = Subspace::sum(cm.cells[0].iter().filter_map(|&x| system.space(x)), system.ambient());
    let convex = complex.is_convex(&sorted_cells(cells))?;
    Ok(HomologyReport {
        acyclic: augmented_betti.iter().all(|&b| b == 0),
        h0_bijective: augmented_betti[0] == 0 && image == vertex_sum,
        betti,
        augmented_betti,
        vertex_sum_dim: vertex_sum.dim(),
        h0_image: image.basis,
        boundary_squares_zero: squares_zero,
        convex,
    })
}

/// A group element: a signed permutation of the cells and a matrix on `V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    pub action: Vec<(usize, i32)>,
    pub matrix: Matrix,
}

impl GroupElement {
    fn compose(&self, other: &GroupElement) -> GroupElement {
        let action = other
            .action
            .iter()
            .map(|&(c, s)| {
                let (d, t) = self.action[c];
                (d, s * t)
            })
            .collect();
        GroupElement { action, matrix: self.matrix.mul(&other.matrix) }
    }

    fn key(&self) -> (Vec<(usize, i32)>, Vec<Vec<Q>>) {
        (self.action.clone(), self.matrix.rows_vec())
    }

    pub fn identity(cells: usize, dim: usize) -> Self {
        GroupElement { action: (0..cells).map(|c| (c, 1)).collect(), matrix: Matrix::identity(dim) }
    }
}

/// Upper bound on the size of a generated group.
pub const MAX_GROUP_ORDER: usize = 5_000;

#[derive(Clone, Debug)]
pub struct FiniteModel {
    pub name: String,
    pub dim: usize,
    generators: Vec<GroupElement>,
    elements: Vec<GroupElement>,
    mult: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    subgroups: Vec<Vec<usize>>,
}

/// Outcome of the axiom suite; empty lists mean the axiom holds.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AxiomReport {
    /// Generators that do not commute with the boundary.
    pub action_failures: Vec<usize>,
    /// Cells whose `U_σ` is not closed under products.
    pub not_subgroups: Vec<usize>,
    /// (element, cell) with `g U_σ g⁻¹ ≠ U_{gσ}`.
    pub conjugation: Vec<(usize, usize)>,
    /// Cells whose subgroup moves some cell of the star.
    pub star_fixing: Vec<usize>,
    /// Cells whose subgroup differs from the one generated by its vertices.
    pub vertex_generation: Vec<usize>,
    /// Tree triples `(σ₁, σ₂, σ₃)` with `σ₂` between but `U_{σ₂} ⊄ U_{σ₁}U_{σ₃}`.
    pub geodesic: Vec<(usize, usize, usize)>,
    pub geodesic_checked: bool,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.action_failures.is_empty()
            && self.not_subgroups.is_empty()
            && self.conjugation.is_empty()
            && self.star_fixing.is_empty()
            && self.vertex_generation.is_empty()
            && self.geodesic.is_empty()
    }
}

impl FiniteModel {
    /// Closes the generators into a group and assigns `U_σ` as the
    /// elements selected by `member(σ, g)`.
    pub fn from_predicate(
        name: &str,
        complex: &Complex,
        dim: usize,
        generators: Vec<GroupElement>,
        member: impl Fn(usize, &GroupElement) -> bool,
    ) -> Result<Self> {
        let mut model = Self::generated(name, complex, dim, generators)?;
        model.subgroups = (0..complex.len())
            .map(|c| (0..model.elements.len()).filter(|&i| member(c, &model.elements[i])).collect())
            .collect();
        Ok(model)
    }

    /// Subgroups given as element indices per cell; cells left out get the
    /// trivial subgroup.
    pub fn from_indices(
        name: &str,
        complex: &Complex,
        dim: usize,
        generators: Vec<GroupElement>,
        subgroups: &BTreeMap<usize, Vec<usize>>,
    ) -> Result<Self> {
        let mut model = Self::generated(name, complex, dim, generators)?;
        let order = model.elements.len();
        model.subgroups = vec![vec![0]; complex.len()];
        for (&c, list) in subgroups {
            if c >= complex.len() {
                return Err(Error::CellNotInComplex);
            }
            if let Some(&i) = list.iter().find(|&&i| i >= order) {
                return Err(Error::InvalidParameter(format!("element {i} outside group of order {order}")));
            }
            let mut l = list.clone();
            l.sort_unstable();
            l.dedup();
            model.subgroups[c] = l;
        }
        Ok(model)
    }

    fn generated(name: &str, complex: &Complex, dim: usize, generators: Vec<GroupElement>) -> Result<Self> {
        for g in &generators {
            if g.action.len() != complex.len() || g.matrix.rows() != dim || g.matrix.cols() != dim {
                return Err(Error::InvalidParameter(String::from("generator has the wrong shape")));
            }
            if g.action.iter().any(|&(c, s)| c >= complex.len() || (s != 1 && s != -1)) {
                return Err(Error::InvalidParameter(String::from("generator action is not a signed cell map")));
            }
        }
        let id = GroupElement::identity(complex.len(), dim);
        let mut elements = vec![id.clone()];
        let mut index = BTreeMap::from([(id.key(), 0usize)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in &generators {
                let p = g.compose(&elements[i]);
                let k = p.key();
                if !index.contains_key(&k) {
                    index.insert(k, elements.len());
                    queue.push_back(elements.len());
                    elements.push(p);
                    if elements.len() > MAX_GROUP_ORDER {
                        return Err(Error::InvalidParameter(format!(
                            "group exceeds {MAX_GROUP_ORDER} elements"
                        )));
                    }
                }
            }
        }
        let n = elements.len();
        let mut mult = vec![vec![0usize; n]; n];
        for a in 0..n {
            for b in 0..n {
                mult[a][b] = *index
                    .get(&elements[a].compose(&elements[b]).key())
                    .ok_or_else(|| Error::InvalidParameter(String::from("generators do not close into a group")))?;
            }
        }
        let inverse = (0..n)
            .map(|a| {
                (0..n)
                    .find(|&b| mult[a][b] == 0)
                    .ok_or_else(|| Error::InvalidParameter(String::from("generator is not invertible")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FiniteModel { name: String::from(name), dim, generators, elements, mult, inverse, subgroups: Vec::new() })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn subgroup(&self, cell: usize) -> &[usize] {
        &self.subgroups[cell]
    }

    fn generated_subgroup(&self, gens: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let gens: Vec<usize> = gens.into_iter().collect();
        let mut set = BTreeSet::from([0usize]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            for &g in &gens {
                let p = self.mult[g][a];
                if set.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        set
    }

    pub fn check_axioms(&self, complex: &Complex) -> AxiomReport {
        let mut r = AxiomReport::default();
        let n = complex.len();
        for (k, g) in self.generators.iter().enumerate() {
            let ok = (0..n).all(|c| {
                let (gc, s) = g.action[c];
                let mut lhs: Vec<(usize, i32)> = complex.faces(gc).iter().map(|&(f, t)| (f, t * s)).collect();
                let mut rhs: Vec<(usize, i32)> =
                    complex.faces(c).iter().map(|&(f, t)| (g.action[f].0, t * g.action[f].1)).collect();
                lhs.sort_unstable();
                rhs.sort_unstable();
                lhs == rhs
            });
            if !ok {
                r.action_failures.push(k);
            }
        }
        let sets: Vec<BTreeSet<usize>> = self.subgroups.iter().map(|s| s.iter().copied().collect()).collect();
        for c in 0..n {
            let s = &sets[c];
            if !s.contains(&0) || s.iter().any(|&a| s.iter().any(|&b| !s.contains(&self.mult[a][b]))) {
                r.not_subgroups.push(c);
            }
        }
        for (gi, g) in self.elements.iter().enumerate() {
            let ginv = self.inverse[gi];
            for c in 0..n {
                let conj: BTreeSet<usize> = sets[c].iter().map(|&u| self.mult[self.mult[gi][u]][ginv]).collect();
                if conj != sets[g.action[c].0] {
                    r.conjugation.push((gi, c));
                }
            }
        }
        for c in 0..n {
            let star = complex.star(c).cells;
            if sets[c].iter().any(|&u| star.iter().any(|&t| self.elements[u].action[t] != (t, 1))) {
                r.star_fixing.push(c);
            }
            let verts = complex.vertices(c);
            let gen = self.generated_subgroup(verts.iter().flat_map(|&x| sets[x].iter().copied()));
            if gen != sets[c] {
                r.vertex_generation.push(c);
            }
        }
        if complex.kind() == ComplexKind::Tree {
            r.geodesic_checked = true;
            for s1 in 0..n {
                for s3 in s1..n {
                    let between = match complex.hull_of_cells(&[s1, s3]) {
                        Ok(h) => h,
                        Err(_) => continue,
                    };
                    let prod: BTreeSet<usize> =
                        sets[s1].iter().flat_map(|&a| sets[s3].iter().map(move |&b| (a, b))).map(|(a, b)| self.mult[a][b]).collect();
                    let prod_rev: BTreeSet<usize> =
                        sets[s3].iter().flat_map(|&a| sets[s1].iter().map(move |&b| (a, b))).map(|(a, b)| self.mult[a][b]).collect();
                    for &s2 in &between {
                        if !sets[s2].is_subset(&prod) || !sets[s2].is_subset(&prod_rev) {
                            r.geodesic.push((s1, s2, s3));
                        }
                    }
                }
            }
        }
        r
    }

    /// Averaging projector of a set of elements forming a subgroup.
    pub fn projector(&self, elements: &[usize]) -> Matrix {
        let mut p = Matrix::zeros(self.dim, self.dim);
        for &e in elements {
            p = p.add(&self.elements[e].matrix);
        }
        let k = Q::new(1, elements.len() as i128);
        let mut out = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = p[(i, j)] * k;
            }
        }
        out
    }

    /// `V^{U_σ}` without validating the axioms.
    pub fn fixed_subspace(&self, cell: usize) -> Subspace {
        let p = self.projector(&self.subgroups[cell]);
        Subspace::span(&p.transpose().rows_vec(), self.dim)
    }

    /// `e_σV = V^{U_σ}`, refused when the axiom suite fails.
    pub fn invariants_of(&self, complex: &Complex, cell: usize) -> Result<Subspace> {
        let r = self.check_axioms(complex);
        if !r.passed() {
            return Err(Error::AxiomViolation(format!("{}: {}", self.name, describe_axioms(&r))));
        }
        Ok(self.fixed_subspace(cell))
    }

    /// Fixed-space system on every cell, without validating the axioms.
    pub fn fixed_space_system(&self, complex: &Complex) -> CoefficientSystem {
        let spaces = (0..complex.len()).map(|c| (c, self.fixed_subspace(c))).collect();
        CoefficientSystem { ambient: self.dim, spaces }
    }

    pub fn coefficient_system(&self, complex: &Complex) -> Result<CoefficientSystem> {
        let r = self.check_axioms(complex);
        if !r.passed() {
            return Err(Error::AxiomViolation(format!("{}: {}", self.name, describe_axioms(&r))));
        }
        Ok(self.fixed_space_system(complex))
    }

    /// Matrix of `g` on `C_n(Σ; V)`: `σ ⊗ v ↦ ε (gσ) ⊗ gv`.
    pub fn chain_action(&self, cm: &ChainMatrices, system: &CoefficientSystem, g: usize, n: usize) -> Result<Matrix> {
        let el = &self.elements[g];
        let mut m = Matrix::zeros(cm.dims[n], cm.dims[n]);
        for &c in &cm.cells[n] {
            let (img, sign) = el.action[c];
            let src = system.space(c).ok_or(Error::CellNotInComplex)?;
            let dst = system.space(img).ok_or(Error::CellNotInComplex)?;
            let (so, dof) = (cm.offset(n, c).unwrap(), cm.offset(n, img).ok_or(Error::CellNotInComplex)?);
            for (j, v) in src.basis().iter().enumerate() {
                let gv = el.matrix.apply(v);
                let coords = coordinates(dst.basis(), &gv).ok_or(Error::MissingInclusion { from: c, to: img })?;
                for (i, x) in coords.into_iter().enumerate() {
                    m[(dof + i, so + j)] = x * q(sign as i128);
                }
            }
        }
        Ok(m)
    }
}

pub fn describe_axioms(r: &AxiomReport) -> String {
    let mut parts = Vec::new();
    if !r.action_failures.is_empty() {
        parts.push(format!("{} generators do not act by automorphisms", r.action_failures.len()));
    }
    if !r.not_subgroups.is_empty() {
        parts.push(format!("{} cells carry non-subgroups", r.not_subgroups.len()));
    }
    if !r.conjugation.is_empty() {
        parts.push(format!("conjugation fails at {} (element, cell) pairs", r.conjugation.len()));
    }
    if !r.star_fixing.is_empty() {
        parts.push(format!("{} subgroups move their star", r.star_fixing.len()));
    }
    if !r.vertex_generation.is_empty() {
        parts.push(format!("{} subgroups are not generated by their vertices", r.vertex_generation.len()));
    }
    if !r.geodesic.is_empty() {
        parts.push(format!("{} geodesic triples fail", r.geodesic.len()));
    }
    if parts.is_empty() {
        String::from("all axioms hold")
    } else {
        parts.join("; ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedReport {
    /// `(σ, Some(τ))` with `e_σV ⊄ e_τV` for `τ` in the support of `γ(σ)`;
    /// `(x, None)` when `e_xV ⊄ e_{x₀}V`.
    pub support_violations: Vec<(usize, Option<usize>)>,
    /// `∂γ + γ∂ = id` on `C_*(Σ; V)`; not evaluated when the support
    /// condition fails.
    pub homotopy: Option<bool>,
    pub basis_vectors_checked: usize,
}

impl InducedReport {
    pub fn passed(&self) -> bool {
        self.support_violations.is_empty() && self.homotopy == Some(true)
    }
}

type VChain = BTreeMap<usize, Vec<Q>>;

fn vadd(c: &mut VChain, cell: usize, v: &[Q], k: Q) {
    let e = c.entry(cell).or_insert_with(|| vec![Q::zero(); v.len()]);
    for (a, b) in e.iter_mut().zip(v) {
        *a += *b * k;
    }
    if e.iter().all(Zero::is_zero) {
        c.remove(&cell);
    }
}

/// Checks that `γ ⊗ id` is a contraction of `C_*(Σ; V)` for `Σ` the whole
/// complex.
pub fn induced_contraction_check(
    complex: &Complex,
    system: &CoefficientSystem,
    gamma: &Contraction,
) -> Result<InducedReport> {
    let x0 = gamma.base();
    let space = |c: usize| system.space(c).ok_or(Error::MissingInclusion { from: c, to: c });
    let mut violations = Vec::new();
    for s in 0..complex.len() {
        let es = space(s)?;
        for t in gamma.image(s).ok_or(Error::CellNotInComplex)?.support() {
            if !es.is_subspace_of(space(t)?) {
                violations.push((s, Some(t)));
            }
        }
        if complex.dim(s) == 0 && !es.is_subspace_of(space(x0)?) {
            violations.push((s, None));
        }
    }
    if !violations.is_empty() {
        return Ok(InducedReport { support_violations: violations, homotopy: None, basis_vectors_checked: 0 });
    }
    let apply_gamma = |c: &VChain| -> Result<VChain> {
        let mut out = VChain::new();
        for (&cell, v) in c {
            for (t, k) in gamma.image(cell).unwrap().terms() {
                if !space(t)?.contains(v) {
                    return Err(Error::MissingInclusion { from: cell, to: t });
                }
                vadd(&mut out, t, v, k);
            }
        }
        Ok(out)
    };
    // Boundary; degree-0 chains go to V, returned under key usize::MAX.
    let boundary = |c: &VChain| -> VChain {
        let mut out = VChain::new();
        for (&cell, v) in c {
            if complex.dim(cell) == 0 {
                vadd(&mut out, usize::MAX, v, Q::one());
            } else {
                for &(f, s) in complex.faces(cell) {
                    vadd(&mut out, f, v, q(s as i128));
                }
            }
        }
        out
    };
    let mut ok = true;
    let mut checked = 0;
    for s in 0..complex.len() {
        for v in space(s)?.basis() {
            checked += 1;
            let mut c = VChain::new();
            vadd(&mut c, s, v, Q::one());
            let mut lhs = boundary(&apply_gamma(&c)?);
            let b = boundary(&c);
            let gb = if complex.dim(s) == 0 {
                let mut g = VChain::new();
                vadd(&mut g, x0, &b[&usize::MAX], Q::one());
                g
            } else {
                apply_gamma(&b)?
            };
            for (&cell, w) in &gb {
                vadd(&mut lhs, cell, w, Q::one());
            }
            if lhs != c {
                ok = false;
            }
        }
    }
    // Augmentation degree: w ↦ x₀ ⊗ w ↦ w on Σ_x e_xV.
    let target = Subspace::sum(complex.cells_of_dim(0).filter_map(|x| system.space(x)), system.ambient());
    for w in target.basis() {
        checked += 1;
        let mut c = VChain::new();
        vadd(&mut c, x0, w, Q::one());
        if boundary(&c).get(&usize::MAX) != Some(w) {
            ok = false;
        }
    }
    Ok(InducedReport { support_violations: Vec::new(), homotopy: Some(ok), basis_vectors_checked: checked })
}

fn sign_matrix(s: i64) -> Matrix {
    Matrix::from_rows(&[vec![q(s as i128)]])
}

/// Reflection group of the `A1` line acting on the sign representation,
/// with trivial subgroups everywhere.
pub fn sign_line_model(radius: i128, budget: usize) -> Result<(Complex, FiniteModel)> {
    let rd = RootDatum::parse("A1")?;
    let complex = Complex::apartment(&rd, q(radius), budget)?;
    let w = rd.weyl_elements();
    let s = GroupElement { action: complex.weyl_action(&w[1]), matrix: sign_matrix(-1) };
    let model = FiniteModel::from_predicate("sign-line", &complex, 1, vec![s], |_, g| g.matrix == Matrix::identity(1))?;
    Ok((complex, model))
}

/// Negative control: the reflection of the `A1` line with `U = C₂` at
/// the base vertex only and the sign representation. Violates the star
/// and vertex-generation axioms.
pub fn cyclic_model(radius: i128, budget: usize) -> Result<(Complex, FiniteModel)> {
    let rd = RootDatum::parse("A1")?;
    let complex = Complex::apartment(&rd, q(radius), budget)?;
    let w = rd.weyl_elements();
    let s = GroupElement { action: complex.weyl_action(&w[1]), matrix: sign_matrix(-1) };
    let base = complex.base();
    let model = FiniteModel::from_predicate("cyclic", &complex, 1, vec![s], |c, g| {
        c == base || g.matrix == Matrix::identity(1)
    })?;
    Ok((complex, model))
}

/// Negative control for the support condition: `C₂` acting trivially on a
/// line of depth 2 and by sign on `V`, with `U = C₂` on the vertex at
/// position 1 and its edges, trivial elsewhere.
pub fn path_bump_model(budget: usize) -> Result<(Complex, FiniteModel)> {
    let complex = Complex::tree(1, 2, budget)?;
    let t = GroupElement { action: (0..complex.len()).map(|c| (c, 1)).collect(), matrix: sign_matrix(-1) };
    let tree = complex.tree_data().unwrap().clone();
    let table = complex.factors()[0].clone();
    let bump = |c: usize| {
        table.simplices[complex.cell(c).0[0] as usize]
            .iter()
            .any(|&v| tree.words[v as usize] == [0u32])
    };
    let model = FiniteModel::from_predicate("path-bump", &complex, 1, vec![t], |c, g| {
        bump(c) || g.matrix == Matrix::identity(1)
    })?;
    Ok((complex, model))
}

/// `(ℤ/2)^depth` acting trivially on a tree ball, `V` its regular
/// representation, `U_x` generated by the first `depth(x)` factors and
/// `U_edge` the subgroup of its far vertex.
pub fn tree_filtration_model(branching: usize, depth: usize, budget: usize) -> Result<(Complex, FiniteModel)> {
    if depth > 6 {
        return Err(Error::InvalidParameter(String::from("filtration model depth is limited to 6")));
    }
    let complex = Complex::tree(branching, depth, budget)?;
    let dim = 1usize << depth;
    let gens: Vec<GroupElement> = (0..depth)
        .map(|k| {
            let mut m = Matrix::zeros(dim, dim);
            for h in 0..dim {
                m[(h ^ (1 << k), h)] = Q::one();
            }
            GroupElement { action: (0..complex.len()).map(|c| (c, 1)).collect(), matrix: m }
        })
        .collect();
    let tree = complex.tree_data().unwrap().clone();
    let table = complex.factors()[0].clone();
    let level = |c: usize| {
        table.simplices[complex.cell(c).0[0] as usize].iter().map(|&v| tree.level[v as usize]).max().unwrap()
    };
    // The element is recovered from the image of basis vector 0.
    let bits = |g: &GroupElement| (0..dim).find(|&i| !g.matrix[(i, 0)].is_zero()).unwrap();
    let model = FiniteModel::from_predicate("tree-filtration", &complex, dim, gens, |c, g| bits(g) >> level(c) == 0)?;
    Ok((complex, model))
}

/// Automorphisms of the rooted ball of depth 2 in the 3-regular tree,
/// acting on the permutation representation of the leaves; `U_x` is the
/// pointwise stabilizer of the ball of radius one around `x` and `U_edge`
/// is generated by its endpoints.
pub fn tree_star_model(budget: usize) -> Result<(Complex, FiniteModel)> {
    let complex = Complex::tree(2, 2, budget)?;
    let tree = complex.tree_data().unwrap().clone();
    let leaves: Vec<usize> = complex
        .cells_of_dim(0)
        .filter(|&v| tree.level[complex.factors()[0].simplices[complex.cell(v).0[0] as usize][0] as usize] == 2)
        .collect();
    let dim = leaves.len();
    let gens: Vec<GroupElement> = complex
        .symmetries()
        .into_iter()
        .map(|action| {
            let mut m = Matrix::zeros(dim, dim);
            for (j, &l) in leaves.iter().enumerate() {
                let i = leaves.iter().position(|&x| x == action[l].0).unwrap();
                m[(i, j)] = Q::one();
            }
            GroupElement { action, matrix: m }
        })
        .collect();
    let neighbours = |x: usize| -> Vec<usize> {
        let mut out = vec![x];
        for &e in complex.cofaces(x) {
            out.push(e);
            out.extend(complex.vertices(e));
        }
        out
    };
    let mut model = FiniteModel::from_predicate("tree-star", &complex, dim, gens, |c, g| {
        complex.dim(c) == 0 && neighbours(c).iter().all(|&t| g.action[t] == (t, 1))
    })?;
    for e in complex.cells_of_dim(1) {
        let verts = complex.vertices(e);
        let gen = model.generated_subgroup(verts.iter().flat_map(|&x| model.subgroups[x].clone()));
        model.subgroups[e] = gen.into_iter().collect();
    }
    Ok((complex, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::build_contraction;
    use crate::DEFAULT_CELL_BUDGET;

    fn all(c: &Complex) -> Vec<usize> {
        (0..c.len()).collect()
    }

    #[test]
    fn subspaces() {
        let v = Subspace::span(&[vec![q(1), q(1), q(0)], vec![q(2), q(2), q(0)]], 3);
        assert_eq!(v.dim(), 1);
        assert!(v.contains(&[q(3), q(3), q(0)]));
        assert!(v.is_subspace_of(&Subspace::full(3)));
        assert!(!Subspace::full(3).is_subspace_of(&v));
        assert_eq!(Subspace::sum([&v, &Subspace::zero(3)], 3), v);
    }

    #[test]
    fn trivial_coefficients_on_segment() {
        let c = Complex::apartment(&RootDatum::parse("A1").unwrap(), q(2), DEFAULT_CELL_BUDGET).unwrap();
        let sys = CoefficientSystem::trivial(&all(&c));
        let cm = chain_complex(&c, &all(&c), &sys).unwrap();
        assert_eq!(cm.boundary[1], c.boundary_matrix(1));
        let h = homology(&c, &all(&c), &sys).unwrap();
        assert_eq!(h.betti, vec![1, 0]);
        assert_eq!(h.augmented_betti, vec![0, 0]);
        assert_eq!(h.asserted_ok(), Some(true));
    }

    #[test]
    fn segment_with_two_dimensional_vertices() {
        // [0,2]: vertex spaces Q², edge spaces the line spanned by (1,1)
        let c = Complex::apartment(&RootDatum::parse("A1").unwrap(), q(2), DEFAULT_CELL_BUDGET).unwrap();
        let seg: Vec<usize> = all(&c)
            .into_iter()
            .filter(|&s| c.vertices(s).iter().all(|&v| c.vertex_point(v)[0] >= q(0)))
            .collect();
        let line = Subspace::span(&[vec![q(1), q(1)]], 2);
        let spaces = seg
            .iter()
            .map(|&s| (s, if c.dim(s) == 0 { Subspace::full(2) } else { line.clone() }))
            .collect();
        let sys = CoefficientSystem::new(2, spaces).unwrap();
        sys.check_functorial(&c, &seg).unwrap();
        let cm = chain_complex(&c, &seg, &sys).unwrap();
        assert_eq!((cm.dims[0], cm.dims[1]), (6, 2));
        assert_eq!((cm.boundary[1].rows(), cm.boundary[1].cols()), (6, 2));
        // each column holds +inclusion and −inclusion blocks
        for j in 0..2 {
            let col: Vec<Q> = (0..6).map(|i| cm.boundary[1][(i, j)]).collect();
            assert_eq!(col.iter().filter(|x| **x == q(1)).count(), 2);
            assert_eq!(col.iter().filter(|x| **x == q(-1)).count(), 2);
        }
        let h = homology(&c, &seg, &sys).unwrap();
        // not induced by a group: H_0 has rank 4 against a 2-dimensional sum
        assert_eq!(h.betti, vec![4, 0]);
        assert_eq!(h.augmented_betti, vec![2, 0]);
        assert!(!h.acyclic);
        // edge space not contained in a vertex space: missing inclusion
        let mut bad = sys.spaces().clone();
        bad.insert(seg[0], Subspace::span(&[vec![q(1), q(0)]], 2));
        let bad = CoefficientSystem::new(2, bad).unwrap();
        assert!(matches!(chain_complex(&c, &seg, &bad), Err(Error::MissingInclusion { .. })));
    }

    #[test]
    fn disconnected_negative_control() {
        let c = Complex::apartment(&RootDatum::parse("A1").unwrap(), q(2), DEFAULT_CELL_BUDGET).unwrap();
        let two: Vec<usize> = c.cells_of_dim(0).take(2).collect();
        let h = homology(&c, &two, &CoefficientSystem::trivial(&two)).unwrap();
        assert_eq!(h.betti, vec![2]);
        assert_eq!(h.augmented_betti, vec![1]);
        assert!(!h.convex);
        assert_eq!(h.asserted_ok(), None);
    }

    #[test]
    fn sign_line_is_acyclic_and_equivariant() {
        let (c, m) = sign_line_model(2, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(m.order(), 2);
        assert!(m.check_axioms(&c).passed());
        let sys = m.coefficient_system(&c).unwrap();
        let h = homology(&c, &all(&c), &sys).unwrap();
        assert_eq!(h.asserted_ok(), Some(true));
        // the reflection commutes with the boundary once orientation signs
        // are included
        let cm = chain_complex(&c, &all(&c), &sys).unwrap();
        let g0 = m.chain_action(&cm, &sys, 1, 0).unwrap();
        let g1 = m.chain_action(&cm, &sys, 1, 1).unwrap();
        assert_eq!(g0.mul(&cm.boundary[1]), cm.boundary[1].mul(&g1));
        let gamma = build_contraction(&c).unwrap();
        assert!(induced_contraction_check(&c, &sys, &gamma).unwrap().passed());
    }

    #[test]
    fn cyclic_model_fails_axioms() {
        let (c, m) = cyclic_model(2, DEFAULT_CELL_BUDGET).unwrap();
        let r = m.check_axioms(&c);
        assert!(!r.star_fixing.is_empty() && !r.vertex_generation.is_empty());
        assert!(matches!(m.invariants_of(&c, c.base()), Err(Error::AxiomViolation(_))));
        assert_eq!(m.fixed_subspace(c.base()).dim(), 0);
        let far = c.cells_of_dim(0).find(|&v| v != c.base()).unwrap();
        assert_eq!(m.fixed_subspace(far).dim(), 1);
        let sys = m.fixed_space_system(&c);
        let gamma = build_contraction(&c).unwrap();
        let rep = induced_contraction_check(&c, &sys, &gamma).unwrap();
        assert!(rep.support_violations.iter().any(|&(_, t)| t.is_none()));
    }

    #[test]
    fn path_bump_violates_support() {
        let (c, m) = path_bump_model(DEFAULT_CELL_BUDGET).unwrap();
        assert!(!m.check_axioms(&c).geodesic.is_empty());
        let sys = m.fixed_space_system(&c);
        let gamma = build_contraction(&c).unwrap();
        let rep = induced_contraction_check(&c, &sys, &gamma).unwrap();
        assert!(!rep.support_violations.is_empty());
        assert!(!rep.passed());
    }

    #[test]
    fn tree_filtration_model_passes() {
        let (c, m) = tree_filtration_model(2, 3, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(m.order(), 8);
        let ax = m.check_axioms(&c);
        assert!(ax.passed(), "{}", describe_axioms(&ax));
        let sys = m.coefficient_system(&c).unwrap();
        sys.check_functorial(&c, &all(&c)).unwrap();
        // regular representation of U_x: one invariant per coset
        for v in c.cells_of_dim(0) {
            let lvl = c.tree_data().unwrap().level[c.factors()[0].simplices[c.cell(v).0[0] as usize][0] as usize];
            assert_eq!(sys.space(v).unwrap().dim(), 8 >> lvl);
        }
        let h = homology(&c, &all(&c), &sys).unwrap();
        assert_eq!(h.asserted_ok(), Some(true));
        let gamma = build_contraction(&c).unwrap();
        assert!(induced_contraction_check(&c, &sys, &gamma).unwrap().passed());
    }

    #[test]
    fn tree_star_model_axioms_and_acyclicity() {
        let (c, m) = tree_star_model(DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(m.order(), 48);
        let ax = m.check_axioms(&c);
        assert!(ax.passed(), "{}", describe_axioms(&ax));
        let sys = m.coefficient_system(&c).unwrap();
        let h = homology(&c, &all(&c), &sys).unwrap();
        assert_eq!(h.asserted_ok(), Some(true), "{h:?}");
    }

    #[test]
    fn projectors_are_idempotent() {
        let (c, m) = tree_star_model(DEFAULT_CELL_BUDGET).unwrap();
        for s in 0..c.len() {
            let p = m.projector(m.subgroup(s));
            assert_eq!(p.mul(&p), p);
        }
    }

    #[test]
    fn from_indices_round_trip() {
        let (c, m) = tree_filtration_model(1, 2, DEFAULT_CELL_BUDGET).unwrap();
        let subs: BTreeMap<usize, Vec<usize>> = (0..c.len()).map(|s| (s, m.subgroup(s).to_vec())).collect();
        let m2 = FiniteModel::from_indices("copy", &c, m.dim, m.generators().to_vec(), &subs).unwrap();
        assert_eq!(m2.order(), m.order());
        assert_eq!(m.fixed_space_system(&c), m2.fixed_space_system(&c));
        let bad = BTreeMap::from([(0usize, vec![99usize])]);
        assert!(FiniteModel::from_indices("bad", &c, m.dim, m.generators().to_vec(), &bad).is_err());
    }

    #[test]
    fn model_system_matches_invariants() {
        let (c, m) = tree_star_model(DEFAULT_CELL_BUDGET).unwrap();
        let sys = m.coefficient_system(&c).unwrap();
        for s in 0..c.len() {
            assert_eq!(sys.space(s), Some(&m.invariants_of(&c, s).unwrap()));
        }
        // regular representation restricted to U_x: one invariant per coset
        let (c, m) = tree_filtration_model(1, 2, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(m.invariants_of(&c, c.base()).unwrap().dim(), 4);
    }

    #[test]
    fn torus_line_is_acyclic() {
        let line = crate::torus::LineModel::new(5, DEFAULT_CELL_BUDGET).unwrap();
        let cells = all(&line.complex);
        let h = homology(&line.complex, &cells, &CoefficientSystem::trivial(&cells)).unwrap();
        assert_eq!(h.asserted_ok(), Some(true));
        assert_eq!(h.h0_image.len(), 1);
    }
}
