//! Finite polysimplicial complexes: balls in affine Coxeter apartments
//! (products of alcove tilings, one per irreducible factor) and balls in
//! regular trees.
//!
//! Every polysimplex is a product of one simplex per factor. Factor
//! simplices are stored once in a [`FactorTable`] and a cell is the tuple
//! of their ids. Simplices are oriented by increasing vertex id, and vertex
//! ids follow the order of vertex coordinates (apartment) or breadth-first
//! order from the root (tree), so orientations are reproducible.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{q, Matrix, Q};
use crate::rootsys::{apply_int, Point, RootDatum, WeylElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComplexKind {
    Apartment,
    Tree,
}

/// A cell: one factor simplex id per irreducible factor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Polysimplex(pub Vec<u32>);

/// Bounds `lo ≤ α(x) ≤ hi` per positive root of a factor, scaled by the
/// factor's coordinate denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorRegion {
    pub bounds: Vec<(i64, i64)>,
}

#[derive(Clone, Debug)]
pub struct FactorTable {
    /// Factor-local coordinates (empty for trees).
    pub vertices: Vec<Point>,
    pub simplices: Vec<Vec<u32>>,
    simplex_index: BTreeMap<Vec<u32>, u32>,
    vertex_simplices: Vec<Vec<u32>>,
    pub vertex_dist2: Vec<Q>,
    /// Squared distance from the base point to the closed simplex.
    pub min_dist2: Vec<Q>,
    pub max_vertex_dist2: Vec<Q>,
    /// Largest squared distance over the hull of the simplex and the base
    /// point (apartments only).
    pub region_max2: Vec<Q>,
    /// Simplices of that hull, when it fits inside the complex.
    region_simplices: Vec<Option<Vec<u32>>>,
    /// `scale · α(v)` for each vertex and positive root of the factor.
    root_values: Vec<Vec<i64>>,
    /// Common denominator of vertex root values.
    scale: i64,
    /// Positive roots of this factor, as indices into the datum.
    positive_roots: Vec<usize>,
    /// For each factor Weyl element, the image of each simplex with sign.
    weyl_action: Vec<Vec<(u32, i32)>>,
}

impl FactorTable {
    pub fn simplex_id(&self, verts: &[u32]) -> Option<u32> {
        self.simplex_index.get(verts).copied()
    }

    pub fn dim(&self, s: u32) -> usize {
        self.simplices[s as usize].len() - 1
    }

    fn region_of_vertices(&self, verts: impl IntoIterator<Item = u32>) -> FactorRegion {
        let mut bounds: Vec<(i64, i64)> = vec![(0, 0); self.positive_roots.len()];
        for v in verts {
            for (b, &val) in bounds.iter_mut().zip(&self.root_values[v as usize]) {
                b.0 = b.0.min(val);
                b.1 = b.1.max(val);
            }
        }
        // Round outward to integer walls.
        let s = self.scale;
        for b in &mut bounds {
            b.0 = b.0.div_euclid(s) * s;
            b.1 = -((-b.1).div_euclid(s)) * s;
        }
        FactorRegion { bounds }
    }

    fn vertex_in_region(&self, v: u32, region: &FactorRegion) -> bool {
        self.root_values[v as usize]
            .iter()
            .zip(&region.bounds)
            .all(|(&x, &(lo, hi))| lo <= x && x <= hi)
    }

    fn region_vertices(&self, region: &FactorRegion) -> Vec<u32> {
        (0..self.vertices.len() as u32).filter(|&v| self.vertex_in_region(v, region)).collect()
    }

    fn region_simplices_of(&self, region: &FactorRegion) -> Vec<u32> {
        let inside: BTreeSet<u32> = self.region_vertices(region).into_iter().collect();
        let mut out = BTreeSet::new();
        for &v in &inside {
            for &s in &self.vertex_simplices[v as usize] {
                if self.simplices[s as usize].iter().all(|u| inside.contains(u)) {
                    out.insert(s);
                }
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Clone, Debug)]
pub struct TreeData {
    pub q: usize,
    pub depth: usize,
    pub parent: Vec<Option<u32>>,
    pub level: Vec<usize>,
    pub children: Vec<Vec<u32>>,
    /// Child indices along the path from the root.
    pub words: Vec<Vec<u32>>,
}

#[derive(Clone, Debug)]
pub struct Complex {
    kind: ComplexKind,
    datum: Option<RootDatum>,
    radius: Q,
    tree: Option<TreeData>,
    factors: Vec<FactorTable>,
    cells: Vec<Polysimplex>,
    index: BTreeMap<Polysimplex, usize>,
    dims: Vec<usize>,
    by_dim: Vec<Range<usize>>,
    boundary: Vec<Vec<(usize, i32)>>,
    cofaces: Vec<Vec<usize>>,
    dist2: Vec<Q>,
    base: usize,
}

/// A star query result; `partial` is set when truncation removed cells
/// that contain the queried cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Star {
    pub cells: Vec<usize>,
    pub partial: bool,
}

impl Complex {
    /// Ball of the given radius around the base vertex in the apartment of
    /// `datum`. A cell is kept when its closure, together with the closure
    /// of its hull with the base vertex, lies in the closed ball.
    pub fn apartment(datum: &RootDatum, radius: Q, budget: usize) -> Result<Self> {
        if radius < Q::one() {
            return Err(Error::InvalidParameter(format!("radius {radius} must be at least 1")));
        }
        let r2 = radius * radius;
        // Region vertices beyond the ball are reached from inside along
        // edges of length at most one, so one extra unit suffices to see
        // every violation.
        let enum_radius = radius + Q::one();
        let mut factors = Vec::new();
        for fi in 0..datum.factors.len() {
            factors.push(build_factor_table(datum, fi, enum_radius * enum_radius, r2, budget)?);
        }

        // Products of factor simplices whose hull regions fit.
        let mut cells = Vec::new();
        let mut stack: Vec<(Vec<u32>, Q)> = vec![(Vec::new(), Q::zero())];
        while let Some((prefix, used)) = stack.pop() {
            let f = prefix.len();
            if f == factors.len() {
                cells.push(Polysimplex(prefix));
                if cells.len() > budget {
                    return Err(Error::BudgetExceeded { cells: cells.len(), budget });
                }
                continue;
            }
            let table = &factors[f];
            for s in 0..table.simplices.len() {
                let total = used + table.region_max2[s];
                if total <= r2 {
                    let mut p = prefix.clone();
                    p.push(s as u32);
                    stack.push((p, total));
                }
            }
        }
        let base_parts: Vec<u32> = factors
            .iter()
            .map(|t| {
                let origin = t.vertices.iter().position(|v| v.iter().all(Zero::is_zero)).unwrap();
                t.simplex_id(&[origin as u32]).unwrap()
            })
            .collect();
        Self::assemble(
            ComplexKind::Apartment,
            Some(datum.clone()),
            radius,
            None,
            factors,
            cells,
            Polysimplex(base_parts),
        )
    }

    /// Ball of the given depth around the root of the `(q+1)`-regular tree.
    pub fn tree(branching: usize, depth: usize, budget: usize) -> Result<Self> {
        let qb = branching;
        if qb < 1 {
            return Err(Error::InvalidParameter(String::from("tree branching q must be at least 1")));
        }
        if depth < 1 {
            return Err(Error::InvalidParameter(String::from("tree depth must be at least 1")));
        }
        let mut nverts: usize = 1;
        let mut level_count: usize = 1;
        for k in 1..=depth {
            level_count = level_count.saturating_mul(if k == 1 { qb + 1 } else { qb });
            nverts = nverts.saturating_add(level_count);
            if nverts.saturating_mul(2) > budget {
                return Err(Error::BudgetExceeded { cells: nverts.saturating_mul(2), budget });
            }
        }
        let mut tree = TreeData {
            q: qb,
            depth,
            parent: vec![None],
            level: vec![0],
            children: vec![Vec::new()],
            words: vec![Vec::new()],
        };
        let mut queue = VecDeque::from([0u32]);
        while let Some(v) = queue.pop_front() {
            let lvl = tree.level[v as usize];
            if lvl == depth {
                continue;
            }
            let branches = if lvl == 0 { qb + 1 } else { qb };
            for b in 0..branches {
                let id = tree.parent.len() as u32;
                let mut w = tree.words[v as usize].clone();
                w.push(b as u32);
                tree.parent.push(Some(v));
                tree.level.push(lvl + 1);
                tree.children.push(Vec::new());
                tree.words.push(w);
                tree.children[v as usize].push(id);
                queue.push_back(id);
            }
        }
        let n = tree.parent.len();
        let mut simplices: Vec<Vec<u32>> = (0..n as u32).map(|v| vec![v]).collect();
        for v in 1..n as u32 {
            simplices.push(vec![tree.parent[v as usize].unwrap(), v]);
        }
        let mut table = FactorTable {
            vertices: vec![Vec::new(); n],
            simplex_index: BTreeMap::new(),
            vertex_simplices: vec![Vec::new(); n],
            vertex_dist2: tree.level.iter().map(|&l| q(l as i128 * l as i128)).collect(),
            min_dist2: Vec::new(),
            max_vertex_dist2: Vec::new(),
            region_max2: Vec::new(),
            region_simplices: Vec::new(),
            root_values: Vec::new(),
            scale: 1,
            positive_roots: Vec::new(),
            weyl_action: Vec::new(),
            simplices,
        };
        for (i, s) in table.simplices.iter().enumerate() {
            table.simplex_index.insert(s.clone(), i as u32);
            for &v in s {
                table.vertex_simplices[v as usize].push(i as u32);
            }
            let lv: Vec<usize> = s.iter().map(|&v| tree.level[v as usize]).collect();
            let lo = *lv.iter().min().unwrap() as i128;
            let hi = *lv.iter().max().unwrap() as i128;
            table.min_dist2.push(q(lo * lo));
            table.max_vertex_dist2.push(q(hi * hi));
            table.region_max2.push(q(hi * hi));
        }
        let cells = (0..table.simplices.len() as u32).map(|s| Polysimplex(vec![s])).collect();
        Self::assemble(
            ComplexKind::Tree,
            None,
            q(depth as i128),
            Some(tree),
            vec![table],
            cells,
            Polysimplex(vec![0]),
        )
    }

    fn assemble(
        kind: ComplexKind,
        datum: Option<RootDatum>,
        radius: Q,
        tree: Option<TreeData>,
        factors: Vec<FactorTable>,
        mut cells: Vec<Polysimplex>,
        base: Polysimplex,
    ) -> Result<Self> {
        let dim_of = |c: &Polysimplex| -> usize {
            c.0.iter().zip(&factors).map(|(&s, t)| t.dim(s)).sum()
        };
        cells.sort_by(|a, b| (dim_of(a), a).cmp(&(dim_of(b), b)));
        cells.dedup();
        let dims: Vec<usize> = cells.iter().map(dim_of).collect();
        let top = dims.last().copied().unwrap_or(0);
        let mut by_dim = Vec::new();
        let mut start = 0;
        for d in 0..=top {
            let end = start + dims[start..].iter().take_while(|&&x| x == d).count();
            by_dim.push(start..end);
            start = end;
        }
        let index: BTreeMap<Polysimplex, usize> =
            cells.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();

        let mut boundary = Vec::with_capacity(cells.len());
        let mut cofaces = vec![Vec::new(); cells.len()];
        for (i, c) in cells.iter().enumerate() {
            let mut terms = Vec::new();
            let mut koszul = 0usize;
            for (f, &s) in c.0.iter().enumerate() {
                let table = &factors[f];
                let verts = &table.simplices[s as usize];
                if verts.len() > 1 {
                    for drop in 0..verts.len() {
                        let face: Vec<u32> =
                            verts.iter().enumerate().filter(|(k, _)| *k != drop).map(|(_, v)| *v).collect();
                        let fs = table.simplex_id(&face).ok_or_else(|| {
                            Error::Internal(String::from("factor face missing from table"))
                        })?;
                        let mut parts = c.0.clone();
                        parts[f] = fs;
                        let j = *index.get(&Polysimplex(parts)).ok_or_else(|| {
                            Error::Internal(String::from("complex is not face-closed"))
                        })?;
                        let sign = if (drop + koszul) % 2 == 0 { 1 } else { -1 };
                        terms.push((j, sign));
                        cofaces[j].push(i);
                    }
                }
                koszul += verts.len() - 1;
            }
            terms.sort();
            boundary.push(terms);
        }
        let dist2 = cells
            .iter()
            .map(|c| c.0.iter().zip(&factors).fold(Q::zero(), |a, (&s, t)| a + t.min_dist2[s as usize]))
            .collect();
        let base = *index.get(&base).ok_or(Error::CellNotInComplex)?;
        Ok(Complex { kind, datum, radius, tree, factors, cells, index, dims, by_dim, boundary, cofaces, dist2, base })
    }

    pub fn kind(&self) -> ComplexKind {
        self.kind
    }

    pub fn datum(&self) -> Option<&RootDatum> {
        self.datum.as_ref()
    }

    pub fn tree_data(&self) -> Option<&TreeData> {
        self.tree.as_ref()
    }

    pub fn radius(&self) -> Q {
        self.radius
    }

    pub fn factors(&self) -> &[FactorTable] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, i: usize) -> &Polysimplex {
        &self.cells[i]
    }

    pub fn index_of(&self, c: &Polysimplex) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn top_dim(&self) -> usize {
        self.by_dim.len() - 1
    }

    pub fn cells_of_dim(&self, d: usize) -> Range<usize> {
        self.by_dim.get(d).cloned().unwrap_or(0..0)
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        self.by_dim.iter().map(|r| r.len()).collect()
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Signed codimension-one faces of a cell.
    pub fn faces(&self, i: usize) -> &[(usize, i32)] {
        &self.boundary[i]
    }

    pub fn cofaces(&self, i: usize) -> &[usize] {
        &self.cofaces[i]
    }

    /// Incidence number `[σ:τ]`.
    pub fn incidence(&self, sigma: usize, tau: usize) -> i32 {
        self.boundary[sigma].iter().find(|(t, _)| *t == tau).map_or(0, |(_, s)| *s)
    }

    /// Squared distance from the base vertex to the closed cell.
    pub fn dist2(&self, i: usize) -> Q {
        self.dist2[i]
    }

    /// Vertex cells of a cell.
    pub fn vertices(&self, i: usize) -> Vec<usize> {
        let mut parts: Vec<Vec<u32>> = vec![Vec::new()];
        for (f, &s) in self.cells[i].0.iter().enumerate() {
            let table = &self.factors[f];
            let mut next = Vec::new();
            for p in &parts {
                for &v in &table.simplices[s as usize] {
                    let mut np = p.clone();
                    np.push(table.simplex_id(&[v]).unwrap());
                    next.push(np);
                }
            }
            parts = next;
        }
        parts.into_iter().map(|p| self.index[&Polysimplex(p)]).collect()
    }

    /// Global coordinates of a vertex cell (apartments only).
    pub fn vertex_point(&self, v: usize) -> Point {
        let mut out = Vec::new();
        for (f, &s) in self.cells[v].0.iter().enumerate() {
            let t = &self.factors[f];
            out.extend(t.vertices[t.simplices[s as usize][0] as usize].iter().copied());
        }
        out
    }

    pub fn barycenter(&self, i: usize) -> Point {
        let verts = self.vertices(i);
        let n = q(verts.len() as i128);
        let mut acc: Point = Vec::new();
        for v in verts {
            let p = self.vertex_point(v);
            if acc.is_empty() {
                acc = p;
            } else {
                for (a, b) in acc.iter_mut().zip(p) {
                    *a += b;
                }
            }
        }
        acc.into_iter().map(|x| x / n).collect()
    }

    /// Human-readable vertex description per factor, in orientation order.
    pub fn describe_vertices(&self, i: usize) -> Vec<Vec<String>> {
        self.cells[i]
            .0
            .iter()
            .enumerate()
            .map(|(f, &s)| {
                let t = &self.factors[f];
                t.simplices[s as usize]
                    .iter()
                    .map(|&v| match &self.tree {
                        Some(tree) => {
                            let w: Vec<String> = tree.words[v as usize].iter().map(|d| format!("{d}")).collect();
                            format!("[{}]", w.join(","))
                        }
                        None => {
                            let c: Vec<String> = t.vertices[v as usize].iter().map(|x| format!("{x}")).collect();
                            format!("({})", c.join(","))
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// All cells whose closure contains the given cell.
    pub fn star(&self, i: usize) -> Star {
        let mut seen = BTreeSet::from([i]);
        let mut queue = VecDeque::from([i]);
        while let Some(c) = queue.pop_front() {
            for &up in &self.cofaces[c] {
                if seen.insert(up) {
                    queue.push_back(up);
                }
            }
        }
        let partial = match self.kind {
            ComplexKind::Tree => {
                let tree = self.tree.as_ref().unwrap();
                let s = &self.factors[0].simplices[self.cells[i].0[0] as usize];
                s.len() == 1 && tree.level[s[0] as usize] == tree.depth
            }
            ComplexKind::Apartment => {
                // Compare with the product of the untruncated factor stars.
                let mut expected = 1usize;
                for (f, &s) in self.cells[i].0.iter().enumerate() {
                    let t = &self.factors[f];
                    let verts = &t.simplices[s as usize];
                    let count = t.vertex_simplices[verts[0] as usize]
                        .iter()
                        .filter(|&&o| verts.iter().all(|v| t.simplices[o as usize].contains(v)))
                        .count();
                    expected *= count;
                }
                expected != seen.len()
            }
        };
        Star { cells: seen.into_iter().collect(), partial }
    }

    /// Whether a set of cells is closed under taking faces.
    pub fn is_face_closed(&self, cells: &[usize]) -> bool {
        let set: BTreeSet<usize> = cells.iter().copied().collect();
        cells.iter().all(|&c| self.boundary[c].iter().all(|(f, _)| set.contains(f)))
    }

    /// Hull of a set of cells: the smallest convex subcomplex of the
    /// apartment (intersection of root half-spaces bounded by walls) or
    /// the subtree spanned by the cells. Fails if the hull leaves the
    /// complex.
    pub fn hull_of_cells(&self, cells: &[usize]) -> Result<Vec<usize>> {
        match self.kind {
            ComplexKind::Tree => Ok(self.tree_hull(cells)),
            ComplexKind::Apartment => {
                let mut per_factor: Vec<Vec<u32>> = Vec::new();
                for (f, t) in self.factors.iter().enumerate() {
                    let mut verts = BTreeSet::new();
                    for &c in cells {
                        verts.extend(t.simplices[self.cells[c].0[f] as usize].iter().copied());
                    }
                    let region = t.region_of_vertices(verts);
                    per_factor.push(t.region_simplices_of(&region));
                }
                let first = *cells.first().unwrap_or(&self.base);
                self.product_cells(&per_factor).ok_or(Error::HullClipped { cell: first })
            }
        }
    }

    /// Hull of a cell together with the base vertex.
    pub fn hull_with_base(&self, i: usize) -> Result<Vec<usize>> {
        match self.kind {
            ComplexKind::Tree => Ok(self.tree_hull(&[i, self.base])),
            ComplexKind::Apartment => {
                let mut per_factor = Vec::new();
                for (f, t) in self.factors.iter().enumerate() {
                    let s = self.cells[i].0[f] as usize;
                    match &t.region_simplices[s] {
                        Some(r) => per_factor.push(r.clone()),
                        None => return Err(Error::HullClipped { cell: i }),
                    }
                }
                self.product_cells(&per_factor).ok_or(Error::HullClipped { cell: i })
            }
        }
    }

    /// Defining inequalities `lo ≤ α(x) ≤ hi` of the hull of a cell and the
    /// base vertex, as (root index, lo, hi).
    pub fn hull_inequalities(&self, i: usize) -> Vec<(usize, Q, Q)> {
        let mut out = Vec::new();
        if self.kind == ComplexKind::Tree {
            return out;
        }
        for (f, t) in self.factors.iter().enumerate() {
            let s = self.cells[i].0[f] as usize;
            let region = t.region_of_vertices(t.simplices[s].iter().copied());
            for (k, &(lo, hi)) in region.bounds.iter().enumerate() {
                out.push((t.positive_roots[k], Q::new(lo as i128, t.scale as i128), Q::new(hi as i128, t.scale as i128)));
            }
        }
        out
    }

    fn product_cells(&self, per_factor: &[Vec<u32>]) -> Option<Vec<usize>> {
        let mut combos: Vec<Vec<u32>> = vec![Vec::new()];
        for list in per_factor {
            let mut next = Vec::with_capacity(combos.len() * list.len());
            for c in &combos {
                for &s in list {
                    let mut n = c.clone();
                    n.push(s);
                    next.push(n);
                }
            }
            combos = next;
        }
        let mut out = Vec::with_capacity(combos.len());
        for c in combos {
            out.push(*self.index.get(&Polysimplex(c))?);
        }
        out.sort_unstable();
        Some(out)
    }

    fn tree_hull(&self, cells: &[usize]) -> Vec<usize> {
        let tree = self.tree.as_ref().unwrap();
        let t = &self.factors[0];
        let mut verts = BTreeSet::new();
        for &c in cells {
            verts.extend(t.simplices[self.cells[c].0[0] as usize].iter().copied());
        }
        let Some(&first) = verts.iter().next() else { return Vec::new() };
        let mut on_paths = BTreeSet::new();
        for &v in &verts {
            for p in tree_path(tree, first, v) {
                on_paths.insert(p);
            }
        }
        let mut out = Vec::new();
        for &v in &on_paths {
            out.push(self.index[&Polysimplex(vec![v])]);
            if let Some(p) = tree.parent[v as usize] {
                if on_paths.contains(&p) {
                    let e = t.simplex_id(&[p, v]).unwrap();
                    out.push(self.index[&Polysimplex(vec![e])]);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Whether a face-closed cell set equals its own hull.
    pub fn is_convex(&self, cells: &[usize]) -> Result<bool> {
        if !self.is_face_closed(cells) {
            return Err(Error::NotFaceClosed);
        }
        if cells.is_empty() {
            return Ok(true);
        }
        let mut set: Vec<usize> = cells.to_vec();
        set.sort_unstable();
        set.dedup();
        match self.hull_of_cells(&set) {
            Ok(h) => Ok(h == set),
            Err(Error::HullClipped { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Signed permutations of the cells induced by the symmetry group used
    /// for equivariance: the finite Weyl group for apartments (all
    /// elements, identity first) and child-swapping generators for trees.
    pub fn symmetries(&self) -> Vec<Vec<(usize, i32)>> {
        match self.kind {
            ComplexKind::Apartment => {
                let datum = self.datum.as_ref().unwrap();
                datum.weyl_elements().iter().map(|w| self.weyl_action(w)).collect()
            }
            ComplexKind::Tree => self.tree_generators(),
        }
    }

    pub fn weyl_action(&self, w: &WeylElement) -> Vec<(usize, i32)> {
        self.cells
            .iter()
            .map(|c| {
                let mut sign = 1;
                let mut parts = Vec::with_capacity(c.0.len());
                for (f, &s) in c.0.iter().enumerate() {
                    let (img, sg) = self.factors[f].weyl_action[w.0[f]][s as usize];
                    parts.push(img);
                    sign *= sg;
                }
                (self.index[&Polysimplex(parts)], sign)
            })
            .collect()
    }

    fn tree_generators(&self) -> Vec<Vec<(usize, i32)>> {
        let tree = self.tree.as_ref().unwrap();
        let t = &self.factors[0];
        let word_index: BTreeMap<&[u32], u32> =
            tree.words.iter().enumerate().map(|(i, w)| (w.as_slice(), i as u32)).collect();
        let mut gens = Vec::new();
        for u in 0..tree.parent.len() {
            let kids = tree.children[u].len();
            for b in 0..kids.saturating_sub(1) {
                let pos = tree.level[u];
                let swap = |v: u32| -> u32 {
                    let w = &tree.words[v as usize];
                    if w.len() > pos && w[..pos] == tree.words[u][..] && (w[pos] == b as u32 || w[pos] == b as u32 + 1) {
                        let mut nw = w.clone();
                        nw[pos] = if w[pos] == b as u32 { b as u32 + 1 } else { b as u32 };
                        word_index[nw.as_slice()]
                    } else {
                        v
                    }
                };
                let perm = self
                    .cells
                    .iter()
                    .map(|c| {
                        let verts: Vec<u32> = t.simplices[c.0[0] as usize].iter().map(|&v| swap(v)).collect();
                        let (sorted, sign) = sort_with_sign(verts);
                        let s = t.simplex_id(&sorted).unwrap();
                        (self.index[&Polysimplex(vec![s])], sign)
                    })
                    .collect();
                gens.push(perm);
            }
        }
        gens
    }

    /// The boundary of a chain; degree 0 chains map to the augmentation.
    pub fn boundary_chain(&self, c: &Chain) -> Result<Chain> {
        if c.degree < 0 {
            return Err(Error::DegreeMismatch { expected: 0, found: c.degree });
        }
        let mut out = Chain::zero(c.degree - 1);
        for (&cell, &coef) in &c.terms {
            if cell >= self.cells.len() || self.dims[cell] as i32 != c.degree {
                return Err(Error::CellNotInComplex);
            }
            if c.degree == 0 {
                out.add(0, coef);
            } else {
                for &(f, s) in &self.boundary[cell] {
                    out.add(f, coef * q(s as i128));
                }
            }
        }
        Ok(out)
    }

    pub fn cell_chain(&self, i: usize) -> Chain {
        Chain::unit(self.dims[i] as i32, i)
    }

    /// Boundary matrix from degree `n` to degree `n-1` (augmentation when
    /// `n = 0`), rows and columns in cell order.
    pub fn boundary_matrix(&self, n: usize) -> Matrix {
        let cols = self.cells_of_dim(n);
        if n == 0 {
            let mut m = Matrix::zeros(1, cols.len());
            for j in 0..cols.len() {
                m[(0, j)] = Q::one();
            }
            return m;
        }
        let rows = self.cells_of_dim(n - 1);
        let mut m = Matrix::zeros(rows.len(), cols.len());
        for (j, c) in cols.clone().enumerate() {
            for &(f, s) in &self.boundary[c] {
                m[(f - rows.start, j)] = q(s as i128);
            }
        }
        m
    }
}

/// Sparse chain of a fixed degree; degree `-1` chains carry a single scalar
/// at key 0. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub degree: i32,
    terms: BTreeMap<usize, Q>,
}

impl Chain {
    pub fn zero(degree: i32) -> Self {
        Chain { degree, terms: BTreeMap::new() }
    }

    pub fn unit(degree: i32, cell: usize) -> Self {
        let mut c = Self::zero(degree);
        c.add(cell, Q::one());
        c
    }

    pub fn scalar(v: Q) -> Self {
        let mut c = Self::zero(-1);
        c.add(0, v);
        c
    }

    pub fn add(&mut self, cell: usize, coef: Q) {
        if coef.is_zero() {
            return;
        }
        let e = self.terms.entry(cell).or_insert_with(Q::zero);
        *e += coef;
        if e.is_zero() {
            self.terms.remove(&cell);
        }
    }

    /// Adds `coef · (sign σ)`: the oppositely oriented cell contributes with
    /// negated coefficient.
    pub fn add_oriented(&mut self, cell: usize, sign: i32, coef: Q) {
        self.add(cell, if sign < 0 { -coef } else { coef });
    }

    pub fn add_chain(&mut self, other: &Chain, factor: Q) {
        debug_assert_eq!(self.degree, other.degree);
        for (&c, &v) in &other.terms {
            self.add(c, v * factor);
        }
    }

    pub fn scaled(&self, factor: Q) -> Chain {
        let mut out = Chain::zero(self.degree);
        out.add_chain(self, factor);
        out
    }

    pub fn get(&self, cell: usize) -> Q {
        self.terms.get(&cell).copied().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, Q)> + '_ {
        self.terms.iter().map(|(&c, &v)| (c, v))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Image under a signed cell permutation.
    pub fn permuted(&self, action: &[(usize, i32)]) -> Chain {
        if self.degree < 0 {
            return self.clone();
        }
        let mut out = Chain::zero(self.degree);
        for (&c, &v) in &self.terms {
            let (img, s) = action[c];
            out.add_oriented(img, s, v);
        }
        out
    }
}

fn tree_path(tree: &TreeData, a: u32, b: u32) -> Vec<u32> {
    let mut up_a = vec![a];
    let mut up_b = vec![b];
    let (mut x, mut y) = (a, b);
    while tree.level[x as usize] > tree.level[y as usize] {
        x = tree.parent[x as usize].unwrap();
        up_a.push(x);
    }
    while tree.level[y as usize] > tree.level[x as usize] {
        y = tree.parent[y as usize].unwrap();
        up_b.push(y);
    }
    while x != y {
        x = tree.parent[x as usize].unwrap();
        y = tree.parent[y as usize].unwrap();
        up_a.push(x);
        up_b.push(y);
    }
    up_b.pop();
    up_a.extend(up_b.into_iter().rev());
    up_a
}

fn sort_with_sign(mut v: Vec<u32>) -> (Vec<u32>, i32) {
    let mut sign = 1;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    (v, sign)
}

/// Smallest integer `k ≥ 0` with `k² ≥ x`.
pub fn isqrt_ceil(x: &Q) -> i128 {
    let mut k = 0i128;
    while q(k * k) < *x {
        k += 1;
    }
    k
}

/// Squared distance from the origin to the closed simplex with the given
/// vertices, in one factor of the datum.
pub fn simplex_dist2(datum: &RootDatum, factor: usize, verts: &[Point]) -> Q {
    let f = &datum.factors[factor];
    let n = verts.len();
    let mut best: Option<Q> = None;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let v0 = &verts[idx[0]];
        let edges: Vec<Point> =
            idx[1..].iter().map(|&i| verts[i].iter().zip(v0).map(|(a, b)| a - b).collect()).collect();
        let k = edges.len();
        let t = if k == 0 {
            Vec::new()
        } else {
            let mut g = Matrix::zeros(k, k);
            let mut rhs = vec![Q::zero(); k];
            for i in 0..k {
                for j in 0..k {
                    g[(i, j)] = datum.factor_inner(f, &edges[i], &edges[j]);
                }
                rhs[i] = -datum.factor_inner(f, v0, &edges[i]);
            }
            match g.solve(&rhs) {
                Some(t) => t,
                None => continue,
            }
        };
        let sum: Q = t.iter().fold(Q::zero(), |a, b| a + b);
        if t.iter().any(|x| *x < Q::zero()) || sum > Q::one() {
            continue;
        }
        let mut p = v0.clone();
        for (ti, e) in t.iter().zip(&edges) {
            for (pi, ei) in p.iter_mut().zip(e) {
                *pi += ti * ei;
            }
        }
        let d = datum.factor_inner(f, &p, &p);
        if best.map_or(true, |b| d < b) {
            best = Some(d);
        }
    }
    best.expect("single vertices are always candidates")
}

fn build_factor_table(datum: &RootDatum, fi: usize, enum_r2: Q, r2: Q, budget: usize) -> Result<FactorTable> {
    let f = &datum.factors[fi];
    let positive_roots: Vec<usize> = f.roots.iter().copied().filter(|&r| datum.roots[r].is_positive()).collect();

    let origin = vec![Q::zero(); f.rank];
    // Breadth-first walk over alcoves whose closure meets the ball.
    let start: Vec<Point> = {
        let mut v = f.alcove_vertices();
        v.sort();
        v
    };
    let mut seen: BTreeSet<Vec<Point>> = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut alcoves = Vec::new();
    while let Some(alc) = queue.pop_front() {
        for drop in 0..alc.len() {
            let facet: Vec<&Point> = alc.iter().enumerate().filter(|(k, _)| *k != drop).map(|(_, p)| p).collect();
            let (root, k) = positive_roots
                .iter()
                .find_map(|&r| {
                    let root = &datum.roots[r];
                    let v0 = RootDatum::root_value_local(root, facet[0]);
                    (v0.is_integer() && facet.iter().all(|p| RootDatum::root_value_local(root, p) == v0))
                        .then_some((root, v0))
                })
                .ok_or_else(|| Error::Internal(String::from("alcove facet lies on no wall")))?;
            let v = &alc[drop];
            let shift = RootDatum::root_value_local(root, v) - k;
            let reflected: Point =
                v.iter().zip(&root.coroot).map(|(a, &c)| a - shift * q(c as i128)).collect();
            let mut next: Vec<Point> = facet.into_iter().cloned().collect();
            next.push(reflected);
            next.sort();
            if seen.contains(&next) {
                continue;
            }
            let near = next.iter().any(|p| datum.factor_dist2(f, p, &origin) <= enum_r2);
            if near || simplex_dist2(datum, fi, &next) <= enum_r2 {
                seen.insert(next.clone());
                queue.push_back(next);
                if seen.len() > budget {
                    return Err(Error::BudgetExceeded { cells: seen.len(), budget });
                }
            }
        }
        alcoves.push(alc);
    }

    let mut all_vertices: BTreeSet<Point> = BTreeSet::new();
    for a in &alcoves {
        all_vertices.extend(a.iter().cloned());
    }
    let vertices: Vec<Point> = all_vertices.into_iter().collect();
    let vertex_index: BTreeMap<Point, u32> =
        vertices.iter().cloned().enumerate().map(|(i, p)| (p, i as u32)).collect();
    let mut simplex_set: BTreeSet<(usize, Vec<u32>)> = BTreeSet::new();
    for a in &alcoves {
        let ids: Vec<u32> = a.iter().map(|p| vertex_index[p]).collect();
        for mask in 1u32..(1 << ids.len()) {
            let mut s: Vec<u32> = (0..ids.len()).filter(|i| mask & (1 << i) != 0).map(|i| ids[i]).collect();
            s.sort_unstable();
            simplex_set.insert((s.len(), s));
        }
    }
    let simplices: Vec<Vec<u32>> = simplex_set.into_iter().map(|(_, s)| s).collect();
    let mut simplex_index = BTreeMap::new();
    let mut vertex_simplices = vec![Vec::new(); vertices.len()];
    for (i, s) in simplices.iter().enumerate() {
        simplex_index.insert(s.clone(), i as u32);
        for &v in s {
            vertex_simplices[v as usize].push(i as u32);
        }
    }

    let vertex_dist2: Vec<Q> = vertices.iter().map(|v| datum.factor_dist2(f, v, &origin)).collect();
    let scale = vertices.iter().flatten().fold(1i128, |acc, x| lcm(acc, *x.denom())) as i64;
    let root_values: Vec<Vec<i64>> = vertices
        .iter()
        .map(|v| {
            positive_roots
                .iter()
                .map(|&r| {
                    let val = RootDatum::root_value_local(&datum.roots[r], v) * q(scale as i128);
                    debug_assert!(val.is_integer());
                    val.to_integer() as i64
                })
                .collect()
        })
        .collect();

    let mut table = FactorTable {
        vertices,
        simplices,
        simplex_index,
        vertex_simplices,
        vertex_dist2,
        min_dist2: Vec::new(),
        max_vertex_dist2: Vec::new(),
        region_max2: Vec::new(),
        region_simplices: Vec::new(),
        root_values,
        scale,
        positive_roots,
        weyl_action: Vec::new(),
    };

    for s in 0..table.simplices.len() {
        let verts = table.simplices[s].clone();
        let maxv = verts.iter().map(|&v| table.vertex_dist2[v as usize]).max().unwrap();
        table.max_vertex_dist2.push(maxv);
        if maxv > r2 {
            // Never part of a cell.
            let minv = verts.iter().map(|&v| table.vertex_dist2[v as usize]).min().unwrap();
            table.min_dist2.push(minv);
            table.region_max2.push(maxv);
            table.region_simplices.push(None);
            continue;
        }
        let pts: Vec<Point> = verts.iter().map(|&v| table.vertices[v as usize].clone()).collect();
        table.min_dist2.push(simplex_dist2(datum, fi, &pts));
        let region = table.region_of_vertices(verts.iter().copied());
        let rmax = table
            .region_vertices(&region)
            .iter()
            .map(|&v| table.vertex_dist2[v as usize])
            .max()
            .unwrap_or_else(Q::zero);
        table.region_max2.push(rmax);
        table.region_simplices.push((rmax <= r2).then(|| table.region_simplices_of(&region)));
    }

    // Factor Weyl action on simplices; simplices whose image leaves the
    // table map to themselves (they never occur in a cell).
    for m in &f.weyl {
        let vmap: Vec<Option<u32>> = table
            .vertices
            .iter()
            .map(|v| vertex_index_lookup(&table, &apply_int(m, v)))
            .collect();
        let action = table
            .simplices
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if table.max_vertex_dist2[i] > r2 {
                    return (i as u32, 0);
                }
                let img: Option<Vec<u32>> = s.iter().map(|&v| vmap[v as usize]).collect();
                match img {
                    Some(img) => {
                        let (sorted, sign) = sort_with_sign(img);
                        match table.simplex_id(&sorted) {
                            Some(id) => (id, sign),
                            None => (i as u32, 0),
                        }
                    }
                    None => (i as u32, 0),
                }
            })
            .collect();
        table.weyl_action.push(action);
    }
    Ok(table)
}

fn vertex_index_lookup(table: &FactorTable, p: &Point) -> Option<u32> {
    table.vertices.binary_search(p).ok().map(|i| i as u32)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i128, b: i128) -> i128 {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qf;

    fn apt(s: &str, r: Q) -> Complex {
        Complex::apartment(&RootDatum::parse(s).unwrap(), r, crate::DEFAULT_CELL_BUDGET).unwrap()
    }

    fn euler(c: &Complex) -> i64 {
        c.count_by_dim().iter().enumerate().map(|(d, &n)| if d % 2 == 0 { n as i64 } else { -(n as i64) }).sum()
    }

    #[test]
    fn a1_line() {
        let c = apt("A1", q(2));
        assert_eq!(c.count_by_dim(), vec![5, 4]);
        let xs: Vec<Point> = c.cells_of_dim(0).map(|v| c.vertex_point(v)).collect();
        assert_eq!(xs, (-2..=2).map(|k| vec![q(k)]).collect::<Vec<_>>());
        // edge [0,1] has boundary v1 - v0
        let e = c
            .cells_of_dim(1)
            .find(|&e| c.vertices(e).iter().map(|&v| c.vertex_point(v)[0]).min() == Some(q(0)))
            .unwrap();
        let b = c.boundary_chain(&c.cell_chain(e)).unwrap();
        let v0 = c.base();
        let v1 = c.cells_of_dim(0).find(|&v| c.vertex_point(v) == vec![q(1)]).unwrap();
        let mut expect = Chain::zero(0);
        expect.add(v1, q(1));
        expect.add(v0, q(-1));
        assert_eq!(b, expect);
        let aug = c.boundary_chain(&c.cell_chain(v0)).unwrap();
        assert_eq!(aug, Chain::scalar(q(1)));
    }

    #[test]
    fn a2_radius_one_is_hexagonal_star() {
        let c = apt("A2", q(1));
        assert_eq!(c.count_by_dim(), vec![7, 12, 6]);
        assert_eq!(euler(&c), 1);
        let all: Vec<usize> = (0..c.len()).collect();
        assert!(c.is_convex(&all).unwrap());
    }

    #[test]
    fn a1_squared_boundary_signs() {
        let c = apt("A1^2", qf(3, 2));
        let sq = c.cells_of_dim(2).next().unwrap();
        let mut signs: Vec<i32> = c.faces(sq).iter().map(|&(_, s)| s).collect();
        signs.sort();
        assert_eq!(signs, vec![-1, -1, 1, 1]);
    }

    #[test]
    fn tree_counts() {
        let t = Complex::tree(1, 3, 1000).unwrap();
        assert_eq!(t.count_by_dim(), vec![7, 6]);
        let t = Complex::tree(2, 2, 1000).unwrap();
        assert_eq!(t.count_by_dim(), vec![10, 9]);
        assert!(matches!(Complex::tree(3, 10, 1000), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(Complex::tree(0, 2, 1000), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn boundary_squares_to_zero() {
        for c in [apt("A2", q(3)), apt("B2", q(2)), apt("G2", q(2)), apt("A2xA1", q(2)), apt("A1^3", q(2))] {
            for i in 0..c.len() {
                if c.dim(i) == 0 {
                    continue;
                }
                let b = c.boundary_chain(&c.cell_chain(i)).unwrap();
                let bb = c.boundary_chain(&b).unwrap();
                assert!(bb.is_zero());
                for &(_, s) in c.faces(i) {
                    assert!(s == 1 || s == -1);
                }
                assert_eq!(c.faces(i).len(), {
                    let cell = c.cell(i);
                    cell.0.iter().zip(c.factors()).map(|(&s, t)| if t.dim(s) > 0 { t.dim(s) + 1 } else { 0 }).sum::<usize>()
                });
            }
        }
    }

    #[test]
    fn cells_within_radius() {
        let c = apt("B2", q(3));
        for v in c.cells_of_dim(0) {
            assert!(c.datum().unwrap().norm2(&c.vertex_point(v)) <= q(9));
        }
    }

    #[test]
    fn budget_and_radius_errors() {
        let rd = RootDatum::parse("A2").unwrap();
        assert!(matches!(Complex::apartment(&rd, qf(1, 2), 1000), Err(Error::InvalidParameter(_))));
        assert!(matches!(Complex::apartment(&rd, q(6), 50), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn stars() {
        let c = apt("A1", q(3));
        let s = c.star(c.base());
        assert_eq!(s.cells.len(), 3);
        assert!(!s.partial);
        let far = c.cells_of_dim(0).find(|&v| c.vertex_point(v) == vec![q(3)]).unwrap();
        assert!(c.star(far).partial);

        let g = apt("A1^2", q(3));
        let s = g.star(g.base());
        assert_eq!(s.cells.len(), 9);
        assert!(!s.partial);
        let top = g.cells_of_dim(2).next().unwrap();
        assert_eq!(g.star(top).cells, vec![top]);
    }

    #[test]
    fn convexity() {
        let g = apt("A1^2", q(3));
        assert!(g.is_convex(&[g.base()]).unwrap());
        let opposite = g
            .cells_of_dim(0)
            .find(|&v| g.vertex_point(v) == vec![q(1), q(1)])
            .unwrap();
        assert!(!g.is_convex(&[g.base(), opposite]).unwrap());
        let e = g.cells_of_dim(1).next().unwrap();
        assert_eq!(g.is_convex(&[e]), Err(Error::NotFaceClosed));
        let t = Complex::tree(2, 3, 1000).unwrap();
        let all: Vec<usize> = (0..t.len()).collect();
        assert!(t.is_convex(&all).unwrap());
    }

    #[test]
    fn weyl_action_is_signed_automorphism() {
        let c = apt("A2", q(2));
        for act in c.symmetries() {
            for i in 0..c.len() {
                let (img, s) = act[i];
                let lhs = c.boundary_chain(&c.cell_chain(img).scaled(q(s as i128)));
                let rhs = c.boundary_chain(&c.cell_chain(i)).unwrap().permuted(&act);
                if c.dim(i) > 0 {
                    assert_eq!(lhs.unwrap(), rhs);
                }
            }
        }
    }
}
