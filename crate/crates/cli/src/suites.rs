//! One function per subcommand; each returns a report and optional plot
//! data without touching the filesystem.

use std::path::Path;

use polychain_core::coeff::{
    chain_complex, cyclic_model, describe_axioms, homology, induced_contraction_check, path_bump_model,
    sign_line_model, tree_filtration_model, tree_star_model, CoefficientSystem, FiniteModel,
};
use polychain_core::contraction::{build_contraction, verify_properties};
use polychain_core::hull::{diameter2, diameter_bound_report};
use polychain_core::linalg::{to_f64, Q};
use polychain_core::norms::{
    big_to_f64, constant_c, continuity_check, delta_dist2, length_estimate_violations, NormConstants,
    WeightedIndex, TAIL_TOLERANCE,
};
use polychain_core::torus::{cauchy_gaps, completed_solution, counterexample_witness, Profile};
use polychain_core::{Complex, RootDatum};
use serde_json::{json, Value};

use crate::config::{q_string, CliError, CliResult, Target};
use crate::export::{complex_json, contraction_json, homology_json, model_from_json, model_json};
use crate::report::{Check, Csv, Report, Status};

/// Cap on the number of hull regions whose homology is computed.
pub const HULL_SAMPLE: usize = 200;

/// Relative gap allowed between completed norms at `R` and `2R`.
pub const CAUCHY_GAP: f64 = 1.0 / 1024.0;

pub fn build(target: &Target, budget: usize) -> CliResult<Complex> {
    Ok(match target {
        Target::Apartment { system, radius } => Complex::apartment(&RootDatum::parse(system)?, *radius, budget)?,
        Target::Tree { branching, depth } => Complex::tree(*branching, *depth, budget)?,
    })
}

fn first<T: Clone>(v: &[T]) -> Vec<T> {
    v.iter().take(10).cloned().collect()
}

pub fn generate(target: &Target, budget: usize, with_contraction: bool) -> CliResult<(Report, Value)> {
    let c = build(target, budget)?;
    let mut r = Report::new("generate", json!({ "target": target, "budget": budget }));
    r.push(Check::new(
        "generation",
        "truncated complex around the base vertex",
        Status::ReportOnly,
        json!({ "cells": c.len(), "counts_by_dim": c.count_by_dim(), "top_dim": c.top_dim() }),
    ));
    let mut out = complex_json(&c);
    if with_contraction {
        let g = build_contraction(&c)?;
        out["contraction"] = contraction_json(&c, &g);
    }
    Ok((r, out))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Selection {
    pub homotopy: bool,
    pub hull: bool,
    pub diameter: bool,
    pub acyclicity: bool,
}

impl Selection {
    pub fn all() -> Self {
        Selection { homotopy: true, hull: true, diameter: true, acyclicity: true }
    }

    pub fn is_empty(&self) -> bool {
        *self == Selection::default()
    }
}

pub struct VerifyOutput {
    pub report: Report,
    pub csv: Csv,
    pub contraction: Option<Value>,
}

pub fn verify(target: &Target, sel: Selection, budget: usize, dump_contraction: bool) -> CliResult<VerifyOutput> {
    let c = build(target, budget)?;
    let mut r = Report::new(
        "verify",
        json!({ "target": target, "budget": budget, "selection": {
            "homotopy": sel.homotopy, "hull": sel.hull, "diameter": sel.diameter, "acyclicity": sel.acyclicity,
        }}),
    );
    r.push(Check::new(
        "generation",
        "truncated complex around the base vertex",
        Status::ReportOnly,
        json!({ "cells": c.len(), "counts_by_dim": c.count_by_dim() }),
    ));
    let mut contraction = None;
    if sel.homotopy || sel.hull {
        let g = build_contraction(&c)?;
        let p = verify_properties(&c, &g)?;
        if sel.homotopy {
            r.push(Check::new(
                "homotopy",
                "contraction satisfies the homotopy identity, augmentation included",
                Status::of(p.homotopy_failures.is_empty()),
                json!({
                    "cells_checked": p.cells_checked,
                    "failures": p.homotopy_failures.len(),
                    "first_failures": first(&p.homotopy_failures),
                    "orbit_representatives": g.orbit_representatives(),
                }),
            ));
            r.push(Check::new(
                "equivariance",
                "contraction commutes with the symmetries of the complex",
                Status::of(p.equivariance_failures.is_empty()),
                json!({
                    "symmetries_checked": p.symmetries_checked,
                    "failures": p.equivariance_failures.len(),
                    "first_failures": first(&p.equivariance_failures),
                }),
            ));
        }
        if sel.hull {
            r.push(Check::new(
                "hull_support",
                "contraction of a cell is supported in the hull of the cell and the base vertex",
                Status::of(p.support_failures.is_empty()),
                json!({ "failures": p.support_failures.len(), "first_failures": first(&p.support_failures) }),
            ));
            r.push(Check::new(
                "coefficient_bound",
                "contraction coefficients are bounded by a finite constant",
                Status::of(p.orbit_failures.is_empty()),
                json!({ "m_gamma": q_string(&p.m_gamma), "orbit_failures": p.orbit_failures.len() }),
            ));
            let grown = target.grown();
            let stable = match build(&grown, budget) {
                Ok(c2) => {
                    let g2 = build_contraction(&c2)?;
                    Some(g2.m_gamma())
                }
                Err(CliError::Core(polychain_core::Error::BudgetExceeded { .. })) => None,
                Err(e) => return Err(e),
            };
            r.push(Check::new(
                "coefficient_bound_stability",
                "coefficient bound agrees on two consecutive radii",
                match stable {
                    Some(m2) => Status::of(m2 == p.m_gamma),
                    None => Status::ReportOnly,
                },
                json!({
                    "grown_target": grown,
                    "m_gamma": q_string(&p.m_gamma),
                    "m_gamma_grown": stable.map(|m| q_string(&m)),
                }),
            ));
        }
        if dump_contraction {
            contraction = Some(contraction_json(&c, &g));
        }
    }
    if sel.diameter {
        let d = diameter_bound_report(&c)?;
        r.push(Check::new(
            "diameter_bound",
            "hull of a cell and the base vertex has diameter at most d(x0,cell) + d(x0,delta)",
            Status::of(d.passed()),
            json!({
                "cells_checked": d.cells_checked,
                "delta_dist2": q_string(&d.delta_dist2),
                "max_hull_diameter2": q_string(&d.max_hull_diameter2),
                "min_slack": d.min_slack,
                "max_slack": d.max_slack,
                "tightest_sigma_id": d.tightest_cell,
                "violations": first(&d.violations),
                "violation_count": d.violations.len(),
            }),
        ));
    }
    if sel.acyclicity {
        let all: Vec<usize> = (0..c.len()).collect();
        let h = homology(&c, &all, &CoefficientSystem::trivial(&all))?;
        r.push(Check::new(
            "acyclicity_complex",
            "augmented chain complex of a convex subcomplex is exact",
            match h.asserted_ok() {
                Some(ok) => Status::of(ok),
                None => Status::ReportOnly,
            },
            homology_json(&h),
        ));
        let stride = c.len().div_ceil(HULL_SAMPLE).max(1);
        let mut checked = 0;
        let mut failures = Vec::new();
        for s in (0..c.len()).step_by(stride) {
            let hull = c.hull_with_base(s)?;
            let h = homology(&c, &hull, &CoefficientSystem::trivial(&hull))?;
            checked += 1;
            if h.asserted_ok() != Some(true) {
                failures.push(s);
            }
        }
        r.push(Check::new(
            "acyclicity_hulls",
            "augmented chain complex of a convex subcomplex is exact",
            Status::of(failures.is_empty()),
            json!({ "hulls_checked": checked, "stride": stride, "failures": first(&failures) }),
        ));
    }
    let mut csv = Csv::new(&["distance", "hull_diameter", "bound", "dim"]);
    if sel.diameter {
        let dd = to_f64(&delta_dist2(&c)).sqrt();
        for s in 0..c.len() {
            let hull = c.hull_with_base(s)?;
            let d = to_f64(&c.dist2(s)).sqrt();
            csv.row(vec![
                format!("{d:.9}"),
                format!("{:.9}", to_f64(&diameter2(&c, &hull)).sqrt()),
                format!("{:.9}", d + dd),
                c.dim(s).to_string(),
            ]);
        }
    }
    Ok(VerifyOutput { report: r, csv, contraction })
}

pub const SHIPPED_MODELS: [&str; 5] = ["sign-line", "tree-filtration", "tree-star", "cyclic", "path-bump"];

pub fn shipped_model(name: &str, target: Option<&Target>, budget: usize) -> CliResult<(Complex, FiniteModel)> {
    let radius = match target {
        Some(Target::Apartment { radius, .. }) => {
            if !radius.is_integer() {
                return Err(CliError::Config("line models need an integer radius".into()));
            }
            *radius.numer()
        }
        _ => 3,
    };
    let (branching, depth) = match target {
        Some(Target::Tree { branching, depth }) => (*branching, *depth),
        _ => (2, 3),
    };
    Ok(match name {
        "sign-line" => sign_line_model(radius, budget)?,
        "cyclic" => cyclic_model(radius, budget)?,
        "path-bump" => path_bump_model(budget)?,
        "tree-filtration" => tree_filtration_model(branching, depth, budget)?,
        "tree-star" => tree_star_model(budget)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown model `{other}`; shipped models: {}",
                SHIPPED_MODELS.join(", ")
            )))
        }
    })
}

pub fn load_model(path: &Path, target: &Target, budget: usize) -> CliResult<(Complex, FiniteModel)> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: p.clone(), source })?;
    let v: Value = serde_json::from_str(&text).map_err(|source| CliError::Json { path: p.clone(), source })?;
    let c = build(target, budget)?;
    let m = model_from_json(&v, &c, &p)?;
    Ok((c, m))
}

pub fn export_model(name: &str, target: Option<&Target>, budget: usize) -> CliResult<Value> {
    let (c, m) = shipped_model(name, target, budget)?;
    Ok(model_json(&m, &c))
}

const ACYCLICITY_ANCHOR: &str =
    "augmented chain complex with invariant coefficients is exact and H0 maps onto the sum of vertex invariants";

pub fn verify_model(c: &Complex, m: &FiniteModel, config: Value) -> CliResult<Report> {
    let mut r = Report::new("verify", config);
    let ax = m.check_axioms(c);
    r.push(Check::new(
        "model_axioms",
        "subgroups satisfy conjugation, star fixing, vertex generation and the geodesic condition",
        Status::of(ax.passed()),
        json!({
            "model": m.name,
            "order": m.order(),
            "summary": describe_axioms(&ax),
            "conjugation_failures": ax.conjugation.len(),
            "star_failures": first(&ax.star_fixing),
            "vertex_generation_failures": first(&ax.vertex_generation),
            "geodesic_checked": ax.geodesic_checked,
            "geodesic_failures": ax.geodesic.len(),
        }),
    ));
    let all: Vec<usize> = (0..c.len()).collect();
    let sys = if ax.passed() { m.coefficient_system(c)? } else { m.fixed_space_system(c) };
    match homology(c, &all, &sys) {
        Ok(h) => {
            let status = match (ax.passed(), h.asserted_ok()) {
                (true, Some(ok)) => Status::of(ok),
                _ => Status::ReportOnly,
            };
            let mut metrics = homology_json(&h);
            metrics["space_dims"] =
                json!(all.iter().map(|&s| sys.space(s).map_or(0, |v| v.dim())).collect::<Vec<_>>());
            r.push(Check::new("model_acyclicity", ACYCLICITY_ANCHOR, status, metrics));
        }
        // only reachable for unvalidated systems
        Err(e @ polychain_core::Error::MissingInclusion { .. }) => {
            r.push(Check::new("model_acyclicity", ACYCLICITY_ANCHOR, Status::ReportOnly, json!({ "error": e.to_string() })));
        }
        Err(e) => return Err(e.into()),
    }
    if ax.passed() {
        let cm = chain_complex(c, &all, &sys)?;
        let mut ok = true;
        for g in 1..m.order() {
            for n in 1..cm.dims.len() {
                let lo = m.chain_action(&cm, &sys, g, n - 1)?;
                let hi = m.chain_action(&cm, &sys, g, n)?;
                ok &= lo.mul(&cm.boundary[n]) == cm.boundary[n].mul(&hi);
            }
        }
        r.push(Check::new(
            "orientation_character",
            "group acts on chains with orientation signs, commuting with the boundary",
            Status::of(ok),
            json!({ "elements_checked": m.order() - 1 }),
        ));
    }
    let g = build_contraction(c)?;
    let ind = induced_contraction_check(c, &sys, &g)?;
    r.push(Check::new(
        "induced_contraction",
        "contraction extends to invariant coefficients when its support respects the subspaces",
        match (ind.support_violations.is_empty(), ind.homotopy) {
            (true, Some(ok)) => Status::of(ok),
            _ => Status::ReportOnly,
        },
        json!({
            "hypothesis_met": ind.support_violations.is_empty(),
            "support_violations": ind.support_violations.len(),
            "first_violations": first(&ind.support_violations),
            "homotopy": ind.homotopy,
            "basis_vectors_checked": ind.basis_vectors_checked,
        }),
    ));
    Ok(r)
}

pub struct NormsOptions {
    pub m_list: Vec<u32>,
    pub trials: usize,
    pub seed: u64,
    pub counting_radius: Q,
    pub window: i64,
}

pub fn norms_bound(target: &Target, opts: &NormsOptions, budget: usize) -> CliResult<(Report, Csv)> {
    if opts.trials == 0 {
        return Err(CliError::Config("--trials must be positive".into()));
    }
    let c = build(target, budget)?;
    let counting = match target {
        Target::Apartment { system, radius } => {
            if opts.counting_radius < *radius {
                return Err(CliError::Config("counting radius must be at least the radius".into()));
            }
            Complex::apartment(&RootDatum::parse(system)?, opts.counting_radius, budget)?
        }
        Target::Tree { branching, .. } => {
            let d = opts.counting_radius.to_integer().max(1) as usize;
            Complex::tree(*branching, d, budget)?
        }
    };
    let g = build_contraction(&c)?;
    let k = NormConstants::certify(&c, &g, &counting)?;
    let wi = if opts.window == 0 { WeightedIndex::point() } else { WeightedIndex::window(opts.window) };
    let mut r = Report::new(
        "norms-bound",
        json!({
            "target": target,
            "budget": budget,
            "m": opts.m_list,
            "trials": opts.trials,
            "seed": opts.seed,
            "counting_radius": q_string(&opts.counting_radius),
            "window": opts.window,
        }),
    );
    let b: Vec<Value> = k
        .b
        .iter()
        .map(|b| {
            json!({
                "cell_dim": b.cell_dim,
                "growth_degree": b.fit.degree,
                "growth_slope": b.fit.slope,
                "shells": b.fit.shells,
                "partial_lower": big_to_f64(b.lower()),
                "extrapolated": b.extrapolated,
                "cutoff": b.cutoff,
                "tail_bound": b.tail_bound,
                "value": b.value,
            })
        })
        .collect();
    let tail_ok = k.b.iter().all(|b| b.tail_bound < TAIL_TOLERANCE * big_to_f64(b.lower()));
    r.push(Check::new(
        "constants",
        "orbit sums converge with a certified tail",
        Status::of(tail_ok),
        json!({
            "M_gamma": q_string(&k.m_gamma),
            "c": constant_c(&c).mid_f64(),
            "N": k.n_exp,
            "b_N": b,
            "tail_bound": k.b.iter().map(|b| b.tail_bound).fold(0.0, f64::max),
        }),
    ));
    let lv = length_estimate_violations(&c, &g);
    r.push(Check::new(
        "length_estimate",
        "supports of the contraction stay within the c-dilated distance",
        Status::of(lv.is_empty()),
        json!({ "violations": lv.len(), "first_violations": first(&lv) }),
    ));
    let mut csv = Csv::new(&["m", "max_ratio", "bound", "min_slack_factor"]);
    for &m in &opts.m_list {
        let rep = continuity_check(&c, &g, &wi, &k, m, opts.trials, opts.seed)?;
        csv.row(vec![
            m.to_string(),
            format!("{:.12e}", rep.max_ratio),
            format!("{:.12e}", rep.bound),
            format!("{:.6}", rep.min_slack_factor),
        ]);
        r.push(Check::new(
            &format!("continuity_m{m}"),
            "q_m(gamma x) <= M_gamma c^m sqrt(b_N) q_(m+N/2)(x) on seeded random chains",
            Status::of(rep.passed()),
            json!({
                "m": m,
                "trials": rep.trials,
                "seed": rep.seed,
                "max_ratio": rep.max_ratio,
                "bound": rep.bound,
                "min_slack_factor": rep.min_slack_factor,
                "worst_trial_seed": rep.worst_trial_seed,
                "failures": first(&rep.failures),
            }),
        ));
    }
    Ok((r, csv))
}

pub struct CounterexampleOptions {
    pub profile: String,
    pub radius: i64,
    pub min_radius: i64,
    pub norms: Vec<u32>,
    pub control_radius: i64,
    pub counting_depth: usize,
}

pub fn counterexample(opts: &CounterexampleOptions, budget: usize) -> CliResult<(Report, Csv)> {
    let profile = Profile::parse(&opts.profile)?;
    if opts.radius < 1 || opts.min_radius < 1 || opts.min_radius > opts.radius {
        return Err(CliError::Config(format!(
            "window radii must satisfy 1 <= min ({}) <= radius ({})",
            opts.min_radius, opts.radius
        )));
    }
    if opts.control_radius < 0 {
        return Err(CliError::Config("control radius must be nonnegative".into()));
    }
    let mut r = Report::new(
        "counterexample",
        json!({
            "profile": profile.name(),
            "radius": opts.radius,
            "min_radius": opts.min_radius,
            "norms": opts.norms,
            "control_radius": opts.control_radius,
            "counting_depth": opts.counting_depth,
            "budget": budget,
        }),
    );
    let mut csv = Csv::new(&["R", "max_antidiag_coeff", "coefficient_at_radius", "min_over_k"]);
    let mut windows = Vec::new();
    let (mut kernel_ok, mut solved_ok, mut decay_ok, mut control_ok) = (true, true, true, true);
    let control = Profile::Indicator(opts.control_radius);
    let mut controls = Vec::new();
    for radius in opts.min_radius..=opts.radius {
        let w = counterexample_witness(&profile, radius)?;
        kernel_ok &= w.kernel_check;
        solved_ok &= w.solved && w.kernel_trivial;
        decay_ok &= w.non_decay;
        csv.row(vec![
            radius.to_string(),
            format!("{:.12e}", to_f64(&w.max_coefficient)),
            format!("{:.12e}", to_f64(&w.coefficient_at_radius)),
            format!("{:.12e}", to_f64(&w.min_over_k)),
        ]);
        windows.push(json!({
            "R": radius,
            "max_antidiag_coeff": q_string(&w.max_coefficient),
            "coefficient_at_radius": q_string(&w.coefficient_at_radius),
            "min_over_k": q_string(&w.min_over_k),
            "threshold": q_string(&w.threshold),
            "support_radius": w.support_radius,
        }));
        let cw = counterexample_witness(&control, radius.max(opts.control_radius + 1))?;
        let ok = cw.kernel_check && cw.support_radius <= cw.input_radius;
        control_ok &= ok;
        controls.push(json!({ "R": cw.radius, "support_radius": cw.support_radius, "input_radius": cw.input_radius }));
    }
    r.push(Check::new(
        "kernel_check",
        "the witness s(x)e - e(x)s lies in the kernel of convolution",
        Status::of(kernel_ok),
        json!({ "windows": windows.len() }),
    ));
    r.push(Check::new(
        "window_solutions",
        "the witness has a unique exact preimage on every window",
        Status::of(solved_ok),
        json!({ "window_solutions": windows }),
    ));
    r.push(Check::new(
        "non_decay",
        "window preimages keep an anti-diagonal coefficient of at least s(0) out to distance R",
        Status::of(decay_ok),
        json!({ "profile": profile.name() }),
    ));
    r.push(Check::new(
        "positive_control",
        "a finitely supported cycle has a preimage supported within its own radius",
        Status::of(control_ok),
        json!({ "profile": control.name(), "windows": controls }),
    ));
    let counting = Complex::tree(1, opts.counting_depth, budget)?;
    let small = completed_solution(&profile, opts.radius, &opts.norms, &counting, budget)?;
    let large = completed_solution(&profile, 2 * opts.radius, &opts.norms, &counting, budget)?;
    let norms_json = |c: &polychain_core::torus::CompletedReport| -> Value {
        json!({
            "R": c.radius,
            "N": c.n_exp,
            "solves": c.solves,
            "agrees_with_solver": c.agrees_with_solver,
            "q_norms": c.norms.iter().map(|l| json!({
                "m": l.m, "lo": l.q_solution.lo_f64(), "hi": l.q_solution.hi_f64(),
            })).collect::<Vec<_>>(),
            "bound_ratios": c.norms.iter().map(|l| json!({
                "m": l.m, "ratio": l.ratio, "bound": l.bound.mid_f64(), "holds": l.holds,
            })).collect::<Vec<_>>(),
        })
    };
    r.push(Check::new(
        "completed_norms",
        "the contraction-produced preimage obeys the norm continuity bound",
        Status::of(small.passed() && large.passed()),
        json!({ "completed": [norms_json(&small), norms_json(&large)] }),
    ));
    let gaps = cauchy_gaps(&small, &large);
    r.push(Check::new(
        "cauchy",
        "norms of the completed preimages converge as the window doubles",
        Status::of(gaps.iter().all(|&(_, g)| g < CAUCHY_GAP)),
        json!({
            "tolerance": CAUCHY_GAP,
            "gaps": gaps.iter().map(|&(m, g)| json!({ "m": m, "relative_gap": g })).collect::<Vec<_>>(),
        }),
    ));
    Ok((r, csv))
}

/// Summary over previously written reports.
pub fn summarize(paths: &[std::path::PathBuf]) -> CliResult<Report> {
    if paths.is_empty() {
        return Err(CliError::Config("report needs at least one input file".into()));
    }
    let mut r = Report::new("report", json!({ "inputs": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>() }));
    for p in paths {
        let ps = p.display().to_string();
        let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: ps.clone(), source })?;
        let v: Value = serde_json::from_str(&text).map_err(|source| CliError::Json { path: ps.clone(), source })?;
        let checks = v.get("checks").and_then(Value::as_array).ok_or_else(|| CliError::Config(format!("{ps}: not a report")))?;
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| c.get("status").and_then(Value::as_str) == Some("fail"))
            .filter_map(|c| c.get("name").and_then(Value::as_str))
            .collect();
        r.push(Check::new(
            v.get("command").and_then(Value::as_str).unwrap_or("unknown"),
            "all checks of a stored report passed",
            Status::of(failed.is_empty()),
            json!({ "path": ps, "checks": checks.len(), "failed": failed }),
        ));
    }
    Ok(r)
}
