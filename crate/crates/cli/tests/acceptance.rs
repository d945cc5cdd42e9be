//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always visible; exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use polychain_core::coeff::{
    cyclic_model, homology, path_bump_model, sign_line_model, tree_filtration_model, tree_star_model,
    CoefficientSystem, FiniteModel,
};
use polychain_core::contraction::{build_contraction, verify_properties, PropertyReport};
use polychain_core::hull::diameter_bound_report;
use polychain_core::linalg::{q, Q};
use polychain_core::norms::{big_to_f64, continuity_check, NormConstants, WeightedIndex, TAIL_TOLERANCE};
use polychain_core::torus::{cauchy_gaps, completed_solution, counterexample_witness, Profile};
use polychain_core::{Complex, RootDatum, DEFAULT_CELL_BUDGET};

const SYSTEMS: [&str; 6] = ["A1", "A1^2", "A1^3", "A2", "B2", "A2xA1"];
const RADIUS: i128 = 3;
const TREE_MAX_DEPTH: usize = 6;
const TIME_LIMIT: Duration = Duration::from_secs(60);

const NORM_SYSTEMS: [&str; 2] = ["A1^2", "A2"];
const NORM_RADIUS: i128 = 5;
const NORM_TRIALS: usize = 500;
const NORM_SEED: u64 = 42;
const NORM_M: [u32; 3] = [0, 1, 2];
const COUNTING_RADIUS: i128 = 12;

const WINDOWS: std::ops::RangeInclusive<i64> = 5..=15;
const CAUCHY_SMALL: i64 = 12;
const CAUCHY_LARGE: i64 = 24;
const CAUCHY_GAP: f64 = 1.0 / 1024.0;
const CONTROL_RADIUS: i64 = 3;
const LINE_COUNTING_DEPTH: usize = 40;

type Outcome = Result<String, String>;

fn apartment(system: &str, r: i128) -> Complex {
    Complex::apartment(&RootDatum::parse(system).unwrap(), q(r), DEFAULT_CELL_BUDGET).unwrap()
}

fn trees() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for b in 1..=3 {
        for d in 1..=TREE_MAX_DEPTH {
            out.push((b, d));
        }
    }
    out
}

fn properties(c: &Complex) -> (PropertyReport, Q) {
    let g = build_contraction(c).unwrap();
    let p = verify_properties(c, &g).unwrap();
    (p, g.m_gamma())
}

fn homotopy_identity() -> Outcome {
    let mut cells = 0;
    let mut slowest = Duration::ZERO;
    let mut run = |name: String, c: Complex| -> Result<(), String> {
        let t = Instant::now();
        let (p, _) = properties(&c);
        let dt = t.elapsed();
        slowest = slowest.max(dt);
        cells += p.cells_checked;
        if !p.homotopy_failures.is_empty() {
            return Err(format!("{name}: {} cells fail the homotopy identity", p.homotopy_failures.len()));
        }
        if dt > TIME_LIMIT {
            return Err(format!("{name}: {dt:?} exceeds the time limit"));
        }
        Ok(())
    };
    for s in SYSTEMS {
        run(format!("{s} r={RADIUS}"), apartment(s, RADIUS))?;
    }
    for (b, d) in trees() {
        run(format!("tree q={b} depth={d}"), Complex::tree(b, d, DEFAULT_CELL_BUDGET).unwrap())?;
    }
    Ok(format!("{cells} cells exact, slowest system {:.2}s", slowest.as_secs_f64()))
}

fn contraction_properties() -> Outcome {
    let mut checked = 0;
    let mut check = |name: String, small: Complex, large: Complex| -> Result<(), String> {
        let (p, m1) = properties(&small);
        let (p2, m2) = properties(&large);
        for (p, label) in [(&p, "small"), (&p2, "large")] {
            if !p.equivariance_failures.is_empty() {
                return Err(format!("{name} {label}: equivariance fails"));
            }
            if !p.support_failures.is_empty() {
                return Err(format!("{name} {label}: image leaves the hull"));
            }
            if p.symmetries_checked == 0 {
                return Err(format!("{name}: no symmetries checked"));
            }
        }
        if m1 != m2 {
            return Err(format!("{name}: M_gamma {m1} then {m2}"));
        }
        checked += 1;
        Ok(())
    };
    for s in SYSTEMS {
        check(s.to_string(), apartment(s, RADIUS), apartment(s, RADIUS + 1))?;
    }
    for b in 1..=3 {
        let t = |d| Complex::tree(b, d, DEFAULT_CELL_BUDGET).unwrap();
        check(format!("tree q={b}"), t(TREE_MAX_DEPTH - 1), t(TREE_MAX_DEPTH))?;
    }
    Ok(format!("{checked} families equivariant, hull-supported, M_gamma stable"))
}

fn diameter_bound() -> Outcome {
    let mut cells = 0;
    let mut complexes: Vec<(String, Complex)> =
        SYSTEMS.iter().chain(&["G2"]).map(|s| (s.to_string(), apartment(s, RADIUS))).collect();
    for (b, d) in trees() {
        complexes.push((format!("tree q={b} depth={d}"), Complex::tree(b, d, DEFAULT_CELL_BUDGET).unwrap()));
    }
    for (name, c) in complexes {
        let r = diameter_bound_report(&c).unwrap();
        cells += r.cells_checked;
        if !r.violations.is_empty() {
            return Err(format!("{name}: {} violations", r.violations.len()));
        }
    }
    Ok(format!("{cells} cells, zero violations"))
}

fn acyclic_trivial(c: &Complex, cells: &[usize]) -> bool {
    homology(c, cells, &CoefficientSystem::trivial(cells)).unwrap().asserted_ok() == Some(true)
}

fn acyclicity() -> Outcome {
    let mut convex = 0;
    // hull regions of every cell
    for s in ["A1", "A1^2", "A2", "B2", "G2"] {
        let c = apartment(s, RADIUS);
        for i in 0..c.len() {
            let h = c.hull_with_base(i).unwrap();
            if !acyclic_trivial(&c, &h) {
                return Err(format!("{s}: hull of cell {i} is not acyclic"));
            }
            convex += 1;
        }
    }
    // whole balls where they are convex: lines and trees
    let line = apartment("A1", 5);
    let mut whole: Vec<(String, Complex)> = vec![("A1 r=5".into(), line)];
    for b in 1..=3 {
        for d in 1..=4 {
            whole.push((format!("tree q={b} depth={d}"), Complex::tree(b, d, DEFAULT_CELL_BUDGET).unwrap()));
        }
    }
    for (name, c) in &whole {
        let all: Vec<usize> = (0..c.len()).collect();
        if !acyclic_trivial(c, &all) {
            return Err(format!("{name}: not acyclic"));
        }
        convex += 1;
    }
    let mut models: Vec<(Complex, FiniteModel)> = vec![sign_line_model(3, DEFAULT_CELL_BUDGET).unwrap()];
    for (b, d) in [(1, 3), (2, 2), (2, 3), (3, 2)] {
        models.push(tree_filtration_model(b, d, DEFAULT_CELL_BUDGET).unwrap());
    }
    models.push(tree_star_model(DEFAULT_CELL_BUDGET).unwrap());
    for (c, m) in &models {
        if !m.check_axioms(c).passed() {
            return Err(format!("{} fails the axiom suite", m.name));
        }
        let all: Vec<usize> = (0..c.len()).collect();
        let h = homology(c, &all, &m.coefficient_system(c).unwrap()).unwrap();
        if h.asserted_ok() != Some(true) {
            return Err(format!("{}: augmented betti {:?}", m.name, h.augmented_betti));
        }
    }
    // negative controls
    let c = apartment("A1", 2);
    let two: Vec<usize> = c.cells_of_dim(0).filter(|&v| v != c.base()).take(2).collect();
    let h = homology(&c, &two, &CoefficientSystem::trivial(&two)).unwrap();
    if h.convex || h.augmented_betti[0] == 0 {
        return Err("disconnected control was not detected".into());
    }
    for (c, m) in [cyclic_model(3, DEFAULT_CELL_BUDGET).unwrap(), path_bump_model(DEFAULT_CELL_BUDGET).unwrap()] {
        if m.check_axioms(&c).passed() || m.coefficient_system(&c).is_ok() {
            return Err(format!("{} was accepted", m.name));
        }
    }
    Ok(format!(
        "{convex} convex complexes, {} finite models acyclic; disconnected control has augmented H0 of rank {}",
        models.len(),
        h.augmented_betti[0]
    ))
}

fn norm_continuity() -> Outcome {
    let mut lines = Vec::new();
    for s in NORM_SYSTEMS {
        let c = apartment(s, NORM_RADIUS);
        let counting = apartment(s, COUNTING_RADIUS);
        let g = build_contraction(&c).unwrap();
        let k = NormConstants::certify(&c, &g, &counting).map_err(|e| format!("{s}: {e}"))?;
        for b in &k.b {
            if b.tail_bound >= TAIL_TOLERANCE * big_to_f64(b.lower()) {
                return Err(format!("{s}: tail {} not below the relative tolerance", b.tail_bound));
            }
        }
        for m in NORM_M {
            let r = continuity_check(&c, &g, &WeightedIndex::point(), &k, m, NORM_TRIALS, NORM_SEED).unwrap();
            if !r.passed() {
                return Err(format!("{s} m={m}: {} trials exceed the bound", r.failures.len()));
            }
            lines.push(format!("{s} m={m} ratio {:.3} <= {:.3}", r.max_ratio, r.bound));
        }
    }
    Ok(lines.join("; "))
}

fn counterexample() -> Outcome {
    let dyadic = Profile::Dyadic;
    let mut problems = Vec::new();
    let mut largest = Q::zero();
    for r in WINDOWS {
        let w = counterexample_witness(&dyadic, r).map_err(|e| format!("R={r}: {e}"))?;
        if !w.kernel_check {
            problems.push(format!("R={r}: witness outside the kernel"));
        }
        largest = largest.max(w.max_coefficient);
        if w.coefficient_at_radius < Q::one() {
            problems.push(format!("R={r}: coefficient {} at distance R is below 1", w.coefficient_at_radius));
        }
        let control = counterexample_witness(&Profile::Indicator(CONTROL_RADIUS), r).unwrap();
        if !control.kernel_check || control.support_radius > control.input_radius {
            problems.push(format!("R={r}: control preimage radius {}", control.support_radius));
        }
    }
    let counting = Complex::tree(1, LINE_COUNTING_DEPTH, DEFAULT_CELL_BUDGET).unwrap();
    let small = completed_solution(&dyadic, CAUCHY_SMALL, &NORM_M, &counting, DEFAULT_CELL_BUDGET).unwrap();
    let large = completed_solution(&dyadic, CAUCHY_LARGE, &NORM_M, &counting, DEFAULT_CELL_BUDGET).unwrap();
    let gaps = cauchy_gaps(&small, &large);
    for (m, gap) in &gaps {
        if *gap >= CAUCHY_GAP {
            problems.push(format!("m={m}: relative gap {gap:.3e}"));
        }
    }
    if problems.is_empty() {
        Ok(format!("windows {WINDOWS:?} certified, Cauchy gaps {gaps:?}"))
    } else {
        let shown: Vec<String> = problems.iter().take(3).cloned().collect();
        Err(format!(
            "{} problems (largest preimage coefficient {largest}): {}{}",
            problems.len(),
            shown.join("; "),
            if problems.len() > 3 { "; ..." } else { "" }
        ))
    }
}

fn run_cli(args: &[&str], dir: &Path, tag: &str) -> (Vec<u8>, Vec<u8>) {
    let json = dir.join(format!("{tag}.json"));
    let csv = dir.join(format!("{tag}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_polychain"))
        .args(args)
        .args(["--no-timing", "--json", json.to_str().unwrap(), "--csv", csv.to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert!(status.code().is_some_and(|c| c == 0 || c == 1), "{args:?} exited with {status}");
    (std::fs::read(json).unwrap(), std::fs::read(csv).unwrap_or_default())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let suites: [&[&str]; 4] = [
        &["verify", "--system", "A2", "--radius", "3", "--all"],
        &["verify", "--tree", "2", "--depth", "4", "--all"],
        &["norms-bound", "--system", "A2", "--radius", "4", "--trials", "100", "--seed", "7"],
        &["counterexample", "--profile", "dyadic", "--radius", "8"],
    ];
    for (i, args) in suites.iter().enumerate() {
        let a = run_cli(args, dir.path(), &format!("a{i}"));
        let b = run_cli(args, dir.path(), &format!("b{i}"));
        if a != b {
            return Err(format!("{args:?} differs between runs"));
        }
    }
    Ok(format!("{} suites byte-identical across reruns", suites.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("homotopy identity", homotopy_identity),
        ("contraction properties", contraction_properties),
        ("diameter bound", diameter_bound),
        ("acyclicity", acyclicity),
        ("norm continuity", norm_continuity),
        ("convolution counterexample", counterexample),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}, {secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}, {secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
