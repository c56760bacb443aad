//! Acceptance criteria A1–A7, one PASS/FAIL line each.

use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::Zero;

use robust_matching::instance::{apply_shift, enumerate_shift_domain, ShiftDistribution};
use robust_matching::matching::{boy_optimal, is_stable, Matching};
use robust_matching::oracle::{enumerate_stable_bruteforce, lattice_transitions, oracle_report_with};
use robust_matching::random::{gen_random_instance, random_distribution};
use robust_matching::robust_flow::{check_complementary_slackness, check_flow_feasibility, run_pipeline};
use robust_matching::rotations::{build_rotation_poset, RotationPoset};
use robust_matching::shift_analysis::{ShiftAnalyzer, ShiftStatus};
use robust_matching::verify::{
    check_bijection, check_optimality, check_poset_against_oracle, check_representation, check_shift_structure,
    check_unmatched_invariance,
};
use robust_matching::PreferenceInstance;

const INSTANCES: u64 = 200;
const DISTRIBUTIONS: u64 = 20;
const LATTICE_LIMIT: usize = 25;
const TIME_LIMIT: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;

struct Case {
    seed: u64,
    inst: PreferenceInstance,
    poset: RotationPoset,
    stable: Vec<Matching>,
}

fn n_of(seed: u64) -> usize {
    2 + (seed % 6) as usize
}

/// Build the corpus and check the Birkhoff bijection and poset order.
fn birkhoff(completeness: f64) -> (Outcome, Vec<Case>) {
    let start = Instant::now();
    let mut cases = Vec::new();
    for seed in 0..INSTANCES {
        let inst = gen_random_instance(n_of(seed), seed, completeness);
        let poset = build_rotation_poset(&inst);
        let stable = enumerate_stable_bruteforce(&inst).expect("within size guard");
        if let Err(e) = check_bijection(&poset, &stable).and_then(|_| check_poset_against_oracle(&inst, &poset)) {
            return (Err(format!("seed {seed}: {e}")), cases);
        }
        cases.push(Case { seed, inst, poset, stable });
    }
    let elapsed = start.elapsed();
    if elapsed > TIME_LIMIT {
        return (Err(format!("took {elapsed:.1?}, limit {TIME_LIMIT:?}")), cases);
    }
    let total: usize = cases.iter().map(|c| c.stable.len()).sum();
    (Ok(format!("{} instances, {total} stable matchings, {elapsed:.1?}", cases.len())), cases)
}

fn lattice_laws(cases: &[Case]) -> Outcome {
    let mut checked = 0;
    for c in cases.iter().filter(|c| c.stable.len() <= LATTICE_LIMIT) {
        robust_matching::oracle::check_lattice_laws(&c.inst, &c.stable).map_err(|e| format!("seed {}: {e}", c.seed))?;
        checked += 1;
    }
    Ok(format!("{checked} instances"))
}

fn structure(cases: &[Case]) -> Outcome {
    let mut shifts = 0;
    for c in cases.iter().filter(|c| c.inst.size() <= 6) {
        let transitions = lattice_transitions(&c.inst).map_err(|e| e.to_string())?;
        let analyzer = ShiftAnalyzer::new(&c.inst, &c.poset);
        for shift in enumerate_shift_domain(&c.inst) {
            check_shift_structure(&c.inst, &c.poset, &analyzer, &c.stable, &transitions, &shift)
                .map_err(|e| format!("seed {}: {e}", c.seed))?;
            shifts += 1;
        }
    }
    Ok(format!("{shifts} shifts, zero violations"))
}

fn distributions(c: &Case) -> Vec<ShiftDistribution> {
    let domain = enumerate_shift_domain(&c.inst);
    if domain.is_empty() {
        return vec![ShiftDistribution::sub_distribution(Vec::new()).expect("empty")];
    }
    let mut out = vec![ShiftDistribution::uniform(&domain).expect("non-empty domain")];
    out.extend((0..DISTRIBUTIONS).map(|j| random_distribution(&domain, c.seed * 1000 + j, 9)));
    out
}

/// Optimality (A4) and representation (A5) over the same cases.
fn optimality_and_representation(cases: &[Case]) -> (Outcome, Outcome) {
    let mut runs = 0;
    let mut robust_total = 0;
    let mut a5: Result<(), String> = Ok(());
    for c in cases.iter().filter(|c| c.inst.size() <= 6) {
        for (j, dist) in distributions(c).iter().enumerate() {
            let tag = |e: String| format!("seed {} dist {j}: {e}", c.seed);
            let oracle = match oracle_report_with(&c.inst, dist, c.stable.clone(), 0) {
                Ok(o) => o,
                Err(e) => return (Err(tag(e.to_string())), Err("not reached".into())),
            };
            let pipe = match run_pipeline(&c.inst, dist) {
                Ok(p) => p,
                Err(e) => return (Err(tag(e.to_string())), Err("not reached".into())),
            };
            if let Err(e) = check_optimality(&c.inst, dist, &pipe, &oracle) {
                return (Err(tag(e)), Err("not reached".into()));
            }
            if a5.is_ok() {
                a5 = check_representation(&c.inst, &pipe, &oracle).map_err(tag);
            }
            robust_total += oracle.argmin_set.len();
            runs += 1;
        }
    }
    (
        Ok(format!("{runs} instance/distribution pairs, exact")),
        a5.map(|_| format!("{runs} robust sets equal to brute force ({robust_total} matchings)")),
    )
}

/// Extra checks for incomplete lists: the unmatched set is the same in
/// every stable matching, shifts changing it are classified as constant
/// loss, and the constant loss is exactly the mass of shifts that
/// destabilize everything.
fn incomplete_extras(cases: &[Case]) -> Outcome {
    let mut changing = 0;
    for c in cases {
        let tag = |e: String| format!("seed {}: {e}", c.seed);
        check_unmatched_invariance(&c.stable).map_err(tag)?;
        let m0 = boy_optimal(&c.inst);
        let analyzer = ShiftAnalyzer::new(&c.inst, &c.poset);
        let domain = enumerate_shift_domain(&c.inst);
        let mut expected_loss = BigRational::zero();
        let dist = match domain.is_empty() {
            true => continue,
            false => ShiftDistribution::uniform(&domain).expect("non-empty"),
        };
        for (shift, p) in dist.entries() {
            let shifted = apply_shift(&c.inst, shift).map_err(|e| tag(e.to_string()))?;
            let all_destabilized = c.stable.iter().all(|m| !is_stable(&shifted, m));
            if all_destabilized {
                expected_loss += p;
            }
            let b0 = boy_optimal(&shifted);
            if b0.unmatched_boys() != m0.unmatched_boys() || b0.unmatched_girls() != m0.unmatched_girls() {
                changing += 1;
                let a = analyzer.analyze(shift).map_err(|e| tag(e.to_string()))?;
                if a.status != ShiftStatus::Disjoint || !all_destabilized {
                    return Err(tag(format!("{shift} changes the unmatched set but is {}", a.status)));
                }
            }
        }
        let pipe = run_pipeline(&c.inst, &dist).map_err(|e| tag(e.to_string()))?;
        if pipe.network.constant_loss() != &expected_loss {
            return Err(tag("constant loss differs from the mass of all-destabilizing shifts".into()));
        }
    }
    Ok(format!("{changing} unmatched-set-changing shifts accounted"))
}

fn scale() -> Outcome {
    let start = Instant::now();
    let inst = gen_random_instance(50, 2024, 1.0);
    let domain = enumerate_shift_domain(&inst);
    let dist = ShiftDistribution::uniform(&domain).map_err(|e| e.to_string())?;
    let pipe = run_pipeline(&inst, &dist).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if elapsed > TIME_LIMIT {
        return Err(format!("took {elapsed:.1?}, limit {TIME_LIMIT:?}"));
    }
    check_flow_feasibility(&pipe.network, &pipe.flow)?;
    check_complementary_slackness(&pipe.network, &pipe.flow, &pipe.solution.closed_set)?;
    if !is_stable(&inst, &pipe.solution.matching) {
        return Err("returned matching is not stable".into());
    }
    Ok(format!(
        "{} shifts, {} rotations, {} shift edges, objective {}, {elapsed:.1?}",
        domain.len(),
        pipe.poset.len(),
        pipe.network.shift_edges().len(),
        robust_matching::instance::format_ratio(&pipe.solution.objective)
    ))
}

struct Suite {
    a1: Outcome,
    a2: Outcome,
    a3: Outcome,
    a4: Outcome,
    a5: Outcome,
}

fn suite(completeness: f64) -> (Suite, Vec<Case>) {
    let (a1, cases) = birkhoff(completeness);
    if a1.is_err() {
        let skipped = || Err("skipped: corpus failed A1".to_string());
        return (Suite { a1, a2: skipped(), a3: skipped(), a4: skipped(), a5: skipped() }, cases);
    }
    let (a2, a3, (a4, a5)) = thread::scope(|s| {
        let a2 = s.spawn(|| lattice_laws(&cases));
        let a3 = s.spawn(|| structure(&cases));
        let a45 = optimality_and_representation(&cases);
        (a2.join().expect("A2 thread"), a3.join().expect("A3 thread"), a45)
    });
    (Suite { a1, a2, a3, a4, a5 }, cases)
}

fn main() -> ExitCode {
    let (complete, (incomplete, incomplete_cases), a7) = thread::scope(|s| {
        let a7 = s.spawn(scale);
        let inc = s.spawn(|| suite(0.7));
        let (complete, _) = suite(1.0);
        (complete, inc.join().expect("incomplete suite"), a7.join().expect("A7 thread"))
    });

    let a6 = {
        let parts = [
            ("A1", &incomplete.a1),
            ("A2", &incomplete.a2),
            ("A3", &incomplete.a3),
            ("A4", &incomplete.a4),
            ("A5", &incomplete.a5),
        ];
        match parts.iter().find(|(_, r)| r.is_err()) {
            Some((name, Err(e))) => Err(format!("{name} on incomplete lists: {e}")),
            _ => incomplete_extras(&incomplete_cases).map(|extra| {
                format!("A1-A5 hold at completeness 0.7; {extra}")
            }),
        }
    };

    let results = [
        ("A1", "Birkhoff bijection", complete.a1),
        ("A2", "lattice laws", complete.a2),
        ("A3", "structural theorems", complete.a3),
        ("A4", "optimality and integrality", complete.a4),
        ("A5", "representation", complete.a5),
        ("A6", "incomplete lists", a6),
        ("A7", "scale smoke test", a7),
    ];
    let mut ok = true;
    for (id, name, result) in &results {
        match result {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(e) => {
                ok = false;
                println!("{id} FAIL {name}: {e}");
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
