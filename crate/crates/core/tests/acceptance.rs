//! Acceptance run: each criterion prints one PASS/FAIL line; the process exits
//! nonzero if any criterion fails.

mod common;

use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use locert::bundle::RdmBundle;
use locert::entropy;
use locert::markov::{self, certificate_regions, Shield, ShieldPlan};
use locert::planner::{boundary_metrics, model_shield_score, EntropyModel, GridLayout, GridRegion};
use locert::recovery::{self, petz_recover, reconstruct, RecoveryOptions};
use locert::state::fixtures::{
    classical_markov_chain, dephased_ghz, product_state, random_product_state, rotated_markov_chain,
    split_middle_markov,
};
use locert::state::{
    conjugate_site, depolarize, ghz_state, ghz_with_phase, random_mixed_state_with, random_unitary_with, rng_from_seed,
};
use locert::tomo::{self, MeasurementPlan, MeasurementScheme};
use locert::{partial_trace, trace_distance, DensityMatrix, Error, Region, SystemLayout};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn r(v: &[usize]) -> Region {
    Region::new(v.iter().copied()).unwrap()
}

fn mix(a: &DensityMatrix, b: &DensityMatrix, c: f64) -> DensityMatrix {
    let m = a.matrix() * Complex64::new(c, 0.0) + b.matrix() * Complex64::new(1.0 - c, 0.0);
    DensityMatrix::new(a.layout().clone(), m).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

fn ssa_and_weak_monotonicity() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    let mut worst = f64::INFINITY;
    let (pass, total) = common::pass_rate(0..1000, |i| {
        let dims: &[usize] = if i % 2 == 0 { &[2, 2, 2] } else { &[2, 3, 2] };
        let layout = SystemLayout::from_dims(dims).unwrap();
        let rank = rng.random_range(1..=layout.total_dim());
        let rho = random_mixed_state_with(&layout, rank, &mut rng).unwrap();
        let (a, b, c) = (r(&[0]), r(&[1]), r(&[2]));
        let cmi = entropy::cmi(&rho, &a, &b, &c).unwrap();
        let wm = entropy::weak_monotonicity(&rho, &a, &b, &c).unwrap();
        worst = worst.min(cmi).min(wm);
        cmi >= -1e-9 && wm >= -1e-9
    });
    let elapsed = start.elapsed();
    outcome(
        pass == total && elapsed < Duration::from_secs(30),
        format!("{pass}/{total} states, min value {worst:.3e}, {}", secs(elapsed)),
    )
}

fn strengthened_concavity() -> Outcome {
    let mut rng = rng_from_seed(2);
    let layout = SystemLayout::qubits(3).unwrap();
    let mut samples = 0;
    let (pass, pairs) = common::pass_rate(0..500, |_| {
        let rho = random_mixed_state_with(&layout, rng.random_range(1..=8), &mut rng).unwrap();
        let sigma = random_mixed_state_with(&layout, rng.random_range(1..=8), &mut rng).unwrap();
        let d = common::distance(&rho, &sigma);
        [0.1, 0.5, 0.9].iter().all(|&c| {
            samples += 1;
            let gap = entropy::concavity_gap(&rho, &sigma, c).unwrap();
            gap >= 0.5 * c * (1.0 - c) * d * d - 1e-9
        })
    });
    outcome(pass == pairs, format!("{pass}/{pairs} pairs, {samples} samples"))
}

fn tripartite_bound_on_ghz() -> Outcome {
    let rho = ghz_state(3).unwrap().to_density();
    let sigma = dephased_ghz(3).unwrap();
    let (a, b, c) = (r(&[0]), r(&[1]), r(&[2]));
    let marginal_gap = [a.union(&b), b.union(&c)]
        .iter()
        .map(|region| {
            trace_distance(&partial_trace(&rho, region).unwrap(), &partial_trace(&sigma, region).unwrap()).unwrap()
        })
        .fold(0.0, f64::max);
    let check = markov::tripartite_distance_bound(&rho, &sigma, &a, &b, &c).unwrap();
    let pass = marginal_gap <= 1e-12
        && (check.lhs - 0.25).abs() <= 1e-9
        && (check.rhs - 2.0 * LN_2).abs() <= 1e-9
        && check.holds;
    outcome(
        pass,
        format!(
            "marginal gap {marginal_gap:.1e}, lhs {:.12}, rhs {:.12} (required {:.12}), holds {}",
            check.lhs,
            check.rhs,
            2.0 * LN_2,
            check.holds
        ),
    )
}

/// Random ordering; each shield draws from the sites before and after.
fn random_plan(n: usize, rng: &mut impl Rng) -> ShieldPlan {
    let mut ordering: Vec<usize> = (0..n).collect();
    ordering.shuffle(rng);
    let shields = ordering
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let m: Vec<usize> = ordering[..i].iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            let mp: Vec<usize> = ordering[i + 1..].iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            Shield { site: k, m: Region::new(m).unwrap(), m_prime: Region::new(mp).unwrap() }
        })
        .collect();
    ShieldPlan::new(ordering, shields)
}

fn markov_entropy_dominance() -> Outcome {
    let mut rng = rng_from_seed(4);
    let (mut dominance, mut gap_bound) = (0, 0);
    let total = 200;
    for _ in 0..total {
        let n = rng.random_range(2..=4);
        let layout = SystemLayout::qubits(n).unwrap();
        let rho = random_mixed_state_with(&layout, rng.random_range(1..=layout.total_dim()), &mut rng).unwrap();
        let plan = random_plan(n, &mut rng);
        if markov::markov_entropy(&rho, &plan).unwrap() >= entropy::entropy(&rho).unwrap() - 1e-9 {
            dominance += 1;
        }
        if markov::med_gap_upper_bound(&rho, &plan).unwrap() >= markov::med_gap(&rho, &plan).unwrap() - 1e-9 {
            gap_bound += 1;
        }
    }
    outcome(
        dominance == total && gap_bound == total,
        format!("S_M >= S in {dominance}/{total}, gap bound in {gap_bound}/{total}"),
    )
}

fn petz_exactness() -> Outcome {
    let opts = RecoveryOptions::default();
    let recover = |rho: &DensityMatrix, a: &Region, b: &Region, c: &Region| {
        let ab = partial_trace(rho, &a.union(b)).unwrap();
        let bc = partial_trace(rho, &b.union(c)).unwrap();
        petz_recover(&ab, &bc, a, b, c, &opts).unwrap().state
    };
    let mut worst_cmi = 0.0f64;
    let mut worst_distance = 0.0f64;
    let mut instances = 0;
    for seed in 0..30 {
        let ranks = [1 + seed as usize % 4, 1 + (seed as usize / 4) % 4];
        let rho = split_middle_markov([2, 2, 2, 2], ranks, seed).unwrap();
        let (a, b, c) = (r(&[0]), r(&[1, 2]), r(&[3]));
        worst_cmi = worst_cmi.max(entropy::cmi(&rho, &a, &b, &c).unwrap());
        worst_distance = worst_distance.max(common::distance(&recover(&rho, &a, &b, &c), &rho));
        instances += 1;
    }
    for seed in 0..30 {
        let rho = classical_markov_chain(&[2, 3, 2], seed).unwrap();
        let (a, b, c) = (r(&[0]), r(&[1]), r(&[2]));
        worst_cmi = worst_cmi.max(entropy::cmi(&rho, &a, &b, &c).unwrap());
        worst_distance = worst_distance.max(common::distance(&recover(&rho, &a, &b, &c), &rho));
        instances += 1;
    }
    let ghz = ghz_state(3).unwrap().to_density();
    let from_ghz = recover(&ghz, &r(&[0]), &r(&[1]), &r(&[2]));
    let to_dephased = common::distance(&from_ghz, &dephased_ghz(3).unwrap());
    let to_ghz = common::distance(&from_ghz, &ghz);
    let pass = instances >= 50
        && worst_cmi <= 1e-10
        && worst_distance <= 1e-6
        && to_dephased <= 1e-8
        && (to_ghz - 1.0).abs() <= 1e-6;
    outcome(
        pass,
        format!(
            "{instances} Markov states: max cmi {worst_cmi:.1e}, max distance {worst_distance:.1e}; \
             ghz3 recovery: {to_dephased:.1e} from dephased, {to_ghz:.9} from ghz"
        ),
    )
}

/// Candidate partners for `rho`; only those matching every certificate
/// marginal are kept.
fn consistent_partners(rho: &DensityMatrix, extra: &[DensityMatrix], plan: &ShieldPlan) -> Vec<DensityMatrix> {
    let regions = certificate_regions(plan);
    let bundle = RdmBundle::from_state(rho, &regions).unwrap();
    let mut candidates = extra.to_vec();
    if let Ok(trace) = reconstruct(&bundle, plan, None, &RecoveryOptions::default()) {
        candidates.push(trace.state);
    }
    let base = candidates.clone();
    for other in &base {
        for c in [0.25, 0.5, 0.75] {
            candidates.push(mix(rho, other, c));
        }
    }
    candidates
        .into_iter()
        .filter(|sigma| {
            regions.iter().all(|region| {
                let a = partial_trace(rho, region).unwrap();
                let b = partial_trace(sigma, region).unwrap();
                (a.matrix() - b.matrix()).norm() <= 1e-9
            })
        })
        .collect()
}

fn certificate_soundness() -> Outcome {
    let mut rng = rng_from_seed(6);
    let mut families: Vec<(String, DensityMatrix, Vec<DensityMatrix>)> = Vec::new();
    for n in 3..=6 {
        families.push((format!("product{n}"), random_product_state(&vec![2; n], 2, n as u64).unwrap(), vec![]));
    }
    for seed in 0..2 {
        families.push((format!("markov6/{seed}"), classical_markov_chain(&[2; 6], seed).unwrap(), vec![]));
        families.push((format!("rotated6/{seed}"), rotated_markov_chain(&[2; 6], seed).unwrap(), vec![]));
    }
    for n in 3..=6 {
        let partners = [0.7, 1.9, std::f64::consts::PI]
            .iter()
            .map(|&phase| ghz_with_phase(n, phase).unwrap().to_density())
            .chain([dephased_ghz(n).unwrap()])
            .collect();
        families.push((format!("ghz{n}"), ghz_state(n).unwrap().to_density(), partners));
    }
    let (mut checks, mut violations, mut plans) = (0, 0, 0);
    let mut worst_margin = f64::INFINITY;
    for (name, rho, extra) in &families {
        let n = rho.layout().len();
        let mut candidates = vec![ShieldPlan::chain(n), ShieldPlan::chain_with_radius(n, 2)];
        candidates.extend((0..3).map(|_| random_plan(n, &mut rng)));
        for plan in candidates {
            plans += 1;
            let bundle = RdmBundle::from_state(rho, &certificate_regions(&plan)).unwrap();
            let bound = markov::certificate(&bundle, &plan, &[]).unwrap().bound_capped;
            for sigma in consistent_partners(rho, extra, &plan) {
                checks += 1;
                let d = common::distance(rho, &sigma);
                worst_margin = worst_margin.min(bound - d);
                if bound < d - 1e-9 {
                    violations += 1;
                    eprintln!("  {name}: bound {bound} < distance {d}");
                }
            }
        }
    }
    outcome(
        violations == 0 && checks > 0,
        format!("{} families, {plans} plans, {checks} partner checks, {violations} violations, min slack {worst_margin:.3e}", families.len()),
    )
}

fn shield_scores_and_boundaries() -> Outcome {
    let g = GridLayout::open(9, 9).unwrap();
    let k = g.index(4, 4);
    let c = |v: &[(usize, usize)]| GridRegion::from_coords(&g, v);
    let ring = g.neighbourhood(k, 1);
    let empty = GridRegion::default();
    let upper = c(&[(3, 5), (4, 5), (5, 5), (5, 4)]);
    let lower = c(&[(3, 3), (4, 3), (5, 3), (3, 4)]);
    // A site on the edge of the visited block: two cells behind it, the rest of its ring ahead.
    let k2 = g.index(5, 4);
    let behind = c(&[(4, 3), (4, 4)]);
    let ahead = c(&[(4, 5), (5, 5), (6, 5), (6, 4), (6, 3), (5, 3)]);
    let cases = [(k, &ring, &empty), (k, &empty, &ring), (k, &upper, &lower), (k2, &behind, &ahead)];
    let mut rng = rng_from_seed(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let model = EntropyModel::new(rng.random_range(0.0..3.0), rng.random_range(0.0..3.0), 0.0).unwrap();
        for (site, m, mp) in cases {
            worst = worst.max(model_shield_score(site, m, mp, &model, &g).unwrap().value.abs());
        }
    }
    let (matches, total) = common::pass_rate(0..200, |i| {
        let (w, h) = (rng.random_range(2..=10), rng.random_range(2..=10));
        let periodic = i % 2 == 1;
        let density = rng.random_range(0.1..0.9);
        let mut cells: Vec<bool> = (0..w * h).map(|_| rng.random_bool(density)).collect();
        if !cells.iter().any(|&x| x) {
            cells[0] = true;
        }
        let grid = GridLayout::new(w, h, periodic).unwrap();
        let region = GridRegion::new((0..w * h).filter(|&j| cells[j]));
        let m = boundary_metrics(&region, &grid).unwrap();
        m.length == common::boundary_edges(&cells, w, h, periodic)
            && m.region_components == common::components(&cells, w, h, periodic, false)
    });
    outcome(
        worst <= 1e-12 && matches == total,
        format!("max |score| {worst:.1e} over 20 models x 4 topologies; boundary matches {matches}/{total}"),
    )
}

fn chain_reconstruction() -> Outcome {
    let rho = rotated_markov_chain(&[2; 6], 8).unwrap();
    let plan = ShieldPlan::chain(6);
    let bundle = RdmBundle::from_state(&rho, &certificate_regions(&plan)).unwrap();
    let trace = reconstruct(&bundle, &plan, Some(&rho), &RecoveryOptions::default()).unwrap();
    let d = common::distance(&trace.state, &rho);
    let bound = markov::certificate(&bundle, &plan, &[]).unwrap().bound_capped;
    outcome(d <= 1e-6 && bound >= d, format!("final distance {d:.2e}, certificate {bound:.3e}"))
}

fn tomography_statistics() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(9);
    let layout = SystemLayout::qubits(2).unwrap();
    let rho = random_mixed_state_with(&layout, 4, &mut rng).unwrap();
    let region = r(&[0, 1]);
    let eps_median = |shots: u64, offset: u64| {
        median(
            (0..50)
                .map(|seed| {
                    let est =
                        tomo::simulate_region_tomography(&rho, &region, shots, MeasurementScheme::Pauli, offset + seed)
                            .unwrap();
                    tomo::epsilon_against_target(&est, &rho).unwrap()
                })
                .collect(),
        )
    };
    let (m1, m4) = (eps_median(20_000, 0), eps_median(80_000, 1_000));
    let ratio = m4 / m1;
    let scaling_ok = (ratio - 0.5).abs() <= 0.125;

    let zero = DensityMatrix::from_diagonal(SystemLayout::qubits(1).unwrap(), &[1.0, 0.0]).unwrap();
    let target = product_state(&[zero.clone(), zero.clone(), zero.clone(), zero]).unwrap();
    let p = 0.02;
    let noisy = depolarize(&target, p).unwrap();
    let true_distance = common::distance(&noisy, &target);
    let analytic = p * 2.0 * (1.0 - 1.0 / 16.0);
    let plan = ShieldPlan::chain(4);
    let target_rdms = RdmBundle::from_state(&target, &certificate_regions(&plan)).unwrap();
    let mut raw = Vec::new();
    let mut certified = 0;
    let (held, trials) = common::pass_rate(0..100u64, |seed| {
        let measured = MeasurementPlan::for_plan(&plan, 100_000, seed).simulate(&noisy).unwrap();
        let verdict = tomo::verify(&measured, &target_rdms, &plan).unwrap();
        raw.push(verdict.certificate.bound_raw);
        certified += usize::from(verdict.is_certified());
        verdict.bound >= true_distance
    });
    let elapsed = start.elapsed();
    let pass =
        scaling_ok && (true_distance - analytic).abs() <= 1e-12 && held >= 99 && elapsed < Duration::from_secs(600);
    outcome(
        pass,
        format!(
            "median eps ratio {ratio:.3} (N=2e4: {m1:.4}, 4N: {m4:.4}); verify bound >= {true_distance:.4} in {held}/{trials}, \
             {certified} certified below 2, median raw bound {:.3}; {}",
            median(raw),
            secs(elapsed)
        ),
    )
}

fn degenerate_inputs() -> Outcome {
    // A classical chain A-B-C whose middle qutrit never takes its last value,
    // rotated locally on A and C: a Markov state with rank-deficient ρ_B.
    let pa = [0.3, 0.7];
    let pb_a = [[0.6, 0.4, 0.0], [0.1, 0.9, 0.0]];
    let pc_b = [[0.2, 0.8], [0.5, 0.5], [1.0, 0.0]];
    let diag: Vec<f64> = (0..12)
        .map(|i| {
            let (x, y, z) = (i / 6, (i / 2) % 3, i % 2);
            pa[x] * pb_a[x][y] * pc_b[y][z]
        })
        .collect();
    let chain = DensityMatrix::from_diagonal(SystemLayout::from_dims(&[2, 3, 2]).unwrap(), &diag).unwrap();
    let mut urng = rng_from_seed(10);
    let rho = conjugate_site(&chain, 0, &random_unitary_with(2, &mut urng)).unwrap();
    let rho = conjugate_site(&rho, 2, &random_unitary_with(2, &mut urng)).unwrap();
    let (a, b, c) = (r(&[0]), r(&[1]), r(&[2]));
    let rho_b = partial_trace(&rho, &b).unwrap();
    let rank_b = common::rank(rho_b.matrix(), 1e-10);
    let p = recovery::pinv_sqrt(rho_b.matrix(), recovery::RANK_TOL).unwrap();
    let support = recovery::support_projector(rho_b.matrix(), recovery::RANK_TOL);
    let projector_defect = (&p * rho_b.matrix() * &p - &support).norm();
    let ab = partial_trace(&rho, &a.union(&b)).unwrap();
    let bc = partial_trace(&rho, &b.union(&c)).unwrap();
    let recovered = petz_recover(&ab, &bc, &a, &b, &c, &RecoveryOptions::default()).unwrap().state;
    let recovery_error = common::distance(&recovered, &rho);

    // Two marginals that disagree on the shared qubit.
    let q2 = || SystemLayout::qubits(2).unwrap();
    let left = DensityMatrix::from_diagonal(q2(), &[1.0, 0.0, 0.0, 0.0]).unwrap();
    let right = DensityMatrix::from_diagonal(q2(), &[0.0, 0.0, 1.0, 0.0]).unwrap().on_region(r(&[1, 2])).unwrap();
    let bad = RdmBundle::new(vec![left.clone(), right.clone()]);
    let plan = ShieldPlan::chain(3);
    let reconstruct_rejects =
        matches!(reconstruct(&bad, &plan, None, &RecoveryOptions::default()), Err(Error::Consistency(_)));
    let petz_rejects = petz_recover(&left, &right, &r(&[0]), &r(&[1]), &r(&[2]), &RecoveryOptions::default()).is_err();
    let search = tomo::find_consistent_state(&bad, &SystemLayout::qubits(3).unwrap(), 200, 1e-8).unwrap();
    let pass = rank_b == 2
        && projector_defect <= 1e-9
        && recovery_error <= 1e-6
        && reconstruct_rejects
        && petz_rejects
        && !search.converged;
    outcome(
        pass,
        format!(
            "rank(rho_B) = {rank_b}, projector defect {projector_defect:.1e}, recovery error {recovery_error:.1e}; \
             inconsistent bundle: reconstruct rejected {reconstruct_rejects}, petz rejected {petz_rejects}, \
             search converged {} (residual {:.3})",
            search.converged, search.max_residual
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("ssa and weak monotonicity", ssa_and_weak_monotonicity),
        ("strengthened concavity", strengthened_concavity),
        ("tripartite bound on ghz/dephased", tripartite_bound_on_ghz),
        ("markov entropy dominance", markov_entropy_dominance),
        ("petz exactness", petz_exactness),
        ("certificate soundness", certificate_soundness),
        ("shield scores and boundary metrics", shield_scores_and_boundaries),
        ("chain reconstruction", chain_reconstruction),
        ("tomography statistics", tomography_statistics),
        ("degenerate input handling", degenerate_inputs),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
