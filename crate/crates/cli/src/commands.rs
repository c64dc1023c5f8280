use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use locert::bundle::RdmBundle;
use locert::entropy::{EntropyReport, QuantityKind, Query};
use locert::io::{self, ReadOptions, BUNDLE_FORMAT};
use locert::markov::{self, PlanViolation, ShieldPlan};
use locert::planner::{self, GridModel, PredictedBound};
use locert::recovery::{self, RecoveryOptions};
use locert::tomo::{self, MarginalCorrection, MeasurementPlan, Verdict};
use locert::{Error, Region, Result, SystemLayout};
use serde::{Deserialize, Serialize};

use crate::{Command, Correction, RunConfig, Unit};

pub enum Outcome {
    Done,
    /// Output was written but the iteration behind it did not converge.
    NotConverged,
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    let read = ReadOptions { tolerances: config.tolerances, repair: config.repair };
    match &config.command {
        Command::Entropy { state, regions, conditional, mutual_information, cmi, weak_monotonicity } => {
            let state = io::read_state(state, &read)?;
            let mut regions = regions.iter().map(|r| parse_region(r)).collect::<Result<Vec<_>>>()?;
            let mut queries = Vec::new();
            for (kind, args) in [
                (QuantityKind::ConditionalEntropy, conditional),
                (QuantityKind::MutualInformation, mutual_information),
                (QuantityKind::Cmi, cmi),
                (QuantityKind::WeakMonotonicity, weak_monotonicity),
            ] {
                queries.extend(parse_queries(kind, args)?);
            }
            if regions.is_empty() && queries.is_empty() {
                regions.push(state.region().clone());
            }
            let report = EntropyReport::compute(&state, &regions, &queries)?;
            summarize(&entropy_summary(&report, config.unit));
            emit(config, &report)?;
        }
        Command::Certify { bundle, plan, epsilons } => {
            let bundle = io::read_bundle(bundle, &read)?;
            let plan = read_plan(plan)?;
            let eps = match epsilons {
                Some(p) => read_epsilons(p, plan.sites().iter().max().map_or(0, |m| m + 1))?,
                None => Vec::new(),
            };
            let report = markov::certificate(&bundle, &plan, &eps)?;
            summarize(&format!(
                "radicand {}\nbound {} (raw {}){}\n",
                show(report.radicand, config.unit),
                report.bound_capped,
                report.bound_raw,
                if report.nontrivial { "" } else { ", trivial" }
            ));
            emit(config, &report)?;
        }
        Command::Reconstruct { bundle, plan, reference, state_output } => {
            let bundle = io::read_bundle(bundle, &read)?;
            let plan = read_plan(plan)?;
            let reference = reference.as_deref().map(|p| io::read_state(p, &read)).transpose()?;
            let trace = recovery::reconstruct(&bundle, &plan, reference.as_ref(), &RecoveryOptions::default())?;
            if let Some(path) = state_output {
                write_file(path, &io::state_to_json(&trace.state)?)?;
            }
            let mut s = format!("{} steps", trace.steps.len());
            if let Some(d) = trace.final_distance {
                let _ = write!(s, ", final distance {d}");
            }
            if let Some(b) = trace.certificate_bound {
                let _ = write!(s, ", certificate bound {b}");
            }
            s.push('\n');
            summarize(&s);
            emit(config, &trace)?;
        }
        Command::Plan { grid_model, radius, plan_output } => {
            let gm: GridModel = parse_json(grid_model)?;
            let grid = gm.grid()?;
            let model = gm.model()?;
            let plan = planner::generate_plan(&grid, radius.or(gm.radius).unwrap_or(1))?;
            let violations = planner::validate_plan(&plan, &grid);
            let prediction = planner::predict_bound(&plan, &model, &grid)?;
            if let Some(path) = plan_output {
                write_file(path, &io::to_string_precise(&plan)?)?;
            }
            summarize(&format!(
                "predicted bound {} in [{}, {}], remainder {} sites\n",
                prediction.value,
                prediction.lower,
                prediction.upper,
                prediction.remainder.len()
            ));
            emit(config, &PlanOutput { plan, prediction, violations })?;
        }
        Command::Simulate { state, measurement_plan, plan, shots } => {
            let state = io::read_state(state, &read)?;
            let mut mp = match (measurement_plan, plan, shots) {
                (Some(p), _, _) => parse_json::<MeasurementPlan>(p)?,
                (None, Some(p), Some(shots)) => MeasurementPlan::for_plan(&read_plan(p)?, *shots, 0),
                _ => return Err(Error::Parse("give a measurement plan, or --plan with --shots".into())),
            };
            if let Some(seed) = config.seed {
                mp.seed = seed;
            }
            let bundle = mp.simulate(&state)?;
            summarize(&format!("{} regions, {} shots each, seed {}\n", mp.regions.len(), mp.shots, mp.seed));
            write_output(config, &io::bundle_to_json(&bundle)?)?;
        }
        Command::Verify { measured, target, plan } => {
            let measured = io::read_bundle(measured, &read)?;
            let plan = read_plan(plan)?;
            let target = read_target(target, &plan, &read)?;
            let verdict = tomo::verify(&measured, &target, &plan)?;
            let line = match &verdict.verdict {
                Verdict::CertifiedClose { bound } => {
                    format!("certified: distance at most {bound}\n")
                }
                Verdict::NotCertified { reason } => format!("not certified: {reason}\n"),
            };
            summarize(&line);
            emit(config, &verdict)?;
        }
        Command::Consistent { bundle, max_iters, target, correction, state_output } => {
            let bundle = io::read_bundle(bundle, &read)?;
            let layout = bundle_layout(&bundle)?;
            let correction = match correction {
                Correction::Scaling => MarginalCorrection::Scaling,
                Correction::Affine => MarginalCorrection::Affine,
            };
            let outcome = tomo::find_consistent_state_with(&bundle, &layout, *max_iters, *target, correction)?;
            if let Some(path) = state_output {
                write_file(path, &io::state_to_json(&outcome.state)?)?;
            }
            summarize(&format!(
                "{} after {} sweeps, max residual {}\n",
                if outcome.converged { "converged" } else { "did not converge" },
                outcome.iterations,
                outcome.max_residual
            ));
            emit(
                config,
                &ConsistentOutput {
                    converged: outcome.converged,
                    iterations: outcome.iterations,
                    max_residual: outcome.max_residual,
                    residuals: &outcome.residuals,
                },
            )?;
            if !outcome.converged {
                return Ok(Outcome::NotConverged);
            }
        }
    }
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct PlanOutput {
    plan: ShieldPlan,
    prediction: PredictedBound,
    violations: Vec<PlanViolation>,
}

#[derive(Serialize)]
struct ConsistentOutput<'a> {
    converged: bool,
    iterations: usize,
    max_residual: f64,
    residuals: &'a [tomo::MarginalResidual],
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EpsilonFile {
    List(Vec<f64>),
    BySite(BTreeMap<String, f64>),
}

fn parse_region(s: &str) -> Result<Region> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Region::empty());
    }
    let sites = s
        .split(',')
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad site index \"{t}\" in region \"{s}\"")))
        })
        .collect::<Result<Vec<_>>>()?;
    Region::new(sites)
}

fn parse_queries(kind: QuantityKind, args: &[String]) -> Result<Vec<Query>> {
    let arity = match kind {
        QuantityKind::ConditionalEntropy | QuantityKind::MutualInformation => 2,
        QuantityKind::Cmi | QuantityKind::WeakMonotonicity => 3,
    };
    args.chunks(arity)
        .map(|c| {
            Ok(Query {
                kind,
                a: parse_region(&c[0])?,
                b: parse_region(&c[1])?,
                c: c.get(2).map(|r| parse_region(r)).transpose()?,
            })
        })
        .collect()
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = io::read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).context(path.display()))
}

/// Accepts a bare plan or the output of the `plan` command.
fn read_plan(path: &Path) -> Result<ShieldPlan> {
    let mut value: serde_json::Value = parse_json(path)?;
    if let Some(inner) = value.get_mut("plan") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Error::from(e).context(path.display()))
}

/// A map is padded with zeros up to `n_sites`; a list is taken as given.
fn read_epsilons(path: &Path, n_sites: usize) -> Result<Vec<f64>> {
    let eps = match parse_json::<EpsilonFile>(path)? {
        EpsilonFile::List(v) => v,
        EpsilonFile::BySite(m) => {
            let m = m
                .into_iter()
                .map(|(k, e)| {
                    let site = k
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("{}: \"{k}\" is not a site index", path.display())))?;
                    Ok((site, e))
                })
                .collect::<Result<BTreeMap<_, _>>>()?;
            let n = m.keys().next_back().map_or(0, |k| k + 1).max(n_sites);
            let mut v = vec![0.0; n];
            for (k, e) in m {
                v[k] = e;
            }
            v
        }
    };
    if let Some(bad) = eps.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::Domain(format!("{}: epsilon {bad} is not a finite nonnegative number", path.display())));
    }
    Ok(eps)
}

/// A target given as a full state is reduced to the plan's windows.
fn read_target(path: &Path, plan: &ShieldPlan, read: &ReadOptions) -> Result<RdmBundle> {
    let value: serde_json::Value = parse_json(path)?;
    if value.get("format").and_then(|f| f.as_str()) == Some(BUNDLE_FORMAT) {
        return io::read_bundle(path, read);
    }
    let state = io::read_state(path, read)?;
    RdmBundle::from_state(&state, &markov::certificate_regions(plan))
}

/// Sites `0..n` with dimensions read off the bundle.
fn bundle_layout(bundle: &RdmBundle) -> Result<SystemLayout> {
    let n = bundle.rdms().iter().filter_map(|r| r.region().iter().max()).max().map_or(0, |m| m + 1);
    let dims = (0..n)
        .map(|s| bundle.site_dim(s).ok_or_else(|| Error::Coverage(format!("no marginal contains site {s}"))))
        .collect::<Result<Vec<_>>>()?;
    SystemLayout::from_dims(&dims)
}

fn entropy_summary(report: &EntropyReport, unit: Unit) -> String {
    let mut s = String::new();
    for r in &report.regions {
        let _ = writeln!(s, "S{} = {}", r.sites, show(r.entropy_nats, unit));
    }
    for q in &report.quantities {
        let name = match q.kind {
            QuantityKind::ConditionalEntropy => format!("S({}|{})", q.a, q.b),
            QuantityKind::MutualInformation => format!("I({}:{})", q.a, q.b),
            QuantityKind::Cmi => format!("I({}:{}|{})", q.a, q.c.as_ref().unwrap_or(&Region::empty()), q.b),
            QuantityKind::WeakMonotonicity => {
                format!("S({}|{}) + S({}|{})", q.a, q.b, q.a, q.c.as_ref().unwrap_or(&Region::empty()))
            }
        };
        let _ = writeln!(s, "{name} = {}", show(q.value, unit));
    }
    s
}

fn show(nats: f64, unit: Unit) -> String {
    match unit {
        Unit::Nats => format!("{nats:.6} nats"),
        Unit::Bits => format!("{:.6} bits", nats / std::f64::consts::LN_2),
    }
}

fn summarize(text: &str) {
    eprint!("{text}");
}

fn emit<T: Serialize>(config: &RunConfig, value: &T) -> Result<()> {
    write_output(config, &io::to_string_precise(value)?)
}

fn write_output(config: &RunConfig, json: &str) -> Result<()> {
    match &config.output {
        Some(path) => write_file(path, json),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, json: &str) -> Result<()> {
    let mut text = json.to_owned();
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
