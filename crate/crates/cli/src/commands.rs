use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use tradepost::report::{write_allocation_csv, write_curve_csv, write_trace_csv};
use tradepost::verify::ConcavityReport;
use tradepost::{
    certify_no_trade, classify, concavity_diagnostic, deviation_check, homotopy_solve, kkt_residual, validate, Economy,
    EquilibriumCandidate, HomotopyStatus, Side, ValidationReport,
};

use crate::settings::{ParseError, Settings};
use crate::Status;

pub fn write_json<T: Serialize>(dir: &Path, value: &T) -> Result<()> {
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn fmt_offers(offers: &[f64]) -> String {
    let parts: Vec<String> = offers.iter().map(|o| format!("{o:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// Loads the economy and refuses to go on if it fails validation.
fn validated_economy(settings: &Settings) -> Result<Economy> {
    let economy = settings.load_economy()?;
    let report = validate(&economy)?;
    if !report.passes() {
        return Err(ParseError(format!("economy fails validation: {}", report.violations().join("; "))).into());
    }
    Ok(economy)
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    economy: &'a str,
    passes: bool,
    violations: Vec<String>,
    report: &'a ValidationReport,
}

pub fn run_validate(settings: &Settings) -> Result<Status> {
    let economy = settings.load_economy()?;
    let report = validate(&economy)?;
    let violations = report.violations();
    let dir = settings.out_dir()?;
    write_json(
        dir,
        &ValidateReport {
            economy: settings.economy.as_deref().unwrap_or_default(),
            passes: report.passes(),
            violations: violations.clone(),
            report: &report,
        },
    )?;
    println!(
        "{} agents ({} on side one, {} on side two); concern structure: {:?}",
        economy.len(),
        economy.side(Side::One).len(),
        economy.side(Side::Two).len(),
        report.structural_class
    );
    let witnesses: Vec<String> = report
        .assumption3_witnesses
        .iter()
        .map(|i| (i + 1).to_string())
        .collect();
    println!("assumption 3 witnesses: [{}]", witnesses.join(", "));
    if violations.is_empty() {
        println!("valid");
        Ok(Status::Success)
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Ok(Status::Invalid)
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    status: HomotopyStatus,
    last_good_level: Option<usize>,
    vanishing: &'a [Side],
    candidate: &'a EquilibriumCandidate,
    classification: tradepost::Classification,
    kkt: tradepost::KktReport,
    price_envelope: Option<(f64, f64)>,
    min_aggregate_one: Option<f64>,
    min_aggregate_two: Option<f64>,
    config: &'a tradepost::SolverConfig,
}

pub fn run_solve(settings: &Settings) -> Result<Status> {
    let economy = validated_economy(settings)?;
    let outcome = homotopy_solve(&economy, &settings.solver)?;
    let dir = settings.out_dir()?;
    write_trace_csv(&outcome.trace, economy.len(), create(dir, "trace.csv")?)?;
    write_allocation_csv(
        &economy,
        &outcome.candidate.profile,
        0.0,
        create(dir, "allocation.csv")?,
    )?;
    let classification = classify(&economy, &outcome.candidate);
    let kkt = kkt_residual(&economy, &outcome.candidate)?;
    write_json(
        dir,
        &SolveReport {
            status: outcome.status,
            last_good_level: outcome.last_good_level,
            vanishing: &outcome.vanishing,
            candidate: &outcome.candidate,
            classification,
            kkt: kkt.clone(),
            price_envelope: outcome.trace.price_envelope(),
            min_aggregate_one: outcome.trace.min_aggregate(Side::One),
            min_aggregate_two: outcome.trace.min_aggregate(Side::Two),
            config: &settings.solver,
        },
    )?;
    println!(
        "{:>10} {:>6} {:>5} {:>10} {:>10} {:>10} {:>10}",
        "epsilon", "iters", "conv", "residual", "price", "A", "B"
    );
    for l in &outcome.trace.levels {
        println!(
            "{:>10.1e} {:>6} {:>5} {:>10.2e} {:>10.6} {:>10.6} {:>10.6}",
            l.epsilon, l.candidate.iterations, l.candidate.converged, l.candidate.residual, l.price, l.a, l.b
        );
    }
    println!("status: {:?}", outcome.status);
    println!("limit profile: {}", fmt_offers(outcome.candidate.profile.offers()));
    println!(
        "classification: {:?} (A = {:.6}, B = {:.6}); deviation gain {:.2e}; KKT max residual {:.2e}",
        classification.class, classification.a, classification.b, outcome.candidate.residual, kkt.max_residual
    );
    Ok(if outcome.succeeded() {
        Status::Success
    } else {
        Status::NotConverged
    })
}

#[derive(Serialize)]
struct VerifyReport {
    candidate: EquilibriumCandidate,
    kkt: tradepost::KktReport,
    #[serde(with = "tradepost::report::lenient_f64")]
    deviation_gain: f64,
    classification: tradepost::Classification,
}

pub fn run_verify(settings: &Settings) -> Result<Status> {
    let economy = validated_economy(settings)?;
    let profile = settings.offer_profile(&economy)?;
    let mut candidate = EquilibriumCandidate::at(profile, settings.epsilon);
    let kkt = kkt_residual(&economy, &candidate)?;
    let gain = deviation_check(&economy, &candidate, &settings.solver)?;
    candidate.residual = gain;
    candidate.converged = gain <= settings.solver.fixed_point_tolerance;
    let classification = classify(&economy, &candidate);
    let dir = settings.out_dir()?;
    write_allocation_csv(
        &economy,
        &candidate.profile,
        candidate.epsilon,
        create(dir, "allocation.csv")?,
    )?;
    println!(
        "{:>5} {:>12} {:>14} {:>10} {:>10} {:>12}",
        "agent", "offer", "gradient", "lambda", "mu", "residual"
    );
    for (i, a) in kkt.per_agent.iter().enumerate() {
        println!(
            "{:>5} {:>12.6} {:>14.6e} {:>10.3e} {:>10.3e} {:>12.3e}",
            i + 1,
            a.offer,
            a.gradient,
            a.lambda,
            a.mu,
            a.stationarity_residual
        );
    }
    println!(
        "KKT max residual {:.3e}{}{}",
        kkt.max_residual,
        if kkt.degenerate {
            " (autarky: gradients undefined)"
        } else {
            ""
        },
        if kkt.infinite {
            " (diverging marginal utility)"
        } else {
            ""
        }
    );
    println!("largest deviation gain {gain:.6e}");
    println!(
        "{:?}; {}",
        classification.class,
        if candidate.converged {
            "no profitable deviation"
        } else {
            "not an equilibrium"
        }
    );
    write_json(
        dir,
        &VerifyReport {
            candidate,
            kkt,
            deviation_gain: gain,
            classification,
        },
    )?;
    Ok(Status::Success)
}

#[derive(Serialize)]
struct ScanReport<'a> {
    agent: usize,
    epsilon: f64,
    profile: &'a [f64],
    class: tradepost::Curvature,
    positive_differences: usize,
    negative_differences: usize,
    undefined_differences: usize,
    interior_minimum: Option<tradepost::CurvePoint>,
    maximum: Option<tradepost::CurvePoint>,
}

pub fn scan_report<'a>(agent: usize, epsilon: f64, profile: &'a [f64], r: &ConcavityReport) -> impl Serialize + 'a {
    let maximum = r
        .curve
        .iter()
        .copied()
        .filter(|p| !p.payoff.is_nan())
        .reduce(|best, p| if p.payoff > best.payoff { p } else { best });
    ScanReport {
        agent: agent + 1,
        epsilon,
        profile,
        class: r.class,
        positive_differences: r.positive_differences,
        negative_differences: r.negative_differences,
        undefined_differences: r.undefined_differences,
        interior_minimum: r.interior_minimum,
        maximum,
    }
}

pub fn run_scan(settings: &Settings) -> Result<Status> {
    let economy = validated_economy(settings)?;
    let agent = settings.agent_index(&economy)?;
    let profile = settings.offer_profile(&economy)?;
    let report = concavity_diagnostic(&economy, &profile, settings.epsilon, agent, settings.samples)?;
    let dir = settings.out_dir()?;
    write_curve_csv(&report.curve, create(dir, "curve.csv")?)?;
    write_json(dir, &scan_report(agent, settings.epsilon, profile.offers(), &report))?;
    println!(
        "agent {} payoff over [0, {}] at {} samples: {:?} ({} convex, {} concave second differences)",
        agent + 1,
        economy.agent(agent).endowment,
        report.curve.len(),
        report.class,
        report.positive_differences,
        report.negative_differences
    );
    if let Some(m) = report.interior_minimum {
        println!("interior minimum at offer {:.4} (payoff {:.6})", m.offer, m.payoff);
    }
    println!("curve written to {}", dir.join("curve.csv").display());
    Ok(Status::Success)
}

pub fn run_certify(settings: &Settings) -> Result<Status> {
    let economy = validated_economy(settings)?;
    let cert = certify_no_trade(&economy, settings.resolution, &settings.solver)?;
    let dir = settings.out_dir()?;
    write_json(dir, &cert)?;
    let ev = &cert.evidence;
    println!(
        "grid oracle at resolution {}: {} profiles, {} survivor(s)",
        cert.resolution,
        ev.profiles_checked,
        ev.grid_survivors.len()
    );
    println!("zero profile deviation gain {:.2e}", ev.max_deviation_gain);
    println!(
        "homotopy: {:?} at {}",
        ev.homotopy_status,
        fmt_offers(ev.homotopy_profile.offers())
    );
    for s in &ev.foc.sides {
        println!(
            "side {} sweep: {} points, gradients negative on {:.2}% ({} positive, {} zero, {} non-finite)",
            s.side,
            s.points,
            100.0 * s.stats.fraction_negative(),
            s.stats.positive,
            s.stats.zero,
            s.stats.non_finite
        );
    }
    for s in &ev.foc.stationary {
        println!(
            "stationary point {}: KKT {:.1e}, deviation gain {:.3e}, {}",
            fmt_offers(s.profile.offers()),
            s.kkt_max_residual,
            s.deviation_gain,
            if s.equilibrium {
                "equilibrium"
            } else {
                "not an equilibrium"
            }
        );
    }
    println!("certificate: {:?}", cert.kind);
    Ok(Status::Success)
}
