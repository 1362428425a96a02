//! Built-in scenarios with machine-checked expectations.

use std::path::Path;

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tradepost::report::{write_curve_csv, write_trace_csv};
use tradepost::scenarios::{self, EXAMPLE3_FOOTNOTE_STATIONARY, EXAMPLE3_STATIONARY};
use tradepost::solver::nearest_trade_survivor;
use tradepost::{
    best_response, certify_no_trade, concavity_diagnostic, deviation_check, grid_oracle, homotopy_solve, kkt_residual,
    payoff_gradient, validate, Certificate, CertificateKind, Economy, EquilibriumCandidate, HomotopyOutcome,
    HomotopyStatus, OfferProfile, Side, SolverConfig,
};

use crate::commands::{create, scan_report, write_json};
use crate::settings::{ParseError, Settings};
use crate::Status;

pub const SCENARIOS: [&str; 7] = [
    "example1",
    "example2",
    "example3",
    "example3-footnote",
    "theorem",
    "corollary",
    "random",
];

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    pass: bool,
    observed: String,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: &str, pass: bool, observed: impl Into<String>) {
        self.0.push(Check {
            name: name.to_string(),
            pass,
            observed: observed.into(),
        });
    }
}

#[derive(Serialize)]
struct ScenarioReport {
    scenario: String,
    checks: Vec<Check>,
}

fn zero_candidate(e: &Economy) -> EquilibriumCandidate {
    EquilibriumCandidate::at(OfferProfile::zeros(e.len()), 0.0)
}

fn check_valid(c: &mut Checks, e: &Economy) -> Result<()> {
    let report = validate(e)?;
    c.add(
        "assumptions hold",
        report.passes(),
        format!("{:?}", report.violations()),
    );
    Ok(())
}

fn check_zero_profile(c: &mut Checks, e: &Economy, cfg: &SolverConfig) -> Result<()> {
    let gain = deviation_check(e, &zero_candidate(e), cfg)?;
    c.add(
        "zero profile is an equilibrium",
        gain <= cfg.fixed_point_tolerance,
        format!("gain {gain:.2e}"),
    );
    Ok(())
}

fn check_certificate(c: &mut Checks, cert: &Certificate, expected: CertificateKind) {
    c.add(
        &format!("certificate {expected:?}"),
        cert.kind == expected,
        format!(
            "{:?}; {} grid survivor(s); homotopy {:?}",
            cert.kind,
            cert.evidence.grid_survivors.len(),
            cert.evidence.homotopy_status
        ),
    );
}

fn solve(dir: &Path, e: &Economy, cfg: &SolverConfig) -> Result<HomotopyOutcome> {
    let out = homotopy_solve(e, cfg)?;
    write_trace_csv(&out.trace, e.len(), create(dir, "trace.csv")?)?;
    Ok(out)
}

fn no_trade_example(c: &mut Checks, dir: &Path, e: &Economy, settings: &Settings) -> Result<Certificate> {
    let cfg = &settings.solver;
    check_valid(c, e)?;
    check_zero_profile(c, e, cfg)?;
    let out = solve(dir, e, cfg)?;
    c.add(
        "homotopy finds no trade",
        out.status != HomotopyStatus::Trade,
        format!("{:?}, vanishing sides {:?}", out.status, out.vanishing),
    );
    let cert = certify_no_trade(e, settings.resolution, cfg)?;
    check_certificate(c, &cert, CertificateKind::NoTradeUnique);
    Ok(cert)
}

fn example1(c: &mut Checks, dir: &Path, settings: &Settings) -> Result<Certificate> {
    let e = scenarios::example1();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = OfferProfile::new((0..4).map(|_| rng.random_range(0.04..3.96)).collect());
        worst = worst.max((payoff_gradient(&e, &p, 0.0, 0)?.value + 2.0 / 3.0).abs());
    }
    c.add(
        "agent 1 gradient is -2/3 everywhere",
        worst <= 1e-9,
        format!("max deviation {worst:.1e} over 1000 profiles"),
    );
    no_trade_example(c, dir, &e, settings)
}

fn example2(c: &mut Checks, dir: &Path, settings: &Settings) -> Result<Certificate> {
    let e = scenarios::example2();
    let cert = no_trade_example(c, dir, &e, settings)?;
    let stats = cert.evidence.foc.side(Side::One).map(|s| s.stats).unwrap_or_default();
    c.add(
        "side one gradients negative on at least 99% of the sweep",
        stats.fraction_negative() >= 0.99,
        format!("{:.2}% of {}", 100.0 * stats.fraction_negative(), stats.total()),
    );
    Ok(cert)
}

fn example3(c: &mut Checks, dir: &Path, settings: &Settings, e: Economy, stationary: [f64; 4]) -> Result<Certificate> {
    let cfg = &settings.solver;
    let cert = no_trade_example(c, dir, &e, settings)?;
    let reported = OfferProfile(stationary.to_vec());
    let shown = format!("{:?}", stationary);
    let nearest = cert
        .evidence
        .foc
        .stationary
        .iter()
        .min_by(|x, y| x.profile.distance(&reported).total_cmp(&y.profile.distance(&reported)));
    match nearest {
        Some(s) => {
            c.add(
                &format!("first-order sweep recovers {shown}"),
                s.profile.distance(&reported) <= 1e-2,
                format!("{:?}", s.profile.offers()),
            );
            c.add(
                "KKT residual there below 1e-2",
                s.kkt_max_residual < 1e-2,
                format!("{:.2e}", s.kkt_max_residual),
            );
        }
        None => c.add(
            &format!("first-order sweep recovers {shown}"),
            false,
            "no stationary point",
        ),
    }
    let at = EquilibriumCandidate::at(reported.clone(), 0.0);
    let gain = deviation_check(&e, &at, cfg)?;
    c.add(
        "agent 1 gains more than 0.01 by deviating",
        gain > 0.01,
        format!("{gain:.4}"),
    );
    let br = best_response(&e, &reported, 0.0, 0, cfg)?;
    let endowment = e.agent(0).endowment;
    c.add(
        "agent 1's best response is an endpoint",
        br.offer <= 1e-6 || br.offer >= endowment - 1e-6,
        format!("offer {:.6}, payoff {:.6}", br.offer, br.payoff),
    );
    let report = concavity_diagnostic(&e, &reported, 0.0, 0, settings.samples)?;
    write_curve_csv(&report.curve, create(dir, "curve.csv")?)?;
    let minimum = report.interior_minimum;
    c.add(
        &format!("payoff curve has its interior minimum near {}", stationary[0]),
        minimum.is_some_and(|m| (m.offer - stationary[0]).abs() <= 1e-2),
        format!("{minimum:?}"),
    );
    // global class is reported, not asserted: the curve is concave near 0
    println!(
        "  note: curvature {:?} ({} convex, {} concave second differences)",
        report.class, report.positive_differences, report.negative_differences
    );
    std::fs::write(
        dir.join("curve.json"),
        serde_json::to_string_pretty(&scan_report(0, 0.0, reported.offers(), &report))? + "\n",
    )?;
    Ok(cert)
}

fn trade_economy(c: &mut Checks, dir: &Path, settings: &Settings, e: Economy, closed_form: f64) -> Result<Certificate> {
    let cfg = &settings.solver;
    check_valid(c, &e)?;
    check_zero_profile(c, &e, cfg)?;
    let out = solve(dir, &e, cfg)?;
    c.add(
        "every perturbation level converges",
        out.trace.all_converged() && out.trace.levels.len() == cfg.epsilon_schedule.len(),
        format!("{} levels", out.trace.levels.len()),
    );
    c.add(
        "homotopy ends in a trade equilibrium",
        out.status == HomotopyStatus::Trade,
        format!("{:?}", out.status),
    );
    let target = OfferProfile(vec![closed_form; e.len()]);
    let distance = out.candidate.profile.distance(&target);
    c.add(
        &format!("limit matches the symmetric solution {closed_form}"),
        distance <= 1e-6,
        format!("{:?}", out.candidate.profile.offers()),
    );
    let kkt = kkt_residual(&e, &out.candidate)?.max_residual;
    c.add("KKT residual below 1e-6", kkt < 1e-6, format!("{kkt:.2e}"));
    let (lo, hi) = out.trace.price_envelope().unwrap_or((0.0, f64::INFINITY));
    let floor = out.trace.min_aggregate(Side::One).unwrap_or(0.0);
    c.add(
        "prices stay within a factor 4",
        lo > 0.0 && hi / lo <= 4.0,
        format!("[{lo:.6}, {hi:.6}]"),
    );
    c.add(
        "side one aggregate stays above 0.01",
        floor >= 0.01,
        format!("{floor:.6}"),
    );
    let cert = certify_no_trade(&e, settings.resolution, cfg)?;
    check_certificate(c, &cert, CertificateKind::TradeEquilibriumVerified);
    Ok(cert)
}

fn random(c: &mut Checks, dir: &Path, settings: &Settings) -> Result<()> {
    let cfg = &settings.solver;
    let e = scenarios::seeded_random_independent(settings.seed);
    std::fs::write(dir.join("economy.toml"), tradepost::format::to_toml(&e))?;
    check_valid(c, &e)?;
    let out = solve(dir, &e, cfg)?;
    c.add(
        "homotopy ends in a trade equilibrium",
        out.status == HomotopyStatus::Trade,
        format!("{:?}", out.status),
    );
    let survivors = grid_oracle(&e, 0.02, 0.0)?;
    let nearest = nearest_trade_survivor(&e, &survivors, &out.candidate.profile).map(|(_, d)| d);
    c.add(
        "grid oracle at 0.02 agrees within 0.04",
        nearest.is_some_and(|d| d <= 0.04),
        format!("seed {}, distance {nearest:?}", settings.seed),
    );
    Ok(())
}

fn run_one(name: &str, settings: &Settings) -> Result<Vec<Check>> {
    let dir = settings.out_dir()?.join(name);
    std::fs::create_dir_all(&dir)?;
    let mut c = Checks::default();
    let cert = match name {
        "example1" => Some(example1(&mut c, &dir, settings)?),
        "example2" => Some(example2(&mut c, &dir, settings)?),
        "example3" => Some(example3(
            &mut c,
            &dir,
            settings,
            scenarios::example3(),
            EXAMPLE3_STATIONARY,
        )?),
        "example3-footnote" => Some(example3(
            &mut c,
            &dir,
            settings,
            scenarios::example3_footnote(),
            EXAMPLE3_FOOTNOTE_STATIONARY,
        )?),
        "theorem" => Some(trade_economy(
            &mut c,
            &dir,
            settings,
            scenarios::theorem(),
            scenarios::THEOREM_EQUILIBRIUM_OFFER,
        )?),
        "corollary" => Some(trade_economy(
            &mut c,
            &dir,
            settings,
            scenarios::corollary(),
            scenarios::COROLLARY_EQUILIBRIUM_OFFER,
        )?),
        "random" => {
            random(&mut c, &dir, settings)?;
            None
        }
        _ => unreachable!(),
    };
    if let Some(cert) = cert {
        std::fs::write(
            dir.join("certificate.json"),
            serde_json::to_string_pretty(&cert)? + "\n",
        )?;
    }
    Ok(c.0)
}

pub fn run_repro(settings: &Settings, scenario: &str) -> Result<Status> {
    let names: Vec<&str> = if scenario == "all" {
        SCENARIOS.to_vec()
    } else if SCENARIOS.contains(&scenario) {
        vec![scenario]
    } else {
        bail!(ParseError(format!(
            "unknown scenario `{scenario}` (known: all, {})",
            SCENARIOS.join(", ")
        )));
    };
    let mut reports = Vec::new();
    let mut failures = 0;
    for name in names {
        println!("{name}");
        let checks = run_one(name, settings)?;
        for ch in &checks {
            println!(
                "  [{}] {}: {}",
                if ch.pass { "ok" } else { "MISMATCH" },
                ch.name,
                ch.observed
            );
            if !ch.pass {
                failures += 1;
            }
        }
        reports.push(ScenarioReport {
            scenario: name.to_string(),
            checks,
        });
    }
    write_json(settings.out_dir()?, &reports)?;
    println!("{} mismatch(es)", failures);
    Ok(if failures == 0 {
        Status::Success
    } else {
        Status::Mismatch
    })
}
