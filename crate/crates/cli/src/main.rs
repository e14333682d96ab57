mod bench;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fairdiv::io::{instance_json, parse_instance, serialize_instance, Render};
use fairdiv::model::MechanismResult;
use fairdiv::pf::{solve_pf_exact, verify_equilibrium};
use fairdiv::rational::format_exact;
use fairdiv::sdm::run_sdm;
use fairdiv::verify::{
    below_unit_price, campaign_generator, check_truthfulness_grid, rho_threshold, sw_opt_threshold, sw_pf_threshold,
    measure_approximation, trial_rng, worst_case_search_checked, Approximation, Extreme, Family,
};
use fairdiv::{Error, Instance, Mechanism, MechanismKind, PfSolution, Rational};

use report::{Check, Report};

const EQUILIBRIUM_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "fairdiv", version, about = "Truthful allocation of divisible goods without money")]
struct Cli {
    /// Render rationals as decimals with this many digits instead of exact p/q.
    #[arg(long, global = true, value_name = "K")]
    decimal: Option<usize>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the proportionally fair allocation and verify the equilibrium.
    Pf { file: PathBuf },
    /// Run one mechanism on an instance file.
    Run {
        #[arg(long, value_parser = parse_kind)]
        mechanism: MechanismKind,
        file: PathBuf,
    },
    /// Seeded worst-case campaign plus a deviation search on the first trials.
    Verify {
        #[arg(long, value_parser = parse_kind)]
        mechanism: MechanismKind,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, env = "FAIRDIV_SEED", default_value_t = 0)]
        seed: u64,
        /// How many of the first trials also get a deviation search.
        #[arg(long, default_value_t = 4)]
        truth_trials: u64,
        /// Write each worst-case instance to this directory.
        #[arg(long, value_name = "DIR")]
        witness_dir: Option<PathBuf>,
    },
    /// Print a random instance.
    Gen {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, env = "FAIRDIV_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Campaigns for every guarantee, as JSON and a plain-text table.
    Bench {
        #[arg(long, env = "FAIRDIV_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = BenchFormat::Both)]
        format: BenchFormat,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchFormat {
    Json,
    Table,
    Both,
}

fn parse_kind(s: &str) -> Result<MechanismKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Every guarantee `kind` claims on this one instance.
pub fn guarantee_checks(kind: MechanismKind, inst: &Instance, pf: &PfSolution, a: &Approximation) -> Vec<Check> {
    let mut checks = Vec::new();
    let pf_sw: Rational = pf.utilities.iter().sum();
    let metrics = [
        ("rho", rho_threshold(kind, inst, pf), a.rho.clone()),
        ("sw_vs_optimum", sw_opt_threshold(kind), a.sw_ratio.clone()),
        ("sw_vs_pf", sw_pf_threshold(kind), &a.result.sw / pf_sw),
    ];
    for (name, threshold, value) in metrics {
        if let Some(t) = threshold {
            checks.push(Check::new(
                name,
                t.met_by(&value),
                format!("{} >= {t}", format_exact(&value)),
            ));
        }
    }
    checks
}

fn feasibility(result: &MechanismResult) -> Check {
    match result.allocation.validate() {
        Ok(()) => Check::new("feasible", true, "shares in [0,1], column sums <= 1"),
        Err(e) => Check::new("feasible", false, e.to_string()),
    }
}

fn cmd_pf(file: &Path, render: Render) -> anyhow::Result<Report> {
    let inst = parse_instance(file)?;
    let pf = solve_pf_exact(&inst)?;
    let eq = verify_equilibrium(&inst, &pf, EQUILIBRIUM_TOL);
    let mut report = Report::new("pf");
    report.checks.push(Check::new(
        "equilibrium",
        eq.is_ok(),
        format!("{} violations, max residual {:.3e}", eq.violations.len(), eq.max_residual),
    ));
    report.prices = Some(pf.prices.clone());
    report.allocation = Some(pf.allocation.clone());
    report.rho = Some(Rational::from_integer(1.into()));
    report.sw = Some(pf.utilities.iter().sum());
    report.extra.insert("utilities".into(), render.vector(&pf.utilities));
    report.extra.insert("exact".into(), Value::Bool(pf.certified));
    report.instance = Some(inst);
    Ok(report)
}

fn cmd_run(kind: MechanismKind, file: &Path, render: Render) -> anyhow::Result<Report> {
    let inst = parse_instance(file)?;
    kind.check_shape(&inst)?;
    let pf = solve_pf_exact(&inst)?;
    let mut report = Report::new(kind.as_str());
    let (allocation, prices) = if kind == MechanismKind::StrongDemandMatching {
        let outcome = run_sdm(&inst)?;
        report.extra.insert("pf_prices".into(), render.vector(&pf.prices));
        report.extra.insert("events".into(), json!(outcome.stats.events()));
        report.extra.insert("below_unit_price".into(), Value::Bool(below_unit_price(&pf.prices)));
        (outcome.allocation, outcome.prices)
    } else {
        (kind.allocate(&inst)?, pf.prices.clone())
    };
    let a = measure_approximation(&FixedAllocation(allocation), &inst, &pf.utilities, &inst.optimal_welfare())?;
    report.checks.push(feasibility(&a.result));
    report.checks.extend(guarantee_checks(kind, &inst, &pf, &a));
    report.extra.insert("utilities".into(), render.vector(&a.result.per_bidder_utility));
    report.extra.insert("pf_fractions".into(), render.vector(&a.result.per_bidder_pf_fraction));
    report.prices = Some(prices);
    report.rho = Some(a.rho);
    report.sw = Some(a.result.sw.clone());
    report.allocation = Some(a.result.allocation);
    report.instance = Some(inst);
    Ok(report)
}

/// Replays an allocation already computed.
struct FixedAllocation(fairdiv::Allocation);

impl Mechanism for FixedAllocation {
    fn name(&self) -> &str {
        "fixed"
    }

    fn check_shape(&self, _inst: &Instance) -> fairdiv::Result<()> {
        Ok(())
    }

    fn allocate(&self, _inst: &Instance) -> fairdiv::Result<fairdiv::Allocation> {
        Ok(self.0.clone())
    }
}

fn cmd_verify(
    kind: MechanismKind,
    trials: u64,
    seed: u64,
    truth_trials: u64,
    witness_dir: Option<&Path>,
) -> anyhow::Result<Report> {
    let gen = campaign_generator(kind);
    let check = |inst: &Instance, pf: &PfSolution, a: &Approximation| {
        guarantee_checks(kind, inst, pf, a).iter().all(|c| c.pass)
    };
    let search = worst_case_search_checked(&kind, &gen, &check, trials, seed);
    let mut report = Report::new(kind.as_str());

    let mut records = search.lines(kind.as_str());
    if let Some(dir) = witness_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let extremes = [&search.min_rho, &search.min_sw_opt, &search.min_sw_pf];
        for (line, e) in records.iter_mut().zip(extremes.into_iter().flatten()) {
            let path = dir.join(format!("{kind}-seed{seed}-trial{}.json", e.trial));
            std::fs::write(&path, serialize_instance(&gen(&mut trial_rng(seed, e.trial))))
                .with_context(|| format!("writing {}", path.display()))?;
            line.push_str(&format!(" witness={}", path.display()));
        }
    }

    report.checks.push(Check::new(
        "no_errors",
        search.errors == 0,
        format!("{} of {} trials failed to run", search.errors, search.trials),
    ));
    report.checks.push(Check::new(
        "guarantees",
        search.violations == 0,
        match search.first_violation {
            Some(t) => format!("{} trials below the guarantee, first at trial {t}", search.violations),
            None => format!("all {} trials meet every guarantee", search.trials),
        },
    ));

    let mut worst_gain: Option<Rational> = None;
    let mut truth_failures = 0;
    for t in 0..truth_trials.min(trials) {
        let inst = gen(&mut trial_rng(seed, t));
        let r = check_truthfulness_grid(&kind, &inst)?;
        if !r.no_profitable_lie() {
            truth_failures += 1;
        }
        if worst_gain.as_ref().is_none_or(|g| &r.max_gain > g) {
            worst_gain = Some(r.max_gain);
        }
    }
    if let Some(g) = worst_gain {
        report.checks.push(Check::new(
            "deviation_search",
            truth_failures == 0,
            format!("largest gain {} over {} instances", format_exact(&g), truth_trials.min(trials)),
        ));
    }

    if let Some(e) = &search.min_rho {
        let inst = gen(&mut trial_rng(seed, e.trial));
        let result = kind.run(&inst)?;
        let pf = solve_pf_exact(&inst)?;
        report.prices = Some(pf.prices);
        report.rho = Some(result.rho);
        report.sw = Some(result.sw);
        report.allocation = Some(result.allocation);
        report.instance = Some(inst);
    }
    let metric = |e: &Option<Extreme>| {
        e.as_ref()
            .map_or(Value::Null, |e| json!({ "value": format_exact(&e.value), "trial": e.trial }))
    };
    report.extra.insert("seed".into(), json!(seed));
    report.extra.insert("trials".into(), json!(trials));
    report.extra.insert("min_rho".into(), metric(&search.min_rho));
    report.extra.insert("min_sw_vs_optimum".into(), metric(&search.min_sw_opt));
    report.extra.insert("min_sw_vs_pf".into(), metric(&search.min_sw_pf));
    report.extra.insert("records".into(), json!(records));
    Ok(report)
}

fn exit_for(err: &anyhow::Error) -> ExitCode {
    let usage = err.downcast_ref::<Error>().is_some_and(|e| {
        matches!(
            e,
            Error::ShapeMismatch { .. }
                | Error::Parse { .. }
                | Error::Ragged { .. }
                | Error::NegativeValue { .. }
                | Error::DegenerateBidder { .. }
                | Error::EmptyInstance
        )
    });
    if usage {
        eprintln!("usage error: {err:#}");
        ExitCode::from(2)
    } else {
        eprintln!("error: {err:#}");
        ExitCode::from(3)
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let render = cli.decimal.map_or(Render::Exact, Render::Decimal);
    let out = cli.out.as_deref();
    let report = match cli.command {
        Command::Pf { file } => cmd_pf(&file, render)?,
        Command::Run { mechanism, file } => cmd_run(mechanism, &file, render)?,
        Command::Verify {
            mechanism,
            trials,
            seed,
            truth_trials,
            witness_dir,
        } => cmd_verify(mechanism, trials, seed, truth_trials, witness_dir.as_deref())?,
        Command::Gen {
            family,
            n,
            m,
            seed,
            trial,
        } => {
            anyhow::ensure!(n > 0 && m > 0, Error::EmptyInstance);
            let inst = family.generate(&mut trial_rng(seed, trial), n, m);
            let text = match render {
                Render::Exact => serialize_instance(&inst),
                Render::Decimal(_) => format!("{}\n", serde_json::to_string_pretty(&instance_json(&inst, render))?),
            };
            emit(out, &text)?;
            return Ok(true);
        }
        Command::Bench { seed, trials, format } => return bench::run(seed, trials, format, render, out),
    };
    emit(out, &report.render(render))?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => exit_for(&e),
    }
}
