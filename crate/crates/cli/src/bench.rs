use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use fairdiv::io::Render;
use fairdiv::rational::{bounds, format_exact, ratio, to_f64};
use fairdiv::verify::{
    campaign_generator, epsilon_instance, measure_approximation, worst_case_search_checked, Approximation, Extreme,
    ProportionalFair, SearchReport, Threshold,
};
use fairdiv::{Instance, MechanismKind, PfSolution};

use crate::report::{Check, Report};
use crate::{emit, guarantee_checks, BenchFormat};

struct Row {
    name: &'static str,
    bound: String,
    measured: Option<Extreme>,
    trials: u64,
    violations: u64,
    errors: u64,
}

impl Row {
    fn from_search(name: &'static str, bound: String, metric: Option<Extreme>, s: &SearchReport) -> Self {
        Self {
            name,
            bound,
            measured: metric,
            trials: s.trials,
            violations: s.violations,
            errors: s.errors,
        }
    }

    fn pass(&self) -> bool {
        self.violations == 0 && self.errors == 0 && self.measured.is_some()
    }

    fn to_json(&self, render: Render) -> Value {
        json!({
            "name": self.name,
            "bound": self.bound,
            "measured": self.measured.as_ref().map_or(Value::Null, |e| render.scalar(&e.value)),
            "witness_trial": self.measured.as_ref().map(|e| e.trial),
            "trials": self.trials,
            "violations": self.violations,
            "errors": self.errors,
            "pass": self.pass(),
        })
    }
}

fn threshold_check(threshold: &Threshold) -> impl Fn(&Instance, &PfSolution, &Approximation) -> bool + Sync + '_ {
    move |_, _, a| threshold.met_by(&a.sw_ratio)
}

fn guarantee_check(kind: MechanismKind) -> impl Fn(&Instance, &PfSolution, &Approximation) -> bool + Sync {
    move |inst, pf, a| guarantee_checks(kind, inst, pf, a).iter().all(|c| c.pass)
}

fn campaign(kind: MechanismKind, trials: u64, seed: u64) -> SearchReport {
    worst_case_search_checked(&kind, campaign_generator(kind), &guarantee_check(kind), trials, seed)
}

fn rows(seed: u64, trials: u64) -> Vec<Row> {
    let mut rows = Vec::new();

    let pf_bound = Threshold::Irrational(bounds::pf_welfare_two_bidders());
    let pf = worst_case_search_checked(
        &ProportionalFair,
        campaign_generator(MechanismKind::PartialAllocation),
        &threshold_check(&pf_bound),
        trials,
        seed,
    );
    rows.push(Row::from_search("pf welfare, n=2", format!("sw/opt >= {pf_bound}"), pf.min_sw_opt.clone(), &pf));

    let pa_exact = |_: &Instance, pf: &PfSolution, a: &Approximation| {
        let (va, vb) = (&pf.utilities[0], &pf.utilities[1]);
        a.result.per_bidder_pf_fraction == [vb.clone(), va.clone()] && a.result.sw == ratio(2, 1) * va * vb
    };
    let pa = worst_case_search_checked(
        &MechanismKind::PartialAllocation,
        campaign_generator(MechanismKind::PartialAllocation),
        &pa_exact,
        trials,
        seed,
    );
    rows.push(Row::from_search("pa, n=2", "rho_A = v_B, rho_B = v_A, sw = 2 v_A v_B".into(), pa.min_rho.clone(), &pa));

    let hybrid = campaign(MechanismKind::Hybrid, trials, seed);
    rows.push(Row::from_search("hybrid vs pf", "sw/sw_pf >= 2/3".into(), hybrid.min_sw_pf.clone(), &hybrid));
    rows.push(Row::from_search(
        "hybrid vs optimum",
        format!("sw/opt >= {}", fairdiv::verify::bounds::hybrid_vs_optimum()),
        hybrid.min_sw_opt.clone(),
        &hybrid,
    ));

    let si = campaign(MechanismKind::SingleItem, trials, seed);
    rows.push(Row::from_search("si, m=2, n<=8", "rho >= n/(n+1)".into(), si.min_rho.clone(), &si));

    let two = campaign(MechanismKind::TwoBidderTwoItem, trials, seed);
    rows.push(Row::from_search(
        "two2, n=2, m=2",
        format!("rho >= {}", bounds::two_bidder_two_item()),
        two.min_rho.clone(),
        &two,
    ));

    let three = campaign(MechanismKind::ThreeBidderTwoItem, trials, seed);
    rows.push(Row::from_search(
        "three2, n=3, m=2",
        format!("rho >= {}", bounds::three_bidder_two_item()),
        three.min_rho.clone(),
        &three,
    ));

    let sdm = campaign(MechanismKind::StrongDemandMatching, (trials / 10).max(1), seed);
    rows.push(Row::from_search("sdm, n>=3m", "rho >= min p/ceil(p)".into(), sdm.min_rho.clone(), &sdm));

    let eps = ratio(1, 1000);
    let inst = epsilon_instance(&eps);
    let pf = fairdiv::pf::solve_pf_exact(&inst);
    let swap = pf.and_then(|pf| {
        measure_approximation(&MechanismKind::SwapDictatorial, &inst, &pf.utilities, &inst.optimal_welfare())
    });
    let (measured, ok) = match swap {
        Ok(a) => {
            let ok = a.sw_ratio >= ratio(1, 2) && a.sw_ratio <= ratio(1, 2) + ratio(10, 1) * &eps;
            (Some(Extreme { value: a.sw_ratio, trial: 0 }), ok)
        }
        Err(_) => (None, false),
    };
    rows.push(Row {
        name: "swap, eps=1/1000",
        bound: "1/2 <= sw/opt <= 1/2 + 10 eps".into(),
        measured,
        trials: 1,
        violations: u64::from(!ok),
        errors: 0,
    });
    rows
}

fn table(rows: &[Row], seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "seed {seed}");
    let _ = writeln!(
        s,
        "{:<20} {:<56} {:>12} {:>8} {:>6} {:>6}",
        "guarantee", "bound", "worst", "trials", "bad", "status"
    );
    for r in rows {
        let worst = r.measured.as_ref().map_or("-".to_string(), |e| format!("{:.9}", to_f64(&e.value)));
        let _ = writeln!(
            s,
            "{:<20} {:<56} {:>12} {:>8} {:>6} {:>6}",
            r.name,
            r.bound,
            worst,
            r.trials,
            r.violations + r.errors,
            if r.pass() { "ok" } else { "FAIL" }
        );
    }
    s
}

pub fn run(seed: u64, trials: u64, format: BenchFormat, render: Render, out: Option<&Path>) -> anyhow::Result<bool> {
    let rows = rows(seed, trials);
    let mut report = Report::new("bench");
    for r in &rows {
        report.checks.push(Check::new(
            r.name,
            r.pass(),
            r.measured
                .as_ref()
                .map_or("no measurement".into(), |e| format!("worst {} at trial {}", format_exact(&e.value), e.trial)),
        ));
    }
    report.extra.insert("seed".into(), json!(seed));
    report.extra.insert("trials".into(), json!(trials));
    report.extra.insert("rows".into(), Value::Array(rows.iter().map(|r| r.to_json(render)).collect()));

    let mut text = String::new();
    if format != BenchFormat::Table {
        text.push_str(&report.render(render));
    }
    if format != BenchFormat::Json {
        text.push_str(&table(&rows, seed));
    }
    emit(out, &text)?;
    Ok(report.passed())
}
