//! Approximation measurement and seeded worst-case campaigns.

use rayon::prelude::*;

use crate::error::Result;
use crate::mechanism::Mechanism;
use crate::model::{Instance, MechanismResult};
use crate::model::Allocation;
use crate::pf::{solve_pf_exact, PfSolution};
use crate::rational::{format_exact, to_f64, Rational};

use super::generate::trial_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Approximation {
    pub result: MechanismResult,
    pub rho: Rational,
    /// `SW(x) / sw_opt`.
    pub sw_ratio: Rational,
}

pub fn measure_approximation<M: Mechanism + ?Sized>(
    mech: &M,
    inst: &Instance,
    pf_utilities: &[Rational],
    sw_opt: &Rational,
) -> Result<Approximation> {
    let x = mech.allocate(inst)?;
    let result = MechanismResult::new(inst, x, pf_utilities)?;
    Ok(Approximation {
        rho: result.rho.clone(),
        sw_ratio: &result.sw / sw_opt,
        result,
    })
}

/// The PF allocation itself, for measuring its welfare like any mechanism.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProportionalFair;

impl Mechanism for ProportionalFair {
    fn name(&self) -> &str {
        "pf"
    }

    fn check_shape(&self, _inst: &Instance) -> Result<()> {
        Ok(())
    }

    fn allocate(&self, inst: &Instance) -> Result<Allocation> {
        Ok(solve_pf_exact(inst)?.allocation)
    }
}

/// The worst value of one metric and the trial that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extreme {
    pub value: Rational,
    pub trial: u64,
}

impl Extreme {
    fn merge(a: Option<Extreme>, b: Option<Extreme>) -> Option<Extreme> {
        match (a, b) {
            (Some(a), Some(b)) => Some(if (&b.value, b.trial) < (&a.value, a.trial) { b } else { a }),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchReport {
    pub trials: u64,
    pub seed: u64,
    pub min_rho: Option<Extreme>,
    /// Against `Σ_j max_i v_ij`.
    pub min_sw_opt: Option<Extreme>,
    /// Against the welfare of the PF allocation.
    pub min_sw_pf: Option<Extreme>,
    /// Trials on which the mechanism or the PF solver returned an error.
    pub errors: u64,
    /// Trials rejected by the per-trial check, and the first of them.
    pub violations: u64,
    pub first_violation: Option<u64>,
}

impl SearchReport {
    fn merge(self, other: SearchReport) -> SearchReport {
        SearchReport {
            trials: self.trials + other.trials,
            seed: self.seed,
            min_rho: Extreme::merge(self.min_rho, other.min_rho),
            min_sw_opt: Extreme::merge(self.min_sw_opt, other.min_sw_opt),
            min_sw_pf: Extreme::merge(self.min_sw_pf, other.min_sw_pf),
            errors: self.errors + other.errors,
            violations: self.violations + other.violations,
            first_violation: match (self.first_violation, other.first_violation) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
        }
    }

    /// One line per metric: `metric value trial`.
    pub fn lines(&self, mechanism: &str) -> Vec<String> {
        let mut out = Vec::new();
        for (name, e) in [("rho", &self.min_rho), ("sw_opt", &self.min_sw_opt), ("sw_pf", &self.min_sw_pf)] {
            if let Some(e) = e {
                out.push(format!(
                    "mechanism={mechanism} seed={} trial={} metric={name} value={} approx={:.9}",
                    self.seed,
                    e.trial,
                    format_exact(&e.value),
                    to_f64(&e.value)
                ));
            }
        }
        out
    }
}

/// Per-trial acceptance test on the instance, its PF solution and the measurement.
pub type Check<'a> = dyn Fn(&Instance, &PfSolution, &Approximation) -> bool + Sync + 'a;

fn one_trial<M, G>(mech: &M, generator: &G, check: &Check<'_>, seed: u64, trial: u64) -> SearchReport
where
    M: Mechanism + ?Sized,
    G: Fn(&mut rand_chacha::ChaCha8Rng) -> Instance + Sync,
{
    let inst = generator(&mut trial_rng(seed, trial));
    let outcome = solve_pf_exact(&inst).and_then(|pf| {
        let opt = inst.optimal_welfare();
        let a = measure_approximation(mech, &inst, &pf.utilities, &opt)?;
        let pf_sw: Rational = pf.utilities.iter().sum();
        let ok = check(&inst, &pf, &a);
        Ok((a, pf_sw, ok))
    });
    let mut report = SearchReport {
        trials: 1,
        seed,
        ..SearchReport::default()
    };
    match outcome {
        Ok((a, pf_sw, ok)) => {
            if !ok {
                report.violations = 1;
                report.first_violation = Some(trial);
            }
            let at = |value| Some(Extreme { value, trial });
            report.min_sw_pf = at(&a.result.sw / pf_sw);
            report.min_rho = at(a.rho);
            report.min_sw_opt = at(a.sw_ratio);
        }
        Err(_) => report.errors = 1,
    }
    report
}

/// Runs `trials` seeded trials in parallel. Ties between equal extremes go to
/// the lower trial index, so the report does not depend on scheduling.
pub fn worst_case_search<M, G>(mech: &M, generator: G, trials: u64, seed: u64) -> SearchReport
where
    M: Mechanism + ?Sized,
    G: Fn(&mut rand_chacha::ChaCha8Rng) -> Instance + Sync,
{
    worst_case_search_checked(mech, generator, &|_, _, _| true, trials, seed)
}

/// [`worst_case_search`] that also counts trials failing `check`.
pub fn worst_case_search_checked<M, G>(mech: &M, generator: G, check: &Check<'_>, trials: u64, seed: u64) -> SearchReport
where
    M: Mechanism + ?Sized,
    G: Fn(&mut rand_chacha::ChaCha8Rng) -> Instance + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| one_trial(mech, &generator, check, seed, t))
        .reduce(
            || SearchReport {
                seed,
                ..SearchReport::default()
            },
            SearchReport::merge,
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::MechanismKind;
    use crate::verify::generate::Family;

    #[test]
    fn pa_disjoint_is_exact() {
        let inst = Instance::from_weights(&[[1, 0], [0, 1]]).unwrap();
        let pf = solve_pf_exact(&inst).unwrap();
        let a = measure_approximation(
            &MechanismKind::PartialAllocation,
            &inst,
            &pf.utilities,
            &inst.optimal_welfare(),
        )
        .unwrap();
        assert_eq!(a.rho, crate::rational::int(1));
        assert_eq!(a.sw_ratio, crate::rational::int(1));
    }

    #[test]
    fn search_is_reproducible() {
        let gen = |rng: &mut rand_chacha::ChaCha8Rng| Family::Uniform.generate(rng, 2, 3);
        let a = worst_case_search(&MechanismKind::Hybrid, gen, 200, 11);
        let b = worst_case_search(&MechanismKind::Hybrid, gen, 200, 11);
        assert_eq!(a, b);
        assert_eq!(a.trials, 200);
        assert_eq!(a.errors, 0);
        assert!(a.min_sw_pf.unwrap().value >= crate::rational::ratio(2, 3));
    }

    #[test]
    fn checked_search_reports_first_violation() {
        let gen = |rng: &mut rand_chacha::ChaCha8Rng| Family::Uniform.generate(rng, 2, 2);
        let picky = |_: &Instance, _: &PfSolution, a: &Approximation| a.rho == crate::rational::int(1);
        let r = worst_case_search_checked(&MechanismKind::PartialAllocation, gen, &picky, 50, 3);
        assert_eq!(r.violations, 50);
        assert_eq!(r.first_violation, Some(0));
        let pf = worst_case_search_checked(&ProportionalFair, gen, &picky, 50, 3);
        assert_eq!(pf.violations, 0);
    }
}
