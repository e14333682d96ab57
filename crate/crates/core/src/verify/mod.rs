//! Instance generation, a brute-force PF oracle, deviation search and
//! worst-case campaigns.

pub mod bounds;
pub mod generate;
pub mod oracle;
pub mod search;
pub mod truth;

pub use bounds::{below_unit_price, rho_threshold, sdm_guarantee, sw_opt_threshold, sw_pf_threshold, Threshold};
pub use generate::{campaign_generator, epsilon_instance, simplex_weights, trial_rng, Family, Generator};
pub use oracle::{brute_force_pf, OracleSolution};
pub use search::{
    measure_approximation, worst_case_search, worst_case_search_checked, Approximation, Check, Extreme, ProportionalFair,
    SearchReport,
};
pub use truth::{check_truthfulness, check_truthfulness_grid, deviation_grid, TopValueDictator, TruthReport, Witness};
