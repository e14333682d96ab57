//! Seeded random instance families.
//!
//! Rows are drawn as integer weights and normalized exactly, so every
//! generated instance is a plain rational matrix.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mechanism::MechanismKind;
use crate::model::Instance;
use crate::rational::{int, Rational};

/// Resolution of quantized simplex samples.
const SCALE: f64 = (1u64 << 20) as f64;

/// Per-trial generator: stream `trial` of the ChaCha stream seeded by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniform point on the simplex from normalized exponential spacings.
pub fn simplex_weights<R: Rng>(rng: &mut R, m: usize) -> Vec<i64> {
    loop {
        let w: Vec<i64> = (0..m)
            .map(|_| {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                (-u.ln() * SCALE).round() as i64
            })
            .collect();
        if w.iter().any(|&x| x > 0) {
            return w;
        }
    }
}

fn to_row(w: &[i64]) -> Vec<Rational> {
    w.iter().map(|&x| int(x)).collect()
}

fn build(rows: Vec<Vec<i64>>) -> Instance {
    Instance::normalize(rows.iter().map(|r| to_row(r)).collect()).expect("generated rows are nonzero")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Independent uniform simplex rows.
    Uniform,
    /// Small integer weights in `0..=4`, giving many exact ties.
    SmallIntegers,
    /// Rows that are tiny perturbations of one common row.
    NearTies,
    /// Every item valued by exactly one bidder.
    Disjoint,
    /// Two bidders each concentrated on her own item, `ε` spread over the rest.
    Epsilon,
    /// Two items with a log-uniform top-to-bottom ratio per bidder.
    TwoItemSkewed,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Uniform,
        Family::SmallIntegers,
        Family::NearTies,
        Family::Disjoint,
        Family::Epsilon,
        Family::TwoItemSkewed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::SmallIntegers => "integers",
            Family::NearTies => "near-ties",
            Family::Disjoint => "disjoint",
            Family::Epsilon => "epsilon",
            Family::TwoItemSkewed => "skewed",
        }
    }

    pub fn generate<R: Rng>(self, rng: &mut R, n: usize, m: usize) -> Instance {
        match self {
            Family::Uniform => build((0..n).map(|_| simplex_weights(rng, m)).collect()),
            Family::SmallIntegers => build(
                (0..n)
                    .map(|_| loop {
                        let w: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=4)).collect();
                        if w.iter().any(|&x| x > 0) {
                            break w;
                        }
                    })
                    .collect(),
            ),
            Family::NearTies => {
                let base = simplex_weights(rng, m);
                build(
                    (0..n)
                        .map(|_| {
                            base.iter()
                                .map(|&b| (b + rng.gen_range(-16..=16)).max(i64::from(b > 0)))
                                .collect()
                        })
                        .collect(),
                )
            }
            Family::Disjoint => {
                let mut rows = vec![vec![0i64; m]; n];
                for j in 0..m {
                    let owner = if j < n { j } else { rng.gen_range(0..n) };
                    rows[owner][j] = rng.gen_range(1..=1000);
                }
                for (i, row) in rows.iter_mut().enumerate() {
                    if row.iter().all(|&x| x == 0) {
                        row[i % m] = 1;
                    }
                }
                build(rows)
            }
            Family::Epsilon => {
                let eps_den: i64 = if rng.gen_bool(0.5) { 100 } else { 1000 };
                let rows = (0..n)
                    .map(|i| {
                        let rest = (m.saturating_sub(2)).max(1) as i64;
                        (0..m)
                            .map(|j| {
                                let fav = i % m.max(1);
                                if j == fav {
                                    2 * rest * (eps_den - 2)
                                } else if j == (fav + 1) % m && m > 1 {
                                    2 * rest
                                } else {
                                    2
                                }
                            })
                            .collect()
                    })
                    .collect();
                build(rows)
            }
            Family::TwoItemSkewed => build(
                (0..n)
                    .map(|_| {
                        let lr: f64 = rng.gen_range(-3.0..3.0);
                        let top = (lr.exp() * SCALE / 8.0).round().max(0.0) as i64;
                        let bottom = (SCALE / 8.0) as i64;
                        let mut w = vec![top, bottom];
                        if rng.gen_bool(0.05) {
                            w[rng.gen_range(0..2)] = 0;
                        }
                        w.resize(m.max(2), 0);
                        w.truncate(m);
                        if w.iter().all(|&x| x == 0) {
                            w[0] = 1;
                        }
                        w
                    })
                    .collect(),
            ),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Parse {
                context: "family".into(),
                message: format!("unknown instance family {s:?}"),
            })
    }
}

pub type Generator = Box<dyn Fn(&mut ChaCha8Rng) -> Instance + Send + Sync>;

fn pick<R: Rng>(rng: &mut R, families: &[Family]) -> Family {
    families[rng.gen_range(0..families.len())]
}

/// Default random instances for a mechanism's campaign: shapes it accepts,
/// with the family drawn per trial.
pub fn campaign_generator(kind: MechanismKind) -> Generator {
    use Family::*;
    match kind {
        MechanismKind::PartialAllocation | MechanismKind::SwapDictatorial | MechanismKind::Hybrid => Box::new(|rng| {
            let m = rng.gen_range(1..=6);
            pick(rng, &[Uniform, Uniform, SmallIntegers, NearTies, Disjoint, Epsilon]).generate(rng, 2, m)
        }),
        MechanismKind::SingleItem => Box::new(|rng| {
            let n = rng.gen_range(2..=8);
            pick(rng, &[Uniform, TwoItemSkewed, SmallIntegers, NearTies]).generate(rng, n, 2)
        }),
        MechanismKind::TwoBidderTwoItem => {
            Box::new(|rng| pick(rng, &[Uniform, TwoItemSkewed, SmallIntegers]).generate(rng, 2, 2))
        }
        MechanismKind::ThreeBidderTwoItem => {
            Box::new(|rng| pick(rng, &[Uniform, TwoItemSkewed, SmallIntegers, NearTies]).generate(rng, 3, 2))
        }
        MechanismKind::StrongDemandMatching => Box::new(|rng| {
            let m = rng.gen_range(1..=5);
            let n = rng.gen_range(3 * m..=(6 * m).min(40));
            pick(rng, &[Uniform, SmallIntegers, NearTies]).generate(rng, n, m)
        }),
    }
}

/// The four-item instance `A = (1-2ε, ε, ε/2, ε/2)`, `B = (ε, 1-2ε, ε/2, ε/2)`.
pub fn epsilon_instance(eps: &Rational) -> Instance {
    let one = int(1);
    let half = eps / int(2);
    let big = &one - int(2) * eps;
    Instance::normalize(vec![
        vec![big.clone(), eps.clone(), half.clone(), half.clone()],
        vec![eps.clone(), big, half.clone(), half],
    ])
    .expect("valid for 0 < ε < 1/2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn rows_are_normalized_and_reproducible() {
        for family in Family::ALL {
            let a = family.generate(&mut trial_rng(7, 3), 3, 4);
            let b = family.generate(&mut trial_rng(7, 3), 3, 4);
            assert_eq!(a, b, "{family}");
            for row in a.rows() {
                assert!(row.iter().sum::<Rational>().is_one());
            }
        }
    }

    #[test]
    fn streams_differ() {
        let a = Family::Uniform.generate(&mut trial_rng(1, 0), 2, 3);
        let b = Family::Uniform.generate(&mut trial_rng(1, 1), 2, 3);
        assert_ne!(a, b);
    }

    #[test]
    fn campaign_shapes_fit_their_mechanism() {
        use crate::mechanism::Mechanism;
        for kind in MechanismKind::ALL {
            let gen = campaign_generator(kind);
            for t in 0..20 {
                let inst = gen(&mut trial_rng(5, t));
                assert!(kind.check_shape(&inst).is_ok(), "{kind} {:?}", inst.shape());
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.as_str().parse::<Family>().unwrap(), f);
        }
    }
}
