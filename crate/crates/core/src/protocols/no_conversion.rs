//! Randomized checks of the no-go results: without a shared fermionic
//! reference, SSR-LOCC turns neither bosonic into fermionic entanglement
//! nor the other way round.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::one;
use crate::error::Result;
use crate::fock::{Factor, MixedState, ModeId, ModeSpec, PureState, SystemLayout};
use crate::locc::{enumerate_branches, random_feedback_script, RandomScriptConfig};
use crate::resources::{bosonic_cross_cut_entropy, is_perfect_emode_pure, siv_monotone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// Bosonic e-mode, fermions in definite local parity.
    Boson,
    /// Fermionic e-mode, bosons in a product state.
    Fermion,
}

/// Alice `f_a, g_a, x_a`, Bob `f_b, g_b, x_b`; `x` are bosons.
pub fn no_conversion_layout() -> Result<Arc<SystemLayout>> {
    Ok(Arc::new(SystemLayout::new(vec![
        ModeSpec::fermion("f_a", "A"),
        ModeSpec::fermion("g_a", "A"),
        ModeSpec::boson("x_a", "A"),
        ModeSpec::fermion("f_b", "B"),
        ModeSpec::fermion("g_b", "B"),
        ModeSpec::boson("x_b", "B"),
    ])?))
}

pub fn initial_state(layout: &Arc<SystemLayout>, start: StartKind) -> Result<PureState> {
    let h = one() * std::f64::consts::FRAC_1_SQRT_2;
    let e = [("01", h), ("10", h)];
    let (fa, ga, xa, fb, gb, xb) = (ModeId(0), ModeId(1), ModeId(2), ModeId(3), ModeId(4), ModeId(5));
    let factors = match start {
        StartKind::Boson => vec![Factor::new(vec![xa, xb], &e)?, Factor::new(vec![fa, ga, fb, gb], &[("0100", one())])?],
        StartKind::Fermion => vec![Factor::new(vec![fa, fb], &e)?, Factor::new(vec![xa, xb, ga, gb], &[("1000", one())])?],
    };
    PureState::product(layout, &factors)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub branches: usize,
    /// Smallest `A` over the branches.
    pub min_monotone: f64,
    /// Probability of ending with a perfect e-mode of the converted kind.
    pub converted_probability: f64,
    /// Largest bosonic cross-cut entropy over the branches.
    pub max_bosonic_entropy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoConversionReport {
    pub start: StartKind,
    pub trials: u64,
    pub seed: u64,
    pub branches: usize,
    pub min_monotone: f64,
    pub max_converted_probability: f64,
    pub max_bosonic_entropy: f64,
    /// Trials that broke the expected invariant.
    pub violations: Vec<u64>,
    pub passed: bool,
}

const TOL: f64 = 1e-9;

fn run_trial(layout: &Arc<SystemLayout>, initial: &MixedState, start: StartKind, seed: u64, trial: u64) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ trial);
    let script = random_feedback_script(layout, &RandomScriptConfig::default(), &mut rng)?;
    let branches = enumerate_branches(&script, initial)?;
    let fermion_pairs = [(0, 3), (0, 4), (1, 3), (1, 4)];
    let mut out = TrialOutcome {
        trial,
        branches: branches.len(),
        min_monotone: f64::INFINITY,
        converted_probability: 0.0,
        max_bosonic_entropy: 0.0,
    };
    for t in &branches {
        let s = &t.final_state;
        out.min_monotone = out.min_monotone.min(siv_monotone(s, "A")?);
        out.max_bosonic_entropy = out.max_bosonic_entropy.max(bosonic_cross_cut_entropy(s, "A", "B")?);
        let converted = match start {
            StartKind::Boson => {
                let mut any = false;
                for (a, b) in fermion_pairs {
                    any |= is_perfect_emode_pure(s, ModeId(a), ModeId(b))?;
                }
                any
            }
            StartKind::Fermion => is_perfect_emode_pure(s, ModeId(2), ModeId(5))?,
        };
        if converted {
            out.converted_probability += t.probability;
        }
    }
    Ok(out)
}

/// Runs `trials` random adaptive scripts (trial `i` seeded with
/// `seed ^ i`) and enumerates all their branches.
pub fn no_conversion_experiment(start: StartKind, trials: u64, seed: u64) -> Result<NoConversionReport> {
    let layout = no_conversion_layout()?;
    let initial = MixedState::pure(initial_state(&layout, start)?);
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(&layout, &initial, start, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let violations: Vec<u64> = outcomes
        .iter()
        .filter(|o| {
            o.converted_probability > TOL
                || match start {
                    StartKind::Boson => o.min_monotone < 1.0 - TOL,
                    StartKind::Fermion => o.max_bosonic_entropy > TOL,
                }
        })
        .map(|o| o.trial)
        .collect();
    Ok(NoConversionReport {
        start,
        trials,
        seed,
        branches: outcomes.iter().map(|o| o.branches).sum(),
        min_monotone: outcomes.iter().map(|o| o.min_monotone).fold(f64::INFINITY, f64::min),
        max_converted_probability: outcomes.iter().map(|o| o.converted_probability).fold(0.0, f64::max),
        max_bosonic_entropy: outcomes.iter().map(|o| o.max_bosonic_entropy).fold(0.0, f64::max),
        passed: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::entanglement_entropy;

    #[test]
    fn starting_states() {
        let l = no_conversion_layout().unwrap();
        let b = initial_state(&l, StartKind::Boson).unwrap();
        assert_eq!(siv_monotone(&b, "A").unwrap(), 1.0);
        assert!((entanglement_entropy(&b, "A").unwrap() - 1.0).abs() < 1e-12);
        assert!(is_perfect_emode_pure(&b, ModeId(2), ModeId(5)).unwrap());
        let f = initial_state(&l, StartKind::Fermion).unwrap();
        assert!(siv_monotone(&f, "A").unwrap() < 1e-15);
        assert!(bosonic_cross_cut_entropy(&f, "A", "B").unwrap() < 1e-15);
    }

    #[test]
    fn small_runs_hold() {
        for start in [StartKind::Boson, StartKind::Fermion] {
            let r = no_conversion_experiment(start, 20, 9).unwrap();
            assert!(r.passed, "{start:?}: {:?}", r.violations);
            assert!(r.branches >= 20);
        }
    }

    #[test]
    fn results_do_not_depend_on_scheduling() {
        let a = no_conversion_experiment(StartKind::Fermion, 8, 3).unwrap();
        let b = no_conversion_experiment(StartKind::Fermion, 8, 3).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
