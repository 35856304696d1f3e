//! Randomized check that `A` never decreases on average under a local
//! SSR measurement.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::fock::{ModeSpec, PureState, SystemLayout};
use crate::locc::sample_random_ssr_povm;
use crate::resources::average_monotone_after;
use crate::ssr::key_parity;

/// Random state of definite global parity on 2 to 4 modes split between
/// `A` and `B`; each mode is a boson with probability 1/4.
pub fn random_definite_state<R: Rng + ?Sized>(rng: &mut R) -> Result<PureState> {
    let n = rng.random_range(2..=4usize);
    let cut = rng.random_range(1..n);
    let specs = (0..n)
        .map(|i| {
            let party = if i < cut { "A" } else { "B" };
            let label = format!("m{i}");
            if rng.random::<f64>() < 0.25 {
                ModeSpec::boson(label, party)
            } else {
                ModeSpec::fermion(label, party)
            }
        })
        .collect();
    let layout = Arc::new(SystemLayout::new(specs)?);
    let odd = rng.random::<bool>() && layout.fermion_mask() != 0;
    let sector: i8 = if odd { -1 } else { 1 };
    let terms: Vec<(u64, Complex64)> = (0..1u64 << n)
        .filter(|&k| key_parity(&layout, k) == sector)
        .map(|k| (k, Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))))
        .collect();
    PureState::from_amplitudes(&layout, terms)
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneReport {
    pub states: u64,
    pub povms_per_state: u64,
    pub seed: u64,
    /// Smallest `average_after - before` seen.
    pub min_margin: f64,
    /// `(state, povm)` indices where the average dropped by more than the
    /// tolerance.
    pub violations: Vec<(u64, u64)>,
    pub passed: bool,
}

/// State `i` and its POVMs are drawn from `seed ^ i`.
pub fn monotone_experiment(states: u64, povms: u64, seed: u64, tol: f64) -> Result<MonotoneReport> {
    let per_state = (0..states)
        .into_par_iter()
        .map(|i| -> Result<(f64, Vec<(u64, u64)>)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i);
            let state = random_definite_state(&mut rng)?;
            let layout = state.layout_arc().clone();
            let mut min_margin = f64::INFINITY;
            let mut bad = Vec::new();
            for j in 0..povms {
                let party = if rng.random::<bool>() { "A" } else { "B" };
                let n = rng.random_range(2..=4usize);
                let kraus = sample_random_ssr_povm(&layout, party, n, &mut rng)?;
                let step = average_monotone_after(&state, &kraus, "A")?;
                min_margin = min_margin.min(step.average_after - step.before);
                if !step.holds(tol) {
                    bad.push((i, j));
                }
            }
            Ok((min_margin, bad))
        })
        .collect::<Result<Vec<_>>>()?;
    let violations: Vec<(u64, u64)> = per_state.iter().flat_map(|p| p.1.iter().copied()).collect();
    Ok(MonotoneReport {
        states,
        povms_per_state: povms,
        seed,
        min_margin: per_state.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        passed: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssr::{parity_sector, ParitySector};

    #[test]
    fn random_states_have_definite_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let s = random_definite_state(&mut rng).unwrap();
            assert_ne!(parity_sector(&s), ParitySector::Indefinite);
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_experiment_passes() {
        let r = monotone_experiment(10, 20, 1, 1e-12).unwrap();
        assert!(r.passed);
        assert!(r.min_margin > -1e-12);
    }
}
