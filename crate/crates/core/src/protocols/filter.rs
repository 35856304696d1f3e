//! Local filtering of partial e-modes into perfect ones.

use std::sync::Arc;

use serde::Serialize;

use super::{one, EModeParams};
use crate::error::Result;
use crate::fock::{LinearOperator, MixedState, ModeId, ModeSpec, PureState, SystemLayout};
use crate::locc::{enumerate_branches, OperatorSpec, ProtocolScript, Step};
use crate::resources::is_perfect_emode_pure;

#[derive(Debug, Clone, Serialize)]
pub struct FilterReport {
    pub alpha2: f64,
    pub copies: usize,
    /// Probability of ending with at least one perfect e-mode.
    pub success_probability: f64,
    /// `1 - A` of a single input pair.
    pub single_pair_bound: f64,
}

/// Alice's two diagonal Kraus operators on her mode: the success element
/// damps the larger amplitude down to the smaller one.
fn filter_kraus(layout: &Arc<SystemLayout>, a: ModeId, p: &EModeParams) -> Result<Vec<LinearOperator>> {
    // occupation 0 of `a` carries alpha, occupation 1 carries beta
    let (keep, damp) = if p.alpha.norm() >= p.beta.norm() {
        ([p.beta / p.alpha, one()], [(1.0 - p.beta.norm_sqr() / p.alpha.norm_sqr()).max(0.0).sqrt(), 0.0])
    } else {
        ([one(), p.alpha / p.beta], [0.0, (1.0 - p.alpha.norm_sqr() / p.beta.norm_sqr()).max(0.0).sqrt()])
    };
    Ok(vec![
        LinearOperator::diagonal(layout, &[a], |i| keep[i])?,
        LinearOperator::diagonal(layout, &[a], |i| one() * damp[i])?,
    ])
}

fn filter_on_copies(params: EModeParams, copies: usize) -> Result<FilterReport> {
    let mut specs: Vec<ModeSpec> = (1..=copies).map(|i| ModeSpec::fermion(format!("a{i}"), "A")).collect();
    specs.extend((1..=copies).map(|i| ModeSpec::fermion(format!("b{i}"), "B")));
    let layout = Arc::new(SystemLayout::new(specs)?);
    let pairs: Vec<(ModeId, ModeId)> = (0..copies).map(|i| (ModeId(i), ModeId(copies + i))).collect();
    let factors = pairs.iter().map(|&(a, b)| params.factor(a, b)).collect::<Result<Vec<_>>>()?;
    let initial = PureState::product(&layout, &factors)?;
    let steps = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, _))| {
            Ok(Step::Povm {
                party: "A".into(),
                register: format!("f{}", i + 1),
                kraus: filter_kraus(&layout, a, &params)?.iter().map(OperatorSpec::from_operator).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let script = ProtocolScript::new(format!("filter-{copies}"), steps);
    let mut success = 0.0;
    for t in enumerate_branches(&script, &MixedState::pure(initial))? {
        let mut any = false;
        for &(a, b) in &pairs {
            any |= is_perfect_emode_pure(&t.final_state, a, b)?;
        }
        if any {
            success += t.probability;
        }
    }
    let d = params.alpha2() - params.beta2();
    Ok(FilterReport { alpha2: params.alpha2(), copies, success_probability: success, single_pair_bound: 1.0 - d * d })
}

/// Single-copy filter; succeeds with `2 min(|alpha|^2, |beta|^2)`.
pub fn procrustean_filter(params: EModeParams) -> Result<FilterReport> {
    filter_on_copies(params, 1)
}

/// Filters two copies independently; at least one succeeds with
/// `1 - (|alpha|^2 - |beta|^2)^2`.
pub fn two_copy_filter(params: EModeParams) -> Result<FilterReport> {
    filter_on_copies(params, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_copy_rate() {
        for a2 in [0.5, 0.8, 0.15] {
            let r = procrustean_filter(EModeParams::from_alpha2(a2, 0.9).unwrap()).unwrap();
            let want = 2.0 * f64::min(a2, 1.0 - a2);
            assert!((r.success_probability - want).abs() < 1e-12, "{a2}: {}", r.success_probability);
            assert!(r.success_probability <= r.single_pair_bound + 1e-12);
        }
    }

    #[test]
    fn two_copy_rate_meets_the_bound() {
        let r = two_copy_filter(EModeParams::from_alpha2(0.8, 0.0).unwrap()).unwrap();
        assert!((r.success_probability - 0.64).abs() < 1e-12);
        assert!((r.single_pair_bound - 0.64).abs() < 1e-12);
    }
}
