//! Random adaptive SSR-LOCC scripts for fuzzing the no-go results.

use std::sync::Arc;

use rand::Rng;

use super::kraus::{random_ssr_unitary, sample_random_ssr_povm};
use super::script::{OperatorSpec, ProtocolScript, Step};
use crate::error::{Error, Result};
use crate::fock::SystemLayout;

#[derive(Debug, Clone)]
pub struct RandomScriptConfig {
    /// The two parties taking turns.
    pub parties: (String, String),
    pub min_rounds: usize,
    pub max_rounds: usize,
    pub min_elements: usize,
    pub max_elements: usize,
    /// Chance that a round starts with a random local unitary.
    pub unitary_probability: f64,
}

impl Default for RandomScriptConfig {
    fn default() -> Self {
        RandomScriptConfig {
            parties: ("A".into(), "B".into()),
            min_rounds: 1,
            max_rounds: 4,
            min_elements: 2,
            max_elements: 4,
            unitary_probability: 0.5,
        }
    }
}

/// Builds a script of alternating rounds. In every round one party
/// (optionally) applies a random parity-preserving unitary, performs a
/// random SSR measurement and tells the outcome to the other party, whose
/// next round is chosen separately for every outcome.
pub fn random_feedback_script<R: Rng + ?Sized>(
    layout: &Arc<SystemLayout>,
    config: &RandomScriptConfig,
    rng: &mut R,
) -> Result<ProtocolScript> {
    if config.min_rounds == 0 || config.min_rounds > config.max_rounds {
        return Err(Error::InvalidArgument("round range is empty".into()));
    }
    let rounds = rng.random_range(config.min_rounds..=config.max_rounds);
    let first = rng.random::<bool>();
    let steps = round(layout, config, rng, 0, rounds, first)?;
    Ok(ProtocolScript::new(format!("random-{rounds}-rounds"), steps))
}

fn round<R: Rng + ?Sized>(
    layout: &Arc<SystemLayout>,
    config: &RandomScriptConfig,
    rng: &mut R,
    depth: usize,
    rounds: usize,
    first: bool,
) -> Result<Vec<Step>> {
    if depth == rounds {
        return Ok(Vec::new());
    }
    let (p, q) = &config.parties;
    let (me, other) = if depth.is_multiple_of(2) == first { (p, q) } else { (q, p) };
    let mut steps = Vec::new();
    if rng.random::<f64>() < config.unitary_probability {
        let u = random_ssr_unitary(layout, me, rng)?;
        steps.push(Step::LocalUnitary { party: me.clone(), op: OperatorSpec::from_operator(&u) });
    }
    let n = rng.random_range(config.min_elements..=config.max_elements);
    let kraus = sample_random_ssr_povm(layout, me, n, rng)?;
    let register = format!("r{depth}");
    steps.push(Step::Povm {
        party: me.clone(),
        register: register.clone(),
        kraus: kraus.elements().iter().map(OperatorSpec::from_operator).collect(),
    });
    if depth + 1 < rounds {
        steps.push(Step::ClassicalSend { from: me.clone(), to: other.clone(), register: register.clone() });
        for v in 0..n {
            steps.push(Step::Conditional {
                party: other.clone(),
                register: register.clone(),
                equals: v as u64,
                steps: round(layout, config, rng, depth + 1, rounds, first)?,
            });
        }
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fock::ModeSpec;
    use crate::locc::validate_script;

    #[test]
    fn random_scripts_validate() {
        let l = Arc::new(
            SystemLayout::new(vec![
                ModeSpec::fermion("f", "A"),
                ModeSpec::boson("x", "A"),
                ModeSpec::fermion("g", "B"),
                ModeSpec::boson("y", "B"),
            ])
            .unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let s = random_feedback_script(&l, &RandomScriptConfig::default(), &mut rng).unwrap();
            validate_script(&s, &l).unwrap();
        }
    }
}
