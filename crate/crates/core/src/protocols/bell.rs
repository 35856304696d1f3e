//! Bell states, the two Bell observables, and the SSR-safe local flips.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{measure, Factor, LinearOperator, ModeId, Observable, PureState, SystemLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellKind {
    /// Order used for Bell-measurement outcome indices.
    pub const ALL: [BellKind; 4] = [BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).expect("listed")
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Global parity of the two-mode state.
    pub fn parity(self) -> i8 {
        match self {
            BellKind::PhiPlus | BellKind::PhiMinus => 1,
            BellKind::PsiPlus | BellKind::PsiMinus => -1,
        }
    }

    /// Joint eigenvalues of `(O1, O2)`.
    pub fn eigenvalues(self) -> (i8, i8) {
        match self {
            BellKind::PhiPlus => (1, 0),
            BellKind::PhiMinus => (-1, 0),
            BellKind::PsiPlus => (0, 1),
            BellKind::PsiMinus => (0, -1),
        }
    }

    pub fn from_eigenvalues(o1: i8, o2: i8) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.eigenvalues() == (o1, o2))
    }

    /// Amplitudes over the local basis `|n_a n_b>` of the ordered pair.
    pub fn local_vector(self) -> [Complex64; 4] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        match self {
            BellKind::PhiPlus => [h, z, z, h],
            BellKind::PhiMinus => [h, z, z, -h],
            BellKind::PsiPlus => [z, h, h, z],
            BellKind::PsiMinus => [z, h, -h, z],
        }
    }

    fn terms(self) -> Vec<(&'static str, Complex64)> {
        let one = Complex64::new(1.0, 0.0);
        match self {
            BellKind::PhiPlus => vec![("00", one), ("11", one)],
            BellKind::PhiMinus => vec![("00", one), ("11", -one)],
            BellKind::PsiPlus => vec![("01", one), ("10", one)],
            BellKind::PsiMinus => vec![("01", one), ("10", -one)],
        }
    }

    /// Factor for [`PureState::product`].
    pub fn factor(self, a: ModeId, b: ModeId) -> Result<Factor> {
        Factor::new(vec![a, b], &self.terms())
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
        })
    }
}

fn distinct(a: ModeId, b: ModeId) -> Result<()> {
    if a == b {
        return Err(Error::InvalidArgument("a Bell pair needs two distinct modes".into()));
    }
    Ok(())
}

/// The named Bell state on `(a, b)` with every other mode empty.
pub fn bell_state(layout: &Arc<SystemLayout>, kind: BellKind, a: ModeId, b: ModeId) -> Result<PureState> {
    distinct(a, b)?;
    PureState::product(layout, &[kind.factor(a, b)?])
}

/// `O1 = a^+ b^+ + b a` and `O2 = a^+ b + b^+ a`.
pub fn bell_operators(layout: &Arc<SystemLayout>, a: ModeId, b: ModeId) -> Result<(LinearOperator, LinearOperator)> {
    distinct(a, b)?;
    for m in [a, b] {
        layout.check(m)?;
        if !layout.spec(m).is_fermion() {
            return Err(Error::InvalidArgument(format!("Bell operators need fermionic modes, `{}` is bosonic", layout.label(m))));
        }
    }
    let ad = LinearOperator::create(layout, a)?;
    let bd = LinearOperator::create(layout, b)?;
    let an = LinearOperator::annihilate(layout, a)?;
    let bn = LinearOperator::annihilate(layout, b)?;
    let o1 = ad.mul(&bd)?.add(&bn.mul(&an)?)?;
    let o2 = ad.mul(&bn)?.add(&bd.mul(&an)?)?;
    Ok((o1, o2))
}

/// Rank-one projectors onto the Bell states of `(a, b)`, in
/// [`BellKind::ALL`] order.
pub fn bell_projectors(layout: &Arc<SystemLayout>, a: ModeId, b: ModeId) -> Result<Vec<LinearOperator>> {
    distinct(a, b)?;
    BellKind::ALL
        .iter()
        .map(|k| {
            let v = k.local_vector();
            LinearOperator::outer(layout, &[a, b], &v, &v)
        })
        .collect()
}

/// Bell measurement on two modes held by the same party.
pub fn bell_measure<R: Rng + ?Sized>(
    state: &PureState,
    a: ModeId,
    b: ModeId,
    rng: &mut R,
) -> Result<(BellKind, f64, PureState)> {
    let layout = state.layout_arc();
    let (pa, pb) = (layout.party_of(a), layout.party_of(b));
    if pa != pb {
        return Err(Error::NotLocal { party: pa.to_string(), detail: format!("Bell measurement across `{pa}` and `{pb}`") });
    }
    let out = measure(state, &Observable::Projectors(bell_projectors(layout, a, b)?), rng)?;
    Ok((BellKind::from_index(out.index).expect("four projectors"), out.probability, out.state))
}

/// `diag(1, -1)` on one mode.
pub fn phase_flip(layout: &Arc<SystemLayout>, mode: ModeId) -> Result<LinearOperator> {
    LinearOperator::diagonal(layout, &[mode], |i| Complex64::new(if i == 0 { 1.0 } else { -1.0 }, 0.0))
}

/// Two-mode map `|00> <-> |11>`, `|01> <-> |10>` on `(ancilla, target)`,
/// local basis taken ancilla first. With the ancilla empty it turns
/// `psi` into `phi` on the pair shared through `target` and vice versa,
/// leaving the ancilla occupied.
pub fn ssr_bit_flip(layout: &Arc<SystemLayout>, target: ModeId, ancilla: ModeId) -> Result<LinearOperator> {
    distinct(target, ancilla)?;
    let party = layout.party_of(target).to_string();
    if layout.party_of(ancilla) != party {
        return Err(Error::NotLocal { party, detail: "bit flip needs the ancilla in the same party".into() });
    }
    let one = Complex64::new(1.0, 0.0);
    LinearOperator::embed_local_map(
        layout,
        &party,
        &[ancilla, target],
        &[("00", one, "11"), ("11", one, "00"), ("01", one, "10"), ("10", one, "01")],
    )
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fock::ModeSpec;
    use crate::ssr::{check_ssr_operator, classify_local_op, global_parity, AncillaSign};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn pair() -> Arc<SystemLayout> {
        Arc::new(SystemLayout::new(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "A")]).unwrap())
    }

    #[test]
    fn bell_states_diagonalize_the_observables() {
        let l = pair();
        let (o1, o2) = bell_operators(&l, ModeId(0), ModeId(1)).unwrap();
        for k in BellKind::ALL {
            let s = bell_state(&l, k, ModeId(0), ModeId(1)).unwrap();
            let (e1, e2) = k.eigenvalues();
            let r1 = o1.apply(&s).unwrap();
            let r2 = o2.apply(&s).unwrap();
            let d1 = s.with_phase(c(e1 as f64));
            let d2 = s.with_phase(c(e2 as f64));
            for key in 0..4 {
                assert!((r1.amplitude(key) - d1.amplitude(key)).norm() < 1e-15, "{k} O1");
                assert!((r2.amplitude(key) - d2.amplitude(key)).norm() < 1e-15, "{k} O2");
            }
            let p = global_parity(&l).unwrap().expectation(&s).unwrap();
            assert!((p - c(k.parity() as f64)).norm() < 1e-12);
        }
    }

    #[test]
    fn explicit_matrices() {
        let l = pair();
        let (o1, o2) = bell_operators(&l, ModeId(0), ModeId(1)).unwrap();
        let m1 = o1.to_full_matrix().unwrap();
        let m2 = o2.to_full_matrix().unwrap();
        // basis |00>,|01>,|10>,|11>; a first in the order
        assert_eq!(m1[(3, 0)], c(1.0));
        assert_eq!(m1[(0, 3)], c(1.0));
        assert_eq!(m2[(2, 1)], c(1.0));
        assert_eq!(m2[(1, 2)], c(1.0));
        assert_eq!(m1.iter().filter(|v| v.norm() > 0.0).count(), 2);
        assert_eq!(m2.iter().filter(|v| v.norm() > 0.0).count(), 2);
        assert!(check_ssr_operator(&o1, 1e-12) && check_ssr_operator(&o2, 1e-12));
        assert!(o1.commutator(&o2).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn bell_measurement_statistics() {
        let l = pair();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = bell_state(&l, BellKind::PhiPlus, ModeId(0), ModeId(1)).unwrap();
        let (k, p, _) = bell_measure(&phi, ModeId(0), ModeId(1), &mut rng).unwrap();
        assert_eq!(k, BellKind::PhiPlus);
        assert!((p - 1.0).abs() < 1e-12);
        let s01 = PureState::basis(&l, &"01".into()).unwrap();
        let branches = crate::fock::outcome_branches(
            &s01,
            &Observable::Projectors(bell_projectors(&l, ModeId(0), ModeId(1)).unwrap()),
        )
        .unwrap();
        assert_eq!(branches.len(), 2);
        assert!(branches.iter().all(|b| (b.probability - 0.5).abs() < 1e-12));
        let cross = Arc::new(SystemLayout::new(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "B")]).unwrap());
        let s = bell_state(&cross, BellKind::PsiPlus, ModeId(0), ModeId(1)).unwrap();
        assert!(bell_measure(&s, ModeId(0), ModeId(1), &mut rng).is_err());
    }

    #[test]
    fn flips_on_a_shared_pair() {
        // ancilla r and target t at A, partner p at B
        let l = Arc::new(
            SystemLayout::new(vec![
                ModeSpec::fermion("t", "A"),
                ModeSpec::fermion("r", "A"),
                ModeSpec::fermion("p", "B"),
            ])
            .unwrap(),
        );
        let (t, r, p) = (ModeId(0), ModeId(1), ModeId(2));
        let flip = ssr_bit_flip(&l, t, r).unwrap();
        assert!(flip.is_unitary(1e-15));
        assert_eq!(classify_local_op(&flip, "A").unwrap(), AncillaSign::Plus);
        let occupied = Factor::new(vec![r], &[("1", c(1.0))]).unwrap();
        for (from, to) in [
            (BellKind::PsiPlus, BellKind::PhiPlus),
            (BellKind::PsiMinus, BellKind::PhiMinus),
            (BellKind::PhiPlus, BellKind::PsiPlus),
            (BellKind::PhiMinus, BellKind::PsiMinus),
        ] {
            let s = bell_state(&l, from, t, p).unwrap();
            let out = flip.apply(&s).unwrap();
            let want = PureState::product(&l, &[occupied.clone(), to.factor(t, p).unwrap()]).unwrap();
            assert!(out.overlap(&want).unwrap() > 1.0 - 1e-12, "{from} -> {to}");
            let back = flip.apply(&out).unwrap();
            assert!((back.inner(&s).unwrap() - c(1.0)).norm() < 1e-12);
        }
        let z = phase_flip(&l, t).unwrap();
        let psi = bell_state(&l, BellKind::PsiPlus, t, p).unwrap();
        let minus = bell_state(&l, BellKind::PsiMinus, t, p).unwrap();
        assert!(z.apply(&psi).unwrap().overlap(&minus).unwrap() > 1.0 - 1e-15);
        assert!(z.mul(&z).unwrap().max_abs_diff(&LinearOperator::identity(&l)).unwrap() < 1e-15);
        assert!(ssr_bit_flip(&l, t, p).is_err());
    }
}
