//! Protocols built on the SSR-LOCC engine.

pub mod bell;
pub mod concentrate;
pub mod convert;
pub mod dense;
pub mod filter;
pub mod monotone;
pub mod no_conversion;
pub mod teleport;

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{Factor, ModeId, PureState};

pub use bell::{bell_measure, bell_operators, bell_projectors, bell_state, phase_flip, ssr_bit_flip, BellKind};
pub use concentrate::{
    bootstrap_emode, concentrate, concentration_script, concentration_yield, BootstrapReport, ConcentrationReport,
    ConcentrationSetup, YieldPoint,
};
pub use convert::{convert, conversion_setup, reference_state, ConversionReport, ConversionSetup, Direction, Reference};
pub use dense::{dense_coding, dense_coding_script, DenseCodingReport};
pub use filter::{procrustean_filter, two_copy_filter, FilterReport};
pub use monotone::{monotone_experiment, random_definite_state, MonotoneReport};
pub use no_conversion::{no_conversion_experiment, NoConversionReport, StartKind};
pub use teleport::{teleport, teleport_setup, TeleportBranch, TeleportReport, TeleportSetup};

/// `alpha |0_A 1_B> + beta |1_A 0_B>` on a two-mode pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EModeParams {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl EModeParams {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("|alpha|^2 + |beta|^2 = {n}, expected 1")));
        }
        Ok(EModeParams { alpha, beta })
    }

    /// Real `alpha = sqrt(alpha2)`, `beta = sqrt(1 - alpha2) e^{i phase}`.
    pub fn from_alpha2(alpha2: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha2) || !phase.is_finite() {
            return Err(Error::InvalidArgument(format!("|alpha|^2 = {alpha2} outside [0, 1]")));
        }
        Ok(EModeParams {
            alpha: Complex64::new(alpha2.sqrt(), 0.0),
            beta: Complex64::from_polar((1.0 - alpha2).sqrt(), phase),
        })
    }

    /// `|alpha|^2` uniform, both phases uniform.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a2: f64 = rng.random();
        EModeParams {
            alpha: Complex64::from_polar(a2.sqrt(), rng.random::<f64>() * TAU),
            beta: Complex64::from_polar((1.0 - a2).sqrt(), rng.random::<f64>() * TAU),
        }
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn beta2(&self) -> f64 {
        self.beta.norm_sqr()
    }

    /// State factor on `(a, b)`, `a` on Alice's side.
    pub fn factor(&self, a: ModeId, b: ModeId) -> Result<Factor> {
        Factor::new(vec![a, b], &[("01", self.alpha), ("10", self.beta)])
    }

    /// Local vector over `(a, b)`.
    pub fn vector(&self) -> DVector<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        DVector::from_vec(vec![z, self.alpha, self.beta, z])
    }
}

/// `|<target|final>|` where `target` is a pure local vector on `modes`;
/// equals the overlap whenever the rest of the system factors out.
pub fn local_fidelity(state: &PureState, modes: &[ModeId], target: &DVector<Complex64>) -> Result<f64> {
    let rho = state.reduced_density(modes)?;
    Ok(rho.fidelity_with(target)?.max(0.0).sqrt())
}

pub(crate) fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}
