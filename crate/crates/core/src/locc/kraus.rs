use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fock::{LinearOperator, LocalMatrix, ModeId, SystemLayout, TOL};
use crate::ssr::{classify_local_op, support_parity, AncillaSign};

/// Largest party for which random operators are drawn densely.
const MAX_RANDOM_MODES: usize = 6;

/// Complete set of local Kraus operators of one party.
#[derive(Debug, Clone)]
pub struct KrausSet {
    party: String,
    elements: Vec<LinearOperator>,
    signs: Vec<AncillaSign>,
}

impl KrausSet {
    /// Validates locality, the parity structure of every element and
    /// completeness `sum M^+ M = 1`.
    pub fn new(party: &str, elements: Vec<LinearOperator>) -> Result<Self> {
        let first = elements.first().ok_or(Error::IncompleteKraus(1.0))?;
        let layout = first.layout().clone();
        let mut signs = Vec::with_capacity(elements.len());
        for m in &elements {
            let m = m.rebind(&layout)?;
            signs.push(classify_local_op(&m, party)?);
        }
        let dev = completeness_deviation(&layout, &elements)?;
        if dev > TOL {
            return Err(Error::IncompleteKraus(dev));
        }
        Ok(KrausSet { party: party.to_string(), elements, signs })
    }

    pub fn party(&self) -> &str {
        &self.party
    }

    pub fn elements(&self) -> &[LinearOperator] {
        &self.elements
    }

    pub fn signs(&self) -> &[AncillaSign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// `||sum_i M_i^+ M_i - 1||_max`.
pub fn completeness_deviation(layout: &Arc<SystemLayout>, elements: &[LinearOperator]) -> Result<f64> {
    let mut sum = LinearOperator::identity(layout).scale(Complex64::new(0.0, 0.0));
    for m in elements {
        sum = sum.add(&m.adjoint().mul(m)?)?;
    }
    sum.max_abs_diff(&LinearOperator::identity(layout))
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed `n x n` unitary (QR of a complex Ginibre matrix with
/// the phases of `R`'s diagonal moved into `Q`).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Local occupation indices over `modes`, split into even and odd local
/// parity.
fn parity_blocks(layout: &SystemLayout, modes: &[ModeId]) -> (Vec<usize>, Vec<usize>) {
    let p = support_parity(layout, modes);
    let even = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let odd = (0..p.len()).filter(|&i| p[i] < 0.0).collect();
    (even, odd)
}

fn random_modes(layout: &SystemLayout, party: &str) -> Result<Vec<ModeId>> {
    let modes = layout.party_modes(party)?;
    if modes.is_empty() {
        return Err(Error::InvalidArgument(format!("party `{party}` owns no modes")));
    }
    if modes.len() > MAX_RANDOM_MODES {
        return Err(Error::TooLargeForDense(modes.len()));
    }
    Ok(modes)
}

/// Haar-random unitary on all modes of `party` that preserves local
/// parity.
pub fn random_ssr_unitary<R: Rng + ?Sized>(
    layout: &Arc<SystemLayout>,
    party: &str,
    rng: &mut R,
) -> Result<LinearOperator> {
    let modes = random_modes(layout, party)?;
    let dim = 1usize << modes.len();
    let mut entries = Vec::with_capacity(dim * dim / 2);
    let (even, odd) = parity_blocks(layout, &modes);
    for block in [even, odd] {
        if block.is_empty() {
            continue;
        }
        let u = haar_unitary(block.len(), rng);
        for (i, &r) in block.iter().enumerate() {
            for (j, &c) in block.iter().enumerate() {
                entries.push((r, c, u[(i, j)]));
            }
        }
    }
    Ok(LinearOperator::from_local(layout, &modes, LocalMatrix::from_entries(dim, entries))?.with_party(party))
}

/// Random complete Kraus set on all modes of `party`.
///
/// Each element gets a random ancilla sign (forced to `+1` when the party
/// has no fermionic mode). For every input parity sector the blocks of all
/// elements are stacked into one isometry cut from a Haar unitary, which
/// makes the set complete and every element parity-structured.
pub fn sample_random_ssr_povm<R: Rng + ?Sized>(
    layout: &Arc<SystemLayout>,
    party: &str,
    n_elements: usize,
    rng: &mut R,
) -> Result<KrausSet> {
    if !(2..=8).contains(&n_elements) {
        return Err(Error::InvalidArgument(format!("{n_elements} Kraus elements requested, allowed 2..=8")));
    }
    let modes = random_modes(layout, party)?;
    let dim = 1usize << modes.len();
    let (even, odd) = parity_blocks(layout, &modes);
    let has_fermion = !odd.is_empty();
    let signs: Vec<AncillaSign> = (0..n_elements)
        .map(|_| if has_fermion && rng.random::<bool>() { AncillaSign::Minus } else { AncillaSign::Plus })
        .collect();
    let mut entries: Vec<Vec<(usize, usize, Complex64)>> = vec![Vec::new(); n_elements];
    for (input, flipped) in [(&even, &odd), (&odd, &even)] {
        if input.is_empty() {
            continue;
        }
        let targets: Vec<&Vec<usize>> =
            signs.iter().map(|s| if *s == AncillaSign::Plus { input } else { flipped }).collect();
        let total: usize = targets.iter().map(|t| t.len()).sum();
        let u = haar_unitary(total, rng);
        let mut row = 0;
        for (j, t) in targets.iter().enumerate() {
            for &r in t.iter() {
                for (col, &c) in input.iter().enumerate() {
                    entries[j].push((r, c, u[(row, col)]));
                }
                row += 1;
            }
        }
    }
    let elements = entries
        .into_iter()
        .map(|e| Ok(LinearOperator::from_local(layout, &modes, LocalMatrix::from_entries(dim, e))?.with_party(party)))
        .collect::<Result<Vec<_>>>()?;
    KrausSet::new(party, elements)
}
