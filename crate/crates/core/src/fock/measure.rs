//! Projective measurements.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;

use super::matrix::LocalMatrix;
use super::operator::LinearOperator;
use super::state::PureState;
use super::TOL;
use crate::error::{Error, Result};

/// Largest support for which a non-diagonal observable is diagonalized
/// densely.
const MAX_EIGEN_SUPPORT: usize = 10;

/// Outcomes with probability below this are not reported.
const MIN_PROBABILITY: f64 = 1e-13;

#[derive(Debug, Clone)]
pub enum Observable {
    /// Hermitian operator, measured through its spectral projectors.
    Hermitian(LinearOperator),
    /// Complete orthogonal projectors; outcome values are the indices.
    Projectors(Vec<LinearOperator>),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub index: usize,
    pub value: f64,
    pub probability: f64,
    pub state: PureState,
}

impl Observable {
    /// `(value, projector)` pairs, values ascending for Hermitian operators.
    pub fn resolve(&self) -> Result<Vec<(f64, LinearOperator)>> {
        match self {
            Observable::Hermitian(op) => spectral_projectors(op),
            Observable::Projectors(ps) => {
                validate_projectors(ps)?;
                Ok(ps.iter().enumerate().map(|(i, p)| (i as f64, p.clone())).collect())
            }
        }
    }
}

/// Spectral decomposition of a Hermitian operator into eigenprojectors,
/// eigenvalues clustered within `1e-9`.
pub fn spectral_projectors(op: &LinearOperator) -> Result<Vec<(f64, LinearOperator)>> {
    let dev = op.hermiticity_deviation();
    if dev > TOL {
        return Err(Error::NotHermitian(dev));
    }
    let m = op.matrix();
    let dim = m.dim();
    let mut groups: Vec<(f64, LocalMatrix)> = Vec::new();
    let mut push = |value: f64, proj: LocalMatrix| {
        match groups.iter_mut().find(|(v, _)| (v - value).abs() < 1e-9) {
            Some((_, p)) => *p = p.add(&proj),
            None => groups.push((value, proj)),
        }
    };
    if m.is_diagonal() {
        for i in 0..dim {
            push(m.get(i, i).re, LocalMatrix::from_entries(dim, [(i, i, Complex64::new(1.0, 0.0))]));
        }
    } else {
        if op.support().len() > MAX_EIGEN_SUPPORT {
            return Err(Error::TooLargeForDense(op.support().len()));
        }
        let dense = m.to_dense();
        let herm = (&dense + dense.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        for (j, &value) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(j);
            let entries = (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).filter_map(|(r, c)| {
                let x = v[r] * v[c].conj();
                (x.norm() > 1e-15).then_some((r, c, x))
            });
            push(value, LocalMatrix::from_entries(dim, entries));
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    groups
        .into_iter()
        .map(|(v, p)| Ok((v, LinearOperator::from_local(op.layout(), op.support(), p)?)))
        .collect()
}

/// Checks that `ps` are Hermitian, idempotent, mutually orthogonal and sum
/// to the identity, all within [`TOL`].
pub fn validate_projectors(ps: &[LinearOperator]) -> Result<()> {
    let first = ps.first().ok_or(Error::InvalidProjectors("no projectors".into()))?;
    let mut sum = LinearOperator::identity(first.layout()).scale(Complex64::new(0.0, 0.0));
    for (i, p) in ps.iter().enumerate() {
        if !p.is_hermitian(TOL) {
            return Err(Error::InvalidProjectors(format!("projector {i} is not Hermitian")));
        }
        if p.mul(p)?.max_abs_diff(p)? > TOL {
            return Err(Error::InvalidProjectors(format!("projector {i} is not idempotent")));
        }
        for (j, q) in ps.iter().enumerate().skip(i + 1) {
            if p.mul(q)?.max_abs() > TOL {
                return Err(Error::InvalidProjectors(format!("projectors {i} and {j} overlap")));
            }
        }
        sum = sum.add(p)?;
    }
    let dev = sum.max_abs_diff(&LinearOperator::identity(first.layout()))?;
    if dev > TOL {
        return Err(Error::InvalidProjectors(format!("projectors sum to identity only within {dev:.3e}")));
    }
    Ok(())
}

/// Every outcome with nonzero probability, post-measurement states
/// normalized.
pub fn outcome_branches(state: &PureState, observable: &Observable) -> Result<Vec<Outcome>> {
    state.check_normalized()?;
    let mut out = Vec::new();
    for (index, (value, p)) in observable.resolve()?.into_iter().enumerate() {
        let projected = p.apply(state)?;
        let probability = projected.norm_sqr();
        if probability < MIN_PROBABILITY {
            continue;
        }
        out.push(Outcome { index, value, probability, state: projected.normalize()? });
    }
    Ok(out)
}

/// Samples one outcome with Born probabilities.
pub fn measure<R: Rng + ?Sized>(state: &PureState, observable: &Observable, rng: &mut R) -> Result<Outcome> {
    let branches = outcome_branches(state, observable)?;
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let mut u = rng.random::<f64>() * total;
    let last = branches.len() - 1;
    for (i, b) in branches.into_iter().enumerate() {
        if u < b.probability || i == last {
            return Ok(b);
        }
        u -= b.probability;
    }
    unreachable!("outcome list is never empty for a normalized state")
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fock::layout::{ModeId, ModeSpec, SystemLayout};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn number_measurement_on_boson_superposition() {
        let l = Arc::new(SystemLayout::new(vec![ModeSpec::boson("x", "A")]).unwrap());
        let s = PureState::from_bitstrings(&l, &[("0", c(1.0)), ("1", c(1.0))]).unwrap();
        let n = LinearOperator::number(&l, ModeId(0)).unwrap();
        let b = outcome_branches(&s, &Observable::Hermitian(n.clone())).unwrap();
        assert_eq!(b.len(), 2);
        assert!((b[0].probability - 0.5).abs() < 1e-15 && b[0].value == 0.0);
        assert!((b[1].probability - 0.5).abs() < 1e-15 && b[1].value == 1.0);
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let o1 = measure(&s, &Observable::Hermitian(n.clone()), &mut r1).unwrap();
            let o2 = measure(&s, &Observable::Hermitian(n.clone()), &mut r2).unwrap();
            assert_eq!(o1.index, o2.index);
        }
    }

    #[test]
    fn dense_spectrum_of_hopping_term() {
        let l = Arc::new(SystemLayout::new(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "A")]).unwrap());
        // a^+ b + b^+ a
        let ad = LinearOperator::create(&l, ModeId(0)).unwrap();
        let b = LinearOperator::annihilate(&l, ModeId(1)).unwrap();
        let hop = ad.mul(&b).unwrap();
        let o2 = hop.add(&hop.adjoint()).unwrap();
        let spec = spectral_projectors(&o2).unwrap();
        let values: Vec<f64> = spec.iter().map(|(v, _)| *v).collect();
        assert_eq!(values.len(), 3);
        assert!((values[0] + 1.0).abs() < 1e-12 && values[1].abs() < 1e-12 && (values[2] - 1.0).abs() < 1e-12);
        validate_projectors(&spec.into_iter().map(|(_, p)| p).collect::<Vec<_>>()).unwrap();
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = Arc::new(SystemLayout::new(vec![ModeSpec::fermion("a", "A")]).unwrap());
        let a = LinearOperator::create(&l, ModeId(0)).unwrap();
        assert!(matches!(spectral_projectors(&a), Err(Error::NotHermitian(_))));
        let p0 = LinearOperator::diagonal(&l, &[ModeId(0)], |i| c(if i == 0 { 1.0 } else { 0.0 })).unwrap();
        assert!(validate_projectors(&[p0.clone()]).is_err());
        let p1 = LinearOperator::number(&l, ModeId(0)).unwrap();
        validate_projectors(&[p0, p1]).unwrap();
    }
}
