//! Dense reference implementation used as an independent oracle: explicit
//! Jordan-Wigner matrices on the full 2^n space, built without any of the
//! library's embedding or reordering code.

#![allow(dead_code)]

use fermode::fock::PureState;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type M = DMatrix<Complex64>;

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `fermion[j]` tells whether mode `j` is fermionic; mode 0 is the most
/// significant bit of a basis index.
pub struct Oracle {
    pub fermion: Vec<bool>,
}

impl Oracle {
    pub fn new(fermion: Vec<bool>) -> Self {
        Oracle { fermion }
    }

    pub fn all_fermions(n: usize) -> Self {
        Oracle { fermion: vec![true; n] }
    }

    pub fn n(&self) -> usize {
        self.fermion.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    pub fn occupied(&self, idx: usize, j: usize) -> bool {
        self.occ(idx, j)
    }

    fn occ(&self, idx: usize, j: usize) -> bool {
        idx >> (self.n() - 1 - j) & 1 == 1
    }

    /// `a_j` with the string of earlier fermionic occupations.
    pub fn annihilate(&self, j: usize) -> M {
        let d = self.dim();
        let mut m = M::zeros(d, d);
        for col in 0..d {
            if !self.occ(col, j) {
                continue;
            }
            let row = col ^ (1 << (self.n() - 1 - j));
            let mut s = 1.0;
            if self.fermion[j] {
                for i in 0..j {
                    if self.fermion[i] && self.occ(col, i) {
                        s = -s;
                    }
                }
            }
            m[(row, col)] = c(s);
        }
        m
    }

    pub fn create(&self, j: usize) -> M {
        self.annihilate(j).adjoint()
    }

    pub fn number(&self, j: usize) -> M {
        self.create(j) * self.annihilate(j)
    }

    pub fn identity(&self) -> M {
        M::identity(self.dim(), self.dim())
    }

    /// Product of `1 - 2 n_j` over the fermionic modes in `modes`.
    pub fn parity(&self, modes: &[usize]) -> M {
        let mut p = self.identity();
        for &j in modes {
            if self.fermion[j] {
                p *= self.identity() - self.number(j) * c(2.0);
            }
        }
        p
    }

    /// Projector onto `|vac>` of the listed modes, identity elsewhere.
    pub fn empty(&self, modes: &[usize]) -> M {
        modes.iter().fold(self.identity(), |p, &j| p * (self.identity() - self.number(j)))
    }

    /// `C |vac_S><vac_S| C^+` for a creation polynomial `C` on modes `S`:
    /// the projector onto a pure state of `S`, tensored with identity.
    pub fn pure_projector(&self, creation: &M, modes: &[usize]) -> M {
        creation * self.empty(modes) * creation.adjoint()
    }

    pub fn vector(&self, s: &PureState) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.dim());
        for (k, a) in s.amplitudes() {
            v[k as usize] = a;
        }
        v
    }

    pub fn expectation(&self, s: &PureState, op: &M) -> Complex64 {
        let v = self.vector(s);
        (v.adjoint() * op * &v)[(0, 0)]
    }
}

pub fn anticommutator(a: &M, b: &M) -> M {
    a * b + b * a
}

pub fn commutator(a: &M, b: &M) -> M {
    a * b - b * a
}

pub fn max_abs(m: &M) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `C(n, k)` as a float, computed by a running product.
pub fn binomial_f(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn h2(p: f64) -> f64 {
    let t = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    t(p) + t(1.0 - p)
}

pub fn oracle_for(layout: &fermode::fock::SystemLayout) -> Oracle {
    Oracle::new(layout.modes().iter().map(|m| m.is_fermion()).collect())
}

/// `<s|P|s>` for a state of the oracle's layout.
pub fn weight(o: &Oracle, s: &PureState, p: &M) -> f64 {
    o.expectation(s, p).re
}

/// `(a_i^+ + a_j^+) / sqrt 2`: creates psi+ on `(i, j)` from their vacuum.
pub fn psi_plus(o: &Oracle, i: usize, j: usize) -> M {
    (o.create(i) + o.create(j)) * c(std::f64::consts::FRAC_1_SQRT_2)
}

/// `|| <vac_S| C^+ |v> ||^2` for `C = sum coeff * a^+_{i1} a^+_{i2} ...`:
/// the weight of `v` on the pure state `C|vac_S>` of modes `S`, evaluated
/// with matrix-vector products only.
pub fn creation_weight(o: &Oracle, terms: &[(Complex64, Vec<usize>)], modes: &[usize], v: &DVector<Complex64>) -> f64 {
    let mut w = DVector::zeros(o.dim());
    for (coeff, string) in terms {
        let mut t = v.clone();
        for &j in string {
            t = o.annihilate(j) * t;
        }
        w += t * coeff.conj();
    }
    for idx in 0..o.dim() {
        if modes.iter().any(|&j| o.occupied(idx, j)) {
            w[idx] = c(0.0);
        }
    }
    w.norm_squared()
}
