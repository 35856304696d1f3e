mod common;

use std::sync::Arc;

use common::{anticommutator, c, commutator, max_abs, Oracle, M};
use fermode::fock::io::{state_from_json, state_to_json};
use fermode::fock::{Factor, LinearOperator, LocalMatrix, ModeId, ModeSpec, PureState, SystemLayout};
use fermode::locc::random_ssr_unitary;
use fermode::ssr::{check_ssr_operator, global_parity, key_parity, local_parity};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn layout_from(stats: &[bool], cut: usize) -> Arc<SystemLayout> {
    let specs = stats
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let party = if i < cut { "A" } else { "B" };
            if f {
                ModeSpec::fermion(format!("m{i}"), party)
            } else {
                ModeSpec::boson(format!("m{i}"), party)
            }
        })
        .collect();
    Arc::new(SystemLayout::new(specs).unwrap())
}

fn layouts(max: usize) -> impl Strategy<Value = (Vec<bool>, usize)> {
    (1..=max).prop_flat_map(|n| (prop::collection::vec(prop::bool::weighted(0.75), n), 0..=n))
}

fn amp() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(r, i)| Complex64::new(r, i))
}

fn full(op: &LinearOperator) -> M {
    op.to_full_matrix().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mode_operators_match_the_dense_oracle((stats, cut) in layouts(6)) {
        let l = layout_from(&stats, cut);
        let o = Oracle::new(stats.clone());
        for j in 0..stats.len() {
            let a = full(&LinearOperator::annihilate(&l, ModeId(j)).unwrap());
            prop_assert!(max_abs(&(a - o.annihilate(j))) < 1e-15);
        }
    }

    #[test]
    fn canonical_relations((stats, cut) in layouts(6)) {
        let l = layout_from(&stats, cut);
        let n = stats.len();
        let ops: Vec<(M, M)> = (0..n)
            .map(|j| (full(&LinearOperator::annihilate(&l, ModeId(j)).unwrap()), full(&LinearOperator::create(&l, ModeId(j)).unwrap())))
            .collect();
        let id = M::identity(1 << n, 1 << n);
        for i in 0..n {
            for j in 0..n {
                let (ai, _) = &ops[i];
                let (aj, aj_dag) = &ops[j];
                if i == j {
                    if stats[i] {
                        prop_assert!(max_abs(&(anticommutator(ai, aj_dag) - &id)) < 1e-15);
                    }
                    continue;
                }
                if stats[i] && stats[j] {
                    prop_assert!(max_abs(&anticommutator(ai, aj_dag)) < 1e-15);
                    prop_assert!(max_abs(&anticommutator(ai, aj)) < 1e-15);
                } else {
                    prop_assert!(max_abs(&commutator(ai, aj_dag)) < 1e-15);
                    prop_assert!(max_abs(&commutator(ai, aj)) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn local_matrices_in_any_order_embed_like_creation_strings(
        (stats, cut) in layouts(5),
        pick in prop::collection::vec(any::<prop::sample::Index>(), 2),
        entries in prop::collection::vec(amp(), 16),
    ) {
        let n = stats.len();
        prop_assume!(n >= 2);
        let i = pick[0].index(n);
        let j = pick[1].index(n);
        prop_assume!(i != j);
        let l = layout_from(&stats, cut);
        let o = Oracle::new(stats.clone());
        // local basis |n_i n_j> taken in the order (i, j)
        let m = LocalMatrix::from_entries(4, (0..16).map(|t| (t / 4, t % 4, entries[t])));
        let op = LinearOperator::from_local(&l, &[ModeId(i), ModeId(j)], m).unwrap();
        let string = |idx: usize| -> M {
            let mut s = o.identity();
            if idx & 2 != 0 { s = s * o.create(i); }
            if idx & 1 != 0 { s = s * o.create(j); }
            s
        };
        let vac = o.empty(&[i, j]);
        let mut want = M::zeros(o.dim(), o.dim());
        for t in 0..16 {
            want += string(t / 4) * &vac * string(t % 4).adjoint() * entries[t];
        }
        prop_assert!(max_abs(&(full(&op) - want)) < 1e-12);
    }

    #[test]
    fn products_match_creation_polynomials((stats, cut) in layouts(6), a in amp(), b in amp()) {
        let n = stats.len();
        prop_assume!(n >= 3 && a.norm() > 0.1 && b.norm() > 0.1);
        let l = layout_from(&stats, cut);
        let o = Oracle::new(stats.clone());
        let f1 = Factor::new(vec![ModeId(n - 1), ModeId(0)], &[("10", a), ("01", b)]).unwrap();
        let f2 = Factor::new(vec![ModeId(1)], &[("1", c(1.0))]).unwrap();
        let s = PureState::product(&l, &[f1, f2]).unwrap();
        let poly = (o.create(n - 1) * a + o.create(0) * b) * o.create(1);
        let mut vac = nalgebra::DVector::zeros(o.dim());
        vac[0] = c(1.0);
        let v = &poly * vac;
        let v = &v / Complex64::new(v.norm(), 0.0);
        let got = o.vector(&s);
        prop_assert!((got - v).norm() < 1e-12);
    }

    #[test]
    fn parity_is_diagonal_and_matches_keys((stats, cut) in layouts(6)) {
        let l = layout_from(&stats, cut);
        let o = Oracle::new(stats.clone());
        let all: Vec<usize> = (0..stats.len()).collect();
        let p = o.parity(&all);
        for k in 0..1u64 << stats.len() {
            prop_assert_eq!(p[(k as usize, k as usize)].re as i8, key_parity(&l, k));
        }
        if let Ok(g) = global_parity(&l) {
            prop_assert!(max_abs(&(full(&g) - &p)) < 1e-15);
        }
        // a party with no modes is absent from the layout
        let side = |p: &str| local_parity(&l, p).map(|op| full(&op)).unwrap_or_else(|_| o.identity());
        prop_assert!(max_abs(&(side("A") * side("B") - p)) < 1e-15);
    }

    #[test]
    fn ssr_unitaries_preserve_norm_and_parity(
        (stats, cut) in layouts(5),
        seed in any::<u64>(),
        amps in prop::collection::vec(amp(), 32),
    ) {
        let l = layout_from(&stats, cut);
        let party = if cut > 0 { "A" } else { "B" };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_ssr_unitary(&l, party, &mut rng).unwrap();
        prop_assert!(u.is_unitary(1e-10));
        prop_assert!(check_ssr_operator(&u, 1e-10));
        let terms: Vec<(u64, Complex64)> = (0..1u64 << stats.len()).map(|k| (k, amps[k as usize])).collect();
        prop_assume!(terms.iter().map(|t| t.1.norm_sqr()).sum::<f64>() > 1e-3);
        let s = PureState::from_amplitudes(&l, terms).unwrap();
        let out = u.apply(&s).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        let o = Oracle::new(stats.clone());
        let all: Vec<usize> = (0..stats.len()).collect();
        let p = o.parity(&all);
        prop_assert!((o.expectation(&s, &p) - o.expectation(&out, &p)).norm() < 1e-12);
    }

    #[test]
    fn state_documents_round_trip_exactly((stats, cut) in layouts(6), amps in prop::collection::vec(amp(), 64)) {
        let l = layout_from(&stats, cut);
        let terms: Vec<(u64, Complex64)> = (0..1u64 << stats.len()).map(|k| (k, amps[k as usize])).collect();
        prop_assume!(terms.iter().map(|t| t.1.norm_sqr()).sum::<f64>() > 1e-3);
        let s = PureState::from_amplitudes(&l, terms).unwrap();
        let back = state_from_json(&state_to_json(&s).unwrap()).unwrap();
        prop_assert!(back.layout().same_basis(s.layout()));
        let a: Vec<_> = s.amplitudes().collect();
        let b: Vec<_> = back.amplitudes().collect();
        prop_assert_eq!(a, b);
    }
}
