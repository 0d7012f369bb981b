//! Property tests for the model and tensor invariants.

use modwave::mkdv::{invariants, soliton, WaveField};
use modwave::models::{NlsParams, SwParams, Vec2};
use modwave::tensors::{contract2, contract3, Tensor3, Tensor4};
use proptest::prelude::*;

prop_compose! {
    fn arb_sw()(
        g in 0.5f64..3.0,
        rho1 in 0.5f64..2.0,
        r in 0.05f64..0.95,
        r1 in -2.0f64..2.0,
        r2 in -2.0f64..2.0,
    ) -> SwParams {
        SwParams::new(g, rho1, r, 0.0, 0.0, r1, r2).unwrap()
    }
}

prop_compose! {
    fn arb_nls()(
        a1 in 0.1f64..2.0,
        a2 in 0.1f64..2.0,
        b11 in -2.0f64..-0.2,
        b22 in -2.0f64..-0.2,
        b12 in -0.4f64..0.4,
    ) -> NlsParams {
        NlsParams::new(a1, a2, b11, b12, b22).unwrap()
    }
}

proptest! {
    // state -> invert -> state identity to 1e-12 relative, both models
    #[test]
    fn sw_round_trip(p in arb_sw(),
                     eta in 0.5f64..20.0, chi in 0.5f64..20.0,
                     k1 in -3.0f64..3.0, k2 in -3.0f64..3.0) {
        let state = Vec2::new(eta, chi);
        let k = Vec2::new(k1, k2);
        let w = p.invert_state(&state, &k);
        let back = p.state_of(&k, &w);
        prop_assert!((back - state).norm() <= 1e-12 * state.norm().max(1.0));
    }

    #[test]
    fn nls_round_trip(p in arb_nls(),
                      i1 in 0.5f64..50.0, i2 in 0.5f64..50.0,
                      k1 in -3.0f64..3.0, k2 in -3.0f64..3.0) {
        let state = Vec2::new(i1, i2);
        let k = Vec2::new(k1, k2);
        let w = p.invert_amplitudes(&state, &k);
        let back = p.amplitudes(&k, &w);
        prop_assert!((back - state).norm() <= 1e-12 * state.norm().max(1.0));
    }

    // analytic first derivatives satisfy the conservation-law identities
    // exactly: D_k B symmetric, D_k A = D_w B^T
    #[test]
    fn sw_analytic_identities(p in arb_sw(),
                              eta in 0.5f64..20.0, chi in 0.5f64..20.0,
                              k1 in -3.0f64..3.0, k2 in -3.0f64..3.0) {
        let w = p.invert_state(&Vec2::new(eta, chi), &Vec2::new(k1, k2));
        let fd = modwave::models::TwoPhaseModel::analytic_first(&p, &Vec2::new(k1, k2), &w).unwrap();
        let scale = fd.dkb.norm().max(1e-12);
        prop_assert!((fd.dkb[(0,1)] - fd.dkb[(1,0)]).abs() <= 1e-13 * scale);
        prop_assert!((fd.dka - fd.dwb.transpose()).norm() <= 1e-13 * fd.dka.norm().max(1e-12));
    }

    #[test]
    fn nls_analytic_identities(p in arb_nls(),
                               i1 in 0.5f64..50.0, i2 in 0.5f64..50.0,
                               k1 in -3.0f64..3.0, k2 in -3.0f64..3.0) {
        let w = p.invert_amplitudes(&Vec2::new(i1, i2), &Vec2::new(k1, k2));
        let fd = modwave::models::TwoPhaseModel::analytic_first(&p, &Vec2::new(k1, k2), &w).unwrap();
        let scale = fd.dkb.norm().max(1e-12);
        prop_assert!((fd.dkb[(0,1)] - fd.dkb[(1,0)]).abs() <= 1e-13 * scale);
        prop_assert!((fd.dka - fd.dwb.transpose()).norm() <= 1e-13 * fd.dka.norm().max(1e-12));
    }

    // contractions are multilinear and symmetric in the direction arguments
    #[test]
    fn contraction_properties(vals in prop::array::uniform8(-5.0f64..5.0),
                              more in prop::array::uniform16(-5.0f64..5.0),
                              u1 in -2.0f64..2.0, u2 in -2.0f64..2.0,
                              v1 in -2.0f64..2.0, v2 in -2.0f64..2.0,
                              s in -3.0f64..3.0) {
        // build symmetric tensors from raw entries
        let mut t2 = Tensor3::zeros();
        let mut idx = 0;
        for i in 0..2 {
            for j in 0..2 {
                for m in j..2 {
                    t2.0[i][j][m] = vals[idx % 8];
                    t2.0[i][m][j] = vals[idx % 8];
                    idx += 1;
                }
            }
        }
        let mut t3 = Tensor4::zeros();
        let mut idx = 0;
        for i in 0..2 {
            for j in 0..2 {
                for m in j..2 {
                    for n in m..2 {
                        let v = more[idx % 16];
                        // fill all permutations of (j, m, n)
                        for perm in [[j,m,n],[j,n,m],[m,j,n],[m,n,j],[n,j,m],[n,m,j]] {
                            t3.0[i][perm[0]][perm[1]][perm[2]] = v;
                        }
                        idx += 1;
                    }
                }
            }
        }
        let u = Vec2::new(u1, u2);
        let v = Vec2::new(v1, v2);
        let uv = contract2(&t2, &u, &v);
        let vu = contract2(&t2, &v, &u);
        prop_assert!((uv - vu).norm() <= 1e-12 * uv.norm().max(1.0));
        // homogeneity
        let su = contract2(&t2, &(s * u), &v);
        prop_assert!((su - s * uv).norm() <= 1e-11 * uv.norm().max(1.0));
        // symmetry of the cubic contraction under argument swaps
        let c1 = contract3(&t3, &u, &v, &u);
        let c2 = contract3(&t3, &u, &u, &v);
        let c3 = contract3(&t3, &v, &u, &u);
        prop_assert!((c1 - c2).norm() <= 1e-11 * c1.norm().max(1.0));
        prop_assert!((c1 - c3).norm() <= 1e-11 * c1.norm().max(1.0));
    }

    // conserved functionals: mass is odd in q, momentum even, and both
    // scale correctly under q -> s q
    #[test]
    fn functional_parities(s in 0.1f64..3.0, amp in 0.2f64..2.0) {
        let f = soliton(1.0, 6.0, 1.0, amp, 20.0, 40.0, 128).unwrap();
        let neg = WaveField::new(40.0, f.values.iter().map(|v| -v).collect(), 0.0).unwrap();
        let scaled = WaveField::new(40.0, f.values.iter().map(|v| s * v).collect(), 0.0).unwrap();
        let c = (1.0, 6.0, 1.0);
        let (m, p, _) = invariants(&f, c);
        let (mn, pn, _) = invariants(&neg, c);
        let (ms, ps, _) = invariants(&scaled, c);
        prop_assert!((mn + m).abs() <= 1e-12 * m.abs());
        prop_assert!((pn - p).abs() <= 1e-12 * p.abs());
        prop_assert!((ms - s * m).abs() <= 1e-11 * m.abs() * s.max(1.0));
        prop_assert!((ps - s * s * p).abs() <= 1e-11 * p.abs() * (s * s).max(1.0));
    }
}
