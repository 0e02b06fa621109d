use proptest::prelude::*;
use weakfock::scales::{bridge, chi0, chi_sigma, chi_tilde_sigma, derive_ladder, ModelParams};

fn params(delta: f64) -> ModelParams {
    ModelParams::new(1.0, 2.0, delta, 0.0, 1.0, 1.0).unwrap()
}

proptest! {
    #[test]
    fn ladder_is_geometric_and_ordered(delta in 0.05f64..0.95, n_max in 2usize..8) {
        let l = derive_ladder(&params(delta), n_max, 0.0).unwrap();
        prop_assert!(0.0 < l.gamma && l.gamma < l.tau && l.tau < 1.0);
        prop_assert!(l.n_cut as f64 * l.gamma >= 1.0);
        prop_assert!(l.n_cut == 1 || ((l.n_cut - 1) as f64) * l.gamma < 1.0);
        prop_assert!(l.eps_gamma > 0.0);
        prop_assert_eq!(l.sigma.len(), n_max + 1);
        for n in 1..n_max {
            prop_assert!(l.sigma[n + 1] < l.sigma[n]);
            prop_assert!((l.sigma[n + 1] - l.gamma * l.sigma[n]).abs() <= 1e-14 * l.sigma[n]);
        }
        prop_assert!(l.sigma[0] > l.sigma[1]);
    }

    #[test]
    fn windows_sit_inside_the_support_of_f(delta in 0.05f64..0.95, n in 1usize..4) {
        let l = derive_ladder(&params(delta), 4, 0.0).unwrap();
        let (w, s) = (l.window(n).unwrap(), l.f_support(n).unwrap());
        let sigma = l.sigma(n).unwrap();
        prop_assert!(s.lo < w.lo && w.lo < w.hi && w.hi < s.hi);
        prop_assert!(w.hi < sigma);
        for t in 0..=20 {
            let x = w.lo + (w.hi - w.lo) * t as f64 / 20.0;
            prop_assert_eq!(l.f_n(x, n).unwrap(), 1.0);
        }
        prop_assert_eq!(l.f_n(s.lo, n).unwrap(), 0.0);
        prop_assert_eq!(l.f_n(s.hi, n).unwrap(), 0.0);
    }

    #[test]
    fn gap_bound_shrinks_with_coupling(delta in 0.05f64..0.6, frac in 0.0f64..0.9) {
        let l0 = derive_ladder(&params(delta), 3, 0.0).unwrap();
        let limit = l0.gamma * (1.0 - l0.gamma) / 3.0;
        let l = derive_ladder(&params(delta), 3, frac * limit).unwrap();
        for n in 1..=3 {
            let b = l.gap_bound(n).unwrap();
            prop_assert!(0.0 < b && b <= l0.gap_bound(n).unwrap());
        }
    }

    #[test]
    fn cutoffs_are_bounded_and_complementary(x in -1.0f64..4.0, sigma in 0.01f64..3.0, p in 0.0f64..10.0) {
        let c = chi0(x);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(chi_sigma(p, sigma) + chi_tilde_sigma(p, sigma), 1.0);
        if x <= 1.0 { prop_assert_eq!(c, 1.0); }
        if x >= 2.0 { prop_assert_eq!(c, 0.0); }
    }

    #[test]
    fn bridge_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(bridge(lo) >= bridge(hi));
        prop_assert!((bridge(a) + bridge(1.0 - a) - 1.0).abs() < 1e-12);
    }
}
