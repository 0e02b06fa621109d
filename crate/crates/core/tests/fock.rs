use proptest::prelude::*;
use weakfock::fock::{basis_dimension, Caps, HamiltonianVariant, Ladder};
use weakfock::verify::{check_algebra, check_free_spectrum, subset_sum_spectrum, CheckContext, Model, ModelSpec};
use weakfock::{Complex64, SparseOperator, Species};

fn reference() -> &'static Model {
    static MODEL: std::sync::OnceLock<Model> = std::sync::OnceLock::new();
    MODEL.get_or_init(|| ModelSpec::desk1().build().unwrap())
}

fn small_caps() -> impl Strategy<Value = Caps> {
    (0usize..=2, prop::option::of(0usize..=3), 0usize..=2, 0usize..=2).prop_map(
        |(massive, neutrino, boson_total, boson_per_mode)| Caps { massive, neutrino, boson_total, boson_per_mode },
    )
}

fn capped(caps: Caps) -> Model {
    let m = reference();
    let (basis, g1, g2) = m.with_caps(caps).unwrap();
    Model { basis, g1, g2, ..m.clone() }
}

fn triplets() -> impl Strategy<Value = (usize, Vec<(usize, usize, Complex64)>)> {
    (1usize..40).prop_flat_map(|dim| {
        let entry = (0..dim, 0..dim, any::<f64>(), any::<f64>()).prop_filter_map("finite", |(r, c, re, im)| {
            (re.is_finite() && im.is_finite()).then_some((r, c, Complex64::new(re, im)))
        });
        (Just(dim), prop::collection::vec(entry, 0..120))
    })
}

#[test]
fn reference_dimension() {
    let b = &reference().basis;
    assert_eq!(b.dim(), 1536);
    let capped = capped(Caps { neutrino: Some(2), ..b.caps });
    assert_eq!(capped.basis.dim(), 528);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dimension_formula_matches_enumeration(caps in small_caps()) {
        let m = capped(caps);
        let b = &m.basis;
        let (nb, nc, na) = (b.b_modes.len(), b.c_modes.len(), b.a_modes.len());
        prop_assert_eq!(b.dim() as u128, basis_dimension(nb, nc, na, &caps));
        prop_assert_eq!(b.dim(), b.n_b_states() * b.n_c_states() * b.n_a_states());
        for idx in 0..b.dim() {
            let (ib, ic, ia) = b.decode(idx);
            prop_assert_eq!(b.encode(ib, ic, ia), idx);
            prop_assert!(b.occupation(idx, Species::MassiveFermion) <= caps.massive);
            prop_assert!(b.occupation(idx, Species::Boson) <= caps.boson_total);
            if let Some(cap) = caps.neutrino {
                prop_assert!(b.occupation(idx, Species::Neutrino) <= cap);
            }
        }
    }

    #[test]
    fn create_then_annihilate_returns_home(caps in small_caps(), mode in 0usize..6, seed in any::<u64>()) {
        let m = capped(caps);
        let b = &m.basis;
        let idx = (seed % b.dim() as u64) as usize;
        for species in [Species::MassiveFermion, Species::Neutrino, Species::Boson] {
            let mode = mode % b.mode_count(species);
            if let Some((up, amp_up)) = b.apply(species, mode, Ladder::Create, idx) {
                let (back, amp_down) = b.apply(species, mode, Ladder::Annihilate, up).unwrap();
                prop_assert_eq!(back, idx);
                prop_assert_eq!(b.occupation(up, species), b.occupation(idx, species) + 1);
                prop_assert!((amp_up - amp_down).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn canonical_relations_hold_on_small_bases(caps in small_caps()) {
        let r = check_algebra(&capped(caps).basis, &[]).unwrap();
        prop_assert!(r.passed(), "{:?}", r);
    }

    #[test]
    fn hamiltonians_are_hermitian(caps in small_caps(), g_scale in 0.0f64..5.0) {
        let m = capped(caps).with_g_fixed_ladder(g_scale * reference().g());
        for v in [HamiltonianVariant::Full, HamiltonianVariant::InfraredCut { sigma: m.ladder.sigma(1).unwrap() }] {
            let h = m.hamiltonian(v).unwrap();
            prop_assert!(h.hermiticity_error() <= 1e-12 * (1.0 + h.max_abs()));
        }
    }

    #[test]
    fn free_spectrum_is_the_subset_sum_multiset(caps in small_caps()) {
        let m = capped(caps);
        let r = check_free_spectrum(&m, &CheckContext::default()).unwrap();
        prop_assert!(r.passed(), "{:?}", r);
        prop_assert_eq!(subset_sum_spectrum(&m).len(), m.basis.dim());
    }
}

proptest! {
    #[test]
    fn triplet_files_round_trip_bit_exactly((dim, entries) in triplets()) {
        let op = SparseOperator::from_triplets(dim, entries, false, "random").unwrap();
        let mut first = Vec::new();
        op.write_triplets(&mut first).unwrap();
        let back = SparseOperator::read_triplets(first.as_slice()).unwrap();
        prop_assert_eq!(back.dim(), op.dim());
        let (a, b): (Vec<_>, Vec<_>) = (op.triplets().collect(), back.triplets().collect());
        prop_assert_eq!(a.len(), b.len());
        for ((r1, c1, v1), (r2, c2, v2)) in a.iter().zip(&b) {
            prop_assert_eq!((r1, c1), (r2, c2));
            prop_assert_eq!(v1.re.to_bits(), v2.re.to_bits());
            prop_assert_eq!(v1.im.to_bits(), v2.im.to_bits());
        }
        let mut second = Vec::new();
        back.write_triplets(&mut second).unwrap();
        prop_assert_eq!(first, second);
    }
}
