use proptest::prelude::*;
use weakfock::experiment::ExperimentConfig;
use weakfock::verify::Coupling;

proptest! {
    #[test]
    fn canonical_text_parses_back(
        seed in any::<u64>(),
        g_factor in 0.001f64..0.9,
        delta in 0.05f64..0.95,
        n_max in 2usize..6,
        spectrum_k in 0usize..50,
    ) {
        let mut c = ExperimentConfig::default();
        c.seed = seed;
        c.model.coupling = Coupling::FractionOfThreshold(g_factor);
        c.model.delta = delta;
        c.model.n_max = n_max;
        c.gap_range = (1..n_max).collect();
        c.spectrum_k = spectrum_k;
        let text = c.canonical();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.canonical(), text);
        prop_assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn output_directory_does_not_change_the_hash(name in "[a-z]{1,12}") {
        let mut c = ExperimentConfig::default();
        let h = c.hash();
        c.out = name.into();
        prop_assert_eq!(c.hash(), h);
    }
}
