mod common;

use common::{grid, random_density, random_field, translate_x};
use pks_core::lab::{
    heat_bound_ratio, interaction_energy, interaction_energy_parseval, log_hls_margin, potential_gap,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn potential_gap_two_sided(seed in any::<u64>(), mean in 0.0f64..5.0) {
        let g = grid(2, 32);
        let f = random_field(&g, seed, mean);
        let e = random_field(&g, seed.wrapping_mul(3).wrapping_add(1), 0.0);
        let gap = potential_gap(&f, &e).unwrap();
        prop_assert!(gap.agrees(), "{:?}", gap);
        prop_assert!(gap.direct >= -1e-12 && gap.identity >= -1e-12);
    }

    #[test]
    fn interaction_energy_routes_agree(seed in any::<u64>()) {
        let f = random_density(&grid(2, 32), seed, 8.0);
        let i = interaction_energy(&f);
        prop_assert!((i - interaction_energy_parseval(&f)).abs() <= 1e-10 * i.abs().max(1.0));
    }

    #[test]
    fn heat_ratio_is_prefactor_covariant(
        seed in any::<u64>(),
        s in 1e-3f64..1e3,
        t in 1e-2f64..10.0,
        dim in 1usize..=2,
        gradient in any::<bool>(),
    ) {
        let h = random_field(&grid(dim, 32), seed, 0.0);
        let base = heat_bound_ratio(&h, 1.0, t, 4.0, 2.0, gradient).unwrap();
        let scaled = heat_bound_ratio(&h.scale(s), 1.0, t, 4.0, 2.0, gradient).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12 * base.abs().max(1e-300));
    }

    #[test]
    fn log_hls_lhs_is_translation_invariant(seed in any::<u64>(), shift in 1usize..32) {
        let f = random_density(&grid(2, 32), seed, 4.0 * std::f64::consts::PI);
        let a = log_hls_margin(&f, 0.0).unwrap();
        let b = log_hls_margin(&translate_x(&f, shift), 0.0).unwrap();
        prop_assert!((a.lhs - b.lhs).abs() < 1e-10);
    }
}
