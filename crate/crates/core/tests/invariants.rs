use proptest::prelude::*;

use scrambling_core::exact::{build_physical_hamiltonian, exact_correlation, physical_state_from_slater};
use scrambling_core::sampler::{sample_one, sample_rng};
use scrambling_core::slater::random_product_config;
use scrambling_core::{hamming_distance, initial_slater, logical_to_physical, natural_orbitals, relaxation_z, sector_dimension};

fn sector() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=10).prop_flat_map(|len| (Just(len), 1usize..=len.div_ceil(2)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sector_dimension_counts_admissible_strings((len, n) in sector()) {
        let direct = (0u32..1 << len).filter(|b| b.count_ones() as usize == n && b & (b >> 1) == 0).count();
        prop_assert_eq!(sector_dimension(len, n), direct);
    }

    #[test]
    fn evolution_keeps_orbitals_orthonormal(seed in any::<u64>(), t in 0.0f64..200.0, (len, n) in sector()) {
        let lt = len + 1 - n;
        let m0 = random_product_config(lt, n, &mut sample_rng(seed, 0)).unwrap();
        let s = initial_slater(&m0).evolve(t);
        prop_assert!(s.orthonormality_error() < 1e-10);
    }

    #[test]
    fn mapped_state_is_normalised_and_correlations_are_physical(seed in any::<u64>(), t in 0.0f64..20.0, (len, n) in sector()) {
        let lt = len + 1 - n;
        let m0 = random_product_config(lt, n, &mut sample_rng(seed, 1)).unwrap();
        let s = initial_slater(&m0).evolve(t);
        let op = build_physical_hamiltonian(len, n).unwrap();
        let psi = physical_state_from_slater(&s, op.basis()).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
        let corr = exact_correlation(op.basis(), &psi);
        prop_assert!((corr.trace() - n as f64).abs() < 1e-10);
        prop_assert!(corr.hermiticity_error() < 1e-12);
        let spec = natural_orbitals(&corr);
        prop_assert!(spec.clipped_mass < 1e-10);
        let d = hamming_distance(&spec, n);
        prop_assert!((-1e-10..=2.0 * n as f64 + 1e-10).contains(&d));
        prop_assert!((relaxation_z(&spec, &spec, n) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn samples_respect_the_sector(seed in any::<u64>(), t in 0.0f64..20.0, (len, n) in sector()) {
        let lt = len + 1 - n;
        let m0 = random_product_config(lt, n, &mut sample_rng(seed, 2)).unwrap();
        let s = initial_slater(&m0).evolve(t);
        let mut rng = sample_rng(seed, 3);
        for _ in 0..8 {
            let m = sample_one(&s, &mut rng).unwrap();
            prop_assert_eq!(m.particles(), n);
            let p = logical_to_physical(&m);
            prop_assert_eq!(p.len(), len);
        }
    }
}
