use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qjc_core::coherent::{shifted_sequence, YMode};
use qjc_core::graph::{compress_with, graph_from_atlas, FamilyKind, SetFamily};
use qjc_core::operator::{hermitian_eigen, hermitian_eigvals, hs_norm, max_abs_diff, psd_sqrt, DEFAULT_RANK_TOL};
use qjc_core::povm::{povm_of_set, AtlasConfig, MeasurableSet, PovmAtlas};
use qjc_core::{sample, CMat, Model, ModelParams, OperatorSubspace};

fn small_atlas(mode: YMode) -> &'static PovmAtlas {
    static EXACT: OnceLock<PovmAtlas> = OnceLock::new();
    static GRID: OnceLock<PovmAtlas> = OnceLock::new();
    let cell = match mode {
        YMode::ExactMean => &EXACT,
        YMode::FiniteGrid => &GRID,
    };
    cell.get_or_init(|| {
        let m = Model::new(ModelParams::new(1.0, 0.5, 0.2, 14).unwrap()).unwrap();
        PovmAtlas::build(
            &m,
            &AtlasConfig {
                quad_order: 3,
                y_mode: mode,
                y_points: 4,
                ..AtlasConfig::default()
            },
        )
        .unwrap()
    })
}

fn mode_strategy() -> impl Strategy<Value = YMode> {
    prop_oneof![Just(YMode::ExactMean), Just(YMode::FiniteGrid)]
}

fn unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
    let (vals, vecs) = hermitian_eigen(&sample::hermitian(dim, rng));
    let phases = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        vals.iter().map(|&t| Complex64::from_polar(1.0, 3.0 * t)),
    ));
    &vecs * phases * vecs.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn offset_invariance_dyadic(
        steps in prop::collection::vec(1u32..64, 1..20),
        offset in -1024i32..1024,
    ) {
        // Multiples of 1/8 below 2^20 add exactly in binary.
        let mut seq = vec![0.0f64];
        for s in &steps {
            seq.push(seq.last().unwrap() + *s as f64 / 8.0);
        }
        let shifted: Vec<f64> = seq.iter().map(|e| e + offset as f64 / 4.0).collect();
        prop_assert_eq!(shifted_sequence(&seq, 1.0).unwrap(), shifted_sequence(&shifted, 1.0).unwrap());
    }

    #[test]
    fn offset_invariance_general(
        steps in prop::collection::vec(0.01f64..3.0, 1..20),
        offset in -50.0f64..50.0,
        scale in 0.1f64..4.0,
    ) {
        let mut seq = vec![0.3f64];
        for s in &steps {
            seq.push(seq.last().unwrap() + s);
        }
        let shifted: Vec<f64> = seq.iter().map(|e| e + offset).collect();
        let a = shifted_sequence(&seq, scale).unwrap();
        let b = shifted_sequence(&shifted, scale).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn orthonormalize_is_idempotent(seed in any::<u64>(), count in 1usize..8, dim in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<CMat> = (0..count).map(|_| sample::complex_matrix(dim, dim, &mut rng)).collect();
        let v = OperatorSubspace::orthonormalize(&ops, DEFAULT_RANK_TOL).unwrap();
        let w = OperatorSubspace::orthonormalize(v.basis(), DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(v.dim(), w.dim());
        for (a, b) in v.basis().iter().zip(w.basis()) {
            prop_assert!(max_abs_diff(a, b) <= 1e-12);
        }
    }

    #[test]
    fn pythagoras(seed in any::<u64>(), count in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<CMat> = (0..count).map(|_| sample::complex_matrix(3, 3, &mut rng)).collect();
        let v = if ops.is_empty() {
            OperatorSubspace::empty(3, DEFAULT_RANK_TOL)
        } else {
            OperatorSubspace::orthonormalize(&ops, DEFAULT_RANK_TOL).unwrap()
        };
        let a = sample::complex_matrix(3, 3, &mut rng);
        let p = v.project(&a).unwrap();
        let lhs = hs_norm(&a).powi(2);
        let rhs = hs_norm(&p).powi(2) + hs_norm(&(&a - &p)).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1.0));
    }

    #[test]
    fn psd_sqrt_commutes_with_unitaries(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample::psd(dim, &mut rng);
        let u = unitary(dim, &mut rng);
        let left = &u * psd_sqrt(&a).unwrap() * u.adjoint();
        let right = psd_sqrt(&(&u * &a * u.adjoint())).unwrap();
        prop_assert!(max_abs_diff(&left, &right) <= 1e-9);
    }

    #[test]
    fn povm_additivity_and_positivity(seed in any::<u64>(), mode in mode_strategy()) {
        let atlas = small_atlas(mode);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b1 = MeasurableSet::random(atlas, &mut rng);
        let b2 = MeasurableSet::random(atlas, &mut rng).difference(&b1);
        prop_assert!(b1.is_disjoint(&b2));
        let m1 = povm_of_set(atlas, &b1).unwrap();
        let m2 = povm_of_set(atlas, &b2).unwrap();
        let m12 = povm_of_set(atlas, &b1.union(&b2)).unwrap();
        prop_assert!(max_abs_diff(&m12, &(&m1 + &m2)) <= 1e-14 * hs_norm(&m12).max(1.0));
        for m in [&m1, &m2, &m12] {
            if let Some(&low) = hermitian_eigvals(m).first() {
                prop_assert!(low >= -1e-10);
            }
        }
    }

    #[test]
    fn compress_dimension_bounds(seed in any::<u64>(), mode in mode_strategy(), picks in 1usize..5) {
        let atlas = small_atlas(mode);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let small = SetFamily::new(atlas, FamilyKind::Dyadic);
        let large = SetFamily::new(atlas, FamilyKind::Default { seed });
        let v_small = graph_from_atlas(atlas, &small, DEFAULT_RANK_TOL).unwrap();
        let v_large = graph_from_atlas(atlas, &large, DEFAULT_RANK_TOL).unwrap();
        let d = atlas.dim();
        let cols: Vec<usize> = (0..picks).map(|_| rand::Rng::gen_range(&mut rng, 0..d)).collect();
        let vectors: Vec<_> = cols
            .iter()
            .map(|&c| qjc_core::CVec::from_fn(d, |r, _| if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }))
            .collect();
        let mut seen = std::collections::BTreeSet::new();
        let uniq: Vec<_> = cols.iter().zip(vectors).filter(|(c, _)| seen.insert(**c)).map(|(_, v)| v).collect();
        let p = qjc_core::Projector::from_vectors(d, &uniq).unwrap();
        let c_small = compress_with(&p, &v_small).unwrap();
        let c_large = compress_with(&p, &v_large).unwrap();
        prop_assert!(c_small.dim() <= v_small.dim().min(p.rank() * p.rank()));
        prop_assert!(c_large.dim() <= v_large.dim().min(p.rank() * p.rank()));
        // The default family contains the atoms, so it spans at least as much.
        prop_assert!(c_small.dim() <= c_large.dim());
    }
}
