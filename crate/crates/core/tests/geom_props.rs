use fibspace::geom::{
    coordinate_projection, read_gmap, read_gmap_str, sup_distance, verification_grid, write_gmap, write_gmap_string,
    Storage,
};
use fibspace::linalg::Mat;
use fibspace::sample::{random_diffeo, random_fibration, random_field};
use fibspace::{GridMap, Interp, TorusShape};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 32;

fn t2() -> TorusShape<f64> {
    TorusShape::standard(2)
}

fn interp() -> impl Strategy<Value = Interp> {
    prop_oneof![Just(Interp::Trig), Just(Interp::Cubic)]
}

fn point(rng: &mut ChaCha8Rng, shape: &TorusShape<f64>) -> Vec<f64> {
    shape.periods().iter().map(|&p| rng.gen_range(0.0..p)).collect()
}

fn nalgebra_min_sv(m: &Mat<f64>) -> f64 {
    let a = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    a.singular_values().min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn composition_is_associative(seed in any::<u64>(), interp in interp()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_diffeo(&mut rng, &t2(), vec![64, 64], interp, 0.3).unwrap();
        let g = random_diffeo(&mut rng, &t2(), vec![64, 64], interp, 0.3).unwrap();
        let h = random_diffeo(&mut rng, &t2(), vec![64, 64], interp, 0.3).unwrap();
        let left = f.compose(&g.compose(&h).unwrap()).unwrap();
        let right = f.compose(&g).unwrap().compose(&h).unwrap();
        // cubic splines resolve the off-node evaluations only to O(h⁴)
        let tol = if interp == Interp::Trig { 1e-9 } else { 1e-5 };
        prop_assert!(sup_distance(&left, &right).unwrap() <= tol);
    }

    #[test]
    fn inverse_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_diffeo(&mut rng, &t2(), vec![64, 64], Interp::Trig, 0.15).unwrap();
        prop_assume!(f.diffeo_certificate().unwrap().margin_exceeds(1e-6));
        let inv = f.invert().unwrap();
        let id = GridMap::identity(&t2(), vec![64, 64], Interp::Trig).unwrap();
        prop_assert!(sup_distance(&f.compose(&inv).unwrap(), &id).unwrap() <= 1e-9);
        prop_assert!(sup_distance(&inv.compose(&f).unwrap(), &id).unwrap() <= 1e-9);
    }

    #[test]
    fn chain_rule(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_diffeo(&mut rng, &t2(), vec![N, N], Interp::Trig, 0.2).unwrap();
        let g = random_diffeo(&mut rng, &t2(), vec![N, N], Interp::Trig, 0.2).unwrap();
        let fg = f.compose(&g).unwrap();
        for _ in 0..10 {
            let x = point(&mut rng, &t2());
            let mut gx = vec![0.0; 2];
            g.eval_raw(&x, &mut gx);
            let expect = f.jacobian_raw(&gx).matmul(&g.jacobian_raw(&x));
            prop_assert!(fg.jacobian_raw(&x).max_abs_diff(&expect) <= 1e-6);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(seed in any::<u64>(), interp in interp()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi = random_fibration(&mut rng, &t2(), 1, vec![N, N], interp, 0.3).unwrap();
        let h = 1e-5;
        for _ in 0..10 {
            let x = point(&mut rng, &t2());
            let jac = pi.jacobian_raw(&x);
            for a in 0..2 {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[a] += h;
                xm[a] -= h;
                let (mut fp, mut fm) = ([0.0], [0.0]);
                pi.eval_raw(&xp, &mut fp);
                pi.eval_raw(&xm, &mut fm);
                prop_assert!(((fp[0] - fm[0]) / (2.0 * h) - jac[(0, a)]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn submersion_margin_matches_svd(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi = random_fibration(&mut rng, &t2(), 1, vec![N, N], Interp::Trig, 0.5).unwrap();
        let fine = verification_grid(pi.grid());
        let oracle = pi
            .jacobians_on_grid(&fine)
            .chunks(2)
            .map(|j| nalgebra_min_sv(&Mat::from_row_major(1, 2, j.to_vec())))
            .fold(f64::INFINITY, f64::min);
        prop_assert!((pi.submersion_certificate().margin - oracle).abs() <= 1e-12);
    }

    #[test]
    fn min_singular_value_matches_svd(entries in prop::collection::vec(-2.0f64..2.0, 6)) {
        for (r, c) in [(2, 3), (3, 2)] {
            let m = Mat::from_row_major(r, c, entries.clone());
            prop_assert!((m.min_singular_value() - nalgebra_min_sv(&m)).abs() <= 1e-7);
        }
        let sq = Mat::from_row_major(2, 2, entries[..4].to_vec());
        let oracle = DMatrix::from_row_slice(2, 2, &entries[..4]).determinant();
        prop_assert!((sq.det() - oracle).abs() <= 1e-12);
    }

    #[test]
    fn gmap_round_trip_is_bit_exact(seed in any::<u64>(), interp in interp(), sidecar in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let maps = [
            random_diffeo(&mut rng, &t2(), vec![N, 8], interp, 0.3).unwrap(),
            random_fibration(&mut rng, &t2(), 1, vec![N, N], interp, 0.3).unwrap(),
            random_field(&mut rng, &t2(), 1, vec![8, N], interp, 1.0).unwrap(),
        ];
        let dir = tempfile::tempdir().unwrap();
        for (i, map) in maps.iter().enumerate() {
            let path = dir.path().join(format!("m{i}.gmap"));
            let storage = if sidecar { Storage::Sidecar } else { Storage::Inline };
            write_gmap(&path, map, storage).unwrap();
            let back = read_gmap(&path).unwrap();
            prop_assert_eq!(back.grid(), map.grid());
            prop_assert_eq!(back.interp(), map.interp());
            prop_assert_eq!(back.reference(), map.reference());
            prop_assert!(back.displacement().iter().zip(map.displacement()).all(|(a, b)| a.to_bits() == b.to_bits()));
            let text = read_gmap_str(&write_gmap_string(map)).unwrap();
            prop_assert!(text.displacement().iter().zip(map.displacement()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}

#[test]
fn single_precision_composition() {
    let shape = TorusShape::<f32>::standard(2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = random_diffeo(&mut rng, &shape, vec![N, N], Interp::Trig, 0.2).unwrap();
    let inv = f.invert().unwrap();
    let id = GridMap::identity(&shape, vec![N, N], Interp::Trig).unwrap();
    assert!(sup_distance(&f.compose(&inv).unwrap(), &id).unwrap() <= 1e-4);
    let pi0 = coordinate_projection(&shape, 1, vec![N, N], Interp::Trig).unwrap();
    assert_eq!(pi0.submersion_certificate().margin, 1.0);
}
