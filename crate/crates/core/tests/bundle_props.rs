use fibspace::baseaction::{
    assemble_base, fiber_spectral_energy, reconstruction_ulps, split_section, trivialize, vanishing_on_section,
    GlobalSection,
};
use fibspace::chart::{chart_assemble, chart_decompose};
use fibspace::geom::{coordinate_projection, sup_distance, wrap};
use fibspace::orbit::{coset_equal, factorize, push_fibration};
use fibspace::sample::{random_diffeo, random_fibration, random_field, random_vertical};
use fibspace::scalar::norm;
use fibspace::transport::{horizontal_velocity, FibrationPath, TimeBasis};
use fibspace::tubular::{FiberMetric, TubularProjection};
use fibspace::{GridMap, Interp, TorusShape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 64;

fn t2() -> TorusShape<f64> {
    TorusShape::standard(2)
}

fn grid() -> Vec<usize> {
    vec![N, N]
}

fn pi0() -> GridMap<f64> {
    coordinate_projection(&t2(), 1, grid(), Interp::Trig).unwrap()
}

fn point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    t2().periods().iter().map(|&p| rng.gen_range(0.0..p)).collect()
}

/// `y` in the tube around the fiber through `x`.
fn tube_point(rng: &mut ChaCha8Rng, p: &TubularProjection<f64>, x: &[f64]) -> Vec<f64> {
    vec![x[0] + rng.gen_range(-0.95..0.95) * p.delta(), rng.gen_range(0.0..t2().period(1))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tube_projection_is_idempotent_and_vertically_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat = TubularProjection::flat(&t2(), 1).unwrap();
        let lambda = random_field(&mut rng, &t2(), 1, vec![16, 16], Interp::Trig, 0.3).unwrap();
        let conformal = TubularProjection::new(&t2(), 1, None, FiberMetric::Conformal(lambda)).unwrap();
        let psi = random_vertical(&mut rng, &t2(), 1, grid(), Interp::Trig, 0.3).unwrap();
        for _ in 0..20 {
            let x = point(&mut rng);
            let y = tube_point(&mut rng, &flat, &x);
            let mut psi_x = vec![0.0; 2];
            psi.eval_raw(&x, &mut psi_x);
            let (xp, yp, psi_xp) = (wrap(&x, &t2()).unwrap(), wrap(&y, &t2()).unwrap(), wrap(&psi_x, &t2()).unwrap());
            for (p, tol) in [(&flat, 0.0), (&conformal, 1e-8)] {
                let q = p.project_point(&xp, &yp).unwrap();
                prop_assert_eq!(q.coords()[0], xp.coords()[0]);
                let twice = p.project_point(&xp, &q).unwrap();
                prop_assert!(fibspace::geom::torus_distance(&twice, &q).unwrap() <= tol);
                let moved = p.project_point(&psi_xp, &yp).unwrap();
                prop_assert!(fibspace::geom::torus_distance(&moved, &q).unwrap() <= 1e-10);
            }
        }
    }

    #[test]
    fn chart_is_equivariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = TubularProjection::flat(&t2(), 1).unwrap();
        let phi = random_diffeo(&mut rng, &t2(), grid(), Interp::Trig, 0.2).unwrap();
        let psi0 = random_vertical(&mut rng, &t2(), 1, grid(), Interp::Trig, 0.2).unwrap();
        let c = chart_decompose(&p, &phi).unwrap();
        let back = chart_assemble(&p, &c.phi_s, &c.psi).unwrap();
        prop_assert!(sup_distance(&back, &phi).unwrap() <= 1e-8);
        let moved = chart_decompose(&p, &phi.compose(&psi0).unwrap()).unwrap();
        prop_assert!(sup_distance(&moved.phi_s, &c.phi_s).unwrap() <= 1e-8);
        prop_assert!(sup_distance(&moved.psi, &c.psi.compose(&psi0).unwrap()).unwrap() <= 1e-8);
    }

    #[test]
    fn orbit_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = TubularProjection::flat(&t2(), 1).unwrap();
        let pi = random_fibration(&mut rng, &t2(), 1, grid(), Interp::Trig, 0.2).unwrap();
        let r = factorize(&p, &pi).unwrap();
        prop_assert!(r.residual <= 1e-8);
        prop_assert!(sup_distance(&push_fibration(&pi0(), &r.f).unwrap(), &pi).unwrap() <= 1e-8);

        let phi = random_diffeo(&mut rng, &t2(), grid(), Interp::Trig, 0.2).unwrap();
        let f = factorize(&p, &push_fibration(&pi0(), &phi).unwrap()).unwrap().f;
        let coset = coset_equal(&f, &phi, &pi0()).unwrap();
        prop_assert!(coset.equal);
        prop_assert!(coset.residual <= 1e-8);
    }

    #[test]
    fn trivialization_is_equivariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = GlobalSection::new(&t2(), 1, &[rng.gen_range(0.0..1.0)], vec![N], Interp::Trig).unwrap();
        let base = t2().prefix(1).unwrap();
        let phi = random_diffeo(&mut rng, &base, vec![N], Interp::Trig, 0.2).unwrap();
        let pi = random_fibration(&mut rng, &t2(), 1, grid(), Interp::Trig, 0.2).unwrap();
        let t = trivialize(&pi, &sigma).unwrap();
        let back = assemble_base(&t.phi_b, &t.pi_s, &sigma).unwrap();
        prop_assert!(sup_distance(&back, &pi).unwrap() <= 1e-8);
        let moved = trivialize(&phi.compose(&pi).unwrap(), &sigma).unwrap();
        prop_assert!(sup_distance(&moved.phi_b, &phi.compose(&t.phi_b).unwrap()).unwrap() <= 1e-8);
        prop_assert!(sup_distance(&moved.pi_s, &t.pi_s).unwrap() <= 1e-8);
    }

    #[test]
    fn split_is_direct(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = GlobalSection::new(&t2(), 1, &[rng.gen_range(0.0..1.0)], vec![N], Interp::Trig).unwrap();
        let s = random_field(&mut rng, &t2(), 1, grid(), Interp::Trig, 1.0).unwrap();
        let parts = split_section(&s, &sigma).unwrap();
        prop_assert!(reconstruction_ulps(&s, &parts) <= 1.0);
        prop_assert!(vanishing_on_section(&parts.vanishing, &sigma).unwrap() <= 1e-9);
        prop_assert!(fiber_spectral_energy(&parts.lifted, 1) <= 1e-12);
    }

    #[test]
    fn horizontal_lift_scales_with_speed(seed in any::<u64>(), c in 0.05f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_field(&mut rng, &t2(), 1, grid(), Interp::Trig, c).unwrap();
        let fast_field = v.with_displacement(v.displacement().iter().map(|d| 2.0 * d).collect()).unwrap();
        let slow = FibrationPath::analytic(pi0(), vec![(TimeBasis::Monomial(1), v)]).unwrap();
        let fast = FibrationPath::analytic(pi0(), vec![(TimeBasis::Monomial(1), fast_field)]).unwrap();
        let t = rng.gen_range(0.0..1.0);
        for _ in 0..10 {
            let x = wrap(&point(&mut rng), &t2()).unwrap();
            let w = horizontal_velocity(&slow, t, &x, 1e-6).unwrap();
            let w2 = horizontal_velocity(&fast, t / 2.0, &x, 1e-6).unwrap();
            let diff: Vec<f64> = w2.iter().zip(&w).map(|(a, b)| a - 2.0 * b).collect();
            prop_assert!(norm(&diff) <= 1e-12 * (1.0 + norm(&w)));
        }
    }
}
