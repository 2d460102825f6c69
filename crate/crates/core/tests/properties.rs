mod common;

use common::*;
use proptest::prelude::*;
use qgf::closed_form::{closed_form_lindep, closed_form_r1, closed_form_r2, closed_form_r3plus, io_first_lines, r1_coupling, r3_coupling};
use qgf::coupling::{momentum, st_to_general, GeneralBC, LineConfig, Role};
use qgf::design::{design_flat, maximal_coupling, SVariant};
use qgf::flatband::{check_flat, numerical_flatness_below, passband_value};
use qgf::linalg::{self, c, CMatrix};
use qgf::oracle::full_solve_oracle;
use qgf::probe::{lindep_sample, random_design_spec};
use qgf::scattering::{scattering_general, scattering_st, transmission, transmission_probability};
use rand::Rng;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(500))]

    #[test]
    fn zero_potential_scattering_is_unitary(seed in any::<u64>()) {
        let (st, _, e) = random_case(seed);
        let sc = scattering_st(&st, e).unwrap();
        prop_assert!(sc.unitarity_defect() < 1e-10, "defect {}", sc.unitarity_defect());
    }

    #[test]
    fn st_and_general_routes_agree(seed in any::<u64>()) {
        let (st, _, e) = random_case(seed);
        let a = scattering_st(&st, e).unwrap().entries;
        let b = scattering_general(&st_to_general(&st).unwrap(), e).unwrap().entries;
        prop_assert!(linalg::max_abs(&(&a - &b)) < 1e-10);
    }

    #[test]
    fn reduction_matches_oracle(seed in any::<u64>()) {
        let (st, lines, e) = random_case(seed);
        let red = transmission(&st, &lines, e).unwrap();
        let full = full_solve_oracle(&st, &lines, e).unwrap();
        prop_assert!((red.t - full.transmission()).norm() < 1e-8, "{} vs {}", red.t, full.transmission());
        prop_assert!((red.r_refl - full.reflection).norm() < 1e-8);
    }

    #[test]
    fn full_system_conserves_flux(seed in any::<u64>()) {
        let (st, lines, e) = random_case(seed);
        let sol = full_solve_oracle(&st, &lines, e).unwrap();
        prop_assert!((sol.flux_sum() - 1.0).abs() < 1e-8, "{}", sol.flux_sum());
    }

    #[test]
    fn dissipative_flux_never_exceeds_one(seed in any::<u64>()) {
        let (st, lines, e) = random_case(seed);
        let s = transmission(&st, &lines, e).unwrap();
        prop_assert!(s.flux() <= 1.0 + 1e-10, "{}", s.flux());
    }
}

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn closed_channels_lose_no_flux(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(2..=7);
        let r = rng.random_range(0..=n);
        let st = random_st(&mut rng, n, r);
        let lines = random_lines(&mut rng, n, 0.0);
        let v_min = lines.controllers().iter().map(|&j| lines.potential(j)).fold(f64::INFINITY, f64::min);
        let e = rng.random_range(0.01..0.99) * v_min.min(10.0);
        let s = transmission(&st, &lines, e).unwrap();
        prop_assert!((s.flux() - 1.0).abs() < 1e-10, "{}", s.flux());
    }

    #[test]
    fn row_operations_leave_scattering_unchanged(seed in any::<u64>()) {
        let (st, _, e) = random_case(seed);
        let bc = st_to_general(&st).unwrap();
        let mut rng = rng(seed ^ 0x5eed);
        let g = CMatrix::from_fn(st.n, st.n, |_, _| complex(&mut rng)) + CMatrix::identity(st.n, st.n) * c(3.0, 0.0);
        let scaled = GeneralBC::new(&g * &bc.a, &g * &bc.b).unwrap();
        let a = scattering_general(&bc, e).unwrap().entries;
        let b = scattering_general(&scaled, e).unwrap().entries;
        prop_assert!(linalg::max_abs(&(a - b)) < 1e-9);
    }

    #[test]
    fn momentum_squares_to_kinetic_energy(e in 1e-3..50.0f64, v in 0.0..50.0f64) {
        let k = momentum(e, v).unwrap().value();
        prop_assert!((k * k - c(e - v, 0.0)).norm() < 1e-12 * (1.0 + e + v));
        prop_assert!(k.re >= 0.0 && k.im >= 0.0);
    }

    #[test]
    fn r1_closed_form_matches(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(2..=8);
        let t: Vec<_> = (0..n - 1).map(|_| complex(&mut rng)).collect();
        let s = rng.random_range(-2.0..=2.0);
        let pots: Vec<f64> = (2..n).map(|_| if rng.random_bool(0.5) { rng.random_range(0.1..=10.0) } else { 0.0 }).collect();
        let e = rng.random_range(0.05..=12.0);
        let generic = transmission(&r1_coupling(&t, s), &io_first_lines(&pots), e).unwrap().t;
        let closed = closed_form_r1(&t, s, &pots, e).unwrap();
        prop_assert!((generic - closed).norm() < 1e-10);
    }

    #[test]
    fn lindep_closed_form_matches(seed in any::<u64>(), e in 0.05..12.0f64) {
        let (st, lines, _) = lindep_sample(seed, 0);
        let r = st.r;
        let blocks = qgf::closed_form::LinDepBlocks {
            s: st.s[(0, 0)].re,
            s2: st.s.view((0, 1), (1, r - 1)).into_owned(),
            s4: st.s.view((1, 1), (r - 1, r - 1)).into_owned(),
            t1: st.t.view((0, 0), (1, st.n - r - 1)).into_owned(),
            t2: st.t.view((1, 0), (r - 1, st.n - r - 1)).into_owned(),
            t: st.t[(0, st.n - r - 1)],
        };
        let pots: Vec<f64> = (1..st.n - 1).map(|j| lines.potential(j)).collect();
        let (k2, k3) = pots.split_at(r - 1);
        let generic = transmission(&st, &lines, e).unwrap().t;
        let closed = closed_form_lindep(&blocks, k2, k3, e).unwrap();
        prop_assert!((generic - closed).norm() < 1e-10, "{generic} vs {closed}");
    }

    #[test]
    fn r2_closed_form_matches(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(2..=8);
        let st = random_st(&mut rng, n, 2);
        let pots: Vec<f64> = (2..n).map(|_| if rng.random_bool(0.5) { rng.random_range(0.1..=10.0) } else { 0.0 }).collect();
        let e = rng.random_range(0.05..=12.0);
        let generic = transmission(&st, &io_first_lines(&pots), e).unwrap().t;
        let closed = closed_form_r2(&st.s, &st.t, &pots, e).unwrap().amplitude;
        prop_assert!((generic - closed).norm() < 1e-10, "{generic} vs {closed}");
    }

    #[test]
    fn r3_closed_form_matches(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let r = rng.random_range(3..=5);
        let m = rng.random_range(1..=(8 - r));
        let t1 = CMatrix::from_fn(2, m, |_, _| complex(&mut rng));
        let t2 = CMatrix::from_fn(r - 2, m, |_, _| complex(&mut rng));
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| -> Vec<f64> {
            (0..k).map(|_| if rng.random_bool(0.5) { rng.random_range(0.1..=10.0) } else { 0.0 }).collect()
        };
        let pot2 = draw(&mut rng, r - 2);
        let pot3 = draw(&mut rng, m);
        let e = rng.random_range(0.05..=12.0);
        let all: Vec<f64> = pot2.iter().chain(&pot3).copied().collect();
        let generic = transmission(&r3_coupling(&t1, &t2), &io_first_lines(&all), e).unwrap().t;
        let closed = closed_form_r3plus(&t1, &t2, &pot2, &pot3, e).unwrap().amplitude;
        prop_assert!((generic - closed).norm() < 1e-10, "{generic} vs {closed}");
    }

    #[test]
    fn maximal_filter_profile_ignores_alpha_phase(phi in 0.0..std::f64::consts::TAU, s in -2.0..2.0f64) {
        let alpha = qgf::linalg::C64::from_polar(1.0, phi);
        for variant in [SVariant::Zero, SVariant::Plus] {
            let (a, la) = maximal_coupling(c(1.0, 0.0), 2, 1, s, variant, 1.0).unwrap();
            let (b, lb) = maximal_coupling(alpha, 2, 1, s, variant, 1.0).unwrap();
            for e in [0.2, 0.7, 1.3, 4.0] {
                let pa = transmission_probability(&a, &la, e).unwrap();
                let pb = transmission_probability(&b, &lb, e).unwrap();
                prop_assert!((pa - pb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn designs_are_sound_and_bounded(seed in any::<u64>()) {
        let spec = random_design_spec(&mut rng(seed));
        if let Ok(d) = design_flat(&spec) {
            prop_assert!(check_flat(&d.partition, &d.coupling.s).verdict);
            prop_assert!(passband_value(&d.partition) <= 0.25 + 1e-9);
            let stats = numerical_flatness_below(&d.coupling, &d.lines(2.5).unwrap(), 2.5, 40).unwrap();
            prop_assert!(stats.deviation < 1e-9, "{stats:?}");
            prop_assert!((stats.max - d.report.predicted_p).abs() < 1e-9);
        }
    }
}

#[test]
fn dirichlet_lines_do_not_transmit() {
    let lines = LineConfig::new(vec![Role::Input, Role::Controller(1.0), Role::Output]).unwrap();
    let st = qgf::STCoupling::dirichlet(3);
    assert_eq!(transmission(&st, &lines, 0.5).unwrap().p, 0.0);
}
