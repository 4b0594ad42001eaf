use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use swaplight::gaussian::{
    apply_map, swap_io_map, symplectic_form, symplectic_spectrum, vacuum_state, SymplecticMap,
    HEISENBERG_TOL, SYMPLECTIC_TOL,
};
use swaplight::interaction::{integrated_swap_coefficients, SwapParams};
use swaplight::modes::{kl_decompose, CovarianceEstimate, CovarianceOptions};

/// `(xi, kappa)` with `xi^2 kappa^2 <= 1`.
fn couplings() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..0.99, 0.0f64..=1.0).prop_map(|(xi, s)| (xi, s / xi))
}

fn random_cov(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.1
    })
}

fn estimate(c: DMatrix<f64>) -> CovarianceEstimate {
    let n = c.nrows();
    CovarianceEstimate {
        c,
        dt: 1e-3,
        n_cycles: 1000,
        channel: swaplight::modes::Channel::Combined,
        shot_floor: DMatrix::identity(n, n),
        transform: DMatrix::identity(n, n),
        options: CovarianceOptions::default(),
        floor_condition: 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn swap_map_is_symplectic((xi, kappa) in couplings()) {
        let s = swap_io_map(xi, kappa).unwrap();
        let m = s.matrix();
        let omega = symplectic_form(2);
        let dev = (m.transpose() * &omega * m - &omega).abs().max();
        prop_assert!(dev < SYMPLECTIC_TOL, "{dev}");
    }

    #[test]
    fn swap_output_obeys_uncertainty((xi, kappa) in couplings(), r in 0.2f64..5.0) {
        let squeezed = SymplecticMap::squeezer(2, 0, r).unwrap();
        let input = apply_map(&vacuum_state(2).unwrap(), &squeezed).unwrap();
        let out = apply_map(&input, &swap_io_map(xi, kappa).unwrap()).unwrap();
        for nu in symplectic_spectrum(out.cov()).unwrap() {
            prop_assert!(nu >= 0.5 - HEISENBERG_TOL, "{nu}");
        }
    }

    #[test]
    fn composed_maps_stay_symplectic(a in couplings(), b in couplings(), theta in 0.0f64..6.3) {
        let rot = SymplecticMap::phase_rotation(2, 1, theta).unwrap();
        let s = swap_io_map(a.0, a.1).unwrap()
            .then(&rot).unwrap()
            .then(&swap_io_map(b.0, b.1).unwrap()).unwrap();
        prop_assert!(s.deviation() < SYMPLECTIC_TOL);
    }

    #[test]
    fn full_swap_variance_between_xi2_and_one(
        gamma in 10.0f64..2000.0,
        xi2 in 0.01f64..0.99,
        t in 1e-4f64..0.05,
    ) {
        let p = SwapParams::from_xi_squared(gamma, xi2, t).unwrap();
        let v = p.ideal_output_variance_ratio().unwrap();
        prop_assert!(v >= xi2 - 1e-12 && v <= 1.0 + 1e-12, "{v}");
    }

    #[test]
    fn swap_coefficients_conserve_commutators(gamma in 50.0f64..500.0, xi2 in 0.05f64..0.9) {
        let p = SwapParams::from_xi_squared(gamma, xi2, 15e-3).unwrap();
        let c = integrated_swap_coefficients(&p, 400);
        let bookkeeping = c.atom_retention.powi(2) + c.atoms_to_light * c.squeezed_transfer;
        prop_assert!((bookkeeping - 1.0).abs() < 1e-8, "{bookkeeping}");
    }

    #[test]
    fn kl_preserves_trace_and_orthonormality(c in random_cov(8)) {
        let spec = kl_decompose(&estimate(c.clone())).unwrap();
        let total: f64 = spec.variances.iter().sum();
        prop_assert!((total - c.trace()).abs() < 1e-9 * c.trace());
        for i in 0..spec.len() {
            for j in 0..spec.len() {
                let o = spec.modes[i].overlap(&spec.modes[j]).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((o - want).abs() < 1e-10, "({i},{j}) {o}");
            }
        }
        prop_assert!(spec.variances.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn kl_spectrum_is_basis_invariant(c in random_cov(6), angles in prop::collection::vec(0.0f64..6.3, 5)) {
        let mut q = DMatrix::<f64>::identity(6, 6);
        for (k, a) in angles.iter().enumerate() {
            let mut g = DMatrix::<f64>::identity(6, 6);
            g[(k, k)] = a.cos();
            g[(k + 1, k + 1)] = a.cos();
            g[(k, k + 1)] = -a.sin();
            g[(k + 1, k)] = a.sin();
            q = g * q;
        }
        let rotated = &q * &c * q.transpose();
        let rotated = (&rotated + rotated.transpose()) * 0.5;
        let a = kl_decompose(&estimate(c)).unwrap().variances;
        let b = kl_decompose(&estimate(rotated)).unwrap().variances;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn whitened_spectrum_ignores_detector_gain(gain in 0.1f64..10.0, depth in 0.05f64..0.95) {
        let (n, dt) = (24, 1e-3f64);
        let u = DVector::from_fn(n, |i, _| (-(i as f64) * 0.1).exp());
        let u = &u / (u.norm() * dt.sqrt());
        let floor = DMatrix::from_fn(n, n, |i, j| 0.3f64.powi(i.abs_diff(j) as i32)) / dt;
        let signal = &floor - &u * u.transpose() * depth;
        let opts = CovarianceOptions { bin: 1, whitening: true };
        let a = CovarianceEstimate::from_population(&signal, &floor, dt, opts).unwrap();
        let b = CovarianceEstimate::from_population(&(signal * gain), &(floor * gain), dt, opts).unwrap();
        let va = kl_decompose(&a).unwrap().variances;
        let vb = kl_decompose(&b).unwrap().variances;
        for (x, y) in va.iter().zip(&vb) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
