//! Slewing-beam model checked against values frozen from an independent
//! scipy implementation of the same boundary-value problem.

use ni_freebody::beam::*;
use ni_freebody::linalg;
use ni_freebody::ni::{classify_ni, FrequencyGrid};
use ni_freebody::{freebody, CMatrix, Complex, DMatrix};

fn arm() -> BeamParameters {
    BeamParameters::robotic_arm()
}

fn assert_close(got: &CMatrix, want: &[[Complex<f64>; 2]; 2], rel: f64) {
    let scale = want.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..2 {
        for j in 0..2 {
            let err = (got[(i, j)] - want[i][j]).norm();
            assert!(err <= rel * scale, "entry ({i},{j}): got {} want {} err {err:e}", got[(i, j)], want[i][j]);
        }
    }
}

fn re(x: f64) -> Complex<f64> {
    Complex::new(x, 0.0)
}

#[test]
fn transfer_matches_scipy_on_imaginary_axis() {
    let g = beam_tf_full(&arm(), Complex::new(0.0, 1.0)).unwrap().g;
    let off = -0.0066079131833207;
    assert_close(&g, &[[re(-0.2787798648680743), re(off)], [re(off), re(0.0177944385815558)]], 1e-9);
    let g = beam_tf_full(&arm(), Complex::new(0.0, 2.3)).unwrap().g;
    let off = -0.0066299642593177;
    assert_close(&g, &[[re(-0.0493548187628241), re(off)], [re(off), re(0.0178458045038911)]], 1e-9);
}

#[test]
fn transfer_matches_scipy_off_axis() {
    let g = beam_tf_full(&arm(), Complex::new(0.5, 3.0)).unwrap().g;
    let g11 = Complex::new(-0.0247997376158325, -0.009925874289290664);
    let g12 = Complex::new(-0.0066478283003548, 1.5570902313943637e-05);
    let g22 = Complex::new(0.0178874168936681, -3.627053416167775e-5);
    assert_close(&g, &[[g11, g12], [g12, g22]], 1e-9);
}

#[test]
fn modal_roots_match_scipy() {
    let want = [33.95326443354296, 95.01801888145482, 170.82100720557506, 293.2863977778106, 470.1240954371954];
    let got = first_modal_roots(&arm(), 5).unwrap();
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= 1e-9 * w, "root {g} vs {w}");
    }
}

#[test]
fn residues_are_rank_one_psd_with_scipy_eigenvalues() {
    let want_max =
        [0.27437773515687713, 0.05804663144040417, 0.20061065628696356, 0.046758088639485745, 0.10080486590388563];
    let roots = first_modal_roots(&arm(), 5).unwrap();
    for (w, want) in roots.iter().zip(want_max) {
        let r = modal_residue(&arm(), *w).unwrap();
        assert!(r.record.ok, "residue at {w} not PSD Hermitian");
        let k = r.record.residue.map(|z| z.re);
        let (vals, _) = linalg::sym_eigen_sorted(&k);
        assert!((vals[1] - want).abs() <= 1e-7 * want, "max eig {} vs {want}", vals[1]);
        assert!(vals[0].abs() <= 1e-8 * want, "min eig {} not zero", vals[0]);
        assert!(r.record.residue.map(|z| z.im).norm() <= 1e-8 * want);
    }
}

#[test]
fn first_residue_matches_scipy() {
    let roots = first_modal_roots(&arm(), 1).unwrap();
    let k = modal_residue(&arm(), roots[0]).unwrap().record.residue;
    let off = -0.0995461424432564;
    assert_close(&k, &[[re(0.0427889157134018), re(off)], [re(off), re(0.2315888194434753)]], 1e-7);
}

#[test]
fn free_body_coefficient_is_inverse_total_inertia() {
    let p = arm();
    let l = free_body_limit(&p).unwrap();
    let want = 1.0 / p.total_inertia();
    assert!((l.g2[(0, 0)] - want).abs() <= 1e-8 * want, "G2 {} vs {want}", l.g2[(0, 0)]);
    assert!(l.g2[(0, 1)].abs() + l.g2[(1, 0)].abs() + l.g2[(1, 1)].abs() <= 1e-8 * want);
    assert!(l.g1.norm() <= 1e-8 * want);
}

#[test]
fn transfer_is_reciprocal_on_the_axis() {
    let p = arm();
    for i in 0..10 {
        let w = 0.7 + 53.1 * i as f64;
        let g = beam_tf_full(&p, Complex::new(0.0, w)).unwrap().g;
        let asym = (g[(0, 1)] - g[(1, 0)]).norm();
        assert!(asym <= 1e-9 * g.norm(), "asymmetry {asym:e} at {w}");
        assert!(g.map(|z| z.im).norm() <= 1e-9 * g.norm(), "complex value on axis at {w}");
    }
}

#[test]
fn truncated_models_are_ni_with_psd_modal_coefficients() {
    for n in 1..=4 {
        let approx = finite_dim_approx(&arm(), n).unwrap();
        for mode in &approx.model.modes {
            let (vals, _) = linalg::sym_eigen_sorted(&mode.coefficient);
            assert!(vals[0] >= -1e-8 * vals[1].abs(), "mode at {} has eig {}", mode.frequency, vals[0]);
        }
        let ss = approx.model.to_state_space().unwrap();
        let report = classify_ni(&ss, &FrequencyGrid::default()).unwrap();
        assert!(report.is_ni, "n={n}: {:?}", report.reason);
        let l = freebody::laurent_coefficients(&ss).unwrap();
        let g2 = approx.model.g2.clone().unwrap();
        assert!((&l.g2 - &g2).norm() <= 1e-8 * g2.norm());
    }
}

#[test]
fn corrected_truncation_tracks_beam_below_half_last_pole() {
    let p = arm();
    for n in 1..=4 {
        let approx = finite_dim_approx(&p, n).unwrap();
        let top = approx.poles[n - 1] / 2.0;
        let mut worst: f64 = 0.0;
        for w in linear_grid(0.1, top, 200) {
            let s = Complex::new(0.0, w);
            let exact = match beam_tf_full(&p, s) {
                Ok(x) => x.g,
                Err(_) => continue,
            };
            let err = (approx.eval_corrected(s) - &exact).norm() / exact.norm();
            worst = worst.max(err);
        }
        assert!(worst <= 0.02, "n={n}: worst relative error {worst}");
    }
}

#[test]
fn residue_scan_nonnegative_on_low_band() {
    let grid = linear_grid(0.1, 260.0, 2000);
    let scan = emit_residue_scan(&arm(), 1.0, &grid).unwrap();
    assert!(scan.len() > 1900);
    let min = scan.iter().map(|x| x.value).fold(f64::INFINITY, f64::min);
    assert!(min >= -1e-9, "scan minimum {min}");
}

#[test]
fn residue_scan_near_root_matches_scaled_residue() {
    let p = arm();
    let w0 = first_modal_roots(&p, 1).unwrap()[0];
    let r = modal_residue(&p, w0).unwrap();
    let k = r.record.residue.map(|z| z.re);
    let target: DMatrix<f64> = &k * (r.d_prime * r.d_prime);
    let (vals, _) = linalg::sym_eigen_sorted(&target);
    let w = w0 * (1.0 + 1e-7);
    let scan = emit_residue_scan(&p, 0.0, &[w]).unwrap();
    assert_eq!(scan.len(), 1);
    assert!((scan[0].value - vals[0]).abs() <= 1e-4 * vals[1], "{} vs {}", scan[0].value, vals[0]);
}
