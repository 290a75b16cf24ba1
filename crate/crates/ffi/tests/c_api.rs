use std::ffi::{CStr, CString};
use std::ptr;

use pcs_sim_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(pcs_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn space(cutoff: u64) -> *mut PcsSpace {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pcs_space_new(cutoff, &mut s) }, PcsStatus::Ok);
    s
}

#[test]
fn space_and_indexing() {
    unsafe {
        let s = space(20);
        assert_eq!(pcs_space_dim(s), 882);
        let mut idx = 0;
        assert_eq!(pcs_space_flat_index(s, PCS_ATOM_E, 0, 0, &mut idx), PcsStatus::Ok);
        assert_eq!(idx, 441);
        assert_eq!(pcs_space_flat_index(s, PCS_ATOM_G, 21, 0, &mut idx), PcsStatus::Input);
        assert!(last_error().contains("out of bounds"), "{}", last_error());
        assert_eq!(pcs_space_flat_index(s, 7, 0, 0, &mut idx), PcsStatus::InvalidArgument);
        pcs_space_free(s);
    }
}

#[test]
fn null_handles_are_reported() {
    unsafe {
        assert_eq!(pcs_space_new(5, ptr::null_mut()), PcsStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(pcs_state_inversion(ptr::null(), &mut v), PcsStatus::NullPointer);
        assert_eq!(pcs_space_dim(ptr::null()), 0);
        pcs_state_free(ptr::null_mut());
        let mut s = ptr::null_mut();
        assert_eq!(pcs_space_new(0, &mut s), PcsStatus::Input);
        assert!(s.is_null());
    }
}

#[test]
fn state_observables() {
    unsafe {
        let s = space(30);
        let mut psi = ptr::null_mut();
        assert_eq!(pcs_state_pcs(s, 2.0, 0.0, 1, PCS_ATOM_G, &mut psi), PcsStatus::Ok);
        let (mut sz, mut re, mut im, mut qm, mut qv) = (0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(pcs_state_inversion(psi, &mut sz), PcsStatus::Ok);
        assert_eq!(pcs_state_polarization(psi, &mut re, &mut im), PcsStatus::Ok);
        assert_eq!(pcs_state_charge_stats(psi, &mut qm, &mut qv), PcsStatus::Ok);
        assert!((sz + 1.0).abs() < 1e-12);
        assert_eq!((re, im), (0.0, 0.0));
        assert!((qm - 1.0).abs() < 1e-12 && qv.abs() < 1e-10);

        let mut probs = vec![0.0; 31 * 31];
        assert_eq!(pcs_state_marginal(psi, probs.as_mut_ptr(), probs.len() as u64), PcsStatus::Ok);
        // P(1,0) = N₁² = |ξ|/I₁(2|ξ|)
        assert!((probs[31] - 0.2049292628747027).abs() < 1e-12);
        assert_eq!(pcs_state_marginal(psi, probs.as_mut_ptr(), 10), PcsStatus::InvalidArgument);

        let n = pcs_state_len(psi) as usize;
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(pcs_state_amplitudes(psi, a.as_mut_ptr(), b.as_mut_ptr(), n as u64), PcsStatus::Ok);
        let norm: f64 = a.iter().zip(&b).map(|(x, y)| x * x + y * y).sum();
        assert!((norm - 1.0).abs() < 1e-12);

        let mut f = 0.0;
        assert_eq!(pcs_state_fidelity(psi, psi, &mut f), PcsStatus::Ok);
        assert!((f - 1.0).abs() < 1e-12);

        let mut rho = ptr::null_mut();
        assert_eq!(pcs_density_from_state(psi, &mut rho), PcsStatus::Ok);
        let mut p = 0.0;
        assert_eq!(pcs_density_purity(rho, &mut p), PcsStatus::Ok);
        assert!((p - 1.0).abs() < 1e-12);
        assert_eq!(pcs_density_fidelity(rho, psi, &mut f), PcsStatus::Ok);
        assert!((f - 1.0).abs() < 1e-12);

        pcs_density_free(rho);
        pcs_state_free(psi);
        pcs_space_free(s);
    }
}

#[test]
fn pcs_with_negative_charge_is_rejected() {
    unsafe {
        let s = space(10);
        let mut psi = ptr::null_mut();
        assert_eq!(pcs_state_pcs(s, 1.0, 0.0, -1, PCS_ATOM_G, &mut psi), PcsStatus::Input);
        assert!(last_error().contains("exchange modes"), "{}", last_error());
        pcs_space_free(s);
    }
}

#[test]
fn bessel_values() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(pcs_bessel_i(1, 2.0, &mut v), PcsStatus::Ok);
        assert!((v - 1.590636854637329).abs() < 1e-14);
        assert_eq!(pcs_bessel_i(0, -1.0, &mut v), PcsStatus::Input);
    }
}

#[test]
fn master_equation_decay() {
    unsafe {
        let s = space(2);
        let mut psi = ptr::null_mut();
        assert_eq!(pcs_state_fock(s, PCS_ATOM_E, 0, 0, &mut psi), PcsStatus::Ok);
        let params = PcsRunParams {
            alpha: 0.1,
            xi_re: 0.0,
            xi_im: 0.0,
            gamma: 1.0,
            dt: 0.01,
            t_final: 1.0,
            n_traj: 1,
            master_seed: 0,
            output_every: 10,
        };
        let mut series = ptr::null_mut();
        let mut rho = ptr::null_mut();
        assert_eq!(pcs_master_equation(psi, &params, ptr::null(), &mut series, &mut rho), PcsStatus::Ok);
        let n = pcs_series_len(series) as usize;
        assert_eq!(n, 11);
        assert!(pcs_series_has_column(series, PcsColumn::Purity));
        assert!(!pcs_series_has_column(series, PcsColumn::FidelityPcs));
        let mut t = vec![0.0; n];
        assert_eq!(pcs_series_column(series, PcsColumn::Time, t.as_mut_ptr(), n as u64), PcsStatus::Ok);
        assert_eq!(t[n - 1], 1.0);
        let mut f = vec![0.0; n];
        assert_eq!(
            pcs_series_column(series, PcsColumn::FidelityPcs, f.as_mut_ptr(), n as u64),
            PcsStatus::InvalidArgument
        );
        let mut trace = 0.0;
        assert_eq!(pcs_density_inversion(rho, &mut trace), PcsStatus::Ok);
        assert!(trace < 0.0);
        pcs_series_free(series);
        pcs_density_free(rho);

        let bad = PcsRunParams { dt: 0.3, ..params };
        assert_eq!(pcs_master_equation(psi, &bad, ptr::null(), &mut series, ptr::null_mut()), PcsStatus::Input);
        pcs_state_free(psi);
        pcs_space_free(s);
    }
}

#[test]
fn mc_ensemble_runs() {
    unsafe {
        let s = space(4);
        let mut psi = ptr::null_mut();
        assert_eq!(pcs_state_fock(s, PCS_ATOM_E, 2, 1, &mut psi), PcsStatus::Ok);
        let params = PcsRunParams {
            alpha: 0.2,
            xi_re: 1.0,
            xi_im: 0.0,
            gamma: 10.0,
            dt: 0.005,
            t_final: 1.0,
            n_traj: 16,
            master_seed: 3,
            output_every: 20,
        };
        let (mut mean, mut se) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            pcs_mc_ensemble(psi, &params, ptr::null(), &mut mean, &mut se, ptr::null_mut()),
            PcsStatus::Ok
        );
        assert_eq!(pcs_series_len(mean), pcs_series_len(se));
        assert!(!pcs_series_has_column(se, PcsColumn::Purity));
        pcs_series_free(mean);
        pcs_series_free(se);
        pcs_state_free(psi);
        pcs_space_free(s);
    }
}

#[test]
fn run_scenario_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let name = CString::new("pcs_build").unwrap();
    let cfg = CString::new("[initial]\nkind = \"pcs\"\nxi = 0.0\nq = 0\n").unwrap();
    unsafe {
        assert_eq!(pcs_run_scenario(name.as_ptr(), cfg.as_ptr(), out.as_ptr()), PcsStatus::Ok);
    }
    let csv = std::fs::read_to_string(dir.path().join("pnm_pcs.csv")).unwrap();
    assert_eq!(csv, "n,m,p\n0,0,1.0\n");

    let bad = CString::new("[space]\ncutoff = 3\n").unwrap();
    let relax = CString::new("relax_me").unwrap();
    unsafe {
        assert_eq!(pcs_run_scenario(relax.as_ptr(), bad.as_ptr(), out.as_ptr()), PcsStatus::Config);
        assert!(last_error().contains("initial.n"), "{}", last_error());
        let unknown = CString::new("nonsense").unwrap();
        assert_eq!(pcs_run_scenario(unknown.as_ptr(), ptr::null(), out.as_ptr()), PcsStatus::Config);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(pcs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
