//! End-to-end checks through the public API.

use hydrodeco::field::{free_energy_statistics, sample_equilibrium_field, total_energy_fluctuation};
use hydrodeco::influence::{
    decoherence_exponent, decoherence_scan, dissipation_kernel_apply, influence_action, HistoryPair,
};
use hydrodeco::langevin::{
    deterministic_decay, drift_residual, simulate_ensemble, simulate_mode, Initial, Method,
    ModeHistory, SimConfig,
};
use hydrodeco::medium::equilibrium_mode_variance;
use hydrodeco::noise::NoiseStream;
use hydrodeco::stats::series_variance;
use hydrodeco::{LatticeField, LatticeGeometry, MediumParams, ModeSpec};

fn ensemble_on(threads: usize, cfg: &SimConfig) -> Vec<Vec<Vec<f64>>> {
    let params = MediumParams::unit();
    let modes: Vec<ModeSpec> = [0.0, 0.5, 1.0, 3.0].iter().map(|&k| ModeSpec::at(k).unwrap()).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let ens = pool.install(|| simulate_ensemble(&params, &modes, 5, cfg).unwrap());
    ens.histories
        .iter()
        .map(|hs| hs.iter().map(|h| h.values().to_vec()).collect())
        .collect()
}

#[test]
fn ensemble_independent_of_thread_count() {
    let cfg = SimConfig::new(0.01, 20.0, Method::ExactOu, 99, Initial::Equilibrium).unwrap();
    let one = ensemble_on(1, &cfg);
    assert_eq!(one, ensemble_on(4, &cfg));
    assert_eq!(one.len(), 4);
    assert!(one.iter().all(|m| m.len() == 5 && m.iter().all(|t| t.len() == 2001)));
    // Trajectories are distinct streams.
    assert_ne!(one[2][0], one[2][1]);
    // The conserved mode never moves from its initial draw.
    assert!(one[0].iter().all(|t| t.iter().all(|&x| x == t[0])));
}

#[test]
fn silent_runs_follow_the_macroscopic_equation() {
    let params = MediumParams::new(1.5, 2.0, 0.7, 1).unwrap();
    let k = 1.3;
    for method in [Method::ExactOu, Method::EulerMaruyama] {
        let cfg = SimConfig::new(1e-3, 2.0, method, 3, Initial::Value(0.8))
            .unwrap()
            .with_noise_factor(0.0)
            .unwrap();
        let h = simulate_mode(&params, k, &cfg).unwrap();
        let end = deterministic_decay(&params, k, 0.8, 2.0);
        let tol = if method == Method::ExactOu { 1e-12 } else { 1e-3 };
        assert!((h.values()[h.len() - 1] - end).abs() < tol, "{method}");
        let r = drift_residual(&params, &h).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-3), "{method}");
    }
}

#[test]
fn long_run_matches_equilibrium_variance_for_several_media() {
    for (i, &(t0, c0, d0, k)) in [(1.0, 1.0, 1.0, 1.0), (2.0, 4.0, 0.5, 3.0), (0.3, 0.2, 5.0, 0.4)]
        .iter()
        .enumerate()
    {
        let params = MediumParams::new(t0, c0, d0, 1).unwrap();
        let cfg = SimConfig::new(0.02, 4000.0, Method::ExactOu, 1000 + i as u64, Initial::Equilibrium).unwrap();
        let h = simulate_mode(&params, k, &cfg).unwrap();
        let v = series_variance(h.values(), 50).unwrap();
        let z = v.z(equilibrium_mode_variance(&params));
        assert!(z < 4.0, "case {i}: variance {} ± {}, z = {z}", v.variance, v.stderr);
    }
}

#[test]
fn scan_matches_hand_values() {
    let rows = decoherence_scan(&MediumParams::unit(), &[1.0, 2.0, 4.0], 0.1, 10.0, 100).unwrap();
    for (row, want) in rows.iter().zip([0.2, 0.05, 0.0125]) {
        assert!((row.exponent - want).abs() < 1e-15, "{}", row.exponent);
        assert!((row.magnitude - (-want).exp()).abs() < 1e-15);
    }
}

#[test]
fn static_histories_reduce_to_free_energy() {
    // For constant histories only the c0/T0 part of the dissipation kernel
    // survives, so Re A_IF = ½·dt·N·[δT]·(c0/T0)·{δT}.
    let params = MediumParams::new(2.0, 3.0, 0.5, 1).unwrap();
    let (a, b, dt, n) = (0.7, -0.2, 0.05, 40);
    let h1 = ModeHistory::constant(2.0, dt, n, a).unwrap();
    let h2 = ModeHistory::constant(2.0, dt, n, b).unwrap();
    let kernel = dissipation_kernel_apply(&params, &h1).unwrap();
    let static_coupling = params.c0() / params.t0();
    assert!(kernel.iter().all(|&v| (v - static_coupling * a).abs() < 1e-12));
    let pair = HistoryPair::single(h1, h2).unwrap();
    let value = influence_action(&params, &pair).unwrap();
    let want = 0.5 * dt * n as f64 * static_coupling * (a * a - b * b);
    assert!((value.re - want).abs() < 1e-12, "{} vs {want}", value.re);
    assert!(value.im > 0.0);
    let deco = decoherence_exponent(&params, &pair).unwrap();
    assert!((deco.exponent - 2.0 * value.im).abs() < 1e-12 * deco.exponent);
}

#[test]
fn sampled_fields_obey_equipartition_in_three_dimensions() {
    let params = MediumParams::new(1.5, 0.5, 1.0, 3).unwrap();
    let geometry = LatticeGeometry::new(vec![3, 4, 2], vec![0.5, 1.0, 2.0]).unwrap();
    let n = 20_000u64;
    let fields: Vec<LatticeField> = (0..n)
        .map(|i| sample_equilibrium_field(&params, &geometry, &mut NoiseStream::new(8, i, 0.0)).unwrap())
        .collect();
    let du = total_energy_fluctuation(&params, &fields).unwrap();
    let expected = geometry.volume() * params.c0() * params.t0() * params.t0();
    assert!(du.variance_z(expected) < 4.0, "{du:?} vs {expected}");
    let df = free_energy_statistics(&params, &fields).unwrap();
    let half = geometry.n_sites() as f64 * params.t0() / 2.0;
    assert!(df.mean_z(half) < 4.0, "{df:?} vs {half}");
}
