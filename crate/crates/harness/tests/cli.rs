use std::fs;
use std::process::Command as Process;

use liddi_core::hmf::{relaxation_time, trajectory_rng};
use liddi_harness::commands::{dispersion, eta_table, fig2, run, scaling, Command};
use liddi_harness::config::{resolve, DEFAULT_CONFIG};
use liddi_harness::output::{read_echo, read_meta};
use liddi_harness::{load_config_str, Overrides};
use rand::Rng;

fn small_sim(seed: u64) -> String {
    format!(
        "[sim]\nseed = {seed}\nn = [32, 64]\nrealizations = 10\nhorizon = 4000.0\nbootstrap = 200\nsmoothing = 20.0\n"
    )
}

#[test]
fn outputs_echo_a_round_trippable_config() {
    let dir = tempfile::tempdir().unwrap();
    let ov = Overrides {
        out: Some(dir.path().to_path_buf()),
        seed: Some(42),
        ..Overrides::default()
    };
    let cfg = liddi_harness::load_config_with(None, &ov).unwrap();
    let path = run(Command::Dispersion, &cfg, None).unwrap();
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# liddi dispersion\n"));
    let echoed = read_echo(&text).unwrap();
    assert_eq!(echoed.sim.seed, Some(42));
    assert_eq!(resolve(echoed).unwrap(), cfg);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "omega,wavelength,n_eff,beta_fiber,beta_grating,dos_grating,in_gap"
    );
    assert!(read_meta(&text).iter().any(|(k, _)| k == "n_bar_solver"));
}

#[test]
fn unmodulated_fiber_reports_zero_gap() {
    let cfg = load_config_str("[sim]\nseed = 1\n[fiber]\ndelta_n = 0.0\n").unwrap();
    let t = dispersion(&cfg).unwrap();
    let width = t
        .meta
        .iter()
        .find(|(k, _)| k == "gap_width_solver")
        .unwrap()
        .1
        .parse::<f64>()
        .unwrap();
    assert_eq!(width, 0.0);
    assert!(t.column("in_gap").unwrap().iter().all(|g| *g == 0.0));
}

#[test]
fn eta_grows_toward_the_surface() {
    let cfg = load_config_str("radii = [3.0, 2.0, 1.5, 1.2, 1.05]\n[sim]\nseed = 1\n").unwrap();
    let t = eta_table(&cfg).unwrap();
    for conv in ["energy", "unweighted"] {
        let fbg = t.column(&format!("eta_fbg_{conv}")).unwrap();
        assert!(fbg.windows(2).all(|w| w[1] > w[0]), "{conv}: {fbg:?}");
    }
}

#[test]
fn fig2_curves_are_ordered() {
    let cfg = load_config_str(DEFAULT_CONFIG).unwrap();
    let t = fig2(&cfg).unwrap();
    let (r, muc) = (t.column("r_over_a").unwrap(), t.column("tau_muc").unwrap());
    let rows = |radius: f64| (0..r.len()).filter(|&k| r[k] == radius).collect::<Vec<_>>();
    for radius in [2.0, 1.5, 1.1] {
        assert!(rows(radius).windows(2).all(|w| muc[w[1]] > muc[w[0]]));
    }
    for (a, b) in rows(1.1).into_iter().zip(rows(2.0)) {
        assert!(muc[a] < muc[b]);
    }
}

#[test]
fn scaling_is_deterministic_and_archived() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config_str(&small_sim(3)).unwrap();
    let a = scaling(&cfg, Some(2), Some(dir.path())).unwrap();
    let b = scaling(&cfg, Some(1), None).unwrap();
    assert_eq!(a.table, b.table);
    assert_eq!(a.sizes.len(), 2);
    let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().filter(|l| !l.starts_with('#')).count(), 1 + 20);
    let traj = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(traj.lines().any(|l| l.starts_with("64,9,")));
    let other = scaling(&load_config_str(&small_sim(4)).unwrap(), None, None).unwrap();
    assert_ne!(other.table, a.table);
}

#[test]
fn doubling_realizations_narrows_the_interval() {
    // exponential relaxation times: the median's spread scales as 1/sqrt(n)
    let mut rng = trajectory_rng(10, 0);
    let width = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let runs: Vec<Option<f64>> = (0..n).map(|_| Some(-rng.random::<f64>().ln())).collect();
        let est = relaxation_time(&runs, 1e9, 1000, 0.95, rng).unwrap();
        est.ci_high - est.ci_low
    };
    let reps = 40;
    let small: f64 = (0..reps).map(|_| width(40, &mut rng)).sum::<f64>() / reps as f64;
    let large: f64 = (0..reps).map(|_| width(80, &mut rng)).sum::<f64>() / reps as f64;
    let ratio = small / large;
    assert!((ratio - 2f64.sqrt()).abs() < 0.25, "{ratio}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_liddi");
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[sim]\nseed = 1\n[fiber]\nradius = -2.0\n").unwrap();
    let status = Process::new(bin)
        .args(["eta-table", "--config"])
        .arg(&bad)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));

    let unseeded = dir.path().join("unseeded.toml");
    fs::write(&unseeded, "[fiber]\nradius = 250e-9\n").unwrap();
    let status = Process::new(bin)
        .args(["eta-table", "--config"])
        .arg(&unseeded)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));

    // the laser lands outside the stop band: a numerical, not a validation, failure
    let outside = dir.path().join("outside.toml");
    fs::write(
        &outside,
        "[sim]\nseed = 1\n[fiber]\nupper_edge_wavelength = 850e-9\n",
    )
    .unwrap();
    let status = Process::new(bin)
        .args(["eta-table", "--config"])
        .arg(&outside)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(3));

    let out = Process::new(bin)
        .args(["eta-table", "--config"])
        .arg(&unseeded)
        .args(["--seed", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("eta-table.csv").exists());
}
