#[allow(dead_code)]
#[path = "../examples/weight_decay_modes.rs"]
mod weight_decay_modes;
#[allow(dead_code)]
#[path = "../examples/adam_family.rs"]
mod adam_family;
#[allow(dead_code)]
#[path = "../examples/adai_amsgrad.rs"]
mod adai_amsgrad;
#[allow(dead_code)]
#[path = "../examples/schedules.rs"]
mod schedules;
#[allow(dead_code)]
#[path = "../examples/rescaled_coordinates.rs"]
mod rescaled_coordinates;
#[allow(dead_code)]
#[path = "../examples/momentum_decomposition.rs"]
mod momentum_decomposition;
#[allow(dead_code)]
#[path = "../examples/ridge_quadratic.rs"]
mod ridge_quadratic;
#[allow(dead_code)]
#[path = "../examples/gradient_check.rs"]
mod gradient_check;
#[allow(dead_code)]
#[path = "../examples/two_moons_sweep.rs"]
mod two_moons_sweep;
#[allow(dead_code)]
#[path = "../examples/config_run.rs"]
mod config_run;

use swd::DecayMode;

#[test]
fn weight_decay_modes_example() {
    let r = weight_decay_modes::run_example().unwrap();
    assert_eq!(r.stable_vs_retuned_decoupled, 0.0);
    assert!(r.stable_vs_l2 > 1e-6);
    assert_eq!(r.final_losses.len(), 4);
}

#[test]
fn adam_family_example() {
    let series = adam_family::run_example().unwrap();
    let adamw = series.iter().find(|s| s.mode == DecayMode::Decoupled).unwrap();
    let adams = series.iter().find(|s| s.mode == DecayMode::Stable).unwrap();
    assert!(!adamw.stable && adamw.relative_std > 1e-3);
    assert!(adams.stable && (adams.last - 25.0).abs() < 1e-9);
}

#[test]
fn adai_amsgrad_example() {
    for (kind, mode, start, end) in adai_amsgrad::run_example().unwrap() {
        assert!(end < start, "{kind}/{mode} did not reduce the loss");
    }
}

#[test]
fn schedules_example() {
    let r = schedules::run_example().unwrap();
    assert_eq!(r.restarts, vec![14, 42, 98, 210]);
    assert_eq!(r.milestone_etas[0], 0.1);
    assert!((r.vanilla_rates[0] - 0.99).abs() < 1e-12);
    assert!((r.vanilla_rates[1] - 0.9).abs() < 1e-12);
    assert_eq!(r.cosine_first_period[0], 0.1);
}

#[test]
fn rescaled_coordinates_example() {
    for (lambda, dev) in rescaled_coordinates::run_example().unwrap() {
        assert!(dev <= 1e-8, "λ = {lambda}: {dev}");
    }
}

#[test]
fn momentum_decomposition_example() {
    let r = momentum_decomposition::run_example().unwrap();
    assert!(r.max_error <= 1e-10);
    assert!((r.amplification[0].1 - 1.0).abs() < 1e-12);
    assert!((r.amplification.last().unwrap().1 - 10.0).abs() < 0.1);
}

#[test]
fn ridge_quadratic_example() {
    assert!(ridge_quadratic::run_example().unwrap() <= 1e-6);
}

#[test]
fn gradient_check_example() {
    for (name, err) in gradient_check::run_example().unwrap() {
        assert!(err <= 1e-5, "{name}: {err}");
    }
}

#[test]
fn two_moons_sweep_example() {
    let dir = tempfile::tempdir().unwrap();
    let rows = two_moons_sweep::run_example(dir.path().to_path_buf()).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(dir.path().join("summary.csv").exists());
    assert!(dir.path().join("grid.csv").exists());
}

#[test]
fn config_run_example() {
    let outcome = config_run::run_example().unwrap();
    assert!(outcome.abort.is_none());
    assert!(outcome.summary.stable);
}
