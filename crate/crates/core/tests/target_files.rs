use std::path::PathBuf;

use bilip::experiments::TargetSpec;
use bilip::Target64;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/targets")
}

#[test]
fn shipped_dense_spike_matches_preset() {
    let path = configs().join("dense_spike.target");
    let spec = TargetSpec::parse(path.to_str().unwrap()).unwrap();
    assert!(matches!(spec, TargetSpec::File { .. }));
    let from_file = spec.build().unwrap();
    let preset = Target64::dense_spike(0.9, 0.1).unwrap();
    for i in -300..=300 {
        let x = f64::from(i) * 0.01;
        assert!((from_file.density_1d(x) - preset.density_1d(x)).abs() < 1e-14, "x = {x}");
    }
}

#[test]
fn shipped_targets_are_normalized() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let t = TargetSpec::parse(path.to_str().unwrap()).unwrap().build().unwrap();
        let (lo, hi) = t.effective_support_1d(1e-12).unwrap();
        assert!((t.interval_mass_1d(lo, hi) - 1.0).abs() < 1e-9, "{}", path.display());
    }
}
