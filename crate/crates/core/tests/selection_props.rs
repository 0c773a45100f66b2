mod common;

use aselect::selection::{average_hfr, select_timestep, HfrCurve};
use aselect::spectral::hfr;
use aselect::tensor_io::{load_manifest, write_tensor, Dtype, FeatureMap};
use common::*;
use proptest::prelude::*;
use std::path::Path;

fn curve(values: &[f64]) -> HfrCurve {
    let pts: Vec<(u32, f64, usize)> = values.iter().enumerate().map(|(i, &v)| (i as u32 * 10 + 1, v, 1)).collect();
    HfrCurve::new(&pts, 30.0).unwrap()
}

/// Manifest with the given maps at timestep 1 and random maps at 2.
fn write_dataset(dir: &Path, maps: &[FeatureMap]) -> std::path::PathBuf {
    let mut entries = Vec::new();
    for (i, m) in maps.iter().enumerate() {
        for t in [1u32, 2] {
            let name = format!("f{i}_t{t}.npy");
            let map = if t == 1 { m.clone() } else { random_map(&mut rng(i as u64), m.channels(), m.height(), m.width()) };
            write_tensor(&map, dir.join(&name), Dtype::F64).unwrap();
            entries.push(serde_json::json!({"path": name, "image_id": format!("f{i}"), "timestep": t}));
        }
    }
    let p = dir.join("manifest.json");
    std::fs::write(&p, serde_json::json!({"total_timesteps": 2, "entries": entries}).to_string()).unwrap();
    p
}

proptest! {
    #[test]
    fn monotone_transforms_keep_the_choice(values in prop::collection::vec(0.0..1.0f64, 1..30)) {
        let base = select_timestep(&curve(&values), 0.0).unwrap().selected_t;
        let cubed = curve(&values).map_values(|v| v.powi(3));
        let logged = curve(&values).map_values(|v| (v + 1.0).ln());
        prop_assert_eq!(select_timestep(&cubed, 0.0).unwrap().selected_t, base);
        prop_assert_eq!(select_timestep(&logged, 0.0).unwrap().selected_t, base);
    }

    #[test]
    fn selected_is_a_maximum_and_listed_in_ties(values in prop::collection::vec(0.0..1.0f64, 1..30), eps in 0.0..0.1f64) {
        let r = select_timestep(&curve(&values), eps).unwrap();
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(r.max_mean_hfr, max);
        prop_assert!(r.ties.contains(&r.selected_t));
        let first = values.iter().position(|&v| v == max).unwrap();
        prop_assert_eq!(r.selected_t, first as u32 * 10 + 1);
    }
}

#[test]
fn exact_tie_goes_to_the_earlier_timestep() {
    let r = select_timestep(&curve(&[0.1, 0.5, 0.5, 0.2]), 1e-4).unwrap();
    assert_eq!(r.selected_t, 11);
    assert_eq!(r.ties, vec![11, 21]);
}

#[test]
fn resolution_table_selects_the_best_accuracy_timesteps() {
    for (res, want) in [(256, 1), (512, 50), (1024, 150)] {
        let pts: Vec<(u32, f64, usize)> = table_column(res).iter().map(|&(t, _, h)| (t, h, 1)).collect();
        let r = select_timestep(&HfrCurve::new(&pts, 30.0).unwrap(), 1e-4).unwrap();
        assert_eq!(r.selected_t, want, "{res}");
        let best_acc = table_column(res).iter().cloned().fold((0, f64::MIN), |a, (t, acc, _)| if acc > a.1 { (t, acc) } else { a });
        assert_eq!(best_acc.0, want);
    }
}

#[test]
fn average_matches_hand_mean_and_ignores_duplication() {
    let dir = tempfile::tempdir().unwrap();
    let maps: Vec<FeatureMap> = (0..3).map(|k| random_map(&mut rng(100 + k), 2, 12, 10)).collect();
    let m = load_manifest(write_dataset(dir.path(), &maps)).unwrap();
    let c = average_hfr(&m, 4.0, Some(&[1])).unwrap();
    let hand = maps.iter().map(|x| hfr(x, 4.0).unwrap()).sum::<f64>() / 3.0;
    assert!((c.mean_hfr()[0] - hand).abs() <= 1e-12 * hand);
    assert_eq!(c.counts(), &[3]);

    let dup = tempfile::tempdir().unwrap();
    let doubled: Vec<FeatureMap> = maps.iter().chain(maps.iter()).cloned().collect();
    let m2 = load_manifest(write_dataset(dup.path(), &doubled)).unwrap();
    let c2 = average_hfr(&m2, 4.0, Some(&[1])).unwrap();
    assert!((c2.mean_hfr()[0] - c.mean_hfr()[0]).abs() <= 1e-12);

    let perm = tempfile::tempdir().unwrap();
    let reordered = vec![maps[2].clone(), maps[0].clone(), maps[1].clone()];
    let m3 = load_manifest(write_dataset(perm.path(), &reordered)).unwrap();
    let c3 = average_hfr(&m3, 4.0, Some(&[1])).unwrap();
    assert!((c3.mean_hfr()[0] - c.mean_hfr()[0]).abs() <= 1e-12);
}

#[test]
fn missing_timestep_and_zero_energy_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let maps = vec![random_map(&mut rng(1), 1, 4, 4), FeatureMap::zeros(1, 4, 4).unwrap()];
    let m = load_manifest(write_dataset(dir.path(), &maps)).unwrap();
    assert_eq!(average_hfr(&m, 30.0, Some(&[7])).unwrap_err().class(), "EmptyTimestep");
    let err = average_hfr(&m, 30.0, Some(&[1])).unwrap_err();
    assert_eq!(err.class(), "ZeroEnergyFeature");
    assert!(err.to_string().contains("f1_t1.npy"), "{err}");
}

#[test]
fn curve_csv_round_trip() {
    let c = curve(&[0.25, 0.5, 0.125]);
    let back = HfrCurve::from_csv(&c.to_csv(), 30.0).unwrap();
    assert_eq!(back, c);
}
