use ucesim_wasm::{curve_view, gap_report, histogram_view};

#[test]
fn histogram_density_integrates_to_one() {
    let view = histogram_view(4, 60, 2000, 1).unwrap();
    assert_eq!(view.centers.len(), 200);
    let width = view.centers[1] - view.centers[0];
    let empirical: f64 = view.empirical.iter().sum::<f64>() * width;
    let cue: f64 = view.cue.iter().sum::<f64>() * width;
    assert!((empirical - 1.0).abs() < 1e-9, "{empirical}");
    assert!((cue - 1.0).abs() < 1e-3, "{cue}");
    assert!(view.distance < 0.05);
}

#[test]
fn curve_falls_and_is_deterministic() {
    let a = curve_view(3, "mu2", 100, 500, 2).unwrap();
    let b = curve_view(3, "mu2", 100, 500, 2).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.gates[0], 1);
    assert!(a.values.last().unwrap() < &(a.values[0] / 5.0));
}

#[test]
fn gap_and_limits() {
    let exact = gap_report(0, 0).unwrap();
    assert!((exact.gap - 0.232703).abs() < 1e-6);
    assert!(gap_report(10_000_000, 0).is_err());
    assert!(histogram_view(13, 10, 10, 0).is_err());
    assert!(curve_view(3, "mu9", 10, 10, 0).is_err());
}
