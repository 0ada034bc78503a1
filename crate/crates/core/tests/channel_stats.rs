use backhaul_sim::channel::{complex_gaussian_matrix, generate_geometry, path_loss_db, PathLossModel, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ue_sc_distances(n: usize, seed: u64) -> Vec<f64> {
    let cfg = SystemConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let g = generate_geometry(&cfg, &mut rng);
        out.extend((0..cfg.num_cells).map(|k| g.ue_sc_distance(k)));
    }
    out.truncate(n);
    out
}

#[test]
fn ue_distances_stay_in_annulus() {
    for r in ue_sc_distances(10_000, 1) {
        assert!((10.0..=40.0).contains(&r), "{r}");
    }
}

#[test]
fn mean_ue_distance_matches_annulus_mean() {
    let d = ue_sc_distances(100_000, 2);
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let expected = 2.0 / 3.0 * (40f64.powi(3) - 10f64.powi(3)) / (40f64.powi(2) - 10f64.powi(2));
    assert!((expected - 28.0).abs() < 1e-12);
    assert!((mean - expected).abs() / expected < 0.01, "mean {mean}");
}

#[test]
fn ue_radius_follows_area_cdf() {
    let mut d = ue_sc_distances(100_000, 3);
    d.sort_by(f64::total_cmp);
    let n = d.len() as f64;
    let cdf = |r: f64| (r * r - 100.0) / (1600.0 - 100.0);
    let ks = d
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let f = cdf(r);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS statistic {ks}");
}

#[test]
fn shadowing_standard_deviation() {
    let model = PathLossModel::BS_TO_UE;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| path_loss_db(&model, 350.0, &mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((var.sqrt() - 10.0).abs() <= 0.2, "std {}", var.sqrt());
    assert!((mean - model.mean_db(350.0)).abs() < 0.1, "mean {mean}");
}

#[test]
fn small_scale_entries_have_unit_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = complex_gaussian_matrix(1000, 1000, &mut rng);
    let n = m.as_slice().len() as f64;
    let power = m.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
    let mean = m.as_slice().iter().sum::<num_complex::Complex64>() / n;
    assert!((power - 1.0).abs() < 0.02, "E|h|^2 = {power}");
    assert!(mean.norm() < 0.01, "mean {mean}");
}
