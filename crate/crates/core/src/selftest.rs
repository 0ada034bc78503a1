//! Property checks behind the `selftest` subcommand.
//!
//! Each check draws its own seeded inputs and reports the worst deviation
//! it saw, so a failing line says by how much a tolerance was missed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{complex_gaussian_matrix, generate_drop, DuplexMode, ScAntennas, SystemConfig};
use crate::cli::table_to_csv;
use crate::link_rates::{apply_rsi, waterfilling, zddir_beamformer};
use crate::matrix_ops::{pseudo_inverse, svd, ComplexMatrix, NullSpace};
use crate::montecarlo::{run_sweep, RunOptions, SweepSpec};
use crate::strategies::{
    ctdd_link_rates_on, zdd_ir_link_rates, zdd_link_rates, Direction, Strategy,
};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn bound(name: &'static str, worst: f64, tol: f64) -> Self {
        Self {
            name,
            passed: worst <= tol,
            detail: format!("worst {worst:.3e} (tolerance {tol:.0e})"),
        }
    }
}

pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    let mut out = linear_algebra(seed, 200);
    out.push(waterfilling_kkt(seed, 10_000));
    out.extend(ir_identities(seed, 200));
    out.extend(degenerate_equivalences(seed, 20));
    out.push(sweep_determinism(seed));
    out
}

/// Zero-forcing, SVD and null-space identities on Gaussian matrices with
/// the default system's shapes.
pub fn linear_algebra(seed: u64, instances: usize) -> Vec<CheckOutcome> {
    let cfg = SystemConfig::default();
    let k = cfg.num_cells;
    let shapes = [
        (k * cfg.n_ue, cfg.n_bs),
        (k * cfg.n_sct(), cfg.n_bs),
        (k * cfg.n_sc, cfg.n_bs),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut zf, mut rec, mut null) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = 0;
    for i in 0..instances {
        let (r, c) = shapes[i % shapes.len()];
        let h = complex_gaussian_matrix(r, c, &mut rng);
        match (pseudo_inverse(&h), svd(&h), NullSpace::of(&h)) {
            (Ok(hd), Ok(f), Ok(ns)) => {
                zf = zf.max(h.matmul(&hd).max_abs_diff(&ComplexMatrix::identity(r)));
                rec = rec.max(f.reconstruct().sub(&h).frobenius_norm() / h.frobenius_norm());
                null = null.max(h.matmul(&ns.basis()).max_abs());
            }
            _ => failures += 1,
        }
    }
    let fail = |name| CheckOutcome {
        name,
        passed: false,
        detail: format!("{failures} factorizations failed"),
    };
    if failures > 0 {
        return vec![fail("zf orthogonality"), fail("svd reconstruction"), fail("null-space nulling")];
    }
    vec![
        CheckOutcome::bound("zf orthogonality", zf, 1e-8),
        CheckOutcome::bound("svd reconstruction", rec, 1e-10),
        CheckOutcome::bound("null-space nulling", null, 1e-8),
    ]
}

/// Power fractions are non-negative, sum to one, share a water level on
/// the active streams and leave inactive streams below the cutoff.
pub fn waterfilling_kkt(seed: u64, lists: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5741_5445_5246_494c);
    let mut worst = 0.0f64;
    for _ in 0..lists {
        let n = rng.random_range(1..=8);
        let gammas: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..3.0))).collect();
        let w = waterfilling(&gammas, 1.0);
        let level = 1.0 / w.cutoff;
        let sum: f64 = w.power_fractions.iter().sum();
        worst = worst.max((sum - 1.0).abs());
        let mut cap = 0.0;
        for (&g, &p) in gammas.iter().zip(&w.power_fractions) {
            if p > 0.0 {
                worst = worst.max(((p + 1.0 / g) - level).abs() / level);
                cap += (1.0 + p * g).log2();
            } else {
                worst = worst.max(-p);
                // inactive: the water level does not reach 1/g
                worst = worst.max((level - 1.0 / g).max(0.0) * g);
            }
        }
        worst = worst.max((cap - w.capacity_bits_per_sec).abs() / cap.max(1.0));
    }
    CheckOutcome::bound("water-filling kkt", worst, 1e-9)
}

/// The interference-rejecting beamformer nulls the BS-UE channel and
/// inverts the BS-SC channel.
pub fn ir_identities(seed: u64, drops: usize) -> Vec<CheckOutcome> {
    let cfg = SystemConfig::default();
    let ants = ScAntennas::for_config(&cfg);
    let (mut nulling, mut identity) = (0.0f64, 0.0f64);
    for i in 0..drops {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let drop = generate_drop(&cfg, &mut rng).expect("default config is valid");
        let hu = drop.h_b2u_cal();
        for set in [&ants.rx, &ants.tx] {
            let hs = drop.h_b2s_cal(set);
            let Ok(g) = zddir_beamformer(&hu, &hs) else {
                return vec![CheckOutcome {
                    name: "ir identities",
                    passed: false,
                    detail: format!("beamformer failed on drop {i}"),
                }];
            };
            nulling = nulling.max(hu.matmul(&g).max_abs());
            identity = identity.max(hs.matmul(&g).max_abs_diff(&ComplexMatrix::identity(hs.rows())));
        }
    }
    vec![
        CheckOutcome::bound("ir nulling", nulling, 1e-7),
        CheckOutcome::bound("ir inversion", identity, 1e-7),
    ]
}

fn same(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Interference-free full-duplex rates equal half-duplex rates on the same
/// antennas, bit for bit.
pub fn degenerate_equivalences(seed: u64, drops: usize) -> Vec<CheckOutcome> {
    let mut mismatches = [0usize; 3];
    let mut total = 0;
    for mode in [DuplexMode::Conservative, DuplexMode::Complete] {
        for rsi_db in [0.0, 3.0] {
            let cfg = SystemConfig {
                mode,
                rsi_db,
                ..SystemConfig::default()
            };
            let ants = ScAntennas::for_config(&cfg);
            for i in 0..drops {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(i as u64));
                let mut drop = generate_drop(&cfg, &mut rng).expect("valid config");
                let noise = apply_rsi(drop.noise_sc_w_hz, rsi_db);
                total += 1;
                for dir in Direction::BOTH {
                    let half = ctdd_link_rates_on(&drop, &cfg, dir, &ants, noise).expect("rates");
                    let zdd = zdd_link_rates(&drop, &cfg, dir).expect("rates");
                    let ir = zdd_ir_link_rates(&drop, &cfg, dir).expect("rates");
                    let ok_zdd = match dir {
                        Direction::Dl => same(&zdd.backhaul, &half.backhaul),
                        Direction::Ul => same(&zdd.access, &half.access),
                    };
                    mismatches[0] += usize::from(!ok_zdd || !same(&ir.access, &half.access));
                }
                if rsi_db == 0.0 {
                    let plain = ctdd_link_rates_on(&drop, &cfg, Direction::Ul, &ants, drop.noise_sc_w_hz)
                        .expect("rates");
                    let zdd = zdd_link_rates(&drop, &cfg, Direction::Ul).expect("rates");
                    mismatches[1] += usize::from(!same(&zdd.access, &plain.access));
                }
                drop.a_b2u.iter_mut().for_each(|a| *a = 0.0);
                for dir in Direction::BOTH {
                    let half = ctdd_link_rates_on(&drop, &cfg, dir, &ants, noise).expect("rates");
                    let zdd = zdd_link_rates(&drop, &cfg, dir).expect("rates");
                    mismatches[2] += usize::from(!same(&zdd.backhaul, &half.backhaul) || !same(&zdd.access, &half.access));
                }
            }
        }
    }
    let names = ["shared code paths", "zero rsi", "no cross-link gain"];
    names
        .iter()
        .zip(mismatches)
        .map(|(&name, m)| CheckOutcome {
            name,
            passed: m == 0,
            detail: format!("{m} mismatching drops of {total}"),
        })
        .collect()
}

/// A small sweep gives the same CSV on one worker and on four.
pub fn sweep_determinism(seed: u64) -> CheckOutcome {
    let spec = SweepSpec {
        distances_m: vec![200.0, 700.0, 1500.0],
        strategies: Strategy::ALL.to_vec(),
        drops: 8,
        seed,
        ..SweepSpec::default()
    };
    let cfg = SystemConfig::default();
    let run = |threads| {
        run_sweep(&spec, &cfg, RunOptions { threads, progress: false }).map(|t| table_to_csv(&t))
    };
    let passed = matches!((run(1), run(4)), (Ok(a), Ok(b)) if a == b);
    CheckOutcome {
        name: "sweep determinism",
        passed,
        detail: "1 vs 4 workers".into(),
    }
}
