//! Drop generation: geometry, large-scale link budgets and Rayleigh fading.
//!
//! A [`Drop`] always carries the full `n_sc` antennas of every small cell.
//! Strategies pick the transmit or receive subset they need through
//! [`ScAntennas`], so one drop can be evaluated under every duplex scheme.
//!
//! # Example
//!
//! ```
//! use backhaul_sim::channel::{generate_drop, SystemConfig};
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//!
//! let cfg = SystemConfig::default();
//! let drop = generate_drop(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
//! assert_eq!(drop.h_b2u.shape(), (8, 256));
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_ops::ComplexMatrix;

/// Log-distance path loss with log-normal shadowing, distance in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub intercept_db: f64,
    pub slope_db_per_decade: f64,
    pub shadowing_sigma_db: f64,
}

impl PathLossModel {
    /// Macro NLoS, BS to UE.
    pub const BS_TO_UE: Self = Self {
        intercept_db: 128.1,
        slope_db_per_decade: 37.6,
        shadowing_sigma_db: 10.0,
    };
    /// Macro NLoS, BS to small cell.
    pub const BS_TO_SC: Self = Self {
        intercept_db: 128.1,
        slope_db_per_decade: 37.6,
        shadowing_sigma_db: 6.0,
    };
    /// Outdoor pico NLoS, small cell to UE.
    pub const SC_TO_UE: Self = Self {
        intercept_db: 140.7,
        slope_db_per_decade: 36.7,
        shadowing_sigma_db: 10.0,
    };

    pub fn mean_db(&self, d_m: f64) -> f64 {
        self.intercept_db + self.slope_db_per_decade * (d_m.max(MIN_LINK_DISTANCE_M) / 1000.0).log10()
    }

    pub fn without_shadowing(self) -> Self {
        Self {
            shadowing_sigma_db: 0.0,
            ..self
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.slope_db_per_decade > 0.0) || !self.intercept_db.is_finite() {
            return Err(Error::Config(format!(
                "{name}: path-loss slope must be > 0 and intercept finite"
            )));
        }
        if !(self.shadowing_sigma_db >= 0.0) || !self.shadowing_sigma_db.is_finite() {
            return Err(Error::Config(format!(
                "{name}: shadowing sigma must be >= 0"
            )));
        }
        Ok(())
    }
}

/// Link distances are floored here so that `log10` stays defined.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// How the small-cell antennas are split between transmit and receive
/// under full duplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DuplexMode {
    /// Separate halves of the array transmit and receive.
    Conservative,
    /// Every antenna transmits and receives.
    Complete,
}

impl DuplexMode {
    pub fn name(self) -> &'static str {
        match self {
            DuplexMode::Conservative => "conservative",
            DuplexMode::Complete => "complete",
        }
    }

    pub fn default_rsi_db(self) -> f64 {
        match self {
            DuplexMode::Conservative => 2.0,
            DuplexMode::Complete => 5.0,
        }
    }

    /// `(n_sct, n_scr)` for an array of `n_sc` antennas.
    pub fn antenna_split(self, n_sc: usize) -> (usize, usize) {
        match self {
            DuplexMode::Conservative => (n_sc / 2, n_sc / 2),
            DuplexMode::Complete => (n_sc, n_sc),
        }
    }
}

impl std::str::FromStr for DuplexMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "conservative" => Ok(DuplexMode::Conservative),
            "complete" => Ok(DuplexMode::Complete),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected conservative or complete)"
            ))),
        }
    }
}

/// System parameters. Defaults reproduce the reference macro/pico scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    pub bandwidth_hz: f64,
    /// Documentation only; the path-loss intercepts already encode it.
    pub carrier_freq_hz: f64,
    pub num_cells: usize,
    pub n_bs: usize,
    pub n_sc: usize,
    pub n_ue: usize,
    /// Full-duplex transmit antennas per SC; `None` follows `mode`.
    pub n_sct: Option<usize>,
    /// Full-duplex receive antennas per SC; `None` follows `mode`.
    pub n_scr: Option<usize>,
    pub mode: DuplexMode,
    pub p_bs_w: f64,
    pub p_sc_w: f64,
    pub p_ue_w: f64,
    pub noise_psd_dbm_hz: f64,
    pub nf_bs_db: f64,
    pub nf_sc_db: f64,
    pub nf_ue_db: f64,
    pub gain_bs_dbi: f64,
    pub gain_sc_dbi: f64,
    pub gain_ue_dbi: f64,
    pub frac_dl: f64,
    pub frac_ul: f64,
    pub rsi_db: f64,
    pub sc_ring_distance_m: f64,
    pub sc_coverage_radius_m: f64,
    pub ue_min_dist_m: f64,
    pub pl_b2u: PathLossModel,
    pub pl_b2s: PathLossModel,
    pub pl_s2u: PathLossModel,
    /// Use `P_ue / N_ue` per interfering UE stream instead of `P_ue`.
    pub ul_interference_per_stream: bool,
    /// Keep geometry and shadowing fixed within a sweep cell and redraw only
    /// the fast fading per drop.
    pub freeze_geometry: bool,
    /// Treat the SC-UE access links as unlimited (plumbing checks only).
    pub access_unlimited: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 20e6,
            carrier_freq_hz: 2e9,
            num_cells: 8,
            n_bs: 256,
            n_sc: 4,
            n_ue: 1,
            n_sct: None,
            n_scr: None,
            mode: DuplexMode::Conservative,
            p_bs_w: 35.0,
            p_sc_w: 0.25,
            p_ue_w: 0.2,
            noise_psd_dbm_hz: -174.0,
            nf_bs_db: 5.0,
            nf_sc_db: 8.0,
            nf_ue_db: 9.0,
            gain_bs_dbi: 2.0,
            gain_sc_dbi: 5.0,
            gain_ue_dbi: 0.0,
            frac_dl: 0.5,
            frac_ul: 0.5,
            rsi_db: 0.0,
            sc_ring_distance_m: 500.0,
            sc_coverage_radius_m: 40.0,
            ue_min_dist_m: 10.0,
            pl_b2u: PathLossModel::BS_TO_UE,
            pl_b2s: PathLossModel::BS_TO_SC,
            pl_s2u: PathLossModel::SC_TO_UE,
            ul_interference_per_stream: false,
            freeze_geometry: false,
            access_unlimited: false,
        }
    }
}

impl SystemConfig {
    /// Transmit antennas per SC under full duplex.
    pub fn n_sct(&self) -> usize {
        self.n_sct
            .unwrap_or_else(|| self.mode.antenna_split(self.n_sc).0)
    }

    /// Receive antennas per SC under full duplex.
    pub fn n_scr(&self) -> usize {
        self.n_scr
            .unwrap_or_else(|| self.mode.antenna_split(self.n_sc).1)
    }

    pub fn noise_bs_w_hz(&self) -> f64 {
        noise_variance_w_hz(self.noise_psd_dbm_hz, self.nf_bs_db)
    }

    pub fn noise_sc_w_hz(&self) -> f64 {
        noise_variance_w_hz(self.noise_psd_dbm_hz, self.nf_sc_db)
    }

    pub fn noise_ue_w_hz(&self) -> f64 {
        noise_variance_w_hz(self.noise_psd_dbm_hz, self.nf_ue_db)
    }

    /// Checks every invariant that does not depend on which strategies run.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("p_bs_w", self.p_bs_w),
            ("p_sc_w", self.p_sc_w),
            ("p_ue_w", self.p_ue_w),
            ("sc_coverage_radius_m", self.sc_coverage_radius_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let finite = [
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("nf_bs_db", self.nf_bs_db),
            ("nf_sc_db", self.nf_sc_db),
            ("nf_ue_db", self.nf_ue_db),
            ("gain_bs_dbi", self.gain_bs_dbi),
            ("gain_sc_dbi", self.gain_sc_dbi),
            ("gain_ue_dbi", self.gain_ue_dbi),
            ("sc_ring_distance_m", self.sc_ring_distance_m),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if self.num_cells == 0 {
            return Err(Error::Config("num_cells must be at least 1".into()));
        }
        for (name, v) in [("n_bs", self.n_bs), ("n_sc", self.n_sc), ("n_ue", self.n_ue)] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n_sc < self.n_ue {
            return Err(Error::Config(format!(
                "n_sc >= n_ue required, got n_sc={} n_ue={}",
                self.n_sc, self.n_ue
            )));
        }
        for (name, v) in [("n_sct", self.n_sct()), ("n_scr", self.n_scr())] {
            if v < self.n_ue || v > self.n_sc {
                return Err(Error::Config(format!(
                    "n_sc >= {name} >= n_ue required, got {name}={v} (n_sc={}, n_ue={}, mode={})",
                    self.n_sc,
                    self.n_ue,
                    self.mode.name()
                )));
            }
        }
        let k = self.num_cells;
        if self.n_bs < k * self.n_ue {
            return Err(Error::Config(format!(
                "n_bs >= K*n_ue required for zero-forcing, got n_bs={} K*n_ue={}",
                self.n_bs,
                k * self.n_ue
            )));
        }
        if self.n_bs < k * self.n_sc {
            return Err(Error::Config(format!(
                "n_bs >= K*n_sc required for zero-forcing to the small cells, got n_bs={} K*n_sc={}",
                self.n_bs,
                k * self.n_sc
            )));
        }
        if !(self.frac_dl >= 0.0 && self.frac_ul >= 0.0)
            || self.frac_dl + self.frac_ul > 1.0 + 1e-12
        {
            return Err(Error::Config(format!(
                "time fractions must be >= 0 with frac_dl + frac_ul <= 1, got {} + {}",
                self.frac_dl, self.frac_ul
            )));
        }
        if !(self.rsi_db >= 0.0) || !self.rsi_db.is_finite() {
            return Err(Error::Config(format!("rsi_db must be >= 0, got {}", self.rsi_db)));
        }
        if !(self.ue_min_dist_m >= 0.0) || self.ue_min_dist_m >= self.sc_coverage_radius_m {
            return Err(Error::Config(format!(
                "0 <= ue_min_dist_m < sc_coverage_radius_m required, got {} and {}",
                self.ue_min_dist_m, self.sc_coverage_radius_m
            )));
        }
        self.pl_b2u.validate("pl_b2u")?;
        self.pl_b2s.validate("pl_b2s")?;
        self.pl_s2u.validate("pl_s2u")?;
        Ok(())
    }

    /// Dimension requirement of the interference-rejection beamformer.
    pub fn validate_zdd_ir(&self) -> Result<()> {
        let k = self.num_cells;
        let need = k * (self.n_ue + self.n_sct().max(self.n_scr()));
        if self.n_bs < need {
            return Err(Error::Config(format!(
                "interference rejection needs N_bs >= K(N_ue + max(N_sct, N_scr)) = {need}, got n_bs={} \
                 (K={k}, n_ue={}, n_sct={}, n_scr={})",
                self.n_bs,
                self.n_ue,
                self.n_sct(),
                self.n_scr()
            )));
        }
        Ok(())
    }
}

/// Which small-cell antennas transmit and which receive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScAntennas {
    pub tx: Vec<usize>,
    pub rx: Vec<usize>,
}

impl ScAntennas {
    /// Half duplex: every antenna is used in both roles (at different times).
    pub fn all(n_sc: usize) -> Self {
        Self {
            tx: (0..n_sc).collect(),
            rx: (0..n_sc).collect(),
        }
    }

    /// Full duplex: the first `n_sct` antennas transmit, the last `n_scr`
    /// receive. With `n_sct + n_scr <= n_sc` the two sets are disjoint.
    pub fn full_duplex(n_sc: usize, n_sct: usize, n_scr: usize) -> Self {
        Self {
            tx: (0..n_sct).collect(),
            rx: (n_sc - n_scr..n_sc).collect(),
        }
    }

    pub fn for_config(cfg: &SystemConfig) -> Self {
        Self::full_duplex(cfg.n_sc, cfg.n_sct(), cfg.n_scr())
    }
}

/// One statistical realization of the whole system.
#[derive(Debug, Clone, PartialEq)]
pub struct Drop {
    pub num_cells: usize,
    pub n_sc: usize,
    pub n_ue: usize,
    pub sc_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    pub a_b2s: Vec<f64>,
    pub a_b2u: Vec<f64>,
    pub a_s2u: Vec<f64>,
    /// `(K * n_sc) x n_bs`, rows grouped by SC.
    pub h_b2s: ComplexMatrix,
    /// `(K * n_ue) x n_bs`, rows grouped by UE.
    pub h_b2u: ComplexMatrix,
    /// One `n_ue x n_sc` matrix per SC.
    pub h_s2u: Vec<ComplexMatrix>,
    pub noise_bs_w_hz: f64,
    pub noise_sc_w_hz: f64,
    pub noise_ue_w_hz: f64,
}

impl Drop {
    /// `A_b2u H_b2u`.
    pub fn h_b2u_cal(&self) -> ComplexMatrix {
        let scale: Vec<f64> = (0..self.num_cells * self.n_ue)
            .map(|r| self.a_b2u[r / self.n_ue].sqrt())
            .collect();
        self.h_b2u.scale_rows(&scale)
    }

    /// Small-scale rows of UE `k`, `n_ue x n_bs`.
    pub fn h_b2u_k(&self, k: usize) -> ComplexMatrix {
        let rows: Vec<usize> = (k * self.n_ue..(k + 1) * self.n_ue).collect();
        self.h_b2u.select_rows(&rows)
    }

    /// `A_b2s H_b2s` restricted to the given SC antennas, `(K * len) x n_bs`.
    pub fn h_b2s_cal(&self, antennas: &[usize]) -> ComplexMatrix {
        let mut rows = Vec::with_capacity(self.num_cells * antennas.len());
        let mut scale = Vec::with_capacity(rows.capacity());
        for k in 0..self.num_cells {
            for &a in antennas {
                rows.push(k * self.n_sc + a);
                scale.push(self.a_b2s[k].sqrt());
            }
        }
        self.h_b2s.select_rows(&rows).scale_rows(&scale)
    }

    /// Downlink access channel of cell `k` from the chosen SC transmit
    /// antennas, `n_ue x len`.
    pub fn h_s2u_sub(&self, k: usize, tx: &[usize]) -> ComplexMatrix {
        self.h_s2u[k].select_cols(tx)
    }

    /// Uplink access channel of cell `k` into the chosen SC receive antennas,
    /// `len x n_ue` (reciprocal transpose).
    pub fn h_u2s_sub(&self, k: usize, rx: &[usize]) -> ComplexMatrix {
        self.h_s2u[k].select_cols(rx).transpose()
    }
}

/// Large-scale part of a drop.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub sc_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
}

impl Geometry {
    pub fn ue_sc_distance(&self, k: usize) -> f64 {
        dist(self.sc_positions[k], self.ue_positions[k])
    }

    pub fn ue_bs_distance(&self, k: usize) -> f64 {
        dist(self.ue_positions[k], [0.0, 0.0])
    }

    pub fn sc_bs_distance(&self, k: usize) -> f64 {
        dist(self.sc_positions[k], [0.0, 0.0])
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// SCs evenly spaced on a ring around the BS; each UE area-uniform in the
/// annulus `[ue_min_dist_m, sc_coverage_radius_m]` around its SC.
pub fn generate_geometry<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Geometry {
    let k_total = cfg.num_cells;
    let d = cfg.sc_ring_distance_m;
    let (r0, r1) = (cfg.ue_min_dist_m, cfg.sc_coverage_radius_m);
    let mut sc_positions = Vec::with_capacity(k_total);
    let mut ue_positions = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let phi = 2.0 * PI * k as f64 / k_total as f64;
        let sc = [d * phi.cos(), d * phi.sin()];
        let u: f64 = rng.random();
        let r = (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt();
        let theta = 2.0 * PI * rng.random::<f64>();
        sc_positions.push(sc);
        ue_positions.push([sc[0] + r * theta.cos(), sc[1] + r * theta.sin()]);
    }
    Geometry {
        sc_positions,
        ue_positions,
    }
}

/// `intercept + slope * log10(d_km)` plus one shadowing draw.
pub fn path_loss_db<R: Rng + ?Sized>(model: &PathLossModel, d_m: f64, rng: &mut R) -> f64 {
    let shadow = if model.shadowing_sigma_db > 0.0 {
        Normal::new(0.0, model.shadowing_sigma_db)
            .expect("validated sigma")
            .sample(rng)
    } else {
        0.0
    };
    model.mean_db(d_m) + shadow
}

/// Largest `f64` strictly below one.
const GAIN_CEILING: f64 = 1.0 - f64::EPSILON / 2.0;

/// Linear power gain including antenna gains, kept strictly below one.
pub fn link_gain(pl_db: f64, g_tx_dbi: f64, g_rx_dbi: f64) -> f64 {
    10f64.powf(-(pl_db - g_tx_dbi - g_rx_dbi) / 10.0).min(GAIN_CEILING)
}

/// Thermal noise plus noise figure, in W/Hz.
pub fn noise_variance_w_hz(noise_psd_dbm_hz: f64, nf_db: f64) -> f64 {
    10f64.powf((noise_psd_dbm_hz + nf_db - 30.0) / 10.0)
}

/// `rows x cols` matrix of i.i.d. CN(0, 1) entries.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    })
}

/// Large-scale quantities of one drop: positions and per-link gains.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    pub geometry: Geometry,
    pub a_b2s: Vec<f64>,
    pub a_b2u: Vec<f64>,
    pub a_s2u: Vec<f64>,
}

pub fn generate_large_scale<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> LargeScale {
    let geometry = generate_geometry(cfg, rng);
    let k_total = cfg.num_cells;
    let mut a_b2s = Vec::with_capacity(k_total);
    let mut a_b2u = Vec::with_capacity(k_total);
    let mut a_s2u = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let pl = path_loss_db(&cfg.pl_b2s, geometry.sc_bs_distance(k), rng);
        a_b2s.push(link_gain(pl, cfg.gain_bs_dbi, cfg.gain_sc_dbi));
        let pl = path_loss_db(&cfg.pl_b2u, geometry.ue_bs_distance(k), rng);
        a_b2u.push(link_gain(pl, cfg.gain_bs_dbi, cfg.gain_ue_dbi));
        let pl = path_loss_db(&cfg.pl_s2u, geometry.ue_sc_distance(k), rng);
        a_s2u.push(link_gain(pl, cfg.gain_sc_dbi, cfg.gain_ue_dbi));
    }
    LargeScale {
        geometry,
        a_b2s,
        a_b2u,
        a_s2u,
    }
}

/// Completes a drop by drawing the small-scale fading.
pub fn generate_fading<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    large: LargeScale,
    rng: &mut R,
) -> Drop {
    let k_total = cfg.num_cells;
    let h_b2s = complex_gaussian_matrix(k_total * cfg.n_sc, cfg.n_bs, rng);
    let h_b2u = complex_gaussian_matrix(k_total * cfg.n_ue, cfg.n_bs, rng);
    let h_s2u = (0..k_total)
        .map(|_| complex_gaussian_matrix(cfg.n_ue, cfg.n_sc, rng))
        .collect();
    Drop {
        num_cells: k_total,
        n_sc: cfg.n_sc,
        n_ue: cfg.n_ue,
        sc_positions: large.geometry.sc_positions,
        ue_positions: large.geometry.ue_positions,
        a_b2s: large.a_b2s,
        a_b2u: large.a_b2u,
        a_s2u: large.a_s2u,
        h_b2s,
        h_b2u,
        h_s2u,
        noise_bs_w_hz: cfg.noise_bs_w_hz(),
        noise_sc_w_hz: cfg.noise_sc_w_hz(),
        noise_ue_w_hz: cfg.noise_ue_w_hz(),
    }
}

/// Fresh geometry, shadowing and fading from one stream.
pub fn generate_drop<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Drop> {
    cfg.validate()?;
    let large = generate_large_scale(cfg, rng);
    Ok(generate_fading(cfg, large, rng))
}
