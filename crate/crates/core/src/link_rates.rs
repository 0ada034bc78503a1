//! Per-link achievable rates: zero-forcing scalars and SINRs, point-to-point
//! water-filling, full-duplex interference powers and the
//! interference-rejecting beamformer.
//!
//! All rates are in bit/s for the full time slot; time fractions are
//! applied by the strategies.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix_ops::{pseudo_inverse, svd, ComplexMatrix, NullSpace};

/// `log2(1 + x)`, accurate for small `x`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// Raises the noise floor by `rsi_db` decibels.
pub fn apply_rsi(noise_w_hz: f64, rsi_db: f64) -> f64 {
    noise_w_hz * 10f64.powf(rsi_db / 10.0)
}

/// Common zero-forcing amplitude so that the strongest antenna transmits
/// exactly `p_total_w / n_tx`.
pub fn zf_dl_scalar(h_dagger: &ComplexMatrix, p_total_w: f64, n_tx: usize) -> Result<f64> {
    let max_row = h_dagger.max_row_norm();
    if max_row == 0.0 {
        return Err(Error::Dimension(
            "zero-forcing precoder has only zero rows".into(),
        ));
    }
    Ok((p_total_w / n_tx as f64).sqrt() / max_row)
}

/// Post-processing SINR shared by all zero-forced receivers.
pub fn zf_dl_sinr(phi: f64, bandwidth_hz: f64, noise_w_hz: f64) -> f64 {
    phi * phi / (bandwidth_hz * noise_w_hz)
}

/// Rate of every receiving node under a common zero-forcing scalar.
pub fn zf_dl_rate(
    phi: f64,
    bandwidth_hz: f64,
    noise_w_hz: f64,
    n_rx_per_node: usize,
    n_nodes: usize,
) -> Vec<f64> {
    let gamma = zf_dl_sinr(phi, bandwidth_hz, noise_w_hz);
    vec![bandwidth_hz * n_rx_per_node as f64 * log2_1p(gamma); n_nodes]
}

/// Per-stream SINRs of a zero-forcing decoder with equal power per stream.
/// Column `j = i + k * n_streams` of `h_dagger` serves stream `i` of node `k`.
pub fn zf_ul_stream_sinrs(
    h_dagger: &ComplexMatrix,
    p_node_w: f64,
    n_streams: usize,
    bandwidth_hz: f64,
    noise_w_hz: f64,
) -> Vec<Vec<f64>> {
    let zeros = vec![0.0; h_dagger.cols()];
    zf_ul_stream_sinrs_with_interference(h_dagger, p_node_w, n_streams, bandwidth_hz, noise_w_hz, &zeros)
}

/// As [`zf_ul_stream_sinrs`] with an extra interference power (watts) added
/// to each stream's post-decoder noise.
pub fn zf_ul_stream_sinrs_with_interference(
    h_dagger: &ComplexMatrix,
    p_node_w: f64,
    n_streams: usize,
    bandwidth_hz: f64,
    noise_w_hz: f64,
    interference_w: &[f64],
) -> Vec<Vec<f64>> {
    assert_eq!(interference_w.len(), h_dagger.cols());
    assert_eq!(h_dagger.cols() % n_streams, 0);
    let p_stream = p_node_w / n_streams as f64;
    (0..h_dagger.cols() / n_streams)
        .map(|k| {
            (0..n_streams)
                .map(|i| {
                    let j = i + k * n_streams;
                    p_stream / (bandwidth_hz * noise_w_hz * h_dagger.col_norm_sqr(j) + interference_w[j])
                })
                .collect()
        })
        .collect()
}

/// `B * sum_i log2(1 + sinr_i)` for each node.
pub fn stream_rates(sinrs: &[Vec<f64>], bandwidth_hz: f64) -> Vec<f64> {
    sinrs
        .iter()
        .map(|node| bandwidth_hz * node.iter().map(|&g| log2_1p(g)).sum::<f64>())
        .collect()
}

/// Outcome of water-filling over parallel eigenchannels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterfillResult {
    /// Cutoff SNR; infinite when no stream is active.
    pub cutoff: f64,
    pub active_streams: usize,
    /// `P_s / P` in the order of the input list.
    pub power_fractions: Vec<f64>,
    pub capacity_bits_per_sec: f64,
}

/// Water-filling on full-power SNRs `gammas`. Streams are dropped weakest
/// first while the weakest active one falls below the cutoff.
pub fn waterfilling(gammas: &[f64], bandwidth_hz: f64) -> WaterfillResult {
    let mut order: Vec<usize> = (0..gammas.len()).filter(|&i| gammas[i] > 0.0).collect();
    order.sort_by(|&a, &b| gammas[b].total_cmp(&gammas[a]));

    let mut active = order.len();
    let mut cutoff = f64::INFINITY;
    while active > 0 {
        let inv_sum: f64 = order[..active].iter().map(|&i| 1.0 / gammas[i]).sum();
        cutoff = active as f64 / (1.0 + inv_sum);
        if gammas[order[active - 1]] < cutoff {
            active -= 1;
        } else {
            break;
        }
    }
    if active == 0 {
        cutoff = f64::INFINITY;
    }

    let mut power_fractions = vec![0.0; gammas.len()];
    let mut capacity = 0.0;
    for &i in &order[..active] {
        power_fractions[i] = 1.0 / cutoff - 1.0 / gammas[i];
        capacity += (gammas[i] / cutoff).log2();
    }
    WaterfillResult {
        cutoff,
        active_streams: active,
        power_fractions,
        capacity_bits_per_sec: bandwidth_hz * capacity,
    }
}

/// Full-power SNR of each eigenchannel of a point-to-point link.
pub fn p2p_stream_snrs(
    h_small: &ComplexMatrix,
    a_gain: f64,
    p_total_w: f64,
    bandwidth_hz: f64,
    noise_w_hz: f64,
    interference_w: f64,
) -> Result<Vec<f64>> {
    let sv = svd(h_small)?.singular_values;
    let denom = bandwidth_hz * noise_w_hz + interference_w;
    Ok(sv
        .iter()
        .map(|&l| a_gain * l * l * p_total_w / denom)
        .collect())
}

/// Water-filling capacity of a point-to-point MIMO link whose small-scale
/// channel `h_small` is already restricted to the active antennas.
pub fn p2p_svd_rate(
    h_small: &ComplexMatrix,
    a_gain: f64,
    p_total_w: f64,
    bandwidth_hz: f64,
    noise_w_hz: f64,
    interference_w: f64,
) -> Result<f64> {
    let gammas = p2p_stream_snrs(h_small, a_gain, p_total_w, bandwidth_hz, noise_w_hz, interference_w)?;
    Ok(waterfilling(&gammas, bandwidth_hz).capacity_bits_per_sec)
}

/// Power the BS-to-SC beam leaks into UE `k` when the SC serves it at the
/// same time. `h_b2u_k` is the UE's small-scale channel (`n_ue x n_bs`).
pub fn zdd_dl_interference(
    h_b2u_k: &ComplexMatrix,
    a_b2u_k: f64,
    phi_b2s_sq: f64,
    h_b2s_dagger: &ComplexMatrix,
) -> f64 {
    a_b2u_k * phi_b2s_sq * h_b2u_k.matmul(h_b2s_dagger).frobenius_norm_sqr()
}

/// UE-to-BS interference seen by stream `i` of SC `k` after zero-forcing
/// decoding. `cross` is `A_b2u H_b2u` times the SC-side pseudo-inverse.
pub fn zdd_ul_interference(
    cross: &ComplexMatrix,
    i: usize,
    k: usize,
    n_sct: usize,
    p_ue_w: f64,
) -> Result<f64> {
    let j = i + k * n_sct;
    if i >= n_sct || j >= cross.cols() {
        return Err(Error::Index(format!(
            "stream {i} of cell {k} with {n_sct} streams per cell, {} columns",
            cross.cols()
        )));
    }
    Ok(p_ue_w * cross.col_norm_sqr(j))
}

/// Interference on every SC uplink stream, in column order.
pub fn zdd_ul_interference_all(cross: &ComplexMatrix, p_ue_w: f64) -> Vec<f64> {
    (0..cross.cols()).map(|j| p_ue_w * cross.col_norm_sqr(j)).collect()
}

/// SC-to-BS rate per SC when the UEs transmit simultaneously.
pub fn zdd_s2b_rate(
    h_b2s_dagger: &ComplexMatrix,
    interference_w: &[f64],
    p_sc_w: f64,
    n_sct: usize,
    bandwidth_hz: f64,
    noise_bs_w_hz: f64,
) -> Vec<f64> {
    let sinrs = zf_ul_stream_sinrs_with_interference(
        h_b2s_dagger,
        p_sc_w,
        n_sct,
        bandwidth_hz,
        noise_bs_w_hz,
        interference_w,
    );
    stream_rates(&sinrs, bandwidth_hz)
}

/// Zero-forcing beamformer confined to the null space of the BS-UE channel,
/// `G = R (H_b2s R)^+`, shape `n_bs x rows(h_b2s_cal)`.
pub fn zddir_beamformer(h_b2u_cal: &ComplexMatrix, h_b2s_cal: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n_bs = h_b2u_cal.cols();
    if h_b2s_cal.cols() != n_bs {
        return Err(Error::Dimension(format!(
            "BS-SC channel has {} columns, BS-UE channel {}",
            h_b2s_cal.cols(),
            n_bs
        )));
    }
    let need = h_b2u_cal.rows() + h_b2s_cal.rows();
    if n_bs < need {
        return Err(Error::Config(format!(
            "interference rejection needs n_bs >= K*(n_ue + n_sc_active) = {need}, got n_bs={n_bs}"
        )));
    }
    let ns = NullSpace::of(h_b2u_cal)?;
    let restricted = ns.restrict(h_b2s_cal);
    Ok(ns.lift(&pseudo_inverse(&restricted)?))
}

/// Per-SC BS-to-SC rate through `G` (identical for every SC).
pub fn zddir_b2s_rate(
    g: &ComplexMatrix,
    p_bs_w: f64,
    n_scr: usize,
    num_cells: usize,
    bandwidth_hz: f64,
    noise_sc_w_hz: f64,
) -> Result<Vec<f64>> {
    let phi = zf_dl_scalar(g, p_bs_w, g.rows())?;
    Ok(zf_dl_rate(phi, bandwidth_hz, noise_sc_w_hz, n_scr, num_cells))
}

/// Per-SC SC-to-BS rate decoded with `G^T`.
pub fn zddir_s2b_rate(
    g: &ComplexMatrix,
    p_sc_w: f64,
    n_sct: usize,
    bandwidth_hz: f64,
    noise_bs_w_hz: f64,
) -> Vec<f64> {
    stream_rates(
        &zf_ul_stream_sinrs(g, p_sc_w, n_sct, bandwidth_hz, noise_bs_w_hz),
        bandwidth_hz,
    )
}
