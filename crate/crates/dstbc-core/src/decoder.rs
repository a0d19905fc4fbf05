//! Maximum-likelihood decoding against the equivalent single-hop model.
//!
//! The destination sees `y = kappa X(xbar) g + n` with diagonal noise
//! covariance, so the ML metric is a whitened distance. Two search
//! strategies share it: an exhaustive joint search, and a symbol-by-symbol
//! search that is exact whenever the design's metric separates per symbol.

use num_complex::Complex64;

use crate::channel::{inverse_diagonal, noise_covariance, ChannelRealization, NetworkConfig};
use crate::design::LinearDesign;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::system::CodeSystem;

/// Largest joint search the exhaustive decoder will attempt.
pub const JOINT_GUARD: u64 = 10_000_000;

/// Everything fixed for one reception: the observation, the equivalent
/// channels, the whitening weights, and the channel-combined dispersion
/// matrices.
#[derive(Clone, Debug)]
pub struct MlMetricContext {
    pub y: Vec<Complex64>,
    pub g_eq: Vec<Complex64>,
    pub rinv_diag: Vec<f64>,
    pub kappa: f64,
    /// Sum over relays of `g_eq[k] A_k`.
    m1: CMat,
    /// Sum over relays of `g_eq[k] B_k`.
    m2: CMat,
    /// Observation pre-weighted by the inverse covariance diagonal.
    z: Vec<Complex64>,
}

impl MlMetricContext {
    pub fn new(
        y: Vec<Complex64>,
        g_eq: Vec<Complex64>,
        rinv_diag: Vec<f64>,
        kappa: f64,
        lin: &LinearDesign,
    ) -> MlMetricContext {
        assert_eq!(y.len(), lin.time_slots);
        assert_eq!(g_eq.len(), lin.num_relays);
        assert_eq!(rinv_diag.len(), lin.time_slots);
        let t = lin.time_slots;
        let n = lin.effective_len;
        let mut m1 = CMat::zeros(t, n);
        let mut m2 = CMat::zeros(t, n);
        for (k, &gk) in g_eq.iter().enumerate() {
            lin.a_mats[k].accumulate_weighted(gk, &mut m1);
            lin.b_mats[k].accumulate_weighted(gk, &mut m2);
        }
        let z = y.iter().zip(&rinv_diag).map(|(v, &w)| v * w).collect();
        MlMetricContext { y, g_eq, rinv_diag, kappa, m1, m2, z }
    }

    /// Assemble the context straight from a channel draw.
    pub fn from_channel(
        y: Vec<Complex64>,
        ch: &ChannelRealization,
        cfg: &NetworkConfig,
        lin: &LinearDesign,
    ) -> Result<MlMetricContext> {
        let r = noise_covariance(lin, &ch.g, cfg);
        let rinv = inverse_diagonal(&r)?;
        Ok(MlMetricContext::new(y, ch.equivalent(), rinv, cfg.kappa(), lin))
    }

    /// Whitened ML metric, offset by the observation's own energy so the
    /// codeword-independent term drops out:
    /// `kappa^2 u' R^-1 u  -  2 kappa Re(y' R^-1 u)` with
    /// `u = M1 xbar + M2 conj(xbar)`.
    pub fn ml_metric(&self, xbar: &[Complex64]) -> f64 {
        let t = self.m1.rows;
        let n = self.m1.cols;
        debug_assert_eq!(xbar.len(), n);
        let mut quad = 0.0;
        let mut cross = 0.0;
        for r in 0..t {
            let mut u = Complex64::new(0.0, 0.0);
            for c in 0..n {
                u += self.m1.at(r, c) * xbar[c] + self.m2.at(r, c) * xbar[c].conj();
            }
            quad += self.rinv_diag[r] * u.norm_sqr();
            cross += (u * self.z[r].conj()).re;
        }
        self.kappa * self.kappa * quad - 2.0 * self.kappa * cross
    }
}

/// Reference metric through the full covariance matrix and the evaluated
/// codeword, same offset convention as the fast path.
pub fn ml_metric_dense(
    y: &[Complex64],
    g_eq: &[Complex64],
    r: &CMat,
    kappa: f64,
    lin: &LinearDesign,
    xbar: &[Complex64],
) -> f64 {
    let x = lin.codeword(xbar);
    let model = x.mul_vec(g_eq);
    let e: Vec<Complex64> = y.iter().zip(&model).map(|(a, b)| a - kappa * b).collect();
    let re = r.solve(&e);
    let ry = r.solve(y);
    let quad: f64 = e.iter().zip(&re).map(|(a, b)| (a.conj() * b).re).sum();
    let base: f64 = y.iter().zip(&ry).map(|(a, b)| (a.conj() * b).re).sum();
    quad - base
}

/// Exhaustive ML over every message. Ties resolve to the lexicographically
/// smallest index vector. Errors out when the product constellation is
/// larger than the guard.
pub fn decode_joint_ml(ctx: &MlMetricContext, sys: &CodeSystem) -> Result<Vec<usize>> {
    let total = sys.message_count().filter(|&t| t <= JOINT_GUARD).ok_or_else(|| {
        Error::SearchSpace(format!(
            "joint search over {} symbols from {} points exceeds {JOINT_GUARD} candidates",
            sys.counts.info_vars,
            sys.constellation.len()
        ))
    })?;
    let v = sys.counts.info_vars;
    let m = sys.constellation.len();
    let mut indices = vec![0usize; v];
    let mut work = sys.effective_vector(&sys.symbols(&indices)?);
    let mut best_metric = ctx.ml_metric(&work);
    let mut best = indices.clone();
    for _ in 1..total {
        // Odometer step, last position fastest; patch only what changed.
        let mut pos = v;
        loop {
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < m {
                sys.patch_effective(&mut work, pos, sys.constellation.points[indices[pos]]);
                break;
            }
            indices[pos] = 0;
            sys.patch_effective(&mut work, pos, sys.constellation.points[0]);
        }
        let metric = ctx.ml_metric(&work);
        if metric < best_metric {
            best_metric = metric;
            best = indices.clone();
        }
    }
    Ok(best)
}

/// Symbol-by-symbol ML: each position is minimized independently with the
/// others pinned, which equals the joint minimum exactly when the metric
/// separates per symbol. Ties resolve to the smallest index.
pub fn decode_ssd(ctx: &MlMetricContext, sys: &CodeSystem) -> Result<Vec<usize>> {
    let v = sys.counts.info_vars;
    let m = sys.constellation.len();
    if m == 0 {
        return Err(Error::Config("empty constellation".into()));
    }
    let base = sys.effective_vector(&sys.symbols(&vec![0usize; v])?);
    let base_metric = ctx.ml_metric(&base);
    let mut best = vec![0usize; v];
    let mut work = base.clone();
    for pos in 0..v {
        let mut best_metric = base_metric;
        for i in 1..m {
            sys.patch_effective(&mut work, pos, sys.constellation.points[i]);
            let metric = ctx.ml_metric(&work);
            if metric < best_metric {
                best_metric = metric;
                best[pos] = i;
            }
        }
        sys.patch_effective(&mut work, pos, sys.constellation.points[0]);
    }
    Ok(best)
}
