//! The two-hop amplify-and-forward protocol.
//!
//! Phase one: the source broadcasts the precoded vector to all relays.
//! Each relay rotates its reception by the conjugate of its fade phase,
//! prepends phase-fixed conjugates of the training receptions until the
//! training copy count matches the design, and forwards the effective
//! vector through its dispersion pair. Phase two: the destination adds the
//! relay contributions plus noise. All fades are unit-variance complex
//! Gaussians; both noise hops are unit variance per entry.

use num_complex::Complex64;
use rand::Rng;

use crate::design::{LinearDesign, SchemeCounts};
use crate::error::{Error, Result};
use crate::linalg::{CMat, IMat};

/// Circularly symmetric complex Gaussian with unit total variance,
/// via Box-Muller.
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = std::f64::consts::TAU * u2;
    Complex64::new(r * th.cos(), r * th.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

/// One draw of all source-relay and relay-destination fades.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    /// Source to relay fades, one per relay.
    pub h: Vec<Complex64>,
    /// Relay to destination fades, one per relay.
    pub g: Vec<Complex64>,
}

impl ChannelRealization {
    /// Equivalent single-hop channel seen by the destination: `|h_k| g_k`.
    pub fn equivalent(&self) -> Vec<Complex64> {
        self.h.iter().zip(&self.g).map(|(h, g)| g * h.norm()).collect()
    }
}

/// Draw both hops i.i.d. unit-variance complex Gaussian.
pub fn sample_channel<R: Rng>(relays: usize, rng: &mut R) -> ChannelRealization {
    let h = (0..relays).map(|_| complex_gaussian(rng)).collect();
    let g = (0..relays).map(|_| complex_gaussian(rng)).collect();
    ChannelRealization { h, g }
}

/// Power bookkeeping for one operating point.
#[derive(Clone, Copy, Debug)]
pub struct NetworkConfig {
    pub counts: SchemeCounts,
    /// Total network power per channel use.
    pub p_total: f64,
    /// Source power in the first phase.
    pub p1: f64,
    /// Per-relay power in the second phase.
    pub p2: f64,
    /// Average received energy at a relay, used to normalize its amplifier.
    pub p_r: f64,
}

/// Average squared norm of the effective vector for a given power split.
pub fn effective_energy(counts: &SchemeCounts, alpha_sqr: f64, symbol_energy: f64) -> f64 {
    counts.train_copies as f64 * alpha_sqr + counts.info_vars as f64 * symbol_energy
}

/// Closed form for the relay's average received energy:
/// first-phase gain times the effective-vector energy, plus one unit of
/// noise per entry.
pub fn compute_pr(counts: &SchemeCounts, p1: f64, e_effective: f64) -> f64 {
    p1 * counts.first_phase_len as f64 * e_effective + counts.effective_len as f64
}

impl NetworkConfig {
    /// Split total power `10^(p_db/10)`: fraction `split` to the source,
    /// the rest shared equally by the relays.
    pub fn from_split(
        counts: SchemeCounts,
        p_db: f64,
        split: f64,
        e_effective: f64,
    ) -> Result<NetworkConfig> {
        if !(split > 0.0 && split < 1.0) {
            return Err(Error::Config(format!("power split {split} outside (0, 1)")));
        }
        let p_total = 10f64.powf(p_db / 10.0);
        let p1 = split * p_total;
        let p2 = (1.0 - split) * p_total / counts.relays as f64;
        let p_r = compute_pr(&counts, p1, e_effective);
        Ok(NetworkConfig { counts, p_total, p1, p2, p_r })
    }

    /// Amplitude of the known part of the destination signal.
    pub fn kappa(&self) -> f64 {
        (self.p1 * self.p2 * self.counts.first_phase_len as f64 * self.counts.relays as f64
            / self.p_r)
            .sqrt()
    }

    /// Per-relay transmit amplifier.
    pub fn relay_amp(&self) -> f64 {
        (self.p2 * self.counts.relays as f64 / self.p_r).sqrt()
    }

    /// Coefficient of the relay-forwarded noise in the destination
    /// covariance.
    pub fn noise_cov_coeff(&self) -> f64 {
        self.p2 * self.counts.relays as f64 / self.p_r
    }
}

/// Per-relay receptions from the source broadcast.
#[derive(Clone, Debug)]
pub struct PhaseOneResult {
    pub received: Vec<Vec<Complex64>>,
}

/// Broadcast `x_hat` (unit average energy over its length) to every relay.
pub fn phase_one<R: Rng>(
    x_hat: &[Complex64],
    cfg: &NetworkConfig,
    ch: &ChannelRealization,
    noiseless: bool,
    rng: &mut R,
) -> PhaseOneResult {
    let gain = (cfg.p1 * cfg.counts.first_phase_len as f64).sqrt();
    let mut received = Vec::with_capacity(ch.h.len());
    for &h in &ch.h {
        let mut r = Vec::with_capacity(x_hat.len());
        for &x in x_hat {
            let mut v = gain * h * x;
            if !noiseless {
                v += complex_gaussian(rng);
            }
            r.push(v);
        }
        received.push(r);
    }
    PhaseOneResult { received }
}

/// Build the relay's effective vector: phase-fixed conjugates of the first
/// training receptions (as many as the design needs beyond the broadcast
/// ones), then the whole reception rotated by the conjugate fade phase.
/// Every entry keeps unit noise variance.
pub fn relay_preprocess(
    r: &[Complex64],
    h: Complex64,
    alpha: Complex64,
    counts: &SchemeCounts,
) -> Vec<Complex64> {
    assert_eq!(r.len(), counts.first_phase_len);
    assert!(h.norm() > 0.0, "fade magnitude must be positive");
    let unit_h = h / h.norm();
    let unit_alpha = if alpha.norm() > 0.0 { alpha / alpha.norm() } else { Complex64::new(1.0, 0.0) };
    // Conjugating a training reception flips the fade and training phases;
    // this factor puts both back.
    let conj_fix = unit_alpha * unit_alpha * unit_h;
    let rotate = unit_h.conj();
    let extra = counts.train_copies - counts.train_sent;
    let mut out = Vec::with_capacity(counts.effective_len);
    for i in 0..extra {
        out.push(conj_fix * r[i].conj());
    }
    for &v in r {
        out.push(rotate * v);
    }
    debug_assert_eq!(out.len(), counts.effective_len);
    out
}

/// Forward the effective vector through the relay's dispersion pair.
pub fn relay_transmit(
    r_bar: &[Complex64],
    a_mat: &IMat,
    b_mat: &IMat,
    amp: f64,
) -> Vec<Complex64> {
    let conj: Vec<Complex64> = r_bar.iter().map(|z| z.conj()).collect();
    let mut t = a_mat.apply(r_bar);
    for (u, v) in t.iter_mut().zip(b_mat.apply(&conj)) {
        *u = (*u + v) * amp;
    }
    t
}

/// Destination reception: fade-weighted sum of the relay transmissions.
pub fn phase_two<R: Rng>(
    transmissions: &[Vec<Complex64>],
    g: &[Complex64],
    noiseless: bool,
    rng: &mut R,
) -> Vec<Complex64> {
    assert_eq!(transmissions.len(), g.len());
    let slots = transmissions[0].len();
    let mut y = vec![Complex64::new(0.0, 0.0); slots];
    for (tx, &gk) in transmissions.iter().zip(g) {
        for (acc, &v) in y.iter_mut().zip(tx) {
            *acc += gk * v;
        }
    }
    if !noiseless {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng);
        }
    }
    y
}

/// Destination noise covariance: identity plus the relay-forwarded noise
/// through each dispersion pair, weighted by the second-hop fade energies.
pub fn noise_covariance(lin: &LinearDesign, g: &[Complex64], cfg: &NetworkConfig) -> CMat {
    assert_eq!(g.len(), lin.num_relays);
    let c = cfg.noise_cov_coeff();
    let t = lin.time_slots;
    let mut r = CMat::identity(t);
    for (k, gk) in g.iter().enumerate() {
        let mut s = vec![0i32; t * t];
        lin.a_mats[k].accumulate_self_outer(&mut s);
        lin.b_mats[k].accumulate_self_outer(&mut s);
        let w = c * gk.norm_sqr();
        for r1 in 0..t {
            for r2 in 0..t {
                let v = s[r1 * t + r2];
                if v != 0 {
                    r.add_at(r1, r2, Complex64::new(w * v as f64, 0.0));
                }
            }
        }
    }
    r
}

/// Extract the inverse diagonal of a covariance that is diagonal by
/// construction; rejects anything materially off-diagonal.
pub fn inverse_diagonal(r: &CMat) -> Result<Vec<f64>> {
    let n = r.rows;
    let scale = (0..n).map(|i| r.at(i, i).norm()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        for j in 0..n {
            if i != j && r.at(i, j).norm() > 1e-9 * scale {
                return Err(Error::Verification(format!(
                    "covariance entry ({i}, {j}) is not negligible"
                )));
            }
        }
        let d = r.at(i, i);
        if d.re <= 0.0 || d.im.abs() > 1e-9 * scale {
            return Err(Error::Verification(format!(
                "covariance diagonal entry {i} is not positive real"
            )));
        }
    }
    Ok((0..n).map(|i| 1.0 / r.at(i, i).re).collect())
}
