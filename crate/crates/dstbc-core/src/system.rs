//! One fully configured code: design, dispersion, constellation, training
//! value, and (for the block-diagonal scheme) the interleaving precoders.

use num_complex::Complex64;

use crate::constellation::{choose_alpha, Constellation, TrainingConst};
use crate::design::{
    build_precoders, counts_for, design_for, extract_dispersion, interleave, DesignExpr,
    LinearDesign, PrecoderPair, Scheme, SchemeCounts,
};
use crate::error::{Error, Result};

/// Everything needed to encode, transmit, and decode one scheme at one
/// size: the symbolic design, its dispersion matrices, the (scaled)
/// constellation, and the training constant.
#[derive(Clone, Debug)]
pub struct CodeSystem {
    pub scheme: Scheme,
    pub a: u32,
    pub counts: SchemeCounts,
    pub design: DesignExpr,
    pub lin: LinearDesign,
    /// Scaled so that a uniform draw matches the per-symbol energy budget.
    pub constellation: Constellation,
    pub alpha: TrainingConst,
    /// Present only for the block-diagonal scheme, which interleaves.
    pub precoders: Option<PrecoderPair>,
}

impl CodeSystem {
    /// Assemble a system from a scheme, size, base constellation (unit
    /// energy), and optional training power fraction.
    pub fn new(
        scheme: Scheme,
        a: u32,
        base: &Constellation,
        train_fraction: Option<f64>,
    ) -> Result<CodeSystem> {
        let counts = counts_for(scheme, a)?;
        let design = design_for(scheme, a)?;
        let lin = extract_dispersion(&design)?;
        let alpha = choose_alpha(&counts, train_fraction)?;
        let constellation = base.normalized_to(alpha.symbol_energy);
        let precoders = match scheme {
            Scheme::TeCiod => Some(build_precoders(a)?),
            Scheme::TeCod => None,
        };
        Ok(CodeSystem { scheme, a, counts, design, lin, constellation, alpha, precoders })
    }

    /// Map message indices to constellation symbols.
    pub fn symbols(&self, indices: &[usize]) -> Result<Vec<Complex64>> {
        if indices.len() != self.counts.info_vars {
            return Err(Error::Config(format!(
                "message length {} does not match the {} information symbols",
                indices.len(),
                self.counts.info_vars
            )));
        }
        indices
            .iter()
            .map(|&i| {
                self.constellation.points.get(i).copied().ok_or_else(|| {
                    Error::Config(format!(
                        "symbol index {i} outside the {}-point constellation",
                        self.constellation.len()
                    ))
                })
            })
            .collect()
    }

    /// First-phase broadcast vector: training entries followed by the
    /// (precoded) information symbols.
    pub fn source_vector(&self, symbols: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(symbols.len(), self.counts.info_vars);
        let mut x = vec![self.alpha.value; self.counts.train_sent];
        x.extend_from_slice(symbols);
        match &self.precoders {
            Some(pq) => pq.apply(&x),
            None => x,
        }
    }

    /// The vector the design is evaluated on at the relays: the full
    /// training copies followed by the interleaved (or plain) symbols.
    pub fn effective_vector(&self, symbols: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(symbols.len(), self.counts.info_vars);
        let mut xbar = vec![self.alpha.value; self.counts.train_copies];
        match self.scheme {
            Scheme::TeCiod => xbar.extend(interleave(symbols, self.a)),
            Scheme::TeCod => xbar.extend_from_slice(symbols),
        }
        xbar
    }

    /// Effective information variables for given message indices, i.e.
    /// `effective_vector` without the training prefix.
    pub fn effective_symbols(&self, indices: &[usize]) -> Result<Vec<Complex64>> {
        let symbols = self.symbols(indices)?;
        Ok(self.effective_vector(&symbols)[self.counts.train_copies..].to_vec())
    }

    /// Number of distinct messages, if it fits in a u64 guard check.
    pub fn message_count(&self) -> Option<u64> {
        let m = self.constellation.len() as u64;
        let mut total = 1u64;
        for _ in 0..self.counts.info_vars {
            total = total.checked_mul(m)?;
        }
        Some(total)
    }

    /// Overwrite the effect of one information symbol inside an effective
    /// vector in place. Interleaving routes the real part to the symbol's
    /// own slot and the imaginary part to its partner's slot.
    pub fn patch_effective(&self, xbar: &mut [Complex64], pos: usize, s: Complex64) {
        debug_assert!(pos < self.counts.info_vars);
        let tc = self.counts.train_copies;
        match self.scheme {
            Scheme::TeCiod => {
                let a = self.a as usize;
                let partner = (pos + a) % (2 * a);
                xbar[tc + pos].re = s.re;
                xbar[tc + partner].im = s.im;
            }
            Scheme::TeCod => xbar[tc + pos] = s,
        }
    }
}

/// Run the full two-phase protocol for one message: broadcast, relay
/// preprocessing and dispersion, destination combining.
pub fn run_protocol<R: rand::Rng>(
    sys: &CodeSystem,
    cfg: &crate::channel::NetworkConfig,
    ch: &crate::channel::ChannelRealization,
    symbols: &[Complex64],
    noiseless: bool,
    rng: &mut R,
) -> Vec<Complex64> {
    use crate::channel::{phase_one, phase_two, relay_preprocess, relay_transmit};
    let x_hat = sys.source_vector(symbols);
    let first = phase_one(&x_hat, cfg, ch, noiseless, rng);
    let amp = cfg.relay_amp();
    let tx: Vec<Vec<Complex64>> = (0..sys.counts.relays)
        .map(|k| {
            let rbar = relay_preprocess(&first.received[k], ch.h[k], sys.alpha.value, &sys.counts);
            relay_transmit(&rbar, &sys.lin.a_mats[k], &sys.lin.b_mats[k], amp)
        })
        .collect();
    phase_two(&tx, &ch.g, noiseless, rng)
}
