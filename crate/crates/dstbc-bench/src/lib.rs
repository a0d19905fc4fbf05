//! Shared setup for the decoder benchmarks: one noisy reception with its
//! decoding context, reproducible by seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dstbc_core::channel::{effective_energy, sample_channel, NetworkConfig};
use dstbc_core::constellation::{by_name, diversity_rotation_rad};
use dstbc_core::decoder::MlMetricContext;
use dstbc_core::design::Scheme;
use dstbc_core::system::{run_protocol, CodeSystem};

/// Build a system and one decodable noisy reception at 15 dB.
pub fn reception(scheme: Scheme, a: u32, seed: u64) -> (CodeSystem, MlMetricContext) {
    let base = match (scheme, a) {
        (Scheme::TeCiod, 3) => by_name("qam8").unwrap(),
        _ => by_name("qpsk").unwrap(),
    };
    let base = base.rotate(diversity_rotation_rad());
    let sys = CodeSystem::new(scheme, a, &base, None).unwrap();
    let e_eff =
        effective_energy(&sys.counts, sys.alpha.value.norm_sqr(), sys.alpha.symbol_energy);
    let net = NetworkConfig::from_split(sys.counts, 15.0, 0.5, e_eff).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let msg: Vec<usize> = (0..sys.counts.info_vars)
        .map(|_| rng.gen_range(0..sys.constellation.len()))
        .collect();
    let ch = sample_channel(sys.counts.relays, &mut rng);
    let y = run_protocol(&sys, &net, &ch, &sys.symbols(&msg).unwrap(), false, &mut rng);
    let ctx = MlMetricContext::from_channel(y, &ch, &net, &sys.lin).unwrap();
    (sys, ctx)
}
