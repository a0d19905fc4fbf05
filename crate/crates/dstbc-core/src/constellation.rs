//! Signal constellations and source power allocation.
//!
//! Constructors return unit-average-energy point sets; [`Constellation::rotate`]
//! and [`Constellation::normalized_to`] derive the variants the pipeline needs.
//! Point order is fixed (ascending by real part, then imaginary part, of the
//! unrotated grid), so symbol indices and decoder tie-breaks are deterministic.

use num_complex::Complex64;

use crate::design::SchemeCounts;
use crate::error::{Error, Result};

/// A finite set of complex signal points.
#[derive(Clone, Debug)]
pub struct Constellation {
    pub name: String,
    pub points: Vec<Complex64>,
}

fn from_grid(name: &str, grid: &[(f64, f64)]) -> Constellation {
    let raw: Vec<Complex64> = grid.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    let energy: f64 = raw.iter().map(|p| p.norm_sqr()).sum::<f64>() / raw.len() as f64;
    let scale = energy.sqrt().recip();
    Constellation { name: name.to_string(), points: raw.iter().map(|p| p * scale).collect() }
}

/// 16-point square QAM: the grid {-3,-1,1,3} x {-3,-1,1,3}, unit average
/// energy (raw grid energy 10).
pub fn make_qam16() -> Constellation {
    let mut grid = Vec::with_capacity(16);
    for re in [-3.0, -1.0, 1.0, 3.0] {
        for im in [-3.0, -1.0, 1.0, 3.0] {
            grid.push((re, im));
        }
    }
    from_grid("qam16", &grid)
}

/// 8-point QAM: the two-row grid {-3,-1,1,3} x {-1,1}, unit average energy
/// (raw grid energy 6). All eight points are distinct.
pub fn make_qam8() -> Constellation {
    let mut grid = Vec::with_capacity(8);
    for re in [-3.0, -1.0, 1.0, 3.0] {
        for im in [-1.0, 1.0] {
            grid.push((re, im));
        }
    }
    from_grid("qam8", &grid)
}

/// 4-point PSK on the diagonal grid {-1,1} x {-1,1}, unit average energy.
pub fn make_qpsk() -> Constellation {
    let mut grid = Vec::with_capacity(4);
    for re in [-1.0, 1.0] {
        for im in [-1.0, 1.0] {
            grid.push((re, im));
        }
    }
    from_grid("qpsk", &grid)
}

/// Look up a constellation by its config-file name.
pub fn by_name(name: &str) -> Result<Constellation> {
    match name {
        "qam16" => Ok(make_qam16()),
        "qam8" => Ok(make_qam8()),
        "qpsk" => Ok(make_qpsk()),
        other => Err(Error::Config(format!(
            "unknown constellation '{other}' (use qam16, qam8, or qpsk)"
        ))),
    }
}

/// Rotation angle (radians) that leaves no two points of a square-grid
/// constellation sharing a real or an imaginary coordinate, which is what
/// coordinate interleaving needs for full diversity.
pub fn diversity_rotation_rad() -> f64 {
    0.5 * 2.0f64.atan()
}

impl Constellation {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rotate every point by `theta` radians.
    pub fn rotate(&self, theta: f64) -> Constellation {
        let w = Complex64::new(theta.cos(), theta.sin());
        Constellation {
            name: self.name.clone(),
            points: self.points.iter().map(|p| p * w).collect(),
        }
    }

    /// Rescale so the average point energy equals `energy`.
    pub fn normalized_to(&self, energy: f64) -> Constellation {
        assert!(energy > 0.0);
        let current = self.mean_energy();
        let scale = (energy / current).sqrt();
        Constellation {
            name: self.name.clone(),
            points: self.points.iter().map(|p| p * scale).collect(),
        }
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.min((p - q).norm());
            }
        }
        best
    }
}

/// The training constant and the per-symbol energy budget that goes with it.
#[derive(Clone, Copy, Debug)]
pub struct TrainingConst {
    /// Value broadcast in each training slot.
    pub value: Complex64,
    /// Fraction of the unit source energy spent on training.
    pub train_fraction: f64,
    /// Average energy given to each information symbol.
    pub symbol_energy: f64,
    /// False when the scheme has no training slots at all.
    pub used: bool,
}

/// Split the unit source energy between training and information entries.
/// `split` is the training fraction; `None` selects equal energy per
/// broadcast entry.
pub fn choose_alpha(counts: &SchemeCounts, split: Option<f64>) -> Result<TrainingConst> {
    let n = counts.first_phase_len as f64;
    if counts.train_sent == 0 {
        if split.is_some() {
            return Err(Error::Config(
                "training power split given, but the scheme sends no training".into(),
            ));
        }
        return Ok(TrainingConst {
            value: Complex64::new(n.sqrt().recip(), 0.0),
            train_fraction: 0.0,
            symbol_energy: 1.0 / counts.info_vars as f64,
            used: false,
        });
    }
    let frac = split.unwrap_or(counts.train_sent as f64 / n);
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::Config(format!(
            "training power fraction {frac} outside (0, 1)"
        )));
    }
    Ok(TrainingConst {
        value: Complex64::new((frac / counts.train_sent as f64).sqrt(), 0.0),
        train_fraction: frac,
        symbol_energy: (1.0 - frac) / counts.info_vars as f64,
        used: true,
    })
}
