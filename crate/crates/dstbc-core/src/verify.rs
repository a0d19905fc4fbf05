//! Algebraic certificates for a constructed design.
//!
//! Three independent checks: exact integer identities on the dispersion
//! matrices, a symbolic Gram computation proving the decoding metric
//! separates per symbol, and an exhaustive (or coordinate-screened) full
//! diversity check over codeword differences.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::design::{Atom, DesignExpr, LinearDesign};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::system::CodeSystem;

/// Smallest normalized determinant accepted as full rank.
pub const RANK_DET_TOL: f64 = 1e-9;

/// Coordinate differences smaller than this count as colliding.
pub const COORD_TOL: f64 = 1e-9;

/// Guard on the exhaustive diversity search: product constellation size.
pub const DIVERSITY_MESSAGE_GUARD: u64 = 10_000_000;

/// Guard on the exhaustive diversity search: difference-vector count.
pub const DIVERSITY_DIFF_GUARD: u64 = 20_000_000;

// ---------------------------------------------------------------------------
// Integer identities on the dispersion pairs.

/// Outcome of the per-relay dispersion identity check.
#[derive(Clone, Debug)]
pub struct RelaySumReport {
    pub ok: bool,
    pub violations: Vec<String>,
}

/// Check, in exact integer arithmetic, that each relay's pair satisfies
/// `A A' + B B' = I` restricted to its block's rows and vanishes
/// elsewhere. This simultaneously forces one entry per block row and
/// disjoint row supports.
pub fn verify_relay_sums(lin: &LinearDesign) -> RelaySumReport {
    let t = lin.time_slots;
    let mut violations = Vec::new();
    for k in 0..lin.num_relays {
        let block = &lin.blocks[lin.block_of_relay(k)];
        let mut s = vec![0i32; t * t];
        lin.a_mats[k].accumulate_self_outer(&mut s);
        lin.b_mats[k].accumulate_self_outer(&mut s);
        for r1 in 0..t {
            for r2 in 0..t {
                let got = s[r1 * t + r2];
                let want =
                    i32::from(r1 == r2 && r1 >= block.row_start && r1 < block.row_end);
                if got != want {
                    violations.push(format!(
                        "relay {k}: sum entry ({r1}, {r2}) is {got}, expected {want}"
                    ));
                }
            }
        }
    }
    RelaySumReport { ok: violations.is_empty(), violations }
}

// ---------------------------------------------------------------------------
// Symbolic Gram computation.

/// A symbol appearing in a design entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Base {
    /// The training constant.
    Alpha,
    /// Information variable by zero-based index.
    Var(usize),
}

/// One of the two factors of a degree-two monomial: a base, possibly
/// conjugated.
pub type Factor = (Base, bool);

/// Degree-two monomial in the design symbols, stored with its factors
/// sorted so that products commute into a canonical key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Monomial {
    pub f1: Factor,
    pub f2: Factor,
}

impl Monomial {
    pub fn new(a: Factor, b: Factor) -> Monomial {
        if a <= b {
            Monomial { f1: a, f2: b }
        } else {
            Monomial { f1: b, f2: a }
        }
    }

    /// Distinct information-variable indices among the factors.
    pub fn var_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (base, _) in [self.f1, self.f2] {
            if let Base::Var(i) = base {
                if !out.contains(&i) {
                    out.push(i);
                }
            }
        }
        out
    }

}

fn factor_string(f: Factor) -> String {
    let mut s = match f.0 {
        Base::Alpha => "a".to_string(),
        Base::Var(i) => format!("x{}", i + 1),
    };
    if f.1 {
        s.push('*');
    }
    s
}

impl fmt::Display for Monomial {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "{} {}", factor_string(self.f1), factor_string(self.f2))
    }
}

/// Integer-coefficient polynomial in degree-two monomials.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Monomial, i64>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn add_term(&mut self, m: Monomial, coeff: i64) {
        let entry = self.terms.entry(m).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &i64)> {
        self.terms.iter()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(out, "0");
        }
        for (i, (m, &c)) in self.terms.iter().enumerate() {
            if i == 0 {
                if c < 0 {
                    write!(out, "-")?;
                }
            } else if c < 0 {
                write!(out, " - ")?;
            } else {
                write!(out, " + ")?;
            }
            let mag = c.unsigned_abs();
            if mag != 1 {
                write!(out, "{mag} ")?;
            }
            write!(out, "{m}")?;
        }
        Ok(())
    }
}

fn atom_factor(atom: Atom) -> Option<(Factor, i64)> {
    match atom {
        Atom::Zero => None,
        Atom::Train => Some(((Base::Alpha, false), 1)),
        Atom::Var { index, conj, neg } => {
            Some(((Base::Var(index), conj), if neg { -1 } else { 1 }))
        }
    }
}

/// Gram matrix of the design computed symbolically: entry `(i, j)` is the
/// polynomial `sum_r conj(X[r][i]) X[r][j]`.
pub fn symbolic_gram(design: &DesignExpr) -> Vec<Vec<Poly>> {
    (0..design.cols)
        .map(|i| {
            (0..design.cols)
                .map(|j| partial_gram_poly(design, i, j, 0..design.rows))
                .collect()
        })
        .collect()
}

/// Gram contribution of one row range: `sum_r conj(X[r][i]) X[r][j]` over
/// `rows`.
fn partial_gram_poly(
    design: &DesignExpr,
    i: usize,
    j: usize,
    rows: std::ops::Range<usize>,
) -> Poly {
    let mut poly = Poly::zero();
    for r in rows {
        let left = atom_factor(design.at(r, i));
        let right = atom_factor(design.at(r, j));
        if let (Some(((base_l, conj_l), sign_l)), Some((fr, sign_r))) = (left, right) {
            let fl = (base_l, !conj_l);
            poly.add_term(Monomial::new(fl, fr), sign_l * sign_r);
        }
    }
    poly
}

/// Certify that the design's decoding metric separates per information
/// symbol. The destination whitens with a covariance that is constant
/// within each block's rows but differs between blocks, so the metric
/// couples symbols exactly when some per-block partial Gram entry carries
/// a monomial in two different variables. The check requires: columns
/// from different blocks never meet in any row group, every off-diagonal
/// monomial (per row group, so only cancellations at equal noise weight
/// count) touches at most one variable, and each diagonal is the training
/// energy plus the block's symbol energies.
pub fn verify_ssd(design: &DesignExpr) -> Result<()> {
    for i in 0..design.cols {
        for j in 0..design.cols {
            let bi = design.block_of_col(i);
            let bj = design.block_of_col(j);
            if i == j {
                let block = &design.blocks[bi];
                let poly = partial_gram_poly(design, i, i, 0..design.rows);
                let mut expected = Poly::zero();
                expected.add_term(
                    Monomial::new((Base::Alpha, false), (Base::Alpha, true)),
                    design.train_copies as i64,
                );
                for v in block.var_start..block.var_end {
                    expected
                        .add_term(Monomial::new((Base::Var(v), false), (Base::Var(v), true)), 1);
                }
                if poly != expected {
                    return Err(Error::Verification(format!(
                        "diagonal {i} is {poly}, expected {expected}"
                    )));
                }
                continue;
            }
            for (gb, group) in design.blocks.iter().enumerate() {
                let poly = partial_gram_poly(design, i, j, group.row_start..group.row_end);
                if poly.is_zero() {
                    continue;
                }
                if bi != bj {
                    return Err(Error::Verification(format!(
                        "columns {i} and {j} from different blocks couple on block {gb}'s \
                         rows: {poly}"
                    )));
                }
                for (m, _) in poly.iter() {
                    let vars = m.var_indices();
                    if vars.len() > 1 {
                        return Err(Error::Verification(format!(
                            "entry ({i}, {j}) mixes variables {} and {} on block {gb}'s \
                             rows: {poly}",
                            vars[0] + 1,
                            vars[1] + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Numeric Gram of the evaluated design.
pub fn gram_matrix(design: &DesignExpr, alpha: Complex64, vars: &[Complex64]) -> CMat {
    design.eval(alpha, vars).gram()
}

// ---------------------------------------------------------------------------
// Full diversity.

/// How the diversity verdict was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiversityMode {
    /// Every difference vector was enumerated.
    Exhaustive,
    /// Only the coordinate screen ran (the search space exceeded the
    /// guards, or the screen already produced a witness).
    PreScreenOnly,
}

/// Outcome of the diversity check.
#[derive(Clone, Debug)]
pub struct DiversityReport {
    pub passed: bool,
    pub mode: DiversityMode,
    /// Coordinate screen: no two constellation points share a real or an
    /// imaginary coordinate. Trivially true for the single-block scheme.
    pub coords_ok: bool,
    /// Smallest normalized codeword-difference determinant seen, when the
    /// exhaustive search ran (also set for a screen witness).
    pub min_abs_det: Option<f64>,
    /// Difference vectors evaluated.
    pub pairs_checked: u64,
    /// A deficient difference vector, when one exists.
    pub witness: Option<Vec<Complex64>>,
}

/// All pairwise symbol differences, deduplicated bit-exactly.
fn difference_set(points: &[Complex64]) -> Vec<Complex64> {
    let mut diffs: Vec<Complex64> = Vec::new();
    for p in points {
        for q in points {
            diffs.push(p - q);
        }
    }
    diffs.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    diffs.dedup_by(|a, b| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
    diffs
}

/// Normalized determinant of the codeword difference for one message
/// difference vector. Returns `None` for the zero vector.
fn difference_det(sys: &CodeSystem, delta: &[Complex64]) -> Option<f64> {
    let mut xbar = vec![Complex64::new(0.0, 0.0); sys.counts.train_copies];
    match sys.scheme {
        crate::design::Scheme::TeCiod => {
            xbar.extend(crate::design::interleave(delta, sys.a))
        }
        crate::design::Scheme::TeCod => xbar.extend_from_slice(delta),
    }
    let x = sys.lin.codeword(&xbar);
    let scale = x.max_abs();
    if scale == 0.0 {
        return None;
    }
    let x = x.scale(Complex64::new(1.0 / scale, 0.0));
    Some(x.gram().det().norm())
}

/// Check full diversity: every pair of distinct messages must produce a
/// full-rank codeword difference. The coordinate screen is exact for both
/// schemes; the exhaustive search additionally measures the smallest
/// normalized determinant, and is skipped (mode `PreScreenOnly`) when the
/// space exceeds the guards.
pub fn check_full_diversity(sys: &CodeSystem, threshold: f64) -> DiversityReport {
    let points = &sys.constellation.points;
    let diffs = difference_set(points);
    let v = sys.counts.info_vars;

    // Coordinate screen. The block-diagonal scheme loses rank exactly when
    // some nonzero symbol difference has a zero real or imaginary part;
    // the single-block scheme never loses rank.
    let mut screen_witness: Option<Vec<Complex64>> = None;
    let coords_ok = match sys.scheme {
        crate::design::Scheme::TeCod => true,
        crate::design::Scheme::TeCiod => {
            let mut ok = true;
            for &d in &diffs {
                if d.norm() > COORD_TOL && (d.re.abs() < COORD_TOL || d.im.abs() < COORD_TOL) {
                    ok = false;
                    let mut w = vec![Complex64::new(0.0, 0.0); v];
                    w[0] = d;
                    screen_witness = Some(w);
                    break;
                }
            }
            ok
        }
    };

    if let Some(w) = screen_witness {
        let det = difference_det(sys, &w);
        return DiversityReport {
            passed: false,
            mode: DiversityMode::PreScreenOnly,
            coords_ok,
            min_abs_det: det,
            pairs_checked: 0,
            witness: Some(w),
        };
    }

    let message_total = sys.message_count().filter(|&t| t <= DIVERSITY_MESSAGE_GUARD);
    let diff_total = (diffs.len() as u64)
        .checked_pow(v as u32)
        .filter(|&t| t <= DIVERSITY_DIFF_GUARD);
    if message_total.is_none() || diff_total.is_none() {
        return DiversityReport {
            passed: coords_ok,
            mode: DiversityMode::PreScreenOnly,
            coords_ok,
            min_abs_det: None,
            pairs_checked: 0,
            witness: None,
        };
    }

    let mut indices = vec![0usize; v];
    let mut delta = vec![diffs[0]; v];
    let mut min_det = f64::INFINITY;
    let mut witness: Option<Vec<Complex64>> = None;
    let mut pairs_checked = 0u64;
    loop {
        for (d, &i) in delta.iter_mut().zip(&indices) {
            *d = diffs[i];
        }
        if let Some(det) = difference_det(sys, &delta) {
            pairs_checked += 1;
            if det < min_det {
                min_det = det;
                if det <= threshold {
                    witness = Some(delta.clone());
                }
            }
        }
        // Odometer over the difference set.
        let mut pos = v;
        loop {
            if pos == 0 {
                let passed = coords_ok && min_det > threshold;
                return DiversityReport {
                    passed,
                    mode: DiversityMode::Exhaustive,
                    coords_ok,
                    min_abs_det: Some(min_det),
                    pairs_checked,
                    witness: if passed { None } else { witness },
                };
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < diffs.len() {
                break;
            }
            indices[pos] = 0;
        }
    }
}
