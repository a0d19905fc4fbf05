//! Symbolic construction of the relay designs.
//!
//! A design is a grid of [`Atom`]s: each entry is zero, the training constant
//! `a`, or a (possibly negated / conjugated) information variable. Rows are
//! time slots, columns are relays. The two schemes built here:
//!
//! * `tecod`: a square complex orthogonal design with every structural zero
//!   replaced by the training constant;
//! * `teciod`: a block-diagonal pair of identical training-embedded designs,
//!   where the variables are coordinate-interleaved information symbols.
//!
//! [`extract_dispersion`] lowers a design to per-relay matrix pairs
//! `(A, B)` over {0, +1, -1} such that column `k` of the design equals
//! `A_k * v + B_k * conj(v)` for the effective vector `v` (training copies
//! followed by the interleaved variables). [`build_precoders`] produces the
//! source-side matrices that realize the coordinate interleaving as
//! `P x + Q conj(x)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMat, IMat, RMat};

/// Largest supported design exponent. Designs double in size with the
/// exponent; everything the tooling exercises fits well below this.
pub const MAX_EXPONENT: u32 = 6;

/// One entry of a design grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Atom {
    Zero,
    /// The training constant, shared by every training entry.
    Train,
    /// Information variable `index` (0-based), optionally conjugated/negated.
    Var { index: usize, conj: bool, neg: bool },
}

impl Atom {
    fn conjugated(self) -> Atom {
        match self {
            Atom::Zero => Atom::Zero,
            Atom::Train => unreachable!("training atoms are embedded after conjugation steps"),
            Atom::Var { index, conj, neg } => Atom::Var { index, conj: !conj, neg },
        }
    }

    /// Display token: `0`, `a`, `x3`, `x3*`, `-x2*`, ...
    pub fn token(&self) -> String {
        match *self {
            Atom::Zero => "0".to_string(),
            Atom::Train => "a".to_string(),
            Atom::Var { index, conj, neg } => {
                let mut s = String::new();
                if neg {
                    s.push('-');
                }
                s.push('x');
                s.push_str(&(index + 1).to_string());
                if conj {
                    s.push('*');
                }
                s
            }
        }
    }

    fn eval(&self, alpha: Complex64, vars: &[Complex64]) -> Complex64 {
        match *self {
            Atom::Zero => Complex64::new(0.0, 0.0),
            Atom::Train => alpha,
            Atom::Var { index, conj, neg } => {
                let mut v = vars[index];
                if conj {
                    v = v.conj();
                }
                if neg {
                    v = -v;
                }
                v
            }
        }
    }
}

/// A rectangular sub-region of a design holding one orthogonal sub-design.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DesignBlock {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
    pub var_start: usize,
    pub var_end: usize,
}

impl DesignBlock {
    pub fn contains_col(&self, c: usize) -> bool {
        c >= self.col_start && c < self.col_end
    }

    pub fn contains_row(&self, r: usize) -> bool {
        r >= self.row_start && r < self.row_end
    }
}

/// Symbolic design grid. Rows are time slots, columns are relays.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignExpr {
    pub rows: usize,
    pub cols: usize,
    pub num_vars: usize,
    /// Training atoms per column (uniform across columns).
    pub train_copies: usize,
    /// Orthogonal sub-designs: one block for a plain design, two for the
    /// block-diagonal scheme. Entries outside every block are zero.
    pub blocks: Vec<DesignBlock>,
    entries: Vec<Atom>,
}

impl DesignExpr {
    fn filled(rows: usize, cols: usize) -> Self {
        DesignExpr {
            rows,
            cols,
            num_vars: 0,
            train_copies: 0,
            blocks: Vec::new(),
            entries: vec![Atom::Zero; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Atom {
        self.entries[r * self.cols + c]
    }

    fn set(&mut self, r: usize, c: usize, atom: Atom) {
        self.entries[r * self.cols + c] = atom;
    }

    /// Raw entry mutator for building perturbed variants, e.g. to confirm
    /// that the verification routines reject a damaged design. Performs no
    /// validation.
    pub fn set_entry(&mut self, r: usize, c: usize, atom: Atom) {
        self.set(r, c, atom);
    }

    /// The block a column belongs to.
    pub fn block_of_col(&self, c: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains_col(c))
            .expect("every column lies in a block")
    }

    pub fn token_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.at(r, c).token()).collect())
            .collect()
    }

    /// Column-aligned textual grid.
    pub fn render(&self) -> String {
        let rows = self.token_rows();
        let mut widths = vec![0usize; self.cols];
        for row in &rows {
            for (c, tok) in row.iter().enumerate() {
                widths[c] = widths[c].max(tok.len());
            }
        }
        let mut out = String::new();
        for row in &rows {
            let line: Vec<String> =
                row.iter().enumerate().map(|(c, tok)| format!("{:>w$}", tok, w = widths[c])).collect();
            out.push_str(&line.join("  "));
            out.push('\n');
        }
        out
    }

    /// Numeric codeword for a concrete assignment of the training constant
    /// and the design variables.
    pub fn eval(&self, alpha: Complex64, vars: &[Complex64]) -> CMat {
        assert_eq!(vars.len(), self.num_vars, "variable count mismatch in eval");
        let mut m = CMat::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(r, c, self.at(r, c).eval(alpha, vars));
            }
        }
        m
    }

    /// Structural invariants: every block variable appears exactly once per
    /// block row and block column, training counts are uniform, and entries
    /// outside the blocks are zero.
    pub fn validate(&self) -> Result<()> {
        for (bi, b) in self.blocks.iter().enumerate() {
            for c in b.col_start..b.col_end {
                let mut seen = vec![0usize; self.num_vars];
                let mut trains = 0usize;
                for r in b.row_start..b.row_end {
                    match self.at(r, c) {
                        Atom::Var { index, .. } => {
                            if index < b.var_start || index >= b.var_end {
                                return Err(Error::Verification(format!(
                                    "column {c}: variable x{} outside block {bi}'s range",
                                    index + 1
                                )));
                            }
                            seen[index] += 1;
                        }
                        Atom::Train => trains += 1,
                        Atom::Zero => {}
                    }
                }
                for v in b.var_start..b.var_end {
                    if seen[v] != 1 {
                        return Err(Error::Verification(format!(
                            "column {c}: variable x{} appears {} times",
                            v + 1,
                            seen[v]
                        )));
                    }
                }
                if trains != self.train_copies {
                    return Err(Error::Verification(format!(
                        "column {c}: {} training atoms, expected {}",
                        trains, self.train_copies
                    )));
                }
            }
            for r in b.row_start..b.row_end {
                let mut seen = vec![0usize; self.num_vars];
                for c in b.col_start..b.col_end {
                    if let Atom::Var { index, .. } = self.at(r, c) {
                        seen[index] += 1;
                    }
                }
                for v in b.var_start..b.var_end {
                    if seen[v] != 1 {
                        return Err(Error::Verification(format!(
                            "row {r}: variable x{} appears {} times",
                            v + 1,
                            seen[v]
                        )));
                    }
                }
            }
        }
        for r in 0..self.rows {
            for c in 0..self.cols {
                let inside = self.blocks.iter().any(|b| b.contains_row(r) && b.contains_col(c));
                if !inside && self.at(r, c) != Atom::Zero {
                    return Err(Error::Verification(format!(
                        "non-zero entry at ({r}, {c}) outside every block"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Grid of the conjugate transpose (pre-embedding: no training atoms yet).
fn adjoint_grid(d: &DesignExpr) -> DesignExpr {
    let mut out = DesignExpr::filled(d.cols, d.rows);
    out.num_vars = d.num_vars;
    for r in 0..d.rows {
        for c in 0..d.cols {
            out.set(c, r, d.at(r, c).conjugated());
        }
    }
    out
}

/// Size-doubling step: given a square orthogonal design `prev` and a fresh
/// variable index, produce
/// `[[prev, x I], [-x* I, prev^H]]`.
fn double_cod(prev: &DesignExpr, new_var: usize) -> DesignExpr {
    let n = prev.rows;
    let adj = adjoint_grid(prev);
    let mut out = DesignExpr::filled(2 * n, 2 * n);
    out.num_vars = new_var + 1;
    for r in 0..n {
        for c in 0..n {
            out.set(r, c, prev.at(r, c));
            out.set(n + r, n + c, adj.at(r, c));
        }
        out.set(r, n + r, Atom::Var { index: new_var, conj: false, neg: false });
        out.set(n + r, r, Atom::Var { index: new_var, conj: true, neg: true });
    }
    out
}

// Fixed permutation applied to the doubled 4x4 design. It moves the zero
// pattern onto positions with one zero per row and per column, which is the
// canonical layout every larger construction inherits.
const COD4_ROW_ORDER: [usize; 4] = [0, 1, 3, 2];
const COD4_COL_ORDER: [usize; 4] = [2, 3, 1, 0];

fn permute(d: &DesignExpr, row_order: &[usize], col_order: &[usize]) -> DesignExpr {
    let mut out = DesignExpr::filled(d.rows, d.cols);
    out.num_vars = d.num_vars;
    for r in 0..d.rows {
        for c in 0..d.cols {
            out.set(r, c, d.at(row_order[r], col_order[c]));
        }
    }
    out
}

/// Square complex orthogonal design of size `2^(a_block-1)` in `a_block`
/// variables, with no training entries. `X^H X = (sum |x_i|^2) I` holds
/// identically.
pub fn build_cod(a_block: u32) -> Result<DesignExpr> {
    if a_block < 1 {
        return Err(Error::Config("design needs at least one variable".into()));
    }
    if a_block > MAX_EXPONENT + 1 {
        return Err(Error::Config(format!(
            "design exponent {a_block} exceeds the supported maximum {}",
            MAX_EXPONENT + 1
        )));
    }
    let mut d = DesignExpr::filled(1, 1);
    d.num_vars = 1;
    d.set(0, 0, Atom::Var { index: 0, conj: false, neg: false });
    for k in 1..a_block as usize {
        d = double_cod(&d, k);
        if d.rows == 4 {
            d = permute(&d, &COD4_ROW_ORDER, &COD4_COL_ORDER);
        }
    }
    d.blocks = vec![DesignBlock {
        row_start: 0,
        row_end: d.rows,
        col_start: 0,
        col_end: d.cols,
        var_start: 0,
        var_end: d.num_vars,
    }];
    d.train_copies = 0;
    Ok(d)
}

/// Replace every structural zero of an orthogonal design by the training
/// constant. The zero count must be uniform across columns.
pub fn embed_training(cod: &DesignExpr) -> Result<DesignExpr> {
    let mut counts = Vec::with_capacity(cod.cols);
    for c in 0..cod.cols {
        counts.push((0..cod.rows).filter(|&r| cod.at(r, c) == Atom::Zero).count());
    }
    let t = counts[0];
    if counts.iter().any(|&n| n != t) {
        return Err(Error::Verification("zero pattern not uniform across columns".into()));
    }
    let mut out = cod.clone();
    for r in 0..out.rows {
        for c in 0..out.cols {
            if out.at(r, c) == Atom::Zero {
                out.set(r, c, Atom::Train);
            }
        }
    }
    out.train_copies = t;
    Ok(out)
}

/// Block-diagonal relay design for exponent `a >= 2`: two identical
/// training-embedded sub-designs of size `2^(a-1)`, the first in variables
/// `x1..xa`, the second in `x(a+1)..x(2a)`.
pub fn build_teciod(a: u32) -> Result<DesignExpr> {
    if a < 2 {
        return Err(Error::Config("block-diagonal scheme needs exponent >= 2".into()));
    }
    if a > MAX_EXPONENT {
        return Err(Error::Config(format!(
            "exponent {a} exceeds the supported maximum {MAX_EXPONENT}"
        )));
    }
    let block = embed_training(&build_cod(a)?)?;
    let n = block.rows;
    let a = a as usize;
    let mut out = DesignExpr::filled(2 * n, 2 * n);
    out.num_vars = 2 * a;
    out.train_copies = block.train_copies;
    for r in 0..n {
        for c in 0..n {
            out.set(r, c, block.at(r, c));
            let shifted = match block.at(r, c) {
                Atom::Var { index, conj, neg } => Atom::Var { index: index + a, conj, neg },
                other => other,
            };
            out.set(n + r, n + c, shifted);
        }
    }
    out.blocks = vec![
        DesignBlock { row_start: 0, row_end: n, col_start: 0, col_end: n, var_start: 0, var_end: a },
        DesignBlock {
            row_start: n,
            row_end: 2 * n,
            col_start: n,
            col_end: 2 * n,
            var_start: a,
            var_end: 2 * a,
        },
    ];
    Ok(out)
}

/// Which relay design a simulation runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Block-diagonal pair of training-embedded designs over interleaved
    /// symbol coordinates.
    TeCiod,
    /// Single training-embedded orthogonal design, no interleaving.
    TeCod,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::TeCiod => "teciod",
            Scheme::TeCod => "tecod",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme> {
        match s {
            "teciod" => Ok(Scheme::TeCiod),
            "tecod" => Ok(Scheme::TeCod),
            other => Err(Error::Config(format!("unknown scheme '{other}' (use teciod or tecod)"))),
        }
    }
}

/// Size bookkeeping shared by the whole pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeCounts {
    /// Relay count, equal to the number of second-phase time slots.
    pub relays: usize,
    /// Information symbols per codeword.
    pub info_vars: usize,
    /// Training copies inside the effective vector.
    pub train_copies: usize,
    /// Training entries the source actually broadcasts.
    pub train_sent: usize,
    /// First-phase broadcast length N.
    pub first_phase_len: usize,
    /// Length of the effective vector at each relay.
    pub effective_len: usize,
}

/// Sizes for a scheme at exponent `a` (relay count `2^a`).
pub fn counts_for(scheme: Scheme, a: u32) -> Result<SchemeCounts> {
    let min_a = match scheme {
        Scheme::TeCiod => 2,
        Scheme::TeCod => 1,
    };
    if a < min_a || a > MAX_EXPONENT {
        return Err(Error::Config(format!(
            "exponent {a} outside supported range {min_a}..={MAX_EXPONENT} for {}",
            scheme.name()
        )));
    }
    let relays = 1usize << a;
    let (info_vars, train_copies) = match scheme {
        Scheme::TeCiod => (2 * a as usize, (1usize << (a - 1)) - a as usize),
        Scheme::TeCod => (a as usize + 1, (1usize << a) - a as usize - 1),
    };
    let train_sent = train_copies.div_ceil(2);
    Ok(SchemeCounts {
        relays,
        info_vars,
        train_copies,
        train_sent,
        first_phase_len: train_sent + info_vars,
        effective_len: train_copies + info_vars,
    })
}

/// The design grid a scheme transmits in its second phase.
pub fn design_for(scheme: Scheme, a: u32) -> Result<DesignExpr> {
    match scheme {
        Scheme::TeCiod => build_teciod(a),
        Scheme::TeCod => {
            if a < 1 {
                return Err(Error::Config("orthogonal scheme needs exponent >= 1".into()));
            }
            embed_training(&build_cod(a + 1)?)
        }
    }
}

/// Coordinate interleaving: pair symbol `m` with symbol `m + a` and swap
/// their imaginary parts. Self-inverse, and preserves per-pair energy
/// exactly.
pub fn interleave(x: &[Complex64], a: u32) -> Vec<Complex64> {
    let a = a as usize;
    assert_eq!(x.len(), 2 * a, "interleaving expects 2a symbols");
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * a];
    for m in 0..a {
        out[m] = Complex64::new(x[m].re, x[m + a].im);
        out[m + a] = Complex64::new(x[m + a].re, x[m].im);
    }
    out
}

/// The same interleaving as a permutation of the `4a` real coordinates
/// (coordinate `2i` is Re of symbol `i`, `2i + 1` is Im). `map[k]` is the
/// source coordinate feeding output coordinate `k`.
pub fn interleave_map(a: u32) -> Vec<usize> {
    let a = a as usize;
    let mut map = vec![0usize; 4 * a];
    for m in 0..a {
        map[2 * m] = 2 * m;
        map[2 * m + 1] = 2 * (m + a) + 1;
        map[2 * (m + a)] = 2 * (m + a);
        map[2 * (m + a) + 1] = 2 * m + 1;
    }
    map
}

/// Per-relay linear dispersion of a design: column `k` of the codeword is
/// `a_mats[k] * v + b_mats[k] * conj(v)` for the effective vector `v`
/// (training copies first, then the design variables).
#[derive(Clone, Debug)]
pub struct LinearDesign {
    /// Second-phase time slots (design rows).
    pub time_slots: usize,
    /// Relay count (design columns).
    pub num_relays: usize,
    pub effective_len: usize,
    pub num_info_vars: usize,
    pub train_copies: usize,
    pub a_mats: Vec<IMat>,
    pub b_mats: Vec<IMat>,
    pub blocks: Vec<DesignBlock>,
}

impl LinearDesign {
    /// The block the relay's design column belongs to.
    pub fn block_of_relay(&self, k: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains_col(k))
            .expect("every relay column lies in a block")
    }

    /// Numeric codeword column for relay `k`.
    pub fn column(&self, k: usize, v: &[Complex64]) -> Vec<Complex64> {
        let conj: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
        let mut col = self.a_mats[k].apply(v);
        let add = self.b_mats[k].apply(&conj);
        for (c, d) in col.iter_mut().zip(add) {
            *c += d;
        }
        col
    }

    /// Full numeric codeword (all relay columns).
    pub fn codeword(&self, v: &[Complex64]) -> CMat {
        let mut m = CMat::zeros(self.time_slots, self.num_relays);
        for k in 0..self.num_relays {
            for (r, z) in self.column(k, v).into_iter().enumerate() {
                m.set(r, k, z);
            }
        }
        m
    }
}

/// Lower a design grid to its dispersion matrices. Training atoms in a
/// column are assigned to distinct training slots greedily, scanning rows
/// top to bottom.
pub fn extract_dispersion(design: &DesignExpr) -> Result<LinearDesign> {
    let t = design.train_copies;
    let eff = t + design.num_vars;
    let mut a_mats = Vec::with_capacity(design.cols);
    let mut b_mats = Vec::with_capacity(design.cols);
    for c in 0..design.cols {
        let mut a = IMat::zeros(design.rows, eff);
        let mut b = IMat::zeros(design.rows, eff);
        let mut next_train = 0usize;
        for r in 0..design.rows {
            match design.at(r, c) {
                Atom::Zero => {}
                Atom::Train => {
                    if next_train >= t {
                        return Err(Error::Verification(format!(
                            "column {c} holds more than {t} training atoms"
                        )));
                    }
                    a.set(r, next_train, 1);
                    next_train += 1;
                }
                Atom::Var { index, conj, neg } => {
                    let sign = if neg { -1 } else { 1 };
                    if conj {
                        b.set(r, t + index, sign);
                    } else {
                        a.set(r, t + index, sign);
                    }
                }
            }
        }
        if next_train != t {
            return Err(Error::Verification(format!(
                "column {c} holds {next_train} training atoms, expected {t}"
            )));
        }
        a_mats.push(a);
        b_mats.push(b);
    }
    Ok(LinearDesign {
        time_slots: design.rows,
        num_relays: design.cols,
        effective_len: eff,
        num_info_vars: design.num_vars,
        train_copies: t,
        a_mats,
        b_mats,
        blocks: design.blocks.clone(),
    })
}

/// Source precoding pair: the broadcast vector is `P x + Q conj(x)`.
#[derive(Clone, Debug)]
pub struct PrecoderPair {
    pub n: usize,
    pub train_sent: usize,
    pub p: RMat,
    pub q: RMat,
}

impl PrecoderPair {
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let conj: Vec<Complex64> = x.iter().map(|z| z.conj()).collect();
        let mut out = self.p.mul_vec(x);
        for (o, d) in out.iter_mut().zip(self.q.mul_vec(&conj)) {
            *o += d;
        }
        out
    }
}

/// Precoders realizing the coordinate interleaving at the source: identity
/// on the training entries, imaginary-part exchange between symbol `m` and
/// symbol `m + a` on the information entries.
pub fn build_precoders(a: u32) -> Result<PrecoderPair> {
    let counts = counts_for(Scheme::TeCiod, a)?;
    let n = counts.first_phase_len;
    let ts = counts.train_sent;
    let a = a as usize;
    let mut p = RMat::zeros(n, n);
    let mut q = RMat::zeros(n, n);
    for i in 0..ts {
        p.set(i, i, 1.0);
    }
    // From Re/Im arithmetic: out_m = (x_m + x_m*)/2 + (x_{m+a} - x_{m+a}*)/2,
    // and symmetrically for out_{m+a}.
    for m in 0..a {
        let (rm, rma) = (ts + m, ts + m + a);
        p.set(rm, rm, 0.5);
        p.set(rm, rma, 0.5);
        q.set(rm, rm, 0.5);
        q.set(rm, rma, -0.5);
        p.set(rma, rm, 0.5);
        p.set(rma, rma, 0.5);
        q.set(rma, rm, -0.5);
        q.set(rma, rma, 0.5);
    }
    Ok(PrecoderPair { n, train_sent: ts, p, q })
}
