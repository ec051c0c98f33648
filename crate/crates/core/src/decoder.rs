//! Exact decoding of the reference qubit.
//!
//! The circuit is simulated once with every stabilizer sign replaced by an
//! affine function over GF(2) of the undetermined outcomes seen so far.
//! Undetermined measurements introduce fresh variables; determined ones
//! become constraints. Once the reference is purified, the sign of its
//! single-site stabilizer names the key measurements: `p_R · Π s_j = c`.

use serde::{Deserialize, Serialize};

use crate::circuit::CircuitInstance;
use crate::error::{Error, Result};
use crate::gf2::{get_bit, set_bit, words_for};
use crate::pauli::Axis;
use crate::tableau::{SignBit, StabilizerState};
use crate::trajectory::{TrajectoryRecord, WindowSpec};

/// `constant ⊕ Σ_k coeffs[k]·b_k` with outcome bits `b = (1 − s)/2`.
#[derive(Debug, Clone, Default)]
pub struct AffineSign {
    pub constant: bool,
    coeffs: Vec<u64>,
}

impl AffineSign {
    pub fn constant(c: bool) -> Self {
        AffineSign { constant: c, coeffs: Vec::new() }
    }

    /// The bare variable `b_k`.
    pub fn var(k: usize) -> Self {
        let mut coeffs = vec![0; words_for(k + 1)];
        set_bit(&mut coeffs, k, true);
        AffineSign { constant: false, coeffs }
    }

    pub fn coeff(&self, k: usize) -> bool {
        k / 64 < self.coeffs.len() && get_bit(&self.coeffs, k)
    }

    /// Indices of variables with a nonzero coefficient, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, &word) in self.coeffs.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                out.push(w * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }

    /// Sign bit given variable values.
    pub fn eval(&self, bits: impl Fn(usize) -> bool) -> bool {
        self.support().into_iter().fold(self.constant, |acc, k| acc ^ bits(k))
    }

    fn trimmed(&self) -> &[u64] {
        let end = self.coeffs.iter().rposition(|&w| w != 0).map_or(0, |i| i + 1);
        &self.coeffs[..end]
    }
}

impl PartialEq for AffineSign {
    fn eq(&self, other: &Self) -> bool {
        self.constant == other.constant && self.trimmed() == other.trimmed()
    }
}

impl Eq for AffineSign {}

impl SignBit for AffineSign {
    fn plus() -> Self {
        AffineSign::default()
    }

    fn flip(&mut self) {
        self.constant = !self.constant;
    }

    fn xor_assign(&mut self, other: &Self) {
        self.constant ^= other.constant;
        if other.coeffs.len() > self.coeffs.len() {
            // grow geometrically so repeated updates amortize
            let want = other.coeffs.len().max(2 * self.coeffs.len());
            self.coeffs.resize(want, 0);
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a ^= b;
        }
    }
}

/// Measurement slot `(layer, site)`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot(pub usize, pub usize);

/// A determined outcome: `s_slot = c · Π_{j ∈ depends_on} s_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub slot: Slot,
    pub depends_on: Vec<Slot>,
    pub c: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMeasurementReport {
    pub n_sites: usize,
    pub depth: usize,
    pub circuit_seed: u64,
    /// All measurement slots in execution order.
    pub slots: Vec<Slot>,
    pub determined_flags: Vec<bool>,
    pub key_set: Vec<Slot>,
    pub c: i8,
    pub axis: Axis,
    pub t_p: usize,
    pub constraints: Vec<Constraint>,
}

fn sign_of(minus: bool) -> i8 {
    if minus {
        -1
    } else {
        1
    }
}

/// Single symbolic pass over `instance`.
pub fn analyze_circuit(instance: &CircuitInstance) -> Result<KeyMeasurementReport> {
    let n = instance.n_sites();
    let reference = n;
    let mut state = StabilizerState::<AffineSign>::new(n + 1)?;
    instance.scramble_initial(&mut state);
    instance.entangle_reference(&mut state);

    let mut slots = Vec::with_capacity(instance.num_measurements());
    let mut flags = Vec::with_capacity(instance.num_measurements());
    let mut variables: Vec<Slot> = Vec::new();
    let mut pending: Vec<(Slot, AffineSign)> = Vec::new();
    let mut t_p = None;
    for (l, layer) in instance.layers.iter().enumerate() {
        for g in &layer.gates {
            state.apply_gate_unchecked(&g.gate, &g.sites);
        }
        for &s in &layer.measured {
            let k = variables.len();
            let m = state.measure_z_with(s, || AffineSign::var(k))?;
            slots.push(Slot(l, s));
            flags.push(m.determined);
            if m.determined {
                pending.push((Slot(l, s), m.sign));
            } else {
                variables.push(Slot(l, s));
            }
        }
        if t_p.is_none() && state.single_site_entropy(reference) == 0 {
            t_p = Some(l + 1);
        }
    }
    let t_p = t_p.ok_or(Error::NeverPurifies)?;
    let (axis, sign) = state.single_site_element(reference).expect("entropy 0 implies a single-site element");
    let key_set = sign.support().into_iter().map(|k| variables[k]).collect();
    let constraints = pending
        .into_iter()
        .map(|(slot, f)| Constraint {
            slot,
            depends_on: f.support().into_iter().map(|k| variables[k]).collect(),
            c: sign_of(f.constant),
        })
        .collect();
    Ok(KeyMeasurementReport {
        n_sites: n,
        depth: instance.depth(),
        circuit_seed: instance.spec.circuit_seed,
        slots,
        determined_flags: flags,
        key_set,
        c: sign_of(sign.constant),
        axis,
        t_p,
        constraints,
    })
}

impl KeyMeasurementReport {
    /// `c · Π s_j` with outcomes looked up per slot.
    pub fn predict_with(&self, outcome: impl Fn(Slot) -> i8) -> i8 {
        self.key_set.iter().fold(self.c, |acc, &j| acc * outcome(j))
    }

    /// Whether every key slot is visible in `window`.
    pub fn key_set_within(&self, window: &WindowSpec) -> bool {
        self.key_set.iter().all(|&Slot(l, s)| window.contains(l, s, self.n_sites))
    }

    /// Latest layer (1-based) holding a key measurement; 0 if none.
    pub fn key_depth(&self) -> usize {
        self.key_set.iter().map(|s| s.0 + 1).max().unwrap_or(0)
    }
}

/// `p_R` of a full trajectory record.
pub fn predict(report: &KeyMeasurementReport, record: &TrajectoryRecord) -> i8 {
    report.predict_with(|Slot(l, s)| record.outcome(l, s))
}

/// `p_R` from outcomes cropped to `window`.
pub fn predict_windowed(report: &KeyMeasurementReport, cropped: &[i8], window: &WindowSpec) -> Result<i8> {
    let n = report.n_sites;
    for &Slot(l, s) in &report.key_set {
        if !window.contains(l, s, n) {
            return Err(Error::WindowTooSmall { layer: l, site: s });
        }
    }
    Ok(report.predict_with(|Slot(l, s)| {
        let col = window.column(s, n).expect("checked above");
        cropped[l * window.width + col]
    }))
}

/// Whether every determined outcome satisfies its constraint.
pub fn check_constraints(report: &KeyMeasurementReport, record: &TrajectoryRecord) -> bool {
    report.constraints.iter().all(|con| {
        let want = con.depends_on.iter().fold(con.c, |acc, &Slot(l, s)| acc * record.outcome(l, s));
        record.outcome(con.slot.0, con.slot.1) == want
    })
}
