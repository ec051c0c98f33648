//! Pauli strings in symplectic (x|z) form with a ±1 sign.
//!
//! A string with bits `(x_j, z_j)` and sign bit `s` denotes
//! `(-1)^s ⊗_j P(x_j, z_j)` with `P(1,0)=X`, `P(0,1)=Z`, `P(1,1)=Y`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::gf2::{get_bit, set_bit, words_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn from_bits(x: bool, z: bool) -> Option<Axis> {
        match (x, z) {
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
            (false, false) => None,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Axis::X => (true, false),
            Axis::Y => (true, true),
            Axis::Z => (false, true),
        }
    }

    /// Wire code used by the dataset format.
    pub fn code(self) -> u8 {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Axis> {
        match c {
            0 => Some(Axis::X),
            1 => Some(Axis::Y),
            2 => Some(Axis::Z),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Exponent `k` (mod 4) such that `A·B = i^k (-1)^(sa+sb) C` for the
/// symplectic product `C = A ⊕ B`, summed over the given words. Signs of the
/// operands are not included.
#[inline]
pub fn product_phase(xa: &[u64], za: &[u64], xb: &[u64], zb: &[u64]) -> u32 {
    let mut plus = 0u32;
    let mut minus = 0u32;
    for w in 0..xa.len() {
        let (x1, z1, x2, z2) = (xa[w], za[w], xb[w], zb[w]);
        let xo1 = x1 & !z1;
        let yo1 = x1 & z1;
        let zo1 = !x1 & z1;
        let xo2 = x2 & !z2;
        let yo2 = x2 & z2;
        let zo2 = !x2 & z2;
        plus += ((xo1 & yo2) | (yo1 & zo2) | (zo1 & xo2)).count_ones();
        minus += ((xo1 & zo2) | (yo1 & xo2) | (zo1 & yo2)).count_ones();
    }
    (plus + 4 * xa.len() as u32 * 64 - minus) % 4
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    minus: bool,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        PauliString { n, x: vec![0; w], z: vec![0; w], minus: false }
    }

    pub fn single(n: usize, q: usize, axis: Axis) -> Self {
        let mut p = Self::identity(n);
        let (x, z) = axis.bits();
        p.set(q, x, z);
        p
    }

    /// Build from raw words. Bits beyond `n` must be zero.
    pub fn from_words(n: usize, x: Vec<u64>, z: Vec<u64>, minus: bool) -> Self {
        debug_assert_eq!(x.len(), words_for(n));
        PauliString { n, x, z, minus }
    }

    /// Parse `"+XIZY"` / `"-ZZ"`; qubit 0 is the first letter.
    pub fn parse(s: &str) -> Option<Self> {
        let (minus, body) = match s.as_bytes().first()? {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let mut p = Self::identity(body.len());
        p.minus = minus;
        for (q, c) in body.chars().enumerate() {
            let (x, z) = match c {
                'I' | '_' => (false, false),
                'X' => (true, false),
                'Y' => (true, true),
                'Z' => (false, true),
                _ => return None,
            };
            p.set(q, x, z);
        }
        Some(p)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn is_minus(&self) -> bool {
        self.minus
    }

    pub fn set_minus(&mut self, minus: bool) {
        self.minus = minus;
    }

    pub fn x(&self, q: usize) -> bool {
        get_bit(&self.x, q)
    }

    pub fn z(&self, q: usize) -> bool {
        get_bit(&self.z, q)
    }

    pub fn set(&mut self, q: usize, x: bool, z: bool) {
        set_bit(&mut self.x, q, x);
        set_bit(&mut self.z, q, z);
    }

    pub fn axis_at(&self, q: usize) -> Option<Axis> {
        Axis::from_bits(self.x(q), self.z(q))
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// Symplectic form: `true` iff the two strings commute.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let mut acc = 0u32;
        for w in 0..self.x.len() {
            acc ^= ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones() & 1;
        }
        acc == 0
    }

    /// `self · other`, returned together with the residual power of `i`
    /// (0 or 2 for commuting operands, 1 or 3 otherwise; 2 is folded into
    /// the sign, so the returned power is 0 or 1).
    pub fn mul(&self, other: &PauliString) -> (PauliString, u32) {
        assert_eq!(self.n, other.n);
        let k = product_phase(&self.x, &self.z, &other.x, &other.z);
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        let minus = self.minus ^ other.minus ^ (k >= 2);
        (PauliString { n: self.n, x, z, minus }, k % 2)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.minus { '-' } else { '+' })?;
        for q in 0..self.n {
            let c = match self.axis_at(q) {
                None => 'I',
                Some(a) => a.letter(),
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    #[test]
    fn single_qubit_products() {
        // XZ = -iY, ZX = iY, XY = iZ, YX = -iZ
        let (r, k) = p("X").mul(&p("Z"));
        assert_eq!((r.to_string(), k), ("-Y".into(), 1));
        let (r, k) = p("Z").mul(&p("X"));
        assert_eq!((r.to_string(), k), ("+Y".into(), 1));
        let (r, k) = p("X").mul(&p("Y"));
        assert_eq!((r.to_string(), k), ("+Z".into(), 1));
        let (r, k) = p("Y").mul(&p("Y"));
        assert_eq!((r.to_string(), k), ("+I".into(), 0));
    }

    #[test]
    fn commuting_products_are_real() {
        // (XX)(ZZ) = (XZ)(XZ) = (-iY)(-iY) = -YY
        let (r, k) = p("XX").mul(&p("ZZ"));
        assert_eq!((r.to_string(), k), ("-YY".into(), 0));
    }

    fn pauli_from(bits: &[(bool, bool)]) -> PauliString {
        let mut q = PauliString::identity(bits.len());
        for (i, &(x, z)) in bits.iter().enumerate() {
            q.set(i, x, z);
        }
        q
    }

    proptest! {
        #[test]
        fn symplectic_form_matches_qubitwise_definition(
            a in proptest::collection::vec((any::<bool>(), any::<bool>()), 70),
            b in proptest::collection::vec((any::<bool>(), any::<bool>()), 70),
        ) {
            let pa = pauli_from(&a);
            let pb = pauli_from(&b);
            // count qubits where both are non-identity and differ
            let anti = a.iter().zip(&b).filter(|(u, v)| {
                (u.0 || u.1) && (v.0 || v.1) && u != v
            }).count();
            prop_assert_eq!(pa.commutes_with(&pb), anti % 2 == 0);
            let (_, k) = pa.mul(&pb);
            prop_assert_eq!(k == 0, anti % 2 == 0);
        }
    }
}
