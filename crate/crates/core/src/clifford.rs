//! One- and two-qubit Clifford gates in Heisenberg (image-table) form.
//!
//! A gate on `k ≤ 2` qubits is fixed, up to global phase, by the images of
//! the `2k` generators `X_0, Z_0, X_1, Z_1` under conjugation. From those we
//! precompute the image (with sign) of every one of the `4^k` local Pauli
//! patterns, so applying a gate to a tableau row is a single table lookup.
//!
//! Local patterns pack qubit `j` as `x_j` at bit `2j` and `z_j` at bit
//! `2j + 1`.

use rand::Rng;

use crate::pauli::{product_phase, PauliString};

/// Pauli operator on a gate's support, packed as a local pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalPauli {
    pub bits: u8,
    pub minus: bool,
}

impl LocalPauli {
    pub const fn new(bits: u8, minus: bool) -> Self {
        LocalPauli { bits, minus }
    }

    pub fn x(self, j: usize) -> bool {
        (self.bits >> (2 * j)) & 1 == 1
    }

    pub fn z(self, j: usize) -> bool {
        (self.bits >> (2 * j + 1)) & 1 == 1
    }

    fn xs(self) -> u64 {
        ((self.bits & 1) | ((self.bits >> 1) & 2)) as u64
    }

    fn zs(self) -> u64 {
        (((self.bits >> 1) & 1) | ((self.bits >> 2) & 2)) as u64
    }
}

#[inline]
fn local_commute(a: u8, b: u8) -> bool {
    let pa = LocalPauli::new(a, false);
    let pb = LocalPauli::new(b, false);
    ((pa.xs() & pb.zs()) ^ (pa.zs() & pb.xs())).count_ones() % 2 == 0
}

/// Clifford unitary on one or two qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CliffordGate {
    arity: usize,
    images: Vec<LocalPauli>,
    /// image of every local pattern: (pattern, sign flip)
    table: Vec<(u8, bool)>,
}

impl CliffordGate {
    /// Build from generator images `[X_0, Z_0, (X_1, Z_1)]`. Returns `None`
    /// if the images do not preserve the commutation relations.
    pub fn from_images(images: &[LocalPauli]) -> Option<Self> {
        let arity = images.len() / 2;
        if !(arity == 1 || arity == 2) || images.len() != 2 * arity {
            return None;
        }
        let max = 1u8 << (2 * arity);
        if images.iter().any(|p| p.bits == 0 || p.bits >= max) {
            return None;
        }
        let gate = CliffordGate { arity, images: images.to_vec(), table: Vec::new() };
        if !gate.is_symplectic() {
            return None;
        }
        let table = (0..max).map(|q| gate.conjugate_pattern(q)).collect();
        Some(CliffordGate { table, ..gate })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn images(&self) -> &[LocalPauli] {
        &self.images
    }

    /// Commutation relations of the images equal those of the generators.
    pub fn is_symplectic(&self) -> bool {
        let n = self.images.len();
        for a in 0..n {
            for b in a + 1..n {
                let should_anticommute = a / 2 == b / 2;
                if local_commute(self.images[a].bits, self.images[b].bits) == should_anticommute {
                    return false;
                }
            }
        }
        true
    }

    fn conjugate_pattern(&self, q: u8) -> (u8, bool) {
        // Q = i^{#Y} Π_j X_j^{x_j} Z_j^{z_j}
        let mut acc = LocalPauli::new(0, false);
        let mut e: u32 = 0;
        for j in 0..self.arity {
            let x = (q >> (2 * j)) & 1 == 1;
            let z = (q >> (2 * j + 1)) & 1 == 1;
            if x && z {
                e += 1;
            }
            for (present, img) in [(x, self.images[2 * j]), (z, self.images[2 * j + 1])] {
                if present {
                    e += product_phase(&[acc.xs()], &[acc.zs()], &[img.xs()], &[img.zs()]);
                    if img.minus {
                        e += 2;
                    }
                    acc.bits ^= img.bits;
                }
            }
        }
        debug_assert_eq!(e % 2, 0, "image of a Hermitian Pauli must be Hermitian");
        (acc.bits, e % 4 == 2)
    }

    /// Image of a local pattern: `(pattern, sign flip)`.
    #[inline]
    pub fn lookup(&self, pattern: u8) -> (u8, bool) {
        self.table[pattern as usize]
    }

    pub fn inverse(&self) -> CliffordGate {
        let mut inv = Vec::with_capacity(2 * self.arity);
        for j in 0..self.arity {
            for g in [1u8 << (2 * j), 1u8 << (2 * j + 1)] {
                let q = self.table.iter().position(|&(img, _)| img == g).expect("bijective table");
                inv.push(LocalPauli::new(q as u8, self.table[q].1));
            }
        }
        CliffordGate::from_images(&inv).expect("inverse of a Clifford is Clifford")
    }

    /// Conjugate a full Pauli string, acting on `sites`.
    pub fn conjugate(&self, p: &mut PauliString, sites: &[usize]) {
        assert_eq!(sites.len(), self.arity);
        let mut pat = 0u8;
        for (j, &s) in sites.iter().enumerate() {
            pat |= (p.x(s) as u8) << (2 * j) | (p.z(s) as u8) << (2 * j + 1);
        }
        let (img, flip) = self.lookup(pat);
        for (j, &s) in sites.iter().enumerate() {
            p.set(s, (img >> (2 * j)) & 1 == 1, (img >> (2 * j + 1)) & 1 == 1);
        }
        p.set_minus(p.is_minus() ^ flip);
    }

    pub fn identity(arity: usize) -> Self {
        let imgs: Vec<_> = (0..2 * arity).map(|g| LocalPauli::new(1 << g, false)).collect();
        Self::from_images(&imgs).unwrap()
    }

    pub fn hadamard() -> Self {
        Self::from_images(&[LocalPauli::new(0b10, false), LocalPauli::new(0b01, false)]).unwrap()
    }

    pub fn phase() -> Self {
        Self::from_images(&[LocalPauli::new(0b11, false), LocalPauli::new(0b10, false)]).unwrap()
    }

    /// CNOT with control on the first site.
    pub fn cnot() -> Self {
        Self::from_images(&[
            LocalPauli::new(0b0101, false),
            LocalPauli::new(0b0010, false),
            LocalPauli::new(0b0100, false),
            LocalPauli::new(0b1010, false),
        ])
        .unwrap()
    }

    pub fn cz() -> Self {
        Self::from_images(&[
            LocalPauli::new(0b1001, false),
            LocalPauli::new(0b0010, false),
            LocalPauli::new(0b0110, false),
            LocalPauli::new(0b1000, false),
        ])
        .unwrap()
    }

    pub fn swap() -> Self {
        Self::from_images(&[
            LocalPauli::new(0b0100, false),
            LocalPauli::new(0b1000, false),
            LocalPauli::new(0b0001, false),
            LocalPauli::new(0b0010, false),
        ])
        .unwrap()
    }

    /// Compact encoding: 4 bits pattern + 1 sign bit per image.
    pub fn encode(&self) -> Vec<u8> {
        self.images.iter().map(|p| p.bits | ((p.minus as u8) << 7)).collect()
    }
}

/// Uniformly random two-qubit Clifford (11520 elements modulo phase).
///
/// Symplectic part: image of `X_0` among the 15 non-identity patterns, image
/// of `Z_0` among the 8 that anticommute with it, image of `X_1` among the 3
/// non-identity elements of their commutant, image of `Z_1` among the 2 that
/// anticommute with it (15·8·3·2 = 720). Then one independent sign per image.
pub fn random_clifford_2q<R: Rng + ?Sized>(rng: &mut R) -> CliffordGate {
    let x0 = rng.gen_range(1u8..16);
    let z0_choices: Vec<u8> = (1u8..16).filter(|&q| !local_commute(q, x0)).collect();
    let z0 = z0_choices[rng.gen_range(0..z0_choices.len())];
    let comm: Vec<u8> = (1u8..16).filter(|&q| local_commute(q, x0) && local_commute(q, z0)).collect();
    debug_assert_eq!((z0_choices.len(), comm.len()), (8, 3));
    let x1 = comm[rng.gen_range(0..comm.len())];
    let z1_choices: Vec<u8> = comm.iter().copied().filter(|&q| !local_commute(q, x1)).collect();
    let z1 = z1_choices[rng.gen_range(0..z1_choices.len())];
    let signs: u8 = rng.gen_range(0..16);
    let imgs = [x0, z0, x1, z1]
        .iter()
        .enumerate()
        .map(|(i, &b)| LocalPauli::new(b, (signs >> i) & 1 == 1))
        .collect::<Vec<_>>();
    CliffordGate::from_images(&imgs).expect("construction is symplectic")
}
