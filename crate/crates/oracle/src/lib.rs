//! Dense statevector simulator for a handful of qubits.
//!
//! Deliberately naive: amplitudes in a `Vec<Complex<f64>>`, gates as dense
//! matrices, entropies from eigenvalues of reduced density matrices. It
//! shares no code with the stabilizer simulator and serves as its reference.
//!
//! Qubit `q` is bit `q` of the basis index.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix};

pub type C = Complex<f64>;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Pauli string on up to 64 qubits: `(-1)^minus ⊗_q P(x_q, z_q)` with
/// `P(1,0)=X`, `P(0,1)=Z`, `P(1,1)=Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensePauli {
    pub x: u64,
    pub z: u64,
    pub minus: bool,
}

impl DensePauli {
    /// `P|b⟩` for a basis state: amplitude factor and target index.
    fn on_basis(&self, b: usize) -> (C, usize) {
        // Y = i X Z, so apply Z first, then X, and collect one i per Y
        let ys = (self.x & self.z).count_ones();
        let zsign = (self.z & b as u64).count_ones() % 2 == 1;
        let mut phase = match ys % 4 {
            0 => ONE,
            1 => C::new(0.0, 1.0),
            2 => C::new(-1.0, 0.0),
            _ => C::new(0.0, -1.0),
        };
        if zsign ^ self.minus {
            phase = -phase;
        }
        (phase, b ^ self.x as usize)
    }

    /// Dense matrix on `n` qubits.
    pub fn matrix(&self, n: usize) -> DMatrix<C> {
        let d = 1 << n;
        let mut m = DMatrix::from_element(d, d, ZERO);
        for b in 0..d {
            let (ph, t) = self.on_basis(b);
            m[(t, b)] = ph;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Self {
        assert!((1..=14).contains(&n), "dense oracle supports 1..=14 qubits");
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        StateVector { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        for a in &mut self.amps {
            *a /= n;
        }
    }

    /// Apply a `2^k × 2^k` unitary to `sites` (site `j` of the gate is bit
    /// `j` of the local index).
    pub fn apply(&mut self, u: &DMatrix<C>, sites: &[usize]) {
        let k = sites.len();
        assert_eq!(u.nrows(), 1 << k);
        let mask: usize = sites.iter().map(|&s| 1 << s).sum();
        let spread = |local: usize| -> usize {
            sites.iter().enumerate().filter(|(j, _)| local >> j & 1 == 1).map(|(_, &s)| 1 << s).sum()
        };
        let offsets: Vec<usize> = (0..1 << k).map(spread).collect();
        let mut buf = vec![ZERO; 1 << k];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (i, &o) in offsets.iter().enumerate() {
                buf[i] = self.amps[base | o];
            }
            for (r, &o) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (c, &v) in buf.iter().enumerate() {
                    acc += u[(r, c)] * v;
                }
                self.amps[base | o] = acc;
            }
        }
    }

    pub fn apply_pauli(&mut self, p: &DensePauli) {
        let mut out = vec![ZERO; self.amps.len()];
        for (b, &a) in self.amps.iter().enumerate() {
            let (ph, t) = p.on_basis(b);
            out[t] += ph * a;
        }
        self.amps = out;
    }

    /// Probability of outcome `+1` (bit 0) when measuring `Z_q`.
    pub fn prob_plus(&self, q: usize) -> f64 {
        self.amps.iter().enumerate().filter(|(b, _)| b >> q & 1 == 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Project onto outcome `m = ±1` of `Z_q` and renormalize. Returns the
    /// probability of that outcome.
    pub fn project_z(&mut self, q: usize, m: i8) -> f64 {
        let want = if m > 0 { 0 } else { 1 };
        for (b, a) in self.amps.iter_mut().enumerate() {
            if b >> q & 1 != want {
                *a = ZERO;
            }
        }
        let p = self.norm_sqr();
        if p > 0.0 {
            self.normalize();
        }
        p
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, p: &DensePauli) -> f64 {
        let mut acc = ZERO;
        for (b, &a) in self.amps.iter().enumerate() {
            let (ph, t) = p.on_basis(b);
            acc += self.amps[t].conj() * ph * a;
        }
        acc.re
    }

    /// `|⟨a|b⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum::<C>().norm_sqr()
    }

    /// Reduced density matrix of `subset` (ordered; subset position `j` is
    /// bit `j` of the row index).
    pub fn reduced_density(&self, subset: &[usize]) -> DMatrix<C> {
        let k = subset.len();
        let mask: usize = subset.iter().map(|&s| 1 << s).sum();
        let local = |b: usize| -> usize {
            subset.iter().enumerate().map(|(j, &s)| (b >> s & 1) << j).sum()
        };
        let mut rho = DMatrix::from_element(1 << k, 1 << k, ZERO);
        let rest: Vec<usize> = (0..self.amps.len()).filter(|b| b & mask == 0).collect();
        let inside: Vec<usize> = (0..self.amps.len()).filter(|b| b & !mask == 0).collect();
        for &e in &rest {
            for &i in &inside {
                for &j in &inside {
                    rho[(local(i), local(j))] += self.amps[e | i] * self.amps[e | j].conj();
                }
            }
        }
        rho
    }

    /// Von Neumann entropy (bits) of `subset`.
    pub fn entropy(&self, subset: &[usize]) -> f64 {
        let rho = self.reduced_density(subset);
        let eig = rho.symmetric_eigen();
        eig.eigenvalues.iter().filter(|&&l| l > 1e-12).map(|&l| -l * l.log2()).sum()
    }
}

/// Unitary (up to global phase) of a Clifford on `k = images.len()/2`
/// qubits with `U X_j U† = images[2j]` and `U Z_j U† = images[2j+1]`.
pub fn clifford_unitary(images: &[DensePauli]) -> DMatrix<C> {
    let k = images.len() / 2;
    let d = 1 << k;
    // ψ0 spans the joint +1 eigenspace of the Z images
    let mut proj = DMatrix::<C>::identity(d, d);
    for j in 0..k {
        let zj = images[2 * j + 1].matrix(k);
        proj = &proj * (DMatrix::<C>::identity(d, d) + zj) * C::new(0.5, 0.0);
    }
    let col = (0..d)
        .max_by(|&a, &b| proj.column(a).norm().total_cmp(&proj.column(b).norm()))
        .unwrap();
    let psi0 = proj.column(col) / C::new(proj.column(col).norm(), 0.0);
    let mut u = DMatrix::from_element(d, d, ZERO);
    for a in 0..d {
        let mut v = psi0.clone_owned();
        for j in 0..k {
            if a >> j & 1 == 1 {
                v = images[2 * j].matrix(k) * v;
            }
        }
        u.set_column(a, &v);
    }
    u
}

/// Stabilizer state with the given generators, via a product of
/// projectors applied to a basis state with nonzero overlap.
pub fn state_from_stabilizers(n: usize, gens: &[DensePauli]) -> StateVector {
    let d = 1usize << n;
    for seed in 0..d {
        let mut s = StateVector::zero(n);
        s.amps.fill(ZERO);
        s.amps[seed] = ONE;
        for g in gens {
            let mut t = s.clone();
            t.apply_pauli(g);
            for (a, b) in s.amps.iter_mut().zip(&t.amps) {
                *a = (*a + b) * 0.5;
            }
        }
        if s.norm_sqr() > 1e-9 {
            s.normalize();
            return s;
        }
    }
    panic!("generators have no common +1 eigenvector");
}

/// One step of a hybrid circuit.
#[derive(Debug, Clone)]
pub enum Op {
    Gate { unitary: DMatrix<C>, sites: Vec<usize> },
    MeasureZ(usize),
}

/// Exact distribution of the outcome sequences of `ops` on `|0…0⟩`,
/// together with whether each measurement was deterministic on every
/// branch reaching it.
#[derive(Debug, Clone, Default)]
pub struct Branches {
    pub probabilities: BTreeMap<Vec<i8>, f64>,
    /// Per measurement index: `Some(m)` if it always returns `m`, else `None`.
    pub fixed: Vec<Option<i8>>,
    /// Per measurement index: whether it was a coin flip (probability 1/2)
    /// on every branch.
    pub random: Vec<bool>,
}

pub fn enumerate_branches(n: usize, ops: &[Op]) -> Branches {
    let n_meas = ops.iter().filter(|o| matches!(o, Op::MeasureZ(_))).count();
    let mut out = Branches { fixed: vec![None; n_meas], random: vec![true; n_meas], ..Default::default() };
    let mut seen_fixed: Vec<Option<Option<i8>>> = vec![None; n_meas];
    walk(StateVector::zero(n), ops, 0, 1.0, Vec::new(), &mut out, &mut seen_fixed);
    out.fixed = seen_fixed.into_iter().map(|f| f.flatten()).collect();
    out
}

fn walk(
    mut s: StateVector,
    ops: &[Op],
    at: usize,
    p: f64,
    outcomes: Vec<i8>,
    out: &mut Branches,
    fixed: &mut Vec<Option<Option<i8>>>,
) {
    let mut i = at;
    while i < ops.len() {
        match &ops[i] {
            Op::Gate { unitary, sites } => s.apply(unitary, sites),
            Op::MeasureZ(q) => {
                let k = outcomes.len();
                let pp = s.prob_plus(*q);
                let this = if pp > 1.0 - 1e-9 {
                    Some(1)
                } else if pp < 1e-9 {
                    Some(-1)
                } else {
                    None
                };
                if (pp - 0.5).abs() > 1e-9 {
                    out.random[k] = false;
                }
                fixed[k] = match fixed[k] {
                    None => Some(this),
                    Some(prev) if prev == this => Some(prev),
                    Some(_) => Some(None),
                };
                for m in [1i8, -1] {
                    let pm = if m > 0 { pp } else { 1.0 - pp };
                    if pm < 1e-9 {
                        continue;
                    }
                    let mut t = s.clone();
                    t.project_z(*q, m);
                    let mut o = outcomes.clone();
                    o.push(m);
                    walk(t, ops, i + 1, p * pm, o, out, fixed);
                }
                return;
            }
        }
        i += 1;
    }
    *out.probabilities.entry(outcomes).or_insert(0.0) += p;
}

/// Total-variation distance between an exact distribution and empirical
/// counts.
pub fn tvd(exact: &BTreeMap<Vec<i8>, f64>, counts: &BTreeMap<Vec<i8>, u64>) -> f64 {
    let total: u64 = counts.values().sum();
    let mut keys: Vec<&Vec<i8>> = exact.keys().chain(counts.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| {
            let p = exact.get(k).copied().unwrap_or(0.0);
            let q = counts.get(k).copied().unwrap_or(0) as f64 / total as f64;
            (p - q).abs()
        })
        .sum::<f64>()
}
