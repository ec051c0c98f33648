//! Translation of circuits into dense-oracle programs.

use mipt_core::circuit::CircuitInstance;
use mipt_core::clifford::CliffordGate;
use mipt_core::pauli::PauliString;
use mipt_oracle::{clifford_unitary, DensePauli, Op};

pub fn dense_pauli(p: &PauliString) -> DensePauli {
    let mut out = DensePauli { x: 0, z: 0, minus: p.is_minus() };
    for q in 0..p.num_qubits() {
        out.x |= (p.x(q) as u64) << q;
        out.z |= (p.z(q) as u64) << q;
    }
    out
}

pub fn gate_op(g: &CliffordGate, sites: &[usize]) -> Op {
    let images: Vec<DensePauli> = g
        .images()
        .iter()
        .map(|img| {
            let mut d = DensePauli { x: 0, z: 0, minus: img.minus };
            for j in 0..g.arity() {
                d.x |= (img.x(j) as u64) << j;
                d.z |= (img.z(j) as u64) << j;
            }
            d
        })
        .collect();
    Op::Gate { unitary: clifford_unitary(&images), sites: sites.to_vec() }
}

/// Scramble, Bell pair with the reference, then the hybrid layers.
pub fn circuit_ops(c: &CircuitInstance) -> Vec<Op> {
    let mut ops = Vec::new();
    for layer in &c.scramble {
        ops.extend(layer.iter().map(|g| gate_op(&g.gate, &g.sites)));
    }
    ops.push(gate_op(&CliffordGate::hadamard(), &[c.ref_site()]));
    ops.push(gate_op(&CliffordGate::cnot(), &[c.ref_site(), c.n_sites()]));
    for layer in &c.layers {
        ops.extend(layer.gates.iter().map(|g| gate_op(&g.gate, &g.sites)));
        ops.extend(layer.measured.iter().map(|&s| Op::MeasureZ(s)));
    }
    ops
}
