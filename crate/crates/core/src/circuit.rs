//! Seeded brickwall hybrid circuits.
//!
//! Layer `ℓ` applies random two-qubit Cliffords on pairs `(2i, 2i+1)` for
//! even `ℓ` and `(2i+1, 2i+2 mod L)` for odd `ℓ`, followed by a round of `Z`
//! measurements where each site is measured independently with
//! probability `p`. The gate at `(ℓ, leftmost site)` and the coin at
//! `(ℓ, site)` come from their own counter-keyed streams, so any strip of a
//! circuit can be regenerated without building the rest.

use serde::{Deserialize, Serialize};

use crate::clifford::{random_clifford_2q, CliffordGate};
use crate::error::{Error, Result};
use crate::rng::{hash_key, stream, tag, unit_from_key};
use crate::tableau::{StabilizerState, SignBit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitState {
    #[default]
    Product,
    Scrambled,
}

impl std::str::FromStr for InitState {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "product" => Ok(InitState::Product),
            "scrambled" => Ok(InitState::Scrambled),
            other => Err(format!("unknown init state '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    /// Only produced for strips cut out of a larger circuit.
    Open,
}

fn default_true() -> bool {
    true
}

/// Everything needed to regenerate a circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    /// Number of system qubits (even).
    #[serde(rename = "L")]
    pub n_sites: usize,
    /// Number of layers.
    #[serde(rename = "T")]
    pub depth: usize,
    /// Measurement rate.
    pub p: f64,
    pub circuit_seed: u64,
    #[serde(default)]
    pub init: InitState,
    /// Site entangled with the reference; `L/2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_site: Option<usize>,
    /// Whether the last unitary layer is followed by a measurement round.
    #[serde(default = "default_true")]
    pub final_measurement_round: bool,
    #[serde(default, skip_serializing_if = "is_periodic")]
    pub boundary: Boundary,
}

fn is_periodic(b: &Boundary) -> bool {
    *b == Boundary::Periodic
}

impl CircuitSpec {
    pub fn new(n_sites: usize, depth: usize, p: f64, circuit_seed: u64) -> Self {
        CircuitSpec {
            n_sites,
            depth,
            p,
            circuit_seed,
            init: InitState::Product,
            ref_site: None,
            final_measurement_round: true,
            boundary: Boundary::Periodic,
        }
    }

    pub fn with_init(mut self, init: InitState) -> Self {
        self.init = init;
        self
    }

    pub fn ref_site(&self) -> usize {
        self.ref_site.unwrap_or(self.n_sites / 2)
    }

    /// Index of the reference qubit in the tableau.
    pub fn reference_index(&self) -> usize {
        self.n_sites
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            return Err(Error::InvalidSpec(format!("L must be even and >= 2, got {}", self.n_sites)));
        }
        if self.depth == 0 {
            return Err(Error::InvalidSpec("T must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidSpec(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if self.ref_site() >= self.n_sites {
            return Err(Error::InvalidSpec(format!("ref_site {} >= L", self.ref_site())));
        }
        if self.n_sites > u16::MAX as usize || self.depth > u16::MAX as usize {
            return Err(Error::InvalidSpec("L and T must fit in 16 bits".into()));
        }
        Ok(())
    }
}

/// A gate placed on two neighbouring sites. `left` is the leftmost site in
/// the brickwall sense (`L-1` for the wrap-around gate).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedGate {
    pub left: usize,
    pub sites: [usize; 2],
    pub gate: CliffordGate,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layer {
    pub gates: Vec<PlacedGate>,
    /// Measured sites, ascending (this is also the order of measurement).
    pub measured: Vec<usize>,
}

/// Where a strip circuit sits inside its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StripOrigin {
    pub parent_sites: usize,
    /// Parent site of strip column 0.
    pub offset: usize,
}

/// Fully expanded circuit. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitInstance {
    pub spec: CircuitSpec,
    pub layers: Vec<Layer>,
    /// Unitary-only layers applied before the reference is entangled.
    pub scramble: Vec<Vec<PlacedGate>>,
    pub origin: Option<StripOrigin>,
}

fn brickwall_pairs(n: usize, layer: usize) -> impl Iterator<Item = (usize, usize)> {
    let shift = layer % 2;
    (0..n / 2).map(move |i| {
        let a = 2 * i + shift;
        (a, (a + 1) % n)
    })
}

fn unitary_layer(seed: u64, role: u64, n: usize, layer: usize) -> Vec<PlacedGate> {
    brickwall_pairs(n, layer)
        .map(|(a, b)| PlacedGate {
            left: a,
            sites: [a, b],
            gate: random_clifford_2q(&mut stream(&[role, seed, layer as u64, a as u64])),
        })
        .collect()
}

/// Expand a spec into gates and measurement sites.
pub fn build_circuit(spec: &CircuitSpec) -> Result<CircuitInstance> {
    spec.validate()?;
    if spec.boundary != Boundary::Periodic {
        return Err(Error::InvalidSpec("full circuits use periodic boundaries".into()));
    }
    let n = spec.n_sites;
    let seed = spec.circuit_seed;
    let layers = (0..spec.depth)
        .map(|l| {
            let gates = unitary_layer(seed, tag::GATE, n, l);
            let measured = if !spec.final_measurement_round && l + 1 == spec.depth {
                Vec::new()
            } else {
                (0..n).filter(|&s| unit_from_key(&[tag::MEAS, seed, l as u64, s as u64]) < spec.p).collect()
            };
            Layer { gates, measured }
        })
        .collect();
    let scramble = match spec.init {
        InitState::Product => Vec::new(),
        InitState::Scrambled => scramble_layers(spec),
    };
    Ok(CircuitInstance { spec: spec.clone(), layers, scramble, origin: None })
}

/// `T_s = L` measurement-free brickwall layers keyed by the circuit seed.
pub fn scramble_layers(spec: &CircuitSpec) -> Vec<Vec<PlacedGate>> {
    (0..spec.n_sites).map(|l| unitary_layer(spec.circuit_seed, tag::SCRAMBLE, spec.n_sites, l)).collect()
}

impl CircuitInstance {
    pub fn n_sites(&self) -> usize {
        self.spec.n_sites
    }

    pub fn depth(&self) -> usize {
        self.spec.depth
    }

    pub fn ref_site(&self) -> usize {
        self.spec.ref_site()
    }

    /// Qubits in the tableau: system plus reference.
    pub fn n_total(&self) -> usize {
        self.spec.n_sites + 1
    }

    /// Measurement slots `(layer, site)` in execution order.
    pub fn slots(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| layer.measured.iter().map(move |&s| (l, s)))
            .collect()
    }

    pub fn num_measurements(&self) -> usize {
        self.layers.iter().map(|l| l.measured.len()).sum()
    }

    /// Apply the scrambling prefix (no-op for product initial states).
    pub fn scramble_initial<S: SignBit>(&self, state: &mut StabilizerState<S>) {
        for layer in &self.scramble {
            for g in layer {
                state.apply_gate_unchecked(&g.gate, &g.sites);
            }
        }
    }

    /// Bell pair between `ref_site` and the reference qubit (last index).
    pub fn entangle_reference<S: SignBit>(&self, state: &mut StabilizerState<S>) {
        let r = self.ref_site();
        state.apply_gate_unchecked(&CliffordGate::hadamard(), &[r]);
        state.apply_gate_unchecked(&CliffordGate::cnot(), &[r, self.spec.reference_index()]);
    }

    /// Canonical byte encoding of the whole instance.
    pub fn to_bytes(&self) -> Vec<u8> {
        let s = &self.spec;
        let mut out = Vec::new();
        for v in [s.n_sites as u64, s.depth as u64, s.p.to_bits(), s.circuit_seed, s.ref_site() as u64] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(s.init as u8);
        out.push(s.final_measurement_round as u8);
        out.push(s.boundary as u8);
        let put_gates = |out: &mut Vec<u8>, gates: &[PlacedGate]| {
            out.extend_from_slice(&(gates.len() as u32).to_le_bytes());
            for g in gates {
                for v in [g.left, g.sites[0], g.sites[1]] {
                    out.extend_from_slice(&(v as u32).to_le_bytes());
                }
                out.extend_from_slice(&g.gate.encode());
            }
        };
        for layer in &self.scramble {
            put_gates(&mut out, layer);
        }
        for layer in &self.layers {
            put_gates(&mut out, &layer.gates);
            out.extend_from_slice(&(layer.measured.len() as u32).to_le_bytes());
            for &m in &layer.measured {
                out.extend_from_slice(&(m as u32).to_le_bytes());
            }
        }
        out
    }

    /// 64-bit hash of [`CircuitInstance::to_bytes`].
    pub fn fingerprint(&self) -> u64 {
        let words: Vec<u64> = self
            .to_bytes()
            .chunks(8)
            .map(|c| {
                let mut b = [0u8; 8];
                b[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(b)
            })
            .collect();
        hash_key(&words)
    }
}

/// Cut a width-`strip` circuit centred on the reference site. Gates fully
/// inside the strip and measurement sites inside it are copied verbatim;
/// gates straddling the edge are dropped. Sites are relabelled so that strip
/// column 0 is parent site `ref_site − ⌊(strip−1)/2⌋`, the first column of a
/// strip-wide [`WindowSpec`](crate::trajectory::WindowSpec) centred on the reference site.
pub fn derive_subcircuit(parent: &CircuitInstance, strip: usize) -> Result<CircuitInstance> {
    let n = parent.n_sites();
    if strip % 2 != 0 || strip < 4 || strip > n {
        return Err(Error::InvalidArgument(format!("strip width {strip} must be even and in [4, {n}]")));
    }
    let offset = (parent.ref_site() + n - (strip - 1) / 2) % n;
    let local = |s: usize| (s + n - offset) % n;
    let keep_all = strip == n && parent.spec.boundary == Boundary::Periodic;
    let map_gates = |gates: &[PlacedGate]| -> Vec<PlacedGate> {
        gates
            .iter()
            .filter_map(|g| {
                let (a, b) = (local(g.sites[0]), local(g.sites[1]));
                let inside = a < strip && b < strip && (keep_all || b == a + 1);
                inside.then(|| PlacedGate { left: a, sites: [a, b], gate: g.gate.clone() })
            })
            .collect()
    };
    let layers = parent
        .layers
        .iter()
        .map(|layer| {
            let mut measured: Vec<usize> = layer.measured.iter().map(|&s| local(s)).filter(|&s| s < strip).collect();
            measured.sort_unstable();
            Layer { gates: map_gates(&layer.gates), measured }
        })
        .collect();
    let scramble = parent.scramble.iter().map(|l| map_gates(l)).collect();
    let mut spec = parent.spec.clone();
    spec.n_sites = strip;
    spec.ref_site = Some((strip - 1) / 2);
    spec.boundary = if keep_all { Boundary::Periodic } else { Boundary::Open };
    let origin = match parent.origin {
        None => StripOrigin { parent_sites: n, offset },
        Some(o) => StripOrigin { parent_sites: o.parent_sites, offset: (o.offset + offset) % o.parent_sites },
    };
    Ok(CircuitInstance { spec, layers, scramble, origin: Some(origin) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, t: usize, p: f64, seed: u64) -> CircuitInstance {
        build_circuit(&CircuitSpec::new(n, t, p, seed)).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(build_circuit(&CircuitSpec::new(5, 4, 0.1, 0)).is_err());
        assert!(build_circuit(&CircuitSpec::new(4, 0, 0.1, 0)).is_err());
        assert!(build_circuit(&CircuitSpec::new(4, 4, 1.5, 0)).is_err());
        let mut s = CircuitSpec::new(4, 4, 0.1, 0);
        s.ref_site = Some(4);
        assert!(build_circuit(&s).is_err());
    }

    #[test]
    fn brickwall_layout() {
        let c = inst(8, 3, 0.0, 1);
        let pairs: Vec<_> = c.layers[0].gates.iter().map(|g| g.sites).collect();
        assert_eq!(pairs, vec![[0, 1], [2, 3], [4, 5], [6, 7]]);
        let pairs: Vec<_> = c.layers[1].gates.iter().map(|g| g.sites).collect();
        assert_eq!(pairs, vec![[1, 2], [3, 4], [5, 6], [7, 0]]);
        assert_eq!(c.layers[1].gates[3].left, 7);
    }

    #[test]
    fn measurement_rate_extremes() {
        let c = inst(8, 5, 0.0, 2);
        assert!(c.layers.iter().all(|l| l.measured.is_empty()));
        let c = inst(8, 5, 1.0, 2);
        assert!(c.layers.iter().all(|l| l.measured == (0..8).collect::<Vec<_>>()));
        let mut s = CircuitSpec::new(8, 5, 1.0, 2);
        s.final_measurement_round = false;
        let c = build_circuit(&s).unwrap();
        assert!(c.layers[4].measured.is_empty());
        assert_eq!(c.layers[3].measured.len(), 8);
    }

    #[test]
    fn seeds_determine_instances() {
        let a = inst(16, 6, 0.3, 42);
        let b = inst(16, 6, 0.3, 42);
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_eq!(a, b);
        let c = inst(16, 6, 0.3, 43);
        assert_ne!(a.layers[0].gates, c.layers[0].gates);
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn measurement_frequency_tracks_p() {
        let c = inst(64, 200, 0.3, 3);
        let frac = c.num_measurements() as f64 / (64.0 * 200.0);
        // 5 sigma for 12800 Bernoulli(0.3) draws is 0.02
        assert!((frac - 0.3).abs() < 0.02, "{frac}");
    }

    #[test]
    fn reference_is_entangled() {
        for init in [InitState::Product, InitState::Scrambled] {
            let c = build_circuit(&CircuitSpec::new(8, 2, 0.2, 5).with_init(init)).unwrap();
            let mut st = StabilizerState::<bool>::new(c.n_total()).unwrap();
            c.scramble_initial(&mut st);
            c.entangle_reference(&mut st);
            assert_eq!(st.subsystem_entropy(&[8]).unwrap(), 1);
            // Z_ref_site Z_ref is a stabilizer: entropy of the pair drops only if
            // the partner was unentangled, so check directly for product init
            if init == InitState::Product {
                let canon = StabilizerState::canonical_stabilizers(&st);
                assert!(canon.iter().any(|p| p.to_string() == "+IIIIZIIIZ"));
            }
        }
    }

    #[test]
    fn scrambling_entangles_half_chain_and_inverts() {
        let spec = CircuitSpec::new(16, 1, 0.0, 6).with_init(InitState::Scrambled);
        let c = build_circuit(&spec).unwrap();
        assert_eq!(c.scramble.len(), 16);
        let mut st = StabilizerState::<bool>::new(c.n_total()).unwrap();
        c.scramble_initial(&mut st);
        let half = st.subsystem_entropy(&(0..8).collect::<Vec<_>>()).unwrap();
        assert!(half >= 5, "half-chain entropy {half}");
        for layer in c.scramble.iter().rev() {
            for g in layer.iter().rev() {
                st.apply_gate(&g.gate.inverse(), &g.sites).unwrap();
            }
        }
        let zero = StabilizerState::<bool>::new(c.n_total()).unwrap();
        assert_eq!(st.canonical_stabilizers(), zero.canonical_stabilizers());
        let other = build_circuit(&CircuitSpec { circuit_seed: 7, ..spec }).unwrap();
        assert_ne!(c.scramble, other.scramble);
    }

    #[test]
    fn full_width_strip_keeps_every_gate() {
        let p = inst(16, 6, 0.3, 8);
        let s = derive_subcircuit(&p, 16).unwrap();
        assert_eq!(s.spec.boundary, Boundary::Periodic);
        let off = s.origin.unwrap().offset;
        let up = |x: usize| (x + off) % 16;
        for (a, b) in p.layers.iter().zip(&s.layers) {
            let mut ga: Vec<_> = a.gates.iter().map(|g| (g.sites, g.gate.encode())).collect();
            let mut gb: Vec<_> = b.gates.iter().map(|g| ([up(g.sites[0]), up(g.sites[1])], g.gate.encode())).collect();
            ga.sort();
            gb.sort();
            assert_eq!(ga, gb);
            let mut mb: Vec<usize> = b.measured.iter().map(|&x| up(x)).collect();
            mb.sort_unstable();
            assert_eq!(a.measured, mb);
        }
        assert_eq!(up(s.ref_site()), p.ref_site());
    }

    #[test]
    fn narrow_strip_copies_gates_verbatim() {
        let p = inst(32, 8, 0.3, 9);
        let s = derive_subcircuit(&p, 4).unwrap();
        let off = s.origin.unwrap().offset;
        assert_eq!(off, 15);
        assert_eq!(s.ref_site(), 1);
        for (l, (pl, sl)) in p.layers.iter().zip(&s.layers).enumerate() {
            for g in &sl.gates {
                let parent_left = (g.left + off) % 32;
                let pg = pl.gates.iter().find(|x| x.left == parent_left).expect("gate exists in parent");
                assert_eq!(pg.gate, g.gate, "layer {l}");
                assert_eq!(g.sites[1], g.sites[0] + 1);
            }
            let expect: Vec<usize> = pl.measured.iter().filter(|&&x| (15..19).contains(&x)).map(|x| x - 15).collect();
            assert_eq!(sl.measured, expect);
        }
        // even layers: only (16,17) inside; odd layers: (15,16) and (17,18)
        assert_eq!(s.layers[0].gates.len(), 1);
        assert_eq!(s.layers[1].gates.len(), 2);
    }

    #[test]
    fn strips_nest() {
        let p = inst(32, 6, 0.4, 10);
        for &(big, small) in &[(20, 8), (12, 4), (32, 12)] {
            let direct = derive_subcircuit(&p, small).unwrap();
            let nested = derive_subcircuit(&derive_subcircuit(&p, big).unwrap(), small).unwrap();
            assert_eq!(direct.layers, nested.layers);
            assert_eq!(direct.origin, nested.origin);
        }
        assert!(derive_subcircuit(&p, 5).is_err());
        assert!(derive_subcircuit(&p, 2).is_err());
        assert!(derive_subcircuit(&p, 34).is_err());
    }
}
