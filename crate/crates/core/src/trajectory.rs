//! Running circuits into labelled outcome matrices.

use serde::{Deserialize, Serialize};

use crate::circuit::{build_circuit, CircuitInstance, CircuitSpec};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::pauli::Axis;
use crate::rng::{hash_key, tag, BitStream};
use crate::tableau::{RefStatus, Tableau};

/// One run of a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryRecord {
    pub n_sites: usize,
    pub depth: usize,
    /// `depth × n_sites`, row-major; 0 marks an unmeasured site.
    pub outcomes: Vec<i8>,
    /// First layer (1-based) after which the reference is pure.
    pub t_p: Option<usize>,
    pub axis: Option<Axis>,
    pub label: Option<i8>,
    pub trajectory_seed: u64,
}

impl TrajectoryRecord {
    pub fn outcome(&self, layer: usize, site: usize) -> i8 {
        self.outcomes[layer * self.n_sites + site]
    }
}

/// Extra per-run detail used by tests and the experiments.
#[derive(Debug, Clone)]
pub struct Trace {
    pub record: TrajectoryRecord,
    /// Per measurement slot, in execution order.
    pub determined: Vec<bool>,
    /// Outcome of measuring the reference in `Z` after the last layer, when
    /// requested. Random for a mixed reference.
    pub reference_z: Option<i8>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Stop as soon as the reference purifies (outcomes after that stay 0).
    pub stop_at_purification: bool,
    pub measure_reference_z: bool,
    /// Run the tableau validator after every layer.
    pub validate: bool,
    /// Invert the outcome of the `k`-th undetermined measurement, leaving
    /// every other random draw as it was (counterfactual replays).
    pub flip: Option<usize>,
}

fn trajectory_stream(instance: &CircuitInstance, trajectory_seed: u64) -> BitStream {
    BitStream::from_key(&[tag::TRAJECTORY, instance.spec.circuit_seed, trajectory_seed])
}

/// Run `instance` once: scramble, entangle the reference, then alternate
/// gate layers and measurement rounds.
pub fn run_trajectory(instance: &CircuitInstance, trajectory_seed: u64) -> TrajectoryRecord {
    simulate(instance, trajectory_seed, RunOptions::default()).record
}

pub fn simulate(instance: &CircuitInstance, trajectory_seed: u64, opts: RunOptions) -> Trace {
    let n = instance.n_sites();
    let depth = instance.depth();
    let reference = n;
    let mut tab = Tableau::new(n + 1, trajectory_stream(instance, trajectory_seed)).expect("n >= 2");
    {
        let state = tab.state_mut();
        instance.scramble_initial(state);
        instance.entangle_reference(state);
    }
    let mut outcomes = vec![0i8; depth * n];
    let mut determined = Vec::with_capacity(instance.num_measurements());
    let mut t_p = None;
    let mut random_count = 0usize;
    for (l, layer) in instance.layers.iter().enumerate() {
        for g in &layer.gates {
            tab.apply_gate_unchecked(&g.gate, &g.sites);
        }
        for &s in &layer.measured {
            let (m, det) = match opts.flip {
                Some(k) if k == random_count && !tab.state().is_z_determined(s) => tab.measure_z_flipped(s),
                _ => tab.measure_z(s),
            }
            .expect("site in range");
            if !det {
                random_count += 1;
            }
            outcomes[l * n + s] = m;
            determined.push(det);
        }
        if opts.validate {
            if let Err(e) = tab.validate() {
                panic!("tableau invariant broken after layer {l}: {e}");
            }
        }
        if t_p.is_none() && tab.state().single_site_entropy(reference) == 0 {
            t_p = Some(l + 1);
            if opts.stop_at_purification {
                break;
            }
        }
    }
    let (axis, label) = match tab.ref_status() {
        RefStatus::Mixed => (None, None),
        RefStatus::Purified { axis, sign } => (Some(axis), Some(sign)),
    };
    debug_assert_eq!(axis.is_some(), t_p.is_some());
    let reference_z = opts.measure_reference_z.then(|| tab.measure_z(reference).expect("in range").0);
    Trace {
        record: TrajectoryRecord { n_sites: n, depth, outcomes, t_p, axis, label, trajectory_seed },
        determined,
        reference_z,
    }
}

/// Crop descriptor: layers `0..depth` and sites
/// `center − ⌊(width−1)/2⌋ ..= center + ⌊width/2⌋` (periodic wrap).
///
/// Even widths extend one site further to the right, matching the
/// brickwall, whose first layer pairs an even site with its right
/// neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowSpec {
    pub center: usize,
    pub width: usize,
    pub depth: usize,
}

impl WindowSpec {
    /// The whole circuit.
    pub fn full(n_sites: usize, depth: usize) -> Self {
        WindowSpec { center: (n_sites - 1) / 2, width: n_sites, depth }
    }

    pub fn validate(&self, n_sites: usize, depth: usize) -> Result<()> {
        if self.width == 0 || self.width > n_sites || self.depth == 0 || self.depth > depth || self.center >= n_sites {
            return Err(Error::InvalidArgument(format!(
                "window {self:?} does not fit a {depth}x{n_sites} circuit"
            )));
        }
        Ok(())
    }

    /// Circuit site of window column `col`.
    pub fn site(&self, col: usize, n_sites: usize) -> usize {
        (self.center + n_sites - (self.width - 1) / 2 + col) % n_sites
    }

    /// Window column of a circuit site, if inside.
    pub fn column(&self, site: usize, n_sites: usize) -> Option<usize> {
        let col = (site + n_sites + (self.width - 1) / 2 - self.center) % n_sites;
        (col < self.width).then_some(col)
    }

    pub fn contains(&self, layer: usize, site: usize, n_sites: usize) -> bool {
        layer < self.depth && self.column(site, n_sites).is_some()
    }

    /// Crop a full `depth × n_sites` outcome matrix.
    pub fn crop(&self, outcomes: &[i8], n_sites: usize) -> Vec<i8> {
        let mut out = Vec::with_capacity(self.depth * self.width);
        for l in 0..self.depth {
            let row = &outcomes[l * n_sites..(l + 1) * n_sites];
            out.extend((0..self.width).map(|c| row[self.site(c, n_sites)]));
        }
        out
    }
}

/// Light-cone box parameters: spread `velocity` sites per layer on each
/// side plus `padding` extra sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightCone {
    pub velocity: usize,
    pub padding: usize,
}

impl Default for LightCone {
    fn default() -> Self {
        LightCone { velocity: 1, padding: 2 }
    }
}

/// Box around the reference partner up to the purification time.
pub fn lightcone_window(instance: &CircuitInstance, t_p: usize, cone: LightCone) -> WindowSpec {
    let n = instance.n_sites();
    WindowSpec {
        center: instance.ref_site(),
        width: n.min(2 * cone.velocity * t_p + cone.padding),
        depth: t_p.clamp(1, instance.depth()),
    }
}

/// Empirical distribution of the purification time over fresh circuits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationHistogram {
    pub n_sites: usize,
    pub depth: usize,
    pub p: f64,
    /// `counts[t-1]` circuits purified after exactly `t` layers.
    pub counts: Vec<u64>,
    pub unpurified: u64,
}

impl PurificationHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.unpurified
    }

    /// `r_p(t)` for `t = 1..=T`.
    pub fn mass(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn unpurified_mass(&self) -> f64 {
        self.unpurified as f64 / self.total() as f64
    }

    /// `R_p(t) = Σ_{s ≤ t} r_p(s)`, for `t = 0..=T`.
    pub fn purified_fraction(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for m in self.mass() {
            acc += m;
            out.push(acc);
        }
        out
    }

    /// Exact mean reference entropy `S_Q(t) = 1 − R_p(t)`, `t = 0..=T`.
    pub fn coherent_info(&self) -> Vec<f64> {
        let n = self.total();
        let mut left = n;
        let mut out = vec![1.0];
        for &c in &self.counts {
            left -= c;
            out.push(left as f64 / n as f64);
        }
        out
    }

    /// Median purification time with unpurified circuits ranked last.
    pub fn median_t_p(&self) -> Option<usize> {
        let half = self.total().div_ceil(2);
        let mut acc = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            acc += c;
            if acc >= half {
                return Some(i + 1);
            }
        }
        None
    }
}

/// Seed of the `index`-th circuit of a family.
pub fn family_seed(base_seed: u64, index: u64) -> u64 {
    hash_key(&[tag::CIRCUIT, base_seed, index])
}

/// Purification time of one circuit (trajectory-independent for Clifford
/// dynamics, so one shot suffices).
pub fn purification_time(instance: &CircuitInstance) -> Option<usize> {
    simulate(instance, 0, RunOptions { stop_at_purification: true, ..Default::default() }).record.t_p
}

/// `r_p` over `n_circuits` fresh circuits with one trajectory each.
pub fn purification_histogram(
    n_sites: usize,
    depth: usize,
    p: f64,
    n_circuits: usize,
    base_seed: u64,
    exec: Exec,
) -> Result<PurificationHistogram> {
    if n_circuits == 0 {
        return Err(Error::InvalidArgument("need at least one circuit".into()));
    }
    CircuitSpec::new(n_sites, depth, p, 0).validate()?;
    let times = par::map_range(exec, n_circuits, |i| {
        let spec = CircuitSpec::new(n_sites, depth, p, family_seed(base_seed, i as u64));
        purification_time(&build_circuit(&spec).expect("validated"))
    });
    let mut counts = vec![0u64; depth];
    let mut unpurified = 0;
    for t in times {
        match t {
            Some(t) => counts[t - 1] += 1,
            None => unpurified += 1,
        }
    }
    Ok(PurificationHistogram { n_sites, depth, p, counts, unpurified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::InitState;

    fn inst(n: usize, t: usize, p: f64, seed: u64) -> CircuitInstance {
        build_circuit(&CircuitSpec::new(n, t, p, seed)).unwrap()
    }

    #[test]
    fn no_measurements_never_purify() {
        for seed in 0..20 {
            let r = run_trajectory(&inst(8, 12, 0.0, seed), 0);
            assert_eq!((r.t_p, r.axis, r.label), (None, None, None));
            assert!(r.outcomes.iter().all(|&m| m == 0));
        }
    }

    #[test]
    fn full_measurement_purifies_immediately() {
        for seed in 0..1000 {
            let c = inst(4, 4, 1.0, seed);
            let r = run_trajectory(&c, seed);
            assert!(r.outcomes.iter().all(|&m| m == 1 || m == -1));
            assert!(r.t_p.unwrap() <= 2, "t_p = {:?}", r.t_p);
            assert!(r.label.is_some() && r.axis.is_some());
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let c = inst(16, 10, 0.2, 3);
        assert_eq!(run_trajectory(&c, 9), run_trajectory(&c, 9));
    }

    #[test]
    fn outcomes_mark_exactly_the_measured_sites() {
        let c = inst(12, 8, 0.35, 4);
        let r = run_trajectory(&c, 1);
        for (l, layer) in c.layers.iter().enumerate() {
            for s in 0..12 {
                assert_eq!(r.outcome(l, s) != 0, layer.measured.contains(&s));
            }
        }
    }

    #[test]
    fn purification_structure_is_trajectory_independent() {
        for seed in 0..30 {
            let c = inst(12, 12, 0.2, seed);
            let first = simulate(&c, 0, RunOptions { validate: seed < 3, ..Default::default() });
            for ts in 1..100 {
                let tr = simulate(&c, ts, RunOptions::default());
                assert_eq!(tr.record.t_p, first.record.t_p);
                assert_eq!(tr.record.axis, first.record.axis);
                assert_eq!(tr.determined, first.determined);
            }
        }
    }

    #[test]
    fn scrambled_runs_validate() {
        let c = build_circuit(&CircuitSpec::new(8, 6, 0.3, 5).with_init(InitState::Scrambled)).unwrap();
        let tr = simulate(&c, 0, RunOptions { validate: true, ..Default::default() });
        assert_eq!(tr.determined.len(), c.num_measurements());
    }

    #[test]
    fn window_geometry() {
        let c = inst(32, 10, 0.3, 6);
        let w = lightcone_window(&c, 1, LightCone::default());
        assert_eq!((w.width, w.depth, w.center), (4, 1, 16));
        let w = lightcone_window(&c, 40, LightCone::default());
        assert_eq!((w.width, w.depth), (32, 10));
        let w = WindowSpec { center: 1, width: 4, depth: 2 };
        assert_eq!((0..4).map(|c| w.site(c, 8)).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(w.column(3, 8), Some(3));
        assert_eq!(w.column(7, 8), None);
        let w = WindowSpec { center: 0, width: 3, depth: 2 };
        assert_eq!((0..3).map(|c| w.site(c, 8)).collect::<Vec<_>>(), vec![7, 0, 1]);
        let r = run_trajectory(&c, 2);
        assert_eq!(WindowSpec::full(32, 10).crop(&r.outcomes, 32), r.outcomes);
        assert!(WindowSpec { center: 0, width: 33, depth: 1 }.validate(32, 10).is_err());
    }

    #[test]
    fn histogram_extremes() {
        let h = purification_histogram(8, 6, 0.0, 50, 1, Exec::Auto).unwrap();
        assert_eq!(h.unpurified, 50);
        assert_eq!(h.coherent_info(), vec![1.0; 7]);
        assert!(purification_histogram(8, 6, 0.1, 0, 1, Exec::Auto).is_err());
        let h = purification_histogram(8, 6, 0.4, 300, 2, Exec::Auto).unwrap();
        assert_eq!(h.total(), 300);
        let s: f64 = h.mass().iter().sum::<f64>() + h.unpurified_mass();
        assert!((s - 1.0).abs() < 1e-12);
        let sq = h.coherent_info();
        assert!(sq.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn parallel_and_sequential_histograms_agree() {
        let a = purification_histogram(12, 8, 0.2, 200, 3, Exec::Auto).unwrap();
        let b = purification_histogram(12, 8, 0.2, 200, 3, Exec::Sequential).unwrap();
        assert_eq!(a, b);
    }
}
