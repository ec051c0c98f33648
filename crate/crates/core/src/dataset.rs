//! Labelled trajectory datasets and their binary file format.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "MIPT-DS\0"
//! version  u16      1
//! L, T     u16, u16
//! p        f64
//! seed     u64      circuit seed
//! axis     u8       0=X 1=Y 2=Z
//! window   u16 ×3   center, width, depth (all zero: whole circuit)
//! N        u64
//! N × { outcomes: i8 × rows·cols, label: i8, trajectory_seed: u64 }
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::circuit::CircuitInstance;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::pauli::Axis;
use crate::rng::hash_key;
use crate::trajectory::{simulate, RunOptions, WindowSpec};

pub const MAGIC: &[u8; 8] = b"MIPT-DS\0";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 8 + 2 + 2 + 2 + 8 + 8 + 1 + 6 + 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    /// `rows × cols`, row-major, entries in {−1, 0, +1}.
    pub outcomes: Vec<i8>,
    pub label: i8,
    pub trajectory_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_sites: usize,
    pub depth: usize,
    pub p: f64,
    pub circuit_seed: u64,
    pub axis: Axis,
    pub window: Option<WindowSpec>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Image height (layers).
    pub fn rows(&self) -> usize {
        self.window.map_or(self.depth, |w| w.depth)
    }

    /// Image width (sites).
    pub fn cols(&self) -> usize {
        self.window.map_or(self.n_sites, |w| w.width)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Circuit identity: seed plus a hash of the spec fields in the header.
    pub fn fingerprint(&self) -> u64 {
        hash_key(&[self.circuit_seed, self.n_sites as u64, self.depth as u64, self.p.to_bits()])
    }

    /// Dataset restricted to the first `n` samples.
    pub fn head(&self, n: usize) -> Dataset {
        Dataset { samples: self.samples[..n.min(self.len())].to_vec(), ..self.clone() }
    }

    pub fn label_mean(&self) -> f64 {
        self.samples.iter().map(|s| s.label as f64).sum::<f64>() / self.len().max(1) as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + self.len() * (self.rows() * self.cols() + 9));
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n_sites as u16).to_le_bytes())?;
        w.write_all(&(self.depth as u16).to_le_bytes())?;
        w.write_all(&self.p.to_le_bytes())?;
        w.write_all(&self.circuit_seed.to_le_bytes())?;
        w.write_all(&[self.axis.code()])?;
        let (c, wd, d) = self.window.map_or((0, 0, 0), |x| (x.center, x.width, x.depth));
        for v in [c, wd, d] {
            w.write_all(&(v as u16).to_le_bytes())?;
        }
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        let cells = self.rows() * self.cols();
        for s in &self.samples {
            debug_assert_eq!(s.outcomes.len(), cells);
            let bytes: Vec<u8> = s.outcomes.iter().map(|&v| v as u8).collect();
            w.write_all(&bytes)?;
            w.write_all(&[s.label as u8])?;
            w.write_all(&s.trajectory_seed.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Dataset> {
        let mut header = [0u8; HEADER_BYTES];
        read_exact(&mut r, &mut header)?;
        if &header[..8] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([header[i], header[i + 1]]) as usize;
        let u64_at = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap());
        let version = u16_at(8);
        if version != VERSION as usize {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n_sites = u16_at(10);
        let depth = u16_at(12);
        let p = f64::from_bits(u64_at(14));
        let circuit_seed = u64_at(22);
        let axis = Axis::from_code(header[30]).ok_or_else(|| Error::Format(format!("bad axis code {}", header[30])))?;
        let (center, width, wdepth) = (u16_at(31), u16_at(33), u16_at(35));
        let window = if (center, width, wdepth) == (0, 0, 0) {
            None
        } else {
            let w = WindowSpec { center, width, depth: wdepth };
            w.validate(n_sites, depth).map_err(|e| Error::Format(e.to_string()))?;
            Some(w)
        };
        let n = u64_at(37) as usize;
        let mut ds = Dataset { n_sites, depth, p, circuit_seed, axis, window, samples: Vec::new() };
        let cells = ds.rows() * ds.cols();
        let mut buf = vec![0u8; cells + 9];
        for _ in 0..n {
            read_exact(&mut r, &mut buf)?;
            let outcomes: Vec<i8> = buf[..cells].iter().map(|&b| b as i8).collect();
            if outcomes.iter().any(|v| !(-1..=1).contains(v)) {
                return Err(Error::Format("outcome outside {-1, 0, 1}".into()));
            }
            let label = buf[cells] as i8;
            let trajectory_seed = u64::from_le_bytes(buf[cells + 1..].try_into().unwrap());
            ds.samples.push(Sample { outcomes, label, trajectory_seed });
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after last record".into()));
        }
        Ok(ds)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })
}

pub fn write_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    ds.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let f = std::fs::File::open(path)?;
    Dataset::read_from(std::io::BufReader::new(f))
}

/// How labels are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Labels {
    /// `p_R` along the purification axis; the circuit must purify.
    #[default]
    Purified,
    /// Outcome of measuring the reference in `Z` at the end, whatever its
    /// state. Used for null experiments on mixed circuits.
    ForcedZ,
}

/// `n` trajectories with seeds `first_seed..first_seed+n`, optionally
/// cropped to `window`.
pub fn generate_dataset(
    instance: &CircuitInstance,
    n: usize,
    window: Option<WindowSpec>,
    first_seed: u64,
    labels: Labels,
    exec: Exec,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset needs at least one trajectory".into()));
    }
    if let Some(w) = window {
        w.validate(instance.n_sites(), instance.depth())?;
    }
    let probe = simulate(instance, first_seed, RunOptions::default()).record;
    let axis = match (labels, probe.axis) {
        (Labels::Purified, Some(a)) => a,
        (Labels::Purified, None) => return Err(Error::NotDecodable(instance.depth())),
        (Labels::ForcedZ, _) => Axis::Z,
    };
    let opts = RunOptions { measure_reference_z: labels == Labels::ForcedZ, ..Default::default() };
    let samples = par::map_range(exec, n, |i| {
        let seed = first_seed + i as u64;
        let tr = simulate(instance, seed, opts);
        let label = match labels {
            Labels::Purified => tr.record.label.expect("purification is trajectory independent"),
            Labels::ForcedZ => tr.reference_z.expect("requested"),
        };
        let outcomes = match window {
            Some(w) => w.crop(&tr.record.outcomes, instance.n_sites()),
            None => tr.record.outcomes,
        };
        Sample { outcomes, label, trajectory_seed: seed }
    });
    Ok(Dataset {
        n_sites: instance.n_sites(),
        depth: instance.depth(),
        p: instance.spec.p,
        circuit_seed: instance.spec.circuit_seed,
        axis,
        window,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_circuit, CircuitSpec};
    use proptest::prelude::*;

    fn purifying(n: usize, t: usize, p: f64) -> CircuitInstance {
        (0..)
            .map(|s| build_circuit(&CircuitSpec::new(n, t, p, s)).unwrap())
            .find(|c| crate::trajectory::purification_time(c).is_some())
            .unwrap()
    }

    #[test]
    fn unpurified_circuit_is_rejected() {
        let c = build_circuit(&CircuitSpec::new(8, 4, 0.0, 1)).unwrap();
        assert!(matches!(
            generate_dataset(&c, 10, None, 0, Labels::Purified, Exec::Auto),
            Err(Error::NotDecodable(4))
        ));
        let ds = generate_dataset(&c, 200, None, 0, Labels::ForcedZ, Exec::Auto).unwrap();
        assert!(ds.label_mean().abs() < 0.36); // 5 sigma
    }

    #[test]
    fn file_size_arithmetic() {
        let ds = Dataset {
            n_sites: 64,
            depth: 10,
            p: 0.2,
            circuit_seed: 3,
            axis: Axis::Y,
            window: None,
            samples: (0..10_000).map(|i| Sample { outcomes: vec![0; 640], label: 1, trajectory_seed: i }).collect(),
        };
        assert_eq!(HEADER_BYTES, 45);
        assert_eq!(ds.to_bytes().len(), 45 + 10_000 * (64 * 10 + 1) + 10_000 * 8);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let c = purifying(8, 6, 0.3);
        let ds = generate_dataset(&c, 5, None, 0, Labels::Purified, Exec::Auto).unwrap();
        let bytes = ds.to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Dataset::read_from(&bad[..]), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(matches!(Dataset::read_from(&bad[..]), Err(Error::Format(_))));
        assert!(matches!(Dataset::read_from(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(Dataset::read_from(&bytes[..20]), Err(Error::Format(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(Dataset::read_from(&long[..]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let c = purifying(12, 6, 0.3);
        let w = WindowSpec { center: 6, width: 6, depth: 3 };
        let ds = generate_dataset(&c, 40, Some(w), 100, Labels::Purified, Exec::Auto).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.bin");
        write_dataset(&path, &ds).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.fingerprint(), ds.fingerprint());
        assert_eq!(back.samples[0].outcomes.len(), 18);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reserialization_is_byte_identical(
            rows in 1usize..5, cols in 1usize..7, n in 0usize..6, seed in any::<u64>(), axis in 0u8..3,
            cells in proptest::collection::vec(-1i8..=1, 0..300),
        ) {
            let ds = Dataset {
                n_sites: 8.max(cols + cols % 2),
                depth: rows,
                p: 0.25,
                circuit_seed: seed,
                axis: Axis::from_code(axis).unwrap(),
                window: Some(WindowSpec { center: 1, width: cols, depth: rows }),
                samples: (0..n).map(|i| Sample {
                    outcomes: (0..rows * cols).map(|k| cells.get(k + i).copied().unwrap_or(0)).collect(),
                    label: if i % 2 == 0 { 1 } else { -1 },
                    trajectory_seed: seed.wrapping_add(i as u64),
                }).collect(),
            };
            let bytes = ds.to_bytes();
            let back = Dataset::read_from(&bytes[..]).unwrap();
            prop_assert_eq!(back.to_bytes(), bytes);
        }
    }
}
