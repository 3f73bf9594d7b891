//! Versioned binary snapshots of a solver state.
//!
//! Layout (all integers and floats little-endian), documented in
//! `docs/checkpoint-format.md`:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `ADMCKPT\0` |
//! | 4     | format version (u32) |
//! | 12    | `n1, n2, n3` (u32 each) |
//! | 24    | box lengths (f64 each) |
//! | 8     | time `t` (f64) |
//! | 8     | step index (u64) |
//! | 32    | SHA-256 of the producing configuration |
//! | 48 N  | three components, each `N = n1 n2 n3` coefficients as `(re, im)` f64 pairs in storage order |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;
use crate::solver::SolverState;

pub const MAGIC: [u8; 8] = *b"ADMCKPT\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 12 + 24 + 8 + 8 + 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub step: u64,
    pub config_hash: [u8; 32],
    pub w: VectorField,
}

impl Checkpoint {
    pub fn from_state(state: &SolverState, config_hash: [u8; 32]) -> Self {
        Self {
            t: state.t,
            step: state.step,
            config_hash,
            w: state.w.clone(),
        }
    }

    pub fn state(&self) -> SolverState {
        SolverState {
            t: self.t,
            step: self.step,
            w: self.w.clone(),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.w.grid()
    }

    pub fn encode(&self) -> Vec<u8> {
        let g = self.w.grid();
        let mut out = Vec::with_capacity(HEADER_LEN + 48 * g.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for n in g.shape() {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for l in g.lengths() {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&self.config_hash);
        for c in self.w.components() {
            for v in c.coeffs() {
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < HEADER_LEN {
            return Err(bad("truncated header"));
        }
        if bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        let mut pos = 8;
        let mut take = |n: usize| {
            let s = &bytes[pos..pos + n];
            pos += n;
            s
        };
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
        let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().expect("8 bytes"));
        let version = u32_at(take(4));
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let n = [u32_at(take(4)), u32_at(take(4)), u32_at(take(4))].map(|x| x as usize);
        let lengths = [f64_at(take(8)), f64_at(take(8)), f64_at(take(8))];
        let t = f64_at(take(8));
        let step = u64::from_le_bytes(take(8).try_into().expect("8 bytes"));
        let config_hash: [u8; 32] = take(32).try_into().expect("32 bytes");
        let grid = Grid::with_lengths(n, lengths).map_err(|e| Error::Checkpoint(format!("bad grid: {e}")))?;
        let expected = HEADER_LEN + 48 * grid.len();
        if bytes.len() != expected {
            return Err(Error::Checkpoint(format!(
                "payload size {} does not match grid {grid} (expected {expected})",
                bytes.len()
            )));
        }
        let comp = |j: usize| -> Result<SpectralField> {
            let start = HEADER_LEN + 16 * grid.len() * j;
            let coeffs = bytes[start..start + 16 * grid.len()]
                .chunks_exact(16)
                .map(|c| Complex64::new(f64_at(&c[..8]), f64_at(&c[8..])))
                .collect();
            SpectralField::from_coeffs(grid, coeffs)
        };
        let w = VectorField::new(comp(0)?, comp(1)?, comp(2)?)?;
        let w = match w.clone().mark_divergence_free(1e-10) {
            Ok(v) => v,
            Err(_) => w,
        };
        Ok(Self { t, step, config_hash, w })
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::decode(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{random_vector, EnsembleSpec, MeanConstraint};

    fn sample() -> Checkpoint {
        let g = Grid::new(4, 6, 8).unwrap();
        let w = random_vector(g, &EnsembleSpec::new(1, 1, 7), 0, true, MeanConstraint::None).unwrap();
        Checkpoint {
            t: 1.25,
            step: 125,
            config_hash: [7; 32],
            w,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = c.encode();
        assert_eq!(bytes.len(), HEADER_LEN + 48 * 4 * 6 * 8);
        let back = Checkpoint::decode(&bytes).unwrap();
        assert_eq!(back, c);
        assert!(back.w.is_divergence_free());
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let bytes = sample().encode();
        assert!(Checkpoint::decode(&bytes[..40]).is_err());
        assert!(Checkpoint::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut m = bytes.clone();
        m[0] = b'X';
        assert!(Checkpoint::decode(&m).is_err());
        let mut v = bytes;
        v[8] = 9;
        assert!(matches!(Checkpoint::decode(&v), Err(Error::Checkpoint(_))));
    }
}
