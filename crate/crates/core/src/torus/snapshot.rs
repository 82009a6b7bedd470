//! Binary snapshot of one [`SpectralField`].
//!
//! Layout (little endian): magic `NLSS`, version `u32`, `N` as `u32`,
//! `theta` as three `f64`, convention as `u8` (0 standard, 1 paper), then
//! `(2N+1)^3` pairs `(re, im)` of `f64` in lattice order.

use std::path::Path;

use num_complex::Complex64;

use super::field::SpectralField;
use super::geometry::{Convention, TorusGeometry};
use super::lattice::FrequencyLattice;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NLSS";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 24 + 1;

/// A field together with the geometry and convention it was computed under.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub field: SpectralField,
    pub geometry: TorusGeometry,
    pub convention: Convention,
}

impl FieldSnapshot {
    pub fn encode(&self) -> Vec<u8> {
        let lat = self.field.lattice();
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * lat.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(lat.n() as u32).to_le_bytes());
        for t in self.geometry.theta() {
            out.extend_from_slice(&t.to_le_bytes());
        }
        out.push(self.convention.code());
        for c in self.field.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN {
            return Err(format!("{} bytes is shorter than the header", bytes.len()));
        }
        if &bytes[..4] != MAGIC {
            return Err("bad magic".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let n = u32_at(8) as usize;
        let theta = [f64_at(12), f64_at(20), f64_at(28)];
        let convention =
            Convention::from_code(bytes[36]).ok_or_else(|| format!("unknown convention code {}", bytes[36]))?;
        let geometry = TorusGeometry::new(theta).map_err(|e| e.to_string())?;
        let lattice = FrequencyLattice::new(n).map_err(|e| e.to_string())?;
        let expected = HEADER_LEN + 16 * lattice.len();
        if bytes.len() != expected {
            return Err(format!("expected {expected} bytes for N={n}, found {}", bytes.len()));
        }
        let coeffs = bytes[HEADER_LEN..]
            .chunks_exact(16)
            .map(|ch| {
                Complex64::new(
                    f64::from_le_bytes(ch[..8].try_into().unwrap()),
                    f64::from_le_bytes(ch[8..].try_into().unwrap()),
                )
            })
            .collect();
        let field = SpectralField::from_coeffs(lattice, coeffs).map_err(|e| e.to_string())?;
        Ok(Self {
            field,
            geometry,
            convention,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, &self.encode())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::decode(&bytes).map_err(|reason| Error::Snapshot {
            path: path.to_path_buf(),
            reason,
        })
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let lat = FrequencyLattice::new(1).unwrap();
        let snap = FieldSnapshot {
            field: SpectralField::constant(lat, Complex64::new(1.5, -2.0)),
            geometry: TorusGeometry::new([1.0, 0.5, 0.25]).unwrap(),
            convention: Convention::Paper,
        };
        let b = snap.encode();
        assert_eq!(b.len(), 37 + 27 * 16);
        assert_eq!(&b[..4], b"NLSS");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &1u32.to_le_bytes());
        assert_eq!(&b[20..28], &0.5f64.to_le_bytes());
        assert_eq!(b[36], 1);
        let center = 37 + 13 * 16;
        assert_eq!(&b[center..center + 8], &1.5f64.to_le_bytes());
        assert_eq!(&b[center + 8..center + 16], &(-2.0f64).to_le_bytes());
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let lat = FrequencyLattice::new(1).unwrap();
        let snap = FieldSnapshot {
            field: SpectralField::zeros(lat),
            geometry: TorusGeometry::square(),
            convention: Convention::Standard,
        };
        let good = snap.encode();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(FieldSnapshot::decode(&bad).is_err());
        assert!(FieldSnapshot::decode(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[36] = 7;
        assert!(FieldSnapshot::decode(&bad).is_err());
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(
            n in 1usize..3,
            theta in prop::array::uniform3(0.01f64..=1.0),
            paper in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let lat = FrequencyLattice::new(n).unwrap();
            let mut s = seed;
            let field = SpectralField::from_fn(lat, |_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                Complex64::new((s >> 11) as f64 * 1e-12, -((s >> 13) as f64) * 1e-9)
            });
            let snap = FieldSnapshot {
                field,
                geometry: TorusGeometry::new(theta).unwrap(),
                convention: if paper { Convention::Paper } else { Convention::Standard },
            };
            let back = FieldSnapshot::decode(&snap.encode()).unwrap();
            prop_assert_eq!(back, snap);
        }
    }
}
