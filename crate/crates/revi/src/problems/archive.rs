//! Bit-exact binary serialization of problem instances, so an experiment can
//! be replayed from the archived data instead of the generator.
//!
//! Layout (all integers and reals little-endian): a 4-byte magic, a `u16`
//! format version, a `u8` instance kind, then a kind-specific header followed
//! by matrix payloads in row-major order.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::vector::Vector;

use super::box_simplex::BoxSimplexInstance;
use super::erm::{DataDistribution, ErmInstance};
use super::synthetic::SyntheticInstance;

const MAGIC: &[u8; 4] = b"REVI";
const VERSION: u16 = 1;

const KIND_BOX_SIMPLEX: u8 = 1;
const KIND_ERM: u8 = 2;
const KIND_SYNTHETIC: u8 = 3;

/// A problem instance of any supported kind, as stored on disk.
#[derive(Debug, Clone)]
pub enum ProblemArchive {
    BoxSimplex(BoxSimplexInstance),
    Erm(ErmInstance),
    Synthetic(SyntheticInstance),
}

impl ProblemArchive {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemArchive::BoxSimplex(_) => "box-simplex",
            ProblemArchive::Erm(_) => "erm",
            ProblemArchive::Synthetic(_) => "synthetic",
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u16(VERSION);
        match self {
            ProblemArchive::BoxSimplex(inst) => {
                w.u8(KIND_BOX_SIMPLEX);
                w.u64(inst.n() as u64);
                w.u64(inst.seed());
                w.f64(inst.mu_y());
                w.f64(inst.mu_z());
                w.matrix(inst.matrix());
                w.slice(inst.payoff_b());
                w.slice(inst.payoff_c());
            }
            ProblemArchive::Erm(inst) => {
                w.u8(KIND_ERM);
                w.u64(inst.dim() as u64);
                w.u64(inst.samples_per_machine() as u64);
                w.u64(inst.machines() as u64);
                w.u64(inst.seed());
                w.f64(inst.lambda());
                w.f64(inst.gamma());
                w.u8(match inst.distribution() {
                    DataDistribution::Exponential => 0,
                    DataDistribution::Cauchy => 1,
                });
                w.u64(inst.clamped_entries());
                for a in inst.designs() {
                    w.matrix(a);
                }
                for b in inst.targets() {
                    w.slice(b);
                }
            }
            ProblemArchive::Synthetic(inst) => {
                w.u8(KIND_SYNTHETIC);
                w.u64(inst.dim() as u64);
                w.u64(inst.seed());
                w.f64(inst.mu());
                w.f64(inst.l());
                w.matrix(inst.matrix());
                w.slice(inst.solution());
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let magic = r.bytes(4)?;
        if magic != MAGIC {
            return Err(Error::Archive(format!(
                "bad magic {magic:?}, expected {MAGIC:?}"
            )));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::Archive(format!(
                "unsupported format version {version}"
            )));
        }
        let kind = r.u8()?;
        let archive = match kind {
            KIND_BOX_SIMPLEX => {
                let n = r.dim()?;
                let seed = r.u64()?;
                let mu_y = r.f64()?;
                let mu_z = r.f64()?;
                let a = r.matrix(n, n)?;
                let b = r.vector(n)?;
                let c = r.vector(n)?;
                ProblemArchive::BoxSimplex(BoxSimplexInstance::from_parts(
                    a, b, c, mu_y, mu_z, seed,
                )?)
            }
            KIND_ERM => {
                let n = r.dim()?;
                let s = r.dim()?;
                let m = r.dim()?;
                let seed = r.u64()?;
                let lambda = r.f64()?;
                let gamma = r.f64()?;
                let distribution = match r.u8()? {
                    0 => DataDistribution::Exponential,
                    1 => DataDistribution::Cauchy,
                    other => {
                        return Err(Error::Archive(format!(
                            "unknown distribution tag {other}"
                        )))
                    }
                };
                let clamped = r.u64()?;
                let mut designs = Vec::with_capacity(m);
                for _ in 0..m {
                    designs.push(r.matrix(s, n)?);
                }
                let mut targets = Vec::with_capacity(m);
                for _ in 0..m {
                    targets.push(r.vector(s)?);
                }
                ProblemArchive::Erm(ErmInstance::from_parts(
                    designs,
                    targets,
                    lambda,
                    gamma,
                    seed,
                    distribution,
                    clamped,
                )?)
            }
            KIND_SYNTHETIC => {
                let n = r.dim()?;
                let seed = r.u64()?;
                let mu = r.f64()?;
                let l = r.f64()?;
                let m = r.matrix(n, n)?;
                let solution = r.vector(n)?;
                ProblemArchive::Synthetic(SyntheticInstance::from_parts(m, solution, mu, l, seed)?)
            }
            other => return Err(Error::Archive(format!("unknown instance kind {other}"))),
        };
        r.expect_end()?;
        Ok(archive)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn new() -> Self {
        Writer(Vec::new())
    }

    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }

    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn matrix(&mut self, m: &DMatrix<f64>) {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.f64(m[(i, j)]);
            }
        }
    }

    fn slice(&mut self, v: &[f64]) {
        for x in v {
            self.f64(*x);
        }
    }

    fn finish(self) -> Vec<u8> {
        self.0
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, offset: 0 }
    }

    fn bytes(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.offset.checked_add(len).ok_or_else(|| {
            Error::Archive("length overflow".into())
        })?;
        if end > self.bytes.len() {
            return Err(Error::Archive(format!(
                "truncated: wanted {len} bytes at offset {}, have {}",
                self.offset,
                self.bytes.len() - self.offset
            )));
        }
        let out = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().expect("len 2")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("len 8")))
    }

    fn dim(&mut self) -> Result<usize> {
        let v = self.u64()?;
        // Caps one axis so corrupt headers fail fast instead of allocating.
        if v == 0 || v > 1 << 24 {
            return Err(Error::Archive(format!("implausible dimension {v}")));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        let v = f64::from_le_bytes(self.bytes(8)?.try_into().expect("len 8"));
        if !v.is_finite() {
            return Err(Error::Archive(format!(
                "non-finite real at offset {}",
                self.offset - 8
            )));
        }
        Ok(v)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self.f64()?;
            }
        }
        Ok(out)
    }

    fn vector(&mut self, len: usize) -> Result<Vector> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(self.f64()?);
        }
        Vector::new(out)
    }

    fn expect_end(&self) -> Result<()> {
        if self.offset != self.bytes.len() {
            return Err(Error::Archive(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.offset
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_matrix_bits(a: &DMatrix<f64>, b: &DMatrix<f64>) {
        assert_eq!(a.nrows(), b.nrows());
        assert_eq!(a.ncols(), b.ncols());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn box_simplex_round_trips_bit_exactly() {
        let inst = BoxSimplexInstance::generate(5, 1e-2, 1e-6, 11).unwrap();
        let bytes = ProblemArchive::BoxSimplex(inst.clone()).to_bytes();
        match ProblemArchive::from_bytes(&bytes).unwrap() {
            ProblemArchive::BoxSimplex(back) => {
                assert_matrix_bits(back.matrix(), inst.matrix());
                assert_eq!(back.payoff_b().to_bits(), inst.payoff_b().to_bits());
                assert_eq!(back.payoff_c().to_bits(), inst.payoff_c().to_bits());
                assert_eq!(back.seed(), inst.seed());
                assert_eq!(back.scale().to_bits(), inst.scale().to_bits());
                assert_eq!(back.initial_point().to_bits(), inst.initial_point().to_bits());
            }
            other => panic!("wrong kind {}", other.kind()),
        }
    }

    #[test]
    fn erm_round_trips_bit_exactly() {
        let inst =
            ErmInstance::generate(4, 6, 3, 1e-3, DataDistribution::Cauchy, 2, None).unwrap();
        let bytes = ProblemArchive::Erm(inst.clone()).to_bytes();
        match ProblemArchive::from_bytes(&bytes).unwrap() {
            ProblemArchive::Erm(back) => {
                for (a, b) in back.designs().iter().zip(inst.designs()) {
                    assert_matrix_bits(a, b);
                }
                for (a, b) in back.targets().iter().zip(inst.targets()) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
                assert_eq!(back.gamma().to_bits(), inst.gamma().to_bits());
                assert_eq!(back.distribution(), inst.distribution());
                assert_eq!(back.clamped_entries(), inst.clamped_entries());
            }
            other => panic!("wrong kind {}", other.kind()),
        }
    }

    #[test]
    fn synthetic_round_trips_bit_exactly() {
        let inst = SyntheticInstance::generate(7, 1.0, 10.0, 5).unwrap();
        let bytes = ProblemArchive::Synthetic(inst.clone()).to_bytes();
        match ProblemArchive::from_bytes(&bytes).unwrap() {
            ProblemArchive::Synthetic(back) => {
                assert_matrix_bits(back.matrix(), inst.matrix());
                assert_eq!(back.solution().to_bits(), inst.solution().to_bits());
                assert_eq!(back.mu().to_bits(), inst.mu().to_bits());
                assert_eq!(back.l().to_bits(), inst.l().to_bits());
            }
            other => panic!("wrong kind {}", other.kind()),
        }
    }

    #[test]
    fn corrupt_headers_are_rejected() {
        let inst = SyntheticInstance::generate(3, 1.0, 2.0, 0).unwrap();
        let good = ProblemArchive::Synthetic(inst).to_bytes();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(ProblemArchive::from_bytes(&bad_magic).is_err());

        let mut bad_version = good.clone();
        bad_version[4] = 99;
        assert!(ProblemArchive::from_bytes(&bad_version).is_err());

        let mut bad_kind = good.clone();
        bad_kind[6] = 42;
        assert!(ProblemArchive::from_bytes(&bad_kind).is_err());

        assert!(ProblemArchive::from_bytes(&good[..good.len() - 3]).is_err());

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(ProblemArchive::from_bytes(&trailing).is_err());

        let mut nan_payload = good.clone();
        let tail = nan_payload.len() - 8;
        nan_payload[tail..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(ProblemArchive::from_bytes(&nan_payload).is_err());
    }

    #[test]
    fn saves_and_loads_through_the_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instance.revi");
        let inst = BoxSimplexInstance::generate(3, 1e-2, 1e-2, 0).unwrap();
        let archive = ProblemArchive::BoxSimplex(inst);
        archive.save(&path).unwrap();
        let back = ProblemArchive::load(&path).unwrap();
        assert_eq!(back.to_bytes(), archive.to_bytes());
        assert!(ProblemArchive::load(&dir.path().join("missing.revi")).is_err());
    }
}
