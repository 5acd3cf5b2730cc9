//! Sectioned binary model container.
//!
//! ```text
//! magic    6 bytes  "KPPCA\0"
//! version  u32
//! kind     u8       'D' dual | 'P' primal
//! count    u32      number of sections
//! section  tag [u8; 4], length u64, payload[length]   (repeated)
//! ```
//!
//! All integers and floats are little-endian; floats are IEEE-754 f64.
//! Matrices are `rows u64, cols u64` followed by column-major entries and
//! vectors are `len u64` followed by entries. Unknown sections are skipped.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::dual::{self, DualModel};
use crate::error::{KppcaError, Result};
use crate::kernels::{KernelFamily, KernelSpec, TrainingSet};
use crate::primal::PrimalModel;
use crate::spectral::{EigenDecomposition, SymMatrix};

pub const MODEL_MAGIC: &[u8; 6] = b"KPPCA\0";
pub const MODEL_VERSION: u32 = 1;

const KIND_DUAL: u8 = b'D';
const KIND_PRIMAL: u8 = b'P';

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Dual(DualModel),
    Primal(PrimalModel),
}

impl From<DualModel> for Model {
    fn from(m: DualModel) -> Self {
        Model::Dual(m)
    }
}

impl From<PrimalModel> for Model {
    fn from(m: PrimalModel) -> Self {
        Model::Primal(m)
    }
}

#[derive(Default)]
struct Section {
    buf: Vec<u8>,
}

impl Section {
    fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }
    fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend(v.to_le_bytes());
        self
    }
    fn f64(&mut self, v: f64) -> &mut Self {
        self.buf.extend(v.to_le_bytes());
        self
    }
    fn vector(&mut self, v: &DVector<f64>) -> &mut Self {
        self.u64(v.len() as u64);
        for &x in v.iter() {
            self.f64(x);
        }
        self
    }
    fn matrix(&mut self, m: &DMatrix<f64>) -> &mut Self {
        self.u64(m.nrows() as u64).u64(m.ncols() as u64);
        for &x in m.iter() {
            self.f64(x);
        }
        self
    }
}

struct Writer {
    out: Vec<u8>,
    sections: Vec<([u8; 4], Vec<u8>)>,
}

impl Writer {
    fn new() -> Self {
        Writer {
            out: Vec::new(),
            sections: Vec::new(),
        }
    }

    fn section(&mut self, tag: &[u8; 4], build: impl FnOnce(&mut Section)) {
        let mut s = Section::default();
        build(&mut s);
        self.sections.push((*tag, s.buf));
    }

    fn finish(mut self, kind: u8) -> Vec<u8> {
        self.out.extend(MODEL_MAGIC);
        self.out.extend(MODEL_VERSION.to_le_bytes());
        self.out.push(kind);
        self.out.extend((self.sections.len() as u32).to_le_bytes());
        for (tag, payload) in self.sections {
            self.out.extend(tag);
            self.out.extend((payload.len() as u64).to_le_bytes());
            self.out.extend(payload);
        }
        self.out
    }
}

pub fn encode_model(model: &Model) -> Vec<u8> {
    let mut w = Writer::new();
    match model {
        Model::Dual(m) => {
            w.section(b"KERN", |s| {
                let family = match m.spec.family {
                    KernelFamily::Linear => 0,
                    KernelFamily::Rbf => 1,
                };
                s.u8(family).f64(m.spec.gamma);
            });
            w.section(b"LATN", |s| {
                s.u64(m.q as u64).f64(m.sigma2);
            });
            w.section(b"EIGN", |s| {
                s.f64(m.eig.clamp_floor)
                    .vector(&m.eig.eigenvalues)
                    .vector(&m.eig.raw_eigenvalues)
                    .matrix(&m.eig.eigenvectors);
            });
            w.section(b"AMAT", |s| {
                s.matrix(&m.a);
            });
            w.section(b"GRAM", |s| {
                s.matrix(m.kc.matrix());
            });
            w.section(b"TSET", |s| {
                s.matrix(m.ts.points());
            });
            w.finish(KIND_DUAL)
        }
        Model::Primal(m) => {
            w.section(b"LATN", |s| {
                s.u64(m.q as u64).f64(m.sigma2);
            });
            w.section(b"MEAN", |s| {
                s.vector(&m.mu);
            });
            w.section(b"WMAT", |s| {
                s.matrix(&m.w);
            });
            w.section(b"SPEC", |s| {
                s.vector(&m.eigenvalues);
            });
            w.section(b"VMAT", |s| {
                s.matrix(&m.v);
            });
            w.finish(KIND_PRIMAL)
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> KppcaError {
    KppcaError::CorruptFile(msg.into())
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| corrupt(format!("unexpected end of data at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| corrupt("size field overflows"))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| corrupt("size overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
    fn vector(&mut self) -> Result<DVector<f64>> {
        let n = self.usize()?;
        Ok(DVector::from_vec(self.floats(n)?))
    }
    fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let r = self.usize()?;
        let c = self.usize()?;
        let n = r.checked_mul(c).ok_or_else(|| corrupt("size overflow"))?;
        Ok(DMatrix::from_vec(r, c, self.floats(n)?))
    }
    fn done(&self, tag: &str) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(corrupt(format!("trailing bytes in section {tag}")));
        }
        Ok(())
    }
}

struct Sections<'a> {
    items: Vec<([u8; 4], &'a [u8])>,
}

impl<'a> Sections<'a> {
    fn get(&self, tag: &[u8; 4]) -> Result<Reader<'a>> {
        self.items
            .iter()
            .find(|(t, _)| t == tag)
            .map(|(_, payload)| Reader::new(payload))
            .ok_or_else(|| corrupt(format!("missing section {}", String::from_utf8_lossy(tag))))
    }
}

fn expect_shape(what: &str, found: (usize, usize), expected: (usize, usize)) -> Result<()> {
    if found != expected {
        return Err(corrupt(format!(
            "{what} is {}x{}, expected {}x{}",
            found.0, found.1, expected.0, expected.1
        )));
    }
    Ok(())
}

pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader::new(bytes);
    if r.take(MODEL_MAGIC.len())
        .map_err(|_| corrupt("file too short"))?
        != MODEL_MAGIC
    {
        return Err(corrupt("not a model file (bad magic)"));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(KppcaError::VersionMismatch {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    let kind = r.u8()?;
    let count = r.u32()?;
    let mut items = Vec::new();
    for _ in 0..count {
        let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
        let len = r.usize()?;
        items.push((tag, r.take(len)?));
    }
    if r.pos != bytes.len() {
        return Err(corrupt("trailing bytes after last section"));
    }
    let sections = Sections { items };
    match kind {
        KIND_DUAL => decode_dual(&sections).map(Model::Dual),
        KIND_PRIMAL => decode_primal(&sections).map(Model::Primal),
        other => Err(corrupt(format!("unknown model kind {other:#04x}"))),
    }
}

fn decode_latent(s: &Sections<'_>) -> Result<(usize, f64)> {
    let mut r = s.get(b"LATN")?;
    let q = r.usize()?;
    let sigma2 = r.f64()?;
    r.done("LATN")?;
    Ok((q, sigma2))
}

fn decode_dual(s: &Sections<'_>) -> Result<DualModel> {
    let mut r = s.get(b"KERN")?;
    let family = r.u8()?;
    let gamma = r.f64()?;
    r.done("KERN")?;
    let spec = match family {
        0 => KernelSpec {
            family: KernelFamily::Linear,
            gamma,
        },
        1 => KernelSpec::rbf(gamma).map_err(|_| corrupt("invalid RBF bandwidth"))?,
        f => return Err(corrupt(format!("unknown kernel family {f}"))),
    };

    let (q, sigma2) = decode_latent(s)?;

    let mut r = s.get(b"EIGN")?;
    let clamp_floor = r.f64()?;
    let eigenvalues = r.vector()?;
    let raw_eigenvalues = r.vector()?;
    let eigenvectors = r.matrix()?;
    r.done("EIGN")?;
    let n = eigenvalues.len();
    expect_shape("raw spectrum", (raw_eigenvalues.len(), 1), (n, 1))?;
    expect_shape("eigenvectors", eigenvectors.shape(), (n, n))?;

    let mut r = s.get(b"AMAT")?;
    let a = r.matrix()?;
    r.done("AMAT")?;
    expect_shape("loadings", a.shape(), (n, q))?;

    let mut r = s.get(b"GRAM")?;
    let kc = r.matrix()?;
    r.done("GRAM")?;
    expect_shape("centered Gram matrix", kc.shape(), (n, n))?;
    if kc != kc.transpose() {
        return Err(corrupt("centered Gram matrix is not symmetric"));
    }

    let mut r = s.get(b"TSET")?;
    let points = r.matrix()?;
    r.done("TSET")?;
    expect_shape("training set", (points.ncols(), 1), (n, 1))?;

    if q == 0 || q > n {
        return Err(corrupt(format!("latent dimension {q} invalid for N={n}")));
    }

    let eig = EigenDecomposition {
        eigenvalues,
        raw_eigenvalues,
        eigenvectors,
        clamp_floor,
    };
    let kc =
        SymMatrix::new(kc).map_err(|_| corrupt("centered Gram matrix has non-finite entries"))?;
    let ts = TrainingSet::new(points).map_err(|e| corrupt(format!("training set: {e}")))?;
    dual::from_parts(a, sigma2, eig, kc, spec, ts)
}

fn decode_primal(s: &Sections<'_>) -> Result<PrimalModel> {
    let (q, sigma2) = decode_latent(s)?;
    let mut r = s.get(b"MEAN")?;
    let mu = r.vector()?;
    r.done("MEAN")?;
    let mut r = s.get(b"WMAT")?;
    let w = r.matrix()?;
    r.done("WMAT")?;
    let mut r = s.get(b"SPEC")?;
    let eigenvalues = r.vector()?;
    r.done("SPEC")?;
    let mut r = s.get(b"VMAT")?;
    let v = r.matrix()?;
    r.done("VMAT")?;
    let d = mu.len();
    expect_shape("loadings", w.shape(), (d, q))?;
    expect_shape("eigenvectors", v.shape(), (d, q))?;
    Ok(PrimalModel {
        mu,
        w,
        sigma2,
        q,
        eigenvalues,
        v,
    })
}

pub fn save_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)).map_err(|e| KppcaError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| KppcaError::io(path, e))?;
    decode_model(&bytes)
}

pub fn load_dual(path: impl AsRef<Path>) -> Result<DualModel> {
    match load_model(path)? {
        Model::Dual(m) => Ok(m),
        Model::Primal(_) => Err(corrupt("expected a dual model, found a primal one")),
    }
}

pub fn load_primal(path: impl AsRef<Path>) -> Result<PrimalModel> {
    match load_model(path)? {
        Model::Primal(m) => Ok(m),
        Model::Dual(_) => Err(corrupt("expected a primal model, found a dual one")),
    }
}
