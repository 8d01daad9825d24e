//! Binary model files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "RMLS" | version u32 | d u64 | k u64 | m u64 | theta u8 | sigma u8
//! [version 2: method u8]
//! W row-major, d·k f64 | L column-major (label by label), k·m f64
//! [version 2: selected-label count u64 | indices u64...]
//! ```
//!
//! Version 1 holds an [`EmbeddingModel`], version 2 an [`LsdrModel`] and
//! version 3 the all-irrelevant baseline (header only, `k = 0`).

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::eval::TrainedModel;
use crate::lsdr::{LsdrMethod, LsdrModel};
use crate::model::{EmbeddingModel, Sigma, Theta};

pub const MAGIC: &[u8; 4] = b"RMLS";
pub const VERSION_EMBEDDING: u32 = 1;
pub const VERSION_LSDR: u32 = 2;
pub const VERSION_BASELINE: u32 = 3;
/// Bytes before the matrix payload of a version-1 file.
pub const HEADER_LEN: usize = 4 + 4 + 3 * 8 + 2;

fn write_header<W: Write>(out: &mut W, version: u32, d: usize, k: usize, m: usize, theta: Theta, sigma: Sigma) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&version.to_le_bytes())?;
    for v in [d, k, m] {
        out.write_all(&(v as u64).to_le_bytes())?;
    }
    out.write_all(&[theta.tag(), sigma.tag()])?;
    Ok(())
}

fn write_f64s<W: Write>(out: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn save_model<W: Write>(model: &EmbeddingModel, mut out: W) -> Result<()> {
    write_header(&mut out, VERSION_EMBEDDING, model.d(), model.k(), model.m(), model.theta, model.sigma)?;
    write_f64s(&mut out, model.w().iter().copied())?;
    write_f64s(&mut out, model.l().iter().copied())?;
    out.flush()?;
    Ok(())
}

pub fn save_lsdr<W: Write>(model: &LsdrModel, mut out: W) -> Result<()> {
    let (d, k, m) = (model.d(), model.k, model.m());
    write_header(&mut out, VERSION_LSDR, d, k, m, Theta::Identity, Sigma::Identity)?;
    out.write_all(&[model.method.tag()])?;
    write_f64s(&mut out, (0..d).flat_map(|f| (0..k).map(move |c| (f, c))).map(|(f, c)| model.regressor[(f, c)]))?;
    write_f64s(&mut out, model.decode.as_slice().iter().copied())?;
    out.write_all(&(model.selected_labels.len() as u64).to_le_bytes())?;
    for &j in &model.selected_labels {
        out.write_all(&(j as u64).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_trained<W: Write>(model: &TrainedModel, mut out: W) -> Result<()> {
    match model {
        TrainedModel::Embedding(m) => save_model(m, out),
        TrainedModel::Lsdr(m) => save_lsdr(m, out),
        TrainedModel::Baseline { m } => {
            write_header(&mut out, VERSION_BASELINE, 0, 0, *m, Theta::Identity, Sigma::Identity)?;
            out.flush()?;
            Ok(())
        }
    }
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated payload while reading {what}")),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        let v = u64::from_le_bytes(self.bytes::<8>(what)?);
        usize::try_from(v).map_err(|_| Error::Format(format!("{what} does not fit in memory")))
    }

    fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            let v = f64::from_le_bytes(self.bytes::<8>(what)?);
            if !v.is_finite() {
                return Err(Error::Format(format!("non-finite entry in {what}")));
            }
            out.push(v);
        }
        Ok(out)
    }
}

struct Header {
    version: u32,
    d: usize,
    k: usize,
    m: usize,
    theta: Theta,
    sigma: Sigma,
}

fn read_header<R: Read>(r: &mut Reader<R>) -> Result<Header> {
    let magic = r.bytes::<4>("magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected {MAGIC:?}")));
    }
    let version = u32::from_le_bytes(r.bytes::<4>("version")?);
    if !(VERSION_EMBEDDING..=VERSION_BASELINE).contains(&version) {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let d = r.u64("d")?;
    let k = r.u64("k")?;
    let m = r.u64("m")?;
    let [t, s] = r.bytes::<2>("activation tags")?;
    let theta = Theta::from_tag(t).ok_or_else(|| Error::Format(format!("unknown theta tag {t}")))?;
    let sigma = Sigma::from_tag(s).ok_or_else(|| Error::Format(format!("unknown sigma tag {s}")))?;
    Ok(Header { version, d, k, m, theta, sigma })
}

fn ensure_end<R: Read>(r: &mut Reader<R>) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.inner.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(Error::Format("trailing bytes after payload".into())),
    }
}

/// Reads any model written by [`save_trained`], [`save_model`] or [`save_lsdr`].
pub fn load_trained<R: Read>(source: R) -> Result<TrainedModel> {
    let mut r = Reader { inner: source };
    let h = read_header(&mut r)?;
    let model = match h.version {
        VERSION_EMBEDDING => {
            let w = r.f64s(h.d * h.k, "W")?;
            let l = r.f64s(h.k * h.m, "L")?;
            TrainedModel::Embedding(EmbeddingModel::from_parts(h.d, h.k, h.m, w, l, h.theta, h.sigma)?)
        }
        VERSION_LSDR => {
            let [tag] = r.bytes::<1>("method tag")?;
            let method = LsdrMethod::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown LSDR method {tag}")))?;
            let w = r.f64s(h.d * h.k, "regressor")?;
            let l = r.f64s(h.k * h.m, "decode")?;
            let count = r.u64("selected-label count")?;
            if count > h.m {
                return Err(Error::Format(format!("{count} selected labels for m={}", h.m)));
            }
            let mut selected = Vec::with_capacity(count);
            for _ in 0..count {
                selected.push(r.u64("selected label")?);
            }
            TrainedModel::Lsdr(LsdrModel {
                method,
                k: h.k,
                regressor: DMatrix::from_row_slice(h.d, h.k, &w),
                decode: DMatrix::from_column_slice(h.k, h.m, &l),
                selected_labels: selected,
                flags: Vec::new(),
            })
        }
        _ => TrainedModel::Baseline { m: h.m },
    };
    ensure_end(&mut r)?;
    Ok(model)
}

/// Reads a version-1 embedding model.
pub fn load_model<R: Read>(source: R) -> Result<EmbeddingModel> {
    match load_trained(source)? {
        TrainedModel::Embedding(m) => Ok(m),
        _ => Err(Error::Format("file does not hold an embedding model".into())),
    }
}
