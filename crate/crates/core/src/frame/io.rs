//! Versioned binary container for needlet frames.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "NDLT" | u32 version
//! u8 basis (0 = Jacobi, 1 = Fourier) | f64 alpha | f64 beta
//! u32 jmax | u8 layout (0 = exact, 1 = paper)
//! u8 profile (0 = polynomial, 1 = exponential) | u32 smoothness
//! u32 level count, then per level:
//!   i32 j | u64 nodes | u64 window start | u64 window len
//!   f64[nodes] nodes | f64[nodes] weights | f64[nodes * window len] row-major coefficients
//! ```

use std::io::{Read, Write};

use ndarray::Array2;

use super::{BasisFamily, FrameLevel, NeedletFrame, NodesPerLevel};
use crate::error::{Error, Result};
use crate::filter::{make_profile, Filter, ProfileKind};

pub const MAGIC: &[u8; 4] = b"NDLT";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_frame<W: Write>(frame: &NeedletFrame, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let (kind, alpha, beta) = match frame.basis {
        BasisFamily::Jacobi(p) => (0u8, p.alpha, p.beta),
        BasisFamily::FourierPeriodic => (1u8, 0.0, 0.0),
    };
    w.write_all(&[kind])?;
    w.write_all(&alpha.to_le_bytes())?;
    w.write_all(&beta.to_le_bytes())?;
    w.write_all(&frame.jmax.to_le_bytes())?;
    w.write_all(&[match frame.layout {
        NodesPerLevel::Exact => 0u8,
        NodesPerLevel::Paper => 1,
    }])?;
    let profile = &frame.filter.profile;
    w.write_all(&[match profile.kind {
        ProfileKind::PolynomialShape => 0u8,
        ProfileKind::SmoothExponential => 1,
    }])?;
    w.write_all(&profile.smoothness.to_le_bytes())?;
    w.write_all(&(frame.levels.len() as u32).to_le_bytes())?;
    for l in &frame.levels {
        w.write_all(&l.j.to_le_bytes())?;
        w.write_all(&(l.len() as u64).to_le_bytes())?;
        w.write_all(&(l.window.start as u64).to_le_bytes())?;
        w.write_all(&(l.window.len() as u64).to_le_bytes())?;
        for v in l.nodes.iter().chain(&l.weights).chain(l.coeffs.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated container: {e}")))?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.bytes()?))
            .map_err(|_| Error::Format("size field overflows".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn read_frame<R: Read>(r: R) -> Result<NeedletFrame> {
    let mut r = Reader { inner: r };
    if &r.bytes::<4>()? != MAGIC {
        return Err(Error::Format("missing NDLT magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}"
        )));
    }
    let kind = r.u8()?;
    let (alpha, beta) = (r.f64()?, r.f64()?);
    let basis = match kind {
        0 => BasisFamily::jacobi(alpha, beta)?,
        1 => BasisFamily::FourierPeriodic,
        k => return Err(Error::Format(format!("unknown basis tag {k}"))),
    };
    let jmax = r.u32()?;
    let layout = match r.u8()? {
        0 => NodesPerLevel::Exact,
        1 => NodesPerLevel::Paper,
        k => return Err(Error::Format(format!("unknown layout tag {k}"))),
    };
    let profile_kind = match r.u8()? {
        0 => ProfileKind::PolynomialShape,
        1 => ProfileKind::SmoothExponential,
        k => return Err(Error::Format(format!("unknown profile tag {k}"))),
    };
    let filter = Filter::new(make_profile(profile_kind, r.u32()?)?);
    let count = r.u32()? as usize;
    if count != jmax as usize + 2 {
        return Err(Error::Format(format!("{count} levels for jmax {jmax}")));
    }
    let mut levels = Vec::with_capacity(count);
    for slot in 0..count {
        let j = r.i32()?;
        if j != slot as i32 - 1 {
            return Err(Error::Format(format!("level {j} stored in slot {slot}")));
        }
        let n = r.u64()?;
        let start = r.u64()?;
        let width = r.u64()?;
        let nodes = r.f64s(n)?;
        let weights = r.f64s(n)?;
        let coeffs = Array2::from_shape_vec((n, width), r.f64s(n * width)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        levels.push(FrameLevel {
            j,
            nodes,
            weights,
            window: start..start + width,
            coeffs,
        });
    }
    Ok(NeedletFrame {
        basis,
        filter,
        jmax,
        layout,
        levels,
    })
}

pub fn save_frame(frame: &NeedletFrame, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_frame(frame, std::io::BufWriter::new(file))
}

pub fn load_frame(path: &std::path::Path) -> Result<NeedletFrame> {
    let file = std::fs::File::open(path)?;
    read_frame(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::build_frame;

    #[test]
    fn round_trip_is_bit_exact() {
        let frame = build_frame(
            BasisFamily::jacobi(0.0, 1.0).unwrap(),
            Filter::default_polynomial(),
            4,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_frame(&frame, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"NDLT");
        let back = read_frame(buf.as_slice()).unwrap();
        assert_eq!(back, frame);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_frame(&b"NOPE"[..]), Err(Error::Format(_))));
        let frame = build_frame(
            BasisFamily::FourierPeriodic,
            Filter::default_polynomial(),
            2,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_frame(&frame, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_frame(buf.as_slice()), Err(Error::Format(_))));
    }
}
