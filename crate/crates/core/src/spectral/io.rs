//! Binary field dumps: little-endian `u64` rank, `u64` counts, `f64`
//! spacings, then interleaved `f64` real/imaginary pairs in row-major order.
//! A text sidecar (`<path>.hdr`) carries the remaining metadata.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graded::{GradedLayout, Side};
use crate::spectral::{GridSpec, SampledField};

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

pub fn write_field(field: &SampledField, path: &Path, provenance: &str) -> Result<()> {
    let tmp = path.with_extension("part");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        let g = &field.grid;
        w.write_all(&(g.ndim() as u64).to_le_bytes())?;
        for &n in &g.counts {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for &h in &g.spacings {
            w.write_all(&h.to_le_bytes())?;
        }
        for v in &field.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    let side = match field.side {
        Side::Primal => "primal",
        Side::Dual => "dual",
    };
    let header = format!(
        "format = \"le-u64-rank,u64-counts,f64-spacings,c64-values\"\nlayout = \"{}\"\nside = \"{side}\"\ncounts = {:?}\nspacings = {:?}\noffsets = {:?}\nbox_order = {}\nmasked = {}\nprovenance = \"{provenance}\"\n",
        field.layout.spec_string(),
        field.grid.counts,
        field.grid.spacings,
        field.grid.offsets(),
        field.box_order,
        field.masked.len(),
    );
    fs::write(sidecar_path(path), header)?;
    Ok(())
}

fn take<'a>(buf: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    let s = buf
        .get(*pos..*pos + n)
        .ok_or_else(|| Error::Config(format!("field dump truncated at byte {}", *pos)))?;
    *pos += n;
    Ok(s)
}

/// Reads a dump back; layout and side come from the caller.
pub fn read_field(path: &Path, layout: &GradedLayout, side: Side) -> Result<SampledField> {
    let buf = fs::read(path)?;
    let mut pos = 0;
    let u = |pos: &mut usize| -> Result<u64> { Ok(u64::from_le_bytes(take(&buf, pos, 8)?.try_into().unwrap())) };
    let f = |pos: &mut usize| -> Result<f64> { Ok(f64::from_le_bytes(take(&buf, pos, 8)?.try_into().unwrap())) };
    let rank = u(&mut pos)? as usize;
    if rank > 16 {
        return Err(Error::Config(format!("implausible rank {rank} in field dump")));
    }
    let counts = (0..rank).map(|_| u(&mut pos).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let spacings = (0..rank).map(|_| f(&mut pos)).collect::<Result<Vec<_>>>()?;
    let grid = GridSpec::new(counts, spacings)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = f(&mut pos)?;
        let im = f(&mut pos)?;
        values.push(Complex64::new(re, im));
    }
    SampledField::new(layout, side, grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::sample_function;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let l = GradedLayout::euclidean(2).unwrap();
        let g = GridSpec::new(vec![4, 6], vec![0.5, 0.25]).unwrap();
        let field = sample_function(&l, Side::Dual, &g, |x| Complex64::new(x[0], -x[1])).unwrap();
        let p = dir.path().join("f.bin");
        write_field(&field, &p, "derived").unwrap();
        let back = read_field(&p, &l, Side::Dual).unwrap();
        assert_eq!(back.values, field.values);
        assert_eq!(back.grid, field.grid);
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 8 + 16 + 16 + 24 * 16);
        assert!(fs::read_to_string(sidecar_path(&p)).unwrap().contains("side = \"dual\""));
    }
}
