//! XARR1 binary serialization.
//!
//! Layout: magic `XARR1`, format code (u8), rank (u8), one little-endian
//! u64 per extent, the values in the format's own little-endian encoding,
//! then one exact-bit byte per element.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::array::{check_shape, XArray, MAX_RANK};
use crate::error::{Error, Result};
use crate::format::FloatFormat;

pub const MAGIC: &[u8; 5] = b"XARR1";

pub fn save<W: Write>(a: &XArray, mut sink: W) -> Result<()> {
    let fmt = a.format();
    let mut buf = Vec::with_capacity(7 + 8 * a.rank() + a.len() * (fmt.byte_width() + 1));
    buf.extend_from_slice(MAGIC);
    buf.push(fmt.code());
    buf.push(a.rank() as u8);
    for &d in a.shape() {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in a.values() {
        fmt.encode(v, &mut buf);
    }
    buf.extend_from_slice(a.bits());
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(())
}

fn read_exact_or_format<R: Read>(src: &mut R, n: usize, what: &str) -> Result<Vec<u8>> {
    // Grow with the data actually present so a lying header cannot force a
    // huge allocation.
    let mut buf = Vec::new();
    src.take(n as u64).read_to_end(&mut buf)?;
    if buf.len() != n {
        return Err(Error::Format(format!(
            "truncated {what}: expected {n} bytes, found {}",
            buf.len()
        )));
    }
    Ok(buf)
}

pub fn load<R: Read>(mut source: R) -> Result<XArray> {
    let head = read_exact_or_format(&mut source, 7, "header")?;
    if &head[..5] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let fmt = FloatFormat::from_code(head[5])
        .ok_or_else(|| Error::Format(format!("unknown format code {}", head[5])))?;
    let rank = head[6] as usize;
    if rank > MAX_RANK {
        return Err(Error::Format(format!("rank {rank} exceeds {MAX_RANK}")));
    }
    let ext = read_exact_or_format(&mut source, 8 * rank, "extents")?;
    let shape = ext
        .chunks_exact(8)
        .map(|c| usize::try_from(u64::from_le_bytes(c.try_into().unwrap())))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Format("extent does not fit in memory".into()))?;
    let n = check_shape(&shape).map_err(|e| Error::Format(e.to_string()))?;
    let width = fmt.byte_width();
    let raw = read_exact_or_format(&mut source, n * width, "values")?;
    let values: Vec<f64> = raw.chunks_exact(width).map(|c| fmt.decode(c)).collect();
    let bits = read_exact_or_format(&mut source, n, "bit counts")?;
    let max = fmt.mantissa_bits();
    for (i, (&v, &b)) in values.iter().zip(&bits).enumerate() {
        if b as u32 > max {
            return Err(Error::Validation(format!(
                "element {i}: {b} exact bits exceeds {max} for {fmt}"
            )));
        }
        let expected = if !v.is_finite() {
            Some(0)
        } else if v == 0.0 {
            Some(max as u8)
        } else {
            None
        };
        if expected.is_some_and(|e| e != b) {
            return Err(Error::Validation(format!(
                "element {i}: {v} cannot carry {b} exact bits"
            )));
        }
    }
    XArray::from_parts(fmt, shape, values, bits)
}

pub fn save_path(a: &XArray, path: impl AsRef<Path>) -> Result<()> {
    save(a, BufWriter::new(File::create(path)?))
}

pub fn load_path(path: impl AsRef<Path>) -> Result<XArray> {
    load(BufReader::new(File::open(path)?))
}

/// Several arrays written back to back.
pub fn save_many<W: Write>(arrays: &[&XArray], mut sink: W) -> Result<()> {
    for a in arrays {
        save(a, &mut sink)?;
    }
    Ok(())
}

pub fn load_many<R: Read>(mut source: R, count: usize) -> Result<Vec<XArray>> {
    (0..count).map(|_| load(&mut source)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> XArray {
        let values: Vec<f64> = (0..12).map(|i| (i as f64 - 5.5) / 3.0).collect();
        let bits: Vec<u8> = (0..12).map(|i| (i * 4) as u8).collect();
        XArray::from_parts(FloatFormat::Binary64, vec![3, 4], values, bits).unwrap()
    }

    fn bytes(a: &XArray) -> Vec<u8> {
        let mut out = Vec::new();
        save(a, &mut out).unwrap();
        out
    }

    #[test]
    fn round_trip() {
        let a = sample();
        let b = load(&bytes(&a)[..]).unwrap();
        assert_eq!(a.shape(), b.shape());
        assert_eq!(a.bits(), b.bits());
        let bits = |x: &XArray| x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn layout() {
        let a = XArray::from_exact_in(FloatFormat::Binary16, vec![2], vec![1.0, -2.0]).unwrap();
        let raw = bytes(&a);
        assert_eq!(&raw[..5], b"XARR1");
        assert_eq!(raw[5], 2);
        assert_eq!(raw[6], 1);
        assert_eq!(&raw[7..15], &2u64.to_le_bytes());
        assert_eq!(raw.len(), 15 + 2 * 2 + 2);
        assert_eq!(&raw[19..], &[11, 11]);
    }

    #[test]
    fn truncation_and_magic() {
        let raw = bytes(&sample());
        for cut in [0, 3, 6, 10, 40, raw.len() - 1] {
            assert!(matches!(load(&raw[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
        let mut bad = raw.clone();
        bad[0] = b'Y';
        assert!(matches!(load(&bad[..]), Err(Error::Format(_))));
        let mut bad = raw.clone();
        bad[5] = 9;
        assert!(matches!(load(&bad[..]), Err(Error::Format(_))));
        let mut bad = raw;
        bad[6] = 9;
        assert!(matches!(load(&bad[..]), Err(Error::Format(_))));
    }

    #[test]
    fn bits_out_of_range_is_validation_error() {
        let mut raw = bytes(&sample());
        let n = raw.len();
        raw[n - 1] = 200;
        assert!(matches!(load(&raw[..]), Err(Error::Validation(_))));
    }

    #[test]
    fn huge_claimed_extent_fails_cleanly() {
        let mut raw = Vec::from(&b"XARR1"[..]);
        raw.extend_from_slice(&[0, 1]);
        raw.extend_from_slice(&(1u64 << 40).to_le_bytes());
        assert!(matches!(load(&raw[..]), Err(Error::Format(_))));
    }

    #[test]
    fn specials_in_every_format() {
        for fmt in FloatFormat::ALL {
            let a = XArray::from_exact_in(
                fmt,
                vec![5],
                vec![f64::NAN, f64::INFINITY, -0.0, 0.0, 1.5],
            )
            .unwrap();
            let b = load(&bytes(&a)[..]).unwrap();
            assert_eq!(b.format(), fmt);
            assert_eq!(a.bits(), b.bits());
            for (x, y) in a.values().iter().zip(b.values()) {
                assert_eq!(x.to_bits(), y.to_bits(), "{fmt}");
            }
        }
    }
}
