//! NBIN arrays (one JSON header line, then a little-endian payload) and 8-bit
//! PGM previews.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F64,
    C128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbinHeader {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub order: String,
    #[serde(default)]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NbinData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl NbinData {
    pub fn len(&self) -> usize {
        match self {
            NbinData::Real(v) => v.len(),
            NbinData::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            NbinData::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            NbinData::Complex(v) => v.clone(),
        }
    }

    pub fn real_part(&self) -> Vec<f64> {
        match self {
            NbinData::Real(v) => v.clone(),
            NbinData::Complex(v) => v.iter().map(|c| c.re).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NbinArray {
    pub shape: Vec<usize>,
    pub meta: serde_json::Map<String, serde_json::Value>,
    pub data: NbinData,
}

impl NbinArray {
    pub fn real(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        NbinArray::checked(shape, NbinData::Real(values))
    }

    pub fn complex(shape: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        NbinArray::checked(shape, NbinData::Complex(values))
    }

    fn checked(shape: Vec<usize>, data: NbinData) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::SizeMismatch { expected: n, actual: data.len() });
        }
        Ok(NbinArray { shape, meta: serde_json::Map::new(), data })
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Result<Self> {
        self.meta.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn meta_as<T: for<'de> Deserialize<'de>>(&self, key: &str) -> Result<T> {
        let v = self.meta.get(key).ok_or_else(|| Error::Format(format!("NBIN header lacks meta.{key}")))?;
        serde_json::from_value(v.clone()).map_err(|e| Error::Format(format!("meta.{key}: {e}")))
    }

    pub fn dtype(&self) -> Dtype {
        match self.data {
            NbinData::Real(_) => Dtype::F64,
            NbinData::Complex(_) => Dtype::C128,
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = NbinHeader {
            dtype: self.dtype(),
            shape: self.shape.clone(),
            order: "row-major".into(),
            meta: self.meta.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        match &self.data {
            NbinData::Real(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            NbinData::Complex(v) => {
                for c in v {
                    w.write_all(&c.re.to_le_bytes())?;
                    w.write_all(&c.im.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)?;
        if line.pop() != Some(b'\n') {
            return Err(Error::Format("NBIN header is not terminated by a newline".into()));
        }
        let header: NbinHeader = serde_json::from_slice(&line)
            .map_err(|e| Error::Format(format!("bad NBIN header: {e}")))?;
        if header.order != "row-major" {
            return Err(Error::Format(format!("unsupported order {:?}", header.order)));
        }
        let n: usize = header.shape.iter().product();
        let words = match header.dtype {
            Dtype::F64 => n,
            Dtype::C128 => 2 * n,
        };
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        if payload.len() != 8 * words {
            return Err(Error::Format(format!(
                "NBIN payload has {} bytes, header implies {}",
                payload.len(),
                8 * words
            )));
        }
        let floats: Vec<f64> = payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunks of eight")))
            .collect();
        let data = match header.dtype {
            Dtype::F64 => NbinData::Real(floats),
            Dtype::C128 => NbinData::Complex(floats.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()),
        };
        Ok(NbinArray { shape: header.shape, meta: header.meta, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn read(path: &Path) -> Result<Self> {
        NbinArray::read_from(File::open(path)?)
    }
}

/// 8-bit binary PGM of a row-major image, min-max rescaled.
pub fn write_pgm_to(mut w: impl Write, values: &[f64], rows: usize, cols: usize) -> Result<()> {
    if rows * cols != values.len() {
        return Err(Error::SizeMismatch { expected: rows * cols, actual: values.len() });
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    let bytes: Vec<u8> = values.iter().map(|v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8).collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// PGM preview of a 2D array, or of the central slice along the first axis
/// of a 3D one.
pub fn write_pgm(path: &Path, values: &[f64], shape: &[usize]) -> Result<()> {
    let (rows, cols, start) = match shape {
        [r, c] => (*r, *c, 0),
        [s, r, c] => (*r, *c, (s / 2) * r * c),
        _ => return Err(Error::invalid(format!("no preview for shape {shape:?}"))),
    };
    if shape.iter().product::<usize>() != values.len() {
        return Err(Error::SizeMismatch { expected: shape.iter().product(), actual: values.len() });
    }
    write_pgm_to(BufWriter::new(File::create(path)?), &values[start..start + rows * cols], rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_round_trip_is_bit_exact() {
        let v = vec![Complex64::new(1.5, -0.0), Complex64::new(f64::MIN_POSITIVE, 3e300), Complex64::new(-2.0, 0.25)];
        let a = NbinArray::complex(vec![3], v).unwrap().with_meta("r_M", 3.0).unwrap();
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        let b = NbinArray::read_from(buf.as_slice()).unwrap();
        assert_eq!(a, b);
        let first_line = buf.split(|&c| c == b'\n').next().unwrap();
        let header: serde_json::Value = serde_json::from_slice(first_line).unwrap();
        assert_eq!(header["dtype"], "c128");
        assert_eq!(header["order"], "row-major");
        assert_eq!(buf.len(), first_line.len() + 1 + 48);
        assert_eq!(&buf[first_line.len() + 1..][..8], &1.5f64.to_le_bytes());
    }

    #[test]
    fn rejects_truncated_payload() {
        let a = NbinArray::real(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        buf.pop();
        assert!(matches!(NbinArray::read_from(buf.as_slice()), Err(Error::Format(_))));
        assert!(NbinArray::real(vec![3], vec![1.0]).is_err());
        assert!(NbinArray::read_from(&b"{\"dtype\":\"f64\"}"[..]).is_err());
    }

    #[test]
    fn pgm_layout() {
        let mut buf = Vec::new();
        write_pgm_to(&mut buf, &[0.0, 1.0, 2.0, 4.0, 3.0, 4.0], 2, 3).unwrap();
        assert!(buf.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&buf[buf.len() - 6..], &[0, 64, 128, 255, 191, 255]);
    }
}
