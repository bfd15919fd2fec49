use std::fs::File;
use std::io::{BufReader, BufWriter, Read as _, Write as _};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::sim::EstimateRecord;
use crate::Field;

const MAGIC: &[u8; 4] = b"RCMF";
const VERSION: u32 = 1;

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serialize a field to the RCMF binary layout: magic, version, d, n
/// (little-endian u32), h (f64), then n^d f64 values row-major.
pub fn field_to_bytes(f: &Field) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * f.shape.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(f.shape.d as u32).to_le_bytes());
    out.extend_from_slice(&(f.shape.n as u32).to_le_bytes());
    out.extend_from_slice(&f.h.to_le_bytes());
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_field(path: &Path, f: &Field) -> Result<()> {
    atomic_write(path, &field_to_bytes(f))
}

pub fn field_from_bytes(bytes: &[u8]) -> Result<Field> {
    let bad = |msg: &str| Error::MalformedField(msg.into());
    if bytes.len() < 20 {
        return Err(bad("truncated header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    if u32_at(4) != VERSION {
        return Err(bad("unsupported version"));
    }
    let d = u32_at(8) as usize;
    let n = u32_at(12) as usize;
    let h = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    if d == 0 || d > 8 || n == 0 || !h.is_finite() || h <= 0.0 {
        return Err(bad("implausible header fields"));
    }
    let len = n
        .checked_pow(d as u32)
        .ok_or_else(|| bad("n^d overflows"))?;
    let expect = 24 + 8 * len;
    if bytes.len() != expect {
        return Err(bad("payload length mismatch"));
    }
    let mut f = GridField::zeros(d, n, h).map_err(|e| Error::MalformedField(e.to_string()))?;
    for (i, v) in f.values.iter_mut().enumerate() {
        *v = f64::from_le_bytes(bytes[24 + 8 * i..32 + 8 * i].try_into().unwrap());
    }
    Ok(f)
}

pub fn read_field(path: &Path) -> Result<Field> {
    let mut buf = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut buf)?;
    field_from_bytes(&buf)
}

/// Append estimate records as CSV; writes the header iff the file is new.
/// Coordinate columns are x1..xd for the dimension of the first record.
pub fn append_records(path: &Path, records: &[EstimateRecord]) -> Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    let d = records[0].x.len();
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    if fresh {
        let mut header = vec!["quantity".to_string(), "lambda".to_string()];
        for i in 1..=d {
            header.push(format!("x{i}"));
        }
        header.extend(["value", "stderr", "n", "config_digest"].map(String::from));
        w.write_record(&header)?;
    }
    for rec in records {
        if rec.x.len() != d {
            return Err(Error::ShapeMismatch(
                "mixed coordinate dimensions in one CSV".into(),
            ));
        }
        let mut row = vec![rec.quantity.clone(), format!("{}", rec.lambda)];
        for xi in &rec.x {
            row.push(format!("{xi}"));
        }
        row.push(format!("{}", rec.value));
        row.push(format!("{}", rec.stderr));
        row.push(format!("{}", rec.n_samples));
        row.push(rec.config_digest.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(std::io::Error::other(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn field_roundtrip_bitexact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut f: Field = GridField::zeros(2, 16, 0.25).unwrap();
        for v in &mut f.values {
            *v = rng.gen_range(-1.0..1.0);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.rcmf");
        write_field(&path, &f).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.shape.d, 2);
        assert_eq!(back.shape.n, 16);
        assert_eq!(back.h, 0.25);
        assert_eq!(back.values, f.values);
        // Byte-identical on rewrite.
        let b1 = field_to_bytes(&f);
        let b2 = field_to_bytes(&back);
        assert_eq!(b1, b2);
    }

    #[test]
    fn malformed_rejected() {
        assert!(field_from_bytes(b"RCMX").is_err());
        let f: Field = GridField::zeros(1, 4, 1.0).unwrap();
        let mut bytes = field_to_bytes(&f);
        bytes.truncate(bytes.len() - 1);
        assert!(matches!(
            field_from_bytes(&bytes),
            Err(Error::MalformedField(_))
        ));
        let mut wrong = field_to_bytes(&f);
        wrong[0] = b'X';
        assert!(field_from_bytes(&wrong).is_err());
    }

    #[test]
    fn csv_append_with_single_header() {
        let rec = |q: &str, v: f64| EstimateRecord {
            quantity: q.into(),
            lambda: 0.5,
            x: vec![1.0, 2.0],
            value: v,
            stderr: 0.01,
            n_samples: 100,
            config_digest: "abc".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        append_records(&path, &[rec("tau", 0.1)]).unwrap();
        append_records(&path, &[rec("tau", 0.2), rec("chi", 3.0)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "quantity,lambda,x1,x2,value,stderr,n,config_digest");
        assert!(lines[2].starts_with("tau,0.5,1,2,0.2,"));
    }
}
