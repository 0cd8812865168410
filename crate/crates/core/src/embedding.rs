//! Dense node embedding matrices and their on-disk formats.
//!
//! Binary layout (little-endian): magic `IN2V`, `u16` version (1), `u32` rows,
//! `u32` columns, then `rows * cols` `f32` values in row-major order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng as _;

use crate::error::{In2vError, Result};
use crate::rng::{keyed_rng, tag};

pub const MAGIC: &[u8; 4] = b"IN2V";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(n: usize, d: usize) -> Self {
        EmbeddingMatrix {
            n,
            d,
            values: vec![0.0; n * d],
        }
    }

    pub fn from_vec(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * d {
            return Err(In2vError::validation(format!(
                "{} values for a {n}x{d} embedding matrix",
                values.len()
            )));
        }
        Ok(EmbeddingMatrix { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(In2vError::validation("ragged embedding rows"));
        }
        Ok(EmbeddingMatrix {
            n: rows.len(),
            d,
            values: rows.concat(),
        })
    }

    /// Entries i.i.d. uniform on `[-1/(2d), 1/(2d)]`.
    pub fn init(n: usize, d: usize, seed: u64) -> Self {
        let mut rng = keyed_rng(seed, &[tag::INIT]);
        let half = 0.5 / d as f64;
        let values = (0..n * d).map(|_| rng.random_range(-half..=half)).collect();
        EmbeddingMatrix { n, d, values }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = u32::try_from(self.n).map_err(|_| In2vError::validation("too many rows"))?;
        let d = u32::try_from(self.d).map_err(|_| In2vError::validation("too many columns"))?;
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&n.to_le_bytes());
        out.extend_from_slice(&d.to_le_bytes());
        for &x in &self.values {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(In2vError::validation("not an IN2V embedding file"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(In2vError::validation(format!(
                "unsupported embedding format version {version}"
            )));
        }
        let read_u32 = |at: usize| {
            u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice")) as usize
        };
        let (n, d) = (read_u32(6), read_u32(10));
        let body = &bytes[HEADER_LEN..];
        if body.len() != n * d * 4 {
            return Err(In2vError::validation(format!(
                "embedding body has {} bytes, expected {}",
                body.len(),
                n * d * 4
            )));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
            .collect();
        Ok(EmbeddingMatrix { n, d, values })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| In2vError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| In2vError::io(path, e))?;
        Self::from_bytes(&bytes)
            .map_err(|e| In2vError::validation(format!("{}: {e}", path.display())))
    }

    /// `node_id<TAB>v1 v2 ... vd`, one row per line.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| In2vError::io(path, e))?;
        let mut w = BufWriter::new(file);
        for i in 0..self.n {
            let vals: Vec<String> = self.row(i).iter().map(|x| (*x as f32).to_string()).collect();
            writeln!(w, "{i}\t{}", vals.join(" ")).map_err(|e| In2vError::io(path, e))?;
        }
        w.flush().map_err(|e| In2vError::io(path, e))
    }

    /// Rounds every entry through `f32`, matching what a save/load cycle yields.
    pub fn quantized(&self) -> Self {
        EmbeddingMatrix {
            n: self.n,
            d: self.d,
            values: self.values.iter().map(|&x| x as f32 as f64).collect(),
        }
    }
}
