//! `OGDS` dataset files.
//!
//! ```text
//! magic   "OGDS"           4 bytes
//! version u8 = 1
//! kind    u8               0 = block, 1 = code
//! seed    u64 LE           master seed used to build the set
//! count   u64 LE           number of records
//! records count x 257      label byte (0 Others, 1 Program) + 256 sample bytes
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Label, Sample, SAMPLE_BYTES};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"OGDS";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 22;
pub const RECORD_LEN: usize = 1 + SAMPLE_BYTES;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    Block = 0,
    Code = 1,
}

impl DatasetKind {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Self::Block),
            1 => Ok(Self::Code),
            _ => Err(Error::Dataset(format!("unknown dataset kind {b}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub seed: u64,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(kind: DatasetKind, seed: u64, samples: Vec<Sample>) -> Self {
        Self {
            kind,
            seed,
            samples,
        }
    }

    /// (Program, Others) record counts.
    pub fn label_counts(&self) -> (usize, usize) {
        let program = self.samples.iter().filter(|s| s.label.is_program()).count();
        (program, self.samples.len() - program)
    }

    pub fn encode<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = [0u8; HEADER_LEN];
        header[..4].copy_from_slice(&MAGIC);
        header[4] = VERSION;
        header[5] = self.kind as u8;
        header[6..14].copy_from_slice(&self.seed.to_le_bytes());
        header[14..22].copy_from_slice(&(self.samples.len() as u64).to_le_bytes());
        w.write_all(&header)?;
        for s in &self.samples {
            w.write_all(&[s.label.to_byte()])?;
            w.write_all(&s.bytes)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn decode<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| Error::Dataset("truncated header".into()))?;
        let magic: [u8; 4] = header[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic {
                what: "dataset",
                found: magic,
            });
        }
        if header[4] != VERSION {
            return Err(Error::BadVersion {
                what: "dataset",
                found: header[4],
            });
        }
        let kind = DatasetKind::from_byte(header[5])?;
        let seed = u64::from_le_bytes(header[6..14].try_into().unwrap());
        let count = u64::from_le_bytes(header[14..22].try_into().unwrap());

        // Cap the preallocation; a corrupt count must not exhaust memory.
        let mut samples = Vec::with_capacity(count.min(1 << 20) as usize);
        let mut rec = [0u8; RECORD_LEN];
        for index in 0..count {
            r.read_exact(&mut rec)
                .map_err(|_| Error::TruncatedRecord { index })?;
            let label = Label::from_byte(rec[0])
                .ok_or_else(|| Error::Dataset(format!("record {index}: bad label {}", rec[0])))?;
            samples.push(Sample::new(label, rec[1..].try_into().unwrap()));
        }
        Ok(Self {
            kind,
            seed,
            samples,
        })
    }
}

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(Error::at_path(path))?;
    dataset.encode(BufWriter::new(file))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(Error::at_path(path))?;
    Dataset::decode(BufReader::new(file))
}
