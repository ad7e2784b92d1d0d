//! Block and code-sample datasets.
//!
//! A *block* is a raw 256-byte fragment. A *code sample* is 16 decoded
//! instructions, each zero-padded to 16 bytes, packed into 256 bytes
//! (2048 bits). Both serialize to the same 257-byte record.

pub mod corpus;
pub mod elf;
pub mod format;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::x86::{self, FIXED_INSTRUCTION_LEN};

pub use corpus::{build_corpus, Corpus, CorpusManifest, CorpusSummary, ManifestEntry};
pub use format::{read_dataset, write_dataset, Dataset, DatasetKind};

/// Bytes per block and per packed code sample.
pub const SAMPLE_BYTES: usize = 256;
/// Bits per sample as fed to the networks.
pub const SAMPLE_BITS: usize = SAMPLE_BYTES * 8;
/// Instructions packed into one code sample.
pub const INSTRUCTIONS_PER_SAMPLE: usize = SAMPLE_BYTES / FIXED_INSTRUCTION_LEN;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Others = 0,
    Program = 1,
}

impl Label {
    pub fn to_byte(self) -> u8 {
        self as u8
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Label::Others),
            1 => Some(Label::Program),
            _ => None,
        }
    }

    pub fn is_program(self) -> bool {
        self == Label::Program
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Program => "Program",
            Label::Others => "Others",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "program" => Ok(Label::Program),
            "others" => Ok(Label::Others),
            _ => Err(Error::Dataset(format!("unknown category {s:?}"))),
        }
    }
}

/// One labeled 256-byte record, as stored in a dataset file.
#[derive(Clone, PartialEq, Eq)]
pub struct Sample {
    pub label: Label,
    pub bytes: [u8; SAMPLE_BYTES],
}

impl fmt::Debug for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sample")
            .field("label", &self.label)
            .field("head", &&self.bytes[..16])
            .finish_non_exhaustive()
    }
}

impl Sample {
    pub fn new(label: Label, bytes: [u8; SAMPLE_BYTES]) -> Self {
        Self { label, bytes }
    }

    /// Copies a 256-byte slice into a sample.
    pub fn from_slice(label: Label, bytes: &[u8]) -> Result<Self> {
        let bytes: [u8; SAMPLE_BYTES] = bytes.try_into().map_err(|_| Error::BlockSize {
            expected: SAMPLE_BYTES,
            actual: bytes.len(),
        })?;
        Ok(Self { label, bytes })
    }

    /// True if every 16-byte slot ends in a zero byte, which any padded
    /// instruction of at most 15 bytes does.
    pub fn has_padded_slots(&self) -> bool {
        self.bytes
            .chunks_exact(FIXED_INSTRUCTION_LEN)
            .all(|slot| slot[FIXED_INSTRUCTION_LEN - 1] == 0)
    }
}

/// Where a sample came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Origin {
    pub path: PathBuf,
    pub offset: Option<usize>,
}

/// A raw fragment sampled from a file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub sample: Sample,
    pub origin: Origin,
}

/// Sixteen padded instructions drawn from a file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSample {
    pub sample: Sample,
    pub origin: Origin,
}

/// How to get code bytes out of an input file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeSource {
    ElfObject,
    ElfExecutable,
    Raw,
}

/// Returns the bytes the samplers should see: the concatenated executable
/// sections for ELF inputs, the input itself for raw ones.
pub fn extract_code(file: &[u8], kind: CodeSource) -> Result<Vec<u8>> {
    match kind {
        CodeSource::Raw => Ok(file.to_vec()),
        CodeSource::ElfObject | CodeSource::ElfExecutable => elf::executable_bytes(file),
    }
}

/// Draws `count` blocks at independent uniform offsets. Overlap is allowed.
/// Inputs shorter than one block yield nothing.
pub fn sample_blocks<R: Rng + ?Sized>(
    code: &[u8],
    count: usize,
    label: Label,
    rng: &mut R,
) -> Vec<(usize, Sample)> {
    if code.len() < SAMPLE_BYTES {
        log::warn!(
            "skipping input of {} bytes: shorter than one block",
            code.len()
        );
        return Vec::new();
    }
    let last = code.len() - SAMPLE_BYTES;
    (0..count)
        .map(|_| {
            let off = rng.gen_range(0..=last);
            let mut bytes = [0u8; SAMPLE_BYTES];
            bytes.copy_from_slice(&code[off..off + SAMPLE_BYTES]);
            (off, Sample::new(label, bytes))
        })
        .collect()
}

/// Packs 16 instructions into one 256-byte sample.
pub fn pack_instructions<'a, I>(instructions: I) -> [u8; SAMPLE_BYTES]
where
    I: IntoIterator<Item = &'a x86::Instruction>,
{
    let mut bytes = [0u8; SAMPLE_BYTES];
    for (slot, insn) in bytes
        .chunks_exact_mut(FIXED_INSTRUCTION_LEN)
        .zip(instructions)
    {
        slot.copy_from_slice(insn.pad().as_bytes());
    }
    bytes
}

/// Instructions usable for code samples: the full decode minus a tail cut
/// off by the end of the stream.
pub fn usable_instructions(code: &[u8]) -> Vec<x86::Instruction> {
    let mut insns = x86::decode_stream(code);
    if let Some(last) = insns.last() {
        if !last.is_valid() && last.offset() + last.len() == code.len() {
            insns.pop();
        }
    }
    insns
}

/// Draws `count` code samples. Each takes 16 distinct instructions chosen
/// uniformly without replacement and keeps them in file order. Inputs with
/// fewer than 16 usable instructions yield nothing.
pub fn build_code_samples<R: Rng + ?Sized>(
    code: &[u8],
    count: usize,
    label: Label,
    rng: &mut R,
) -> Vec<Sample> {
    let insns = usable_instructions(code);
    if insns.len() < INSTRUCTIONS_PER_SAMPLE {
        log::warn!(
            "skipping input with {} usable instructions (need {})",
            insns.len(),
            INSTRUCTIONS_PER_SAMPLE
        );
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let mut picks = index::sample(rng, insns.len(), INSTRUCTIONS_PER_SAMPLE).into_vec();
            picks.sort_unstable();
            Sample::new(label, pack_instructions(picks.iter().map(|&i| &insns[i])))
        })
        .collect()
}

/// Sample count for a file of `len` code bytes: one per 256 bytes, at
/// least one.
pub fn samples_for_len(len: usize) -> usize {
    (len / SAMPLE_BYTES).max(1)
}
