//! Manifest-driven corpus ingestion.
//!
//! A manifest lists one input per line as `<category>\t<source-tag>\t<path>`.
//! Blank lines and lines starting with `#` are ignored; relative paths are
//! resolved against the manifest's directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    build_code_samples, elf, extract_code, sample_blocks, samples_for_len, usable_instructions,
    Block, CodeSample, CodeSource, Label, Origin, Sample,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub category: Label,
    pub source: String,
    /// Path as written in the manifest; seeds derive from this.
    pub raw_path: String,
    pub path: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let (Some(cat), Some(source), Some(raw_path)) =
                (fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::Dataset(format!(
                    "manifest line {}: expected <category>\\t<source>\\t<path>",
                    n + 1
                )));
            };
            let category = cat
                .parse()
                .map_err(|_| Error::Dataset(format!("manifest line {}: bad category {cat:?}", n + 1)))?;
            let path = if Path::new(raw_path).is_absolute() {
                PathBuf::from(raw_path)
            } else {
                base.join(raw_path)
            };
            entries.push(ManifestEntry {
                category,
                source: source.to_string(),
                raw_path: raw_path.to_string(),
                path,
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::at_path(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }
}

/// Per-(category, source) tallies in the layout of the usual corpus table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceCounts {
    pub files: usize,
    pub blocks: usize,
    pub code: usize,
    pub instructions: usize,
    pub instruction_bytes: usize,
}

impl SourceCounts {
    fn add(&mut self, o: &SourceCounts) {
        self.files += o.files;
        self.blocks += o.blocks;
        self.code += o.code;
        self.instructions += o.instructions;
        self.instruction_bytes += o.instruction_bytes;
    }

    pub fn mean_instruction_len(&self) -> Option<f64> {
        (self.instructions > 0).then(|| self.instruction_bytes as f64 / self.instructions as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusSummary {
    pub rows: BTreeMap<(Label, String), SourceCounts>,
}

impl CorpusSummary {
    pub fn category_total(&self, label: Label) -> SourceCounts {
        let mut total = SourceCounts::default();
        for ((l, _), c) in &self.rows {
            if *l == label {
                total.add(c);
            }
        }
        total
    }
}

impl fmt::Display for CorpusSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "category\tsource\tfile\tblock\tcode\tmean_insn_len")?;
        let mut grand = SourceCounts::default();
        for label in [Label::Program, Label::Others] {
            for ((l, source), c) in &self.rows {
                if *l == label {
                    write_row(f, &label.to_string(), source, c)?;
                }
            }
            let total = self.category_total(label);
            write_row(f, &label.to_string(), "Total", &total)?;
            grand.add(&total);
        }
        write_row(f, "Total", "", &grand)
    }
}

fn write_row(f: &mut fmt::Formatter<'_>, cat: &str, source: &str, c: &SourceCounts) -> fmt::Result {
    let mean = c
        .mean_instruction_len()
        .map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
    writeln!(
        f,
        "{cat}\t{source}\t{}\t{}\t{}\t{mean}",
        c.files, c.blocks, c.code
    )
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub blocks: Vec<Block>,
    pub code: Vec<CodeSample>,
    pub summary: CorpusSummary,
    /// Entries that could not be read or parsed, with the reason.
    pub failures: Vec<(PathBuf, String)>,
}

impl Corpus {
    pub fn block_samples(&self) -> Vec<Sample> {
        self.blocks.iter().map(|b| b.sample.clone()).collect()
    }

    pub fn code_samples(&self) -> Vec<Sample> {
        self.code.iter().map(|c| c.sample.clone()).collect()
    }
}

/// FNV-1a, stable across platforms and toolchains.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for one (file, stream) pair, independent of processing order.
pub fn derive_seed(master: u64, key: &str, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = master ^ fnv1a(key.as_bytes()) ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const BLOCK_STREAM: u64 = 1;
const CODE_STREAM: u64 = 2;

struct FileResult {
    blocks: Vec<Block>,
    code: Vec<CodeSample>,
    counts: SourceCounts,
}

fn ingest(entry: &ManifestEntry, seed: u64) -> Result<FileResult> {
    let data = fs::read(&entry.path).map_err(Error::at_path(&entry.path))?;
    let kind = if entry.category.is_program() && elf::is_elf(&data) {
        CodeSource::ElfObject
    } else {
        CodeSource::Raw
    };
    let code = extract_code(&data, kind)?;
    let count = samples_for_len(code.len());

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &entry.raw_path, BLOCK_STREAM));
    let blocks: Vec<Block> = sample_blocks(&code, count, entry.category, &mut rng)
        .into_iter()
        .map(|(off, sample)| Block {
            sample,
            origin: Origin {
                path: entry.path.clone(),
                offset: Some(off),
            },
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &entry.raw_path, CODE_STREAM));
    let code_samples: Vec<CodeSample> = build_code_samples(&code, count, entry.category, &mut rng)
        .into_iter()
        .map(|sample| CodeSample {
            sample,
            origin: Origin {
                path: entry.path.clone(),
                offset: None,
            },
        })
        .collect();

    let insns = usable_instructions(&code);
    let counts = SourceCounts {
        files: 1,
        blocks: blocks.len(),
        code: code_samples.len(),
        instructions: insns.len(),
        instruction_bytes: insns.iter().map(|i| i.len()).sum(),
    };
    Ok(FileResult {
        blocks,
        code: code_samples,
        counts,
    })
}

/// Samples every manifest entry. Unreadable entries are recorded in
/// `failures` and skipped. Output does not depend on `parallel`.
pub fn build_corpus(manifest: &CorpusManifest, seed: u64, parallel: bool) -> Corpus {
    let results: Vec<Result<FileResult>> = if parallel {
        manifest
            .entries
            .par_iter()
            .map(|e| ingest(e, seed))
            .collect()
    } else {
        manifest.entries.iter().map(|e| ingest(e, seed)).collect()
    };

    let mut corpus = Corpus::default();
    for (entry, result) in manifest.entries.iter().zip(results) {
        match result {
            Ok(r) => {
                corpus
                    .summary
                    .rows
                    .entry((entry.category, entry.source.clone()))
                    .or_default()
                    .add(&r.counts);
                corpus.blocks.extend(r.blocks);
                corpus.code.extend(r.code);
            }
            Err(e) => {
                let why = match e {
                    Error::Path { source, .. } => source.to_string(),
                    other => other.to_string(),
                };
                corpus.failures.push((entry.path.clone(), why));
            }
        }
    }
    corpus
}
