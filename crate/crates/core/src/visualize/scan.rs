//! Sliding-window classification of a whole file, one decision per byte
//! offset.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use super::image::{Image, Rgb};
use super::render::{GRAY, GREEN, RED};
use crate::classifiers::models::Classifier;
use crate::dataset::{pack_instructions, Label, INSTRUCTIONS_PER_SAMPLE, SAMPLE_BYTES};
use crate::error::{Error, Result};
use crate::x86::{instructions_from, Instruction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Decision {
    Program,
    Others,
    /// Fewer than 16 whole instructions remain after the offset.
    Undecodable,
}

impl Decision {
    pub fn color(self) -> Rgb {
        match self {
            Decision::Program => RED,
            Decision::Others => GREEN,
            Decision::Undecodable => GRAY,
        }
    }
}

impl From<Label> for Decision {
    fn from(l: Label) -> Self {
        match l {
            Label::Program => Decision::Program,
            Label::Others => Decision::Others,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Program => "Program",
            Decision::Others => "Others",
            Decision::Undecodable => "Undecodable",
        })
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "program" => Ok(Decision::Program),
            "others" => Ok(Decision::Others),
            "undecodable" => Ok(Decision::Undecodable),
            _ => Err(Error::Config(format!("unknown decision {s:?}"))),
        }
    }
}

/// What each decision looked at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    /// `file[o..o + n]`.
    Bytes(usize),
    /// The first `n` instructions decoded from `o`.
    Instructions(usize),
}

impl Window {
    pub fn len(self) -> usize {
        match self {
            Window::Bytes(n) | Window::Instructions(n) => n,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanReport {
    pub file_len: usize,
    pub window: Window,
    /// Decision for the window starting at each offset, shift 1.
    pub decisions: Vec<Decision>,
}

impl ScanReport {
    pub fn count(&self, d: Decision) -> usize {
        self.decisions.iter().filter(|&&x| x == d).count()
    }

    /// Share of `Program` among the decisions in `range`.
    pub fn program_fraction(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.decisions[range.start.min(self.decisions.len())..range.end.min(self.decisions.len())];
        if slice.is_empty() {
            return 0.0;
        }
        slice.iter().filter(|&&d| d == Decision::Program).count() as f64 / slice.len() as f64
    }

    /// `offset\tdecision` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.decisions.len() * 12);
        for (o, d) in self.decisions.iter().enumerate() {
            writeln!(out, "{o}\t{d}").unwrap();
        }
        out
    }

    /// Parses [`ScanReport::to_text`] output. Window and file length are
    /// not part of the text and must be supplied.
    pub fn from_text(text: &str, file_len: usize, window: Window) -> Result<Self> {
        let mut decisions = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let (o, d) = line
                .split_once('\t')
                .ok_or_else(|| Error::Config(format!("scan line {}: missing tab", n + 1)))?;
            if o.parse::<usize>().ok() != Some(n) {
                return Err(Error::Config(format!("scan line {}: offset out of order", n + 1)));
            }
            decisions.push(d.parse()?);
        }
        Ok(Self {
            file_len,
            window,
            decisions,
        })
    }
}

/// Offsets classified per batch.
const SCAN_CHUNK: usize = 2048;

/// The packed 16-instruction sample starting at `offset`, or `None` when
/// the stream ends first. An instruction cut off by the end of the file
/// does not count.
pub fn instruction_window(file: &[u8], offset: usize) -> Option<[u8; SAMPLE_BYTES]> {
    let insns: Vec<Instruction> = instructions_from(file, offset)
        .take(INSTRUCTIONS_PER_SAMPLE)
        .collect();
    let last = insns.last()?;
    if insns.len() < INSTRUCTIONS_PER_SAMPLE
        || (!last.is_valid() && last.offset() + last.len() == file.len())
    {
        return None;
    }
    Some(pack_instructions(&insns))
}

fn scan_chunk(file: &[u8], clf: &Classifier, start: usize, end: usize) -> Result<Vec<Decision>> {
    let (inputs, present): (Vec<[u8; SAMPLE_BYTES]>, Vec<bool>) = match clf {
        Classifier::Cnn(_) => {
            let mut inputs = Vec::new();
            let mut present = Vec::with_capacity(end - start);
            for o in start..end {
                match instruction_window(file, o) {
                    Some(w) => {
                        inputs.push(w);
                        present.push(true);
                    }
                    None => present.push(false),
                }
            }
            (inputs, present)
        }
        _ => (
            (start..end)
                .map(|o| file[o..o + SAMPLE_BYTES].try_into().unwrap())
                .collect(),
            vec![true; end - start],
        ),
    };
    let labels = clf.classify(&inputs, false)?;
    let mut labels = labels.into_iter();
    Ok(present
        .into_iter()
        .map(|p| match p {
            true => labels.next().expect("one label per input").into(),
            false => Decision::Undecodable,
        })
        .collect())
}

/// Classifies every window of `file` at shift 1. Entropy and MLP windows
/// are 256-byte blocks, giving `len - 255` decisions; CNN windows are 16
/// instructions decoded from each offset, giving one decision per byte.
pub fn scan(file: &[u8], clf: &Classifier, parallel: bool) -> Result<ScanReport> {
    if file.is_empty() {
        return Err(Error::Empty("scan input"));
    }
    let (window, count) = match clf {
        Classifier::Cnn(_) => (Window::Instructions(INSTRUCTIONS_PER_SAMPLE), file.len()),
        _ => {
            if file.len() < SAMPLE_BYTES {
                return Err(Error::TooShort {
                    len: file.len(),
                    window: SAMPLE_BYTES,
                });
            }
            (Window::Bytes(SAMPLE_BYTES), file.len() - SAMPLE_BYTES + 1)
        }
    };
    let starts: Vec<usize> = (0..count).step_by(SCAN_CHUNK).collect();
    let run = |&s: &usize| scan_chunk(file, clf, s, (s + SCAN_CHUNK).min(count));
    let parts: Vec<Result<Vec<Decision>>> = if parallel {
        starts.par_iter().map(run).collect()
    } else {
        starts.iter().map(run).collect()
    };
    let mut decisions = Vec::with_capacity(count);
    for p in parts {
        decisions.extend(p?);
    }
    if window == Window::Instructions(INSTRUCTIONS_PER_SAMPLE)
        && decisions.iter().all(|&d| d == Decision::Undecodable)
    {
        return Err(Error::TooShort {
            len: file.len(),
            window: INSTRUCTIONS_PER_SAMPLE,
        });
    }
    Ok(ScanReport {
        file_len: file.len(),
        window,
        decisions,
    })
}

/// Red for `Program`, green for `Others`, gray for undecodable windows.
pub fn render_classification(report: &ScanReport, width: usize) -> Result<Image> {
    Image::from_colors(
        width,
        report.decisions.len(),
        report.decisions.iter().map(|d| d.color()),
    )
}
