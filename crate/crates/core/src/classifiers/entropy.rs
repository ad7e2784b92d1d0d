//! Byte-entropy range classifier.

use std::fmt;

use crate::dataset::{Label, Sample, SAMPLE_BYTES};
use crate::error::{Error, Result};

/// Grid resolution used when searching for the best range.
pub const GRID_STEPS: usize = 1000;

/// Shannon entropy of the byte histogram divided by 8, in `[0, 1]`.
/// Works on any nonempty window; empty input gives 0.
pub fn entropy_rate_of(bytes: &[u8]) -> f64 {
    let mut hist = [0u32; 256];
    for &b in bytes {
        hist[b as usize] += 1;
    }
    entropy_from_histogram(&hist, bytes.len())
}

pub(crate) fn entropy_from_histogram(hist: &[u32; 256], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h: f64 = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = f64::from(c) / n;
            -p * p.log2()
        })
        .sum();
    (h / 8.0).clamp(0.0, 1.0)
}

/// Entropy rate of a 256-byte block.
pub fn entropy_rate(block: &[u8]) -> Result<f64> {
    if block.len() != SAMPLE_BYTES {
        return Err(Error::BlockSize {
            expected: SAMPLE_BYTES,
            actual: block.len(),
        });
    }
    Ok(entropy_rate_of(block))
}

/// Closed interval of entropy rates classified as code.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyRange {
    low: f64,
    high: f64,
}

impl EntropyRange {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low > high {
            return Err(Error::Config(format!("invalid entropy range [{low}, {high}]")));
        }
        Ok(Self { low, high })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn contains(&self, h: f64) -> bool {
        self.low <= h && h <= self.high
    }

    pub fn classify_entropy(&self, h: f64) -> Label {
        if self.contains(h) {
            Label::Program
        } else {
            Label::Others
        }
    }

    pub fn classify(&self, block: &[u8]) -> Label {
        self.classify_entropy(entropy_rate_of(block))
    }

    /// True when the two closed intervals share a point.
    pub fn overlaps(&self, low: f64, high: f64) -> bool {
        self.low <= high && low <= self.high
    }
}

impl fmt::Display for EntropyRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}--{:.3}", self.low, self.high)
    }
}

/// Parses `low--high` (the display form) or `low,high`.
impl std::str::FromStr for EntropyRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (lo, hi) = s
            .split_once("--")
            .or_else(|| s.split_once(','))
            .ok_or_else(|| Error::Config(format!("entropy range {s:?} is not low--high")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad entropy bound {v:?}")))
        };
        Self::new(num(lo)?, num(hi)?)
    }
}

/// The `i`-th grid boundary.
pub fn grid_point(i: usize) -> f64 {
    i as f64 / GRID_STEPS as f64
}

/// Picks the grid range `[i/1000, j/1000]` with the highest F-measure on
/// `(entropy, label)` pairs. Ties go to the smallest low bound, then the
/// smallest high bound.
pub fn fit_entropy_range(train: &[(f64, Label)]) -> Result<EntropyRange> {
    let first = train.first().ok_or(Error::Empty("fit_entropy_range"))?.1;
    if train.iter().all(|(_, l)| *l == first) {
        return Err(Error::SingleLabel(first));
    }

    // le[i] / lt[i]: counts with entropy <= / < grid point i, per label.
    let mut program: Vec<f64> = Vec::new();
    let mut others: Vec<f64> = Vec::new();
    for &(h, l) in train {
        if l.is_program() {
            program.push(h);
        } else {
            others.push(h);
        }
    }
    program.sort_by(f64::total_cmp);
    others.sort_by(f64::total_cmp);
    let cumulative = |sorted: &[f64]| -> (Vec<usize>, Vec<usize>) {
        (0..=GRID_STEPS)
            .map(|i| {
                let g = grid_point(i);
                (
                    sorted.partition_point(|&h| h <= g),
                    sorted.partition_point(|&h| h < g),
                )
            })
            .unzip()
    };
    let (p_le, p_lt) = cumulative(&program);
    let (o_le, o_lt) = cumulative(&others);
    let positives = program.len();

    // F = 2tp / (tp + fp + positives); kept as a fraction so that equal
    // scores compare equal.
    let mut best = ((0u64, 1u64), 0, 0);
    for lo in 0..=GRID_STEPS {
        for hi in lo..=GRID_STEPS {
            let tp = (p_le[hi] - p_lt[lo]) as u64;
            let fp = (o_le[hi] - o_lt[lo]) as u64;
            let f = (2 * tp, tp + fp + positives as u64);
            if u128::from(f.0) * u128::from(best.0 .1) > u128::from(best.0 .0) * u128::from(f.1) {
                best = (f, lo, hi);
            }
        }
    }
    EntropyRange::new(grid_point(best.1), grid_point(best.2))
}

/// Convenience wrapper computing entropies of labeled blocks first.
pub fn fit_entropy_range_on(samples: &[Sample]) -> Result<EntropyRange> {
    let pairs: Vec<(f64, Label)> = samples
        .iter()
        .map(|s| (entropy_rate_of(&s.bytes), s.label))
        .collect();
    fit_entropy_range(&pairs)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy_rate(&[7u8; 256]).unwrap(), 0.0);
        let mut two = [1u8; 256];
        two[..128].fill(2);
        assert!((entropy_rate(&two).unwrap() - 0.125).abs() < 1e-15);
        let all: Vec<u8> = (0..=255).collect();
        assert!((entropy_rate(&all).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            entropy_rate(&[0u8; 10]),
            Err(Error::BlockSize { .. })
        ));
    }

    #[test]
    fn classify_cases() {
        let r = EntropyRange::new(0.408, 0.753).unwrap();
        assert_eq!(r.classify_entropy(0.5), Label::Program);
        assert_eq!(r.classify_entropy(0.0), Label::Others);
        assert_eq!(r.classify_entropy(0.408), Label::Program);
        assert_eq!(r.classify_entropy(0.753), Label::Program);
        assert!(EntropyRange::new(0.6, 0.5).is_err());
        assert!(EntropyRange::new(-0.1, 0.5).is_err());
    }

    #[test]
    fn range_text_round_trip() {
        let r = EntropyRange::new(0.408, 0.753).unwrap();
        assert_eq!(r.to_string(), "0.408--0.753");
        assert_eq!(r.to_string().parse::<EntropyRange>().unwrap(), r);
        assert_eq!("0.4, 0.7".parse::<EntropyRange>().unwrap(), EntropyRange::new(0.4, 0.7).unwrap());
        assert!("0.7--0.4".parse::<EntropyRange>().is_err());
        assert!("half".parse::<EntropyRange>().is_err());
    }

    #[test]
    fn separable_fit() {
        let mut data = vec![(0.5, Label::Program); 10];
        data.extend(vec![(0.9, Label::Others); 10]);
        let r = fit_entropy_range(&data).unwrap();
        assert!(r.contains(0.5) && !r.contains(0.9));
        // smallest low bound wins among perfect ranges
        assert_eq!(r.low(), 0.0);
        assert_eq!(r.high(), 0.5);
    }

    #[test]
    fn single_label_rejected() {
        let data = vec![(0.5, Label::Program); 3];
        assert!(matches!(
            fit_entropy_range(&data),
            Err(Error::SingleLabel(Label::Program))
        ));
        assert!(fit_entropy_range(&[]).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut bytes in prop::collection::vec(any::<u8>(), 256), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let h = entropy_rate(&bytes).unwrap();
            bytes.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(h, entropy_rate(&bytes).unwrap());
            prop_assert!((0.0..=1.0).contains(&h));
        }
    }
}
