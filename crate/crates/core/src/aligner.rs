//! Length-based dynamic-programming aligner.
//!
//! Segments are measured in Unicode code points. Each bead pays a fixed
//! penalty for its shape plus a distance term derived from how far the target
//! length strays from the source length under a normal model:
//!
//! ```text
//! delta = (tgt_len - src_len * c) / sqrt(max(src_len, 1) * s2)
//! cost  = penalty[kind] + 100 * -log2(max(2 * (1 - Phi(|delta|)), 1e-12))
//! ```

use std::fmt;
use std::ops::Range;

use libm::erfc;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::ids::{Level, SegmentId};
use crate::model::{new_link_id, AlignmentLink, Document, Origin};

/// Lower bound on the two-sided tail probability.
pub const TAIL_FLOOR: f64 = 1e-12;

/// The six bead shapes available to the automatic aligner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BeadKind {
    #[serde(rename = "1:1")]
    OneOne,
    #[serde(rename = "1:0")]
    OneZero,
    #[serde(rename = "0:1")]
    ZeroOne,
    #[serde(rename = "2:1")]
    TwoOne,
    #[serde(rename = "1:2")]
    OneTwo,
    #[serde(rename = "2:2")]
    TwoTwo,
}

impl BeadKind {
    /// Tie-break preference, most preferred first.
    pub const PREFERENCE: [BeadKind; 6] = [
        BeadKind::OneOne,
        BeadKind::OneTwo,
        BeadKind::TwoOne,
        BeadKind::TwoTwo,
        BeadKind::ZeroOne,
        BeadKind::OneZero,
    ];

    /// (source segments, target segments) consumed by the bead.
    pub fn shape(self) -> (usize, usize) {
        match self {
            BeadKind::OneOne => (1, 1),
            BeadKind::OneZero => (1, 0),
            BeadKind::ZeroOne => (0, 1),
            BeadKind::TwoOne => (2, 1),
            BeadKind::OneTwo => (1, 2),
            BeadKind::TwoTwo => (2, 2),
        }
    }

    /// The same bead seen from the other language.
    pub fn transposed(self) -> BeadKind {
        match self {
            BeadKind::OneZero => BeadKind::ZeroOne,
            BeadKind::ZeroOne => BeadKind::OneZero,
            BeadKind::TwoOne => BeadKind::OneTwo,
            BeadKind::OneTwo => BeadKind::TwoOne,
            k => k,
        }
    }

    pub fn rank(self) -> usize {
        Self::PREFERENCE.iter().position(|k| *k == self).unwrap()
    }
}

impl fmt::Display for BeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, n) = self.shape();
        write!(f, "{m}:{n}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeadPenalties {
    #[serde(rename = "1:1")]
    pub one_one: u32,
    #[serde(rename = "1:0")]
    pub one_zero: u32,
    #[serde(rename = "0:1")]
    pub zero_one: u32,
    #[serde(rename = "2:1")]
    pub two_one: u32,
    #[serde(rename = "1:2")]
    pub one_two: u32,
    #[serde(rename = "2:2")]
    pub two_two: u32,
}

impl Default for BeadPenalties {
    fn default() -> Self {
        BeadPenalties {
            one_one: 0,
            one_zero: 450,
            zero_one: 450,
            two_one: 230,
            one_two: 230,
            two_two: 440,
        }
    }
}

impl BeadPenalties {
    pub fn get(&self, kind: BeadKind) -> u32 {
        match kind {
            BeadKind::OneOne => self.one_one,
            BeadKind::OneZero => self.one_zero,
            BeadKind::ZeroOne => self.zero_one,
            BeadKind::TwoOne => self.two_one,
            BeadKind::OneTwo => self.one_two,
            BeadKind::TwoTwo => self.two_two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignerParams {
    pub mean_ratio: f64,
    pub variance: f64,
    pub bead_penalties: BeadPenalties,
}

impl Default for AlignerParams {
    fn default() -> Self {
        AlignerParams {
            mean_ratio: 1.0,
            variance: 6.8,
            bead_penalties: BeadPenalties::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid aligner parameters: {0}")]
pub struct ParamsError(pub &'static str);

impl AlignerParams {
    pub fn check(&self) -> Result<(), ParamsError> {
        if !(self.mean_ratio.is_finite() && self.mean_ratio > 0.0) {
            return Err(ParamsError("mean_ratio must be a positive finite number"));
        }
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(ParamsError("variance must be a positive finite number"));
        }
        Ok(())
    }
}

/// Cost of one bead covering `src_len` source and `tgt_len` target code points.
pub fn bead_cost(src_len: usize, tgt_len: usize, kind: BeadKind, params: &AlignerParams) -> f64 {
    let src = src_len as f64;
    let tgt = tgt_len as f64;
    let delta = (tgt - src * params.mean_ratio) / (src.max(1.0) * params.variance).sqrt();
    // 2 * (1 - Phi(|d|)) == erfc(|d| / sqrt(2))
    let tail = erfc(delta.abs() / std::f64::consts::SQRT_2).max(TAIL_FLOOR);
    params.bead_penalties.get(kind) as f64 - 100.0 * tail.log2()
}

/// A contiguous alignment unit over index ranges of the two segment lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bead {
    pub kind: BeadKind,
    pub source: Range<usize>,
    pub target: Range<usize>,
}

/// Total cost of a bead sequence, summed left to right.
pub fn total_cost(beads: &[Bead], src_lens: &[usize], tgt_lens: &[usize], params: &AlignerParams) -> f64 {
    beads.iter().fold(0.0, |acc, b| {
        let s: usize = src_lens[b.source.clone()].iter().sum();
        let t: usize = tgt_lens[b.target.clone()].iter().sum();
        acc + bead_cost(s, t, b.kind, params)
    })
}

/// Aligns two lists of segment lengths.
///
/// Returns the minimum-cost bead sequence covering both lists exactly once, in
/// order. Among equal-cost predecessors at a cell the bead earlier in
/// [`BeadKind::PREFERENCE`] wins; the backtrace therefore prefers the best
/// bead at the latest decision point first.
pub fn align_lengths(src: &[usize], tgt: &[usize], params: &AlignerParams) -> Vec<Bead> {
    let (n, m) = (src.len(), tgt.len());
    let width = m + 1;
    let mut cost = vec![f64::INFINITY; (n + 1) * width];
    let mut back: Vec<Option<BeadKind>> = vec![None; (n + 1) * width];
    cost[0] = 0.0;

    let prefix = |lens: &[usize]| -> Vec<usize> {
        std::iter::once(0)
            .chain(lens.iter().scan(0, |acc, l| {
                *acc += l;
                Some(*acc)
            }))
            .collect()
    };
    let src_pre = prefix(src);
    let tgt_pre = prefix(tgt);

    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut best_kind = None;
            for kind in BeadKind::PREFERENCE {
                let (a, b) = kind.shape();
                if a > i || b > j {
                    continue;
                }
                let prev = cost[(i - a) * width + (j - b)];
                if !prev.is_finite() {
                    continue;
                }
                let s = src_pre[i] - src_pre[i - a];
                let t = tgt_pre[j] - tgt_pre[j - b];
                let candidate = prev + bead_cost(s, t, kind, params);
                if candidate < best {
                    best = candidate;
                    best_kind = Some(kind);
                }
            }
            cost[i * width + j] = best;
            back[i * width + j] = best_kind;
        }
    }

    let mut beads = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let kind = back[i * width + j].expect("every cell is reachable through 1:0 and 0:1 beads");
        let (a, b) = kind.shape();
        beads.push(Bead {
            kind,
            source: i - a..i,
            target: j - b..j,
        });
        i -= a;
        j -= b;
    }
    beads.reverse();
    beads
}

/// Code points in the NFC form of `text`.
pub fn nfc_len(text: &str) -> usize {
    text.nfc().count()
}

/// Aligns two lists of segment texts by NFC code-point length.
pub fn align<S: AsRef<str>, T: AsRef<str>>(src: &[S], tgt: &[T], params: &AlignerParams) -> Vec<Bead> {
    let src: Vec<usize> = src.iter().map(|s| nfc_len(s.as_ref())).collect();
    let tgt: Vec<usize> = tgt.iter().map(|s| nfc_len(s.as_ref())).collect();
    align_lengths(&src, &tgt, params)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bead {index} ({kind}) spans outside the segment lists ({src_len} source, {tgt_len} target)")]
pub struct SpanError {
    pub index: usize,
    pub kind: BeadKind,
    pub src_len: usize,
    pub tgt_len: usize,
}

/// Converts beads over explicit id lists into baseline links.
pub fn beads_to_links_over(
    beads: &[Bead],
    level: Level,
    src_ids: &[SegmentId],
    tgt_ids: &[SegmentId],
) -> Result<Vec<AlignmentLink>, SpanError> {
    beads
        .iter()
        .enumerate()
        .map(|(index, bead)| {
            let (a, b) = bead.kind.shape();
            let fits = bead.source.end <= src_ids.len()
                && bead.target.end <= tgt_ids.len()
                && bead.source.len() == a
                && bead.target.len() == b;
            if !fits {
                return Err(SpanError {
                    index,
                    kind: bead.kind,
                    src_len: src_ids.len(),
                    tgt_len: tgt_ids.len(),
                });
            }
            Ok(AlignmentLink {
                link_id: new_link_id(),
                level,
                source_ids: src_ids[bead.source.clone()].iter().copied().collect(),
                target_ids: tgt_ids[bead.target.clone()].iter().copied().collect(),
                comment: String::new(),
                techniques: Default::default(),
                origin: Origin::Baseline,
                confidence: None,
            })
        })
        .collect()
}

/// Converts beads over the documents' full segment lists at `level` into
/// baseline links.
pub fn beads_to_links(
    beads: &[Bead],
    level: Level,
    src_doc: &Document,
    tgt_doc: &Document,
) -> Result<Vec<AlignmentLink>, SpanError> {
    beads_to_links_over(
        beads,
        level,
        &src_doc.segment_ids(level),
        &tgt_doc.segment_ids(level),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DocumentMeta, Role};

    fn defaults() -> AlignerParams {
        AlignerParams::default()
    }

    #[test]
    fn cost_is_zero_for_equal_lengths() {
        assert_eq!(bead_cost(100, 100, BeadKind::OneOne, &defaults()), 0.0);
    }

    #[test]
    fn cost_matches_high_precision_reference() {
        // Reference values from a 50-digit erfc evaluation of the cost formula.
        let cases = [
            (100, 160, BeadKind::OneOne, 554.640_931_035_240_3),
            (0, 40, BeadKind::ZeroOne, 4436.313_713_864_835),
            (41, 41, BeadKind::TwoOne, 230.0),
            (21, 41, BeadKind::OneOne, 340.815_274_002_577_77),
            (20, 0, BeadKind::OneZero, 803.369_641_845_630_3),
            (37, 50, BeadKind::OneOne, 127.767_685_426_527_4),
            (1, 0, BeadKind::OneZero, 501.176_873_017_902_9),
            (200, 1, BeadKind::OneOne, 2380.802_682_732_026),
        ];
        for (s, t, kind, want) in cases {
            let got = bead_cost(s, t, kind, &defaults());
            assert!((got - want).abs() < 1e-9, "{s},{t},{kind}: {got} vs {want}");
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(align_lengths(&[], &[], &defaults()).is_empty());
        assert_eq!(
            align(&["abcdefghij"], &[] as &[&str], &defaults()),
            vec![Bead { kind: BeadKind::OneZero, source: 0..1, target: 0..0 }]
        );
    }

    #[test]
    fn merges_two_short_sources() {
        let beads = align_lengths(&[20, 21], &[41], &defaults());
        assert_eq!(beads, vec![Bead { kind: BeadKind::TwoOne, source: 0..2, target: 0..1 }]);
    }

    #[test]
    fn tie_break_prefers_one_to_one() {
        // Two identical 1:1 pairs: 1:1,1:1 costs 0; nothing else can tie.
        let beads = align_lengths(&[10, 10], &[10, 10], &defaults());
        assert!(beads.iter().all(|b| b.kind == BeadKind::OneOne));
    }

    #[test]
    fn penalty_table_is_symmetric_under_transposition() {
        let p = BeadPenalties::default();
        for k in BeadKind::PREFERENCE {
            assert_eq!(p.get(k), p.get(k.transposed()));
        }
    }

    #[test]
    fn distance_term_is_not_transposition_symmetric() {
        // The variance term scales with the source length only.
        let d = defaults();
        let a = bead_cost(20, 41, BeadKind::OneOne, &d);
        let b = bead_cost(41, 20, BeadKind::OneOne, &d);
        assert!((a - b).abs() > 1.0);
    }

    #[test]
    fn beads_become_links() {
        let src = Document::new("s", Role::Source, DocumentMeta::with_language("en"))
            .with_paragraphs(["a", "b"]);
        let tgt = Document::new("t", Role::Target, DocumentMeta::with_language("ar"))
            .with_paragraphs(["x", "y", "z"]);
        let beads = vec![
            Bead { kind: BeadKind::OneTwo, source: 0..1, target: 0..2 },
            Bead { kind: BeadKind::OneOne, source: 1..2, target: 2..3 },
        ];
        let links = beads_to_links(&beads, Level::Paragraph, &src, &tgt).unwrap();
        let show = |ids: &std::collections::BTreeSet<SegmentId>| {
            ids.iter().map(|i| i.to_string()).collect::<Vec<_>>()
        };
        assert_eq!(show(&links[0].source_ids), ["p1"]);
        assert_eq!(show(&links[0].target_ids), ["p1", "p2"]);
        assert!(links.iter().all(|l| l.origin == Origin::Baseline && l.techniques.is_empty()));

        let null = vec![Bead { kind: BeadKind::ZeroOne, source: 0..0, target: 2..3 }];
        let ids: Vec<SegmentId> = (1..=3).map(|k| SegmentId::sentence(1, k)).collect();
        let links = beads_to_links_over(&null, Level::Sentence, &[], &ids).unwrap();
        assert!(links[0].source_ids.is_empty());
        assert_eq!(show(&links[0].target_ids), ["p1-s3"]);

        let oob = vec![Bead { kind: BeadKind::OneOne, source: 5..6, target: 0..1 }];
        assert!(beads_to_links(&oob, Level::Paragraph, &src, &tgt).is_err());
    }
}
