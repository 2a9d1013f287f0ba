//! Reference metrics shipped with the crate, each with a sampling box inside
//! its valid domain.

use crate::metric::{load_spec, MetricSpec};
use crate::report::SampleBox;

#[derive(Debug, Clone, Copy)]
pub struct CorpusEntry {
    pub id: &'static str,
    pub text: &'static str,
    /// `(lo, hi)` per coordinate.
    pub bounds: [(f64, f64); 4],
}

impl CorpusEntry {
    pub fn spec(&self) -> MetricSpec {
        load_spec(self.text).expect("corpus specs are valid")
    }

    pub fn sample_box(&self) -> SampleBox {
        SampleBox(self.bounds)
    }
}

const UNIT: (f64, f64) = (-1.0, 1.0);
const TIME: (f64, f64) = (1.0, 3.0);

pub const CORPUS: &[CorpusEntry] = &[
    CorpusEntry {
        id: "M0",
        text: include_str!("../corpus/m0_minkowski.spec"),
        bounds: [UNIT, UNIT, UNIT, UNIT],
    },
    CorpusEntry {
        id: "M1",
        text: include_str!("../corpus/m1_flrw.spec"),
        bounds: [TIME, UNIT, UNIT, UNIT],
    },
    CorpusEntry {
        id: "M2",
        text: include_str!("../corpus/m2_almost_flrw.spec"),
        bounds: [TIME, (-3.0, 3.0), UNIT, UNIT],
    },
    CorpusEntry {
        id: "M3",
        text: include_str!("../corpus/m3_rotating.spec"),
        bounds: [UNIT, UNIT, (-2.0, 2.0), UNIT],
    },
    CorpusEntry {
        id: "M4",
        text: include_str!("../corpus/m4_static.spec"),
        bounds: [UNIT, (-2.0, 2.0), UNIT, UNIT],
    },
    CorpusEntry {
        id: "M5",
        text: include_str!("../corpus/m5_generic.spec"),
        bounds: [TIME, UNIT, UNIT, UNIT],
    },
];

pub fn by_id(id: &str) -> Option<&'static CorpusEntry> {
    CORPUS.iter().find(|e| e.id.eq_ignore_ascii_case(id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_entries_load() {
        for e in CORPUS {
            e.spec();
        }
        assert_eq!(by_id("m2").unwrap().id, "M2");
    }
}
