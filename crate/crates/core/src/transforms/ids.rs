use serde::{Deserialize, Serialize};

use crate::data::LongFrame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdEncoding {
    /// A single integer column (index into the sorted vocabulary).
    #[default]
    Label,
    /// One 0/1 column per known series.
    Onehot,
}

/// Sorted series-id vocabulary frozen at fit time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdVocabulary {
    ids: Vec<String>,
}

impl IdVocabulary {
    pub fn from_frame(frame: &LongFrame) -> Self {
        // frames keep series sorted by id
        IdVocabulary {
            ids: frame.series().iter().map(|s| s.id.clone()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index(&self, id: &str) -> Result<usize> {
        self.ids
            .binary_search_by(|s| s.as_str().cmp(id))
            .map_err(|_| Error::UnknownSeries(id.to_string()))
    }

    pub fn width(&self, encoding: IdEncoding) -> usize {
        match encoding {
            IdEncoding::Label => 1,
            IdEncoding::Onehot => self.ids.len(),
        }
    }

    /// Writes the encoding of series `index` into `out`.
    pub fn encode_into(&self, index: usize, encoding: IdEncoding, out: &mut Vec<f64>) {
        match encoding {
            IdEncoding::Label => out.push(index as f64),
            IdEncoding::Onehot => out.extend((0..self.ids.len()).map(|j| (j == index) as u8 as f64)),
        }
    }
}

/// Per-series id encoding rows (one row per series, in frame order),
/// checked against `vocabulary` when given.
pub fn make_id_features(
    frame: &LongFrame,
    encoding: IdEncoding,
    vocabulary: Option<&IdVocabulary>,
) -> Result<Vec<Vec<f64>>> {
    let own;
    let vocab = match vocabulary {
        Some(v) => v,
        None => {
            own = IdVocabulary::from_frame(frame);
            &own
        }
    };
    frame
        .series()
        .iter()
        .map(|s| {
            let mut row = Vec::new();
            vocab.encode_into(vocab.index(&s.id)?, encoding, &mut row);
            Ok(row)
        })
        .collect()
}
