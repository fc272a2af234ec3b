//! Rebuilds plain-text abstracts from OpenAlex's inverted-index form.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Joins the words of an inverted index with single spaces, in position order.
///
/// Gaps in the position sequence are skipped. Two words claiming the same
/// position is an error.
pub fn reconstruct_abstract(index: &BTreeMap<String, Vec<i64>>) -> Result<String> {
    let mut slots: BTreeMap<u64, &str> = BTreeMap::new();
    for (word, positions) in index {
        for &p in positions {
            if p < 0 {
                return Err(Error::malformed(format!("negative position {p} for word {word:?}")));
            }
            if let Some(prev) = slots.insert(p as u64, word.as_str()) {
                if prev != word {
                    return Err(Error::malformed(format!(
                        "position {p} claimed by both {prev:?} and {word:?}"
                    )));
                }
            }
        }
    }
    Ok(slots.into_values().collect::<Vec<_>>().join(" "))
}
