use super::{normalize_tokens, CorpusError, SourceDocument};

/// Raw word count used by the title filter (stopwords kept).
pub fn word_count(text: &str) -> usize {
    normalize_tokens(text, false).len()
}

/// Keep documents with strictly more than `min_words` words; when
/// `take_latest` is set, keep only that many of the newest (stable among
/// equal timestamps).
pub fn filter_titles(
    docs: Vec<SourceDocument>,
    min_words: usize,
    take_latest: Option<usize>,
) -> Result<Vec<SourceDocument>, CorpusError> {
    let mut kept: Vec<SourceDocument> = docs
        .into_iter()
        .filter(|d| word_count(&d.text) > min_words)
        .collect();
    if let Some(limit) = take_latest {
        if let Some(undated) = kept.iter().find(|d| d.timestamp.is_none()) {
            return Err(CorpusError::MissingTimestamp(undated.id.clone()));
        }
        kept.sort_by_key(|d| std::cmp::Reverse(d.timestamp));
        kept.truncate(limit);
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn doc(id: &str, text: &str, day: Option<u32>) -> SourceDocument {
        SourceDocument {
            id: id.into(),
            text: text.into(),
            category: None,
            timestamp: day.map(|d| Utc.with_ymd_and_hms(2020, 1, d, 0, 0, 0).unwrap()),
            source_domain: None,
            target_domain: None,
        }
    }

    #[test]
    fn strictly_more_than_min_words() {
        let docs = vec![
            doc("3", "one two three", None),
            doc("4", "one two three four", None),
            doc("5", "one two three four five", None),
        ];
        let kept = filter_titles(docs, 3, None).unwrap();
        assert_eq!(kept.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["4", "5"]);
    }

    #[test]
    fn latest_first() {
        let docs = vec![doc("old", "a b c d", Some(1)), doc("new", "a b c d", Some(2))];
        let kept = filter_titles(docs, 3, Some(1)).unwrap();
        assert_eq!(kept[0].id, "new");
    }

    #[test]
    fn stable_among_ties() {
        let docs = vec![
            doc("x", "a b c d", Some(5)),
            doc("y", "a b c d", Some(9)),
            doc("z", "a b c d", Some(5)),
        ];
        let kept = filter_titles(docs, 3, Some(3)).unwrap();
        assert_eq!(kept.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["y", "x", "z"]);
    }

    #[test]
    fn take_latest_needs_dates() {
        let docs = vec![doc("a", "a b c d", Some(1)), doc("b", "a b c d", None)];
        assert!(matches!(
            filter_titles(docs, 3, Some(1)),
            Err(CorpusError::MissingTimestamp(id)) if id == "b"
        ));
    }

    #[test]
    fn twenty_thousand_latest() {
        let docs: Vec<_> = (0..25_000)
            .map(|k| SourceDocument {
                id: k.to_string(),
                text: "rolling toy with wheels".into(),
                category: None,
                timestamp: Some(Utc.timestamp_opt(1_500_000_000 + k * 60, 0).unwrap()),
                source_domain: None,
                target_domain: None,
            })
            .collect();
        let kept = filter_titles(docs, 3, Some(20_000)).unwrap();
        assert_eq!(kept.len(), 20_000);
        assert_eq!(kept[0].id, "24999");
        assert_eq!(kept[19_999].id, "5000");
    }

    proptest::proptest! {
        #[test]
        fn kept_titles_respect_both_limits(
            titles in proptest::collection::vec(("[a-z]{1,6}( [a-z]{1,6}){0,7}", 1u32..28), 0..40),
            min_words in 0usize..6,
            take in 0usize..30,
        ) {
            let docs: Vec<SourceDocument> =
                titles.iter().enumerate().map(|(i, (t, d))| doc(&i.to_string(), t, Some(*d))).collect();
            let kept = filter_titles(docs, min_words, Some(take)).unwrap();
            proptest::prop_assert!(kept.len() <= take);
            proptest::prop_assert!(kept.iter().all(|d| word_count(&d.text) > min_words));
            proptest::prop_assert!(kept.windows(2).all(|w| w[0].timestamp >= w[1].timestamp));
        }
    }
}
