use std::io::BufRead;

use super::OracleError;

/// Fixed context following the two masked words.
pub const TEMPLATE_SUFFIX: [&str; 3] = ["is", "a", "thing"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSentence {
    pub tokens: Vec<String>,
    pub mask_positions: (usize, usize),
}

/// Instantiates `"<w1> <w2> is a thing"` for each pair, masks at 0 and 1.
pub fn build_synthetic_sentences<S: AsRef<str>>(
    pairs: &[(S, S)],
) -> Result<Vec<SyntheticSentence>, OracleError> {
    pairs
        .iter()
        .enumerate()
        .map(|(k, (w1, w2))| {
            let (w1, w2) = (w1.as_ref(), w2.as_ref());
            if w1.is_empty() || w2.is_empty() {
                return Err(OracleError::EmptyPair(k));
            }
            let mut tokens = vec![w1.to_string(), w2.to_string()];
            tokens.extend(TEMPLATE_SUFFIX.iter().map(|s| s.to_string()));
            Ok(SyntheticSentence {
                tokens,
                mask_positions: (0, 1),
            })
        })
        .collect()
}

/// Reads a two-column tab-separated word-pair file.
pub fn read_word_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>, OracleError> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| OracleError::Io(e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) => pairs.push((a.to_string(), b.to_string())),
            _ => return Err(OracleError::MalformedTsv { line: idx + 1 }),
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn template_instantiation() {
        let s = build_synthetic_sentences(&[("red", "car")]).unwrap();
        assert_eq!(s[0].tokens, vec!["red", "car", "is", "a", "thing"]);
        assert_eq!(s[0].mask_positions, (0, 1));
    }

    #[test]
    fn ten_thousand_pairs_share_context() {
        let pairs: Vec<(String, String)> = (0..10_000)
            .map(|i| (format!("w{i}"), format!("v{}", i % 97)))
            .collect();
        let s = build_synthetic_sentences(&pairs).unwrap();
        assert_eq!(s.len(), 10_000);
        assert!(s.iter().all(|x| x.tokens[2..] == TEMPLATE_SUFFIX));
    }

    #[test]
    fn empty_word_rejected() {
        assert_eq!(
            build_synthetic_sentences(&[("a", "b"), ("", "car")]).unwrap_err(),
            OracleError::EmptyPair(1)
        );
    }

    #[test]
    fn tsv_parsing() {
        let pairs = read_word_pairs(Cursor::new("red\tcar\r\nold\tman\n")).unwrap();
        assert_eq!(pairs, vec![("red".into(), "car".into()), ("old".into(), "man".into())]);
        assert_eq!(
            read_word_pairs(Cursor::new("red\tcar\nbroken\n")).unwrap_err(),
            OracleError::MalformedTsv { line: 2 }
        );
        assert!(read_word_pairs(Cursor::new("a\tb\tc\n")).is_err());
    }
}
