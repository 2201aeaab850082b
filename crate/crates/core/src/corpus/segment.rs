use crate::text::sentence_spans;

pub const DEFAULT_EXTRACT_TOKENS: usize = 500;

/// Whitespace-delimited tokens, the unit of the extract limit.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Byte ranges of the whitespace tokens of `text[start..end]`, grouped into
/// consecutive runs of at most `limit` tokens.
fn hard_split(text: &str, start: usize, end: usize, limit: usize, out: &mut Vec<(usize, usize, usize)>) {
    let piece = &text[start..end];
    let mut tokens = Vec::new();
    let mut tok_start = None;
    for (i, c) in piece.char_indices() {
        match (c.is_whitespace(), tok_start) {
            (true, Some(s)) => {
                tokens.push((s, i));
                tok_start = None;
            }
            (false, None) => tok_start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = tok_start {
        tokens.push((s, piece.len()));
    }
    for chunk in tokens.chunks(limit) {
        out.push((start + chunk[0].0, start + chunk[chunk.len() - 1].1, chunk.len()));
    }
}

/// Greedy packing of whole sentences into extracts of at most `limit`
/// tokens. A sentence longer than the limit is cut into `limit`-token pieces.
///
/// Extracts are slices of `text`; joined with whitespace they reproduce it up
/// to the whitespace at the cut points.
pub fn segment_extracts(text: &str, limit: usize) -> Vec<&str> {
    let limit = limit.max(1);
    let mut units = Vec::new();
    for (s, e) in sentence_spans(text) {
        let n = token_count(&text[s..e]);
        if n > limit {
            hard_split(text, s, e, limit, &mut units);
        } else if n > 0 {
            units.push((s, e, n));
        }
    }
    let mut out = Vec::new();
    let mut current: Option<(usize, usize, usize)> = None;
    for (s, e, n) in units {
        current = match current {
            Some((cs, _, cn)) if cn + n <= limit => Some((cs, e, cn + n)),
            Some((cs, ce, _)) => {
                out.push(&text[cs..ce]);
                Some((s, e, n))
            }
            None => Some((s, e, n)),
        };
    }
    if let Some((cs, ce, _)) = current {
        out.push(&text[cs..ce]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(words: usize, tag: &str) -> String {
        let mut s: Vec<String> = (0..words).map(|i| format!("{tag}{i}")).collect();
        s.last_mut().unwrap().push('.');
        s.join(" ")
    }

    #[test]
    fn under_the_limit_is_one_extract() {
        let text = sentence(499, "w");
        assert_eq!(segment_extracts(&text, 500), vec![text.as_str()]);
    }

    #[test]
    fn boundary_at_450_of_800() {
        let text = format!("{} {}", sentence(450, "a"), sentence(350, "b"));
        let counts: Vec<usize> = segment_extracts(&text, 500).iter().map(|e| token_count(e)).collect();
        assert_eq!(counts, vec![450, 350]);
    }

    #[test]
    fn sentences_are_packed_greedily() {
        let text = "a b. c d. e f g. h.";
        assert_eq!(segment_extracts(text, 4), vec!["a b. c d.", "e f g. h."]);
    }

    #[test]
    fn long_sentence_is_hard_split() {
        let text = "one two three four five six seven. eight.";
        assert_eq!(
            segment_extracts(text, 3),
            vec!["one two three", "four five six", "seven. eight."]
        );
    }

    #[test]
    fn empty_text() {
        assert!(segment_extracts("", 500).is_empty());
        assert!(segment_extracts("  \n ", 500).is_empty());
    }
}
