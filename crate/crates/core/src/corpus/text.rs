//! Case-insensitive matching on the original string, so byte offsets always
//! refer to the untouched input.

fn chars_eq_ci(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// If `needle` matches `hay` case-insensitively at byte offset `start`,
/// returns the byte offset just past the match.
pub(crate) fn match_ci_at(hay: &str, start: usize, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let rest = &hay[start..];
    let mut iter = rest.char_indices();
    for nc in needle.chars() {
        let (_, hc) = iter.next()?;
        if !chars_eq_ci(hc, nc) {
            return None;
        }
    }
    Some(start + iter.next().map_or(rest.len(), |(i, _)| i))
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn boundary_before(hay: &str, start: usize) -> bool {
    hay[..start].chars().next_back().is_none_or(|c| !is_word_char(c))
}

fn boundary_after(hay: &str, end: usize) -> bool {
    hay[end..].chars().next().is_none_or(|c| !is_word_char(c))
}

/// First case-insensitive substring match of `needle` (no boundary checks).
pub fn find_ci(hay: &str, needle: &str) -> Option<(usize, usize)> {
    hay.char_indices()
        .find_map(|(i, _)| match_ci_at(hay, i, needle).map(|end| (i, end)))
}

/// One whole-word occurrence of a lexicon term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermOccurrence {
    pub start: usize,
    pub end: usize,
    /// Index into the term list passed to [`find_term_occurrences`].
    pub term_index: usize,
}

/// Left-to-right scan for whole-word, case-insensitive term occurrences.
/// At each position the longest matching term wins and the scan resumes
/// after it, so "gender queer" is not also reported as "queer".
pub fn find_term_occurrences(hay: &str, terms: &[&str]) -> Vec<TermOccurrence> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < hay.len() {
        let best = if boundary_before(hay, pos) {
            terms
                .iter()
                .enumerate()
                .filter_map(|(ti, t)| {
                    match_ci_at(hay, pos, t)
                        .filter(|&end| boundary_after(hay, end))
                        .map(|end| (end, ti))
                })
                .max_by_key(|&(end, ti)| (end, std::cmp::Reverse(ti)))
        } else {
            None
        };
        match best {
            Some((end, term_index)) => {
                out.push(TermOccurrence {
                    start: pos,
                    end,
                    term_index,
                });
                pos = end;
            }
            None => {
                pos += hay[pos..].chars().next().map_or(1, char::len_utf8);
            }
        }
    }
    out
}
