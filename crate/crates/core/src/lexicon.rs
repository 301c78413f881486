//! Plain-text word lists: one entry per line, `#` starts a comment.

use std::fs;
use std::io;
use std::path::Path;

pub fn parse_list(src: &str) -> Vec<String> {
    src.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn load_list(path: &Path) -> io::Result<Vec<String>> {
    Ok(parse_list(&fs::read_to_string(path)?))
}

/// Parses `token<ws>weight` lines. Lines with an unparsable weight are skipped
/// and returned as errors by line number.
pub fn parse_weighted(src: &str) -> Result<Vec<(String, f64)>, usize> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (tok, w) = match line.rsplit_once(|c: char| c.is_whitespace() || c == ',') {
            Some((t, w)) => (t.trim().trim_end_matches(','), w.trim()),
            None => return Err(i + 1),
        };
        let w: f64 = w.parse().map_err(|_| i + 1)?;
        out.push((tok.to_lowercase(), w));
    }
    Ok(out)
}

pub(crate) fn owned(words: &[&str]) -> Vec<String> {
    words.iter().map(|s| s.to_string()).collect()
}
