//! Plain-text profile files.
//!
//! One voter per line, items listed most-preferred first as comma-separated
//! 0-based ids. An optional `# m=<m>` header fixes the item count; other lines
//! starting with `#` and blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ranking::{Ranking, RankingProfile};

pub fn parse_profile(text: &str) -> Result<RankingProfile> {
    let mut m: Option<usize> = None;
    let mut rankings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("m=") {
                if !rankings.is_empty() || m.is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "the m header must come before any ranking".into(),
                    });
                }
                let parsed = value.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad item count '{}': {e}", value.trim()),
                })?;
                m = Some(parsed);
            }
            continue;
        }
        let order = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad item id '{}': {e}", tok.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let expected = *m.get_or_insert(order.len());
        if order.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {expected} items, got {}", order.len()),
            });
        }
        let ranking = Ranking::from_order(&order).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        rankings.push(ranking);
    }
    if rankings.is_empty() {
        return Err(Error::InvalidProfile("no rankings found".into()));
    }
    RankingProfile::new(rankings)
}

pub fn format_profile(profile: &RankingProfile) -> String {
    let mut out = format!("# m={}\n", profile.m());
    for r in profile.rankings() {
        out.push_str(&format_order(r));
        out.push('\n');
    }
    out
}

/// Preference order as comma-separated ids.
pub fn format_order(ranking: &Ranking) -> String {
    let mut s = String::new();
    for (k, item) in ranking.order().iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        write!(s, "{item}").expect("writing to a String cannot fail");
    }
    s
}

pub fn read_profile(path: &Path) -> Result<RankingProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_profile(&text)
}

pub fn write_profile(path: &Path, profile: &RankingProfile) -> Result<()> {
    std::fs::write(path, format_profile(profile)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
