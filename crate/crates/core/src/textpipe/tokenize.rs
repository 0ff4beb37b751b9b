use alloc::string::String;
use alloc::vec::Vec;

/// Lowercase and split on whitespace and punctuation.
///
/// Joiners that stay inside a token:
/// - an apostrophe between a letter or digit and a following letter
///   (`nokia's`, `don't`); typographic quotes count as apostrophes,
/// - `.` or `,` between two digits (`7.2`, `1,000`).
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text
        .chars()
        .map(|c| if matches!(c, '\u{2019}' | '\u{2018}') { '\'' } else { c })
        .collect();
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let prev = i.checked_sub(1).map(|p| chars[p]);
        let next = chars.get(i + 1).copied();
        let keep = if c.is_alphanumeric() {
            true
        } else if c == '\'' {
            !cur.is_empty() && prev.is_some_and(char::is_alphanumeric) && next.is_some_and(char::is_alphabetic)
        } else if c == '.' || c == ',' {
            !cur.is_empty() && prev.is_some_and(|p| p.is_ascii_digit()) && next.is_some_and(|n| n.is_ascii_digit())
        } else {
            false
        };
        if keep {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            tokens.push(core::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}
