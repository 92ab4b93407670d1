//! Single-pass `{name}` placeholder substitution for prompt templates.
//!
//! Substituted values are never rescanned, so a caption that itself contains
//! `{caption}` is inserted verbatim.

/// Replaces each `{key}` in `template` with its value. Unknown placeholders
/// and stray braces are left untouched.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + values.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            values.iter().find(|(k, _)| *k == key).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pass() {
        assert_eq!(fill("a {x} b", &[("x", "{x}")]), "a {x} b");
        assert_eq!(fill("{x}{y}", &[("x", "1"), ("y", "2")]), "12");
        assert_eq!(fill("{z} {", &[("x", "1")]), "{z} {");
        assert_eq!(fill("no braces", &[]), "no braces");
    }
}
