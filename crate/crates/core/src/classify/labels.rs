use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Value extracted from free-text model output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelValue {
    Binary(bool),
    Stage(u8),
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedLabel {
    pub raw: String,
    pub value: LabelValue,
    pub rule_fired: String,
}

impl ParsedLabel {
    pub fn binary(&self) -> Option<bool> {
        match self.value {
            LabelValue::Binary(b) => Some(b),
            _ => None,
        }
    }

    pub fn stage(&self) -> Option<u8> {
        match self.value {
            LabelValue::Stage(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_invalid(&self) -> bool {
        self.value == LabelValue::Invalid
    }

    fn new(raw: &str, value: LabelValue, rule: &str) -> Self {
        Self {
            raw: raw.to_string(),
            value,
            rule_fired: rule.to_string(),
        }
    }
}

/// First standalone TRUE/FALSE token (YES/NO accepted as aliases), case-insensitive.
pub fn parse_binary_label(raw: &str) -> ParsedLabel {
    for token in raw.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        let lower = token.to_lowercase();
        let hit = match lower.as_str() {
            "true" => Some((true, "token_true")),
            "false" => Some((false, "token_false")),
            "yes" => Some((true, "alias_yes")),
            "no" => Some((false, "alias_no")),
            _ => None,
        };
        if let Some((value, rule)) = hit {
            return ParsedLabel::new(raw, LabelValue::Binary(value), rule);
        }
    }
    ParsedLabel::new(raw, LabelValue::Invalid, "no_match")
}

/// First standalone single digit that belongs to `valid_stages`.
///
/// A digit is standalone when it is not part of a longer number or word and
/// not part of a decimal such as `2.5`.
pub fn parse_stage_label(raw: &str, valid_stages: &BTreeSet<u8>) -> ParsedLabel {
    let chars: Vec<char> = raw.chars().collect();
    let mut i = 0;
    let mut saw_digit = false;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        let end = i;
        let before = start.checked_sub(1).map(|j| chars[j]);
        let after = chars.get(end).copied();
        let decimal_before = before == Some('.') && start >= 2 && chars[start - 2].is_ascii_digit();
        let decimal_after =
            matches!(after, Some('.') | Some(',')) && chars.get(end + 1).is_some_and(|c| c.is_ascii_digit());
        let standalone = end - start == 1
            && !before.is_some_and(char::is_alphanumeric)
            && !after.is_some_and(char::is_alphanumeric)
            && !decimal_before
            && !decimal_after;
        if standalone {
            saw_digit = true;
            let d = chars[start].to_digit(10).unwrap() as u8;
            if valid_stages.contains(&d) {
                return ParsedLabel::new(raw, LabelValue::Stage(d), "standalone_digit");
            }
        }
    }
    let rule = if saw_digit { "out_of_range" } else { "no_match" };
    ParsedLabel::new(raw, LabelValue::Invalid, rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stages(r: std::ops::RangeInclusive<u8>) -> BTreeSet<u8> {
        r.collect()
    }

    #[test]
    fn binary() {
        assert_eq!(parse_binary_label("TRUE").value, LabelValue::Binary(true));
        assert_eq!(
            parse_binary_label("The answer is: false.").value,
            LabelValue::Binary(false)
        );
        let p = parse_binary_label("The retina appears healthy.");
        assert_eq!(p.value, LabelValue::Invalid);
        assert_eq!(p.rule_fired, "no_match");
        assert_eq!(
            parse_binary_label("Yes, drusen are present").value,
            LabelValue::Binary(true)
        );
        assert_eq!(parse_binary_label("untrue").value, LabelValue::Invalid);
    }

    #[test]
    fn stage() {
        let s = stages(0..=4);
        assert_eq!(parse_stage_label("3", &s).value, LabelValue::Stage(3));
        assert_eq!(parse_stage_label("Stage 2 - Moderate", &s).value, LabelValue::Stage(2));
        let p = parse_stage_label("5", &s);
        assert_eq!(p.value, LabelValue::Invalid);
        assert_eq!(p.rule_fired, "out_of_range");
        assert_eq!(parse_stage_label("none", &s).value, LabelValue::Invalid);
        assert_eq!(parse_stage_label("12", &s).value, LabelValue::Invalid);
        assert_eq!(parse_stage_label("2.5", &s).value, LabelValue::Invalid);
        assert_eq!(parse_stage_label("Stage2", &s).value, LabelValue::Invalid);
        assert_eq!(parse_stage_label("1", &stages(2..=4)).value, LabelValue::Invalid);
        assert_eq!(parse_stage_label("5, so 3", &s).value, LabelValue::Stage(3));
    }
}
