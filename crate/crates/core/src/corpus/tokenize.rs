/// Tokenizer settings shared by all corpus readers.
///
/// The default lowercases, splits on Unicode whitespace and strips leading and
/// trailing punctuation, keeping `#` and `@` so hashtags and handles survive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    /// Punctuation characters never stripped.
    pub keep: Vec<char>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            strip_punctuation: true,
            keep: vec!['#', '@'],
        }
    }
}

impl TokenizerConfig {
    /// Tokenizer that only splits on whitespace.
    pub fn verbatim() -> Self {
        TokenizerConfig {
            lowercase: false,
            strip_punctuation: false,
            keep: Vec::new(),
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split_whitespace()
            .filter_map(|raw| self.normalize(raw))
            .collect()
    }

    /// Normalizes one whitespace-free token; `None` when nothing is left.
    pub fn normalize(&self, raw: &str) -> Option<String> {
        let trimmed = if self.strip_punctuation {
            raw.trim_matches(|c: char| is_punct(c) && !self.keep.contains(&c))
        } else {
            raw
        };
        if trimmed.is_empty() {
            return None;
        }
        Some(if self.lowercase {
            trimmed.to_lowercase()
        } else {
            trimmed.to_string()
        })
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_strips() {
        let tok = TokenizerConfig::default();
        assert_eq!(
            tok.tokenize("Taking the subway with the kids ..."),
            vec!["taking", "the", "subway", "with", "the", "kids"]
        );
        assert_eq!(
            tok.tokenize("\"Maccas\"! #brekkie @mate, don't"),
            vec!["maccas", "#brekkie", "@mate", "don't"]
        );
    }

    #[test]
    fn verbatim_only_splits() {
        let tok = TokenizerConfig::verbatim();
        assert_eq!(tok.tokenize("Hi, There"), vec!["Hi,", "There"]);
    }

    #[test]
    fn normalization_is_idempotent() {
        let tok = TokenizerConfig::default();
        for raw in ["(Hello)", "#Tag!", "...", "ÉCOLE.", "a-b"] {
            if let Some(once) = tok.normalize(raw) {
                assert_eq!(tok.normalize(&once).as_deref(), Some(once.as_str()));
            }
        }
    }
}
