use alloc::string::String;
use alloc::vec::Vec;

/// Lowercases, turns underscores into spaces, trims, and collapses internal
/// whitespace runs. `None` when nothing is left.
pub fn normalize_name(raw: &str) -> Option<String> {
    let lowered = raw.to_lowercase().replace('_', " ");
    let out = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    (!out.is_empty()).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_name("Pythagorean_Theorem ").as_deref(), Some("pythagorean theorem"));
        assert_eq!(normalize_name("  Bayes   Theorem").as_deref(), Some("bayes theorem"));
        assert_eq!(normalize_name("___"), None);
        assert_eq!(normalize_name(""), None);
        assert_eq!(normalize_name("Gödel\tINCOMPLETENESS\n").as_deref(), Some("gödel incompleteness"));
    }
}
