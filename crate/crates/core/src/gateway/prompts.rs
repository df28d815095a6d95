//! Versioned prompt assets compiled into the binary.

const SEPARATOR: &str = "### user";

/// A system instruction plus a user template with `{placeholder}` slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: &'static str,
    source: &'static str,
}

impl PromptTemplate {
    pub const fn new(name: &'static str, source: &'static str) -> Self {
        Self { name, source }
    }

    pub fn translator() -> Self {
        Self::new("translator_v1", include_str!("../../prompts/translator_v1.txt"))
    }

    pub fn selector() -> Self {
        Self::new("selector_v1", include_str!("../../prompts/selector_v1.txt"))
    }

    pub fn reader() -> Self {
        Self::new("reader_v1", include_str!("../../prompts/reader_v1.txt"))
    }

    fn split(&self) -> (&'static str, &'static str) {
        match self.source.split_once(SEPARATOR) {
            Some((system, user)) => (system.trim(), user.trim()),
            None => ("", self.source.trim()),
        }
    }

    pub fn system(&self) -> &'static str {
        self.split().0
    }

    /// Fills every `{key}` slot. Values are inserted in one pass so a value
    /// containing braces is never re-expanded.
    pub fn render(&self, values: &[(&str, &str)]) -> (String, String) {
        let (system, template) = self.split();
        let mut out = String::with_capacity(template.len());
        let mut rest = template;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let slot = after
                .find('}')
                .map(|close| (&after[..close], close))
                .and_then(|(key, close)| values.iter().find(|(k, _)| *k == key).map(|(_, v)| (*v, close)));
            match slot {
                Some((value, close)) => {
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
        (system.to_owned(), out)
    }
}
