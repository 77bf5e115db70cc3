use std::collections::{BTreeSet, HashMap};

use super::{ProviderError, TranslationProvider};
use crate::corpus::Lang;
use crate::textproc::tokenize;

/// Word-for-word translation from a lookup table.
///
/// Each token whose case-folded surface is in the table is replaced by its
/// entry; all other text, including untranslated tokens, punctuation and
/// spacing, passes through unchanged.
#[derive(Debug, Clone)]
pub struct DictionaryTranslator {
    name: String,
    pairs: BTreeSet<(Lang, Lang)>,
    table: HashMap<String, String>,
}

impl DictionaryTranslator {
    pub fn new(
        pairs: impl IntoIterator<Item = (Lang, Lang)>,
        table: impl IntoIterator<Item = (String, String)>,
    ) -> Self {
        Self {
            name: "dictionary".into(),
            pairs: pairs.into_iter().collect(),
            table: table
                .into_iter()
                .map(|(k, v)| (k.to_lowercase(), v))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn apply(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        for tok in tokenize(text) {
            if let Some(rep) = self.table.get(&tok.surface) {
                out.push_str(&text[last..tok.start]);
                out.push_str(rep);
                last = tok.end;
            }
        }
        out.push_str(&text[last..]);
        out
    }
}

impl TranslationProvider for DictionaryTranslator {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports(&self, src: Lang, dst: Lang) -> bool {
        src == dst || self.pairs.contains(&(src, dst))
    }

    fn translate_texts(
        &self,
        texts: &[&str],
        _src: Lang,
        _dst: Lang,
    ) -> Result<Vec<String>, ProviderError> {
        Ok(texts.iter().map(|t| self.apply(t)).collect())
    }
}
