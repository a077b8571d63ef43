use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{Document, RegionId, TokenizerConfig};
use crate::error::{Error, RecordError, Result};

/// On-disk corpus layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `REGION<TAB>TEXT`
    Tweets,
    /// `REGION<TAB>SLICE<TAB>NGRAM_TEXT<TAB>COUNT`
    Ngrams,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tweets" => Ok(CorpusFormat::Tweets),
            "ngrams" => Ok(CorpusFormat::Ngrams),
            other => Err(Error::InvalidArgument(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// What to do with malformed records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadMode {
    /// Abort on the first malformed record.
    Strict,
    /// Skip malformed records and count them.
    #[default]
    Lenient,
}

/// A fixed POS tagset. Scores are only comparable within one tagset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tagset {
    name: String,
    tags: Vec<String>,
}

const PENN: &[&str] = &[
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP", "NNPS",
    "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG",
    "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB", "#", "$", ".", ",", ":", "(", ")", "``", "''",
    "-LRB-", "-RRB-", "HYPH", "NFP", "ADD", "AFX", "GW", "XX",
];

// Coarse twitter tags (Owoputi et al. style).
const TWEET: &[&str] = &[
    "N", "O", "^", "S", "Z", "V", "A", "R", "!", "D", "P", "&", "T", "X", "Y", "#", "@", "~", "U",
    "E", "$", ",", "G", "L", "M",
];

const UNIVERSAL: &[&str] = &[
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PRT", ".", "X",
];

impl Tagset {
    pub fn new(name: impl Into<String>, tags: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let tags: Vec<String> = tags.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for t in &tags {
            if t.is_empty() || t.contains(char::is_whitespace) || !seen.insert(t.as_str()) {
                return Err(Error::InvalidArgument(format!("bad or duplicate tag {t:?}")));
            }
        }
        if tags.is_empty() {
            return Err(Error::InvalidArgument("empty tagset".into()));
        }
        Ok(Tagset { name: name.into(), tags })
    }

    /// Penn Treebank tags.
    pub fn penn() -> Self {
        Tagset::new("penn", PENN.iter().copied()).expect("static tagset")
    }

    /// Coarse tweet tags.
    pub fn tweet() -> Self {
        Tagset::new("tweet", TWEET.iter().copied()).expect("static tagset")
    }

    /// Universal coarse tags as used by syntactic n-gram releases.
    pub fn universal() -> Self {
        Tagset::new("universal", UNIVERSAL.iter().copied()).expect("static tagset")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "penn" => Ok(Self::penn()),
            "tweet" => Ok(Self::tweet()),
            "universal" => Ok(Self::universal()),
            other => Err(Error::InvalidArgument(format!("unknown tagset {other:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn index_of(&self, tag: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }
}

#[derive(Debug, Clone)]
enum Layout {
    Plain(CorpusFormat),
    Tagged(Tagset),
}

/// Parses one line of the given layout. Returns `Ok(None)` for blank lines.
pub fn parse_line(
    line: &str,
    format: CorpusFormat,
    tokenizer: &TokenizerConfig,
) -> Result<Option<Document>, RecordError> {
    parse_with(line, &Layout::Plain(format), tokenizer)
}

fn parse_with(
    line: &str,
    layout: &Layout,
    tokenizer: &TokenizerConfig,
) -> Result<Option<Document>, RecordError> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() {
        return Ok(None);
    }
    let cols: Vec<&str> = line.split('\t').collect();
    let expected = match layout {
        Layout::Plain(CorpusFormat::Ngrams) => 4,
        _ => 2,
    };
    if cols.len() != expected {
        return Err(RecordError::Columns {
            expected,
            found: cols.len(),
        });
    }
    let region = RegionId::new(cols[0].trim()).map_err(|_| RecordError::Region(cols[0].to_string()))?;
    let doc = match layout {
        Layout::Plain(CorpusFormat::Tweets) => {
            Document::new(region, tokenizer.tokenize(cols[1]))
        }
        Layout::Plain(CorpusFormat::Ngrams) => {
            let weight: u64 = cols[3]
                .trim()
                .parse()
                .ok()
                .filter(|&w| w >= 1)
                .ok_or_else(|| RecordError::Weight(cols[3].to_string()))?;
            let mut doc = Document::new(region, tokenizer.tokenize(cols[2])).with_weight(weight);
            let slice = cols[1].trim();
            if !slice.is_empty() {
                doc.slice = Some(slice.to_string());
            }
            doc
        }
        Layout::Tagged(tagset) => {
            let mut tokens = Vec::new();
            let mut tags = Vec::new();
            for item in cols[1].split_whitespace() {
                let (tok, tag) = item
                    .rsplit_once('_')
                    .filter(|(tok, tag)| !tok.is_empty() && !tag.is_empty())
                    .ok_or_else(|| RecordError::MissingTag(item.to_string()))?;
                if tagset.index_of(tag).is_none() {
                    return Err(RecordError::UnknownTag(tag.to_string()));
                }
                if let Some(tok) = tokenizer.normalize(tok) {
                    tokens.push(tok);
                    tags.push(tag.to_string());
                }
            }
            let mut doc = Document::new(region, tokens);
            doc.tags = Some(tags);
            doc
        }
    };
    if doc.tokens.is_empty() {
        return Err(RecordError::EmptyDocument);
    }
    Ok(Some(doc))
}

/// Renders a document back into one line of `format` (no trailing newline).
///
/// Tagged documents are rendered in the tagged layout regardless of `format`.
pub fn format_document(doc: &Document, format: CorpusFormat) -> String {
    let text = match &doc.tags {
        Some(tags) => doc
            .tokens
            .iter()
            .zip(tags)
            .map(|(t, g)| format!("{t}_{g}"))
            .collect::<Vec<_>>()
            .join(" "),
        None => doc.tokens.join(" "),
    };
    match (format, &doc.tags) {
        (CorpusFormat::Ngrams, None) => format!(
            "{}\t{}\t{}\t{}",
            doc.region,
            doc.slice.as_deref().unwrap_or(""),
            text,
            doc.weight
        ),
        _ => format!("{}\t{}", doc.region, text),
    }
}

/// Streaming reader yielding one [`Document`] per non-blank input line.
pub struct DocumentReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    layout: Layout,
    tokenizer: TokenizerConfig,
}

impl<R: BufRead> DocumentReader<R> {
    pub fn new(reader: R, format: CorpusFormat, tokenizer: TokenizerConfig) -> Self {
        DocumentReader {
            lines: reader.lines(),
            line_no: 0,
            layout: Layout::Plain(format),
            tokenizer,
        }
    }

    pub fn tagged(reader: R, tagset: Tagset, tokenizer: TokenizerConfig) -> Self {
        DocumentReader {
            lines: reader.lines(),
            line_no: 0,
            layout: Layout::Tagged(tagset),
            tokenizer,
        }
    }
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            match parse_with(&line, &self.layout, &self.tokenizer) {
                Ok(Some(doc)) => return Some(Ok(doc)),
                Ok(None) => continue,
                Err(kind) => {
                    return Some(Err(Error::Record {
                        line: self.line_no,
                        kind,
                    }))
                }
            }
        }
    }
}

/// Opens a tweets or ngrams corpus file.
pub fn read_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    tokenizer: &TokenizerConfig,
) -> Result<DocumentReader<BufReader<File>>> {
    let file = File::open(path)?;
    Ok(DocumentReader::new(BufReader::new(file), format, tokenizer.clone()))
}

/// Opens a tagged corpus file; tags are validated against `tagset`.
pub fn read_tagged_corpus(
    path: impl AsRef<Path>,
    tagset: &Tagset,
    tokenizer: &TokenizerConfig,
) -> Result<DocumentReader<BufReader<File>>> {
    let file = File::open(path)?;
    Ok(DocumentReader::tagged(
        BufReader::new(file),
        tagset.clone(),
        tokenizer.clone(),
    ))
}

/// Outcome of draining a reader in lenient mode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestSummary {
    pub documents: usize,
    pub skipped: usize,
    /// The first few skipped-record diagnostics.
    pub first_errors: Vec<String>,
}

const KEPT_ERRORS: usize = 5;

/// Drains a document stream. I/O errors always abort; record errors abort only in strict mode.
pub fn collect_documents<I>(docs: I, mode: ReadMode) -> Result<(Vec<Document>, IngestSummary)>
where
    I: IntoIterator<Item = Result<Document>>,
{
    let mut out = Vec::new();
    let mut summary = IngestSummary::default();
    for item in docs {
        match item {
            Ok(doc) => out.push(doc),
            Err(e @ Error::Record { .. }) if mode == ReadMode::Lenient => {
                summary.skipped += 1;
                if summary.first_errors.len() < KEPT_ERRORS {
                    summary.first_errors.push(e.to_string());
                }
            }
            Err(e) => return Err(e),
        }
    }
    summary.documents = out.len();
    Ok((out, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok() -> TokenizerConfig {
        TokenizerConfig::default()
    }

    #[test]
    fn tweet_line() {
        let doc = parse_line("NY\tTaking the subway with the kids", CorpusFormat::Tweets, &tok())
            .unwrap()
            .unwrap();
        assert_eq!(doc.region.as_str(), "NY");
        assert_eq!(doc.tokens, ["taking", "the", "subway", "with", "the", "kids"]);
        assert_eq!(doc.weight, 1);
        assert_eq!(doc.slice, None);
    }

    #[test]
    fn ngram_line() {
        let doc = parse_line(
            "UK\t1950\tdrive a coach and horses\t7",
            CorpusFormat::Ngrams,
            &tok(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(doc.region.as_str(), "UK");
        assert_eq!(doc.slice.as_deref(), Some("1950"));
        assert_eq!(doc.tokens, ["drive", "a", "coach", "and", "horses"]);
        assert_eq!(doc.weight, 7);
    }

    #[test]
    fn record_errors() {
        assert_eq!(
            parse_line("US\t", CorpusFormat::Tweets, &tok()).unwrap_err(),
            RecordError::EmptyDocument
        );
        assert_eq!(
            parse_line("US\t...", CorpusFormat::Tweets, &tok()).unwrap_err(),
            RecordError::EmptyDocument
        );
        assert!(matches!(
            parse_line("US hello", CorpusFormat::Tweets, &tok()).unwrap_err(),
            RecordError::Columns { expected: 2, found: 1 }
        ));
        assert!(matches!(
            parse_line("UK\t1950\tfoo\t0", CorpusFormat::Ngrams, &tok()).unwrap_err(),
            RecordError::Weight(_)
        ));
        assert!(matches!(
            parse_line("MAIN\tfoo", CorpusFormat::Tweets, &tok()).unwrap_err(),
            RecordError::Region(_)
        ));
        assert_eq!(parse_line("", CorpusFormat::Tweets, &tok()).unwrap(), None);
    }

    #[test]
    fn tagged_lines() {
        let layout = Layout::Tagged(Tagset::penn());
        let doc = parse_with("UK\tstuck_VBN in_IN the_DT lift_NN", &layout, &tok())
            .unwrap()
            .unwrap();
        assert_eq!(doc.tags.as_ref().unwrap(), &["VBN", "IN", "DT", "NN"]);
        assert_eq!(doc.tokens, ["stuck", "in", "the", "lift"]);

        let doc = parse_with("US\tlift_VB the_DT bag_NN", &layout, &tok()).unwrap().unwrap();
        assert_eq!(doc.tags.unwrap(), ["VB", "DT", "NN"]);

        let err = parse_with("US\thello world", &layout, &tok()).unwrap_err();
        assert_eq!(err, RecordError::MissingTag("hello".into()));
        assert_eq!(err.to_string(), "missing tag separator in \"hello\"");

        let err = parse_with("US\thello_QQ", &layout, &tok()).unwrap_err();
        assert_eq!(err, RecordError::UnknownTag("QQ".into()));
    }

    #[test]
    fn lenient_and_strict() {
        let text = "US\ta b\nUS\t\nUK\tc\nbroken\n";
        let reader = DocumentReader::new(text.as_bytes(), CorpusFormat::Tweets, tok());
        let (docs, summary) = collect_documents(reader, ReadMode::Lenient).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(summary.skipped, 2);
        assert!(summary.first_errors[0].starts_with("line 2:"));

        let reader = DocumentReader::new(text.as_bytes(), CorpusFormat::Tweets, tok());
        let err = collect_documents(reader, ReadMode::Strict).unwrap_err();
        assert!(matches!(err, Error::Record { line: 2, kind: RecordError::EmptyDocument }));
    }

    #[test]
    fn format_round_trip_examples() {
        for (line, format) in [
            ("NY\ttaking the subway", CorpusFormat::Tweets),
            ("UK\t1950\tdrive a coach and horses\t7", CorpusFormat::Ngrams),
        ] {
            let doc = parse_line(line, format, &tok()).unwrap().unwrap();
            assert_eq!(format_document(&doc, format), line);
        }
    }
}
