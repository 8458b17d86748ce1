use std::collections::BTreeSet;

const DEFAULT_DRUGS: &[&str] = &[
    "acetazolamide", "diamox", "dichlorphenamide", "daranide",
    "methazolamide", "glauctabs", "mzm", "neptazane",
    "torsemide", "demadex", "furosemide", "lasix",
    "spironolactone", "pironolactone", "aldactone",
    "amiloride", "midamor", "triamterene", "dyrenium",
    "hydrochlorothiazide", "hctz", "hydrodiuril", "aquazide h", "esidrix", "microzide",
    "metolazone", "mykrox", "zaroxolyn",
    "methyclothiazide", "enduron", "aquatensen",
    "chlorothiazide", "diuril", "indapamide", "lozol",
    "bendroflumethiazide", "naturetin", "polythiazide", "renese",
    "hydroflumethiazide", "saluron", "chlorthalidone", "thalitone",
];

pub const DEFAULT_HEADINGS: &[&str] = &["DRUGS ON ADMISSION", "ON ADMISSION", "MEDICATIONS ON ADMISSION"];

/// Lower-case generic and brand drug names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrugLexicon {
    entries: BTreeSet<String>,
}

impl Default for DrugLexicon {
    fn default() -> Self {
        Self::new(DEFAULT_DRUGS.iter().copied()).unwrap()
    }
}

impl DrugLexicon {
    /// Normalizes entries to trimmed lower case; `None` if nothing remains.
    pub fn new<S: AsRef<str>>(entries: impl IntoIterator<Item = S>) -> Option<Self> {
        let entries: BTreeSet<String> = entries
            .into_iter()
            .map(|e| e.as_ref().trim().to_lowercase())
            .filter(|e| !e.is_empty())
            .collect();
        (!entries.is_empty()).then_some(DrugLexicon { entries })
    }

    /// One entry per non-empty line; `#` starts a comment.
    pub fn parse(text: &str) -> Option<Self> {
        Self::new(text.lines().map(|l| l.split('#').next().unwrap_or("")))
    }

    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn mentions_drug(text: &str, lexicon: &DrugLexicon) -> bool {
    let toks = tokens(text);
    lexicon.entries().any(|e| contains_run(&toks, &tokens(e)))
}

/// A line that opens a new section: a short label without leading digit,
/// followed by a colon.
fn is_heading_line(line: &str) -> bool {
    let Some((label, _)) = line.split_once(':') else { return false };
    let label = label.trim();
    !label.is_empty()
        && label.len() <= 40
        && label.starts_with(|c: char| c.is_alphabetic())
        && label.chars().all(|c| c.is_alphabetic() || " /&()'-".contains(c))
}

/// Text of every section opened by one of `headings` (case-insensitive,
/// heading followed by a colon), each running to the next heading line.
fn sections<'a>(summary: &'a str, headings: &[String]) -> Vec<&'a str> {
    let lines: Vec<(usize, &str)> = summary
        .split_inclusive('\n')
        .scan(0, |pos, l| {
            let start = *pos;
            *pos += l.len();
            Some((start, l))
        })
        .collect();
    let headings: Vec<String> = headings.iter().map(|h| h.trim().to_ascii_uppercase()).collect();
    let mut out = Vec::new();
    for (li, &(start, line)) in lines.iter().enumerate() {
        let upper = line.to_ascii_uppercase();
        let opened = headings.iter().filter(|h| !h.is_empty()).find_map(|h| {
            upper.match_indices(h.as_str()).find_map(|(at, _)| {
                let before_ok = upper[..at].chars().last().is_none_or(|c| !c.is_alphanumeric());
                let rest = &upper[at + h.len()..];
                let colon = rest.len() - rest.trim_start_matches([' ', '\t']).len();
                (before_ok && rest[colon..].starts_with(':')).then_some(at + h.len() + colon + 1)
            })
        });
        let Some(body_offset) = opened else { continue };
        let body_start = start + body_offset;
        let end = lines[li + 1..]
            .iter()
            .find(|(_, l)| is_heading_line(l))
            .map_or(summary.len(), |&(s, _)| s);
        out.push(&summary[body_start..end]);
    }
    out
}

/// True when no lexicon drug is mentioned in the pre-admission sections of
/// `summary`. Without any matching heading the whole text is searched.
pub fn detect_naive(summary: &str, lexicon: &DrugLexicon, headings: &[String]) -> bool {
    if summary.trim().is_empty() {
        return true;
    }
    let secs = sections(summary, headings);
    if secs.is_empty() {
        return !mentions_drug(summary, lexicon);
    }
    !secs.iter().any(|s| mentions_drug(s, lexicon))
}

pub fn default_headings() -> Vec<String> {
    DEFAULT_HEADINGS.iter().map(|s| s.to_string()).collect()
}
