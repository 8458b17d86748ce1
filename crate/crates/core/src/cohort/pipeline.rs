use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::naive::{default_headings, detect_naive, DrugLexicon};
use super::{CohortError, ExtractTable, Extracts};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Ge,
    Le,
    Eq,
    Ne,
}

/// Named predicate over the rows an extract holds for one stay. A stay
/// satisfies a row predicate when any of its rows does.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    All,
    /// subject, admission and stay ids all present and positive.
    IdsPresent,
    Compare { field: String, op: CmpOp, value: f64 },
    Present(String),
    Naive(String),
    /// The stay has at least one row in every named extract.
    InSets(Vec<String>),
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::All => write!(f, "all"),
            Predicate::IdsPresent => write!(f, "ids_present"),
            Predicate::Compare { field, op, value } => {
                let name = match op {
                    CmpOp::Ge => "ge",
                    CmpOp::Le => "le",
                    CmpOp::Eq => "eq",
                    CmpOp::Ne => "ne",
                };
                write!(f, "{name}({field},{value})")
            }
            Predicate::Present(c) => write!(f, "present({c})"),
            Predicate::Naive(c) => write!(f, "naive({c})"),
            Predicate::InSets(s) => write!(f, "in_sets({})", s.join(";")),
        }
    }
}

impl FromStr for Predicate {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "all" => return Ok(Predicate::All),
            "ids_present" => return Ok(Predicate::IdsPresent),
            _ => {}
        }
        let (name, rest) = s.split_once('(').ok_or_else(|| format!("bad predicate `{s}`"))?;
        let args = rest.strip_suffix(')').ok_or_else(|| format!("unclosed predicate `{s}`"))?;
        let op = match name.trim() {
            "ge" => Some(CmpOp::Ge),
            "le" => Some(CmpOp::Le),
            "eq" => Some(CmpOp::Eq),
            "ne" => Some(CmpOp::Ne),
            _ => None,
        };
        if let Some(op) = op {
            let (field, value) = args.split_once(',').ok_or_else(|| format!("`{s}` needs field,value"))?;
            let value = value.trim().parse::<f64>().map_err(|_| format!("bad number in `{s}`"))?;
            return Ok(Predicate::Compare { field: field.trim().to_string(), op, value });
        }
        let arg = args.trim().to_string();
        if arg.is_empty() {
            return Err(format!("`{s}` needs an argument"));
        }
        match name.trim() {
            "present" => Ok(Predicate::Present(arg)),
            "naive" => Ok(Predicate::Naive(arg)),
            "in_sets" => Ok(Predicate::InSets(
                arg.split(';').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
            )),
            other => Err(format!("unknown predicate `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepKind {
    Extract { source: String, predicate: Predicate },
    /// `a ∩ b`; `a` is the previous subset for the trace.
    Intersect { a: usize, b: usize },
    Filter { input: usize, source: String, predicate: Predicate },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub index: usize,
    pub kind: StepKind,
    pub label: String,
}

impl FilterStep {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            StepKind::Extract { .. } => "Extract",
            StepKind::Intersect { .. } => "Intersect",
            StepKind::Filter { .. } => "Filter",
        }
    }
}

/// Parses a pipeline file. Each non-comment line is one of
///
/// ```text
/// <n> extract <source> <predicate> [| label]
/// <n> intersect <a> <b> [| label]
/// <n> filter <input> <source> <predicate> [| label]
/// ```
pub fn parse_pipeline(text: &str) -> Result<Vec<FilterStep>, CohortError> {
    let mut steps = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| CohortError::PipelineSyntax { line: ln + 1, message };
        let (body, label) = match line.split_once('|') {
            Some((b, l)) => (b.trim(), l.trim().to_string()),
            None => (line, String::new()),
        };
        let mut parts = body.splitn(3, char::is_whitespace);
        let index: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| syntax("missing step number".into()))?;
        if index != steps.len() + 1 {
            return Err(syntax(format!("step {index} out of sequence, expected {}", steps.len() + 1)));
        }
        let kind = parts.next().unwrap_or("").to_ascii_lowercase();
        let rest = parts.next().unwrap_or("").trim();
        let step_ref = |tok: Option<&str>| -> Result<usize, CohortError> {
            let r: usize = tok.and_then(|t| t.parse().ok()).ok_or_else(|| syntax("bad step reference".into()))?;
            if r == 0 || r >= index {
                return Err(CohortError::UnknownSetReference(format!("step {r} (from step {index})")));
            }
            Ok(r)
        };
        let kind = match kind.as_str() {
            "extract" => {
                let (source, pred) = rest.split_once(char::is_whitespace).unwrap_or((rest, "all"));
                StepKind::Extract { source: source.to_string(), predicate: pred.parse().map_err(syntax)? }
            }
            "intersect" => {
                let mut toks = rest.split_whitespace();
                let a = step_ref(toks.next())?;
                let b = step_ref(toks.next())?;
                if toks.next().is_some() {
                    return Err(syntax("intersect takes exactly two steps".into()));
                }
                StepKind::Intersect { a, b }
            }
            "filter" => {
                let mut toks = rest.splitn(3, char::is_whitespace);
                let input = step_ref(toks.next())?;
                let source = toks.next().ok_or_else(|| syntax("filter needs a source".into()))?.to_string();
                let pred = toks.next().unwrap_or("all");
                StepKind::Filter { input, source, predicate: pred.parse().map_err(syntax)? }
            }
            other => return Err(syntax(format!("unknown step kind `{other}`"))),
        };
        steps.push(FilterStep { index, kind, label });
    }
    if steps.is_empty() {
        return Err(CohortError::PipelineSyntax { line: 0, message: "no steps".into() });
    }
    Ok(steps)
}

pub fn format_pipeline(steps: &[FilterStep]) -> String {
    let mut out = String::new();
    for s in steps {
        let body = match &s.kind {
            StepKind::Extract { source, predicate } => format!("{} extract {source} {predicate}", s.index),
            StepKind::Intersect { a, b } => format!("{} intersect {a} {b}", s.index),
            StepKind::Filter { input, source, predicate } => format!("{} filter {input} {source} {predicate}", s.index),
        };
        if s.label.is_empty() {
            out.push_str(&format!("{body}\n"));
        } else {
            out.push_str(&format!("{body} | {}\n", s.label));
        }
    }
    out
}

/// Extracts every variable file must contribute for a stay to survive the
/// missing-data filter.
pub const MANDATORY_EXTRACTS: &[&str] = &[
    "demographics", "elixhauser", "saps", "sofa", "creatinine", "abp", "map",
    "fluids_in", "fluids_out", "vasopressors", "ventilation", "outcomes",
];

/// The sixteen-step study-group extraction.
pub fn default_pipeline() -> Vec<FilterStep> {
    let text = format!(
        "1 extract stays ids_present | all three ids present\n\
         2 extract stays eq(n_admissions,1) | single hospital and ICU admission\n\
         3 intersect 1 2\n\
         4 extract stays ge(full_days,1) | at least one full ICU day\n\
         5 intersect 3 4\n\
         6 extract stays ge(age,18) | adults\n\
         7 intersect 5 6\n\
         8 extract stays eq(sepsis,1) | sepsis\n\
         9 intersect 7 8\n\
         10 extract stays eq(cmo,0) | not comfort measures only\n\
         11 intersect 9 10\n\
         12 extract summaries present(text) | discharge summary available\n\
         13 intersect 11 12\n\
         14 extract summaries naive(text) | diuretics naive\n\
         15 intersect 13 14\n\
         16 filter 15 stays in_sets({}) | no missing mandatory data\n",
        MANDATORY_EXTRACTS.join(";")
    );
    parse_pipeline(&text).expect("built-in pipeline parses")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub index: usize,
    pub kind: &'static str,
    pub label: String,
    pub surviving_count: usize,
    pub pct_of_original: f64,
    pub pct_of_previous: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrace {
    pub original_count: usize,
    pub rows: Vec<TraceRow>,
}

impl FilterTrace {
    pub fn counts(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.surviving_count).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,kind,label,surviving,original,pct_of_original,pct_of_previous\n");
        for r in &self.rows {
            let label = if r.label.contains([',', '"']) { format!("\"{}\"", r.label.replace('"', "\"\"")) } else { r.label.clone() };
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{:.6}\n",
                r.index, r.kind, label, r.surviving_count, self.original_count, r.pct_of_original, r.pct_of_previous
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CohortError> {
        std::fs::write(path, self.to_csv()).map_err(|e| CohortError::Io(format!("{}: {e}", path.display())))
    }
}

/// Settings used by text predicates.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineContext {
    pub lexicon: DrugLexicon,
    pub headings: Vec<String>,
}

impl Default for PipelineContext {
    fn default() -> Self {
        PipelineContext { lexicon: DrugLexicon::default(), headings: default_headings() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Surviving icustay ids, ascending.
    pub survivors: BTreeSet<u64>,
    pub trace: FilterTrace,
}

fn frac(a: usize, b: usize) -> f64 {
    if b == 0 { 0.0 } else { a as f64 / b as f64 }
}

fn row_satisfies(
    table: &ExtractTable,
    row: usize,
    pred: &Predicate,
    ctx: &PipelineContext,
    id: u64,
) -> Result<bool, CohortError> {
    let failure = |field: &str, reason: &str| CohortError::PredicateFailure {
        icustay_id: id,
        field: field.to_string(),
        reason: reason.to_string(),
    };
    let col = |field: &str| table.column_index(field).map_err(|_| failure(field, "column absent"));
    Ok(match pred {
        Predicate::All | Predicate::InSets(_) => true,
        Predicate::IdsPresent => {
            let mut ok = true;
            for f in ["subject_id", "hadm_id", "icustay_id"] {
                ok &= table.id_at(row, col(f)?).ok().flatten().is_some();
            }
            ok
        }
        Predicate::Compare { field, op, value } => {
            let c = col(field)?;
            let v = table
                .f64_at(row, c)
                .map_err(|_| failure(field, "not numeric"))?
                .ok_or_else(|| failure(field, "empty"))?;
            match op {
                CmpOp::Ge => v >= *value,
                CmpOp::Le => v <= *value,
                CmpOp::Eq => v == *value,
                CmpOp::Ne => v != *value,
            }
        }
        Predicate::Present(field) => !table.rows[row][col(field)?].trim().is_empty(),
        Predicate::Naive(field) => detect_naive(&table.rows[row][col(field)?], &ctx.lexicon, &ctx.headings),
    })
}

fn select(
    extracts: &Extracts,
    source: &str,
    pred: &Predicate,
    ctx: &PipelineContext,
    restrict: Option<&BTreeSet<u64>>,
) -> Result<BTreeSet<u64>, CohortError> {
    let table = extracts.get(source)?;
    let by_id = table.rows_by_icustay()?;
    let sets: Vec<BTreeSet<u64>> = match pred {
        Predicate::InSets(names) => names
            .iter()
            .map(|n| extracts.get(n).and_then(ExtractTable::icustay_ids))
            .collect::<Result<_, _>>()?,
        _ => Vec::new(),
    };
    let mut out = BTreeSet::new();
    for (&id, rows) in &by_id {
        if restrict.is_some_and(|r| !r.contains(&id)) {
            continue;
        }
        if !sets.iter().all(|s| s.contains(&id)) {
            continue;
        }
        let mut any = false;
        for &r in rows {
            if row_satisfies(table, r, pred, ctx, id)? {
                any = true;
                break;
            }
        }
        if any {
            out.insert(id);
        }
    }
    Ok(out)
}

/// Runs `steps` over `extracts`, recording survivors after every step.
pub fn run_filter_pipeline(
    extracts: &Extracts,
    steps: &[FilterStep],
    ctx: &PipelineContext,
) -> Result<PipelineOutput, CohortError> {
    let first_source = steps
        .iter()
        .find_map(|s| match &s.kind {
            StepKind::Extract { source, .. } => Some(source.as_str()),
            _ => None,
        })
        .ok_or_else(|| CohortError::PipelineSyntax { line: 0, message: "pipeline has no extract step".into() })?;
    let original = extracts.get(first_source)?.icustay_ids()?.len();

    let mut results: BTreeMap<usize, BTreeSet<u64>> = BTreeMap::new();
    let mut rows = Vec::with_capacity(steps.len());
    for (pos, step) in steps.iter().enumerate() {
        if step.index != pos + 1 {
            return Err(CohortError::PipelineSyntax { line: pos + 1, message: "step indices must be contiguous from 1".into() });
        }
        let get = |i: usize| {
            results.get(&i).ok_or_else(|| CohortError::UnknownSetReference(format!("step {i} (from step {})", step.index)))
        };
        let (set, previous) = match &step.kind {
            StepKind::Extract { source, predicate } => (select(extracts, source, predicate, ctx, None)?, original),
            StepKind::Intersect { a, b } => {
                let (sa, sb) = (get(*a)?, get(*b)?);
                (sa.intersection(sb).copied().collect(), sa.len())
            }
            StepKind::Filter { input, source, predicate } => {
                let si = get(*input)?;
                (select(extracts, source, predicate, ctx, Some(si))?, si.len())
            }
        };
        rows.push(TraceRow {
            index: step.index,
            kind: step.kind_name(),
            label: step.label.clone(),
            surviving_count: set.len(),
            pct_of_original: frac(set.len(), original),
            pct_of_previous: frac(set.len(), previous),
        });
        results.insert(step.index, set);
    }
    let survivors = results.remove(&steps.len()).unwrap_or_default();
    Ok(PipelineOutput { survivors, trace: FilterTrace { original_count: original, rows } })
}
