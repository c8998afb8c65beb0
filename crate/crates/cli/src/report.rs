//! Run results and their human-readable and CSV renderings.

use std::fmt::Write as _;

/// Outcome of one query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// The query could not be evaluated (for example a resource cap was hit).
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_g(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| (*h).to_owned()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub name: String,
    pub kind: &'static str,
    pub status: Status,
    pub checks: u64,
    pub failed: u64,
    pub max_deviation: f64,
    pub metrics: Vec<(String, Cell)>,
    pub table: Table,
    /// Failure descriptions, or the error message.
    pub notes: Vec<String>,
}

impl QueryResult {
    pub fn new(name: String, kind: &'static str) -> Self {
        QueryResult {
            name,
            kind,
            status: Status::Pass,
            checks: 0,
            failed: 0,
            max_deviation: 0.0,
            metrics: Vec::new(),
            table: Table::default(),
            notes: Vec::new(),
        }
    }

    pub fn error(name: String, kind: &'static str, message: String) -> Self {
        let mut out = QueryResult::new(name, kind);
        out.status = Status::Error;
        out.notes.push(message);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub queries: Vec<QueryResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.queries.iter().all(|q| q.status == Status::Pass)
    }

    /// 0 when every query passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Human,
    Csv,
}

/// `%.12g`: twelve significant digits, trailing zeros removed.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Human => emit_human(report),
        Format::Csv => emit_csv(report),
    }
}

fn emit_human(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed {}", report.seed);
    for q in &report.queries {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{}, {}, max_dev={}  [{}; checks={} failed={}]",
            q.name,
            q.status.as_str(),
            fmt_g(q.max_deviation),
            q.kind,
            q.checks,
            q.failed
        );
        if !q.metrics.is_empty() {
            let line: Vec<String> = q.metrics.iter().map(|(k, v)| format!("{k}={}", v.render())).collect();
            let _ = writeln!(out, "  {}", line.join("  "));
        }
        if !q.table.header.is_empty() {
            let rendered: Vec<Vec<String>> = q.table.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
            let mut widths: Vec<usize> = q.table.header.iter().map(|h| h.len()).collect();
            for row in &rendered {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            let line = |cells: &[String]| {
                let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                format!("  {}", padded.join("  "))
            };
            let _ = writeln!(out, "{}", line(&q.table.header));
            for row in &rendered {
                let _ = writeln!(out, "{}", line(row));
            }
        }
        for note in &q.notes {
            let _ = writeln!(out, "  ! {note}");
        }
    }
    let verdict = if report.passed() { "all queries passed" } else { "some queries did not pass" };
    let _ = writeln!(out, "\n{verdict}");
    out
}

fn csv_section(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    out.push_str(std::str::from_utf8(&bytes).expect("fields are UTF-8"));
}

/// A summary section, then one section per query. Sections are separated by a
/// blank line and introduced by a `#` line naming the query.
fn emit_csv(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# summary seed={}", report.seed);
    let header: Vec<String> =
        ["query", "kind", "status", "checks", "failed", "max_deviation"].iter().map(|s| (*s).to_owned()).collect();
    let rows: Vec<Vec<String>> = report
        .queries
        .iter()
        .map(|q| {
            vec![
                q.name.clone(),
                q.kind.to_owned(),
                q.status.as_str().to_owned(),
                q.checks.to_string(),
                q.failed.to_string(),
                fmt_g(q.max_deviation),
            ]
        })
        .collect();
    csv_section(&mut out, &header, &rows);
    for q in &report.queries {
        let _ = write!(out, "\n# query={} kind={} status={}", q.name, q.kind, q.status.as_str());
        for (k, v) in &q.metrics {
            let _ = write!(out, " {k}={}", v.render());
        }
        out.push('\n');
        for note in &q.notes {
            let _ = writeln!(out, "# note: {note}");
        }
        if !q.table.header.is_empty() {
            let rows: Vec<Vec<String>> = q.table.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
            csv_section(&mut out, &q.table.header, &rows);
        }
    }
    out
}
