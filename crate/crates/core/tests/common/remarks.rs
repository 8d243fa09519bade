//! Oracle for the recorded remark corpus: hand-read expectations in
//! fixtures/remarks/expected.txt plus an independent line count.

use vecrefine::compiler::{parse_remarks, Location};
use vecrefine::corpus::{classify_reason, NonVectorizableCategory as C};

use super::fixture_text;

pub const STREAMS: [&str; 4] = ["kernels", "tsvc", "s1113", "s1113_opt"];

pub struct Expected {
    pub stream: String,
    pub location: Location,
    pub vectorized: bool,
    pub width: Option<u32>,
    pub interleave: Option<u32>,
    pub category: Option<C>,
    pub detail: Option<String>,
}

fn category(tag: &str) -> C {
    match tag {
        "unsafe" => C::UnsafeDependentMemOps,
        "reduction" => C::UnidentifiedReduction,
        "bounds" => C::UnknownArrayBounds,
        "tripcount" => C::UnknownTripCount,
        "instruction" => C::UnvectorizableInstr,
        "switch" => C::SwitchInLoop,
        other => panic!("unknown tag {other}"),
    }
}

pub fn expectations() -> Vec<Expected> {
    fixture_text("remarks/expected.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let (line, col) = f[1].split_once(':').unwrap();
            let location = Location { line: line.parse().unwrap(), column: col.parse().unwrap() };
            let rest = |from: usize| (f.len() > from).then(|| f[from..].join(" "));
            if f[2] == "vectorized" {
                Expected {
                    stream: f[0].into(),
                    location,
                    vectorized: true,
                    width: Some(f[3].parse().unwrap()),
                    interleave: Some(f[4].parse().unwrap()),
                    category: None,
                    detail: rest(5),
                }
            } else {
                Expected {
                    stream: f[0].into(),
                    location,
                    vectorized: false,
                    width: None,
                    interleave: None,
                    category: Some(category(f[3])),
                    detail: rest(4),
                }
            }
        })
        .collect()
}

/// Independent count: every diagnostic line tagged with the loop-vectorize pass.
pub fn count_remark_lines(raw: &str) -> usize {
    raw.lines().filter(|l| l.contains(": remark: ") && l.trim_end().ends_with("loop-vectorize]")).count()
}

/// Parses every recorded stream and compares against the expectations.
/// Returns (remark lines, records) on success.
pub fn check_corpus() -> Result<(usize, usize), String> {
    let all = expectations();
    let (mut lines_total, mut records) = (0, 0);
    for stream in STREAMS {
        let raw = fixture_text(&format!("remarks/{stream}.remarks"));
        let report = parse_remarks(&raw);
        let lines = count_remark_lines(&raw);
        lines_total += lines;
        if report.remark_lines != lines {
            return Err(format!("{stream}: parser saw {} remark lines, oracle {lines}", report.remark_lines));
        }
        if !report.leftovers.is_empty() || !report.other.is_empty() {
            return Err(format!("{stream}: leftovers {:?}, other {:?}", report.leftovers, report.other));
        }
        let want: Vec<&Expected> = all.iter().filter(|e| e.stream == stream).collect();
        if report.loops.len() != want.len() {
            return Err(format!("{stream}: {} records, expected {}", report.loops.len(), want.len()));
        }
        for (got, e) in report.loops.iter().zip(want) {
            let at = format!("{stream} {}", e.location);
            let detail_ok = match &e.detail {
                Some(d) => got.detail.as_deref().unwrap_or("").contains(d.as_str()),
                None => got.detail.is_none(),
            };
            if got.location != e.location
                || got.vectorized != e.vectorized
                || got.width != e.width
                || got.interleave != e.interleave
                || got.reason.as_deref().map(classify_reason) != e.category
                || !detail_ok
            {
                return Err(format!("{at}: got {got:?}"));
            }
            records += 1;
        }
    }
    Ok((lines_total, records))
}
