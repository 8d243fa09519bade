//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines are always printed; exits non-zero if any primary
//! criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{compiler, engine, fixture_text, fixtures, remarks, tsvc_case};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use vecrefine::bench::{geomean, load_report, measure, normalized_json, BenchConfig};
use vecrefine::cli::load_outcomes;
use vecrefine::engine::{check_gate_order, FeedbackBundle, OutcomeKind, RunOutcome};
use vecrefine::harness::ValueRange;
use vecrefine::llm::{CostLedger, Usage};
use vecrefine::testing::{
    run_tests, template_suite, validate_suite, SuiteGenerator, SuiteOrigin, TestConfig, UnitTestResult,
};
use vecrefine::verify::FormalVerdict;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_vecrefine")).args(args).output().map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!("vecrefine {} exited {:?}: {}", args[0], out.status.code(), String::from_utf8_lossy(&out.stderr)),
    )
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
}

fn fixture_run(out: &Path) -> Result<(), String> {
    cli(&["run", "--manifest", &fixtures().join("run_fixture.toml").display().to_string(), "--out", &out.display().to_string()])
}

fn c1_s1113_end_to_end(scratch: &Path) -> Check {
    let out = scratch.join("c1");
    let t0 = Instant::now();
    cli(&[
        "run",
        "--corpus",
        &fixtures().join("tsvc.c").display().to_string(),
        "--only",
        "s1113",
        "--llm",
        &format!("replay:{}", fixtures().join("transcripts/s1113.json").display()),
        "--out",
        &out.display().to_string(),
    ])?;
    let elapsed = t0.elapsed();
    let o: RunOutcome = read_json(&out.join("s1113/outcome.json"))?;
    ensure(matches!(o.kind, OutcomeKind::Success { .. }), format!("outcome {}", o.kind.label()))?;
    ensure(o.rounds_used == 1, format!("{} rounds", o.rounds_used))?;
    let b: FeedbackBundle = read_json(&out.join("s1113/round_01/bundle.json"))?;
    let loops = &b.compiler.report.loops;
    ensure(loops.len() == 2 && loops.iter().all(|l| l.vectorized), format!("loops {loops:?}"))?;
    match &b.tests {
        Some(UnitTestResult::Pass { trials: Some(n) }) if *n >= 100 => {}
        other => return Err(format!("tests {other:?}")),
    }
    let formal = if o.tests_only {
        ensure(b.formal.as_ref().is_some_and(|f| f.is_unavailable()), "tests-only run not stamped unavailable")?;
        "verifier absent, tests-only"
    } else {
        ensure(b.formal == Some(FormalVerdict::Equivalent), format!("formal {:?}", b.formal))?;
        "Equivalent"
    };
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("success in 1 round, 2/2 loops vectorized, 100 trials, {formal}, {:.1}s", elapsed.as_secs_f64()))
}

fn c2_gate_order(scratch: &Path) -> Check {
    let mut outcomes = Vec::new();
    for dir in ["c1", "c9a", "c9b"] {
        let p = scratch.join(dir);
        if p.is_dir() {
            outcomes.extend(load_outcomes(&p).map_err(|e| e.to_string())?);
        }
    }
    // The engine scenarios cover the formal gate with a stand-in verifier.
    let scenarios = [
        ("transcripts/s1113.json", Some("correct.sh"), "s1113"),
        ("transcripts/s1113.json", Some("mismatch.sh"), "s1113"),
        ("transcripts/s1113_premature.json", None, "s1113"),
        ("transcripts/s1113_outage.json", None, "s1113"),
        ("transcripts", None, "s481"),
        ("transcripts", None, "s442"),
    ];
    for (i, (t, v, id)) in scenarios.iter().enumerate() {
        let dir = scratch.join(format!("c2_{i}"));
        outcomes.push(engine(&dir, t, *v).run_case(&tsvc_case(id)));
    }
    let traces: usize = outcomes.iter().map(|o| o.trace.len()).sum();
    let violations: Vec<String> =
        outcomes.iter().flat_map(|o| check_gate_order(o).into_iter().map(move |v| format!("{}: {v}", o.case_id))).collect();
    ensure(violations.is_empty(), violations.join("; "))?;
    Ok(format!("{} outcomes, {traces} rounds, 0 violations", outcomes.len()))
}

fn c3_round_limit(scratch: &Path) -> Check {
    let o = engine(&scratch.join("c3"), "transcripts/s1113_malformed.json", None).run_case(&tsvc_case("s1113"));
    ensure(matches!(o.kind, OutcomeKind::FailRoundLimit { .. }), format!("outcome {}", o.kind.label()))?;
    ensure(o.rounds_used == 20, format!("rounds_used {}", o.rounds_used))?;
    Ok("FailRoundLimit after exactly 20 rounds".into())
}

fn c4_suite_validity(scratch: &Path) -> Check {
    let cc = compiler();
    let cfg = TestConfig { generator: SuiteGenerator::Template, ..TestConfig::default() };
    let mut counts = [(0, 0), (0, 0)];
    for (k, kind) in ["invalid", "valid"].iter().enumerate() {
        let dir = fixtures().join("suites").join(kind);
        let mut files: Vec<_> = std::fs::read_dir(&dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
        files.sort();
        for f in files {
            let text = std::fs::read_to_string(&f).map_err(|e| e.to_string())?;
            let id = text.lines().next().and_then(|l| l.strip_prefix("// case:")).ok_or("missing case header")?.trim();
            let case = tsvc_case(id);
            let mut suite = template_suite(&case, &cfg);
            suite.harness_source = text.clone();
            suite.origin = SuiteOrigin::Llm;
            let v = validate_suite(&suite, &case, &cc, &cfg, scratch);
            counts[k].0 += 1;
            if v.validated == (k == 1) {
                counts[k].1 += 1;
            } else {
                return Err(format!("{}: validated={} ({:?})", f.display(), v.validated, v.reason));
            }
        }
    }
    ensure(counts[0].0 >= 10 && counts[1].0 >= 5, format!("too few fixtures: {counts:?}"))?;
    Ok(format!("rejected {}/{} invalid, accepted {}/{} valid", counts[0].1, counts[0].0, counts[1].1, counts[1].0))
}

fn c5_s481(scratch: &Path) -> Check {
    let case = tsvc_case("s481");
    let cc = compiler();
    let opt = fixture_text("candidates/s481_opt.c");
    let signed = TestConfig { generator: SuiteGenerator::Template, ..TestConfig::default() };
    let witness = match run_tests(&template_suite(&case, &signed), &opt, &case, &cc, &signed, scratch) {
        UnitTestResult::Fail { first_divergence } => first_divergence,
        other => return Err(format!("signed inputs: {other:?}")),
    };
    let dmin = witness.input_min("d").ok_or("witness lacks d")?;
    ensure(dmin < 0.0, format!("witness min d = {dmin}"))?;
    let positive = TestConfig { float_range: ValueRange { lo: 0.0, hi: 1.0 }, ..signed };
    let r = run_tests(&template_suite(&case, &positive), &opt, &case, &cc, &positive, scratch);
    ensure(r.is_pass(), format!("positive inputs: {r:?}"))?;
    Ok(format!("signed: Fail at trial {} (min d {dmin:.3}); positive-only: Pass", witness.trial))
}

fn c6_remarks() -> Check {
    let (lines, records) = remarks::check_corpus()?;
    ensure(lines >= 30, format!("only {lines} remark lines"))?;
    let cats: std::collections::BTreeSet<_> = remarks::expectations().into_iter().filter_map(|e| e.category).collect();
    ensure(cats.len() == 6, format!("{} failure categories covered", cats.len()))?;
    Ok(format!("{lines} remark lines, {records}/{records} records, 0 leftovers, 6 categories"))
}

fn c7_ledger() -> Check {
    let mut l = CostLedger::new(0.27, 1.10);
    l.add(Usage { input: 21_900, output: 5_300 });
    let c = l.cost();
    // 21900 * 0.27e-6 + 5300 * 1.10e-6 = 0.005913 + 0.00583
    ensure((c - 0.011743).abs() < 1e-6, format!("cost {c}"))?;
    ensure((0.0117..=0.0118).contains(&c), format!("cost {c}"))?;
    ensure(format!("{c:.3}") == "0.012", format!("rounds to {c:.3}"))?;
    Ok(format!("cost {c:.6} -> ${c:.3}"))
}

fn c8_geomean() -> Check {
    let one = geomean(&[3.7]).map_err(|e| e.to_string())?;
    ensure((one - 3.7).abs() <= 1e-12 * 3.7, format!("identity {one}"))?;
    ensure(geomean(&[1.0; 8]).map_err(|e| e.to_string())? == 1.0, "all-ones")?;
    let s = geomean(&[2.0, 0.5]).map_err(|e| e.to_string())?;
    ensure((s - 1.0).abs() <= 1e-12, format!("symmetry {s}"))?;
    let mut runner = TestRunner::new(PropConfig { cases: 1000, failure_persistence: None, ..PropConfig::default() });
    let strat = (prop::collection::vec(1e-3f64..1e3, 1..40), 1e-2f64..1e2, any::<u64>());
    runner
        .run(&strat, |(v, k, seed)| {
            let g = geomean(&v).unwrap();
            let mut p = v.clone();
            let mut s = seed | 1;
            for i in (1..p.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                p.swap(i, ((s >> 33) % (i as u64 + 1)) as usize);
            }
            prop_assert!((geomean(&p).unwrap() - g).abs() <= 1e-12 * g.max(1.0));
            let scaled: Vec<f64> = v.iter().map(|x| x * k).collect();
            prop_assert!((geomean(&scaled).unwrap() - k * g).abs() <= 1e-9 * k * g);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("identity, symmetry, 1000 permutation/scale trials".into())
}

fn c9_determinism(scratch: &Path) -> Check {
    let (a, b) = (scratch.join("c9a"), scratch.join("c9b"));
    fixture_run(&a)?;
    fixture_run(&b)?;
    let ra = load_report(&a.join("report.json")).map_err(|e| e.to_string())?;
    let rb = load_report(&b.join("report.json")).map_err(|e| e.to_string())?;
    let (na, nb) = (normalized_json(&ra), normalized_json(&rb));
    ensure(na == nb, "normalized reports differ")?;
    Ok(format!("{} cases, {} normalized bytes identical", ra.cases.len(), na.len()))
}

/// Optional: needs VECREFINE_LIVE_URL plus the API key variable.
fn c10_live(scratch: &Path) -> Check {
    let (Some(url), Some(_)) = (std::env::var_os("VECREFINE_LIVE_URL"), std::env::var_os("VECREFINE_API_KEY")) else {
        return Ok("not run (optional; set VECREFINE_LIVE_URL and VECREFINE_API_KEY)".into());
    };
    let out = scratch.join("c10");
    let mut args = vec![
        "run".to_string(),
        "--corpus".into(),
        fixtures().join("tsvc.c").display().to_string(),
        "--only".into(),
        "s1113".into(),
        "--llm".into(),
        url.to_string_lossy().into_owned(),
        "--out".into(),
        out.display().to_string(),
    ];
    if let Ok(model) = std::env::var("VECREFINE_LIVE_MODEL") {
        args.extend(["--model".into(), model]);
    }
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let t0 = Instant::now();
    cli(&argv)?;
    let o: RunOutcome = read_json(&out.join("s1113/outcome.json"))?;
    ensure(t0.elapsed() < Duration::from_secs(1800), "exceeded the case wall-clock budget")?;
    Ok(format!("terminal outcome {} after {} rounds", o.kind.label(), o.rounds_used))
}

fn c11_self_comparison(scratch: &Path) -> Check {
    let case = tsvc_case("s1113");
    let t0 = Instant::now();
    let ranges = TestConfig::default().ranges_for(&case.signature);
    let rec = measure(&case, &case.source_text, &ranges, &compiler(), &BenchConfig::default(), scratch)
        .map_err(|e| e.to_string())?;
    ensure(rec.checksum_match, "checksum mismatch")?;
    ensure((0.9..=1.1).contains(&rec.speedup), format!("speedup {:.3}", rec.speedup))?;
    ensure(t0.elapsed() < Duration::from_secs(30), "took over 30 s")?;
    Ok(format!("speedup {:.3}, checksum match", rec.speedup))
}

fn c12_bench_direction(scratch: &Path) -> Check {
    let case = tsvc_case("s1113");
    let ranges = TestConfig::default().ranges_for(&case.signature);
    let rec = measure(&case, &fixture_text("candidates/s1113_opt.c"), &ranges, &compiler(), &BenchConfig::default(), scratch)
        .map_err(|e| e.to_string())?;
    ensure(rec.checksum_match, "checksum mismatch")?;
    ensure(rec.speedup > 1.0, format!("speedup {:.3}", rec.speedup))?;
    Ok(format!("speedup {:.2}x on {}, checksum match", rec.speedup, rec.host.isa))
}

fn main() {
    let tmp = tempfile::tempdir().expect("scratch dir");
    let s = tmp.path();
    let sub = |name: &str| {
        let d = s.join(name);
        std::fs::create_dir_all(&d).unwrap();
        d
    };
    // c2 reads the archives written by c1 and c9, so it runs after them.
    let results: Vec<(u32, bool, &str, Check)> = vec![
        (1, true, "s1113 fixture end-to-end", c1_s1113_end_to_end(s)),
        (3, true, "round limit of 20", c3_round_limit(s)),
        (4, true, "test-suite validity protocol", c4_suite_validity(&sub("c4"))),
        (5, true, "s481 escape closed by signed inputs", c5_s481(&sub("c5"))),
        (6, true, "remark parser against recorded corpus", c6_remarks()),
        (7, true, "ledger arithmetic", c7_ledger()),
        (8, true, "geomean properties", c8_geomean()),
        (9, true, "replay determinism", c9_determinism(s)),
        (2, true, "gate-order invariant", c2_gate_order(s)),
        (10, true, "live smoke", c10_live(s)),
        (11, false, "self-comparison timing", c11_self_comparison(&sub("c11"))),
        (12, true, "benchmark direction on s1113 pair", c12_bench_direction(&sub("c12"))),
    ];
    let mut results = results;
    results.sort_by_key(|r| r.0);
    let mut primary_failures = 0;
    for (n, primary, name, r) in &results {
        let tag = if *primary { "" } else { " (secondary)" };
        match r {
            Ok(msg) => println!("PASS {n:>2}{tag} {name}: {msg}"),
            Err(msg) => {
                println!("FAIL {n:>2}{tag} {name}: {msg}");
                if *primary {
                    primary_failures += 1;
                }
            }
        }
    }
    if primary_failures > 0 {
        std::process::exit(1);
    }
}
