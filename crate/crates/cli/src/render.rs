//! Output formats. JSON documents carry a schema string; CSV has a header
//! row; human output is one line per item.

use clap::ValueEnum;
use serde_json::{json, Value as Json};

use prhl_core::case_studies::Report;
use prhl_core::consequences::{SdReport, TvReport};
use prhl_core::dist::{SubDist, Value};
use prhl_core::prhl::{memory_json, ObligationResult, Validity, Verdict};
use prhl_core::pwhile::Memory;

pub const OUTPUT_SCHEMA: &str = "prhl-output/1";
pub const VALIDITY_SCHEMA: &str = "prhl-validity/1";
pub const TV_SCHEMA: &str = "prhl-tv-report/1";
pub const SD_SCHEMA: &str = "prhl-sd-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

fn pretty(j: &Json) -> String {
    serde_json::to_string_pretty(j).expect("json values serialize") + "\n"
}

fn table<I: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: I) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv of utf-8 fields")
}

fn compact(m: &Memory) -> String {
    memory_json(m).to_string()
}

fn show(m: &Memory) -> String {
    let items: Vec<String> = m.iter().map(|(k, v)| format!("{k} = {v}")).collect();
    format!("{{{}}}", items.join(", "))
}

fn dist<T: Ord + Clone>(
    d: &SubDist<T>,
    format: Format,
    encode: impl Fn(&T) -> Json,
    text: impl Fn(&T) -> String,
) -> String {
    match format {
        Format::Json => pretty(
            &json!({"schema": OUTPUT_SCHEMA, "mass": d.mass_prob().to_string(), "output": d.to_json_with(encode)}),
        ),
        Format::Csv => table(
            &["value", "prob"],
            d.iter().map(|(v, p)| vec![text(v), p.to_string()]),
        ),
        Format::Human => {
            let mut out: String = d
                .iter()
                .map(|(v, p)| format!("{p}\t{}\n", text(v)))
                .collect();
            if !d.is_lossless() {
                out += &format!("mass {}\n", d.mass_prob());
            }
            out
        }
    }
}

pub fn values(d: &SubDist<Value>, format: Format) -> String {
    dist(d, format, Value::to_json, Value::to_string)
}

pub fn memories(d: &SubDist<Memory>, format: Format) -> String {
    dist(d, format, memory_json, |m| {
        if format == Format::Csv {
            compact(m)
        } else {
            show(m)
        }
    })
}

fn result_name(r: &ObligationResult) -> &'static str {
    match r {
        ObligationResult::Discharged(_) => "ok",
        ObligationResult::Failed { .. } => "failed",
        ObligationResult::Indeterminate { .. } => "indeterminate",
    }
}

fn reason(r: &ObligationResult) -> String {
    match r {
        ObligationResult::Discharged(_) => String::new(),
        ObligationResult::Failed { reason, .. } | ObligationResult::Indeterminate { reason } => {
            reason.clone()
        }
    }
}

pub fn verdict(v: &Verdict, format: Format) -> String {
    match format {
        Format::Json => pretty(&v.to_json()),
        Format::Csv => table(
            &["index", "rule", "path", "what", "result", "reason"],
            v.obligations.iter().enumerate().map(|(i, o)| {
                vec![
                    i.to_string(),
                    o.rule.clone(),
                    o.path.clone(),
                    o.what.clone(),
                    result_name(&o.result).into(),
                    reason(&o.result),
                ]
            }),
        ),
        Format::Human => {
            let mut out = format!(
                "{} ({} obligations)\n",
                v.status().as_str(),
                v.obligations.len()
            );
            for o in v.failures() {
                out += &format!(
                    "  {} {} [{}]: {}\n",
                    result_name(&o.result),
                    o.path,
                    o.what,
                    reason(&o.result)
                );
                if let ObligationResult::Failed {
                    counterexample: Some(cx),
                    ..
                } = &o.result
                {
                    out += &format!(
                        "    left {}\n    right {}\n",
                        show(&cx.left),
                        show(&cx.right)
                    );
                    if let Some(s) = &cx.sample {
                        out += &format!("    sample {s}\n");
                    }
                }
            }
            out
        }
    }
}

fn validity_status(v: &Validity) -> &'static str {
    match v {
        Validity::Valid { .. } => "valid",
        Validity::Invalid { .. } => "invalid",
        Validity::Indeterminate { .. } => "indeterminate",
    }
}

pub fn validity(v: &Validity, format: Format) -> String {
    match format {
        Format::Json => {
            let mut j = v.to_json();
            j["schema"] = json!(VALIDITY_SCHEMA);
            pretty(&j)
        }
        Format::Csv => {
            let (left, right, why) = match v {
                Validity::Valid { pairs } => {
                    (String::new(), String::new(), format!("{pairs} pairs"))
                }
                Validity::Invalid {
                    left,
                    right,
                    reason,
                } => (compact(left), compact(right), reason.clone()),
                Validity::Indeterminate { reason } => {
                    (String::new(), String::new(), reason.clone())
                }
            };
            table(
                &["status", "left", "right", "detail"],
                [vec![validity_status(v).into(), left, right, why]],
            )
        }
        Format::Human => match v {
            Validity::Valid { pairs } => {
                format!(
                    "valid ({pairs} initial pair{})\n",
                    if *pairs == 1 { "" } else { "s" }
                )
            }
            Validity::Invalid {
                left,
                right,
                reason,
            } => {
                format!(
                    "invalid: {reason}\n  left {}\n  right {}\n",
                    show(left),
                    show(right)
                )
            }
            Validity::Indeterminate { reason } => format!("indeterminate: {reason}\n"),
        },
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fail"
    }
}

pub fn tv(reports: &[TvReport], format: Format) -> String {
    match format {
        Format::Json => pretty(
            &json!({"schema": TV_SCHEMA, "reports": reports.iter().map(TvReport::to_json).collect::<Vec<_>>()}),
        ),
        Format::Csv => table(
            &["left", "right", "tv", "bound", "verdict"],
            reports.iter().map(|r| {
                vec![
                    compact(&r.left),
                    compact(&r.right),
                    r.tv.to_string(),
                    r.bound.to_string(),
                    ok(r.holds).into(),
                ]
            }),
        ),
        Format::Human => reports
            .iter()
            .map(|r| {
                format!(
                    "{} {} tv {} <= {}: {}\n",
                    show(&r.left),
                    show(&r.right),
                    r.tv,
                    r.bound,
                    ok(r.holds)
                )
            })
            .collect(),
    }
}

pub fn sd(reports: &[SdReport], format: Format) -> String {
    match format {
        Format::Json => pretty(
            &json!({"schema": SD_SCHEMA, "reports": reports.iter().map(SdReport::to_json).collect::<Vec<_>>()}),
        ),
        Format::Csv => table(
            &["left", "right", "observable", "verdict"],
            reports.iter().map(|r| {
                vec![
                    compact(&r.left),
                    compact(&r.right),
                    r.observable.to_string(),
                    ok(r.dominates).into(),
                ]
            }),
        ),
        Format::Human => reports
            .iter()
            .map(|r| {
                format!(
                    "{} {} {} dominates: {}\n",
                    show(&r.left),
                    show(&r.right),
                    r.observable,
                    ok(r.dominates)
                )
            })
            .collect(),
    }
}

pub fn case_study(r: &Report, format: Format) -> String {
    match format {
        Format::Json => pretty(&r.to_json()),
        Format::Csv if !r.tv.is_empty() => tv(&r.tv, format),
        Format::Csv if !r.sd.is_empty() => sd(&r.sd, format),
        Format::Csv => table(
            &["what", "verdict"],
            r.checks
                .iter()
                .map(|c| vec![c.what.clone(), ok(c.ok).into()]),
        ),
        Format::Human => {
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let mut out = format!("{} {}\n", r.name, params.join(" "));
            out += &format!(
                "proof: {}\n",
                verdict(&r.verdict, Format::Human)
                    .trim_end()
                    .replace('\n', "\n  ")
            );
            out += &format!("validity: {}", validity(&r.validity, Format::Human));
            out += &tv(&r.tv, Format::Human);
            out += &sd(&r.sd, Format::Human);
            for c in &r.checks {
                out += &format!("check {}: {} ({})\n", c.what, ok(c.ok), c.detail);
            }
            out += if r.ok() { "ok\n" } else { "FAIL\n" };
            out
        }
    }
}
