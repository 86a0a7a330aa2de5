use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

use crate::commands::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }
}

#[derive(Debug)]
struct Row {
    file: String,
    item: String,
    margin: Option<f64>,
    status: Status,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "true" | "1" | "PASS" | "pass" => Some(true),
        "false" | "0" | "FAIL" | "fail" => Some(false),
        _ => None,
    }
}

fn csv_rows(file: &str, text: &str) -> Result<Vec<Row>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rd = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let headers = rd.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let records: Vec<csv::StringRecord> = rd.records().collect::<Result<_, _>>()?;
    if records.is_empty() {
        return Ok(Vec::new());
    }

    if let Some(pass) = col("pass") {
        let margin = col("margin");
        let radius = col("sigma_measured").zip(col("sigma_cert"));
        let labels: Vec<usize> = (0..headers.len()).filter(|&i| i != pass && Some(i) != margin).take(2).collect();
        return records
            .iter()
            .map(|r| {
                let num = |i: usize| r[i].parse::<f64>().ok();
                let ok = parse_bool(&r[pass]).with_context(|| format!("{file}: bad pass value {:?}", &r[pass]))?;
                let item = labels.iter().map(|&i| format!("{}={}", &headers[i], &r[i])).collect::<Vec<_>>().join(" ");
                Ok(Row {
                    file: file.to_string(),
                    item,
                    margin: match (margin, radius) {
                        (Some(m), _) => num(m),
                        (None, Some((hat, cert))) => num(hat).zip(num(cert)).map(|(h, c)| h - c),
                        _ => None,
                    },
                    status: if ok { Status::Pass } else { Status::Fail },
                })
            })
            .collect();
    }

    if let Some(charge) = col("charge") {
        let q: Vec<f64> = records.iter().map(|r| r[charge].parse()).collect::<Result<_, _>>()?;
        let q0 = q[0];
        let drift = q.iter().map(|v| ((v - q0) / q0).abs()).fold(0.0, f64::max);
        return Ok(vec![Row {
            file: file.to_string(),
            item: format!("charge drift over {} rows", q.len()),
            margin: Some(drift),
            status: Status::Info,
        }]);
    }

    bail!("{file}: no pass or charge column")
}

fn json_rows(file: &str, text: &str) -> Result<Vec<Row>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let v: Value = serde_json::from_str(text).with_context(|| format!("{file}: invalid JSON"))?;
    let mut rows = Vec::new();
    if let Some(hs) = v.get("hypotheses").and_then(Value::as_array) {
        for h in hs {
            let holds = h["holds"].as_bool().unwrap_or(false);
            rows.push(Row {
                file: file.to_string(),
                item: h["name"].as_str().unwrap_or("?").to_string(),
                margin: h["min_margin"].as_f64(),
                status: if holds { Status::Pass } else { Status::Fail },
            });
        }
    }
    if let Some(rs) = v.get("reports").and_then(Value::as_array) {
        for r in rs {
            let pass = r["pass"].as_bool().unwrap_or(false);
            let margin = match (r["constant"].as_f64(), r["ratio"].as_f64()) {
                (Some(c), Some(x)) => Some(c - x),
                _ => None,
            };
            rows.push(Row {
                file: file.to_string(),
                item: format!("{} {}", r["name"].as_str().unwrap_or("?"), r["sample_id"].as_str().unwrap_or("?")),
                margin,
                status: if pass { Status::Pass } else { Status::Fail },
            });
        }
    }
    if rows.is_empty() {
        if let Some(valid) = v.get("valid").and_then(Value::as_bool) {
            rows.push(Row {
                file: file.to_string(),
                item: format!("certificate sigma_cert={}", v["sigma_cert"]),
                margin: None,
                status: if valid { Status::Pass } else { Status::Fail },
            });
        } else if let Some(pass) = v.get("pass").and_then(Value::as_bool) {
            rows.push(Row {
                file: file.to_string(),
                item: "pass".into(),
                margin: None,
                status: if pass { Status::Pass } else { Status::Fail },
            });
        }
    }
    Ok(rows)
}

/// Summarises result files; fails if any row failed.
pub fn report(files: &[impl AsRef<Path>]) -> Result<Outcome> {
    let mut rows = Vec::new();
    for f in files {
        let path = f.as_ref();
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let name = path.display().to_string();
        let is_json = path.extension().is_some_and(|e| e == "json");
        let mut found = if is_json { json_rows(&name, &text)? } else { csv_rows(&name, &text)? };
        if found.is_empty() {
            println!("{name}: no samples");
        }
        rows.append(&mut found);
    }
    if rows.is_empty() {
        return Ok(Outcome::Pass("no samples".into()));
    }

    let width = rows.iter().map(|r| r.item.len()).max().unwrap_or(0);
    for r in &rows {
        let margin = r.margin.map_or_else(|| "-".to_string(), |m| format!("{m:.3e}"));
        println!("{}  {:<width$}  {:>11}  {}", r.status.label(), r.item, margin, r.file);
    }
    let failed = rows.iter().filter(|r| r.status == Status::Fail).count();
    let checked = rows.iter().filter(|r| r.status != Status::Info).count();
    let msg = format!("{} of {checked} rows passed", checked - failed);
    Ok(if failed == 0 { Outcome::Pass(msg) } else { Outcome::Fail(msg) })
}
