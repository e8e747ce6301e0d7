//! Size-reduction measurement: s0 (minified JSON), s1 (integer-mapped JSON),
//! s2 (CBOR body) per object, aggregated into a three-row reduction report
//! per dataset.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::codec;
use crate::dict::Dictionary;
use crate::error::BenchError;
use crate::stix::{self, StixObject};

/// Byte sizes of one object at the three pipeline stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeTriple {
    pub s0: u64,
    pub s1: u64,
    pub s2: u64,
    pub object_type: String,
}

/// How per-object sizes are folded into dataset percentages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggregationMode {
    /// Ratios of total bytes: r1 = 1 - sum(s1)/sum(s0), etc.
    Aggregate,
    /// Arithmetic mean of per-object ratios.
    PerObjectMean,
}

impl AggregationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregationMode::Aggregate => "aggregate",
            AggregationMode::PerObjectMean => "per-object-mean",
        }
    }
}

impl std::str::FromStr for AggregationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "aggregate" => Ok(AggregationMode::Aggregate),
            "mean" | "per-object-mean" => Ok(AggregationMode::PerObjectMean),
            other => Err(format!("unknown aggregation mode `{other}`")),
        }
    }
}

/// Reduction percentages (fractions in [0, 1]) for one slice of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub r1: f64,
    pub r2: f64,
    pub r_total: f64,
}

/// Per-object-type breakdown row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeReduction {
    pub object_type: String,
    pub count: u64,
    pub reduction: Reduction,
}

/// Reduction report for one dataset, carrying both aggregation modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReduction {
    pub dataset: String,
    pub object_count: u64,
    pub mode: AggregationMode,
    pub aggregate: Reduction,
    pub per_object_mean: Reduction,
    pub per_type: Vec<TypeReduction>,
}

impl DatasetReduction {
    /// The reduction set selected by the report's primary mode.
    pub fn primary(&self) -> Reduction {
        match self.mode {
            AggregationMode::Aggregate => self.aggregate,
            AggregationMode::PerObjectMean => self.per_object_mean,
        }
    }
}

/// Multi-dataset report plus corpus provenance lines.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReductionReport {
    pub datasets: Vec<DatasetReduction>,
    pub provenance: Vec<(String, String)>,
}

/// Measure one object through both pipeline stages.
pub fn measure_object(object: &StixObject, dict: &Dictionary) -> SizeTriple {
    let s0 = stix::canonical_json(object).len() as u64;
    let mapped = codec::apply_integer_mapping(object, dict);
    let s1 = codec::render_mapped_json(&mapped).len() as u64;
    let s2 = codec::encode_cbor(&mapped, dict.version_id())
        .body_bytes()
        .len() as u64;
    SizeTriple {
        s0,
        s1,
        s2,
        object_type: object.object_type().to_string(),
    }
}

fn aggregate_reduction(triples: &[&SizeTriple]) -> Reduction {
    let s0: u64 = triples.iter().map(|t| t.s0).sum();
    let s1: u64 = triples.iter().map(|t| t.s1).sum();
    let s2: u64 = triples.iter().map(|t| t.s2).sum();
    Reduction {
        r1: 1.0 - s1 as f64 / s0 as f64,
        r2: 1.0 - s2 as f64 / s1 as f64,
        r_total: 1.0 - s2 as f64 / s0 as f64,
    }
}

fn mean_reduction(triples: &[&SizeTriple]) -> Reduction {
    let n = triples.len() as f64;
    Reduction {
        r1: triples
            .iter()
            .map(|t| 1.0 - t.s1 as f64 / t.s0 as f64)
            .sum::<f64>()
            / n,
        r2: triples
            .iter()
            .map(|t| 1.0 - t.s2 as f64 / t.s1 as f64)
            .sum::<f64>()
            / n,
        r_total: triples
            .iter()
            .map(|t| 1.0 - t.s2 as f64 / t.s0 as f64)
            .sum::<f64>()
            / n,
    }
}

/// Fold per-object triples into a dataset reduction row.
pub fn aggregate(
    dataset: &str,
    triples: &[SizeTriple],
    mode: AggregationMode,
) -> Result<DatasetReduction, BenchError> {
    if triples.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    let all: Vec<&SizeTriple> = triples.iter().collect();
    let mut by_type: BTreeMap<&str, Vec<&SizeTriple>> = BTreeMap::new();
    for t in triples {
        by_type.entry(t.object_type.as_str()).or_default().push(t);
    }
    let per_type = by_type
        .into_iter()
        .map(|(object_type, group)| TypeReduction {
            object_type: object_type.to_string(),
            count: group.len() as u64,
            reduction: match mode {
                AggregationMode::Aggregate => aggregate_reduction(&group),
                AggregationMode::PerObjectMean => mean_reduction(&group),
            },
        })
        .collect();
    Ok(DatasetReduction {
        dataset: dataset.to_string(),
        object_count: triples.len() as u64,
        mode,
        aggregate: aggregate_reduction(&all),
        per_object_mean: mean_reduction(&all),
        per_type,
    })
}

fn pct(f: f64) -> String {
    format!("{:.2}", f * 100.0)
}

/// Render the three-row text table (one column per dataset), followed by the
/// per-type breakdown and provenance.
pub fn emit_text(report: &ReductionReport) -> String {
    let mut out = String::new();
    let name_w = 20;
    let col_w = report
        .datasets
        .iter()
        .map(|d| d.dataset.len().max(10))
        .max()
        .unwrap_or(10);

    let _ = write!(out, "{:<name_w$}", "Reduction (%)");
    for d in &report.datasets {
        let _ = write!(out, " {:>col_w$}", d.dataset);
    }
    out.push('\n');
    for (label, pick) in [
        ("Integer value keys", 0),
        ("CBOR representation", 1),
        ("Total reduction", 2),
    ] {
        let _ = write!(out, "{label:<name_w$}");
        for d in &report.datasets {
            let r = d.primary();
            let v = [r.r1, r.r2, r.r_total][pick];
            let _ = write!(out, " {:>col_w$}", pct(v));
        }
        out.push('\n');
    }
    let mode = report
        .datasets
        .first()
        .map(|d| d.mode.as_str())
        .unwrap_or("aggregate");
    let _ = writeln!(out, "mode: {mode} (per-object-mean values also computed)");

    for d in &report.datasets {
        let _ = writeln!(
            out,
            "\n[{}] {} objects, per-type breakdown:",
            d.dataset, d.object_count
        );
        for t in &d.per_type {
            let _ = writeln!(
                out,
                "  {:<24} n={:<7} r1={} r2={} total={}",
                t.object_type,
                t.count,
                pct(t.reduction.r1),
                pct(t.reduction.r2),
                pct(t.reduction.r_total)
            );
        }
    }
    if !report.provenance.is_empty() {
        out.push('\n');
        for (k, v) in &report.provenance {
            let _ = writeln!(out, "source: {k} = {v}");
        }
    }
    out
}

/// CSV layout: one row per (dataset, slice); the `__all__` slice holds the
/// dataset totals in both modes.
pub fn emit_csv(report: &ReductionReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "slice",
        "count",
        "mode",
        "r1",
        "r2",
        "r_total",
        "mean_r1",
        "mean_r2",
        "mean_r_total",
    ])
    .unwrap();
    for d in &report.datasets {
        w.write_record([
            d.dataset.as_str(),
            "__all__",
            &d.object_count.to_string(),
            d.mode.as_str(),
            &d.aggregate.r1.to_string(),
            &d.aggregate.r2.to_string(),
            &d.aggregate.r_total.to_string(),
            &d.per_object_mean.r1.to_string(),
            &d.per_object_mean.r2.to_string(),
            &d.per_object_mean.r_total.to_string(),
        ])
        .unwrap();
        for t in &d.per_type {
            w.write_record([
                d.dataset.as_str(),
                t.object_type.as_str(),
                &t.count.to_string(),
                d.mode.as_str(),
                &t.reduction.r1.to_string(),
                &t.reduction.r2.to_string(),
                &t.reduction.r_total.to_string(),
                "",
                "",
                "",
            ])
            .unwrap();
        }
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// Parse a CSV emitted by [`emit_csv`] back into a report (provenance is not
/// carried in the CSV).
pub fn parse_csv(text: &str) -> Result<ReductionReport, BenchError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut datasets: Vec<DatasetReduction> = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| BenchError::MalformedCsv(e.to_string()))?;
        let get = |i: usize| -> Result<&str, BenchError> {
            row.get(i)
                .ok_or_else(|| BenchError::MalformedCsv(format!("missing column {i}")))
        };
        let num = |s: &str| -> Result<f64, BenchError> {
            s.parse()
                .map_err(|_| BenchError::MalformedCsv(format!("bad number `{s}`")))
        };
        let dataset = get(0)?.to_string();
        let slice = get(1)?.to_string();
        let count: u64 = get(2)?
            .parse()
            .map_err(|_| BenchError::MalformedCsv("bad count".into()))?;
        let mode: AggregationMode = get(3)?.parse().map_err(BenchError::MalformedCsv)?;
        let reduction = Reduction {
            r1: num(get(4)?)?,
            r2: num(get(5)?)?,
            r_total: num(get(6)?)?,
        };
        if slice == "__all__" {
            datasets.push(DatasetReduction {
                dataset,
                object_count: count,
                mode,
                aggregate: reduction,
                per_object_mean: Reduction {
                    r1: num(get(7)?)?,
                    r2: num(get(8)?)?,
                    r_total: num(get(9)?)?,
                },
                per_type: Vec::new(),
            });
        } else {
            let d = datasets
                .last_mut()
                .ok_or_else(|| BenchError::MalformedCsv("type row before dataset row".into()))?;
            d.per_type.push(TypeReduction {
                object_type: slice,
                count,
                reduction,
            });
        }
    }
    Ok(ReductionReport {
        datasets,
        provenance: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stix::parse_object;

    fn triple(s0: u64, s1: u64, s2: u64, ty: &str) -> SizeTriple {
        SizeTriple {
            s0,
            s1,
            s2,
            object_type: ty.into(),
        }
    }

    // quoted JSON rendering width of a coded key
    fn coded_key_width(code: u64) -> i64 {
        code.to_string().len() as i64 + 2
    }

    #[test]
    fn all_custom_properties_only_recode_type_and_id_keys() {
        let d = Dictionary::stix21_v1();
        let text = r#"{"type":"x-thing","id":"x-thing--8e2e2d2b-17d4-4cbf-938f-98ee46b3cd3f","x_a":"v","x_b":2}"#;
        let obj = parse_object(text).unwrap();
        let t = measure_object(&obj, &d);
        assert_eq!(t.s0, text.len() as u64);
        // `x_*` keys and the custom type value stay as strings; only the
        // `type` and `id` key names are coded
        let delta = (6 - coded_key_width(d.encode_key("type").unwrap()))
            + (4 - coded_key_width(d.encode_key("id").unwrap()));
        assert_eq!(t.s1 as i64, t.s0 as i64 - delta);
    }

    #[test]
    fn hand_counted_triple() {
        let d = Dictionary::stix21_v1();
        let text =
            r#"{"type":"mutex","id":"mutex--8e2e2d2b-17d4-4cbf-938f-98ee46b3cd3f","name":"m"}"#;
        let obj = parse_object(text).unwrap();
        let t = measure_object(&obj, &d);
        assert_eq!(t.s0, text.len() as u64);
        // stage 1 codes the keys `type`, `id`, `name` and the type value
        let delta = (6 - coded_key_width(d.encode_key("type").unwrap()))
            + (4 - coded_key_width(d.encode_key("id").unwrap()))
            + (6 - coded_key_width(d.encode_key("name").unwrap()))
            + (7 - d.encode_type("mutex").unwrap().to_string().len() as i64);
        assert_eq!(t.s1 as i64, t.s0 as i64 - delta);
        assert!(t.s2 < t.s1);
    }

    #[test]
    fn aggregate_formulas() {
        let triples = vec![triple(100, 80, 70, "a"), triple(100, 60, 50, "b")];
        let d = aggregate("x", &triples, AggregationMode::Aggregate).unwrap();
        assert!((d.aggregate.r1 - 0.30).abs() < 1e-12);
        assert!((d.aggregate.r2 - (1.0 - 120.0 / 140.0)).abs() < 1e-12);
        assert!((d.aggregate.r_total - 0.40).abs() < 1e-12);
        assert!((d.per_object_mean.r1 - 0.30).abs() < 1e-12);
    }

    #[test]
    fn composition_identity_holds_in_aggregate_mode() {
        let triples = vec![
            triple(120, 90, 80, "a"),
            triple(250, 170, 150, "b"),
            triple(99, 98, 97, "c"),
        ];
        let d = aggregate("x", &triples, AggregationMode::Aggregate).unwrap();
        let r = d.aggregate;
        let composed = 1.0 - (1.0 - r.r1) * (1.0 - r.r2);
        assert!((r.r_total - composed).abs() < 1e-9);
    }

    #[test]
    fn duplication_leaves_aggregate_unchanged() {
        let base = vec![triple(120, 90, 80, "a"), triple(250, 170, 150, "b")];
        let mut doubled = base.clone();
        doubled.extend(base.clone());
        let a = aggregate("x", &base, AggregationMode::Aggregate).unwrap();
        let b = aggregate("x", &doubled, AggregationMode::Aggregate).unwrap();
        assert!((a.aggregate.r_total - b.aggregate.r_total).abs() < 1e-12);
    }

    #[test]
    fn degenerate_equal_sizes_reduce_zero() {
        let d = aggregate("x", &[triple(50, 50, 50, "a")], AggregationMode::Aggregate).unwrap();
        assert_eq!(d.aggregate.r1, 0.0);
        assert_eq!(d.aggregate.r2, 0.0);
        assert_eq!(d.aggregate.r_total, 0.0);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            aggregate("x", &[], AggregationMode::Aggregate),
            Err(BenchError::EmptyCorpus)
        ));
    }

    #[test]
    fn csv_roundtrip() {
        let triples = vec![triple(120, 90, 80, "a"), triple(250, 170, 150, "b")];
        let report = ReductionReport {
            datasets: vec![
                aggregate("one", &triples, AggregationMode::Aggregate).unwrap(),
                aggregate("two", &triples[..1], AggregationMode::Aggregate).unwrap(),
            ],
            provenance: Vec::new(),
        };
        let csv = emit_csv(&report);
        let parsed = parse_csv(&csv).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn text_table_has_three_rows_per_dataset_column() {
        let triples = vec![triple(120, 90, 80, "a")];
        let report = ReductionReport {
            datasets: vec![aggregate("enterprise", &triples, AggregationMode::Aggregate).unwrap()],
            provenance: vec![("enterprise".into(), "pinned-v1".into())],
        };
        let text = emit_text(&report);
        assert!(text.contains("Integer value keys"));
        assert!(text.contains("CBOR representation"));
        assert!(text.contains("Total reduction"));
        assert!(text.contains("enterprise"));
        assert!(text.contains("pinned-v1"));
    }
}
