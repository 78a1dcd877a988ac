//! File formats: model JSON, sample text files, report JSON.
//!
//! Vertices and symbols are 0-based in memory; files use 1-based vertices
//! and 0-based symbols. JSON writers emit a canonical key order (struct
//! order) with shortest-round-trip floats, so write -> load -> write is a
//! byte-identical fixpoint.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Alphabet, BasisKind, BasisTag, Factor, FactorGraph, FactorId, GraphicalModel, ModelFamily,
};
use crate::sampler::{Provenance, SampleSet};
use crate::suprise::{EstimatedFactor, EstimateMetrics, RoundLog, StructureReport};

#[derive(Debug, Serialize, Deserialize)]
struct ModelJson {
    p: usize,
    alphabet: Vec<usize>,
    basis: String,
    factors: Vec<FactorJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FactorJson {
    /// 1-based vertex indices.
    scope: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    assignment: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<TableJson>,
    theta: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableJson {
    /// Row-major over scope configurations, last scope index fastest.
    values: Vec<f64>,
}

fn basis_from_str(s: &str) -> Result<BasisKind> {
    match s {
        "monomial" => Ok(BasisKind::Monomial),
        "indicator" => Ok(BasisKind::Indicator),
        "custom" => Ok(BasisKind::Custom),
        other => Err(Error::Parse(format!("unknown basis kind {other:?}"))),
    }
}

/// Serialize a model to the canonical JSON text.
pub fn model_to_string(model: &GraphicalModel) -> Result<String> {
    let factors = model
        .graph()
        .factors()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let (assignment, table) = match f.tag() {
                BasisTag::Monomial => (None, None),
                BasisTag::Indicator(letters) => {
                    (Some(letters.iter().map(|&s| s as usize).collect()), None)
                }
                BasisTag::Custom(values) => (
                    None,
                    Some(TableJson {
                        values: values.clone(),
                    }),
                ),
            };
            FactorJson {
                scope: f.scope().iter().map(|&v| v + 1).collect(),
                assignment,
                table,
                theta: model.theta()[k],
            }
        })
        .collect();
    let json = ModelJson {
        p: model.graph().vertex_count(),
        alphabet: model.alphabet().sizes().to_vec(),
        basis: model.basis().as_str().to_string(),
        factors,
    };
    Ok(serde_json::to_string_pretty(&json)? + "\n")
}

/// Parse a model from its JSON text.
pub fn model_from_str(text: &str) -> Result<GraphicalModel> {
    let json: ModelJson = serde_json::from_str(text)?;
    let basis = basis_from_str(&json.basis)?;
    let alphabet = Alphabet::new(json.alphabet)?;
    let mut factors = Vec::with_capacity(json.factors.len());
    let mut theta = Vec::with_capacity(json.factors.len());
    for (i, fj) in json.factors.iter().enumerate() {
        let scope: Vec<usize> = fj
            .scope
            .iter()
            .map(|&v| {
                if v == 0 || v > json.p {
                    Err(Error::VertexOutOfRange {
                        vertex: v,
                        p: json.p,
                    })
                } else {
                    Ok(v - 1)
                }
            })
            .collect::<Result<_>>()?;
        let tag = match basis {
            BasisKind::Monomial => BasisTag::Monomial,
            BasisKind::Indicator => {
                let letters = fj.assignment.as_ref().ok_or_else(|| {
                    Error::Parse(format!("factor {i}: indicator basis needs an assignment"))
                })?;
                BasisTag::Indicator(letters.iter().map(|&s| s as u8).collect())
            }
            BasisKind::Custom => {
                let table = fj.table.as_ref().ok_or_else(|| {
                    Error::Parse(format!("factor {i}: custom basis needs a table"))
                })?;
                BasisTag::Custom(table.values.clone())
            }
        };
        factors.push(Factor::new(scope, tag)?);
        theta.push(fj.theta);
    }
    let graph = FactorGraph::new(json.p, factors)?;
    let family = ModelFamily::new(graph, alphabet, basis)?;
    GraphicalModel::new(family, theta)
}

pub fn write_model(path: &Path, model: &GraphicalModel) -> Result<()> {
    fs::write(path, model_to_string(model)?)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<GraphicalModel> {
    model_from_str(&fs::read_to_string(path)?)
}

/// Write samples: header line `n p`, then one line of space-separated
/// 0-based symbols per sample.
pub fn samples_to_string(samples: &SampleSet) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", samples.len(), samples.vertex_count()));
    for row in samples.rows() {
        let line: Vec<String> = row.iter().map(|s| s.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parse a sample file, validating symbols against the given alphabet.
pub fn samples_from_str(text: &str, alphabet: Alphabet, source: &str) -> Result<SampleSet> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty sample file".into()))?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("header must be `n p`".into()))?;
    let p: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("header must be `n p`".into()))?;
    if p != alphabet.vertex_count() {
        return Err(Error::Parse(format!(
            "header p = {p} but alphabet covers {} vertices",
            alphabet.vertex_count()
        )));
    }
    let mut data = Vec::with_capacity(n * p);
    for (t, line) in lines.enumerate() {
        if t >= n {
            if !line.trim().is_empty() {
                return Err(Error::Parse(format!("more than {n} sample rows")));
            }
            continue;
        }
        let symbols: Vec<&str> = line.split_whitespace().collect();
        if symbols.len() != p {
            return Err(Error::Parse(format!(
                "row {t} has {} symbols, expected {p}",
                symbols.len()
            )));
        }
        for s in symbols {
            let value: usize = s
                .parse()
                .map_err(|_| Error::Parse(format!("row {t}: bad symbol {s:?}")))?;
            data.push(value as u8);
        }
    }
    if data.len() != n * p {
        return Err(Error::Parse(format!(
            "expected {n} rows, found {}",
            data.len() / p
        )));
    }
    SampleSet::new(data, alphabet, Provenance::external(source))
}

pub fn write_samples(path: &Path, samples: &SampleSet) -> Result<()> {
    fs::write(path, samples_to_string(samples))?;
    Ok(())
}

pub fn read_samples(path: &Path, alphabet: Alphabet) -> Result<SampleSet> {
    samples_from_str(
        &fs::read_to_string(path)?,
        alphabet,
        &path.display().to_string(),
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportJson {
    cliques: Vec<Vec<usize>>,
    parameters: Vec<ReportFactorJson>,
    rounds: Vec<RoundJson>,
    metrics: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportFactorJson {
    scope: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    assignment: Option<Vec<usize>>,
    theta_avg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RoundJson {
    t: usize,
    removed: Vec<Vec<usize>>,
    norms: BTreeMap<String, f64>,
}

fn clique_key(clique: &[usize]) -> String {
    clique
        .iter()
        .map(|&v| (v + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Serialize a structure report (1-based vertices).
pub fn report_to_string(report: &StructureReport) -> Result<String> {
    let mut metrics = BTreeMap::new();
    metrics.insert("alpha".to_string(), serde_json::json!(report.alpha));
    metrics.insert("epsilon".to_string(), serde_json::json!(report.epsilon));
    metrics.insert(
        "rounds_planned".to_string(),
        serde_json::json!(report.rounds_planned),
    );
    metrics.insert(
        "solves".to_string(),
        serde_json::json!(report.solves.len()),
    );
    let json = ReportJson {
        cliques: report
            .cliques
            .iter()
            .map(|c| c.iter().map(|&v| v + 1).collect())
            .collect(),
        parameters: report
            .parameters
            .iter()
            .map(|p| ReportFactorJson {
                scope: p.scope.iter().map(|&v| v + 1).collect(),
                assignment: p
                    .assignment
                    .as_ref()
                    .map(|a| a.iter().map(|&s| s as usize).collect()),
                theta_avg: p.theta_avg,
            })
            .collect(),
        rounds: report
            .rounds
            .iter()
            .map(|r| RoundJson {
                t: r.round,
                removed: r
                    .removed
                    .iter()
                    .map(|c| c.iter().map(|&v| v + 1).collect())
                    .collect(),
                norms: r
                    .norms
                    .iter()
                    .map(|(c, n)| (clique_key(c), *n))
                    .collect(),
            })
            .collect(),
        metrics,
    };
    Ok(serde_json::to_string_pretty(&json)? + "\n")
}

pub fn write_report(path: &Path, report: &StructureReport) -> Result<()> {
    fs::write(path, report_to_string(report)?)?;
    Ok(())
}

/// Parse a report against the family it was learned on; estimated factors
/// are resolved by scope (and assignment for indicator bases).
pub fn report_from_str(text: &str, family: &ModelFamily) -> Result<StructureReport> {
    let json: ReportJson = serde_json::from_str(text)?;
    let graph = family.graph();
    let resolve = |scope: &[usize], assignment: &Option<Vec<usize>>| -> Result<FactorId> {
        let scope0: Vec<usize> = scope.iter().map(|&v| v - 1).collect();
        let matches: Vec<FactorId> = (0..graph.factor_count())
            .filter(|&k| {
                let f = graph.factor(k);
                if f.scope() != scope0.as_slice() {
                    return false;
                }
                match (f.tag(), assignment) {
                    (BasisTag::Indicator(letters), Some(a)) => {
                        letters.len() == a.len()
                            && letters.iter().zip(a).all(|(&l, &x)| l as usize == x)
                    }
                    (BasisTag::Indicator(_), None) => false,
                    (_, None) => true,
                    (_, Some(_)) => false,
                }
            })
            .collect();
        match matches.as_slice() {
            [k] => Ok(*k),
            [] => Err(Error::FamilyMismatch(format!(
                "no family factor matches scope {scope:?}"
            ))),
            _ => Err(Error::FamilyMismatch(format!(
                "ambiguous factor for scope {scope:?}; reports over custom spans need unique scopes"
            ))),
        }
    };
    let mut parameters = Vec::new();
    for p in &json.parameters {
        let factor = resolve(&p.scope, &p.assignment)?;
        parameters.push(EstimatedFactor {
            factor,
            scope: p.scope.iter().map(|&v| v - 1).collect(),
            assignment: p
                .assignment
                .as_ref()
                .map(|a| a.iter().map(|&s| s as u8).collect()),
            theta_avg: p.theta_avg,
        });
    }
    let alpha = json
        .metrics
        .get("alpha")
        .and_then(|v| v.as_f64())
        .unwrap_or(0.0);
    let epsilon = json
        .metrics
        .get("epsilon")
        .and_then(|v| v.as_f64())
        .unwrap_or(0.0);
    let rounds_planned = json
        .metrics
        .get("rounds_planned")
        .and_then(|v| v.as_u64())
        .unwrap_or(json.rounds.len() as u64) as usize;
    Ok(StructureReport {
        cliques: json
            .cliques
            .iter()
            .map(|c| c.iter().map(|&v| v - 1).collect())
            .collect(),
        parameters,
        rounds: json
            .rounds
            .iter()
            .map(|r| RoundLog {
                round: r.t,
                norms: r
                    .norms
                    .iter()
                    .map(|(key, &n)| {
                        let clique: Vec<usize> = key
                            .split(',')
                            .filter_map(|s| s.parse::<usize>().ok())
                            .map(|v| v - 1)
                            .collect();
                        (clique, n)
                    })
                    .collect(),
                removed: r
                    .removed
                    .iter()
                    .map(|c| c.iter().map(|&v| v - 1).collect())
                    .collect(),
                short_circuited: false,
            })
            .collect(),
        solves: Vec::new(),
        epsilon,
        rounds_planned,
        alpha,
    })
}

pub fn read_report(path: &Path, family: &ModelFamily) -> Result<StructureReport> {
    report_from_str(&fs::read_to_string(path)?, family)
}

/// Metrics JSON for the eval command.
pub fn metrics_to_string(metrics: &EstimateMetrics) -> Result<String> {
    #[derive(Serialize)]
    struct MetricsJson {
        precision: f64,
        recall: f64,
        f1: f64,
        linf2_error: f64,
        l2_error: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        within_pairwise_budget: Option<bool>,
    }
    let json = MetricsJson {
        precision: metrics.precision,
        recall: metrics.recall,
        f1: metrics.f1,
        linf2_error: metrics.linf2_error,
        l2_error: metrics.l2_error,
        within_pairwise_budget: metrics.within_pairwise_budget,
    };
    Ok(serde_json::to_string_pretty(&json)? + "\n")
}
