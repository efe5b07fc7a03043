use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ClassifierError;
use crate::schedulers::PolicyTag;

/// Oracle label attached to a counter snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "F")]
    Fast,
    #[serde(rename = "S")]
    Slow,
    /// Fast and slow paths disagreed; resolved after both runs finish.
    #[serde(rename = "pending")]
    Pending,
}

impl Label {
    pub fn tag(self) -> Option<PolicyTag> {
        match self {
            Label::Fast => Some(PolicyTag::Fast),
            Label::Slow => Some(PolicyTag::Slow),
            Label::Pending => None,
        }
    }
}

impl From<PolicyTag> for Label {
    fn from(tag: PolicyTag) -> Self {
        match tag {
            PolicyTag::Fast => Label::Fast,
            PolicyTag::Slow => Label::Slow,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    /// Index of the originating scenario within its suite.
    pub scenario: usize,
    pub workload: usize,
    pub rate_mbps: f64,
    /// Ordinal of the invocation within the scenario's fast-path run.
    pub decision: usize,
    pub features: Vec<f64>,
    pub label: Label,
}

impl TrainingSample {
    pub fn tag(&self) -> Result<PolicyTag, ClassifierError> {
        self.label.tag().ok_or(ClassifierError::Pending(self.decision))
    }
}

const LEAD: [&str; 4] = ["scenario", "workload", "scenario_rate_mbps", "decision"];

/// Writes samples as CSV: four identifying columns, one column per feature
/// name, then the label.
pub fn write_samples<W: Write>(
    out: W,
    feature_names: &[String],
    samples: &[TrainingSample],
) -> Result<(), ClassifierError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = LEAD.to_vec();
    header.extend(feature_names.iter().map(String::as_str));
    header.push("label");
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![
            s.scenario.to_string(),
            s.workload.to_string(),
            s.rate_mbps.to_string(),
            s.decision.to_string(),
        ];
        row.extend(s.features.iter().map(f64::to_string));
        row.push(
            match s.label {
                Label::Fast => "F",
                Label::Slow => "S",
                Label::Pending => "pending",
            }
            .to_string(),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads samples written by [`write_samples`]; returns feature names too.
pub fn read_samples<R: Read>(
    input: R,
) -> Result<(Vec<String>, Vec<TrainingSample>), ClassifierError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let width = header.len();
    if width < LEAD.len() + 1
        || header.iter().take(LEAD.len()).ne(LEAD.iter().copied())
        || &header[width - 1] != "label"
    {
        return Err(ClassifierError::Malformed(
            "sample header does not match the expected layout".into(),
        ));
    }
    let names: Vec<String> = header
        .iter()
        .skip(LEAD.len())
        .take(width - LEAD.len() - 1)
        .map(str::to_string)
        .collect();
    let bad = |line: usize, what: &str| {
        ClassifierError::Malformed(format!("sample row {line}: bad {what}"))
    };
    let mut samples = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let label = match &record[width - 1] {
            "F" => Label::Fast,
            "S" => Label::Slow,
            "pending" => Label::Pending,
            _ => return Err(bad(line, "label")),
        };
        let features = (LEAD.len()..width - 1)
            .map(|i| record[i].parse::<f64>().map_err(|_| bad(line, "feature")))
            .collect::<Result<Vec<_>, _>>()?;
        samples.push(TrainingSample {
            scenario: record[0].parse().map_err(|_| bad(line, "scenario"))?,
            workload: record[1].parse().map_err(|_| bad(line, "workload"))?,
            rate_mbps: record[2].parse().map_err(|_| bad(line, "rate"))?,
            decision: record[3].parse().map_err(|_| bad(line, "decision"))?,
            features,
            label,
        });
    }
    Ok((names, samples))
}

/// Splits by scenario so that no scenario contributes to both halves.
/// Roughly `train_fraction` of the distinct scenarios go to training.
pub fn split_by_scenario(
    samples: &[TrainingSample],
    train_fraction: f64,
    seed: u64,
) -> (Vec<TrainingSample>, Vec<TrainingSample>) {
    let mut ids: Vec<usize> = samples.iter().map(|s| s.scenario).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((ids.len() as f64) * train_fraction).round() as usize;
    let train_ids: std::collections::HashSet<usize> = ids[..cut].iter().copied().collect();
    samples
        .iter()
        .cloned()
        .partition(|s| train_ids.contains(&s.scenario))
}

/// Fraction of samples whose tree prediction matches the label.
pub fn accuracy(
    tree: &super::DecisionTree,
    samples: &[TrainingSample],
) -> Result<f64, ClassifierError> {
    if samples.is_empty() {
        return Err(ClassifierError::EmptySamples);
    }
    let mut hits = 0usize;
    for s in samples {
        if tree.classify(&s.features)? == s.tag()? {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}
