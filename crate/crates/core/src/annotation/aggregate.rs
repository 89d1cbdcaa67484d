use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AnnotationError, AnnotationQuestion, AnnotationResponse, Choice, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Majority {
    Label(Choice),
    Unresolved,
}

impl Majority {
    pub fn label(self) -> Option<Choice> {
        match self {
            Majority::Label(c) => Some(c),
            Majority::Unresolved => None,
        }
    }
}

impl fmt::Display for Majority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Majority::Label(c) => f.write_str(c.as_str()),
            Majority::Unresolved => f.write_str("unresolved"),
        }
    }
}

impl From<Majority> for String {
    fn from(m: Majority) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Majority {
    type Error = AnnotationError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "unresolved" {
            Ok(Majority::Unresolved)
        } else {
            s.parse().map(Majority::Label)
        }
    }
}

/// One response per worker, the latest by `(timestamp, choice)`, ordered by
/// `(timestamp, worker)`.
pub fn effective_responses(responses: &[AnnotationResponse]) -> Vec<&AnnotationResponse> {
    let mut latest: HashMap<&str, &AnnotationResponse> = HashMap::new();
    for r in responses {
        latest
            .entry(&r.worker_id)
            .and_modify(|cur| {
                if (r.timestamp, r.choice) > (cur.timestamp, cur.choice) {
                    *cur = r;
                }
            })
            .or_insert(r);
    }
    let mut out: Vec<_> = latest.into_values().collect();
    out.sort_by(|a, b| (a.timestamp, &a.worker_id).cmp(&(b.timestamp, &b.worker_id)));
    out
}

/// Strict-majority vote over the responses to one question. A worker's
/// resubmission replaces their earlier answer.
pub fn aggregate_majority(responses: &[AnnotationResponse]) -> Result<Majority, AnnotationError> {
    let first = responses.first().ok_or(AnnotationError::NoResponses)?;
    if responses.iter().any(|r| r.question_id != first.question_id) {
        return Err(AnnotationError::MixedQuestions);
    }
    let effective = effective_responses(responses);
    let mut counts: BTreeMap<Choice, usize> = BTreeMap::new();
    for r in &effective {
        *counts.entry(r.choice).or_default() += 1;
    }
    let n = effective.len();
    Ok(counts
        .into_iter()
        .find(|&(_, c)| 2 * c > n)
        .map_or(Majority::Unresolved, |(choice, _)| Majority::Label(choice)))
}

/// A row of the `relation,arg1,arg2,label` export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedLabel {
    pub relation: Relation,
    pub arg1: String,
    pub arg2: String,
    pub label: Majority,
}

/// Majority labels for every question with at least one response, in
/// question order.
pub fn aggregate_all(questions: &[AnnotationQuestion], responses: &[AnnotationResponse]) -> Vec<AggregatedLabel> {
    let mut by_question: HashMap<&str, Vec<AnnotationResponse>> = HashMap::new();
    for r in responses {
        by_question.entry(&r.question_id).or_default().push(r.clone());
    }
    questions
        .iter()
        .filter_map(|q| {
            let rs = by_question.get(q.id.as_str())?;
            let label = aggregate_majority(rs).ok()?;
            let (arg1, arg2) = q.payload.args();
            Some(AggregatedLabel {
                relation: q.relation,
                arg1: arg1.to_string(),
                arg2: arg2.to_string(),
                label,
            })
        })
        .collect()
}

/// Class index for training, or `None` for labels that carry no class
/// (notsure, notasmell, unresolved).
pub fn training_label(relation: Relation, label: Majority) -> Option<usize> {
    let choice = label.label()?;
    match (relation, choice) {
        (Relation::SmellSentiment, Choice::Pleasant) => Some(0),
        (Relation::SmellSentiment, Choice::Unpleasant) => Some(1),
        (Relation::SmellSentiment, Choice::Neutral) => Some(2),
        (Relation::SmellSentiment, _) => None,
        (_, Choice::Yes) => Some(1),
        (_, Choice::No) => Some(0),
        _ => None,
    }
}

/// Share of each majority outcome, keyed by label text.
pub fn label_proportions<'a, I>(labels: I) -> BTreeMap<String, f64>
where
    I: IntoIterator<Item = &'a Majority>,
{
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut n = 0;
    for l in labels {
        *counts.entry(l.to_string()).or_default() += 1;
        n += 1;
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect()
}

pub fn write_labels_csv<W: Write>(out: W, labels: &[AggregatedLabel]) -> Result<(), AnnotationError> {
    let mut w = csv::Writer::from_writer(out);
    for l in labels {
        w.serialize(l)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_labels_csv<R: Read>(input: R) -> Result<Vec<AggregatedLabel>, AnnotationError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(AnnotationError::from))
        .collect()
}
