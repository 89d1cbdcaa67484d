use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::aggregate::effective_responses;
use super::{AnnotationError, AnnotationQuestion, AnnotationResponse, Choice, Relation};

/// Fleiss' kappa over an item × category count matrix. Every row must sum to
/// the same rater count `n >= 2`. When all ratings fall in one category the
/// chance agreement is 1 and kappa is defined as 1.
pub fn fleiss_kappa(matrix: &[Vec<u32>]) -> Result<f64, AnnotationError> {
    let items = matrix.len();
    let n = matrix.first().map_or(0, |r| r.iter().sum::<u32>());
    for (row, r) in matrix.iter().enumerate() {
        let found = r.iter().sum::<u32>();
        if found != n || r.len() != matrix[0].len() {
            return Err(AnnotationError::RaggedMatrix {
                row,
                expected: n,
                found,
            });
        }
    }
    if items < 2 {
        return Err(AnnotationError::TooFewItems(items));
    }
    if n < 2 {
        return Err(AnnotationError::TooFewRaters(n));
    }
    let nf = n as f64;
    let total = items as f64 * nf;
    let p_bar = matrix
        .iter()
        .map(|r| {
            let agree: f64 = r.iter().map(|&c| (c as f64) * (c as f64 - 1.0)).sum();
            agree / (nf * (nf - 1.0))
        })
        .sum::<f64>()
        / items as f64;
    let p_e: f64 = (0..matrix[0].len())
        .map(|j| {
            let p = matrix.iter().map(|r| r[j] as f64).sum::<f64>() / total;
            p * p
        })
        .sum();
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Per-question counts over [`Choice::ALL`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRow {
    pub relation: Relation,
    pub question_id: String,
    pub counts: [u32; 7],
}

impl RatingRow {
    /// Counts restricted to the relation's options, in option order.
    pub fn option_counts(&self) -> Vec<u32> {
        self.relation
            .options()
            .iter()
            .map(|c| self.counts[c.column()])
            .collect()
    }
}

/// Rows for questions with at least `raters` effective responses, using the
/// first `raters` of them by `(timestamp, worker)`. Question order is kept.
pub fn rating_matrix(
    questions: &[AnnotationQuestion],
    responses: &[AnnotationResponse],
    raters: usize,
) -> Vec<RatingRow> {
    let mut by_question: HashMap<&str, Vec<AnnotationResponse>> = HashMap::new();
    for r in responses {
        by_question.entry(&r.question_id).or_default().push(r.clone());
    }
    questions
        .iter()
        .filter_map(|q| {
            let rs = by_question.get(q.id.as_str())?;
            let effective = effective_responses(rs);
            if effective.len() < raters {
                return None;
            }
            let mut counts = [0u32; 7];
            for r in &effective[..raters] {
                counts[r.choice.column()] += 1;
            }
            Some(RatingRow {
                relation: q.relation,
                question_id: q.id.clone(),
                counts,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub relation: Relation,
    pub n_items: usize,
    pub n_raters_per_item: u32,
    /// `None` when fewer than two items are available.
    pub kappa: Option<f64>,
    pub category_proportions: Vec<(Choice, f64)>,
}

/// Agreement over the rows of one relation; the category space is the
/// relation's full option list.
pub fn agreement_report(relation: Relation, rows: &[RatingRow]) -> Result<AgreementReport, AnnotationError> {
    let matrix: Vec<Vec<u32>> = rows
        .iter()
        .filter(|r| r.relation == relation)
        .map(RatingRow::option_counts)
        .collect();
    let n_raters = matrix.first().map_or(0, |r| r.iter().sum());
    let kappa = match fleiss_kappa(&matrix) {
        Ok(k) => Some(k),
        Err(AnnotationError::TooFewItems(_)) => None,
        Err(e) => return Err(e),
    };
    let total: u32 = matrix.iter().flatten().sum();
    let category_proportions = relation
        .options()
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let count: u32 = matrix.iter().map(|r| r[j]).sum();
            let p = if total == 0 { 0.0 } else { count as f64 / total as f64 };
            (c, p)
        })
        .collect();
    Ok(AgreementReport {
        relation,
        n_items: matrix.len(),
        n_raters_per_item: n_raters,
        kappa,
        category_proportions,
    })
}

pub fn write_rating_matrix_csv<W: Write>(out: W, rows: &[RatingRow]) -> Result<(), AnnotationError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["relation", "question_id"];
    header.extend(Choice::ALL.iter().map(|c| c.as_str()));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.relation.to_string(), r.question_id.clone()];
        rec.extend(r.counts.iter().map(u32::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// A count matrix per relation; `None` for a bare matrix.
pub type RatingGroups = Vec<(Option<Relation>, Vec<Vec<u32>>)>;

/// Reads either an exported rating matrix (`relation,question_id,<choices>`)
/// or a bare numeric matrix with an optional header. Exported rows come back
/// grouped by relation in order of first appearance, restricted to that
/// relation's options; a bare matrix is one group with no relation.
pub fn read_rating_matrix_csv<R: Read>(input: R) -> Result<RatingGroups, AnnotationError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>()?;
    let typed = records.first().is_some_and(|r| r.get(1) == Some("question_id"));
    let count = |record: usize, field: &str| {
        field.parse::<u32>().map_err(|_| AnnotationError::Malformed {
            record,
            reason: format!("{field:?} is not a count"),
        })
    };

    if typed {
        let header = &records[0];
        let columns: Vec<Choice> = header.iter().skip(2).map(str::parse).collect::<Result<_, _>>()?;
        let mut groups: RatingGroups = Vec::new();
        for (i, rec) in records.iter().enumerate().skip(1) {
            if rec.len() != columns.len() + 2 {
                return Err(AnnotationError::Malformed {
                    record: i,
                    reason: format!("expected {} fields, found {}", columns.len() + 2, rec.len()),
                });
            }
            let relation: Relation = rec[0].parse()?;
            let mut counts = [0u32; 7];
            for (c, field) in columns.iter().zip(rec.iter().skip(2)) {
                counts[c.column()] = count(i, field)?;
            }
            let row = relation.options().iter().map(|c| counts[c.column()]).collect();
            match groups.iter_mut().find(|g| g.0 == Some(relation)) {
                Some(g) => g.1.push(row),
                None => groups.push((Some(relation), vec![row])),
            }
        }
        return Ok(groups);
    }

    let mut rows = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        if i == 0 && rec.iter().any(|f| f.parse::<u32>().is_err()) {
            continue;
        }
        rows.push(rec.iter().map(|f| count(i, f)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(vec![(None, rows)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{generate_question, Payload};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hand_computed_four_by_three() {
        // P_i = 1, 1/3, 0, 1/3 so P = 5/12; p_j = 1/2, 1/3, 1/6 so Pe = 7/18.
        // kappa = (5/12 - 7/18) / (11/18) = 1/22.
        let m = vec![vec![3, 0, 0], vec![2, 1, 0], vec![1, 1, 1], vec![0, 2, 1]];
        let k = fleiss_kappa(&m).unwrap();
        assert!((k - 1.0 / 22.0).abs() < 1e-9);
        assert!((k - 0.045454545454545456).abs() < 1e-9);
    }

    #[test]
    fn unanimous_is_one() {
        let m: Vec<Vec<u32>> = (0..10)
            .map(|i| {
                let mut r = vec![0; 3];
                r[i % 3] = 3;
                r
            })
            .collect();
        assert_eq!(fleiss_kappa(&m).unwrap(), 1.0);
        let single = vec![vec![3, 0, 0]; 4];
        assert_eq!(fleiss_kappa(&single).unwrap(), 1.0);
    }

    #[test]
    fn ragged_and_tiny_matrices_are_errors() {
        assert!(matches!(
            fleiss_kappa(&[vec![3, 0], vec![1, 1]]),
            Err(AnnotationError::RaggedMatrix { row: 1, .. })
        ));
        assert!(matches!(
            fleiss_kappa(&[vec![3, 0]]),
            Err(AnnotationError::TooFewItems(1))
        ));
        assert!(matches!(
            fleiss_kappa(&[vec![1, 0], vec![0, 1]]),
            Err(AnnotationError::TooFewRaters(1))
        ));
    }

    #[test]
    fn random_ratings_are_near_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let m: Vec<Vec<u32>> = (0..10_000)
            .map(|_| {
                let mut r = vec![0; 3];
                for _ in 0..3 {
                    r[rng.random_range(0..3)] += 1;
                }
                r
            })
            .collect();
        assert!(fleiss_kappa(&m).unwrap().abs() < 0.02);
    }

    #[test]
    fn export_and_reread_give_same_kappa() {
        let qs: Vec<_> = ["rain", "thunder", "wind", "bells"]
            .iter()
            .map(|p| {
                generate_question(
                    Payload::Phrase { text: p.to_string() },
                    Relation::SoundPhraseCheck,
                    None,
                )
                .unwrap()
            })
            .collect();
        let picks = [[0, 0, 0], [0, 0, 1], [0, 1, 2], [1, 1, 2]];
        let mut rs = Vec::new();
        for (q, p) in qs.iter().zip(picks) {
            for (w, c) in p.iter().enumerate() {
                rs.push(AnnotationResponse {
                    question_id: q.id.clone(),
                    worker_id: format!("w{w}"),
                    choice: Relation::SoundPhraseCheck.options()[*c],
                    timestamp: w as u64,
                });
            }
        }
        let rows = rating_matrix(&qs, &rs, 3);
        let live = agreement_report(Relation::SoundPhraseCheck, &rows).unwrap();
        assert_eq!(live.n_items, 4);
        let total: f64 = live.category_proportions.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-9);

        let mut buf = Vec::new();
        write_rating_matrix_csv(&mut buf, &rows).unwrap();
        let groups = read_rating_matrix_csv(&buf[..]).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(live.kappa, Some(fleiss_kappa(&groups[0].1).unwrap()));
    }

    #[test]
    fn reads_bare_numeric_matrix() {
        let groups = read_rating_matrix_csv("a,b,c\n3,0,0\n0,3,0\n".as_bytes()).unwrap();
        assert_eq!(groups, vec![(None, vec![vec![3, 0, 0], vec![0, 3, 0]])]);
    }

    fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<u32>>> {
        (2usize..5, 2usize..12).prop_flat_map(|(cats, items)| {
            prop::collection::vec(prop::collection::vec(0..cats, 3), items).prop_map(move |rows| {
                rows.into_iter()
                    .map(|votes| {
                        let mut r = vec![0u32; cats];
                        for v in votes {
                            r[v] += 1;
                        }
                        r
                    })
                    .collect()
            })
        })
    }

    proptest! {
        #[test]
        fn kappa_invariant_under_permutations(m in matrix_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let k = fleiss_kappa(&m).unwrap();
            let mut rows = m.clone();
            rows.shuffle(&mut rng);
            let mut cols: Vec<usize> = (0..m[0].len()).collect();
            cols.shuffle(&mut rng);
            let permuted: Vec<Vec<u32>> = rows.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect();
            prop_assert!((fleiss_kappa(&permuted).unwrap() - k).abs() < 1e-12);
            prop_assert!(k <= 1.0 + 1e-12);
        }

        #[test]
        fn kappa_one_iff_rows_concentrated(m in matrix_strategy()) {
            let concentrated = m.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1);
            let k = fleiss_kappa(&m).unwrap();
            prop_assert_eq!(concentrated, (k - 1.0).abs() < 1e-12);
        }
    }
}
