use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use senscommon::annotation::{
    aggregate_majority, agreement_report, effective_responses, label_proportions, rating_matrix,
    write_rating_matrix_csv, AnnotationQuestion, AnnotationResponse, Choice, Majority, Relation, DEFAULT_RATERS,
};
use senscommon::jsonl;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const QUESTIONS_FILE: &str = "questions.jsonl";
pub const RESPONSES_FILE: &str = "responses.jsonl";
/// Ten minutes.
pub const DEFAULT_SERVE_TIMEOUT_MS: u64 = 600_000;
pub const DEFAULT_COMPACT_EVERY: usize = 1000;

#[derive(Debug, Clone)]
pub struct StoreOptions {
    pub raters: usize,
    pub serve_timeout_ms: u64,
    pub compact_every: usize,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            raters: DEFAULT_RATERS,
            serve_timeout_ms: DEFAULT_SERVE_TIMEOUT_MS,
            compact_every: DEFAULT_COMPACT_EVERY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Lease {
    worker: String,
    expires_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ack {
    pub question_id: String,
    pub worker_id: String,
    pub choice: Choice,
    pub timestamp: u64,
    /// Distinct workers who have answered the question.
    pub responses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationStats {
    pub relation: Relation,
    pub questions: usize,
    pub responses: usize,
    pub fully_answered: usize,
    pub kappa: Option<f64>,
    pub majority: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub raters: usize,
    pub relations: Vec<RelationStats>,
}

/// Questions plus an append-only response log in a data directory.
///
/// Every accepted response is written and synced to `responses.jsonl`
/// before `submit` returns. The log is periodically rewritten to hold only
/// the effective response of each (question, worker).
pub struct AnnotationStore {
    dir: PathBuf,
    options: StoreOptions,
    questions: Vec<AnnotationQuestion>,
    index: HashMap<String, usize>,
    /// Effective response per question, keyed by worker.
    answers: Vec<BTreeMap<String, AnnotationResponse>>,
    leases: HashMap<usize, Lease>,
    log: File,
    appended: usize,
    last_timestamp: u64,
}

impl AnnotationStore {
    /// Writes `questions` into `dir` (replacing any earlier question file and
    /// response log) and opens the result.
    pub fn create(dir: &Path, questions: &[AnnotationQuestion], options: StoreOptions) -> Result<Self, ServiceError> {
        fs::create_dir_all(dir)?;
        let mut sorted = questions.to_vec();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        sorted.dedup_by(|a, b| a.id == b.id);
        write_atomic(&dir.join(QUESTIONS_FILE), |w| jsonl::write_records(w, &sorted))?;
        write_atomic(&dir.join(RESPONSES_FILE), |w| w.flush())?;
        Self::open(dir, options)
    }

    /// Loads questions and replays the response log. A torn final line left
    /// by a crash mid-append is discarded; it was never acknowledged.
    pub fn open(dir: &Path, options: StoreOptions) -> Result<Self, ServiceError> {
        let qpath = dir.join(QUESTIONS_FILE);
        let mut questions: Vec<AnnotationQuestion> = jsonl::read_records(BufReader::new(
            File::open(&qpath).map_err(|e| ServiceError::Open(qpath.clone(), e))?,
        ))?;
        questions.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::new();
        for (i, q) in questions.iter().enumerate() {
            if index.insert(q.id.clone(), i).is_some() {
                return Err(ServiceError::DuplicateQuestion(q.id.clone()));
            }
        }
        let rpath = dir.join(RESPONSES_FILE);
        let mut responses = Vec::new();
        if rpath.exists() {
            let lines: Vec<String> = BufReader::new(File::open(&rpath)?).lines().collect::<Result<_, _>>()?;
            let last = lines.iter().rposition(|l| !l.trim().is_empty());
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match jsonl::from_line::<AnnotationResponse>(line, i + 1) {
                    Ok(r) => responses.push(r),
                    Err(_) if Some(i) == last => break,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        let mut answers = vec![BTreeMap::new(); questions.len()];
        let mut last_timestamp = 0;
        for r in responses {
            let &qi = index
                .get(&r.question_id)
                .ok_or_else(|| ServiceError::UnknownQuestion(r.question_id.clone()))?;
            last_timestamp = last_timestamp.max(r.timestamp);
            let slot: &mut BTreeMap<String, AnnotationResponse> = &mut answers[qi];
            match slot.get(&r.worker_id) {
                Some(cur) if (cur.timestamp, cur.choice) > (r.timestamp, r.choice) => {}
                _ => {
                    slot.insert(r.worker_id.clone(), r);
                }
            }
        }
        let mut store = AnnotationStore {
            log: OpenOptions::new().create(true).append(true).open(&rpath)?,
            dir: dir.to_path_buf(),
            options,
            questions,
            index,
            answers,
            leases: HashMap::new(),
            appended: 0,
            last_timestamp,
        };
        store.compact()?;
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn options(&self) -> &StoreOptions {
        &self.options
    }

    pub fn questions(&self) -> &[AnnotationQuestion] {
        &self.questions
    }

    pub fn question(&self, id: &str) -> Option<&AnnotationQuestion> {
        self.index.get(id).map(|&i| &self.questions[i])
    }

    /// Effective responses, in question order then worker order.
    pub fn responses(&self) -> Vec<AnnotationResponse> {
        self.answers.iter().flat_map(|m| m.values().cloned()).collect()
    }

    pub fn response_count(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| self.answers[i].len())
    }

    /// Up to `n` questions for `worker`: ones the worker has not answered,
    /// that still need raters and that no one currently holds, fewest
    /// responses first, then by id. The returned questions are held for the
    /// worker until they answer or the serve timeout passes.
    pub fn next_batch(&mut self, worker: &str, n: usize, now_ms: u64) -> Vec<AnnotationQuestion> {
        self.leases.retain(|_, l| l.expires_ms > now_ms);
        let mut candidates: Vec<usize> = (0..self.questions.len())
            .filter(|&i| {
                let a = &self.answers[i];
                a.len() < self.options.raters && !a.contains_key(worker) && !self.leases.contains_key(&i)
            })
            .collect();
        candidates.sort_by_key(|&i| (self.answers[i].len(), i));
        candidates.truncate(n);
        for &i in &candidates {
            self.leases.insert(
                i,
                Lease {
                    worker: worker.to_string(),
                    expires_ms: now_ms.saturating_add(self.options.serve_timeout_ms),
                },
            );
        }
        candidates.into_iter().map(|i| self.questions[i].clone()).collect()
    }

    /// Validates, persists and applies one answer. A repeat answer from the
    /// same worker replaces the earlier one.
    pub fn submit(&mut self, question_id: &str, worker: &str, choice: &str, now_ms: u64) -> Result<Ack, ServiceError> {
        if worker.trim().is_empty() {
            return Err(ServiceError::MissingWorker);
        }
        let &qi = self
            .index
            .get(question_id)
            .ok_or_else(|| ServiceError::UnknownQuestion(question_id.to_string()))?;
        let relation = self.questions[qi].relation;
        let allowed = || relation.options().iter().map(|c| c.as_str().to_string()).collect();
        let choice: Choice = choice.parse().map_err(|_| ServiceError::InvalidChoice {
            choice: choice.to_string(),
            allowed: allowed(),
        })?;
        if !relation.allows(choice) {
            return Err(ServiceError::InvalidChoice {
                choice: choice.as_str().to_string(),
                allowed: allowed(),
            });
        }
        let timestamp = now_ms.max(self.last_timestamp + 1);
        let response = AnnotationResponse {
            question_id: question_id.to_string(),
            worker_id: worker.to_string(),
            choice,
            timestamp,
        };
        writeln!(self.log, "{}", jsonl::to_line(&response))?;
        self.log.sync_data()?;
        self.last_timestamp = timestamp;
        self.answers[qi].insert(worker.to_string(), response);
        if self.leases.get(&qi).is_some_and(|l| l.worker == worker) {
            self.leases.remove(&qi);
        }
        self.appended += 1;
        if self.appended >= self.options.compact_every {
            self.compact()?;
        }
        Ok(Ack {
            question_id: question_id.to_string(),
            worker_id: worker.to_string(),
            choice,
            timestamp,
            responses: self.answers[qi].len(),
        })
    }

    /// Rewrites the log to hold only effective responses.
    pub fn compact(&mut self) -> Result<(), ServiceError> {
        let path = self.dir.join(RESPONSES_FILE);
        let responses = self.responses();
        write_atomic(&path, |w| jsonl::write_records(w, &responses))?;
        self.log = OpenOptions::new().append(true).open(&path)?;
        self.appended = 0;
        Ok(())
    }

    pub fn rating_rows(&self) -> Vec<senscommon::annotation::RatingRow> {
        rating_matrix(&self.questions, &self.responses(), self.options.raters)
    }

    /// Rating-matrix CSV over every question with enough raters.
    pub fn export_csv(&self) -> Result<String, ServiceError> {
        let mut buf = Vec::new();
        write_rating_matrix_csv(&mut buf, &self.rating_rows())?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    pub fn stats(&self) -> Result<Stats, ServiceError> {
        let rows = self.rating_rows();
        let mut relations = Vec::new();
        for relation in Relation::ALL {
            let members: Vec<usize> = (0..self.questions.len())
                .filter(|&i| self.questions[i].relation == relation)
                .collect();
            let full: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&i| self.answers[i].len() >= self.options.raters)
                .collect();
            let labels: Vec<Majority> = full
                .iter()
                .map(|&i| {
                    let rs: Vec<AnnotationResponse> = self.answers[i].values().cloned().collect();
                    let first: Vec<AnnotationResponse> = effective_responses(&rs)
                        .into_iter()
                        .take(self.options.raters)
                        .cloned()
                        .collect();
                    aggregate_majority(&first)
                })
                .collect::<Result<_, _>>()?;
            relations.push(RelationStats {
                relation,
                questions: members.len(),
                responses: members.iter().map(|&i| self.answers[i].len()).sum(),
                fully_answered: full.len(),
                kappa: agreement_report(relation, &rows)?.kappa,
                majority: label_proportions(&labels),
            });
        }
        Ok(Stats {
            raters: self.options.raters,
            relations,
        })
    }
}

fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&File>) -> std::io::Result<()>,
) -> Result<(), ServiceError> {
    let tmp = path.with_extension("tmp");
    let file = File::create(&tmp)?;
    {
        let mut w = BufWriter::new(&file);
        body(&mut w)?;
        w.flush()?;
    }
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use senscommon::annotation::{generate_question, Payload};

    pub(crate) fn questions(n: usize) -> Vec<AnnotationQuestion> {
        (0..n)
            .map(|i| {
                let payload = Payload::Pair {
                    sound: format!("sound{i}"),
                    source: format!("source{i}"),
                };
                generate_question(payload, Relation::SoundSource, None).unwrap()
            })
            .collect()
    }

    fn store(n: usize) -> (tempfile::TempDir, AnnotationStore) {
        let dir = tempfile::tempdir().unwrap();
        let s = AnnotationStore::create(dir.path(), &questions(n), StoreOptions::default()).unwrap();
        (dir, s)
    }

    #[test]
    fn fresh_store_serves_lowest_ids() {
        let (_d, mut s) = store(10);
        let mut ids: Vec<String> = questions(10).into_iter().map(|q| q.id).collect();
        ids.sort();
        let batch: Vec<String> = s.next_batch("w1", 3, 0).into_iter().map(|q| q.id).collect();
        assert_eq!(batch, ids[..3]);
    }

    #[test]
    fn held_questions_are_not_served_twice_until_timeout() {
        let (_d, mut s) = store(4);
        let a = s.next_batch("w1", 3, 0);
        let b = s.next_batch("w2", 3, 1);
        assert_eq!(b.len(), 1);
        assert!(a.iter().all(|q| q.id != b[0].id));
        assert!(s.next_batch("w1", 3, 2).is_empty());
        let reclaimed = s.next_batch("w3", 10, DEFAULT_SERVE_TIMEOUT_MS + 1);
        assert_eq!(reclaimed.len(), 4);
    }

    #[test]
    fn exhausted_worker_gets_nothing() {
        let (_d, mut s) = store(3);
        for q in s.next_batch("w", 5, 0) {
            s.submit(&q.id, "w", "yes", 1).unwrap();
        }
        assert!(s.next_batch("w", 5, 2).is_empty());
        assert_eq!(s.next_batch("v", 5, 2).len(), 3);
    }

    #[test]
    fn fewest_responses_first() {
        let (_d, mut s) = store(3);
        let ids: Vec<String> = s.questions().iter().map(|q| q.id.clone()).collect();
        s.submit(&ids[0], "a", "yes", 0).unwrap();
        s.submit(&ids[1], "a", "yes", 0).unwrap();
        let batch: Vec<String> = s.next_batch("b", 3, 0).into_iter().map(|q| q.id).collect();
        assert_eq!(batch, [ids[2].clone(), ids[0].clone(), ids[1].clone()]);
    }

    #[test]
    fn questions_at_rater_target_are_not_served() {
        let (_d, mut s) = store(1);
        let id = s.questions()[0].id.clone();
        for w in ["a", "b", "c"] {
            s.submit(&id, w, "no", 0).unwrap();
        }
        assert!(s.next_batch("d", 1, 0).is_empty());
    }

    #[test]
    fn submissions_validate_and_overwrite() {
        let (_d, mut s) = store(1);
        let id = s.questions()[0].id.clone();
        let err = s.submit(&id, "w", "maybe", 0).unwrap_err();
        assert!(matches!(&err, ServiceError::InvalidChoice { allowed, .. } if allowed == &["yes", "no", "notsure"]));
        assert!(matches!(
            s.submit(&id, "w", "pleasant", 0),
            Err(ServiceError::InvalidChoice { .. })
        ));
        assert!(matches!(
            s.submit("nope", "w", "yes", 0),
            Err(ServiceError::UnknownQuestion(_))
        ));
        assert_eq!(s.submit(&id, "w", "yes", 5).unwrap().responses, 1);
        let ack = s.submit(&id, "w", "no", 5).unwrap();
        assert_eq!(ack.responses, 1);
        assert!(ack.timestamp > 5);
        assert_eq!(s.responses()[0].choice, Choice::No);
    }

    #[test]
    fn acknowledged_answers_survive_restart_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let opts = StoreOptions {
            compact_every: 2,
            ..StoreOptions::default()
        };
        let mut s = AnnotationStore::create(dir.path(), &questions(3), opts.clone()).unwrap();
        let ids: Vec<String> = s.questions().iter().map(|q| q.id.clone()).collect();
        s.submit(&ids[0], "a", "yes", 1).unwrap();
        s.submit(&ids[0], "a", "no", 1).unwrap();
        s.submit(&ids[1], "b", "notsure", 1).unwrap();
        let before = s.responses();
        drop(s);
        let mut log = OpenOptions::new()
            .append(true)
            .open(dir.path().join(RESPONSES_FILE))
            .unwrap();
        write!(log, "{{\"v\":1,\"question_id\":\"").unwrap();
        drop(log);
        let s = AnnotationStore::open(dir.path(), opts).unwrap();
        assert_eq!(s.responses(), before);
        assert_eq!(s.response_count(&ids[0]), Some(1));
    }

    #[test]
    fn empty_store_stats_are_zero() {
        let (_d, s) = store(0);
        let stats = s.stats().unwrap();
        assert_eq!(stats.relations.len(), Relation::ALL.len());
        for r in stats.relations {
            assert_eq!((r.questions, r.responses, r.fully_answered), (0, 0, 0));
            assert_eq!(r.kappa, None);
            assert!(r.majority.is_empty());
        }
    }

    #[test]
    fn unanimous_store_has_kappa_one() {
        let (_d, mut s) = store(4);
        let ids: Vec<String> = s.questions().iter().map(|q| q.id.clone()).collect();
        for (k, id) in ids.iter().enumerate() {
            let choice = if k % 2 == 0 { "yes" } else { "no" };
            for w in ["a", "b", "c"] {
                s.submit(id, w, choice, 0).unwrap();
            }
        }
        let stats = s.stats().unwrap();
        let ss = &stats.relations[0];
        assert_eq!(ss.fully_answered, 4);
        assert_eq!(ss.kappa, Some(1.0));
        assert_eq!(ss.majority.get("yes"), Some(&0.5));
    }
}
