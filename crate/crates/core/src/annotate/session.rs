use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{agreement_from_labels, AgreementReport, AnnotateError, AnnotationKind, AnnotationTask};
use crate::stable_seed;

const SESSION_FILE: &str = "session.json";
const LABEL_LOG: &str = "labels.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    pub tweet_id: String,
    pub presented_text: String,
}

/// Everything needed to create a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub session_id: String,
    pub kind: AnnotationKind,
    pub items: Vec<TaskItem>,
    pub choice_set: Vec<String>,
    pub annotators: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SessionFile {
    session_id: String,
    kind: AnnotationKind,
    seed: u64,
    annotators: Vec<String>,
    tasks: Vec<AnnotationTask>,
    /// Task indices in the order each annotator sees them.
    orders: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub session_id: String,
    pub annotator: String,
    pub task_id: String,
    pub label: String,
    pub labeled_at: DateTime<Utc>,
}

pub type Ack = LabelEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// What an annotator is shown for their next task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub session_id: String,
    pub task_id: String,
    pub kind: AnnotationKind,
    pub presented_text: String,
    pub choice_set: Vec<String>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorProgress {
    pub annotator: String,
    pub done: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub session_id: String,
    pub kind: AnnotationKind,
    pub n_tasks: usize,
    pub annotators: Vec<AnnotatorProgress>,
    pub complete: bool,
}

struct Session {
    file: SessionFile,
    task_index: HashMap<String, usize>,
    /// (annotator, task index) to label.
    labels: HashMap<(String, usize), LabelEvent>,
    log: File,
}

impl Session {
    fn done(&self, annotator: &str) -> usize {
        self.file.orders[annotator]
            .iter()
            .filter(|&&t| self.labels.contains_key(&(annotator.to_string(), t)))
            .count()
    }

    fn missing(&self) -> usize {
        self.file.tasks.len() * self.file.annotators.len() - self.labels.len()
    }

    fn check_annotator(&self, annotator: &str) -> Result<(), AnnotateError> {
        if self.file.orders.contains_key(annotator) {
            Ok(())
        } else {
            Err(AnnotateError::UnknownAnnotator {
                session: self.file.session_id.clone(),
                annotator: annotator.to_string(),
            })
        }
    }

    /// Labels per task, annotators in session order.
    fn label_table(&self) -> Result<Vec<Vec<String>>, AnnotateError> {
        let missing = self.missing();
        if missing > 0 {
            return Err(AnnotateError::Incomplete { missing });
        }
        Ok((0..self.file.tasks.len())
            .map(|t| {
                self.file
                    .annotators
                    .iter()
                    .map(|a| self.labels[&(a.clone(), t)].label.clone())
                    .collect()
            })
            .collect())
    }
}

/// Directory-backed store of annotation sessions. Writes go through
/// `&mut self`; wrap the store in a mutex to share it.
pub struct SessionStore {
    root: PathBuf,
    sessions: BTreeMap<String, Session>,
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
        && !id.starts_with('.')
}

impl SessionStore {
    /// Opens (creating if needed) the store and replays every session's
    /// label log.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, AnnotateError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let mut sessions = BTreeMap::new();
        let mut dirs: Vec<PathBuf> = fs::read_dir(&root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(SESSION_FILE).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            let session = Self::load(&dir)?;
            sessions.insert(session.file.session_id.clone(), session);
        }
        Ok(Self { root, sessions })
    }

    fn load(dir: &Path) -> Result<Session, AnnotateError> {
        let file: SessionFile = serde_json::from_slice(&fs::read(dir.join(SESSION_FILE))?)?;
        let task_index = file
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.task_id.clone(), i))
            .collect::<HashMap<_, _>>();
        let log_path = dir.join(LABEL_LOG);
        let mut labels = HashMap::new();
        if log_path.exists() {
            for (n, line) in BufReader::new(File::open(&log_path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: LabelEvent = serde_json::from_str(&line).map_err(|e| {
                    AnnotateError::Corrupt(format!("{}:{}: {e}", log_path.display(), n + 1))
                })?;
                let t = *task_index
                    .get(&event.task_id)
                    .ok_or_else(|| AnnotateError::Corrupt(format!("unknown task {}", event.task_id)))?;
                // First write wins, matching the rule enforced at submission.
                labels.entry((event.annotator.clone(), t)).or_insert(event);
            }
        }
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        Ok(Session {
            file,
            task_index,
            labels,
            log,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.keys().cloned().collect()
    }

    fn session(&self, id: &str) -> Result<&Session, AnnotateError> {
        self.sessions
            .get(id)
            .ok_or_else(|| AnnotateError::UnknownSession(id.to_string()))
    }

    /// Creates a session; each annotator gets their own seeded task order.
    pub fn create_session(&mut self, spec: SessionSpec) -> Result<SessionStatus, AnnotateError> {
        if !valid_session_id(&spec.session_id) {
            return Err(AnnotateError::InvalidSessionId(spec.session_id));
        }
        if self.sessions.contains_key(&spec.session_id) || self.root.join(&spec.session_id).exists() {
            return Err(AnnotateError::DuplicateSession(spec.session_id));
        }
        let mut seen = HashSet::new();
        let annotators: Vec<String> = spec.annotators.iter().filter(|a| seen.insert(*a)).cloned().collect();
        if annotators.is_empty() {
            return Err(AnnotateError::NoAnnotators);
        }
        if spec.choice_set.is_empty() {
            return Err(AnnotateError::EmptyChoiceSet);
        }
        let tasks: Vec<AnnotationTask> = spec
            .items
            .iter()
            .enumerate()
            .map(|(i, item)| AnnotationTask {
                task_id: format!("t{i:05}"),
                kind: spec.kind,
                tweet_id: item.tweet_id.clone(),
                presented_text: item.presented_text.clone(),
                choice_set: spec.choice_set.clone(),
                assigned_annotators: annotators.clone(),
            })
            .collect();
        let orders = annotators
            .iter()
            .map(|a| {
                let mut order: Vec<usize> = (0..tasks.len()).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(stable_seed(spec.seed, a)));
                (a.clone(), order)
            })
            .collect();
        let file = SessionFile {
            session_id: spec.session_id.clone(),
            kind: spec.kind,
            seed: spec.seed,
            annotators,
            tasks,
            orders,
        };
        let dir = self.root.join(&spec.session_id);
        fs::create_dir_all(&dir)?;
        let tmp = dir.join(format!("{SESSION_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_vec_pretty(&file)?)?;
        fs::rename(&tmp, dir.join(SESSION_FILE))?;
        let session = Self::load(&dir)?;
        self.sessions.insert(spec.session_id.clone(), session);
        self.status(&spec.session_id)
    }

    pub fn status(&self, session_id: &str) -> Result<SessionStatus, AnnotateError> {
        let s = self.session(session_id)?;
        Ok(SessionStatus {
            session_id: s.file.session_id.clone(),
            kind: s.file.kind,
            n_tasks: s.file.tasks.len(),
            annotators: s
                .file
                .annotators
                .iter()
                .map(|a| AnnotatorProgress {
                    annotator: a.clone(),
                    done: s.done(a),
                    total: s.file.tasks.len(),
                })
                .collect(),
            complete: s.missing() == 0,
        })
    }

    pub fn tasks(&self, session_id: &str) -> Result<&[AnnotationTask], AnnotateError> {
        Ok(&self.session(session_id)?.file.tasks)
    }

    /// Order in which `annotator` sees the session's task ids.
    pub fn annotator_order(&self, session_id: &str, annotator: &str) -> Result<Vec<String>, AnnotateError> {
        let s = self.session(session_id)?;
        s.check_annotator(annotator)?;
        Ok(s.file.orders[annotator]
            .iter()
            .map(|&t| s.file.tasks[t].task_id.clone())
            .collect())
    }

    /// The annotator's first unlabeled task in their order, if any.
    pub fn next_task(&self, session_id: &str, annotator: &str) -> Result<Option<TaskView>, AnnotateError> {
        let s = self.session(session_id)?;
        s.check_annotator(annotator)?;
        let progress = Progress {
            done: s.done(annotator),
            total: s.file.tasks.len(),
        };
        let next = s.file.orders[annotator]
            .iter()
            .find(|&&t| !s.labels.contains_key(&(annotator.to_string(), t)));
        Ok(next.map(|&t| {
            let task = &s.file.tasks[t];
            TaskView {
                session_id: s.file.session_id.clone(),
                task_id: task.task_id.clone(),
                kind: task.kind,
                presented_text: task.presented_text.clone(),
                choice_set: task.choice_set.clone(),
                progress,
            }
        }))
    }

    /// Records a label durably. Each annotator labels each task once.
    pub fn submit_label(
        &mut self,
        session_id: &str,
        annotator: &str,
        task_id: &str,
        label: &str,
    ) -> Result<Ack, AnnotateError> {
        let s = self
            .sessions
            .get_mut(session_id)
            .ok_or_else(|| AnnotateError::UnknownSession(session_id.to_string()))?;
        s.check_annotator(annotator)?;
        let &t = s
            .task_index
            .get(task_id)
            .ok_or_else(|| AnnotateError::UnknownTask(task_id.to_string()))?;
        let key = (annotator.to_string(), t);
        if s.labels.contains_key(&key) {
            return Err(AnnotateError::AlreadyLabeled {
                annotator: annotator.to_string(),
                task_id: task_id.to_string(),
            });
        }
        if !s.file.tasks[t].choice_set.iter().any(|c| c == label) {
            return Err(AnnotateError::LabelNotInChoiceSet {
                label: label.to_string(),
            });
        }
        let event = LabelEvent {
            session_id: session_id.to_string(),
            annotator: annotator.to_string(),
            task_id: task_id.to_string(),
            label: label.to_string(),
            labeled_at: Utc::now(),
        };
        let mut line = serde_json::to_vec(&event)?;
        line.push(b'\n');
        s.log.write_all(&line)?;
        s.log.sync_data()?;
        s.labels.insert(key, event.clone());
        Ok(event)
    }

    pub fn agreement(&self, session_id: &str) -> Result<AgreementReport, AnnotateError> {
        agreement_from_labels(&self.session(session_id)?.label_table()?)
    }

    /// Labels per tweet id, annotators in session order. Requires a complete
    /// session.
    pub fn labels_by_tweet(&self, session_id: &str) -> Result<BTreeMap<String, Vec<String>>, AnnotateError> {
        let s = self.session(session_id)?;
        let table = s.label_table()?;
        Ok(s.file
            .tasks
            .iter()
            .zip(table)
            .map(|(task, labels)| (task.tweet_id.clone(), labels))
            .collect())
    }

    /// CSV of every submitted label, ordered by task then annotator.
    pub fn export_csv(&self, session_id: &str) -> Result<String, AnnotateError> {
        let s = self.session(session_id)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["task_id", "tweet_id", "kind", "annotator", "label", "labeled_at"])?;
        for (t, task) in s.file.tasks.iter().enumerate() {
            for a in &s.file.annotators {
                if let Some(e) = s.labels.get(&(a.clone(), t)) {
                    w.write_record([
                        task.task_id.as_str(),
                        task.tweet_id.as_str(),
                        task.kind.as_str(),
                        a.as_str(),
                        e.label.as_str(),
                        &e.labeled_at.to_rfc3339(),
                    ])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| AnnotateError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output from utf-8 fields"))
    }

    pub(crate) fn kind(&self, session_id: &str) -> Result<AnnotationKind, AnnotateError> {
        Ok(self.session(session_id)?.file.kind)
    }
}

/// Compares the annotators' answers against hidden model labels, keyed by
/// task id. A task counts as correct when the plurality answer equals the
/// hidden label; a tied plurality counts as incorrect.
pub fn blind_accuracy(
    store: &SessionStore,
    session_id: &str,
    hidden_labels: &BTreeMap<String, String>,
) -> Result<(usize, usize), AnnotateError> {
    let kind = store.kind(session_id)?;
    if kind != AnnotationKind::ClusterBlind {
        return Err(AnnotateError::WrongKind {
            expected: AnnotationKind::ClusterBlind.as_str().into(),
            actual: kind.as_str().into(),
        });
    }
    let s = store.session(session_id)?;
    let table = s.label_table()?;
    let mut correct = 0;
    for (task, labels) in s.file.tasks.iter().zip(&table) {
        let hidden = hidden_labels
            .get(&task.task_id)
            .ok_or_else(|| AnnotateError::MissingHiddenLabel(task.task_id.clone()))?;
        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
        for l in labels {
            *votes.entry(l).or_default() += 1;
        }
        let top = votes.values().copied().max().unwrap_or(0);
        let winners: Vec<&str> = votes.iter().filter(|(_, &v)| v == top).map(|(k, _)| *k).collect();
        if winners.len() == 1 && winners[0] == hidden {
            correct += 1;
        }
    }
    Ok((correct, table.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: &str, n: usize, annotators: &[&str]) -> SessionSpec {
        SessionSpec {
            session_id: id.into(),
            kind: AnnotationKind::AdultBinary,
            items: (0..n)
                .map(|i| TaskItem {
                    tweet_id: format!("tw{i}"),
                    presented_text: format!("text {i}"),
                })
                .collect(),
            choice_set: AnnotationKind::AdultBinary.default_choice_set(&[]),
            annotators: annotators.iter().map(|s| s.to_string()).collect(),
            seed: 11,
        }
    }

    #[test]
    fn pending_labels_and_orders() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = SessionStore::open(dir.path()).unwrap();
        let status = store.create_session(spec("s1", 200, &["a", "b", "c", "d"])).unwrap();
        let pending: usize = status.annotators.iter().map(|a| a.total - a.done).sum();
        assert_eq!(pending, 800);
        let a = store.annotator_order("s1", "a").unwrap();
        let b = store.annotator_order("s1", "b").unwrap();
        assert_ne!(a, b);

        let other = tempfile::tempdir().unwrap();
        let mut store2 = SessionStore::open(other.path()).unwrap();
        store2.create_session(spec("s1", 200, &["a", "b", "c", "d"])).unwrap();
        assert_eq!(store2.annotator_order("s1", "a").unwrap(), a);
    }

    #[test]
    fn creation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = SessionStore::open(dir.path()).unwrap();
        assert!(matches!(store.create_session(spec("s", 3, &[])), Err(AnnotateError::NoAnnotators)));
        store.create_session(spec("s", 3, &["a"])).unwrap();
        assert!(matches!(
            store.create_session(spec("s", 3, &["a"])),
            Err(AnnotateError::DuplicateSession(_))
        ));
        assert!(matches!(
            store.create_session(spec("../x", 3, &["a"])),
            Err(AnnotateError::InvalidSessionId(_))
        ));
    }

    #[test]
    fn submission_rules_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = SessionStore::open(dir.path()).unwrap();
        store.create_session(spec("s", 2, &["a", "b"])).unwrap();
        let first = store.next_task("s", "a").unwrap().unwrap();
        assert_eq!(first.progress, Progress { done: 0, total: 2 });
        store.submit_label("s", "a", &first.task_id, "adult").unwrap();
        assert!(matches!(
            store.submit_label("s", "a", &first.task_id, "not_adult"),
            Err(AnnotateError::AlreadyLabeled { .. })
        ));
        assert!(matches!(
            store.submit_label("s", "a", "t00001", "maybe"),
            Err(AnnotateError::LabelNotInChoiceSet { .. })
        ));
        assert!(matches!(
            store.submit_label("s", "a", "t99", "adult"),
            Err(AnnotateError::UnknownTask(_))
        ));
        assert!(matches!(
            store.submit_label("s", "z", "t00001", "adult"),
            Err(AnnotateError::UnknownAnnotator { .. })
        ));
        assert!(matches!(store.agreement("s"), Err(AnnotateError::Incomplete { missing: 3 })));

        for annotator in ["a", "b"] {
            while let Some(task) = store.next_task("s", annotator).unwrap() {
                store.submit_label("s", annotator, &task.task_id, "adult").unwrap();
            }
        }
        let report = store.agreement("s").unwrap_err();
        assert!(matches!(report, AnnotateError::KappaUndefined(_)));
        let csv = store.export_csv("s").unwrap();
        assert_eq!(csv.lines().count(), 5);

        drop(store);
        let reopened = SessionStore::open(dir.path()).unwrap();
        assert!(reopened.status("s").unwrap().complete);
        assert_eq!(reopened.export_csv("s").unwrap(), csv);
    }

    #[test]
    fn blind_accuracy_counts_plurality() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = SessionStore::open(dir.path()).unwrap();
        let mut s = spec("blind", 3, &["a", "b"]);
        s.kind = AnnotationKind::ClusterBlind;
        s.choice_set = vec!["0".into(), "1".into(), "2".into()];
        store.create_session(s).unwrap();
        let answers = [("t00000", "0", "0"), ("t00001", "1", "2"), ("t00002", "2", "2")];
        for (task, a, b) in answers {
            store.submit_label("blind", "a", task, a).unwrap();
            store.submit_label("blind", "b", task, b).unwrap();
        }
        let hidden: BTreeMap<String, String> = [("t00000", "0"), ("t00001", "1"), ("t00002", "1")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        assert_eq!(blind_accuracy(&store, "blind", &hidden).unwrap(), (1, 3));
    }
}
