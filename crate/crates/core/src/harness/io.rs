//! Reading and writing datasets, clusterings and problem manifests.
//!
//! Datasets are CSV files of numeric feature columns plus an optional label
//! column whose values may be arbitrary strings. A manifest is a JSON file
//! listing such CSVs:
//!
//! ```json
//! {"version": 1, "problems": [
//!   {"name": "iris", "path": "iris.csv", "label_column": 4, "domain": "botany"}
//! ]}
//! ```
//!
//! Paths are relative to the manifest. `label_column` defaults to the last
//! column and `has_header` to `false`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Clustering, Dataset, LabeledProblem, Labeling, MetaRepository, Provenance};

pub const MANIFEST_VERSION: u32 = 1;

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Loads a CSV of numeric features. With `label_column` set, that column is
/// read as class labels (any strings, mapped to ids by first appearance).
pub fn load_csv(path: &Path, label_column: Option<usize>, has_header: bool) -> Result<(Dataset, Option<Labeling>)> {
    read_csv(path, label_column.map_or(LabelColumn::Absent, LabelColumn::At), has_header)
}

/// Loads a CSV whose last column holds the labels.
pub fn load_labeled_csv(path: &Path, has_header: bool) -> Result<(Dataset, Labeling)> {
    let (x, labels) = read_csv(path, LabelColumn::Last, has_header)?;
    Ok((x, labels.expect("label column requested")))
}

/// Labels from the last field of every row, mapped to ids by first
/// appearance. Rows may have any number of fields.
pub fn load_labels(path: &Path, has_header: bool) -> Result<Labeling> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut ids: HashMap<String, i64> = HashMap::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let Some(last) = record.iter().next_back() else { continue };
        let next = ids.len() as i64;
        labels.push(*ids.entry(last.to_string()).or_insert(next));
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no labels".into(),
        });
    }
    Ok(Labeling::new(labels))
}

#[derive(Clone, Copy)]
enum LabelColumn {
    Absent,
    At(usize),
    Last,
}

fn read_csv(path: &Path, label: LabelColumn, has_header: bool) -> Result<(Dataset, Option<Labeling>)> {
    let mut label_column = match label {
        LabelColumn::At(c) => Some(c),
        _ => None,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut label_ids: HashMap<String, i64> = HashMap::new();
    let mut width = None;
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(n + 1);
        let cols = record.len();
        if matches!(label, LabelColumn::Last) && label_column.is_none() {
            label_column = Some(cols.saturating_sub(1));
        }
        if let Some(lc) = label_column {
            if lc >= cols {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("label column {lc} but only {cols} columns"),
                });
            }
        }
        let d = cols - label_column.map_or(0, |_| 1);
        if d == 0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "no feature columns".into(),
            });
        }
        width.get_or_insert(cols);
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_column {
                let next = label_ids.len() as i64;
                labels.push(*label_ids.entry(cell.to_string()).or_insert(next));
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("column {c}: '{cell}' is not a number"),
            })?;
            points.push(v);
        }
        n += 1;
    }
    let Some(cols) = width else {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "empty file".into(),
        });
    };
    let d = cols - label_column.map_or(0, |_| 1);
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let x = Dataset::new(points, n, d)?.named(name);
    Ok((x, label_column.map(|_| Labeling::new(labels))))
}

/// Writes features and (optionally) a trailing label column, no header.
/// Values use the shortest representation that reads back exactly.
pub fn write_csv(path: &Path, x: &Dataset, labels: Option<&[usize]>) -> Result<()> {
    let mut out = String::new();
    for (i, row) in x.rows().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = labels {
            cells.push(l[i].to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_clustering(path: &Path) -> Result<Clustering> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn write_clustering(path: &Path, c: &Clustering) -> Result<()> {
    write_text(path, &serde_json::to_string(c)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub label_column: Option<usize>,
    #[serde(default)]
    pub domain: String,
    #[serde(default)]
    pub has_header: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub problems: Vec<ManifestEntry>,
}

/// Corpus bounds applied while loading. Defaults: at most 10,000 instances,
/// 500 features and 10 classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepositoryFilters {
    pub max_instances: usize,
    pub max_features: usize,
    pub max_classes: usize,
}

impl Default for RepositoryFilters {
    fn default() -> Self {
        Self {
            max_instances: 10_000,
            max_features: 500,
            max_classes: 10,
        }
    }
}

impl RepositoryFilters {
    /// Why `p` is rejected, if it is.
    pub fn rejection(&self, p: &LabeledProblem) -> Option<String> {
        let n = p.data.n();
        if n > self.max_instances {
            return Some(format!("{n} instances exceed {}", self.max_instances));
        }
        if let Some(x) = p.data.as_dataset() {
            if x.d() > self.max_features {
                return Some(format!("{} features exceed {}", x.d(), self.max_features));
            }
        }
        if p.truth.k() > self.max_classes {
            return Some(format!("{} classes exceed {}", p.truth.k(), self.max_classes));
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRepository {
    pub repo: MetaRepository,
    pub exclusions: Vec<Exclusion>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = read_text(path)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::Manifest(format!("unsupported version {}", manifest.version)));
    }
    let mut names = HashSet::new();
    for e in &manifest.problems {
        if !names.insert(e.name.as_str()) {
            return Err(Error::Manifest(format!("duplicate problem name '{}'", e.name)));
        }
    }
    Ok(manifest)
}

pub fn load_repository(manifest_path: &Path, filters: &RepositoryFilters) -> Result<LoadedRepository> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut problems = Vec::new();
    let mut exclusions = Vec::new();
    for entry in &manifest.problems {
        let path = base.join(&entry.path);
        if !path.is_file() {
            return Err(Error::Manifest(format!(
                "problem '{}': cannot read {}",
                entry.name,
                path.display()
            )));
        }
        let label = entry.label_column.map_or(LabelColumn::Last, LabelColumn::At);
        let (x, labels) = read_csv(&path, label, entry.has_header)?;
        let labels = labels.expect("label column requested");
        let problem = LabeledProblem::euclidean(x.named(entry.name.clone()), &labels)?.with_provenance(Provenance {
            name: entry.name.clone(),
            source: entry.path.display().to_string(),
            domain: entry.domain.clone(),
        });
        match filters.rejection(&problem) {
            Some(reason) => {
                log::info!("excluding '{}': {reason}", entry.name);
                exclusions.push(Exclusion {
                    name: entry.name.clone(),
                    reason,
                });
            }
            None => problems.push(problem),
        }
    }
    Ok(LoadedRepository {
        repo: MetaRepository::new(problems),
        exclusions,
    })
}

/// Writes every problem of `repo` as `<dir>/<name>.csv` (label last) plus
/// `<dir>/manifest.json`.
pub fn write_repository(dir: &Path, repo: &MetaRepository) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(repo.len());
    for p in &repo.problems {
        let x = p.dataset()?;
        let file = PathBuf::from(format!("{}.csv", p.name()));
        write_csv(&dir.join(&file), x, Some(p.truth.assignment()))?;
        entries.push(ManifestEntry {
            name: p.name().to_string(),
            path: file,
            label_column: Some(x.d()),
            domain: p.provenance.domain.clone(),
            has_header: false,
        });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        problems: entries,
    };
    let path = dir.join("manifest.json");
    write_text(&path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn parses_labels_and_features() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "0,0,a\n1,0,a\n9,9,b\n");
        let (x, y) = load_csv(&p, Some(2), false).unwrap();
        assert_eq!((x.n(), x.d()), (3, 2));
        assert_eq!(y.unwrap().labels, vec![0, 0, 1]);
        let (x, y) = load_csv(&write(dir.path(), "b.csv", "1,2\n3,4\n"), None, false).unwrap();
        assert_eq!((x.n(), x.d(), y), (2, 2, None));
        let (x, _) = load_csv(&write(dir.path(), "c.csv", "f1,f2\n1,2\n"), None, true).unwrap();
        assert_eq!(x.n(), 1);
        let (x, y) = load_labeled_csv(&write(dir.path(), "d.csv", "0,0,b\n1,0,a\n9,9,b\n"), false).unwrap();
        assert_eq!((x.d(), y.labels), (2, vec![0, 1, 0]));
    }

    #[test]
    fn labels_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let y = load_labels(&write(dir.path(), "l.csv", "cls\ncat\ndog\n1,cat\n"), true).unwrap();
        assert_eq!(y.labels, vec![0, 1, 0]);
        assert!(load_labels(&write(dir.path(), "h.csv", "cls\n"), true).is_err());
    }

    #[test]
    fn rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = load_csv(&write(dir.path(), "r.csv", "1,2\n3\n"), None, false);
        assert!(matches!(ragged, Err(Error::Parse { line: 2, .. })), "{ragged:?}");
        let text = load_csv(&write(dir.path(), "t.csv", "1,2\n3,x\n"), None, false);
        assert!(matches!(text, Err(Error::Parse { line: 2, .. })), "{text:?}");
        assert!(matches!(load_csv(&write(dir.path(), "e.csv", ""), None, false), Err(Error::Parse { .. })));
        assert!(load_csv(&dir.path().join("missing.csv"), None, false).unwrap_err().is_io());
    }

    #[test]
    fn manifest_loading_and_filters() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", "0,0,x\n1,0,x\n9,9,y\n");
        write(dir.path(), "b.csv", "0,a\n1,b\n2,c\n");
        let manifest = r#"{"version": 1, "problems": [
            {"name": "a", "path": "a.csv", "domain": "toy"},
            {"name": "b", "path": "b.csv", "label_column": 1}]}"#;
        let m = write(dir.path(), "m.json", manifest);
        let loaded = load_repository(&m, &RepositoryFilters::default()).unwrap();
        assert_eq!(loaded.repo.len(), 2);
        assert_eq!(loaded.repo.problems[0].provenance.domain, "toy");

        let strict = RepositoryFilters {
            max_classes: 2,
            ..Default::default()
        };
        let loaded = load_repository(&m, &strict).unwrap();
        assert_eq!(loaded.repo.len(), 1);
        assert_eq!(loaded.exclusions[0].name, "b");

        let dup = write(
            dir.path(),
            "d.json",
            r#"{"version": 1, "problems": [{"name": "a", "path": "a.csv"}, {"name": "a", "path": "b.csv"}]}"#,
        );
        assert!(matches!(load_repository(&dup, &strict), Err(Error::Manifest(_))));
        let missing = write(dir.path(), "x.json", r#"{"version": 1, "problems": [{"name": "z", "path": "z.csv"}]}"#);
        let err = load_repository(&missing, &strict).unwrap_err();
        assert!(err.to_string().contains("'z'"));
    }

    #[test]
    fn repository_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = Dataset::from_rows(&[vec![0.1, 1.0 / 3.0], vec![2.5, -7.0], vec![1e-9, 3.0]]).unwrap().named("p0");
        let p = LabeledProblem::euclidean(x, &Labeling::new(vec![5, 5, 2])).unwrap();
        let repo = MetaRepository::new(vec![p]);
        let m = write_repository(dir.path(), &repo).unwrap();
        let back = load_repository(&m, &RepositoryFilters::default()).unwrap().repo;
        assert_eq!(back.problems[0].dataset().unwrap().as_slice(), repo.problems[0].dataset().unwrap().as_slice());
        assert_eq!(back.problems[0].truth, repo.problems[0].truth);
    }
}
