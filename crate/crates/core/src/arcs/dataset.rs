//! Labeled text streams and their CSV/TSV ingestion.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ArcError;

/// One text instance in temporal order, with an optional gold label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub index: usize,
    pub text: String,
    pub gold: Option<f64>,
}

/// An ordered stream of instances with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledStream {
    instances: Vec<LabeledInstance>,
}

impl LabeledStream {
    pub fn new(instances: Vec<LabeledInstance>) -> Result<Self, ArcError> {
        if let Some(w) = instances.windows(2).find(|w| w[0].index >= w[1].index) {
            return Err(ArcError::Dataset(format!(
                "indices must be strictly increasing ({} then {})",
                w[0].index, w[1].index
            )));
        }
        Ok(LabeledStream { instances })
    }

    /// Builds a stream from `(text, gold)` pairs, indexed `0..N-1`.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Option<f64>)>,
        S: Into<String>,
    {
        LabeledStream {
            instances: pairs
                .into_iter()
                .enumerate()
                .map(|(index, (text, gold))| LabeledInstance {
                    index,
                    text: text.into(),
                    gold,
                })
                .collect(),
        }
    }

    /// A text-less stream carrying only gold labels.
    pub fn from_golds(golds: &[f64]) -> Self {
        Self::from_pairs(golds.iter().map(|&g| (String::new(), Some(g))))
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledInstance> {
        self.instances.iter()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.instances.iter().map(|i| i.text.as_str()).collect()
    }

    /// All gold labels, or an error naming the first unlabeled instance.
    pub fn golds(&self) -> Result<Vec<f64>, ArcError> {
        self.instances
            .iter()
            .map(|i| i.gold.ok_or(ArcError::MissingGold(i.index)))
            .collect()
    }

    /// Stable ascending sort by gold label, reindexed `0..N-1`.
    pub fn order_by_gold(&self) -> Result<LabeledStream, ArcError> {
        let golds = self.golds()?;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| golds[a].total_cmp(&golds[b]));
        Ok(LabeledStream {
            instances: order
                .into_iter()
                .enumerate()
                .map(|(index, i)| LabeledInstance {
                    index,
                    ..self.instances[i].clone()
                })
                .collect(),
        })
    }

    pub fn into_instances(self) -> Vec<LabeledInstance> {
        self.instances
    }
}

/// Column reference by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl From<&str> for Column {
    /// Digits are read as a position, anything else as a header name.
    fn from(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        }
    }
}

/// Where to find text and label in a delimited file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub text_column: Column,
    pub label_column: Option<Column>,
    /// Field delimiter; guessed from the file extension when absent
    /// (`.tsv`/`.txt` → tab, otherwise comma).
    #[serde(default)]
    pub delimiter: Option<u8>,
    #[serde(default = "default_true")]
    pub has_header: bool,
}

fn default_true() -> bool {
    true
}

impl Default for DatasetSchema {
    /// The schema written by [`write_dataset`]: header `index,text,label`.
    fn default() -> Self {
        DatasetSchema {
            text_column: Column::Name("text".into()),
            label_column: Some(Column::Name("label".into())),
            delimiter: None,
            has_header: true,
        }
    }
}

/// Parses a label as a rational: decimal (`0.75`), fraction (`3/4`), or a
/// leading number followed by a colon and a description (`-3: very negative`).
pub fn parse_label(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    if let Some((n, d)) = s.split_once('/') {
        let (n, d) = (n.trim().parse::<f64>().ok()?, d.trim().parse::<f64>().ok()?);
        return (d != 0.0 && n.is_finite() && d.is_finite()).then(|| n / d);
    }
    if let Some((head, _)) = s.split_once(':') {
        return head.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    }
    None
}

/// Loads a dataset; instances keep file order and are indexed `0..N-1`.
pub fn load_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<LabeledStream, ArcError> {
    let path = path.as_ref();
    let delimiter = schema.delimiter.unwrap_or_else(|| guess_delimiter(path));
    let mut file = File::open(path).map_err(|e| ArcError::Io(path.display().to_string(), e))?;
    let mut buf = String::new();
    file.read_to_string(&mut buf)
        .map_err(|e| ArcError::Io(path.display().to_string(), e))?;
    parse_dataset(&buf, delimiter, schema)
}

fn guess_delimiter(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("tsv") || ext.eq_ignore_ascii_case("txt") => b'\t',
        _ => b',',
    }
}

pub fn parse_dataset(text: &str, delimiter: u8, schema: &DatasetSchema) -> Result<LabeledStream, ArcError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(schema.has_header)
        .flexible(true)
        // TSV exports of tweets carry bare quote characters inside fields
        .quoting(delimiter != b'\t')
        .from_reader(text.as_bytes());
    let headers = if schema.has_header {
        Some(reader.headers().map_err(|e| ArcError::Dataset(e.to_string()))?.clone())
    } else {
        None
    };
    let resolve = |col: &Column| -> Result<usize, ArcError> {
        match (col, &headers) {
            (Column::Index(i), _) => Ok(*i),
            (Column::Name(n), Some(h)) => h
                .iter()
                .position(|f| f.trim() == n)
                .ok_or_else(|| ArcError::MissingColumn(n.clone())),
            (Column::Name(n), None) => Err(ArcError::MissingColumn(format!(
                "{n} (file has no header; use a column index)"
            ))),
        }
    };
    let text_idx = resolve(&schema.text_column)?;
    let label_idx = schema.label_column.as_ref().map(&resolve).transpose()?;

    let mut instances = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ArcError::Dataset(e.to_string()))?;
        let line = row + 1 + schema.has_header as usize;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        let text = record
            .get(text_idx)
            .ok_or_else(|| ArcError::MissingColumn(format!("text column {text_idx} on line {line}")))?;
        let gold = match label_idx {
            None => None,
            Some(i) => {
                let raw = record
                    .get(i)
                    .ok_or_else(|| ArcError::MissingColumn(format!("label column {i} on line {line}")))?;
                if raw.trim().is_empty() {
                    None
                } else {
                    Some(parse_label(raw).ok_or_else(|| ArcError::BadLabel {
                        line,
                        value: raw.to_string(),
                    })?)
                }
            }
        };
        instances.push(LabeledInstance {
            index: instances.len(),
            text: text.to_string(),
            gold,
        });
    }
    if instances.is_empty() {
        return Err(ArcError::NoInstances);
    }
    Ok(LabeledStream { instances })
}

/// Writes a stream as CSV `index,text,label[,extra columns...]`, the format
/// [`DatasetSchema::default`] reads back.
pub fn write_dataset<W: Write>(
    out: W,
    stream: &LabeledStream,
    extra: &[(&str, Vec<String>)],
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index", "text", "label"];
    header.extend(extra.iter().map(|e| e.0));
    w.write_record(&header)?;
    for (row, inst) in stream.iter().enumerate() {
        let mut rec = vec![
            inst.index.to_string(),
            inst.text.clone(),
            inst.gold.map(|g| g.to_string()).unwrap_or_default(),
        ];
        rec.extend(extra.iter().map(|e| e.1[row].clone()));
        w.write_record(&rec)?;
    }
    w.flush()
}
