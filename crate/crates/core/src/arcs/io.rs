use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use super::{ArcError, ArcPoint, BinSpec, EmotionArc};

/// Writes `position,value` rows; missing values are empty fields.
pub fn write_arc_csv<W: Write>(out: W, arc: &EmotionArc) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["position", "value"])?;
    for p in arc.points() {
        w.write_record([
            p.position.to_string(),
            p.value.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

/// One JSON object per point; missing values are `null`.
pub fn write_arc_jsonl<W: Write>(mut out: W, arc: &EmotionArc) -> io::Result<()> {
    for p in arc.points() {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads an arc CSV written by [`write_arc_csv`].
pub fn read_arc_csv<R: Read>(input: R) -> Result<Vec<ArcPoint>, ArcError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| ArcError::ArcFile(e.to_string()))?;
    if headers.len() < 2 || &headers[0] != "position" || &headers[1] != "value" {
        return Err(ArcError::ArcFile(format!(
            "expected header position,value, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| ArcError::ArcFile(e.to_string()))?;
        let line = i + 2;
        let position = rec[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| ArcError::ArcFile(format!("line {line}: bad position {:?}", &rec[0])))?;
        let raw = rec.get(1).unwrap_or("").trim();
        let value = if raw.is_empty() {
            None
        } else {
            Some(
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ArcError::ArcFile(format!("line {line}: bad value {raw:?}")))?,
            )
        };
        points.push(ArcPoint { position, value });
    }
    Ok(points)
}

/// Reads an arc CSV from disk; `bin` is recorded on the arc as metadata.
pub fn read_arc(path: impl AsRef<Path>, bin: BinSpec) -> Result<EmotionArc, ArcError> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| ArcError::Io(path.display().to_string(), e))?;
    let points = read_arc_csv(BufReader::new(f))?;
    Ok(EmotionArc::new(points, bin, false))
}
