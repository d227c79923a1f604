use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LearnError, Result};
use crate::features::{FullRoadFeatures, SegmentFeatures};
use crate::rng;
use crate::road::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Column {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    FullRoad,
    Segment,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub set: FeatureSet,
    pub columns: Vec<Column>,
}

impl Schema {
    pub fn new(set: FeatureSet, columns: Vec<Column>) -> Self {
        Schema { set, columns }
    }

    pub fn numeric(names: &[&str]) -> Self {
        Schema::new(
            FeatureSet::Custom,
            names.iter().map(|n| Column::new(*n, ColumnKind::Numeric)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn ensure_same(&self, other: &Schema) -> Result<()> {
        if self != other {
            return Err(LearnError::SchemaMismatch(format!(
                "{:?} with {} columns vs {:?} with {} columns",
                self.set,
                self.len(),
                other.set,
                other.len()
            )));
        }
        Ok(())
    }

    /// Recognise a known feature set from its column names.
    fn from_names(names: &[String]) -> Schema {
        for known in [FullRoadFeatures::schema(), SegmentFeatures::schema()] {
            if known.names() == names.iter().map(String::as_str).collect::<Vec<_>>() {
                return known;
            }
        }
        Schema::new(
            FeatureSet::Custom,
            names.iter().map(|n| Column::new(n.clone(), ColumnKind::Numeric)).collect(),
        )
    }
}

/// One row: feature values in schema order plus label and origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledVector {
    pub values: Vec<f64>,
    pub label: Label,
    /// Test id the row was extracted from.
    pub source: String,
    /// Segment index for segment-level rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<LabeledVector>,
    /// Which driver produced the labels.
    pub provenance: String,
}

impl Dataset {
    pub fn new(schema: Schema, provenance: impl Into<String>) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
            provenance: provenance.into(),
        }
    }

    pub fn from_parts(schema: Schema, rows: Vec<LabeledVector>, provenance: impl Into<String>) -> Result<Self> {
        let mut d = Dataset::new(schema, provenance);
        for r in rows {
            d.push(r)?;
        }
        Ok(d)
    }

    /// Build from a plain matrix; sources are row numbers.
    pub fn from_matrix(schema: Schema, x: Vec<Vec<f64>>, y: &[bool]) -> Result<Self> {
        let rows = x
            .into_iter()
            .zip(y)
            .enumerate()
            .map(|(i, (values, &u))| LabeledVector {
                values,
                label: Label::from_unsafe(u),
                source: format!("r{i}"),
                segment: None,
            })
            .collect();
        Dataset::from_parts(schema, rows, "matrix")
    }

    pub fn push(&mut self, row: LabeledVector) -> Result<()> {
        if row.values.len() != self.schema.len() {
            return Err(LearnError::SchemaMismatch(format!(
                "row from {} has {} values, schema has {}",
                row.source,
                row.values.len(),
                self.schema.len()
            )));
        }
        if let Some(v) = row.values.iter().find(|v| !v.is_finite()) {
            return Err(LearnError::DegenerateData(format!("non-finite value {v} in row {}", row.source)));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Append another dataset with the same schema. Mixed provenance is
    /// recorded as "a+b".
    pub fn extend(&mut self, other: &Dataset) -> Result<()> {
        self.schema.ensure_same(&other.schema)?;
        if self.provenance != other.provenance && !other.rows.is_empty() {
            if self.rows.is_empty() {
                self.provenance = other.provenance.clone();
            } else {
                self.provenance = format!("{}+{}", self.provenance, other.provenance);
            }
        }
        self.rows.extend(other.rows.iter().cloned());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// (safe, unsafe) row counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let u = self.rows.iter().filter(|r| r.label.is_unsafe()).count();
        (self.rows.len() - u, u)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        match self.class_counts() {
            (0, 0) => Err(LearnError::Empty),
            (0, _) => Err(LearnError::SingleClass(Label::Unsafe)),
            (_, 0) => Err(LearnError::SingleClass(Label::Safe)),
            _ => Ok(()),
        }
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.label.is_unsafe()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[j]).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Rows whose provenance tag (set on the row source prefix) matches.
    pub fn filter(&self, keep: impl Fn(&LabeledVector) -> bool) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// CSV with header `provenance,test_id[,segment],<features...>,label`.
    /// Booleans are written as 0/1.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let seg = self.schema.set == FeatureSet::Segment;
        let mut header = vec!["provenance".to_string(), "test_id".to_string()];
        if seg {
            header.push("segment".into());
        }
        header.extend(self.schema.columns.iter().map(|c| c.name.clone()));
        header.push("label".into());
        wr.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![self.provenance.clone(), r.source.clone()];
            if seg {
                rec.push(r.segment.map(|s| s.to_string()).unwrap_or_default());
            }
            rec.extend(r.values.iter().map(|v| v.to_string()));
            rec.push(r.label.to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Dataset> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header.len() < 3 || header[0] != "provenance" || header[1] != "test_id" || header.last().unwrap() != "label" {
            return Err(LearnError::SchemaMismatch(
                "expected header provenance,test_id,...,label".into(),
            ));
        }
        let has_seg = header.get(2).map(String::as_str) == Some("segment");
        let first = if has_seg { 3 } else { 2 };
        let names = header[first..header.len() - 1].to_vec();
        let schema = Schema::from_names(&names);
        if has_seg != (schema.set == FeatureSet::Segment) {
            return Err(LearnError::SchemaMismatch("segment column only belongs to segment datasets".into()));
        }
        let mut provenance = None;
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            provenance.get_or_insert_with(|| rec[0].to_string());
            let values = (first..header.len() - 1)
                .map(|j| {
                    rec[j].parse::<f64>().map_err(|_| {
                        LearnError::DegenerateData(format!("bad number {:?} in column {}", &rec[j], header[j]))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let label = match &rec[header.len() - 1] {
                "safe" => Label::Safe,
                "unsafe" => Label::Unsafe,
                other => return Err(LearnError::DegenerateData(format!("bad label {other:?}"))),
            };
            let segment = if has_seg {
                Some(rec[2].parse().map_err(|_| LearnError::DegenerateData("bad segment index".into()))?)
            } else {
                None
            };
            rows.push(LabeledVector {
                values,
                label,
                source: rec[1].to_string(),
                segment,
            });
        }
        Dataset::from_parts(schema, rows, provenance.unwrap_or_default())
    }

    /// JSON lines: a header object `{"schema", "provenance"}` followed by
    /// one row object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Header<'a> {
            schema: &'a Schema,
            provenance: &'a str,
        }
        serde_json::to_writer(&mut w, &Header { schema: &self.schema, provenance: &self.provenance })?;
        writeln!(w)?;
        for r in &self.rows {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Dataset> {
        #[derive(Deserialize)]
        struct Header {
            schema: Schema,
            provenance: String,
        }
        let mut lines = r.lines();
        let header: Header = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(LearnError::Empty),
        };
        let mut d = Dataset::new(header.schema, header.provenance);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            d.push(serde_json::from_str(&line)?)?;
        }
        Ok(d)
    }
}

/// Seeded shuffle split into (train, test). The test side is never
/// rebalanced.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(LearnError::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.shuffle(&mut rng::rng_from(seed));
    let n_train = (train_fraction * d.len() as f64).round() as usize;
    let (a, b) = idx.split_at(n_train);
    Ok((d.subset(a), d.subset(b)))
}

/// Random oversampling: duplicate uniformly drawn minority rows until both
/// classes have the majority count. Original rows come first, unchanged.
pub fn oversample(d: &Dataset, seed: u64) -> Result<Dataset> {
    d.require_both_classes()?;
    let (safe, unsafe_) = d.class_counts();
    if safe == unsafe_ {
        return Ok(d.clone());
    }
    let minority_unsafe = unsafe_ < safe;
    let pool: Vec<usize> = (0..d.len())
        .filter(|&i| d.rows[i].label.is_unsafe() == minority_unsafe)
        .collect();
    let need = safe.max(unsafe_) - safe.min(unsafe_);
    let mut rng = rng::rng_from(seed);
    let mut out = d.clone();
    out.rows.reserve(need);
    for _ in 0..need {
        let pick = pool[rng.gen_range(0..pool.len())];
        out.rows.push(d.rows[pick].clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(safe: usize, unsafe_: usize) -> Dataset {
        let x: Vec<Vec<f64>> = (0..safe + unsafe_).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<bool> = (0..safe + unsafe_).map(|i| i >= safe).collect();
        Dataset::from_matrix(Schema::numeric(&["a", "b"]), x, &y).unwrap()
    }

    #[test]
    fn oversample_nine_three() {
        let d = toy(9, 3);
        let o = oversample(&d, 1).unwrap();
        assert_eq!(o.class_counts(), (9, 9));
        assert_eq!(&o.rows[..12], &d.rows[..]);
        for r in &o.rows[12..] {
            assert!(d.rows[9..].contains(r));
        }
    }

    #[test]
    fn oversample_balanced_is_identity() {
        let d = toy(4, 4);
        assert_eq!(oversample(&d, 3).unwrap(), d);
    }

    #[test]
    fn oversample_table_counts() {
        let d = toy(3095, 2543);
        assert_eq!(oversample(&d, 7).unwrap().class_counts(), (3095, 3095));
    }

    #[test]
    fn oversample_single_class() {
        assert!(matches!(oversample(&toy(5, 0), 1), Err(LearnError::SingleClass(Label::Safe))));
    }

    #[test]
    fn split_counts_and_determinism() {
        let d = toy(50, 50);
        let (a, b) = split(&d, 0.8, 4).unwrap();
        assert_eq!((a.len(), b.len()), (80, 20));
        let mut ids: Vec<&str> = a.rows.iter().chain(&b.rows).map(|r| r.source.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 100);
        let (a2, b2) = split(&d, 0.8, 4).unwrap();
        assert_eq!((a, b), (a2, b2));
        assert!(split(&d, 1.0, 4).is_err());
    }

    #[test]
    fn csv_and_jsonl_round_trip() {
        let d = toy(3, 2);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("provenance,test_id,a,b,label\n"));
        let back = Dataset::read_csv(&buf[..]).unwrap();
        assert_eq!(back, d);
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        assert_eq!(Dataset::read_jsonl(&buf[..]).unwrap(), d);
    }

    #[test]
    fn mixing_schemas_fails() {
        let mut full = Dataset::new(FullRoadFeatures::schema(), "p");
        let seg = Dataset::new(SegmentFeatures::schema(), "p");
        assert!(matches!(full.extend(&seg), Err(LearnError::SchemaMismatch(_))));
        let bad = LabeledVector { values: vec![1.0], label: Label::Safe, source: "x".into(), segment: None };
        assert!(full.push(bad).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_exact(vals in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 2), 1..20)) {
            let y: Vec<bool> = (0..vals.len()).map(|i| i % 2 == 0).collect();
            let d = Dataset::from_matrix(Schema::numeric(&["a", "b"]), vals, &y).unwrap();
            let mut buf = Vec::new();
            d.write_csv(&mut buf).unwrap();
            prop_assert_eq!(Dataset::read_csv(&buf[..]).unwrap(), d);
        }

        #[test]
        fn oversample_only_duplicates(safe in 1usize..40, unsafe_ in 1usize..40, seed in any::<u64>()) {
            let d = toy(safe, unsafe_);
            let o = oversample(&d, seed).unwrap();
            let (s, u) = o.class_counts();
            prop_assert_eq!(s, u);
            prop_assert_eq!(s, safe.max(unsafe_));
            for r in &o.rows {
                prop_assert!(d.rows.contains(r));
            }
        }
    }
}
