use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FirstStageEntry, MetaDistribution, TwoStageDataset};
use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;

#[derive(Serialize, Deserialize)]
struct Header {
    meta: MetaDistribution,
    seed: u64,
    m: usize,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct Row {
    i: usize,
    y: f64,
    f_ref: f64,
    /// The input measure's parameters as JSON.
    spec: String,
}

impl TwoStageDataset {
    /// Writes `meta.json`, `first_stage.csv` and `second_stage/<i>.csv`.
    /// Reference samples are not stored; they regenerate from the seed.
    pub fn write_dir<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("second_stage"))?;
        let header = Header {
            meta: self.meta.clone(),
            seed: self.seed,
            m: self.len(),
            n: self.n,
        };
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&header)?)?;
        let mut w = csv::Writer::from_path(dir.join("first_stage.csv"))?;
        for (i, e) in self.entries.iter().enumerate() {
            w.serialize(Row {
                i,
                y: e.y,
                f_ref: e.f_ref,
                spec: serde_json::to_string(&e.spec)?,
            })?;
        }
        w.flush()?;
        for (i, mu) in self.second_stage.iter().enumerate() {
            mu.write_csv(dir.join("second_stage").join(format!("{i}.csv")))?;
        }
        Ok(())
    }

    /// Reads a dataset written by [`TwoStageDataset::write_dir`] and checks
    /// every first-stage value against its regenerated draw.
    pub fn read_dir<P: AsRef<Path>>(dir: P) -> Result<Self> {
        let dir = dir.as_ref();
        let header: Header = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        header.meta.validate()?;
        let mut r = csv::Reader::from_path(dir.join("first_stage.csv"))?;
        let mut entries = Vec::with_capacity(header.m);
        for (k, row) in r.deserialize::<Row>().enumerate() {
            let row = row?;
            if row.i != k {
                return Err(Error::Parse(format!("first_stage.csv row {k} has index {}", row.i)));
            }
            entries.push(FirstStageEntry {
                spec: serde_json::from_str(&row.spec)?,
                y: row.y,
                f_ref: row.f_ref,
            });
        }
        if entries.len() != header.m {
            return Err(Error::Parse(format!("expected {} first-stage rows, found {}", header.m, entries.len())));
        }
        let mut second_stage = Vec::with_capacity(header.m);
        let mut reference = Vec::with_capacity(header.m);
        for (i, e) in entries.iter().enumerate() {
            let mu = EmpiricalMeasure::read_csv(dir.join("second_stage").join(format!("{i}.csv")))?;
            if mu.len() != header.n || mu.dim() != header.meta.dim() {
                return Err(Error::Parse(format!("second_stage/{i}.csv has shape {}x{}", mu.len(), mu.dim())));
            }
            let draw = header.meta.draw(header.seed, i)?;
            if draw.spec != e.spec || draw.y != e.y || draw.f_ref != e.f_ref {
                return Err(Error::Parse(format!("entry {i} does not match its seed")));
            }
            second_stage.push(mu);
            reference.push(draw.reference);
        }
        Ok(Self {
            meta: header.meta,
            seed: header.seed,
            n: header.n,
            entries,
            second_stage,
            reference,
        })
    }
}
