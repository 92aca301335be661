//! Dataset container and its JSONL wire format.
//!
//! A dataset file is one JSON object per line: a header describing the
//! observation window, family name, and RNG seed, followed by one line per
//! sequence:
//!
//! ```text
//! {"domain":{"t_max":10.0,"space":null,"n_marks":2},"family":"...","seed":7}
//! {"t":[0.41,1.9],"k":[1,2]}
//! {"t":[]}
//! ```
//!
//! Spatial sequences carry `"s":[[x,y],...]`; marked ones carry 1-based
//! `"k":[...]`. Numbers are written in shortest round-trip form, so
//! write → read → write is byte-identical and read → write → read is
//! value-identical.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::ObservationDomain;
use crate::error::{Error, Result};
use crate::sequence::PointSequence;

/// A homogeneous collection of realizations over one observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub domain: ObservationDomain,
    /// Family name of the generating model (informational).
    pub family: String,
    /// Seed the sequences were simulated with (informational).
    pub seed: u64,
    pub sequences: Vec<PointSequence>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    domain: ObservationDomain,
    family: String,
    seed: u64,
}

impl Dataset {
    pub fn new(
        domain: ObservationDomain,
        family: impl Into<String>,
        seed: u64,
        sequences: Vec<PointSequence>,
    ) -> Result<Self> {
        for (i, seq) in sequences.iter().enumerate() {
            seq.validate(&domain, i)?;
        }
        Ok(Dataset { domain, family: family.into(), seed, sequences })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Total event count across sequences.
    pub fn n_events(&self) -> usize {
        self.sequences.iter().map(PointSequence::len).sum()
    }

    /// How many sequences were cut short by a simulator event cap.
    pub fn n_truncated(&self) -> usize {
        self.sequences.iter().filter(|s| s.truncated).count()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            domain: self.domain.clone(),
            family: self.family.clone(),
            seed: self.seed,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for seq in &self.sequences {
            serde_json::to_writer(&mut w, seq)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let first = match lines.next() {
            Some(l) => l?,
            None => {
                return Err(Error::Parse { line: 1, reason: "empty file, header expected".into() })
            }
        };
        let header: Header = serde_json::from_str(&first)
            .map_err(|e| Error::Parse { line: 1, reason: format!("bad header: {e}") })?;
        header
            .domain
            .clone()
            .validate_self()
            .map_err(|e| Error::Parse { line: 1, reason: format!("bad domain: {e}") })?;
        let mut sequences = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let seq: PointSequence = serde_json::from_str(&line)
                .map_err(|e| Error::Parse { line: i + 2, reason: e.to_string() })?;
            seq.validate(&header.domain, sequences.len())
                .map_err(|e| Error::Parse { line: i + 2, reason: e.to_string() })?;
            sequences.push(seq);
        }
        Ok(Dataset {
            domain: header.domain,
            family: header.family,
            seed: header.seed,
            sequences,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Dataset::read_jsonl(File::open(path)?)
    }
}

impl ObservationDomain {
    /// Re-run constructor validation (for domains built by deserialization).
    pub fn validate_self(self) -> Result<Self> {
        ObservationDomain::new(self.t_max, self.space, self.n_marks)
    }
}
