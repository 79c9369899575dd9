//! Ingestion for labeled flow-field snapshots: CSV with header
//! `t,x,y,u,v,p`, one record per line, 64-bit decimal text.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

pub fn load_field_snapshots(path: &Path) -> Result<Vec<FieldRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "t,x,y,u,v,p" => {}
        Some((_, header)) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header t,x,y,u,v,p, got {header:?}"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let mut vals = [0.0f64; 6];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f.trim().parse().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad number {f:?}: {e}"),
            })?;
        }
        records.push(FieldRecord {
            t: vals[0],
            x: vals[1],
            y: vals[2],
            u: vals[3],
            v: vals[4],
            p: vals[5],
        });
    }
    Ok(records)
}

pub fn save_field_snapshots(path: &Path, records: &[FieldRecord]) -> Result<()> {
    let mut out = String::from("t,x,y,u,v,p\n");
    for r in records {
        out.push_str(&format!("{},{},{},{},{},{}\n", r.t, r.x, r.y, r.u, r.v, r.p));
    }
    std::fs::write(path, out)?;
    Ok(())
}
