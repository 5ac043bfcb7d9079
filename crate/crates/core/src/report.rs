//! Row types and CSV/JSON writers shared by the command-line front end.
//!
//! JSON output is `{"summary": ..., "rows": [...]}`; CSV output carries the rows
//! only. Optional values are empty CSV fields and JSON `null`s, so every row
//! survives a CSV → JSON → CSV trip unchanged.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::BoundaryCondition;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub r: f64,
    pub volume: f64,
    pub area: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeRow {
    pub r: f64,
    pub u: f64,
    pub g_log: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothRow {
    pub r: f64,
    pub rho_tilde: f64,
    pub d_rho_tilde: f64,
    pub laplacian_rho_tilde: f64,
    pub bound_a_margin: f64,
    pub bound_b_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylRow {
    pub lambda: f64,
    pub p: u32,
    pub quotient: Option<f64>,
    pub defect_norm: Option<f64>,
    pub phi_norm: Option<f64>,
    #[serde(rename = "R_or_l")]
    pub r_or_l: Option<f64>,
    pub x_or_b: Option<f64>,
    pub y_or_a: Option<f64>,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeRow {
    pub check: String,
    pub d_or_x: Option<f64>,
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    #[serde(rename = "L")]
    pub l: f64,
    pub bc: BoundaryCondition,
    pub index: usize,
    pub eigenvalue: f64,
}

#[derive(Serialize)]
struct JsonReport<'a, T> {
    summary: &'a serde_json::Value,
    rows: &'a [T],
}

#[derive(Deserialize)]
struct JsonReportOwned<T> {
    rows: Vec<T>,
}

pub fn write_csv<T: Serialize>(rows: &[T], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(rows: &[T], summary: &serde_json::Value, mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &JsonReport { summary, rows })?;
    writeln!(out)?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(input: impl Read) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_json_rows<T: DeserializeOwned>(input: impl Read) -> Result<Vec<T>> {
    let rep: JsonReportOwned<T> = serde_json::from_reader(input)?;
    Ok(rep.rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weyl_rows_round_trip() {
        let rows = vec![
            WeylRow {
                lambda: 0.5,
                p: 2,
                quotient: Some(0.1 + 0.2),
                defect_norm: Some(1e-300),
                phi_norm: Some(123456.789),
                r_or_l: Some(13.0),
                x_or_b: Some(27.0),
                y_or_a: Some(66.25),
                certified: true,
            },
            WeylRow {
                lambda: 4.0,
                p: 1,
                quotient: None,
                defect_norm: None,
                phi_norm: None,
                r_or_l: None,
                x_or_b: None,
                y_or_a: None,
                certified: false,
            },
        ];
        let mut csv_bytes = vec![];
        write_csv(&rows, &mut csv_bytes).unwrap();
        let text = String::from_utf8(csv_bytes.clone()).unwrap();
        assert!(text.starts_with("lambda,p,quotient,defect_norm,phi_norm,R_or_l,x_or_b,y_or_a,certified\n"));
        let from_csv: Vec<WeylRow> = read_csv(csv_bytes.as_slice()).unwrap();
        assert_eq!(from_csv, rows);
        let mut json = vec![];
        write_json(&from_csv, &serde_json::json!({"ok": true}), &mut json).unwrap();
        let from_json: Vec<WeylRow> = read_json_rows(json.as_slice()).unwrap();
        assert_eq!(from_json, rows);
    }

    #[test]
    fn oracle_header() {
        let rows = [OracleRow { l: 50.0, bc: BoundaryCondition::Neumann, index: 0, eigenvalue: 0.0 }];
        let mut out = vec![];
        write_csv(&rows, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "L,bc,index,eigenvalue\n50.0,neumann,0,0.0\n");
    }
}
