//! Cohort CSV format.
//!
//! Header: `patient_id,window,label,event_window,<feature>...`. One row per
//! window; `label` is 0 or 1; `event_window` is the onset window index for
//! patients with an event and empty otherwise. A patient's rows are
//! contiguous with windows numbered from 0. Values are written in shortest
//! round-trip form, so reading back reproduces them exactly.

use super::{Cohort, DataError, Patient};
use ndarray::Array2;
use std::io::{Read, Write};

const FIXED: [&str; 4] = ["patient_id", "window", "label", "event_window"];

pub fn write_csv<W: Write>(cohort: &Cohort, out: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = FIXED
        .iter()
        .copied()
        .chain(cohort.feature_names.iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for p in &cohort.patients {
        let event = p.event_window.map(|e| e.to_string()).unwrap_or_default();
        for (s, row) in p.windows.rows().into_iter().enumerate() {
            record.clear();
            record.push(p.id.clone());
            record.push(s.to_string());
            record.push(if p.labels[s] { "1" } else { "0" }.to_string());
            record.push(event.clone());
            record.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&record).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Cohort, DataError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < FIXED.len() || header.iter().take(FIXED.len()).ne(FIXED.iter().copied()) {
        return Err(DataError::Csv(format!("header must start with {}", FIXED.join(","))));
    }
    let feature_names: Vec<String> = header.iter().skip(FIXED.len()).map(String::from).collect();
    let p = feature_names.len();

    let mut patients: Vec<Patient> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    let mut current: Option<(String, Option<usize>)> = None;

    let finish = |id: String, event: Option<usize>, values: &mut Vec<f64>, labels: &mut Vec<bool>| {
        let n = labels.len();
        Patient {
            id,
            windows: Array2::from_shape_vec((n, p), std::mem::take(values)).expect("checked row widths"),
            labels: std::mem::take(labels),
            event_window: event,
        }
    };

    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let at = |msg: String| DataError::Csv(format!("line {}: {msg}", line + 2));
        if rec.len() != FIXED.len() + p {
            return Err(at(format!("expected {} fields, found {}", FIXED.len() + p, rec.len())));
        }
        let id = rec[0].to_string();
        let window: usize = rec[1]
            .parse()
            .map_err(|_| at(format!("bad window index '{}'", &rec[1])))?;
        let label = match &rec[2] {
            "0" => false,
            "1" => true,
            other => return Err(at(format!("label must be 0 or 1, got '{other}'"))),
        };
        let event = match &rec[3] {
            "" => None,
            e => Some(e.parse::<usize>().map_err(|_| at(format!("bad event window '{e}'")))?),
        };

        let same = current.as_ref().is_some_and(|(cid, _)| *cid == id);
        if !same {
            if let Some((cid, cev)) = current.take() {
                patients.push(finish(cid, cev, &mut values, &mut labels));
            }
            if patients.iter().any(|q| q.id == id) {
                return Err(at(format!("rows of patient '{id}' are not contiguous")));
            }
            current = Some((id.clone(), event));
        } else if current.as_ref().unwrap().1 != event {
            return Err(at(format!("event window changes within patient '{id}'")));
        }
        if window != labels.len() {
            return Err(at(format!(
                "patient '{id}': expected window {}, found {window}",
                labels.len()
            )));
        }
        labels.push(label);
        for (k, field) in rec.iter().skip(FIXED.len()).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| at(format!("feature '{}': bad number '{field}'", feature_names[k])))?;
            if !v.is_finite() {
                return Err(at(format!("feature '{}': non-finite value", feature_names[k])));
            }
            values.push(v);
        }
    }
    if let Some((cid, cev)) = current.take() {
        patients.push(finish(cid, cev, &mut values, &mut labels));
    }
    Ok(Cohort {
        feature_names,
        patients,
        truth: None,
    })
}

fn csv_err(e: csv::Error) -> DataError {
    DataError::Csv(e.to_string())
}
