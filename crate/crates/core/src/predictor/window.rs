use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Input windows and targets cut from one standardized series.
///
/// Row `r` holds `x = [s(n), s(n - T), ..., s(n - (P-1) T)]` (most recent
/// first) and targets `[s(n + 1), ..., s(n + T - 1)]` for anchor slot `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch {
    pub input_len: usize,
    pub t_csi: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    slots: Vec<usize>,
}

impl PredictionBatch {
    pub fn empty(input_len: usize, t_csi: usize) -> Self {
        Self {
            input_len,
            t_csi,
            inputs: Vec::new(),
            targets: Vec::new(),
            slots: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn horizon_count(&self) -> usize {
        self.t_csi - 1
    }

    pub fn input(&self, r: usize) -> &[f64] {
        &self.inputs[r * self.input_len..(r + 1) * self.input_len]
    }

    /// Targets for horizons `1..T_CSI`.
    pub fn targets_tdd(&self, r: usize) -> &[f64] {
        let h = self.horizon_count();
        &self.targets[r * h..(r + 1) * h]
    }

    /// Target at a single horizon.
    pub fn target_at(&self, r: usize, horizon: usize) -> f64 {
        self.targets_tdd(r)[horizon - 1]
    }

    pub fn targets_fdd(&self, horizon: usize) -> Vec<f64> {
        (0..self.len()).map(|r| self.target_at(r, horizon)).collect()
    }

    /// Anchor (report) slot of row `r`.
    pub fn slot(&self, r: usize) -> usize {
        self.slots[r]
    }

    /// Report index `k` of row `r` (anchor / T_CSI).
    pub fn report_index(&self, r: usize) -> usize {
        self.slots[r] / self.t_csi
    }

    pub fn push(&mut self, slot: usize, input: &[f64], targets: &[f64]) {
        assert_eq!(input.len(), self.input_len);
        assert_eq!(targets.len(), self.horizon_count());
        self.slots.push(slot);
        self.inputs.extend_from_slice(input);
        self.targets.extend_from_slice(targets);
    }

    /// Rows `range` as a new batch.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let h = self.horizon_count();
        Self {
            input_len: self.input_len,
            t_csi: self.t_csi,
            inputs: self.inputs[range.start * self.input_len..range.end * self.input_len].to_vec(),
            targets: self.targets[range.start * h..range.end * h].to_vec(),
            slots: self.slots[range].to_vec(),
        }
    }

    /// Appends all rows of `other`.
    pub fn extend(&mut self, other: &Self) {
        assert_eq!((self.input_len, self.t_csi), (other.input_len, other.t_csi));
        self.inputs.extend_from_slice(&other.inputs);
        self.targets.extend_from_slice(&other.targets);
        self.slots.extend_from_slice(&other.slots);
    }

    /// CSV with columns `k, slot, x_0..x_{P-1}, y_1..y_{T-1}`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["k".to_string(), "slot".to_string()];
        header.extend((0..self.input_len).map(|i| format!("x_{i}")));
        header.extend((1..self.t_csi).map(|t| format!("y_{t}")));
        wtr.write_record(&header)?;
        for r in 0..self.len() {
            let mut rec = vec![self.report_index(r).to_string(), self.slot(r).to_string()];
            rec.extend(self.input(r).iter().map(|v| v.to_string()));
            rec.extend(self.targets_tdd(r).iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the format written by [`write_csv`](Self::write_csv); `P` and
    /// `T_CSI` are recovered from the header.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let headers = rdr.headers()?.clone();
        let p = headers.iter().filter(|h| h.starts_with("x_")).count();
        let h = headers.iter().filter(|h| h.starts_with("y_")).count();
        if p == 0 || headers.len() != 2 + p + h || &headers[0] != "k" || &headers[1] != "slot" {
            return Err(Error::Parse("unexpected prediction batch header".into()));
        }
        let mut batch = Self::empty(p, h + 1);
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
            let slot = rec[1].parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
            let x = (2..2 + p).map(|i| parse(&rec[i])).collect::<Result<Vec<_>>>()?;
            let y = (2 + p..2 + p + h).map(|i| parse(&rec[i])).collect::<Result<Vec<_>>>()?;
            batch.push(slot, &x, &y);
        }
        Ok(batch)
    }
}

/// Shortest series that yields one window.
pub fn min_series_len(input_len: usize, t_csi: usize) -> usize {
    t_csi * input_len
}

/// Cuts windows anchored at report slots `T_CSI * k`.
pub fn build_windows(series: &[f64], input_len: usize, t_csi: usize) -> Result<PredictionBatch> {
    build_windows_strided(series, input_len, t_csi, t_csi)
}

/// Cuts windows whose anchors advance by `stride` slots, starting at the
/// first anchor with a full history. Trailing anchors without a full set of
/// future targets are dropped.
pub fn build_windows_strided(
    series: &[f64],
    input_len: usize,
    t_csi: usize,
    stride: usize,
) -> Result<PredictionBatch> {
    if input_len == 0 || t_csi < 2 || stride == 0 {
        return Err(Error::Config(
            "windows need P >= 1, T_CSI >= 2 and a positive stride".into(),
        ));
    }
    let required = min_series_len(input_len, t_csi);
    if series.len() < required {
        return Err(Error::Sizing {
            what: format!("series for P={input_len}, T_CSI={t_csi} windows"),
            required,
            available: series.len(),
        });
    }
    let first = t_csi * (input_len - 1);
    let last = series.len() - t_csi;
    let mut batch = PredictionBatch::empty(input_len, t_csi);
    let mut x = vec![0.0; input_len];
    let mut anchor = first;
    while anchor <= last {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = series[anchor - t_csi * i];
        }
        batch.push(anchor, &x, &series[anchor + 1..anchor + t_csi]);
        anchor += stride;
    }
    Ok(batch)
}
