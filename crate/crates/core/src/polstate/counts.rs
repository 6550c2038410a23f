use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::analyzer::Basis;
use super::state::{BellTarget, PolarizationDensityMatrix};
use crate::error::{Error, Result};

/// Coincidence counts for the four outcome pairs of one basis.
///
/// `counts` is `[N_ii, N_ij, N_ji, N_jj]` with the first index on the signal
/// analyzer. Counts are stored as reals so accidental-corrected records keep
/// their fractional part. `singles_*_cps` hold the rate seen at setting i and j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub basis: Basis,
    pub counts: [f64; 4],
    pub singles_s_cps: Option<[f64; 2]>,
    pub singles_i_cps: Option<[f64; 2]>,
    pub duration_s: f64,
    #[serde(default)]
    pub accidentals_subtracted: bool,
}

impl CountsRecord {
    pub fn new(basis: Basis, counts: [f64; 4], duration_s: f64) -> Result<Self> {
        let r = CountsRecord {
            basis,
            counts,
            singles_s_cps: None,
            singles_i_cps: None,
            duration_s,
            accidentals_subtracted: false,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn with_singles(mut self, signal_cps: [f64; 2], idler_cps: [f64; 2]) -> Result<Self> {
        self.singles_s_cps = Some(signal_cps);
        self.singles_i_cps = Some(idler_cps);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: &f64| x.is_finite() && *x >= 0.0;
        if !self.counts.iter().all(ok) {
            return Err(Error::domain("counts must be finite and >= 0"));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::domain("duration must be > 0"));
        }
        for s in self.singles_s_cps.iter().chain(&self.singles_i_cps) {
            if !s.iter().all(ok) {
                return Err(Error::domain("singles rates must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// `(N_ii + N_jj - N_ij - N_ji) / (N_ii + N_jj + N_ij + N_ji)`.
pub fn basis_visibility(record: &CountsRecord) -> Result<f64> {
    let [ii, ij, ji, jj] = record.counts;
    let total = ii + ij + ji + jj;
    if !(total > 0.0) {
        return Err(Error::domain(format!("{} record has no counts", record.basis.name())));
    }
    Ok((ii + jj - ij - ji) / total)
}

/// Subtracts `R_s(a)·R_i(b)·τ·duration` from each `N_ab`, flooring at zero.
pub fn accidental_correction(record: &CountsRecord, tau_s: f64) -> Result<CountsRecord> {
    if !(tau_s.is_finite() && tau_s >= 0.0) {
        return Err(Error::domain("coincidence window must be >= 0"));
    }
    let (Some(rs), Some(ri)) = (record.singles_s_cps, record.singles_i_cps) else {
        return Err(Error::usage("accidental correction needs singles rates for both arms"));
    };
    let mut out = record.clone();
    for (k, n) in out.counts.iter_mut().enumerate() {
        let acc = rs[k / 2] * ri[k % 2] * tau_s * record.duration_s;
        *n = (*n - acc).max(0.0);
    }
    out.accidentals_subtracted = true;
    Ok(out)
}

/// Signed visibilities in the three mutually unbiased bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilitySet {
    pub v_hv: f64,
    pub v_da: f64,
    pub v_lr: f64,
    pub corrected: bool,
}

impl VisibilitySet {
    /// One record per basis; `corrected` is set when all of them are.
    pub fn from_records(records: &[CountsRecord]) -> Result<Self> {
        let find = |b: Basis| -> Result<&CountsRecord> {
            let mut it = records.iter().filter(|r| r.basis == b);
            let r = it.next().ok_or_else(|| Error::usage(format!("no {} record", b.name())))?;
            if it.next().is_some() {
                return Err(Error::usage(format!("more than one {} record", b.name())));
            }
            Ok(r)
        };
        let (hv, da, lr) = (find(Basis::HV)?, find(Basis::DA)?, find(Basis::LR)?);
        Ok(VisibilitySet {
            v_hv: basis_visibility(hv)?,
            v_da: basis_visibility(da)?,
            v_lr: basis_visibility(lr)?,
            corrected: [hv, da, lr].iter().all(|r| r.accidentals_subtracted),
        })
    }
}

/// `(1 + V_HV + s·V_DA - s·V_LR)/4`, `s = ±1` for Φ±.
pub fn fidelity_witness(v: &VisibilitySet, target: BellTarget) -> Result<f64> {
    for (name, x) in [("V_HV", v.v_hv), ("V_DA", v.v_da), ("V_LR", v.v_lr)] {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("{name} = {x} lies outside [-1, 1]")));
        }
    }
    let s = target.sign();
    Ok((1.0 + v.v_hv + s * v.v_da - s * v.v_lr) / 4.0)
}

pub fn fidelity_from_state(rho: &PolarizationDensityMatrix, target: BellTarget) -> f64 {
    rho.fidelity(target)
}

#[derive(Debug, Serialize, Deserialize)]
struct CountsRow {
    basis: String,
    setting_a: String,
    setting_b: String,
    counts: f64,
    singles_s_cps: Option<f64>,
    singles_i_cps: Option<f64>,
    duration_s: f64,
}

/// Writes one row per analyzer pair.
pub fn write_counts_csv<W: Write>(records: &[CountsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        let labels = r.basis.labels();
        for (k, &n) in r.counts.iter().enumerate() {
            let (a, b) = (k / 2, k % 2);
            w.serialize(CountsRow {
                basis: r.basis.name().into(),
                setting_a: labels[a].into(),
                setting_b: labels[b].into(),
                counts: n,
                singles_s_cps: r.singles_s_cps.map(|s| s[a]),
                singles_i_cps: r.singles_i_cps.map(|s| s[b]),
                duration_s: r.duration_s,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads records written by [`write_counts_csv`]. Every basis present must
/// list all four analyzer pairs; `#` lines are skipped.
pub fn read_counts_csv<R: Read>(input: R) -> Result<Vec<CountsRecord>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let mut order = Vec::new();
    let mut rows: BTreeMap<&'static str, Vec<CountsRow>> = BTreeMap::new();
    for row in rdr.deserialize::<CountsRow>() {
        let row = row?;
        let basis = Basis::parse(&row.basis)?;
        if !order.contains(&basis) {
            order.push(basis);
        }
        rows.entry(basis.name()).or_default().push(row);
    }
    let mut out = Vec::new();
    for basis in order {
        let group = &rows[basis.name()];
        let labels = basis.labels();
        let index = |s: &str| {
            labels
                .iter()
                .position(|l| l.eq_ignore_ascii_case(s))
                .ok_or_else(|| Error::usage(format!("setting '{s}' is not part of the {} basis", basis.name())))
        };
        let mut counts = [None; 4];
        let mut ss = [None; 2];
        let mut si = [None; 2];
        let mut duration = None;
        for row in group {
            let (a, b) = (index(&row.setting_a)?, index(&row.setting_b)?);
            if counts[2 * a + b].replace(row.counts).is_some() {
                return Err(Error::usage(format!("duplicate {}{} row", labels[a], labels[b])));
            }
            merge(&mut ss[a], row.singles_s_cps, "singles_s_cps")?;
            merge(&mut si[b], row.singles_i_cps, "singles_i_cps")?;
            if *duration.get_or_insert(row.duration_s) != row.duration_s {
                return Err(Error::usage(format!("{} rows disagree on duration_s", basis.name())));
            }
        }
        if counts.iter().any(Option::is_none) {
            return Err(Error::usage(format!("{} basis is missing a setting pair", basis.name())));
        }
        let counts = counts.map(|c| c.unwrap_or_default());
        let pair = |p: [Option<f64>; 2]| match p {
            [Some(x), Some(y)] => Some([x, y]),
            _ => None,
        };
        let mut rec = CountsRecord::new(basis, counts, duration.unwrap_or(0.0))?;
        rec.singles_s_cps = pair(ss);
        rec.singles_i_cps = pair(si);
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

fn merge(slot: &mut Option<f64>, value: Option<f64>, what: &str) -> Result<()> {
    match (*slot, value) {
        (Some(a), Some(b)) if a != b => Err(Error::usage(format!("{what} differs between rows of one setting"))),
        (None, Some(b)) => {
            *slot = Some(b);
            Ok(())
        }
        _ => Ok(()),
    }
}
