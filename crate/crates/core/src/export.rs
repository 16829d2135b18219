//! CSV writers. Reals are printed with 17 significant digits in scientific
//! notation, independent of locale.

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::configuration::Configuration;
use crate::ctmc::Trajectory;
use crate::generator::GeneratorMatrix;
use crate::measure::MeasureTable;
use crate::papangelou::IntensityProfile;

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Row-major, no header.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &DMatrix<f64>) -> io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_real(m[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// One row per draw, one 0/1 column per site.
pub fn write_samples_csv<W: Write>(mut w: W, n: usize, samples: &[Configuration]) -> io::Result<()> {
    let header: Vec<String> = (0..n).map(|i| format!("site_{i}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for s in samples {
        let bits: Vec<&str> = s.occupancy().iter().map(|&b| if b { "1" } else { "0" }).collect();
        writeln!(w, "{}", bits.join(","))?;
    }
    Ok(())
}

/// `mask,probability`; bit `i` of the mask is site `i`.
pub fn write_measure_csv<W: Write>(mut w: W, table: &MeasureTable) -> io::Result<()> {
    writeln!(w, "mask,probability")?;
    for (mask, p) in table.probabilities().iter().enumerate() {
        writeln!(w, "{mask},{}", fmt_real(*p))?;
    }
    Ok(())
}

/// `time,event,site,target,occupancy`, starting with an `initial` row.
/// Occupancy is the resulting state as a 0/1 string, character `i` = site `i`.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    let states = traj.replay().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    writeln!(w, "time,event,site,target,occupancy")?;
    writeln!(w, "{},initial,,,{}", fmt_real(0.0), states[0].bit_string())?;
    for (e, s) in traj.events.iter().zip(&states[1..]) {
        let (site, target) = e.transition.sites();
        let target = target.map(|t| t.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{site},{target},{}", fmt_real(e.time), e.transition.label(), s.bit_string())?;
    }
    Ok(())
}

/// Sparse triplets `from,to,rate` with states as masks, diagonal included.
pub fn write_generator_csv<W: Write>(mut w: W, q: &GeneratorMatrix) -> io::Result<()> {
    writeln!(w, "from,to,rate")?;
    for (from, to, rate) in q.triplets() {
        writeln!(w, "{from},{to},{}", fmt_real(rate))?;
    }
    Ok(())
}

pub fn write_profile_csv<W: Write>(mut w: W, profile: &IntensityProfile) -> io::Result<()> {
    writeln!(w, "site,occupied,intensity")?;
    for x in 0..profile.len() {
        writeln!(w, "{x},{},{}", u8::from(profile.occupied[x]), fmt_real(profile.get(x)))?;
    }
    Ok(())
}

/// Plot-ready row of an estimated correlation against its exact target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRow {
    pub order: usize,
    pub i: usize,
    pub j: Option<usize>,
    pub target: f64,
    pub estimate: f64,
    pub stderr: f64,
}

pub fn write_correlations_csv<W: Write>(mut w: W, rows: &[CorrelationRow]) -> io::Result<()> {
    writeln!(w, "order,site,site2,target,estimate,stderr")?;
    for r in rows {
        let j = r.j.map(|j| j.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{j},{},{},{}",
            r.order,
            r.i,
            fmt_real(r.target),
            fmt_real(r.estimate),
            fmt_real(r.stderr)
        )?;
    }
    Ok(())
}
