//! CSV rendering. Reals use 17 significant digits, absent values are empty
//! fields and every record ends in a bare `\n`.

use std::io::Write;

use selkov::{EnsembleReport, PathSample, SweepRow, ThresholdReport};

pub const THRESHOLD_COLUMNS: [&str; 19] = [
    "upsilon",
    "k1",
    "k2",
    "k3",
    "k4",
    "p",
    "sigma",
    "k",
    "state_bound",
    "delta",
    "sigma_prime_sq",
    "sigma_dprime_sq",
    "r1",
    "r1s",
    "a1",
    "a2",
    "l_holds",
    "extinction_bound",
    "persistence_lower_bound",
];

pub const ENSEMBLE_COLUMNS: [&str; 8] = [
    "n_paths",
    "mean_ly",
    "se_ly",
    "mean_avg_y",
    "se_avg_y",
    "extinct_fraction",
    "regime_theory",
    "verdict",
];

pub const TRACE_COLUMNS: [&str; 7] = [
    "t",
    "x",
    "y",
    "ln_y_over_t",
    "avg_y",
    "mart_diff_over_t",
    "mart_jump_over_t",
];

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

pub fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Threshold fields for one row; everything after `delta` is empty when the
/// jump bound assumption fails.
pub fn threshold_fields(upsilon: f64, r: &ThresholdReport) -> Vec<String> {
    let c = &r.crisp;
    let noise = r.noise.as_ref();
    vec![
        real(upsilon),
        real(c.k1),
        real(c.k2),
        real(c.k3),
        real(c.k4),
        real(c.p),
        real(c.sigma),
        real(r.k),
        real(r.state_bound),
        real(r.delta),
        opt_real(noise.map(|n| n.sigma_prime_sq)),
        opt_real(noise.map(|n| n.sigma_dprime_sq)),
        real(r.r1),
        opt_real(r.r1s()),
        opt_bool(r.a1_holds()),
        opt_bool(r.a2_holds()),
        opt_bool(r.l_holds()),
        opt_real(r.extinction_bound()),
        opt_real(r.persistence_lower_bound()),
    ]
}

fn ensemble_fields(ens: Option<&EnsembleReport>) -> Vec<String> {
    match ens {
        Some(e) => vec![
            e.n_paths.to_string(),
            real(e.mean_ly),
            real(e.se_ly),
            real(e.mean_avg_y),
            real(e.se_avg_y),
            real(e.extinct_fraction),
        ],
        None => vec![String::new(); 6],
    }
}

pub fn sweep_fields(row: &SweepRow) -> Vec<String> {
    let mut fields = match &row.thresholds {
        Some(r) => threshold_fields(row.upsilon, r),
        None => {
            let mut v = vec![String::new(); THRESHOLD_COLUMNS.len()];
            v[0] = real(row.upsilon);
            v
        }
    };
    fields.extend(ensemble_fields(row.ensemble.as_ref()));
    fields.push(
        row.regime
            .map(|r| r.as_str().to_string())
            .unwrap_or_default(),
    );
    fields.push(row.status.as_str().to_string());
    fields
}

pub fn sweep_header() -> Vec<&'static str> {
    THRESHOLD_COLUMNS
        .iter()
        .chain(ENSEMBLE_COLUMNS.iter())
        .copied()
        .collect()
}

pub fn trace_fields(s: &PathSample) -> Vec<String> {
    vec![
        real(s.t),
        real(s.x),
        real(s.y),
        opt_real(s.ln_y_over_t()),
        opt_real(s.avg_y()),
        opt_real(s.mart_diff_over_t()),
        opt_real(s.mart_jump_over_t()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_seventeen_digits() {
        assert_eq!(real(-0.21875), "-2.1875000000000000e-1");
        assert_eq!(real(0.1).parse::<f64>().unwrap(), 0.1);
        let third = 1.0 / 3.0;
        assert_eq!(real(third).parse::<f64>().unwrap(), third);
    }

    #[test]
    fn records_end_in_newline() {
        let mut w = writer(Vec::new());
        w.write_record(["a", "b"]).unwrap();
        w.write_record(["1", ""]).unwrap();
        let bytes = w.into_inner().unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n1,\n");
    }

    #[test]
    fn sweep_header_appends_ensemble_columns() {
        let h = sweep_header();
        assert_eq!(h.len(), 27);
        assert_eq!(h[18], "persistence_lower_bound");
        assert_eq!(h[19], "n_paths");
        assert_eq!(h[26], "verdict");
    }
}
