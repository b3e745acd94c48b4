//! Deterministic report rendering: fixed column orders and a fixed
//! 17-significant-digit numeric format, so re-running a configuration
//! writes byte-identical files.

use crate::counterexamples::GrowthReport;
use crate::estimates::QuotientReport;

/// Render a float with 17 significant digits, locale-independent.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Assemble a CSV document with a header line and `\n` terminators.
pub fn render_csv(columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let line: Vec<String> = row.iter().map(|f| escape(f)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub const QUOTIENT_COLUMNS: [&str; 9] = [
    "case_id",
    "s",
    "b",
    "bprime",
    "fingerprint",
    "samples",
    "max_quotient",
    "refinement_ratio",
    "seed",
];

/// One randomized-search report as a row in the fixed quotient schema.
pub fn quotient_row(report: &QuotientReport) -> Vec<String> {
    vec![
        report.case_id.clone(),
        format_float(report.params.s),
        format_float(report.params.b),
        format_float(report.params.bprime),
        report.fingerprint.clone(),
        report.samples.to_string(),
        format_float(report.max_quotient),
        report
            .refinement_ratio
            .map(format_float)
            .unwrap_or_default(),
        report.seed.to_string(),
    ]
}

pub const GROWTH_COLUMNS: [&str; 10] = [
    "family_id",
    "s",
    "b",
    "bprime",
    "n",
    "quotient",
    "fitted_slope",
    "predicted_slope",
    "fingerprint",
    "seed",
];

/// One growth fit as per-concentration rows plus a summary row carrying
/// the fitted and predicted slopes.
pub fn growth_rows(report: &GrowthReport, seed: u64) -> Vec<Vec<String>> {
    let params = [
        format_float(report.params.s),
        format_float(report.params.b),
        format_float(report.params.bprime),
    ];
    let mut rows = Vec::with_capacity(report.n_values.len() + 1);
    for (i, &n) in report.n_values.iter().enumerate() {
        rows.push(vec![
            report.family_id.clone(),
            params[0].clone(),
            params[1].clone(),
            params[2].clone(),
            n.to_string(),
            format_float(report.quotients[i]),
            String::new(),
            String::new(),
            report.fingerprints[i].clone(),
            seed.to_string(),
        ]);
    }
    rows.push(vec![
        report.family_id.clone(),
        params[0].clone(),
        params[1].clone(),
        params[2].clone(),
        String::new(),
        String::new(),
        format_float(report.fitted_slope),
        format_float(report.predicted_slope),
        report
            .fingerprints
            .last()
            .cloned()
            .unwrap_or_default(),
        seed.to_string(),
    ]);
    rows
}

pub const SOLVE_COLUMNS: [&str; 12] = [
    "nonlinearity",
    "s",
    "amplitude",
    "T",
    "steps",
    "iters",
    "converged",
    "final_residual",
    "max_growth",
    "lipschitz_quotient",
    "fingerprint",
    "seed",
];

/// Flattened solve outcome for the fixed solve schema.
#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub nonlinearity: String,
    pub s: f64,
    pub amplitude: f64,
    pub t_half: f64,
    pub steps: usize,
    pub iters: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub max_growth: f64,
    pub lipschitz_quotient: Option<f64>,
    pub fingerprint: String,
    pub seed: u64,
}

pub fn solve_row(summary: &SolveSummary) -> Vec<String> {
    vec![
        summary.nonlinearity.clone(),
        format_float(summary.s),
        format_float(summary.amplitude),
        format_float(summary.t_half),
        summary.steps.to_string(),
        summary.iters.to_string(),
        summary.converged.to_string(),
        format_float(summary.final_residual),
        format_float(summary.max_growth),
        summary
            .lipschitz_quotient
            .map(format_float)
            .unwrap_or_default(),
        summary.fingerprint.clone(),
        summary.seed.to_string(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::Params;

    #[test]
    fn float_format_round_trips_to_the_bit() {
        for &x in &[
            0.0,
            -1.5,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -4.9e-324,
        ] {
            let rendered = format_float(x);
            let back: f64 = rendered.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {rendered}");
        }
    }

    #[test]
    fn csv_rendering_is_stable_and_escapes_commas() {
        let rows = vec![
            vec!["a".to_string(), "1".to_string()],
            vec!["with,comma".to_string(), "2".to_string()],
        ];
        let doc = render_csv(&["id", "v"], &rows);
        assert_eq!(doc, "id,v\na,1\n\"with,comma\",2\n");
        assert_eq!(doc, render_csv(&["id", "v"], &rows));
    }

    #[test]
    fn quotient_rows_have_the_declared_width() {
        let report = QuotientReport {
            case_id: "thm41".into(),
            params: Params::new(-0.3, 0.55, -0.46),
            fingerprint: "g".into(),
            samples: 8,
            max_quotient: 1.25,
            argmax_seed: 3,
            refinement_ratio: None,
            seed: 7,
        };
        let row = quotient_row(&report);
        assert_eq!(row.len(), QUOTIENT_COLUMNS.len());
        assert_eq!(row[7], "");
    }

    #[test]
    fn growth_rows_end_with_a_slope_summary() {
        let report = GrowthReport {
            family_id: "ex41".into(),
            params: Params::new(-0.25, 0.55, -0.3),
            n_values: vec![4, 8],
            quotients: vec![1.0, 2.0],
            log_quotients: vec![0.0, 2.0f64.ln()],
            fingerprints: vec!["a".into(), "b".into()],
            fitted_slope: 1.0,
            residual: 0.0,
            predicted_slope: 0.25,
            margin: 0.75,
        };
        let rows = growth_rows(&report, 9);
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert_eq!(row.len(), GROWTH_COLUMNS.len());
        }
        assert_eq!(rows[2][4], "");
        assert_eq!(rows[2][6], format_float(1.0));
    }
}
