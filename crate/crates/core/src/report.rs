//! Locale-independent number formatting and the CSV report schema.

use std::fmt::Write as _;

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros stripped.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Significant digits used for report tables.
pub const REPORT_DIGITS: usize = 12;

pub const CSV_HEADER: &str = "experiment,probe,d,n,N,omega,theta_true,shots,trials,qfi,crb,empirical_dev,mt_bound,ren2012,ratio";

/// One row of the report table. Absent quantities are written as empty
/// fields.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub probe: Option<String>,
    pub d: Option<usize>,
    pub n: Option<usize>,
    #[serde(rename = "N")]
    pub total_qubits: Option<usize>,
    pub omega: Option<f64>,
    pub theta_true: Option<f64>,
    pub shots: Option<u64>,
    pub trials: Option<usize>,
    pub qfi: Option<f64>,
    pub crb: Option<f64>,
    pub empirical_dev: Option<f64>,
    pub mt_bound: Option<f64>,
    pub ren2012: Option<f64>,
    pub ratio: Option<f64>,
}

impl ReportRow {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            ..Default::default()
        }
    }

    pub fn to_csv_line(&self) -> String {
        fn int<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        fn real(v: &Option<f64>) -> String {
            v.map(|x| format_sig(x, REPORT_DIGITS)).unwrap_or_default()
        }
        [
            self.experiment.clone(),
            self.probe.clone().unwrap_or_default(),
            int(&self.d),
            int(&self.n),
            int(&self.total_qubits),
            real(&self.omega),
            real(&self.theta_true),
            int(&self.shots),
            int(&self.trials),
            real(&self.qfi),
            real(&self.crb),
            real(&self.empirical_dev),
            real(&self.mt_bound),
            real(&self.ren2012),
            real(&self.ratio),
        ]
        .join(",")
    }
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_csv_line());
    }
    out
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
