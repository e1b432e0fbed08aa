//! CSV tables. Numbers use scientific notation with 12 significant digits.

use super::convergence::ConvergenceStudy;
use super::infsup::InfSupReport;

fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

pub const RATE_HEADER: &str = "n,h,e_sigma,e_u,e_p,e_superconv,rate_sigma,rate_u,rate_p,rate_superconv";
pub const INFSUP_HEADER: &str = "n,beta_full,beta_c_kerb,alpha,mode";

/// Rate table; the coarsest row leaves the rate columns empty.
pub fn rate_table_csv(study: &ConvergenceStudy) -> String {
    let mut out = String::from(RATE_HEADER);
    out.push('\n');
    for (row, rate) in study.rows.iter().zip(study.rates()) {
        let r = &row.report;
        let rates = match rate {
            Some(k) => [k.sigma, k.u, k.p, k.superconv].map(sci).join(","),
            None => ",,,".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.n,
            sci(r.h),
            sci(r.e_sigma),
            sci(r.e_u),
            sci(r.e_p),
            sci(r.e_superconv),
            rates
        ));
    }
    out
}

pub fn infsup_csv(rows: &[(usize, InfSupReport)]) -> String {
    let mut out = String::from(INFSUP_HEADER);
    out.push('\n');
    for (n, r) in rows {
        out.push_str(&format!("{},{},{},{},{}\n", n, sci(r.beta_full), sci(r.beta_c_kerb), sci(r.alpha), r.mode));
    }
    out
}
