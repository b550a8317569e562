//! Pass/fail thresholds applied to study reports.

use serde::Serialize;

use super::study::{ConvergenceReport, StudyKind};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit: format!("<= {limit:e}"), pass: value <= limit }
    }

    fn near(name: impl Into<String>, value: Option<f64>, target: f64, tol: f64) -> Self {
        let v = value.unwrap_or(f64::NAN);
        Self { name: name.into(), value: v, limit: format!("{target} +- {tol}"), pass: (v - target).abs() <= tol }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit: format!(">= {limit}"), pass: value >= limit }
    }
}

/// Relative size, absolute once the reference itself vanishes to the patch tolerance.
pub fn relative(value: f64, reference: f64) -> f64 {
    if reference > PATCH_TOL {
        value / reference
    } else {
        value
    }
}

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const DIVERGENCE_TOL: f64 = 1e-9;
pub const SYMMETRY_TOL: f64 = 1e-9;
pub const EOC_TOL_2D: f64 = 0.15;
pub const EOC_MIN_3D: f64 = 1.7;
pub const SUPERCVG_TOL: f64 = 0.2;
pub const ROBUSTNESS_TOL: f64 = 1e-8;
pub const PATCH_TOL: f64 = 1e-9;
pub const INFSUP_DECAY: f64 = 0.8;
/// The reduced space must lose at least this factor over the refinement range.
pub const COLLAPSE_FACTOR: f64 = 0.5;

/// All thresholds applicable to a report.
pub fn check_report(r: &ConvergenceReport) -> Vec<Check> {
    let mut out = Vec::new();
    for row in &r.rows {
        let n = row.n;
        if let Some(res) = row.residual {
            out.push(Check::at_most(format!("n={n} residual"), res, RESIDUAL_TOL));
        }
        if let Some(e) = &row.errors {
            out.push(Check::at_most(format!("n={n} div u_h"), relative(e.div_uh_max, e.norm_uh), DIVERGENCE_TOL));
            out.push(Check::at_most(format!("n={n} div u*"), relative(e.div_ustar_max, e.norm_ustar), DIVERGENCE_TOL));
            out.push(Check::at_most(
                format!("n={n} weak symmetry"),
                relative(e.skew_sigma, e.norm_sigma),
                SYMMETRY_TOL,
            ));
        }
        for (key, v) in &row.extra {
            match (r.study, key.as_str()) {
                (StudyKind::Robustness, "err_sigma_change" | "err_grad_ustar_change") => {
                    out.push(Check::at_most(format!("n={n} {key}"), *v, ROBUSTNESS_TOL))
                }
                (StudyKind::Patch, k) if k.starts_with("patch_") => {
                    out.push(Check::at_most(format!("n={n} {key}"), *v, PATCH_TOL))
                }
                _ => {}
            }
        }
    }
    match r.study {
        StudyKind::Convergence if r.rows.len() >= 2 => out.extend(rate_checks(r)),
        StudyKind::Infsup => out.extend(infsup_checks(r)),
        _ => {}
    }
    out
}

fn rate_checks(r: &ConvergenceReport) -> Vec<Check> {
    let mut out = Vec::new();
    let k = r.k as f64;
    let last = &r.rows[r.rows.len() - 1].eoc;
    if r.dim == 2 {
        out.push(Check::near("eoc sigma", last.sigma, k + 1.0, EOC_TOL_2D));
        out.push(Check::near("eoc p", last.p, k + 1.0, EOC_TOL_2D));
        out.push(Check::near("eoc omega", last.omega, k + 1.0, EOC_TOL_2D));
        out.push(Check::near("eoc grad u*", last.grad_ustar, k + 1.0, EOC_TOL_2D));
        out.push(Check::near("eoc u*", last.l2_ustar, k + 2.0, EOC_TOL_2D));
        if r.k <= 2 {
            out.push(Check::near("eoc supercvg", last.supercvg, k + 1.0, SUPERCVG_TOL));
        }
    } else {
        type Pick = fn(&super::study::EocSet) -> Option<f64>;
        let cols: [(&str, Pick); 4] =
            [("sigma", |e| e.sigma), ("p", |e| e.p), ("omega", |e| e.omega), ("grad u*", |e| e.grad_ustar)];
        for (name, pick) in cols {
            let rates: Vec<f64> = r.rows[1..].iter().map(|row| pick(&row.eoc).unwrap_or(f64::NAN)).collect();
            let fin = *rates.last().unwrap();
            out.push(Check::at_least(format!("eoc {name}"), fin, EOC_MIN_3D));
            let increasing = rates.windows(2).all(|w| w[1] >= w[0]);
            out.push(Check {
                name: format!("eoc {name} increasing"),
                value: fin,
                limit: format!("{rates:.3?} nondecreasing"),
                pass: increasing,
            });
        }
    }
    out
}

fn infsup_checks(r: &ConvergenceReport) -> Vec<Check> {
    let mut out = Vec::new();
    let get =
        |key: &str| -> Vec<f64> { r.rows.iter().map(|row| row.extra.get(key).copied().unwrap_or(f64::NAN)).collect() };
    let full = get("infsup");
    let reduced = get("infsup_no_enrichment");
    for (row, v) in r.rows.iter().zip(&full) {
        out.push(Check { name: format!("n={} inf-sup", row.n), value: *v, limit: "> 0".into(), pass: *v > 0.0 });
    }
    for j in 1..full.len() {
        out.push(Check::at_least(format!("n={} inf-sup ratio", r.rows[j].n), full[j] / full[j - 1], INFSUP_DECAY));
    }
    if let (Some(first), Some(last)) = (reduced.first(), reduced.last()) {
        let ratio = if *first > 0.0 { last / first } else { 0.0 };
        out.push(Check::at_most("inf-sup without enrichment, finest / coarsest", ratio, COLLAPSE_FACTOR));
    }
    out
}
