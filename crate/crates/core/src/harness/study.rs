//! Refinement studies and their reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use super::errors::{compute_errors, eoc, l2_norm, ErrorSet};
use super::infsup::estimate_infsup;
use crate::error::{McsError, Result};
use crate::fespace::l2_project;
use crate::forms::{build_system_with, DiscreteSolution, QuadDegrees, SaddleSystem};
use crate::linsolve::solve_saddle;
use crate::manufactured::{exact_fields, gradient_forcing_case, ExactSolution};
use crate::mesh::{build_structured_mesh, Mesh};
use crate::poly::PolyField;
use crate::postproc::{postprocess_velocity, PostProcessed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Convergence,
    Robustness,
    Infsup,
    Patch,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyConfig {
    pub dim: usize,
    pub k: usize,
    pub nu: f64,
    /// Subdivisions per unit-cube edge, one mesh per entry.
    pub levels: Vec<usize>,
    pub study: StudyKind,
    /// Overrides the volume quadrature exactness of the assembly.
    pub quad_degree: Option<usize>,
}

impl StudyConfig {
    pub fn new(dim: usize, k: usize, levels: Vec<usize>, study: StudyKind) -> Self {
        Self { dim, k, nu: 1e-3, levels, study, quad_degree: None }
    }

    fn quad(&self) -> QuadDegrees {
        let mut q = QuadDegrees::for_order(self.k);
        if let Some(v) = self.quad_degree {
            q.volume = v;
            q.facet = v.max(q.facet);
        }
        q
    }
}

/// Per-column orders of convergence against the previous level.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EocSet {
    pub grad_ustar: Option<f64>,
    pub l2_ustar: Option<f64>,
    pub sigma: Option<f64>,
    pub p: Option<f64>,
    pub omega: Option<f64>,
    pub supercvg: Option<f64>,
    pub eps_ustar: Option<f64>,
}

impl EocSet {
    pub fn between(prev: &ErrorSet, cur: &ErrorSet, h_prev: f64, h: f64) -> Self {
        let r = |a: f64, b: f64| eoc(a, b, h_prev, h);
        Self {
            grad_ustar: r(prev.err_grad_ustar, cur.err_grad_ustar),
            l2_ustar: r(prev.err_l2_ustar, cur.err_l2_ustar),
            sigma: r(prev.err_sigma, cur.err_sigma),
            p: r(prev.err_p, cur.err_p),
            omega: r(prev.err_omega, cur.err_omega),
            supercvg: r(prev.supercvg, cur.supercvg),
            eps_ustar: r(prev.err_eps_ustar, cur.err_eps_ustar),
        }
    }
}

/// Viscosity-weighted combinations of the errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledErrors {
    pub sqrt_nu_grad_ustar: f64,
    pub sigma_over_sqrt_nu: f64,
    pub p_over_sqrt_nu: f64,
    pub sqrt_nu_omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub nelem: usize,
    pub h: f64,
    pub unknowns: usize,
    pub residual: Option<f64>,
    pub errors: Option<ErrorSet>,
    pub scaled: Option<ScaledErrors>,
    pub eoc: EocSet,
    /// Study-specific quantities.
    pub extra: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub study: StudyKind,
    pub dim: usize,
    pub k: usize,
    pub nu: f64,
    pub rows: Vec<ReportRow>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let extras: Vec<&String> = {
            let mut keys: Vec<&String> = self.rows.iter().flat_map(|r| r.extra.keys()).collect();
            keys.sort();
            keys.dedup();
            keys
        };
        let mut out = String::from(
            "nelem,h,err_grad_ustar,err_l2_ustar,err_sigma,err_p,err_omega,div_uh_max,supercvg,\
             eoc_grad_ustar,eoc_l2_ustar,eoc_sigma,eoc_p,eoc_omega,eoc_supercvg",
        );
        for key in &extras {
            out.push(',');
            out.push_str(key);
        }
        out.push('\n');
        for r in &self.rows {
            let e = r.errors.as_ref();
            let col = |f: fn(&ErrorSet) -> f64| fmt_opt(e.map(f));
            let cells = [
                r.nelem.to_string(),
                format!("{:e}", r.h),
                col(|e| e.err_grad_ustar),
                col(|e| e.err_l2_ustar),
                col(|e| e.err_sigma),
                col(|e| e.err_p),
                col(|e| e.err_omega),
                col(|e| e.div_uh_max),
                col(|e| e.supercvg),
                fmt_opt(r.eoc.grad_ustar),
                fmt_opt(r.eoc.l2_ustar),
                fmt_opt(r.eoc.sigma),
                fmt_opt(r.eoc.p),
                fmt_opt(r.eoc.omega),
                fmt_opt(r.eoc.supercvg),
            ];
            out.push_str(&cells.join(","));
            for key in &extras {
                let _ = write!(out, ",{}", fmt_opt(r.extra.get(*key).copied()));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn last(&self) -> Option<&ReportRow> {
        self.rows.last()
    }
}

/// Everything produced by one solve on one mesh.
pub struct SolveArtifacts {
    pub mesh: Mesh,
    pub system: SaddleSystem,
    pub solution: DiscreteSolution,
    pub post: PostProcessed,
    pub errors: ErrorSet,
}

/// Assemble, solve, postprocess and measure on the structured mesh with `n` subdivisions.
pub fn solve_level(config: &StudyConfig, n: usize, exact: &ExactSolution) -> Result<SolveArtifacts> {
    let mesh = build_structured_mesh(config.dim, n)?;
    solve_on(mesh, config, exact)
}

pub fn solve_on(mesh: Mesh, config: &StudyConfig, exact: &ExactSolution) -> Result<SolveArtifacts> {
    let start = Instant::now();
    let system = build_system_with(&mesh, config.k, config.nu, &exact.f, config.quad())?;
    let solution = solve_saddle(&system)?;
    let post = postprocess_velocity(&mesh, &system.spaces, &solution, config.nu)?;
    let errors = compute_errors(&mesh, &system.spaces, exact, &solution, &post)?;
    log::info!(
        "level with {} elements: {} unknowns, residual {:.2e}, {:.2?}",
        mesh.num_elements(),
        system.offsets.total,
        solution.residual,
        start.elapsed()
    );
    Ok(SolveArtifacts { mesh, system, solution, post, errors })
}

fn rel_change(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Extra gradient added to the forcing in the robustness study.
pub const ROBUSTNESS_GRADIENT: f64 = 1e4;

fn row_from(n: usize, art: &SolveArtifacts, nu: f64) -> ReportRow {
    let e = &art.errors;
    let s = nu.sqrt();
    ReportRow {
        n,
        nelem: art.mesh.num_elements(),
        h: art.mesh.h,
        unknowns: art.system.offsets.total,
        residual: Some(art.solution.residual),
        errors: Some(e.clone()),
        scaled: Some(ScaledErrors {
            sqrt_nu_grad_ustar: s * e.err_grad_ustar,
            sigma_over_sqrt_nu: e.err_sigma / s,
            p_over_sqrt_nu: e.err_p / s,
            sqrt_nu_omega: s * e.err_omega,
        }),
        eoc: EocSet::default(),
        extra: BTreeMap::new(),
    }
}

fn level_error(level: usize) -> impl Fn(McsError) -> McsError {
    move |e| McsError::Study { level, source: Box::new(e) }
}

/// Runs a study over all refinement levels, in order.
pub fn run_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    if !(config.nu > 0.0) {
        return Err(McsError::Unsupported(format!("viscosity must be positive, got {}", config.nu)));
    }
    let mut rows = Vec::new();
    for &n in &config.levels {
        let row = run_level(config, n).map_err(level_error(n))?;
        rows.push(row);
    }
    for j in 1..rows.len() {
        if let (Some(a), Some(b)) = (&rows[j - 1].errors, &rows[j].errors) {
            rows[j].eoc = EocSet::between(a, b, rows[j - 1].h, rows[j].h);
        }
    }
    Ok(ConvergenceReport { study: config.study, dim: config.dim, k: config.k, nu: config.nu, rows })
}

fn run_level(config: &StudyConfig, n: usize) -> Result<ReportRow> {
    match config.study {
        StudyKind::Convergence => {
            let exact = exact_fields(config.dim, config.nu)?;
            let art = solve_level(config, n, &exact)?;
            let mut row = row_from(n, &art, config.nu);
            row.extra.insert("fallback_elements".into(), art.post.fallbacks as f64);
            Ok(row)
        }
        StudyKind::Robustness => {
            let exact = exact_fields(config.dim, config.nu)?;
            let shifted = exact.with_extra_gradient(ROBUSTNESS_GRADIENT)?;
            let a = solve_level(config, n, &exact)?;
            let b = solve_level(config, n, &shifted)?;
            let mut row = row_from(n, &a, config.nu);
            let (ea, eb) = (&a.errors, &b.errors);
            let x = &mut row.extra;
            x.insert("sigma_change".into(), rel_change(&a.solution.sigma, &b.solution.sigma));
            x.insert("ustar_change".into(), rel_change(&a.post.coeffs, &b.post.coeffs));
            x.insert("err_sigma_change".into(), (ea.err_sigma - eb.err_sigma).abs() / ea.err_sigma);
            x.insert("err_grad_ustar_change".into(), (ea.err_grad_ustar - eb.err_grad_ustar).abs() / ea.err_grad_ustar);
            Ok(row)
        }
        StudyKind::Patch => {
            let exact = gradient_forcing_case(config.dim, config.nu)?;
            let art = solve_level(config, n, &exact)?;
            let mut row = row_from(n, &art, config.nu);
            let m = patch_metrics(&art, &exact)?;
            row.extra.extend(m);
            Ok(row)
        }
        StudyKind::Infsup => {
            let mesh = build_structured_mesh(config.dim, n)?;
            let full = estimate_infsup(&mesh, config.k, true)?;
            let reduced = estimate_infsup(&mesh, config.k, false)?;
            let mut extra = BTreeMap::new();
            extra.insert("infsup".into(), full.value);
            extra.insert("infsup_no_enrichment".into(), reduced.value);
            Ok(ReportRow {
                n,
                nelem: mesh.num_elements(),
                h: mesh.h,
                unknowns: full.rows + full.cols,
                residual: None,
                errors: None,
                scaled: None,
                eoc: EocSet::default(),
                extra,
            })
        }
    }
}

/// Norms of the discrete fields for the gradient-forcing problem, and the pressure
/// distance to the `L2` projection of the exact pressure.
pub fn patch_metrics(art: &SolveArtifacts, exact: &ExactSolution) -> Result<BTreeMap<String, f64>> {
    let sp = &art.system.spaces;
    let proj = l2_project(&art.mesh, &sp.pressure, &PolyField::scalar(exact.p.clone()))?;
    let dp: Vec<f64> = art.solution.p.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let mut m = BTreeMap::new();
    m.insert("patch_u".into(), art.errors.norm_uh);
    m.insert("patch_ustar".into(), art.errors.norm_ustar);
    m.insert("patch_sigma".into(), art.errors.norm_sigma);
    m.insert("patch_omega".into(), art.errors.norm_omega);
    m.insert("patch_p".into(), l2_norm(&art.mesh, &sp.pressure, &dp)?);
    Ok(m)
}
