use rayon::prelude::*;

use crate::error::Result;
use crate::time_integration::SchemeKind;

use super::analysis::{convergence_table, ConvergenceRow};
use super::config::ProblemConfig;
use super::problems::run_problem;

/// Convergence table of one `(scheme, epsilon)` pair.
#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub scheme: SchemeKind,
    pub epsilon: f64,
    pub rows: std::result::Result<Vec<ConvergenceRow>, String>,
}

/// Density profile of one run of `base` with the given overrides.
pub fn density_profile(base: &ProblemConfig, scheme: SchemeKind, epsilon: f64, n_x: usize) -> Result<Vec<f64>> {
    let mut c = base.clone().with_scheme(scheme);
    c.epsilon = epsilon;
    c.n_x = n_x;
    let out = run_problem(&c, |_, _| {})?;
    let field = &out.state.field;
    let raw = crate::relaxation::field_raw_moments(&field.values, field.n_cells(), &field.velocity);
    Ok(raw.iter().map(|r| r.mass).collect())
}

/// Runs every `(scheme, epsilon, N)` combination and tabulates errors and
/// rates per `(scheme, epsilon)`. Runs are independent and executed on the
/// rayon pool; results come back in input order.
pub fn convergence_suite(base: &ProblemConfig, n_list: &[usize], eps_list: &[f64], schemes: &[SchemeKind]) -> Vec<SuiteEntry> {
    let layout = base.spatial_grid().map(|g| g.layout).ok();
    let pairs: Vec<(SchemeKind, f64)> = schemes.iter().flat_map(|&s| eps_list.iter().map(move |&e| (s, e))).collect();
    pairs
        .par_iter()
        .map(|&(scheme, epsilon)| {
            let rows = n_list
                .iter()
                .map(|&n| density_profile(base, scheme, epsilon, n))
                .collect::<Result<Vec<_>>>()
                .and_then(|profiles| convergence_table(&profiles, layout.expect("validated grid")))
                .map_err(|e| e.to_string());
            SuiteEntry { scheme, epsilon, rows }
        })
        .collect()
}
