//! Convergence tables, conservation summaries and front location.

use crate::error::{Result, SolverError};
use crate::grid::NodeLayout;
use crate::time_integration::ConservationLedger;

/// One line of a self-convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n_coarse: usize,
    pub n_fine: usize,
    /// Relative L1 error of the density against the finer run.
    pub error: f64,
    /// `log2(e_N / e_2N)` against the next row, when there is one.
    pub rate: Option<f64>,
}

/// Values of a periodic fine profile (2N nodes) at the N coarse nodes.
///
/// With nodes at `x_left + i dx` every coarse node is a fine node and the
/// restriction is injection. With cell centres the coarse node falls midway
/// between two fine ones and the sixth-order centred midpoint stencil is used.
pub fn restrict_to_coarse(fine: &[f64], layout: NodeLayout) -> Result<Vec<f64>> {
    const W: [f64; 6] = [3.0, -25.0, 150.0, 150.0, -25.0, 3.0];
    let m = fine.len();
    if !m.is_multiple_of(2) || m < 6 {
        return Err(SolverError::InvalidParameter(format!("fine profile of length {m} cannot be restricted")));
    }
    if layout == NodeLayout::PeriodicNodes {
        return Ok(fine.iter().step_by(2).copied().collect());
    }
    Ok((0..m / 2)
        .map(|i| {
            // the coarse centre lies between fine cells 2i and 2i + 1
            (0..6).map(|k| W[k] * fine[(2 * i + m + k - 2) % m]).sum::<f64>() / 256.0
        })
        .collect())
}

/// `sum |a - b| / sum |b|`
pub fn relative_l1(a: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(reference).map(|(x, y)| (x - y).abs()).sum();
    let den: f64 = reference.iter().map(|y| y.abs()).sum();
    num / den
}

/// Builds the table from density profiles on doubling grids (coarsest
/// first). The finest profile only serves as a reference.
pub fn convergence_table(profiles: &[Vec<f64>], layout: NodeLayout) -> Result<Vec<ConvergenceRow>> {
    for w in profiles.windows(2) {
        if w[1].len() != 2 * w[0].len() {
            return Err(SolverError::InvalidParameter("each grid must double the previous one".into()));
        }
    }
    let mut rows = Vec::new();
    for w in profiles.windows(2) {
        let reference = restrict_to_coarse(&w[1], layout)?;
        rows.push(ConvergenceRow {
            n_coarse: w[0].len(),
            n_fine: w[1].len(),
            error: relative_l1(&w[0], &reference),
            rate: None,
        });
    }
    for k in 0..rows.len().saturating_sub(1) {
        rows[k].rate = Some((rows[k].error / rows[k + 1].error).log2());
    }
    Ok(rows)
}

/// Largest per-step defects and cumulative drift of `(m0, m1, m2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport {
    pub steps: usize,
    /// `max_n |m^{n+1} - reference^n|` per component.
    pub max_defect: [f64; 3],
    /// `|m^N - m^0| / scale` per component.
    pub cumulative_drift: [f64; 3],
    /// Normalisation: `|m0|`, `sqrt(2 m0 m2)` and `|m2|`.
    pub scale: [f64; 3],
}

impl ConservationReport {
    pub fn max_drift(&self) -> f64 {
        self.cumulative_drift.iter().copied().fold(0.0, f64::max)
    }
}

pub fn conservation_report(ledger: &ConservationLedger) -> ConservationReport {
    let first = ledger.initial();
    let last = ledger.last();
    // The momentum scale bounds |m1| by Cauchy-Schwarz, so it stays meaningful
    // when the net momentum vanishes.
    let scale = [first[0].abs(), (2.0 * first[0] * first[2]).abs().sqrt(), first[2].abs()];
    let mut max_defect = [0.0_f64; 3];
    for d in &ledger.defects {
        for c in 0..3 {
            max_defect[c] = max_defect[c].max(d[c].abs());
        }
    }
    let cumulative_drift = std::array::from_fn(|c| {
        let diff = (last[c] - first[c]).abs();
        if scale[c] > 0.0 {
            diff / scale[c]
        } else {
            diff
        }
    });
    ConservationReport {
        steps: ledger.steps(),
        max_defect,
        cumulative_drift,
        scale,
    }
}

/// Positions of the `count` steepest density jumps, at least `min_separation`
/// apart, sorted left to right. Each position is the midpoint of the two
/// cells with the largest difference.
pub fn locate_fronts(x: &[f64], rho: &[f64], count: usize, min_separation: f64) -> Vec<f64> {
    let mut jumps: Vec<(f64, f64)> = x
        .windows(2)
        .zip(rho.windows(2))
        .map(|(xs, r)| ((r[1] - r[0]).abs(), 0.5 * (xs[0] + xs[1])))
        .collect();
    jumps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut picked: Vec<f64> = Vec::with_capacity(count);
    for (_, pos) in jumps {
        if picked.len() == count {
            break;
        }
        if picked.iter().all(|p| (p - pos).abs() >= min_separation) {
            picked.push(pos);
        }
    }
    picked.sort_by(f64::total_cmp);
    picked
}

/// `dx sum |a - b|`
pub fn l1_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restriction_is_exact_on_quintics() {
        let m = 32;
        let h = 1.0 / m as f64;
        let f = |x: f64| 1.0 - 2.0 * x + x.powi(3) - 3.0 * x.powi(5);
        let fine: Vec<f64> = (0..m).map(|k| f((k as f64 + 0.5) * h)).collect();
        let coarse = restrict_to_coarse(&fine, NodeLayout::CellCenters).unwrap();
        // away from the wrap-around the stencil only sees the polynomial
        for i in 1..m / 2 - 2 {
            assert!((coarse[i] - f((2 * i + 1) as f64 * h)).abs() < 1e-14, "cell {i}");
        }
    }

    #[test]
    fn identical_profiles_give_zero_error() {
        let a = vec![1.0, 2.0, 3.0];
        assert_eq!(relative_l1(&a, &a), 0.0);
    }

    #[test]
    fn rates_from_errors() {
        let p0 = vec![1.0; 8];
        let p1 = vec![1.0; 16];
        let p2 = vec![1.0; 32];
        let rows = convergence_table(&[p0, p1, p2], NodeLayout::PeriodicNodes).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].n_coarse, 8);
        assert!(convergence_table(&[vec![1.0; 8], vec![1.0; 12]], NodeLayout::PeriodicNodes).is_err());
        let fine: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(restrict_to_coarse(&fine, NodeLayout::PeriodicNodes).unwrap(), vec![0.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn zero_step_ledger_has_no_drift() {
        let l = ConservationLedger::new([2.0, 0.1, 3.0]);
        let r = conservation_report(&l);
        assert_eq!(r.steps, 0);
        assert_eq!(r.max_drift(), 0.0);
    }

    #[test]
    fn fronts_found_in_order() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let rho: Vec<f64> = x
            .iter()
            .map(|&x| {
                if x < 5.0 {
                    3.0
                } else if x < 14.0 {
                    2.0
                } else {
                    1.5
                }
            })
            .collect();
        assert_eq!(locate_fronts(&x, &rho, 2, 2.0), vec![4.5, 13.5]);
    }
}
