use crate::grid::VelocityGrid;
use crate::relaxation::field_raw_moments;

/// Global invariants `(m0, m1, m2)`: mass, x-momentum and energy.
pub type Invariants = [f64; 3];

/// Totals over the spatial grid of a velocity-major field.
pub fn field_totals(values: &[f64], n_cells: usize, vgrid: &VelocityGrid, dx: f64) -> Invariants {
    let mut m = [0.0; 3];
    for r in field_raw_moments(values, n_cells, vgrid) {
        m[0] += r.mass;
        m[1] += r.momentum[0];
        m[2] += r.energy();
    }
    m.map(|x| x * dx)
}

/// Invariants after every accepted step, with the per-step defect measured
/// against the scheme's own reference (previous step for one-step schemes,
/// the alpha-combination of past steps for BDF).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConservationLedger {
    pub totals: Vec<Invariants>,
    pub defects: Vec<Invariants>,
}

impl ConservationLedger {
    pub fn new(initial: Invariants) -> Self {
        Self {
            totals: vec![initial],
            defects: Vec::new(),
        }
    }

    pub fn initial(&self) -> Invariants {
        self.totals[0]
    }

    pub fn last(&self) -> Invariants {
        *self.totals.last().expect("ledger holds the initial totals")
    }

    /// Expected totals `sum_k alpha_k m^{n+1-k}` from the most recent entries.
    pub fn combination(&self, alpha: &[f64]) -> Invariants {
        let n = self.totals.len();
        let mut out = [0.0; 3];
        for (k, a) in alpha.iter().enumerate() {
            let m = self.totals[n - 1 - k.min(n - 1)];
            for c in 0..3 {
                out[c] += a * m[c];
            }
        }
        out
    }

    pub fn push(&mut self, totals: Invariants, reference: Invariants) {
        self.defects.push(std::array::from_fn(|c| totals[c] - reference[c]));
        self.totals.push(totals);
    }

    pub fn steps(&self) -> usize {
        self.defects.len()
    }
}
