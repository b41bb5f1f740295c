//! Reference computations shared by the integration tests. None of them call
//! into the solver's own numerics.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Collision invariants `(1, v, |v|^2/2)` in `dim + 2` slots.
pub fn invariants(v: &[f64], dim: usize) -> Vec<f64> {
    let mut p = vec![1.0];
    p.extend_from_slice(&v[..dim]);
    p.push(0.5 * v[..dim].iter().map(|x| x * x).sum::<f64>());
    p
}

/// Minimiser of `sum_j ((g_j - G_j) / omega_j)^2` subject to
/// `sum_j phi_j g_j dv = U`, via the SVD pseudo-inverse of the weighted
/// constraint matrix.
pub fn projection_oracle(nodes: &[[f64; 3]], dim: usize, dv: f64, omega: &[f64], g: &[f64], target: &[f64]) -> Vec<f64> {
    let k = dim + 2;
    let m = nodes.len();
    let c = DMatrix::from_fn(k, m, |a, j| invariants(&nodes[j], dim)[a] * omega[j] * dv);
    let y0 = DVector::from_fn(m, |j, _| g[j] / omega[j]);
    let r = DVector::from_column_slice(target) - &c * &y0;
    let pinv = c.pseudo_inverse(1e-300).expect("pseudo-inverse");
    let y = y0 + pinv * r;
    (0..m).map(|j| y[j] * omega[j]).collect()
}

/// Ratio of the extreme singular values of the weighted constraint matrix.
pub fn constraint_condition(nodes: &[[f64; 3]], dim: usize, dv: f64, omega: &[f64]) -> f64 {
    let k = dim + 2;
    let c = DMatrix::from_fn(k, nodes.len(), |a, j| invariants(&nodes[j], dim)[a] * omega[j] * dv);
    let sv = c.singular_values();
    let hi = sv.iter().copied().fold(0.0, f64::max);
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Discrete invariants `sum_j phi_j g_j dv`.
pub fn discrete_invariants(nodes: &[[f64; 3]], dim: usize, dv: f64, g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dim + 2];
    for (v, x) in nodes.iter().zip(g) {
        for (o, p) in out.iter_mut().zip(invariants(v, dim)) {
            *o += x * p * dv;
        }
    }
    out
}

/// Continuous moments of `rho / (2 pi T)^{d/2} exp(-|v - u|^2 / 2T)`:
/// `(rho, rho u, rho |u|^2 / 2 + d rho T / 2)`.
pub fn maxwellian_invariants(rho: f64, u: &[f64], temperature: f64, dim: usize) -> Vec<f64> {
    let mut out = vec![rho];
    out.extend(u[..dim].iter().map(|x| rho * x));
    let u2: f64 = u[..dim].iter().map(|x| x * x).sum();
    out.push(0.5 * rho * u2 + 0.5 * dim as f64 * rho * temperature);
    out
}

/// Pointwise Maxwellian.
pub fn maxwellian(rho: f64, u: &[f64], temperature: f64, v: &[f64], dim: usize) -> f64 {
    let c2: f64 = (0..dim).map(|a| (v[a] - u[a]).powi(2)).sum();
    rho / (2.0 * std::f64::consts::PI * temperature).powf(dim as f64 / 2.0) * (-c2 / (2.0 * temperature)).exp()
}

/// Exact solution of the Euler Riemann problem for a polytropic gas with
/// `p = rho T` (two-rarefaction / two-shock Newton iteration on the star
/// pressure). Returns `(rho, u, p)` at `xi = (x - x0) / t`.
pub struct ExactRiemann {
    pub gamma: f64,
    pub left: [f64; 3],
    pub right: [f64; 3],
    pub p_star: f64,
    pub u_star: f64,
}

impl ExactRiemann {
    pub fn new(gamma: f64, left: [f64; 3], right: [f64; 3]) -> Self {
        let mut s = Self {
            gamma,
            left,
            right,
            p_star: 0.0,
            u_star: 0.0,
        };
        let mut p = 0.5 * (left[2] + right[2]);
        for _ in 0..100 {
            let (fl, dl) = s.wave(p, &left);
            let (fr, dr) = s.wave(p, &right);
            let f = fl + fr + right[1] - left[1];
            let next = (p - f / (dl + dr)).max(1e-12);
            let done = (next - p).abs() < 1e-15 * p;
            p = next;
            if done {
                break;
            }
        }
        let (fl, _) = s.wave(p, &left);
        let (fr, _) = s.wave(p, &right);
        s.p_star = p;
        s.u_star = 0.5 * (left[1] + right[1]) + 0.5 * (fr - fl);
        s
    }

    /// Velocity change across one wave and its pressure derivative.
    fn wave(&self, p: f64, side: &[f64; 3]) -> (f64, f64) {
        let g = self.gamma;
        let (rho, pk) = (side[0], side[2]);
        let a = (g * pk / rho).sqrt();
        if p > pk {
            let ak = 2.0 / ((g + 1.0) * rho);
            let bk = (g - 1.0) / (g + 1.0) * pk;
            let q = (ak / (p + bk)).sqrt();
            ((p - pk) * q, q * (1.0 - 0.5 * (p - pk) / (bk + p)))
        } else {
            let e = (g - 1.0) / (2.0 * g);
            let f = 2.0 * a / (g - 1.0) * ((p / pk).powf(e) - 1.0);
            (f, (p / pk).powf(-(g + 1.0) / (2.0 * g)) / (rho * a))
        }
    }

    pub fn sample(&self, xi: f64) -> [f64; 3] {
        let g = self.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        let (side, sign) = if xi <= us { (self.left, 1.0) } else { (self.right, -1.0) };
        let (rho, u, p) = (side[0], side[1], side[2]);
        let a = (g * p / rho).sqrt();
        if ps > p {
            let ratio = ps / p;
            let gm = (g - 1.0) / (g + 1.0);
            let speed = u - sign * a * ((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g)).sqrt();
            let behind = rho * (ratio + gm) / (gm * ratio + 1.0);
            if sign * (xi - speed) <= 0.0 {
                [rho, u, p]
            } else {
                [behind, us, ps]
            }
        } else {
            let star = rho * (ps / p).powf(1.0 / g);
            let a_star = a * (ps / p).powf((g - 1.0) / (2.0 * g));
            let head = u - sign * a;
            let tail = us - sign * a_star;
            if sign * (xi - head) <= 0.0 {
                [rho, u, p]
            } else if sign * (xi - tail) >= 0.0 {
                [star, us, ps]
            } else {
                let c = 2.0 / (g + 1.0) + sign * (g - 1.0) / ((g + 1.0) * a) * (u - xi);
                let rho_fan = rho * c.powf(2.0 / (g - 1.0));
                let u_fan = 2.0 / (g + 1.0) * (sign * a + (g - 1.0) / 2.0 * u + xi);
                let p_fan = p * c.powf(2.0 * g / (g - 1.0));
                [rho_fan, u_fan, p_fan]
            }
        }
    }
}

/// `max_i |a_i - b_i| / max_i |b_i|`
pub fn relative_sup(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}
