//! Straight-line reference implementations shared by the integration tests.
//!
//! Everything here uses plain arrays so it shares no filter code with the
//! library. Only the process model itself (`f`, `∂f/∂x`) is borrowed.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rews_core::{ControlInput, CpSurface, StateModel, TurbineModel, TurbineParameters};

pub type V2 = [f64; 2];
pub type M2 = [[f64; 2]; 2];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mat_mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn transpose(a: &M2) -> M2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn sym(a: &M2) -> M2 {
    let off = 0.5 * (a[0][1] + a[1][0]);
    [[a[0][0], off], [off, a[1][1]]]
}

/// Predict + update for a scalar measurement `y = x₀ + noise`.
/// Returns the posterior and the residual `(z, S)`.
pub fn kf_cycle(p: M2, fx: V2, f: M2, q: M2, r: f64, y: f64) -> (V2, M2, f64, f64) {
    let fp = mat_mul(&f, &p);
    let mut pp = mat_mul(&fp, &transpose(&f));
    for i in 0..2 {
        for j in 0..2 {
            pp[i][j] += q[i][j];
        }
    }
    let pp = sym(&pp);
    let z = y - fx[0];
    let s = pp[0][0] + r;
    let k = [pp[0][0] / s, pp[1][0] / s];
    let xp = [fx[0] + k[0] * z, fx[1] + k[1] * z];
    // (I − K H) P⁻ with H = [1, 0]
    let ikh = [[1.0 - k[0], 0.0], [-k[1], 1.0]];
    let post = sym(&mat_mul(&ikh, &pp));
    (xp, post, z, s)
}

#[derive(Clone, Debug)]
pub struct OracleBank {
    pub x: Vec<V2>,
    pub p: Vec<M2>,
    pub mu_prior: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct OracleOutput {
    pub x: V2,
    pub p: M2,
    pub mu: Vec<f64>,
}

impl OracleBank {
    /// One IMM cycle: filter, Bayes update, combine, then mix for the next cycle.
    pub fn step(
        &mut self,
        models: &[TurbineModel],
        q: M2,
        r: f64,
        y: f64,
        u: &ControlInput,
    ) -> OracleOutput {
        let m = models.len();
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        let mut lik = Vec::new();
        for j in 0..m {
            let xv = Vector2::new(self.x[j][0], self.x[j][1]);
            let fx = models[j].transition(&xv, u).unwrap();
            let fj = models[j].transition_jacobian(&xv, u).unwrap();
            let f = [[fj[(0, 0)], fj[(0, 1)]], [fj[(1, 0)], fj[(1, 1)]]];
            let (xp, pp, z, s) = kf_cycle(self.p[j], [fx[0], fx[1]], f, q, r, y);
            xs.push(xp);
            ps.push(pp);
            lik.push((-0.5 * z * z / s).exp() / (2.0 * std::f64::consts::PI * s).sqrt());
        }

        let c: f64 = (0..m).map(|j| self.mu_prior[j] * lik[j]).sum();
        let mut mu: Vec<f64> = (0..m).map(|j| self.mu_prior[j] * lik[j] / c).collect();
        for v in mu.iter_mut() {
            *v = v.max(1e-12);
        }
        let total: f64 = mu.iter().sum();
        for v in mu.iter_mut() {
            *v /= total;
        }

        let mut x = [0.0; 2];
        for j in 0..m {
            x[0] += mu[j] * xs[j][0];
            x[1] += mu[j] * xs[j][1];
        }
        let mut p = [[0.0; 2]; 2];
        for j in 0..m {
            let d = [x[0] - xs[j][0], x[1] - xs[j][1]];
            for a in 0..2 {
                for b in 0..2 {
                    p[a][b] += mu[j] * (ps[j][a][b] + d[a] * d[b]);
                }
            }
        }
        let p = sym(&p);

        let prior: Vec<f64> = (0..m)
            .map(|j| (0..m).map(|i| self.pi[i][j] * mu[i]).sum())
            .collect();
        let mut new_x = Vec::new();
        let mut new_p = Vec::new();
        for j in 0..m {
            let w: Vec<f64> = (0..m).map(|i| self.pi[i][j] * mu[i] / prior[j]).collect();
            let mut xm = [0.0; 2];
            for i in 0..m {
                xm[0] += w[i] * xs[i][0];
                xm[1] += w[i] * xs[i][1];
            }
            let mut pm = [[0.0; 2]; 2];
            for i in 0..m {
                let d = [xm[0] - xs[i][0], xm[1] - xs[i][1]];
                for a in 0..2 {
                    for b in 0..2 {
                        pm[a][b] += w[i] * (ps[i][a][b] + d[a] * d[b]);
                    }
                }
            }
            new_x.push(xm);
            new_p.push(sym(&pm));
        }
        self.x = new_x;
        self.p = new_p;
        self.mu_prior = prior;
        OracleOutput { x, p, mu }
    }
}

/// Largest absolute difference divided by the largest reference magnitude.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn paper_pi() -> Vec<Vec<f64>> {
    vec![
        vec![0.99, 0.005, 0.005],
        vec![0.005, 0.99, 0.005],
        vec![0.005, 0.005, 0.99],
    ]
}

pub fn three_mode_models(delta: f64) -> Vec<TurbineModel> {
    let nominal = TurbineModel::new(TurbineParameters::default(), CpSurface::analytic());
    [0.0, delta, -delta]
        .iter()
        .map(|&d| nominal.with_cp_offset(d))
        .collect()
}

/// Seeded measurement/input pairs near an 8–12 m/s operating point.
pub fn synthetic_sequence(seed: u64, len: usize) -> Vec<(f64, ControlInput)> {
    let mut r = rng(seed);
    (0..len)
        .map(|_| {
            let y = 0.9 + 0.02 * r.random::<f64>();
            let pitch = 0.05 * r.random::<f64>();
            let torque = 6.0e6 + 2.0e6 * r.random::<f64>();
            (y, ControlInput::new(pitch, torque))
        })
        .collect()
}

/// Checks that a 2×2 covariance is symmetric and positive semidefinite.
pub fn is_symmetric_psd(p: &nalgebra::Matrix2<f64>) -> bool {
    let scale = p.abs().max().max(1e-300);
    let symmetric = (p[(0, 1)] - p[(1, 0)]).abs() <= 1e-12 * scale;
    let det = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)];
    symmetric && p[(0, 0)] >= 0.0 && p[(1, 1)] >= 0.0 && det >= -1e-12 * scale * scale
}
