//! Dense real-symmetric linear algebra and a fixed-step RK4 integrator.
//!
//! Everything in this crate is real: the master equation preserves the
//! realness and symmetry of the density matrix, so all spectra come from
//! real symmetric matrices and all ODE states are real vectors.

use crate::error::Error;

pub type RealVector = Vec<f64>;

/// Row-major dense real symmetric matrix. Both triangles are stored and
/// every mutation writes both, so the symmetry invariant holds exactly
/// (bit for bit) at all times.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Wraps an existing row-major buffer, rejecting length mismatches
    /// and any entry pair that is not exactly symmetric.
    pub fn from_data(dim: usize, data: Vec<f64>) -> Result<Self, Error> {
        if data.len() != dim * dim {
            return Err(Error::InvalidConfig(format!(
                "symmetric matrix of dim {dim} needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let upper = data[i * dim + j];
                let lower = data[j * dim + i];
                if upper.to_bits() != lower.to_bits() {
                    return Err(Error::InvalidConfig(format!(
                        "matrix not symmetric at ({i}, {j}): {upper} vs {lower}"
                    )));
                }
            }
        }
        Ok(SymmetricMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets entry (i, j) and its mirror (j, i).
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    /// Adds to entry (i, j) and its mirror (j, i). The diagonal is added
    /// once, not twice.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] += value;
        if i != j {
            self.data[j * self.dim + i] += value;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrates the autonomous system y' = rhs(y) from 0 to `t_final` with
/// the classical fourth-order Runge-Kutta scheme at fixed step
/// `t_final / steps`, returning the final state.
///
/// Fails if any state entry becomes non-finite. The step count is the
/// caller's responsibility; there is no adaptivity, which keeps runs
/// bit-for-bit reproducible.
pub fn rk4_integrate<F>(
    mut rhs: F,
    y0: &[f64],
    t_final: f64,
    steps: usize,
) -> Result<RealVector, Error>
where
    F: FnMut(&RealVector) -> RealVector,
{
    if steps == 0 {
        return Err(Error::InvalidConfig("rk4 needs at least one step".into()));
    }
    if !t_final.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "rk4 needs a finite integration time, got {t_final}"
        )));
    }
    let mut state: RealVector = y0.to_vec();
    let mut view = RealVector::new();
    rk4_evolve_into(
        |y, dy| {
            view.clear();
            view.extend_from_slice(y);
            let out = rhs(&view);
            assert_eq!(out.len(), dy.len(), "rhs changed the state dimension");
            dy.copy_from_slice(&out);
        },
        &mut state,
        t_final,
        steps,
    )?;
    Ok(state)
}

/// Allocation-free RK4 driver: advances `y` in place, writing derivatives
/// through `deriv(state, out)`. Scratch buffers are allocated once per
/// call, so per-step cost is four derivative evaluations plus O(len)
/// vector updates.
pub(crate) fn rk4_evolve_into<F>(
    mut deriv: F,
    y: &mut [f64],
    t_final: f64,
    steps: usize,
) -> Result<(), Error>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let len = y.len();
    let h = t_final / steps as f64;
    let mut stage = vec![0.0; len];
    let mut k = vec![0.0; len];
    let mut acc = vec![0.0; len];
    for step in 0..steps {
        deriv(y, &mut k);
        for i in 0..len {
            acc[i] = k[i];
            stage[i] = y[i] + 0.5 * h * k[i];
        }
        deriv(&stage, &mut k);
        for i in 0..len {
            acc[i] += 2.0 * k[i];
            stage[i] = y[i] + 0.5 * h * k[i];
        }
        deriv(&stage, &mut k);
        for i in 0..len {
            acc[i] += 2.0 * k[i];
            stage[i] = y[i] + h * k[i];
        }
        deriv(&stage, &mut k);
        // A NaN or infinity anywhere poisons the probe sum, so one scalar
        // check per step covers every entry.
        let mut probe = 0.0;
        for i in 0..len {
            y[i] += h / 6.0 * (acc[i] + k[i]);
            probe += y[i];
        }
        if !probe.is_finite() {
            return Err(Error::IntegrationDiverged { step });
        }
    }
    Ok(())
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// All eigenvalues of a real symmetric matrix, ascending, computed with
/// the cyclic Jacobi rotation method.
///
/// Convergence is declared when the off-diagonal Frobenius norm falls
/// below 1e-14 times the full Frobenius norm; failing to get there within
/// 100 sweeps is an error. Jacobi is slower than tridiagonalization but
/// its eigenvalues carry relative accuracy that makes it a trustworthy
/// arbiter for the block-spectrum formulas tested against it.
pub fn symmetric_eigenvalues(matrix: &SymmetricMatrix) -> Result<RealVector, Error> {
    let d = matrix.dim;
    if d == 0 {
        return Ok(Vec::new());
    }
    let mut a = matrix.data.clone();
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig(
            "eigensolver input contains non-finite entries".into(),
        ));
    }
    let frobenius = matrix.frobenius_norm();
    let threshold = 1e-14 * frobenius;

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                s += 2.0 * a[i * d + j] * a[i * d + j];
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..d.saturating_sub(1) {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                // tan of the rotation angle; the guarded form avoids
                // overflow of theta^2 for extreme diagonal spreads.
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * d + p] = app - t * apq;
                a[q * d + q] = aqq + t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for i in 0..d {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * d + p];
                    let aiq = a[i * d + q];
                    let new_ip = aip - s * (aiq + tau * aip);
                    let new_iq = aiq + s * (aip - tau * aiq);
                    a[i * d + p] = new_ip;
                    a[p * d + i] = new_ip;
                    a[i * d + q] = new_iq;
                    a[q * d + i] = new_iq;
                }
            }
        }
        converged = off_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::EigenNoConvergence(JACOBI_MAX_SWEEPS));
    }
    let mut eigs: RealVector = (0..d).map(|i| a[i * d + i]).collect();
    eigs.sort_unstable_by(f64::total_cmp);
    Ok(eigs)
}
