//! Brute-force verification path on the full Hilbert space.
//!
//! Everything here is built directly from the site layout and the master
//! equation: collective lowering operators as explicit matrices, RK4
//! integration of the dense density matrix, partial trace over the shared
//! qubits, partial transpose, dense eigensolve. No closed-form expression
//! from [`crate::dynamics`] or [`crate::negativity`] enters; agreement
//! between the two routes is what the test suite certifies.
//!
//! Dense states of dimension 2^(2N+n) are intentionally simple to audit
//! but large, so oracle use is capped (default
//! [`DEFAULT_ORACLE_CAP`](crate::config::DEFAULT_ORACLE_CAP) total
//! qubits). The integrator tracks which rows of the density matrix have
//! ever been written: rows that are exactly zero have exactly zero
//! derivative rows under the dissipator, so skipping them changes no
//! arithmetic, only the amount of it. The active set only ever grows, and
//! every skipped row is a bitwise zero row of the dense state.

use crate::config::{validate_config, EnsembleConfig, ExcitationCase, QubitLayout};
use crate::error::Error;
use crate::negativity::negativity_from_spectrum;
use crate::numerics::{symmetric_eigenvalues, SymmetricMatrix};

/// Which collective channel an operator lowers: the environment seen by
/// ensemble A together with the shared qubits, or the one seen by B.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JumpTag {
    Ac,
    Bc,
}

/// A collective lowering operator: the sum of single-site lowering
/// operators over one environment's qubit set, stored dense along with
/// its list of unit entries (row, column).
#[derive(Clone, Debug)]
pub struct CollectiveLoweringOperator {
    layout: QubitLayout,
    tag: JumpTag,
    dim: usize,
    matrix: Vec<f64>,
    entries: Vec<(usize, usize)>,
}

impl CollectiveLoweringOperator {
    pub fn tag(&self) -> JumpTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layout(&self) -> QubitLayout {
        self.layout
    }

    /// Dense row-major matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    /// Positions of the unit entries. Every entry of the operator is 0
    /// or 1: distinct sites lower distinct bits, so no two terms of the
    /// site sum hit the same position.
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }
}

fn check_cap(cfg: EnsembleConfig, cap: u32) -> Result<(), Error> {
    let total = cfg.total_qubits();
    if total > cap {
        return Err(Error::CapExceeded {
            requested: total,
            cap,
        });
    }
    Ok(())
}

/// Builds the collective lowering operator for one environment.
///
/// For each site in the tagged set and each basis state with that site
/// excited, the operator maps the state to its lowered partner. Site
/// order and state order are fixed, so the entry list is deterministic.
pub fn build_collective_lowering(
    cfg: EnsembleConfig,
    tag: JumpTag,
    cap: u32,
) -> Result<CollectiveLoweringOperator, Error> {
    let cfg = validate_config(cfg, ExcitationCase::SideSite)?;
    check_cap(cfg, cap)?;
    let layout = cfg.layout();
    let dim = layout.dim();
    let sites: Vec<u32> = match tag {
        JumpTag::Ac => layout.ac_sites().collect(),
        JumpTag::Bc => layout.bc_sites().collect(),
    };
    let mut matrix = vec![0.0; dim * dim];
    let mut entries = Vec::with_capacity(sites.len() * dim / 2);
    for &site in &sites {
        let bit = 1usize << layout.site_bit(site);
        for state in 0..dim {
            if state & bit != 0 {
                let lowered = state & !bit;
                matrix[lowered * dim + state] = 1.0;
                entries.push((lowered, state));
            }
        }
    }
    Ok(CollectiveLoweringOperator {
        layout,
        tag,
        dim,
        matrix,
        entries,
    })
}

/// Dense real symmetric density matrix on the full 2^(2N+n)-dimensional
/// space, in the row-major basis fixed by [`QubitLayout`].
#[derive(Clone, Debug)]
pub struct DenseDensityMatrix {
    layout: QubitLayout,
    dim: usize,
    data: Vec<f64>,
}

impl DenseDensityMatrix {
    pub fn layout(&self) -> QubitLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Largest |m[i][j] - m[j][i]|; the evolution preserves symmetry up
    /// to roundoff and tests pin how much.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.data[i * self.dim + j] - self.data[j * self.dim + i]).abs());
            }
        }
        worst
    }

    pub fn frobenius_distance(&self, other: &DenseDensityMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Copies into a [`SymmetricMatrix`], averaging the (tiny, tested)
    /// roundoff asymmetry so downstream code sees exact symmetry.
    pub fn to_symmetric(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = 0.5 * (self.data[i * self.dim + j] + self.data[j * self.dim + i]);
                m.set(i, j, v);
            }
        }
        m
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, Error> {
        symmetric_eigenvalues(&self.to_symmetric())
    }
}

/// Global site index of the initially excited qubit: the offset-th site
/// of C (common case) or of A (side case).
fn excited_site(cfg: EnsembleConfig, case: ExcitationCase, site_offset: u32) -> Result<u32, Error> {
    let layout = cfg.layout();
    match case {
        ExcitationCase::CommonSite => {
            if site_offset >= cfg.common_count {
                return Err(Error::InvalidConfig(format!(
                    "common-site offset {site_offset} out of range (n = {})",
                    cfg.common_count
                )));
            }
            Ok(layout.c_sites().start + site_offset)
        }
        ExcitationCase::SideSite => {
            if site_offset >= cfg.side_count {
                return Err(Error::InvalidConfig(format!(
                    "side-site offset {site_offset} out of range (N = {})",
                    cfg.side_count
                )));
            }
            Ok(layout.a_sites().start + site_offset)
        }
    }
}

/// Projector onto the state with a single excitation at the offset-th
/// site of the ensemble selected by `case` (offset 0 is the first site).
pub fn initial_excitation_state(
    cfg: EnsembleConfig,
    case: ExcitationCase,
    site_offset: u32,
    cap: u32,
) -> Result<DenseDensityMatrix, Error> {
    let cfg = validate_config(cfg, case)?;
    check_cap(cfg, cap)?;
    let layout = cfg.layout();
    let dim = layout.dim();
    let site = excited_site(cfg, case, site_offset)?;
    let idx = layout.single_excitation_index(site);
    let mut data = vec![0.0; dim * dim];
    data[idx * dim + idx] = 1.0;
    Ok(DenseDensityMatrix { layout, dim, data })
}

/// Sparse row representation of M = L_AC^T L_AC + L_BC^T L_BC, the
/// positive operator in the anticommutator part of the dissipator.
fn anticommutator_rows(ops: [&CollectiveLoweringOperator; 2]) -> Vec<Vec<(usize, f64)>> {
    let dim = ops[0].dim;
    // (L^T L)[c][c'] = sum over rows r of L[r][c] L[r][c']; group the
    // unit entries by row and take all column pairs.
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); dim];
    let mut dense_rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); dim];
    for op in ops {
        for row in &mut by_row {
            row.clear();
        }
        for &(r, c) in &op.entries {
            by_row[r].push(c);
        }
        for cols in &by_row {
            for &c1 in cols {
                for &c2 in cols {
                    *dense_rows[c1].entry(c2).or_insert(0.0) += 1.0;
                }
            }
        }
    }
    dense_rows
        .into_iter()
        .map(|row| row.into_iter().collect())
        .collect()
}

/// Work space for repeated evaluations of the dissipator. The `active`
/// flags over-approximate the set of nonzero rows of every state touched
/// so far; rows outside it are bitwise zero and have bitwise-zero
/// derivative rows, so all loops run over the active list only.
struct Evolver {
    dim: usize,
    channel_entries: [Vec<(usize, usize)>; 2],
    m_rows: Vec<Vec<(usize, f64)>>,
    active: Vec<bool>,
    active_list: Vec<usize>,
    scratch: Vec<f64>,
    scratch_rows: Vec<usize>,
}

impl Evolver {
    fn new(l_ac: &CollectiveLoweringOperator, l_bc: &CollectiveLoweringOperator) -> Self {
        assert_eq!(l_ac.dim, l_bc.dim, "operator dimensions differ");
        let dim = l_ac.dim;
        Evolver {
            dim,
            channel_entries: [l_ac.entries.clone(), l_bc.entries.clone()],
            m_rows: anticommutator_rows([l_ac, l_bc]),
            active: vec![false; dim],
            active_list: Vec::new(),
            scratch: vec![0.0; dim * dim],
            scratch_rows: Vec::new(),
        }
    }

    fn activate(&mut self, row: usize) {
        if !self.active[row] {
            self.active[row] = true;
            self.active_list.push(row);
        }
    }

    fn seed_active(&mut self, state: &[f64]) {
        let dim = self.dim;
        for row in 0..dim {
            if state[row * dim..(row + 1) * dim].iter().any(|&x| x != 0.0) {
                self.activate(row);
            }
        }
    }

    /// Writes the dissipator applied to `state` into `out`. Only rows in
    /// the active set are read (callers guarantee `state` is zero
    /// elsewhere) and every row written is added to the active set.
    fn rhs(&mut self, state: &[f64], out: &mut [f64]) {
        let dim = self.dim;
        for &row in &self.active_list {
            out[row * dim..(row + 1) * dim].fill(0.0);
        }
        let mut new_rows: Vec<usize> = Vec::new();

        for channel in 0..2 {
            // G = L state, accumulated row by row from the unit entries.
            for &row in &self.scratch_rows {
                self.scratch[row * dim..(row + 1) * dim].fill(0.0);
            }
            self.scratch_rows.clear();
            for &(r, c) in &self.channel_entries[channel] {
                if self.active[c] {
                    if !self.scratch_rows.contains(&r) {
                        self.scratch_rows.push(r);
                    }
                    let (src, dst) = (c * dim, r * dim);
                    for k in 0..dim {
                        self.scratch[dst + k] += state[src + k];
                    }
                }
            }
            // out += 2 G L^T: column j of L^T is row j of L, so each unit
            // entry (j, k) adds column k of G into column j of the output.
            for &(j, k) in &self.channel_entries[channel] {
                for &i in &self.scratch_rows {
                    out[i * dim + j] += 2.0 * self.scratch[i * dim + k];
                }
            }
            for &r in &self.scratch_rows {
                if !self.active[r] && !new_rows.contains(&r) {
                    new_rows.push(r);
                }
            }
        }

        // P = M state; out -= P + P^T (state and M symmetric, so
        // state M = (M state)^T).
        for &row in &self.scratch_rows {
            self.scratch[row * dim..(row + 1) * dim].fill(0.0);
        }
        self.scratch_rows.clear();
        for (i, cols) in self.m_rows.iter().enumerate() {
            let mut touched = false;
            for &(j, w) in cols {
                if self.active[j] {
                    if !touched {
                        touched = true;
                        if !self.scratch_rows.contains(&i) {
                            self.scratch_rows.push(i);
                        }
                    }
                    let (src, dst) = (j * dim, i * dim);
                    for k in 0..dim {
                        self.scratch[dst + k] += w * state[src + k];
                    }
                }
            }
        }
        for &i in &self.scratch_rows {
            for j in 0..dim {
                let p = self.scratch[i * dim + j];
                if p != 0.0 {
                    out[i * dim + j] -= p;
                    out[j * dim + i] -= p;
                }
            }
            if !self.active[i] && !new_rows.contains(&i) {
                new_rows.push(i);
            }
        }

        for row in new_rows {
            self.activate(row);
        }
    }

    /// Classical fixed-step RK4 on the dense state. Vector updates run
    /// over active rows only; skipped rows are bitwise zero in the state
    /// and in every stage derivative, so the arithmetic is identical to
    /// full-matrix RK4.
    fn evolve(&mut self, state: &mut [f64], t_final: f64, steps: usize) -> Result<(), Error> {
        if steps == 0 {
            return Err(Error::InvalidConfig("evolution needs at least one step".into()));
        }
        let dim = self.dim;
        let h = t_final / steps as f64;
        self.seed_active(state);
        let mut k = vec![0.0; dim * dim];
        let mut acc = vec![0.0; dim * dim];
        let mut stage = vec![0.0; dim * dim];
        for step in 0..steps {
            self.rhs(state, &mut k);
            for &row in &self.active_list {
                for idx in row * dim..(row + 1) * dim {
                    acc[idx] = k[idx];
                    stage[idx] = state[idx] + 0.5 * h * k[idx];
                }
            }
            self.rhs(&stage, &mut k);
            for &row in &self.active_list {
                for idx in row * dim..(row + 1) * dim {
                    acc[idx] += 2.0 * k[idx];
                    stage[idx] = state[idx] + 0.5 * h * k[idx];
                }
            }
            self.rhs(&stage, &mut k);
            for &row in &self.active_list {
                for idx in row * dim..(row + 1) * dim {
                    acc[idx] += 2.0 * k[idx];
                    stage[idx] = state[idx] + h * k[idx];
                }
            }
            self.rhs(&stage, &mut k);
            let mut probe = 0.0;
            for &row in &self.active_list {
                for idx in row * dim..(row + 1) * dim {
                    state[idx] += h / 6.0 * (acc[idx] + k[idx]);
                    probe += state[idx];
                }
            }
            if !probe.is_finite() {
                return Err(Error::IntegrationDiverged { step });
            }
        }
        Ok(())
    }
}

/// Dissipator of the master equation applied to `rho`:
/// 2 L_AC rho L_AC^T - {L_AC^T L_AC, rho} + (same for BC).
pub fn lindblad_rhs(
    rho: &DenseDensityMatrix,
    l_ac: &CollectiveLoweringOperator,
    l_bc: &CollectiveLoweringOperator,
) -> DenseDensityMatrix {
    assert_eq!(rho.dim, l_ac.dim, "dimension mismatch");
    assert_eq!(rho.dim, l_bc.dim, "dimension mismatch");
    let mut evolver = Evolver::new(l_ac, l_bc);
    evolver.seed_active(&rho.data);
    let mut out = vec![0.0; rho.dim * rho.dim];
    evolver.rhs(&rho.data, &mut out);
    DenseDensityMatrix {
        layout: rho.layout,
        dim: rho.dim,
        data: out,
    }
}

/// Integrates the master equation from the standard initial state (first
/// site of C for a common-site excitation, first site of A otherwise)
/// with `steps` fixed RK4 steps up to time `t`. No trace renormalization
/// is applied; trace drift is a test signal.
pub fn evolve_full(
    cfg: EnsembleConfig,
    case: ExcitationCase,
    t: f64,
    steps: usize,
    cap: u32,
) -> Result<DenseDensityMatrix, Error> {
    let rho = initial_excitation_state(cfg, case, 0, cap)?;
    evolve_state(&rho, t, steps)
}

/// Integrates the master equation from an arbitrary dense state.
pub fn evolve_state(
    rho: &DenseDensityMatrix,
    t: f64,
    steps: usize,
) -> Result<DenseDensityMatrix, Error> {
    let cfg = rho.layout.config();
    let l_ac = build_collective_lowering(cfg, JumpTag::Ac, cfg.total_qubits())?;
    let l_bc = build_collective_lowering(cfg, JumpTag::Bc, cfg.total_qubits())?;
    let mut evolver = Evolver::new(&l_ac, &l_bc);
    let mut data = rho.data.clone();
    evolver.evolve(&mut data, t, steps)?;
    Ok(DenseDensityMatrix {
        layout: rho.layout,
        dim: rho.dim,
        data,
    })
}

/// Step counts for integrating one time segment: step size at most
/// min(1e-3, 0.1 / (N + 2n)) up to t = 6, relaxed fivefold beyond, where
/// the state is an exponentially small perturbation of its stationary
/// value and the local truncation error has decayed with it.
fn segment_steps(cfg: EnsembleConfig, from: f64, to: f64) -> usize {
    let rate = f64::from(cfg.side_count) + 2.0 * f64::from(cfg.common_count);
    let base = (1e-3f64).min(0.1 / rate);
    let h = if from < 6.0 { base } else { 5.0 * base };
    ((to - from) / h).ceil().max(1.0) as usize
}

/// Evolves once through an ascending time grid, invoking `visit` with
/// each sampled state. Shared evolution keeps multi-time sweeps cheap
/// and bit-for-bit deterministic.
fn evolve_through<F>(
    cfg: EnsembleConfig,
    case: ExcitationCase,
    times: &[f64],
    cap: u32,
    mut visit: F,
) -> Result<(), Error>
where
    F: FnMut(usize, &DenseDensityMatrix) -> Result<(), Error>,
{
    for pair in times.windows(2) {
        if pair[1] < pair[0] {
            return Err(Error::InvalidConfig(
                "sample times must be ascending".into(),
            ));
        }
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidConfig(
            "sample times must be finite and non-negative".into(),
        ));
    }
    let rho0 = initial_excitation_state(cfg, case, 0, cap)?;
    let l_ac = build_collective_lowering(cfg, JumpTag::Ac, cap)?;
    let l_bc = build_collective_lowering(cfg, JumpTag::Bc, cap)?;
    let mut evolver = Evolver::new(&l_ac, &l_bc);
    let mut data = rho0.data.clone();
    let mut now = 0.0;
    for (idx, &t) in times.iter().enumerate() {
        if t > now {
            let steps = segment_steps(cfg, now, t);
            evolver.evolve(&mut data, t - now, steps)?;
            now = t;
        }
        let snapshot = DenseDensityMatrix {
            layout: rho0.layout,
            dim: rho0.dim,
            data: data.clone(),
        };
        visit(idx, &snapshot)?;
    }
    Ok(())
}

/// Traces out the shared qubits, returning the joint state of the two
/// side ensembles on the 2^(2N)-dimensional A-then-B basis.
pub fn partial_trace_c(rho: &DenseDensityMatrix) -> SymmetricMatrix {
    let cfg = rho.layout.config();
    let (nf, nn) = (cfg.side_count, cfg.common_count);
    let dim_side = 1usize << nf;
    let dim_c = 1usize << nn;
    let dim_ab = dim_side * dim_side;
    let full = rho.dim;
    let mut out = SymmetricMatrix::zeros(dim_ab);
    let full_index = |a: usize, c: usize, b: usize| ((a << nn) | c) << nf | b;
    for a in 0..dim_side {
        for b in 0..dim_side {
            let row_ab = a * dim_side + b;
            for a2 in 0..dim_side {
                for b2 in 0..dim_side {
                    let col_ab = a2 * dim_side + b2;
                    if col_ab < row_ab {
                        continue;
                    }
                    let mut sum = 0.0;
                    for c in 0..dim_c {
                        let r = full_index(a, c, b);
                        let s = full_index(a2, c, b2);
                        // Average the mirrored entries so the result is
                        // exactly symmetric despite integrator roundoff.
                        sum += 0.5 * (rho.data[r * full + s] + rho.data[s * full + r]);
                    }
                    out.set(row_ab, col_ab, sum);
                }
            }
        }
    }
    out
}

/// Partial transpose over ensemble B on the 2^(2N) basis produced by
/// [`partial_trace_c`]: entry ((a, b), (a', b')) moves to ((a, b'),
/// (a', b)).
pub fn partial_transpose_b(rho_ab: &SymmetricMatrix, side_count: u32) -> SymmetricMatrix {
    let dim_side = 1usize << side_count;
    let dim_ab = dim_side * dim_side;
    assert_eq!(rho_ab.dim(), dim_ab, "expected a 2^(2N)-dimensional state");
    let mut out = SymmetricMatrix::zeros(dim_ab);
    for a in 0..dim_side {
        for b in 0..dim_side {
            for a2 in 0..dim_side {
                for b2 in 0..dim_side {
                    let v = rho_ab.get(a * dim_side + b, a2 * dim_side + b2);
                    out.set(a * dim_side + b2, a2 * dim_side + b, v);
                }
            }
        }
    }
    out
}

/// Negativity of a dense full-space state: partial trace over C, partial
/// transpose over B, dense eigensolve, absolute sum of negative
/// eigenvalues.
pub fn state_negativity(rho: &DenseDensityMatrix) -> Result<f64, Error> {
    let reduced = partial_trace_c(rho);
    let transposed = partial_transpose_b(&reduced, rho.layout.config().side_count);
    let eigs = symmetric_eigenvalues(&transposed)?;
    Ok(negativity_from_spectrum(&eigs))
}

/// Brute-force negativity at a single time.
pub fn oracle_negativity(
    cfg: EnsembleConfig,
    case: ExcitationCase,
    t: f64,
    cap: u32,
) -> Result<f64, Error> {
    Ok(oracle_negativity_at_times(cfg, case, &[t], cap)?[0])
}

/// Brute-force negativity along an ascending time grid, sharing one
/// evolution across all samples.
pub fn oracle_negativity_at_times(
    cfg: EnsembleConfig,
    case: ExcitationCase,
    times: &[f64],
    cap: u32,
) -> Result<Vec<f64>, Error> {
    let mut out = vec![0.0; times.len()];
    evolve_through(cfg, case, times, cap, |idx, rho| {
        out[idx] = state_negativity(rho)?;
        Ok(())
    })?;
    Ok(out)
}

/// The eleven basis operators spanning the reachable set, as lists of
/// (row, column, weight) entries in the full space. `excited` is the
/// global index of the initially excited site.
fn basis_operators(
    layout: QubitLayout,
    case: ExcitationCase,
    excited: u32,
) -> Vec<Vec<(usize, usize)>> {
    let idx = |site: u32| layout.single_excitation_index(site);
    let a_sites: Vec<u32> = layout.a_sites().collect();
    let b_sites: Vec<u32> = layout.b_sites().collect();
    let c_sites: Vec<u32> = layout.c_sites().collect();
    // Population of a symmetrized (unnormalized) excitation over `kets`,
    // cross terms between two groups, and the symmetric pairing with the
    // excited site.
    let population = |kets: &[u32]| -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for &i in kets {
            for &j in kets {
                v.push((idx(i), idx(j)));
            }
        }
        v
    };
    let cross = |left: &[u32], right: &[u32]| -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for &i in left {
            for &j in right {
                v.push((idx(i), idx(j)));
                v.push((idx(j), idx(i)));
            }
        }
        v
    };
    match case {
        ExcitationCase::CommonSite => {
            let rest_c: Vec<u32> = c_sites.iter().copied().filter(|&s| s != excited).collect();
            let k = vec![excited];
            vec![
                vec![(0, 0)],
                population(&k),
                population(&a_sites),
                population(&b_sites),
                population(&rest_c),
                cross(&a_sites, &k),
                cross(&b_sites, &k),
                cross(&rest_c, &k),
                cross(&a_sites, &b_sites),
                cross(&a_sites, &rest_c),
                cross(&b_sites, &rest_c),
            ]
        }
        ExcitationCase::SideSite => {
            let rest_a: Vec<u32> = a_sites.iter().copied().filter(|&s| s != excited).collect();
            let k = vec![excited];
            vec![
                vec![(0, 0)],
                population(&k),
                population(&rest_a),
                population(&b_sites),
                population(&c_sites),
                cross(&rest_a, &k),
                cross(&b_sites, &k),
                cross(&c_sites, &k),
                cross(&rest_a, &b_sites),
                cross(&rest_a, &c_sites),
                cross(&b_sites, &c_sites),
            ]
        }
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with
/// partial pivoting. Sizes here are at most 11.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, Error> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::InvalidConfig("singular projection system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in (col + 1)..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Ok(x)
}

/// Coefficients of a dense state on the eleven-operator basis, via
/// least-squares projection through the Gram matrix. Slots whose basis
/// operator vanishes for this geometry (no remaining common sites, or no
/// remaining A sites) are reported as undefined.
#[derive(Clone, Copy, Debug)]
pub struct ExtractedCoefficients {
    pub values: [f64; 11],
    pub defined: [bool; 11],
}

fn project_onto_basis(
    rho: &DenseDensityMatrix,
    case: ExcitationCase,
) -> Result<(ExtractedCoefficients, Vec<Vec<(usize, usize)>>), Error> {
    let cfg = rho.layout.config();
    let excited = excited_site(cfg, case, 0)?;
    let ops = basis_operators(rho.layout, case, excited);
    let live: Vec<usize> = (0..ops.len()).filter(|&m| !ops[m].is_empty()).collect();
    // Gram entries: the operators are 0/1-valued on disjoint or
    // overlapping supports, so inner products count shared positions.
    let mut gram = vec![vec![0.0; live.len()]; live.len()];
    for (mi, &m) in live.iter().enumerate() {
        let set: std::collections::BTreeSet<(usize, usize)> = ops[m].iter().copied().collect();
        for (mj, &mm) in live.iter().enumerate() {
            let overlap = ops[mm].iter().filter(|e| set.contains(e)).count();
            gram[mi][mj] = overlap as f64;
        }
    }
    let rhs: Vec<f64> = live
        .iter()
        .map(|&m| {
            ops[m]
                .iter()
                .map(|&(r, c)| rho.data[r * rho.dim + c])
                .sum()
        })
        .collect();
    let solution = solve_linear(gram, rhs)?;
    let mut values = [0.0; 11];
    let mut defined = [false; 11];
    for (mi, &m) in live.iter().enumerate() {
        values[m] = solution[mi];
        defined[m] = true;
    }
    Ok((ExtractedCoefficients { values, defined }, ops))
}

/// Least-squares coefficients of `rho` on the eleven-operator basis.
pub fn extract_coefficients(
    rho: &DenseDensityMatrix,
    case: ExcitationCase,
) -> Result<ExtractedCoefficients, Error> {
    Ok(project_onto_basis(rho, case)?.0)
}

/// Frobenius distance between `rho` and its projection onto the
/// eleven-operator span: zero (up to integrator roundoff) exactly when
/// the dynamics has stayed inside the reachable set.
pub fn subspace_leakage(rho: &DenseDensityMatrix, case: ExcitationCase) -> Result<f64, Error> {
    let (coeffs, ops) = project_onto_basis(rho, case)?;
    let mut residual = rho.data.clone();
    for (m, entries) in ops.iter().enumerate() {
        if !coeffs.defined[m] {
            continue;
        }
        for &(r, c) in entries {
            residual[r * rho.dim + c] -= coeffs.values[m];
        }
    }
    Ok(residual.iter().map(|x| x * x).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DEFAULT_ORACLE_CAP;
    use crate::dynamics::{coeff_closed_common, coeff_closed_side};
    use crate::negativity::{negativity_common, negativity_side};

    const CAP: u32 = DEFAULT_ORACLE_CAP;

    fn cfg(side: u32, common: u32) -> EnsembleConfig {
        EnsembleConfig::new(side, common)
    }

    #[test]
    fn lowering_operator_on_two_qubits() {
        // N = 1, n = 0: the AC channel lowers only site 0, acting as
        // sigma tensor identity.
        let l = build_collective_lowering(cfg(1, 0), JumpTag::Ac, CAP).unwrap();
        assert_eq!(l.dim(), 4);
        let mut expect = vec![0.0; 16];
        expect[0 * 4 + 2] = 1.0;
        expect[1 * 4 + 3] = 1.0;
        assert_eq!(l.matrix(), &expect[..]);
    }

    #[test]
    fn lowering_operator_respects_site_membership() {
        // N = 1, n = 1: the AC channel lowers sites 0 (A) and 1 (C) but
        // never site 2 (B).
        let l = build_collective_lowering(cfg(1, 1), JumpTag::Ac, CAP).unwrap();
        assert_eq!(l.get(0, 4), 1.0);
        assert_eq!(l.get(0, 2), 1.0);
        assert_eq!(l.get(0, 1), 0.0);
        let lb = build_collective_lowering(cfg(1, 1), JumpTag::Bc, CAP).unwrap();
        assert_eq!(lb.get(0, 1), 1.0);
        assert_eq!(lb.get(0, 2), 1.0);
        assert_eq!(lb.get(0, 4), 0.0);
    }

    #[test]
    fn lowering_operator_has_rank_one_on_single_excitations() {
        // Both single-excitation states in the AC set map to the ground
        // state, so the restriction has rank one.
        let l = build_collective_lowering(cfg(1, 1), JumpTag::Ac, CAP).unwrap();
        for col in [4usize, 2] {
            for row in 0..8 {
                let expect = if row == 0 { 1.0 } else { 0.0 };
                assert_eq!(l.get(row, col), expect);
            }
        }
    }

    #[test]
    fn lowering_operator_is_nilpotent() {
        let l = build_collective_lowering(cfg(2, 1), JumpTag::Bc, CAP).unwrap();
        let d = l.dim();
        // Apply L repeatedly to every basis column; |site set| + 1
        // applications must annihilate everything.
        let mut power = l.matrix().to_vec();
        for _ in 0..(3 + 1 - 1) {
            let mut next = vec![0.0; d * d];
            for &(r, c) in l.entries() {
                for j in 0..d {
                    next[r * d + j] += power[c * d + j];
                }
            }
            power = next;
        }
        assert!(power.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cap_is_enforced() {
        let err = build_collective_lowering(cfg(5, 3), JumpTag::Ac, 12);
        assert!(matches!(err, Err(Error::CapExceeded { requested: 13, cap: 12 })));
        assert!(evolve_full(cfg(5, 3), ExcitationCase::SideSite, 1.0, 10, 12).is_err());
        assert!(oracle_negativity(cfg(5, 3), ExcitationCase::SideSite, 1.0, 12).is_err());
    }

    #[test]
    fn ground_state_is_stationary() {
        let c = cfg(2, 1);
        let layout = c.layout();
        let dim = layout.dim();
        let mut data = vec![0.0; dim * dim];
        data[0] = 1.0;
        let rho = DenseDensityMatrix { layout, dim, data };
        let l_ac = build_collective_lowering(c, JumpTag::Ac, CAP).unwrap();
        let l_bc = build_collective_lowering(c, JumpTag::Bc, CAP).unwrap();
        let dot = lindblad_rhs(&rho, &l_ac, &l_bc);
        assert!(dot.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn excited_common_site_decays_at_rate_four() {
        // N = 1, n = 1, excitation on the shared site: it belongs to both
        // channels, each contributing decay rate 2.
        let c = cfg(1, 1);
        let rho = initial_excitation_state(c, ExcitationCase::CommonSite, 0, CAP).unwrap();
        let l_ac = build_collective_lowering(c, JumpTag::Ac, CAP).unwrap();
        let l_bc = build_collective_lowering(c, JumpTag::Bc, CAP).unwrap();
        let dot = lindblad_rhs(&rho, &l_ac, &l_bc);
        let k = c.layout().single_excitation_index(1);
        assert_eq!(dot.get(0, 0), 4.0);
        assert_eq!(dot.get(k, k), -4.0);
        assert!(dot.trace().abs() < 1e-14);
    }

    #[test]
    fn dissipator_is_traceless_on_generic_states() {
        let c = cfg(1, 2);
        let layout = c.layout();
        let dim = layout.dim();
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                // Deterministic symmetric filler with no special structure.
                let v = ((i * 7 + j * 7 + i * j) % 13) as f64 / 13.0;
                data[i * dim + j] = v;
            }
        }
        let rho = DenseDensityMatrix { layout, dim, data };
        let l_ac = build_collective_lowering(c, JumpTag::Ac, CAP).unwrap();
        let l_bc = build_collective_lowering(c, JumpTag::Bc, CAP).unwrap();
        let dot = lindblad_rhs(&rho, &l_ac, &l_bc);
        assert!(dot.trace().abs() < 1e-12);
    }

    #[test]
    fn zero_time_evolution_returns_the_initial_projector() {
        let c = cfg(2, 1);
        let rho = evolve_full(c, ExcitationCase::SideSite, 0.0, 5, CAP).unwrap();
        let init = initial_excitation_state(c, ExcitationCase::SideSite, 0, CAP).unwrap();
        assert_eq!(rho.frobenius_distance(&init), 0.0);
        assert_eq!(rho.trace(), 1.0);
    }

    #[test]
    fn evolution_preserves_trace_symmetry_and_positivity() {
        let c = cfg(2, 1);
        let rho = evolve_full(c, ExcitationCase::CommonSite, 2.0, 2000, CAP).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-9, "trace {}", rho.trace());
        assert!(rho.max_asymmetry() < 1e-12);
        let min_eig = rho.eigenvalues().unwrap()[0];
        assert!(min_eig > -1e-9, "min eigenvalue {min_eig}");
    }

    #[test]
    fn partial_trace_folds_common_excitations_into_the_ground_state() {
        let c = cfg(1, 1);
        let rho = initial_excitation_state(c, ExcitationCase::CommonSite, 0, CAP).unwrap();
        let ab = partial_trace_c(&rho);
        assert_eq!(ab.dim(), 4);
        assert_eq!(ab.get(0, 0), 1.0);
        assert_eq!(ab.frobenius_norm(), 1.0);
        assert!((ab.trace() - rho.trace()).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_moves_the_exchange_entry() {
        // On two single-qubit ensembles, the (|eg>, |ge>) entry moves to
        // (|ee>, |gg>) under transposition of the B indices.
        let mut m = SymmetricMatrix::zeros(4);
        m.set(2, 1, 0.25);
        let pt = partial_transpose_b(&m, 1);
        assert_eq!(pt.get(3, 0), 0.25);
        assert_eq!(pt.get(2, 1), 0.0);
        let back = partial_transpose_b(&pt, 1);
        assert_eq!(back.max_abs_diff(&m), 0.0);
        // Diagonal states are fixed points.
        let mut d = SymmetricMatrix::zeros(4);
        for i in 0..4 {
            d.set(i, i, i as f64 + 1.0);
        }
        assert_eq!(partial_transpose_b(&d, 1).max_abs_diff(&d), 0.0);
    }

    #[test]
    fn extraction_reproduces_the_closed_forms() {
        let t = 0.2310490602;
        let rho = evolve_full(cfg(1, 1), ExcitationCase::CommonSite, t, 2000, CAP).unwrap();
        let got = extract_coefficients(&rho, ExcitationCase::CommonSite).unwrap();
        let expect = coeff_closed_common(t, 1, 1);
        for m in 0..11 {
            if got.defined[m] {
                assert!(
                    (got.values[m] - expect.get(m)).abs() < 1e-8,
                    "common slot {m}: {} vs {}",
                    got.values[m],
                    expect.get(m)
                );
            }
        }
        // Slots tied to the remaining common sites vanish for n = 1.
        assert!(!got.defined[4] && !got.defined[7] && !got.defined[9] && !got.defined[10]);

        let rho = evolve_full(cfg(2, 1), ExcitationCase::SideSite, 1.0, 2000, CAP).unwrap();
        let got = extract_coefficients(&rho, ExcitationCase::SideSite).unwrap();
        let expect = coeff_closed_side(1.0, 2, 1);
        for m in 0..11 {
            assert!(got.defined[m]);
            assert!(
                (got.values[m] - expect.get(m)).abs() < 1e-8,
                "side slot {m}: {} vs {}",
                got.values[m],
                expect.get(m)
            );
        }
    }

    #[test]
    fn leakage_vanishes_inside_the_reachable_set() {
        let c = cfg(2, 1);
        let init = initial_excitation_state(c, ExcitationCase::SideSite, 0, CAP).unwrap();
        assert!(subspace_leakage(&init, ExcitationCase::SideSite).unwrap() < 1e-14);
        let rho = evolve_full(c, ExcitationCase::SideSite, 3.0, 3000, CAP).unwrap();
        let leak = subspace_leakage(&rho, ExcitationCase::SideSite).unwrap();
        assert!(leak < 1e-9, "leakage {leak}");
    }

    #[test]
    fn leakage_detects_states_outside_the_span() {
        // A two-excitation projector is orthogonal to every basis
        // operator, so the residual keeps its full norm.
        let c = cfg(1, 1);
        let layout = c.layout();
        let dim = layout.dim();
        let two = layout.single_excitation_index(0) | layout.single_excitation_index(2);
        let mut data = vec![0.0; dim * dim];
        data[two * dim + two] = 1.0;
        let rho = DenseDensityMatrix { layout, dim, data };
        let leak = subspace_leakage(&rho, ExcitationCase::CommonSite).unwrap();
        assert!(leak > 0.9, "leakage {leak}");
    }

    #[test]
    fn oracle_negativity_matches_the_analytic_curves() {
        let v = oracle_negativity(cfg(1, 1), ExcitationCase::CommonSite, 2.0, CAP).unwrap();
        let a = negativity_common(2.0, 1, 1).value;
        assert!((v - a).abs() < 1e-8, "common: {v} vs {a}");
        let v = oracle_negativity(cfg(1, 1), ExcitationCase::SideSite, 2.0, CAP).unwrap();
        let a = negativity_side(2.0, 1, 1).value;
        assert!((v - a).abs() < 1e-8, "side: {v} vs {a}");
        let zero = oracle_negativity(cfg(1, 1), ExcitationCase::CommonSite, 0.0, CAP).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn shared_evolution_matches_single_shot_runs() {
        let times = [0.5, 1.0, 2.0];
        let swept =
            oracle_negativity_at_times(cfg(1, 1), ExcitationCase::CommonSite, &times, CAP)
                .unwrap();
        for (i, &t) in times.iter().enumerate() {
            let single = oracle_negativity(cfg(1, 1), ExcitationCase::CommonSite, t, CAP).unwrap();
            assert!((swept[i] - single).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn rejects_descending_sample_times() {
        let err = oracle_negativity_at_times(
            cfg(1, 1),
            ExcitationCase::CommonSite,
            &[1.0, 0.5],
            CAP,
        );
        assert!(err.is_err());
    }
}
