//! Entanglement negativity of the two side ensembles.
//!
//! The partial transpose over ensemble B of the reduced state is block
//! diagonal on the explicit product basis: a tau block coupling the
//! ground label to the doubly excited labels, and one-ensemble omega
//! blocks. All blocks are arrow or constant matrices, so their spectra
//! have short closed forms and the negativity (absolute sum of negative
//! eigenvalues) reduces to a single square root.

use crate::config::ExcitationCase;
use crate::dynamics::{
    coeff_closed_common, coeff_closed_side, reduced_state_side, ReducedBipartiteState,
};
use crate::numerics::SymmetricMatrix;

/// Eigenvalues of the partial transpose with magnitude below this bound
/// count as zero: block formulas and dense eigensolvers agree on the
/// spectrum only to roundoff, and the physical spectrum has exact zeros.
pub const NEGATIVE_EIGENVALUE_THRESHOLD: f64 = 1e-12;

/// One point of a negativity curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NegativitySample {
    pub t: f64,
    pub value: f64,
}

/// Spectrum of the partially transposed reduced state, organized by
/// block: the two arrow-matrix eigenvalues of the tau block, the
/// structurally nonzero omega-block eigenvalues with multiplicities, and
/// the count of exact zeros that pad the spectrum to full dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PtBlockSpectrum {
    case: ExcitationCase,
    tau_pair: [f64; 2],
    omega_eigenvalues: Vec<(f64, usize)>,
    zero_multiplicity: usize,
    dim: usize,
}

impl PtBlockSpectrum {
    pub fn case(&self) -> ExcitationCase {
        self.case
    }

    /// The two tau-block eigenvalues, smaller first. The smaller one is
    /// the only candidate for negativity.
    pub fn tau_pair(&self) -> [f64; 2] {
        self.tau_pair
    }

    pub fn omega_eigenvalues(&self) -> &[(f64, usize)] {
        &self.omega_eigenvalues
    }

    pub fn zero_multiplicity(&self) -> usize {
        self.zero_multiplicity
    }

    /// Total spectrum length, (1 + N)^2.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Every eigenvalue including the zero padding, ascending.
    pub fn full_spectrum(&self) -> Vec<f64> {
        let mut eigs = Vec::with_capacity(self.dim);
        eigs.extend_from_slice(&self.tau_pair);
        for &(value, mult) in &self.omega_eigenvalues {
            eigs.extend(std::iter::repeat(value).take(mult));
        }
        eigs.extend(std::iter::repeat(0.0).take(self.zero_multiplicity));
        eigs.sort_unstable_by(f64::total_cmp);
        eigs
    }

    /// Negativity carried by this spectrum.
    pub fn negativity(&self) -> f64 {
        negativity_from_spectrum(&self.full_spectrum())
    }
}

/// Absolute sum of the negative eigenvalues, treating anything above
/// -[`NEGATIVE_EIGENVALUE_THRESHOLD`] as zero.
pub fn negativity_from_spectrum(eigenvalues: &[f64]) -> f64 {
    let mut sum = 0.0;
    for &ev in eigenvalues {
        if ev <= -NEGATIVE_EIGENVALUE_THRESHOLD {
            sum -= ev;
        }
    }
    sum
}

/// Block spectrum of the partial transpose for a common-site excitation.
///
/// The tau block is the arrow matrix with the ground weight in the corner
/// and N^2 couplings c2, giving the pair (beta +- sqrt(beta^2 +
/// (2Nc2)^2)) / 2. Each of the two omega blocks is the N x N constant
/// matrix with entries c2, contributing one eigenvalue N c2.
pub fn pt_spectrum_common(state: &ReducedBipartiteState) -> PtBlockSpectrum {
    let (side_count, beta, c2) = match *state {
        ReducedBipartiteState::Common {
            side_count,
            beta,
            c2,
        } => (side_count, beta, c2),
        ReducedBipartiteState::Side { .. } => panic!("expected a common-site reduced state"),
    };
    let nf = f64::from(side_count);
    let dim = crate::dynamics::expanded_dim(side_count);
    let spread = beta.hypot(2.0 * nf * c2);
    PtBlockSpectrum {
        case: ExcitationCase::CommonSite,
        tau_pair: [(beta - spread) / 2.0, (beta + spread) / 2.0],
        omega_eigenvalues: vec![(nf * c2, 2)],
        zero_multiplicity: dim - 4,
        dim,
    }
}

/// Block spectrum of the partial transpose for a side-site excitation.
///
/// The tau block couples the ground label to the N doubly excited labels
/// involving the initially excited site (weight a6) and to the N(N-1)
/// remaining ones (weight a8). One omega block mixes the excited site
/// with the rest of its ensemble through a5; the other is the constant
/// B-ensemble block with eigenvalue N a3.
pub fn pt_spectrum_side(state: &ReducedBipartiteState) -> PtBlockSpectrum {
    let (side_count, beta, a1, a2, a3, a5, a6, a8) = match *state {
        ReducedBipartiteState::Side {
            side_count,
            beta,
            a1,
            a2,
            a3,
            a5,
            a6,
            a8,
        } => (side_count, beta, a1, a2, a3, a5, a6, a8),
        ReducedBipartiteState::Common { .. } => panic!("expected a side-site reduced state"),
    };
    let nf = f64::from(side_count);
    let dim = crate::dynamics::expanded_dim(side_count);
    let coupling = (4.0 * nf * (a6 * a6 + (nf - 1.0) * a8 * a8)).sqrt();
    let spread = beta.hypot(coupling);
    let tau_pair = [(beta - spread) / 2.0, (beta + spread) / 2.0];

    let mut omega = omega_block_eigenvalues(a1, a2, a5, side_count);
    omega.push((nf * a3, 1));
    let named: usize = 2 + omega.iter().map(|&(_, m)| m).sum::<usize>();
    PtBlockSpectrum {
        case: ExcitationCase::SideSite,
        tau_pair,
        omega_eigenvalues: omega,
        zero_multiplicity: dim - named,
        dim,
    }
}

/// Block spectrum for either case.
pub fn pt_spectrum(state: &ReducedBipartiteState) -> PtBlockSpectrum {
    match state.case() {
        ExcitationCase::CommonSite => pt_spectrum_common(state),
        ExcitationCase::SideSite => pt_spectrum_side(state),
    }
}

/// The N x N one-ensemble block of the partial transpose for a side-site
/// excitation: excited-site weight a1 in the corner, couplings a5 to the
/// other N - 1 sites, constant body a2.
pub fn omega_block_matrix(a1: f64, a2: f64, a5: f64, side_count: u32) -> SymmetricMatrix {
    let nf = side_count as usize;
    let mut m = SymmetricMatrix::zeros(nf);
    m.set(0, 0, a1);
    for i in 1..nf {
        m.set(0, i, a5);
        for j in 1..nf {
            m.set(i, j, a2);
        }
    }
    m
}

/// Structurally nonzero eigenvalues of [`omega_block_matrix`] with
/// multiplicities. The constant body has rank one, so the block reduces
/// to a 2 x 2 problem: eigenvalues (a1 + (N-1)a2)/2 +- (1/2)sqrt((a1 -
/// (N-1)a2)^2 + 4(N-1)a5^2), plus N - 2 zeros. For N = 1 the block is
/// the single entry a1.
pub fn omega_block_eigenvalues(
    a1: f64,
    a2: f64,
    a5: f64,
    side_count: u32,
) -> Vec<(f64, usize)> {
    if side_count == 1 {
        return vec![(a1, 1)];
    }
    let m = f64::from(side_count) - 1.0;
    let mean = (a1 + m * a2) / 2.0;
    let half = 0.5 * (a1 - m * a2).hypot(2.0 * m.sqrt() * a5);
    vec![(mean - half, 1), (mean + half, 1)]
}

/// The same pair with the square-root term not halved. This variant is
/// kept only as a comparison target: the dense cross-check in the test
/// suite shows it disagrees with the true block spectrum whenever the
/// root term is nonzero, while the halved form in
/// [`omega_block_eigenvalues`] matches to roundoff. On evolved states
/// the true block is singular, so its lower eigenvalue sits at zero and
/// never contributes to the negativity; the unhalved pair would dip
/// below zero there, which is how the cross-check tells them apart.
pub fn omega_block_eigenvalues_unhalved(a1: f64, a2: f64, a5: f64, side_count: u32) -> [f64; 2] {
    let m = f64::from(side_count) - 1.0;
    let mean = (a1 + m * a2) / 2.0;
    let root = (a1 - m * a2).hypot(2.0 * m.sqrt() * a5);
    [mean - root, mean + root]
}

/// Negativity at time `t` for a common-site excitation, evaluated from
/// the closed-form coefficients.
///
/// With x = N c2 the value is sqrt(x^2 + (1/2 - x)^2) - (1/2 - x),
/// computed in the rationalized form x^2 / (sqrt(..) + (1/2 - x)) so no
/// cancellation occurs for small x; at t = 0 the result is exactly zero.
pub fn negativity_common(t: f64, side_count: u32, common_count: u32) -> NegativitySample {
    let c = coeff_closed_common(t, side_count, common_count);
    let x = f64::from(side_count) * c.get(2);
    let y = 0.5 - x;
    let spread = x.hypot(y);
    let value = if spread + y > 0.0 {
        x * x / (spread + y)
    } else {
        spread - y
    };
    NegativitySample { t, value }
}

/// Negativity at time `t` for a side-site excitation: the magnitude of
/// the lower tau-block eigenvalue, (sqrt(beta'^2 + D) - beta') / 2 with
/// D = 4N(a6^2 + (N-1)a8^2), again in rationalized form.
pub fn negativity_side(t: f64, side_count: u32, common_count: u32) -> NegativitySample {
    let a = coeff_closed_side(t, side_count, common_count);
    let state = reduced_state_side(&a, side_count, common_count);
    let (beta, a6, a8) = match state {
        ReducedBipartiteState::Side { beta, a6, a8, .. } => (beta, a6, a8),
        _ => unreachable!(),
    };
    let nf = f64::from(side_count);
    let d = 4.0 * nf * (a6 * a6 + (nf - 1.0) * a8 * a8);
    let spread = beta.hypot(d.sqrt());
    let value = if spread + beta > 0.0 {
        d / (2.0 * (spread + beta))
    } else {
        (spread - beta) / 2.0
    };
    NegativitySample { t, value }
}

/// Negativity at time `t` for either case.
pub fn negativity(
    case: ExcitationCase,
    t: f64,
    side_count: u32,
    common_count: u32,
) -> NegativitySample {
    match case {
        ExcitationCase::CommonSite => negativity_common(t, side_count, common_count),
        ExcitationCase::SideSite => negativity_side(t, side_count, common_count),
    }
}

/// Stationary (t -> infinity) negativity for a common-site excitation,
/// with r = N + 2n:
///
///   (1/2) sqrt(8N^2/r^4 - 4N/r^2 + 1) + N/r^2 - 1/2.
pub fn stationary_negativity_common(side_count: u32, common_count: u32) -> f64 {
    let nf = f64::from(side_count);
    let r = nf + 2.0 * f64::from(common_count);
    let r2 = r * r;
    0.5 * (8.0 * nf * nf / (r2 * r2) - 4.0 * nf / r2 + 1.0).sqrt() + nf / r2 - 0.5
}

/// Stationary negativity for a side-site excitation, with r = N + 2n:
///
///   sqrt(N^6 + 4N^5 n(n+2) + 16N^4 n^2 (n+1) + 16N^3 n^4 - 8N^2 n^4)
///     / (2 N^2 r^2)  +  (2n^2 - r^2) / (2 N r^2).
pub fn stationary_negativity_side(side_count: u32, common_count: u32) -> f64 {
    let nf = f64::from(side_count);
    let nn = f64::from(common_count);
    let r = nf + 2.0 * nn;
    let r2 = r * r;
    let n2 = nf * nf;
    let n3 = n2 * nf;
    let n4 = n3 * nf;
    let n5 = n4 * nf;
    let n6 = n5 * nf;
    let radicand = n6
        + 4.0 * n5 * nn * (nn + 2.0)
        + 16.0 * n4 * nn * nn * (nn + 1.0)
        + 16.0 * n3 * nn.powi(4)
        - 8.0 * n2 * nn.powi(4);
    radicand.sqrt() / (2.0 * n2 * r2) + (2.0 * nn * nn - r2) / (2.0 * nf * r2)
}

/// Stationary negativity for either case.
pub fn stationary_negativity(case: ExcitationCase, side_count: u32, common_count: u32) -> f64 {
    match case {
        ExcitationCase::CommonSite => stationary_negativity_common(side_count, common_count),
        ExcitationCase::SideSite => stationary_negativity_side(side_count, common_count),
    }
}

/// The ensemble size in 1..=side_max maximizing `f(N, common_count)`,
/// ties resolved toward the smaller N.
pub fn argmax_over_side_count<F>(f: F, common_count: u32, side_max: u32) -> u32
where
    F: Fn(u32, u32) -> f64,
{
    assert!(side_max >= 1, "need at least one candidate");
    let mut best_n = 1u32;
    let mut best = f(1, common_count);
    for nf in 2..=side_max {
        let v = f(nf, common_count);
        if v > best {
            best = v;
            best_n = nf;
        }
    }
    best_n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        coeff_closed, expand_reduced_state, partial_transpose_expanded, reduced_state,
        reduced_state_common,
    };
    use crate::numerics::symmetric_eigenvalues;

    #[test]
    fn threshold_clips_tiny_negatives() {
        assert_eq!(negativity_from_spectrum(&[-0.5e-12, 0.3, 0.7]), 0.0);
        let v = negativity_from_spectrum(&[-2e-12, -0.01, 0.5]);
        assert!((v - 0.010000000002).abs() < 1e-15);
    }

    #[test]
    fn curves_start_at_zero() {
        assert_eq!(negativity_common(0.0, 3, 2).value, 0.0);
        assert_eq!(negativity_side(0.0, 3, 2).value, 0.0);
        assert_eq!(negativity_side(0.0, 1, 0).value, 0.0);
    }

    #[test]
    fn smallest_system_saturates_at_the_known_value() {
        // N = 1, n = 1: the stationary tau pair is ((7 +- sqrt(53)) / 18),
        // so the negativity saturates at (sqrt(53) - 7) / 18.
        let expect = (53.0f64.sqrt() - 7.0) / 18.0;
        assert!((stationary_negativity_common(1, 1) - expect).abs() < 1e-15);
        assert!((stationary_negativity_side(1, 1) - expect).abs() < 1e-15);
        assert!((negativity_common(60.0, 1, 1).value - expect).abs() < 1e-12);

        let c = coeff_closed_common(1e4, 1, 1);
        let spec = pt_spectrum_common(&reduced_state_common(&c, 1, 1));
        let [minus, plus] = spec.tau_pair();
        assert!((minus + 0.0155617).abs() < 1e-6);
        assert!((plus - 0.7933394).abs() < 1e-6);
    }

    #[test]
    fn stationary_spot_values() {
        assert!((stationary_negativity_common(2, 1) - 0.0202847).abs() < 1e-6);
        assert!((stationary_negativity_side(2, 1) - 0.0351262).abs() < 1e-6);
        assert_eq!(stationary_negativity_side(3, 0), 0.0);
    }

    #[test]
    fn curve_approaches_the_stationary_value() {
        for (nf, nn) in [(1u32, 1u32), (2, 1), (3, 2)] {
            let c = negativity_common(50.0, nf, nn).value;
            assert!(
                (c - stationary_negativity_common(nf, nn)).abs() < 1e-8,
                "common N={nf} n={nn}"
            );
            let s = negativity_side(50.0, nf, nn).value;
            assert!(
                (s - stationary_negativity_side(nf, nn)).abs() < 1e-8,
                "side N={nf} n={nn}"
            );
        }
    }

    #[test]
    fn block_spectrum_matches_dense_partial_transpose() {
        for case in [ExcitationCase::CommonSite, ExcitationCase::SideSite] {
            for (nf, nn, t) in [(1u32, 1u32, 0.7), (2, 1, 1.3), (3, 2, 0.4), (4, 1, 2.0)] {
                let v = coeff_closed(case, t, nf, nn);
                let state = reduced_state(&v, nf, nn);
                let spec = pt_spectrum(&state);
                let block = spec.full_spectrum();
                let dense_pt = partial_transpose_expanded(&expand_reduced_state(&state), nf);
                let dense = symmetric_eigenvalues(&dense_pt).unwrap();
                assert_eq!(block.len(), dense.len());
                for (b, d) in block.iter().zip(&dense) {
                    assert!(
                        (b - d).abs() < 1e-12,
                        "{case} N={nf} n={nn} t={t}: block {b} vs dense {d}"
                    );
                }
            }
        }
    }

    #[test]
    fn spectrum_sums_to_the_trace() {
        for case in [ExcitationCase::CommonSite, ExcitationCase::SideSite] {
            let v = coeff_closed(case, 1.1, 3, 2);
            let state = reduced_state(&v, 3, 2);
            let total: f64 = pt_spectrum(&state).full_spectrum().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "{case}: {total}");
        }
    }

    #[test]
    fn exactly_one_negative_eigenvalue_when_entangled() {
        for case in [ExcitationCase::CommonSite, ExcitationCase::SideSite] {
            let v = coeff_closed(case, 2.0, 2, 1);
            let spec = pt_spectrum(&reduced_state(&v, 2, 1));
            let negatives = spec
                .full_spectrum()
                .iter()
                .filter(|&&e| e <= -NEGATIVE_EIGENVALUE_THRESHOLD)
                .count();
            assert_eq!(negatives, 1, "{case}");
            assert!(spec.tau_pair()[0] < 0.0);
        }
    }

    #[test]
    fn negativity_matches_the_tau_block() {
        for case in [ExcitationCase::CommonSite, ExcitationCase::SideSite] {
            for &t in &[0.5, 2.0, 20.0] {
                let sample = negativity(case, t, 2, 2);
                let spec = pt_spectrum(&reduced_state(&coeff_closed(case, t, 2, 2), 2, 2));
                assert!(
                    (sample.value - spec.negativity()).abs() < 1e-13,
                    "{case} t={t}"
                );
            }
        }
    }

    #[test]
    fn halved_block_eigenvalues_match_a_dense_solve() {
        let (a1, a2, a5) = (0.37, 0.11, -0.09);
        for nf in 2..=5u32 {
            let dense =
                symmetric_eigenvalues(&omega_block_matrix(a1, a2, a5, nf)).unwrap();
            let mut closed: Vec<f64> = omega_block_eigenvalues(a1, a2, a5, nf)
                .into_iter()
                .map(|(e, _)| e)
                .collect();
            closed.extend(std::iter::repeat(0.0).take(nf as usize - 2));
            closed.sort_unstable_by(f64::total_cmp);
            for (c, d) in closed.iter().zip(&dense) {
                assert!((c - d).abs() < 1e-13, "N={nf}: {c} vs {d}");
            }
            // The unhalved variant misses the dense extremes whenever the
            // coupling term is nonzero.
            let unhalved = omega_block_eigenvalues_unhalved(a1, a2, a5, nf);
            let max_dense = dense.last().unwrap();
            assert!((unhalved[1] - max_dense).abs() > 1e-3, "N={nf}");
        }
    }

    #[test]
    fn ensembles_with_a_single_qubit_have_a_scalar_omega_block() {
        let eigs = omega_block_eigenvalues(0.42, 0.9, 0.9, 1);
        assert_eq!(eigs, vec![(0.42, 1)]);
    }

    #[test]
    fn stationary_values_coincide_exactly_once() {
        // The two excitation cases saturate to the same negativity only
        // for single-qubit ensembles with a single shared qubit. The
        // transient curves still differ (gap above 1e-3 near t = 1) and
        // meet again as both reach their common stationary value.
        let gap = (stationary_negativity_common(1, 1) - stationary_negativity_side(1, 1)).abs();
        assert!(gap < 1e-14, "stationary gap at (1,1): {gap}");
        for nf in 1..=6u32 {
            for nn in 1..=6u32 {
                if (nf, nn) == (1, 1) {
                    continue;
                }
                let d = (stationary_negativity_common(nf, nn)
                    - stationary_negativity_side(nf, nn))
                .abs();
                assert!(d > 1e-4, "unexpected coincidence at N={nf} n={nn}");
            }
        }
        let mid =
            (negativity_common(1.0, 1, 1).value - negativity_side(1.0, 1, 1).value).abs();
        assert!(mid > 1e-3, "transient gap should be visible, got {mid}");
        let late =
            (negativity_common(50.0, 1, 1).value - negativity_side(50.0, 1, 1).value).abs();
        assert!(late < 1e-10, "late-time gap: {late}");
    }

    #[test]
    fn argmax_prefers_smaller_on_ties() {
        let best = argmax_over_side_count(|nf, _| f64::from(5 - nf.min(5)), 0, 8);
        assert_eq!(best, 1);
        let best = argmax_over_side_count(|_, _| 1.0, 3, 6);
        assert_eq!(best, 1);
    }

    #[test]
    fn argmax_finds_the_stationary_peaks() {
        // Common case peaks at N = 2n, side case at N = 2.
        for nn in 1..=3u32 {
            let best = argmax_over_side_count(stationary_negativity_common, nn, 20);
            assert_eq!(best, 2 * nn, "common n={nn}");
        }
        for nn in 1..=4u32 {
            let best = argmax_over_side_count(stationary_negativity_side, nn, 20);
            assert_eq!(best, 2, "side n={nn}");
        }
        // Without shared qubits the side case is identically zero, so the
        // tie-break lands on the smallest ensemble.
        assert_eq!(argmax_over_side_count(stationary_negativity_side, 0, 20), 1);
    }
}
