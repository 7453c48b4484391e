//! Model configuration: ensemble sizes, excitation placement and the
//! qubit layout of the full Hilbert space.

use crate::error::Error;

/// Default upper bound on the total qubit count accepted by the
/// full-Hilbert-space oracle. 2^12 x 2^12 dense matrices are the largest
/// this crate will evolve by brute force.
pub const DEFAULT_ORACLE_CAP: u32 = 12;

/// Where the single initial excitation sits.
///
/// `CommonSite` starts the excitation on a qubit shared by both
/// environments, `SideSite` on a qubit seen by only one of them. The two
/// cases evolve inside different operator subspaces and lead to different
/// closed-form solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExcitationCase {
    CommonSite,
    SideSite,
}

impl ExcitationCase {
    pub fn label(self) -> &'static str {
        match self {
            ExcitationCase::CommonSite => "common",
            ExcitationCase::SideSite => "side",
        }
    }
}

impl std::fmt::Display for ExcitationCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Sizes of the two qubit groups: each side ensemble (A and B) holds
/// `side_count` qubits and the shared group C holds `common_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EnsembleConfig {
    pub side_count: u32,
    pub common_count: u32,
}

impl EnsembleConfig {
    pub fn new(side_count: u32, common_count: u32) -> Self {
        EnsembleConfig {
            side_count,
            common_count,
        }
    }

    /// Total number of qubits 2N + n.
    pub fn total_qubits(self) -> u32 {
        2 * self.side_count + self.common_count
    }

    pub fn layout(self) -> QubitLayout {
        QubitLayout { cfg: self }
    }
}

/// Checks that a configuration supports the requested excitation case.
///
/// `side_count` must be positive, and a common-site excitation needs at
/// least one common qubit. `common_count = 0` is allowed for side-site
/// excitations (two fully independent environments). Returns the
/// configuration unchanged, so the check is idempotent.
pub fn validate_config(cfg: EnsembleConfig, case: ExcitationCase) -> Result<EnsembleConfig, Error> {
    if cfg.side_count == 0 {
        return Err(Error::InvalidConfig(
            "ensembles need at least one qubit (side_count = 0)".into(),
        ));
    }
    if case == ExcitationCase::CommonSite && cfg.common_count == 0 {
        return Err(Error::InvalidConfig(
            "a common-site excitation needs common_count >= 1".into(),
        ));
    }
    Ok(cfg)
}

/// Assignment of qubit sites to positions in the 2^(2N+n)-dimensional
/// state index.
///
/// Sites are numbered 0..2N+n in the order A, C, B. Site j occupies bit
/// `total_qubits - 1 - j` of a basis-state index, so `|100...0>` (site 0
/// excited) is the index `2^(total_qubits-1)`. Equivalently, a basis index
/// splits as `i = ((a << n) | c) << N | b` with `a`, `c`, `b` the bit
/// patterns of the A, C and B groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitLayout {
    cfg: EnsembleConfig,
}

impl QubitLayout {
    pub fn config(self) -> EnsembleConfig {
        self.cfg
    }

    pub fn total_qubits(self) -> u32 {
        self.cfg.total_qubits()
    }

    /// Hilbert-space dimension 2^(2N+n). Callers must have enforced a cap
    /// well below 63 bits; this asserts rather than erroring.
    pub fn dim(self) -> usize {
        let nt = self.total_qubits();
        assert!(nt < usize::BITS, "state space exceeds the address space");
        1usize << nt
    }

    pub fn a_sites(self) -> std::ops::Range<u32> {
        0..self.cfg.side_count
    }

    pub fn c_sites(self) -> std::ops::Range<u32> {
        self.cfg.side_count..self.cfg.side_count + self.cfg.common_count
    }

    pub fn b_sites(self) -> std::ops::Range<u32> {
        let start = self.cfg.side_count + self.cfg.common_count;
        start..start + self.cfg.side_count
    }

    /// Sites lowered by the first collective channel (A and C).
    pub fn ac_sites(self) -> impl Iterator<Item = u32> {
        self.a_sites().chain(self.c_sites())
    }

    /// Sites lowered by the second collective channel (B and C).
    pub fn bc_sites(self) -> impl Iterator<Item = u32> {
        self.b_sites().chain(self.c_sites())
    }

    /// Bit position of a site within a basis-state index.
    pub fn site_bit(self, site: u32) -> u32 {
        debug_assert!(site < self.total_qubits());
        self.total_qubits() - 1 - site
    }

    /// Basis index of the state with exactly one excitation, at `site`.
    pub fn single_excitation_index(self, site: u32) -> usize {
        1usize << self.site_bit(site)
    }
}

/// Upper bound on how many matrix entries of a 2^total_qubits density
/// matrix can ever become populated when at most `max_excitations`
/// excitations exist: the squared count of basis states with Hamming
/// weight at most `max_excitations`.
///
/// Purely dissipative dynamics never raises the excitation number, so
/// this bounds the work an excitation-aware integrator has to do.
/// `total_qubits` beyond 62 would overflow the intermediate state count
/// and is rejected.
pub fn subspace_dim_bound(total_qubits: u32, max_excitations: u32) -> Result<u128, Error> {
    if total_qubits > 62 {
        return Err(Error::InvalidConfig(format!(
            "subspace bound supports at most 62 qubits, got {total_qubits}"
        )));
    }
    if max_excitations > total_qubits {
        return Err(Error::InvalidConfig(format!(
            "cannot place {max_excitations} excitations on {total_qubits} qubits"
        )));
    }
    let mut states: u128 = 0;
    let mut binom: u128 = 1;
    for k in 0..=max_excitations {
        if k > 0 {
            // C(n, k) = C(n, k-1) * (n - k + 1) / k, exact at every step.
            binom = binom * u128::from(total_qubits - k + 1) / u128::from(k);
        }
        states += binom;
    }
    // states <= 2^62, so the square fits in u128 with room to spare.
    Ok(states * states)
}
