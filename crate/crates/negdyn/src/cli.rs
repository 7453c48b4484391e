//! Command-line surface: negativity curves, stationary scaling tables,
//! and a self-contained verification suite.
//!
//! Exit codes are stable for scripting: 0 success, 1 a verification
//! check failed, 2 bad flags or an invalid configuration, 3 output could
//! not be written. Identical invocations produce byte-identical output:
//! grids are fixed, evaluation order is fixed, and floats print in
//! shortest round-trip form.

use clap::{Args, Parser, Subcommand};

use crate::config::{validate_config, EnsembleConfig, ExcitationCase, DEFAULT_ORACLE_CAP};
use crate::dynamics::{
    coeff_closed, coeff_rhs, coefficient_labels, expand_reduced_state, partial_transpose_expanded,
    reduced_state, CoefficientVector, COEFF_COUNT,
};
use crate::error::Error;
use crate::negativity::{negativity, pt_spectrum, stationary_negativity};
use crate::numerics::{rk4_integrate, symmetric_eigenvalues};
use crate::oracle::{
    evolve_state, initial_excitation_state, oracle_negativity_at_times, partial_trace_c,
    state_negativity, subspace_leakage,
};
use crate::table::{Cell, OutputFormat, ResultTable};

#[derive(Parser)]
#[command(
    name = "negdyn",
    version,
    about = "Entanglement dynamics of two qubit ensembles decaying into overlapping environments",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Negativity as a function of time for one configuration.
    Curve(CurveArgs),
    /// Long-time negativity over a grid of ensemble sizes.
    Stationary(StationaryArgs),
    /// Run every internal consistency check and report pass/fail.
    Verify(VerifyArgs),
}

/// Inclusive integer range, written `lo..hi`, or a single value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Span {
    lo: u32,
    hi: u32,
}

impl Span {
    fn single(self) -> Option<u32> {
        (self.lo == self.hi).then_some(self.lo)
    }

    fn values(self) -> impl Iterator<Item = u32> {
        self.lo..=self.hi
    }
}

impl std::str::FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_end = |part: &str| {
            part.parse::<u32>()
                .map_err(|_| format!("'{part}' is not a non-negative integer"))
        };
        let span = match s.split_once("..") {
            Some((lo, hi)) => Span {
                lo: parse_end(lo)?,
                hi: parse_end(hi)?,
            },
            None => {
                let v = parse_end(s)?;
                Span { lo: v, hi: v }
            }
        };
        if span.lo > span.hi {
            return Err(format!("empty range {}..{}", span.lo, span.hi));
        }
        Ok(span)
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

fn parse_case(s: &str) -> Result<ExcitationCase, String> {
    match s {
        "common" => Ok(ExcitationCase::CommonSite),
        "side" => Ok(ExcitationCase::SideSite),
        other => Err(format!("unknown case '{other}' (expected common or side)")),
    }
}

#[derive(Args)]
struct CurveArgs {
    /// Which site carries the initial excitation: common or side.
    #[arg(long, value_parser = parse_case)]
    case: ExcitationCase,
    /// Qubits per side ensemble (a curve needs a single value).
    #[arg(long = "N")]
    side: Span,
    /// Qubits shared by both environments.
    #[arg(long = "n")]
    common: Span,
    /// End of the uniform time grid starting at 0.
    #[arg(long = "t-max")]
    t_max: f64,
    /// Number of grid points, at least 2.
    #[arg(long)]
    samples: usize,
    /// Also integrate the full master equation and report the difference.
    #[arg(long)]
    oracle: bool,
    /// Append the closed-form coefficient columns.
    #[arg(long)]
    coeffs: bool,
    #[command(flatten)]
    output: OutputArgs,
    /// Largest total qubit count 2N+n the full-space integrator accepts.
    #[arg(long = "max-total-qubits", default_value_t = DEFAULT_ORACLE_CAP)]
    cap: u32,
}

#[derive(Args)]
struct StationaryArgs {
    /// Which site carries the initial excitation: common or side.
    #[arg(long, value_parser = parse_case)]
    case: ExcitationCase,
    /// Qubits per side ensemble, single value or inclusive range lo..hi.
    #[arg(long = "N")]
    side: Span,
    /// Shared qubits, single value or inclusive range lo..hi.
    #[arg(long = "n")]
    common: Span,
    /// Append one summary row per n marking which N maximizes the value.
    #[arg(long)]
    argmax: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Tolerance applied to every tolerance-style check in place of the
    /// per-check defaults. Structural thresholds (distinctness floors,
    /// argmax positions) are not affected.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest total qubit count 2N+n for checks that evolve the full
    /// 2^(2N+n)-dimensional state. The brute-force sweep additionally
    /// never exceeds 8 total qubits.
    #[arg(long = "max-total-qubits", default_value_t = DEFAULT_ORACLE_CAP)]
    cap: u32,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Write to this path instead of standard output.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Check(_) => 1,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Check(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            // Configuration problems are usage errors; numerical
            // breakdowns mean a check could not be completed.
            Error::InvalidConfig(_) | Error::CapExceeded { .. } => Failure::Usage(e.to_string()),
            Error::IntegrationDiverged { .. } | Error::EigenNoConvergence(_) => {
                Failure::Check(e.to_string())
            }
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests land here too; clap tells them
            // apart from real usage errors.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Curve(args) => cmd_curve(&args).and_then(|t| emit(&t, &args.output)),
        Command::Stationary(args) => cmd_stationary(&args).and_then(|t| emit(&t, &args.output)),
        Command::Verify(args) => cmd_verify(&args),
    };
    match result {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.exit_code()
        }
    }
}

fn emit(table: &ResultTable, output: &OutputArgs) -> Result<(), Failure> {
    let text = table.render(output.format);
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn single_config(case: ExcitationCase, side: Span, common: Span) -> Result<EnsembleConfig, Failure> {
    let side = side
        .single()
        .ok_or_else(|| Failure::Usage("this command needs a single --N value, not a range".into()))?;
    let common = common
        .single()
        .ok_or_else(|| Failure::Usage("this command needs a single --n value, not a range".into()))?;
    Ok(validate_config(EnsembleConfig::new(side, common), case)?)
}

fn time_grid(t_max: f64, samples: usize) -> Vec<f64> {
    let last = (samples - 1) as f64;
    (0..samples).map(|i| t_max * i as f64 / last).collect()
}

fn cmd_curve(args: &CurveArgs) -> Result<ResultTable, Failure> {
    if args.samples < 2 {
        return Err(Failure::Usage(format!(
            "--samples must be at least 2, got {}",
            args.samples
        )));
    }
    if !args.t_max.is_finite() || args.t_max < 0.0 {
        return Err(Failure::Usage(format!(
            "--t-max must be finite and non-negative, got {}",
            args.t_max
        )));
    }
    if args.cap > DEFAULT_ORACLE_CAP {
        return Err(Failure::Usage(format!(
            "--max-total-qubits is limited to {DEFAULT_ORACLE_CAP}"
        )));
    }
    let cfg = single_config(args.case, args.side, args.common)?;
    let (nf, nn) = (cfg.side_count, cfg.common_count);
    let times = time_grid(args.t_max, args.samples);

    let oracle_values = if args.oracle {
        Some(oracle_negativity_at_times(cfg, args.case, &times, args.cap)?)
    } else {
        None
    };

    let mut columns: Vec<&str> = vec!["t", "negativity"];
    if args.oracle {
        columns.extend(["oracle_negativity", "abs_diff"]);
    }
    if args.coeffs {
        columns.extend(coefficient_labels(args.case));
    }
    let mut table = ResultTable::new(&columns);
    table.add_metadata("command", "curve");
    table.add_metadata("version", env!("CARGO_PKG_VERSION"));
    table.add_metadata("case", args.case.label());
    table.add_metadata("N", format!("{nf}"));
    table.add_metadata("n", format!("{nn}"));
    table.add_metadata("t_max", format!("{}", args.t_max));
    table.add_metadata("samples", format!("{}", args.samples));
    if args.oracle {
        table.add_metadata("oracle", "full master equation, fixed-step rk4");
    }

    for (i, &t) in times.iter().enumerate() {
        let mut row = vec![Cell::Float(t), Cell::Float(negativity(args.case, t, nf, nn).value)];
        if let Some(oracle) = &oracle_values {
            let analytic = negativity(args.case, t, nf, nn).value;
            row.push(Cell::Float(oracle[i]));
            row.push(Cell::Float((analytic - oracle[i]).abs()));
        }
        if args.coeffs {
            let c = coeff_closed(args.case, t, nf, nn);
            for m in 0..COEFF_COUNT {
                row.push(Cell::Float(c.get(m)));
            }
        }
        table.push_row(row);
    }
    Ok(table)
}

fn cmd_stationary(args: &StationaryArgs) -> Result<ResultTable, Failure> {
    // Validate every configuration in the grid up front so a bad range
    // fails before any output is produced.
    for nn in args.common.values() {
        for nf in args.side.values() {
            validate_config(EnsembleConfig::new(nf, nn), args.case)?;
        }
    }
    let mut columns = vec!["N", "n", "stationary_negativity"];
    if args.argmax {
        columns.push("kind");
    }
    let mut table = ResultTable::new(&columns);
    table.add_metadata("command", "stationary");
    table.add_metadata("version", env!("CARGO_PKG_VERSION"));
    table.add_metadata("case", args.case.label());
    table.add_metadata("N", format!("{}", args.side));
    table.add_metadata("n", format!("{}", args.common));

    for nn in args.common.values() {
        let mut best: Option<(u32, f64)> = None;
        for nf in args.side.values() {
            let value = stationary_negativity(args.case, nf, nn);
            let mut row = vec![
                Cell::Int(i64::from(nf)),
                Cell::Int(i64::from(nn)),
                Cell::Float(value),
            ];
            if args.argmax {
                row.push(Cell::Text("grid".into()));
            }
            table.push_row(row);
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((nf, value));
            }
        }
        if args.argmax {
            let (nf, value) = best.expect("ranges are non-empty");
            table.push_row(vec![
                Cell::Int(i64::from(nf)),
                Cell::Int(i64::from(nn)),
                Cell::Float(value),
                Cell::Text("argmax".into()),
            ]);
        }
    }
    Ok(table)
}

struct CheckOutcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

/// Tolerance check helper: formats the standard "max error" detail line.
fn tol_outcome(name: &'static str, observed: f64, tol: f64, scope: &str) -> CheckOutcome {
    outcome(
        name,
        observed <= tol,
        format!("max error {observed:.3e} (tolerance {tol:.1e}; {scope})"),
    )
}

/// Configurations exercised by the formula-level checks, independent of
/// the full-space cap: every case valid at the given sizes.
fn analytic_grid(max_side: u32, max_common: u32) -> Vec<(ExcitationCase, u32, u32)> {
    let mut grid = Vec::new();
    for nf in 1..=max_side {
        for nn in 0..=max_common {
            if nn >= 1 {
                grid.push((ExcitationCase::CommonSite, nf, nn));
            }
            grid.push((ExcitationCase::SideSite, nf, nn));
        }
    }
    grid
}

/// Configurations small enough for full-space evolution under `cap`,
/// never above `limit` total qubits. Shared-qubit counts start at 1; the
/// degenerate n = 0 geometry is covered by the formula-level checks.
fn oracle_grid(cap: u32, limit: u32) -> Vec<(ExcitationCase, u32, u32)> {
    let bound = cap.min(limit);
    let mut grid = Vec::new();
    for nf in 1.. {
        if 2 * nf + 1 > bound {
            break;
        }
        for nn in 1..=(bound - 2 * nf) {
            grid.push((ExcitationCase::CommonSite, nf, nn));
            grid.push((ExcitationCase::SideSite, nf, nn));
        }
    }
    grid
}

fn check_ode_residual(tol: f64) -> CheckOutcome {
    let grid = analytic_grid(4, 4);
    let times = [0.1, 0.7, 1.6, 3.0];
    let h = 1e-5;
    let mut worst = 0.0f64;
    for &(case, nf, nn) in &grid {
        for &t in &times {
            let ahead = coeff_closed(case, t + h, nf, nn);
            let behind = coeff_closed(case, t - h, nf, nn);
            let rhs = coeff_rhs(&coeff_closed(case, t, nf, nn), nf, nn);
            for m in 0..COEFF_COUNT {
                let fd = (ahead.get(m) - behind.get(m)) / (2.0 * h);
                worst = worst.max((fd - rhs.get(m)).abs());
            }
        }
    }
    tol_outcome(
        "closed-form-ode-residual",
        worst,
        tol,
        &format!("{} configs, {} times, central differences", grid.len(), times.len()),
    )
}

fn check_closed_vs_rk4(tol: f64) -> CheckOutcome {
    let grid = analytic_grid(4, 4);
    let times = [0.1f64, 1.0, 5.0];
    let mut worst = 0.0f64;
    for &(case, nf, nn) in &grid {
        for &t in &times {
            let steps = (t / 2e-4).ceil() as usize;
            let integrated = rk4_integrate(
                |y| {
                    let v = CoefficientVector::new(case, y[..].try_into().expect("11 slots"));
                    coeff_rhs(&v, nf, nn).values().to_vec()
                },
                CoefficientVector::initial(case).values(),
                t,
                steps,
            );
            let integrated = match integrated {
                Ok(v) => v,
                Err(e) => {
                    return outcome("closed-form-vs-rk4", false, format!("integration failed: {e}"))
                }
            };
            let closed = coeff_closed(case, t, nf, nn);
            for m in 0..COEFF_COUNT {
                worst = worst.max((integrated[m] - closed.get(m)).abs());
            }
        }
    }
    tol_outcome(
        "closed-form-vs-rk4",
        worst,
        tol,
        &format!("{} configs, {} times", grid.len(), times.len()),
    )
}

fn check_trace_identities(tol: f64) -> CheckOutcome {
    let grid = analytic_grid(4, 4);
    let times = [0.0, 0.5, 1.5, 4.0, 20.0];
    let mut worst = 0.0f64;
    for &(case, nf, nn) in &grid {
        for &t in &times {
            let c = coeff_closed(case, t, nf, nn);
            worst = worst.max((c.trace(nf, nn) - 1.0).abs());
            let reduced = reduced_state(&c, nf, nn);
            let expanded = expand_reduced_state(&reduced);
            worst = worst.max((expanded.trace() - 1.0).abs());
            let transposed = partial_transpose_expanded(&expanded, nf);
            worst = worst.max((transposed.trace() - 1.0).abs());
        }
    }
    tol_outcome(
        "trace-identities",
        worst,
        tol,
        &format!(
            "{} configs, {} times; full, reduced and transposed traces",
            grid.len(),
            times.len()
        ),
    )
}

fn check_reduced_psd(tol: f64) -> CheckOutcome {
    let grid = analytic_grid(4, 4);
    let times = [0.2, 1.0, 3.0, 50.0];
    let mut most_negative = 0.0f64;
    for &(case, nf, nn) in &grid {
        for &t in &times {
            let reduced = reduced_state(&coeff_closed(case, t, nf, nn), nf, nn);
            let eigs = match symmetric_eigenvalues(&expand_reduced_state(&reduced)) {
                Ok(e) => e,
                Err(e) => {
                    return outcome("reduced-state-psd", false, format!("eigensolve failed: {e}"))
                }
            };
            most_negative = most_negative.min(eigs[0]);
        }
    }
    tol_outcome(
        "reduced-state-psd",
        -most_negative,
        tol,
        &format!(
            "{} configs, {} times; largest negative excursion of the reduced spectrum",
            grid.len(),
            times.len()
        ),
    )
}

fn check_oracle_agreement(cap: u32, tol: f64) -> CheckOutcome {
    let grid = oracle_grid(cap, 8);
    if grid.is_empty() {
        return outcome(
            "oracle-agreement",
            true,
            "no configuration fits the qubit cap; nothing to run".into(),
        );
    }
    let times = [0.5, 1.0, 2.0, 5.0, 50.0];
    let mut worst = 0.0f64;
    for &(case, nf, nn) in &grid {
        let cfg = EnsembleConfig::new(nf, nn);
        let swept = match oracle_negativity_at_times(cfg, case, &times, cap) {
            Ok(v) => v,
            Err(e) => {
                return outcome("oracle-agreement", false, format!("oracle run failed: {e}"))
            }
        };
        for (i, &t) in times.iter().enumerate() {
            let analytic = negativity(case, t, nf, nn).value;
            worst = worst.max((swept[i] - analytic).abs());
        }
    }
    tol_outcome(
        "oracle-agreement",
        worst,
        tol,
        &format!(
            "{} configs up to {} total qubits, {} times, full master equation vs closed form",
            grid.len(),
            cap.min(8),
            times.len()
        ),
    )
}

fn check_subspace_leakage(cap: u32, tol: f64) -> CheckOutcome {
    let grid: Vec<_> = oracle_grid(cap, 6)
        .into_iter()
        .filter(|&(_, nf, nn)| nf <= 2 && nn <= 2)
        .collect();
    if grid.is_empty() {
        return outcome(
            "subspace-leakage",
            true,
            "no configuration fits the qubit cap; nothing to run".into(),
        );
    }
    let times = [1.0, 10.0];
    let mut worst = 0.0f64;
    for &(case, nf, nn) in &grid {
        let cfg = EnsembleConfig::new(nf, nn);
        for &t in &times {
            let run = initial_excitation_state(cfg, case, 0, cap)
                .and_then(|rho| evolve_state(&rho, t, (t / 1e-3).ceil() as usize))
                .and_then(|rho| subspace_leakage(&rho, case));
            match run {
                Ok(leak) => worst = worst.max(leak),
                Err(e) => {
                    return outcome("subspace-leakage", false, format!("evolution failed: {e}"))
                }
            }
        }
    }
    tol_outcome(
        "subspace-leakage",
        worst,
        tol,
        &format!(
            "{} configs, {} times; distance from the eleven-operator span",
            grid.len(),
            times.len()
        ),
    )
}

fn check_block_vs_dense(tol: f64) -> CheckOutcome {
    let grid = analytic_grid(4, 3);
    let times = [0.3, 1.2, 2.5];
    let mut worst = 0.0f64;
    for &(case, nf, nn) in &grid {
        for &t in &times {
            let reduced = reduced_state(&coeff_closed(case, t, nf, nn), nf, nn);
            let block = pt_spectrum(&reduced).full_spectrum();
            let transposed = partial_transpose_expanded(&expand_reduced_state(&reduced), nf);
            let dense = match symmetric_eigenvalues(&transposed) {
                Ok(e) => e,
                Err(e) => {
                    return outcome(
                        "block-vs-dense-spectrum",
                        false,
                        format!("eigensolve failed: {e}"),
                    )
                }
            };
            for (b, d) in block.iter().zip(&dense) {
                worst = worst.max((b - d).abs());
            }
        }
    }
    tol_outcome(
        "block-vs-dense-spectrum",
        worst,
        tol,
        &format!(
            "{} configs, {} times; transposed-state spectra, blockwise vs dense",
            grid.len(),
            times.len()
        ),
    )
}

fn check_monotonicity_argmax() -> CheckOutcome {
    let mut violations = Vec::new();
    // The stationary value peaks at N = 2n when the excitation starts on
    // a shared site, and at N = 2 regardless of n when it starts inside
    // an ensemble.
    for nn in 1..=3u32 {
        let peak = crate::negativity::argmax_over_side_count(
            |nf, nn| stationary_negativity(ExcitationCase::CommonSite, nf, nn),
            nn,
            8,
        );
        if peak != 2 * nn {
            violations.push(format!("common n={nn}: peak at N={peak}, expected {}", 2 * nn));
        }
        let peak = crate::negativity::argmax_over_side_count(
            |nf, nn| stationary_negativity(ExcitationCase::SideSite, nf, nn),
            nn,
            8,
        );
        if peak != 2 {
            violations.push(format!("side n={nn}: peak at N={peak}, expected 2"));
        }
    }
    // Negativity never decreases along the time grid for either case.
    for &(case, nf, nn) in &analytic_grid(4, 4) {
        let mut prev = 0.0f64;
        for i in 0..=200 {
            let value = negativity(case, 0.05 * i as f64, nf, nn).value;
            if value < prev - 1e-12 {
                violations.push(format!(
                    "{} N={nf} n={nn}: value dipped near t={}",
                    case.label(),
                    0.05 * i as f64
                ));
                break;
            }
            prev = value;
        }
    }
    // More shared qubits drain a shared-site excitation faster, but feed
    // the cross-ensemble channel when the excitation starts on a side.
    for nf in 1..=6u32 {
        for nn in 1..=49u32 {
            let diff = stationary_negativity(ExcitationCase::CommonSite, nf, nn + 1)
                - stationary_negativity(ExcitationCase::CommonSite, nf, nn);
            if diff > 0.0 {
                violations.push(format!("common N={nf}: value grew from n={nn}"));
            }
        }
        for nn in 0..=49u32 {
            let diff = stationary_negativity(ExcitationCase::SideSite, nf, nn + 1)
                - stationary_negativity(ExcitationCase::SideSite, nf, nn);
            if diff < 0.0 {
                violations.push(format!("side N={nf}: value shrank from n={nn}"));
            }
        }
    }
    // The side-case growth saturates once n dwarfs N.
    for nf in 1..=3u32 {
        let far = stationary_negativity(ExcitationCase::SideSite, nf, 200);
        let farther = stationary_negativity(ExcitationCase::SideSite, nf, 400);
        if (far - farther).abs() > 0.01 * farther {
            violations.push(format!("side N={nf}: no saturation between n=200 and n=400"));
        }
    }
    // Without shared qubits a side excitation never entangles the
    // ensembles.
    let side_zero = stationary_negativity(ExcitationCase::SideSite, 2, 0);
    if side_zero != 0.0 {
        violations.push(format!("side n=0 should be exactly 0, got {side_zero}"));
    }
    if violations.is_empty() {
        outcome(
            "stationary-monotonicity-argmax",
            true,
            "non-decreasing in time; peaks at N=2n (common) and N=2 (side); \
             falling (common) and saturating (side) in n; zero at n=0"
                .into(),
        )
    } else {
        outcome("stationary-monotonicity-argmax", false, violations.join("; "))
    }
}

fn check_stationary_coincidence(tol: f64) -> CheckOutcome {
    let gap_at = |nf: u32, nn: u32| {
        (stationary_negativity(ExcitationCase::CommonSite, nf, nn)
            - stationary_negativity(ExcitationCase::SideSite, nf, nn))
        .abs()
    };
    let gap11 = gap_at(1, 1);
    if gap11 > tol {
        return outcome(
            "stationary-case-coincidence",
            false,
            format!("values at N=1, n=1 differ by {gap11:.3e} (tolerance {tol:.1e})"),
        );
    }
    // The long-time values agree at N = n = 1 and nowhere else; the
    // transient curves differ even there, so only stationary values are
    // compared for equality.
    let mut min_elsewhere = f64::INFINITY;
    for nf in 1..=6u32 {
        for nn in 1..=6u32 {
            if 2 * nf + nn <= 13 && (nf, nn) != (1, 1) {
                min_elsewhere = min_elsewhere.min(gap_at(nf, nn));
            }
        }
    }
    if min_elsewhere < 1e-4 {
        return outcome(
            "stationary-case-coincidence",
            false,
            format!("another size pair nearly coincides (gap {min_elsewhere:.3e})"),
        );
    }
    let transient_gap = (negativity(ExcitationCase::CommonSite, 1.0, 1, 1).value
        - negativity(ExcitationCase::SideSite, 1.0, 1, 1).value)
        .abs();
    if transient_gap < 1e-3 {
        return outcome(
            "stationary-case-coincidence",
            false,
            format!("transient curves at N=n=1 unexpectedly close (gap {transient_gap:.3e})"),
        );
    }
    outcome(
        "stationary-case-coincidence",
        true,
        format!(
            "stationary gap {gap11:.1e} at N=n=1 (tolerance {tol:.1e}); \
             min gap {min_elsewhere:.1e} at other sizes; transient gap {transient_gap:.1e} at t=1"
        ),
    )
}

fn check_site_permutation(cap: u32, tol: f64) -> CheckOutcome {
    let configs: Vec<(u32, u32)> = [(2u32, 2u32), (1, 3)]
        .into_iter()
        .filter(|&(nf, nn)| 2 * nf + nn <= cap)
        .collect();
    if configs.is_empty() {
        return outcome(
            "site-permutation-symmetry",
            true,
            "no configuration fits the qubit cap; nothing to run".into(),
        );
    }
    let mut worst = 0.0f64;
    for &(nf, nn) in &configs {
        let cfg = EnsembleConfig::new(nf, nn);
        let run = |offset: u32| {
            let rho = initial_excitation_state(cfg, ExcitationCase::CommonSite, offset, cap)?;
            evolve_state(&rho, 1.5, 1500)
        };
        match (run(0), run(nn - 1)) {
            (Ok(first), Ok(last)) => {
                let reduced_gap = partial_trace_c(&first).max_abs_diff(&partial_trace_c(&last));
                worst = worst.max(reduced_gap);
                match (state_negativity(&first), state_negativity(&last)) {
                    (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
                    (Err(e), _) | (_, Err(e)) => {
                        return outcome(
                            "site-permutation-symmetry",
                            false,
                            format!("negativity failed: {e}"),
                        )
                    }
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                return outcome(
                    "site-permutation-symmetry",
                    false,
                    format!("evolution failed: {e}"),
                )
            }
        }
    }
    tol_outcome(
        "site-permutation-symmetry",
        worst,
        tol,
        &format!(
            "{} configs; first vs last shared site excited, reduced states and negativity",
            configs.len()
        ),
    )
}

fn check_steady_state_distinction(cap: u32) -> CheckOutcome {
    if 5 > cap {
        return outcome(
            "steady-state-case-distinction",
            true,
            "no configuration fits the qubit cap; nothing to run".into(),
        );
    }
    let cfg = EnsembleConfig::new(2, 1);
    let settle = |case: ExcitationCase| {
        let rho = initial_excitation_state(cfg, case, 0, cap)?;
        let mid = evolve_state(&rho, 6.0, 6000)?;
        evolve_state(&mid, 44.0, 8800)
    };
    match (
        settle(ExcitationCase::CommonSite),
        settle(ExcitationCase::SideSite),
    ) {
        (Ok(common), Ok(side)) => {
            let distance = common.frobenius_distance(&side);
            outcome(
                "steady-state-case-distinction",
                distance > 1e-3,
                format!(
                    "long-time states at N=2, n=1 are {distance:.3e} apart \
                     (threshold 1e-3; the stationary state depends on the initial site)"
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(
            "steady-state-case-distinction",
            false,
            format!("evolution failed: {e}"),
        ),
    }
}

fn run_verify_checks(cap: u32, tol: Option<f64>) -> Vec<CheckOutcome> {
    let t = |default: f64| tol.unwrap_or(default);
    vec![
        check_ode_residual(t(1e-6)),
        check_closed_vs_rk4(t(1e-8)),
        check_trace_identities(t(1e-12)),
        check_reduced_psd(t(1e-10)),
        check_oracle_agreement(cap, t(1e-7)),
        check_subspace_leakage(cap, t(1e-9)),
        check_block_vs_dense(t(1e-10)),
        check_monotonicity_argmax(),
        check_stationary_coincidence(t(1e-10)),
        check_site_permutation(cap, t(1e-12)),
        check_steady_state_distinction(cap),
    ]
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    if args.cap > DEFAULT_ORACLE_CAP {
        return Err(Failure::Usage(format!(
            "--max-total-qubits is limited to {DEFAULT_ORACLE_CAP}"
        )));
    }
    if let Some(tol) = args.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Failure::Usage(format!(
                "--tol must be a positive finite number, got {tol}"
            )));
        }
    }
    let outcomes = run_verify_checks(args.cap, args.tol);
    let mut passed = 0usize;
    for check in &outcomes {
        let status = if check.passed { "pass" } else { "FAIL" };
        println!("{status} {:<32} {}", check.name, check.detail);
        if check.passed {
            passed += 1;
        }
    }
    println!("verification: {passed}/{} checks passed", outcomes.len());
    if passed == outcomes.len() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} of {} checks failed",
            outcomes.len() - passed,
            outcomes.len()
        )))
    }
}
