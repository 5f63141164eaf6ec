//! `qesa`: run analyzer experiments and emit JSON/CSV results.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 a `--check`
//! found results that disagree with the expected physics.

mod config;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use config::ConfigFile;
use qesa::applications::{self, Protocol};
use qesa::emitter::{self, DelayConfig, Outcome};
use qesa::esa::{self, AuxFamily, AuxSpec, DetectionPattern, EnumerationMode, EnumerationOptions};
use qesa::interferometer::{decompose, qft_matrix};
use qesa::{schmidt_rank, FockState, Qudit};

/// Full enumeration beyond this many patterns needs `--force`.
const PATTERN_GUARD: u128 = 20_000_000;
/// Dimension ceiling; `QESA_MAX_DIM` overrides it.
const DEFAULT_MAX_DIM: usize = applications::DEFAULT_MAX_DIM;

#[derive(Parser, Debug)]
#[command(name = "qesa", version, about = "Linear-optics entangled-state analyzer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Flat key = value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json or csv (csv only for sweep).
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker-thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Check tolerance, within [1e-15, 1e-6].
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Allow full enumeration beyond 2e7 patterns.
    #[arg(long, global = true)]
    force: bool,
    /// Assert invariants; exit 3 on mismatch.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Args, Debug, Clone, Default)]
struct Proto {
    #[arg(long)]
    dim: Option<usize>,
    /// rotated_pairs, shifted:<i> or explicit:<spec.json>.
    #[arg(long)]
    family: Option<String>,
    /// full, symmetry or auto.
    #[arg(long)]
    mode: Option<String>,
    /// Include the per-pattern table.
    #[arg(long)]
    table: bool,
    /// Success probability `--check` compares against (default 2/d²).
    #[arg(long)]
    expect: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entanglement swapping through the analyzer.
    Swap(Proto),
    /// Teleport a qudit (random from --seed unless --basis is given).
    Teleport {
        #[command(flatten)]
        proto: Proto,
        #[arg(long)]
        basis: Option<usize>,
    },
    /// A single detection pattern on the swap input.
    Esa {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        family: Option<String>,
        /// Comma-separated detector per time-bin.
        #[arg(long)]
        pattern: Option<String>,
    },
    /// Simulate the emitter protocol.
    AuxGen {
        #[arg(long)]
        dim: Option<usize>,
        /// plus, minus, or a comma list per control qubit.
        #[arg(long)]
        outcome: Option<String>,
        /// Write the schedule log as JSON lines.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Build an auxiliary state directly.
    AuxBuild {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        family: Option<String>,
    },
    /// Beam-splitter netlist of the QFT.
    Decompose {
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Success probability across dimensions.
    Sweep {
        /// Comma-separated even dimensions.
        #[arg(long)]
        dims: Option<String>,
        /// swap or teleport.
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        mode: Option<String>,
        /// Plot data (d, p, 2/d²); defaults to <out>.plot when --out is set.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Quick end-to-end checks.
    Selftest,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Mismatch(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Mismatch(_) => 3,
        }
    }

    fn report(&self) -> Value {
        let (kind, msg) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Mismatch(m) => ("check_failed", m),
            Failure::Runtime(m) => ("runtime", m),
        };
        json!({ "error": kind, "message": msg })
    }
}

impl From<qesa::Error> for Failure {
    fn from(e: qesa::Error) -> Self {
        match e {
            qesa::Error::UnsupportedDimension { .. }
            | qesa::Error::TooLarge { .. }
            | qesa::Error::Pattern(_)
            | qesa::Error::Constraint(_)
            | qesa::Error::NotNormalized { .. } => Failure::Usage(e.to_string()),
            qesa::Error::NonUniformPatterns { .. } => Failure::Mismatch(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Res<T> = Result<T, Failure>;

/// Flag, then config file, then default.
struct Settings {
    file: ConfigFile,
    common: Common,
}

impl Settings {
    fn pick<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Res<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key).map_err(Failure::Usage),
        }
    }

    fn seed(&self) -> Res<u64> {
        Ok(self.pick(self.common.seed, "seed")?.unwrap_or(0))
    }

    fn tol(&self) -> Res<f64> {
        let tol = self.pick(self.common.tol, "tol")?.unwrap_or(1e-9);
        if !(1e-15..=1e-6).contains(&tol) {
            return Err(Failure::Usage(format!("--tol {tol:e} outside [1e-15, 1e-6]")));
        }
        Ok(tol)
    }

    fn force(&self) -> Res<bool> {
        Ok(self.common.force || self.file.flag("force").map_err(Failure::Usage)?)
    }

    fn check(&self) -> Res<bool> {
        Ok(self.common.check || self.file.flag("check").map_err(Failure::Usage)?)
    }

    fn format(&self) -> Res<String> {
        let f = self
            .pick(self.common.format.clone(), "format")?
            .unwrap_or_else(|| "json".into());
        match f.as_str() {
            "json" | "csv" => Ok(f),
            _ => Err(Failure::Usage(format!("unknown format '{f}' (json or csv)"))),
        }
    }

    fn out(&self) -> Res<Option<PathBuf>> {
        self.pick(self.common.out.clone(), "out")
    }

    fn dim(&self, flag: Option<usize>, default: usize) -> Res<usize> {
        Ok(self.pick(flag, "dim")?.unwrap_or(default))
    }

    fn family(&self, flag: Option<String>) -> Res<AuxFamily> {
        let s = self.pick(flag, "family")?.unwrap_or_else(|| "rotated_pairs".into());
        parse_family(&s)
    }

    fn mode(&self, flag: Option<String>, d: usize) -> Res<EnumerationMode> {
        let s = self.pick(flag, "mode")?.unwrap_or_else(|| "auto".into());
        let mode = match s.as_str() {
            "full" | "full_enumeration" => EnumerationMode::Full,
            "symmetry" | "single_pattern_times_symmetry" => EnumerationMode::Symmetry,
            "auto" => {
                if DetectionPattern::count(d) <= 1_000_000 {
                    EnumerationMode::Full
                } else {
                    EnumerationMode::Symmetry
                }
            }
            _ => return Err(Failure::Usage(format!("unknown mode '{s}' (full, symmetry, auto)"))),
        };
        if mode == EnumerationMode::Full && DetectionPattern::count(d) > PATTERN_GUARD && !self.force()? {
            return Err(Failure::Usage(format!(
                "full enumeration at d={d} visits {} patterns (> {PATTERN_GUARD}); use --mode symmetry or --force",
                DetectionPattern::count(d)
            )));
        }
        Ok(mode)
    }
}

fn max_dim() -> Res<usize> {
    match std::env::var("QESA_MAX_DIM") {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::Usage(format!("QESA_MAX_DIM='{v}' is not an integer"))),
        Err(_) => Ok(DEFAULT_MAX_DIM),
    }
}

/// Even, at least `min`, and within the dimension ceiling.
fn check_dim(d: usize, min: usize) -> Res<()> {
    if d < min || d % 2 == 1 {
        return Err(Failure::Usage(format!("dimension must be even and ≥ {min}, got {d}")));
    }
    let max = max_dim()?;
    if d > max {
        return Err(Failure::Usage(format!(
            "d={d} exceeds the maximum {max} ({} detection patterns); raise QESA_MAX_DIM to allow it",
            DetectionPattern::count(d)
        )));
    }
    Ok(())
}

fn parse_family(s: &str) -> Res<AuxFamily> {
    if s == "rotated_pairs" {
        return Ok(AuxFamily::RotatedPairs);
    }
    if let Some(i) = s.strip_prefix("shifted:") {
        let i = i
            .parse()
            .map_err(|_| Failure::Usage(format!("bad shift in '{s}'")))?;
        return Ok(AuxFamily::Shifted(i));
    }
    if let Some(path) = s.strip_prefix("explicit:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {path}: {e}")))?;
        let spec: AuxSpec = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
        return Ok(AuxFamily::Explicit(spec));
    }
    Err(Failure::Usage(format!(
        "unknown family '{s}' (rotated_pairs, shifted:<i>, explicit:<file>)"
    )))
}

fn parse_outcomes(s: &str) -> Res<Vec<Outcome>> {
    s.split(',')
        .map(|p| match p.trim() {
            "plus" | "+" => Ok(Outcome::Plus),
            "minus" | "-" => Ok(Outcome::Minus),
            o => Err(Failure::Usage(format!("unknown outcome '{o}' (plus or minus)"))),
        })
        .collect()
}

fn expect(ok: bool, what: impl FnOnce() -> String) -> Res<()> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Mismatch(what()))
    }
}

fn emit(settings: &Settings, text: &str) -> Res<()> {
    match settings.out()? {
        Some(p) => std::fs::write(&p, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(settings: &Settings, v: &Value) -> Res<()> {
    if settings.format()? == "csv" {
        return Err(Failure::Usage("csv output is only available for sweep".into()));
    }
    emit(settings, &(serde_json::to_string_pretty(v).expect("json values serialize") + "\n"))
}

fn run_swap(s: &Settings, p: Proto) -> Res<()> {
    let d = s.dim(p.dim, 4)?;
    check_dim(d, 2)?;
    let family = s.family(p.family)?;
    let mode = s.mode(p.mode, d)?;
    let aux = esa::build_aux::<f64>(d, &family)?;
    let opts = EnumerationOptions {
        mode,
        seed: s.seed()?,
        keep_table: p.table || s.file.flag("table").map_err(Failure::Usage)?,
        family: Some(family.name()),
        ..Default::default()
    };
    let r = applications::entanglement_swap_with(&aux, &opts)?;
    emit_json(s, &r.to_json())?;
    if s.check()? {
        let tol = s.tol()?;
        let want = p.expect.unwrap_or(r.expected);
        expect((r.total_success - want).abs() <= tol, || {
            format!("total success {} differs from the expected {want}", r.total_success)
        })?;
        expect(r.fidelity_min >= 1.0 - tol, || {
            format!("corrected fidelity drops to {}", r.fidelity_min)
        })?;
    }
    Ok(())
}

fn run_teleport(s: &Settings, p: Proto, basis: Option<usize>) -> Res<()> {
    let d = s.dim(p.dim, 4)?;
    check_dim(d, 2)?;
    let family = s.family(p.family)?;
    let mode = s.mode(p.mode, d)?;
    let input = match s.pick(basis, "basis")? {
        Some(k) if k < d => Qudit::basis(d, k),
        Some(k) => return Err(Failure::Usage(format!("basis state {k} outside 0..{d}"))),
        None => Qudit::random(d, &mut ChaCha8Rng::seed_from_u64(s.seed()?)),
    };
    let r = applications::teleport(d, &input, &family, mode)?;
    emit_json(s, &r.to_json())?;
    if s.check()? {
        let tol = s.tol()?;
        let want = p.expect.unwrap_or(2.0 / (d * d) as f64);
        expect((r.total_success - want).abs() <= tol, || {
            format!("teleportation success {} differs from the expected {want}", r.total_success)
        })?;
        expect(r.corrected_fidelity >= 1.0 - tol, || {
            format!("teleported fidelity drops to {}", r.corrected_fidelity)
        })?;
    }
    Ok(())
}

fn run_esa(s: &Settings, dim: Option<usize>, family: Option<String>, pattern: Option<String>) -> Res<()> {
    let d = s.dim(dim, 4)?;
    check_dim(d, 2)?;
    let family = s.family(family)?;
    let pattern = match s.pick(pattern, "pattern")? {
        Some(p) => DetectionPattern::parse(d, &p)?,
        None => DetectionPattern::all_zero(d),
    };
    let aux = esa::build_aux::<f64>(d, &family)?;
    let input = applications::swap_input::<f64>(d)?;
    let an = esa::Analyzer::new(&input, &aux, esa::Recovery::PhaseOnly, None)?;
    let o = an.evaluate(&pattern)?;
    let corr = esa::correction_from_projection(&o.projection)?;
    let diag: Vec<[f64; 2]> = (0..d).map(|k| {
        let c = corr.get(k, k);
        [c.re, c.im]
    }).collect();
    let v = json!({
        "d": d,
        "family": family.name(),
        "pattern": pattern.detectors(),
        "probability": o.probability,
        "expected": 2.0 / ((d * d) as f64 * DetectionPattern::count(d) as f64),
        "fidelity": o.fidelity,
        "projection": o.projection.to_json(),
        "output": o.output.to_json(),
        "corrected": o.corrected.to_json(),
        "correction_diagonal": diag,
    });
    emit_json(s, &v)?;
    if s.check()? {
        let tol = s.tol()?;
        let want = 2.0 / ((d * d) as f64 * DetectionPattern::count(d) as f64);
        expect((o.probability - want).abs() <= tol * want, || {
            format!("pattern probability {} differs from {want}", o.probability)
        })?;
        expect(o.projection.len() == d, || format!("projection has {} terms, expected {d}", o.projection.len()))?;
        expect(o.fidelity >= 1.0 - tol, || format!("corrected fidelity {}", o.fidelity))?;
    }
    Ok(())
}

fn run_aux_gen(s: &Settings, dim: Option<usize>, outcome: Option<String>, schedule: Option<PathBuf>) -> Res<()> {
    let d = s.dim(dim, 4)?;
    check_dim(d, 4)?;
    let outcomes = match s.pick(outcome, "outcome")? {
        Some(o) => parse_outcomes(&o)?,
        None => vec![Outcome::Plus],
    };
    let run = if d == 4 {
        // the dedicated four-excitation sequence, spin as the register
        let [o] = outcomes[..] else {
            return Err(Failure::Usage("d=4 takes a single outcome".into()));
        };
        emitter::generate_d4::<f64>(o)?
    } else {
        emitter::generate::<f64>(d, &outcomes)?
    };
    let report = emitter::verify_schedule(d, &DelayConfig::aligned(d));
    let reference = esa::build_aux::<f64>(d, &AuxFamily::RotatedPairs)?;
    let fid = qesa::fidelity(&run.state, &reference)?;
    let v = json!({
        "d": d,
        "outcomes": run.outcomes,
        "outcome_probability": run.outcome_probability,
        "state": run.state.to_json(),
        "switch_count": run.switch_count,
        "control_qubits": run.control_qubits,
        "fidelity_with_rotated_pairs": fid,
        "sign_normalized_fidelity": sign_normalized(&run.state, &reference),
        "relabels": run.relabels,
        "schedule_check": report,
    });
    if let Some(path) = s.pick(schedule, "schedule")? {
        std::fs::write(&path, run.schedule_jsonl())
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    emit_json(s, &v)?;
    if s.check()? {
        let tol = s.tol()?;
        expect(report.passed, || format!("schedule check failed: {:?}", report.violations))?;
        let aligned = sign_normalized(&run.state, &reference);
        expect((aligned - 1.0).abs() <= tol, || format!("sign-normalized fidelity {aligned}"))?;
        expect(run.switch_count == emitter::switch_count(d), || "switch count".into())?;
    }
    Ok(())
}

/// Fidelity after flipping each term to the reference's phase.
fn sign_normalized(state: &FockState, reference: &FockState) -> f64 {
    let flipped = FockState::from_terms(
        state.dim(),
        state.spatial_count(),
        state.iter().map(|(c, a)| (c.clone(), qesa::Complex64::new(a.norm(), 0.0))),
    )
    .expect("same space");
    qesa::fidelity(&flipped, reference).unwrap_or(0.0)
}

fn run_aux_build(s: &Settings, dim: Option<usize>, family: Option<String>) -> Res<()> {
    let d = s.dim(dim, 4)?;
    check_dim(d, 2)?;
    let family = s.family(family)?;
    let spec = AuxSpec::from_family(d, &family)?;
    let state: FockState = spec.to_state();
    let rank = if d >= 4 {
        Some(schmidt_rank(&state, &BTreeSet::from([0]))?)
    } else {
        None
    };
    let v = json!({
        "d": d,
        "family": family.name(),
        "spec": spec,
        "state": state.to_json(),
        "schmidt_rank_x0_rest": rank,
    });
    emit_json(s, &v)?;
    if s.check()? {
        spec.validate().map_err(|e| Failure::Mismatch(e.to_string()))?;
        if let Some(r) = rank {
            expect(r == d / 2, || format!("Schmidt rank {r}, expected {}", d / 2))?;
        }
        expect(state.is_normalized(), || "state not normalized".into())?;
    }
    Ok(())
}

fn run_decompose(s: &Settings, dim: Option<usize>) -> Res<()> {
    let d = s.dim(dim, 4)?;
    if d < 2 {
        return Err(Failure::Usage(format!("dimension must be ≥ 2, got {d}")));
    }
    let u = qft_matrix::<f64>(d)?;
    let net = decompose(&u)?;
    let v = net.to_json(&u);
    emit_json(s, &v)?;
    if s.check()? {
        let err = v["reconstruction_error"].as_f64().unwrap_or(f64::INFINITY);
        expect(err < 1e-10, || format!("reconstruction error {err:e}"))?;
        if d == 4 {
            expect(net.beam_splitter_count() == 4, || {
                format!("{} beam splitters, expected 4", net.beam_splitter_count())
            })?;
        }
    }
    Ok(())
}

fn run_sweep(
    s: &Settings,
    dims: Option<String>,
    protocol: Option<String>,
    family: Option<String>,
    mode: Option<String>,
    plot: Option<PathBuf>,
) -> Res<()> {
    let dims_s = s.pick(dims, "dims")?.unwrap_or_else(|| "2,4,6".into());
    let dims: Vec<usize> = if dims_s.trim().is_empty() {
        Vec::new()
    } else {
        dims_s
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| Failure::Usage(format!("bad dimension '{p}'"))))
            .collect::<Res<_>>()?
    };
    for &d in &dims {
        check_dim(d, 2)?;
    }
    let protocol = match s.pick(protocol, "protocol")?.as_deref().unwrap_or("swap") {
        "swap" => Protocol::Swap,
        "teleport" => Protocol::Teleport,
        p => return Err(Failure::Usage(format!("unknown protocol '{p}' (swap or teleport)"))),
    };
    let family = s.family(family)?;
    let mode_s: Option<String> = s.pick(mode, "mode")?;
    // one mode for the whole sweep unless auto
    let mut rows = Vec::new();
    for &d in &dims {
        let m = s.mode(mode_s.clone(), d)?;
        rows.extend(applications::sweep(&[d], protocol, &family, m, max_dim()?)?);
    }
    let text = if s.format()? == "csv" {
        applications::sweep_csv(&rows)
    } else {
        serde_json::to_string_pretty(&json!({ "protocol": protocol, "family": family.name(), "rows": rows }))
            .expect("json values serialize")
            + "\n"
    };
    emit(s, &text)?;
    let plot = match s.pick(plot, "plot")? {
        Some(p) => Some(p),
        None => s.out()?.map(|o| {
            let mut p = o.into_os_string();
            p.push(".plot");
            PathBuf::from(p)
        }),
    };
    if let Some(path) = plot {
        let mut data = String::from("# d\tp\t2/d^2\n");
        for r in &rows {
            data.push_str(&format!("{}\t{:.17e}\t{:.17e}\n", r.d, r.p_success, r.expected));
        }
        std::fs::write(&path, data)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    if s.check()? {
        let tol = s.tol()?;
        for r in &rows {
            expect(r.abs_error <= tol, || {
                format!("d={}: p={} deviates from 2/d² by {:e}", r.d, r.p_success, r.abs_error)
            })?;
        }
    }
    Ok(())
}

fn run_selftest(s: &Settings) -> Res<()> {
    let mut results = Vec::new();
    let mut failed = Vec::new();
    let mut record = |name: &str, ok: bool, detail: String| {
        results.push(json!({ "check": name, "passed": ok, "detail": detail }));
        if !ok {
            failed.push(name.to_string());
        }
    };

    let swap = applications::entanglement_swap::<f64>(4, &AuxFamily::RotatedPairs, EnumerationMode::Full)?;
    record(
        "swap_d4_total",
        (swap.total_success - 0.125).abs() < 1e-12,
        format!("{}", swap.total_success),
    );
    let p0 = swap.protocol.reference.probability;
    record(
        "swap_d4_single_pattern",
        (p0 - 1.0 / 2048.0).abs() < 1e-12 / 2048.0,
        format!("{p0}"),
    );
    record(
        "swap_d4_fidelity",
        swap.fidelity_min >= 1.0 - 1e-9,
        format!("{}", swap.fidelity_min),
    );
    let q = Qudit::random(4, &mut ChaCha8Rng::seed_from_u64(s.seed()?));
    let tel = applications::teleport(4, &q, &AuxFamily::RotatedPairs, EnumerationMode::Full)?;
    record(
        "teleport_d4",
        (tel.total_success - 0.125).abs() < 1e-12 && tel.corrected_fidelity >= 1.0 - 1e-9,
        format!("p={} F={}", tel.total_success, tel.corrected_fidelity),
    );
    let u = qft_matrix::<f64>(4)?;
    let net = decompose(&u)?;
    let err = net.reconstruct().global_phase_to(&u, 1e-10).is_some();
    record(
        "decompose_d4",
        net.beam_splitter_count() == 4 && err,
        format!("{} beam splitters", net.beam_splitter_count()),
    );
    for d in [4, 6, 8] {
        let run = emitter::generate::<f64>(d, &[])?;
        let aux = esa::build_aux::<f64>(d, &AuxFamily::RotatedPairs)?;
        let f = qesa::fidelity(&run.state, &aux)?;
        record(&format!("emitter_d{d}"), (f - 1.0).abs() < 1e-12, format!("{f}"));
    }
    let v = json!({ "passed": failed.is_empty(), "checks": results });
    emit_json(s, &v)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!("selftest failed: {}", failed.join(", "))))
    }
}

fn run(cli: Cli) -> Res<()> {
    let file = match &cli.common.config {
        Some(p) => ConfigFile::load(p).map_err(Failure::Usage)?,
        None => ConfigFile::default(),
    };
    let settings = Settings {
        file,
        common: cli.common.clone(),
    };
    settings.tol()?;
    settings.format()?;
    if let Some(n) = settings.pick(settings.common.threads, "threads")? {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Swap(p) => run_swap(&settings, p),
        Command::Teleport { proto, basis } => run_teleport(&settings, proto, basis),
        Command::Esa { dim, family, pattern } => run_esa(&settings, dim, family, pattern),
        Command::AuxGen { dim, outcome, schedule } => run_aux_gen(&settings, dim, outcome, schedule),
        Command::AuxBuild { dim, family } => run_aux_build(&settings, dim, family),
        Command::Decompose { dim } => run_decompose(&settings, dim),
        Command::Sweep { dims, protocol, family, mode, plot } => {
            run_sweep(&settings, dims, protocol, family, mode, plot)
        }
        Command::Selftest => run_selftest(&settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.report());
            ExitCode::from(f.code())
        }
    }
}
