//! Command-line front end.
//!
//! Inputs are files in the formats of [`crate::io`] or shorthands:
//!
//! * spaces: `interval<N>` (with its standard lattice), `gaussian<N>` (with
//!   `--extent`), `haircomb` (with `--teeth`, `--alpha`, `--resolution`);
//! * weights: `constant`, `power:<beta>` (`t^beta` cell averages on an
//!   interval), `h:<alpha>` (the haircomb profile on an interval), `haircomb`.
//!
//! Every report starts with a `[manifest]` record naming the command, inputs
//! and parameters. Exit codes: 0 success, 1 data or validation failure,
//! 2 usage error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::examples::{
    gaussian_line_space, haircomb_nondoubling_report, haircomb_space, haircomb_weight, per_tooth_dyadic_rh,
    per_tooth_table, power_log_weight, tooth_family, unit_interval_space, Discretization, HaircombSpec, Profile,
    ToothFamily,
};
use crate::gehring::{
    certify, corollary41_mode, doubling_weight_ball_mode, empirical_epsilon, q_grid, BallModeOutcome, Mode,
    ParentConditionOutcome,
};
use crate::growth::{Classifier, GrowthTable};
use crate::io::{
    certificate_record, fmt_f64, format_lattice, format_space, format_tree, format_weight, parse_lattice, parse_space,
    parse_weight, read_text, report_record, tree_mass_csv, write_atomic, Record,
};
use crate::lattice::{
    build_adjacent_lattices, build_lattice, build_lattice_auto, parent_doubling_constant, verify_lattice,
    DyadicLattice, LatticeViolation,
};
use crate::space::{estimate_geometric_doubling, estimate_kappa0, estimate_kappa1, FiniteSpace, Sampling};
use crate::stopping::{decay_over_lattice, good_bad_decomposition, stopping_tree_with, CubeMeans};
use crate::weights::{
    ainfty_fujii_wilson, ap_characteristic, c1_parent_condition, doubling_ball, doubling_dyadic, dyadic_depth_table,
    rh_characteristic, weak_rh_characteristic, BallFamily, CharacteristicReport, ClassId, Family, Weight,
};

pub const OUT_ENV: &str = "DYADIC_GEHRING_OUT";

#[derive(Debug, Parser)]
#[command(name = "dyadic-gehring", version, about = "Dyadic cubes, weight classes and Gehring certificates")]
pub struct Cli {
    /// Directory for reports and CSV series.
    #[arg(long, global = true, env = OUT_ENV, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    #[command(subcommand)]
    Space(SpaceCmd),
    #[command(subcommand)]
    Lattice(LatticeCmd),
    #[command(subcommand)]
    Weight(WeightCmd),
    #[command(subcommand)]
    Stopping(StoppingCmd),
    #[command(subcommand)]
    Gehring(GehringCmd),
    #[command(subcommand)]
    Example(ExampleCmd),
}

#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    /// Space file or shorthand.
    #[arg(long)]
    pub space: String,
    #[arg(long, default_value_t = 3.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 8)]
    pub teeth: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub resolution: f64,
}

#[derive(Debug, Clone, Args)]
pub struct LatticeArgs {
    /// Lattice file; built from `--delta`/`--seed` when absent (the standard
    /// lattice for `interval<N>`).
    #[arg(long)]
    pub lattice: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// Weight file or shorthand.
    #[arg(long)]
    pub weight: String,
}

#[derive(Debug, Subcommand)]
pub enum SpaceCmd {
    /// Check the space axioms.
    Validate(SpaceArgs),
    /// Estimate the quasi-triangle and doubling constants.
    Kappa {
        #[command(flatten)]
        space: SpaceArgs,
        /// Random triples for the quasi-triangle constant (exhaustive below 200 points).
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        /// Use every `stride`-th point as a center.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum LatticeCmd {
    Build {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Levels `k_min:k_max`; chosen from the space when absent.
        #[arg(long)]
        levels: Option<String>,
    },
    Verify {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        lattice: PathBuf,
    },
    /// Several lattices with independent seeds.
    Adjacent {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// First seed; lattice `i` uses `seed + i`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    /// Every cube of the lattice.
    Dyadic,
    /// Every point with a geometric radius grid.
    Balls,
    /// Per-tooth ball families of a haircomb; reports one value per tooth.
    Teeth,
}

#[derive(Debug, Clone, Args)]
pub struct ClassArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub weight: WeightArgs,
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, value_enum, default_value = "dyadic")]
    pub family: FamilyKind,
    /// Haircomb record written by `example haircomb`, for `--family teeth` on a space file.
    #[arg(long)]
    pub haircomb: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum WeightCmd {
    /// Reverse Hölder characteristic (weak when `--sigma` is given, balls only).
    Rh {
        #[command(flatten)]
        args: ClassArgs,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        sigma: Option<f64>,
    },
    Ap {
        #[command(flatten)]
        args: ClassArgs,
        #[arg(long)]
        p: f64,
    },
    /// Fujii–Wilson characteristic over a ball family.
    Ainf {
        #[command(flatten)]
        args: ClassArgs,
    },
    Doubling {
        #[command(flatten)]
        args: ClassArgs,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
    },
    /// Parent condition constant `C1`.
    C1 {
        #[command(flatten)]
        args: ClassArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct StoppingArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub weight: WeightArgs,
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Subcommand)]
pub enum StoppingCmd {
    Tree {
        #[command(flatten)]
        args: StoppingArgs,
        /// Root cube; the first coarsest cube when absent.
        #[arg(long)]
        cube: Option<usize>,
        #[arg(long, default_value_t = crate::stopping::DEFAULT_MAX_GENERATIONS)]
        depth: usize,
    },
    /// Decay constant over every cube.
    Decay {
        #[command(flatten)]
        args: StoppingArgs,
    },
    Decompose {
        #[command(flatten)]
        args: StoppingArgs,
        #[arg(long)]
        cube: Option<usize>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GehringArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub weight: WeightArgs,
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub p: f64,
}

#[derive(Debug, Subcommand)]
pub enum GehringCmd {
    Certificate {
        #[command(flatten)]
        args: GehringArgs,
        /// Stopping parameter; the threshold when absent.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Depth tables of the dyadic characteristic over a grid of exponents.
    Sweep {
        #[command(flatten)]
        args: GehringArgs,
        #[arg(long = "q-grid")]
        q_grid: String,
        /// Depth window `lo:hi`; the whole lattice when absent.
        #[arg(long)]
        depth: Option<String>,
    },
    /// Certificate with the parent condition in place of measure doubling.
    Cor41 {
        #[command(flatten)]
        args: GehringArgs,
    },
    /// Ball certificate for doubling weights.
    Thm52 {
        #[command(flatten)]
        args: GehringArgs,
        #[arg(long = "q-grid")]
        q_grid: String,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        /// Number of families along the refinement axis (interval-like spaces).
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExampleCmd {
    Interval {
        #[arg(long, default_value_t = 1024)]
        n: usize,
        /// Also write a weight: `power:<beta>` or `h:<alpha>`.
        #[arg(long)]
        weight: Option<String>,
    },
    Gaussian {
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 3.0)]
        extent: f64,
    },
    Haircomb(HaircombArgs),
    /// Per-tooth `w(B_j)`, `w(2B_j)` table, optionally with a per-tooth `RH_p` table.
    HaircombReport {
        #[command(flatten)]
        comb: HaircombArgs,
        #[arg(long)]
        p: Option<f64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct HaircombArgs {
    #[arg(long, default_value_t = 8)]
    pub teeth: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub resolution: f64,
}

impl HaircombArgs {
    fn spec(&self) -> Result<HaircombSpec> {
        HaircombSpec::new(self.teeth, self.alpha, self.resolution)
    }
}

/// What was run, with which inputs and parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub params: BTreeMap<String, String>,
    pub out: PathBuf,
    pub version: String,
}

impl RunManifest {
    fn new(command: &str, out: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            out: out.to_path_buf(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }

    fn input(&mut self, s: impl Into<String>) -> &mut Self {
        self.inputs.push(s.into());
        self
    }

    fn param(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.params.insert(k.to_string(), v.to_string());
        self
    }

    pub fn record(&self) -> Record {
        let mut r = Record::new("manifest");
        r.push("command", &self.command)
            .push("inputs", if self.inputs.is_empty() { "-".to_string() } else { self.inputs.join(",") })
            .push("out", self.out.display())
            .push("version", &self.version);
        for (k, v) in &self.params {
            r.push(format!("param.{k}"), v);
        }
        r
    }
}

/// Parses arguments, runs, prints errors and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::InvalidSpace { reason } = &e {
                eprintln!("witness: {reason}");
            }
            match e {
                Error::Argument(_) => 2,
                _ => 1,
            }
        }
    }
}

/// `Ok(false)` is a completed run whose check failed.
fn execute(cli: &Cli) -> Result<bool> {
    let out = &cli.out;
    match &cli.command {
        Command::Space(c) => space_cmd(c, out),
        Command::Lattice(c) => lattice_cmd(c, out),
        Command::Weight(c) => weight_cmd(c, out),
        Command::Stopping(c) => stopping_cmd(c, out),
        Command::Gehring(c) => gehring_cmd(c, out),
        Command::Example(c) => example_cmd(c, out),
    }
}

/// A loaded space with what the shorthand knows about it.
struct Loaded {
    space: FiniteSpace,
    lattice: Option<DyadicLattice>,
    haircomb: Option<HaircombSpec>,
    /// Cells of a unit-interval shorthand.
    interval: Option<usize>,
}

fn load_space(a: &SpaceArgs) -> Result<Loaded> {
    let s = a.space.as_str();
    if let Some(n) = s.strip_prefix("interval") {
        let n: usize = n.parse().map_err(|_| Error::arg(format!("bad interval size in {s:?}")))?;
        let (space, lattice) = unit_interval_space(n)?;
        return Ok(Loaded { space, lattice: Some(lattice), haircomb: None, interval: Some(n) });
    }
    if let Some(n) = s.strip_prefix("gaussian") {
        let n: usize = n.parse().map_err(|_| Error::arg(format!("bad point count in {s:?}")))?;
        return Ok(Loaded { space: gaussian_line_space(n, a.extent)?, lattice: None, haircomb: None, interval: None });
    }
    if s == "haircomb" {
        let spec = HaircombSpec::new(a.teeth, a.alpha, a.resolution)?;
        let space = haircomb_space(&spec)?;
        return Ok(Loaded { space, lattice: None, haircomb: Some(spec), interval: None });
    }
    let space = parse_space(&read_text(Path::new(s))?)?;
    Ok(Loaded { space, lattice: None, haircomb: None, interval: None })
}

fn load_weight(spec: &str, loaded: &Loaded) -> Result<Weight> {
    let n = loaded.space.len();
    if spec == "constant" {
        return Weight::constant(n, 1.0);
    }
    if spec == "haircomb" {
        let comb = loaded.haircomb.as_ref().ok_or_else(|| Error::arg("the haircomb weight needs --space haircomb"))?;
        return haircomb_weight(&loaded.space, comb);
    }
    let profile = if let Some(b) = spec.strip_prefix("power:") {
        Some(Profile::power(b.parse().map_err(|_| Error::arg(format!("bad exponent in {spec:?}")))?)?)
    } else if let Some(a) = spec.strip_prefix("h:") {
        Some(Profile::haircomb_h(a.parse().map_err(|_| Error::arg(format!("bad alpha in {spec:?}")))?)?)
    } else {
        None
    };
    match profile {
        Some(p) => {
            let cells = loaded.interval.ok_or_else(|| Error::arg(format!("{spec:?} needs an interval<N> space")))?;
            power_log_weight(cells, p, Discretization::CellAverage)
        }
        None => parse_weight(&read_text(Path::new(spec))?, n),
    }
}

fn load_lattice(a: &LatticeArgs, loaded: &Loaded) -> Result<DyadicLattice> {
    if let Some(path) = &a.lattice {
        return parse_lattice(&read_text(path)?, &loaded.space);
    }
    if let Some(l) = &loaded.lattice {
        return Ok(l.clone());
    }
    build_lattice_auto(&loaded.space, a.delta, a.seed)
}

fn parse_range(s: &str) -> Result<(i32, i32)> {
    let (a, b) = s.split_once(':').ok_or_else(|| Error::arg(format!("expected lo:hi, got {s:?}")))?;
    let lo = a.trim().parse().map_err(|_| Error::arg(format!("bad range {s:?}")))?;
    let hi = b.trim().parse().map_err(|_| Error::arg(format!("bad range {s:?}")))?;
    Ok((lo, hi))
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::arg(format!("expected a:b:step, got {s:?}")));
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse().map_err(|_| Error::arg(format!("bad grid {s:?}"))))
        .collect::<Result<_>>()?;
    q_grid(v[0], v[1], v[2])
}

fn space_manifest(m: &mut RunManifest, a: &SpaceArgs) {
    m.input(&a.space);
    if a.space == "haircomb" {
        m.param("teeth", a.teeth).param("alpha", fmt_f64(a.alpha)).param("resolution", fmt_f64(a.resolution));
    }
    if a.space.starts_with("gaussian") {
        m.param("extent", fmt_f64(a.extent));
    }
}

fn lattice_manifest(m: &mut RunManifest, a: &LatticeArgs, space: &str) {
    match &a.lattice {
        Some(p) => {
            m.input(p.display().to_string());
        }
        None if space.starts_with("interval") => {
            m.param("lattice", "standard");
        }
        None => {
            m.param("delta", fmt_f64(a.delta)).param("seed", a.seed);
        }
    }
}

fn emit(out: &Path, name: &str, manifest: &RunManifest, records: &[Record]) -> Result<()> {
    let mut text = manifest.record().to_string();
    for r in records {
        text.push('\n');
        text.push_str(&r.to_string());
    }
    write_atomic(&out.join(name), &text)
}

fn emit_csv(out: &Path, name: &str, csv: &str) -> Result<()> {
    write_atomic(&out.join(name), csv)
}

fn space_cmd(c: &SpaceCmd, out: &Path) -> Result<bool> {
    match c {
        SpaceCmd::Validate(a) => {
            let loaded = load_space(a)?;
            let s = &loaded.space;
            println!(
                "valid space: {} points, dim {}, metric {}, total mass {}",
                s.len(),
                s.dim(),
                s.metric().tag(),
                fmt_f64(s.total_mass())
            );
            Ok(true)
        }
        SpaceCmd::Kappa { space: a, samples, stride, seed } => {
            if *stride == 0 {
                return Err(Error::arg("stride must be positive"));
            }
            let loaded = load_space(a)?;
            let s = &loaded.space;
            let sampling =
                if s.len() < 200 { Sampling::Exhaustive } else { Sampling::Random { samples: *samples, seed: *seed } };
            let k0 = estimate_kappa0(s, sampling)?;
            let centers: Vec<usize> = (0..s.len()).step_by(*stride).collect();
            let radii = s.radius_grid(std::f64::consts::SQRT_2)?;
            let k1 = estimate_kappa1(s, &radii, &centers)?;
            let m = estimate_geometric_doubling(s, &centers, &s.radius_grid(2.0)?)?;
            let mut manifest = RunManifest::new("space kappa", out);
            space_manifest(&mut manifest, a);
            manifest.param("samples", samples).param("stride", stride).param("seed", seed);
            let mut r = Record::new("doubling");
            r.push_f64("kappa0", k0)
                .push_f64("kappa1", k1.value)
                .push("kappa1_witness", format!("{:?}", k1.witness))
                .push("kappa1_evaluated", k1.evaluated)
                .push("geometric_m", m);
            emit(out, "space-kappa.txt", &manifest, &[r])?;
            println!("kappa0 = {}  kappa1 = {}  M = {m}", fmt_f64(k0), fmt_f64(k1.value));
            Ok(true)
        }
    }
}

fn violation_text(v: &LatticeViolation) -> String {
    format!("{v:?}")
}

fn lattice_cmd(c: &LatticeCmd, out: &Path) -> Result<bool> {
    match c {
        LatticeCmd::Build { space: a, delta, seed, levels } => {
            let loaded = load_space(a)?;
            let lat = match levels {
                Some(l) => {
                    let (lo, hi) = parse_range(l)?;
                    build_lattice(&loaded.space, *delta, lo, hi, *seed)?
                }
                None => build_lattice_auto(&loaded.space, *delta, *seed)?,
            };
            write_atomic(&out.join("lattice.txt"), &format_lattice(&lat))?;
            let rep = verify_lattice(&lat, &loaded.space);
            println!(
                "{} cubes on levels {}..{}; r0 = {}, R0 = {}, D = {}",
                lat.len(),
                lat.k_min(),
                lat.k_max(),
                fmt_f64(lat.r0()),
                fmt_f64(lat.big_r0()),
                fmt_f64(parent_doubling_constant(&lat).0)
            );
            Ok(rep.passed())
        }
        LatticeCmd::Verify { space: a, lattice } => {
            let loaded = load_space(a)?;
            let lat = parse_lattice(&read_text(lattice)?, &loaded.space)?;
            let rep = verify_lattice(&lat, &loaded.space);
            let mut manifest = RunManifest::new("lattice verify", out);
            space_manifest(&mut manifest, a);
            manifest.input(lattice.display().to_string());
            let mut r = Record::new("lattice-check");
            r.push("partition_ok", rep.partition_ok)
                .push("nesting_ok", rep.nesting_ok)
                .push("sandwich_ok", rep.sandwich_ok)
                .push_f64("r0", rep.r0)
                .push_f64("R0", rep.big_r0)
                .push_f64("mass_defect", rep.mass_defect)
                .push("witness", rep.witness.as_ref().map_or("-".to_string(), violation_text));
            emit(out, "lattice-verify.txt", &manifest, &[r])?;
            println!("partition {} nesting {} sandwich {}", rep.partition_ok, rep.nesting_ok, rep.sandwich_ok);
            if let Some(w) = &rep.witness {
                println!("witness: {}", violation_text(w));
            }
            Ok(rep.passed())
        }
        LatticeCmd::Adjacent { space: a, delta, count, seed } => {
            let loaded = load_space(a)?;
            let seeds: Vec<u64> = (0..*count as u64).map(|i| seed + i).collect();
            let lats = build_adjacent_lattices(&loaded.space, *delta, *count, &seeds)?;
            for (i, l) in lats.iter().enumerate() {
                write_atomic(&out.join(format!("lattice-{i}.txt")), &format_lattice(l))?;
                println!(
                    "lattice {i}: seed {} {} cubes D = {}",
                    l.seed(),
                    l.len(),
                    fmt_f64(parent_doubling_constant(l).0)
                );
            }
            Ok(true)
        }
    }
}

fn class_manifest(cmd: &str, out: &Path, a: &ClassArgs) -> RunManifest {
    let mut m = RunManifest::new(cmd, out);
    space_manifest(&mut m, &a.space);
    m.input(&a.weight.weight);
    if a.family == FamilyKind::Dyadic {
        lattice_manifest(&mut m, &a.lattice, &a.space.space);
    }
    m.param("family", format!("{:?}", a.family).to_lowercase());
    m
}

fn tooth_spec(a: &ClassArgs, loaded: &Loaded) -> Result<HaircombSpec> {
    if let Some(s) = &loaded.haircomb {
        return Ok(s.clone());
    }
    let path = a.haircomb.as_ref().ok_or_else(|| Error::arg("--family teeth needs --space haircomb or --haircomb"))?;
    let records = Record::parse_all(&read_text(path)?)?;
    let r = records.iter().find(|r| r.kind == "haircomb").ok_or_else(|| Error::arg("no [haircomb] record"))?;
    let field = |k: &str| r.get_f64(k).ok_or_else(|| Error::arg(format!("haircomb record lacks {k}")));
    let mut spec = HaircombSpec::new(field("teeth")? as usize, field("alpha")?, field("resolution")?)?;
    spec.a_extent = field("a_extent")?;
    if let Some(eps) = r.get("eps") {
        spec.eps = eps
            .split(',')
            .map(|e| e.parse().map_err(|_| Error::arg(format!("bad eps {e:?}"))))
            .collect::<Result<_>>()?;
    }
    spec.validate()?;
    Ok(spec)
}

/// Evaluates a characteristic on the chosen family. Tooth families give a
/// per-tooth table instead of a single report.
fn class_run(
    cmd: &str,
    a: &ClassArgs,
    out: &Path,
    exponent: Option<f64>,
    manifest_extra: &[(&str, String)],
    f: impl Fn(&Weight, &FiniteSpace, &Family) -> Result<CharacteristicReport> + Sync,
    depth_class: Option<ClassId>,
) -> Result<bool> {
    let loaded = load_space(&a.space)?;
    let w = load_weight(&a.weight.weight, &loaded)?;
    let mut manifest = class_manifest(cmd, out, a);
    for (k, v) in manifest_extra {
        manifest.param(k, v);
    }
    let stem = cmd.replace(' ', "-");
    match a.family {
        FamilyKind::Teeth => {
            let spec = tooth_spec(a, &loaded)?;
            let table = per_tooth_table(&loaded.space, &spec, ToothFamily::default(), |fam| {
                Ok(f(&w, &loaded.space, &Family::Balls(fam))?.value)
            })?;
            let classifier = Classifier::IncrementTrend { power: exponent.unwrap_or(1.0) };
            let growth = classifier.classify(&table);
            let mut r = Record::new("per-tooth");
            r.push("growth", growth).push("rows", table.rows.len());
            emit(out, &format!("{stem}.txt"), &manifest, &[r])?;
            emit_csv(out, &format!("{stem}-teeth.csv"), &table.to_csv("tooth", "value"))?;
            for (j, v) in &table.rows {
                println!("tooth {j}: {}", fmt_f64(*v));
            }
            println!("per-tooth table: {growth}");
            Ok(true)
        }
        FamilyKind::Balls => {
            let balls = BallFamily::all(&loaded.space)?;
            let rep = f(&w, &loaded.space, &Family::Balls(&balls))?;
            emit(out, &format!("{stem}.txt"), &manifest, &[report_record(&rep)])?;
            print_report(&rep);
            Ok(true)
        }
        FamilyKind::Dyadic => {
            let lat = load_lattice(&a.lattice, &loaded)?;
            let rep = f(&w, &loaded.space, &Family::dyadic(&lat))?;
            emit(out, &format!("{stem}.txt"), &manifest, &[report_record(&rep)])?;
            if let (Some(class), Some(p)) = (depth_class, exponent) {
                let table = dyadic_depth_table(&w, &loaded.space, &lat, class, p)?;
                emit_csv(out, &format!("{stem}-depth.csv"), &table.to_csv("depth", "value"))?;
            }
            print_report(&rep);
            Ok(true)
        }
    }
}

fn print_report(rep: &CharacteristicReport) {
    println!(
        "{} (exponent {}) = {}  witness {}  family {}",
        rep.class,
        fmt_f64(rep.exponent),
        fmt_f64(rep.value),
        rep.witness.map_or("-".to_string(), |w| w.to_string()),
        rep.family_size
    );
}

fn balls_of<'a>(family: &'a Family) -> Result<&'a BallFamily> {
    match family {
        Family::Balls(b) => Ok(b),
        Family::Cubes { .. } => Err(Error::arg("this characteristic needs --family balls or teeth")),
    }
}

fn weight_cmd(c: &WeightCmd, out: &Path) -> Result<bool> {
    match c {
        WeightCmd::Rh { args, p, sigma } => {
            let extra = vec![("p", fmt_f64(*p)), ("sigma", sigma.map_or("-".into(), fmt_f64))];
            match sigma {
                Some(s) => class_run(
                    "weight rh",
                    args,
                    out,
                    Some(*p),
                    &extra,
                    |w, sp, fam| weak_rh_characteristic(w, sp, balls_of(fam)?, *p, *s),
                    None,
                ),
                None => class_run(
                    "weight rh",
                    args,
                    out,
                    Some(*p),
                    &extra,
                    |w, sp, fam| rh_characteristic(w, sp, fam, *p),
                    Some(ClassId::RhDyadic),
                ),
            }
        }
        WeightCmd::Ap { args, p } => class_run(
            "weight ap",
            args,
            out,
            Some(*p),
            &[("p", fmt_f64(*p))],
            |w, sp, fam| ap_characteristic(w, sp, fam, *p),
            Some(ClassId::Ap),
        ),
        WeightCmd::Ainf { args } => class_run(
            "weight ainf",
            args,
            out,
            None,
            &[],
            |w, sp, fam| ainfty_fujii_wilson(w, sp, balls_of(fam)?),
            None,
        ),
        WeightCmd::Doubling { args, sigma } => {
            if args.family == FamilyKind::Dyadic {
                let loaded = load_space(&args.space)?;
                let w = load_weight(&args.weight.weight, &loaded)?;
                let lat = load_lattice(&args.lattice, &loaded)?;
                let rep = doubling_dyadic(&w, &loaded.space, &lat)?;
                let manifest = class_manifest("weight doubling", out, args);
                emit(out, "weight-doubling.txt", &manifest, &[report_record(&rep)])?;
                print_report(&rep);
                return Ok(true);
            }
            class_run(
                "weight doubling",
                args,
                out,
                None,
                &[("sigma", fmt_f64(*sigma))],
                |w, sp, fam| doubling_ball(w, sp, balls_of(fam)?, *sigma),
                None,
            )
        }
        WeightCmd::C1 { args } => {
            let loaded = load_space(&args.space)?;
            let w = load_weight(&args.weight.weight, &loaded)?;
            let lat = load_lattice(&args.lattice, &loaded)?;
            let rep = c1_parent_condition(&w, &loaded.space, &lat)?;
            let manifest = class_manifest("weight c1", out, args);
            emit(out, "weight-c1.txt", &manifest, &[report_record(&rep)])?;
            print_report(&rep);
            Ok(true)
        }
    }
}

struct Prepared {
    loaded: Loaded,
    weight: Weight,
    lattice: DyadicLattice,
}

fn prepare(space: &SpaceArgs, weight: &WeightArgs, lattice: &LatticeArgs) -> Result<Prepared> {
    let loaded = load_space(space)?;
    let weight = load_weight(&weight.weight, &loaded)?;
    let lattice = load_lattice(lattice, &loaded)?;
    Ok(Prepared { loaded, weight, lattice })
}

fn stopping_manifest(cmd: &str, out: &Path, a: &StoppingArgs) -> RunManifest {
    let mut m = RunManifest::new(cmd, out);
    space_manifest(&mut m, &a.space);
    m.input(&a.weight.weight);
    lattice_manifest(&mut m, &a.lattice, &a.space.space);
    m.param("lambda", fmt_f64(a.lambda));
    m
}

fn stopping_cmd(c: &StoppingCmd, out: &Path) -> Result<bool> {
    match c {
        StoppingCmd::Tree { args, cube, depth } => {
            let pr = prepare(&args.space, &args.weight, &args.lattice)?;
            let root = cube.unwrap_or(pr.lattice.roots()[0]);
            if root >= pr.lattice.len() {
                return Err(Error::arg(format!("no cube {root}")));
            }
            let means = CubeMeans::new(&pr.lattice, &pr.loaded.space, &pr.weight)?;
            let tree = stopping_tree_with(&pr.lattice, &means, root, args.lambda, *depth)?;
            let c = crate::stopping::decay_constant(&tree, &means);
            let mut manifest = stopping_manifest("stopping tree", out, args);
            manifest.param("cube", root).param("depth", depth);
            let mut text = manifest.record().to_string();
            text.push('\n');
            text.push_str(&format_tree(&tree, &means, c));
            write_atomic(&out.join("stopping-tree.txt"), &text)?;
            emit_csv(out, "stopping-tree-mass.csv", &tree_mass_csv(&tree, &means))?;
            println!(
                "root {root}: {} generations, {} nodes, c = {}{}",
                tree.depth(),
                tree.nodes.len(),
                fmt_f64(c),
                if tree.truncated { " (truncated)" } else { "" }
            );
            Ok(true)
        }
        StoppingCmd::Decay { args } => {
            let pr = prepare(&args.space, &args.weight, &args.lattice)?;
            let means = CubeMeans::new(&pr.lattice, &pr.loaded.space, &pr.weight)?;
            let (c, witness) = decay_over_lattice(&pr.lattice, &means, args.lambda)?;
            let manifest = stopping_manifest("stopping decay", out, args);
            let mut r = Record::new("decay");
            r.push_f64("c_measured", c).push("witness", witness.map_or("-".to_string(), |q| format!("cube:{q}")));
            emit(out, "stopping-decay.txt", &manifest, &[r])?;
            println!("c = {} over {} cubes", fmt_f64(c), pr.lattice.len());
            Ok(c < 1.0)
        }
        StoppingCmd::Decompose { args, cube } => {
            let pr = prepare(&args.space, &args.weight, &args.lattice)?;
            let q = cube.unwrap_or(pr.lattice.roots()[0]);
            if q >= pr.lattice.len() {
                return Err(Error::arg(format!("no cube {q}")));
            }
            let d = good_bad_decomposition(&pr.lattice, &pr.loaded.space, &pr.weight, q, args.lambda)?;
            let mut manifest = stopping_manifest("stopping decompose", out, args);
            manifest.param("cube", q);
            let mut r = Record::new("decomposition");
            r.push("cube", q)
                .push("high_cubes", d.high.len())
                .push("low_cubes", d.low.len())
                .push("good_points", d.good.len())
                .push_f64("mass_Q", d.mass_q)
                .push_f64("mass_high", d.mass_high)
                .push_f64("mass_low", d.mass_low)
                .push_f64("mass_good", d.mass_good)
                .push_f64("w_Q", d.w_q)
                .push_f64("w_high", d.w_high)
                .push_f64("w_low", d.w_low)
                .push_f64("w_good", d.w_good)
                .push("good_is_small", d.good_is_small)
                .push("good_third", d.good_third.map_or("-".to_string(), |b| b.to_string()))
                .push("low_third", d.low_third);
            emit(out, "stopping-decompose.txt", &manifest, &[r])?;
            println!(
                "cube {q}: {} high, {} low, {} good points; mass {} = {} + {} + {}",
                d.high.len(),
                d.low.len(),
                d.good.len(),
                fmt_f64(d.mass_q),
                fmt_f64(d.mass_high),
                fmt_f64(d.mass_low),
                fmt_f64(d.mass_good)
            );
            Ok(true)
        }
    }
}

fn gehring_manifest(cmd: &str, out: &Path, a: &GehringArgs) -> RunManifest {
    let mut m = RunManifest::new(cmd, out);
    space_manifest(&mut m, &a.space);
    m.input(&a.weight.weight);
    lattice_manifest(&mut m, &a.lattice, &a.space.space);
    m.param("p", fmt_f64(a.p));
    m
}

fn print_certificate(r: &Record) {
    for key in ["p", "D", "lambda", "c", "a", "epsilon", "A", "char_bound", "remark_holds"] {
        if let Some(v) = r.get(key) {
            println!("{key:>12} = {v}");
        }
    }
}

fn gehring_cmd(c: &GehringCmd, out: &Path) -> Result<bool> {
    match c {
        GehringCmd::Certificate { args, lambda } => {
            let pr = prepare(&args.space, &args.weight, &args.lattice)?;
            let run = certify(&pr.weight, &pr.loaded.space, &pr.lattice, args.p, *lambda, Mode::Standard)?;
            let mut manifest = gehring_manifest("gehring certificate", out, args);
            manifest.param("lambda", lambda.map_or("threshold".to_string(), fmt_f64));
            let cert = certificate_record(&run.certificate);
            let mut measured = report_record(&run.measured);
            measured.kind = "measured".into();
            measured.push("sound", run.sound());
            emit(out, "gehring-certificate.txt", &manifest, &[cert.clone(), measured])?;
            print_certificate(&cert);
            println!("measured RH_(p+eps) = {}  sound = {}", fmt_f64(run.measured.value), run.sound());
            Ok(run.sound())
        }
        GehringCmd::Sweep { args, q_grid: grid, depth } => {
            let pr = prepare(&args.space, &args.weight, &args.lattice)?;
            let grid = parse_grid(grid)?;
            let depths = match depth {
                Some(d) => parse_range(d)?,
                None => (pr.lattice.k_min(), pr.lattice.k_max()),
            };
            let rep = empirical_epsilon(&pr.weight, &pr.loaded.space, &pr.lattice, args.p, &grid, depths, None)?;
            let mut manifest = gehring_manifest("gehring sweep", out, args);
            manifest.param("q_grid", grid.iter().map(|q| fmt_f64(*q)).collect::<Vec<_>>().join(","));
            manifest.param("depth", format!("{}:{}", depths.0, depths.1));
            let mut r = Record::new("sweep");
            r.push("base", rep.base).push("p_plus_eps", rep.p_plus_eps.map_or("-".to_string(), fmt_f64));
            for row in &rep.rows {
                r.push(format!("q={}", fmt_f64(row.q)), row.growth);
            }
            emit(out, "gehring-sweep.txt", &manifest, &[r])?;
            let mut csv = String::from("q,depth,value\n");
            for row in &rep.rows {
                for (d, v) in &row.table.rows {
                    csv.push_str(&format!("{},{},{}\n", fmt_f64(row.q), fmt_f64(*d), fmt_f64(*v)));
                }
            }
            emit_csv(out, "gehring-sweep.csv", &csv)?;
            for row in &rep.rows {
                println!("q = {:<5} {}", fmt_f64(row.q), row.growth);
            }
            println!("empirical p+eps = {}", rep.p_plus_eps.map_or("-".to_string(), fmt_f64));
            Ok(true)
        }
        GehringCmd::Cor41 { args } => {
            let pr = prepare(&args.space, &args.weight, &args.lattice)?;
            let outcome = corollary41_mode(&pr.weight, &pr.loaded.space, &pr.lattice, args.p)?;
            let manifest = gehring_manifest("gehring cor41", out, args);
            match outcome {
                ParentConditionOutcome::Certified { c1, run } => {
                    let cert = certificate_record(&run.certificate);
                    let mut measured = report_record(&run.measured);
                    measured.kind = "measured".into();
                    measured.push("sound", run.sound());
                    emit(out, "gehring-cor41.txt", &manifest, &[report_record(&c1), cert.clone(), measured])?;
                    println!("C1 = {}", fmt_f64(c1.value));
                    print_certificate(&cert);
                    Ok(run.sound())
                }
                ParentConditionOutcome::Refused { c1, table, reason } => {
                    let mut r = Record::new("refused");
                    r.push("reason", &reason).push("witness", c1.witness.map_or("-".to_string(), |w| w.to_string()));
                    emit(out, "gehring-cor41.txt", &manifest, &[report_record(&c1), r])?;
                    emit_csv(out, "gehring-cor41-c1.csv", &table.to_csv("depth", "value"))?;
                    println!("refused: {reason}");
                    Ok(false)
                }
            }
        }
        GehringCmd::Thm52 { args, q_grid: grid, sigma, depth } => {
            let loaded = load_space(&args.space)?;
            let w = load_weight(&args.weight.weight, &loaded)?;
            let grid = parse_grid(grid)?;
            let families = thm52_families(&loaded, *depth)?;
            let outcome =
                doubling_weight_ball_mode(&w, &loaded.space, &families, &grid, *sigma, Classifier::DEFAULT_THRESHOLDS)?;
            let mut manifest = RunManifest::new("gehring thm52", out);
            space_manifest(&mut manifest, &args.space);
            manifest.input(&args.weight.weight);
            manifest.param("sigma", fmt_f64(*sigma)).param("depth", depth);
            match outcome {
                BallModeOutcome::Bound { d_w, db_table, rows } => {
                    let mut r = Record::new("ball-bound");
                    r.push_f64("D_w", d_w);
                    let mut ok = true;
                    for row in &rows {
                        ok &= row.implied >= row.measured;
                        r.push(
                            format!("q={}", fmt_f64(row.q)),
                            format!(
                                "weak={} implied={} measured={}",
                                fmt_f64(row.weak),
                                fmt_f64(row.implied),
                                fmt_f64(row.measured)
                            ),
                        );
                        println!(
                            "q = {}: implied {} >= measured {}",
                            fmt_f64(row.q),
                            fmt_f64(row.implied),
                            fmt_f64(row.measured)
                        );
                    }
                    emit(out, "gehring-thm52.txt", &manifest, &[r])?;
                    emit_csv(out, "gehring-thm52-db.csv", &db_table.to_csv("family", "value"))?;
                    Ok(ok)
                }
                BallModeOutcome::Refused { db_table, witness, family } => {
                    let mut r = Record::new("refused");
                    r.push("reason", "doubling constant diverges")
                        .push("family", family)
                        .push("witness", witness.map_or("-".to_string(), |w| w.to_string()));
                    emit(out, "gehring-thm52.txt", &manifest, &[r])?;
                    emit_csv(out, "gehring-thm52-db.csv", &db_table.to_csv("family", "value"))?;
                    println!(
                        "refused: doubling constant diverges (witness {})",
                        witness.map_or("-".to_string(), |w| w.to_string())
                    );
                    Ok(false)
                }
            }
        }
    }
}

/// Per-tooth families on a haircomb; otherwise every point with the smallest
/// radius halving from the diameter, one family per halving.
fn thm52_families(loaded: &Loaded, depth: usize) -> Result<Vec<BallFamily>> {
    if let Some(spec) = &loaded.haircomb {
        return (1..=spec.teeth).map(|j| tooth_family(&loaded.space, spec, j, ToothFamily::default())).collect();
    }
    if depth == 0 {
        return Err(Error::arg("depth must be positive"));
    }
    let diam = loaded.space.diameter();
    let centers: Vec<usize> = (0..loaded.space.len()).collect();
    (1..=depth).map(|k| BallFamily::with_range(centers.clone(), diam * 0.5f64.powi(k as i32 + 1), diam)).collect()
}

fn example_cmd(c: &ExampleCmd, out: &Path) -> Result<bool> {
    match c {
        ExampleCmd::Interval { n, weight } => {
            let (space, lat) = unit_interval_space(*n)?;
            write_atomic(&out.join("space.txt"), &format_space(&space))?;
            write_atomic(&out.join("lattice.txt"), &format_lattice(&lat))?;
            if let Some(spec) = weight {
                let loaded = Loaded { space: space.clone(), lattice: None, haircomb: None, interval: Some(*n) };
                write_atomic(&out.join("weight.txt"), &format_weight(&load_weight(spec, &loaded)?))?;
            }
            println!("interval: {n} points, {} cubes, D = {}", lat.len(), fmt_f64(parent_doubling_constant(&lat).0));
            Ok(true)
        }
        ExampleCmd::Gaussian { n, extent } => {
            let space = gaussian_line_space(*n, *extent)?;
            write_atomic(&out.join("space.txt"), &format_space(&space))?;
            println!("gaussian line: {n} points, total mass {}", fmt_f64(space.total_mass()));
            Ok(true)
        }
        ExampleCmd::Haircomb(a) => {
            let spec = a.spec()?;
            let space = haircomb_space(&spec)?;
            let w = haircomb_weight(&space, &spec)?;
            write_atomic(&out.join("space.txt"), &format_space(&space))?;
            write_atomic(&out.join("weight.txt"), &format_weight(&w))?;
            let mut manifest = RunManifest::new("example haircomb", out);
            manifest
                .param("teeth", a.teeth)
                .param("alpha", fmt_f64(a.alpha))
                .param("resolution", fmt_f64(a.resolution));
            emit(out, "haircomb.txt", &manifest, &[haircomb_record(&spec)])?;
            println!(
                "haircomb: {} teeth, {} points, total mass {}",
                spec.teeth,
                space.len(),
                fmt_f64(space.total_mass())
            );
            Ok(true)
        }
        ExampleCmd::HaircombReport { comb, p } => {
            let spec = comb.spec()?;
            let space = haircomb_space(&spec)?;
            let w = haircomb_weight(&space, &spec)?;
            let rows = haircomb_nondoubling_report(&space, &w, &spec)?;
            let mut csv = String::from("tooth,eps,w_ball,w_double,ratio\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.tooth,
                    fmt_f64(r.eps),
                    fmt_f64(r.w_ball),
                    fmt_f64(r.w_double),
                    fmt_f64(r.ratio)
                ));
                println!(
                    "tooth {}: w(B) = {:.6}  w(2B) = {:.6}  ratio = {:.3}",
                    r.tooth, r.w_ball, r.w_double, r.ratio
                );
            }
            emit_csv(out, "haircomb-report.csv", &csv)?;
            let mut manifest = RunManifest::new("example haircomb-report", out);
            manifest
                .param("teeth", comb.teeth)
                .param("alpha", fmt_f64(comb.alpha))
                .param("resolution", fmt_f64(comb.resolution));
            let mut records = vec![haircomb_record(&spec)];
            if let Some(p) = p {
                manifest.param("p", fmt_f64(*p));
                let lat = build_lattice_auto(&space, 0.5, 0)?;
                let ball = per_tooth_table(&space, &spec, ToothFamily::default(), |fam| {
                    Ok(rh_characteristic(&w, &space, &Family::Balls(fam), *p)?.value)
                })?;
                let dyadic = per_tooth_dyadic_rh(&space, &w, &spec, &lat, *p)?;
                let c = Classifier::IncrementTrend { power: *p };
                let mut r = Record::new("rh-boundary");
                r.push_f64("p", *p).push("ball", c.classify(&ball)).push("dyadic", c.classify(&dyadic));
                println!("RH_{} per tooth: ball {}, dyadic {}", fmt_f64(*p), c.classify(&ball), c.classify(&dyadic));
                records.push(r);
                emit_csv(out, "haircomb-rh.csv", &two_tables(&ball, &dyadic))?;
            }
            emit(out, "haircomb-report.txt", &manifest, &records)?;
            Ok(true)
        }
    }
}

fn two_tables(ball: &GrowthTable, dyadic: &GrowthTable) -> String {
    let mut s = String::from("tooth,ball,dyadic\n");
    for ((j, b), (_, d)) in ball.rows.iter().zip(&dyadic.rows) {
        s.push_str(&format!("{},{},{}\n", fmt_f64(*j), fmt_f64(*b), fmt_f64(*d)));
    }
    s
}

fn haircomb_record(spec: &HaircombSpec) -> Record {
    let mut r = Record::new("haircomb");
    r.push("teeth", spec.teeth)
        .push_f64("alpha", spec.alpha)
        .push_f64("resolution", spec.resolution)
        .push_f64("a_extent", spec.a_extent)
        .push("eps", spec.eps.iter().map(|e| fmt_f64(*e)).collect::<Vec<_>>().join(","));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grids_and_ranges() {
        assert_eq!(parse_grid("1.5:1.7:0.1").unwrap(), vec![1.5, 1.6, 1.7]);
        assert!(parse_grid("1.5:1.7").is_err());
        assert_eq!(parse_range("-2:5").unwrap(), (-2, 5));
    }

    #[test]
    fn manifest_is_deterministic() {
        let mut m = RunManifest::new("x", Path::new("out"));
        m.param("b", 2).param("a", 1);
        let text = m.record().to_string();
        assert!(text.find("param.a").unwrap() < text.find("param.b").unwrap());
    }
}
