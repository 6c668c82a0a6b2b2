//! Command-line front end.
//!
//! Results go to `-o PATH` when given, with a short summary on standard
//! output. Without `-o` the result itself is printed and the summary goes to
//! standard error. Droop values are read and printed in percent unless
//! `--unit fraction` is set; droop and region files carry their own unit.
//!
//! Networks are JSON files, or a bundled sample written `@two_bus`,
//! `@two_area` or `@feeder_surrogate`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplacian::{gershgorin, mu_spectrum, write_mu_csv};
use crate::linalg;
use crate::netmodel::{equivalent_network, parse_network, reduce_network, NetworkSpec, TimeConstants};
use crate::regions::{self, certify, region, Certification, RegionDocument, RegionVariant, K_MIN};
use crate::samples;
use crate::statespace::{
    assemble_full, assemble_homogeneous, spectrum, verdict, DroopConfig, DEFAULT_MARGIN,
};
use crate::twobus::{self, Grid, DEFAULT_TOL_MU};
use crate::validate::{self, bench, SamplerSpec};

#[derive(Debug, Parser)]
#[command(name = "droopstab", version, about = "Certified droop regions for inverter networks")]
struct Cli {
    /// Unit for droop values on the command line and in printed output.
    #[arg(long, value_enum, default_value_t = Unit::Percent, global = true)]
    unit: Unit,
    /// Inverter low-pass time constant in seconds (overrides the network file).
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Nominal angular frequency in rad/s (overrides the network file).
    #[arg(long, global = true)]
    omega0: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Unit {
    Percent,
    Fraction,
}

impl Unit {
    fn to_fraction(self, x: f64) -> f64 {
        match self {
            Unit::Percent => x / 100.0,
            Unit::Fraction => x,
        }
    }

    fn from_fraction(self, x: f64) -> f64 {
        match self {
            Unit::Percent => x * 100.0,
            Unit::Fraction => x,
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Unit::Percent => "%",
            Unit::Fraction => "",
        }
    }

    fn column(self) -> &'static str {
        match self {
            Unit::Percent => "percent",
            Unit::Fraction => "fraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Equal,
    Relative,
    Conservative,
}

impl From<Variant> for RegionVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Equal => RegionVariant::Equal,
            Variant::Relative => RegionVariant::Relative,
            Variant::Conservative => RegionVariant::Conservative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Full,
    Homogeneous,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file; the result is printed when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Threshold {
    /// Certification threshold; recomputed from the two-bus worst case when omitted.
    #[arg(long)]
    mu_min: Option<f64>,
}

#[derive(Debug, Args)]
struct DroopSource {
    /// Droop file (or a region file, read at its vertex with k = 0.3).
    #[arg(long, conflicts_with_all = ["m", "k"])]
    droops: Option<PathBuf>,
    /// Equal frequency droop for every inverter.
    #[arg(long, requires = "k")]
    m: Option<f64>,
    /// Ratio k = m/n used with --m.
    #[arg(long, requires = "m")]
    k: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Threshold surface mu_cr(rho, k) as CSV, with the worst case echoed as JSON.
    MuMap {
        /// rho grid as lo:hi:step.
        #[arg(long, default_value = "0.4:5:0.05")]
        rho: String,
        /// k grid as lo:hi:step.
        #[arg(long, default_value = "0.3:5:0.05")]
        k: String,
        #[arg(long, default_value_t = DEFAULT_TOL_MU)]
        tol_mu: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Worst-case threshold over rho in [0.4, 2.5], k in [0.3, 5].
    WorstCase {
        #[arg(long, default_value_t = DEFAULT_TOL_MU)]
        tol_mu: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Certified droop region of a network.
    Regions {
        network: String,
        #[arg(long, value_enum, default_value_t = Variant::Relative)]
        variant: Variant,
        /// Write CSV (id,m_max_percent) instead of JSON.
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        threshold: Threshold,
        #[command(flatten)]
        out: Output,
    },
    /// Checks droop gains against the certification threshold.
    Certify {
        network: String,
        #[command(flatten)]
        droops: DroopSource,
        /// Exit with status 1 when the droops are not certified.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        threshold: Threshold,
        #[command(flatten)]
        out: Output,
    },
    /// Eigenvalues of the full or homogeneous model as CSV (re,im,is_zero_mode).
    Spectrum {
        network: String,
        #[command(flatten)]
        droops: DroopSource,
        #[arg(long, value_enum, default_value_t = Model::Full)]
        model: Model,
        /// Also write the mu spectrum with Gershgorin bounds to this file.
        #[arg(long)]
        mu_csv: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Equal-droop stability boundary of the full model by bisection.
    Boundary {
        network: String,
        /// k range as lo:hi.
        #[arg(long, default_value = "0.3:5")]
        k: String,
        #[arg(long, default_value_t = 20)]
        k_points: usize,
        /// Lower end of the droop bracket (default: half the equal-sharing bound).
        #[arg(long)]
        m_lo: Option<f64>,
        /// Upper end of the droop bracket.
        #[arg(long)]
        m_hi: Option<f64>,
        /// Bisection tolerance on m.
        #[arg(long)]
        tol_m: Option<f64>,
        #[command(flatten)]
        threshold: Threshold,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo eigenvalue scatter of the full model.
    Montecarlo {
        network: String,
        /// Base droops; defaults to the vertex of --region.
        #[arg(long)]
        droops: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Variant::Relative)]
        region: Variant,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-line rho range lo:hi, or "off".
        #[arg(long, default_value = "0.4:2.5")]
        rho: String,
        /// Per-inverter k range lo:hi, or "off".
        #[arg(long, default_value = "0.3:5")]
        k: String,
        /// Per-inverter droop multiplier range lo:hi, or "off".
        #[arg(long, default_value = "0.5:1")]
        fraction: String,
        /// Per-load impedance magnitude range lo:hi in p.u., or "off".
        #[arg(long, default_value = "0.5:2")]
        load: String,
        /// Per-sample summary CSV (index,dominant_re,dominant_im,verdict).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        threshold: Threshold,
        #[command(flatten)]
        out: Output,
    },
    /// Per-line finite-difference derivatives of the dominant real part.
    Stationarity {
        network: String,
        /// Uniform rho (default: the worst-case rho).
        #[arg(long)]
        rho: Option<f64>,
        /// Ratio k (default: the worst-case k).
        #[arg(long)]
        k: Option<f64>,
        /// Equal droop m (default: the equal-sharing bound).
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, default_value_t = validate::stationarity::DEFAULT_STEP)]
        h: f64,
        /// Replace the network by its inverter-only Kron equivalent first.
        #[arg(long)]
        reduced: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Timing of region computation against one full-model eigensolve.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,50")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Point count of a brute-force droop grid.
    Complexity {
        #[arg(long)]
        v: u32,
        /// Mesh step in percent.
        #[arg(long)]
        epsilon: f64,
        /// Search area per inverter in percent squared.
        #[arg(long)]
        area: f64,
    },
}

/// Droop assignment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroopDocument {
    pub unit: String,
    pub inverters: Vec<DroopEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroopEntry {
    pub id: String,
    pub m: f64,
    pub n: f64,
}

fn file_unit(unit: &str) -> Result<Unit> {
    match unit {
        "percent" => Ok(Unit::Percent),
        "fraction" => Ok(Unit::Fraction),
        other => Err(Error::Schema(format!("unknown unit {other:?}"))),
    }
}

fn assign(net: &NetworkSpec, entries: Vec<(String, f64, f64)>) -> Result<DroopConfig> {
    let ids = net.inverter_ids();
    if entries.len() != ids.len() {
        return Err(Error::DimensionMismatch {
            expected: ids.len(),
            got: entries.len(),
        });
    }
    let mut m = Vec::with_capacity(ids.len());
    let mut n = Vec::with_capacity(ids.len());
    for id in &ids {
        let (_, mi, ni) = entries
            .iter()
            .find(|e| &e.0 == id)
            .ok_or_else(|| Error::Schema(format!("no droops for inverter {id:?}")))?;
        m.push(*mi);
        n.push(*ni);
    }
    DroopConfig::new(m, n)
}

/// Reads a droop file or a region file (taken at its `k = 0.3` vertex).
pub fn parse_droops(net: &NetworkSpec, text: &str) -> Result<DroopConfig> {
    if let Ok(region) = serde_json::from_str::<RegionDocument>(text) {
        let unit = file_unit(&region.unit)?;
        let entries = region
            .inverters
            .into_iter()
            .map(|e| {
                let m = unit.to_fraction(e.m_max_percent);
                (e.id, m, m / K_MIN)
            })
            .collect();
        return assign(net, entries);
    }
    let doc: DroopDocument =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let unit = file_unit(&doc.unit)?;
    let entries = doc
        .inverters
        .into_iter()
        .map(|e| (e.id, unit.to_fraction(e.m), unit.to_fraction(e.n)))
        .collect();
    assign(net, entries)
}

fn parse_floats(text: &str, count: usize, what: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != count {
        return Err(Error::InvalidParameter(format!("{what} must have {count} ':'-separated numbers, got {text:?}")));
    }
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number {p:?} in {what}")))
        })
        .collect()
}

fn parse_grid(text: &str, what: &str) -> Result<Grid> {
    let v = parse_floats(text, 3, what)?;
    Grid::from_step(v[0], v[1], v[2])
}

fn parse_range(text: &str, what: &str) -> Result<Option<(f64, f64)>> {
    if text == "off" {
        return Ok(None);
    }
    let v = parse_floats(text, 2, what)?;
    if !(v[0] <= v[1]) {
        return Err(Error::InvalidParameter(format!("{what} range is empty: {text}")));
    }
    Ok(Some((v[0], v[1])))
}

struct Ctx<'a> {
    unit: Unit,
    tau: Option<f64>,
    omega0: Option<f64>,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn constants(&self) -> Result<TimeConstants> {
        let d = TimeConstants::default();
        let c = TimeConstants {
            tau: self.tau.unwrap_or(d.tau),
            omega0: self.omega0.unwrap_or(d.omega0),
        };
        check_constants(c)?;
        Ok(c)
    }

    fn load_network(&self, source: &str) -> Result<NetworkSpec> {
        let mut net = match source.strip_prefix('@') {
            Some(name) => samples::by_name(name)
                .ok_or_else(|| Error::InvalidParameter(format!("no bundled network {name:?}")))?,
            None => parse_network(&fs::read_to_string(source)?)?,
        };
        if let Some(t) = self.tau {
            net.tau = t;
        }
        if let Some(w) = self.omega0 {
            net.omega0 = w;
        }
        check_constants(net.constants())?;
        Ok(net)
    }

    fn mu_min(&self, threshold: &Threshold, consts: TimeConstants) -> Result<f64> {
        match threshold.mu_min {
            Some(m) if m.is_finite() && m > 0.0 => Ok(m),
            Some(m) => Err(Error::InvalidParameter(format!("mu_min must be positive, got {m}"))),
            None => regions::default_mu_min(consts),
        }
    }

    fn droops(&self, net: &NetworkSpec, src: &DroopSource) -> Result<DroopConfig> {
        match (&src.droops, src.m, src.k) {
            (Some(path), _, _) => parse_droops(net, &fs::read_to_string(path)?),
            (None, Some(m), Some(k)) => DroopConfig::equal(net.inverter_count(), self.unit.to_fraction(m), k),
            _ => Err(Error::InvalidParameter("give --droops FILE or --m and --k".into())),
        }
    }

    /// Writes `content` to the output path, or prints it.
    fn emit(&mut self, out: &Output, content: &[u8], summary: &str) -> Result<()> {
        match &out.output {
            Some(path) => {
                write_file(path, content)?;
                writeln!(self.stdout, "{summary}")?;
            }
            None => {
                self.stdout.write_all(content)?;
                writeln!(self.stderr, "{summary}")?;
            }
        }
        Ok(())
    }
}

fn check_constants(c: TimeConstants) -> Result<()> {
    for (name, v) in [("tau", c.tau), ("omega0", c.omega0)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

fn write_file(path: &Path, content: &[u8]) -> Result<()> {
    fs::write(path, content)?;
    Ok(())
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("value serializes")
}

/// Exit status for an error: 2 for bad input, 1 for domain outcomes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::Json(_)
        | Error::Schema(_)
        | Error::DuplicateBus(_)
        | Error::DanglingEndpoint { .. }
        | Error::SelfLoop { .. }
        | Error::NonPositiveReactance { .. }
        | Error::NegativeResistance { .. }
        | Error::Disconnected(_)
        | Error::MissingLoad(_)
        | Error::UnexpectedLoad { .. }
        | Error::InvalidLoad { .. }
        | Error::VirtualBusPresent(_)
        | Error::NoInverters
        | Error::DimensionMismatch { .. }
        | Error::InvalidDroop(_)
        | Error::InvalidParameter(_) => 2,
        Error::Sample { source, .. } => exit_code(source),
        _ => 1,
    }
}

/// Parses `argv` (program name first) and runs one command, printing to the
/// process streams. Returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut ctx = Ctx {
        unit: cli.unit,
        tau: cli.tau,
        omega0: cli.omega0,
        stdout,
        stderr,
    };
    match dispatch(&mut ctx, cli.command) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(ctx.stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(ctx: &mut Ctx<'_>, command: Command) -> Result<i32> {
    match command {
        Command::MuMap { rho, k, tol_mu, out } => {
            let consts = ctx.constants()?;
            let surface =
                twobus::mu_cr_surface(&parse_grid(&rho, "--rho")?, &parse_grid(&k, "--k")?, consts, tol_mu)?;
            let mut buf = Vec::new();
            surface.write_csv(&mut buf)?;
            ctx.emit(&out, &buf, &json_line(&surface.worst))?;
        }
        Command::WorstCase { tol_mu, out } => {
            let w = twobus::worst_case(ctx.constants()?, tol_mu)?;
            let text = json_line(&w) + "\n";
            ctx.emit(
                &out,
                text.as_bytes(),
                &format!("mu_cr_min = {:.4} at rho = {:.3}, k = {:.3}", w.mu_cr_min, w.rho, w.k),
            )?;
        }
        Command::Regions {
            network,
            variant,
            csv,
            threshold,
            out,
        } => {
            let net = ctx.load_network(&network)?;
            let mu_min = ctx.mu_min(&threshold, net.constants())?;
            let r = region(&reduce_network(&net)?, variant.into(), mu_min)?;
            let content = if csv {
                let mut buf = Vec::new();
                r.write_csv(&mut buf)?;
                buf
            } else {
                (r.to_json() + "\n").into_bytes()
            };
            let mut summary = format!("{} region, mu_min = {:.4}, k in [{}, {}]", r.variant, mu_min, r.k_min, r.k_max);
            for (id, m) in r.inverter_ids.iter().zip(&r.m_max) {
                summary += &format!("\n  {id}: m_max = {:.4}{}", ctx.unit.from_fraction(*m), ctx.unit.suffix());
            }
            ctx.emit(&out, &content, &summary)?;
        }
        Command::Certify {
            network,
            droops,
            strict,
            threshold,
            out,
        } => {
            let net = ctx.load_network(&network)?;
            let d = ctx.droops(&net, &droops)?;
            let mu_min = ctx.mu_min(&threshold, net.constants())?;
            let c = certify(&reduce_network(&net)?, &d, mu_min)?;
            let (word, mu) = match c {
                Certification::Certified(m) => ("Certified", m),
                Certification::NotCertified(m) => ("NotCertified", m),
            };
            let text = format!("{{\"result\":\"{word}\",\"mu_max\":{mu},\"mu_min\":{mu_min}}}\n");
            ctx.emit(&out, text.as_bytes(), &format!("{word} (mu_v = {mu:.6}, threshold {mu_min:.6})"))?;
            if strict && !c.is_certified() {
                return Ok(1);
            }
        }
        Command::Spectrum {
            network,
            droops,
            model,
            mu_csv,
            out,
        } => {
            let net = ctx.load_network(&network)?;
            let d = ctx.droops(&net, &droops)?;
            let sm = match model {
                Model::Full => assemble_full(&crate::netmodel::reduce_virtual_buses(&net)?, &d)?,
                Model::Homogeneous => assemble_homogeneous(&reduce_network(&net)?, &d, net.constants())?,
            };
            let s = spectrum(&sm)?;
            if let Some(path) = mu_csv {
                let rn = reduce_network(&net)?;
                let mut buf = Vec::new();
                write_mu_csv(&mu_spectrum(&d, &rn)?, &gershgorin(&d, &rn)?, &mut buf)?;
                write_file(&path, &buf)?;
            }
            let mut buf = Vec::new();
            s.write_csv(&mut buf)?;
            let dom = s
                .dominant
                .map_or("none".to_string(), |z| format!("{:.6} {:+.6}i", z.re, z.im));
            let summary = format!(
                "dimension {}, {} zero modes, dominant {}, {:?}",
                sm.dim(),
                s.zero_modes,
                dom,
                verdict(&s, DEFAULT_MARGIN)
            );
            ctx.emit(&out, &buf, &summary)?;
        }
        Command::Boundary {
            network,
            k,
            k_points,
            m_lo,
            m_hi,
            tol_m,
            threshold,
            out,
        } => {
            let net = ctx.load_network(&network)?;
            let kr = parse_floats(&k, 2, "--k")?;
            let kgrid = Grid::linspace(kr[0], kr[1], k_points)?.points();
            let mu_min = ctx.mu_min(&threshold, net.constants())?;
            let certified = regions::region_equal(&reduce_network(&net)?, mu_min)?.m_max[0];
            let lo = m_lo.map_or(0.5 * certified, |m| ctx.unit.to_fraction(m));
            let hi = m_hi.map_or(1.0, |m| ctx.unit.to_fraction(m));
            let tol = tol_m.map_or(1e-4 * certified, |t| ctx.unit.to_fraction(t));
            let points = validate::true_boundary(&net, &kgrid, (lo, hi), tol)?;
            let mut text = format!("k,m_{}\n", ctx.unit.column());
            for p in &points {
                text += &format!("{},{}\n", p.k, ctx.unit.from_fraction(p.m));
            }
            let inner = points.iter().all(|p| p.m >= certified);
            let lowest = points.iter().map(|p| p.m).fold(f64::INFINITY, f64::min);
            let summary = format!(
                "certified m_max = {:.4}{u}, lowest boundary = {:.4}{u}, certified region inside: {}",
                ctx.unit.from_fraction(certified),
                ctx.unit.from_fraction(lowest),
                inner,
                u = ctx.unit.suffix()
            );
            ctx.emit(&out, text.as_bytes(), &summary)?;
        }
        Command::Montecarlo {
            network,
            droops,
            region: variant,
            count,
            seed,
            rho,
            k,
            fraction,
            load,
            summary,
            threshold,
            out,
        } => {
            let net = ctx.load_network(&network)?;
            let base = match droops {
                Some(path) => parse_droops(&net, &fs::read_to_string(path)?)?,
                None => {
                    let mu_min = ctx.mu_min(&threshold, net.constants())?;
                    region(&reduce_network(&net)?, variant.into(), mu_min)?.vertex(1.0)?
                }
            };
            let spec = SamplerSpec {
                line_rho: parse_range(&rho, "--rho")?,
                inverter_k: parse_range(&k, "--k")?,
                droop_fraction: parse_range(&fraction, "--fraction")?,
                load_magnitude: parse_range(&load, "--load")?,
            };
            let report = validate::monte_carlo(&net, &base, &spec, count, seed, DEFAULT_MARGIN)?;
            if let Some(path) = summary {
                let mut buf = Vec::new();
                report.write_summary_csv(&mut buf)?;
                write_file(&path, &buf)?;
            }
            let mut buf = Vec::new();
            report.write_scatter_csv(&mut buf)?;
            let text = format!(
                "{} samples, seed {}, {} unstable, rightmost dominant real part {:.6}",
                count,
                seed,
                report.violated,
                report.worst_re()
            );
            ctx.emit(&out, &buf, &text)?;
        }
        Command::Stationarity {
            network,
            rho,
            k,
            m,
            h,
            reduced,
            out,
        } => {
            let net = ctx.load_network(&network)?;
            let consts = net.constants();
            let worst = match (rho, k) {
                (Some(r), Some(kk)) => twobus::WorstCase {
                    rho: r,
                    k: kk,
                    mu_cr_min: f64::NAN,
                },
                _ => twobus::worst_case(consts, DEFAULT_TOL_MU)?,
            };
            let (rho, k) = (rho.unwrap_or(worst.rho), k.unwrap_or(worst.k));
            let rn = reduce_network(&net)?;
            let net = if reduced { equivalent_network(&rn, rho, consts)? } else { net };
            let m = match m {
                Some(m) => ctx.unit.to_fraction(m),
                None => {
                    regions::default_mu_min(consts)? / linalg::symmetric_max_eigenvalue(&rn.scaled)
                }
            };
            let d = DroopConfig::equal(net.inverter_count(), m, k)?;
            let report = validate::stationarity_check(&net, &d, rho, h)?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            let mut summary = format!(
                "rho = {rho:.4}, k = {k:.3}, max |dRe/drho_j| = {:.4e}, uniform = {:.4e}",
                report.max_abs_per_line(),
                report.uniform
            );
            if report.has_noise_warning() {
                summary += &format!(
                    "\nwarning: lines {:?} changed by less than {:e}; step h is below the noise floor",
                    report.noisy_lines,
                    validate::stationarity::NOISE_FLOOR
                );
            }
            ctx.emit(&out, text.as_bytes(), &summary)?;
        }
        Command::Bench {
            sizes,
            repetitions,
            seed,
            out,
        } => {
            let rows = validate::benchmark(&sizes, repetitions, seed)?;
            let mut buf = Vec::new();
            bench::write_csv(&rows, &mut buf)?;
            let exp = |op| bench::growth_exponent(&rows, op).map_or("n/a".into(), |e| format!("{e:.2}"));
            let summary = format!(
                "growth exponent: {} {}, {} {}",
                bench::OP_REGION,
                exp(bench::OP_REGION),
                bench::OP_EIGEN,
                exp(bench::OP_EIGEN)
            );
            ctx.emit(&out, &buf, &summary)?;
        }
        Command::Complexity { v, epsilon, area } => {
            let c = validate::complexity(v, epsilon, area)?;
            writeln!(ctx.stdout, "{}", json_line(&c))?;
            writeln!(ctx.stderr, "N_p = 10^{:.2}", c.log10_points)?;
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv: Vec<&str> = std::iter::once("droopstab").chain(args.iter().copied()).collect();
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_and_unknown_flags() {
        assert_eq!(run_capture(&["--help"]).0, 0);
        assert_eq!(run_capture(&["regions", "--bogus"]).0, 2);
        assert_eq!(run_capture(&[]).0, 2);
    }

    #[test]
    fn unreadable_file_is_an_input_error() {
        let (code, _, err) = run_capture(&["regions", "/nonexistent/net.json", "--mu-min", "0.826"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn complexity_prints_json() {
        let (code, out, _) = run_capture(&["complexity", "--v", "1", "--epsilon", "0.5", "--area", "100"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"points\":400"));
    }

    #[test]
    fn region_file_reads_back_as_droops() {
        let net = samples::two_area();
        let r = regions::region_relative(&reduce_network(&net).unwrap(), 0.826).unwrap();
        let d = parse_droops(&net, &r.to_json()).unwrap();
        assert!((d.m[0] / d.n[0] - K_MIN).abs() < 1e-12);
        assert!(certify(&reduce_network(&net).unwrap(), &d, 0.826).unwrap().is_certified());
    }

    #[test]
    fn droop_file_units() {
        let net = samples::two_bus();
        let text = r#"{"unit":"percent","inverters":[{"id":"B","m":2.0,"n":1.0},{"id":"A","m":1.0,"n":1.0}]}"#;
        let d = parse_droops(&net, text).unwrap();
        assert_eq!(d.m, vec![0.01, 0.02]);
        let bad = r#"{"unit":"permille","inverters":[]}"#;
        assert!(matches!(parse_droops(&net, bad), Err(Error::Schema(_))));
    }

    #[test]
    fn grid_and_range_parsing() {
        assert_eq!(parse_grid("0.4:5:0.05", "x").unwrap().n, 93);
        assert!(parse_grid("0.4:5", "x").is_err());
        assert_eq!(parse_range("off", "x").unwrap(), None);
        assert_eq!(parse_range("1:2", "x").unwrap(), Some((1.0, 2.0)));
        assert!(parse_range("2:1", "x").is_err());
    }
}
