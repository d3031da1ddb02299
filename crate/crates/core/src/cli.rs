//! Fan files, the `toric-ek` command line and report serialization.
//!
//! A fan file is a JSON object
//!
//! ```json
//! {"dim": 2, "rays": [[1, 0], [0, 1], [-1, -1]], "max_cones": [[0, 1], [0, 2], [1, 2]], "name": "P2"}
//! ```
//!
//! where `max_cones` and `name` are optional. Without `max_cones` the cones
//! are inferred from the convex hull of the rays.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analytic::DEFAULT_SEED;
use crate::catalog::{enumerate_smooth_fano_surfaces, family_fan, named_fan, surface_name, FamilySpec};
use crate::certify::{certify_batch, certify_with, CertifyOptions, Mode};
use crate::error::{Error, Result};
use crate::fan::{build_fan, validate_smooth_fano, Fan};
use crate::lattice::LatticeVector;
use crate::polytope::polytope_from_fan;
use crate::symmetry::{fan_automorphisms, is_symmetric};

/// Serializers for exact rationals and rounded floats.
pub mod ser {
    use num_rational::BigRational;
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    use crate::lattice::RationalVector;

    /// Always `"p/q"`, including `"0/1"` and `"3/1"`.
    pub fn rational_string(q: &BigRational) -> String {
        format!("{}/{}", q.numer(), q.denom())
    }

    pub fn rational<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_string(q))
    }

    pub fn rational_vector<S: Serializer>(v: &RationalVector, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.dim()))?;
        for c in v.coords() {
            seq.serialize_element(&rational_string(c))?;
        }
        seq.end()
    }

    pub fn rational_vectors<S: Serializer>(vs: &[RationalVector], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<Vec<String>> =
            vs.iter().map(|v| v.coords().iter().map(rational_string).collect()).collect();
        s.collect_seq(strings)
    }

    /// Rounded to 12 significant digits.
    pub fn round12(x: f64) -> f64 {
        if x.is_finite() && x != 0.0 {
            format!("{x:.11e}").parse().expect("formatted float parses")
        } else {
            x
        }
    }

    pub fn float<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(round12(*x))
    }

    pub fn floats<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|&x| round12(x)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanFile {
    pub dim: usize,
    pub rays: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cones: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl FanFile {
    pub fn from_fan(fan: &Fan, name: Option<&str>) -> Result<Self> {
        Ok(FanFile {
            dim: fan.dim(),
            rays: fan.rays().iter().map(LatticeVector::to_i64).collect::<Result<_>>()?,
            max_cones: Some(fan.max_cones().to_vec()),
            name: name.map(str::to_string),
        })
    }

    pub fn to_fan(&self) -> Result<Fan> {
        let rays = self.rays.iter().map(|r| LatticeVector::from_i64(r)).collect();
        build_fan(self.dim, rays, self.max_cones.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fan file serializes")
    }
}

/// Strict parse with positioned syntax errors, ray dimensions and cone
/// indices checked.
pub fn parse_fan_file(text: &str) -> Result<FanFile> {
    let file: FanFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    for r in &file.rays {
        if r.len() != file.dim {
            return Err(Error::DimensionMismatch { expected: file.dim, found: r.len() });
        }
    }
    for cone in file.max_cones.iter().flatten() {
        if let Some(&i) = cone.iter().find(|&&i| i >= file.rays.len()) {
            return Err(Error::IndexOutOfRange(i));
        }
    }
    Ok(file)
}

fn read_fan(path: &Path) -> Result<(FanFile, Fan)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let file = parse_fan_file(&text)?;
    let fan = file.to_fan()?;
    Ok((file, fan))
}

fn display_name(file: &FanFile, path: &Path) -> String {
    file.name.clone().unwrap_or_else(|| {
        path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
    })
}

/// Pretty JSON with object keys in sorted order.
pub fn to_sorted_json<T: Serialize>(value: &T) -> String {
    // serde_json::Value keeps keys in a BTreeMap
    let v = serde_json::to_value(value).expect("report serializes");
    serde_json::to_string_pretty(&v).expect("value serializes")
}

#[derive(Debug, Parser)]
#[command(name = "toric-ek", version, about = "Einstein-Kähler certification for symmetric smooth toric Fano manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a fan file (primitive, complete, regular, Fano).
    Check { file: PathBuf },
    /// Run the certification pipeline on a fan file.
    Certify {
        file: PathBuf,
        /// Attach numerical evidence (integral, positivity and alpha estimates).
        #[arg(long)]
        analytic: bool,
        /// Seed for the random potentials and Monte Carlo estimates.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
        /// Only check the barycenter and R(Delta), skipping the automorphism search.
        #[arg(long)]
        necessary_only: bool,
    },
    /// Print the automorphism group order and the invariant characters.
    Symmetry { file: PathBuf },
    /// Print the exact barycenter of the anticanonical polytope.
    Barycenter { file: PathBuf },
    /// Emit a family member as a fan file, e.g. `catalog S 2 1`.
    Catalog { family: String, params: Vec<usize> },
    /// Enumerate smooth toric Fano surfaces and certify each class.
    ClassifySurfaces,
    /// Certify every `.json` or `.fan` file in a directory.
    Batch {
        dir: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[arg(long)]
        analytic: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Run the command line; returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                2
            } else {
                let _ = write!(out, "{}", e.render());
                0
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    match command {
        Command::Check { file } => {
            let (_, fan) = read_fan(&file)?;
            let r = validate_smooth_fano(&fan);
            writeln!(out, "dimension {}, {} rays, {} maximal cones", fan.dim(), fan.ray_count(), fan.cone_count())
                .map_err(io)?;
            writeln!(out, "primitive: {}", r.is_primitive_ok).map_err(io)?;
            writeln!(out, "complete: {}", r.is_complete).map_err(io)?;
            writeln!(out, "regular: {}", r.is_regular).map_err(io)?;
            writeln!(out, "fano: {}", r.is_fano).map_err(io)?;
            for d in &r.diagnostics {
                writeln!(out, "  {d}").map_err(io)?;
            }
        }
        Command::Certify { file, analytic, seed, json, necessary_only } => {
            let (ff, fan) = read_fan(&file)?;
            let mode = if necessary_only { Mode::NecessaryOnly } else { Mode::Full };
            let report = certify_with(&fan, Some(&display_name(&ff, &file)), CertifyOptions { mode, analytic, seed })?;
            if json {
                writeln!(out, "{}", to_sorted_json(&report)).map_err(io)?;
            } else {
                writeln!(out, "{}", report.summary()).map_err(io)?;
            }
        }
        Command::Symmetry { file } => {
            let (_, fan) = read_fan(&file)?;
            let group = fan_automorphisms(&fan);
            let v = is_symmetric(&fan, &group);
            writeln!(out, "group order: {}", v.group_order).map_err(io)?;
            writeln!(out, "symmetric: {}", v.is_symmetric).map_err(io)?;
            for b in &v.fixed_space_basis {
                writeln!(out, "invariant character: {b}").map_err(io)?;
            }
        }
        Command::Barycenter { file } => {
            let (_, fan) = read_fan(&file)?;
            let b = polytope_from_fan(&fan)?.barycenter();
            writeln!(out, "{}", b.point).map_err(io)?;
        }
        Command::Catalog { family, params } => {
            let spec = FamilySpec::new(&family, &params)?;
            let fan = family_fan(spec)?;
            writeln!(out, "{}", FanFile::from_fan(&fan, Some(&spec.to_string()))?.to_json()).map_err(io)?;
        }
        Command::ClassifySurfaces => {
            let surfaces = enumerate_smooth_fano_surfaces();
            let mut symmetric = 0;
            writeln!(out, "{:<8} {:>5} {:>10} {:>20}  verdict", "class", "rays", "symmetric", "barycenter")
                .map_err(io)?;
            for fan in &surfaces {
                let name = surface_name(fan).unwrap_or("?");
                // report on the standard representative of the class
                let rep = named_fan(name).unwrap_or_else(|| fan.clone());
                let r = certify_with(&rep, Some(name), CertifyOptions::default())?;
                let sym = r.symmetric.as_ref().is_some_and(|s| s.is_symmetric);
                symmetric += usize::from(sym);
                let bary = r.barycenter.as_ref().map_or_else(String::new, |b| b.point.to_string());
                writeln!(out, "{:<8} {:>5} {:>10} {:>20}  {}", name, r.ray_count, sym, bary, r.verdict)
                    .map_err(io)?;
            }
            writeln!(out, "{} classes, {} symmetric", surfaces.len(), symmetric).map_err(io)?;
        }
        Command::Batch { dir, jobs, analytic, seed, json } => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json" || x == "fan"))
                .collect();
            paths.sort();
            let mut failed = false;
            let mut fans = Vec::new();
            let mut errors = Vec::new();
            for p in &paths {
                match read_fan(p) {
                    Ok((ff, fan)) => fans.push((display_name(&ff, p), fan)),
                    Err(e) => {
                        failed = true;
                        errors.push(format!("{}: error: {e}", p.display()));
                    }
                }
            }
            let options = CertifyOptions { mode: Mode::Full, analytic, seed };
            let reports = certify_batch(&fans, options, jobs)?;
            let mut ok = Vec::new();
            for (r, (name, _)) in reports.into_iter().zip(&fans) {
                match r {
                    Ok(r) => ok.push(r),
                    Err(e) => {
                        failed = true;
                        errors.push(format!("{name}: error: {e}"));
                    }
                }
            }
            if json {
                writeln!(out, "{}", to_sorted_json(&ok)).map_err(io)?;
            } else {
                for r in &ok {
                    writeln!(out, "{}: {}", r.name.as_deref().unwrap_or("?"), r.verdict).map_err(io)?;
                }
            }
            for e in &errors {
                writeln!(out, "{e}").map_err(io)?;
            }
            return Ok(if failed { 2 } else { 0 });
        }
    }
    Ok(0)
}
