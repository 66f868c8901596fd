//! Command-line surface of the `hyperpair` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::genericity::GENERICITY_TOL;
use crate::gram::{conjugacy_test, CONJUGACY_TOL};
use crate::invariants::invariants_of;
use crate::io::{generate_pair, read_json, to_json, write_json};
use crate::pair::{Mode, Pair};
use crate::space::{Field, HMatrix, HermitianSpace};
use crate::spectral::{classify_element, eigen_frame, ElementKind};
use crate::twistbend::{assemble_surface_representation, tilde_invariants, twist_bend_element, GluingGraph, PantsGroup, TwistBendParams};

#[derive(Debug, Parser)]
#[command(name = "hyperpair", version, about = "Conjugacy invariants of loxodromic pairs in SU(n,1) and Sp(n,1)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Hyperbolic dimension.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, value_parser = parse_field)]
    pub field: Option<Field>,
    /// Tolerance override for the command's main test.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "strong", value_parser = parse_mode)]
    pub mode: Mode,
    /// Input files; `conjugacy-test` takes two.
    #[arg(long = "in", global = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Invariant tuple of a pair.
    Invariants,
    /// Decide whether two pairs are conjugate and build the conjugator.
    ConjugacyTest,
    /// Classify a single isometry.
    Classify,
    /// Seeded random generic pair.
    Generate,
    /// Twist-bend element and twisted invariants for a pants group.
    TwistBend,
    /// Surface-group representation from pants groups and a gluing graph.
    Assemble,
}

fn parse_field(s: &str) -> std::result::Result<Field, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A single isometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementFile {
    pub space: HermitianSpace,
    pub matrix: HMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistBendJob {
    pub space: HermitianSpace,
    pub a: HMatrix,
    pub b: HMatrix,
    pub kappa: TwistBendParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssembleJob {
    pub pants: Vec<Pair>,
    pub graph: GluingGraph,
}

impl Common {
    fn tol(&self, default: f64) -> Result<f64> {
        match self.tol {
            Some(t) if !(t > 0.0 && t.is_finite()) => Err(Error::BadParams(format!("tolerance {t} must be positive"))),
            Some(t) => Ok(t),
            None => Ok(default),
        }
    }

    fn input(&self, k: usize) -> Result<&Path> {
        self.inputs.get(k).map(PathBuf::as_path).ok_or_else(|| Error::Io(format!("missing --in file #{}", k + 1)))
    }

    /// Rejects `--n` / `--field` that disagree with the space read from input.
    fn check_space(&self, s: &HermitianSpace) -> Result<()> {
        if let Some(n) = self.n {
            if n != s.n {
                return Err(Error::DimensionMismatch { expected: n, got: s.n });
            }
        }
        if let Some(f) = self.field {
            if f != s.field {
                return Err(Error::WrongField(f.name()));
            }
        }
        Ok(())
    }

    fn read_pair(&self, k: usize) -> Result<Pair> {
        let p: Pair = read_json(self.input(k)?)?;
        self.check_space(&p.space)?;
        Pair::new(p.space, p.a, p.b)
    }
}

/// Runs one command and returns its JSON artifact.
pub fn run(command: Command, common: &Common) -> Result<Value> {
    let v = match command {
        Command::Generate => {
            let space = HermitianSpace::new(common.n.unwrap_or(3), common.field.unwrap_or(Field::Quaternion))?;
            serde_json::to_value(generate_pair(&space, common.seed, common.mode)?)?
        }
        Command::Invariants => {
            let pair = common.read_pair(0)?;
            let analysis = pair.analyze(common.tol(GENERICITY_TOL)?)?;
            analysis.require(common.mode)?;
            serde_json::to_value(invariants_of(&analysis)?)?
        }
        Command::ConjugacyTest => {
            let (p, q) = (common.read_pair(0)?, common.read_pair(1)?);
            serde_json::to_value(conjugacy_test(&p, &q, common.mode, common.tol(CONJUGACY_TOL)?)?)?
        }
        Command::Classify => {
            let e: ElementFile = read_json(common.input(0)?)?;
            common.check_space(&e.space)?;
            e.space.check_matrix(&e.matrix)?;
            let class = classify_element(&e.matrix, e.space.field)?;
            let frame = match class.kind {
                ElementKind::RegularLoxodromic => Some(eigen_frame(&e.matrix, e.space.field)?),
                ElementKind::Other => None,
            };
            json!({ "classification": class, "frame": frame })
        }
        Command::TwistBend => {
            let job: TwistBendJob = read_json(common.input(0)?)?;
            common.check_space(&job.space)?;
            let pants = PantsGroup::new(job.space, job.a, job.b)?;
            let frames = [0, 1, 2].map(|s| eigen_frame(&pants.peripheral(s), job.space.field));
            let [fa, fb, fc] = frames;
            let (fa, fb, fc) = (fa?, fb?, fc?);
            let k = twist_bend_element(&job.kappa, &fa)?;
            let kappa = TwistBendParams::oriented(job.kappa.t, job.kappa.psi, job.kappa.xi, &fa)?;
            json!({
                "kappa": kappa,
                "element": k,
                "tilde_invariants": tilde_invariants(&kappa, &fa, &fb, &fc)?,
            })
        }
        Command::Assemble => {
            let job: AssembleJob = read_json(common.input(0)?)?;
            let pants = job
                .pants
                .into_iter()
                .map(|p| {
                    common.check_space(&p.space)?;
                    PantsGroup::new(p.space, p.a, p.b)
                })
                .collect::<Result<Vec<_>>>()?;
            serde_json::to_value(assemble_surface_representation(&pants, &job.graph)?)?
        }
    };
    Ok(v)
}

/// Parses arguments, runs, writes the artifact; returns the exit status.
pub fn main_with(cli: Cli) -> i32 {
    let result = run(cli.command, &cli.common).and_then(|v| match &cli.common.out {
        Some(path) => write_json(path, &v),
        None => to_json(&v).and_then(|s| {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{s}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
