//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 verification mismatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::instance::{
    enumerate_shift_domain, format_ratio, parse_distribution, parse_instance, PreferenceInstance, Shift,
    ShiftDistribution,
};
use crate::matching::Matching;
use crate::order::DownSets;
use crate::random::gen_random_instance;
use crate::robust_flow::run_pipeline;
use crate::robust_lattice::{build_robust_poset, enumerate_robust};
use crate::rotations::{build_rotation_poset, PosetNode};
use crate::shift_analysis::{sublattice_poset, ShiftAnalyzer, ShiftStatus};
use crate::verify::verify_instance;

pub const SCHEMA: u32 = 1;

/// Largest closed-set count reported exactly by `analyze-shift`.
const COUNT_LIMIT: usize = 1_000_000;

#[derive(Parser, Debug)]
#[command(name = "robust-matching", version, about = "Stable matchings robust to one upward shift")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Instance file.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a robust stable matching.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Distribution file, or `full-uniform` for the uniform distribution
        /// over every shift.
        #[arg(long)]
        dist: String,
        #[arg(long)]
        dump_network: bool,
        #[arg(long)]
        dump_ip: bool,
    },
    /// Print the rotation poset.
    Lattice {
        #[command(flatten)]
        common: Common,
    },
    /// Analyze one shift, e.g. `--shift "GIRL_LIST g1 b1 1"`.
    AnalyzeShift {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        shift: String,
    },
    /// Print the poset of robust stable matchings.
    Represent {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dist: String,
        /// Also list every robust matching.
        #[arg(long)]
        enumerate: bool,
    },
    /// List every stable matching.
    Enumerate {
        #[command(flatten)]
        common: Common,
    },
    /// Cross-check everything against brute force.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "full-uniform")]
        dist: String,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        completeness: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingJson {
    pub pairs: Vec<(String, String)>,
    pub unmatched: Vec<String>,
}

impl From<&Matching> for MatchingJson {
    fn from(m: &Matching) -> Self {
        MatchingJson {
            pairs: m.pairs().into_iter().map(|(b, g)| (format!("b{}", b + 1), format!("g{}", g + 1))).collect(),
            unmatched: m
                .unmatched_boys()
                .into_iter()
                .map(|b| format!("b{}", b + 1))
                .chain(m.unmatched_girls().into_iter().map(|g| format!("g{}", g + 1)))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveJson {
    pub schema: u32,
    pub matching: MatchingJson,
    pub closed_set: Vec<usize>,
    pub objective: String,
    pub flow_value: String,
    pub constant_loss: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeJson {
    pub schema: u32,
    pub rotations: Vec<Vec<(String, String)>>,
    pub hasse: Vec<(String, String)>,
    pub boy_optimal: MatchingJson,
    pub girl_optimal: MatchingJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftJson {
    pub schema: u32,
    pub shift: String,
    pub status: ShiftStatus,
    pub rho_in: Option<String>,
    pub rho_out: Option<String>,
    pub rho1: Option<String>,
    pub rho2: Option<String>,
    pub rho3: Option<String>,
    /// Exact size of the destabilized set when at most the reporting limit.
    pub mab_size: Option<usize>,
    pub m_boy: Option<MatchingJson>,
    pub m_girl: Option<MatchingJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentJson {
    pub schema: u32,
    pub objective: String,
    pub fixed_bottom: Vec<usize>,
    pub fixed_top: Vec<usize>,
    pub elements: Vec<Vec<usize>>,
    pub dag_edges: Vec<(usize, usize)>,
    pub matchings: Option<Vec<MatchingJson>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerateJson {
    pub schema: u32,
    pub matchings: Vec<MatchingJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyJson {
    pub schema: u32,
    pub passed: bool,
    pub stable_count: usize,
    pub robust_count: usize,
    pub checks: Vec<(String, Option<String>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenJson {
    pub schema: u32,
    pub instance: PreferenceInstance,
}

enum Failure {
    Input(String),
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> std::result::Result<PreferenceInstance, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_distribution(arg: &str, inst: &PreferenceInstance) -> std::result::Result<ShiftDistribution, Failure> {
    if arg == "full-uniform" {
        let domain = enumerate_shift_domain(inst);
        if domain.is_empty() {
            return Ok(ShiftDistribution::sub_distribution(Vec::new())?);
        }
        return Ok(ShiftDistribution::uniform(&domain)?);
    }
    let path = Path::new(arg);
    parse_distribution(&read(path)?, inst).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn json(out: &mut impl Write, value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn node_label(node: PosetNode) -> String {
    node.to_string()
}

fn rotation_label(id: Option<usize>) -> Option<String> {
    id.map(|i| format!("R{i}"))
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Mismatch) => 2,
    }
}

fn dispatch(command: Command, out: &mut impl Write) -> Outcome {
    match command {
        Command::Solve { common, dist, dump_network, dump_ip } => {
            let inst = load_instance(&common.instance)?;
            let dist = load_distribution(&dist, &inst)?;
            let pipe = run_pipeline(&inst, &dist)?;
            let sol = &pipe.solution;
            match common.format {
                Format::Json => json(
                    out,
                    &SolveJson {
                        schema: SCHEMA,
                        matching: (&sol.matching).into(),
                        closed_set: sol.closed_set.iter().collect(),
                        objective: format_ratio(&sol.objective),
                        flow_value: format_ratio(&sol.flow_value),
                        constant_loss: format_ratio(&sol.constant_loss),
                    },
                )?,
                Format::Text => {
                    write!(out, "{}", sol.matching.to_text())?;
                    let set: String = sol.closed_set.iter().map(|r| format!(" R{r}")).collect();
                    writeln!(out, "closed_set{set}")?;
                    writeln!(out, "objective {}", format_ratio(&sol.objective))?;
                    writeln!(out, "flow_value {}", format_ratio(&sol.flow_value))?;
                    writeln!(out, "constant_loss {}", format_ratio(&sol.constant_loss))?;
                }
            }
            if dump_network {
                write!(out, "{}", pipe.network.dump())?;
            }
            if dump_ip {
                write!(out, "{}", pipe.network.ip_text())?;
            }
        }
        Command::Lattice { common } => {
            let inst = load_instance(&common.instance)?;
            let poset = build_rotation_poset(&inst);
            match common.format {
                Format::Json => {
                    let label = |(b, g): &(usize, usize)| (format!("b{}", b + 1), format!("g{}", g + 1));
                    json(
                        out,
                        &LatticeJson {
                            schema: SCHEMA,
                            rotations: poset.rotations().iter().map(|r| r.pairs().iter().map(label).collect()).collect(),
                            hasse: poset.hasse_edges().into_iter().map(|(a, b)| (node_label(a), node_label(b))).collect(),
                            boy_optimal: poset.boy_optimal().into(),
                            girl_optimal: (&poset.girl_optimal()).into(),
                        },
                    )?
                }
                Format::Text => {
                    write!(out, "{}", poset.dump())?;
                    writeln!(out, "# boy-optimal")?;
                    write!(out, "{}", poset.boy_optimal().to_text())?;
                    writeln!(out, "# girl-optimal")?;
                    write!(out, "{}", poset.girl_optimal().to_text())?;
                }
            }
        }
        Command::AnalyzeShift { common, shift } => {
            let inst = load_instance(&common.instance)?;
            let shift: Shift = shift.parse()?;
            shift.validate(&inst)?;
            let poset = build_rotation_poset(&inst);
            let analyzer = ShiftAnalyzer::new(&inst, &poset);
            let analysis = analyzer.analyze(&shift)?;
            let comps = analyzer.component_rotations(&shift)?;
            let (mab_size, m_boy, m_girl) = match analysis.status {
                ShiftStatus::Proper => {
                    let sub = sublattice_poset(&poset, &analysis)?;
                    let local: Vec<Vec<usize>> = sub
                        .rotations
                        .iter()
                        .map(|&id| {
                            poset.hasse_preds(id).iter().filter_map(|p| sub.rotations.iter().position(|r| r == p)).collect()
                        })
                        .collect();
                    let count = DownSets::new(&local).take(COUNT_LIMIT + 1).count();
                    ((count <= COUNT_LIMIT).then_some(count), Some(sub.m_boy), Some(sub.m_girl))
                }
                ShiftStatus::Unchanged | ShiftStatus::EmptyMab => (Some(0), None, None),
                ShiftStatus::Disjoint => {
                    let count = poset.enumerate_closed_sets().take(COUNT_LIMIT + 1).count();
                    (
                        (count <= COUNT_LIMIT).then_some(count),
                        Some(poset.boy_optimal().clone()),
                        Some(poset.girl_optimal()),
                    )
                }
            };
            let report = ShiftJson {
                schema: SCHEMA,
                shift: shift.to_string(),
                status: analysis.status,
                rho_in: analysis.rho_in.map(node_label),
                rho_out: analysis.rho_out.map(node_label),
                rho1: rotation_label(comps.rho1),
                rho2: rotation_label(comps.rho2),
                rho3: rotation_label(comps.rho3),
                mab_size,
                m_boy: m_boy.as_ref().map(Into::into),
                m_girl: m_girl.as_ref().map(Into::into),
            };
            match common.format {
                Format::Json => json(out, &report)?,
                Format::Text => {
                    let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "-".into());
                    writeln!(out, "shift {}", report.shift)?;
                    writeln!(out, "status {}", report.status)?;
                    writeln!(out, "rho_in {}", opt(&report.rho_in))?;
                    writeln!(out, "rho_out {}", opt(&report.rho_out))?;
                    writeln!(out, "rho1 {}", opt(&report.rho1))?;
                    writeln!(out, "rho2 {}", opt(&report.rho2))?;
                    writeln!(out, "rho3 {}", opt(&report.rho3))?;
                    match report.mab_size {
                        Some(k) => writeln!(out, "mab_size {k}")?,
                        None => writeln!(out, "mab_size >{COUNT_LIMIT}")?,
                    }
                    if let (Some(b), Some(g)) = (&m_boy, &m_girl) {
                        writeln!(out, "# m_boy")?;
                        write!(out, "{}", b.to_text())?;
                        writeln!(out, "# m_girl")?;
                        write!(out, "{}", g.to_text())?;
                    }
                }
            }
        }
        Command::Represent { common, dist, enumerate } => {
            let inst = load_instance(&common.instance)?;
            let dist = load_distribution(&dist, &inst)?;
            let pipe = run_pipeline(&inst, &dist)?;
            let robust = build_robust_poset(&pipe.network, &pipe.flow)?;
            match common.format {
                Format::Json => json(
                    out,
                    &RepresentJson {
                        schema: SCHEMA,
                        objective: format_ratio(&pipe.solution.objective),
                        fixed_bottom: robust.fixed_bottom().to_vec(),
                        fixed_top: robust.fixed_top().to_vec(),
                        elements: robust.elements().to_vec(),
                        dag_edges: robust.dag_edges(),
                        matchings: enumerate
                            .then(|| enumerate_robust(&pipe.poset, &robust).map(|m| (&m).into()).collect()),
                    },
                )?,
                Format::Text => {
                    writeln!(out, "objective {}", format_ratio(&pipe.solution.objective))?;
                    writeln!(out, "elements {}", robust.len())?;
                    writeln!(out, "dag_edges {}", robust.dag_edges().len())?;
                    write!(out, "{}", robust.dump())?;
                    if enumerate {
                        for m in enumerate_robust(&pipe.poset, &robust) {
                            writeln!(out)?;
                            write!(out, "{}", m.to_text())?;
                        }
                    }
                }
            }
        }
        Command::Enumerate { common } => {
            let inst = load_instance(&common.instance)?;
            let poset = build_rotation_poset(&inst);
            let matchings = poset.enumerate_closed_sets().map(|s| poset.closed_set_to_matching(&s));
            match common.format {
                Format::Json => {
                    let matchings = matchings.map(|m| m.map(|m| (&m).into())).collect::<Result<Vec<_>, _>>()?;
                    json(out, &EnumerateJson { schema: SCHEMA, matchings })?
                }
                Format::Text => {
                    for (i, m) in matchings.enumerate() {
                        if i > 0 {
                            writeln!(out)?;
                        }
                        write!(out, "{}", m?.to_text())?;
                    }
                }
            }
        }
        Command::Verify { common, dist } => {
            let inst = load_instance(&common.instance)?;
            let dist = load_distribution(&dist, &inst)?;
            let report = verify_instance(&inst, &dist)?;
            match common.format {
                Format::Json => json(
                    out,
                    &VerifyJson {
                        schema: SCHEMA,
                        passed: report.passed(),
                        stable_count: report.stable_count,
                        robust_count: report.robust_count,
                        checks: report.checks.iter().map(|c| (c.name.to_string(), c.result.clone().err())).collect(),
                    },
                )?,
                Format::Text => write!(out, "{report}")?,
            }
            if !report.passed() {
                return Err(Failure::Mismatch);
            }
        }
        Command::Gen { n, seed, completeness, format } => {
            if n == 0 || !(completeness > 0.0 && completeness <= 1.0) {
                return Err(Failure::Input("need n >= 1 and completeness in (0, 1]".into()));
            }
            let inst = gen_random_instance(n, seed, completeness);
            match format {
                Format::Json => json(out, &GenJson { schema: SCHEMA, instance: inst })?,
                Format::Text => write!(out, "{}", inst.to_text())?,
            }
        }
    }
    Ok(())
}
