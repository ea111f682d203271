//! The `mcfill` command line. Every command prints one JSON report; errors
//! print `{"error":{"kind":…,"message":…}}` and exit with status 2.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::cube::cube_witness;
use crate::dyadic::{chain_extract, dyadic_extract, extraction_bound_holds, schreier_extract};
use crate::error::{Error, Result};
use crate::filling::{is_filling, replay_filling, FillingOptions};
use crate::gamma::gamma_select;
use crate::greedy::greedy_select;
use crate::integration::{decide_mc_integrability, replay_tagged_certificate, riemann_norm, DecideOptions};
use crate::io::{
    parse_leaves, parse_naturals, parse_nodes, read_json, ClassesSpec, CoversSpec, CubeSpec, FamilySpec, IndicatorSpec,
    ModelSpec, OrthoSpec, PartitionSpec, TaggedSpec, TransversalSpec,
};
use crate::mcfilling::{
    audit_cover_monotonicity, check_mc_filling, check_mc_filling_covers, replay_partition_certificate, McOptions,
};
use crate::measure::GroundModel;
use crate::partition::IndexedPartition;
use crate::pipeline::{filling_to_mc_pipeline, PipelineOptions};
use crate::rational::Rational;
use crate::search::SearchLimits;
use crate::uec::{refine_for_uec, uec_partition, UecOptions};
use crate::verdict::{Certificate, Verdict};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mcfill",
    version,
    about = "Exact checkers for MC-filling families and MC-integrability"
)]
struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Worker threads for parallel sweeps (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ε-filling of a family on a finite set of naturals.
    CheckFilling {
        #[arg(long)]
        family: PathBuf,
        /// Ground set, e.g. "1,2,3".
        #[arg(long)]
        set: String,
        #[arg(long)]
        epsilon: Rational,
        /// Largest subset size swept (default: the whole set).
        #[arg(long)]
        max_h: Option<usize>,
        #[arg(long, default_value_t = 1 << 22)]
        max_subset: usize,
        /// Replay the certificate of an earlier report instead of checking.
        #[arg(long)]
        verify_certificate: Option<PathBuf>,
    },
    /// MC-filling of a family on a block model.
    CheckMcfilling {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        epsilon: Rational,
        /// Let the adversary choose covers as well as the partition.
        #[arg(long)]
        covers: bool,
        #[arg(long, default_value_t = 10)]
        max_points: usize,
        /// Random cover enlargements audited on the certificate partition.
        #[arg(long, default_value_t = 16)]
        audit_trials: usize,
        #[arg(long)]
        verify_certificate: Option<PathBuf>,
    },
    /// Tagged-family game for an indicator model.
    DecideMc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        functionals: PathBuf,
        #[arg(long)]
        epsilon: Rational,
        #[arg(long, default_value_t = 10)]
        max_points: usize,
        /// Accept functionals of positive outer measure.
        #[arg(long)]
        allow_nonnull: bool,
        #[arg(long)]
        verify_certificate: Option<PathBuf>,
    },
    /// Norm of the Riemann sum of a tagged family.
    Riemann {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        functionals: PathBuf,
        #[arg(long)]
        tagged: PathBuf,
    },
    /// Extract a member of 𝒟 from leaves listed one per line.
    DyadicExtract {
        leaves: PathBuf,
        #[arg(long, default_value_t = 4096)]
        max_leaves: usize,
    },
    /// The upper half of a finite set of naturals, e.g. "1,2,3,4".
    SchreierExtract { set: String },
    /// Halving chain of a meet-closed set of tree nodes listed one per line.
    ChainExtract { nodes: PathBuf },
    /// The construction from an ε-filling family to an MC-filling witness.
    #[command(name = "pipeline-filling2mc")]
    PipelineFilling2mc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        epsilon: Rational,
        #[arg(long)]
        eta1: Rational,
        /// Point names of A (default: every point).
        #[arg(long)]
        points: Option<String>,
        #[arg(long)]
        covers_file: Option<PathBuf>,
        /// Check ε-filling on A for subsets up to this size first.
        #[arg(long)]
        verify_filling: Option<usize>,
    },
    /// Greedy witness through a transversal system.
    GreedySelect {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        transversal: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        epsilon: Rational,
    },
    /// Witness through part signatures of disjoint classes.
    GammaSelect {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        classes: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        epsilon: Rational,
    },
    /// A point of Z ∩ E_β in the cube.
    CubeWitness {
        #[arg(long)]
        cube: PathBuf,
        /// Fixed coordinates, e.g. "1=1,4=0".
        #[arg(long, default_value = "")]
        fix: String,
        #[arg(long)]
        beta: usize,
    },
    /// Small covers for an orthonormal system and the swept 2ε bound.
    UecPartition {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        ortho: PathBuf,
        #[arg(long)]
        epsilon: Rational,
        /// Split blocks that are too large before building covers.
        #[arg(long)]
        refine: bool,
        #[arg(long, default_value_t = 1 << 22)]
        max_tagged: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckFilling { .. } => "check-filling",
            Command::CheckMcfilling { .. } => "check-mcfilling",
            Command::DecideMc { .. } => "decide-mc",
            Command::Riemann { .. } => "riemann",
            Command::DyadicExtract { .. } => "dyadic-extract",
            Command::SchreierExtract { .. } => "schreier-extract",
            Command::ChainExtract { .. } => "chain-extract",
            Command::PipelineFilling2mc { .. } => "pipeline-filling2mc",
            Command::GreedySelect { .. } => "greedy-select",
            Command::GammaSelect { .. } => "gamma-select",
            Command::CubeWitness { .. } => "cube-witness",
            Command::UecPartition { .. } => "uec-partition",
        }
    }
}

/// Input hashes and caps collected while a command runs.
#[derive(Default)]
struct Ctx {
    inputs: BTreeMap<String, String>,
    caps: BTreeMap<String, Value>,
}

impl Ctx {
    fn read(&mut self, key: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        self.inputs.insert(key.into(), hex::encode(Sha256::digest(&bytes)));
        Ok(bytes)
    }

    fn json<T: serde::de::DeserializeOwned>(&mut self, key: &str, path: &Path) -> Result<T> {
        self.read(key, path)?;
        read_json(path)
    }

    fn text(&mut self, key: &str, path: &Path) -> Result<String> {
        String::from_utf8(self.read(key, path)?).map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))
    }

    fn model(&mut self, args: &ModelArgs) -> Result<GroundModel> {
        self.json::<ModelSpec>("model", &args.model)?.build()
    }

    fn cap(&mut self, key: &str, value: impl Into<Value>) {
        self.caps.insert(key.into(), value.into());
    }
}

struct Outcome {
    code: i32,
    payload: Value,
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn success<T: Serialize>(x: &T) -> Result<Outcome> {
    Ok(Outcome {
        code: EXIT_HOLDS,
        payload: to_value(x)?,
    })
}

fn verdict(ctx: &mut Ctx, v: &Verdict) -> Result<Outcome> {
    for (k, n) in &v.caps {
        ctx.cap(k, *n);
    }
    let mut payload = to_value(v)?;
    if let Value::Object(m) = &mut payload {
        m.remove("caps");
    }
    Ok(Outcome {
        code: if v.holds { EXIT_HOLDS } else { EXIT_REFUTED },
        payload,
    })
}

/// Replays the certificate stored in an earlier report.
fn replay(ctx: &mut Ctx, path: &Path, recompute: impl FnOnce(&Certificate) -> Result<Rational>) -> Result<Outcome> {
    let report: Value = ctx.json("report", path)?;
    let cert: Certificate = serde_json::from_value(report.get("certificate").cloned().unwrap_or(Value::Null))
        .map_err(|e| Error::Parse(format!("certificate: {e}")))?;
    let claimed: Rational = serde_json::from_value(report.get("value").cloned().unwrap_or(Value::Null))
        .map_err(|e| Error::Parse(format!("value: {e}")))?;
    let replayed = recompute(&cert)?;
    let matches = replayed == claimed;
    Ok(Outcome {
        code: if matches { EXIT_HOLDS } else { EXIT_REFUTED },
        payload: json!({
            "verified": matches,
            "claimed": claimed,
            "replayed": replayed,
            "certificate_kind": report["certificate"]["kind"],
        }),
    })
}

fn parse_fixed(text: &str) -> Result<BTreeMap<usize, bool>> {
    let mut out = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (g, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected coordinate=bit, got {item:?}")))?;
        let g: usize = g
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad coordinate {g:?}")))?;
        let v = match v.trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse(format!("bad bit {other:?}"))),
        };
        if out.insert(g, v).is_some() {
            return Err(Error::InvalidArgument(format!("coordinate {g} fixed twice")));
        }
    }
    Ok(out)
}

fn execute(cmd: &Command, seed: u64, ctx: &mut Ctx) -> Result<Outcome> {
    let limits = SearchLimits::default();
    ctx.cap("max-nodes", limits.max_nodes);
    match cmd {
        Command::CheckFilling {
            family,
            set,
            epsilon,
            max_h,
            max_subset,
            verify_certificate,
        } => {
            let fam = ctx.json::<FamilySpec>("family", family)?.build()?;
            if let Some(path) = verify_certificate {
                return replay(ctx, path, |c| replay_filling(&fam, c, &limits));
            }
            let items = parse_naturals(set)?;
            let opts = FillingOptions {
                max_h: max_h.unwrap_or(items.len()),
                max_subsets: *max_subset,
                search: limits.clone(),
            };
            ctx.cap("max-subset", *max_subset);
            verdict(ctx, &is_filling(&fam, &items, epsilon, &opts)?)
        }
        Command::CheckMcfilling {
            model,
            family,
            epsilon,
            covers,
            max_points,
            audit_trials,
            verify_certificate,
        } => {
            let m = ctx.model(model)?;
            let fam = ctx.json::<FamilySpec>("family", family)?.build_on(&m)?;
            if let Some(path) = verify_certificate {
                return replay(ctx, path, |c| replay_partition_certificate(&m, &fam, c, &limits));
            }
            let opts = McOptions {
                max_points: *max_points,
                search: limits.clone(),
            };
            let v = if *covers {
                check_mc_filling_covers(&m, &fam, epsilon, &opts)?
            } else {
                check_mc_filling(&m, &fam, epsilon, &opts)?
            };
            let mut out = verdict(ctx, &v)?;
            if *covers {
                let Certificate::Partition { parts, .. } = &v.certificate else {
                    return Err(Error::Invariant("MC-filling verdict without a partition".into()));
                };
                let p = IndexedPartition::new(&m, parts.clone())?;
                let audit = audit_cover_monotonicity(&m, &fam, &p, *audit_trials, seed, &limits)?;
                out.payload["cover_audit"] = to_value(&audit)?;
            }
            Ok(out)
        }
        Command::DecideMc {
            model,
            functionals,
            epsilon,
            max_points,
            allow_nonnull,
            verify_certificate,
        } => {
            let m = ctx.model(model)?;
            let fm = ctx.json::<IndicatorSpec>("functionals", functionals)?.build(&m)?;
            if let Some(path) = verify_certificate {
                return replay(ctx, path, |c| replay_tagged_certificate(&m, &fm, c));
            }
            let opts = DecideOptions {
                max_points: *max_points,
                allow_nonnull: *allow_nonnull,
            };
            verdict(ctx, &decide_mc_integrability(&m, &fm, epsilon, &opts)?)
        }
        Command::Riemann {
            model,
            functionals,
            tagged,
        } => {
            let m = ctx.model(model)?;
            let fm = ctx.json::<IndicatorSpec>("functionals", functionals)?.build(&m)?;
            let t = ctx.json::<TaggedSpec>("tagged", tagged)?.build(&m)?;
            let (sel, which) = riemann_norm(&m, &fm, &t)?;
            let tags: Vec<&str> = sel.member.iter().map(|&p| m.name(p as usize)).collect();
            success(&json!({
                "value": sel.value,
                "functional": which.and_then(|i| fm.name(i)),
                "tags": tags,
            }))
        }
        Command::DyadicExtract { leaves, max_leaves } => {
            let a = parse_leaves(&ctx.text("leaves", leaves)?)?;
            ctx.cap("max-leaves", *max_leaves);
            if a.len() > *max_leaves {
                return Err(Error::resource(format!("{} leaves", a.len()), *max_leaves));
            }
            let d = dyadic_extract(&a)?;
            let distinct = a.iter().collect::<std::collections::BTreeSet<_>>().len();
            let mut payload = to_value(&d)?;
            payload["bound_holds"] = json!(extraction_bound_holds(d.member.len(), distinct));
            Ok(Outcome {
                code: EXIT_HOLDS,
                payload,
            })
        }
        Command::SchreierExtract { set } => success(&json!({ "member": schreier_extract(&parse_naturals(set)?) })),
        Command::ChainExtract { nodes } => {
            let c: std::collections::BTreeSet<_> = parse_nodes(&ctx.text("nodes", nodes)?)?.into_iter().collect();
            let chain = chain_extract(&c)?;
            success(&json!({ "chain": chain, "length": chain.len(), "size": c.len() }))
        }
        Command::PipelineFilling2mc {
            model,
            family,
            partition,
            epsilon,
            eta1,
            points,
            covers_file,
            verify_filling,
        } => {
            let m = ctx.model(model)?;
            let fam = ctx.json::<FamilySpec>("family", family)?.build_on(&m)?;
            let p = ctx.json::<PartitionSpec>("partition", partition)?.build(&m)?;
            let covers = match covers_file {
                Some(path) => Some(ctx.json::<CoversSpec>("covers", path)?.build(&m)?),
                None => None,
            };
            let a = match points {
                Some(list) => {
                    let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
                    m.point_set(&names)?
                }
                None => m.all_points(),
            };
            if let Some(h) = verify_filling {
                ctx.cap("verify-filling", *h);
            }
            let opts = PipelineOptions {
                verify_filling: *verify_filling,
                search: limits.clone(),
            };
            success(&filling_to_mc_pipeline(
                &m,
                &a,
                &fam,
                epsilon,
                eta1,
                &p,
                covers.as_deref(),
                &opts,
            )?)
        }
        Command::GreedySelect {
            model,
            transversal,
            partition,
            epsilon,
        } => {
            let m = ctx.model(model)?;
            let (ts, fam) = ctx.json::<TransversalSpec>("transversal", transversal)?.build(&m)?;
            let p = ctx.json::<PartitionSpec>("partition", partition)?.build(&m)?;
            success(&greedy_select(&m, &ts, &fam, &p, epsilon, &limits)?)
        }
        Command::GammaSelect {
            model,
            classes,
            partition,
            epsilon,
        } => {
            let m = ctx.model(model)?;
            let cl = ctx.json::<ClassesSpec>("classes", classes)?.build(&m)?;
            let p = ctx.json::<PartitionSpec>("partition", partition)?.build(&m)?;
            success(&gamma_select(&m, &cl, &p, epsilon)?)
        }
        Command::CubeWitness { cube, fix, beta } => {
            let c = ctx.json::<CubeSpec>("cube", cube)?.build()?;
            let (_, w) = cube_witness(&c, &parse_fixed(fix)?, *beta)?;
            success(&w)
        }
        Command::UecPartition {
            model,
            ortho,
            epsilon,
            refine,
            max_tagged,
        } => {
            let m = ctx.model(model)?;
            let (sys, inj) = ctx.json::<OrthoSpec>("ortho", ortho)?.build(&m)?;
            ctx.cap("max-tagged", *max_tagged);
            let opts = UecOptions {
                max_tagged_families: *max_tagged,
            };
            let (m, refined) = if *refine {
                let r = refine_for_uec(&m, &sys, &inj, epsilon)?;
                (r.model, true)
            } else {
                (m, false)
            };
            let report = uec_partition(&m, &sys, &inj, epsilon, &opts)?;
            let mut payload = to_value(&report)?;
            if refined {
                payload["refined_model"] = to_value(&ModelSpec::from_model(&m))?;
            }
            Ok(Outcome {
                code: if report.holds { EXIT_HOLDS } else { EXIT_REFUTED },
                payload,
            })
        }
    }
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

/// Runs one invocation (`args[0]` is the program name) and returns the exit
/// status. The report goes to `out` unless `--report` names a file.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_HOLDS;
            }
            let _ = writeln!(out, "{}", error_json("usage", &e.render().to_string()));
            return EXIT_ERROR;
        }
    };
    let start = Instant::now();
    let mut ctx = Ctx::default();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(out, "{}", error_json("invalid-argument", &e.to_string()));
            return EXIT_ERROR;
        }
    };
    let result = pool.install(|| execute(&cli.command, cli.seed, &mut ctx));
    let (code, text) = match result {
        Ok(outcome) => {
            let mut report = Map::new();
            if let Value::Object(fields) = outcome.payload {
                report.extend(fields);
            }
            report.insert("command".into(), json!(cli.command.name()));
            report.insert("inputs".into(), json!(ctx.inputs));
            report.insert("caps".into(), json!(ctx.caps));
            report.insert("seed".into(), json!(cli.seed));
            report.insert("threads".into(), json!(cli.threads));
            report.insert("wall_time_ms".into(), json!(start.elapsed().as_millis() as u64));
            let text = serde_json::to_string_pretty(&Value::Object(report)).expect("report serializes");
            (outcome.code, text)
        }
        Err(e) => (EXIT_ERROR, error_json(e.kind(), &e.to_string())),
    };
    match (&cli.report, code) {
        (Some(path), c) if c != EXIT_ERROR => {
            if let Err(e) = std::fs::write(path, format!("{text}\n")) {
                let _ = writeln!(out, "{}", error_json("io", &format!("{}: {e}", path.display())));
                return EXIT_ERROR;
            }
        }
        _ => {
            let _ = writeln!(out, "{text}");
        }
    }
    code
}
