use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rellift_core::finset::{FinFun, Rel, RelJson};
use rellift_core::functors::{check_functor_laws, FunctorSpec, Monoid, MonoidRegistry, MonoidTable, MAX_ELEMENTS_ENV};
use rellift_core::liftings::{
    barr_lift, check_codiagonal_formula, check_elementwise_bounded, check_ewb_witness_set, check_extension_axioms,
    check_local_monotonicity, lemma1_battery, lemma6_battery, BoundedFamily, Extension, ExtensionKind,
    RelationLifting,
};
use rellift_core::monads::{
    check_distlaw_axioms, law_to_extension, monad_axiom_check, monad_morphism_check, DistLaw, MonadMorphism,
    MonadSpec,
};
use rellift_core::pullbacks::{monoid_report, wpb_report};
use rellift_core::replay::recheck_witness;
use rellift_core::report::{Report, Verdict, Witness};
use rellift_core::search::{classify_law, search_laws, SearchConfig, DEFAULT_MAX_SOLUTIONS};
use rellift_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "rellift", version, about = "Relation liftings and distributive laws on finite carriers")]
struct Cli {
    /// Largest carrier size swept.
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    max_size: u64,

    /// Largest family size in multiplication instances of a law.
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    mult_support: u64,

    /// Resource bound on |F X|.
    #[arg(long, global = true, env = MAX_ELEMENTS_ENV, value_parser = clap::value_parser!(u64).range(1..))]
    max_elements: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Wall-clock limit in seconds.
    #[arg(long, global = true)]
    timeout: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Extra monoid for `M[...]`, as NAME=FILE with a JSON monoid table.
    #[arg(long = "monoid", global = true, value_name = "NAME=FILE")]
    monoids: Vec<String>,

    /// Search stops (inconclusive) after this many solutions.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_SOLUTIONS)]
    max_solutions: usize,

    /// Directory receiving one JSON table and one text rendering per solution.
    #[arg(long, global = true)]
    dump_solutions: Option<PathBuf>,

    /// Re-check the witnesses of a saved JSON report (or a single witness).
    #[arg(long, global = true)]
    verify_witness: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand, Debug, Clone)]
enum Cmd {
    /// Parse a functor expression and print its canonical form and sizes.
    Parse { expr: String },
    /// List the elements of F n.
    Object {
        expr: String,
        #[arg(long)]
        size: Option<usize>,
    },
    /// Print F f for f given by its images.
    Map {
        expr: String,
        #[arg(long, value_delimiter = ',')]
        images: Vec<usize>,
        #[arg(long)]
        cod: usize,
    },
    /// Identity and composition laws of F.
    FunctorLaws { expr: String },
    /// Weak pullback preservation sweep.
    Wpb { expr: String },
    /// Preservation of inverse images.
    InverseImages { expr: String },
    /// Positivity and refinability of a monoid.
    Monoid { name: String },
    /// Barr lift of a relation read from JSON.
    Barr {
        expr: String,
        #[arg(long)]
        rel: PathBuf,
    },
    /// Extension axioms; KIND is an extension name or law:<law>.
    ExtCheck { kind: String, expr: String },
    /// Local monotonicity of an extension.
    MonotoneCheck { kind: String, expr: String },
    /// Converse and identity properties of an extension.
    Lemma1 { kind: String, expr: String },
    /// The six equivalent conditions on an extension.
    Lemma6 { kind: String, expr: String },
    /// Elementwise boundedness with copy-set size K.
    Ewb {
        expr: String,
        #[arg(long = "K", default_value_t = 2)]
        k: usize,
    },
    /// Coverage of F n by subsets of size below kappa.
    EwbWitness {
        expr: String,
        #[arg(long)]
        kappa: usize,
    },
    /// Codiagonal formula for a surjection given by its images.
    Codiagonal {
        expr: String,
        #[arg(long, value_delimiter = ',')]
        images: Vec<usize>,
        #[arg(long)]
        cod: usize,
    },
    /// Monad axioms.
    MonadCheck { monad: String },
    /// Monad morphism axioms.
    MorphismCheck { morphism: String },
    /// Distributive law axioms; LAW is a registry name or a JSON table file.
    LawCheck {
        law: String,
        expr: String,
        /// Also print the law table on this carrier.
        #[arg(long)]
        table: Option<usize>,
    },
    /// Enumerate laws FP -> PF on bounded carriers.
    Search { expr: String },
    /// Label law tables by the registry laws they agree with.
    Classify {
        expr: String,
        #[arg(required = true)]
        tables: Vec<PathBuf>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Parse { .. } => "parse",
            Cmd::Object { .. } => "object",
            Cmd::Map { .. } => "map",
            Cmd::FunctorLaws { .. } => "functor-laws",
            Cmd::Wpb { .. } => "wpb",
            Cmd::InverseImages { .. } => "inverse-images",
            Cmd::Monoid { .. } => "monoid",
            Cmd::Barr { .. } => "barr",
            Cmd::ExtCheck { .. } => "ext-check",
            Cmd::MonotoneCheck { .. } => "monotone-check",
            Cmd::Lemma1 { .. } => "lemma1",
            Cmd::Lemma6 { .. } => "lemma6",
            Cmd::Ewb { .. } => "ewb",
            Cmd::EwbWitness { .. } => "ewb-witness",
            Cmd::Codiagonal { .. } => "codiagonal",
            Cmd::MonadCheck { .. } => "monad-check",
            Cmd::MorphismCheck { .. } => "morphism-check",
            Cmd::LawCheck { .. } => "law-check",
            Cmd::Search { .. } => "search",
            Cmd::Classify { .. } => "classify",
        }
    }
}

/// A report plus lines shown only in text mode.
struct Output {
    report: Report,
    lines: Vec<String>,
}

impl From<Report> for Output {
    fn from(report: Report) -> Self {
        Output { report, lines: Vec::new() }
    }
}

struct Ctx {
    n: usize,
    support: usize,
    limit: Option<usize>,
    jobs: usize,
    timeout: Option<u64>,
    max_solutions: usize,
    dump: Option<PathBuf>,
    monoids: MonoidRegistry,
}

impl Ctx {
    fn from_cli(cli: &Cli) -> Result<Self> {
        let mut monoids = MonoidRegistry::default();
        for entry in &cli.monoids {
            let (name, file) = entry
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("--monoid expects NAME=FILE, got `{entry}`")))?;
            let table: MonoidTable = serde_json::from_str(&fs::read_to_string(file)?)?;
            monoids.register(Monoid::from_table(name, &table)?);
        }
        Ok(Ctx {
            n: cli.max_size as usize,
            support: cli.mult_support as usize,
            limit: cli.max_elements.map(|v| v as usize),
            jobs: cli.jobs,
            timeout: cli.timeout,
            max_solutions: cli.max_solutions,
            dump: cli.dump_solutions.clone(),
            monoids,
        })
    }

    fn functor(&self, text: &str) -> Result<Arc<FunctorSpec>> {
        let f = FunctorSpec::parse(text, &self.monoids)?;
        Ok(Arc::new(match self.limit {
            Some(l) => f.with_limit(l),
            None => f,
        }))
    }

    fn law(&self, name: &str, f: Arc<FunctorSpec>) -> Result<DistLaw> {
        if name.ends_with(".json") {
            let v: Value = serde_json::from_str(&fs::read_to_string(name)?)?;
            DistLaw::from_json_table(f, &v, name)
        } else {
            DistLaw::by_name(name, f)
        }
    }

    fn lifting(&self, kind: &str, expr: &str) -> Result<Box<dyn RelationLifting + Send>> {
        let f = self.functor(expr)?;
        Ok(match kind.strip_prefix("law:") {
            Some(law) => Box::new(law_to_extension(Arc::new(self.law(law, f)?))),
            None => Box::new(Extension::new(kind.parse::<ExtensionKind>()?, f)?),
        })
    }
}

fn read_rel(path: &Path) -> Result<Rel> {
    let j: RelJson = serde_json::from_str(&fs::read_to_string(path)?)?;
    Rel::from_json(&j)
}

fn dump_solutions(dir: &Path, laws: &[DistLaw], labels: &[Vec<String>], bound: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, (law, l)) in laws.iter().zip(labels).enumerate() {
        let table = law.to_json_table(bound)?;
        fs::write(dir.join(format!("solution-{i:03}.json")), serde_json::to_string_pretty(&table)?)?;
        let mut text = format!("# labels: {}\n", l.join(", "));
        for n in 0..=bound {
            text.push_str(&format!("# carrier {n}\n"));
            for line in law.table_lines(n)? {
                text.push_str(&line);
                text.push('\n');
            }
        }
        fs::write(dir.join(format!("solution-{i:03}.txt")), text)?;
    }
    Ok(())
}

fn run(cmd: &Cmd, ctx: &Ctx) -> Result<Output> {
    let n = ctx.n;
    Ok(match cmd {
        Cmd::Parse { expr } => {
            let f = ctx.functor(expr)?;
            let sizes: Vec<Value> = (0..=n).map(|k| f.size(k).map_or(Value::Null, |s| json!(s))).collect();
            let mut lines = vec![format!("canonical: {}", f.expr())];
            for (k, s) in sizes.iter().enumerate() {
                lines.push(format!("|F {k}| = {}", if s.is_null() { "over bound".to_string() } else { s.to_string() }));
            }
            Output {
                report: Report::new("parse", Verdict::Pass)
                    .with_details(json!({"functor": f.expr().to_string(), "sizes": sizes})),
                lines,
            }
        }
        Cmd::Object { expr, size } => {
            let f = ctx.functor(expr)?;
            let k = size.unwrap_or(n);
            let elems: Vec<String> = (0..f.size(k)?).map(|i| f.render(k, i)).collect();
            let lines = elems.iter().enumerate().map(|(i, e)| format!("{i}: {e}")).collect();
            Output {
                report: Report::new("object", Verdict::Pass)
                    .with_instances(elems.len() as u64)
                    .with_details(json!({"functor": f.expr().to_string(), "carrier": k, "elements": elems})),
                lines,
            }
        }
        Cmd::Map { expr, images, cod } => {
            let f = ctx.functor(expr)?;
            let g = FinFun::new(*cod, images.clone())?;
            let fg = f.apply_map(&g)?;
            let lines = (0..fg.dom())
                .map(|a| format!("{} ↦ {}", f.render(g.dom(), a), f.render(g.cod(), fg.apply(a))))
                .collect();
            Output {
                report: Report::new("map", Verdict::Pass).with_details(json!({
                    "functor": f.expr().to_string(),
                    "map": g.images(),
                    "cod": g.cod(),
                    "images": fg.images(),
                })),
                lines,
            }
        }
        Cmd::FunctorLaws { expr } => {
            let f = ctx.functor(expr)?;
            check_functor_laws(f.as_ref(), &f.expr().to_string(), n)?.into()
        }
        Cmd::Wpb { expr } => wpb_report(&*ctx.functor(expr)?, n, false)?.into(),
        Cmd::InverseImages { expr } => wpb_report(&*ctx.functor(expr)?, n, true)?.into(),
        Cmd::Monoid { name } => monoid_report(&*ctx.monoids.get(name)?).into(),
        Cmd::Barr { expr, rel } => {
            let f = ctx.functor(expr)?;
            let r = read_rel(rel)?;
            let lifted = barr_lift(&f, &r)?;
            let lines = lifted
                .pairs()
                .map(|(a, b)| format!("{} ~ {}", f.render(r.dom(), a), f.render(r.cod(), b)))
                .collect();
            Output {
                report: Report::new("barr", Verdict::Pass)
                    .with_instances(lifted.len() as u64)
                    .with_details(json!({"functor": f.expr().to_string(), "relation": r.to_json(), "lifted": lifted.to_json()})),
                lines,
            }
        }
        Cmd::ExtCheck { kind, expr } => check_extension_axioms(ctx.lifting(kind, expr)?.as_ref(), n)?.into(),
        Cmd::MonotoneCheck { kind, expr } => check_local_monotonicity(ctx.lifting(kind, expr)?.as_ref(), n)?.into(),
        Cmd::Lemma1 { kind, expr } => lemma1_battery(ctx.lifting(kind, expr)?.as_ref(), n)?.into(),
        Cmd::Lemma6 { kind, expr } => {
            let l = ctx.lifting(kind, expr)?;
            let (res, instances) = lemma6_battery(l.as_ref(), n)?;
            let names = [
                "locally monotone",
                "below identity",
                "above identity",
                "injection equality",
                "surjection equality",
                "codiagonal",
            ];
            let lines = names.iter().zip(res.values()).map(|(k, v)| format!("{k}: {v}")).collect();
            Output {
                report: res.to_report(&format!("{kind} over {expr}"), n, instances),
                lines,
            }
        }
        Cmd::Ewb { expr, k } => check_elementwise_bounded(&*ctx.functor(expr)?, &BoundedFamily::constant(*k)?, n)?.into(),
        Cmd::EwbWitness { expr, kappa } => check_ewb_witness_set(&*ctx.functor(expr)?, *kappa)?.into(),
        Cmd::Codiagonal { expr, images, cod } => {
            let e = FinFun::new(*cod, images.clone())?;
            check_codiagonal_formula(&*ctx.functor(expr)?, &e)?.1.into()
        }
        Cmd::MonadCheck { monad } => monad_axiom_check(&MonadSpec::by_name(monad)?, n)?.into(),
        Cmd::MorphismCheck { morphism } => monad_morphism_check(&MonadMorphism::by_name(morphism)?, n)?.into(),
        Cmd::LawCheck { law, expr, table } => {
            let start = Instant::now();
            let law = ctx.law(law, ctx.functor(expr)?)?;
            let report = check_distlaw_axioms(&law, n, ctx.support)?.to_report(start);
            let lines = match table {
                Some(k) => law.table_lines(*k)?,
                None => Vec::new(),
            };
            Output { report, lines }
        }
        Cmd::Search { expr } => {
            let cfg = SearchConfig {
                bound: n,
                support: ctx.support,
                jobs: ctx.jobs,
                timeout: ctx.timeout.map(Duration::from_secs),
                max_solutions: Some(ctx.max_solutions),
            };
            let outcome = search_laws(ctx.functor(expr)?, &cfg)?;
            let report = outcome.to_report()?;
            let labels: Vec<Vec<String>> = serde_json::from_value(report.details["labels"].clone())?;
            if let Some(dir) = &ctx.dump {
                dump_solutions(dir, &outcome.solutions, &labels, outcome.bound)?;
            }
            let mut lines = vec![outcome.conclusion()];
            for (i, l) in labels.iter().enumerate() {
                lines.push(format!("solution {i}: {}", l.join(", ")));
            }
            if !outcome.reference_solutions.is_empty() {
                lines.push(format!("registry laws among the solutions: {}", outcome.reference_solutions.join(", ")));
            }
            Output { report, lines }
        }
        Cmd::Classify { expr, tables } => {
            let f = ctx.functor(expr)?;
            let mut lines = Vec::new();
            let mut entries = Vec::new();
            for path in tables {
                let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
                let name = path.display().to_string();
                let law = DistLaw::from_json_table(f.clone(), &v, name.clone())?;
                let labels = classify_law(&f, &law, law.carrier_bound());
                lines.push(format!("{name}: {}", labels.join(", ")));
                entries.push(json!({"table": name, "labels": labels}));
            }
            Output {
                report: Report::new("classify", Verdict::Pass)
                    .with_instances(entries.len() as u64)
                    .with_details(json!({"functor": f.expr().to_string(), "tables": entries})),
                lines,
            }
        }
    })
}

/// Runs `cmd` on a worker thread, giving up after the configured timeout.
fn run_bounded(cmd: &Cmd, ctx: Ctx) -> Result<Output> {
    let Some(secs) = ctx.timeout else {
        return run(cmd, &ctx);
    };
    // search honours the deadline itself and returns a partial outcome
    let grace = if matches!(cmd, Cmd::Search { .. }) { 5 } else { 0 };
    let (tx, rx) = mpsc::channel();
    let owned = cmd.clone();
    std::thread::spawn(move || {
        let _ = tx.send(run(&owned, &ctx));
    });
    match rx.recv_timeout(Duration::from_secs(secs + grace)) {
        Ok(r) => r,
        Err(_) => Err(Error::Timeout(secs)),
    }
}

fn attach_invocation(report: &mut Report, args: &[String]) {
    if !report.details.is_object() {
        let old = std::mem::take(&mut report.details);
        report.details = if old.is_null() { json!({}) } else { json!({"value": old}) };
    }
    report.details["invocation"] = json!(args);
}

fn emit(out: &Output, format: Format, n: usize) {
    let sweep = !["parse", "object", "map", "barr", "classify"].contains(&out.report.command.as_str());
    match format {
        Format::Json => println!("{}", out.report.to_json()),
        Format::Text => {
            print!("{}", out.report.render_text(sweep.then_some(n)));
            for l in &out.lines {
                println!("{l}");
            }
        }
    }
}

/// Re-runs a recorded invocation with output options stripped.
fn rerun(invocation: &[String]) -> Result<Report> {
    let mut argv = vec!["rellift".to_string()];
    let mut skip = false;
    for a in invocation {
        if skip {
            skip = false;
            continue;
        }
        if ["--format", "--dump-solutions", "--verify-witness"].contains(&a.as_str()) {
            skip = true;
            continue;
        }
        if ["--format=", "--dump-solutions=", "--verify-witness="].iter().any(|p| a.starts_with(p)) {
            continue;
        }
        argv.push(a.clone());
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::usage(format!("recorded invocation: {e}")))?;
    let cmd = cli.cmd.clone().ok_or_else(|| Error::usage("recorded invocation has no command"))?;
    Ok(run_bounded(&cmd, Ctx::from_cli(&cli)?)?.report)
}

fn verify(path: &Path) -> Result<i32> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    if v.get("kind").is_some() && v.get("data").is_some() {
        let w: Witness = serde_json::from_value(v)?;
        return match recheck_witness(&w)? {
            Some(ok) => {
                println!("[{}] {}", w.kind, if ok { "re-validated" } else { "no longer holds" });
                Ok(if ok { 0 } else { 1 })
            }
            None => Err(Error::usage(format!(
                "witness kind `{}` needs the report it came from for replay",
                w.kind
            ))),
        };
    }
    let recorded: Report = serde_json::from_value(v)?;
    let invocation: Option<Vec<String>> = recorded
        .details
        .get("invocation")
        .map(|i| serde_json::from_value(i.clone()))
        .transpose()?;
    let mut fresh: Option<Report> = None;
    let replay = |fresh: &mut Option<Report>| -> Result<Report> {
        if fresh.is_none() {
            let inv = invocation
                .as_deref()
                .ok_or_else(|| Error::usage("report records no invocation to replay"))?;
            *fresh = Some(rerun(inv)?);
        }
        Ok(fresh.clone().unwrap())
    };
    if recorded.witnesses.is_empty() {
        let again = replay(&mut fresh)?;
        let ok = again.verdict == recorded.verdict;
        println!(
            "{}: recorded {}, replayed {}",
            recorded.command, recorded.verdict, again.verdict
        );
        return Ok(if ok { 0 } else { 1 });
    }
    let mut all = true;
    for w in &recorded.witnesses {
        let (ok, route) = match recheck_witness(w)? {
            Some(ok) => (ok, "direct"),
            None => {
                let again = replay(&mut fresh)?;
                let ok = again.witnesses.iter().any(|x| x.kind == w.kind && x.data == w.data);
                (ok, "replay")
            }
        };
        println!(
            "[{}] {} ({route}): {}",
            w.kind,
            if ok { "re-validated" } else { "no longer holds" },
            w.text
        );
        all &= ok;
    }
    Ok(if all { 0 } else { 1 })
}

fn main_inner() -> Result<i32> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if cli.jobs > 0 {
        std::env::set_var("RAYON_NUM_THREADS", cli.jobs.to_string());
    }
    if let Some(path) = &cli.verify_witness {
        return verify(path);
    }
    let Some(cmd) = cli.cmd.clone() else {
        return Err(Error::usage("no command given (see --help)"));
    };
    let format = cli.format;
    let n = cli.max_size as usize;
    let start = Instant::now();
    let mut out = run_bounded(&cmd, Ctx::from_cli(&cli)?).or_else(|e| match e {
        Error::Timeout(s) => {
            let r = Report::new(cmd.name(), Verdict::Inconclusive).with_details(json!({"timeout_s": s}));
            Ok(Output {
                report: r,
                lines: vec![format!("timeout after {s} s")],
            })
        }
        e => Err(e),
    })?;
    if out.report.elapsed_ms == 0 {
        out.report = out.report.timed(start);
    }
    attach_invocation(&mut out.report, &args);
    emit(&out, format, n);
    Ok(out.report.verdict.exit_code())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("rellift: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
