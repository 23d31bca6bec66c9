use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lambda_coalescent::bridge::{render_svg, FiniteBridge};
use lambda_coalescent::chain::{simulate_chain, ChainError};
use lambda_coalescent::embed::{induced_rate_test, median_first_event_time, EmbedError, Selector};
use lambda_coalescent::flow::{simulate_flow, FlowError, FlowRequest, FlowStreams};
use lambda_coalescent::harness::{
    dichotomy_evidence, parse_kv, run, sha256_hex, Campaign, EvidenceConfig, ExperimentConfig, HarnessError, McReport,
    Mode,
};
use lambda_coalescent::measures::{classify, merger_rate, moment, mu_star, ExtendedReal, Regime, DEFAULT_I_MAX};
use lambda_coalescent::numfmt::fmt17;
use lambda_coalescent::rng::{split, Lane};
use lambda_coalescent::{MeasureError, MeasureSpec};
use serde::Serialize;
use thiserror::Error;

use crate::args::{
    ChainArgs, ClassifyArgs, Cli, Command, Common, FlowArgs, Format, MeasureArgs, RenderArgs, VerifyArgs,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_VAR: &str = "LCOAL_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        CliError::Harness(e.into())
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        CliError::Harness(e.into())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        CliError::Harness(e.into())
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        CliError::Harness(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::SimulateChain(a) => cmd_chain(a),
        Command::SimulateFlow(a) => cmd_flow(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Render(a) => cmd_render(a),
    }
}

fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

fn read_config(path: Option<&Path>) -> Result<BTreeMap<String, String>> {
    match path {
        None => Ok(BTreeMap::new()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(parse_kv(&text)?)
        }
    }
}

fn measure_from(args: &MeasureArgs, map: &BTreeMap<String, String>) -> Result<MeasureSpec> {
    let text = args.text().or_else(|| map.get("measure").cloned()).ok_or_else(|| {
        CliError::Usage("no measure given: use --beta, --kingman, --uniform, --x2 or --measure".into())
    })?;
    Ok(text.parse::<MeasureSpec>()?)
}

fn resolve_seed(flag: Option<u64>, map: &BTreeMap<String, String>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = map.get("seed") {
        return s
            .parse()
            .map_err(|_| CliError::Usage(format!("seed: cannot parse {s:?}")));
    }
    let s: u64 = rand::random();
    eprintln!("seed={s} (generated)");
    Ok(s)
}

fn emit(output: Option<&Path>, contents: &str) -> Result<()> {
    match output {
        None => {
            print!("{contents}");
            Ok(())
        }
        Some(p) => {
            let path = match std::env::var_os(OUT_DIR_VAR) {
                Some(dir) if p.is_relative() => Path::new(&dir).join(p),
                _ => p.to_path_buf(),
            };
            fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
        }
    }
}

fn ext(x: &ExtendedReal) -> String {
    fmt17(x.value)
}

#[derive(Serialize)]
struct Classification {
    tool_version: String,
    measure: String,
    regime: Regime,
    mu_minus2: f64,
    mu_minus1: f64,
    mu_star: f64,
    mu_star_implied: bool,
    diagnostics: Vec<String>,
}

fn cmd_classify(a: &ClassifyArgs) -> Result<()> {
    let map = read_config(a.config.as_deref())?;
    let m = measure_from(&a.measure, &map)?;
    let behaviour = classify(&m)?;
    let mu2 = moment(&m, -2, 1e-10)?;
    let mu1 = moment(&m, -1, 1e-10)?;
    let star = if behaviour.mu_star_implied {
        ExtendedReal {
            value: f64::INFINITY,
            diagnostics: None,
        }
    } else {
        mu_star(&m, 1e-10, DEFAULT_I_MAX)?
    };
    let mut diagnostics = Vec::new();
    for (name, x) in [("mu^-2", &mu2), ("mu^-1", &mu1), ("mu*", &star)] {
        if let Some(d) = &x.diagnostics {
            diagnostics.push(format!(
                "{name}: numeric {:?}, closed form finite = {}{}",
                d.numeric,
                d.closed_form_finite,
                if d.note.is_empty() {
                    String::new()
                } else {
                    format!(", {}", d.note)
                }
            ));
        }
    }
    if behaviour.mu_star_implied {
        diagnostics.push("mu*: infinite because mu^-1 < inf".into());
    }
    let out = match a.format {
        Format::Json => {
            let c = Classification {
                tool_version: version().into(),
                measure: m.to_string(),
                regime: behaviour.label,
                mu_minus2: mu2.value,
                mu_minus1: mu1.value,
                mu_star: star.value,
                mu_star_implied: behaviour.mu_star_implied,
                diagnostics,
            };
            serde_json::to_string_pretty(&c).expect("serializes") + "\n"
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# lcoal {}", version());
            let _ = writeln!(s, "# config_hash={}", sha256_hex(format!("measure={m}\n").as_bytes()));
            let _ = writeln!(s, "# measure={m}");
            let _ = writeln!(s, "regime={}", behaviour.label);
            let _ = writeln!(s, "mu_minus2={}", ext(&mu2));
            let _ = writeln!(s, "mu_minus1={}", ext(&mu1));
            let _ = writeln!(s, "mu_star={}", ext(&star));
            let _ = writeln!(s, "mu_star_implied={}", behaviour.mu_star_implied);
            for d in diagnostics {
                let _ = writeln!(s, "# {d}");
            }
            s
        }
        Format::Svg => return Err(CliError::Usage("classify writes csv or json".into())),
    };
    emit(a.output.as_deref(), &out)
}

/// Config file values overlaid with the common flags.
fn base_map(c: &Common) -> Result<BTreeMap<String, String>> {
    let mut map = read_config(c.config.as_deref())?;
    if let Some(m) = c.measure.text() {
        map.insert("measure".into(), m);
    }
    if !map.contains_key("measure") {
        return Err(CliError::Usage(
            "no measure given: use --beta, --kingman, --uniform, --x2, --measure or a config file".into(),
        ));
    }
    let seed = resolve_seed(c.seed, &map)?;
    map.insert("seed".into(), seed.to_string());
    if let Some(r) = c.replicates {
        map.insert("replicates".into(), r.to_string());
    }
    Ok(map)
}

fn set<T: ToString>(map: &mut BTreeMap<String, String>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.into(), v.to_string());
    }
}

fn write_report(c: &Common, report: &McReport) -> Result<()> {
    let out = match c.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
        Format::Svg => return Err(CliError::Usage("simulations write csv or json".into())),
    };
    eprintln!("runtime: {:.3} s", report.runtime.as_secs_f64());
    emit(c.output.as_deref(), &out)
}

fn write_jsonl(path: Option<&Path>, campaign: &Campaign) -> Result<()> {
    match path {
        Some(p) => emit(Some(p), &campaign.to_jsonl()),
        None => Ok(()),
    }
}

fn cmd_chain(a: &ChainArgs) -> Result<()> {
    let mut map = base_map(&a.common)?;
    set(&mut map, "n", a.n);
    set(&mut map, "t", a.t);
    set(&mut map, "snapshots", a.snapshots.as_ref());
    if a.embed {
        map.insert("mode".into(), "embed".into());
        map.insert(
            "selector".into(),
            if a.all_blocks { "all" } else { "nonsingleton" }.into(),
        );
    } else if a.all_blocks {
        return Err(CliError::Usage("--all-blocks requires --embed".into()));
    } else {
        map.insert("mode".into(), "chain".into());
    }
    let config = ExperimentConfig::from_map(&map)?;
    let campaign = Campaign::run(&config)?;
    write_jsonl(a.jsonl.as_deref(), &campaign)?;
    let report = campaign.finalize()?;
    if let Some(path) = &a.trajectory {
        let t_end = if config.mode == Mode::Embed {
            f64::INFINITY
        } else {
            config.t
        };
        let traj = simulate_chain(
            &config.measure,
            config.n,
            t_end,
            &[],
            &mut split(config.seed, config.first_replicate, Lane::Chain),
        )?;
        let mut text = String::new();
        let _ = writeln!(text, "# lcoal {}", version());
        let _ = writeln!(text, "# config_hash={}", report.config_hash);
        let _ = writeln!(text, "# seed={}", config.seed);
        let _ = writeln!(text, "# replicate={}", config.first_replicate);
        let _ = writeln!(text, "# time k merged_blocks blocks_after");
        text.push_str(&traj.to_lines());
        emit(Some(path), &text)?;
    }
    write_report(&a.common, &report)
}

fn cmd_flow(a: &FlowArgs) -> Result<()> {
    let mut map = base_map(&a.common)?;
    set(&mut map, "n", a.n);
    set(&mut map, "t", a.t);
    set(&mut map, "eps", a.eps.as_ref());
    set(&mut map, "thresholds", a.thresholds.as_ref());
    map.insert("mode".into(), "flow".into());
    let config = ExperimentConfig::from_map(&map)?;
    let campaign = Campaign::run(&config)?;
    write_jsonl(a.jsonl.as_deref(), &campaign)?;
    write_report(&a.common, &campaign.finalize()?)
}

#[derive(Serialize)]
struct VerifyLine {
    name: String,
    passed: bool,
    detail: String,
}

fn line(name: &str, passed: bool, detail: String) -> VerifyLine {
    VerifyLine {
        name: name.into(),
        passed,
        detail,
    }
}

fn parse_grid(text: Option<&String>) -> Result<Vec<f64>> {
    match text {
        None => Ok((2..=8).map(|j| 0.5f64.powi(j)).collect()),
        Some(s) => s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("eps: cannot parse {x:?}")))
            })
            .collect(),
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<()> {
    let map = base_map(&a.common)?;
    let m: MeasureSpec = map["measure"].parse()?;
    let seed: u64 = map["seed"].parse().expect("seed resolved");
    let reps: usize = match map.get("replicates") {
        Some(r) => r
            .parse()
            .map_err(|_| CliError::Usage(format!("replicates: cannot parse {r:?}")))?,
        None => 10_000,
    };
    if reps < 2 {
        return Err(CliError::Usage("replicates must be at least 2".into()));
    }
    if !(a.t > 0.0 && a.t.is_finite()) {
        return Err(CliError::Usage(format!("t must be positive, got {}", a.t)));
    }
    let grid = parse_grid(a.eps.as_ref())?;
    let regime = classify(&m)?.label;
    let mut lines = Vec::new();
    let mut text = String::new();

    let mut worst: f64 = 0.0;
    for i in 2..=20u64 {
        for k in 2..=i {
            let d = merger_rate(&m, i, k)? - merger_rate(&m, i + 1, k)? - merger_rate(&m, i + 1, k + 1)?;
            worst = worst.max(d.abs());
        }
    }
    lines.push(line(
        "rate identity",
        worst <= 1e-9,
        format!("max error {worst:.3e} for 2 <= k <= i <= 20"),
    ));

    let mut chain = ExperimentConfig::new(m.clone(), Mode::Chain, seed);
    chain.n = 3;
    chain.t = a.t;
    chain.replicates = reps;
    let report = run(&chain)?;
    let law = report.test(&format!("partition_law[t={}]", a.t)).expect("oracle row");
    lines.push(line(
        "chain vs matrix exponential",
        law.p_value > 0.001,
        format!("n = 3, chi-square {:.4}, p = {:.4}", law.statistic, law.p_value),
    ));
    let z = report.test(&format!("unmerged12[t={}]", a.t)).expect("oracle row");
    lines.push(line(
        "restriction consistency",
        z.statistic.abs() <= 3.0,
        format!("P[1, 2 unmerged] z = {:.3} against exp(-lambda_22 t)", z.statistic),
    ));

    if matches!(regime, Regime::A | Regime::B) {
        let mut flow = ExperimentConfig::new(m.clone(), Mode::Flow, seed);
        flow.t = a.t;
        flow.n = 0;
        flow.replicates = reps;
        flow.eps_grid = grid.clone();
        flow.thresholds = Vec::new();
        let report = run(&flow)?;
        let zs: Vec<f64> = grid
            .iter()
            .map(|eps| report.test(&format!("dust[eps={eps}]")).expect("oracle row").statistic)
            .collect();
        let worst = zs.iter().fold(0.0f64, |a, z| a.max(z.abs()));
        lines.push(line(
            "dust Campbell",
            worst <= 3.0,
            format!("max |z| = {worst:.3} over {} levels", grid.len()),
        ));
        let err = report.estimate("dust_product_error").expect("row").mean;
        lines.push(line("dust product", err <= 1e-12, format!("mean max error {err:.3e}")));
        let table = dichotomy_evidence(&m, a.t, &EvidenceConfig::new(grid.clone(), reps, seed))?;
        text.push_str(&table.to_string());
        for c in &table.checks {
            lines.push(line(&c.name, c.passed, c.detail.clone()));
        }
    } else {
        lines.push(line(
            "dichotomy evidence",
            true,
            format!("skipped: regime {regime}, decided by mu*"),
        ));
    }

    let t_ref = median_first_event_time(&m, 6, 10_001, &mut split(seed, 0, Lane::Aux))?;
    let embed = induced_rate_test(&m, 6, t_ref, reps, seed, Selector::NonSingleton)?;
    for s in &embed.strata {
        let ok = s.ks_p > 0.001 && s.size_p.is_none_or(|p| p > 0.001);
        lines.push(line(
            &format!("induced coalescent l={}", s.l),
            ok,
            format!(
                "{} samples, KS p = {:.4}{}",
                s.samples,
                s.ks_p,
                s.size_p.map_or(String::new(), |p| format!(", size p = {p:.4}"))
            ),
        ));
    }
    for (l, k) in &embed.skipped {
        let _ = writeln!(text, "induced coalescent l={l}: skipped, {k} samples");
    }

    let out = match a.common.format {
        Format::Json => {
            serde_json::to_string_pretty(&serde_json::json!({
                "tool_version": version(),
                "measure": m.to_string(),
                "regime": regime,
                "seed": seed,
                "replicates": reps,
                "checks": lines,
            }))
            .expect("serializes")
                + "\n"
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# lcoal {}", version());
            let resolved = format!("measure={m}\nt={}\nreplicates={reps}\nseed={seed}\n", a.t);
            let _ = writeln!(s, "# config_hash={}", sha256_hex(resolved.as_bytes()));
            let _ = writeln!(s, "# seed={seed}");
            for l in resolved.lines() {
                let _ = writeln!(s, "# {l}");
            }
            let _ = writeln!(s, "regime={regime}");
            s.push_str(&text);
            for l in &lines {
                let _ = writeln!(s, "{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            s
        }
        Format::Svg => return Err(CliError::Usage("verify writes csv or json".into())),
    };
    emit(a.common.output.as_deref(), &out)
}

fn cmd_render(a: &RenderArgs) -> Result<()> {
    let (bridge, resolved, seed) = if let Some(text) = &a.bridge {
        let b: FiniteBridge = text.parse().map_err(|e| CliError::Usage(format!("bridge: {e}")))?;
        (b, format!("bridge={text}\n"), None)
    } else if let Some(text) = &a.simple {
        let (x, u) = text
            .split_once(',')
            .and_then(|(x, u)| Some((x.trim().parse::<f64>().ok()?, u.trim().parse::<f64>().ok()?)))
            .ok_or_else(|| CliError::Usage(format!("simple: expected X,U, got {text:?}")))?;
        let b = FiniteBridge::simple(x, u).map_err(|e| CliError::Usage(format!("simple: {e}")))?;
        (b, format!("simple={x},{u}\n"), None)
    } else {
        let m = measure_from(&a.measure, &BTreeMap::new())?;
        let seed = resolve_seed(a.seed, &BTreeMap::new())?;
        let req = FlowRequest {
            t: a.t,
            eps_grid: vec![a.eps],
            thresholds: Vec::new(),
            paint_n: None,
            track: false,
        };
        let r = simulate_flow(&m, &req, FlowStreams::new(seed, 0))?;
        (
            r.bridge,
            format!("measure={m}\nt={}\neps={}\nseed={seed}\n", a.t, a.eps),
            Some(seed),
        )
    };
    let hash = sha256_hex(resolved.as_bytes());
    let seed_text = seed.map_or("none".to_string(), |s| s.to_string());
    let out = match a.format {
        Format::Svg => format!(
            "<!-- lcoal {} config_hash={hash} seed={seed_text} -->\n{}",
            version(),
            render_svg(&bridge)
        ),
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# lcoal {}", version());
            let _ = writeln!(s, "# config_hash={hash}");
            let _ = writeln!(s, "# seed={seed_text}");
            let _ = writeln!(s, "lo,hi,size");
            for h in bridge.holes() {
                let _ = writeln!(s, "{},{},{}", fmt17(h.lo), fmt17(h.hi), fmt17(h.size));
            }
            let _ = writeln!(s, "# dust={}", fmt17(bridge.dust()));
            let _ = writeln!(s, "# bridge={bridge}");
            s
        }
        Format::Json => {
            let holes: Vec<[f64; 3]> = bridge.holes().iter().map(|h| [h.lo, h.hi, h.size]).collect();
            serde_json::to_string_pretty(&serde_json::json!({
                "tool_version": version(),
                "config_hash": hash,
                "seed": seed,
                "bridge": bridge.to_string(),
                "dust": bridge.dust(),
                "holes": holes,
            }))
            .expect("serializes")
                + "\n"
        }
    };
    emit(a.output.as_deref(), &out)
}
