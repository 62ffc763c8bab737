use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use xplainbench::datasets::{generate_alertness, AlertnessGenConfig};
use xplainbench::llm_client::{
    render_prompt, request_pipeline, ChatTransport, ExchangeConfig, HttpTransport, LlmError, PromptFamily, PromptTask,
    RecordingTransport, ReplayTransport,
};
use xplainbench::pipeline::{
    builtin_suite, exit_code, parse_spec, run_benchmark, run_pipeline, BenchmarkReport, BenchmarkRow, OutputFormat,
    PipelineSpec,
};

use crate::{AskLlmArgs, BenchArgs, Cli, Command, FamilyArg, Format, GenDataArgs, RunArgs, TaskArg};

pub fn dispatch(cli: &Cli) -> i32 {
    match &cli.command {
        Command::GenData(args) => gen_data(cli, args),
        Command::Run(args) => run(cli, args),
        Command::Bench(args) => bench(cli, args),
        Command::AskLlm(args) => ask_llm(cli, args),
    }
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    code
}

/// Writes `text` to `out` or stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| format!("stdout: {e}"))
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn gen_data(cli: &Cli, args: &GenDataArgs) -> i32 {
    let cfg = AlertnessGenConfig {
        n: args.n,
        seed: cli.seed.unwrap_or(AlertnessGenConfig::default().seed),
        hr_band_low: args.hr_band_low,
        hr_band_high: args.hr_band_high,
    };
    let ds = match generate_alertness(&cfg) {
        Ok(ds) => ds,
        Err(e) => return fail(exit_code::VALIDATION, e),
    };
    let positive = ds.class_counts()[1] as f64 / ds.n_samples() as f64;
    let balance = format!("{} rows, alert=1 fraction {positive:.4}", ds.n_samples());
    match &cli.out {
        Some(path) => {
            if let Err(e) = ds.write_csv(path) {
                return fail(exit_code::RUNTIME, e);
            }
            println!("wrote {}: {balance}", path.display());
        }
        None => match emit(None, &ds.to_csv_string()) {
            Ok(()) => eprintln!("{balance}"),
            Err(e) => return fail(exit_code::RUNTIME, e),
        },
    }
    exit_code::OK
}

/// Applies the command-line overrides shared by `run` and `bench`.
fn apply_overrides(spec: &mut PipelineSpec, seed: Option<u64>, tau: Option<f64>, eval_sample: Option<u64>) {
    if let Some(seed) = seed {
        spec.split.seed = seed;
        spec.model.seed = seed;
        spec.explainer.seed = seed;
        spec.explainer.eval_sample.seed = seed;
    }
    if let Some(tau) = tau {
        spec.metrics.tau = tau;
    }
    if let Some(n) = eval_sample {
        spec.explainer.eval_sample.size = n as usize;
    }
}

fn load_spec(path: &Path) -> Result<PipelineSpec, (i32, String)> {
    let text = fs::read_to_string(path).map_err(|e| (exit_code::RUNTIME, format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text).map_err(|errors| {
        let lines: Vec<String> = errors.0.iter().map(|e| format!("  {e}")).collect();
        (exit_code::VALIDATION, format!("invalid spec {}:\n{}", path.display(), lines.join("\n")))
    })
}

fn output_format(f: Format) -> OutputFormat {
    match f {
        Format::Md => OutputFormat::Md,
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    }
}

fn run(cli: &Cli, args: &RunArgs) -> i32 {
    let mut spec = match load_spec(&args.spec) {
        Ok(s) => s,
        Err((code, msg)) => return fail(code, msg),
    };
    apply_overrides(&mut spec, cli.seed, args.tau, args.eval_sample);
    let report = match run_pipeline(&spec) {
        Ok(r) => r,
        Err(e) => return fail(e.exit_code(), e),
    };
    let text = match cli.format {
        Format::Md => report.to_text(),
        Format::Json => report.to_json(),
        Format::Csv => {
            BenchmarkReport { rows: vec![BenchmarkRow::new(&spec, Ok(report.clone()))] }.render(OutputFormat::Csv)
        }
    };
    if let Err(e) = emit(cli.out.as_deref(), &with_newline(text)) {
        return fail(exit_code::RUNTIME, e);
    }
    if let Some(err) = &report.explainability_error {
        eprintln!("warning: explain stage failed: {err}");
        return exit_code::PARTIAL;
    }
    exit_code::OK
}

fn suite_from_dir(dir: &Path) -> Result<Vec<PipelineSpec>, (i32, String)> {
    let entries = fs::read_dir(dir).map_err(|e| (exit_code::RUNTIME, format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut specs = Vec::new();
    let mut problems = Vec::new();
    for path in &paths {
        match load_spec(path) {
            Ok(s) => specs.push(s),
            Err((_, msg)) => problems.push(msg),
        }
    }
    if !problems.is_empty() {
        return Err((exit_code::VALIDATION, problems.join("\n")));
    }
    if specs.is_empty() {
        return Err((exit_code::VALIDATION, format!("no *.json specs in {}", dir.display())));
    }
    Ok(specs)
}

fn bench(cli: &Cli, args: &BenchArgs) -> i32 {
    let mut suite = match &args.suite {
        Some(dir) => match suite_from_dir(dir) {
            Ok(s) => s,
            Err((code, msg)) => return fail(code, msg),
        },
        None => builtin_suite(&args.yeast.to_string_lossy()),
    };
    for spec in &mut suite {
        apply_overrides(spec, cli.seed, args.tau, args.eval_sample);
    }
    let report = match run_benchmark(&suite) {
        Ok(r) => r,
        Err(e) => return fail(e.exit_code(), e),
    };
    if let Err(e) = emit(cli.out.as_deref(), &with_newline(report.render(output_format(cli.format)))) {
        return fail(exit_code::RUNTIME, e);
    }
    if report.n_failed() > 0 {
        eprintln!("warning: {} of {} runs failed", report.n_failed(), report.rows.len());
    }
    report.exit_code()
}

fn prompt_task(t: TaskArg) -> PromptTask {
    match t {
        TaskArg::Binary => PromptTask::Binary,
        TaskArg::Multiclass => PromptTask::Multiclass,
    }
}

fn prompt_family(f: FamilyArg) -> PromptFamily {
    match f {
        FamilyArg::RandomForest => PromptFamily::RandomForest,
        FamilyArg::Gbt => PromptFamily::Gbt,
        FamilyArg::Mlp => PromptFamily::Mlp,
        FamilyArg::Lstm => PromptFamily::Lstm,
    }
}

fn ask_llm(cli: &Cli, args: &AskLlmArgs) -> i32 {
    let (task, family) = (prompt_task(args.task), prompt_family(args.family));
    if args.print_prompt {
        return match emit(cli.out.as_deref(), &render_prompt(task, family)) {
            Ok(()) => exit_code::OK,
            Err(e) => fail(exit_code::RUNTIME, e),
        };
    }
    let cfg = ExchangeConfig { model: args.model.clone(), temperature: args.temperature, max_retries: args.max_retries };
    if let Some(path) = &args.replay {
        let mut transport = match ReplayTransport::open(path, !args.lenient) {
            Ok(t) => t,
            Err(e) => return fail(exit_code::RUNTIME, e),
        };
        return ask(cli, args, &mut transport, &cfg, task, family);
    }
    let endpoint = args.endpoint.as_deref().expect("clap requires an endpoint or a fixture");
    match &args.record {
        Some(fixture_path) => {
            let mut transport = RecordingTransport::new(HttpTransport::new(endpoint));
            let code = ask(cli, args, &mut transport, &cfg, task, family);
            if let Err(e) = transport.fixture.save(fixture_path) {
                return fail(exit_code::RUNTIME, e);
            }
            code
        }
        None => ask(cli, args, &mut HttpTransport::new(endpoint), &cfg, task, family),
    }
}

fn ask(
    cli: &Cli,
    args: &AskLlmArgs,
    transport: &mut dyn ChatTransport,
    cfg: &ExchangeConfig,
    task: PromptTask,
    family: PromptFamily,
) -> i32 {
    let reply = request_pipeline(transport, cfg, task, family);
    let transcript = args
        .transcript
        .clone()
        .or_else(|| cli.out.as_ref().map(|o| PathBuf::from(format!("{}.exchange.json", o.display()))));
    if let Some(path) = &transcript {
        let text = serde_json::to_string_pretty(&reply.exchange).expect("exchange serializes");
        if let Err(e) = fs::write(path, with_newline(text)) {
            return fail(exit_code::RUNTIME, format!("cannot write {}: {e}", path.display()));
        }
    }
    match reply.result {
        Ok(spec) => match emit(cli.out.as_deref(), &with_newline(spec.pretty_json())) {
            Ok(()) => {
                if let Some(out) = &cli.out {
                    eprintln!("wrote {} after {} retries", out.display(), reply.exchange.retries);
                }
                exit_code::OK
            }
            Err(e) => fail(exit_code::RUNTIME, e),
        },
        Err(e) => {
            let code = match e {
                LlmError::InvalidSpec { .. } | LlmError::NoFencedBlock { .. } | LlmError::UnsupportedFamily(_) => {
                    exit_code::VALIDATION
                }
                _ => exit_code::RUNTIME,
            };
            if let Some(path) = &transcript {
                eprintln!("transcript: {}", path.display());
            }
            fail(code, e)
        }
    }
}
