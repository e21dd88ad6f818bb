use clap::{Args, Parser, Subcommand};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use wavefarm::config::{Preset, RunConfig};
use wavefarm::error::Error;
use wavefarm::farm::{farm_power, FarmDesign};
use wavefarm::hydro::{
    generate_training_data, load_dataset, pair_body, save_dataset, single_body, PairConfig,
    WecGeometry,
};
use wavefarm::optim::{decode_design, optimize, OptimResult};
use wavefarm::surrogate::{assemble_farm, train_bundle, SurrogateBundle, TrainMetrics};
use wavefarm::waves::{
    estimate_climate, read_wave_samples, synthetic_wave_samples, WaveClimate, WaveSample,
};

#[derive(Parser)]
#[command(
    name = "wavefarm",
    version,
    about = "Surrogate-assisted plant, control, and layout design of heaving-cylinder WEC farms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration overlay applied over the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base preset: desk | paper.
    #[arg(long, global = true, default_value = "desk")]
    preset: String,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (0 = library default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; defaults to $WAVEFARM_OUT or ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dotted-path config overrides, e.g. --set optimize.budget=150.
    #[arg(long = "set", global = true)]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate oracle training datasets, synthetic wave samples, and the
    /// wave climate.
    GenData,
    /// Train the 30-model surrogate bundle from the generated datasets.
    Train,
    /// Sweep surrogate predictions against the oracle for one configuration.
    Validate(ValidateArgs),
    /// Run the concurrent plant/control/layout search.
    Optimize {
        /// Include wall-clock time in report.json (breaks byte-for-byte
        /// reproducibility of the report across runs).
        #[arg(long)]
        timing: bool,
    },
    /// Merge optimization reports into one table.
    Report {
        /// report.json files to merge.
        paths: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct ValidateArgs {
    /// WEC radius (m).
    #[arg(long)]
    r: f64,
    /// WEC draft (m).
    #[arg(long)]
    d: f64,
    /// Pair distance (m); switches to the two-body sweep.
    #[arg(long)]
    dist: Option<f64>,
    /// Pair angle (rad); requires --dist.
    #[arg(long, requires = "dist")]
    theta: Option<f64>,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::OutOfRange(_) => 2,
                Error::Infeasible(_) => 4,
                _ => 3,
            }
        }
    });
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("WAVEFARM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let preset: Preset = cli.preset.parse()?;
    let base = RunConfig::preset(preset);
    let file_text = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path)?),
        None => None,
    };
    let mut cfg = base.merged(file_text.as_deref(), &cli.sets)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if cfg.threads > 0 {
        // ignore the error if a pool already exists (tests call run() twice)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    Ok(cfg)
}

fn config_hash(cfg: &RunConfig) -> String {
    // FNV-1a over the canonical JSON; identification only
    let text = serde_json::to_string(cfg).expect("config serializes");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    format!("{hash:016x}")
}

fn run(cli: Cli) -> Result<i32, Error> {
    let cfg = load_config(&cli)?;
    let dir = out_dir(&cli);
    std::fs::create_dir_all(&dir)?;
    match &cli.command {
        Command::GenData => cmd_gen_data(&cfg, &dir),
        Command::Train => cmd_train(&cfg, &dir),
        Command::Validate(args) => cmd_validate(&dir, args),
        Command::Optimize { timing } => cmd_optimize(&cfg, &dir, *timing),
        Command::Report { paths } => cmd_report(&dir, paths),
    }
}

fn write_wave_samples(path: &Path, samples: &[WaveSample]) -> Result<(), Error> {
    let mut text = String::from("year,hs,tp\n");
    for s in samples {
        text.push_str(&format!("{},{},{}\n", s.year, s.hs, s.tp));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_gen_data(cfg: &RunConfig, dir: &Path) -> Result<i32, Error> {
    let grid = cfg.frequency_grid()?;
    let ranges = cfg.training_ranges();
    let (one, two) = generate_training_data(&ranges, &grid, cfg.data.n_s1, cfg.data.n_s2, cfg.seed)?;
    save_dataset(&one, &dir.join("hydro_one.txt"))?;
    save_dataset(&two, &dir.join("hydro_two.txt"))?;

    let samples = match &cfg.climate.waves_path {
        Some(path) => read_wave_samples(Path::new(path))?,
        None => synthetic_wave_samples(
            cfg.climate.n_yr,
            cfg.climate.samples_per_year,
            cfg.seed.wrapping_add(0x57A7),
        ),
    };
    write_wave_samples(&dir.join("waves.csv"), &samples)?;
    let climate = estimate_climate(
        &samples,
        cfg.climate.n_gq,
        cfg.climate.n_yr,
        cfg.climate_box(),
        cfg.bandwidth_policy(),
    )?;
    std::fs::write(dir.join("climate.json"), serde_json::to_string(&climate)?)?;

    println!(
        "generated {} one-body and {} two-body records (seed {})",
        one.len(),
        two.len(),
        cfg.seed
    );
    println!(
        "wave climate: {} years x {} samples on a {}x{} node grid",
        cfg.climate.n_yr,
        cfg.climate.samples_per_year,
        cfg.climate.n_gq,
        cfg.climate.n_gq
    );
    Ok(0)
}

fn write_metrics(dir: &Path, metrics: &TrainMetrics) -> Result<(), Error> {
    let mut csv = String::from("# wavefarm-metrics v1\nname,test_rmse,relative_rmse\n");
    for m in &metrics.models {
        csv.push_str(&format!("{},{},{}\n", m.name, m.test_rmse, m.relative_rmse));
    }
    std::fs::write(dir.join("train_metrics.csv"), csv)?;
    std::fs::write(dir.join("train_metrics.json"), serde_json::to_string(metrics)?)?;
    Ok(())
}

fn cmd_train(cfg: &RunConfig, dir: &Path) -> Result<i32, Error> {
    let one = load_dataset(&dir.join("hydro_one.txt"))?;
    let two = load_dataset(&dir.join("hydro_two.txt"))?;
    let (bundle, metrics) = train_bundle(&one, &two, cfg.rho, cfg.g, &cfg.bundle_train_config())?;
    bundle.save(&dir.join("bundle.json"))?;
    write_metrics(dir, &metrics)?;
    println!("trained {} models (seed {})", metrics.model_count(), cfg.seed);
    for m in &metrics.models {
        println!("  {:<18} test RMSE {:>12.6e} (relative {:.3})", m.name, m.test_rmse, m.relative_rmse);
    }
    Ok(0)
}

struct SweepTarget {
    name: &'static str,
    oracle: Vec<f64>,
    predicted: Vec<f64>,
}

fn relative_errors(targets: &[SweepTarget]) -> Vec<(String, f64, f64)> {
    // real and imaginary excitation parts share the complex-magnitude scale
    // (the imaginary part alone can be identically zero)
    let fe_scale = targets
        .iter()
        .filter(|t| t.name.starts_with("fe"))
        .flat_map(|t| t.oracle.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    targets
        .iter()
        .map(|t| {
            let own = t.oracle.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let scale = if t.name.starts_with("fe") {
                fe_scale.max(own)
            } else {
                own
            }
            .max(1e-300);
            let rels: Vec<f64> = t
                .oracle
                .iter()
                .zip(&t.predicted)
                .map(|(o, p)| (o - p).abs() / scale)
                .collect();
            let max = rels.iter().cloned().fold(0.0, f64::max);
            let mean = rels.iter().sum::<f64>() / rels.len() as f64;
            (t.name.to_string(), max, mean)
        })
        .collect()
}

fn cmd_validate(dir: &Path, args: &ValidateArgs) -> Result<i32, Error> {
    let bundle = SurrogateBundle::load(&dir.join("bundle.json"))?;
    let geom = WecGeometry::new(args.r, args.d)?;
    let omegas = bundle.grid.omegas().to_vec();
    let (targets, csv_name) = match args.dist {
        None => {
            let mut t = vec![
                SweepTarget { name: "a", oracle: vec![], predicted: vec![] },
                SweepTarget { name: "b", oracle: vec![], predicted: vec![] },
                SweepTarget { name: "fe_re", oracle: vec![], predicted: vec![] },
                SweepTarget { name: "fe_im", oracle: vec![], predicted: vec![] },
            ];
            for &w in &omegas {
                let o = single_body(geom, w, bundle.depth, bundle.g, bundle.rho)?;
                let p = bundle.predict_1body(&geom, w)?;
                t[0].oracle.push(o.added_mass);
                t[0].predicted.push(p.added_mass);
                t[1].oracle.push(o.damping);
                t[1].predicted.push(p.damping);
                t[2].oracle.push(o.excitation.re);
                t[2].predicted.push(p.excitation.re);
                t[3].oracle.push(o.excitation.im);
                t[3].predicted.push(p.excitation.im);
            }
            (t, "validate_1body.csv")
        }
        Some(dist) => {
            let theta = args.theta.unwrap_or(0.0);
            let pair = PairConfig::new(geom, dist, theta)?;
            let mut t = vec![
                SweepTarget { name: "a11", oracle: vec![], predicted: vec![] },
                SweepTarget { name: "a12", oracle: vec![], predicted: vec![] },
                SweepTarget { name: "b11", oracle: vec![], predicted: vec![] },
                SweepTarget { name: "b12", oracle: vec![], predicted: vec![] },
                SweepTarget { name: "fe_re", oracle: vec![], predicted: vec![] },
                SweepTarget { name: "fe_im", oracle: vec![], predicted: vec![] },
            ];
            for &w in &omegas {
                let o = pair_body(&pair, w, bundle.depth, bundle.g, bundle.rho)?;
                let p = bundle.predict_2body(&pair, w)?;
                t[0].oracle.push(o.a11);
                t[0].predicted.push(p.a11);
                t[1].oracle.push(o.a12);
                t[1].predicted.push(p.a12);
                t[2].oracle.push(o.b11);
                t[2].predicted.push(p.b11);
                t[3].oracle.push(o.b12);
                t[3].predicted.push(p.b12);
                t[4].oracle.push(o.fe1.re);
                t[4].predicted.push(p.fe1.re);
                t[5].oracle.push(o.fe1.im);
                t[5].predicted.push(p.fe1.im);
            }
            (t, "validate_2body.csv")
        }
    };

    let mut csv = String::from("# wavefarm-validate v1\nomega");
    for t in &targets {
        csv.push_str(&format!(",{}_oracle,{}_pred", t.name, t.name));
    }
    csv.push('\n');
    for (i, w) in omegas.iter().enumerate() {
        csv.push_str(&format!("{w}"));
        for t in &targets {
            csv.push_str(&format!(",{},{}", t.oracle[i], t.predicted[i]));
        }
        csv.push('\n');
    }
    std::fs::write(dir.join(csv_name), csv)?;

    let summary = relative_errors(&targets);
    let json: Vec<serde_json::Value> = summary
        .iter()
        .map(|(name, max, mean)| {
            serde_json::json!({"target": name, "max_rel": max, "mean_rel": mean})
        })
        .collect();
    std::fs::write(
        dir.join("validate_summary.json"),
        serde_json::to_string(&serde_json::json!({
            "format_version": 1,
            "r": args.r,
            "d": args.d,
            "dist": args.dist,
            "theta": args.theta,
            "targets": json,
        }))?,
    )?;
    println!("validation sweep over {} frequencies:", omegas.len());
    for (name, max, mean) in &summary {
        println!("  {name:<6} max rel {max:.4e}  mean rel {mean:.4e}");
    }
    Ok(0)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct OptimizeReport {
    format_version: u32,
    n_wec: usize,
    seed: u64,
    config_hash: String,
    r: f64,
    d: f64,
    stiffness: Vec<f64>,
    damping: Vec<f64>,
    positions: Vec<[f64; 2]>,
    p_v: Option<f64>,
    objective: f64,
    residuals: Vec<f64>,
    feasible: bool,
    n_evals: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

fn write_optimize_outputs(
    dir: &Path,
    cfg: &RunConfig,
    result: &OptimResult,
    design: &FarmDesign,
    wall_time_s: Option<f64>,
) -> Result<(), Error> {
    let report = OptimizeReport {
        format_version: 1,
        n_wec: result.n_wec,
        seed: result.seed,
        config_hash: config_hash(cfg),
        r: design.geom.r,
        d: design.geom.d,
        stiffness: design.pto.stiffness.clone(),
        damping: design.pto.damping.clone(),
        positions: design.positions.clone(),
        p_v: result.p_v,
        objective: result.best_objective,
        residuals: result.residuals.clone(),
        feasible: result.feasible,
        n_evals: result.n_evals,
        wall_time_s,
    };
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;

    let mut trace = String::from("# wavefarm-trace v1\neval_index,best_objective\n");
    for p in &result.trace {
        trace.push_str(&format!("{},{}\n", p.eval_index, p.best_objective));
    }
    std::fs::write(dir.join("trace.csv"), trace)?;

    let mut layout = String::from("# wavefarm-layout v1\nbody,x,y\n");
    for (i, p) in design.positions.iter().enumerate() {
        layout.push_str(&format!("{},{},{}\n", i + 1, p[0], p[1]));
    }
    std::fs::write(dir.join("layout.csv"), layout)?;
    Ok(())
}

fn cmd_optimize(cfg: &RunConfig, dir: &Path, timing: bool) -> Result<i32, Error> {
    let bundle = SurrogateBundle::load(&dir.join("bundle.json"))?;
    let climate: WaveClimate =
        serde_json::from_str(&std::fs::read_to_string(dir.join("climate.json"))?)?;
    let started = Instant::now();
    let result = optimize(
        cfg.optimize.n_wec,
        &cfg.bounds(),
        &bundle,
        &climate,
        &cfg.optim_config(),
    )?;
    let elapsed = started.elapsed().as_secs_f64();
    let design = decode_design(&result.best_vector, result.n_wec)?;
    write_optimize_outputs(dir, cfg, &result, &design, timing.then_some(elapsed))?;

    if result.feasible {
        // stdout timing is informational; report.json stays reproducible
        println!(
            "best design: R={:.3} m, D={:.3} m, p_v={:.6e} W/m^3 ({} evaluations, {:.1} s)",
            design.geom.r,
            design.geom.d,
            result.p_v.unwrap_or(f64::NAN),
            result.n_evals,
            elapsed
        );
        // cross-check the reported power through the pipeline
        let matrices = assemble_farm(&bundle, &design, &bundle.grid.clone())?;
        let power = farm_power(
            &matrices,
            &design,
            &climate,
            bundle.rho,
            bundle.g,
            &cfg.optim_config().eval.eff,
            cfg.optimize.year_agg,
        )?;
        println!("pipeline check: p_v={:.6e} W/m^3", power.p_v);
        Ok(0)
    } else {
        println!(
            "no feasible design found within {} evaluations; best penalized objective {:.3e}",
            result.n_evals, result.best_objective
        );
        Ok(4)
    }
}

fn cmd_report(dir: &Path, paths: &[PathBuf]) -> Result<i32, Error> {
    if paths.is_empty() {
        return Err(Error::Config("report expects at least one report.json path".into()));
    }
    let mut rows = Vec::new();
    for path in paths {
        let report: OptimizeReport =
            serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| {
                Error::Schema(format!("{}: {e}", path.display()))
            })?;
        if report.format_version != 1 {
            return Err(Error::Schema(format!(
                "{}: unsupported report format_version {}",
                path.display(),
                report.format_version
            )));
        }
        rows.push(report);
    }
    rows.sort_by_key(|r| r.n_wec);

    let mut csv = String::from("# wavefarm-summary v1\nn_wec,r,d,p_v,wall_time_s,seed,feasible\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n_wec,
            r.r,
            r.d,
            r.p_v.map(|v| v.to_string()).unwrap_or_default(),
            r.wall_time_s.map(|v| v.to_string()).unwrap_or_default(),
            r.seed,
            r.feasible
        ));
    }
    let out_csv = dir.join("summary.csv");
    std::fs::write(&out_csv, &csv)?;
    let json = serde_json::json!({
        "format_version": 1,
        "runs": rows.iter().map(|r| serde_json::json!({
            "n_wec": r.n_wec,
            "r": r.r,
            "d": r.d,
            "p_v": r.p_v,
            "wall_time_s": r.wall_time_s,
            "seed": r.seed,
            "feasible": r.feasible,
        })).collect::<Vec<_>>(),
    });
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&json)?)?;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(csv.as_bytes());
    Ok(0)
}
