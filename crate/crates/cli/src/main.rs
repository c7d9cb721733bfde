//! Command-line front end: SKR curves, single-placement provisioning,
//! placement optimization, and the full experiment sweep.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hcfplan_core::config::Config;
use hcfplan_core::ga::evolve;
use hcfplan_core::net::{bundled_tokyo, generate_demands, Demand, PlacementVector, SpectrumState, Topology};
use hcfplan_core::phys::{Band, FiberKind};
use hcfplan_core::provision::Evaluator;
use hcfplan_core::skr::skr_curve;
use hcfplan_core::sweep::{
    aggregates_csv, apply_desk_preset, cband_share, records_csv, run_sweep, LoadLevel,
};

#[derive(Parser)]
#[command(
    name = "hcfplan",
    version,
    about = "Plan hollow-core fiber upgrades for QKD / classical coexistence"
)]
struct Cli {
    /// TOML configuration file; defaults are used for anything not set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the RNG base seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FiberArg {
    Ssmf,
    Hcf,
}

impl From<FiberArg> for FiberKind {
    fn from(f: FiberArg) -> Self {
        match f {
            FiberArg::Ssmf => FiberKind::Ssmf,
            FiberArg::Hcf => FiberKind::Hcf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BandArg {
    C,
    O,
}

impl From<BandArg> for Band {
    fn from(b: BandArg) -> Self {
        match b {
            BandArg::C => Band::C,
            BandArg::O => Band::O,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LoadArg {
    Half,
    Full,
}

impl From<LoadArg> for LoadLevel {
    fn from(l: LoadArg) -> Self {
        match l {
            LoadArg::Half => LoadLevel::Half,
            LoadArg::Full => LoadLevel::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

#[derive(Args)]
struct DemandSource {
    /// Demands file: `source,dest,rate_kbps` per line, `#` comments.
    #[arg(long)]
    demands_file: Option<PathBuf>,
    /// Generate this many demands from the seed instead.
    #[arg(long, default_value_t = 10)]
    num_demands: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Best/worst-channel secret-key rate vs span length, as CSV.
    SkrCurve {
        #[arg(long, value_enum)]
        fiber: FiberArg,
        #[arg(long, value_enum)]
        band: BandArg,
        #[arg(long, value_enum, default_value = "full")]
        load: LoadArg,
        #[arg(long, default_value_t = 0.0)]
        min_km: f64,
        #[arg(long, default_value_t = 500.0)]
        max_km: f64,
        #[arg(long, default_value_t = 1.0)]
        step_km: f64,
    },
    /// Provision demands on a fixed placement; per-demand CSV.
    Provision {
        /// Topology file; bundled Tokyo network when omitted.
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Placement bit-string, one character per link (1 = HCF).
        #[arg(long)]
        placement: String,
        #[arg(long, value_enum, default_value = "full")]
        load: LoadArg,
        /// Scale all link lengths by this factor.
        #[arg(long, default_value_t = 1.0)]
        factor: f64,
        #[command(flatten)]
        demands: DemandSource,
    },
    /// Optimize an HCF placement under a budget with the GA.
    Optimize {
        #[arg(long)]
        topology: Option<PathBuf>,
        /// HCF budget fraction between 0 and 1.
        #[arg(long)]
        budget: f64,
        #[arg(long, value_enum, default_value = "full")]
        load: LoadArg,
        #[arg(long, default_value_t = 1.0)]
        factor: f64,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        max_generations: Option<usize>,
        #[arg(long)]
        mutation_prob: Option<f64>,
        #[arg(long)]
        injection_fraction: Option<f64>,
        #[arg(long)]
        elite_fraction: Option<f64>,
        #[arg(long)]
        crossover_rate: Option<f64>,
        /// Objective weight on unserved key rate.
        #[arg(long)]
        alpha: Option<f64>,
        /// Objective weight on module cost.
        #[arg(long)]
        beta: Option<f64>,
        #[command(flatten)]
        demands: DemandSource,
    },
    /// Full experiment sweep: factors × loads × budgets × repetitions.
    Sweep {
        #[arg(long)]
        topology: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Comma-separated budget fractions, e.g. 0.0,0.1,0.4,1.0.
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<f64>>,
        /// Comma-separated length factors, e.g. 1,2,4,8.
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<f64>>,
        /// Comma-separated loads, e.g. half,full.
        #[arg(long, value_enum, value_delimiter = ',')]
        loads: Option<Vec<LoadArg>>,
        #[arg(long)]
        reps: Option<usize>,
        /// Also emit a gnuplot script next to the CSVs.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Print the full effective configuration as TOML.
    DumpConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.sweep.base_seed = seed;
        cfg.ga.seed = seed;
    }
    Ok(cfg)
}

fn load_topology(arg: Option<&PathBuf>, cfg: &Config) -> Result<Topology> {
    let path = match arg {
        Some(p) => p.clone(),
        None if !cfg.sweep.topology_path.is_empty() => PathBuf::from(&cfg.sweep.topology_path),
        None => return Ok(bundled_tokyo()),
    };
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Topology::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_demands(src: &DemandSource, topo: &Topology, cfg: &Config) -> Result<Vec<Demand>> {
    match &src.demands_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let mut demands = Vec::new();
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').map(str::trim).collect();
                if fields.len() != 3 {
                    anyhow::bail!("{}:{}: expected source,dest,rate_kbps", path.display(), idx + 1);
                }
                let demand = Demand {
                    source: fields[0].parse().context("bad source")?,
                    dest: fields[1].parse().context("bad dest")?,
                    rate_kbps: fields[2].parse().context("bad rate")?,
                };
                anyhow::ensure!(
                    demand.source != demand.dest,
                    "{}:{}: source and dest must differ",
                    path.display(),
                    idx + 1
                );
                anyhow::ensure!(
                    demand.rate_kbps > 0.0,
                    "{}:{}: rate must be positive",
                    path.display(),
                    idx + 1
                );
                anyhow::ensure!(
                    demand.source < topo.num_nodes() && demand.dest < topo.num_nodes(),
                    "{}:{}: demand endpoint outside topology",
                    path.display(),
                    idx + 1
                );
                demands.push(demand);
            }
            anyhow::ensure!(!demands.is_empty(), "no demands in {}", path.display());
            Ok(demands)
        }
        None => {
            anyhow::ensure!(src.num_demands >= 1, "need at least one demand");
            anyhow::ensure!(topo.num_nodes() >= 2, "topology too small for demands");
            Ok(generate_demands(topo, src.num_demands, cfg.sweep.rate_range, cfg.sweep.base_seed))
        }
    }
}

/// Print to stdout, exiting quietly when the reader hung up (e.g. a
/// downstream `head` closed the pipe).
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    emit(&format!("wrote {}\n", path.display()));
    Ok(path)
}

fn provenance(cfg: &Config) -> String {
    format!("# config_hash={}\n# base_seed={}\n", cfg.hash_hex(), cfg.sweep.base_seed)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    cfg.validate()?;
    match &cli.command {
        Command::SkrCurve { fiber, band, load, min_km, max_km, step_km } => {
            anyhow::ensure!(*step_km > 0.0 && *max_km >= *min_km, "bad length grid");
            let grid: Vec<f64> = {
                let mut v = Vec::new();
                let mut x = *min_km;
                while x <= *max_km + 1e-9 {
                    v.push(x);
                    x += *step_km;
                }
                v
            };
            let catalog = cfg.catalog();
            let level: LoadLevel = (*load).into();
            let classical = level.classical_load();
            let curve =
                skr_curve(&grid, (*fiber).into(), (*band).into(), &classical, &catalog, &cfg.qkd)?;
            let band: Band = (*band).into();
            let fiber: FiberKind = (*fiber).into();
            let mut out = provenance(&cfg);
            out.push_str("length_km,band,fiber,skr_min_kbps,skr_max_kbps\n");
            for p in &curve {
                out.push_str(&format!(
                    "{},{},{},{:.6},{:.6}\n",
                    p.length_km, band, fiber, p.skr_min_kbps, p.skr_max_kbps
                ));
            }
            write_output(&cli.out, &format!("skr_curve_{fiber}_{band}_{level}.csv"), &out)?;
        }
        Command::Provision { topology, placement, load, factor, demands } => {
            anyhow::ensure!(*factor > 0.0, "length factor must be positive");
            let topo = load_topology(topology.as_ref(), &cfg)?.scale_lengths(*factor);
            let budget_fraction =
                placement.chars().filter(|&c| c == '1').count() as f64 / placement.len() as f64;
            let placement = PlacementVector::from_bit_string(placement, budget_fraction)?;
            let demands = load_demands(demands, &topo, &cfg)?;
            let catalog = cfg.catalog();
            let level: LoadLevel = (*load).into();
            let classical = level.classical_load();
            let evaluator = Evaluator::new(&catalog, &cfg.qkd, &classical, cfg.ga.weights);
            let topo = topo.apply_placement(&placement)?;
            let mut state = SpectrumState::new(topo.num_links());
            let mut out = provenance(&cfg);
            out.push_str(
                "demand,source,dest,requested_kbps,relays,cost,served_kbps,unserved_kbps,channels\n",
            );
            for (i, d) in demands.iter().enumerate() {
                let r = evaluator.provision_demand(&topo, d, &mut state)?;
                let channels: Vec<String> = r
                    .assignments
                    .iter()
                    .map(|a| format!("{}{}@{}", a.band, a.slot, a.subpath))
                    .collect();
                out.push_str(&format!(
                    "{},{},{},{:.6},{},{},{:.6},{:.6},{}\n",
                    i,
                    d.source,
                    d.dest,
                    d.rate_kbps,
                    r.relay_count,
                    r.cost,
                    r.served_kbps,
                    r.unserved_kbps,
                    channels.join(";")
                ));
            }
            write_output(&cli.out, "provision.csv", &out)?;
        }
        Command::Optimize {
            topology,
            budget,
            load,
            factor,
            population,
            patience,
            max_generations,
            mutation_prob,
            injection_fraction,
            elite_fraction,
            crossover_rate,
            alpha,
            beta,
            demands,
        } => {
            anyhow::ensure!(*factor > 0.0, "length factor must be positive");
            let topo = load_topology(topology.as_ref(), &cfg)?.scale_lengths(*factor);
            let demands = load_demands(demands, &topo, &cfg)?;
            let mut ga = cfg.ga.clone();
            ga.budget_fraction = *budget;
            if let Some(v) = population {
                ga.population = *v;
            }
            if let Some(v) = patience {
                ga.patience = *v;
            }
            if let Some(v) = max_generations {
                ga.max_generations = *v;
            }
            if mutation_prob.is_some() {
                ga.mutation_prob = *mutation_prob;
            }
            if let Some(v) = injection_fraction {
                ga.injection_fraction = *v;
            }
            if let Some(v) = elite_fraction {
                ga.elite_fraction = *v;
            }
            if let Some(v) = crossover_rate {
                ga.crossover_rate = *v;
            }
            if let Some(v) = alpha {
                ga.weights.alpha = *v;
            }
            if let Some(v) = beta {
                ga.weights.beta = *v;
            }
            let catalog = cfg.catalog();
            let level: LoadLevel = (*load).into();
            let classical = level.classical_load();
            let evaluator = Evaluator::new(&catalog, &cfg.qkd, &classical, ga.weights);
            let (best, history) = evolve(&ga, &topo, &demands, &evaluator)?;
            let breakdown = best.fitness.as_ref().expect("evaluated");
            emit(&format!("best_placement {}\n", best.placement.bit_string()));
            emit(&format!(
                "fitness {} unserved_kbps {:.6} cost {}\n",
                breakdown.fitness, breakdown.total_unserved_kbps, breakdown.total_cost
            ));
            let mut out = provenance(&cfg);
            out.push_str("generation,best_fitness,mean_fitness,best_unserved_kbps,best_cost\n");
            for h in &history {
                out.push_str(&format!(
                    "{},{:.6},{:.6},{:.6},{}\n",
                    h.generation, h.best_fitness, h.mean_fitness, h.best_unserved_kbps, h.best_cost
                ));
            }
            write_output(&cli.out, "optimize_history.csv", &out)?;
        }
        Command::Sweep { topology, preset, budgets, factors, loads, reps, gnuplot } => {
            let mut cfg = cfg;
            if let Some(Preset::Desk) = preset {
                apply_desk_preset(&mut cfg);
            }
            if let Some(b) = budgets {
                cfg.sweep.budgets = b.clone();
            }
            if let Some(f) = factors {
                cfg.sweep.length_factors = f.clone();
            }
            if let Some(l) = loads {
                cfg.sweep.loads = l.iter().map(|&x| x.into()).collect();
            }
            if let Some(r) = reps {
                cfg.sweep.repetitions = *r;
            }
            cfg.validate()?;
            let topo = load_topology(topology.as_ref(), &cfg)?;
            let output = run_sweep(&cfg, &topo)?;
            let hash = cfg.hash_hex();
            write_output(
                &cli.out,
                "sweep_records.csv",
                &records_csv(&output.records, &hash, cfg.sweep.base_seed),
            )?;
            write_output(
                &cli.out,
                "sweep_aggregates.csv",
                &aggregates_csv(&output.aggregates, &hash, cfg.sweep.base_seed),
            )?;
            let shares = cband_share(&output.records)?;
            let mut share_csv = provenance(&cfg);
            share_csv.push_str("budget,mean_cband_pct\n");
            for (budget, pct) in &shares {
                share_csv.push_str(&format!("{budget},{pct:.6}\n"));
            }
            write_output(&cli.out, "sweep_cband_share.csv", &share_csv)?;
            if *gnuplot {
                emit_gnuplot(&cli.out, &cfg)?;
            }
        }
        Command::DumpConfig => {
            emit(&cfg.to_toml());
        }
    }
    Ok(())
}

fn emit_gnuplot(dir: &Path, cfg: &Config) -> Result<()> {
    let mut script = String::from(
        "set datafile separator ','\nset key outside\nset xlabel 'HCF budget fraction'\n",
    );
    script.push_str("set ylabel 'quantum modules'\nset term pngcairo size 1200,800\n");
    script.push_str("set output 'cost_vs_budget.png'\nplot \\\n");
    let mut clauses = Vec::new();
    for &factor in &cfg.sweep.length_factors {
        for &load in &cfg.sweep.loads {
            clauses.push(format!(
                "  \"<awk -F, '$1=={factor} && $2==\\\"{load}\\\"' sweep_aggregates.csv\" \
                 using 3:5:6 with yerrorlines title '{factor}x {load}'"
            ));
        }
    }
    script.push_str(&clauses.join(", \\\n"));
    script.push('\n');
    std::fs::create_dir_all(dir)?;
    let path = dir.join("sweep_plots.gp");
    std::fs::write(&path, script)?;
    println!("wrote {}", path.display());
    Ok(())
}
