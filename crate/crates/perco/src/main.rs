//! Command-line driver: load a TOML experiment config, run one of the
//! studies, write deterministic CSV/JSON/JSONL reports into the output
//! directory. Identical config and seed give byte-identical files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use perco::experiments::config::{EnsembleChoice, SpinInit};
use perco::experiments::report;
use perco::experiments::{self, ExperimentConfig};
use perco::{groundstate, integrals, lattice, mcmc, mix_seed, stats};

/// Seed stream tags; chains, integrals and lattice dynamics never share a
/// generator stream even under one master seed.
const INTEGRALS_STREAM: u64 = 0x0012_7000_0000_0000;
const ISING_INIT_STREAM: u64 = 0x0015_1000_0000_0000;
const ISING_RUN_STREAM: u64 = 0x0015_1000_0000_0001;

#[derive(Parser)]
#[command(
    name = "perco",
    version,
    about = "Gibbs point process simulator and percolation bounds toolkit"
)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the seed in [mcmc].
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory in [output].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel grids (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One chain at the first grid point: per-sample JSONL stream plus the
    /// final configuration snapshot.
    Sample,
    /// Grand-canonical sweep over the (beta, mu or z) grid.
    SweepMu,
    /// Canonical sweep over the (beta, N) grid.
    SweepCanonical,
    /// Ground-state energy table E_k, e_inf and nu*.
    Groundstate,
    /// Cluster partition functions Z_k with rigorous upper bounds.
    ClusterIntegrals,
    /// Lattice-gas Glauber dynamics through the Ising dictionary.
    Ising,
    /// Empty-region decay rate fit.
    EmptyDecay,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match experiments::load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.mcmc.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.display().to_string();
    }
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn dispatch(cmd: &Command, config: &ExperimentConfig) -> Result<(), AnyError> {
    std::fs::create_dir_all(&config.output.dir)?;
    match cmd {
        Command::Sample => sample(config),
        Command::SweepMu => sweep(config, EnsembleChoice::GrandCanonical),
        Command::SweepCanonical => sweep(config, EnsembleChoice::Canonical),
        Command::Groundstate => groundstate_cmd(config),
        Command::ClusterIntegrals => cluster_integrals(config),
        Command::Ising => ising(config),
        Command::EmptyDecay => empty_decay(config),
    }
}

fn out_path(config: &ExperimentConfig, name: &str) -> PathBuf {
    Path::new(&config.output.dir).join(name)
}

fn wants(config: &ExperimentConfig, fmt: &str) -> bool {
    config.output.formats.iter().any(|f| f == fmt)
}

fn write_file(path: &Path, contents: &str) -> Result<(), AnyError> {
    std::fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn sample(config: &ExperimentConfig) -> Result<(), AnyError> {
    let points = experiments::sweep::grid_points(config);
    let (beta, param) = points[0];
    let potential = config.potential();
    let cutoff = potential.range().max(config.grid.r);
    // Same stream as chain 0 of grid point 0 in a sweep, on purpose: the
    // stream a sweep aggregates is the one sample lets you inspect.
    let mut state = mcmc::init_chain(
        config.periodic_box(),
        potential,
        beta,
        config.ensemble_at(beta, param),
        mix_seed(config.mcmc.seed, 0),
        config.mcmc.init.into(),
        cutoff,
    )?;
    let opts = mcmc::RunOptions {
        sweeps: config.mcmc.sweeps,
        burn_in: config.mcmc.burn_in,
        thin: config.mcmc.thin,
        connectivity_r: config.grid.r,
        k_max: config.grid.k_max,
        tune: config.mcmc.tune,
    };
    let series = mcmc::run(&mut state, &opts);
    write_file(
        &out_path(config, "series.jsonl"),
        &report::series_jsonl(&series, config),
    )?;
    let mut snapshot = Vec::new();
    state.config.dump_snapshot(&mut snapshot)?;
    write_file(&out_path(config, "snapshot.txt"), &String::from_utf8(snapshot)?)
}

fn sweep(config: &ExperimentConfig, want: EnsembleChoice) -> Result<(), AnyError> {
    if config.grid.ensemble != want {
        return Err(format!(
            "config grid.ensemble does not match the subcommand; use {}",
            match config.grid.ensemble {
                EnsembleChoice::GrandCanonical => "sweep-mu",
                EnsembleChoice::Canonical => "sweep-canonical",
            }
        )
        .into());
    }
    let result = experiments::run_sweep(config);
    let stem = match want {
        EnsembleChoice::GrandCanonical => "sweep_mu",
        EnsembleChoice::Canonical => "sweep_canonical",
    };
    let seed = config.mcmc.seed;
    if wants(config, "csv") {
        write_file(
            &out_path(config, &format!("{stem}.csv")),
            &report::sweep_csv(&result, config, seed),
        )?;
    }
    if wants(config, "json") {
        write_file(
            &out_path(config, &format!("{stem}.json")),
            &report::sweep_json(&result, config, seed),
        )?;
    }
    Ok(())
}

fn groundstate_cmd(config: &ExperimentConfig) -> Result<(), AnyError> {
    let gs = config
        .groundstate
        .as_ref()
        .ok_or("config has no [groundstate] section")?;
    let table = groundstate::build_table(
        &config.potential(),
        gs.k_max,
        gs.restarts,
        config.mcmc.seed,
        config.constants.e_inf_override,
    );
    let seed = config.mcmc.seed;
    if wants(config, "csv") {
        write_file(
            &out_path(config, "groundstate.csv"),
            &report::groundstate_csv(&table, config, seed),
        )?;
    }
    if wants(config, "json") {
        write_file(
            &out_path(config, "groundstate.json"),
            &report::groundstate_json(&table, config, seed),
        )?;
    }
    Ok(())
}

fn cluster_integrals(config: &ExperimentConfig) -> Result<(), AnyError> {
    let ints = config.integrals.clone().unwrap_or_default();
    let potential = config.potential();
    let dim = config.potential.dimension;
    let seed = config.mcmc.seed;

    let mut rows = Vec::new();
    for (bi, &beta) in config.grid.beta.iter().enumerate() {
        for k in 1..=ints.k_max {
            let est = integrals::zk_cluster_integral(
                &potential,
                k,
                beta,
                config.grid.r,
                ints.samples,
                mix_seed(seed, INTEGRALS_STREAM | (bi * 8 + k) as u64),
            )?;
            let upper = match config.constants.e_inf_override {
                Some(e_inf) => integrals::zk_upper_bound(k, beta, e_inf, config.grid.r, dim),
                None => f64::NAN,
            };
            rows.push((est, upper));
        }
    }
    if wants(config, "csv") {
        write_file(
            &out_path(config, "cluster_integrals.csv"),
            &report::integrals_csv(&rows, config, seed),
        )?;
    }

    // The full bound report needs a trusted e_inf, a tail (for the Mayer
    // norm and the depth M) and a mu grid; write it when all are present.
    if let (Some(e_inf), Some(mu_grid), true) = (
        config.constants.e_inf_override,
        config.grid.mu.as_ref(),
        potential.has_tail(),
    ) {
        let (tail_depth_m, _) = potential.tail_min()?;
        let triple_norm = potential.triple_norm(64);
        let mut reports = Vec::new();
        for &beta in &config.grid.beta {
            if beta <= 0.0 {
                continue; // no finite-temperature bounds at beta = 0
            }
            for &mu in mu_grid {
                reports.push(integrals::bound_report(&integrals::BoundInputs {
                    dim,
                    beta,
                    mu,
                    e_inf,
                    r: config.grid.r,
                    triple_norm,
                    tail_depth_m,
                    delta: config.constants.delta,
                    eps: config.constants.eps,
                    alpha_d: config.constants.alpha_d,
                    ell: config.constants.ell,
                    k_max: ints.k_max,
                }));
            }
        }
        let doc = serde_json::json!({
            "version": report::VERSION,
            "seed": seed,
            "config": config,
            "bounds": reports,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        write_file(&out_path(config, "bounds.json"), &text)?;
    }
    Ok(())
}

fn ising(config: &ExperimentConfig) -> Result<(), AnyError> {
    let section = config.ising.as_ref().ok_or("config has no [ising] section")?;
    let coupling = section.coupling();
    let field = section.field();
    let seed = config.mcmc.seed;
    let start = match section.init {
        SpinInit::Plus => lattice::SpinLattice::uniform(section.n, coupling, field, section.beta, 1),
        SpinInit::Minus => {
            lattice::SpinLattice::uniform(section.n, coupling, field, section.beta, -1)
        }
        SpinInit::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, ISING_INIT_STREAM));
            lattice::SpinLattice::random(section.n, coupling, field, section.beta, &mut rng)
        }
    };
    let series = lattice::run_glauber(
        start,
        section.sweeps,
        section.burn_in,
        section.thin,
        mix_seed(seed, ISING_RUN_STREAM),
    );
    write_file(
        &out_path(config, "ising.jsonl"),
        &report::ising_jsonl(&series, config),
    )?;

    let ms: Vec<f64> = series.records.iter().map(|r| r.m).collect();
    let m = stats::summarize(&ms);
    let occ: Vec<f64> = series.records.iter().map(|r| r.occupied_fraction).collect();
    let wrapped: Vec<f64> = series
        .records
        .iter()
        .map(|r| f64::from(u8::from(r.wrapped)))
        .collect();
    // Exact reference alongside, when the lattice is small enough.
    let exact = if section.n <= 4 {
        Some(lattice::exact_enumeration(
            section.n,
            coupling,
            field,
            section.beta,
        )?)
    } else {
        None
    };
    let doc = serde_json::json!({
        "version": report::VERSION,
        "seed": seed,
        "config": config,
        "summary": {
            "m": m.mean,
            "m_se": m.se,
            "m_ess": m.ess,
            "occupied_fraction": stats::mean(&occ),
            "wrap_frequency": stats::mean(&wrapped),
            "mu": lattice::h_to_mu(field, section.j_gas, 2),
        },
        "exact": exact,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_file(&out_path(config, "ising.json"), &text)
}

fn empty_decay(config: &ExperimentConfig) -> Result<(), AnyError> {
    let reports = experiments::empty_region_decay(config)?;
    let seed = config.mcmc.seed;
    if wants(config, "csv") {
        write_file(
            &out_path(config, "empty_decay.csv"),
            &report::decay_csv(&reports, config, seed),
        )?;
    }
    if wants(config, "json") {
        write_file(
            &out_path(config, "empty_decay.json"),
            &report::decay_json(&reports, config, seed),
        )?;
    }
    Ok(())
}
