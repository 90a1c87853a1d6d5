use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use asymgame_cli::config::RunConfig;
use asymgame_cli::run::{out_dir, run_conjugate, run_converge, run_game, run_hamiltonian, run_solve, RunError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asymgame", version, about = "Solvers for zero-sum differential games with asymmetric information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output].dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random stream; overrides `[numerics].seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve both dual equations, recover and cross-check the value.
    Solve(Common),
    /// Refine the grids and tabulate self-convergence.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Number of refinement levels, each halving dx, dt and 1/K.
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
    /// Play a discrete strategy profile by Monte Carlo and certify it.
    Game {
        #[command(flatten)]
        common: Common,
        /// Strategy profile as JSON; defaults to the brute-force optimum.
        #[arg(long)]
        strategy: Option<PathBuf>,
        /// Monte Carlo episodes; overrides `[play].n_samples`.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Evaluate H and H* at the probe points.
    Hamiltonian(Common),
    /// Conjugate the terminal data and check the Fenchel identities.
    Conjugate(Common),
}

fn prepare(c: &Common) -> Result<(RunConfig, PathBuf), RunError> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| RunError::Io(format!("thread pool: {e}")))?;
    }
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let out = out_dir(&cfg, c.out.clone());
    Ok((cfg, out))
}

fn execute(cmd: Command) -> Result<String, RunError> {
    Ok(match cmd {
        Command::Solve(c) => {
            let (cfg, out) = prepare(&c)?;
            let s = run_solve(&cfg, &out)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            format!(
                "max |V - W| = {:.3e} (certified region {:.3e}); Isaacs gap up to {:.3e}",
                s.max_gap_vw, s.max_gap_vw_certified, s.isaacs_gap_max
            )
        }
        Command::Converge { common, level } => {
            let (cfg, out) = prepare(&common)?;
            let t = run_converge(&cfg, level, &out)?;
            if let Some(why) = &t.truncated {
                eprintln!("warning: table truncated at {why}");
            }
            let rows: Vec<String> =
                t.rows.iter().map(|r| format!("level {} dx {:.4e} gap {:.3e} diff {:?}", r.level, r.dx, r.gap_vw, r.diff_prev)).collect();
            format!("{}\norder {:?}, decreasing {}", rows.join("\n"), t.order_diff, t.diffs_decreasing)
        }
        Command::Game { common, strategy, samples } => {
            let (cfg, out) = prepare(&common)?;
            let r = run_game(&cfg, strategy.as_deref(), samples, &out)?;
            format!(
                "Monte Carlo {:.6} +- {:.2e} over {} episodes; exact {:.6}; partition value {:?}",
                r.estimate.mean, r.estimate.stderr, r.estimate.n_samples, r.profile_value, r.partition_value
            )
        }
        Command::Hamiltonian(c) => {
            let (cfg, out) = prepare(&c)?;
            let rows = run_hamiltonian(&cfg, &out)?;
            format!("{} probe points written", rows.len())
        }
        Command::Conjugate(c) => {
            let (cfg, out) = prepare(&c)?;
            let r = run_conjugate(&cfg, &out)?;
            format!(
                "closed form {:.3e}, |w** - w| {:.3e}, idempotence {:.3e}, Fenchel-Young min {:.3e}",
                r.closed_form_error, r.biconjugate_gap, r.biconjugate_idempotence, r.fenchel_young_min
            )
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match execute(cli.command) {
        Ok(line) => {
            println!("{line}");
            eprintln!("runtime {:.3} s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
