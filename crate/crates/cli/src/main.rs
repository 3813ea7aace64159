use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dbx::protocol::wire;
use dbx::protocol::{
    DatabaseOwner, EvalKeySet, KeyInventory, ProfileKind, Query, Scientist, ScientistSecrets, SelectionMatrix,
};
use dbx_cli::files::{self, Setup};
use dbx_cli::{random_functions, run_bench, write_dataset, BenchConfig};

#[derive(Parser)]
#[command(name = "dbx", version, about = "Private threshold queries over plaintext databases")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Parameter profile.
    #[arg(long, global = true, default_value = "toy")]
    profile: ProfileKind,
    /// Sidecar `key = value` file overriding profile parameters and attribute bounds.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for the database owner (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Writes a synthetic N(1, 1) dataset clamped to [0, 2).
    GenDataset {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        attributes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generates the scientist's secrets and the evaluation keys.
    Keygen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        keys: PathBuf,
    },
    /// Encrypts functions and thresholds into a query.
    QueryGen {
        #[arg(long)]
        secret: PathBuf,
        /// Function tables, one `low,high,v_0,...` line each.
        #[arg(long, conflicts_with = "random")]
        functions: Option<PathBuf>,
        /// Number of random integer tables to draw instead.
        #[arg(long)]
        random: Option<usize>,
        /// Largest entry of the random tables.
        #[arg(long, default_value_t = 15)]
        max_value: u32,
        /// Writes the random tables here.
        #[arg(long, requires = "random")]
        save_functions: Option<PathBuf>,
        /// Score threshold t0: rows qualify when their score is at least t0.
        #[arg(long)]
        threshold: Option<f64>,
        /// Row threshold t1: the bit is set when at least t1 rows qualify.
        #[arg(long)]
        count: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs the query over a database; never reads the secret.
    Evaluate {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Attribute-selection matrix, `h` lines of `m` weights (default: identity).
        #[arg(long)]
        selection: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decrypts the result bit.
    Decrypt {
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        result: PathBuf,
    },
    /// Times the full pipeline on synthetic data.
    Bench {
        #[arg(long, default_value_t = 1 << 12)]
        rows: usize,
        #[arg(long, default_value_t = 16)]
        attributes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
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

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let setup = Setup::load(cli.common.profile, cli.common.config.as_deref())?;
    match cli.command {
        Command::GenDataset {
            rows,
            attributes,
            seed,
            out,
        } => {
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_dataset(rows, attributes, seed, BufWriter::new(file))?;
        }
        Command::Keygen { seed, secret, keys } => {
            if !setup.profile.is_materializable() {
                println!("{}", KeyInventory::new(&setup.profile, 0));
                bail!("profile '{}' is for size accounting only", setup.profile.kind);
            }
            let ctx = setup.contexts()?;
            let (scientist, eval_keys) = Scientist::setup(ctx.clone(), seed)?;
            files::write_bytes(&secret, &scientist.secrets().to_bytes(&ctx))?;
            let bytes = eval_keys.to_bytes(&ctx)?;
            files::write_bytes(&keys, &bytes)?;
            println!("key_id={}\nkey_bytes={}", eval_keys.key_id, bytes.len());
        }
        Command::QueryGen {
            secret,
            functions,
            random,
            max_value,
            save_functions,
            threshold,
            count,
            seed,
            out,
        } => {
            let ctx = setup.contexts()?;
            let specs = match (functions, random) {
                (Some(path), _) => {
                    files::read_functions(&path).with_context(|| format!("reading {}", path.display()))?
                }
                (None, Some(m)) => {
                    let specs = random_functions(m, ctx.pfe_ring().degree(), max_value, seed)?;
                    if let Some(path) = save_functions {
                        files::write_functions(&path, &specs)?;
                    }
                    specs
                }
                (None, None) => bail!("pass --functions or --random"),
            };
            let t0 = threshold.or(setup.t0).context("missing --threshold")?;
            let t1 = count.or(setup.t1).context("missing --count")?;
            let mut scientist = scientist_from(&setup, &secret, seed)?;
            let bytes = scientist.query(&specs, t0, t1)?.to_bytes(&ctx);
            files::write_bytes(&out, &bytes)?;
            println!("query_bytes={}", bytes.len());
        }
        Command::Evaluate {
            keys,
            query,
            data,
            selection,
            out,
        } => {
            let db =
                files::read_database(&data, &setup.bounds).with_context(|| format!("reading {}", data.display()))?;
            let ctx = setup.contexts()?;
            let owner = DatabaseOwner::new(ctx.clone(), EvalKeySet::from_bytes(&files::read_bytes(&keys)?, &ctx)?)?;
            let query = Query::from_bytes(&files::read_bytes(&query)?, &ctx)?;
            let selection = match selection {
                Some(path) => files::read_selection(&path).with_context(|| format!("reading {}", path.display()))?,
                None => SelectionMatrix::identity(db.attribute_count()),
            };
            let exploration = owner.explore(&db, &selection, &query)?;
            let bytes = wire::ciphertext_bytes(&exploration.result, ctx.big_ring()?);
            files::write_bytes(&out, &bytes)?;
            for (stage, d) in &exploration.report.timings {
                println!("{:<30} {:>10.3} s", stage.label(), d.as_secs_f64());
            }
            println!(
                "rows={}\nhalf_bts_calls={}",
                exploration.report.rows, exploration.report.half_bts_calls
            );
        }
        Command::Decrypt { secret, result } => {
            let ctx = setup.contexts()?;
            let scientist = scientist_from(&setup, &secret, 0)?;
            let ct = wire::ciphertext_from_bytes(&files::read_bytes(&result)?, &ctx)?;
            let r = scientist.decrypt_result(&ct)?;
            println!("bit={}\nvalue={:.6}\nspread={:.3e}", r.bit as u8, r.value, r.spread);
        }
        Command::Bench { rows, attributes, seed } => {
            if !setup.profile.is_materializable() {
                println!("{}", KeyInventory::new(&setup.profile, attributes));
                return Ok(());
            }
            let report = run_bench(&BenchConfig::new(setup.profile.clone(), rows, attributes, seed))?;
            println!("{report}");
            if report.bit.is_some() && !report.matches_oracle() {
                bail!("result bit disagrees with the plaintext pipeline");
            }
        }
    }
    Ok(())
}

fn scientist_from(setup: &Setup, secret: &Path, seed: u64) -> Result<Scientist> {
    let ctx = setup.contexts()?;
    let bytes = files::read_bytes(secret).with_context(|| format!("reading {}", secret.display()))?;
    let secrets = ScientistSecrets::from_bytes(&bytes, &ctx)?;
    Ok(Scientist::from_secrets(ctx, secrets, seed)?)
}
