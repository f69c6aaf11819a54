use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;

use gke_core::group_math::{hexint, Scalar};
use gke_core::harness::{
    run_scenario, setup_community, Community, IdAssignment, NewKey, ParamsSource, Scenario, ScenarioKind, Simulation,
    Transcript, Verdict,
};
use gke_core::protocol::SessionKey;

/// Simulate the group key establishment protocol and the attacks on it.
#[derive(Parser)]
#[command(name = "gke", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a community of members with CA-certified DH keys.
    Setup {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "toy")]
        params: ParamsSource,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "random")]
        ids: IdAssignment,
        #[arg(long, default_value = "community.json")]
        out: PathBuf,
    },
    /// Run a session and record its transcript.
    #[command(subcommand)]
    Run(RunCommand),
    /// Attack a session recorded in a transcript.
    #[command(subcommand)]
    Attack(AttackCommand),
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long)]
    community: PathBuf,
    /// Comma-separated member ids (decimal, or hex with a 0x prefix).
    #[arg(long, value_delimiter = ',', value_parser = parse_id)]
    group: Vec<Scalar>,
    #[arg(long, value_parser = parse_id)]
    initiator: Scalar,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the transcript here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RunCommand {
    /// A session with identifiers in the broadcast.
    Honest(SessionArgs),
    /// A session whose broadcast omits the recipient list, so every member
    /// has to attempt recovery.
    PaperLiteral(SessionArgs),
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Re-issue the recorded broadcast under a fresh timestamp.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        /// Hand the attacker the session key a recipient accepted.
        #[arg(long)]
        leak_key: bool,
        /// Seconds between the original timestamp and the forged one.
        #[arg(long, default_value_t = 3600)]
        t_offset: u64,
        /// Number of successive forgeries.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A group member impersonates the initiator with a key of its choosing.
    Insider {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long, value_parser = parse_id)]
        insider: Scalar,
        /// `random`, or the new key as lowercase hex.
        #[arg(long, default_value = "random")]
        new_key: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the session key from public keys by discrete log (toy parameters only).
    Dlog {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long, value_parser = parse_id)]
        victim: Scalar,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_id(text: &str) -> Result<Scalar, String> {
    let value = match text.strip_prefix("0x") {
        Some(hex) => BigUint::parse_bytes(hex.as_bytes(), 16),
        None => BigUint::parse_bytes(text.as_bytes(), 10),
    };
    value.map(Scalar::from_unreduced).ok_or_else(|| format!("{text:?} is not a decimal or 0x-hex integer"))
}

fn parse_new_key(text: &str) -> Result<NewKey> {
    if text == "random" {
        return Ok(NewKey::Random);
    }
    let hex = text.strip_prefix("0x").unwrap_or(text);
    let value = hexint::decode(hex).map_err(anyhow::Error::msg).context("--new-key")?;
    Ok(NewKey::Fixed(SessionKey(Scalar::from_unreduced(value))))
}

fn emit(transcript: &Transcript, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => transcript.save(path).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", transcript.to_jsonl()?),
    }
    Ok(())
}

fn report(verdict: &Verdict) -> ExitCode {
    eprintln!("verdict: {}", verdict.summary);
    if verdict.success {
        ExitCode::SUCCESS
    } else {
        eprintln!("scenario did not reach its expected outcome");
        ExitCode::FAILURE
    }
}

fn run_session(kind: ScenarioKind, args: SessionArgs) -> Result<ExitCode> {
    let community =
        Community::load(&args.community).with_context(|| format!("loading {}", args.community.display()))?;
    let scenario = Scenario::new(kind, args.group, args.initiator).with_seed(args.seed);
    let transcript = run_scenario(&community, &scenario)?;
    emit(&transcript, args.out.as_deref())?;
    Ok(report(transcript.last_verdict().expect("every run ends with a verdict")))
}

fn resume(path: &Path, seed: u64) -> Result<Simulation> {
    let transcript = Transcript::load(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(Simulation::resume(transcript, seed)?)
}

fn attack(command: AttackCommand) -> Result<ExitCode> {
    let (sim, verdict, out) = match command {
        AttackCommand::Replay { transcript, leak_key, t_offset, repeat, out } => {
            if !leak_key {
                bail!("replay needs the compromised session key; pass --leak-key");
            }
            let mut sim = resume(&transcript, 0)?;
            let session = sim.recorded_session()?;
            let verdict = sim.replay(&session, leak_key, t_offset, repeat)?;
            (sim, verdict, out)
        }
        AttackCommand::Insider { transcript, insider, new_key, seed, out } => {
            let new_key = parse_new_key(&new_key)?;
            let mut sim = resume(&transcript, seed)?;
            let session = sim.recorded_session()?;
            let verdict = sim.insider(&session, &insider, &new_key)?;
            (sim, verdict, out)
        }
        AttackCommand::Dlog { transcript, victim, out } => {
            let mut sim = resume(&transcript, 0)?;
            let session = sim.recorded_session()?;
            let verdict = sim.dlog_break(&session, &victim)?;
            (sim, verdict, out)
        }
    };
    emit(sim.transcript(), out.as_deref())?;
    Ok(report(&verdict))
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Setup { n, params, seed, ids, out } => {
            let community = setup_community(n, params, seed, ids)?;
            community.save(&out).with_context(|| format!("writing {}", out.display()))?;
            let listed: Vec<String> = community.ids().map(|id| id.value().to_string()).collect();
            println!("{} members written to {}", community.len(), out.display());
            println!("ids: {}", listed.join(","));
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(RunCommand::Honest(args)) => run_session(ScenarioKind::Honest, args),
        Command::Run(RunCommand::PaperLiteral(args)) => run_session(ScenarioKind::PaperLiteral, args),
        Command::Attack(command) => attack(command),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
