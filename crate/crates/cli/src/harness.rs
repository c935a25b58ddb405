use crate::format::g12;
use clap::{Args, Subcommand};
use splitflow::net::{
    run_schedule, serve_relay, summarize, ChannelConfig, NetExperiment, Receiver, ReceiverConfig, Sender, SenderConfig,
    TrialRecord,
};
use splitflow::net::wire::DEFAULT_CHUNK_SIZE;
use splitflow::opt::{run_opt_experiment, Dataset, DelayProfile, OptExperimentConfig, SolverSettings};
use splitflow::schedule::{coarse_grid, trial_schedule};
use splitflow::{Error, Result};
use std::io::Write;
use std::net::{SocketAddr, TcpListener};
use std::process::{Child, Command};
use std::thread;
use std::time::Duration;

#[derive(Args, Clone, Copy)]
pub struct PathArgs {
    /// Channel A per-chunk base delay, seconds.
    #[arg(long, default_value_t = 0.018)]
    a_delay: f64,
    /// Channel A per-chunk jitter standard deviation, seconds.
    #[arg(long, default_value_t = 0.002)]
    a_jitter: f64,
    /// Channel A rate limit, bytes per second.
    #[arg(long, default_value_t = 2e8)]
    a_rate: f64,
    #[arg(long, default_value_t = 0.012)]
    b_delay: f64,
    #[arg(long, default_value_t = 0.004)]
    b_jitter: f64,
    #[arg(long, default_value_t = 2e8)]
    b_rate: f64,
    /// Send channel B straight to the receiver instead of through the relay.
    #[arg(long)]
    b_direct: bool,
}

impl PathArgs {
    fn channels(&self) -> Result<[ChannelConfig; 2]> {
        Ok([
            ChannelConfig::new(self.a_delay * 1e3, self.a_jitter * 1e3, self.a_rate, false)?,
            ChannelConfig::new(self.b_delay * 1e3, self.b_jitter * 1e3, self.b_rate, !self.b_direct)?,
        ])
    }
}

#[derive(Args, Clone)]
pub struct ExperimentArgs {
    /// Payload bytes per trial.
    #[arg(long, default_value_t = 1 << 20)]
    payload: u64,
    /// Comma-separated f values (default 0,0.1,...,1).
    #[arg(long, value_delimiter = ',')]
    f_grid: Option<Vec<f64>>,
    /// Trials per f.
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Run trials in grid order instead of a seeded shuffle.
    #[arg(long)]
    sequential: bool,
    /// Per-trial read timeout, seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
}

impl ExperimentArgs {
    fn grid(&self) -> Vec<f64> {
        self.f_grid.clone().unwrap_or_else(coarse_grid)
    }

    fn receiver_config(&self, seed: u64) -> Result<ReceiverConfig> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(Error::Domain(format!("timeout must be positive, got {}", self.timeout)));
        }
        Ok(ReceiverConfig { payload_size: self.payload, payload_seed: seed, timeout: Duration::from_secs_f64(self.timeout) })
    }
}

#[derive(Subcommand)]
pub enum NetRole {
    /// Serve trial requests on both paths.
    Send {
        #[command(flatten)]
        paths: PathArgs,
        /// Where channel A connects (the receiver).
        #[arg(long, default_value = "127.0.0.1:9701")]
        to_a: SocketAddr,
        /// Where channel B connects (the relay, or the receiver with --b-direct).
        #[arg(long, default_value = "127.0.0.1:9702")]
        to_b: SocketAddr,
        #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
    },
    /// Forward one path, delaying each chunk.
    Relay {
        #[arg(long, default_value = "127.0.0.1:9702")]
        listen: SocketAddr,
        #[arg(long, default_value = "127.0.0.1:9703")]
        forward: SocketAddr,
        /// Per-chunk base delay, seconds.
        #[arg(long, default_value_t = 0.012)]
        delay: f64,
        /// Per-chunk jitter standard deviation, seconds.
        #[arg(long, default_value_t = 0.004)]
        jitter: f64,
        /// Bytes per second.
        #[arg(long, default_value_t = 2e8)]
        rate: f64,
    },
    /// Drive the experiment and record completions.
    Recv {
        #[arg(long, default_value = "127.0.0.1:9701")]
        listen_a: SocketAddr,
        #[arg(long, default_value = "127.0.0.1:9703")]
        listen_b: SocketAddr,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// All three roles on this host; the relay runs as a child process.
    Run {
        #[command(flatten)]
        paths: PathArgs,
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[arg(long, default_value = "127.0.0.1:9701")]
        listen_a: SocketAddr,
        #[arg(long, default_value = "127.0.0.1:9702")]
        relay_listen: SocketAddr,
        #[arg(long, default_value = "127.0.0.1:9703")]
        listen_b: SocketAddr,
        #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
    },
}

pub fn netdemo<F>(role: &NetRole, seed: u64, out: F) -> Result<()>
where
    F: Fn() -> Result<Box<dyn Write>>,
{
    match role {
        NetRole::Send { paths, to_a, to_b, chunk_size } => {
            let config = SenderConfig { channels: paths.channels()?, chunk_size: *chunk_size, shaping_seed: seed };
            Sender::connect([*to_a, *to_b], config)?.serve()
        }
        NetRole::Relay { listen, forward, delay, jitter, rate } => {
            let channel = ChannelConfig::new(delay * 1e3, jitter * 1e3, *rate, true)?;
            let listener = TcpListener::bind(listen)?;
            serve_relay(&listener, *forward, channel, seed)
        }
        NetRole::Recv { listen_a, listen_b, experiment } => {
            let receiver_config = experiment.receiver_config(seed)?;
            let schedule = trial_schedule(&experiment.grid(), experiment.trials, seed, !experiment.sequential)?;
            let (la, lb) = (TcpListener::bind(listen_a)?, TcpListener::bind(listen_b)?);
            let mut receiver = Receiver::accept([&la, &lb], receiver_config)?;
            let records = run_schedule(&mut receiver, &schedule);
            receiver.close();
            report(records?, &experiment.grid(), &mut out()?)
        }
        NetRole::Run { paths, experiment, listen_a, relay_listen, listen_b, chunk_size } => {
            let channels = paths.channels()?;
            let sender_config = SenderConfig { channels, chunk_size: *chunk_size, shaping_seed: seed };
            sender_config.validate()?;
            let receiver_config = experiment.receiver_config(seed)?;
            let schedule = trial_schedule(&experiment.grid(), experiment.trials, seed, !experiment.sequential)?;
            let (la, lb) = (TcpListener::bind(listen_a)?, TcpListener::bind(listen_b)?);
            let addr_b = lb.local_addr()?;
            let mut relay = None;
            let mut target_b = addr_b;
            if channels[1].via_relay {
                relay = Some(spawn_relay(*relay_listen, addr_b, paths, seed)?);
                target_b = *relay_listen;
            }
            let target_a = la.local_addr()?;
            let sender = thread::spawn(move || Sender::connect([target_a, target_b], sender_config)?.serve());
            let result = Receiver::accept([&la, &lb], receiver_config).and_then(|mut receiver| {
                let records = run_schedule(&mut receiver, &schedule);
                receiver.close();
                records
            });
            if result.is_err() {
                if let Some(child) = relay.as_mut() {
                    let _ = child.kill();
                }
            }
            let sent = sender.join().expect("sender thread panicked");
            if let Some(mut child) = relay {
                child.wait()?;
            }
            let records = result?;
            let all_ok = records.iter().all(TrialRecord::ok);
            report(records, &experiment.grid(), &mut out()?)?;
            if all_ok {
                sent?;
            }
            Ok(())
        }
    }
}

fn spawn_relay(listen: SocketAddr, forward: SocketAddr, paths: &PathArgs, seed: u64) -> Result<Child> {
    let exe = std::env::current_exe()?;
    let child = Command::new(exe)
        .args(["--seed", &seed.to_string(), "netdemo", "relay"])
        .args(["--listen", &listen.to_string(), "--forward", &forward.to_string()])
        .args(["--delay", &paths.b_delay.to_string(), "--jitter", &paths.b_jitter.to_string()])
        .args(["--rate", &paths.b_rate.to_string()])
        .spawn()?;
    Ok(child)
}

/// Writes the records as CSV and a per-f summary to stderr.
fn report(records: Vec<TrialRecord>, grid: &[f64], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "trial_id,f,bytes_a,bytes_b,completion_ns,status")?;
    for r in &records {
        writeln!(out, "{},{},{},{},{},{}", r.trial_id, g12(r.fraction), r.bytes_a, r.bytes_b, r.completion_ns, r.status)?;
    }
    out.flush()?;
    let experiment: NetExperiment = summarize(records, grid)?;
    for ff in &experiment.fits {
        if let Some(fit) = &ff.fit {
            eprintln!("# f={} n={} mean_s={} sd_s={}", g12(ff.fraction), fit.sample_count, g12(fit.mean), g12(fit.std_dev));
        }
    }
    Ok(())
}

#[derive(Args)]
pub struct OptArgs {
    /// Dataset rows.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Dataset features.
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// Target noise standard deviation.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Comma-separated f values (default 0,0.1,...,1).
    #[arg(long, value_delimiter = ',')]
    f_grid: Option<Vec<f64>>,
    /// Trials per f.
    #[arg(long, default_value_t = 40)]
    trials: usize,
    /// Channel i per-iteration delay for the full dataset, MEAN:SD in seconds.
    #[arg(long, default_value = "0.010:0.0005")]
    jitter_a: String,
    /// Channel j per-iteration delay for the full dataset, MEAN:SD in seconds.
    #[arg(long, default_value = "0.0065:0.005")]
    jitter_b: String,
    #[arg(long)]
    sequential: bool,
    /// Gradient-norm stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

fn delay_secs(s: &str) -> Result<DelayProfile> {
    let p: DelayProfile = s.parse()?;
    DelayProfile::new(p.mean_ms * 1e3, p.sigma_ms * 1e3)
}

pub fn optdemo(args: &OptArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    if !(args.tol.is_finite() && args.tol > 0.0) || args.max_iter == 0 {
        return Err(Error::Domain("solver needs tol > 0 and max-iter >= 1".into()));
    }
    let config = OptExperimentConfig {
        f_grid: args.f_grid.clone().unwrap_or_else(coarse_grid),
        trials_per_f: args.trials,
        delays: [delay_secs(&args.jitter_a)?, delay_secs(&args.jitter_b)?],
        seed,
        randomize_order: !args.sequential,
        solver: SolverSettings { tol: args.tol, max_iter: args.max_iter, ..SolverSettings::default() },
    };
    let (data, _) = Dataset::synthetic(args.n, args.d, args.noise, seed)?;
    let exp = run_opt_experiment(&data, &config)?;
    writeln!(out, "trial_id,f,completion_ns,quality_gap,status")?;
    for r in &exp.records {
        let status = if r.ok() { "ok" } else { "failed" };
        writeln!(out, "{},{},{},{},{status}", r.trial_id, g12(r.fraction), r.completion_ns, g12(r.quality_gap))?;
    }
    out.flush()?;
    for r in exp.records.iter().filter(|r| !r.ok()) {
        eprintln!("# trial {} failed: {}", r.trial_id, r.failure.as_deref().unwrap_or(""));
    }
    Ok(())
}
