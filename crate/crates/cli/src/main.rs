use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use consensus_attack::paper::{render_table, reproduce, write_reproduction};
use consensus_attack::report::write_report;
use consensus_attack::run::{run_link, run_noise, run_simulate, Run};
use consensus_attack::scenario::{load_scenario, AttackSpec, LoadedScenario};
use consensus_attack::verify::{run_suite, VerifyOptions};

const AFTER_HELP: &str = "\
Exit codes: 0 success, 1 runtime or check failure, 2 usage or scenario error.

Output files go to --out, or to $CONSENSUS_ATTACK_OUT when --out is not given,
or to ./out otherwise. Progress messages go to stderr.

verify --steps N replaces the grid of every fixture. Tolerances of checks
with O(h^2) error are multiplied by max(1, (400/N)^2).";

#[derive(Parser, Debug)]
#[command(name = "consensus-attack", version, about = "Optimal attacks on continuous-time consensus averaging", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "CONSENSUS_ATTACK_OUT", default_value = "out")]
    out: PathBuf,

    /// Override the number of grid steps.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    steps: Option<u32>,

    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the consensus dynamics without an adversary.
    Simulate,
    /// Run the greedy link-breaking attack and the maximum-principle sweep.
    Attack1,
    /// Run the noise-injection attack.
    Attack2,
    /// Run the property suite on the bundled fixtures.
    Verify {
        /// Test hook: flip the switching-function sign in the sweep.
        #[arg(long)]
        inject_sign_flip: bool,
    },
    /// Rerun the four-agent example without attack and under both attacks.
    ReproducePaper,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        match self {
            Failure::Usage(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            Failure::Runtime(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
        }
    }
}

struct Context {
    cli: Cli,
}

impl Context {
    fn progress(&self, msg: impl AsRef<str>) {
        if !self.cli.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn steps(&self) -> Option<usize> {
        self.cli.steps.map(|s| s as usize)
    }

    fn load(&self) -> Result<LoadedScenario, Failure> {
        let path = self
            .cli
            .scenario
            .as_deref()
            .ok_or_else(|| Failure::Usage("this subcommand needs --scenario <path>".into()))?;
        let loaded = load_scenario(path).map_err(|e| Failure::Usage(e.to_string()))?;
        if !loaded.scenario.topology.is_connected() {
            self.progress("warning: the topology is disconnected");
        }
        match self.steps() {
            Some(s) => loaded.with_steps(s).map_err(|e| Failure::Usage(e.to_string())),
            None => Ok(loaded),
        }
    }

    fn write(&self, run: &Run, dir: &Path) -> Result<(), Failure> {
        let files = write_report(run, dir).map_err(|e| Failure::Runtime(e.to_string()))?;
        for f in files {
            self.progress(format!("wrote {}", f.display()));
        }
        Ok(())
    }
}

fn wrong_attack(loaded: &LoadedScenario, needed: &str) -> Failure {
    Failure::Usage(format!(
        "scenario `{}` has attack = {}; this subcommand needs attack = {needed}",
        loaded.config.name,
        loaded.config.attack.label()
    ))
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn simulate(ctx: &Context) -> Result<(), Failure> {
    let loaded = ctx.load()?;
    if loaded.config.attack != AttackSpec::None {
        return Err(wrong_attack(&loaded, "\"none\""));
    }
    let run = run_simulate(&loaded).map_err(runtime)?;
    ctx.progress(format!("J = {:.12e}", run.objective));
    ctx.write(&Run::Simulate(run), &ctx.cli.out)
}

fn attack1(ctx: &Context) -> Result<(), Failure> {
    let loaded = ctx.load()?;
    let AttackSpec::Link(spec) = loaded.config.attack else {
        return Err(wrong_attack(&loaded, "{ link = { ell = ... } }"));
    };
    let run = run_link(&loaded, spec.ell).map_err(runtime)?;
    ctx.progress(format!(
        "J = {:.12e}, {}, sweep agreement {:.1}%",
        run.greedy.objective,
        run.greedy.classification.as_str(),
        100.0 * run.consistency.agreement
    ));
    ctx.write(&Run::Link(run), &ctx.cli.out)
}

fn attack2(ctx: &Context) -> Result<(), Failure> {
    let loaded = ctx.load()?;
    if !matches!(loaded.config.attack, AttackSpec::Noise(_)) {
        return Err(wrong_attack(&loaded, "{ noise = { p_max = ... } }"));
    }
    let run = run_noise(&loaded).map_err(runtime)?;
    ctx.progress(format!(
        "J = {:.12e}, {} iterations, converged = {}",
        run.outcome.objective, run.outcome.iterations, run.outcome.converged
    ));
    ctx.write(&Run::Noise(run), &ctx.cli.out)
}

fn verify(ctx: &Context, inject_sign_flip: bool) -> Result<(), Failure> {
    let options = VerifyOptions {
        steps: ctx.steps(),
        inject_sign_flip,
    };
    let checks = run_suite(&options);
    for c in &checks {
        println!(
            "{}  {}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(Failure::Runtime(format!("property `{}` failed", c.name))),
        None => Ok(()),
    }
}

fn reproduce_paper(ctx: &Context) -> Result<(), Failure> {
    ctx.progress("running the four-agent example (noise attack uses P_max = 1, safety 0.9)");
    let r = reproduce(ctx.steps()).map_err(runtime)?;
    for f in write_reproduction(&r, &ctx.cli.out).map_err(runtime)? {
        ctx.progress(format!("wrote {}", f.display()));
    }
    print!("{}", render_table(&r.table));
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Runtime("check table has failures".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Context { cli };
    let result = match ctx.cli.command {
        Command::Simulate => simulate(&ctx),
        Command::Attack1 => attack1(&ctx),
        Command::Attack2 => attack2(&ctx),
        Command::Verify { inject_sign_flip } => verify(&ctx, inject_sign_flip),
        Command::ReproducePaper => reproduce_paper(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
