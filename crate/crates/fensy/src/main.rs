use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use fensy::dump::{dump_cycles, dump_query, dump_traces};
use fensy::report::{render, render_sanity};
use fensy::{parse_program, print_program, Clock};
use fensy_core::driver::{sanity_check, synthesize, Status};
use fensy_core::{Limits, Mode};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    /// All buggy traces at once, minimum fences
    Opt,
    /// One buggy trace per iteration
    Fast,
}

/// Synthesize C11 fences that make a litmus program's assertion hold.
#[derive(Parser, Debug)]
#[command(name = "fensy", version)]
struct Cli {
    /// Litmus program (.lit)
    file: PathBuf,
    #[arg(long, value_enum, default_value = "opt")]
    mode: ModeArg,
    /// Largest `repeat` count that may be unrolled
    #[arg(long, default_value_t = Limits::default().unroll_bound)]
    unroll: u32,
    #[arg(long)]
    timeout_secs: Option<u64>,
    /// Consistent traces allowed per enumeration
    #[arg(long, default_value_t = Limits::default().max_traces)]
    max_traces: usize,
    /// Iterations allowed in fast mode
    #[arg(long, default_value_t = Limits::default().max_iterations)]
    max_iters: usize,
    /// Write buggy traces (with and without candidate fences) here
    #[arg(long, value_name = "PATH")]
    emit_traces: Option<PathBuf>,
    /// Write one line per candidate solution here
    #[arg(long, value_name = "PATH")]
    emit_cycles: Option<PathBuf>,
    /// Write the fence query here
    #[arg(long, value_name = "PATH")]
    emit_query: Option<PathBuf>,
    /// Check that removing or weakening any synthesized fence breaks the fix
    #[arg(long)]
    sanity_check: bool,
    /// Print the fixed program
    #[arg(long)]
    print_fixed: bool,
}

fn write_file(path: &PathBuf, body: &str) -> Result<(), ExitCode> {
    std::fs::write(path, body).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(3)
    })
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    let src = std::fs::read_to_string(&cli.file).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", cli.file.display());
        ExitCode::from(3)
    })?;
    let program = parse_program(&src).map_err(|e| {
        eprintln!("error: {}: {e}", cli.file.display());
        ExitCode::from(3)
    })?;
    let limits = Limits {
        unroll_bound: cli.unroll,
        max_traces: cli.max_traces,
        max_iterations: cli.max_iters,
        ..Limits::default()
    };
    let clock = Clock::new(cli.timeout_secs.map(Duration::from_secs));
    let mode = match cli.mode {
        ModeArg::Opt => Mode::Optimal,
        ModeArg::Fast => Mode::Fast,
    };
    let result = synthesize(&program, mode, &limits, &clock).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(3)
    })?;

    if let Some(path) = &cli.emit_traces {
        let traces: Vec<_> = result
            .rounds
            .iter()
            .flat_map(|r| r.traces.clone())
            .collect();
        write_file(path, &dump_traces(&traces))?;
    }
    if let Some(path) = &cli.emit_cycles {
        let body: String = result
            .rounds
            .iter()
            .map(|r| dump_cycles(&r.program, r.analyses.iter().flat_map(|a| &a.solutions)))
            .collect();
        write_file(path, &body)?;
    }
    if let Some(path) = &cli.emit_query {
        let body: String = result
            .rounds
            .iter()
            .map(|r| dump_query(&r.program, &r.query))
            .collect();
        write_file(path, &body)?;
    }

    print!("{}", render(&result));
    if cli.sanity_check {
        let fixed = result.fixed.as_ref().unwrap_or(&program);
        print!("{}", render_sanity(&sanity_check(fixed, &limits, &clock)));
    }
    if cli.print_fixed {
        if let Some(fixed) = &result.fixed {
            println!();
            print!("{}", print_program(fixed));
        }
    }
    Ok(match result.status {
        Status::Fixed | Status::AlreadyCorrect => ExitCode::SUCCESS,
        Status::NoFix => ExitCode::from(1),
        Status::ResourceLimit => ExitCode::from(2),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    run(cli).unwrap_or_else(|code| code)
}
