//! Terminal front end for one session on a running service.

use std::io::{BufRead, Write};

use ticoder_client::Client;
use ticoder_core::api::SessionSnapshot;
use ticoder_core::{Mode, UserResponse};

use crate::error::CliError;

const HELP: &str = "answer with p (pass), f (fail), u (undefined) or o <value> (expected output)";

/// Reads one answer per line. `None` at end of input.
fn read_answer(mode: Mode, parseable: bool) -> Result<Option<UserResponse>, CliError> {
    let stdin = std::io::stdin();
    loop {
        print!("> ");
        let _ = std::io::stdout().flush();
        let mut line = String::new();
        let read = stdin.lock().read_line(&mut line).map_err(|source| CliError::Io {
            path: "<stdin>".into(),
            source,
        })?;
        if read == 0 {
            return Ok(None);
        }
        let line = line.trim();
        let answer = match line {
            "p" | "pass" => Some(UserResponse::Pass),
            "f" | "fail" => Some(UserResponse::Fail),
            "u" | "undefined" => Some(UserResponse::Undefined),
            _ => match line.strip_prefix("o ").map(str::trim) {
                Some(v) if !v.is_empty() && mode == Mode::Output && parseable => Some(UserResponse::FailWithOutput {
                    new_expected: v.to_string(),
                }),
                Some(_) if mode != Mode::Output => {
                    println!("output corrections need --mode output");
                    None
                }
                _ => {
                    println!("{HELP}");
                    None
                }
            },
        };
        if answer.is_some() {
            return Ok(answer);
        }
    }
}

fn print_summary(snap: &SessionSnapshot) {
    println!("status: {:?}, {} surviving codes", snap.status, snap.survivor_count);
    if let Some(best) = snap.survivors.first() {
        println!("top code (#{}):\n{}", best.id, best.source);
    }
    if let Some(result) = &snap.result {
        for t in &result.approved_tests {
            println!("approved: {t}");
        }
    }
}

pub fn run(url: &str, problem: &str, mode: Mode, budget: Option<usize>) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
        path: "<runtime>".into(),
        source,
    })?;
    let client = Client::new(url);
    let mut snap = rt.block_on(client.create_session(problem, mode, budget))?;
    println!("session {} on {}", snap.session.id, snap.session.problem_id);
    println!("{HELP}");
    while let Some(q) = snap.current_query.clone() {
        println!("\n{} left, {} codes. Is this test right?\n  {}", snap.budget_remaining, snap.survivor_count, q.assertion);
        let Some(answer) = read_answer(mode, q.parseable)? else {
            break;
        };
        snap = rt.block_on(client.respond(&snap.session.id, q.test_id, &answer))?;
    }
    print_summary(&snap);
    Ok(())
}
