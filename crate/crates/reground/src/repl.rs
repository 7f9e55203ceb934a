//! Line-oriented terminal front end for a session.
//!
//! Every input line is an instruction, except for the commands
//! `:state`, `:log`, `:replay`, `:help` and `:quit`.

use std::io::{BufRead, Write};

use reground_core::anchor::top_label;
use reground_core::session::{ActionCommand, LogEvent, Session};

use crate::cli::write_anchors;

pub fn describe_action(a: &ActionCommand) -> String {
    match a {
        ActionCommand::PickUp { anchor } => format!("pick-up {anchor}"),
        ActionCommand::Place {
            anchor,
            position,
            cell,
        } => format!(
            "place {anchor} at {cell} ({:.3}, {:.3}, {:.3})",
            position[0], position[1], position[2]
        ),
        ActionCommand::NoOp { reason } => format!("no-op: {reason}"),
    }
}

const HELP: &str = ":state   anchors and beliefs\n:log     session log\n:replay  re-run the log and compare\n:quit    leave\n";

pub fn run(
    session: &mut Session,
    input: impl BufRead,
    out: &mut impl Write,
    prompt: bool,
) -> anyhow::Result<()> {
    if prompt {
        write!(out, "> ")?;
        out.flush()?;
    }
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        match line {
            "" => {}
            ":quit" | ":q" => break,
            ":help" => write!(out, "{HELP}")?,
            ":state" => write_anchors(out, session.space())?,
            ":log" => {
                for e in session.log() {
                    let what = match &e.event {
                        LogEvent::Instruction { text, action, .. } => {
                            format!("\"{text}\" -> {}", describe_action(action))
                        }
                        LogEvent::Action { action } => describe_action(action),
                        LogEvent::Perception { percepts, time } => {
                            format!("perception t={time} ({} percepts)", percepts.len())
                        }
                    };
                    writeln!(out, "{:>4} {what}", e.seq)?;
                }
            }
            ":replay" => {
                let again = session.replay()?;
                let same = again.log() == session.log() && again.space() == session.space();
                writeln!(out, "replay {}", if same { "identical" } else { "DIFFERS" })?;
            }
            cmd if cmd.starts_with(':') => writeln!(out, "unknown command {cmd} (try :help)")?,
            text => {
                let outcome = session.submit_instruction(text);
                if let Some(p) = &outcome.posterior {
                    for (id, dist) in &p.anchors {
                        let before = p.anchor_prior.get(id).and_then(top_label);
                        if let (Some(b), Some(n)) = (before, p.top_label(id)) {
                            if b != n {
                                writeln!(out, "  {id}: {b} -> {n} ({:.3})", dist[n])?;
                            }
                        }
                    }
                }
                writeln!(out, "{}", describe_action(&outcome.action))?;
            }
        }
        if prompt {
            write!(out, "> ")?;
            out.flush()?;
        }
    }
    Ok(())
}
