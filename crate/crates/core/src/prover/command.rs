use std::fmt;
use std::str::FromStr;

use super::error::ProverError;
use super::sequent::FormulaNumber;

/// Names of the prover commands, for completion.
pub const COMMAND_NAMES: [&str; 11] =
    ["flatten", "split", "skolem", "inst", "expand", "assert", "prop", "grind", "postpone", "undo", "quit"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Flatten,
    Split,
    Skolem,
    Inst { fnum: FormulaNumber, terms: Vec<String> },
    Expand { name: String },
    Assert,
    Prop,
    Grind,
    Postpone,
    Undo,
    Quit,
}

fn words(text: &str) -> Result<Vec<String>, ProverError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut w = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some(n) => w.push(n),
                        None => return Err(ProverError::BadArguments("unterminated string".into())),
                    },
                    Some(ch) => w.push(ch),
                    None => return Err(ProverError::BadArguments("unterminated string".into())),
                }
            }
            out.push(w);
        } else {
            let mut w = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                w.push(ch);
                chars.next();
            }
            out.push(w);
        }
    }
    Ok(out)
}

impl FromStr for Command {
    type Err = ProverError;

    /// Accepts `inst -1 "x + 1"` as well as the parenthesized `(inst -1 "x + 1")`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut t = text.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
            t = inner.trim();
        }
        let ws = words(t)?;
        let Some((name, args)) = ws.split_first() else {
            return Err(ProverError::UnknownCommand(String::new()));
        };
        let name = name.to_ascii_lowercase();
        let no_args = |cmd: Command| {
            if args.is_empty() {
                Ok(cmd)
            } else {
                Err(ProverError::BadArguments(format!("{name} takes no arguments")))
            }
        };
        match name.as_str() {
            "flatten" => no_args(Command::Flatten),
            "split" => no_args(Command::Split),
            "skolem" => no_args(Command::Skolem),
            "assert" => no_args(Command::Assert),
            "prop" => no_args(Command::Prop),
            "grind" => no_args(Command::Grind),
            "postpone" => no_args(Command::Postpone),
            "undo" => no_args(Command::Undo),
            "quit" => no_args(Command::Quit),
            "expand" => match args {
                [n] => Ok(Command::Expand { name: n.clone() }),
                _ => Err(ProverError::BadArguments("usage: expand <name>".into())),
            },
            "inst" => {
                let Some((f, terms)) = args.split_first().filter(|(_, t)| !t.is_empty()) else {
                    return Err(ProverError::BadArguments("usage: inst <fnum> <term>...".into()));
                };
                let fnum: FormulaNumber =
                    f.parse().map_err(|_| ProverError::BadArguments(format!("'{f}' is not a formula number")))?;
                Ok(Command::Inst { fnum, terms: terms.to_vec() })
            }
            _ => Err(ProverError::UnknownCommand(name)),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Flatten => f.write_str("flatten"),
            Command::Split => f.write_str("split"),
            Command::Skolem => f.write_str("skolem"),
            Command::Assert => f.write_str("assert"),
            Command::Prop => f.write_str("prop"),
            Command::Grind => f.write_str("grind"),
            Command::Postpone => f.write_str("postpone"),
            Command::Undo => f.write_str("undo"),
            Command::Quit => f.write_str("quit"),
            Command::Expand { name } => write!(f, "expand {name:?}"),
            Command::Inst { fnum, terms } => {
                write!(f, "inst {fnum}")?;
                for t in terms {
                    write!(f, " \"{}\"", t.replace('\\', "\\\\").replace('"', "\\\""))?;
                }
                Ok(())
            }
        }
    }
}
