//! Plain-text serialization of MDPs and posteriors.
//!
//! MDP block:
//!
//! ```text
//! <states> <actions> <gamma>
//! transitions <k>
//! <s> <a> <s'> <p>        (k rows, nonzero entries only)
//! rewards <k>
//! <s> <a> <r>             (k rows, nonzero entries only)
//! initial <k>
//! <s> <p>                 (k rows)
//! terminal <k> <s>...
//! ```
//!
//! A posterior file is `<n_mdps>`, a line of `n` weights, then `n` MDP blocks.
//! Floats are printed with the shortest representation that parses back to
//! the same bits, so writing a parsed file reproduces it exactly. Blank lines
//! and `#` comments are ignored on input.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::epistemic::Posterior;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub fn write_mdp(m: &TabularMdp) -> String {
    let mut out = String::new();
    write_mdp_into(m, &mut out);
    out
}

fn write_mdp_into(m: &TabularMdp, out: &mut String) {
    let (n, na) = (m.num_states(), m.num_actions());
    let _ = writeln!(out, "{n} {na} {}", m.discount());
    let mut rows = Vec::new();
    for s in 0..n {
        for a in 0..na {
            for (next, &p) in m.transition_row(s, a).iter().enumerate() {
                if p != 0.0 {
                    rows.push(format!("{s} {a} {next} {p}"));
                }
            }
        }
    }
    section(out, "transitions", &rows);
    rows.clear();
    for s in 0..n {
        for a in 0..na {
            let r = m.reward(s, a);
            if r != 0.0 {
                rows.push(format!("{s} {a} {r}"));
            }
        }
    }
    section(out, "rewards", &rows);
    rows.clear();
    for (s, &p) in m.initial().iter().enumerate() {
        if p != 0.0 {
            rows.push(format!("{s} {p}"));
        }
    }
    section(out, "initial", &rows);
    let terminal: Vec<String> = (0..n).filter(|&s| m.is_terminal(s)).map(|s| s.to_string()).collect();
    let _ = write!(out, "terminal {}", terminal.len());
    for s in &terminal {
        let _ = write!(out, " {s}");
    }
    out.push('\n');
}

fn section(out: &mut String, name: &str, rows: &[String]) {
    let _ = writeln!(out, "{name} {}", rows.len());
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
}

pub fn write_posterior(p: &Posterior) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", p.len());
    let weights: Vec<String> = p.weights().iter().map(|w| w.to_string()).collect();
    let _ = writeln!(out, "{}", weights.join(" "));
    for m in p.mdps() {
        write_mdp_into(m, &mut out);
    }
    out
}

pub fn parse_mdp(text: &str) -> Result<TabularMdp> {
    let mut lines = Lines::new(text);
    let m = read_mdp(&mut lines)?;
    lines.expect_end()?;
    Ok(m)
}

pub fn parse_posterior(text: &str) -> Result<Posterior> {
    let mut lines = Lines::new(text);
    let (line, toks) = lines.next_required("posterior header")?;
    let n: usize = field(line, &toks, 0)?;
    if toks.len() != 1 {
        return Err(Error::parse(line, "header must be a single member count"));
    }
    let (line, toks) = lines.next_required("weight line")?;
    if toks.len() != n {
        return Err(Error::parse(line, format!("expected {n} weights, found {}", toks.len())));
    }
    let weights = (0..n).map(|i| field(line, &toks, i)).collect::<Result<Vec<f64>>>()?;
    let mdps = (0..n).map(|_| read_mdp(&mut lines)).collect::<Result<Vec<_>>>()?;
    lines.expect_end()?;
    Posterior::new(mdps, weights)
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate().peekable(),
        }
    }

    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let content = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = content.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn next_required(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_tokens()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of input, expected {what}")))
    }

    fn expect_end(&mut self) -> Result<()> {
        match self.next_tokens() {
            None => Ok(()),
            Some((line, _)) => Err(Error::parse(line, "trailing content")),
        }
    }
}

fn field<T: FromStr>(line: usize, toks: &[&str], i: usize) -> Result<T> {
    let tok = toks
        .get(i)
        .ok_or_else(|| Error::parse(line, format!("missing field {}", i + 1)))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse '{tok}'")))
}

fn section_header(lines: &mut Lines, name: &str) -> Result<(usize, Vec<String>)> {
    let (line, toks) = lines.next_required(name)?;
    if toks[0] != name {
        return Err(Error::parse(line, format!("expected '{name}' section, found '{}'", toks[0])));
    }
    Ok((line, toks.iter().skip(1).map(|s| s.to_string()).collect()))
}

fn index(line: usize, value: usize, bound: usize, what: &str) -> Result<usize> {
    if value >= bound {
        return Err(Error::parse(line, format!("{what} {value} out of range (< {bound})")));
    }
    Ok(value)
}

fn read_rows<'a>(lines: &mut Lines<'a>, name: &str, arity: usize) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let (line, rest) = section_header(lines, name)?;
    let rest: Vec<&str> = rest.iter().map(String::as_str).collect();
    let count: usize = field(line, &rest, 0)?;
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let (l, toks) = lines.next_required(name)?;
        if toks.len() != arity {
            return Err(Error::parse(l, format!("{name} row must have {arity} fields")));
        }
        rows.push((l, toks));
    }
    Ok(rows)
}

fn read_mdp(lines: &mut Lines) -> Result<TabularMdp> {
    let (line, toks) = lines.next_required("MDP header")?;
    if toks.len() != 3 {
        return Err(Error::parse(line, "MDP header must be '<states> <actions> <gamma>'"));
    }
    let n: usize = field(line, &toks, 0)?;
    let na: usize = field(line, &toks, 1)?;
    let gamma: f64 = field(line, &toks, 2)?;
    let mut transition = vec![0.0; n * na * n];
    for (l, t) in read_rows(lines, "transitions", 4)? {
        let s = index(l, field(l, &t, 0)?, n, "state")?;
        let a = index(l, field(l, &t, 1)?, na, "action")?;
        let next = index(l, field(l, &t, 2)?, n, "state")?;
        transition[(s * na + a) * n + next] = field(l, &t, 3)?;
    }
    let mut reward = vec![0.0; n * na];
    for (l, t) in read_rows(lines, "rewards", 3)? {
        let s = index(l, field(l, &t, 0)?, n, "state")?;
        let a = index(l, field(l, &t, 1)?, na, "action")?;
        reward[s * na + a] = field(l, &t, 2)?;
    }
    let mut initial = vec![0.0; n];
    for (l, t) in read_rows(lines, "initial", 2)? {
        let s = index(l, field(l, &t, 0)?, n, "state")?;
        initial[s] = field(l, &t, 1)?;
    }
    let (l, rest) = section_header(lines, "terminal")?;
    let rest: Vec<&str> = rest.iter().map(String::as_str).collect();
    let count: usize = field(l, &rest, 0)?;
    if rest.len() != count + 1 {
        return Err(Error::parse(l, format!("terminal list must contain {count} states")));
    }
    let mut terminal = vec![false; n];
    for i in 0..count {
        terminal[index(l, field(l, &rest, i + 1)?, n, "state")?] = true;
    }
    TabularMdp::new(n, na, transition, reward, gamma, initial, terminal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn sample() -> TabularMdp {
        let mut b = MdpBuilder::new(3, 2, 0.9);
        b.transition(0, 0, 0, 0.1).transition(0, 0, 1, 0.9).deterministic(0, 1, 2);
        b.deterministic(1, 0, 0).transition(1, 1, 1, 1.0 / 3.0).transition(1, 1, 2, 2.0 / 3.0);
        b.reward(0, 0, -0.7).reward(1, 1, 1e-17).terminal(2).initial(0, 0.25).initial(1, 0.75);
        b.build().unwrap()
    }

    #[test]
    fn mdp_text_round_trip_is_bit_exact() {
        let m = sample();
        let text = write_mdp(&m);
        let back = parse_mdp(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_mdp(&back), text);
    }

    #[test]
    fn posterior_round_trip_is_bit_exact() {
        let p = Posterior::new(vec![sample(), sample()], vec![0.3, 0.7]).unwrap();
        let text = write_posterior(&p);
        assert!(text.starts_with("2\n0.3 0.7\n"));
        let back = parse_posterior(&text).unwrap();
        assert_eq!(write_posterior(&back), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "2 1 0.5\ntransitions 2\n0 0 1 1\n1 0 x 1\nrewards 0\ninitial 1\n0 1\nterminal 0\n";
        match parse_mdp(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_rows_are_rejected_after_parsing() {
        let text = "2 1 0.5\ntransitions 2\n0 0 1 0.5\n1 0 0 1\nrewards 0\ninitial 1\n0 1\nterminal 0\n";
        assert!(matches!(parse_mdp(text), Err(Error::InvalidMdp(_))));
    }
}
