//! Run reports printed by the `nig` binary.
//!
//! The structured rendering is line-delimited with a fixed field order:
//!
//! ```text
//! report <command>
//! param <name> <value>          # every effective parameter, defaults included
//! result <name> <value> ...     # one or more whitespace-separated tokens
//! timing_ms <milliseconds>
//! end
//! ```
//!
//! Parameters and results appear in the order the command emits them, so
//! two runs with the same inputs differ only on the `timing_ms` line.
//! Reals are printed with 12 significant digits by [`format_sig`].

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub command: String,
    pub params: Vec<(String, String)>,
    pub results: Vec<(String, Vec<String>)>,
    pub timing_ms: u128,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn param(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.params.push((name.to_string(), value.to_string()));
        self
    }

    pub fn result<I, T>(&mut self, name: &str, values: I) -> &mut Self
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        self.results.push((
            name.to_string(),
            values.into_iter().map(|v| v.to_string()).collect(),
        ));
        self
    }

    pub fn reals(&mut self, name: &str, values: &[f64]) -> &mut Self {
        self.result(name, values.iter().map(|&x| format_sig(x)))
    }

    /// All values recorded under `name`, in order.
    pub fn get(&self, name: &str) -> Vec<&[String]> {
        self.results
            .iter()
            .filter(|(k, _)| k == name)
            .map(|(_, v)| v.as_slice())
            .collect()
    }

    pub fn render_structured(&self) -> String {
        let mut out = String::new();
        writeln!(out, "report {}", self.command).unwrap();
        for (k, v) in &self.params {
            writeln!(out, "param {k} {v}").unwrap();
        }
        for (k, v) in &self.results {
            if v.is_empty() {
                writeln!(out, "result {k}").unwrap();
            } else {
                writeln!(out, "result {k} {}", v.join(" ")).unwrap();
            }
        }
        writeln!(out, "timing_ms {}", self.timing_ms).unwrap();
        writeln!(out, "end").unwrap();
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let width = self
            .params
            .iter()
            .map(|(k, _)| k.len())
            .chain(self.results.iter().map(|(k, _)| k.len()))
            .max()
            .unwrap_or(0);
        writeln!(out, "{}", self.command).unwrap();
        for (k, v) in &self.params {
            writeln!(out, "  {k:<width$}  {v}").unwrap();
        }
        writeln!(out).unwrap();
        for (k, v) in &self.results {
            writeln!(out, "{k:<width$}  {}", v.join(" ")).unwrap();
        }
        writeln!(out, "({} ms)", self.timing_ms).unwrap();
        out
    }
}

/// Formats `x` with 12 significant digits: fixed notation for magnitudes in
/// `[1e-5, 1e12)`, scientific otherwise.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}
