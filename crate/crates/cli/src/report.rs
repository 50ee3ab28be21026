//! Reports: ordered sections of tagged scalars, rendered as TOML and as text.

use std::fmt::Write as _;

use crate::config::RunConfig;

/// Round to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn fmt9(x: f64) -> String {
    let r = sig9(x);
    if r == 0.0 || !r.is_finite() || (1e-4..1e9).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Field {
    fn to_toml(&self) -> toml::Value {
        match self {
            Field::Num(x) => toml::Value::Float(sig9(*x)),
            Field::Int(i) => toml::Value::Integer(*i),
            Field::Bool(b) => toml::Value::Boolean(*b),
            Field::Text(s) => toml::Value::String(s.clone()),
        }
    }

    fn to_text(&self) -> String {
        match self {
            Field::Num(x) => fmt9(*x),
            Field::Int(i) => i.to_string(),
            Field::Bool(b) => b.to_string(),
            Field::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<usize> for Field {
    fn from(x: usize) -> Self {
        Field::Int(x as i64)
    }
}

impl From<u64> for Field {
    fn from(x: u64) -> Self {
        Field::Int(x as i64)
    }
}

impl From<bool> for Field {
    fn from(x: bool) -> Self {
        Field::Bool(x)
    }
}

impl From<&str> for Field {
    fn from(x: &str) -> Self {
        Field::Text(x.to_string())
    }
}

impl From<String> for Field {
    fn from(x: String) -> Self {
        Field::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Field,
    /// How the value was produced.
    pub formula: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Section {
    pub name: String,
    pub entries: Vec<Entry>,
    pub children: Vec<Section>,
}

impl Section {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), ..Default::default() }
    }

    pub fn put(&mut self, key: &str, value: impl Into<Field>) -> &mut Self {
        self.entries.push(Entry { key: key.to_string(), value: value.into(), formula: None });
        self
    }

    /// A scalar together with the formula that produced it.
    pub fn tagged(&mut self, key: &str, value: impl Into<Field>, formula: &str) -> &mut Self {
        self.entries.push(Entry { key: key.to_string(), value: value.into(), formula: Some(formula.to_string()) });
        self
    }

    pub fn child(&mut self, section: Section) -> &mut Self {
        self.children.push(section);
        self
    }

    pub fn get(&self, key: &str) -> Option<&Field> {
        self.entries.iter().find(|e| e.key == key).map(|e| &e.value)
    }

    fn to_toml(&self) -> toml::Table {
        let mut t = toml::Table::new();
        for e in &self.entries {
            let v = match &e.formula {
                None => e.value.to_toml(),
                Some(f) => {
                    let mut inner = toml::Table::new();
                    inner.insert("value".into(), e.value.to_toml());
                    inner.insert("formula".into(), toml::Value::String(f.clone()));
                    toml::Value::Table(inner)
                }
            };
            t.insert(e.key.clone(), v);
        }
        for c in &self.children {
            t.insert(c.name.clone(), toml::Value::Table(c.to_toml()));
        }
        t
    }

    fn write_text(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let width = self.entries.iter().map(|e| e.key.len()).max().unwrap_or(0);
        for e in &self.entries {
            let _ = write!(out, "{pad}{:<width$}  {}", e.key, e.value.to_text());
            if let Some(f) = &e.formula {
                let _ = write!(out, "    [{f}]");
            }
            out.push('\n');
        }
        for c in &self.children {
            let _ = writeln!(out, "{pad}{}:", c.name);
            c.write_text(out, depth + 1);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub sections: Vec<Section>,
    /// Free text printed ahead of the sections in the text rendering.
    pub preface: String,
    /// Echo of the full configuration, defaults included.
    pub config: Option<RunConfig>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self { command: command.to_string(), sections: vec![], preface: String::new(), config: None }
    }

    pub fn push(&mut self, section: Section) -> &mut Self {
        self.sections.push(section);
        self
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn to_toml(&self) -> String {
        let mut t = toml::Table::new();
        t.insert("tool".into(), toml::Value::String("certkit".into()));
        t.insert("version".into(), toml::Value::String(env!("CARGO_PKG_VERSION").into()));
        t.insert("command".into(), toml::Value::String(self.command.clone()));
        for s in &self.sections {
            t.insert(s.name.clone(), toml::Value::Table(s.to_toml()));
        }
        if let Some(cfg) = &self.config {
            t.insert("config".into(), toml::Value::try_from(cfg).expect("configuration serializes"));
        }
        toml::to_string(&t).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("certkit {} {}\n", env!("CARGO_PKG_VERSION"), self.command);
        if !self.preface.is_empty() {
            let _ = write!(out, "\n{}", self.preface);
        }
        for s in &self.sections {
            let _ = writeln!(out, "\n[{}]", s.name);
            s.write_text(&mut out, 1);
        }
        if let Some(cfg) = &self.config {
            let _ = writeln!(out, "\n[config]\n{}", cfg.to_toml());
        }
        out
    }
}

/// The configuration echoed in a TOML report.
pub fn config_echo(report_toml: &str) -> anyhow::Result<RunConfig> {
    let mut t: toml::Table = toml::from_str(report_toml)?;
    let cfg = t.remove("config").ok_or_else(|| anyhow::anyhow!("report has no config section"))?;
    Ok(cfg.try_into()?)
}
