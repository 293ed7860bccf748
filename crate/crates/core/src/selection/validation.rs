//! Metric validation: per-metric threshold rules combined by a boolean formula.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::metrics::{Metric, MetricVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    AlwaysTrue,
}

impl CmpOp {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            CmpOp::Lt => value < threshold,
            CmpOp::Le => value <= threshold,
            CmpOp::Gt => value > threshold,
            CmpOp::Ge => value >= threshold,
            CmpOp::Eq => value == threshold,
            CmpOp::Ne => value != threshold,
            CmpOp::AlwaysTrue => true,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::AlwaysTrue => "always-true",
        }
    }
}

impl FromStr for CmpOp {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "<" => CmpOp::Lt,
            "<=" | "≤" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" | "≥" => CmpOp::Ge,
            "=" | "==" => CmpOp::Eq,
            "!=" | "≠" => CmpOp::Ne,
            "always-true" | "always" => CmpOp::AlwaysTrue,
            other => return Err(format!("unknown comparison operator {other:?}")),
        })
    }
}

impl Serialize for CmpOp {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for CmpOp {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// `metric op threshold`. Thresholds use the metric's raw unit
/// (USD, seconds, tx/s, percent, H/s, reputation points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationRule {
    pub metric: Metric,
    pub op: CmpOp,
    #[serde(default)]
    pub threshold: f64,
}

impl ValidationRule {
    pub fn new(metric: Metric, op: CmpOp, threshold: f64) -> Self {
        ValidationRule { metric, op, threshold }
    }

    pub fn check(&self) -> Result<(), PolicyError> {
        let bad = |reason: String| PolicyError::Rule {
            metric: self.metric,
            reason,
        };
        if self.op == CmpOp::AlwaysTrue {
            return Ok(());
        }
        if !self.threshold.is_finite() {
            return Err(bad("threshold must be finite".into()));
        }
        if self.metric == Metric::M8 && (self.threshold.fract() != 0.0 || !(0.0..=10.0).contains(&self.threshold)) {
            return Err(bad(format!(
                "reputation threshold {} must be an integer in 0..=10",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn holds(&self, value: f64) -> bool {
        self.op.holds(value, self.threshold)
    }
}

impl fmt::Display for ValidationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.op == CmpOp::AlwaysTrue {
            write!(f, "{} always-true", self.metric)
        } else {
            write!(f, "{} {} {}", self.metric, self.op.symbol(), self.threshold)
        }
    }
}

/// Boolean expression over the eight per-metric validities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Var(Metric),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Default for Formula {
    /// `m1 and m2 and ... and m8`.
    fn default() -> Self {
        Metric::ALL
            .iter()
            .map(|m| Formula::Var(*m))
            .reduce(|a, b| Formula::And(Box::new(a), Box::new(b)))
            .expect("eight metrics")
    }
}

impl Formula {
    pub fn eval(&self, vars: &[bool; 8]) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(m) => vars[m.index()],
            Formula::Not(e) => !e.eval(vars),
            Formula::And(a, b) => a.eval(vars) && b.eval(vars),
            Formula::Or(a, b) => a.eval(vars) || b.eval(vars),
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        // precedence: or = 1, and = 2, not/atoms = 3
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Var(m) => write!(f, "{}", m.label().to_ascii_lowercase()),
            Formula::Not(e) => {
                f.write_str("not ")?;
                e.write(f, 3)
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                let (prec, word) = if matches!(self, Formula::And(..)) {
                    (2, "and")
                } else {
                    (1, "or")
                };
                if parent > prec {
                    f.write_str("(")?;
                }
                a.write(f, prec)?;
                write!(f, " {word} ")?;
                b.write(f, prec + 1)?;
                if parent > prec {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Ident(String),
}

fn tokenize(s: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                out.push(Token::LParen);
            }
            ')' => {
                chars.next();
                out.push(Token::RParen);
            }
            '!' => {
                chars.next();
                out.push(Token::Not);
            }
            '&' | '|' => {
                chars.next();
                if chars.next() != Some(c) {
                    return Err(format!("expected '{c}{c}'"));
                }
                out.push(if c == '&' { Token::And } else { Token::Or });
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c.to_ascii_lowercase());
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(match word.as_str() {
                    "and" => Token::And,
                    "or" => Token::Or,
                    "not" => Token::Not,
                    _ => Token::Ident(word),
                });
            }
            other => return Err(format!("unexpected character {other:?}")),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn or(&mut self) -> Result<Formula, String> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Token::Or) {
            self.bump();
            lhs = Formula::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, String> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.bump();
            lhs = Formula::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, String> {
        match self.bump() {
            Some(Token::Not) => Ok(Formula::Not(Box::new(self.unary()?))),
            Some(Token::LParen) => {
                let inner = self.or()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err("missing ')'".into()),
                }
            }
            Some(Token::Ident(word)) => match word.as_str() {
                "true" => Ok(Formula::Const(true)),
                "false" => Ok(Formula::Const(false)),
                w => w.parse::<Metric>().map(Formula::Var),
            },
            Some(t) => Err(format!("unexpected {t:?}")),
            None => Err("unexpected end of formula".into()),
        }
    }
}

impl FromStr for Formula {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            tokens: tokenize(s)?,
            pos: 0,
        };
        let f = p.or()?;
        if p.pos != p.tokens.len() {
            return Err(format!("unexpected {:?} after complete formula", p.tokens[p.pos]));
        }
        Ok(f)
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Rules plus the formula combining their outcomes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Validation {
    #[serde(default)]
    pub rules: Vec<ValidationRule>,
    #[serde(default)]
    pub formula: Formula,
}

/// Eight per-metric validities and the overall verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub per_metric: [bool; 8],
    pub overall: bool,
}

impl ValidationResult {
    pub const ALL_TRUE: ValidationResult = ValidationResult {
        per_metric: [true; 8],
        overall: true,
    };

    pub fn metric(&self, m: Metric) -> bool {
        self.per_metric[m.index()]
    }

    pub fn tuple(&self) -> [bool; 9] {
        let mut t = [false; 9];
        t[..8].copy_from_slice(&self.per_metric);
        t[8] = self.overall;
        t
    }
}

impl Validation {
    pub fn check(&self) -> Result<(), PolicyError> {
        self.rules.iter().try_for_each(ValidationRule::check)
    }

    /// Evaluates every rule against the metric scalars; a metric without a
    /// rule is valid. Several rules on one metric must all hold.
    pub fn evaluate_scalars(&self, scalars: &[f64; 8]) -> ValidationResult {
        let mut per_metric = [true; 8];
        for rule in &self.rules {
            let i = rule.metric.index();
            per_metric[i] &= rule.holds(scalars[i]);
        }
        ValidationResult {
            per_metric,
            overall: self.formula.eval(&per_metric),
        }
    }

    pub fn validate(&self, vector: &MetricVector) -> ValidationResult {
        self.evaluate_scalars(&vector.scalars())
    }
}
