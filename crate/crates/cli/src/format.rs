//! Line-oriented instance files.
//!
//! ```text
//! logic psat
//! gamma x1 -> x2
//! prob x1 | x2 >= 0.8
//! ```
//!
//! The first meaningful line names the logic. Blank lines and lines
//! starting with `#` are skipped.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use qlr::cquel::{Basic, BasicDisplay, ConceptLiteral, CountingSentence, CquelInstance, ElConstraint};
use qlr::formula::{parse_formula, SymbolTable};
use qlr::lipsat::{LipAssignment, LipInstance};
use qlr::lp::Relation;
use qlr::luka::parse_lformula;
use qlr::psat::{PsatAssignment, PsatInstance};
use qlr::rational::{format_rational, parse_rational, Rational};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Logic {
    Psat,
    Cquel,
    Lipsat,
}

impl Logic {
    pub fn name(self) -> &'static str {
        match self {
            Logic::Psat => "psat",
            Logic::Cquel => "cquel",
            Logic::Lipsat => "lipsat",
        }
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Logic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "psat" => Ok(Logic::Psat),
            "cquel" => Ok(Logic::Cquel),
            "lipsat" => Ok(Logic::Lipsat),
            other => Err(format!("unknown logic `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Psat(PsatInstance),
    Cquel(CquelInstance),
    Lipsat(LipInstance),
}

impl Instance {
    pub fn logic(&self) -> Logic {
        match self {
            Instance::Psat(_) => Logic::Psat,
            Instance::Cquel(_) => Logic::Cquel,
            Instance::Lipsat(_) => Logic::Lipsat,
        }
    }
}

/// Positions are 1-based; `column` counts characters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A slice of a line that remembers where it starts.
#[derive(Debug, Clone, Copy)]
struct Span<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Span<'a> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormatError> {
        Err(FormatError { line: self.line, column: self.column, message: message.into() })
    }

    fn at(&self, byte: usize) -> Span<'a> {
        Span { text: &self.text[byte..], line: self.line, column: self.column + self.text[..byte].chars().count() }
    }

    fn upto(&self, byte: usize) -> Span<'a> {
        Span { text: &self.text[..byte], ..*self }
    }

    fn trim(&self) -> Span<'a> {
        let start = self.text.len() - self.text.trim_start().len();
        let s = self.at(start);
        Span { text: s.text.trim_end(), ..s }
    }

    fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    /// First whitespace-delimited word and the trimmed remainder.
    fn word(&self) -> (Span<'a>, Span<'a>) {
        let t = self.trim();
        let end = t.text.find(char::is_whitespace).unwrap_or(t.text.len());
        (t.upto(end), t.at(end).trim())
    }

    fn find(&self, pattern: &str) -> Option<usize> {
        self.text.find(pattern)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn identifier<'a>(s: Span<'a>, what: &str) -> Result<&'a str, FormatError> {
    let s = s.trim();
    if !is_identifier(s.text) {
        return s.error(format!("expected {what} name, found `{}`", s.text));
    }
    Ok(s.text)
}

fn rational(s: Span<'_>) -> Result<Rational, FormatError> {
    let s = s.trim();
    parse_rational(s.text).or_else(|_| s.error(format!("`{}` is not a rational number", s.text)))
}

fn relation(s: Span<'_>) -> Result<Relation, FormatError> {
    match s.text {
        "<=" => Ok(Relation::Le),
        ">=" => Ok(Relation::Ge),
        "=" => Ok(Relation::Eq),
        other => s.error(format!("expected <=, >= or =, found `{other}`")),
    }
}

/// Splits `<formula> <rel> <rational>` at the relation.
fn split_relation<'a>(s: Span<'a>) -> Result<(Span<'a>, Relation, Span<'a>), FormatError> {
    let Some(eq) = s.find("=") else {
        return s.error("missing relation <=, >= or =");
    };
    let (start, rel) = match s.text[..eq].chars().last() {
        Some('<') => (eq - 1, Relation::Le),
        Some('>') => (eq - 1, Relation::Ge),
        _ => (eq, Relation::Eq),
    };
    Ok((s.upto(start), rel, s.at(eq + 1)))
}

fn formula_error(s: Span<'_>, e: qlr::formula::ParseError) -> FormatError {
    FormatError { line: s.line, column: s.column + e.position().saturating_sub(1), message: e.to_string() }
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| Span { text: l, line: i + 1, column: 1 })
        .filter(|s| !s.trim().is_empty() && !s.trim().text.starts_with('#'));
    let Some(header) = lines.next() else {
        return Err(FormatError { line: 1, column: 1, message: "empty instance file".into() });
    };
    let (kw, rest) = header.word();
    if kw.text != "logic" {
        return kw.error("the first line must be `logic psat`, `logic cquel` or `logic lipsat`");
    }
    let logic: Logic = rest.text.parse().or_else(|e: String| rest.error(e))?;
    match logic {
        Logic::Psat => parse_psat(lines).map(Instance::Psat),
        Logic::Cquel => parse_cquel(lines).map(Instance::Cquel),
        Logic::Lipsat => parse_lipsat(lines).map(Instance::Lipsat),
    }
}

fn parse_psat<'a>(lines: impl Iterator<Item = Span<'a>>) -> Result<PsatInstance, FormatError> {
    let mut inst = PsatInstance::default();
    for line in lines {
        let (kw, rest) = line.word();
        match kw.text {
            "gamma" => {
                let f = parse_formula(rest.text, &mut inst.symbols).map_err(|e| formula_error(rest, e))?;
                inst.gamma.push(f);
            }
            "prob" => {
                let (body, relation, value) = split_relation(rest)?;
                let body = body.trim();
                let formula = parse_formula(body.text, &mut inst.symbols).map_err(|e| formula_error(body, e))?;
                inst.assignments.push(PsatAssignment { formula, relation, prob: rational(value)? });
            }
            other => return kw.error(format!("unknown PSAT statement `{other}`")),
        }
    }
    Ok(inst)
}

fn parse_lipsat<'a>(lines: impl Iterator<Item = Span<'a>>) -> Result<LipInstance, FormatError> {
    let mut inst = LipInstance::default();
    for line in lines {
        let (kw, rest) = line.word();
        match kw.text {
            "gamma" => {
                let f = parse_lformula(rest.text, &mut inst.symbols).map_err(|e| formula_error(rest, e))?;
                inst.gamma.push(f);
            }
            "prob" => {
                let (body, relation, value) = split_relation(rest)?;
                if relation != Relation::Eq {
                    return rest.error("LIPSAT assignments must use `=`");
                }
                let body = body.trim();
                let formula = parse_lformula(body.text, &mut inst.symbols).map_err(|e| formula_error(body, e))?;
                inst.assignments.push(LipAssignment { formula, prob: rational(value)? });
            }
            other => return kw.error(format!("unknown LIPSAT statement `{other}`")),
        }
    }
    Ok(inst)
}

fn parse_cquel<'a>(lines: impl Iterator<Item = Span<'a>>) -> Result<CquelInstance, FormatError> {
    let mut inst = CquelInstance::default();
    for line in lines {
        let (kw, rest) = line.word();
        match kw.text {
            "forall" => {
                let f = parse_formula(rest.text, &mut inst.predicates).map_err(|e| formula_error(rest, e))?;
                inst.universal.push(f);
            }
            "count" => {
                let (rel, rest) = rest.word();
                let relation = match relation(rel)? {
                    Relation::Eq => return rel.error("counting sentences use <= or >="),
                    r => r,
                };
                let (n, body) = rest.word();
                let bound: u64 = n.text.parse().or_else(|_| n.error(format!("`{}` is not a count", n.text)))?;
                if body.is_empty() {
                    return body.error("missing counting body");
                }
                let body = parse_formula(body.text, &mut inst.predicates).map_err(|e| formula_error(body, e))?;
                inst.counting.push(CountingSentence { relation, bound, body });
            }
            "ia" => {
                let Some(arrow) = rest.find("->") else {
                    return rest.error("expected `<basic> -> <concept>`");
                };
                let lhs = basic(rest.upto(arrow), &mut inst)?;
                let mut rhs = Vec::new();
                let mut part = rest.at(arrow + 2);
                loop {
                    let end = part.find("&").unwrap_or(part.text.len());
                    let piece = part.upto(end).trim();
                    let (positive, b) = match piece.text.strip_prefix('!') {
                        Some(_) => (false, piece.at(1)),
                        None => (true, piece),
                    };
                    rhs.push(ConceptLiteral { basic: basic(b, &mut inst)?, positive });
                    if end == part.text.len() {
                        break;
                    }
                    part = part.at(end + 1);
                }
                inst.el.push(ElConstraint::Inclusion { lhs, rhs });
            }
            "funct" => {
                let (first, rest) = rest.word();
                let (inverse, name) = if first.text == "inv" && !rest.is_empty() { (true, rest) } else { (false, first) };
                if !rest.is_empty() && !inverse {
                    return rest.error("unexpected text after role name");
                }
                let role = inst.roles.intern(identifier(name, "role")?);
                inst.el.push(ElConstraint::Funct { role, inverse });
            }
            "fact" => {
                let f = fact(rest, &mut inst)?;
                inst.el.push(f);
            }
            other => return kw.error(format!("unknown CQUEL statement `{other}`")),
        }
    }
    Ok(inst)
}

fn basic(s: Span<'_>, inst: &mut CquelInstance) -> Result<Basic, FormatError> {
    let (first, rest) = s.word();
    if first.text != "some" {
        if !rest.is_empty() {
            return rest.error("unexpected text after predicate name");
        }
        return Ok(Basic::Pred(inst.predicates.intern(identifier(first, "predicate")?)));
    }
    let (second, tail) = rest.word();
    if second.text == "inv" && !tail.is_empty() {
        let (name, extra) = tail.word();
        if !extra.is_empty() {
            return extra.error("unexpected text after role name");
        }
        return Ok(Basic::ExistsInv(inst.roles.intern(identifier(name, "role")?)));
    }
    if !tail.is_empty() {
        return tail.error("unexpected text after role name");
    }
    Ok(Basic::Exists(inst.roles.intern(identifier(second, "role")?)))
}

fn fact(s: Span<'_>, inst: &mut CquelInstance) -> Result<ElConstraint, FormatError> {
    let (Some(open), Some(close)) = (s.find("("), s.find(")")) else {
        return s.error("expected `name(constant)` or `name(constant,constant)`");
    };
    if close < open || !s.at(close + 1).trim().is_empty() {
        return s.error("malformed fact");
    }
    let name = identifier(s.upto(open), "predicate or role")?;
    let args = s.upto(close).at(open + 1);
    match args.find(",") {
        None => {
            let constant = inst.constants.intern(identifier(args, "constant")?);
            Ok(ElConstraint::Fact { pred: inst.predicates.intern(name), constant })
        }
        Some(comma) => {
            let from = inst.constants.intern(identifier(args.upto(comma), "constant")?);
            let to = inst.constants.intern(identifier(args.at(comma + 1), "constant")?);
            Ok(ElConstraint::RoleFact { role: inst.roles.intern(name), from, to })
        }
    }
}

pub fn print_instance(inst: &Instance) -> String {
    let mut out = format!("logic {}\n", inst.logic());
    match inst {
        Instance::Psat(p) => {
            for g in &p.gamma {
                writeln!(out, "gamma {}", g.display(&p.symbols)).unwrap();
            }
            for a in &p.assignments {
                let f = a.formula.display(&p.symbols);
                writeln!(out, "prob {f} {} {}", a.relation.symbol(), format_rational(&a.prob)).unwrap();
            }
        }
        Instance::Lipsat(l) => {
            for g in &l.gamma {
                writeln!(out, "gamma {}", g.display(&l.symbols)).unwrap();
            }
            for a in &l.assignments {
                writeln!(out, "prob {} = {}", a.formula.display(&l.symbols), format_rational(&a.prob)).unwrap();
            }
        }
        Instance::Cquel(c) => print_cquel(c, &mut out),
    }
    out
}

fn print_cquel(c: &CquelInstance, out: &mut String) {
    let show = |basic| BasicDisplay { basic, predicates: &c.predicates, roles: &c.roles };
    for s in &c.counting {
        writeln!(out, "count {} {} {}", s.relation.symbol(), s.bound, s.body.display(&c.predicates)).unwrap();
    }
    for f in &c.universal {
        writeln!(out, "forall {}", f.display(&c.predicates)).unwrap();
    }
    let name = |t: &SymbolTable, s| t.name(s).to_string();
    for e in &c.el {
        match e {
            ElConstraint::Inclusion { lhs, rhs } => {
                let parts: Vec<String> =
                    rhs.iter().map(|l| format!("{}{}", if l.positive { "" } else { "!" }, show(l.basic))).collect();
                writeln!(out, "ia {} -> {}", show(*lhs), parts.join(" & ")).unwrap();
            }
            ElConstraint::Funct { role, inverse } => {
                writeln!(out, "funct {}{}", if *inverse { "inv " } else { "" }, name(&c.roles, *role)).unwrap();
            }
            ElConstraint::Fact { pred, constant } => {
                writeln!(out, "fact {}({})", name(&c.predicates, *pred), name(&c.constants, *constant)).unwrap();
            }
            ElConstraint::RoleFact { role, from, to } => {
                let (a, b) = (name(&c.constants, *from), name(&c.constants, *to));
                writeln!(out, "fact {}({a},{b})", name(&c.roles, *role)).unwrap();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qlr::rational::ratio;

    #[test]
    fn ant_file() {
        let text = "logic psat\n# ants\ngamma x1 -> x2\n\nprob x1 | x2 >= 0.8\nprob x1 <= 1/10\nprob x2 = 3/4\n";
        let Instance::Psat(p) = parse_instance(text).unwrap() else { panic!() };
        assert_eq!(p.gamma.len(), 1);
        let rels: Vec<Relation> = p.assignments.iter().map(|a| a.relation).collect();
        assert_eq!(rels, [Relation::Ge, Relation::Le, Relation::Eq]);
        assert_eq!(p.assignments[0].prob, ratio(4, 5));
        assert_eq!(
            print_instance(&Instance::Psat(p)),
            "logic psat\ngamma x1 -> x2\nprob x1 | x2 >= 4/5\nprob x1 <= 1/10\nprob x2 = 3/4\n"
        );
    }

    #[test]
    fn cquel_statements() {
        let text = "logic cquel\ncount <= 15 g & (m | h)\nforall g -> p\nia p -> some parentOf & !q\n\
                    ia some inv parentOf -> person\nfunct inv parentOf\nfunct r\nfact p(ann)\nfact parentOf(ann,bob)\n";
        let Instance::Cquel(c) = parse_instance(text).unwrap() else { panic!() };
        assert_eq!(c.counting[0].bound, 15);
        assert_eq!(c.el.len(), 6);
        let parent = c.roles.lookup("parentOf").unwrap();
        assert_eq!(c.el[2], ElConstraint::Funct { role: parent, inverse: true });
        let ElConstraint::Inclusion { lhs, rhs } = &c.el[0] else { panic!() };
        assert_eq!(*lhs, Basic::Pred(c.predicates.lookup("p").unwrap()));
        assert_eq!(rhs[0].basic, Basic::Exists(parent));
        assert!(!rhs[1].positive);
        let printed = print_instance(&Instance::Cquel(c.clone()));
        assert_eq!(parse_instance(&printed).unwrap(), Instance::Cquel(c));
        assert!(printed.contains("fact parentOf(ann,bob)\n"));
    }

    #[test]
    fn lipsat_statements() {
        let text = "logic lipsat\ngamma ~(x1 (*) x2)\nprob x1 (+) x2 = 0.6\n";
        let Instance::Lipsat(l) = parse_instance(text).unwrap() else { panic!() };
        assert_eq!(l.assignments[0].prob, ratio(3, 5));
        let err = parse_instance("logic lipsat\nprob x1 >= 1/2\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_instance("logic psat\ngamma x1 & & x2\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 12));
        let err = parse_instance("logic psat\nprob x1 >= half\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 12));
        let err = parse_instance("logic cquel\ncount = 3 p\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 7));
        let err = parse_instance("logic modal\n").unwrap_err();
        assert_eq!((err.line, err.column), (1, 7));
        assert!(parse_instance("gamma x\n").is_err());
        assert!(parse_instance("logic cquel\nia some -> p\n").is_err());
        assert!(parse_instance("logic cquel\nfact p(a,b,c)\n").is_err());
    }
}
