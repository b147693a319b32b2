//! Rule files, signature files and report JSON.
//!
//! Rule grammar, one rule per line, `#` starts a comment:
//!
//! ```text
//! rule  := body "->" head
//! body  := "true" | atom ("," atom)*
//! head  := "false" | ["exists" var ("," var)* "."] conj ("|" conj)*
//! conj  := atom ("," atom)*
//! atom  := PRED ["(" term ("," term)* ")"]
//! term  := VAR | ":" CONST
//! ```
//!
//! Predicates start with an uppercase letter, variables with a lowercase one.
//! `BOT`, `TOP` and `EQ` name ⊥, ⊤ and equality.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::extract::ModuleReport;
use crate::model::{Atom, Constant, Predicate, Rule, RuleError, RuleId, SignatureSet, TBox, TBoxError, Term, Variable};
use crate::normalize::{normalize_tbox, NormalizeError};

/// 1-based position in the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("predicate {name} used with arity {found}, earlier with arity {expected}")]
    ArityConflict { name: String, expected: usize, found: usize },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    TBox(#[from] TBoxError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn syntax(span: SourceSpan, msg: impl Into<String>) -> Self {
        ParseError { span, kind: ParseErrorKind::Syntax(msg.into()) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Pred(String),
    Var(String),
    Const(String),
    LParen,
    RParen,
    Comma,
    Bar,
    Dot,
    Arrow,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Pred(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Const(s) => write!(f, "`:{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Arrow => f.write_str("`->`"),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_var_char(c: char) -> bool {
    // `@` and `#` appear in renamed existential variables.
    is_ident_char(c) || c == '@' || c == '#' || c == '\''
}

fn is_const_char(c: char) -> bool {
    is_ident_char(c) || matches!(c, '@' | '#' | ':' | '\'' | '-')
}

/// Splits one line into tokens, stopping at a comment.
fn lex_line(line: &str, line_no: usize) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = SourceSpan { line: line_no, column: i + 1 };
        let take = |i: &mut usize, pred: fn(char) -> bool| {
            let start = *i;
            while *i < chars.len() && pred(chars[*i]) {
                *i += 1;
            }
            chars[start..*i].iter().collect::<String>()
        };
        match c {
            c if c.is_whitespace() => i += 1,
            '#' => break,
            '(' => {
                toks.push((Tok::LParen, span));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, span));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, span));
                i += 1;
            }
            '|' => {
                toks.push((Tok::Bar, span));
                i += 1;
            }
            '.' => {
                toks.push((Tok::Dot, span));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                toks.push((Tok::Arrow, span));
                i += 2;
            }
            ':' => {
                i += 1;
                let name = take(&mut i, is_const_char);
                if name.is_empty() {
                    return Err(ParseError::syntax(span, "expected a constant name after `:`"));
                }
                toks.push((Tok::Const(name), span));
            }
            c if c.is_ascii_uppercase() => {
                let name = take(&mut i, is_ident_char);
                toks.push((Tok::Pred(name), span));
            }
            c if c.is_ascii_lowercase() || c == '_' => {
                let name = take(&mut i, is_var_char);
                toks.push((Tok::Var(name), span));
            }
            other => {
                return Err(ParseError::syntax(span, format!("unexpected character `{other}`")));
            }
        }
    }
    Ok(toks)
}

struct LineParser<'a> {
    toks: &'a [(Tok, SourceSpan)],
    pos: usize,
    end: SourceSpan,
    arities: &'a mut HashMap<String, usize>,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span(&self) -> SourceSpan {
        self.toks.get(self.pos).map(|(_, s)| *s).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        tok
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let span = self.span();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(ParseError::syntax(span, format!("expected {want}, found {t}"))),
            None => Err(ParseError::syntax(span, format!("expected {want}, found end of line"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Var(v)) if v == kw)
    }

    fn atom(&mut self, existentials: &[Variable]) -> Result<Atom, ParseError> {
        let span = self.span();
        let name = match self.bump() {
            Some(Tok::Pred(name)) => name,
            Some(Tok::Var(v)) if v == "exists" => {
                return Err(ParseError::syntax(span, "the existential quantifier must precede the whole head"))
            }
            Some(t) => return Err(ParseError::syntax(span, format!("expected a predicate, found {t}"))),
            None => return Err(ParseError::syntax(span, "expected a predicate, found end of line")),
        };
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.bump();
            loop {
                let tspan = self.span();
                match self.bump() {
                    Some(Tok::Var(v)) => {
                        let var = Variable::new(&v);
                        if existentials.contains(&var) {
                            args.push(Term::Exist(var));
                        } else {
                            args.push(Term::Var(var));
                        }
                    }
                    Some(Tok::Const(c)) => args.push(Term::Const(Constant::new(c))),
                    Some(t) => return Err(ParseError::syntax(tspan, format!("expected a term, found {t}"))),
                    None => return Err(ParseError::syntax(tspan, "expected a term, found end of line")),
                }
                match self.bump() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RParen) => break,
                    _ => {
                        return Err(ParseError::syntax(
                            self.toks.get(self.pos - 1).map(|t| t.1).unwrap_or(self.end),
                            "expected `,` or `)`",
                        ))
                    }
                }
            }
        }
        match self.arities.get(&name) {
            Some(&expected) if expected != args.len() => {
                return Err(ParseError {
                    span,
                    kind: ParseErrorKind::ArityConflict { name, expected, found: args.len() },
                })
            }
            Some(_) => {}
            None => {
                self.arities.insert(name.clone(), args.len());
            }
        }
        let pred = Predicate::new(&name, args.len());
        Atom::new(pred, args).map_err(|e| ParseError::syntax(span, e.to_string()))
    }

    fn conjunction(&mut self, existentials: &[Variable]) -> Result<Vec<Atom>, ParseError> {
        let mut atoms = vec![self.atom(existentials)?];
        while self.peek() == Some(&Tok::Comma) {
            self.bump();
            atoms.push(self.atom(existentials)?);
        }
        Ok(atoms)
    }

    fn rule(&mut self, id: RuleId) -> Result<Rule, ParseError> {
        let start = self.span();
        let body = if self.at_keyword("true") {
            self.bump();
            Vec::new()
        } else {
            self.conjunction(&[])?
        };
        self.expect(Tok::Arrow)?;
        let mut existentials = Vec::new();
        let head = if self.at_keyword("false") {
            self.bump();
            Vec::new()
        } else {
            if self.at_keyword("exists") {
                self.bump();
                loop {
                    let span = self.span();
                    match self.bump() {
                        Some(Tok::Var(v)) if !matches!(v.as_str(), "exists" | "true" | "false") => {
                            existentials.push(Variable::new(v))
                        }
                        _ => return Err(ParseError::syntax(span, "expected a variable")),
                    }
                    match self.peek() {
                        Some(Tok::Comma) => {
                            self.bump();
                        }
                        _ => break,
                    }
                }
                self.expect(Tok::Dot)?;
            }
            let mut disjuncts = vec![self.conjunction(&existentials)?];
            while self.peek() == Some(&Tok::Bar) {
                self.bump();
                disjuncts.push(self.conjunction(&existentials)?);
            }
            disjuncts
        };
        if let Some(t) = self.peek() {
            let msg = format!("unexpected {t} after the rule head");
            return Err(ParseError::syntax(self.span(), msg));
        }
        Rule::new(id, body, existentials, head).map_err(|e| ParseError { span: start, kind: e.into() })
    }
}

/// Parses a rule file. Rules are numbered from 1 in order and the result is
/// normalised.
pub fn parse_tbox(text: &str) -> Result<TBox, ParseError> {
    let mut arities = HashMap::new();
    let mut rules = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex_line(line, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let end = SourceSpan { line: line_no, column: line.chars().count() + 1 };
        let mut parser = LineParser { toks: &toks, pos: 0, end, arities: &mut arities };
        rules.push(parser.rule(RuleId(rules.len() + 1))?);
    }
    let at_start = SourceSpan { line: 1, column: 1 };
    let tbox = TBox::new(rules).map_err(|e| ParseError { span: at_start, kind: e.into() })?;
    normalize_tbox(tbox).map_err(|e| ParseError {
        span: at_start,
        kind: match e {
            NormalizeError::Rule(r) => r.into(),
            NormalizeError::TBox(t) => t.into(),
        },
    })
}

/// Parses a signature file: `Name/arity` entries separated by whitespace or
/// newlines. ⊥ is always included.
pub fn parse_signature(text: &str) -> Result<SignatureSet, ParseError> {
    let mut sig = SignatureSet::new();
    let mut arities: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        let mut offset = 0;
        for entry in content.split_whitespace() {
            let column = content[offset..].find(entry).map(|p| p + offset).unwrap_or(0) + 1;
            offset = column - 1 + entry.len();
            let span = SourceSpan { line: idx + 1, column };
            let malformed =
                || ParseError::syntax(span, format!("malformed signature entry `{entry}`, expected Name/arity"));
            let (name, arity) = entry.split_once('/').ok_or_else(malformed)?;
            let arity: usize = arity.parse().map_err(|_| malformed())?;
            let mut chars = name.chars();
            let ok = chars.next().is_some_and(|c| c.is_ascii_uppercase()) && chars.all(is_ident_char);
            if !ok {
                return Err(malformed());
            }
            if let Some(&expected) = arities.get(name) {
                if expected != arity {
                    return Err(ParseError {
                        span,
                        kind: ParseErrorKind::ArityConflict { name: name.to_string(), expected, found: arity },
                    });
                }
            }
            arities.insert(name.to_string(), arity);
            let pred = Predicate::new(name, arity);
            if pred.misuses_reserved_name() {
                return Err(ParseError::syntax(span, format!("`{name}` is reserved with a different arity")));
            }
            sig.insert(pred);
        }
    }
    Ok(sig)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("signature predicate {name}/{sig_arity} is used with arity {tbox_arity} in the TBox")]
pub struct SignatureMismatch {
    pub name: String,
    pub sig_arity: usize,
    pub tbox_arity: usize,
}

/// Checks that every signature predicate agrees in arity with the TBox.
pub fn check_signature(sig: &SignatureSet, tbox: &TBox) -> Result<(), SignatureMismatch> {
    let tsig = tbox.signature_ref();
    for p in sig.iter() {
        if let Some(q) = tsig.by_name(p.name()) {
            if q.arity() != p.arity() {
                return Err(SignatureMismatch {
                    name: p.name().to_string(),
                    sig_arity: p.arity(),
                    tbox_arity: q.arity(),
                });
            }
        }
    }
    Ok(())
}

/// `Name/arity` for every non-⊥ member, one per line.
pub fn serialize_signature(sig: &SignatureSet) -> String {
    sig.iter().filter(|p| !p.is_bottom()).map(|p| format!("{}/{}\n", p.name(), p.arity())).collect()
}

/// One rule per line in the rule grammar.
pub fn serialize_tbox(t: &TBox) -> String {
    t.rules().iter().map(|r| format!("{r}\n")).collect()
}

/// Like [`serialize_tbox`] but tags each line with its rule id in a comment.
pub fn serialize_module(t: &TBox) -> String {
    t.rules().iter().map(|r| format!("{r}  # {}\n", r.id())).collect()
}

/// Canonical report JSON on a single line.
pub fn serialize_report(r: &ModuleReport) -> String {
    let mut sorted = r.clone();
    sorted.module_rule_ids.sort_unstable();
    sorted.equality_rule_ids.sort_unstable();
    serde_json::to_string(&sorted).expect("reports always serialise")
}

pub fn parse_report(text: &str) -> Result<ModuleReport, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_existential_conjunction() {
        let t = parse_tbox("D(x) -> exists y3 . S(x,y3), E(y3)\n").unwrap();
        let r = &t.rules()[0];
        assert_eq!(r.id(), RuleId(1));
        assert_eq!(r.head().len(), 1);
        assert_eq!(r.head()[0].len(), 2);
        assert_eq!(r.existentials()[0].name(), "y3@r1#0");
        assert!(matches!(r.head()[0][1].args()[0], Term::Exist(_)));
    }

    #[test]
    fn parses_false_head() {
        let t = parse_tbox("G(x), H(x) -> false").unwrap();
        assert!(t.rules()[0].head().is_empty());
        assert_eq!(t.rules()[0].body().len(), 2);
    }

    #[test]
    fn shared_quantifier_block_over_disjuncts() {
        let t = parse_tbox("A(x) -> exists y1 . R(x,y1), B(y1) | C(x)").unwrap();
        let r = &t.rules()[0];
        assert_eq!(r.head().len(), 2);
        assert_eq!(r.existentials().len(), 1);
        assert_eq!(r.head()[1][0].to_string(), "C(x)");
    }

    #[test]
    fn per_disjunct_quantifier_rejected() {
        let err = parse_tbox("A(x) -> B(x) | exists y . R(x,y)").unwrap_err();
        assert_eq!(err.span, SourceSpan { line: 1, column: 16 });
    }

    #[test]
    fn unsafe_rule_reports_id() {
        let err = parse_tbox("# c\nA(x) -> B(x)\nA(x) -> B(z)\n").unwrap_err();
        assert_eq!(err.span.line, 3);
        assert_eq!(err.kind, ParseErrorKind::Rule(RuleError::Unsafe(RuleId(2), "z".into())));
    }

    #[test]
    fn arity_conflict_detected() {
        let err = parse_tbox("A(x) -> B(x)\nA(x,y) -> B(x)").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::ArityConflict { .. }));
        assert_eq!(err.span, SourceSpan { line: 2, column: 1 });
    }

    #[test]
    fn constants_and_true_body() {
        let t = parse_tbox("Q(:a), Q(:b) -> Q(:c)\ntrue -> exists y . P(y)").unwrap();
        assert_eq!(t.constant_pool().len(), 3);
        assert!(t.rules()[1].body().is_empty());
    }

    #[test]
    fn comments_and_renamed_names() {
        let text = "A(x) -> exists y@r1#0 . R(x,y@r1#0) # trailing\n";
        let t = parse_tbox(text).unwrap();
        assert_eq!(serialize_tbox(&t), "A(x) -> exists y@r1#0 . R(x,y@r1#0)\n");
    }

    #[test]
    fn signature_file() {
        let sig = parse_signature("B/1\nC/1\nD/1\nG/1\n").unwrap();
        assert_eq!(sig.len(), 5);
        assert!(sig.contains(&Predicate::new("G", 1)));
        assert!(parse_signature("").unwrap().is_trivial());
        let sig = parse_signature("R/2").unwrap();
        assert!(sig.contains(&Predicate::new("R", 2)));
        let err = parse_signature("A/1\nB-1").unwrap_err();
        assert_eq!(err.span, SourceSpan { line: 2, column: 1 });
        assert!(parse_signature("A/1 A/2").is_err());
    }

    #[test]
    fn signature_cross_check() {
        let t = parse_tbox("R(x,y) -> A(x)").unwrap();
        assert!(check_signature(&parse_signature("A/1").unwrap(), &t).is_ok());
        assert!(check_signature(&parse_signature("R/1").unwrap(), &t).is_err());
    }
}
