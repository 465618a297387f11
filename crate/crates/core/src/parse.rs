//! Text format for mass-action systems (`.crn` files).
//!
//! ```text
//! # comment
//! species: A, B, C
//! A -> B + C ; k=1.5
//! B + C <-> 0 ; k=1.0, 3.0
//! 2 A -> A ; k=0.25
//! ```
//!
//! Grammar, whitespace-insensitive:
//!
//! ```text
//! document := (decl | reaction)*
//! decl     := "species" ":" ident ("," ident)*
//! reaction := complex arrow complex ";" "k" "=" num ("," num)?
//! arrow    := "->" | "<->"
//! complex  := "0" | term ("+" term)*
//! term     := [integer] ident
//! ```
//!
//! `->` takes exactly one rate constant, `<->` exactly two (forward, backward).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::model::{is_identifier, Complex, MassActionSystem, ReactionNetwork};

/// Largest stoichiometric coefficient accepted per species in a complex.
pub const MAX_COEFFICIENT: u32 = 999;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

fn err<T>(span: Span, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { span, message: message.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Arrow,
    BiArrow,
    Plus,
    Semi,
    Comma,
    Eq,
    Colon,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::BiArrow => write!(f, "`<->`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, col: &mut usize, n: usize| {
        *i += n;
        *col += n;
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(&mut i, &mut col, 1),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '+' => {
                out.push((Tok::Plus, span));
                advance(&mut i, &mut col, 1);
            }
            ';' => {
                out.push((Tok::Semi, span));
                advance(&mut i, &mut col, 1);
            }
            ',' => {
                out.push((Tok::Comma, span));
                advance(&mut i, &mut col, 1);
            }
            '=' => {
                out.push((Tok::Eq, span));
                advance(&mut i, &mut col, 1);
            }
            ':' => {
                out.push((Tok::Colon, span));
                advance(&mut i, &mut col, 1);
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                out.push((Tok::BiArrow, span));
                advance(&mut i, &mut col, 3);
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, span));
                advance(&mut i, &mut col, 2);
            }
            c if c.is_ascii_digit()
                || c == '.'
                || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.')) =>
            {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                // exponent only when followed by digits, so `2e` stays `2` `e`
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[start..j].iter().collect();
                out.push((Tok::Number(s), span));
                advance(&mut i, &mut col, j - start);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push((Tok::Ident(chars[start..j].iter().collect()), span));
                advance(&mut i, &mut col, j - start);
            }
            other => return err(span, format!("unexpected character {other:?}")),
        }
    }
    out.push((Tok::Eof, Span { line, column: col }));
    Ok(out)
}

/// A complex as written: `(coefficient, species name)` terms, empty for `0`.
pub type Terms = Vec<(u32, String)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionStatement {
    pub source: Terms,
    pub product: Terms,
    pub reversible: bool,
    /// One rate for `->`, forward and backward rates for `<->`.
    pub rates: Vec<f64>,
    pub span: Span,
}

/// Parsed but not yet resolved document, with source positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkDocument {
    pub species: Option<(Vec<String>, Span)>,
    pub reactions: Vec<ReactionStatement>,
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Span, ParseError> {
        let (tok, span) = self.bump();
        if tok == want {
            Ok(span)
        } else {
            err(span, format!("expected {want}, found {tok}"))
        }
    }

    fn document(&mut self) -> Result<NetworkDocument, ParseError> {
        let mut doc = NetworkDocument::default();
        loop {
            match self.peek() {
                Tok::Eof => return Ok(doc),
                Tok::Ident(s) if s == "species" && *self.peek_at(1) == Tok::Colon => {
                    let span = self.span();
                    if doc.species.is_some() {
                        return err(span, "species declared more than once");
                    }
                    self.bump();
                    self.bump();
                    doc.species = Some((self.ident_list()?, span));
                }
                _ => doc.reactions.push(self.reaction()?),
            }
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut names = Vec::new();
        loop {
            match self.bump() {
                (Tok::Ident(s), _) => names.push(s),
                (tok, span) => return err(span, format!("expected species name, found {tok}")),
            }
            if *self.peek() != Tok::Comma {
                return Ok(names);
            }
            self.bump();
        }
    }

    fn coefficient(text: &str, span: Span) -> Result<u32, ParseError> {
        if text.starts_with('-') {
            return err(span, format!("negative stoichiometric coefficient `{text}`"));
        }
        if !text.chars().all(|c| c.is_ascii_digit()) {
            return err(span, format!("non-integer stoichiometric coefficient `{text}`"));
        }
        match text.parse::<u32>() {
            Ok(0) => err(span, "stoichiometric coefficient of a term must be positive"),
            Ok(v) if v <= MAX_COEFFICIENT => Ok(v),
            _ => err(span, format!("stoichiometric coefficient `{text}` exceeds {MAX_COEFFICIENT}")),
        }
    }

    fn complex(&mut self) -> Result<Terms, ParseError> {
        if let Tok::Number(s) = self.peek() {
            if !matches!(self.peek_at(1), Tok::Ident(_)) {
                let s = s.clone();
                let span = self.span();
                if s == "0" {
                    self.bump();
                    return Ok(Vec::new());
                }
                return err(span, format!("expected `0` or a species term, found number `{s}`"));
            }
        }
        let mut terms = Vec::new();
        loop {
            let coeff = match self.peek().clone() {
                Tok::Number(s) => {
                    let span = self.span();
                    self.bump();
                    Self::coefficient(&s, span)?
                }
                _ => 1,
            };
            match self.bump() {
                (Tok::Ident(name), _) => terms.push((coeff, name)),
                (tok, span) => return err(span, format!("expected species name, found {tok}")),
            }
            if *self.peek() != Tok::Plus {
                return Ok(terms);
            }
            self.bump();
        }
    }

    fn rate(&mut self) -> Result<f64, ParseError> {
        match self.bump() {
            (Tok::Number(s), span) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
                Ok(_) => err(span, format!("rate constant must be positive, got `{s}`")),
                Err(_) => err(span, format!("malformed rate constant `{s}`")),
            },
            (tok, span) => err(span, format!("expected rate constant, found {tok}")),
        }
    }

    fn reaction(&mut self) -> Result<ReactionStatement, ParseError> {
        let span = self.span();
        let source = self.complex()?;
        let reversible = match self.bump() {
            (Tok::Arrow, _) => false,
            (Tok::BiArrow, _) => true,
            (tok, span) => return err(span, format!("expected `->` or `<->`, found {tok}")),
        };
        let product = self.complex()?;
        match self.bump() {
            (Tok::Semi, _) => {}
            (tok, span) => {
                return err(span, format!("expected `;` followed by a rate constant, found {tok}"))
            }
        }
        match self.bump() {
            (Tok::Ident(k), _) if k == "k" => {}
            (tok, span) => return err(span, format!("missing rate constant: expected `k`, found {tok}")),
        }
        self.expect(Tok::Eq)?;
        let mut rates = vec![self.rate()?];
        if *self.peek() == Tok::Comma {
            let comma = self.span();
            if !reversible {
                return err(comma, "irreversible reaction `->` takes exactly one rate constant");
            }
            self.bump();
            rates.push(self.rate()?);
        } else if reversible {
            return err(self.span(), "reversible reaction `<->` needs forward and backward rate constants");
        }
        Ok(ReactionStatement { source, product, reversible, rates, span })
    }
}

/// Parses text into a document without resolving species.
pub fn parse_document(text: &str) -> Result<NetworkDocument, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.document()
}

impl NetworkDocument {
    /// Resolves species, expands reversible statements and validates the
    /// network invariants, reporting the offending statement's position.
    pub fn to_system(&self) -> Result<MassActionSystem, ParseError> {
        let species: Vec<String> = match &self.species {
            Some((names, span)) => {
                let mut seen = HashSet::new();
                for n in names {
                    if !seen.insert(n) {
                        return err(*span, format!("species `{n}` declared twice"));
                    }
                }
                names.clone()
            }
            None => {
                let mut seen = HashSet::new();
                let mut names = Vec::new();
                for st in &self.reactions {
                    for (_, n) in st.source.iter().chain(&st.product) {
                        if seen.insert(n.clone()) {
                            names.push(n.clone());
                        }
                    }
                }
                names
            }
        };
        let index: HashMap<&str, usize> =
            species.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();

        let to_complex = |terms: &Terms, span: Span| -> Result<Complex, ParseError> {
            let mut v = vec![0u32; species.len()];
            for (c, name) in terms {
                let Some(&i) = index.get(name.as_str()) else {
                    return err(span, format!("species `{name}` is not declared"));
                };
                v[i] += c;
                if v[i] > MAX_COEFFICIENT {
                    return err(span, format!("coefficient of `{name}` exceeds {MAX_COEFFICIENT}"));
                }
            }
            Ok(Complex::new(v))
        };

        let mut pairs = Vec::new();
        let mut kappa = Vec::new();
        let mut seen: HashMap<(Complex, Complex), Span> = HashMap::new();
        for st in &self.reactions {
            let s = to_complex(&st.source, st.span)?;
            let p = to_complex(&st.product, st.span)?;
            if s == p {
                return err(st.span, "reaction has identical source and product complexes");
            }
            let mut directed = vec![(s.clone(), p.clone(), st.rates[0])];
            if st.reversible {
                directed.push((p, s, st.rates[1]));
            }
            for (a, b, k) in directed {
                if let Some(prev) = seen.insert((a.clone(), b.clone()), st.span) {
                    return err(st.span, format!("duplicate reaction (first defined at {prev})"));
                }
                pairs.push((a, b));
                kappa.push(k);
            }
        }
        let net = ReactionNetwork::new(species, pairs)
            .map_err(|e| ParseError { span: Span { line: 1, column: 1 }, message: e.to_string() })?;
        MassActionSystem::new(net, kappa)
            .map_err(|e| ParseError { span: Span { line: 1, column: 1 }, message: e.to_string() })
    }
}

/// Parses a `.crn` document into a mass-action system.
pub fn parse(text: &str) -> Result<MassActionSystem, ParseError> {
    parse_document(text)?.to_system()
}

/// Parses a single complex such as `A+2B` or `0` against known species.
pub fn parse_complex(text: &str, species: &[String]) -> Result<Complex, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let terms = p.complex()?;
    if *p.peek() != Tok::Eof {
        return err(p.span(), format!("unexpected {} after complex", p.peek()));
    }
    let mut v = vec![0u32; species.len()];
    for (c, name) in terms {
        let Some(i) = species.iter().position(|s| *s == name) else {
            return err(Span { line: 1, column: 1 }, format!("unknown species `{name}`"));
        };
        v[i] += c;
    }
    Ok(Complex::new(v))
}

fn write_complex(out: &mut String, c: &Complex, names: &[String]) {
    if c.is_zero() {
        out.push('0');
        return;
    }
    let mut first = true;
    for (name, &k) in names.iter().zip(c.coeffs()) {
        if k == 0 {
            continue;
        }
        if !first {
            out.push_str(" + ");
        }
        first = false;
        if k > 1 {
            out.push_str(&format!("{k} "));
        }
        out.push_str(name);
    }
}

/// Canonical text form: species declaration, then one irreversible reaction
/// per line, sorted by (source vector, product vector).
pub fn serialize(sys: &MassActionSystem) -> String {
    let net = sys.network();
    let names: Vec<String> = net.species().iter().map(|s| s.name.clone()).collect();
    debug_assert!(names.iter().all(|n| is_identifier(n)));
    let mut out = String::new();
    if !names.is_empty() {
        out.push_str("species: ");
        out.push_str(&names.join(", "));
        out.push('\n');
    }
    let sorted: BTreeMap<(&Complex, &Complex), f64> = (0..net.num_reactions())
        .map(|i| ((net.source(i), net.product(i)), sys.kappa()[i]))
        .collect();
    for ((s, p), k) in sorted {
        write_complex(&mut out, s, &names);
        out.push_str(" -> ");
        write_complex(&mut out, p, &names);
        out.push_str(&format!(" ; k={k:?}\n"));
    }
    out
}
