//! Term syntax: alphabets, the restricted and general term ASTs, parsing,
//! rendering, converse normal form and fragment classification.
//!
//! Concrete syntax (tightest binding first): postfix `*` and `^`, prefix `-`,
//! then `;`, `&`, `|`. Binary operators associate to the left. Atoms match
//! `[a-z][a-z0-9_]*`; `1` is the identity, `0` the empty relation and `T` the
//! full relation.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Returns true when `s` is a legal atom name.
pub fn is_atom_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// A finite, ordered, nonempty set of atom names. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    names: Arc<[String]>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::Alphabet("alphabet must be nonempty".into()));
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !is_atom_name(n) {
                return Err(Error::Alphabet(format!("`{n}` is not a valid atom name")));
            }
            if !seen.insert(n.as_str()) {
                return Err(Error::Alphabet(format!("duplicate atom `{n}`")));
            }
        }
        Ok(Alphabet { names: names.into() })
    }

    /// Parses a comma-separated list such as `a,b,c`.
    pub fn parse_list(text: &str) -> Result<Self> {
        Alphabet::new(text.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }

    /// The atoms of the given sets, sorted; `{a}` when there are none.
    pub fn from_atoms<'a, I: IntoIterator<Item = &'a String>>(atoms: I) -> Self {
        let set: BTreeSet<&String> = atoms.into_iter().collect();
        if set.is_empty() {
            return Alphabet::new(["a"]).expect("valid default alphabet");
        }
        Alphabet::new(set.into_iter().cloned()).expect("atoms are validated by the parser")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn first(&self) -> &str {
        &self.names[0]
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// This alphabet followed by the atoms of `other` it lacks.
    pub fn extend(&self, other: &Alphabet) -> Alphabet {
        let mut names: Vec<String> = self.names.to_vec();
        for n in other.names() {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
        Alphabet { names: names.into() }
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.names.iter()).finish()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.names.join(","))
    }
}

/// Restricted terms: converse only on atoms and complemented atoms, and the
/// identity as the only complemented constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    NegVar(String),
    ConvVar(String),
    ConvNegVar(String),
    Id,
    NegId,
    Bot,
    Top,
    Comp(Box<Term>, Box<Term>),
    Union(Box<Term>, Box<Term>),
    Inter(Box<Term>, Box<Term>),
    Star(Box<Term>),
}

/// Unrestricted terms as accepted by the parser before normalization.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GeneralTerm {
    Var(String),
    NegVar(String),
    Id,
    NegId,
    Bot,
    NegBot,
    Top,
    NegTop,
    Comp(Box<GeneralTerm>, Box<GeneralTerm>),
    Union(Box<GeneralTerm>, Box<GeneralTerm>),
    Inter(Box<GeneralTerm>, Box<GeneralTerm>),
    Star(Box<GeneralTerm>),
    Conv(Box<GeneralTerm>),
}

impl Term {
    pub fn var(a: &str) -> Term {
        Term::Var(a.to_string())
    }

    pub fn neg_var(a: &str) -> Term {
        Term::NegVar(a.to_string())
    }

    pub fn conv_var(a: &str) -> Term {
        Term::ConvVar(a.to_string())
    }

    pub fn conv_neg_var(a: &str) -> Term {
        Term::ConvNegVar(a.to_string())
    }

    pub fn comp(l: Term, r: Term) -> Term {
        Term::Comp(Box::new(l), Box::new(r))
    }

    pub fn union(l: Term, r: Term) -> Term {
        Term::Union(Box::new(l), Box::new(r))
    }

    pub fn inter(l: Term, r: Term) -> Term {
        Term::Inter(Box::new(l), Box::new(r))
    }

    pub fn star(t: Term) -> Term {
        Term::Star(Box::new(t))
    }

    /// Left-nested composition of `ts`; the identity when empty.
    pub fn comp_all<I: IntoIterator<Item = Term>>(ts: I) -> Term {
        ts.into_iter().reduce(Term::comp).unwrap_or(Term::Id)
    }

    /// Left-nested union of `ts`; the empty relation when empty.
    pub fn union_all<I: IntoIterator<Item = Term>>(ts: I) -> Term {
        ts.into_iter().reduce(Term::union).unwrap_or(Term::Bot)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Comp(l, r) | Term::Union(l, r) | Term::Inter(l, r) => 1 + l.size() + r.size(),
            Term::Star(t) => 1 + t.size(),
            _ => 1,
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(a) | Term::NegVar(a) | Term::ConvVar(a) | Term::ConvNegVar(a) => {
                out.insert(a.clone());
            }
            Term::Comp(l, r) | Term::Union(l, r) | Term::Inter(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
            Term::Star(t) => t.collect_atoms(out),
            _ => {}
        }
    }

    /// Checks that every atom belongs to `sigma`.
    pub fn check_atoms(&self, sigma: &Alphabet) -> Result<()> {
        match self.atoms().into_iter().find(|a| !sigma.contains(a)) {
            Some(a) => Err(Error::UnknownAtom(a)),
            None => Ok(()),
        }
    }

    pub fn fragment(&self) -> FragmentDescriptor {
        fragment_of(self)
    }

    pub fn to_general(&self) -> GeneralTerm {
        let b = |t: &Term| Box::new(t.to_general());
        match self {
            Term::Var(a) => GeneralTerm::Var(a.clone()),
            Term::NegVar(a) => GeneralTerm::NegVar(a.clone()),
            Term::ConvVar(a) => GeneralTerm::Conv(Box::new(GeneralTerm::Var(a.clone()))),
            Term::ConvNegVar(a) => GeneralTerm::Conv(Box::new(GeneralTerm::NegVar(a.clone()))),
            Term::Id => GeneralTerm::Id,
            Term::NegId => GeneralTerm::NegId,
            Term::Bot => GeneralTerm::Bot,
            Term::Top => GeneralTerm::Top,
            Term::Comp(l, r) => GeneralTerm::Comp(b(l), b(r)),
            Term::Union(l, r) => GeneralTerm::Union(b(l), b(r)),
            Term::Inter(l, r) => GeneralTerm::Inter(b(l), b(r)),
            Term::Star(t) => GeneralTerm::Star(b(t)),
        }
    }
}

impl GeneralTerm {
    pub fn size(&self) -> usize {
        match self {
            GeneralTerm::Comp(l, r) | GeneralTerm::Union(l, r) | GeneralTerm::Inter(l, r) => {
                1 + l.size() + r.size()
            }
            GeneralTerm::Star(t) | GeneralTerm::Conv(t) => 1 + t.size(),
            _ => 1,
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            GeneralTerm::Var(a) | GeneralTerm::NegVar(a) => {
                out.insert(a.clone());
            }
            GeneralTerm::Comp(l, r) | GeneralTerm::Union(l, r) | GeneralTerm::Inter(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
            GeneralTerm::Star(t) | GeneralTerm::Conv(t) => t.collect_atoms(out),
            _ => {}
        }
    }

    /// Converts to a restricted term without rewriting, failing when the
    /// term uses general converse or complemented constants other than `1`.
    pub fn to_term(&self) -> Result<Term> {
        let b = |t: &GeneralTerm| t.to_term().map(Box::new);
        Ok(match self {
            GeneralTerm::Var(a) => Term::Var(a.clone()),
            GeneralTerm::NegVar(a) => Term::NegVar(a.clone()),
            GeneralTerm::Id => Term::Id,
            GeneralTerm::NegId => Term::NegId,
            GeneralTerm::Bot => Term::Bot,
            GeneralTerm::Top => Term::Top,
            GeneralTerm::NegBot => return Err(Error::NotTermForm("complemented `0`".into())),
            GeneralTerm::NegTop => return Err(Error::NotTermForm("complemented `T`".into())),
            GeneralTerm::Conv(inner) => match inner.as_ref() {
                GeneralTerm::Var(a) => Term::ConvVar(a.clone()),
                GeneralTerm::NegVar(a) => Term::ConvNegVar(a.clone()),
                other => {
                    return Err(Error::NotTermForm(format!(
                        "converse of `{other}`; only atoms may be conversed"
                    )))
                }
            },
            GeneralTerm::Comp(l, r) => Term::Comp(b(l)?, b(r)?),
            GeneralTerm::Union(l, r) => Term::Union(b(l)?, b(r)?),
            GeneralTerm::Inter(l, r) => Term::Inter(b(l)?, b(r)?),
            GeneralTerm::Star(t) => Term::Star(b(t)?),
        })
    }
}

/// Pushes converse down to atoms and removes complemented `0` and `T`.
pub fn converse_normal_form(t: &GeneralTerm) -> Term {
    cnf(t, false)
}

fn cnf(t: &GeneralTerm, conv: bool) -> Term {
    let b = |t: &GeneralTerm| Box::new(cnf(t, conv));
    match t {
        GeneralTerm::Var(a) if conv => Term::ConvVar(a.clone()),
        GeneralTerm::Var(a) => Term::Var(a.clone()),
        GeneralTerm::NegVar(a) if conv => Term::ConvNegVar(a.clone()),
        GeneralTerm::NegVar(a) => Term::NegVar(a.clone()),
        GeneralTerm::Id => Term::Id,
        GeneralTerm::NegId => Term::NegId,
        GeneralTerm::Bot | GeneralTerm::NegTop => Term::Bot,
        GeneralTerm::Top | GeneralTerm::NegBot => Term::Top,
        GeneralTerm::Comp(l, r) if conv => Term::Comp(b(r), b(l)),
        GeneralTerm::Comp(l, r) => Term::Comp(b(l), b(r)),
        GeneralTerm::Union(l, r) => Term::Union(b(l), b(r)),
        GeneralTerm::Inter(l, r) => Term::Inter(b(l), b(r)),
        GeneralTerm::Star(s) => Term::Star(b(s)),
        GeneralTerm::Conv(s) => cnf(s, !conv),
    }
}

/// Operator occurrences of a term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FragmentDescriptor {
    pub has_star: bool,
    pub has_inter: bool,
    pub has_negvar: bool,
    pub has_negid: bool,
    pub has_conv: bool,
    pub has_top: bool,
}

impl FragmentDescriptor {
    pub fn is_star_free(&self) -> bool {
        !self.has_star
    }

    pub fn is_inter_free(&self) -> bool {
        !self.has_inter
    }

    pub fn join(self, o: FragmentDescriptor) -> FragmentDescriptor {
        FragmentDescriptor {
            has_star: self.has_star || o.has_star,
            has_inter: self.has_inter || o.has_inter,
            has_negvar: self.has_negvar || o.has_negvar,
            has_negid: self.has_negid || o.has_negid,
            has_conv: self.has_conv || o.has_conv,
            has_top: self.has_top || o.has_top,
        }
    }
}

pub fn fragment_of(t: &Term) -> FragmentDescriptor {
    let mut d = FragmentDescriptor::default();
    fn walk(t: &Term, d: &mut FragmentDescriptor) {
        match t {
            Term::Var(_) | Term::Id | Term::Bot => {}
            Term::NegVar(_) => d.has_negvar = true,
            Term::ConvVar(_) => d.has_conv = true,
            Term::ConvNegVar(_) => {
                d.has_conv = true;
                d.has_negvar = true;
            }
            Term::NegId => d.has_negid = true,
            Term::Top => d.has_top = true,
            Term::Comp(l, r) | Term::Union(l, r) => {
                walk(l, d);
                walk(r, d);
            }
            Term::Inter(l, r) => {
                d.has_inter = true;
                walk(l, d);
                walk(r, d);
            }
            Term::Star(s) => {
                d.has_star = true;
                walk(s, d);
            }
        }
    }
    walk(t, &mut d);
    d
}

/// Leaves closed under the bar dual.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SignedAtom {
    Var(String),
    NegVar(String),
    Id,
    NegId,
    Bot,
    Top,
}

/// `a ↔ ā`, `1 ↔ -1`, `0 ↔ T`.
pub fn bar_dual(x: &SignedAtom) -> SignedAtom {
    match x {
        SignedAtom::Var(a) => SignedAtom::NegVar(a.clone()),
        SignedAtom::NegVar(a) => SignedAtom::Var(a.clone()),
        SignedAtom::Id => SignedAtom::NegId,
        SignedAtom::NegId => SignedAtom::Id,
        SignedAtom::Bot => SignedAtom::Top,
        SignedAtom::Top => SignedAtom::Bot,
    }
}

impl From<&SignedAtom> for Term {
    fn from(x: &SignedAtom) -> Term {
        match x {
            SignedAtom::Var(a) => Term::Var(a.clone()),
            SignedAtom::NegVar(a) => Term::NegVar(a.clone()),
            SignedAtom::Id => Term::Id,
            SignedAtom::NegId => Term::NegId,
            SignedAtom::Bot => Term::Bot,
            SignedAtom::Top => Term::Top,
        }
    }
}

/// Replaces every `T` by `a | -a`.
pub fn replace_top(t: &Term, a: &str) -> Result<Term> {
    if !is_atom_name(a) {
        return Err(Error::Alphabet(format!("`{a}` is not a valid atom name")));
    }
    fn go(t: &Term, a: &str) -> Term {
        let b = |s: &Term| Box::new(go(s, a));
        match t {
            Term::Top => Term::union(Term::var(a), Term::neg_var(a)),
            Term::Comp(l, r) => Term::Comp(b(l), b(r)),
            Term::Union(l, r) => Term::Union(b(l), b(r)),
            Term::Inter(l, r) => Term::Inter(b(l), b(r)),
            Term::Star(s) => Term::Star(b(s)),
            leaf => leaf.clone(),
        }
    }
    Ok(go(t, a))
}

// ---------------------------------------------------------------------------
// Rendering

const P_UNION: u8 = 1;
const P_INTER: u8 = 2;
const P_COMP: u8 = 3;
const P_PREFIX: u8 = 4;
const P_POSTFIX: u8 = 5;
const P_ATOM: u8 = 6;

fn wrap(f: &mut fmt::Formatter<'_>, paren: bool, body: impl FnOnce(&mut fmt::Formatter<'_>) -> fmt::Result) -> fmt::Result {
    if paren {
        f.write_str("(")?;
        body(f)?;
        f.write_str(")")
    } else {
        body(f)
    }
}

impl Term {
    fn prec(&self) -> u8 {
        match self {
            Term::Union(..) => P_UNION,
            Term::Inter(..) => P_INTER,
            Term::Comp(..) => P_COMP,
            Term::NegVar(_) | Term::NegId | Term::ConvNegVar(_) => P_PREFIX,
            Term::Star(_) | Term::ConvVar(_) => P_POSTFIX,
            _ => P_ATOM,
        }
    }

    fn render(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        wrap(f, self.prec() < ctx, |f| match self {
            Term::Var(a) => f.write_str(a),
            Term::NegVar(a) => write!(f, "-{a}"),
            Term::ConvVar(a) => write!(f, "{a}^"),
            Term::ConvNegVar(a) => write!(f, "-{a}^"),
            Term::Id => f.write_str("1"),
            Term::NegId => f.write_str("-1"),
            Term::Bot => f.write_str("0"),
            Term::Top => f.write_str("T"),
            Term::Union(l, r) => {
                l.render(f, P_UNION)?;
                f.write_str("|")?;
                r.render(f, P_INTER)
            }
            Term::Inter(l, r) => {
                l.render(f, P_INTER)?;
                f.write_str("&")?;
                r.render(f, P_COMP)
            }
            Term::Comp(l, r) => {
                l.render(f, P_COMP)?;
                f.write_str(";")?;
                r.render(f, P_PREFIX)
            }
            Term::Star(s) => {
                s.render(f, P_POSTFIX)?;
                f.write_str("*")
            }
        })
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f, P_UNION)
    }
}

impl GeneralTerm {
    fn prec(&self) -> u8 {
        match self {
            GeneralTerm::Union(..) => P_UNION,
            GeneralTerm::Inter(..) => P_INTER,
            GeneralTerm::Comp(..) => P_COMP,
            GeneralTerm::NegVar(_) | GeneralTerm::NegId | GeneralTerm::NegBot | GeneralTerm::NegTop => {
                P_PREFIX
            }
            GeneralTerm::Star(_) | GeneralTerm::Conv(_) => P_POSTFIX,
            _ => P_ATOM,
        }
    }

    fn render(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        wrap(f, self.prec() < ctx, |f| match self {
            GeneralTerm::Var(a) => f.write_str(a),
            GeneralTerm::NegVar(a) => write!(f, "-{a}"),
            GeneralTerm::Id => f.write_str("1"),
            GeneralTerm::NegId => f.write_str("-1"),
            GeneralTerm::Bot => f.write_str("0"),
            GeneralTerm::NegBot => f.write_str("-0"),
            GeneralTerm::Top => f.write_str("T"),
            GeneralTerm::NegTop => f.write_str("-T"),
            GeneralTerm::Union(l, r) => {
                l.render(f, P_UNION)?;
                f.write_str("|")?;
                r.render(f, P_INTER)
            }
            GeneralTerm::Inter(l, r) => {
                l.render(f, P_INTER)?;
                f.write_str("&")?;
                r.render(f, P_COMP)
            }
            GeneralTerm::Comp(l, r) => {
                l.render(f, P_COMP)?;
                f.write_str(";")?;
                r.render(f, P_PREFIX)
            }
            GeneralTerm::Star(s) => {
                s.render(f, P_POSTFIX)?;
                f.write_str("*")
            }
            GeneralTerm::Conv(s) => {
                s.render(f, P_POSTFIX)?;
                f.write_str("^")
            }
        })
    }
}

impl fmt::Display for GeneralTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f, P_UNION)
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Atom(String),
    One,
    Zero,
    Top,
    Minus,
    Caret,
    Star,
    Semi,
    Amp,
    Bar,
    LParen,
    RParen,
    Le,
    Eq,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let tok = match c {
            c if c.is_ascii_whitespace() => {
                i += 1;
                continue;
            }
            'a'..='z' => {
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                out.push((start, Tok::Atom(text[start..i].to_string())));
                continue;
            }
            '1' => Tok::One,
            '0' => Tok::Zero,
            'T' => Tok::Top,
            '-' => Tok::Minus,
            '^' => Tok::Caret,
            '*' => Tok::Star,
            ';' => Tok::Semi,
            '&' => Tok::Amp,
            '|' => Tok::Bar,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '=' => Tok::Eq,
            '<' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::Le
            }
            _ => {
                return Err(Error::Syntax { pos: i, msg: format!("unexpected character `{c}`") });
            }
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    sigma: Option<&'a Alphabet>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn union(&mut self) -> Result<GeneralTerm> {
        let mut t = self.inter()?;
        while self.peek() == Some(&Tok::Bar) {
            self.at += 1;
            t = GeneralTerm::Union(Box::new(t), Box::new(self.inter()?));
        }
        Ok(t)
    }

    fn inter(&mut self) -> Result<GeneralTerm> {
        let mut t = self.comp()?;
        while self.peek() == Some(&Tok::Amp) {
            self.at += 1;
            t = GeneralTerm::Inter(Box::new(t), Box::new(self.comp()?));
        }
        Ok(t)
    }

    fn comp(&mut self) -> Result<GeneralTerm> {
        let mut t = self.prefix()?;
        while self.peek() == Some(&Tok::Semi) {
            self.at += 1;
            t = GeneralTerm::Comp(Box::new(t), Box::new(self.prefix()?));
        }
        Ok(t)
    }

    fn prefix(&mut self) -> Result<GeneralTerm> {
        if self.peek() == Some(&Tok::Minus) {
            let pos = self.pos();
            self.at += 1;
            let inner = self.prefix()?;
            return complement(inner).ok_or(Error::Syntax {
                pos,
                msg: "complement applies only to atoms, `1`, `0` and `T`".into(),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<GeneralTerm> {
        let mut t = self.primary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => t = GeneralTerm::Star(Box::new(t)),
                Some(Tok::Caret) => t = GeneralTerm::Conv(Box::new(t)),
                _ => return Ok(t),
            }
            self.at += 1;
        }
    }

    fn primary(&mut self) -> Result<GeneralTerm> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        let t = match tok {
            Tok::Atom(a) => {
                if let Some(s) = self.sigma {
                    if !s.contains(&a) {
                        return Err(Error::UnknownAtom(a));
                    }
                }
                GeneralTerm::Var(a)
            }
            Tok::One => GeneralTerm::Id,
            Tok::Zero => GeneralTerm::Bot,
            Tok::Top => GeneralTerm::Top,
            Tok::LParen => {
                self.at += 1;
                let t = self.union()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                t
            }
            other => return self.err(format!("unexpected token {other:?}")),
        };
        self.at += 1;
        Ok(t)
    }
}

fn complement(t: GeneralTerm) -> Option<GeneralTerm> {
    Some(match t {
        GeneralTerm::Var(a) => GeneralTerm::NegVar(a),
        GeneralTerm::NegVar(a) => GeneralTerm::Var(a),
        GeneralTerm::Id => GeneralTerm::NegId,
        GeneralTerm::NegId => GeneralTerm::Id,
        GeneralTerm::Bot => GeneralTerm::NegBot,
        GeneralTerm::NegBot => GeneralTerm::Bot,
        GeneralTerm::Top => GeneralTerm::NegTop,
        GeneralTerm::NegTop => GeneralTerm::Top,
        // (x^)⁻ = (x⁻)^ for atoms
        GeneralTerm::Conv(inner) => GeneralTerm::Conv(Box::new(complement(*inner)?)),
        _ => return None,
    })
}

fn parser<'a>(text: &str, sigma: Option<&'a Alphabet>) -> Result<Parser<'a>> {
    Ok(Parser { toks: tokenize(text)?, at: 0, end: text.len(), sigma })
}

/// Parses a general term. With `sigma = None` the alphabet is inferred.
pub fn parse(text: &str, sigma: Option<&Alphabet>) -> Result<GeneralTerm> {
    let mut p = parser(text, sigma)?;
    let t = p.union()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(t)
}

/// Parses a term in the restricted syntax.
pub fn parse_term(text: &str, sigma: Option<&Alphabet>) -> Result<Term> {
    parse(text, sigma)?.to_term()
}

/// Relation symbol between the two sides of a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryRel {
    Le,
    Eq,
}

impl QueryRel {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "<=" => Ok(QueryRel::Le),
            "=" => Ok(QueryRel::Eq),
            other => Err(Error::Syntax { pos: 0, msg: format!("expected `<=` or `=`, found `{other}`") }),
        }
    }
}

impl fmt::Display for QueryRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryRel::Le => "<=",
            QueryRel::Eq => "=",
        })
    }
}

/// Parses `lhs <= rhs` or `lhs = rhs` into general terms.
pub fn parse_equation(
    text: &str,
    sigma: Option<&Alphabet>,
) -> Result<(GeneralTerm, QueryRel, GeneralTerm)> {
    let mut p = parser(text, sigma)?;
    let lhs = p.union()?;
    let rel = match p.peek() {
        Some(Tok::Le) => QueryRel::Le,
        Some(Tok::Eq) => QueryRel::Eq,
        _ => return p.err("expected `<=` or `=`"),
    };
    p.at += 1;
    let rhs = p.union()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok((lhs, rel, rhs))
}
