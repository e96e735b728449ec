//! Context-free grammars as relational hypotheses: derivability through the
//! canonical model, and the reduction of universality to an inequation.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::structures::{PointedStructure, Relation, Structure};
use crate::decide::Query;
use crate::terms::{replace_top, Alphabet, Term};

/// A grammar symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Terminal(String),
    Nonterminal(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub head: String,
    pub body: Vec<Symbol>,
}

/// A context-free grammar with lowercase terminals and uppercase nonterminals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfg {
    terminals: Vec<String>,
    nonterminals: Vec<String>,
    rules: Vec<Rule>,
    start: String,
}

fn split_symbols(text: &str, line: usize) -> Result<Vec<Symbol>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if !c.is_ascii_alphabetic() {
            return Err(Error::Grammar { line, msg: format!("unexpected character `{c}`") });
        }
        let mut name = c.to_string();
        while let Some(&d) = chars.peek() {
            if d.is_ascii_digit() || d == '_' {
                name.push(d);
                chars.next();
            } else {
                break;
            }
        }
        out.push(if c.is_ascii_uppercase() { Symbol::Nonterminal(name) } else { Symbol::Terminal(name) });
    }
    Ok(out)
}

impl Cfg {
    /// Parses `X -> alpha | beta` lines. Each symbol is one letter followed
    /// by digits or underscores; `eps` is the empty word; `#` starts a
    /// comment. The first head is the start symbol unless a `start: X` line
    /// says otherwise.
    pub fn parse(text: &str) -> Result<Cfg> {
        let mut rules = Vec::new();
        let mut start = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix("start:") {
                match split_symbols(rest, line)?.as_slice() {
                    [Symbol::Nonterminal(x)] => start = Some(x.clone()),
                    _ => return Err(Error::Grammar { line, msg: "start must name one nonterminal".into() }),
                }
                continue;
            }
            let Some((head, body)) = content.split_once("->") else {
                return Err(Error::Grammar { line, msg: "expected `X -> alpha`".into() });
            };
            let head = match split_symbols(head, line)?.as_slice() {
                [Symbol::Nonterminal(x)] => x.clone(),
                _ => return Err(Error::Grammar { line, msg: "rule head must be one nonterminal".into() }),
            };
            for alt in body.split('|') {
                let alt = alt.trim();
                let body = if alt == "eps" { Vec::new() } else { split_symbols(alt, line)? };
                if alt.is_empty() {
                    return Err(Error::Grammar { line, msg: "empty alternative; write `eps`".into() });
                }
                rules.push(Rule { head: head.clone(), body });
            }
        }
        let start = match start.or_else(|| rules.first().map(|r| r.head.clone())) {
            Some(s) => s,
            None => return Err(Error::Grammar { line: 0, msg: "no rules".into() }),
        };
        Cfg::new(rules, start)
    }

    pub fn new(rules: Vec<Rule>, start: String) -> Result<Cfg> {
        let mut terminals = BTreeSet::new();
        let mut nonterminals: Vec<String> = Vec::new();
        let note = |x: &String, nts: &mut Vec<String>| {
            if !nts.contains(x) {
                nts.push(x.clone());
            }
        };
        note(&start, &mut nonterminals);
        for r in &rules {
            note(&r.head, &mut nonterminals);
            for s in &r.body {
                match s {
                    Symbol::Terminal(a) => {
                        terminals.insert(a.clone());
                    }
                    Symbol::Nonterminal(x) => note(x, &mut nonterminals),
                }
            }
        }
        Ok(Cfg { terminals: terminals.into_iter().collect(), nonterminals, rules, start })
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    /// The atom naming a nonterminal: its lowercase form, with `_` appended
    /// until it differs from every terminal and earlier nonterminal atom.
    pub fn atom_of(&self, x: &str) -> String {
        let mut taken: BTreeSet<String> = self.terminals.iter().cloned().collect();
        for y in &self.nonterminals {
            let mut name = y.to_lowercase();
            while taken.contains(&name) {
                name.push('_');
            }
            if y == x {
                return name;
            }
            taken.insert(name);
        }
        panic!("unknown nonterminal {x}")
    }

    /// Terminals and nonterminal atoms.
    pub fn alphabet(&self) -> Alphabet {
        let names: Vec<String> =
            self.terminals.iter().cloned().chain(self.nonterminals.iter().map(|x| self.atom_of(x))).collect();
        Alphabet::from_atoms(names.iter())
    }

    /// The composition of a rule body's atoms; `1` for the empty body.
    pub fn body_term(&self, body: &[Symbol]) -> Term {
        Term::comp_all(body.iter().map(|s| match s {
            Symbol::Terminal(a) => Term::var(a),
            Symbol::Nonterminal(x) => Term::var(&self.atom_of(x)),
        }))
    }

    /// Splits a word written as terminal symbols; `eps` or blank is empty.
    pub fn parse_word(&self, text: &str) -> Result<Vec<String>> {
        if text.trim() == "eps" {
            return Ok(Vec::new());
        }
        split_symbols(text, 0)?
            .into_iter()
            .map(|s| match s {
                Symbol::Terminal(a) if self.terminals.contains(&a) => Ok(a),
                Symbol::Terminal(a) | Symbol::Nonterminal(a) => {
                    Err(Error::Grammar { line: 0, msg: format!("`{a}` is not a terminal") })
                }
            })
            .collect()
    }
}

impl fmt::Display for Cfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start: {}", self.start)?;
        for r in &self.rules {
            let body: Vec<&str> = r
                .body
                .iter()
                .map(|s| match s {
                    Symbol::Terminal(a) | Symbol::Nonterminal(a) => a.as_str(),
                })
                .collect();
            writeln!(f, "{} -> {}", r.head, if body.is_empty() { "eps".into() } else { body.join(" ") })?;
        }
        Ok(())
    }
}

/// The model on positions `0..=|w|` with terminal edges along `w` and the
/// least nonterminal relations closed under the rules, pointed at `(0, |w|)`.
pub fn canonical_model(c: &Cfg, w: &[String]) -> Result<PointedStructure> {
    let sigma = c.alphabet();
    let n = w.len() + 1;
    let mut m = Structure::new(sigma.clone(), n)?;
    for (i, a) in w.iter().enumerate() {
        let k = sigma.index_of(a).filter(|_| c.terminals.contains(a)).ok_or_else(|| Error::UnknownAtom(a.clone()))?;
        m.relation_mut(k).insert(i, i + 1);
    }
    let heads: Vec<usize> = c.rules.iter().map(|r| sigma.index_of(&c.atom_of(&r.head)).expect("declared")).collect();
    let bodies: Vec<Vec<usize>> = c
        .rules
        .iter()
        .map(|r| {
            r.body
                .iter()
                .map(|s| match s {
                    Symbol::Terminal(a) => sigma.index_of(a).expect("declared"),
                    Symbol::Nonterminal(x) => sigma.index_of(&c.atom_of(x)).expect("declared"),
                })
                .collect()
        })
        .collect();
    loop {
        let mut changed = false;
        for (h, body) in heads.iter().zip(&bodies) {
            let r = body.iter().fold(Relation::identity(n), |acc, &k| acc.compose(&m.relations()[k]));
            changed |= m.relation_mut(*h).union_with(&r);
        }
        if !changed {
            break;
        }
    }
    m.pointed(0, n - 1)
}

/// Whether `x` derives `w`, read off the canonical model.
pub fn derives(c: &Cfg, x: &str, w: &[String]) -> Result<bool> {
    if !c.nonterminals.iter().any(|y| y == x) {
        return Err(Error::Grammar { line: 0, msg: format!("unknown nonterminal `{x}`") });
    }
    let p = canonical_model(c, w)?;
    Ok(p.structure.relation(&c.atom_of(x)).expect("declared").contains(p.source, p.target))
}

/// A hypothesis `word <= var`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypothesis {
    pub word: Term,
    pub var: String,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.word, self.var)
    }
}

/// One hypothesis per rule.
pub fn build_gamma(c: &Cfg) -> Vec<Hypothesis> {
    c.rules.iter().map(|r| Hypothesis { word: c.body_term(&r.body), var: c.atom_of(&r.head) }).collect()
}

/// Folds hypotheses `u = 0` into the right-hand side as `rhs | T;u;T`.
pub fn hoare_encode(gamma: &[Term], lhs: Term, rhs: Term) -> Query {
    let rhs = gamma.iter().fold(rhs, |acc, u| Term::union(acc, Term::comp_all([Term::Top, u.clone(), Term::Top])));
    Query::le(lhs, rhs)
}

/// `(t1|...|tk)* <= s | (a|-a);(w1 & -x1);(a|-a) | ...` with `a` the first
/// terminal: valid exactly when the grammar generates every word.
pub fn reduce_universality(c: &Cfg) -> Result<Query> {
    let Some(first) = c.terminals.first() else {
        return Err(Error::Grammar { line: 0, msg: "grammar has no terminals".into() });
    };
    let lhs = Term::star(Term::union_all(c.terminals.iter().map(|a| Term::var(a))));
    let facts: Vec<Term> = build_gamma(c).into_iter().map(|h| Term::inter(h.word, Term::neg_var(&h.var))).collect();
    let q = hoare_encode(&facts, lhs, Term::var(&c.atom_of(&c.start)));
    let rhs = replace_top(&q.rhs, first)?;
    Query::le(q.lhs, rhs).with_sigma(c.alphabet())
}

/// The canonical model of `w` as a candidate refutation of the reduced
/// query, and whether it is expected to refute it (`w` not generated).
pub fn counterexample_from_word(c: &Cfg, w: &[String]) -> Result<(PointedStructure, bool)> {
    let p = canonical_model(c, w)?;
    let expected = !derives(c, &c.start, w)?;
    Ok((p, expected))
}
