//! Epsilon-NFAs over signed, conversed letters, with `1` acting as epsilon.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::structures::{Relation, Structure};
use crate::terms::{Alphabet, Term};

/// Maximum number of automaton states.
pub const MAX_STATES: usize = 128;

/// A letter of the signed, conversed alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignedLetter {
    Atom { atom: usize, neg: bool, conv: bool },
    Id,
    NegId,
}

/// A word over signed letters; `1` never occurs in it.
pub type Word = Vec<SignedLetter>;

impl SignedLetter {
    pub fn atom(atom: usize) -> Self {
        SignedLetter::Atom { atom, neg: false, conv: false }
    }

    pub fn neg_atom(atom: usize) -> Self {
        SignedLetter::Atom { atom, neg: true, conv: false }
    }

    /// Dense index for an alphabet of `m` atoms.
    pub fn index(self, m: usize) -> usize {
        match self {
            SignedLetter::Atom { atom, neg, conv } => 4 * atom + 2 * neg as usize + conv as usize,
            SignedLetter::Id => 4 * m,
            SignedLetter::NegId => 4 * m + 1,
        }
    }

    pub fn from_index(i: usize, m: usize) -> Self {
        if i < 4 * m {
            SignedLetter::Atom { atom: i / 4, neg: i & 2 != 0, conv: i & 1 != 0 }
        } else if i == 4 * m {
            SignedLetter::Id
        } else {
            SignedLetter::NegId
        }
    }

    /// Number of letters for `m` atoms.
    pub fn count(m: usize) -> usize {
        4 * m + 2
    }

    pub fn all(m: usize) -> impl Iterator<Item = SignedLetter> {
        (0..Self::count(m)).map(move |i| Self::from_index(i, m))
    }

    /// Letters that may occur in words.
    pub fn word_letters(m: usize) -> impl Iterator<Item = SignedLetter> {
        Self::all(m).filter(|x| *x != SignedLetter::Id)
    }

    /// Converse dual: toggles converse on atom letters, fixes `1` and `!1`.
    pub fn breve(self) -> Self {
        match self {
            SignedLetter::Atom { atom, neg, conv } => SignedLetter::Atom { atom, neg, conv: !conv },
            other => other,
        }
    }

    /// Complement: toggles the sign.
    pub fn bar(self) -> Self {
        match self {
            SignedLetter::Atom { atom, neg, conv } => SignedLetter::Atom { atom, neg: !neg, conv },
            SignedLetter::Id => SignedLetter::NegId,
            SignedLetter::NegId => SignedLetter::Id,
        }
    }

    pub fn is_neg(self) -> bool {
        matches!(self, SignedLetter::Atom { neg: true, .. } | SignedLetter::NegId)
    }

    pub fn name(self, sigma: &Alphabet) -> String {
        match self {
            SignedLetter::Atom { atom, neg, conv } => {
                format!("{}{}{}", if neg { "!" } else { "" }, sigma.name(atom), if conv { "^" } else { "" })
            }
            SignedLetter::Id => "1".into(),
            SignedLetter::NegId => "!1".into(),
        }
    }

    pub fn parse(text: &str, sigma: &Alphabet) -> Result<Self> {
        match text {
            "1" => return Ok(SignedLetter::Id),
            "!1" => return Ok(SignedLetter::NegId),
            _ => {}
        }
        let (neg, rest) = match text.strip_prefix('!') {
            Some(r) => (true, r),
            None => (false, text),
        };
        let (conv, name) = match rest.strip_suffix('^') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let atom = sigma.index_of(name).ok_or_else(|| Error::Letter(text.into()))?;
        Ok(SignedLetter::Atom { atom, neg, conv })
    }

    /// The relation this letter denotes in `m`.
    pub fn eval(self, m: &Structure) -> Relation {
        match self {
            SignedLetter::Atom { atom, neg, conv } => {
                let r = &m.relations()[atom];
                let r = if neg { r.complement() } else { r.clone() };
                if conv {
                    r.converse()
                } else {
                    r
                }
            }
            SignedLetter::Id => Relation::identity(m.n()),
            SignedLetter::NegId => Relation::identity(m.n()).complement(),
        }
    }
}

/// Parses a whitespace- or comma-separated word; `eps` or blank is the empty word.
pub fn parse_word(text: &str, sigma: &Alphabet) -> Result<Word> {
    let toks: Vec<&str> = text.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
    if toks == ["eps"] {
        return Ok(Vec::new());
    }
    toks.into_iter()
        .map(|t| {
            let x = SignedLetter::parse(t, sigma)?;
            if x == SignedLetter::Id {
                return Err(Error::Letter("1 may not occur in a word".into()));
            }
            Ok(x)
        })
        .collect()
}

pub fn word_to_string(w: &[SignedLetter], sigma: &Alphabet) -> String {
    if w.is_empty() {
        return "eps".into();
    }
    w.iter().map(|x| x.name(sigma)).collect::<Vec<_>>().join(" ")
}

/// A set of automaton states.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet(pub u128);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    pub fn singleton(q: usize) -> Self {
        StateSet(1 << q)
    }

    pub fn full(n: usize) -> Self {
        if n == 128 {
            StateSet(u128::MAX)
        } else {
            StateSet((1 << n) - 1)
        }
    }

    pub fn from_states<I: IntoIterator<Item = usize>>(qs: I) -> Self {
        StateSet(qs.into_iter().fold(0, |acc, q| acc | 1 << q))
    }

    pub fn contains(self, q: usize) -> bool {
        self.0 >> q & 1 == 1
    }

    pub fn insert(&mut self, q: usize) {
        self.0 |= 1 << q;
    }

    pub fn union(self, o: StateSet) -> StateSet {
        StateSet(self.0 | o.0)
    }

    pub fn inter(self, o: StateSet) -> StateSet {
        StateSet(self.0 & o.0)
    }

    pub fn minus(self, o: StateSet) -> StateSet {
        StateSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: StateSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut x = self.0;
        std::iter::from_fn(move || {
            if x == 0 {
                None
            } else {
                let q = x.trailing_zeros() as usize;
                x &= x - 1;
                Some(q)
            }
        })
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// An epsilon-NFA with a single initial and a single final state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa {
    sigma: Alphabet,
    n: usize,
    /// successors per letter index, per state
    trans: Vec<Vec<StateSet>>,
    initial: usize,
    fin: usize,
    closure: Vec<StateSet>,
}

impl Nfa {
    pub fn new(
        sigma: &Alphabet,
        n: usize,
        initial: usize,
        fin: usize,
        edges: impl IntoIterator<Item = (usize, SignedLetter, usize)>,
    ) -> Result<Nfa> {
        if n == 0 || n > MAX_STATES {
            return Err(Error::TooLarge(format!("{n} states (limit {MAX_STATES})")));
        }
        if initial >= n || fin >= n {
            return Err(Error::Precondition("initial or final state out of range".into()));
        }
        let m = sigma.len();
        let mut trans = vec![vec![StateSet::EMPTY; n]; SignedLetter::count(m)];
        for (p, x, q) in edges {
            if p >= n || q >= n {
                return Err(Error::Precondition(format!("transition ({p},{q}) out of range")));
            }
            if let SignedLetter::Atom { atom, .. } = x {
                if atom >= m {
                    return Err(Error::Letter(format!("atom index {atom}")));
                }
            }
            trans[x.index(m)][p].insert(q);
        }
        let id = &trans[SignedLetter::Id.index(m)];
        let closure = (0..n)
            .map(|q| {
                let mut c = StateSet::singleton(q);
                let mut todo = vec![q];
                while let Some(p) = todo.pop() {
                    for r in id[p].minus(c).iter() {
                        c.insert(r);
                        todo.push(r);
                    }
                }
                c
            })
            .collect();
        Ok(Nfa { sigma: sigma.clone(), n, trans, initial, fin, closure })
    }

    pub fn sigma(&self) -> &Alphabet {
        &self.sigma
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn final_state(&self) -> usize {
        self.fin
    }

    pub fn all_states(&self) -> StateSet {
        StateSet::full(self.n)
    }

    pub fn transitions(&self) -> Vec<(usize, SignedLetter, usize)> {
        let m = self.sigma.len();
        let mut out = Vec::new();
        for p in 0..self.n {
            for (i, row) in self.trans.iter().enumerate() {
                for q in row[p].iter() {
                    out.push((p, SignedLetter::from_index(i, m), q));
                }
            }
        }
        out
    }

    /// Whether some transition carries `x`.
    pub fn uses_letter(&self, x: SignedLetter) -> bool {
        self.trans[x.index(self.sigma.len())].iter().any(|s| !s.is_empty())
    }

    /// Whether some transition carries a complemented atom letter.
    pub fn uses_neg_atom(&self) -> bool {
        SignedLetter::all(self.sigma.len())
            .any(|x| matches!(x, SignedLetter::Atom { neg: true, .. }) && self.uses_letter(x))
    }

    pub fn eps_closure(&self, s: StateSet) -> StateSet {
        s.iter().fold(StateSet::EMPTY, |acc, q| acc.union(self.closure[q]))
    }

    /// One `x` step without closures.
    pub fn step(&self, s: StateSet, x: SignedLetter) -> StateSet {
        let row = &self.trans[x.index(self.sigma.len())];
        s.iter().fold(StateSet::EMPTY, |acc, q| acc.union(row[q]))
    }

    /// `cl(step_x(cl(s)))`, and `cl(s)` for `1`.
    pub fn delta(&self, s: StateSet, x: SignedLetter) -> StateSet {
        let c = self.eps_closure(s);
        if x == SignedLetter::Id {
            c
        } else {
            self.eps_closure(self.step(c, x))
        }
    }

    pub fn delta_word(&self, s: StateSet, w: &[SignedLetter]) -> StateSet {
        w.iter().fold(self.eps_closure(s), |u, &x| self.delta(u, x))
    }

    pub fn accepts(&self, w: &[SignedLetter]) -> bool {
        if w.contains(&SignedLetter::Id) {
            return false;
        }
        self.delta_word(StateSet::singleton(self.initial), w).contains(self.fin)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph A {\n  rankdir=LR;\n  start [shape=point];\n");
        for q in 0..self.n {
            let shape = if q == self.fin { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  q{q} [shape={shape}];");
        }
        let _ = writeln!(s, "  start -> q{};", self.initial);
        for (p, x, q) in self.transitions() {
            let _ = writeln!(s, "  q{p} -> q{q} [label=\"{}\"];", x.name(&self.sigma));
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> NfaJson {
        NfaJson {
            states: self.n,
            initial: self.initial,
            r#final: self.fin,
            transitions: self
                .transitions()
                .into_iter()
                .map(|(p, x, q)| (p, x.name(&self.sigma), q))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NfaJson {
    pub states: usize,
    pub initial: usize,
    pub r#final: usize,
    pub transitions: Vec<(usize, String, usize)>,
}

/// Thompson automaton of an intersection-free term. `T` is read as `a|-a`
/// for the first atom `a` of `sigma`.
pub fn thompson(t: &Term, sigma: &Alphabet) -> Result<Nfa> {
    if t.fragment().has_inter {
        return Err(Error::Fragment("intersection has no automaton".into()));
    }
    t.check_atoms(sigma)?;
    let mut b = Builder { n: 0, edges: Vec::new(), sigma };
    let (s, f) = b.build(t)?;
    Nfa::new(sigma, b.n, s, f, b.edges)
}

struct Builder<'a> {
    n: usize,
    edges: Vec<(usize, SignedLetter, usize)>,
    sigma: &'a Alphabet,
}

impl Builder<'_> {
    fn fresh(&mut self) -> Result<usize> {
        if self.n == MAX_STATES {
            return Err(Error::TooLarge(format!("automaton exceeds {MAX_STATES} states")));
        }
        self.n += 1;
        Ok(self.n - 1)
    }

    fn letter(&mut self, x: SignedLetter) -> Result<(usize, usize)> {
        let (s, f) = (self.fresh()?, self.fresh()?);
        self.edges.push((s, x, f));
        Ok((s, f))
    }

    fn atom(&self, a: &str) -> usize {
        self.sigma.index_of(a).expect("atoms checked")
    }

    fn build(&mut self, t: &Term) -> Result<(usize, usize)> {
        use SignedLetter as L;
        match t {
            Term::Var(a) => self.letter(L::Atom { atom: self.atom(a), neg: false, conv: false }),
            Term::NegVar(a) => self.letter(L::Atom { atom: self.atom(a), neg: true, conv: false }),
            Term::ConvVar(a) => self.letter(L::Atom { atom: self.atom(a), neg: false, conv: true }),
            Term::ConvNegVar(a) => self.letter(L::Atom { atom: self.atom(a), neg: true, conv: true }),
            Term::Id => self.letter(L::Id),
            Term::NegId => self.letter(L::NegId),
            Term::Bot => Ok((self.fresh()?, self.fresh()?)),
            Term::Top => {
                let a = self.sigma.first().to_string();
                self.build(&Term::union(Term::var(&a), Term::neg_var(&a)))
            }
            Term::Union(l, r) => {
                let (s1, t1) = (self.fresh()?, self.fresh()?);
                let (s2, t2) = self.build(l)?;
                let (s3, t3) = self.build(r)?;
                self.edges.extend([(s1, L::Id, s2), (s1, L::Id, s3), (t2, L::Id, t1), (t3, L::Id, t1)]);
                Ok((s1, t1))
            }
            Term::Comp(l, r) => {
                let (s1, t1) = self.build(l)?;
                let (s2, t2) = self.build(r)?;
                self.edges.push((t1, L::Id, s2));
                Ok((s1, t2))
            }
            Term::Inter(..) => Err(Error::Fragment("intersection has no automaton".into())),
            Term::Star(s) => {
                let (s1, t1) = (self.fresh()?, self.fresh()?);
                let (c1, c2) = self.build(s)?;
                self.edges.extend([(s1, L::Id, c1), (c2, L::Id, t1), (c2, L::Id, c1), (s1, L::Id, t1)]);
                Ok((s1, t1))
            }
        }
    }
}

/// The union of the relations of accepted words of length at most `max_len`
/// in `m`; with `usize::MAX` this is the full relational semantics.
pub fn eval_nfa(m: &Structure, a: &Nfa, max_len: usize) -> Relation {
    let n = m.n();
    let letters: Vec<(SignedLetter, Relation)> =
        SignedLetter::word_letters(a.sigma.len()).map(|x| (x, x.eval(m))).collect();
    let close = |rs: &mut Vec<Relation>| {
        let snapshot = rs.clone();
        for (q, r) in snapshot.iter().enumerate() {
            if r.is_empty() {
                continue;
            }
            for p in a.closure[q].iter() {
                if p != q {
                    rs[p].union_with(r);
                }
            }
        }
    };
    let mut acc = vec![Relation::empty(n); a.n];
    acc[a.initial] = Relation::identity(n);
    close(&mut acc);
    let mut frontier = acc.clone();
    for _ in 0..max_len {
        let mut next = vec![Relation::empty(n); a.n];
        for (q, r) in frontier.iter().enumerate() {
            if r.is_empty() {
                continue;
            }
            for (x, rel) in &letters {
                let succ = a.step(StateSet::singleton(q), *x);
                if succ.is_empty() {
                    continue;
                }
                let img = r.compose(rel);
                for p in succ.iter() {
                    next[p].union_with(&img);
                }
            }
        }
        close(&mut next);
        let mut any = false;
        for (q, r) in next.iter_mut().enumerate() {
            *r = r.difference(&acc[q]);
            any |= acc[q].union_with(r);
        }
        if !any {
            break;
        }
        frontier = next;
    }
    acc[a.fin].clone()
}
