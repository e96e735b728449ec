//! Reference implementations and generators shared by the integration tests.
//! Everything here is deliberately naive and independent of the library's
//! evaluation code.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use ecor::cfg::{Cfg, Rule, Symbol};
use ecor::graphs::{Graph, Label};
use ecor::nfa::{Nfa, SignedLetter};
use ecor::structures::{structure_from_code, Structure};
use ecor::terms::{Alphabet, GeneralTerm, Term};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn sigma(names: &[&str]) -> Alphabet {
    Alphabet::new(names.iter().copied()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Boolean matrices

pub type Mat = Vec<Vec<bool>>;

fn mat(n: usize, f: impl Fn(usize, usize) -> bool) -> Mat {
    (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
}

fn mcomp(x: &Mat, y: &Mat) -> Mat {
    let n = x.len();
    mat(n, |i, j| (0..n).any(|k| x[i][k] && y[k][j]))
}

fn mstar(x: &Mat) -> Mat {
    let n = x.len();
    let mut r = mat(n, |i, j| i == j || x[i][j]);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

pub fn atom_mat(m: &Structure, a: &str) -> Mat {
    let r = m.relation(a).expect("atom in structure");
    mat(m.n(), |i, j| r.contains(i, j))
}

pub fn relation_mat(r: &ecor::structures::Relation, n: usize) -> Mat {
    mat(n, |i, j| r.contains(i, j))
}

/// Direct recursive semantics of unrestricted terms.
pub fn eval_general(m: &Structure, t: &GeneralTerm) -> Mat {
    let n = m.n();
    match t {
        GeneralTerm::Var(a) => atom_mat(m, a),
        GeneralTerm::NegVar(a) => {
            let x = atom_mat(m, a);
            mat(n, |i, j| !x[i][j])
        }
        GeneralTerm::Id => mat(n, |i, j| i == j),
        GeneralTerm::NegId => mat(n, |i, j| i != j),
        GeneralTerm::Bot | GeneralTerm::NegTop => mat(n, |_, _| false),
        GeneralTerm::Top | GeneralTerm::NegBot => mat(n, |_, _| true),
        GeneralTerm::Comp(l, r) => mcomp(&eval_general(m, l), &eval_general(m, r)),
        GeneralTerm::Union(l, r) => {
            let (x, y) = (eval_general(m, l), eval_general(m, r));
            mat(n, |i, j| x[i][j] || y[i][j])
        }
        GeneralTerm::Inter(l, r) => {
            let (x, y) = (eval_general(m, l), eval_general(m, r));
            mat(n, |i, j| x[i][j] && y[i][j])
        }
        GeneralTerm::Star(s) => mstar(&eval_general(m, s)),
        GeneralTerm::Conv(s) => {
            let x = eval_general(m, s);
            mat(n, |i, j| x[j][i])
        }
    }
}

/// Direct recursive semantics of restricted terms.
pub fn eval_oracle(m: &Structure, t: &Term) -> Mat {
    let n = m.n();
    let bin = |l: &Term, r: &Term, f: fn(bool, bool) -> bool| {
        let (x, y) = (eval_oracle(m, l), eval_oracle(m, r));
        mat(n, |i, j| f(x[i][j], y[i][j]))
    };
    match t {
        Term::Var(a) => atom_mat(m, a),
        Term::NegVar(a) => {
            let x = atom_mat(m, a);
            mat(n, |i, j| !x[i][j])
        }
        Term::ConvVar(a) => {
            let x = atom_mat(m, a);
            mat(n, |i, j| x[j][i])
        }
        Term::ConvNegVar(a) => {
            let x = atom_mat(m, a);
            mat(n, |i, j| !x[j][i])
        }
        Term::Id => mat(n, |i, j| i == j),
        Term::NegId => mat(n, |i, j| i != j),
        Term::Bot => mat(n, |_, _| false),
        Term::Top => mat(n, |_, _| true),
        Term::Comp(l, r) => mcomp(&eval_oracle(m, l), &eval_oracle(m, r)),
        Term::Union(l, r) => bin(l, r, |a, b| a || b),
        Term::Inter(l, r) => bin(l, r, |a, b| a && b),
        Term::Star(s) => mstar(&eval_oracle(m, s)),
    }
}

// ---------------------------------------------------------------------------
// Structures

/// Every structure on at most `exhaustive_n` vertices, then `extra` seeded
/// random structures on `exhaustive_n + 1` vertices.
pub fn structure_grid(sigma: &Alphabet, exhaustive_n: usize, extra: usize, seed: u64) -> Vec<Structure> {
    let mut out: Vec<Structure> = ecor::structures::enumerate_structures(sigma, exhaustive_n).collect();
    let n = exhaustive_n + 1;
    let width = sigma.len() * n * n;
    let mut r = rng(seed);
    for _ in 0..extra {
        let code = r.gen::<u64>() & ((1u64 << width) - 1);
        out.push(structure_from_code(sigma, n, code));
    }
    out
}

pub fn random_structure(r: &mut impl Rng, sigma: &Alphabet, n: usize) -> Structure {
    let width = sigma.len() * n * n;
    structure_from_code(sigma, n, r.gen::<u64>() & ((1u64 << width) - 1))
}

// ---------------------------------------------------------------------------
// Graph denotation by brute force over all vertex maps

/// `{(f(source), f(target)) | f: G -> M a homomorphism}`.
pub fn graph_denotes(g: &Graph, m: &Structure) -> Mat {
    let (gn, mn) = (g.n(), m.n());
    let sig = g.sigma().clone();
    let rels: Vec<Mat> = sig.names().iter().map(|a| atom_mat(m, a)).collect();
    let edges = g.edge_list();
    let mut out = mat(mn, |_, _| false);
    let mut f = vec![0usize; gn];
    loop {
        let ok = edges.iter().all(|&(l, u, v)| {
            let (x, y) = (f[u], f[v]);
            match l {
                Label::Atom(k) => rels[k][x][y],
                Label::NegAtom(k) => !rels[k][x][y],
                Label::Id => x == y,
                Label::NegId => x != y,
            }
        });
        if ok {
            out[f[g.source()]][f[g.target()]] = true;
        }
        let mut i = 0;
        while i < gn {
            f[i] += 1;
            if f[i] < mn {
                break;
            }
            f[i] = 0;
            i += 1;
        }
        if i == gn {
            return out;
        }
    }
}

pub fn union_mats(n: usize, ms: impl IntoIterator<Item = Mat>) -> Mat {
    let mut out = mat(n, |_, _| false);
    for x in ms {
        for i in 0..n {
            for j in 0..n {
                out[i][j] |= x[i][j];
            }
        }
    }
    out
}

pub fn is_submat(x: &Mat, y: &Mat) -> bool {
    x.iter().zip(y).all(|(a, b)| a.iter().zip(b).all(|(&p, &q)| !p || q))
}

/// A random graph on `n` vertices where every edge is present with
/// probability `p`.
pub fn random_graph(r: &mut impl Rng, sigma: &Alphabet, n: usize, p: f64) -> Graph {
    let mut g = Graph::new(sigma, n, r.gen_range(0..n), r.gen_range(0..n));
    for l in Label::all(sigma.len()) {
        for u in 0..n {
            for v in 0..n {
                if r.gen_bool(p) {
                    g.add_edge(l, u, v);
                }
            }
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Word matching over the signed alphabet

fn letter_of_leaf(t: &Term, sigma: &Alphabet) -> Option<Vec<SignedLetter>> {
    let k = |a: &str| sigma.index_of(a).expect("atom in alphabet");
    Some(match t {
        Term::Var(a) => vec![SignedLetter::Atom { atom: k(a), neg: false, conv: false }],
        Term::NegVar(a) => vec![SignedLetter::Atom { atom: k(a), neg: true, conv: false }],
        Term::ConvVar(a) => vec![SignedLetter::Atom { atom: k(a), neg: false, conv: true }],
        Term::ConvNegVar(a) => vec![SignedLetter::Atom { atom: k(a), neg: true, conv: true }],
        Term::NegId => vec![SignedLetter::NegId],
        Term::Top => vec![SignedLetter::atom(0), SignedLetter::neg_atom(0)],
        _ => return None,
    })
}

/// End positions of matches of `t` on `w` starting at each position in `from`.
fn ends(t: &Term, w: &[SignedLetter], from: &BTreeSet<usize>, sigma: &Alphabet) -> BTreeSet<usize> {
    if let Some(letters) = letter_of_leaf(t, sigma) {
        return from.iter().filter(|&&i| i < w.len() && letters.contains(&w[i])).map(|i| i + 1).collect();
    }
    match t {
        Term::Id => from.clone(),
        Term::Bot => BTreeSet::new(),
        Term::Comp(l, r) => ends(r, w, &ends(l, w, from, sigma), sigma),
        Term::Union(l, r) => {
            let mut s = ends(l, w, from, sigma);
            s.extend(ends(r, w, from, sigma));
            s
        }
        Term::Star(s) => {
            let mut all = from.clone();
            let mut frontier = from.clone();
            while !frontier.is_empty() {
                let next: BTreeSet<usize> = ends(s, w, &frontier, sigma).difference(&all).copied().collect();
                all.extend(next.iter().copied());
                frontier = next;
            }
            all
        }
        Term::Inter(..) => panic!("no word language for intersections"),
        _ => unreachable!(),
    }
}

/// Whether the intersection-free `t`, read as a regular expression over
/// signed letters (with `T` as `a|-a` on the first atom), matches `w`.
pub fn regex_matches(t: &Term, w: &[SignedLetter], sigma: &Alphabet) -> bool {
    ends(t, w, &BTreeSet::from([0]), sigma).contains(&w.len())
}

/// All words over `letters` of length at most `max_len`.
pub fn words(letters: &[SignedLetter], max_len: usize) -> Vec<Vec<SignedLetter>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<SignedLetter>| {
                letters.iter().map(move |&x| {
                    let mut v = w.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// States reachable from `s` along paths labelled `1* x1 1* ... xn 1*`,
/// by breadth-first search over (state, position) pairs.
pub fn delta_word_oracle(a: &Nfa, s: &[usize], w: &[SignedLetter]) -> BTreeSet<usize> {
    let trans = a.transitions();
    let mut seen: HashSet<(usize, usize)> = s.iter().map(|&q| (q, 0)).collect();
    let mut todo: Vec<(usize, usize)> = seen.iter().copied().collect();
    while let Some((q, i)) = todo.pop() {
        for &(p, x, r) in &trans {
            if p != q {
                continue;
            }
            let next = if x == SignedLetter::Id {
                Some((r, i))
            } else if i < w.len() && w[i] == x {
                Some((r, i + 1))
            } else {
                None
            };
            if let Some(st) = next {
                if seen.insert(st) {
                    todo.push(st);
                }
            }
        }
    }
    seen.into_iter().filter(|&(_, i)| i == w.len()).map(|(q, _)| q).collect()
}

/// A word as a composition of its letters.
pub fn word_term(w: &[SignedLetter], sigma: &Alphabet) -> Term {
    Term::comp_all(w.iter().map(|&x| match x {
        SignedLetter::Atom { atom, neg, conv } => {
            let a = sigma.name(atom);
            match (neg, conv) {
                (false, false) => Term::var(a),
                (true, false) => Term::neg_var(a),
                (false, true) => Term::conv_var(a),
                (true, true) => Term::conv_neg_var(a),
            }
        }
        SignedLetter::Id => Term::Id,
        SignedLetter::NegId => Term::NegId,
    }))
}

// ---------------------------------------------------------------------------
// Random terms

#[derive(Clone, Copy, Debug)]
pub struct TermShape {
    pub star: bool,
    pub inter: bool,
    pub conv: bool,
    pub neg: bool,
    pub consts: bool,
}

impl TermShape {
    pub const STARFREE: TermShape = TermShape { star: false, inter: true, conv: true, neg: true, consts: true };
    pub const INTER_FREE: TermShape = TermShape { star: true, inter: false, conv: true, neg: true, consts: true };
    pub const ALL: TermShape = TermShape { star: true, inter: true, conv: true, neg: true, consts: true };
}

fn random_leaf(r: &mut impl Rng, atoms: &[&str], shape: TermShape) -> Term {
    loop {
        let a = *atoms.choose(r).unwrap();
        let t = match r.gen_range(0..8) {
            0 | 1 => Term::var(a),
            2 if shape.neg => Term::neg_var(a),
            3 if shape.conv => Term::conv_var(a),
            4 if shape.conv && shape.neg => Term::conv_neg_var(a),
            5 if shape.consts => Term::Id,
            6 if shape.consts && shape.neg => Term::NegId,
            7 if shape.consts => [Term::Bot, Term::Top][r.gen_range(0..2)].clone(),
            _ => continue,
        };
        return t;
    }
}

/// A random term with at most `size` nodes.
pub fn random_term(r: &mut impl Rng, atoms: &[&str], size: usize, shape: TermShape) -> Term {
    if size <= 1 || r.gen_bool(0.2) {
        return random_leaf(r, atoms, shape);
    }
    if shape.star && (size == 2 || r.gen_bool(0.2)) {
        return Term::star(random_term(r, atoms, size - 1, shape));
    }
    if size == 2 {
        return random_leaf(r, atoms, shape);
    }
    let left = r.gen_range(1..size - 1);
    let (l, rt) = (random_term(r, atoms, left, shape), random_term(r, atoms, size - 1 - left, shape));
    match r.gen_range(0..if shape.inter { 3 } else { 2 }) {
        0 => Term::comp(l, rt),
        1 => Term::union(l, rt),
        _ => Term::inter(l, rt),
    }
}

/// A random unrestricted term with at most `size` nodes.
pub fn random_general(r: &mut impl Rng, atoms: &[&str], size: usize) -> GeneralTerm {
    let b = Box::new;
    if size <= 1 || r.gen_bool(0.2) {
        let a = atoms.choose(r).unwrap().to_string();
        return match r.gen_range(0..9) {
            0 | 1 => GeneralTerm::Var(a),
            2 | 3 => GeneralTerm::NegVar(a),
            4 => GeneralTerm::Id,
            5 => GeneralTerm::NegId,
            6 => [GeneralTerm::Bot, GeneralTerm::Top][r.gen_range(0..2)].clone(),
            _ => [GeneralTerm::NegBot, GeneralTerm::NegTop][r.gen_range(0..2)].clone(),
        };
    }
    if size == 2 || r.gen_bool(0.3) {
        let s = b(random_general(r, atoms, size - 1));
        return if r.gen_bool(0.5) { GeneralTerm::Star(s) } else { GeneralTerm::Conv(s) };
    }
    let left = r.gen_range(1..size - 1);
    let (l, rt) = (b(random_general(r, atoms, left)), b(random_general(r, atoms, size - 1 - left)));
    match r.gen_range(0..3) {
        0 => GeneralTerm::Comp(l, rt),
        1 => GeneralTerm::Union(l, rt),
        _ => GeneralTerm::Inter(l, rt),
    }
}

/// A random automaton with the given number of states.
pub fn random_nfa(r: &mut impl Rng, sigma: &Alphabet, n: usize, p: f64) -> Nfa {
    let m = sigma.len();
    let mut edges = Vec::new();
    for x in SignedLetter::all(m) {
        for q in 0..n {
            for q2 in 0..n {
                if r.gen_bool(p) {
                    edges.push((q, x, q2));
                }
            }
        }
    }
    Nfa::new(sigma, n, 0, n - 1, edges).unwrap()
}

// ---------------------------------------------------------------------------
// CYK over a grammar converted to Chomsky normal form

pub struct Cnf {
    nonterminals: usize,
    start: usize,
    start_nullable: bool,
    terminal_rules: Vec<(usize, String)>,
    binary_rules: Vec<(usize, usize, usize)>,
    /// `unit_closure[y]` is every `x` with `x =>* y` by unit rules
    unit_closure: Vec<Vec<usize>>,
}

impl Cnf {
    pub fn from_cfg(c: &Cfg) -> Cnf {
        let mut ids: HashMap<String, usize> = HashMap::new();
        for x in c.nonterminals() {
            let k = ids.len();
            ids.insert(x.clone(), k);
        }
        let rules: Vec<Rule> = c.rules().to_vec();
        let mut nullable: HashSet<String> = HashSet::new();
        loop {
            let before = nullable.len();
            for r in &rules {
                if r.body.iter().all(|s| matches!(s, Symbol::Nonterminal(x) if nullable.contains(x))) {
                    nullable.insert(r.head.clone());
                }
            }
            if nullable.len() == before {
                break;
            }
        }
        // bodies with nullable occurrences dropped in every combination
        let mut expanded: HashSet<(String, Vec<Symbol>)> = HashSet::new();
        for r in &rules {
            let opt: Vec<usize> = (0..r.body.len())
                .filter(|&i| matches!(&r.body[i], Symbol::Nonterminal(x) if nullable.contains(x)))
                .collect();
            for mask in 0..1u32 << opt.len() {
                let body: Vec<Symbol> = r
                    .body
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| opt.iter().position(|o| o == i).is_none_or(|k| mask >> k & 1 == 0))
                    .map(|(_, s)| s.clone())
                    .collect();
                if !body.is_empty() {
                    expanded.insert((r.head.clone(), body));
                }
            }
        }
        let mut fresh = ids.len();
        let mut next = || {
            fresh += 1;
            fresh - 1
        };
        let mut term_nt: HashMap<String, usize> = HashMap::new();
        let mut terminal_rules = Vec::new();
        let mut binary_rules = Vec::new();
        let mut units = Vec::new();
        let mut expanded: Vec<_> = expanded.into_iter().collect();
        expanded.sort();
        for (head, body) in expanded {
            let h = ids[&head];
            if body.len() == 1 {
                match &body[0] {
                    Symbol::Terminal(a) => terminal_rules.push((h, a.clone())),
                    Symbol::Nonterminal(y) => units.push((h, ids[y])),
                }
                continue;
            }
            let syms: Vec<usize> = body
                .iter()
                .map(|s| match s {
                    Symbol::Nonterminal(y) => ids[y],
                    Symbol::Terminal(a) => *term_nt.entry(a.clone()).or_insert_with(|| {
                        let k = next();
                        terminal_rules.push((k, a.clone()));
                        k
                    }),
                })
                .collect();
            let mut cur = h;
            for i in 0..syms.len() - 2 {
                let k = next();
                binary_rules.push((cur, syms[i], k));
                cur = k;
            }
            binary_rules.push((cur, syms[syms.len() - 2], syms[syms.len() - 1]));
        }
        let total = fresh;
        let mut unit_closure: Vec<Vec<usize>> = (0..total).map(|y| vec![y]).collect();
        loop {
            let mut changed = false;
            for &(x, y) in &units {
                for z in 0..total {
                    if unit_closure[z].contains(&y) && !unit_closure[z].contains(&x) {
                        unit_closure[z].push(x);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let start = ids[c.start()];
        Cnf {
            nonterminals: total,
            start,
            start_nullable: nullable.contains(c.start()),
            terminal_rules,
            binary_rules,
            unit_closure,
        }
    }

    pub fn accepts(&self, w: &[String]) -> bool {
        if w.is_empty() {
            return self.start_nullable;
        }
        let n = w.len();
        let nt = self.nonterminals;
        let mut table = vec![vec![vec![false; nt]; n + 1]; n + 1];
        let close = |cell: &mut Vec<bool>, unit_closure: &Vec<Vec<usize>>| {
            let present: Vec<usize> = (0..nt).filter(|&y| cell[y]).collect();
            for y in present {
                for &x in &unit_closure[y] {
                    cell[x] = true;
                }
            }
        };
        for i in 0..n {
            for (x, a) in &self.terminal_rules {
                if *a == w[i] {
                    table[i][i + 1][*x] = true;
                }
            }
            close(&mut table[i][i + 1], &self.unit_closure);
        }
        for len in 2..=n {
            for i in 0..=n - len {
                let j = i + len;
                let mut cell = vec![false; nt];
                for k in i + 1..j {
                    for &(x, y, z) in &self.binary_rules {
                        if table[i][k][y] && table[k][j][z] {
                            cell[x] = true;
                        }
                    }
                }
                close(&mut cell, &self.unit_closure);
                table[i][j] = cell;
            }
        }
        table[0][n][self.start]
    }
}

/// A random grammar with at most `max_rules` rules over nonterminals `S`, `A`
/// and terminals `a`, `b`, bodies of length at most 3.
pub fn random_cfg(r: &mut impl Rng, max_rules: usize) -> Cfg {
    let k = r.gen_range(1..=max_rules);
    let mut rules = Vec::new();
    for i in 0..k {
        let head = if i == 0 || r.gen_bool(0.5) { "S" } else { "A" };
        let len = r.gen_range(0..=3);
        let body = (0..len)
            .map(|_| match r.gen_range(0..4) {
                0 => Symbol::Nonterminal("S".into()),
                1 => Symbol::Nonterminal("A".into()),
                2 => Symbol::Terminal("a".into()),
                _ => Symbol::Terminal("b".into()),
            })
            .collect();
        rules.push(Rule { head: head.into(), body });
    }
    Cfg::new(rules, "S".into()).unwrap()
}

/// Every word of length at most `max_len` over `terminals`.
pub fn terminal_words(terminals: &[String], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    let mut layer: Vec<Vec<String>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                terminals.iter().map(move |a| {
                    let mut v = w.clone();
                    v.push(a.clone());
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
