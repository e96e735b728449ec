//! Saturable paths: per-position automaton state sets over an identity
//! saturation of a word's path graph, and the searches that find them.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::{graph_of_word, is_consistent, quotient, structure_of, Graph, Label};
use crate::nfa::{Nfa, SignedLetter, StateSet, Word};
use crate::structures::{PointedStructure, Relation, StructureJson};

/// `δ_x(U) ⊆ U2` and `δ_x̆(U2) ⊆ U`.
pub fn con(a: &Nfa, x: SignedLetter, u: StateSet, u2: StateSet) -> bool {
    a.delta(u, x).is_subset(u2) && a.delta(u2, x.breve()).is_subset(u)
}

/// Uncomplemented, unconversed letters: the atoms and `1`.
pub fn positive_letters(m: usize) -> impl Iterator<Item = SignedLetter> {
    (0..m).map(SignedLetter::atom).chain(std::iter::once(SignedLetter::Id))
}

/// For every atom and `1`, `Con` holds for the letter or for its complement.
pub fn p_sat(a: &Nfa, u: StateSet, u2: StateSet) -> bool {
    positive_letters(a.sigma().len()).all(|x| con(a, x, u, u2) || con(a, x.bar(), u, u2))
}

fn label_letter(l: Label) -> SignedLetter {
    match l {
        Label::Atom(k) => SignedLetter::atom(k),
        Label::NegAtom(k) => SignedLetter::neg_atom(k),
        Label::Id => SignedLetter::Id,
        Label::NegId => SignedLetter::NegId,
    }
}

/// A word, an identity saturation of its path graph, and a state set per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaturablePath {
    pub word: Word,
    pub graph: Graph,
    pub u: Vec<StateSet>,
}

impl SaturablePath {
    /// Builds the path with identity edges given by a class index per position.
    pub fn from_classes(a: &Nfa, word: Word, classes: &[usize], u: Vec<StateSet>) -> Result<SaturablePath> {
        let mut graph = graph_of_word(a.sigma(), &word)?;
        let n = word.len() + 1;
        let mut id = Relation::empty(n);
        for i in 0..n {
            for j in 0..n {
                if classes[i] == classes[j] {
                    id.insert(i, j);
                }
            }
        }
        *graph.rel_mut(Label::NegId) = id.complement();
        *graph.rel_mut(Label::Id) = id;
        Ok(SaturablePath { word, graph, u })
    }

    /// Positions grouped by identity class.
    pub fn i_partition(&self) -> Vec<Vec<usize>> {
        let id = self.graph.rel(Label::Id);
        let mut seen = vec![false; self.graph.n()];
        let mut out = Vec::new();
        for i in 0..self.graph.n() {
            if !seen[i] {
                let class: Vec<usize> = (0..self.graph.n()).filter(|&j| id.contains(i, j)).collect();
                for &j in &class {
                    seen[j] = true;
                }
                out.push(class);
            }
        }
        out
    }

    /// The pointed structure read off the reconstructed saturation.
    pub fn structure(&self, a: &Nfa) -> Result<PointedStructure> {
        structure_of(&quotient(&saturate_from_path(self, a)?))
    }

    pub fn to_json(&self, a: &Nfa) -> Result<WitnessJson> {
        Ok(WitnessJson {
            word: self.word.iter().map(|x| x.name(a.sigma())).collect(),
            i_partition: self.i_partition(),
            u: self.u.iter().map(|s| s.iter().map(|q| format!("q{q}")).collect()).collect(),
            structure: self.structure(a)?.to_json(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessJson {
    pub word: Vec<String>,
    #[serde(rename = "I_partition")]
    pub i_partition: Vec<Vec<usize>>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<String>>,
    pub structure: StructureJson,
}

/// Whether the graph is an identity saturation of the word's path graph.
fn is_i_saturation_of_word(p: &SaturablePath, a: &Nfa) -> bool {
    let Ok(gw) = graph_of_word(a.sigma(), &p.word) else {
        return false;
    };
    let g = &p.graph;
    if g.sigma() != a.sigma() || g.n() != gw.n() || g.source() != gw.source() || g.target() != gw.target() {
        return false;
    }
    let m = a.sigma().len();
    let atoms_equal = (0..m).all(|k| {
        g.rel(Label::Atom(k)) == gw.rel(Label::Atom(k)) && g.rel(Label::NegAtom(k)) == gw.rel(Label::NegAtom(k))
    });
    atoms_equal
        && g.rel(Label::Id).is_equivalence()
        && *g.rel(Label::NegId) == g.rel(Label::Id).complement()
        && gw.rel(Label::NegId).is_subset(g.rel(Label::NegId))
        && is_consistent(g)
}

/// Checks the identity-saturation shape and the three path conditions.
pub fn is_saturable_path(p: &SaturablePath, a: &Nfa) -> bool {
    let g = &p.graph;
    if p.u.len() != g.n() || !is_i_saturation_of_word(p, a) {
        return false;
    }
    let st = p.u[g.source()].contains(a.initial()) && !p.u[g.target()].contains(a.final_state());
    let pcon = g.edge_list().into_iter().all(|(l, i, j)| con(a, label_letter(l), p.u[i], p.u[j]));
    let psat = p.u.iter().all(|&ui| p.u.iter().all(|&uj| p_sat(a, ui, uj)));
    st && pcon && psat
}

/// Completes a saturable path's graph to a saturation on which `Con` holds
/// for every edge.
pub fn saturate_from_path(p: &SaturablePath, a: &Nfa) -> Result<Graph> {
    if !is_saturable_path(p, a) {
        return Err(Error::Precondition("not a saturable path".into()));
    }
    let mut h = p.graph.clone();
    let n = h.n();
    let e = h.rel(Label::Id).clone();
    let m = a.sigma().len();
    for k in 0..m {
        for l in [Label::Atom(k), Label::NegAtom(k)] {
            let closed = e.compose(h.rel(l)).compose(&e);
            *h.rel_mut(l) = closed;
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                let (pos, neg) = (Label::Atom(k), Label::NegAtom(k));
                if h.has_edge(pos, i, j) || h.has_edge(neg, i, j) {
                    continue;
                }
                let l = if con(a, SignedLetter::atom(k), p.u[i], p.u[j]) { pos } else { neg };
                for i2 in crate::structures::bits(e.row(i)) {
                    for j2 in crate::structures::bits(e.row(j)) {
                        h.add_edge(l, i2, j2);
                    }
                }
            }
        }
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// The pointwise formula

/// A 4-tuple of states; `None` is the padding element.
pub type Tuple4 = [Option<usize>; 4];

/// `U × (A∖U) × U × (A∖U)`.
pub fn nu(a: &Nfa, u: StateSet) -> Vec<[usize; 4]> {
    let out_ = a.all_states().minus(u);
    let mut v = Vec::new();
    for t1 in u.iter() {
        for t2 in out_.iter() {
            for t3 in u.iter() {
                for t4 in out_.iter() {
                    v.push([t1, t2, t3, t4]);
                }
            }
        }
    }
    v
}

/// [`nu`] with every factor extended by the padding element.
pub fn nu_padded(a: &Nfa, u: StateSet) -> Vec<Tuple4> {
    let with_pad = |s: StateSet| -> Vec<Option<usize>> { std::iter::once(None).chain(s.iter().map(Some)).collect() };
    let (ins, outs) = (with_pad(u), with_pad(a.all_states().minus(u)));
    let mut v = Vec::new();
    for &t1 in &ins {
        for &t2 in &outs {
            for &t3 in &ins {
                for &t4 in &outs {
                    v.push([t1, t2, t3, t4]);
                }
            }
        }
    }
    v
}

/// `δ_x(t1) ⊆ U ∧ t2 ∉ δ_x̆(U)`, a padded component counting as true.
pub fn xi_half(a: &Nfa, x: SignedLetter, t1: Option<usize>, t2: Option<usize>, u: StateSet) -> bool {
    t1.is_none_or(|t| a.delta(StateSet::singleton(t), x).is_subset(u))
        && t2.is_none_or(|t| !a.delta(u, x.breve()).contains(t))
}

pub fn xi(a: &Nfa, t: Tuple4, x: SignedLetter, u: StateSet) -> bool {
    xi_half(a, x, t[0], t[1], u) || xi_half(a, x.bar(), t[2], t[3], u)
}

/// `ν*(U) ⊆ 𝒰` and every tuple of `𝒰` satisfies `ξ` at `U` for every atom and `1`.
pub fn phi(a: &Nfa, uset: &HashSet<Tuple4>, u: StateSet) -> bool {
    nu_padded(a, u).iter().all(|t| uset.contains(t))
        && uset.iter().all(|&t| positive_letters(a.sigma().len()).all(|x| xi(a, t, x, u)))
}

/// [`phi`] over unpadded tuples.
pub fn phi_literal(a: &Nfa, uset: &HashSet<[usize; 4]>, u: StateSet) -> bool {
    nu(a, u).iter().all(|t| uset.contains(t))
        && uset
            .iter()
            .all(|t| positive_letters(a.sigma().len()).all(|x| xi(a, t.map(Some), x, u)))
}

/// P-Sat over all ordered pairs of the sequence.
pub fn pairwise_psat(a: &Nfa, us: &[StateSet]) -> bool {
    us.iter().all(|&ui| us.iter().all(|&uj| p_sat(a, ui, uj)))
}

/// `φ(𝒰, Uᵢ)` for every `i`, with `𝒰` the union of the padded `ν(Uᵢ)`.
pub fn pointwise_psat(a: &Nfa, us: &[StateSet]) -> bool {
    let uset: HashSet<Tuple4> = us.iter().flat_map(|&u| nu_padded(a, u)).collect();
    us.iter().all(|&u| phi(a, &uset, u))
}

/// [`pointwise_psat`] with unpadded tuples.
pub fn pointwise_psat_literal(a: &Nfa, us: &[StateSet]) -> bool {
    let uset: HashSet<[usize; 4]> = us.iter().flat_map(|&u| nu(a, u)).collect();
    us.iter().all(|&u| phi_literal(a, &uset, u))
}

// ---------------------------------------------------------------------------
// Search machinery

/// Largest number of candidate state sets a search will consider.
pub const MAX_CANDIDATES: usize = 1 << 14;

/// Closed, self-compatible state sets of an automaton with cached steps and
/// pairwise compatibility.
struct Candidates<'a> {
    a: &'a Nfa,
    sets: Vec<StateSet>,
    /// δ per candidate per letter index
    delta: Vec<Vec<StateSet>>,
    /// pairwise P-Sat in both orders, as bit rows
    compat: Vec<Vec<u64>>,
    /// `Con_!1` in both orders
    apart: Vec<Vec<u64>>,
}

impl<'a> Candidates<'a> {
    fn new(a: &'a Nfa) -> Result<Self> {
        let closed = closed_sets(a)?;
        let m = a.sigma().len();
        let step = |u: StateSet| -> Vec<StateSet> { SignedLetter::all(m).map(|x| a.delta(u, x)).collect() };
        let con = |x: SignedLetter, u: StateSet, du: &[StateSet], v: StateSet, dv: &[StateSet]| {
            du[x.index(m)].is_subset(v) && dv[x.breve().index(m)].is_subset(u)
        };
        let psat = |u: StateSet, du: &[StateSet], v: StateSet, dv: &[StateSet]| {
            positive_letters(m).all(|x| con(x, u, du, v, dv) || con(x.bar(), u, du, v, dv))
        };
        let mut sets = Vec::new();
        let mut delta = Vec::new();
        for u in closed {
            let d = step(u);
            if psat(u, &d, u, &d) {
                sets.push(u);
                delta.push(d);
            }
        }
        let c = sets.len();
        let words = c.div_ceil(64);
        let mut compat = vec![vec![0u64; words]; c];
        let mut apart = vec![vec![0u64; words]; c];
        let nid = SignedLetter::NegId;
        for i in 0..c {
            for j in i..c {
                let (u, du, v, dv) = (sets[i], &delta[i], sets[j], &delta[j]);
                if psat(u, du, v, dv) && psat(v, dv, u, du) {
                    compat[i][j / 64] |= 1 << (j % 64);
                    compat[j][i / 64] |= 1 << (i % 64);
                }
                if con(nid, u, du, v, dv) && con(nid, v, dv, u, du) {
                    apart[i][j / 64] |= 1 << (j % 64);
                    apart[j][i / 64] |= 1 << (i % 64);
                }
            }
        }
        Ok(Candidates { a, sets, delta, compat, apart })
    }

    fn len(&self) -> usize {
        self.sets.len()
    }

    fn con(&self, x: SignedLetter, u: usize, v: usize) -> bool {
        let m = self.a.sigma().len();
        self.delta[u][x.index(m)].is_subset(self.sets[v]) && self.delta[v][x.breve().index(m)].is_subset(self.sets[u])
    }

    fn compatible(&self, u: usize, v: usize) -> bool {
        self.compat[u][v / 64] >> (v % 64) & 1 == 1
    }

    fn apart(&self, u: usize, v: usize) -> bool {
        self.apart[u][v / 64] >> (v % 64) & 1 == 1
    }
}

/// All state sets closed under `1`-transitions.
fn closed_sets(a: &Nfa) -> Result<Vec<StateSet>> {
    let n = a.n_states();
    let cl: Vec<StateSet> = (0..n).map(|q| a.eps_closure(StateSet::singleton(q))).collect();
    let mut out = Vec::new();
    let mut stack = vec![(0usize, StateSet::EMPTY, StateSet::EMPTY)];
    while let Some((i, cur, excl)) = stack.pop() {
        if i == n {
            out.push(cur);
            if out.len() > MAX_CANDIDATES {
                return Err(Error::TooLarge(format!("more than {MAX_CANDIDATES} closed state sets")));
            }
            continue;
        }
        if cur.contains(i) {
            stack.push((i + 1, cur, excl));
            continue;
        }
        if cl[i].inter(excl).is_empty() {
            stack.push((i + 1, cur.union(cl[i]), excl));
        }
        let mut ex = excl;
        ex.insert(i);
        stack.push((i + 1, cur, ex));
    }
    out.sort();
    Ok(out)
}

/// Outcome of a saturable-path search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathSearch {
    /// A saturable path for a word of the left automaton.
    Found(SaturablePath),
    /// The search space was exhausted without a witness.
    Empty,
    /// The search stopped early; words up to `depth` letters were covered.
    Inconclusive { depth: usize },
}

fn is_subseq(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

/// A word with its state sets, none, or the depth reached when the node limit hit.
type AsOutcome = std::result::Result<Option<(Word, Vec<StateSet>)>, usize>;

/// Breadth-first search of `[A1] ∩ [A^S(A2)]`: words of `a1` with state sets
/// for `a2` linked by `Con`, pairwise P-Sat, initial first and final absent
/// last. Returns the word and its state sets.
fn as_search(a1: &Nfa, a2: &Nfa, max_nodes: usize) -> Result<AsOutcome> {
    if a1.sigma() != a2.sigma() {
        return Err(Error::Alphabet("automata over different alphabets".into()));
    }
    let cands = Candidates::new(a2)?;
    let m = a1.sigma().len();
    let letters: Vec<SignedLetter> = SignedLetter::word_letters(m).filter(|&x| a1.uses_letter(x)).collect();

    struct Node {
        s: StateSet,
        u: u32,
        seen: Vec<u32>,
        parent: Option<(usize, SignedLetter)>,
        depth: usize,
    }
    let mut arena: Vec<Node> = Vec::new();
    let mut visited: HashMap<(StateSet, u32), Vec<Vec<u32>>> = HashMap::new();
    let mut queue = VecDeque::new();
    let admit = |s: StateSet, u: u32, seen: Vec<u32>, visited: &mut HashMap<(StateSet, u32), Vec<Vec<u32>>>| -> bool {
        let entry = visited.entry((s, u)).or_default();
        if entry.iter().any(|old| is_subseq(old, &seen)) {
            return false;
        }
        entry.retain(|old| !is_subseq(&seen, old));
        entry.push(seen);
        true
    };
    let s0 = a1.eps_closure(StateSet::singleton(a1.initial()));
    for u in 0..cands.len() {
        if cands.sets[u].contains(a2.initial()) {
            let seen = vec![u as u32];
            if admit(s0, u as u32, seen.clone(), &mut visited) {
                arena.push(Node { s: s0, u: u as u32, seen, parent: None, depth: 0 });
                queue.push_back(arena.len() - 1);
            }
        }
    }
    let mut depth_done = 0;
    while let Some(id) = queue.pop_front() {
        let (s, u, depth) = (arena[id].s, arena[id].u as usize, arena[id].depth);
        depth_done = depth_done.max(depth.saturating_sub(1));
        if s.contains(a1.final_state()) && !cands.sets[u].contains(a2.final_state()) {
            let mut word = Vec::new();
            let mut us = vec![cands.sets[u]];
            let mut cur = id;
            while let Some((p, x)) = arena[cur].parent {
                word.push(x);
                us.push(cands.sets[arena[p].u as usize]);
                cur = p;
            }
            word.reverse();
            us.reverse();
            return Ok(Ok(Some((word, us))));
        }
        if arena.len() > max_nodes {
            return Ok(Err(depth_done));
        }
        for &x in &letters {
            let s2 = a1.delta(s, x);
            if s2.is_empty() {
                continue;
            }
            for v in 0..cands.len() {
                if !cands.con(x, u, v) {
                    continue;
                }
                let v32 = v as u32;
                let seen = &arena[id].seen;
                let seen2 = match seen.binary_search(&v32) {
                    Ok(_) => seen.clone(),
                    Err(pos) => {
                        if !seen.iter().all(|&w| cands.compatible(w as usize, v)) {
                            continue;
                        }
                        let mut s = seen.clone();
                        s.insert(pos, v32);
                        s
                    }
                };
                if admit(s2, v32, seen2.clone(), &mut visited) {
                    arena.push(Node { s: s2, u: v32, seen: seen2, parent: Some((id, x)), depth: depth + 1 });
                    queue.push_back(arena.len() - 1);
                }
            }
        }
    }
    Ok(Ok(None))
}

/// The linear automaton accepting exactly `w`.
pub fn word_nfa(sigma: &crate::terms::Alphabet, w: &[SignedLetter]) -> Result<Nfa> {
    Nfa::new(sigma, w.len() + 1, 0, w.len(), w.iter().enumerate().map(|(i, &x)| (i, x, i + 1)))
}

/// Whether `w` is accepted by the pairwise form of `A^S(a)`; returns the
/// state sets per position.
pub fn as_accepts(a: &Nfa, w: &[SignedLetter]) -> Result<Option<Vec<StateSet>>> {
    if w.contains(&SignedLetter::Id) {
        return Ok(None);
    }
    let a1 = word_nfa(a.sigma(), w)?;
    match as_search(&a1, a, usize::MAX)? {
        Ok(found) => Ok(found.map(|(_, us)| us)),
        Err(_) => unreachable!("unbounded search"),
    }
}

/// Emptiness of `[a1] ∩ [A^S(a2)]` for the two sound fragments: `a2` without
/// `!1`, or `a1` without complemented atoms. A witness is returned as a
/// checked saturable path.
pub fn fragment_emptiness(a1: &Nfa, a2: &Nfa, max_nodes: usize) -> Result<PathSearch> {
    let no_negid = !a2.uses_letter(SignedLetter::NegId);
    let no_neg_atom = !a1.uses_neg_atom();
    if !no_negid && !no_neg_atom {
        return Err(Error::Fragment(
            "right automaton uses !1 and left automaton uses complemented atoms".into(),
        ));
    }
    let (word, us) = match as_search(a1, a2, max_nodes)? {
        Ok(Some(found)) => found,
        Ok(None) => return Ok(PathSearch::Empty),
        Err(depth) => return Ok(PathSearch::Inconclusive { depth }),
    };
    let n = us.len();
    let classes: Vec<usize> = if no_negid {
        (0..n).collect()
    } else {
        // positions are identified exactly when Con_!1 fails between them
        let mut classes = vec![usize::MAX; n];
        let mut k = 0;
        for i in 0..n {
            if classes[i] == usize::MAX {
                for j in i..n {
                    if classes[j] == usize::MAX && (i == j || !con(a2, SignedLetter::NegId, us[i], us[j])) {
                        classes[j] = k;
                    }
                }
                k += 1;
            }
        }
        classes
    };
    let p = SaturablePath::from_classes(a2, word, &classes, us)?;
    if !is_saturable_path(&p, a2) {
        return Err(Error::Internal("fragment search produced an invalid saturable path".into()));
    }
    Ok(PathSearch::Found(p))
}

/// Default word-length cap for [`full_exka_search`].
pub const DEFAULT_LEN_CAP: usize = 20;

/// `|a1| · 2^|a2|`, saturating.
pub fn completeness_bound(a1: &Nfa, a2: &Nfa) -> usize {
    a1.n_states().saturating_mul(1usize.checked_shl(a2.n_states() as u32).unwrap_or(usize::MAX))
}

struct FullSearch<'a> {
    a1: &'a Nfa,
    a2: &'a Nfa,
    cands: Candidates<'a>,
    letters: Vec<SignedLetter>,
    limit: usize,
    nodes: usize,
    max_nodes: usize,
    /// some branch reached the depth limit
    alive: bool,
    word: Word,
    classes: Vec<usize>,
    class_u: Vec<usize>,
    /// per atom, per class: rows of positive and negative class-pair labels
    pos: Vec<Vec<u64>>,
    neg: Vec<Vec<u64>>,
}

enum Step {
    Found,
    Continue,
    Budget,
}

impl FullSearch<'_> {
    fn dfs(&mut self, s: StateSet) -> Step {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Step::Budget;
        }
        let depth = self.word.len();
        if depth == self.limit {
            self.alive = true;
            let u = self.class_u[self.classes[depth]];
            if s.contains(self.a1.final_state()) && !self.cands.sets[u].contains(self.a2.final_state()) {
                return Step::Found;
            }
            return Step::Continue;
        }
        let prev_class = self.classes[depth];
        let prev_u = self.class_u[prev_class];
        for li in 0..self.letters.len() {
            let x = self.letters[li];
            let s2 = self.a1.delta(s, x);
            if s2.is_empty() {
                continue;
            }
            let k = self.class_u.len();
            // existing classes, then a fresh class per admissible state set
            let mut options: Vec<(usize, usize)> = (0..k).map(|c| (c, self.class_u[c])).collect();
            for v in 0..self.cands.len() {
                if (0..k).all(|c| {
                    let w = self.class_u[c];
                    self.cands.compatible(w, v) && self.cands.apart(w, v)
                }) {
                    options.push((k, v));
                }
            }
            for (c, v) in options {
                if x == SignedLetter::NegId && c == prev_class {
                    continue;
                }
                if !self.cands.con(x, prev_u, v) {
                    continue;
                }
                let mut undo = None;
                if let SignedLetter::Atom { atom, neg, conv } = x {
                    let (from, to) = if conv { (c, prev_class) } else { (prev_class, c) };
                    let other = if neg { &self.pos } else { &self.neg };
                    if other[atom].get(from).is_some_and(|r| r >> to & 1 == 1) {
                        continue;
                    }
                    let table = if neg { &mut self.neg } else { &mut self.pos };
                    if table[atom].len() <= from {
                        table[atom].resize(from + 1, 0);
                    }
                    let old = table[atom][from];
                    table[atom][from] |= 1 << to;
                    undo = Some((neg, atom, from, old));
                }
                let fresh = c == k;
                if fresh {
                    self.class_u.push(v);
                }
                self.word.push(x);
                self.classes.push(c);
                let r = self.dfs(s2);
                if !matches!(r, Step::Found) {
                    self.word.pop();
                    self.classes.pop();
                    if fresh {
                        self.class_u.pop();
                    }
                }
                if let Some((neg, atom, from, old)) = undo {
                    if !matches!(r, Step::Found) {
                        let table = if neg { &mut self.neg } else { &mut self.pos };
                        table[atom][from] = old;
                    }
                }
                match r {
                    Step::Continue => {}
                    other => return other,
                }
            }
        }
        Step::Continue
    }
}

/// Exhaustive search for a saturable path over words of `a1` shorter than
/// `len_cap + 1` letters, in order of length, covering every identity
/// saturation and every class-constant state-set assignment.
///
/// Returns `Empty` when every branch dies before the cap, or when the cap
/// reaches [`completeness_bound`].
pub fn full_exka_search(a1: &Nfa, a2: &Nfa, len_cap: usize, max_nodes: usize) -> Result<PathSearch> {
    if a1.sigma() != a2.sigma() {
        return Err(Error::Alphabet("automata over different alphabets".into()));
    }
    if len_cap > 63 {
        return Err(Error::TooLarge("length cap above 63".into()));
    }
    let m = a1.sigma().len();
    let cands = Candidates::new(a2)?;
    let letters: Vec<SignedLetter> = SignedLetter::word_letters(m).filter(|&x| a1.uses_letter(x)).collect();
    let roots: Vec<usize> = (0..cands.len()).filter(|&u| cands.sets[u].contains(a2.initial())).collect();
    let mut fs = FullSearch {
        a1,
        a2,
        cands,
        letters,
        limit: 0,
        nodes: 0,
        max_nodes,
        alive: false,
        word: Vec::new(),
        classes: Vec::new(),
        class_u: Vec::new(),
        pos: vec![Vec::new(); m],
        neg: vec![Vec::new(); m],
    };
    let s0 = a1.eps_closure(StateSet::singleton(a1.initial()));
    for limit in 0..=len_cap {
        fs.limit = limit;
        fs.alive = false;
        for &u in &roots {
            fs.word.clear();
            fs.classes = vec![0];
            fs.class_u = vec![u];
            fs.pos = vec![Vec::new(); m];
            fs.neg = vec![Vec::new(); m];
            match fs.dfs(s0) {
                Step::Found => {
                    let us: Vec<StateSet> = fs.classes.iter().map(|&c| fs.cands.sets[fs.class_u[c]]).collect();
                    let p = SaturablePath::from_classes(a2, fs.word.clone(), &fs.classes, us)?;
                    if !is_saturable_path(&p, a2) {
                        return Err(Error::Internal("exhaustive search produced an invalid saturable path".into()));
                    }
                    return Ok(PathSearch::Found(p));
                }
                Step::Budget => return Ok(PathSearch::Inconclusive { depth: limit.saturating_sub(1) }),
                Step::Continue => {}
            }
        }
        if !fs.alive {
            return Ok(PathSearch::Empty);
        }
    }
    if len_cap >= completeness_bound(a1, a2) {
        Ok(PathSearch::Empty)
    } else {
        Ok(PathSearch::Inconclusive { depth: len_cap })
    }
}
