//! Two-pointed labeled graphs: graph languages of terms, homomorphisms,
//! quotients, consistency and edge saturation.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::ops::ControlFlow;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfa::SignedLetter;
use crate::structures::{bits, PointedStructure, Relation, Structure, MAX_VERTICES};
use crate::terms::{Alphabet, Term};

/// Edge labels: atoms, complemented atoms, the identity and its complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Atom(usize),
    NegAtom(usize),
    Id,
    NegId,
}

impl Label {
    /// Dense index for an alphabet of `m` atoms.
    pub fn index(self, m: usize) -> usize {
        match self {
            Label::Atom(k) => 2 * k,
            Label::NegAtom(k) => 2 * k + 1,
            Label::Id => 2 * m,
            Label::NegId => 2 * m + 1,
        }
    }

    pub fn from_index(i: usize, m: usize) -> Label {
        match (i / 2, i % 2) {
            (k, 0) if k < m => Label::Atom(k),
            (k, _) if k < m => Label::NegAtom(k),
            (_, 0) => Label::Id,
            _ => Label::NegId,
        }
    }

    pub fn all(m: usize) -> impl Iterator<Item = Label> {
        (0..2 * m + 2).map(move |i| Label::from_index(i, m))
    }

    /// The uncomplemented labels: atoms and the identity.
    pub fn positives(m: usize) -> impl Iterator<Item = Label> {
        (0..m).map(Label::Atom).chain(std::iter::once(Label::Id))
    }

    pub fn bar(self) -> Label {
        match self {
            Label::Atom(k) => Label::NegAtom(k),
            Label::NegAtom(k) => Label::Atom(k),
            Label::Id => Label::NegId,
            Label::NegId => Label::Id,
        }
    }

    pub fn name(self, sigma: &Alphabet) -> String {
        match self {
            Label::Atom(k) => sigma.name(k).to_string(),
            Label::NegAtom(k) => format!("!{}", sigma.name(k)),
            Label::Id => "1".into(),
            Label::NegId => "!1".into(),
        }
    }

    pub fn parse(text: &str, sigma: &Alphabet) -> Result<Label> {
        match text {
            "1" => Ok(Label::Id),
            "!1" => Ok(Label::NegId),
            _ => {
                let (neg, name) = match text.strip_prefix('!') {
                    Some(rest) => (true, rest),
                    None => (false, text),
                };
                let k = sigma.index_of(name).ok_or_else(|| Error::UnknownAtom(name.into()))?;
                Ok(if neg { Label::NegAtom(k) } else { Label::Atom(k) })
            }
        }
    }
}

/// A finite two-pointed graph with edges labeled by [`Label`]s.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    sigma: Alphabet,
    n: usize,
    edges: Vec<Relation>,
    source: usize,
    target: usize,
}

impl Graph {
    pub fn new(sigma: &Alphabet, n: usize, source: usize, target: usize) -> Graph {
        assert!((1..=MAX_VERTICES).contains(&n), "graph size {n} outside 1..={MAX_VERTICES}");
        assert!(source < n && target < n, "endpoints out of range");
        let edges = vec![Relation::empty(n); 2 * sigma.len() + 2];
        Graph { sigma: sigma.clone(), n, edges, source, target }
    }

    /// One vertex that is both source and target.
    pub fn point(sigma: &Alphabet) -> Graph {
        Graph::new(sigma, 1, 0, 0)
    }

    /// Two vertices and no edges.
    pub fn top(sigma: &Alphabet) -> Graph {
        Graph::new(sigma, 2, 0, 1)
    }

    /// A single `l` edge from source to target.
    pub fn edge(sigma: &Alphabet, l: Label) -> Graph {
        let mut g = Graph::new(sigma, 2, 0, 1);
        g.add_edge(l, 0, 1);
        g
    }

    pub fn sigma(&self) -> &Alphabet {
        &self.sigma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn rel(&self, l: Label) -> &Relation {
        &self.edges[l.index(self.sigma.len())]
    }

    pub fn rel_mut(&mut self, l: Label) -> &mut Relation {
        let m = self.sigma.len();
        &mut self.edges[l.index(m)]
    }

    pub fn add_edge(&mut self, l: Label, u: usize, v: usize) -> bool {
        self.rel_mut(l).insert(u, v)
    }

    pub fn has_edge(&self, l: Label, u: usize, v: usize) -> bool {
        self.rel(l).contains(u, v)
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        Label::all(self.sigma.len())
    }

    /// All edges as `(label, from, to)`.
    pub fn edge_list(&self) -> Vec<(Label, usize, usize)> {
        self.labels().flat_map(|l| self.rel(l).pairs().map(move |(u, v)| (l, u, v))).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Relation::len).sum()
    }

    /// Same vertices and endpoints, and every edge of `other` present here.
    pub fn is_edge_extension_of(&self, other: &Graph) -> bool {
        self.n == other.n
            && self.source == other.source
            && self.target == other.target
            && self.sigma == other.sigma
            && self.edges.iter().zip(&other.edges).all(|(mine, theirs)| theirs.is_subset(mine))
    }

    pub fn with_endpoints(mut self, source: usize, target: usize) -> Graph {
        assert!(source < self.n && target < self.n);
        self.source = source;
        self.target = target;
        self
    }

    pub fn to_json(&self) -> GraphJson {
        let labels = self
            .labels()
            .map(|l| (l.name(&self.sigma), self.rel(l).pairs().map(|(u, v)| [u, v]).collect()))
            .collect();
        GraphJson { n: self.n, labels, source: self.source, target: self.target }
    }

    pub fn from_json(j: &GraphJson, sigma: &Alphabet) -> Result<Graph> {
        if j.n == 0 || j.n > MAX_VERTICES || j.source >= j.n || j.target >= j.n {
            return Err(Error::Structure("graph size or endpoints out of range".into()));
        }
        let mut g = Graph::new(sigma, j.n, j.source, j.target);
        for (name, pairs) in &j.labels {
            let l = Label::parse(name, sigma)?;
            for &[u, v] in pairs {
                if u >= j.n || v >= j.n {
                    return Err(Error::Structure(format!("edge ({u},{v}) out of range")));
                }
                g.add_edge(l, u, v);
            }
        }
        Ok(g)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph G {\n  rankdir=LR;\n");
        s.push_str("  src [shape=point]; tgt [shape=point];\n");
        for v in 0..self.n {
            let _ = writeln!(s, "  v{v} [label=\"{v}\", shape=circle];");
        }
        let _ = writeln!(s, "  src -> v{};", self.source);
        let _ = writeln!(s, "  v{} -> tgt;", self.target);
        for (l, u, v) in self.edge_list() {
            let _ = writeln!(s, "  v{u} -> v{v} [label=\"{}\"];", l.name(&self.sigma));
        }
        s.push_str("}\n");
        s
    }
}

/// Serialized graph: Structure-like, with every label listed explicitly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub labels: BTreeMap<String, Vec<[usize; 2]>>,
    pub source: usize,
    pub target: usize,
}

// ---------------------------------------------------------------------------
// Graph operations

/// Disjoint union of `g` and `h` with vertices glued by `merge`, which lists
/// pairs (vertex of g, vertex of h). Vertices are renumbered in order of first
/// occurrence, g's first.
fn glue(g: &Graph, h: &Graph, merge: &[(usize, usize)], source: usize, target: usize) -> Graph {
    let total = g.n + h.n;
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for &(x, y) in merge {
        let (a, b) = (find(&mut parent, x), find(&mut parent, g.n + y));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent[hi] = lo;
        }
    }
    let mut id = vec![usize::MAX; total];
    let mut map = vec![0; total];
    let mut next = 0;
    for v in 0..total {
        let r = find(&mut parent, v);
        if id[r] == usize::MAX {
            id[r] = next;
            next += 1;
        }
        map[v] = id[r];
    }
    let mut out = Graph::new(&g.sigma, next, map[source], map[target]);
    for l in g.labels() {
        for (u, v) in g.rel(l).pairs() {
            out.add_edge(l, map[u], map[v]);
        }
        for (u, v) in h.rel(l).pairs() {
            out.add_edge(l, map[g.n + u], map[g.n + v]);
        }
    }
    out
}

/// Glues the target of `g` to the source of `h`.
pub fn series(g: &Graph, h: &Graph) -> Graph {
    glue(g, h, &[(g.target, h.source)], g.source, g.n + h.target)
}

/// Glues the sources together and the targets together.
pub fn parallel(g: &Graph, h: &Graph) -> Graph {
    glue(g, h, &[(g.source, h.source), (g.target, h.target)], g.source, g.target)
}

/// Swaps source and target.
pub fn converse(g: &Graph) -> Graph {
    g.clone().with_endpoints(g.target, g.source)
}

fn atom_edge(sigma: &Alphabet, a: &str, neg: bool, conv: bool) -> Graph {
    let k = sigma.index_of(a).expect("atoms checked");
    let l = if neg { Label::NegAtom(k) } else { Label::Atom(k) };
    let g = Graph::edge(sigma, l);
    if conv {
        converse(&g)
    } else {
        g
    }
}

fn dedup(gs: Vec<Graph>) -> Vec<Graph> {
    let mut seen = HashSet::new();
    gs.into_iter().filter(|g| seen.insert(g.clone())).collect()
}

/// The members of the graph language of `t` with at most `budget` vertices.
///
/// For star-free `t` and `budget >= 1 + size(t)` this is the whole language.
pub fn glang(t: &Term, sigma: &Alphabet, budget: usize) -> Result<Vec<Graph>> {
    t.check_atoms(sigma)?;
    Ok(glang_rec(t, sigma, budget.min(MAX_VERTICES)))
}

/// The complete graph language of a star-free term.
pub fn glang_starfree(t: &Term, sigma: &Alphabet) -> Result<Vec<Graph>> {
    if t.fragment().has_star {
        return Err(Error::Fragment("graph language of a starred term is infinite".into()));
    }
    glang(t, sigma, 1 + t.size())
}

fn glang_rec(t: &Term, sigma: &Alphabet, budget: usize) -> Vec<Graph> {
    if budget == 0 {
        return Vec::new();
    }
    let small = |gs: Vec<Graph>| -> Vec<Graph> { dedup(gs.into_iter().filter(|g| g.n <= budget).collect()) };
    match t {
        Term::Var(a) => small(vec![atom_edge(sigma, a, false, false)]),
        Term::NegVar(a) => small(vec![atom_edge(sigma, a, true, false)]),
        Term::ConvVar(a) => small(vec![atom_edge(sigma, a, false, true)]),
        Term::ConvNegVar(a) => small(vec![atom_edge(sigma, a, true, true)]),
        Term::Id => vec![Graph::point(sigma)],
        Term::NegId => small(vec![Graph::edge(sigma, Label::NegId)]),
        Term::Bot => Vec::new(),
        Term::Top => small(vec![Graph::top(sigma)]),
        Term::Union(l, r) => {
            let mut v = glang_rec(l, sigma, budget);
            v.extend(glang_rec(r, sigma, budget));
            dedup(v)
        }
        Term::Comp(l, r) => {
            let (ls, rs) = (glang_rec(l, sigma, budget), glang_rec(r, sigma, budget));
            let mut v = Vec::new();
            for g in &ls {
                for h in &rs {
                    if g.n + h.n - 1 <= budget {
                        v.push(series(g, h));
                    }
                }
            }
            dedup(v)
        }
        Term::Inter(l, r) => {
            // gluing both endpoints can merge a side's source and target
            let b = (budget + 1).min(MAX_VERTICES);
            let (ls, rs) = (glang_rec(l, sigma, b), glang_rec(r, sigma, b));
            let mut v = Vec::new();
            for g in &ls {
                for h in &rs {
                    if g.n + h.n <= budget + 3 {
                        v.push(parallel(g, h));
                    }
                }
            }
            small(v)
        }
        Term::Star(s) => {
            let parts = glang_rec(s, sigma, budget);
            let mut seen: HashSet<Graph> = HashSet::new();
            let start = Graph::point(sigma);
            seen.insert(start.clone());
            let mut out = vec![start.clone()];
            let mut frontier = vec![start];
            while !frontier.is_empty() {
                let mut next = Vec::new();
                for g in &frontier {
                    for h in &parts {
                        if g.n + h.n - 1 <= budget {
                            let gh = series(g, h);
                            if seen.insert(gh.clone()) {
                                out.push(gh.clone());
                                next.push(gh);
                            }
                        }
                    }
                }
                frontier = next;
            }
            out
        }
    }
}

/// The path graph of a word: letter `i` links vertices `i-1` and `i`,
/// backwards for conversed letters.
pub fn graph_of_word(sigma: &Alphabet, w: &[SignedLetter]) -> Result<Graph> {
    let mut g = Graph::new(sigma, w.len() + 1, 0, w.len());
    for (i, x) in w.iter().enumerate() {
        match *x {
            SignedLetter::Id => return Err(Error::Letter("1 may not occur in a word".into())),
            SignedLetter::NegId => {
                g.add_edge(Label::NegId, i, i + 1);
            }
            SignedLetter::Atom { atom, neg, conv } => {
                if atom >= sigma.len() {
                    return Err(Error::Letter(format!("atom index {atom} outside the alphabet")));
                }
                let l = if neg { Label::NegAtom(atom) } else { Label::Atom(atom) };
                if conv {
                    g.add_edge(l, i + 1, i);
                } else {
                    g.add_edge(l, i, i + 1);
                }
            }
        }
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// Homomorphisms

/// A homomorphism from `from` to `to`, if one exists. Labels are matched by
/// name, so the two graphs may use different alphabets.
pub fn homomorphism_exists(from: &Graph, to: &Graph) -> Option<Vec<usize>> {
    let m = from.sigma.len();
    // (label index in `to`, other endpoint) per vertex, outgoing and incoming
    let mut out_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); from.n];
    let mut in_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); from.n];
    let mut dom = vec![full_mask(to.n); from.n];
    dom[from.source] &= 1 << to.source;
    dom[from.target] &= 1 << to.target;
    for l in Label::all(m) {
        let r = from.rel(l);
        if r.is_empty() {
            continue;
        }
        let tl = match l {
            Label::Atom(k) | Label::NegAtom(k) => {
                let tk = to.sigma.index_of(from.sigma.name(k))?;
                if matches!(l, Label::Atom(_)) {
                    Label::Atom(tk)
                } else {
                    Label::NegAtom(tk)
                }
            }
            other => other,
        };
        let ti = tl.index(to.sigma.len());
        for (u, v) in r.pairs() {
            if u == v {
                let loops = (0..to.n).filter(|&x| to.edges[ti].contains(x, x)).fold(0u64, |acc, x| acc | 1 << x);
                dom[u] &= loops;
            } else {
                out_adj[u].push((ti, v));
                in_adj[v].push((ti, u));
            }
        }
    }
    let conv: Vec<Relation> = to.edges.iter().map(Relation::converse).collect();
    let mut assigned = vec![false; from.n];
    let ctx = HomCtx { to, conv: &conv, out_adj: &out_adj, in_adj: &in_adj };
    if dom.contains(&0) {
        return None;
    }
    if ctx.search(&mut dom, &mut assigned) {
        Some(dom.iter().map(|d| d.trailing_zeros() as usize).collect())
    } else {
        None
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1 << n) - 1
    }
}

struct HomCtx<'a> {
    to: &'a Graph,
    conv: &'a [Relation],
    out_adj: &'a [Vec<(usize, usize)>],
    in_adj: &'a [Vec<(usize, usize)>],
}

impl HomCtx<'_> {
    fn search(&self, dom: &mut Vec<u64>, assigned: &mut Vec<bool>) -> bool {
        let Some(u) = (0..dom.len())
            .filter(|&u| !assigned[u])
            .min_by_key(|&u| dom[u].count_ones())
        else {
            return true;
        };
        assigned[u] = true;
        for v in bits(dom[u]) {
            let saved = dom.clone();
            dom[u] = 1 << v;
            let mut ok = true;
            for &(l, w) in &self.out_adj[u] {
                dom[w] &= self.to.edges[l].row(v);
                ok &= dom[w] != 0;
            }
            for &(l, w) in &self.in_adj[u] {
                dom[w] &= self.conv[l].row(v);
                ok &= dom[w] != 0;
            }
            if ok && self.search(dom, assigned) {
                return true;
            }
            *dom = saved;
        }
        assigned[u] = false;
        false
    }
}

/// Checks that `h` maps `from` into `to`.
pub fn is_homomorphism(h: &[usize], from: &Graph, to: &Graph) -> bool {
    h.len() == from.n
        && h.iter().all(|&x| x < to.n)
        && h[from.source] == to.source
        && h[from.target] == to.target
        && from.edge_list().into_iter().all(|(l, u, v)| {
            let name = l.name(&from.sigma);
            match Label::parse(&name, &to.sigma) {
                Ok(tl) => to.has_edge(tl, h[u], h[v]),
                Err(_) => false,
            }
        })
}

// ---------------------------------------------------------------------------
// Quotients, consistency and saturation

/// The least equivalence relation containing `r`.
pub fn equivalence_closure(r: &Relation) -> Relation {
    r.union(&r.converse()).star()
}

/// Class index per vertex for the equivalence closure of the identity edges,
/// classes numbered by first member.
pub fn identity_classes(g: &Graph) -> (Vec<usize>, usize) {
    let e = equivalence_closure(g.rel(Label::Id));
    let mut class = vec![usize::MAX; g.n];
    let mut k = 0;
    for v in 0..g.n {
        if class[v] == usize::MAX {
            for w in bits(e.row(v)) {
                class[w] = k;
            }
            k += 1;
        }
    }
    (class, k)
}

fn collapse(g: &Graph, class: &[usize], k: usize) -> Graph {
    let mut q = Graph::new(&g.sigma, k, class[g.source], class[g.target]);
    for l in g.labels() {
        for (u, v) in g.rel(l).pairs() {
            q.add_edge(l, class[u], class[v]);
        }
    }
    q
}

/// The quotient by the equivalence closure of the identity edges.
pub fn quotient(g: &Graph) -> Graph {
    let (class, k) = identity_classes(g);
    collapse(g, &class, k)
}

/// For every atom and the identity, the closure `E l E` of a label and that of
/// its complement are disjoint, where `E` is the equivalence closure of `1`.
pub fn is_consistent(g: &Graph) -> bool {
    let e = equivalence_closure(g.rel(Label::Id));
    Label::positives(g.sigma.len()).all(|l| {
        let p = e.compose(g.rel(l)).compose(&e);
        let q = e.compose(g.rel(l.bar())).compose(&e);
        p.inter(&q).is_empty()
    })
}

/// Consistent, every label or its complement covers each pair, and `1` is an
/// equivalence relation.
pub fn is_edge_saturated(g: &Graph) -> bool {
    let full = Relation::full(g.n);
    is_consistent(g)
        && Label::positives(g.sigma.len()).all(|l| g.rel(l).union(g.rel(l.bar())) == full)
        && g.rel(Label::Id).is_equivalence()
}

/// Reads a saturated quotient (identity edges exactly the diagonal) as a
/// pointed structure.
pub fn structure_of(g: &Graph) -> Result<PointedStructure> {
    if !is_edge_saturated(g) {
        return Err(Error::NotSaturated("labels are not consistent and total".into()));
    }
    if *g.rel(Label::Id) != Relation::identity(g.n) {
        return Err(Error::NotSaturated("identity edges are not the diagonal; take the quotient first".into()));
    }
    let mut s = Structure::new(g.sigma.clone(), g.n)?;
    for k in 0..g.sigma.len() {
        *s.relation_mut(k) = g.rel(Label::Atom(k)).clone();
    }
    s.pointed(g.source, g.target)
}

/// Partitions of the vertices coarsening the identity edges that keep the
/// graph consistent, as restricted growth strings.
fn for_each_partition(g: &Graph, f: &mut dyn FnMut(&[usize], usize) -> ControlFlow<()>) -> ControlFlow<()> {
    let m = g.sigma.len();
    let id = g.rel(Label::Id).union(&g.rel(Label::Id).converse());
    let nid = g.rel(Label::NegId).union(&g.rel(Label::NegId).converse());
    let pos: Vec<Vec<(usize, usize)>> = (0..m).map(|k| g.rel(Label::Atom(k)).pairs().collect()).collect();
    let neg: Vec<Vec<(usize, usize)>> = (0..m).map(|k| g.rel(Label::NegAtom(k)).pairs().collect()).collect();
    let mut class = vec![0usize; g.n];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        v: usize,
        used: usize,
        g: &Graph,
        id: &Relation,
        nid: &Relation,
        pos: &[Vec<(usize, usize)>],
        neg: &[Vec<(usize, usize)>],
        class: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize], usize) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if v == g.n {
            return f(class, used);
        }
        for c in 0..=used {
            class[v] = c;
            let ok = (0..=v).all(|u| {
                let same = class[u] == c;
                !(id.contains(u, v) && !same) && !(nid.contains(u, v) && same)
            }) && pos.iter().zip(neg).all(|(p, q)| {
                p.iter().filter(|&&(x, y)| x.max(y) <= v).all(|&(x, y)| {
                    !q.iter().any(|&(x2, y2)| {
                        x2.max(y2) <= v && (x.max(y) == v || x2.max(y2) == v) && class[x] == class[x2] && class[y] == class[y2]
                    })
                })
            });
            if ok {
                rec(v + 1, used.max(c + 1), g, id, nid, pos, neg, class, f)?;
            }
        }
        ControlFlow::Continue(())
    }
    rec(0, 0, g, &id, &nid, &pos, &neg, &mut class, f)
}

/// A quotient-level partial saturation: a partition of the vertices, the
/// forced labels between classes, and the class pairs still undecided.
struct Frame {
    class: Vec<usize>,
    lower: Graph,
    free: Vec<(usize, usize, usize)>,
}

fn frame(g: &Graph, class: &[usize], k: usize) -> Frame {
    let m = g.sigma.len();
    let mut lower = Graph::new(&g.sigma, k, class[g.source], class[g.target]);
    *lower.rel_mut(Label::Id) = Relation::identity(k);
    *lower.rel_mut(Label::NegId) = Relation::identity(k).complement();
    for kk in 0..m {
        for l in [Label::Atom(kk), Label::NegAtom(kk)] {
            for (u, v) in g.rel(l).pairs() {
                lower.add_edge(l, class[u], class[v]);
            }
        }
    }
    let mut free = Vec::new();
    for c in 0..k {
        for d in 0..k {
            for a in 0..m {
                if !lower.has_edge(Label::Atom(a), c, d) && !lower.has_edge(Label::NegAtom(a), c, d) {
                    free.push((a, c, d));
                }
            }
        }
    }
    Frame { class: class.to_vec(), lower, free }
}

fn lift(g: &Graph, class: &[usize], q: &Graph) -> Graph {
    let mut out = Graph::new(&g.sigma, g.n, g.source, g.target);
    for l in g.labels() {
        for u in 0..g.n {
            for v in 0..g.n {
                if q.has_edge(l, class[u], class[v]) {
                    out.add_edge(l, u, v);
                }
            }
        }
    }
    out
}

fn for_each_completion(q: &mut Graph, free: &[(usize, usize, usize)], f: &mut dyn FnMut(&Graph) -> ControlFlow<()>) -> ControlFlow<()> {
    let Some((&(a, c, d), rest)) = free.split_first() else {
        return f(q);
    };
    for l in [Label::Atom(a), Label::NegAtom(a)] {
        q.add_edge(l, c, d);
        let r = for_each_completion(q, rest, f);
        q.rel_mut(l).remove(c, d);
        r?;
    }
    ControlFlow::Continue(())
}

/// Visits every saturation of `g` (same vertex set) together with its
/// quotient. Inconsistent graphs have none.
pub fn for_each_saturation(g: &Graph, f: &mut dyn FnMut(&Graph, &Graph) -> ControlFlow<()>) {
    let _ = for_each_partition(g, &mut |class, k| {
        let mut fr = frame(g, class, k);
        let free = std::mem::take(&mut fr.free);
        for_each_completion(&mut fr.lower, &free, &mut |q| f(&lift(g, &fr.class, q), q))
    });
}

/// All saturations of `g` on its own vertex set.
pub fn saturations(g: &Graph) -> Vec<Graph> {
    let mut out = Vec::new();
    for_each_saturation(g, &mut |s, _| {
        out.push(s.clone());
        ControlFlow::Continue(())
    });
    out
}

/// The quotients of all saturations of `g`.
pub fn qs(g: &Graph) -> Vec<Graph> {
    let mut out = Vec::new();
    for_each_saturation(g, &mut |_, q| {
        out.push(q.clone());
        ControlFlow::Continue(())
    });
    dedup(out)
}

/// Outcome of inspecting a partial saturation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Judgement {
    /// Every completion satisfies the property; prune.
    Holds,
    /// Every completion violates the property.
    Fails,
    /// Undecided at this level.
    Open,
}

/// Searches the quotiented saturations of `g` for one violating a property.
///
/// `judge(lower, upper)` sees the current partial quotient twice: `lower`
/// holds only the decided labels, `upper` additionally carries both labels
/// on every undecided pair. It must be monotone, and conclusive whenever the
/// two coincide. The returned graph is a saturated quotient (undecided pairs
/// completed with the uncomplemented label).
pub fn search_qs(g: &Graph, judge: &mut dyn FnMut(&Graph, &Graph) -> Judgement) -> Option<Graph> {
    let mut found = None;
    let _ = for_each_partition(g, &mut |class, k| {
        let fr = frame(g, class, k);
        let mut upper = fr.lower.clone();
        for &(a, c, d) in &fr.free {
            upper.add_edge(Label::Atom(a), c, d);
            upper.add_edge(Label::NegAtom(a), c, d);
        }
        let mut lower = fr.lower;
        match refine(&mut lower, &mut upper, &fr.free, judge) {
            Some(q) => {
                found = Some(q);
                ControlFlow::Break(())
            }
            None => ControlFlow::Continue(()),
        }
    });
    found
}

fn refine(
    lower: &mut Graph,
    upper: &mut Graph,
    free: &[(usize, usize, usize)],
    judge: &mut dyn FnMut(&Graph, &Graph) -> Judgement,
) -> Option<Graph> {
    match judge(lower, upper) {
        Judgement::Holds => return None,
        Judgement::Fails => {
            let mut q = lower.clone();
            for &(a, c, d) in free {
                q.add_edge(Label::Atom(a), c, d);
            }
            return Some(q);
        }
        Judgement::Open => {}
    }
    let (&(a, c, d), rest) = free.split_first()?;
    for l in [Label::Atom(a), Label::NegAtom(a)] {
        lower.add_edge(l, c, d);
        upper.rel_mut(l.bar()).remove(c, d);
        let r = refine(lower, upper, rest, judge);
        lower.rel_mut(l).remove(c, d);
        upper.add_edge(l.bar(), c, d);
        if r.is_some() {
            return r;
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Isomorphism

/// Largest graph for which [`canonical_form`] is computed.
pub const CANONICAL_LIMIT: usize = 8;

/// A labeling-independent encoding (minimum over all vertex permutations),
/// or `None` for graphs above [`CANONICAL_LIMIT`] vertices.
pub fn canonical_form(g: &Graph) -> Option<Vec<u64>> {
    if g.n > CANONICAL_LIMIT {
        return None;
    }
    (0..g.n)
        .permutations(g.n)
        .map(|p| {
            let mut code = vec![g.n as u64, p[g.source] as u64, p[g.target] as u64];
            for r in &g.edges {
                let mut rows = vec![0u64; g.n];
                for (u, v) in r.pairs() {
                    rows[p[u]] |= 1 << p[v];
                }
                code.extend(rows);
            }
            code
        })
        .min()
}

/// Isomorphism test for graphs of at most [`CANONICAL_LIMIT`] vertices.
pub fn isomorphic(g: &Graph, h: &Graph) -> Option<bool> {
    if g.sigma != h.sigma {
        return Some(false);
    }
    Some(canonical_form(g)? == canonical_form(h)?)
}
