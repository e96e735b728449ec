//! Finite relational models, term evaluation and the brute-force oracle.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::terms::{Alphabet, Term};

/// Hard limit on the number of vertices of a structure or graph.
pub const MAX_VERTICES: usize = 64;

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A binary relation on `[0, n)` stored as one bit row per element.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    n: usize,
    rows: SmallVec<[u64; 8]>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_VERTICES, "relation size {n} exceeds {MAX_VERTICES}");
        Relation { n, rows: SmallVec::from_elem(0, n) }
    }

    pub fn full(n: usize) -> Self {
        let mut r = Relation::empty(n);
        r.rows.iter_mut().for_each(|row| *row = mask(n));
        r
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Relation::empty(n);
        for i in 0..n {
            r.rows[i] = 1 << i;
        }
        r
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(n: usize, pairs: I) -> Self {
        let mut r = Relation::empty(n);
        for (i, j) in pairs {
            r.insert(i, j);
        }
        r
    }

    pub fn from_rows(n: usize, rows: &[u64]) -> Self {
        assert_eq!(rows.len(), n);
        let mut r = Relation::empty(n);
        for (i, row) in rows.iter().enumerate() {
            r.rows[i] = row & mask(n);
        }
        r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        assert!(i < self.n && j < self.n, "pair ({i},{j}) out of bounds for n = {}", self.n);
        let fresh = !self.contains(i, j);
        self.rows[i] |= 1 << j;
        fresh
    }

    pub fn remove(&mut self, i: usize, j: usize) {
        self.rows[i] &= !(1 << j);
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    /// Pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| bits(self.rows[i]).map(move |j| (i, j)))
    }

    pub fn union(&self, o: &Relation) -> Relation {
        self.zip(o, |a, b| a | b)
    }

    pub fn inter(&self, o: &Relation) -> Relation {
        self.zip(o, |a, b| a & b)
    }

    pub fn difference(&self, o: &Relation) -> Relation {
        self.zip(o, |a, b| a & !b)
    }

    fn zip(&self, o: &Relation, f: impl Fn(u64, u64) -> u64) -> Relation {
        debug_assert_eq!(self.n, o.n);
        let mut r = self.clone();
        for (x, y) in r.rows.iter_mut().zip(o.rows.iter()) {
            *x = f(*x, *y);
        }
        r
    }

    pub fn union_with(&mut self, o: &Relation) -> bool {
        let mut changed = false;
        for (x, y) in self.rows.iter_mut().zip(o.rows.iter()) {
            let nx = *x | y;
            changed |= nx != *x;
            *x = nx;
        }
        changed
    }

    pub fn complement(&self) -> Relation {
        let m = mask(self.n);
        let mut r = self.clone();
        r.rows.iter_mut().for_each(|x| *x = !*x & m);
        r
    }

    pub fn converse(&self) -> Relation {
        let mut r = Relation::empty(self.n);
        for (i, j) in self.pairs() {
            r.rows[j] |= 1 << i;
        }
        r
    }

    /// Relational composition `self ; o`.
    pub fn compose(&self, o: &Relation) -> Relation {
        let mut r = Relation::empty(self.n);
        for i in 0..self.n {
            let mut acc = 0;
            for j in bits(self.rows[i]) {
                acc |= o.rows[j];
            }
            r.rows[i] = acc;
        }
        r
    }

    /// Image of the vertex set `s` (a bit mask).
    pub fn image(&self, s: u64) -> u64 {
        bits(s).fold(0, |acc, i| acc | self.rows[i])
    }

    /// Reflexive-transitive closure by repeated squaring.
    pub fn star(&self) -> Relation {
        let mut r = self.union(&Relation::identity(self.n));
        loop {
            let sq = r.compose(&r);
            if sq == r {
                return r;
            }
            r = sq;
        }
    }

    pub fn is_subset(&self, o: &Relation) -> bool {
        self.rows.iter().zip(o.rows.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|i| self.contains(i, i))
    }

    pub fn is_equivalence(&self) -> bool {
        self.is_reflexive() && *self == self.converse() && self.compose(self).is_subset(self)
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

/// Indices of set bits in increasing order.
pub fn bits(mut x: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if x == 0 {
            None
        } else {
            let i = x.trailing_zeros() as usize;
            x &= x - 1;
            Some(i)
        }
    })
}

/// A finite structure: a vertex count and one base relation per atom.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Structure {
    sigma: Alphabet,
    n: usize,
    rels: Vec<Relation>,
}

impl Structure {
    pub fn new(sigma: Alphabet, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::Structure(format!("vertex count {n} outside 1..={MAX_VERTICES}")));
        }
        let rels = vec![Relation::empty(n); sigma.len()];
        Ok(Structure { sigma, n, rels })
    }

    pub fn sigma(&self) -> &Alphabet {
        &self.sigma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn relations(&self) -> &[Relation] {
        &self.rels
    }

    pub fn relation(&self, atom: &str) -> Option<&Relation> {
        self.sigma.index_of(atom).map(|i| &self.rels[i])
    }

    pub fn set_relation(&mut self, atom: &str, r: Relation) -> Result<()> {
        let i = self.sigma.index_of(atom).ok_or_else(|| Error::UnknownAtom(atom.into()))?;
        if r.n() != self.n {
            return Err(Error::Structure(format!("relation over {} vertices, expected {}", r.n(), self.n)));
        }
        self.rels[i] = r;
        Ok(())
    }

    pub fn relation_mut(&mut self, i: usize) -> &mut Relation {
        &mut self.rels[i]
    }

    /// The denotation of `t`.
    pub fn eval(&self, t: &Term) -> Result<Relation> {
        Ok(CompiledTerm::new(t, &self.sigma)?.eval(self))
    }

    /// Whether `t = s` holds on this structure.
    pub fn models_equation(&self, t: &Term, s: &Term) -> Result<bool> {
        Ok(self.eval(t)? == self.eval(s)?)
    }

    pub fn pointed(self, source: usize, target: usize) -> Result<PointedStructure> {
        PointedStructure::new(self, source, target)
    }
}

impl fmt::Debug for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Structure");
        d.field("n", &self.n);
        for (name, r) in self.sigma.names().iter().zip(&self.rels) {
            d.field(name, r);
        }
        d.finish()
    }
}

/// A structure with designated source and target vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointedStructure {
    pub structure: Structure,
    pub source: usize,
    pub target: usize,
}

impl PointedStructure {
    pub fn new(structure: Structure, source: usize, target: usize) -> Result<Self> {
        if source >= structure.n || target >= structure.n {
            return Err(Error::Structure(format!(
                "endpoints ({source},{target}) outside a {}-vertex structure",
                structure.n
            )));
        }
        Ok(PointedStructure { structure, source, target })
    }

    /// Whether `(source, target)` belongs to the denotation of `t`.
    pub fn holds(&self, t: &Term) -> Result<bool> {
        Ok(self.structure.eval(t)?.contains(self.source, self.target))
    }

    pub fn to_json(&self) -> StructureJson {
        let mut j = StructureJson::from(&self.structure);
        j.source = Some(self.source);
        j.target = Some(self.target);
        j
    }

    pub fn from_json(j: &StructureJson) -> Result<Self> {
        let s = Structure::try_from(j)?;
        let (Some(src), Some(tgt)) = (j.source, j.target) else {
            return Err(Error::Structure("missing source or target".into()));
        };
        PointedStructure::new(s, src, tgt)
    }
}

pub fn holds(p: &PointedStructure, t: &Term) -> Result<bool> {
    p.holds(t)
}

pub fn eval(m: &Structure, t: &Term) -> Result<Relation> {
    m.eval(t)
}

pub fn models_equation(m: &Structure, lhs: &Term, rhs: &Term) -> Result<bool> {
    m.models_equation(lhs, rhs)
}

/// Serialized form of a (pointed) structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureJson {
    pub n: usize,
    pub relations: BTreeMap<String, Vec<[usize; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<usize>,
}

impl From<&Structure> for StructureJson {
    fn from(s: &Structure) -> Self {
        let relations = s
            .sigma
            .names()
            .iter()
            .zip(&s.rels)
            .map(|(name, r)| (name.clone(), r.pairs().map(|(i, j)| [i, j]).collect()))
            .collect();
        StructureJson { n: s.n, relations, source: None, target: None }
    }
}

impl TryFrom<&StructureJson> for Structure {
    type Error = Error;

    fn try_from(j: &StructureJson) -> Result<Structure> {
        let sigma = Alphabet::new(j.relations.keys().cloned())?;
        let mut s = Structure::new(sigma, j.n)?;
        for (i, pairs) in j.relations.values().enumerate() {
            for &[a, b] in pairs {
                if a >= j.n || b >= j.n {
                    return Err(Error::Structure(format!("pair ({a},{b}) out of range")));
                }
                s.rels[i].insert(a, b);
            }
        }
        Ok(s)
    }
}

// ---------------------------------------------------------------------------
// Compiled evaluation

#[derive(Clone, Copy, Debug)]
enum Op {
    Lit { atom: usize, neg: bool, conv: bool },
    Id,
    NegId,
    Bot,
    Top,
    Comp,
    Union,
    Inter,
    Star,
}

/// A term flattened to postfix form with atoms resolved against an alphabet.
///
/// Evaluation only reads the literal relations `a` and `ā`, so the same code
/// serves full structures and partial interpretations in which `a` and `ā`
/// are independent lower or upper bounds.
#[derive(Clone, Debug)]
pub struct CompiledTerm {
    ops: Vec<Op>,
    /// largest operand stack the program needs
    depth: usize,
}

impl CompiledTerm {
    pub fn new(t: &Term, sigma: &Alphabet) -> Result<Self> {
        let mut ops = Vec::with_capacity(t.size());
        compile(t, sigma, &mut ops)?;
        let (mut cur, mut depth) = (0usize, 0usize);
        for op in &ops {
            match op {
                Op::Comp | Op::Union | Op::Inter => cur -= 1,
                Op::Star => {}
                _ => cur += 1,
            }
            depth = depth.max(cur);
        }
        Ok(CompiledTerm { ops, depth })
    }

    fn packable(n: usize) -> bool {
        n <= packed::MAX_N
    }

    pub fn eval(&self, m: &Structure) -> Relation {
        let neg: Vec<Relation> = m.rels.iter().map(Relation::complement).collect();
        self.eval_literals(m.n, &m.rels, &neg)
    }

    /// Evaluates with `pos[k]` and `neg[k]` standing for atom `k` and its
    /// complement.
    pub fn eval_literals(&self, n: usize, pos: &[Relation], neg: &[Relation]) -> Relation {
        if Self::packable(n) {
            let pack = |rs: &[Relation]| -> SmallVec<[u64; 4]> { rs.iter().map(packed::pack).collect() };
            let mut stack = vec![0; self.depth];
            return packed::unpack(n, self.eval_packed(n, &pack(pos), &pack(neg), &mut stack));
        }
        self.eval_rows(n, pos, neg)
    }

    fn eval_rows(&self, n: usize, pos: &[Relation], neg: &[Relation]) -> Relation {
        let mut stack: SmallVec<[Relation; 8]> = SmallVec::new();
        for op in &self.ops {
            let r = match *op {
                Op::Lit { atom, neg: ng, conv } => {
                    let base = if ng { &neg[atom] } else { &pos[atom] };
                    if conv {
                        base.converse()
                    } else {
                        base.clone()
                    }
                }
                Op::Id => Relation::identity(n),
                Op::NegId => Relation::identity(n).complement(),
                Op::Bot => Relation::empty(n),
                Op::Top => Relation::full(n),
                Op::Star => stack.pop().expect("operand").star(),
                Op::Comp | Op::Union | Op::Inter => {
                    let r = stack.pop().expect("operand");
                    let l = stack.pop().expect("operand");
                    match op {
                        Op::Comp => l.compose(&r),
                        Op::Union => l.union(&r),
                        _ => l.inter(&r),
                    }
                }
            };
            stack.push(r);
        }
        stack.pop().expect("nonempty program")
    }

    /// [`Self::eval_literals`] on packed relations of at most eight vertices,
    /// with `stack` holding at least `depth` operands.
    fn eval_packed(&self, n: usize, pos: &[u64], neg: &[u64], stack: &mut [u64]) -> u64 {
        let (id, full) = (packed::identity(n), packed::full(n));
        let mut sp = 0;
        for op in &self.ops {
            match *op {
                Op::Lit { atom, neg: ng, conv } => {
                    let base = if ng { neg[atom] } else { pos[atom] };
                    stack[sp] = if conv { packed::transpose(base) } else { base };
                    sp += 1;
                }
                Op::Id | Op::NegId | Op::Bot | Op::Top => {
                    stack[sp] = match op {
                        Op::Id => id,
                        Op::NegId => full & !id,
                        Op::Bot => 0,
                        _ => full,
                    };
                    sp += 1;
                }
                Op::Star => stack[sp - 1] = packed::star(n, stack[sp - 1]),
                Op::Comp | Op::Union | Op::Inter => {
                    sp -= 1;
                    let (l, r) = (stack[sp - 1], stack[sp]);
                    stack[sp - 1] = match op {
                        Op::Comp => packed::compose(n, l, r),
                        Op::Union => l | r,
                        _ => l & r,
                    };
                }
            }
        }
        stack[0]
    }
}

/// Relations on at most eight vertices as 8x8 bit matrices, row `i` in
/// byte `i`.
mod packed {
    use super::Relation;

    pub const MAX_N: usize = 8;
    const LOW_BITS: u64 = 0x0101_0101_0101_0101;

    pub fn full(n: usize) -> u64 {
        let row = (1u64 << n) - 1;
        (0..n).fold(0, |acc, i| acc | row << (8 * i))
    }

    pub fn identity(n: usize) -> u64 {
        (0..n).fold(0, |acc, i| acc | 1 << (9 * i))
    }

    pub fn pack(r: &Relation) -> u64 {
        r.rows().iter().enumerate().fold(0, |acc, (i, &row)| acc | row << (8 * i))
    }

    pub fn unpack(n: usize, x: u64) -> Relation {
        let mut r = Relation::empty(n);
        for i in 0..n {
            r.rows[i] = x >> (8 * i) & 0xff;
        }
        r
    }

    pub fn transpose(mut x: u64) -> u64 {
        let t = (x ^ (x >> 7)) & 0x00AA_00AA_00AA_00AA;
        x ^= t ^ (t << 7);
        let t = (x ^ (x >> 14)) & 0x0000_CCCC_0000_CCCC;
        x ^= t ^ (t << 14);
        let t = (x ^ (x >> 28)) & 0x0000_0000_F0F0_F0F0;
        x ^ t ^ (t << 28)
    }

    pub fn compose(n: usize, x: u64, y: u64) -> u64 {
        let mut r = 0;
        for k in 0..n {
            let rows_with_k = ((x >> k) & LOW_BITS) * 0xff;
            let row_k = ((y >> (8 * k)) & 0xff) * LOW_BITS;
            r |= rows_with_k & row_k;
        }
        r
    }

    pub fn star(n: usize, x: u64) -> u64 {
        let mut r = x | identity(n);
        loop {
            let sq = compose(n, r, r);
            if sq == r {
                return r;
            }
            r = sq;
        }
    }
}

fn compile(t: &Term, sigma: &Alphabet, ops: &mut Vec<Op>) -> Result<()> {
    let lit = |a: &str, neg: bool, conv: bool| -> Result<Op> {
        let atom = sigma.index_of(a).ok_or_else(|| Error::UnknownAtom(a.into()))?;
        Ok(Op::Lit { atom, neg, conv })
    };
    let op = match t {
        Term::Var(a) => lit(a, false, false)?,
        Term::NegVar(a) => lit(a, true, false)?,
        Term::ConvVar(a) => lit(a, false, true)?,
        Term::ConvNegVar(a) => lit(a, true, true)?,
        Term::Id => Op::Id,
        Term::NegId => Op::NegId,
        Term::Bot => Op::Bot,
        Term::Top => Op::Top,
        Term::Comp(l, r) | Term::Union(l, r) | Term::Inter(l, r) => {
            compile(l, sigma, ops)?;
            compile(r, sigma, ops)?;
            match t {
                Term::Comp(..) => Op::Comp,
                Term::Union(..) => Op::Union,
                _ => Op::Inter,
            }
        }
        Term::Star(s) => {
            compile(s, sigma, ops)?;
            Op::Star
        }
    };
    ops.push(op);
    Ok(())
}

// ---------------------------------------------------------------------------
// Enumeration and the oracle

/// Number of structures with exactly `n` vertices over `sigma`, as a bit width.
fn code_width(sigma: &Alphabet, n: usize) -> usize {
    sigma.len() * n * n
}

/// The structure whose concatenated relation bitstring (most significant bit
/// first) is `code`.
pub fn structure_from_code(sigma: &Alphabet, n: usize, code: u64) -> Structure {
    let width = code_width(sigma, n);
    let mut s = Structure::new(sigma.clone(), n).expect("valid size");
    for p in 0..width {
        if code >> (width - 1 - p) & 1 == 1 {
            let (k, r) = (p / (n * n), p % (n * n));
            s.rels[k].insert(r / n, r % n);
        }
    }
    s
}

/// An `n*n`-bit block of a structure code, most significant bit first, packed.
fn decode_block(n: usize, chunk: u64) -> u64 {
    let block = n * n;
    (0..n).fold(0, |acc, i| {
        let row = (chunk >> (block - n * (i + 1))) as u8 & ((1u16 << n) - 1) as u8;
        acc | u64::from(row.reverse_bits() >> (8 - n)) << (8 * i)
    })
}

/// The atom relations of [`structure_from_code`] and their complements, packed.
fn literals_from_code(m: usize, n: usize, code: u64) -> (Vec<u64>, Vec<u64>) {
    let block = n * n;
    let width = m * block;
    let full = packed::full(n);
    let pos: Vec<u64> = (0..m).map(|k| decode_block(n, code >> (width - (k + 1) * block))).collect();
    let neg = pos.iter().map(|&x| full & !x).collect();
    (pos, neg)
}

/// Every structure with `1..=max_n` vertices, by size and then
/// lexicographically over the concatenated relation bitstrings.
pub fn enumerate_structures(sigma: &Alphabet, max_n: usize) -> impl Iterator<Item = Structure> + '_ {
    (1..=max_n).flat_map(move |n| {
        let width = code_width(sigma, n);
        assert!(width < 64, "enumeration of {width}-bit structures is out of reach");
        (0..1u64 << width).map(move |code| structure_from_code(sigma, n, code))
    })
}

/// Which inclusion a counterexample violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// `lhs <= rhs` fails.
    #[serde(rename = "<=")]
    Le,
    /// `lhs >= rhs` fails.
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Le => "<=",
            Direction::Ge => ">=",
        })
    }
}

fn oracle_sigma(lhs: &Term, rhs: &Term) -> Alphabet {
    let atoms: Vec<String> = lhs.atoms().into_iter().chain(rhs.atoms()).collect();
    Alphabet::from_atoms(atoms.iter())
}

/// The first enumerated pointed structure violating `lhs = rhs`.
pub fn brute_force_refute(lhs: &Term, rhs: &Term, max_n: usize) -> Option<(PointedStructure, Direction)> {
    brute_force_refute_in(&oracle_sigma(lhs, rhs), lhs, rhs, max_n, true)
}

/// The first enumerated pointed structure violating `lhs <= rhs`.
pub fn brute_force_refute_le(lhs: &Term, rhs: &Term, max_n: usize) -> Option<PointedStructure> {
    brute_force_refute_in(&oracle_sigma(lhs, rhs), lhs, rhs, max_n, false).map(|(p, _)| p)
}

/// Oracle search over an explicit alphabet. With `both` set, violations of
/// `lhs >= rhs` count too.
pub fn brute_force_refute_in(
    sigma: &Alphabet,
    lhs: &Term,
    rhs: &Term,
    max_n: usize,
    both: bool,
) -> Option<(PointedStructure, Direction)> {
    let l = CompiledTerm::new(lhs, sigma).ok()?;
    let r = CompiledTerm::new(rhs, sigma).ok()?;
    for n in 1..=max_n {
        let width = code_width(sigma, n);
        assert!(width < 64, "enumeration of {width}-bit structures is out of reach");
        let m = sigma.len();
        let block = n * n;
        let full = packed::full(n);
        let first_pair = |x: u64| (x != 0).then(|| (x.trailing_zeros() as usize / 8, x.trailing_zeros() as usize % 8));
        // the last atom occupies the low bits: decode the others once per chunk
        let hit = (0..1u64 << (width - block)).into_par_iter().find_map_first(|hi| {
            let (mut pos, mut neg) = literals_from_code(m, n, hi << block);
            let (mut ls, mut rs) = (vec![0; l.depth], vec![0; r.depth]);
            for lo in 0..1u64 << block {
                pos[m - 1] = decode_block(n, lo);
                neg[m - 1] = full & !pos[m - 1];
                let (lv, rv) = (l.eval_packed(n, &pos, &neg, &mut ls), r.eval_packed(n, &pos, &neg, &mut rs));
                let first = first_pair(lv & !rv).map(|p| (p, Direction::Le));
                let second = if both { first_pair(rv & !lv).map(|p| (p, Direction::Ge)) } else { None };
                let pick = match (first, second) {
                    (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
                    (a, b) => a.or(b),
                };
                if let Some(((x, y), d)) = pick {
                    let structure = structure_from_code(sigma, n, hi << block | lo);
                    return Some((PointedStructure { structure, source: x, target: y }, d));
                }
            }
            None
        });
        if hit.is_some() {
            return hit;
        }
    }
    None
}
