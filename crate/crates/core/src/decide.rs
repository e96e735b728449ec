//! Validity of inequations and equations between terms, dispatched on the
//! syntactic fragment of the query.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::{
    glang, glang_starfree, homomorphism_exists, qs, saturations, search_qs, structure_of, Graph, Judgement, Label,
};
use crate::nfa::{thompson, word_to_string, Word};
use crate::satpath::{completeness_bound, fragment_emptiness, full_exka_search, PathSearch, DEFAULT_LEN_CAP};
use crate::structures::{CompiledTerm, Direction, PointedStructure, Relation, StructureJson};
use crate::terms::{converse_normal_form, parse, Alphabet, QueryRel, Term};

/// A decision procedure that can be forced instead of the fragment dispatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Procedure {
    /// Saturation search with model checking, for star-free queries.
    Starfree,
    /// Saturation search with homomorphisms from the right-hand graphs.
    Graphchar,
    /// Automaton emptiness for the two sound intersection-free fragments.
    Fragment,
    /// Bounded exhaustive saturable-path search, intersection-free.
    Full,
    /// Refutation search over growing graph budgets.
    Semi,
}

impl FromStr for Procedure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "starfree" => Ok(Procedure::Starfree),
            "graphchar" => Ok(Procedure::Graphchar),
            "fragment" => Ok(Procedure::Fragment),
            "full" => Ok(Procedure::Full),
            "semi" => Ok(Procedure::Semi),
            other => Err(Error::Precondition(format!("unknown procedure `{other}`"))),
        }
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Procedure::Starfree => "starfree",
            Procedure::Graphchar => "graphchar",
            Procedure::Fragment => "fragment",
            Procedure::Full => "full",
            Procedure::Semi => "semi",
        })
    }
}

/// Resource limits and overrides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    /// Vertex budget of the refutation search.
    pub budget: usize,
    /// Word-length cap of the exhaustive saturable-path search.
    pub len_cap: Option<usize>,
    /// Node limit of the automaton searches.
    pub max_nodes: usize,
    pub procedure: Option<Procedure>,
}

impl Default for Options {
    fn default() -> Self {
        Options { budget: 6, len_cap: None, max_nodes: 5_000_000, procedure: None }
    }
}

/// `lhs <= rhs` or `lhs = rhs` over an alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub lhs: Term,
    pub rhs: Term,
    pub rel: QueryRel,
    pub sigma: Alphabet,
    pub options: Options,
}

impl Query {
    /// A query over the atoms occurring in either side.
    pub fn new(lhs: Term, rel: QueryRel, rhs: Term) -> Query {
        let atoms: Vec<String> = lhs.atoms().into_iter().chain(rhs.atoms()).collect();
        let sigma = Alphabet::from_atoms(atoms.iter());
        Query { lhs, rhs, rel, sigma, options: Options::default() }
    }

    pub fn le(lhs: Term, rhs: Term) -> Query {
        Query::new(lhs, QueryRel::Le, rhs)
    }

    pub fn eq(lhs: Term, rhs: Term) -> Query {
        Query::new(lhs, QueryRel::Eq, rhs)
    }

    /// Parses both sides, pushing converse to the atoms.
    pub fn parse(lhs: &str, rel: &str, rhs: &str, sigma: Option<&Alphabet>) -> Result<Query> {
        let l = converse_normal_form(&parse(lhs, sigma)?);
        let r = converse_normal_form(&parse(rhs, sigma)?);
        let mut q = Query::new(l, QueryRel::parse(rel)?, r);
        if let Some(s) = sigma {
            q = q.with_sigma(s.clone())?;
        }
        Ok(q)
    }

    pub fn with_sigma(mut self, sigma: Alphabet) -> Result<Query> {
        self.lhs.check_atoms(&sigma)?;
        self.rhs.check_atoms(&sigma)?;
        self.sigma = sigma;
        Ok(self)
    }

    pub fn with_options(mut self, options: Options) -> Query {
        self.options = options;
        self
    }

    /// The `<=` query in the given direction.
    fn directed(&self, d: Direction) -> Query {
        let (lhs, rhs) = match d {
            Direction::Le => (self.lhs.clone(), self.rhs.clone()),
            Direction::Ge => (self.rhs.clone(), self.lhs.clone()),
        };
        Query { lhs, rhs, rel: QueryRel::Le, sigma: self.sigma.clone(), options: self.options.clone() }
    }

    fn directions(&self) -> &'static [Direction] {
        match self.rel {
            QueryRel::Le => &[Direction::Le],
            QueryRel::Eq => &[Direction::Le, Direction::Ge],
        }
    }
}

/// Result of deciding a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    /// `counterexample` satisfies one side and not the other at its points.
    Refuted { counterexample: PointedStructure, direction: Direction, word: Option<Word> },
    /// A resource bound was reached without a conclusion.
    Unknown { bound: usize },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }

    pub fn to_json(&self) -> VerdictJson {
        match self {
            Verdict::Valid => VerdictJson { verdict: "valid", direction: None, counterexample: None, bound: None },
            Verdict::Refuted { counterexample, direction, .. } => VerdictJson {
                verdict: "refuted",
                direction: Some(*direction),
                counterexample: Some(counterexample.to_json()),
                bound: None,
            },
            Verdict::Unknown { bound } => {
                VerdictJson { verdict: "unknown", direction: None, counterexample: None, bound: Some(*bound) }
            }
        }
    }

    /// A short human-readable report.
    pub fn describe(&self, sigma: &Alphabet) -> String {
        match self {
            Verdict::Valid => "valid".into(),
            Verdict::Refuted { counterexample, direction, word } => {
                let mut s = format!("refuted ({direction})\n");
                if let Some(w) = word {
                    s.push_str(&format!("word: {}\n", word_to_string(w, sigma)));
                }
                s.push_str(&serde_json::to_string(&counterexample.to_json()).expect("serializable"));
                s
            }
            Verdict::Unknown { bound } => format!("unknown (bound {bound})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerdictJson {
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<StructureJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<usize>,
}

/// Outcome of a single inclusion.
enum Inclusion {
    Holds,
    Fails(PointedStructure, Option<Word>),
    Open(usize),
}

/// Runs `le` on each direction of the query and combines the outcomes.
fn per_direction(q: &Query, le: impl Fn(&Query) -> Result<Inclusion>) -> Result<Verdict> {
    let mut open = None;
    for &d in q.directions() {
        let dq = q.directed(d);
        match le(&dq)? {
            Inclusion::Holds => {}
            Inclusion::Fails(p, word) => {
                verify_refutation(&dq, &p)?;
                return Ok(Verdict::Refuted { counterexample: p, direction: d, word });
            }
            Inclusion::Open(b) => open = Some(open.map_or(b, |o: usize| o.max(b))),
        }
    }
    Ok(match open {
        Some(bound) => Verdict::Unknown { bound },
        None => Verdict::Valid,
    })
}

/// Re-checks that `p` satisfies `lhs` and violates `rhs`.
fn verify_refutation(q: &Query, p: &PointedStructure) -> Result<()> {
    if p.holds(&q.lhs)? && !p.holds(&q.rhs)? {
        Ok(())
    } else {
        Err(Error::Internal(format!("counterexample does not refute {} <= {}", q.lhs, q.rhs)))
    }
}

fn require_star_free(q: &Query) -> Result<()> {
    if q.lhs.fragment().has_star || q.rhs.fragment().has_star {
        return Err(Error::Fragment("procedure requires star-free terms".into()));
    }
    Ok(())
}

fn require_inter_free(q: &Query) -> Result<()> {
    if q.lhs.fragment().has_inter || q.rhs.fragment().has_inter {
        return Err(Error::Fragment("procedure requires intersection-free terms".into()));
    }
    Ok(())
}

fn literal_relations(g: &Graph) -> (Vec<Relation>, Vec<Relation>) {
    let m = g.sigma().len();
    let pos = (0..m).map(|k| g.rel(Label::Atom(k)).clone()).collect();
    let neg = (0..m).map(|k| g.rel(Label::NegAtom(k)).clone()).collect();
    (pos, neg)
}

/// Judges partial quotients by evaluating `rhs` on the decided literals and
/// on the decided-or-open literals.
fn model_check_judge(rhs: &CompiledTerm) -> impl FnMut(&Graph, &Graph) -> Judgement + '_ {
    move |lower, upper| {
        let n = lower.n();
        let (s, t) = (lower.source(), lower.target());
        let (lp, ln) = literal_relations(lower);
        if rhs.eval_literals(n, &lp, &ln).contains(s, t) {
            return Judgement::Holds;
        }
        let (up, un) = literal_relations(upper);
        if rhs.eval_literals(n, &up, &un).contains(s, t) {
            Judgement::Open
        } else {
            Judgement::Fails
        }
    }
}

/// Judges partial quotients by homomorphisms from the right-hand graphs.
fn homomorphism_judge(rhs: &[Graph]) -> impl FnMut(&Graph, &Graph) -> Judgement + '_ {
    move |lower, upper| {
        if rhs.iter().any(|h| homomorphism_exists(h, lower).is_some()) {
            Judgement::Holds
        } else if rhs.iter().any(|h| homomorphism_exists(h, upper).is_some()) {
            Judgement::Open
        } else {
            Judgement::Fails
        }
    }
}

/// The first left-hand graph (in language order) with a violating saturation.
fn first_violation<J, F>(graphs: &[Graph], make_judge: F) -> Result<Option<PointedStructure>>
where
    F: Fn() -> J + Sync,
    J: FnMut(&Graph, &Graph) -> Judgement,
{
    let hit = graphs.par_iter().map(|h| search_qs(h, &mut make_judge())).find_map_first(|q| q);
    hit.map(|q| structure_of(&q)).transpose()
}

fn starfree_le(q: &Query) -> Result<Inclusion> {
    require_star_free(q)?;
    let lhs = glang_starfree(&q.lhs, &q.sigma)?;
    let rhs = CompiledTerm::new(&q.rhs, &q.sigma)?;
    Ok(match first_violation(&lhs, || model_check_judge(&rhs))? {
        Some(p) => Inclusion::Fails(p, None),
        None => Inclusion::Holds,
    })
}

fn graphchar_le(q: &Query) -> Result<Inclusion> {
    require_star_free(q)?;
    let lhs = glang_starfree(&q.lhs, &q.sigma)?;
    let rhs = glang_starfree(&q.rhs, &q.sigma)?;
    Ok(match first_violation(&lhs, || homomorphism_judge(&rhs))? {
        Some(p) => Inclusion::Fails(p, None),
        None => Inclusion::Holds,
    })
}

/// Whether every saturated quotient of a left-hand graph receives a
/// homomorphism from some right-hand graph.
fn characterization_holds(q: &Query, quotiented: bool) -> Result<bool> {
    require_star_free(q)?;
    let lhs = glang_starfree(&q.lhs, &q.sigma)?;
    let rhs = glang_starfree(&q.rhs, &q.sigma)?;
    Ok(lhs.iter().all(|h| {
        let targets = if quotiented { qs(h) } else { saturations(h) };
        targets.iter().all(|g| rhs.iter().any(|r| homomorphism_exists(r, g).is_some()))
    }))
}

fn inter_free_le(q: &Query, forced: Option<Procedure>) -> Result<Inclusion> {
    require_inter_free(q)?;
    let a1 = thompson(&q.lhs, &q.sigma)?;
    let a2 = thompson(&q.rhs, &q.sigma)?;
    let fragment_ok = !a2.uses_letter(crate::nfa::SignedLetter::NegId) || !a1.uses_neg_atom();
    let use_fragment = match forced {
        Some(Procedure::Fragment) => true,
        Some(Procedure::Full) => false,
        _ => fragment_ok,
    };
    let (outcome, cap) = if use_fragment {
        (fragment_emptiness(&a1, &a2, q.options.max_nodes)?, None)
    } else {
        let bound = completeness_bound(&a1, &a2);
        let cap = bound.min(q.options.len_cap.unwrap_or(DEFAULT_LEN_CAP));
        (full_exka_search(&a1, &a2, cap, q.options.max_nodes)?, Some(cap))
    };
    Ok(match outcome {
        PathSearch::Empty => Inclusion::Holds,
        PathSearch::Found(p) => Inclusion::Fails(p.structure(&a2)?, Some(p.word)),
        PathSearch::Inconclusive { depth } => Inclusion::Open(cap.unwrap_or(depth)),
    })
}

fn semi_le(q: &Query, budget: usize) -> Result<Inclusion> {
    let rhs = CompiledTerm::new(&q.rhs, &q.sigma)?;
    let mut done: HashSet<Graph> = HashSet::new();
    for b in 1..=budget {
        let fresh: Vec<Graph> = glang(&q.lhs, &q.sigma, b)?.into_iter().filter(|g| done.insert(g.clone())).collect();
        if let Some(p) = first_violation(&fresh, || model_check_judge(&rhs))? {
            return Ok(Inclusion::Fails(p, None));
        }
    }
    Ok(Inclusion::Open(budget))
}

/// Saturation search with model checking; requires star-free terms and
/// never returns `Unknown`.
pub fn decide_starfree(q: &Query) -> Result<Verdict> {
    per_direction(q, starfree_le)
}

/// The homomorphism characterization over saturated quotients, as an
/// independent procedure for star-free queries.
pub fn graph_characterization_check(q: &Query) -> Result<Verdict> {
    per_direction(q, graphchar_le)
}

/// The homomorphism characterization evaluated literally by full enumeration,
/// either over saturated quotients or over unquotiented saturations.
pub fn graph_characterization_formula(q: &Query, quotiented: bool) -> Result<bool> {
    for &d in q.directions() {
        if !characterization_holds(&q.directed(d), quotiented)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Automaton-based procedures for intersection-free queries: exact on the
/// two sound fragments, bounded otherwise.
pub fn decide_intersection_free(q: &Query) -> Result<Verdict> {
    per_direction(q, |dq| inter_free_le(dq, None))
}

/// Refutation search over graphs of the left-hand side with at most
/// `budget` vertices. Never returns `Valid`.
pub fn semidecide_ecorstar(q: &Query, budget: usize) -> Result<Verdict> {
    per_direction(q, |dq| semi_le(dq, budget))
}

/// The procedure `decide` would use for `q`.
pub fn dispatch(q: &Query) -> Procedure {
    if let Some(p) = q.options.procedure {
        return p;
    }
    let f = q.lhs.fragment().join(q.rhs.fragment());
    if f.is_star_free() {
        Procedure::Starfree
    } else if f.is_inter_free() {
        let a1 = thompson(&q.lhs, &q.sigma);
        let a2 = thompson(&q.rhs, &q.sigma);
        match (a1, a2) {
            (Ok(a1), Ok(a2)) if !a2.uses_letter(crate::nfa::SignedLetter::NegId) || !a1.uses_neg_atom() => {
                Procedure::Fragment
            }
            _ => Procedure::Full,
        }
    } else {
        Procedure::Semi
    }
}

/// Decides `q` with the procedure chosen by [`dispatch`]. Every refutation
/// is re-checked against both sides before it is returned.
pub fn decide(q: &Query) -> Result<Verdict> {
    let f = q.lhs.fragment().join(q.rhs.fragment());
    match q.options.procedure {
        None if f.is_star_free() => decide_starfree(q),
        None if f.is_inter_free() => decide_intersection_free(q),
        None => semidecide_ecorstar(q, q.options.budget),
        Some(Procedure::Starfree) => decide_starfree(q),
        Some(Procedure::Graphchar) => graph_characterization_check(q),
        Some(p @ (Procedure::Fragment | Procedure::Full)) => per_direction(q, |dq| inter_free_le(dq, Some(p))),
        Some(Procedure::Semi) => semidecide_ecorstar(q, q.options.budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::parse_term;

    fn le(l: &str, r: &str) -> Query {
        Query::le(parse_term(l, None).unwrap(), parse_term(r, None).unwrap())
    }

    fn eq(l: &str, r: &str) -> Query {
        Query::eq(parse_term(l, None).unwrap(), parse_term(r, None).unwrap())
    }

    #[test]
    fn starfree_examples() {
        for q in [
            eq("T", "a|-a"),
            le("a;b;-a", "(-1;-a)|(a;-1)"),
            le("a", "-1|a;a"),
            le("a^;-a", "-1"),
            le("a&b", "a&(T;b)"),
            le("T", "1|-1"),
        ] {
            assert_eq!(decide_starfree(&q).unwrap(), Verdict::Valid, "{} {} {}", q.lhs, q.rel, q.rhs);
            assert_eq!(graph_characterization_check(&q).unwrap(), Verdict::Valid);
        }
        match decide_starfree(&le("a", "b")).unwrap() {
            Verdict::Refuted { direction, .. } => assert_eq!(direction, Direction::Le),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn quotienting_is_required() {
        let q = le("T", "1|-1");
        assert!(graph_characterization_formula(&q, true).unwrap());
        assert!(!graph_characterization_formula(&q, false).unwrap());
    }

    #[test]
    fn intersection_free_examples() {
        assert_eq!(decide_intersection_free(&eq("a*;a", "a;a*")).unwrap(), Verdict::Valid);
        match decide_intersection_free(&le("-a", "-a;-a;(-a)*")).unwrap() {
            Verdict::Refuted { counterexample, word, .. } => {
                assert_eq!(word.unwrap().len(), 1);
                assert_eq!(
                    *counterexample.structure.relation("a").unwrap(),
                    Relation::from_pairs(2, [(0, 0), (1, 0), (1, 1)])
                );
            }
            v => panic!("{v:?}"),
        }
        let mut q = le("a;b;-a", "(-1;-a)|(a;-1)");
        q.options.procedure = Some(Procedure::Full);
        assert_eq!(dispatch(&q), Procedure::Full);
        assert_eq!(decide(&q).unwrap(), Verdict::Valid);
    }

    #[test]
    fn semi_examples() {
        match semidecide_ecorstar(&le("a*", "b"), 2).unwrap() {
            Verdict::Refuted { counterexample, .. } => assert_eq!(counterexample.structure.n(), 1),
            v => panic!("{v:?}"),
        }
        assert_eq!(semidecide_ecorstar(&le("(a&b)*", "(b&a)*"), 4).unwrap(), Verdict::Unknown { bound: 4 });
    }

    #[test]
    fn dispatch_routes_by_fragment() {
        assert_eq!(dispatch(&le("a", "b")), Procedure::Starfree);
        assert_eq!(dispatch(&le("a*", "b")), Procedure::Fragment);
        assert_eq!(dispatch(&le("(-a)*", "-1")), Procedure::Full);
        assert_eq!(dispatch(&le("(a&b)*", "b")), Procedure::Semi);
    }

    #[test]
    fn verdict_json() {
        assert_eq!(serde_json::to_string(&Verdict::Valid.to_json()).unwrap(), r#"{"verdict":"valid"}"#);
        assert_eq!(
            serde_json::to_string(&Verdict::Unknown { bound: 3 }.to_json()).unwrap(),
            r#"{"verdict":"unknown","bound":3}"#
        );
        let v = decide(&le("a", "b")).unwrap();
        let j = serde_json::to_value(v.to_json()).unwrap();
        assert_eq!(j["verdict"], "refuted");
        assert_eq!(j["direction"], "<=");
    }
}
