//! `ecor`: decide, refute and inspect relational (in)equations.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ecor::cfg::{build_gamma, counterexample_from_word, reduce_universality, Cfg};
use ecor::decide::{decide, Options, Procedure, Query, Verdict};
use ecor::graphs::glang;
use ecor::nfa::thompson;
use ecor::structures::{brute_force_refute_in, PointedStructure, StructureJson};
use ecor::terms::{converse_normal_form, parse, Alphabet, QueryRel};

const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "ecor", version, about = "Relational (in)equations with complemented atoms and star")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a query; exits 0 valid, 1 refuted, 2 unknown, 3 error.
    Decide {
        #[command(flatten)]
        query: QueryArgs,
        /// Vertex budget of the refutation search.
        #[arg(long, default_value_t = Options::default().budget)]
        budget: usize,
        /// Word-length cap of the saturable-path search.
        #[arg(long)]
        len_cap: Option<usize>,
        /// Node limit of the automaton searches.
        #[arg(long, default_value_t = Options::default().max_nodes)]
        max_nodes: usize,
        /// Force one engine: starfree, graphchar, fragment, full or semi.
        #[arg(long)]
        procedure: Option<Procedure>,
    },
    /// Refute by enumerating small structures; exits 1 when one is found.
    Refute {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Same search as `refute`.
    Oracle {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a term, or a query at the endpoints, on a JSON structure.
    CheckModel {
        /// Pointed structure file (`n`, `relations`, `source`, `target`).
        model: PathBuf,
        #[arg(allow_hyphen_values = true)]
        lhs: String,
        rel: Option<String>,
        #[arg(allow_hyphen_values = true)]
        rhs: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Reduce grammar universality to an inequation.
    CfgReduce {
        /// Grammar file with one `X -> alpha | beta` rule per line.
        grammar: PathBuf,
        /// Also print the canonical model of this word.
        #[arg(long)]
        word: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Print the Thompson automaton of an intersection-free term.
    NfaDump {
        #[arg(allow_hyphen_values = true)]
        term: String,
        #[arg(long, value_parser = parse_sigma)]
        sigma: Option<Alphabet>,
        #[command(flatten)]
        format: Format,
    },
    /// Print the graphs of a term up to a vertex budget.
    GlangDump {
        #[arg(allow_hyphen_values = true)]
        term: String,
        #[arg(long, value_parser = parse_sigma)]
        sigma: Option<Alphabet>,
        #[arg(long, default_value_t = Options::default().budget)]
        budget: usize,
        #[command(flatten)]
        format: Format,
    },
}

#[derive(Args)]
struct QueryArgs {
    #[arg(allow_hyphen_values = true)]
    lhs: String,
    /// `<=` or `=`.
    rel: String,
    #[arg(allow_hyphen_values = true)]
    rhs: String,
    /// Alphabet, comma separated; defaults to the atoms of the query.
    #[arg(long, value_parser = parse_sigma)]
    sigma: Option<Alphabet>,
}

impl QueryArgs {
    fn query(&self) -> Result<Query> {
        Ok(Query::parse(&self.lhs, &self.rel, &self.rhs, self.sigma.as_ref())?)
    }
}

#[derive(Args)]
#[group(multiple = false)]
struct Format {
    /// Graphviz output.
    #[arg(long)]
    dot: bool,
    /// JSON output (the default).
    #[arg(long)]
    json: bool,
}

fn parse_sigma(s: &str) -> std::result::Result<Alphabet, String> {
    Alphabet::parse_list(s).map_err(|e| e.to_string())
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string(v)?);
    Ok(())
}

fn run_decide(q: Query, options: Options) -> Result<u8> {
    let q = q.with_options(options);
    let verdict = decide(&q)?;
    print_json(&verdict.to_json())?;
    Ok(match verdict {
        Verdict::Valid => 0,
        Verdict::Refuted { .. } => 1,
        Verdict::Unknown { .. } => 2,
    })
}

fn run_oracle(q: Query, max_n: usize, json: bool) -> Result<u8> {
    if q.sigma.len() * max_n * max_n > 60 {
        bail!("structures with {max_n} vertices over {} atoms are too many to enumerate", q.sigma.len());
    }
    let hit = brute_force_refute_in(&q.sigma, &q.lhs, &q.rhs, max_n, q.rel == QueryRel::Eq);
    match (&hit, json) {
        (None, true) => print_json(&serde_json::json!({ "counterexample": null }))?,
        (None, false) => println!("no counterexample with at most {max_n} vertices"),
        (Some((p, d)), true) => print_json(&serde_json::json!({ "direction": d, "counterexample": p.to_json() }))?,
        (Some((p, d)), false) => {
            println!("counterexample ({d})");
            println!("{}", serde_json::to_string(&p.to_json())?);
        }
    }
    Ok(u8::from(hit.is_some()))
}

fn run_check_model(model: &PathBuf, lhs: &str, rel: Option<&str>, rhs: Option<&str>, json: bool) -> Result<u8> {
    let text = fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
    let sj: StructureJson = serde_json::from_str(&text).context("parsing structure")?;
    let p = PointedStructure::from_json(&sj)?;
    let sigma = p.structure.sigma().clone();
    let term = |s: &str| -> Result<_> { Ok(converse_normal_form(&parse(s, Some(&sigma))?)) };
    let (ok, report) = match (rel, rhs) {
        (None, None) => {
            let h = p.holds(&term(lhs)?)?;
            (h, serde_json::json!({ "holds": h }))
        }
        (Some(rel), Some(rhs)) => {
            let (l, r) = (p.holds(&term(lhs)?)?, p.holds(&term(rhs)?)?);
            let sat = match QueryRel::parse(rel)? {
                QueryRel::Le => !l || r,
                QueryRel::Eq => l == r,
            };
            (sat, serde_json::json!({ "lhs": l, "rhs": r, "satisfied": sat }))
        }
        _ => bail!("give a term, or a relation and a right-hand side"),
    };
    if json {
        print_json(&report)?;
    } else {
        println!("{}", if ok { "holds" } else { "fails" });
    }
    Ok(u8::from(!ok))
}

fn run_cfg_reduce(path: &PathBuf, word: Option<&str>, json: bool) -> Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let c = Cfg::parse(&text)?;
    let q = reduce_universality(&c)?;
    let gamma: Vec<String> = build_gamma(&c).iter().map(ToString::to_string).collect();
    let model = match word {
        Some(w) => Some(counterexample_from_word(&c, &c.parse_word(w)?)?),
        None => None,
    };
    if json {
        let mut v = serde_json::json!({
            "lhs": q.lhs.to_string(),
            "rhs": q.rhs.to_string(),
            "sigma": q.sigma.names(),
            "gamma": gamma,
        });
        if let Some((p, bad)) = &model {
            v["canonical_model"] = serde_json::to_value(p.to_json())?;
            v["violates"] = (*bad).into();
        }
        print_json(&v)?;
    } else {
        println!("{} <= {}", q.lhs, q.rhs);
        if let Some((p, bad)) = &model {
            println!("{}", serde_json::to_string(&p.to_json())?);
            println!("{}", if *bad { "violates" } else { "satisfies" });
        }
    }
    Ok(0)
}

fn term_and_sigma(text: &str, sigma: Option<&Alphabet>) -> Result<(ecor::terms::Term, Alphabet)> {
    let t = converse_normal_form(&parse(text, sigma)?);
    let sigma = match sigma {
        Some(s) => s.clone(),
        None => Alphabet::from_atoms(t.atoms().iter()),
    };
    Ok((t, sigma))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Decide { query, budget, len_cap, max_nodes, procedure } => {
            run_decide(query.query()?, Options { budget, len_cap, max_nodes, procedure })
        }
        Command::Refute { query, max_n, json } | Command::Oracle { query, max_n, json } => {
            run_oracle(query.query()?, max_n, json)
        }
        Command::CheckModel { model, lhs, rel, rhs, json } => {
            run_check_model(&model, &lhs, rel.as_deref(), rhs.as_deref(), json)
        }
        Command::CfgReduce { grammar, word, json } => run_cfg_reduce(&grammar, word.as_deref(), json),
        Command::NfaDump { term, sigma, format } => {
            let (t, sigma) = term_and_sigma(&term, sigma.as_ref())?;
            let a = thompson(&t, &sigma)?;
            if format.dot {
                print!("{}", a.to_dot());
            } else {
                print_json(&a.to_json())?;
            }
            Ok(0)
        }
        Command::GlangDump { term, sigma, budget, format } => {
            let (t, sigma) = term_and_sigma(&term, sigma.as_ref())?;
            let graphs = glang(&t, &sigma, budget)?;
            if format.dot {
                for g in &graphs {
                    print!("{}", g.to_dot());
                }
            } else {
                print_json(&graphs.iter().map(|g| g.to_json()).collect::<Vec<_>>())?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("ECOR_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("ecor: {e}");
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ecor: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
