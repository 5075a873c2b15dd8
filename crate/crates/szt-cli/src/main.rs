//! Command-line front end: build trees, compute ranks and derivations, run
//! the derivation simulator, evaluate norms, verify factorizations, and run
//! the verification suites.
//!
//! Exit codes: 0 success, 2 verification failure, 1 usage or parse error.
//! All numeric inputs are rationals `p/q` or ordinal strings; reports are
//! deterministic for identical inputs and seeds.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num::ToPrimitive;
use serde::Deserialize;
use serde_json::json;

use szt::factor::{
    canonical_witness, subtree_factorization, verify_witness, witness_to_factorization, NormTag,
    RatOperator, Witness,
};
use szt::fdlab::{
    kk_norm, lowerlemma_check, norming_vectors, random_annihilating_functional, sphere_net,
    EuclidModel, Norm,
};
use szt::ordinal::Ordinal;
use szt::rat::{format_rat, parse_rat, Rat};
use szt::szlenk::{build_model, halving_schedule, spoindex_check, szlenk_index, trace};
use szt::topology::{cb_rank, compactness_report};
use szt::tree::{
    blossom, derive, dot, embed, enumerate_compatible, rank_tree, truncate, truncation_ids,
    verify_embedding, Arity, FinTree,
};
use szt::vectors::{chain_inequality_check, james_norm, sigma0_apply, sigma_apply, SuppVec};
use szt::verify::{run_all, run_module, CheckResult};

#[derive(Parser)]
#[command(name = "szt", version, about = "Symbolic toolkit for ordinal-ranked trees")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ordinal arithmetic in Cantor normal form.
    #[command(subcommand)]
    Ordinal(OrdinalCmd),
    /// Tree construction, ranks, derivations and exports.
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Coarse wedge topology: derivatives and compactness.
    #[command(subcommand)]
    Topology(TopologyCmd),
    /// Exact vectors and tree norms.
    #[command(subcommand)]
    Vec(VecCmd),
    /// Factorization witnesses and subtree factorizations.
    #[command(subcommand)]
    Factor(FactorCmd),
    /// Derivation simulator on the tree-dual model.
    #[command(subcommand)]
    Szlenk(SzlenkCmd),
    /// Finite-dimensional lemma checks.
    #[command(subcommand)]
    Fdlab(FdlabCmd),
    /// Verification suites.
    Check(CheckArgs),
}

#[derive(Subcommand)]
enum OrdinalCmd {
    /// Sum of two ordinals.
    Add { a: String, b: String },
    /// Product of two ordinals.
    Mul { a: String, b: String },
    /// Compare two ordinals; prints lt, eq or gt.
    Cmp { a: String, b: String },
    /// Fundamental-sequence member of an ordinal.
    Fundseq {
        #[arg(long)]
        ordinal: String,
        #[arg(long)]
        n: u64,
    },
    /// Leading exponent of the Cantor normal form.
    Alpha {
        #[arg(long)]
        ordinal: String,
    },
    /// Minimal doubling exponent over a given leading exponent.
    Doubling {
        #[arg(long)]
        ordinal: String,
        #[arg(long)]
        alpha: String,
    },
}

#[derive(Subcommand)]
enum TreeCmd {
    /// Build and summarize a tree from an ordinal or an explicit file.
    Build {
        #[arg(long, conflicts_with = "input")]
        ordinal: Option<String>,
        #[arg(long)]
        input: Option<String>,
    },
    /// Structural rank of the tree generated by an ordinal.
    Rank {
        #[arg(long)]
        ordinal: String,
    },
    /// Survivors of the level-xi derivation on a truncation window.
    Derive {
        #[arg(long)]
        ordinal: String,
        #[arg(long)]
        level: String,
        #[arg(long, default_value_t = 3)]
        depth: u64,
        #[arg(long, default_value_t = 4)]
        width: u64,
    },
    /// Embed an explicit finite tree into a generated tree.
    Embed {
        #[arg(long)]
        input: String,
        #[arg(long)]
        ordinal: String,
    },
    /// Enumerate node addresses compatibly with the tree order.
    Enumerate {
        #[arg(long)]
        ordinal: String,
        #[arg(long, default_value_t = 20)]
        budget: usize,
    },
    /// Finite truncation window as an explicit tree.
    Truncate {
        #[arg(long)]
        ordinal: String,
        #[arg(long, default_value_t = 3)]
        depth: u64,
        #[arg(long, default_value_t = 4)]
        width: u64,
    },
    /// Graphviz DOT rendering of a truncation window.
    Dot {
        #[arg(long)]
        ordinal: String,
        #[arg(long, default_value_t = 3)]
        depth: u64,
        #[arg(long, default_value_t = 4)]
        width: u64,
    },
}

#[derive(Subcommand)]
enum TopologyCmd {
    /// Cantor-Bendixson rank under the coarse wedge topology.
    Cb {
        #[arg(long)]
        ordinal: String,
    },
    /// Compactness certificate for the generated tree.
    Compact {
        #[arg(long)]
        ordinal: String,
    },
}

#[derive(Subcommand)]
enum VecCmd {
    /// Apply the summing operator to a vector; prints the step function.
    Sigma {
        #[arg(long)]
        ordinal: String,
        #[arg(long)]
        input: String,
        /// Use the root-vanishing variant.
        #[arg(long)]
        rootfree: bool,
    },
    /// James tree norm of a vector: exact square and a certified enclosure.
    James {
        #[arg(long)]
        ordinal: String,
        #[arg(long)]
        input: String,
    },
    /// Chain inequality margins sup <= James <= l1 for a vector.
    Chain {
        #[arg(long)]
        ordinal: String,
        #[arg(long)]
        input: String,
    },
}

#[derive(Subcommand)]
enum FactorCmd {
    /// Emit the canonical witness of a tree, or verify a provided one.
    Witness {
        #[arg(long)]
        tree: String,
        #[arg(long)]
        witness: Option<String>,
    },
    /// Build the factorization operators from a witness.
    Build {
        #[arg(long)]
        tree: String,
        #[arg(long)]
        witness: Option<String>,
    },
    /// Factor the subtree summing operator through the ambient one.
    Subtree {
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        /// Node map as JSON `{ "0": 0, ... }`; identity when omitted.
        #[arg(long)]
        map: Option<String>,
        /// Print only the equality verdict.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Subcommand)]
enum SzlenkCmd {
    /// Derivation index of the tree-dual model at a given epsilon.
    Index {
        #[arg(long)]
        ordinal: String,
        #[arg(long)]
        epsilon: String,
    },
    /// Level-by-level derivation trace.
    Trace {
        #[arg(long)]
        ordinal: String,
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 3)]
        steps: u64,
    },
    /// Halving schedule step: epsilon/2^(n+1) at level zeta*2^n.
    Schedule {
        #[arg(long)]
        zeta: String,
        #[arg(long)]
        epsilon: String,
        #[arg(long)]
        n: u32,
    },
    /// Index arithmetic report for the generated tree.
    Spoindex {
        #[arg(long)]
        ordinal: String,
    },
}

#[derive(Subcommand)]
enum FdlabCmd {
    /// Lower-bound lemma margin for an instance file.
    Lower {
        #[arg(long)]
        input: String,
    },
    /// Renorming value and its two-sided bound for an instance file.
    Kk {
        #[arg(long)]
        input: String,
    },
}

#[derive(Args)]
struct CheckArgs {
    /// `all` or `module=<name>`.
    target: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

// ---------------------------------------------------------------------------
// Error plumbing
// ---------------------------------------------------------------------------

enum Failure {
    /// Bad flags, unreadable files, malformed numbers: exit 1.
    Usage(String),
    /// A computation or verification did not hold: exit 2.
    Check(String),
}

type R = Result<(), Failure>;

fn usage<E: Display>(flag: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Usage(format!("{flag}: {e}"))
}

fn chk<T, E: Display>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Check(e.to_string()))
}

fn parse_ord(flag: &str, s: &str) -> Result<Ordinal, Failure> {
    s.parse().map_err(usage(flag))
}

fn parse_rational(flag: &str, s: &str) -> Result<Rat, Failure> {
    parse_rat(s).map_err(usage(flag))
}

fn read_file(flag: &str, path: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(usage(flag))
}

#[derive(Deserialize)]
struct FinTreeDto {
    parent: Vec<Option<usize>>,
    #[serde(default)]
    elided: Option<Vec<bool>>,
}

fn load_fintree(flag: &str, path: &str) -> Result<FinTree, Failure> {
    let text = read_file(flag, path)?;
    let dto: FinTreeDto = serde_json::from_str(&text).map_err(usage(flag))?;
    let built = match dto.elided {
        Some(elided) => FinTree::with_elision(dto.parent, elided),
        None => FinTree::new(dto.parent),
    };
    built.map_err(usage(flag))
}

fn raw(jsonish: String) -> serde_json::Value {
    serde_json::from_str(&jsonish).expect("serializers emit valid documents")
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

fn run_ordinal(cmd: OrdinalCmd) -> R {
    match cmd {
        OrdinalCmd::Add { a, b } => {
            println!("{}", parse_ord("a", &a)?.add(&parse_ord("b", &b)?));
        }
        OrdinalCmd::Mul { a, b } => {
            println!("{}", parse_ord("a", &a)?.mul(&parse_ord("b", &b)?));
        }
        OrdinalCmd::Cmp { a, b } => {
            let (a, b) = (parse_ord("a", &a)?, parse_ord("b", &b)?);
            println!("{}", match a.cmp(&b) {
                std::cmp::Ordering::Less => "lt",
                std::cmp::Ordering::Equal => "eq",
                std::cmp::Ordering::Greater => "gt",
            });
        }
        OrdinalCmd::Fundseq { ordinal, n } => {
            let xi = parse_ord("--ordinal", &ordinal)?;
            println!("{}", chk(xi.fund_seq(n))?);
        }
        OrdinalCmd::Alpha { ordinal } => {
            let xi = parse_ord("--ordinal", &ordinal)?;
            println!("{}", chk(xi.leading_alpha())?);
        }
        OrdinalCmd::Doubling { ordinal, alpha } => {
            let xi = parse_ord("--ordinal", &ordinal)?;
            let alpha = parse_ord("--alpha", &alpha)?;
            println!("{}", chk(xi.doubling_exponent(&alpha))?);
        }
    }
    Ok(())
}

fn run_tree(cmd: TreeCmd) -> R {
    match cmd {
        TreeCmd::Build { ordinal, input } => match (ordinal, input) {
            (Some(ordinal), None) => {
                let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
                let branching = match tree.arity() {
                    Arity::Omega => "omega",
                    Arity::Finite(_) => "finite",
                };
                let rank = chk(rank_tree(&tree))?;
                println!("{}", json!({"kind": "generator", "branching": branching,
                                      "rank": rank.to_string()}));
            }
            (None, Some(input)) => {
                let fin = load_fintree("--input", &input)?;
                let rank = chk(rank_tree(&fin.to_expr()))?;
                println!("{}", json!({"kind": "explicit", "nodes": fin.len(),
                                      "rank": rank.to_string()}));
            }
            _ => return Err(Failure::Usage("provide exactly one of --ordinal or --input".into())),
        },
        TreeCmd::Rank { ordinal } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            println!("{}", chk(rank_tree(&tree))?);
        }
        TreeCmd::Derive { ordinal, level, depth, width } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            let level = parse_ord("--level", &level)?;
            let view = derive(&tree, &level);
            let window = chk(truncation_ids(&tree, depth, width))?;
            let mut survivors = Vec::new();
            for id in window {
                if chk(view.contains(&id))? {
                    survivors.push(id.0.clone());
                }
            }
            println!("{}", json!({"level": level.to_string(), "survivors": survivors}));
        }
        TreeCmd::Embed { input, ordinal } => {
            let fin = load_fintree("--input", &input)?;
            let xi = parse_ord("--ordinal", &ordinal)?;
            let source = fin.to_expr();
            let map = chk(embed(&source, &xi))?;
            chk(verify_embedding(&source, &blossom(&xi), &map))?;
            let pairs: Vec<(Vec<u64>, Vec<u64>)> =
                map.iter().map(|(s, t)| (s.0.clone(), t.0.clone())).collect();
            println!("{}", json!({"verified": true, "map": pairs}));
        }
        TreeCmd::Enumerate { ordinal, budget } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            let ids = chk(enumerate_compatible(&tree, budget))?;
            let ids: Vec<Vec<u64>> = ids.into_iter().map(|id| id.0).collect();
            println!("{}", json!(ids));
        }
        TreeCmd::Truncate { ordinal, depth, width } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            let fin = chk(truncate(&tree, depth, width))?;
            println!("{}", serde_json::to_string(&fin).expect("explicit trees serialize"));
        }
        TreeCmd::Dot { ordinal, depth, width } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            print!("{}", chk(dot(&tree, depth, width))?);
        }
    }
    Ok(())
}

fn run_topology(cmd: TopologyCmd) -> R {
    match cmd {
        TopologyCmd::Cb { ordinal } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            println!("{}", chk(cb_rank(&tree))?);
        }
        TopologyCmd::Compact { ordinal } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            let report = compactness_report(&tree);
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
        }
    }
    Ok(())
}

fn load_vec(ordinal: &str, input: &str) -> Result<SuppVec, Failure> {
    let ambient = blossom(&parse_ord("--ordinal", ordinal)?);
    let text = read_file("--input", input)?;
    SuppVec::from_json(ambient, &text).map_err(usage("--input"))
}

fn run_vec(cmd: VecCmd) -> R {
    match cmd {
        VecCmd::Sigma { ordinal, input, rootfree } => {
            let v = load_vec(&ordinal, &input)?;
            let f = if rootfree { chk(sigma0_apply(&v))? } else { sigma_apply(&v) };
            println!("{}", f.to_json());
        }
        VecCmd::James { ordinal, input } => {
            let v = load_vec(&ordinal, &input)?;
            let norm = chk(james_norm(&v))?;
            println!("{}", json!({"squared": format_rat(&norm.squared),
                                  "enclosure": [norm.enclosure.0, norm.enclosure.1]}));
        }
        VecCmd::Chain { ordinal, input } => {
            let v = load_vec(&ordinal, &input)?;
            let m = chk(chain_inequality_check(&v))?;
            println!("{}", json!({"holds": m.holds,
                                  "sup_sq": format_rat(&m.sup_sq),
                                  "james_sq": format_rat(&m.james_sq),
                                  "l1_sq": format_rat(&m.l1_sq)}));
            if !m.holds {
                return Err(Failure::Check("chain inequality violated".into()));
            }
        }
    }
    Ok(())
}

fn load_witness(flag: &str, path: &str) -> Result<Witness, Failure> {
    let text = read_file(flag, path)?;
    Witness::from_json(&text).map_err(usage(flag))
}

fn run_factor(cmd: FactorCmd) -> R {
    match cmd {
        FactorCmd::Witness { tree, witness } => {
            let fin = load_fintree("--tree", &tree)?;
            match witness {
                None => println!("{}", canonical_witness(&fin).to_json()),
                Some(path) => {
                    let w = load_witness("--witness", &path)?;
                    let report = chk(verify_witness(&fin, &w))?;
                    println!("{}", json!({"ok": report.ok,
                                          "counterexample": report.counterexample}));
                    if !report.ok {
                        return Err(Failure::Check("witness pattern violated".into()));
                    }
                }
            }
        }
        FactorCmd::Build { tree, witness } => {
            let fin = load_fintree("--tree", &tree)?;
            let w = match witness {
                Some(path) => load_witness("--witness", &path)?,
                None => canonical_witness(&fin),
            };
            let top = RatOperator::identity(fin.len(), NormTag::L1, NormTag::L1);
            let (u, v) = chk(witness_to_factorization(&fin, &w, &top, &w.xstar))?;
            println!("{}", json!({"u": raw(u.to_json()), "v": raw(v.to_json())}));
        }
        FactorCmd::Subtree { source, target, map, check } => {
            let sub = load_fintree("--source", &source)?;
            let tree = load_fintree("--target", &target)?;
            let phi: BTreeMap<usize, usize> = match map {
                Some(path) => {
                    let text = read_file("--map", &path)?;
                    serde_json::from_str(&text).map_err(usage("--map"))?
                }
                None => (0..sub.len()).map(|i| (i, i)).collect(),
            };
            match subtree_factorization(&sub, &tree, &phi) {
                Ok(factors) => {
                    if check {
                        println!("{}", json!({"equal": true}));
                    } else {
                        println!("{}", json!({"a": raw(factors.a.to_json()),
                                              "u": raw(factors.u.to_json()),
                                              "v": raw(factors.v.to_json()),
                                              "b": raw(factors.b.to_json())}));
                    }
                }
                Err(e) => {
                    if check {
                        println!("{}", json!({"equal": false}));
                    }
                    return Err(Failure::Check(e.to_string()));
                }
            }
        }
    }
    Ok(())
}

fn run_szlenk(cmd: SzlenkCmd) -> R {
    match cmd {
        SzlenkCmd::Index { ordinal, epsilon } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            let eps = parse_rational("--epsilon", &epsilon)?;
            let model = chk(build_model(&tree))?;
            println!("{}", chk(szlenk_index(&model, &eps))?);
        }
        SzlenkCmd::Trace { ordinal, epsilon, steps } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            let eps = parse_rational("--epsilon", &epsilon)?;
            let model = chk(build_model(&tree))?;
            let levels = chk(trace(&model, &eps, steps))?;
            println!("{}", serde_json::to_string(&levels).expect("trace serializes"));
        }
        SzlenkCmd::Schedule { zeta, epsilon, n } => {
            let zeta = parse_ord("--zeta", &zeta)?;
            let eps = parse_rational("--epsilon", &epsilon)?;
            let (eps_n, level) = chk(halving_schedule(&zeta, &eps, n))?;
            println!("{}", json!({"epsilon": format_rat(&eps_n), "level": level.to_string()}));
        }
        SzlenkCmd::Spoindex { ordinal } => {
            let tree = blossom(&parse_ord("--ordinal", &ordinal)?);
            let report = chk(spoindex_check(&tree))?;
            println!("{}", json!({"rho": report.rho.to_string(),
                                  "alpha": report.alpha.to_string(),
                                  "product": report.product.to_string(),
                                  "model_lower_bound": report.model_lower_bound.to_string()}));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct LowerInstanceDto {
    dim: usize,
    norm: Norm,
    nu: String,
    #[serde(rename = "F")]
    f: Vec<Vec<String>>,
    seed: u64,
}

#[derive(Deserialize)]
struct KkInstanceDto {
    xstar: Vec<String>,
    chain: Vec<Vec<Vec<String>>>,
    c: String,
    norm: Norm,
}

fn parse_rat_rows(flag: &str, rows: &[Vec<String>]) -> Result<Vec<Vec<Rat>>, Failure> {
    rows.iter()
        .map(|row| row.iter().map(|s| parse_rational(flag, s)).collect())
        .collect()
}

fn run_fdlab(cmd: FdlabCmd) -> R {
    match cmd {
        FdlabCmd::Lower { input } => {
            let text = read_file("--input", &input)?;
            let dto: LowerInstanceDto =
                serde_json::from_str(&text).map_err(usage("--input"))?;
            let model = chk(EuclidModel::new(dto.dim, dto.norm))?;
            let nu = parse_rational("--input nu", &dto.nu)?;
            let f = parse_rat_rows("--input F", &dto.f)?;
            let dual = dto.norm.dual();
            let two = Rat::new(2.into(), 1.into());
            let four = Rat::new(4.into(), 1.into());
            let delta = &nu / (&four + &two * &nu);
            let net = chk(sphere_net(&f, dual, &delta))?;
            let ys = norming_vectors(&net, dual);
            let xstar = random_annihilating_functional(&ys, dto.dim, dto.seed);
            let report = chk(lowerlemma_check(&model, &nu, &f, &net, &ys, &xstar))?;
            println!("{}", json!({"margin": report.margin,
                                  "exact_nonneg": report.exact_nonneg,
                                  "exact_inputs": report.exact_inputs,
                                  "sup_sq": format_rat(&report.sup_sq),
                                  "bound_sq": format_rat(&report.bound_sq)}));
            if report.margin < -1e-9 {
                return Err(Failure::Check("margin below tolerance".into()));
            }
        }
        FdlabCmd::Kk { input } => {
            let text = read_file("--input", &input)?;
            let dto: KkInstanceDto =
                serde_json::from_str(&text).map_err(usage("--input"))?;
            let xstar: Vec<Rat> = dto
                .xstar
                .iter()
                .map(|s| parse_rational("--input xstar", s))
                .collect::<Result<_, _>>()?;
            let chain: Vec<Vec<Vec<Rat>>> = dto
                .chain
                .iter()
                .map(|sub| parse_rat_rows("--input chain", sub))
                .collect::<Result<_, _>>()?;
            let c_rat = parse_rational("--input c", &dto.c)?;
            let c = c_rat.to_f64().unwrap_or(f64::NAN);
            let value = chk(kk_norm(&xstar, &chain, c, dto.norm))?;
            let base = szt::fdlab::norm_sq(&xstar, dto.norm)
                .to_f64()
                .unwrap_or(f64::NAN)
                .sqrt();
            println!("{}", json!({"value": value, "base": base}));
            if value < base - 1e-12 || value > c * base + 1e-12 {
                return Err(Failure::Check("renorming value outside the two-sided bound".into()));
            }
        }
    }
    Ok(())
}

fn run_check(args: CheckArgs) -> R {
    let results: Vec<CheckResult> = if args.target == "all" {
        run_all(args.seed)
    } else if let Some(module) = args.target.strip_prefix("module=") {
        run_module(module, args.seed)
            .ok_or_else(|| Failure::Usage(format!("unknown module `{module}`")))?
    } else {
        return Err(Failure::Usage(
            "target must be `all` or `module=<name>`".into(),
        ));
    };
    let mut failed = 0;
    for r in &results {
        println!("{} {} - {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
        if !r.pass {
            failed += 1;
        }
    }
    println!("{}", json!({"passed": results.len() - failed, "failed": failed}));
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} criteria failed")));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> R {
    match cli.cmd {
        Cmd::Ordinal(c) => run_ordinal(c),
        Cmd::Tree(c) => run_tree(c),
        Cmd::Topology(c) => run_topology(c),
        Cmd::Vec(c) => run_vec(c),
        Cmd::Factor(c) => run_factor(c),
        Cmd::Szlenk(c) => run_szlenk(c),
        Cmd::Fdlab(c) => run_fdlab(c),
        Cmd::Check(c) => run_check(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("verification failure: {msg}");
            ExitCode::from(2)
        }
    }
}
