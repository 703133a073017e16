//! `stochmatch` command-line tool.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stochmatch::cftp::{monte_carlo, Dictionary, DEFAULT_DEPTH_LIMIT};
use stochmatch::erasing::{
    build_dictionary, certify_strong, compose_strong_words, construct_erasing_word, find_minimal_erasing_words,
    make_complete_partite_word, make_fcfm_cycle_word, make_lcfm_cycle_word, search_strong_words, DictionaryFile,
    ErasingCert,
};
use stochmatch::finite_buffer::{build_transition_matrix, solve_stationary, total_variation, StationaryDistribution};
use stochmatch::matchings::{
    arc_plot_data, biinfinite_window, fcfm_reverse_check, simulate_with_construction_points, StartParity, WindowEdge,
};
use stochmatch::policy::run_word;
use stochmatch::properties::{
    check_nonexpansive, check_nonexpansive_all_priorities, check_subadditive, evaluate_pair, PropertyReport,
    SearchMode, Witness,
};
use stochmatch::{ArrivalDistribution, CompatibilityGraph, Error, FiniteBufferChain, Policy, Word};

const EXIT_VIOLATED: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser, Debug)]
#[command(
    name = "stochmatch",
    version,
    about = "Stochastic matching models: policies, erasing words, perfect sampling"
)]
struct Cli {
    /// Worker threads for parallel checks and sampling (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Emit plot data (arc diagrams, histograms) instead of the report.
    #[arg(long, global = true, value_enum)]
    emit: Option<Emit>,

    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Emit {
    PlotData,
}

#[derive(Args, Debug, Clone)]
struct GraphArg {
    /// Graph file (text or JSON) or built-in name: paw, octahedron, cycle:N, complete:N, kpartite:a,b,...
    #[arg(long)]
    graph: String,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Policy: fcfm, lcfm, ml, ms, uniform, priority, priority:desc or priority:L1;L2;...
    #[arg(long)]
    policy: String,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PropertyArg {
    Nonexpansive,
    Subadditive,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ClosedForm {
    LcfmCycle,
    FcfmCycle,
    Partite,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ParityArg {
    Even,
    Odd,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structure of a compatibility graph.
    GraphInfo {
        #[command(flatten)]
        graph: GraphArg,
    },
    /// Stability condition mu(I) < mu(E(I)) over all independent sets.
    CheckNcond {
        #[command(flatten)]
        graph: GraphArg,
        /// Arrival probabilities, comma separated.
        #[arg(long)]
        mu: String,
    },
    /// Bounded check of non-expansiveness or sub-additivity.
    CheckPolicy {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        property: PropertyArg,
        /// Largest class count (non-expansiveness).
        #[arg(long, default_value_t = 3)]
        max_count: u32,
        /// Largest total word length (sub-additivity).
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// Random word pairs instead of the exhaustive search.
        #[arg(long)]
        sampled: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate one word pair z' z'' over all preference lists.
        #[arg(long, num_args = 2, value_names = ["Z1", "Z2"])]
        pair: Option<Vec<String>>,
        /// Replay every recorded witness through the policy.
        #[arg(long)]
        replay: bool,
    },
    /// Erasing words of a buffer: the constructive word, or all minimal ones.
    FindErasing {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "-")]
        buffer: String,
        /// Search all words up to this length instead of constructing one.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Certify a 2C-strong erasing word.
    CertifyStrong {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1)]
        capacity: usize,
        #[arg(long, conflicts_with_all = ["closed_form", "compose"])]
        word: Option<String>,
        #[arg(long, value_enum, conflicts_with = "compose")]
        closed_form: Option<ClosedForm>,
        /// 2-strong words to concatenate (one per unit of capacity).
        #[arg(long, num_args = 1..)]
        compose: Option<Vec<String>>,
    },
    /// Write a CFTP dictionary of 2C-strong words.
    BuildDict {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1)]
        capacity: usize,
        /// Certified 2-strong base words (all of the same length).
        #[arg(long, num_args = 1.., conflicts_with = "search_len")]
        base: Option<Vec<String>>,
        /// Search all 2-strong base words of this length.
        #[arg(long)]
        search_len: Option<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        limit: usize,
    },
    /// Exact stationary distribution of the finite-buffer chain.
    Stationary {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        mu: String,
        #[arg(long, default_value_t = 1)]
        capacity: usize,
    },
    /// Perfect samples of the finite-buffer chain.
    Cftp {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        mu: String,
        #[arg(long, default_value_t = 1)]
        capacity: usize,
        /// Dictionary file written by build-dict.
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_DEPTH_LIMIT)]
        depth_limit: u64,
    },
    /// Total variation distance between two distribution files.
    Tv {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        /// Exit with status 2 when the distance exceeds this value.
        #[arg(long)]
        max: Option<f64>,
    },
    /// Forward simulation with construction points.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        steps: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "-")]
        initial: String,
    },
    /// Matching of a window of the bi-infinite stream.
    Bimatch {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        mu: String,
        /// Window start (arrival time).
        #[arg(long, allow_hyphen_values = true)]
        from: i64,
        /// Window end, exclusive.
        #[arg(long, allow_hyphen_values = true)]
        to: i64,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
        depths: Vec<u64>,
        #[arg(long, value_enum, default_value = "even")]
        parity: ParityArg,
        #[arg(long)]
        seed: u64,
    },
    /// Time-reversal check of FCFM blocks.
    ReverseCheck {
        #[command(flatten)]
        graph: GraphArg,
        /// A block to match from the empty buffer.
        #[arg(long, conflicts_with = "samples")]
        word: Option<String>,
        /// Policy used to match `--word`.
        #[arg(long, default_value = "fcfm")]
        policy: String,
        /// Number of blocks sampled between construction points.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Failure {
    Usage(String),
    Io(String),
    Violated(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::VerificationFailed(_)
            | Error::CoalescenceFailed { .. }
            | Error::UncertifiedWord(_)
            | Error::NotFcfm
            | Error::NotPerfect => Failure::Violated(msg),
            Error::SelfLoop(_)
            | Error::OutOfRange { .. }
            | Error::Disconnected
            | Error::InvalidGraph(_)
            | Error::InvalidDistribution(_)
            | Error::InvalidPolicy(_)
            | Error::InvalidPreference { .. }
            | Error::InadmissibleState(_)
            | Error::PolicyNotClassAdmissible(_)
            | Error::OddLength(_)
            | Error::BipartiteGraph
            | Error::NotAnOddCycle
            | Error::NotCompleteMultipartite
            | Error::NoBaseWords
            | Error::MixedLengths
            | Error::EmptyDictionary
            | Error::DimensionMismatch(..)
            | Error::Parse(_) => Failure::Usage(msg),
            _ => Failure::Other(msg),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// What a command produced: the main text and whether a property failed.
struct Output {
    text: String,
    violated: bool,
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_graph(src: &str) -> CliResult<CompatibilityGraph> {
    let path = Path::new(src);
    if path.is_file() {
        Ok(CompatibilityGraph::parse(&read_file(path)?)?)
    } else {
        CompatibilityGraph::builtin(src)
            .map_err(|_| Failure::Usage(format!("`{src}` is neither a graph file nor a built-in graph")))
    }
}

fn parse_mu(g: &CompatibilityGraph, text: &str) -> CliResult<ArrivalDistribution> {
    let mu = ArrivalDistribution::parse(text)?;
    if mu.len() != g.n() {
        return Err(Failure::Usage(format!(
            "mu has {} entries for {} classes",
            mu.len(),
            g.n()
        )));
    }
    Ok(mu)
}

fn parse_word(g: &CompatibilityGraph, text: &str) -> CliResult<Word> {
    let w = Word::parse(text)?;
    w.check_range(g.n())?;
    Ok(w)
}

fn need_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| Failure::Usage(format!("{what} needs --seed")))
}

/// `# key = value` lines describing the resolved run configuration.
struct Header(Vec<(String, String)>);

impl Header {
    fn new(command: &str) -> Self {
        Header(vec![
            ("stochmatch".into(), env!("CARGO_PKG_VERSION").into()),
            ("command".into(), command.into()),
        ])
    }

    fn add(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.into(), value.to_string()));
        self
    }

    fn graph(&mut self, src: &str, g: &CompatibilityGraph) -> &mut Self {
        self.add("graph", src).add("graph_sha256", g.digest())
    }

    fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
    }
}

fn report_lines(r: &PropertyReport, out: &mut String) {
    let verdict = if r.holds() { "holds on domain" } else { "violated" };
    let _ = writeln!(out, "policy = {}", r.policy);
    let _ = writeln!(out, "verdict = {verdict}");
    let _ = writeln!(out, "domain = {}", r.domain);
    let _ = writeln!(out, "cases = {}", r.cases_checked);
    let _ = writeln!(out, "violations = {}", r.violation_count);
    if let Some(w) = &r.witness {
        let _ = writeln!(out, "witness = {w}");
    }
}

fn cert_lines(c: &ErasingCert, out: &mut String) {
    let _ = writeln!(out, "word = {}", c.word);
    let _ = writeln!(out, "certificate = {c}");
    let _ = writeln!(out, "checked = {}", c.checked_domain);
    let _ = writeln!(out, "verified = {}", c.verified);
}

fn dist_plot_data(states: &[Word], probs: &[f64]) -> String {
    let mut s = String::from("# rank state prob\n");
    for (k, (w, p)) in states.iter().zip(probs).enumerate() {
        let _ = writeln!(s, "{k} {w} {p}");
    }
    s
}

fn run(cli: &Cli) -> CliResult<Output> {
    let plot = cli.emit == Some(Emit::PlotData);
    let mut body = String::new();
    let mut violated = false;
    let header = match &cli.command {
        Command::GraphInfo { graph } => {
            let g = load_graph(&graph.graph)?;
            let mut h = Header::new("graph-info");
            h.graph(&graph.graph, &g);
            let _ = writeln!(body, "n = {}", g.n());
            let edges: Vec<String> = g.edges().iter().map(|(a, b)| format!("{a}-{b}")).collect();
            let _ = writeln!(body, "edges = {}", edges.join(" "));
            let _ = writeln!(body, "bipartite = {}", g.is_bipartite());
            match g.find_induced_odd_cycle() {
                Some(c) => {
                    let nodes: Vec<String> = c.nodes.iter().map(u8::to_string).collect();
                    let _ = writeln!(body, "odd_cycle = {}", nodes.join(" "));
                }
                None => {
                    let _ = writeln!(body, "odd_cycle = none");
                }
            }
            let _ = writeln!(body, "independent_sets = {}", g.independent_sets().len());
            let mp = g.classify_complete_multipartite();
            match mp.parts {
                Some(parts) if mp.is_cpp => {
                    let p: Vec<String> = parts.iter().map(|s| s.to_string()).collect();
                    let _ = writeln!(body, "complete_multipartite = {}", p.join(" "));
                }
                _ => {
                    let _ = writeln!(body, "complete_multipartite = no");
                }
            }
            h
        }
        Command::CheckNcond { graph, mu } => {
            let g = load_graph(&graph.graph)?;
            let m = parse_mu(&g, mu)?;
            let mut h = Header::new("check-ncond");
            h.graph(&graph.graph, &g).add("mu", &m);
            let r = g.ncond_check(&m)?;
            let _ = writeln!(body, "ncond = {}", r.holds);
            if let Some(w) = r.witness {
                let _ = writeln!(
                    body,
                    "witness = {w} mass {} >= {}",
                    m.mass(w),
                    m.mass(g.neighbors_of_set(w)?)
                );
                violated = true;
            }
            h
        }
        Command::CheckPolicy {
            model,
            property,
            max_count,
            max_len,
            sampled,
            seed,
            pair,
            replay,
        } => {
            let g = load_graph(&model.graph.graph)?;
            let all_priorities = model.policy == "priority:*";
            let policy = if all_priorities {
                Policy::uniform()
            } else {
                Policy::parse(&g, &model.policy)?
            };
            let mut h = Header::new("check-policy");
            h.graph(&model.graph.graph, &g).add("policy", &model.policy);
            if let Some(pair) = pair {
                let (z1, z2) = (parse_word(&g, &pair[0])?, parse_word(&g, &pair[1])?);
                h.add("pair", format!("{z1} {z2}"));
                let outcomes = evaluate_pair(&g, &policy, &z1, &z2)?;
                for (joint, left, right) in &outcomes {
                    let bad = joint > &(left + right);
                    violated |= bad;
                    let _ = writeln!(
                        body,
                        "z'={z1} z''={z2} sizes {joint} {} {left}+{right}",
                        if bad { ">" } else { "<=" }
                    );
                }
                let _ = writeln!(body, "verdict = {}", if violated { "violated" } else { "holds" });
                return finish(cli, h, body, violated);
            }
            let report = match property {
                PropertyArg::Nonexpansive => {
                    h.add("property", "nonexpansive").add("max_count", max_count);
                    if all_priorities {
                        check_nonexpansive_all_priorities(&g, *max_count)?
                    } else {
                        check_nonexpansive(&g, &policy, *max_count)?
                    }
                }
                PropertyArg::Subadditive => {
                    if all_priorities {
                        return Err(Failure::Usage("priority:* is only supported for nonexpansive".into()));
                    }
                    h.add("property", "subadditive").add("max_len", max_len);
                    let mode = match sampled {
                        Some(draws) => {
                            h.add("sampled_draws", draws);
                            SearchMode::Sampled { draws: *draws }
                        }
                        None => SearchMode::Exhaustive,
                    };
                    let s = match mode {
                        SearchMode::Sampled { .. } => need_seed(*seed, "--sampled")?,
                        SearchMode::Exhaustive => seed.unwrap_or(0),
                    };
                    h.add("seed", s);
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    check_subadditive(&g, &policy, *max_len, mode, &mut rng)?
                }
            };
            report_lines(&report, &mut body);
            if *replay {
                let replays = report
                    .violations
                    .iter()
                    .map(|w: &Witness| w.replay(&g, &policy))
                    .collect::<stochmatch::Result<Vec<bool>>>()?;
                let ok = replays.iter().filter(|&&b| b).count();
                let _ = writeln!(body, "replayed = {ok}/{}", replays.len());
            }
            violated = !report.holds();
            h
        }
        Command::FindErasing { model, buffer, max_len } => {
            let g = load_graph(&model.graph.graph)?;
            let policy = Policy::parse(&g, &model.policy)?;
            let u = parse_word(&g, buffer)?;
            let mut h = Header::new("find-erasing");
            h.graph(&model.graph.graph, &g).add("policy", &policy).add("buffer", &u);
            match max_len {
                Some(l) => {
                    h.add("max_len", l);
                    let words = find_minimal_erasing_words(&g, &policy, &u, *l)?;
                    let _ = writeln!(body, "length = {}", words[0].len());
                    let _ = writeln!(body, "count = {}", words.len());
                    for w in words {
                        let _ = writeln!(body, "{w}");
                    }
                }
                None => cert_lines(&construct_erasing_word(&g, &policy, &u)?, &mut body),
            }
            h
        }
        Command::CertifyStrong {
            model,
            capacity,
            word,
            closed_form,
            compose,
        } => {
            let g = load_graph(&model.graph.graph)?;
            let policy = Policy::parse(&g, &model.policy)?;
            let mut h = Header::new("certify-strong");
            h.graph(&model.graph.graph, &g).add("policy", &policy);
            let cert = if let Some(w) = word {
                h.add("capacity", capacity).add("word", w);
                certify_strong(&g, &policy, *capacity, &parse_word(&g, w)?)?
            } else if let Some(form) = closed_form {
                h.add("closed_form", format!("{form:?}").to_lowercase());
                match form {
                    ClosedForm::LcfmCycle => make_lcfm_cycle_word(&g, &policy)?,
                    ClosedForm::FcfmCycle => make_fcfm_cycle_word(&g, &policy)?,
                    ClosedForm::Partite => make_complete_partite_word(&g, &policy)?,
                }
            } else if let Some(parts) = compose {
                h.add("compose", parts.join(" "));
                let certs = parts
                    .iter()
                    .map(|p| Ok(certify_strong(&g, &policy, 1, &parse_word(&g, p)?)?))
                    .collect::<CliResult<Vec<_>>>()?;
                compose_strong_words(&g, &policy, &certs)?
            } else {
                return Err(Failure::Usage("give --word, --closed-form or --compose".into()));
            };
            cert_lines(&cert, &mut body);
            h
        }
        Command::BuildDict {
            model,
            capacity,
            base,
            search_len,
            limit,
        } => {
            let g = load_graph(&model.graph.graph)?;
            let policy = Policy::parse(&g, &model.policy)?;
            // the dictionary header carries graph digest, policy and capacity
            let mut h = Header::new("build-dict");
            h.add("graph_source", &model.graph.graph);
            let base_words: Vec<Word> = match (base, search_len) {
                (Some(b), _) => {
                    let words = b.iter().map(|w| parse_word(&g, w)).collect::<CliResult<Vec<_>>>()?;
                    for w in &words {
                        certify_strong(&g, &policy, 1, w)?;
                    }
                    words
                }
                (None, Some(len)) => {
                    h.add("search_len", len).add("limit", limit);
                    search_strong_words(&g, &policy, 1, *len, *limit)?
                }
                (None, None) => return Err(Failure::Usage("give --base or --search-len".into())),
            };
            let words = build_dictionary(&base_words, *capacity)?;
            let dict = DictionaryFile {
                graph_hash: g.digest(),
                policy: policy.to_string(),
                capacity: *capacity,
                q: base_words.first().map_or(0, |w| w.len() / 2),
                words,
            };
            body.push_str(&dict.to_text());
            h
        }
        Command::Stationary { model, mu, capacity } => {
            let g = load_graph(&model.graph.graph)?;
            let policy = Policy::parse(&g, &model.policy)?;
            let m = parse_mu(&g, mu)?;
            let mut h = Header::new("stationary");
            h.graph(&model.graph.graph, &g)
                .add("policy", &policy)
                .add("mu", &m)
                .add("capacity", capacity);
            let chain = FiniteBufferChain::new(g, policy, *capacity, m)?;
            let matrix = build_transition_matrix(&chain)?;
            let pi = solve_stationary(&matrix)?;
            h.add("states", pi.states.len())
                .add("residual", format!("{:e}", matrix.residual(&pi.probs)));
            body = if plot {
                dist_plot_data(&pi.states, &pi.probs)
            } else {
                pi.dump()
            };
            h
        }
        Command::Cftp {
            model,
            mu,
            capacity,
            dict,
            samples,
            seed,
            depth_limit,
        } => {
            let g = load_graph(&model.graph.graph)?;
            let policy = Policy::parse(&g, &model.policy)?;
            let m = parse_mu(&g, mu)?;
            let file = DictionaryFile::parse(&read_file(dict)?)?;
            if file.graph_hash != g.digest() {
                return Err(Failure::Usage("dictionary was built for another graph".into()));
            }
            if file.policy != policy.to_string() {
                return Err(Failure::Usage(format!(
                    "dictionary was built for policy {}",
                    file.policy
                )));
            }
            if file.capacity != *capacity {
                return Err(Failure::Usage(format!(
                    "dictionary is for capacity {}, not {capacity}",
                    file.capacity
                )));
            }
            let workers = cli.workers.unwrap_or(1);
            let mut h = Header::new("cftp");
            h.graph(&model.graph.graph, &g)
                .add("policy", &policy)
                .add("mu", &m)
                .add("capacity", capacity)
                .add("dict", dict.display())
                .add("dict_words", file.words.len())
                .add("samples", samples)
                .add("seed", seed)
                .add("depth_limit", depth_limit);
            let chain = FiniteBufferChain::new(g, policy, *capacity, m)?;
            let d = Dictionary::certified(&chain, &file.words)?;
            let mc = monte_carlo(&chain, &d, *samples, *seed, workers, *depth_limit)?;
            h.add("mean_scan_depth", mc.mean_scan_depth)
                .add("max_scan_depth", mc.max_scan_depth);
            body = if plot {
                dist_plot_data(&mc.states, &mc.histogram())
            } else {
                mc.dump()
            };
            h
        }
        Command::Tv { p, q, max } => {
            let a = StationaryDistribution::parse(&read_file(p)?)?;
            let b = StationaryDistribution::parse(&read_file(q)?)?;
            let mut h = Header::new("tv");
            h.add("p", p.display()).add("q", q.display());
            // align on the union of states
            let mut states: Vec<Word> = a.states.iter().chain(&b.states).cloned().collect();
            states.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
            states.dedup();
            let pa: Vec<f64> = states.iter().map(|s| a.prob_of(s)).collect();
            let pb: Vec<f64> = states.iter().map(|s| b.prob_of(s)).collect();
            let tv = total_variation(&pa, &pb)?;
            let _ = writeln!(body, "tv = {tv}");
            if let Some(limit) = max {
                h.add("max", limit);
                violated = tv > *limit;
            }
            h
        }
        Command::Simulate {
            model,
            mu,
            steps,
            seed,
            initial,
        } => {
            let g = load_graph(&model.graph.graph)?;
            let policy = Policy::parse(&g, &model.policy)?;
            let m = parse_mu(&g, mu)?;
            let y = parse_word(&g, initial)?;
            let mut h = Header::new("simulate");
            h.graph(&model.graph.graph, &g)
                .add("policy", &policy)
                .add("mu", &m)
                .add("steps", steps)
                .add("seed", seed)
                .add("initial", &y);
            let run = simulate_with_construction_points(&g, &policy, &m, &y, *steps, *seed)?;
            if plot {
                let edges: Vec<WindowEdge> = run
                    .trace
                    .edges
                    .iter()
                    .map(|&(a, b)| WindowEdge {
                        t_i: a as i64,
                        t_j: b as i64,
                        class_i: run.trace.items[a],
                        class_j: run.trace.items[b],
                    })
                    .collect();
                body = arc_plot_data(&edges);
            } else {
                let perfect = run.blocks_are_perfect();
                let _ = writeln!(body, "construction_points = {}", run.cps.len());
                let _ = writeln!(body, "blocks = {}", run.blocks().len());
                let _ = writeln!(body, "blocks_perfect = {perfect}");
                let _ = writeln!(body, "leftover = {}", run.trace.leftover.len());
                let shown: Vec<String> = run.cps.iter().take(50).map(u64::to_string).collect();
                let _ = writeln!(body, "first_cps = {}", shown.join(" "));
                violated = !perfect;
            }
            h
        }
        Command::Bimatch {
            model,
            mu,
            from,
            to,
            depths,
            parity,
            seed,
        } => {
            let g = load_graph(&model.graph.graph)?;
            let policy = Policy::parse(&g, &model.policy)?;
            let m = parse_mu(&g, mu)?;
            let parity = match parity {
                ParityArg::Even => StartParity::Even,
                ParityArg::Odd => StartParity::Odd,
            };
            let mut h = Header::new("bimatch");
            let depth_list: Vec<String> = depths.iter().map(u64::to_string).collect();
            h.graph(&model.graph.graph, &g)
                .add("policy", &policy)
                .add("mu", &m)
                .add("window", format!("[{from}, {to})"))
                .add("depths", depth_list.join(","))
                .add("parity", format!("{parity:?}").to_lowercase())
                .add("seed", seed);
            let w = biinfinite_window(&g, &policy, &m, *from, *to, depths, parity, *seed)?;
            h.add("stabilized_from", w.stabilized_from);
            if plot {
                body = arc_plot_data(&w.edges);
            } else {
                for e in &w.edges {
                    let _ = writeln!(body, "({}, {}) {}-{}", e.t_i, e.t_j, e.class_i, e.class_j);
                }
            }
            h
        }
        Command::ReverseCheck {
            graph,
            word,
            policy,
            samples,
            mu,
            seed,
        } => {
            let g = load_graph(&graph.graph)?;
            let mut h = Header::new("reverse-check");
            h.graph(&graph.graph, &g);
            if let Some(wtext) = word {
                let p = Policy::parse(&g, policy)?;
                let z = parse_word(&g, wtext)?;
                h.add("word", &z).add("policy", &p);
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let trace = run_word(&g, &p, &Word::new(), &z, None, &mut rng)?;
                let ok = fcfm_reverse_check(&g, &trace)?;
                let _ = writeln!(body, "reverse_fcfm = {ok}");
                violated = !ok;
            } else if let Some(n) = samples {
                let s = need_seed(*seed, "--samples")?;
                let m = parse_mu(
                    &g,
                    mu.as_deref()
                        .ok_or_else(|| Failure::Usage("--samples needs --mu".into()))?,
                )?;
                h.add("samples", n).add("mu", &m).add("seed", s);
                let fcfm = Policy::fcfm();
                let (mut checked, mut passed, mut k) = (0usize, 0usize, 0u64);
                while checked < *n {
                    let run = simulate_with_construction_points(&g, &fcfm, &m, &Word::new(), 2_000, s.wrapping_add(k))?;
                    k += 1;
                    if run.cps.len() < 2 && k > 1000 {
                        return Err(Failure::Other("no construction points; is the model stable?".into()));
                    }
                    for (lo, hi) in run.blocks() {
                        if checked == *n {
                            break;
                        }
                        checked += 1;
                        passed += usize::from(fcfm_reverse_check(&g, &run.block_trace(lo, hi))?);
                    }
                }
                let _ = writeln!(body, "blocks = {checked}");
                let _ = writeln!(body, "reverse_fcfm = {passed}/{checked}");
                violated = passed != checked;
            } else {
                return Err(Failure::Usage("give --word or --samples".into()));
            }
            h
        }
    };
    finish(cli, header, body, violated)
}

fn finish(cli: &Cli, mut header: Header, body: String, violated: bool) -> CliResult<Output> {
    if let Some(w) = cli.workers {
        header.add("workers", w);
    }
    let text = format!("{}{body}", header.render());
    if let Some(path) = &cli.out {
        std::fs::write(path, &text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(Output { text, violated })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        // ignore failure if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(out) => {
            if cli.out.is_none() {
                print!("{}", out.text);
            } else {
                // keep the verdict visible when the report goes to a file
                for line in out
                    .text
                    .lines()
                    .filter(|l| l.starts_with("verdict") || l.starts_with("tv"))
                {
                    println!("{line}");
                }
            }
            if out.violated {
                ExitCode::from(EXIT_VIOLATED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Io(m) => (EXIT_IO, m),
                Failure::Violated(m) => (EXIT_VIOLATED, m),
                Failure::Other(m) => (1, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
