//! The `stackner` command line.
//!
//! Failures print one line `error kind=<Kind> message=<text>` on stderr.
//! Usage errors exit with 2, runtime errors with 1.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::bpe::{self, learn_bpe, segment, word_frequencies, MergeTable, Pooling};
use crate::charlm::{train_char_lm, CharLM, CharLmConfig, Direction, PoolOp};
use crate::container::Container;
use crate::corpus::{
    convert_document, export_document, read_conll, read_conll_with_offsets, tokenize, write_conll, write_offsets,
    OverlapPolicy, TaggedSentence,
};
use crate::embeddings::{
    load_ngram_index, load_word2vec, save_ngram_index, save_word2vec, train_skipgram, train_structured_skipgram,
    train_subword_skipgram, SkipGramConfig, Variant,
};
use crate::eos::{train_eos, EosConfig, EosModel, RuleSplitter, SentenceSplitter};
use crate::error::{read_to_string, write_string, Error, Result};
use crate::eval::{evaluate_with, mentions_from_ann, mentions_from_sentences, report_table, EntityMention, MatchMode};
use crate::tagger::{
    hpo, train, BpeEmbedder, CseEmbedder, EmbeddingStack, PceEmbedder, SearchSpace, StaticEmbedder, TaggerConfig,
    TaggerModel, TokenEmbedder, TrainConfig,
};

#[derive(Parser, Debug)]
#[command(name = "stackner", version, about = "Stacked-embedding BiLSTM-CRF NER for clinical text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// brat .txt/.ann pairs → per-document .conll and .offsets files
    Convert {
        #[arg(long)]
        txt_dir: PathBuf,
        #[arg(long)]
        ann_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sentence model from `train-eos`; rule-based splitting otherwise.
        #[arg(long)]
        eos_model: Option<PathBuf>,
        /// Drop the shorter of two overlapping entities instead of failing.
        #[arg(long)]
        keep_longest: bool,
    },
    /// CoNLL + offsets → brat .ann
    ExportBrat {
        #[arg(long)]
        conll: PathBuf,
        #[arg(long)]
        offsets: PathBuf,
        #[arg(long)]
        out_ann: PathBuf,
        /// Original text, for exact surfaces.
        #[arg(long)]
        txt: Option<PathBuf>,
    },
    /// Train the sentence-boundary classifier from one sentence per line
    TrainEos {
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Split text into one sentence per line
    Split {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train word embeddings (or BPE piece embeddings with --merges)
    TrainEmbed(TrainEmbedArgs),
    /// Learn BPE merges
    LearnBpe {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment the words of a file with learned merges
    Segment {
        #[arg(long)]
        merges: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a character language model
    TrainLm {
        #[arg(long, value_parser = ["fwd", "bwd"])]
        direction: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 128)]
        hidden: usize,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        embed_dim: usize,
        #[arg(long, default_value_t = 50)]
        seq_len: usize,
        #[arg(long, default_value_t = 1.0)]
        lr: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the tagger
    Train(TrainArgs),
    /// Tag a .txt document or a .conll file
    Tag {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_ann: PathBuf,
        #[arg(long)]
        eos_model: Option<PathBuf>,
    },
    /// Strict entity-level evaluation of two .ann (or .conll + .offsets) directories
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// key=value summary file
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Count overlapping same-label mentions as matches.
        #[arg(long)]
        relaxed: bool,
        #[arg(long, default_value = "pred")]
        name: String,
    },
    /// Hyperparameter search
    Hpo {
        /// JSON search space; `preset:lr-batch` or `preset:full` for the built-in spaces.
        #[arg(long)]
        space: String,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        stack: String,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        no_reproject: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct TrainEmbedArgs {
    #[arg(long, value_parser = ["plain", "structured", "subword"], default_value = "plain")]
    variant: String,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    buckets: Option<usize>,
    /// Train BPE piece vectors over the segmented corpus.
    #[arg(long)]
    merges: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Comma-separated embedders, e.g. `pce=f.lm+b.lm@mean,static=w.vec`.
    #[arg(long)]
    stack: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long)]
    no_reproject: bool,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0.5)]
    anneal: f64,
    #[arg(long, default_value_t = 3)]
    patience: usize,
    #[arg(long, default_value_t = 150)]
    max_epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    min_lr: f64,
    #[arg(long)]
    no_shuffle: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Parses and runs `argv` (program name first); returns the exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                kind => {
                    let name = match kind {
                        ErrorKind::InvalidSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                            "UnknownSubcommand"
                        }
                        _ => "InvalidFlag",
                    };
                    let text = e.to_string();
                    let message: Vec<&str> = text
                        .lines()
                        .map(str::trim)
                        .take_while(|l| !l.starts_with("Usage:"))
                        .filter(|l| !l.is_empty())
                        .collect();
                    eprintln!("error kind={name} message={}", message.join(" ").trim_start_matches("error: "));
                    2
                }
            };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error kind={} message={}", e.kind(), e.to_string().replace('\n', " "));
            1
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Convert {
            txt_dir,
            ann_dir,
            out,
            eos_model,
            keep_longest,
        } => cmd_convert(&txt_dir, &ann_dir, &out, eos_model.as_deref(), keep_longest),
        Command::ExportBrat {
            conll,
            offsets,
            out_ann,
            txt,
        } => {
            let sentences = read_conll_with_offsets(&read_to_string(&conll)?, &read_to_string(&offsets)?)?;
            let text = txt.as_deref().map(read_to_string).transpose()?;
            write_string(&out_ann, &export_document(&sentences, text.as_deref()))
        }
        Command::TrainEos {
            sentences,
            out,
            window,
            epochs,
            seed,
        } => {
            let lines: Vec<String> = read_lines(&sentences)?;
            let config = EosConfig {
                window,
                epochs,
                seed,
                ..EosConfig::default()
            };
            let (model, report) = train_eos(&lines, &config)?;
            println!("held_out_accuracy={:.4}", report.held_out_accuracy);
            model.to_container().write(&out)
        }
        Command::Split { model, input, out } => {
            let model = EosModel::from_container(&Container::read(&model)?)?;
            let text = read_to_string(&input)?;
            let chars: Vec<char> = text.chars().collect();
            let mut lines = String::new();
            for (s, e) in model.split(&text) {
                let sentence: String = chars[s..e].iter().map(|&c| if c == '\n' { ' ' } else { c }).collect();
                lines.push_str(&sentence);
                lines.push('\n');
            }
            write_string(&out, &lines)
        }
        Command::TrainEmbed(args) => cmd_train_embed(&args),
        Command::LearnBpe {
            corpus,
            vocab_size,
            out,
        } => {
            let tokens = corpus_tokens(&corpus)?;
            let freq = word_frequencies(tokens.iter().flatten().map(String::as_str));
            let table = learn_bpe(&freq, vocab_size)?;
            println!("merges={}", table.len());
            write_string(&out, &table.to_text())
        }
        Command::Segment { merges, input, out } => {
            let table = MergeTable::from_text(&read_to_string(&merges)?)?;
            let mut result = String::new();
            for line in read_to_string(&input)?.lines() {
                let pieces: Vec<String> = tokenize(line)
                    .iter()
                    .map(|t| segment(&t.surface, &table).join(" "))
                    .collect();
                result.push_str(&pieces.join(" "));
                result.push('\n');
            }
            match out {
                Some(p) => write_string(&p, &result),
                None => {
                    print!("{result}");
                    Ok(())
                }
            }
        }
        Command::TrainLm {
            direction,
            corpus,
            hidden,
            epochs,
            embed_dim,
            seq_len,
            lr,
            seed,
            out,
        } => {
            let direction = Direction::parse(&direction).expect("validated by clap");
            let config = CharLmConfig {
                hidden,
                embed_dim,
                seq_len,
                lr,
                epochs,
                seed,
                ..CharLmConfig::default()
            };
            let (lm, report) = train_char_lm(&read_to_string(&corpus)?, &config, direction)?;
            println!("perplexity={:.4}", report.final_perplexity);
            lm.to_container().write(&out)
        }
        Command::Train(args) => cmd_train(&args),
        Command::Tag {
            model,
            input,
            out_ann,
            eos_model,
        } => {
            let mut model = TaggerModel::load(&model)?;
            let content = read_to_string(&input)?;
            let ann = if has_extension(&input, "conll") {
                let sentences = read_tagged(&input, &content)?;
                let tagged = model.tag_sentences(&sentences)?;
                let txt = input.with_extension("txt");
                let text = txt.exists().then(|| read_to_string(&txt)).transpose()?;
                export_document(&tagged, text.as_deref())
            } else {
                let splitter = load_splitter(eos_model.as_deref())?;
                model.tag_text(&content, splitter.as_ref())?.1
            };
            write_string(&out_ann, &ann)
        }
        Command::Eval {
            gold,
            pred,
            summary,
            relaxed,
            name,
        } => {
            let mode = if relaxed { MatchMode::Overlap } else { MatchMode::Strict };
            let report = evaluate_with(&read_mentions(&gold)?, &read_mentions(&pred)?, mode)?;
            print!("{}", report_table(&[(name, report.clone())]));
            println!("F1 {}", crate::eval::format_pct(report.f1()));
            if let Some(p) = summary {
                write_string(&p, &report.summary())?;
            }
            Ok(())
        }
        Command::Hpo {
            space,
            budget,
            train: train_path,
            dev,
            stack,
            log,
            no_reproject,
            seed,
        } => {
            let mut space = match space.as_str() {
                "preset:lr-batch" => SearchSpace::learning_rate_batch(),
                "preset:full" => SearchSpace::full(),
                path => SearchSpace::from_json(&read_to_string(Path::new(path))?)?,
            };
            if let Some(b) = budget {
                space.budget = b;
            }
            let train_set = read_tagged(&train_path, &read_to_string(&train_path)?)?;
            let dev_set = read_tagged(&dev, &read_to_string(&dev)?)?;
            let mut stack = parse_stack(&stack)?;
            let base = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            let result = hpo(&space, &train_set, &dev_set, &mut stack, &base, !no_reproject)?;
            let mut lines = String::from("trial\tlr\tbatch\thidden\tdropout\tlayers\tdev_f1\n");
            for t in &result.trials {
                let c = &t.config;
                lines.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{:.4}\t{}\t{:.2}\n",
                    t.trial, c.lr, c.batch, c.hidden, c.dropout, c.layers, t.dev_f1
                ));
            }
            print!("{lines}");
            let b = &result.best;
            println!(
                "best lr={} batch={} hidden={} dropout={:.4} layers={} dev_f1={:.2}",
                b.lr, b.batch, b.hidden, b.dropout, b.layers, result.best_dev_f1
            );
            match log {
                Some(p) => write_string(&p, &lines),
                None => Ok(()),
            }
        }
    }
}

fn has_extension(p: &Path, ext: &str) -> bool {
    p.extension().and_then(|e| e.to_str()) == Some(ext)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn corpus_tokens(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_lines(path)?
        .iter()
        .map(|l| tokenize(l).into_iter().map(|t| t.surface).collect())
        .collect())
}

/// CoNLL with its `.offsets` sidecar when one sits next to it.
fn read_tagged(path: &Path, content: &str) -> Result<Vec<TaggedSentence>> {
    let offsets = path.with_extension("offsets");
    if offsets.exists() {
        read_conll_with_offsets(content, &read_to_string(&offsets)?)
    } else {
        read_conll(content)
    }
}

fn sorted_entries(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| has_extension(p, ext))
        .collect();
    out.sort();
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

fn read_mentions(dir: &Path) -> Result<Vec<EntityMention>> {
    let mut out = Vec::new();
    for p in sorted_entries(dir, "ann")? {
        out.extend(mentions_from_ann(&stem(&p), &read_to_string(&p)?)?);
    }
    for p in sorted_entries(dir, "conll")? {
        let sentences = read_tagged(&p, &read_to_string(&p)?)?;
        out.extend(mentions_from_sentences(&stem(&p), &sentences));
    }
    Ok(out)
}

fn load_splitter(path: Option<&Path>) -> Result<Box<dyn SentenceSplitter>> {
    Ok(match path {
        Some(p) => Box::new(EosModel::from_container(&Container::read(p)?)?),
        None => Box::new(RuleSplitter::default()),
    })
}

fn cmd_convert(txt_dir: &Path, ann_dir: &Path, out: &Path, eos: Option<&Path>, keep_longest: bool) -> Result<()> {
    let splitter = load_splitter(eos)?;
    let policy = if keep_longest {
        OverlapPolicy::KeepLongest
    } else {
        OverlapPolicy::Reject
    };
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let (mut docs, mut entities, mut warnings) = (0, 0, 0);
    for txt in sorted_entries(txt_dir, "txt")? {
        let id = stem(&txt);
        let ann_path = ann_dir.join(format!("{id}.ann"));
        let ann = if ann_path.exists() {
            read_to_string(&ann_path)?
        } else {
            warn!("{id}: no annotation file, treating as unannotated");
            String::new()
        };
        let conv = convert_document(&id, &read_to_string(&txt)?, &ann, splitter.as_ref(), policy)?;
        for w in &conv.warnings {
            warn!("{}: {} {}..{}: {}", w.doc_id, w.ann_id, w.entity_start, w.entity_end, w.reason);
        }
        let sentences = &conv.document.sentences;
        write_string(&out.join(format!("{id}.conll")), &write_conll(sentences))?;
        write_string(&out.join(format!("{id}.offsets")), &write_offsets(sentences))?;
        docs += 1;
        entities += conv.document.entities.len();
        warnings += conv.warnings.len();
    }
    println!("documents={docs} entities={entities} warnings={warnings}");
    Ok(())
}

fn cmd_train_embed(a: &TrainEmbedArgs) -> Result<()> {
    let corpus = corpus_tokens(&a.corpus)?;
    let variant = Variant::parse(&a.variant).expect("validated by clap");
    let base = if variant == Variant::Subword {
        SkipGramConfig::fasttext_defaults()
    } else {
        SkipGramConfig::default()
    };
    let config = SkipGramConfig {
        dim: a.dim,
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        lr: a.lr.unwrap_or(base.lr),
        min_count: a.min_count,
        seed: a.seed,
        buckets: a.buckets,
        ..base
    };
    if let Some(m) = &a.merges {
        let merges = MergeTable::from_text(&read_to_string(m)?)?;
        let table = bpe::train_piece_embeddings(&corpus, &merges, &config)?;
        println!("pieces={} dim={}", table.pieces().len(), table.dim());
        return write_string(&a.out, &bpe::save_pieces(&table));
    }
    let model = match variant {
        Variant::Plain => train_skipgram(&corpus, &config)?,
        Variant::Structured => train_structured_skipgram(&corpus, &config)?,
        Variant::Subword => train_subword_skipgram(&corpus, &config)?,
    };
    let table = &model.table;
    println!("words={} dim={}", table.vocab.len(), table.dim());
    write_string(&a.out, &save_word2vec(table))?;
    if let Some(index) = &table.subword {
        let (sidecar, vectors) = save_ngram_index(index);
        write_string(&sidecar_path(&a.out, "ngrams"), &sidecar)?;
        write_string(&sidecar_path(&a.out, "ngrams.vec"), &vectors)?;
    }
    let meta: Vec<String> = table.metadata.iter().map(|(k, v)| format!("{k}={v}")).collect();
    info!("metadata {}", meta.join(" "));
    Ok(())
}

fn sidecar_path(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn load_lm(path: &str) -> Result<CharLM> {
    CharLM::from_container(&Container::read(Path::new(path))?)
}

fn split_pair<'a>(spec: &'a str, item: &str) -> Result<(&'a str, &'a str)> {
    spec.split_once('+')
        .ok_or_else(|| Error::InvalidConfig(format!("stack item {item:?} needs two paths joined by '+'")))
}

/// Parses a stack spec: comma-separated `kind=args` items with kinds
/// `cse=FWD+BWD`, `pce=FWD+BWD[@min|max|mean]`, `static=VEC`,
/// `subword=VEC` (reads `VEC.ngrams` and `VEC.ngrams.vec`) and
/// `bpe=MERGES+PIECES[@mean|first-last]`.
pub fn parse_stack(spec: &str) -> Result<EmbeddingStack> {
    let mut stack = EmbeddingStack::default();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (kind, rest) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("stack item {item:?} is not kind=args")))?;
        let (args, option) = match rest.rsplit_once('@') {
            Some((a, o)) => (a, Some(o)),
            None => (rest, None),
        };
        let e: Box<dyn TokenEmbedder> = match kind {
            "cse" => {
                let (f, b) = split_pair(args, item)?;
                Box::new(CseEmbedder {
                    forward: load_lm(f)?,
                    backward: load_lm(b)?,
                })
            }
            "pce" => {
                let (f, b) = split_pair(args, item)?;
                let pool = PoolOp::parse(option.unwrap_or("mean"))
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown pooling in {item:?}")))?;
                Box::new(PceEmbedder::new(load_lm(f)?, load_lm(b)?, pool))
            }
            "static" | "subword" => {
                let path = Path::new(args);
                let variant = if kind == "subword" { Variant::Subword } else { Variant::Plain };
                let mut table = load_word2vec(&read_to_string(path)?, variant)?;
                if kind == "subword" {
                    let side = read_to_string(&sidecar_path(path, "ngrams"))?;
                    let vecs = read_to_string(&sidecar_path(path, "ngrams.vec"))?;
                    let d = SkipGramConfig::default();
                    table.subword = Some(load_ngram_index(&side, &vecs, d.n_min, d.n_max)?);
                }
                Box::new(StaticEmbedder { table })
            }
            "bpe" => {
                let (m, p) = split_pair(args, item)?;
                let pooling = Pooling::parse(option.unwrap_or("mean"))
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown pooling in {item:?}")))?;
                Box::new(BpeEmbedder {
                    merges: MergeTable::from_text(&read_to_string(Path::new(m))?)?,
                    table: bpe::load_pieces(&read_to_string(Path::new(p))?)?,
                    pooling,
                })
            }
            other => return Err(Error::InvalidConfig(format!("unknown embedder kind {other:?}"))),
        };
        stack.push(e);
    }
    if stack.is_empty() {
        return Err(Error::InvalidConfig("empty stack".into()));
    }
    Ok(stack)
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let train_set = read_tagged(&a.train, &read_to_string(&a.train)?)?;
    let dev_set = match &a.dev {
        Some(p) => read_tagged(p, &read_to_string(p)?)?,
        None => Vec::new(),
    };
    let mut stack = parse_stack(&a.stack)?;
    let tagger = TaggerConfig {
        hidden: a.hidden,
        layers: a.layers,
        dropout: a.dropout,
        reproject: !a.no_reproject,
    };
    let config = TrainConfig {
        lr: a.lr,
        batch: a.batch,
        anneal_factor: a.anneal,
        patience: a.patience,
        max_epochs: a.max_epochs,
        min_lr: a.min_lr,
        seed: a.seed,
        shuffle: !a.no_shuffle,
        clip: Some(5.0),
    };
    let outcome = train(&train_set, &dev_set, &mut stack, &tagger, &config)?;
    println!(
        "epochs={} best_epoch={} best_dev_f1={:.2}",
        outcome.history.epochs.len(),
        outcome.history.best_epoch,
        outcome.history.best_dev_f1
    );
    TaggerModel::new(stack, outcome).save(&a.out)
}
