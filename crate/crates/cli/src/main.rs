//! `tinystix` command-line tool. Payload bytes go to standard output; all
//! human-readable text goes to standard error. Exit code 0 on success, 1 on
//! domain errors, 2 on usage errors.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use uuid::Uuid;

use tinystix_core::{bench, codec, stix, Dictionary, TinyStixPayload};
use tinystix_cose::{EncryptionKey, KeyStore, ProtectedPayload, SigningKey};
use tinystix_exchange::{
    CoapClient, CoapServer, ExchangeState, FilterSpec, ServerPolicy, Transport, UdpTransport,
};
use tinystix_ingest::{load_attack_corpus, load_misp_feed, CorpusSnapshot};

#[derive(Parser)]
#[command(
    name = "tinystix",
    version,
    about = "Compact STIX 2.1 threat intelligence tooling"
)]
struct Cli {
    /// Dictionary file (CBOR); defaults to the built-in STIX 2.1 version-1
    /// dictionary
    #[arg(long, global = true, env = "TINYSTIX_DICT")]
    dict: Option<PathBuf>,
    /// JSON key store for sign/verify/encrypt/decrypt
    #[arg(long, global = true, env = "TINYSTIX_KEYS")]
    keys: Option<PathBuf>,
    /// Increase log verbosity (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvertTarget {
    Tiny,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportKind {
    Udp,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus name: enterprise, ics, mobile, or circl
    #[arg(long)]
    corpus: Vec<String>,
    /// Directory holding fetched corpora
    #[arg(long, default_value = "data/corpora")]
    data_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between STIX JSON and tinySTIX bytes (stdin to stdout)
    Convert {
        #[arg(long, value_enum)]
        to: ConvertTarget,
    },
    /// Validate a STIX object or bundle read from stdin
    Validate,
    /// Generate a signing and an encryption key into the key store
    Keygen {
        /// Key identifier for the new keys
        #[arg(long, default_value = "default")]
        kid: String,
    },
    /// Wrap stdin bytes in a COSE signature
    Sign {
        /// Signing key id; defaults to the only signing key in the store
        #[arg(long)]
        kid: Option<String>,
    },
    /// Verify a COSE-signed payload from stdin; inner bytes to stdout
    Verify,
    /// Encrypt stdin bytes for a symmetric key
    Encrypt {
        #[arg(long)]
        kid: Option<String>,
    },
    /// Decrypt a COSE-encrypted payload from stdin; plaintext to stdout
    Decrypt,
    /// Run the CoAP exchange server (collections and channels)
    Serve {
        #[arg(long, default_value = "127.0.0.1:5683")]
        bind: String,
        #[arg(long, value_enum, default_value = "udp")]
        transport: TransportKind,
        /// Collections to create at startup (UUIDs, repeatable)
        #[arg(long)]
        collection: Vec<Uuid>,
        /// Channels to create at startup (repeatable)
        #[arg(long)]
        channel: Vec<String>,
        /// Reject unsigned payloads
        #[arg(long)]
        require_signed: bool,
    },
    /// Publish stdin bytes on a channel
    Publish {
        #[arg(long)]
        server: String,
        #[arg(long)]
        topic: String,
    },
    /// Subscribe to a channel; received payloads stream to stdout as
    /// concatenated CBOR items
    Subscribe {
        #[arg(long)]
        server: String,
        #[arg(long)]
        topic: String,
        /// Exit after this many notifications
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Per-notification wait in seconds
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
    /// Query a collection; matching payloads stream to stdout
    Get {
        #[arg(long)]
        server: String,
        #[arg(long)]
        collection: Uuid,
        #[arg(long = "type")]
        object_type: Option<String>,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        added_after: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Load a corpus, report per-type counts as CSV, optionally cache it
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Write the preprocessed snapshot cache here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure size reductions over corpora and print the report
    Benchmark {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "aggregate")]
        mode: String,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
    },
    /// Emit the built-in dictionary as CBOR
    BuildDictionary {
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn read_stdin() -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    std::io::stdin()
        .read_to_end(&mut buf)
        .context("reading stdin")?;
    Ok(buf)
}

fn write_stdout(bytes: &[u8]) -> Result<()> {
    std::io::stdout().write_all(bytes).context("writing stdout")
}

fn load_dictionary(path: &Option<PathBuf>) -> Result<Dictionary> {
    match path {
        Some(p) => {
            Dictionary::load(p).with_context(|| format!("loading dictionary {}", p.display()))
        }
        None => Ok(Dictionary::stix21_v1()),
    }
}

fn load_keys(path: &Option<PathBuf>) -> Result<(KeyStore, Vec<SigningKey>)> {
    let path = path
        .as_ref()
        .ok_or_else(|| anyhow!("this subcommand needs --keys (or TINYSTIX_KEYS)"))?;
    KeyStore::load(path).with_context(|| format!("loading key store {}", path.display()))
}

fn load_corpus(name: &str, data_dir: &Path) -> Result<CorpusSnapshot> {
    match name {
        "enterprise" | "ics" | "mobile" => {
            let path = data_dir.join(format!("{name}-attack.json"));
            Ok(load_attack_corpus(&path, name)?)
        }
        "circl" => Ok(load_misp_feed(data_dir.join("circl"))?),
        other => bail!("unknown corpus `{other}` (expected enterprise, ics, mobile, circl)"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert { to } => {
            let dict = load_dictionary(&cli.dict)?;
            let input = read_stdin()?;
            match to {
                ConvertTarget::Tiny => {
                    let text = std::str::from_utf8(&input).context("input is not UTF-8")?;
                    let object = stix::parse_object(text)?;
                    write_stdout(&codec::to_tinystix(&object, &dict).to_bytes())?;
                }
                ConvertTarget::Json => {
                    let payload = TinyStixPayload::from_bytes(&input)?;
                    let object = codec::from_tinystix(&payload, &dict)?;
                    write_stdout(&stix::canonical_json(&object))?;
                }
            }
        }
        Command::Validate => {
            let input = read_stdin()?;
            let text = std::str::from_utf8(&input).context("input is not UTF-8")?;
            let value: serde_json::Value = serde_json::from_str(text).context("parsing JSON")?;
            let is_bundle = value.get("type").and_then(|t| t.as_str()) == Some("bundle");
            if is_bundle {
                let bundle = stix::bundle_from_value(value)?;
                eprintln!("valid bundle with {} objects", bundle.objects.len());
            } else {
                let object = stix::from_value(value)?;
                eprintln!("valid {} object {}", object.object_type(), object.id());
            }
        }
        Command::Keygen { kid } => {
            let path = cli
                .keys
                .as_ref()
                .ok_or_else(|| anyhow!("--keys is required for keygen"))?;
            let signer = SigningKey::generate(kid.clone().into_bytes());
            let symmetric = EncryptionKey::generate(format!("{kid}-enc").into_bytes());
            tinystix_cose::save_keys(path, &[signer], &[symmetric])?;
            eprintln!(
                "wrote signing key `{kid}` and encryption key `{kid}-enc` to {}",
                path.display()
            );
        }
        Command::Sign { kid } => {
            let (_, signers) = load_keys(&cli.keys)?;
            let signer = match kid {
                Some(kid) => signers
                    .into_iter()
                    .find(|s| s.key_id() == kid.as_bytes())
                    .ok_or_else(|| anyhow!("no signing key `{kid}` in store"))?,
                None => signers
                    .into_iter()
                    .next()
                    .ok_or_else(|| anyhow!("key store holds no signing key"))?,
            };
            let payload = read_stdin()?;
            write_stdout(&tinystix_cose::sign_bytes(&payload, &signer).to_bytes()?)?;
        }
        Command::Verify => {
            let (store, _) = load_keys(&cli.keys)?;
            let protected = ProtectedPayload::from_bytes(&read_stdin()?)?;
            let inner = tinystix_cose::verify_bytes(&protected, &store)?;
            eprintln!(
                "signature valid (kid {})",
                String::from_utf8_lossy(protected.key_id())
            );
            write_stdout(&inner)?;
        }
        Command::Encrypt { kid } => {
            let (store, _) = load_keys(&cli.keys)?;
            let key = match &kid {
                Some(kid) => store
                    .symmetric(kid.as_bytes())
                    .ok_or_else(|| anyhow!("no symmetric key `{kid}` in store"))?,
                None => store
                    .symmetric_keys()
                    .next()
                    .ok_or_else(|| anyhow!("key store holds no symmetric key"))?,
            };
            write_stdout(&tinystix_cose::encrypt_bytes(&read_stdin()?, key).to_bytes()?)?;
        }
        Command::Decrypt => {
            let (store, _) = load_keys(&cli.keys)?;
            let protected = ProtectedPayload::from_bytes(&read_stdin()?)?;
            write_stdout(&tinystix_cose::decrypt_bytes(&protected, &store)?)?;
        }
        Command::Serve {
            bind,
            transport: TransportKind::Udp,
            collection,
            channel,
            require_signed,
        } => {
            let dict = load_dictionary(&cli.dict)?;
            let keys = match &cli.keys {
                Some(_) => load_keys(&cli.keys)?.0,
                None => KeyStore::new(),
            };
            let state = Arc::new(ExchangeState::new(
                Arc::new(dict),
                Arc::new(keys),
                ServerPolicy {
                    require_signed,
                    ..Default::default()
                },
            ));
            for id in collection {
                state.create_collection(id, &id.to_string());
            }
            for topic in channel {
                state.create_channel(&topic);
            }
            let transport = Arc::new(UdpTransport::bind(&bind).map_err(|e| anyhow!("{e}"))?);
            eprintln!("serving CoAP on {}", transport.local_addr());
            let server = CoapServer::new(state, transport);
            server.run().map_err(|e| anyhow!("{e}"))?;
        }
        Command::Publish { server, topic } => {
            let mut client = udp_client(&server)?;
            client
                .publish(&topic, &read_stdin()?)
                .map_err(|e| anyhow!("{e}"))?;
            eprintln!("published on {topic}");
        }
        Command::Subscribe {
            server,
            topic,
            count,
            timeout,
        } => {
            let mut client = udp_client(&server)?;
            let sub = client.subscribe(&topic).map_err(|e| anyhow!("{e}"))?;
            let mut received = 0;
            while received < count {
                match client
                    .next_notification(&sub, std::time::Duration::from_secs(timeout))
                    .map_err(|e| anyhow!("{e}"))?
                {
                    Some(payload) => {
                        write_stdout(&payload)?;
                        received += 1;
                    }
                    None => bail!("timed out after {received} of {count} notifications"),
                }
            }
            let _ = client.unsubscribe(&sub);
        }
        Command::Get {
            server,
            collection,
            object_type,
            id,
            added_after,
            limit,
        } => {
            let mut client = udp_client(&server)?;
            let filter = FilterSpec {
                match_type: object_type,
                match_id: id.map(|s| s.parse()).transpose()?,
                added_after: added_after
                    .map(|s| s.parse().context("parsing --added-after as RFC 3339"))
                    .transpose()?,
                page_limit: limit,
                page_token: None,
            };
            let objects = client
                .get_all_objects(collection, &filter)
                .map_err(|e| anyhow!("{e}"))?;
            eprintln!("{} matching objects", objects.len());
            for payload in objects {
                write_stdout(&payload)?;
            }
        }
        Command::Ingest { corpus, out } => {
            let names = corpus_names(&corpus)?;
            for name in names {
                let snapshot = load_corpus(&name, &corpus.data_dir)?;
                for warning in &snapshot.warnings {
                    eprintln!("warning: {warning}");
                }
                let mut stdout = std::io::stdout();
                writeln!(stdout, "dataset,type,count")?;
                for (object_type, count) in snapshot.type_counts() {
                    writeln!(stdout, "{},{object_type},{count}", snapshot.name)?;
                }
                if let Some(out) = &out {
                    snapshot.save(out)?;
                    eprintln!(
                        "cached {} objects to {}",
                        snapshot.objects.len(),
                        out.display()
                    );
                }
            }
        }
        Command::Benchmark {
            corpus,
            mode,
            format,
        } => {
            let dict = load_dictionary(&cli.dict)?;
            let mode: bench::AggregationMode = mode.parse().map_err(|e: String| anyhow!(e))?;
            let mut report = bench::ReductionReport::default();
            for name in corpus_names(&corpus)? {
                let snapshot = load_corpus(&name, &corpus.data_dir)?;
                let triples: Vec<_> = snapshot
                    .objects
                    .iter()
                    .map(|o| bench::measure_object(o, &dict))
                    .collect();
                report
                    .datasets
                    .push(bench::aggregate(&name, &triples, mode)?);
                report
                    .provenance
                    .push((name.clone(), snapshot.source_version.clone()));
            }
            let rendered = match format {
                OutputFormat::Table => bench::emit_text(&report),
                OutputFormat::Csv => bench::emit_csv(&report),
            };
            write_stdout(rendered.as_bytes())?;
        }
        Command::BuildDictionary { out } => {
            let dict = load_dictionary(&cli.dict)?;
            let bytes = dict.to_cbor_bytes();
            match out {
                Some(path) => {
                    std::fs::write(&path, &bytes)
                        .with_context(|| format!("writing {}", path.display()))?;
                    eprintln!(
                        "wrote dictionary version {} ({} bytes)",
                        dict.version_id(),
                        bytes.len()
                    );
                }
                None => write_stdout(&bytes)?,
            }
        }
    }
    Ok(())
}

fn corpus_names(args: &CorpusArgs) -> Result<Vec<String>> {
    if args.corpus.is_empty() {
        bail!("at least one --corpus is required");
    }
    if args.corpus.iter().any(|c| c == "all") {
        return Ok(["enterprise", "ics", "mobile", "circl"]
            .iter()
            .map(|s| s.to_string())
            .collect());
    }
    Ok(args.corpus.clone())
}

fn udp_client(server: &str) -> Result<CoapClient> {
    let bind = if server.starts_with('[') || server.contains("]:") {
        "[::]:0"
    } else {
        "0.0.0.0:0"
    };
    let transport = UdpTransport::bind(bind).map_err(|e| anyhow!("{e}"))?;
    Ok(CoapClient::new(Arc::new(transport), server))
}
