use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::Duration;

use confex_core::acquire::{
    aggregate_multivalue, fetch_kg, join_attributes_with, AggSpec, AggTag, AttributeTable, FetchOptions,
    FetchStatus, HttpClient, KgCache, LinkMap, Provenance,
};
use confex_core::dataset::{ingest_csv, IngestOptions, KindHint};
use confex_core::estimator::CiTestConfig;
use confex_core::mcimr::{McimrConfig, WeightPolicy};
use confex_core::pipeline::{explain, ExplainConfig, ExplainReport, Profile};
use confex_core::prune::{prune_offline, prune_online, PruneConfig, PruneReport};
use confex_core::subgroups::{top_k_unexplained, Subgroup, SubgroupConfig};
use confex_core::{ColumnId, Error, QuerySpec, Result, Table};
use serde::{Deserialize, Serialize};

use crate::report::{dataset_digest, digest, emit, Header};
use crate::{AcquireArgs, CiArgs, ExplainArgs, InputArgs, PruneArgs, SubgroupsArgs, Weighting};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn ingest_options(input: &InputArgs) -> IngestOptions {
    let opts = IngestOptions {
        delimiter: input.delimiter as u8,
        bins: input.bins,
        ..Default::default()
    };
    input
        .categorical
        .iter()
        .fold(opts, |o, c| o.hint(c.clone(), KindHint::Categorical))
}

/// Ingests the data file and left-joins every attribute table on its key.
fn load(input: &InputArgs, profile: &mut Profile) -> Result<Table> {
    profile.time("ingest", || {
        let mut table = ingest_csv(&input.data, &ingest_options(input))?;
        for path in &input.attrs {
            let attrs = AttributeTable::read_csv(path, input.delimiter as u8)?;
            table = join_attributes_with(table, &attrs, &attrs.key_column, input.bins)?;
        }
        Ok(table)
    })
}

fn read_query(path: &Path) -> Result<QuerySpec> {
    QuerySpec::from_json(&read(path)?)
}

impl CiArgs {
    fn config(&self) -> CiTestConfig {
        CiTestConfig {
            epsilon: self.epsilon,
            permutations: self.permutations,
            alpha: self.alpha,
            seed: self.seed,
        }
    }
}

#[derive(Serialize)]
struct ExplainOutput<'a> {
    header: Header,
    #[serde(flatten)]
    report: &'a ExplainReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<&'a Profile>,
}

pub fn explain_cmd(args: &ExplainArgs) -> Result<()> {
    let ci = args.ci.config();
    let config = ExplainConfig {
        prune: PruneConfig {
            ci,
            fd_epsilon: args.fd_epsilon,
            ..Default::default()
        },
        mcimr: McimrConfig {
            k: args.k,
            ci,
            weights: match args.weights {
                Weighting::Auto => WeightPolicy::Auto,
                Weighting::CompleteCase => WeightPolicy::CompleteCase,
            },
            ipw_predictors: args.ipw_predictors.clone(),
        },
        candidates: args.candidates.clone(),
    };
    config.validate()?;
    let query = read_query(&args.query)?;
    let (mut inputs, dataset_sha256) = dataset_digest(&args.input.data, &args.input.attrs)?;
    inputs.push(digest("query", &args.query)?);

    let mut profile = Profile::default();
    let table = load(&args.input, &mut profile)?;
    let report = explain(&table, &query, &config, &mut profile)?;
    if args.profile {
        for s in &profile.stages {
            eprintln!("profile {:<14} {:>10.1} ms", s.stage, s.millis);
        }
        eprintln!("profile {:<14} {:>10.1} ms", "total", profile.total_millis());
    }
    let out = ExplainOutput {
        header: Header::new(args.ci.seed, inputs, dataset_sha256, &config)?,
        report: &report,
        profile: args.profile.then_some(&profile),
    };
    emit(&out, args.out.as_deref())
}

#[derive(Deserialize)]
struct PriorHeader {
    dataset_sha256: String,
}

#[derive(Deserialize)]
struct PriorExplanation {
    selected: Vec<String>,
}

/// The parts of an `explain` report that `subgroups` consumes.
#[derive(Deserialize)]
struct PriorReport {
    header: PriorHeader,
    query: QuerySpec,
    explanation: PriorExplanation,
}

pub fn subgroups_cmd(args: &SubgroupsArgs) -> Result<()> {
    let prior: PriorReport = serde_json::from_str(&read(&args.explanation)?)?;
    let (_, dataset_sha256) = dataset_digest(&args.input.data, &args.input.attrs)?;
    if dataset_sha256 != prior.header.dataset_sha256 {
        return Err(Error::InvalidData(format!(
            "{} was computed on different data (dataset digest {} here, {} in the report)",
            args.explanation.display(),
            dataset_sha256,
            prior.header.dataset_sha256
        )));
    }
    let query = match &args.query {
        Some(p) => read_query(p)?,
        None => prior.query,
    };
    let table = load(&args.input, &mut Profile::default())?;
    let resolved = query.resolve(&table)?;
    let selected: Vec<ColumnId> = prior
        .explanation
        .selected
        .iter()
        .map(|s| table.id(s))
        .collect::<Result<_>>()?;
    let refinable = match &args.refinable {
        Some(r) => r.clone(),
        None => {
            let pool: Vec<ColumnId> = table
                .ids()
                .filter(|&c| !resolved.mentions(c) && !selected.contains(&c))
                .collect();
            prune_offline(&table, &pool, &PruneConfig::default())?.kept
        }
    };
    let config = SubgroupConfig {
        k: args.k,
        tau: args.tau,
        refinable,
        min_size: args.min_size,
    };
    let found = top_k_unexplained(&table, &resolved, &selected, &config)?;
    let out: Vec<Subgroup> = found.iter().map(|r| r.describe(&table)).collect();
    emit(&out, args.out.as_deref())
}

fn agg_spec(arg: Option<&str>) -> Result<AggSpec> {
    let Some(arg) = arg else {
        return Ok(AggSpec::uniform(AggTag::First));
    };
    let text = if arg.trim_start().starts_with('{') {
        arg.to_owned()
    } else {
        read(Path::new(arg))?
    };
    Ok(serde_json::from_str(&text)?)
}

pub fn acquire_cmd(args: &AcquireArgs) -> Result<()> {
    let spec = agg_spec(args.agg_spec.as_deref())?;
    let opts = IngestOptions {
        delimiter: args.delimiter as u8,
        ..Default::default()
    }
    .hint(args.key_column.clone(), KindHint::Categorical);
    let table = ingest_csv(&args.data, &opts)?;
    let key = table.column_by_name(&args.key_column)?;
    let labels: BTreeSet<&str> = (0..table.row_count()).filter_map(|r| key.value_label(r)).collect();
    let aliases = match &args.alias_file {
        Some(p) => LinkMap::read_aliases(p)?,
        None => BTreeMap::new(),
    };
    let prefix = (!args.no_prefix).then_some(args.prefix.as_str());
    let links = LinkMap::build(labels, &aliases, prefix);
    let cache = match &args.cache {
        Some(dir) => KgCache::new(dir),
        None => KgCache::from_env(),
    };
    let client = HttpClient::new(&args.endpoint, Duration::from_secs(args.timeout));
    let fetch = FetchOptions {
        hop: args.hops,
        offline: args.offline,
        concurrency: args.concurrency,
    };
    let outcome = fetch_kg(&links, &client, &cache, &fetch)?;
    let attrs = aggregate_multivalue(
        &outcome.raw,
        &spec,
        &args.key_column,
        Provenance::KgEndpoint {
            endpoint: args.endpoint.clone(),
        },
        args.hops,
    )?;
    let mut counts: BTreeMap<FetchStatus, usize> = BTreeMap::new();
    for d in &outcome.diagnostics {
        *counts.entry(d.status).or_default() += 1;
    }
    eprintln!(
        "acquired {} attributes for {} of {} labels {}",
        attrs.columns.len(),
        attrs.len(),
        links.links.len() + links.unmatched.len(),
        serde_json::to_string(&counts)?
    );
    if let Some(p) = &args.diagnostics {
        emit(&outcome.diagnostics, Some(p))?;
    }
    let file = fs::File::create(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    attrs.write_csv(file)
}

#[derive(Serialize)]
struct PruneOutput<'a> {
    header: Header,
    #[serde(flatten)]
    report: &'a PruneReport,
}

pub fn prune_cmd(args: &PruneArgs) -> Result<()> {
    let config = PruneConfig {
        max_missing_frac: args.max_missing,
        high_entropy_frac: args.high_entropy,
        fd_epsilon: args.fd_epsilon,
        ci: args.ci.config(),
    };
    config.validate()?;
    let query = read_query(&args.query)?;
    let (mut inputs, dataset_sha256) = dataset_digest(&args.input.data, &args.input.attrs)?;
    inputs.push(digest("query", &args.query)?);
    let table = load(&args.input, &mut Profile::default())?;
    let resolved = query.resolve(&table)?;
    let candidates: Vec<ColumnId> = table.ids().filter(|&c| !resolved.mentions(c)).collect();
    let mut report = prune_offline(&table, &candidates, &config)?;
    report.merge(prune_online(&table, &report.kept_ids(&table)?, &resolved, &config)?);
    let out = PruneOutput {
        header: Header::new(args.ci.seed, inputs, dataset_sha256, &config)?,
        report: &report,
    };
    emit(&out, args.out.as_deref())
}
