use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use imbagp::dataset::{load_csv, load_features, CsvFormat, Delimiter};
use imbagp::eval::{self, emit_table, metrics_row, write_summary_dir, write_sweep, Experiment};
use imbagp::fitness::classify_output;
use imbagp::{Data, Profile, Summary, Tree};

use crate::config::{CommonArgs, RunConfig};
use crate::PredictArgs;

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("--jobs: cannot start worker threads")
}

fn load_experiment(cfg: &RunConfig) -> Result<Experiment<f64>> {
    let profile = Profile::load(&cfg.dataset_profile)
        .with_context(|| format!("--dataset: {}", cfg.dataset_profile.display()))?;
    let mut exp = Experiment::from_profile(&profile)
        .with_context(|| format!("--dataset: {}", profile.path.display()))?;
    exp.fixed_split = cfg.fixed_split;
    Ok(exp)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn run(args: &CommonArgs) -> Result<()> {
    let cfg = RunConfig::resolve(args, None, "all")?;
    let exp = load_experiment(&cfg)?;
    let pool = thread_pool(cfg.jobs)?;

    let mut summaries: Vec<Summary> = Vec::with_capacity(cfg.fitness.len());
    for &kind in &cfg.fitness {
        eprintln!(
            "{}: {} x {} runs (population {}, generations {})",
            exp.name, kind, cfg.n_runs, cfg.params.population_size, cfg.params.generations
        );
        let summary = pool.install(|| exp.run_protocol(kind, &cfg.params, cfg.n_runs))?;
        let dir = if cfg.fitness.len() == 1 {
            cfg.output_dir.clone()
        } else {
            cfg.output_dir.join(kind.name())
        };
        write_summary_dir(&dir, &summary)?;
        summaries.push(summary);
    }

    let (csv, text) = emit_table(&summaries)?;
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;
    write_file(&cfg.output_dir.join("summary.csv"), &csv)?;
    write_file(&cfg.output_dir.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn sweep(args: &CommonArgs, sizes: Option<&str>) -> Result<()> {
    let cfg = RunConfig::resolve(args, sizes, "equal")?;
    if cfg.fitness.len() != 1 {
        bail!("--fitness: sweep takes a single fitness function");
    }
    let kind = cfg.fitness[0];
    let exp = load_experiment(&cfg)?;
    let pool = thread_pool(cfg.jobs)?;
    eprintln!(
        "{}: {} sweep over sizes {:?}, {} runs each, {} generations",
        exp.name, kind, cfg.sizes, cfg.n_runs, cfg.params.generations
    );
    let series = pool.install(|| exp.sweep(kind, &cfg.sizes, &cfg.params, cfg.n_runs))?;
    write_sweep(&cfg.output_dir, &series)?;
    println!("size,final_mean_best_fitness");
    for s in &series {
        println!("{},{}", s.population_size, s.final_mean());
    }
    Ok(())
}

fn load_tree(path: &Path) -> Result<Tree> {
    let text = fs::read_to_string(path).with_context(|| format!("--tree: {}", path.display()))?;
    text.trim()
        .parse::<Tree>()
        .with_context(|| format!("--tree: {}", path.display()))
}

fn check_width(tree: &Tree, width: usize) -> Result<()> {
    tree.check_features(width)
        .with_context(|| format!("tree does not fit data with {width} feature columns"))
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let tree = load_tree(&args.tree)?;

    let labelled: Option<Data> = if let Some(profile_path) = &args.dataset {
        let profile = Profile::load(profile_path)
            .with_context(|| format!("--dataset: {}", profile_path.display()))?;
        let exp: Experiment<f64> = Experiment::from_profile(&profile)?;
        let (_, test) = exp.split_for_run(args.split_seed, 0)?;
        Some(test)
    } else {
        None
    };

    let data_path = args.data.as_deref();
    let labelled = match (labelled, data_path, args.label_column) {
        (Some(d), _, _) => Some(d),
        (None, Some(path), Some(label_column)) => {
            let format = CsvFormat {
                delimiter: Delimiter::parse(&args.delimiter).context("--delimiter")?,
                header: args.header,
            };
            let minority = args.minority_value.as_deref().unwrap_or_default();
            Some(
                load_csv(path, format, label_column, minority)
                    .with_context(|| format!("--data: {}", path.display()))?,
            )
        }
        _ => None,
    };

    if let Some(data) = labelled {
        check_width(&tree, data.attribute_count())?;
        let outputs = tree.eval_columns(data.columns(), data.len())?;
        if !args.quiet {
            for &y in &outputs {
                println!("{}", classify_output(y).name());
            }
        }
        let (m, c) = eval::metrics(&tree, &data)?;
        println!("tp={} fn={} tn={} fp={}", c.tp, c.fn_, c.tn, c.fp);
        println!("tp_rate,tn_rate,accuracy");
        println!("{},{},{}", m.tp_rate, m.tn_rate, m.accuracy);
        println!("rounded: {}", metrics_row(&m));
        return Ok(());
    }

    let path = data_path.context("--data or --dataset is required")?;
    let format = CsvFormat {
        delimiter: Delimiter::parse(&args.delimiter).context("--delimiter")?,
        header: args.header,
    };
    let rows: Vec<Vec<f64>> =
        load_features(path, format).with_context(|| format!("--data: {}", path.display()))?;
    if let Some(first) = rows.first() {
        check_width(&tree, first.len())?;
    }
    for row in &rows {
        println!("{}", classify_output(tree.eval(row)?).name());
    }
    Ok(())
}
