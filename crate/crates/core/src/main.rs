use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use voropanel::config::{parse_delimiter, ConfigFile};
use voropanel::error::{Error, Result};
use voropanel::report;
use voropanel::synth::{synth_generate, SynthSpec};
use voropanel::{pipeline, ScenarioId};

#[derive(Debug, Parser)]
#[command(name = "voropanel", version, about = "Weighted Voronoi clustering of entity panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write every report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured scenario (I, II, III or custom).
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        no_filter: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses one per core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Generate a synthetic panel.
    Synth {
        /// Synthetic spec (TOML); defaults to the built-in nine-variable profile.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Entity count for the built-in profile.
        #[arg(long, default_value_t = 62)]
        entities: usize,
        #[arg(long, default_value = ",")]
        delimiter: String,
    },
    /// Descriptive statistics of the averaged variables.
    Stats {
        #[arg(long)]
        config: PathBuf,
        /// Also write stats.csv and stats.md here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-tabulate two saved assignment files.
    Crosstab {
        /// Assignment whose cells become rows.
        rows: PathBuf,
        /// Assignment whose cells become columns.
        cols: PathBuf,
        #[arg(long, default_value = "")]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = ",")]
        delimiter: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write(path: &PathBuf, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            scenario,
            no_filter,
            out,
            workers,
        } => {
            let mut file = ConfigFile::load(&config)?;
            if let Some(s) = scenario {
                let id: ScenarioId = s.parse()?;
                if file.scenario.id.parse::<ScenarioId>().ok() != Some(id) && id != ScenarioId::Custom {
                    // preset weights come from the new id
                    file.scenario.innovation_weights.clear();
                    file.scenario.performance_weights.clear();
                }
                file.scenario.id = id.to_string();
            }
            if no_filter {
                file.filter.enabled = false;
            }
            if let Some(dir) = out {
                file.output.dir = dir;
            }
            if let Some(n) = workers {
                file.output.workers = n;
            }
            let resolved = file.resolve()?;
            let manifest = pipeline::run(&resolved)?;
            println!(
                "scenario {}: {} entities, {} removed, {} ties; reports in {}",
                manifest.scenario,
                manifest.entities.after_filter,
                manifest.entities.removed,
                manifest.tie_total,
                resolved.out_dir.display()
            );
            Ok(())
        }
        Command::Synth {
            spec,
            out,
            seed,
            entities,
            delimiter,
        } => {
            let mut spec = match spec {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                    toml::from_str::<SynthSpec>(&text).map_err(|e| Error::Config(e.to_string()))?
                }
                None => SynthSpec::default_profile(entities, 1),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let data = synth_generate(&spec)?;
            let mut buf = Vec::new();
            data.write_delimited(&mut buf, parse_delimiter(&delimiter)?)?;
            write(&out, &String::from_utf8(buf).expect("utf-8 output"))?;
            println!(
                "wrote {} entities x {} years to {}",
                data.entities().len(),
                data.years().len(),
                out.display()
            );
            Ok(())
        }
        Command::Stats { config, out } => {
            let resolved = ConfigFile::load(&config)?.resolve()?;
            let data = pipeline::load_panel(&resolved)?;
            let records = pipeline::average(&resolved, &data)?;
            let table = report::render_stats_table(&pipeline::summarize(&resolved, &records)?)?;
            print!("{}", table.to_markdown());
            if let Some(dir) = out {
                write(&dir.join("stats.csv"), &table.to_delimited(resolved.delimiter)?)?;
                write(&dir.join("stats.md"), &table.to_markdown())?;
            }
            Ok(())
        }
        Command::Crosstab {
            rows,
            cols,
            name,
            out,
            delimiter,
        } => {
            let delim = parse_delimiter(&delimiter)?;
            let table = pipeline::crosstab_files(&rows, &cols, delim, &name)?;
            print!("{}", table.to_markdown());
            if let Some(dir) = out {
                write(&dir.join("crosstab.csv"), &table.to_delimited(delim)?)?;
                write(&dir.join("crosstab.md"), &table.to_markdown())?;
            }
            Ok(())
        }
    }
}
