use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use acoustic_cluster::signal::{encode_wav, write_manifest, WavEncoding};
use acoustic_cluster::synth::{default_schedule, default_vehicle_bank, gen_vehicle_audio, BlockSpec};
use acoustic_cluster_cli::{emit_plots, exit, run_pipeline, Input, KChoice, Method, PipelineConfig, PipelineError};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "acluster", version, about = "Cluster roadside audio windows by vehicle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Synthetic {
    Vehicles,
    Blocks,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline. Flags override values from --config.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Manifest CSV of clips (path,label,start_s,duration_s).
        #[arg(long, conflicts_with = "synthetic")]
        manifest: Option<PathBuf>,
        /// Use generated data instead of recorded clips.
        #[arg(long, value_enum)]
        synthetic: Option<Synthetic>,
        /// Fourier coefficients kept per window.
        #[arg(long)]
        m: Option<usize>,
        /// Neighbor count of the similarity graph.
        #[arg(long)]
        knn: Option<usize>,
        /// Cluster count or "auto".
        #[arg(long)]
        k: Option<KChoice>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Seed for both k-means and INCRES.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_plots: bool,
    },
    /// Write the default synthetic vehicle recording and its manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 48_000)]
        sample_rate: u32,
    },
    /// Render plots from an existing run directory.
    Plot {
        #[arg(long)]
        run: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Run {
            config,
            manifest,
            synthetic,
            m,
            knn,
            k,
            method,
            seed,
            out,
            no_plots,
        } => {
            let mut cfg = match &config {
                Some(path) => PipelineConfig::load(path)?,
                None => PipelineConfig::default(),
            };
            if let Some(manifest) = manifest {
                cfg.input = Input::Manifest { manifest };
            }
            match synthetic {
                Some(Synthetic::Vehicles) if !matches!(cfg.input, Input::Vehicles { .. }) => {
                    cfg.input = Input::default();
                }
                Some(Synthetic::Blocks) if !matches!(cfg.input, Input::Blocks { .. }) => {
                    cfg.input = Input::Blocks {
                        spec: BlockSpec::default(),
                    };
                }
                _ => {}
            }
            if let Some(m) = m {
                cfg.m = m;
            }
            if let Some(knn) = knn {
                cfg.knn = knn;
            }
            if let Some(k) = k {
                cfg.k = k;
            }
            if let Some(method) = method {
                cfg.method = method;
            }
            if let Some(seed) = seed {
                cfg.set_seed(seed);
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            if no_plots {
                cfg.plots = false;
            }
            let report = run_pipeline(&cfg)?;
            println!("n = {}, k = {} (auto: {:?})", report.n, report.k, report.k_auto);
            for m in &report.methods {
                println!("{}: purity {:.4}", m.method, m.purity);
                print!("{}", m.confusion.to_markdown());
            }
            println!("artifacts in {}", cfg.out.display());
            Ok(())
        }
        Command::Synth { out, sample_rate } => {
            let cfg = acoustic_cluster::signal::WindowingConfig::default();
            let audio = gen_vehicle_audio(
                &default_vehicle_bank(),
                &default_schedule(),
                sample_rate,
                cfg.window_len,
                "vehicles.wav",
            )
            .map_err(|e| PipelineError::Config(e.to_string()))?;
            fs::create_dir_all(&out).map_err(|source| PipelineError::Io {
                path: out.clone(),
                source,
            })?;
            let wav = out.join("vehicles.wav");
            fs::write(&wav, encode_wav(&audio.signal, WavEncoding::Pcm16))
                .map_err(|source| PipelineError::Io { path: wav, source })?;
            let path = out.join("manifest.csv");
            let file = fs::File::create(&path).map_err(|source| PipelineError::Io {
                path: path.clone(),
                source,
            })?;
            write_manifest(&audio.manifest, file).map_err(|e| PipelineError::Io {
                path,
                source: std::io::Error::other(e),
            })?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Plot { run } => {
            for f in emit_plots(&run)? {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
