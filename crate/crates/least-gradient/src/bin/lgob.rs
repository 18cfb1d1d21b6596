use least_gradient::cli::{self, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
usage: lgob <command> <spec.json> [flags]

commands:
  solve   solve the problem spec; writes u.csv, levels.lgobv,
          holder.tsv and report.json into the output directory
  oracle  cross-check a tiny instance against full enumeration;
          writes oracle_report.json
  foam    run the foamy construction; writes stage.json, raster.pgm
          and foam_report.json

flags:
  --levels <m>        override the ladder with m uniform levels
  --stencil <4|8|16>  override the stencil order
  --out <dir>         override the output directory
  --seed <n>          override the seed

environment:
  LG_THREADS          cap the level-solve worker count (the artifacts
                      are byte-identical for any value)

exit codes: 0 ok, 1 internal error, 2 nesting violation,
3 spec error, 4 foam construction infeasible";

fn parse_flags(args: &[String]) -> Result<Overrides, String> {
    let mut ov = Overrides::default();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let mut grab =
            |name: &str| it.next().cloned().ok_or_else(|| format!("{name} needs a value"));
        match flag.as_str() {
            "--levels" => {
                ov.levels =
                    Some(grab("--levels")?.parse().map_err(|e| format!("--levels: {e}"))?)
            }
            "--stencil" => {
                ov.stencil =
                    Some(grab("--stencil")?.parse().map_err(|e| format!("--stencil: {e}"))?)
            }
            "--out" => ov.out = Some(PathBuf::from(grab("--out")?)),
            "--seed" => {
                ov.seed = Some(grab("--seed")?.parse().map_err(|e| format!("--seed: {e}"))?)
            }
            other => return Err(format!("unknown flag {other}")),
        }
    }
    Ok(ov)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("{USAGE}");
        return ExitCode::from(cli::EXIT_SPEC as u8);
    }
    let command = args[0].as_str();
    let spec = PathBuf::from(&args[1]);
    let ov = match parse_flags(&args[2..]) {
        Ok(ov) => ov,
        Err(m) => {
            eprintln!("{m}");
            eprintln!("{USAGE}");
            return ExitCode::from(cli::EXIT_SPEC as u8);
        }
    };

    let result = match command {
        "solve" => cli::run_solve(&spec, &ov).map(|out| {
            eprintln!("artifacts in {}", out.display());
        }),
        "oracle" => cli::run_oracle(&spec, &ov).and_then(|matched| {
            if matched {
                eprintln!("oracle comparison: match");
                Ok(())
            } else {
                eprintln!("oracle comparison: MISMATCH (see oracle_report.json)");
                Err(cli::CliError::Internal("oracle mismatch".into()))
            }
        }),
        "foam" => cli::run_foam(&spec, &ov).map(|out| {
            eprintln!("artifacts in {}", out.display());
        }),
        other => {
            eprintln!("unknown command {other}");
            eprintln!("{USAGE}");
            return ExitCode::from(cli::EXIT_SPEC as u8);
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
