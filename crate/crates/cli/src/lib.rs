//! The `qmix` pipeline: `generate` optimises QAOA parameters into datasets,
//! `pca` and `tsne` analyse them into tables and scatter plots, and `report`
//! collates the tables into markdown.

pub mod args;
pub mod error;
pub mod generate;
pub mod layout;
pub mod pca;
pub mod report;
pub mod svg;
pub mod tsne;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate(args) => generate::run(&cli.out, args).map(drop),
        Command::Pca(args) => pca::run(&cli.out, args).map(drop),
        Command::Tsne(args) => tsne::run(&cli.out, args).map(drop),
        Command::Report(args) => report::run(&cli.out, args).map(drop),
    }
}
