use std::path::PathBuf;

use adaudit_annotate_server::{serve, ServeOptions};
use clap::Parser;

/// Serve annotation sessions over HTTP.
#[derive(Parser)]
#[command(name = "annotate-server", version)]
struct Args {
    /// Session store directory.
    #[arg(long, default_value = "runs/annotations")]
    store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Static UI bundle to serve at `/`.
    #[arg(long)]
    ui: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    serve(ServeOptions {
        store_root: args.store,
        bind: args.bind,
        ui_dir: args.ui,
    })
    .await
}
