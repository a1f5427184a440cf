//! Regenerate the bundled sample corpus.
//!
//! ```text
//! cargo run -p entigraph-core --example make_sample -- data/sample
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use entigraph::synth::{drift_corpus, write_reddit_jsonl, DriftParams};

fn main() -> entigraph::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/sample".into()));
    fs::create_dir_all(&dir)?;
    let params = DriftParams { threads: 200, bot_rate: 0.04, seed: 2021, ..DriftParams::default() };
    let sample = drift_corpus(&params, "sample");

    write_reddit_jsonl(&sample.corpus, BufWriter::new(File::create(dir.join("dump.jsonl"))?))?;

    let mut gaz = BufWriter::new(File::create(dir.join("gazetteer.tsv"))?);
    writeln!(gaz, "# surface\tentity\tprior")?;
    for line in sample.gazetteer_lines() {
        writeln!(gaz, "{line}")?;
    }
    // Ambiguous and low-prior surfaces exercise candidate selection.
    writeln!(gaz, "washington\tWhite_House\t0.6")?;
    writeln!(gaz, "washington\tGeorge_Washington\t0.3")?;
    writeln!(gaz, "states\tUnited_States\t0.2")?;
    gaz.flush()?;

    sample.embeddings.write(BufWriter::new(File::create(dir.join("embeddings.txt"))?))?;
    fs::write(dir.join("botlist.txt"), "# known bot accounts\nAutoModerator\n")?;
    println!("wrote {} threads to {}", sample.corpus.len(), dir.display());
    Ok(())
}
