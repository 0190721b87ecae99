//! Writes the small reference families under `families/`.

use std::path::Path;

use rank1_oe::classes::rotation::rotation_params;
use rank1_oe::io::ParamsFile;
use rank1_oe::params::{skip_steps, ParamSeq};

fn main() -> rank1_oe::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../families");
    std::fs::create_dir_all(&dir).expect("families directory");
    let families = [
        ("odometer", ParamSeq::odometer(&[4; 5])),
        ("chacon", ParamSeq::chacon(5)),
        ("chacon-skip", skip_steps(&ParamSeq::chacon(6), &[0, 2, 4])?.seq),
        ("rotation", rotation_params(&[2, 3, 7, 9, 11], 1)?.seq),
    ];
    for (name, seq) in families {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, ParamsFile::from_seq(&seq).to_json()).expect("write family");
        println!("{}", path.display());
    }
    Ok(())
}
