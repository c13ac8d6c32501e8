//! Generates the demo fixture set under `fixtures/demo/`: a four-room
//! apartment scan, two episodes, and a depth sidecar for the raw stove
//! record. Run from the workspace root:
//!
//! ```sh
//! cargo run -p tina --example make_demo
//! ```

use std::fs;
use std::path::PathBuf;

use tina::navgraph::EnvBuilder;
use tina::perception::{BBox, DepthMap, SegMask};

fn main() {
    let root = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixtures/demo".to_string());
    let root = PathBuf::from(root);
    let env_dir = root.join("envs");
    fs::create_dir_all(env_dir.join("depth")).expect("create fixture directories");

    let mut b = EnvBuilder::new("apartment");
    b.viewpoint("hall", [0.0, 0.0, 0.0]);
    b.viewpoint("kitchen", [4.0, 0.0, 0.0]);
    b.viewpoint("bedroom", [0.0, 4.0, 0.0]);
    b.viewpoint("bathroom", [-4.0, 0.0, 0.0]);
    b.edge("hall", "kitchen");
    b.edge("hall", "bedroom");
    b.edge("hall", "bathroom");

    b.caption_all("hall", "a plain hallway wall");
    // east toward the kitchen: the caption gives it away
    b.cell("hall", 90, 0)
        .caption("a kitchen doorway")
        .object_at("stove", 4.5);
    // north and west look identical; only question answering can tell them apart
    b.cell("hall", 0, 0)
        .caption("a wooden door")
        .object_at("bed", 4.0);
    b.cell("hall", 270, 0).caption("a wooden door");

    b.caption_all("kitchen", "kitchen cabinets");
    // the stove as a raw detector record: bbox + mask + depth sidecar
    let depth = DepthMap::constant(8, 8, 1.2);
    let mask = SegMask::from_pixels(8, 8, &[(2, 2), (3, 2), (2, 3), (3, 3), (4, 3)]);
    b.depth_map("depth/stove.pgm", depth);
    b.cell("kitchen", 90, 0)
        .caption("a stove beside a counter")
        .object_raw(
            "stove",
            BBox::new(1, 1, 6, 6).unwrap(),
            Some(mask),
            "depth/stove.pgm",
        );

    b.caption_all("bedroom", "a calm bedroom");
    b.cell("bedroom", 0, 0)
        .caption("a bed with pillows")
        .object_at("bed", 1.0);

    b.caption_all("bathroom", "white tiles");
    b.cell("bathroom", 270, 0)
        .caption("a sink and mirror")
        .object_at("sink", 1.1);

    b.build().expect("demo environment must validate");

    let doc = b.doc();
    fs::write(
        env_dir.join("apartment.json"),
        serde_json::to_string_pretty(&doc).unwrap(),
    )
    .expect("write environment");
    for (name, map) in b.depth_maps() {
        fs::write(env_dir.join(name), map.to_pgm()).expect("write depth sidecar");
    }

    let episodes = serde_json::json!([
        {
            "path_id": 1,
            "scan": "apartment",
            "heading": 0.0,
            "instructions": ["Go to the kitchen and stand by the stove."],
            "path": ["hall", "kitchen"]
        },
        {
            "path_id": 2,
            "scan": "apartment",
            "heading": 0.0,
            "instructions": ["Find the bed."],
            "path": ["hall", "bedroom"]
        }
    ]);
    fs::write(
        root.join("episodes.json"),
        serde_json::to_string_pretty(&episodes).unwrap(),
    )
    .expect("write episodes");

    println!("demo fixtures written to {}", root.display());
}
